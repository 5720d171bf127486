use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{load_data, LoadedData, RunConfig};
use super::manifest::Manifest;
use super::{
    AnalyzeArgs, Command, EvaluateArgs, Overrides, PredictArgs, PreprocessArgs, SweepArgs, SynthArgs, TrainArgs,
};
use crate::analysis::rank_field_pairs;
use crate::data::{
    build_vocabulary, format_libffm_line, raw, read_libffm, split_indices, Label, SplitRatios, TableSchema, Vocabulary,
};
use crate::deep::AblationFlags;
use crate::error::{Error, Result};
use crate::io::{load_model, meta_path, save_model, write_json};
use crate::model::{Architecture, Model};
use crate::synthetic::{PlantedConfig, PlantedTeacher};
use crate::train::{
    auc_metric, evaluate, fit_with, log_loss_metric, predict_probabilities, write_predictions, Evaluation, TrainHistory,
};

pub(super) fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Preprocess(a) => preprocess(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

const SPLIT_FILES: [&str; 3] = ["train.ffm", "validation.ffm", "test.ffm"];
pub const VOCABULARY_FILE: &str = "vocabulary.json";

fn preprocess(a: PreprocessArgs) -> Result<i32> {
    let ratios = SplitRatios::new(a.ratios[0], a.ratios[1], a.ratios[2])?;
    let rule = a.split_rule.into();
    let schema = TableSchema::load(&a.schema)?;
    let format = schema.raw_format();
    let header = schema.header(&a.input)?;

    let total = raw::for_each_row(&a.input, format, |_, _| Ok(()))?;
    if total == 0 {
        return Err(Error::Data(format!("{} has no data rows", a.input.display())));
    }
    // 0 train, 1 validation, 2 test
    let mut split_of = vec![0u8; total];
    let parts = split_indices(total, ratios, rule, a.seed)?;
    for (s, part) in parts.iter().enumerate() {
        for &i in part {
            split_of[i] = s as u8;
        }
    }

    let mut rows = raw::rows(&a.input, format)?;
    let train_rows = rows
        .by_ref()
        .enumerate()
        .filter(|(i, _)| split_of[*i] == 0)
        .map(|(_, r)| r);
    let vocab = build_vocabulary(&header, train_rows, &schema, a.min_frequency);
    rows.finish()?;
    let vocab = vocab?;

    create_dir(&a.out)?;
    let paths: Vec<PathBuf> = SPLIT_FILES.iter().map(|f| a.out.join(f)).collect();
    let mut writers = paths
        .iter()
        .map(|p| fs::File::create(p).map(BufWriter::new).map_err(|e| Error::io(p, e)))
        .collect::<Result<Vec<_>>>()?;
    raw::for_each_row(&a.input, format, |i, cells| {
        let inst = vocab.encode_instance(cells)?;
        let s = split_of[i] as usize;
        writeln!(writers[s], "{}", format_libffm_line(&inst)).map_err(|e| Error::io(&paths[s], e))
    })?;
    for (w, p) in writers.iter_mut().zip(&paths) {
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    let vocab_path = a.out.join(VOCABULARY_FILE);
    vocab.save(&vocab_path)?;

    let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
    println!("fields: {}", vocab.n_fields());
    println!("features: {}", vocab.n_features());
    println!(
        "split sizes (train, validation, test): {}, {}, {}",
        sizes[0], sizes[1], sizes[2]
    );

    let mut manifest = Manifest::new(
        "preprocess",
        &json!({
            "input": a.input,
            "schema": a.schema,
            "min_frequency": a.min_frequency,
            "ratios": a.ratios,
            "split_rule": format!("{:?}", rule),
            "seed": a.seed,
        }),
    );
    manifest.input(&a.input)?;
    manifest.input(&a.schema)?;
    manifest.output(&vocab_path)?;
    for p in &paths {
        manifest.output(p)?;
    }
    manifest.write(&a.out)?;
    Ok(0)
}

fn apply_overrides(o: &Overrides, cfg: &mut RunConfig) {
    if let Some(seed) = o.seed {
        cfg.train.seed = seed;
    }
    if let Some(out) = &o.out {
        cfg.out = Some(out.clone());
    }
    if let Some(arch) = o.model {
        cfg.model.architecture = arch;
    }
    if let Some(k) = o.k {
        cfg.model.k = k;
    }
    if let Some(eta) = o.eta {
        cfg.train.eta = eta;
    }
    if let Some(b) = o.batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(e) = o.max_epochs {
        cfg.train.max_epochs = e;
    }
    if let Some(a) = o.ablation {
        cfg.model.flags = match a {
            1 => AblationFlags::ablation1(),
            2 => AblationFlags::ablation2(),
            3 => AblationFlags::ablation3(),
            4 => AblationFlags::ablation4(),
            _ => AblationFlags::default(),
        };
    }
    if o.asymmetric {
        cfg.model.symmetric = false;
    }
}

fn require_out(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| Error::Config("no output directory: set `out` in the config or pass --out".into()))
}

struct RunOutcome {
    model: Model,
    history: TrainHistory,
    validation: Evaluation,
    test: Option<Evaluation>,
}

fn train_once(cfg: &RunConfig, data: &LoadedData, label: &str) -> Result<RunOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let model = cfg.model.build(data.m, data.n, &mut rng)?;
    let (model, history) = fit_with(model, &data.train, &data.validation, &cfg.train, |r| {
        let auc = r.val_auc.map_or("undefined".to_string(), |a| format!("{a:.6}"));
        eprintln!(
            "{label}epoch {:>3}  train_loss {:.6}  val_logloss {:.6}  val_auc {auc}",
            r.epoch, r.train_loss, r.val_logloss
        );
    })?;
    let validation = evaluate(&model, &data.validation)?;
    let test = data.test.as_ref().map(|t| evaluate(&model, t)).transpose()?;
    Ok(RunOutcome {
        model,
        history,
        validation,
        test,
    })
}

#[derive(Serialize)]
struct ModelMeta<'a> {
    architecture: Architecture,
    n: usize,
    m: usize,
    k: usize,
    n_params: usize,
    field_names: &'a [String],
    best_epoch: Option<usize>,
    validation: Evaluation,
    test: Option<Evaluation>,
    config: &'a RunConfig,
}

fn format_eval(name: &str, e: &Evaluation) -> String {
    let auc = e.auc.map_or("undefined".to_string(), |a| format!("{a:.6}"));
    format!("{name}: auc {auc}  log_loss {:.6}", e.log_loss)
}

fn train(a: TrainArgs) -> Result<i32> {
    let mut cfg = RunConfig::load(&a.config)?;
    apply_overrides(&a.overrides, &mut cfg);
    cfg.validate()?;
    let out = require_out(&cfg)?;
    let data = load_data(&cfg.data)?;
    let run = train_once(&cfg, &data, "")?;
    create_dir(&out)?;
    let model_path = out.join("model.bin");
    save_model(&model_path, &run.model)?;
    let meta = ModelMeta {
        architecture: run.model.architecture(),
        n: data.n,
        m: data.m,
        k: run.model.dim(),
        n_params: run.model.n_params(),
        field_names: &data.field_names,
        best_epoch: run.history.best_epoch,
        validation: run.validation,
        test: run.test,
        config: &cfg,
    };
    let meta_file = meta_path(&model_path);
    write_json(&meta_file, &meta)?;
    let history_path = out.join("history.csv");
    run.history.write_csv(&history_path)?;

    println!("model: {} ({} parameters)", model_path.display(), run.model.n_params());
    println!(
        "best epoch: {}",
        run.history.best_epoch.map_or("none".into(), |e| e.to_string())
    );
    println!("{}", format_eval("validation", &run.validation));
    if let Some(t) = &run.test {
        println!("{}", format_eval("test", t));
    }

    let mut manifest = Manifest::new("train", &cfg);
    manifest.input(&a.config)?;
    for p in data_files(&cfg) {
        manifest.input(&p)?;
    }
    manifest.output(&model_path)?;
    manifest.output(&meta_file)?;
    manifest.output(&history_path)?;
    manifest.write(&out)?;
    Ok(0)
}

fn data_files(cfg: &RunConfig) -> Vec<PathBuf> {
    let d = &cfg.data;
    let mut v = vec![d.train.clone(), d.validation.clone()];
    v.extend(d.test.clone());
    v.extend(d.vocabulary.clone());
    v
}

fn load_for_model(model: &Model, data: &Path) -> Result<crate::data::Dataset> {
    read_libffm(data, model.n_fields(), model.n_features())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<i32> {
    let model = load_model(&a.model)?;
    let ds = load_for_model(&model, &a.data)?;
    let probs = predict_probabilities(&model, &ds)?;
    let labels: Vec<Label> = ds.iter().map(|i| i.label).collect();
    if let Some(p) = &a.predictions {
        write_predictions(p, &probs, &ds)?;
    }
    let log_loss = log_loss_metric(&probs, &labels)?;
    println!("instances: {}", ds.len());
    println!("log_loss: {log_loss:.9}");
    match auc_metric(&probs, &labels) {
        Ok(auc) => {
            println!("auc: {auc:.9}");
            Ok(0)
        }
        Err(Error::Undefined(msg)) => {
            println!("auc: undefined");
            eprintln!("warning: {msg}");
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

fn predict(a: PredictArgs) -> Result<i32> {
    let model = load_model(&a.model)?;
    let ds = load_for_model(&model, &a.data)?;
    let probs = predict_probabilities(&model, &ds)?;
    write_predictions(&a.out, &probs, &ds)?;
    println!("wrote {} predictions to {}", probs.len(), a.out.display());
    Ok(0)
}

fn analyze(a: AnalyzeArgs) -> Result<i32> {
    let model = load_model(&a.model)?;
    let names: Vec<String> = match &a.vocab {
        Some(v) => Vocabulary::load(v)?
            .field_names()
            .into_iter()
            .map(String::from)
            .collect(),
        None => (0..model.n_fields()).map(|f| format!("field_{f}")).collect(),
    };
    let report = rank_field_pairs(&model, &names, a.top)?;
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        create_dir(out)?;
        let csv = out.join("pair_strengths.csv");
        let txt = out.join("pair_strengths.txt");
        report.write_csv(&csv)?;
        report.write_text(&txt)?;
        let mut manifest = Manifest::new("analyze", &json!({ "model": a.model, "vocab": a.vocab, "top": a.top }));
        manifest.input(&a.model)?;
        if let Some(v) = &a.vocab {
            manifest.input(v)?;
        }
        manifest.output(&csv)?;
        manifest.output(&txt)?;
        manifest.write(out)?;
    }
    Ok(0)
}

pub const SWEEP_HEADER: &str = "k,val_auc,val_logloss,test_auc,test_logloss,param_count,status";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.train.seed = seed;
    }
    if let Some(out) = &a.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    if a.ks.is_empty() || a.ks.contains(&0) {
        return Err(Error::Config("--k needs positive dimensions".into()));
    }
    let out = require_out(&cfg)?;
    let data = load_data(&cfg.data)?;
    create_dir(&out)?;

    let run_k = |k: usize| -> Result<String> {
        let mut c = cfg.clone();
        c.model.k = k;
        let count = c.model.param_count(data.m as u64, data.n as u64);
        let run = train_once(&c, &data, &format!("k={k} "))?;
        if run.model.n_params() as u64 != count {
            return Err(Error::Numeric(format!(
                "stored parameters ({}) disagree with the formula ({count})",
                run.model.n_params()
            )));
        }
        let dir = out.join(format!("k{k}"));
        create_dir(&dir)?;
        save_model(&dir.join("model.bin"), &run.model)?;
        run.history.write_csv(&dir.join("history.csv"))?;
        Ok(format!(
            "{k},{},{},{},{},{count},ok",
            opt(run.validation.auc),
            run.validation.log_loss,
            opt(run.test.and_then(|t| t.auc)),
            opt(run.test.map(|t| t.log_loss)),
        ))
    };
    let results: Vec<Result<String>> = if a.parallel {
        a.ks.par_iter().map(|&k| run_k(k)).collect()
    } else {
        a.ks.iter().map(|&k| run_k(k)).collect()
    };
    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    for (&k, r) in a.ks.iter().zip(results) {
        match r {
            Ok(row) => table.push_str(&row),
            Err(e) if a.continue_on_failure => {
                eprintln!("k={k}: {e}");
                let count = {
                    let mut s = cfg.model.clone();
                    s.k = k;
                    s.param_count(data.m as u64, data.n as u64)
                };
                table.push_str(&format!(
                    "{k},,,,,{count},\"failed: {}\"",
                    e.to_string().replace('"', "'")
                ));
            }
            Err(e) => return Err(e),
        }
        table.push('\n');
    }
    let csv = out.join("sweep.csv");
    fs::write(&csv, &table).map_err(|e| Error::io(&csv, e))?;
    print!("{table}");

    let mut manifest = Manifest::new("sweep", &json!({ "config": cfg, "k": a.ks }));
    manifest.input(&a.config)?;
    for p in data_files(&cfg) {
        manifest.input(&p)?;
    }
    manifest.output(&csv)?;
    manifest.write(&out)?;
    Ok(0)
}

fn synth(a: SynthArgs) -> Result<i32> {
    let planted = PlantedConfig {
        n_fields: a.fields,
        values_per_field: a.values,
        ..PlantedConfig::default()
    };
    let teacher = PlantedTeacher::new(planted.clone(), a.seed)?;
    let ds = teacher.sample(a.rows, a.seed.wrapping_add(1))?;
    create_dir(&a.out)?;
    let raw_path = a.out.join("raw.csv");
    let schema_path = a.out.join("schema.toml");
    teacher.write_raw_csv(&raw_path, &ds)?;
    fs::write(&schema_path, teacher.schema_toml()).map_err(|e| Error::io(&schema_path, e))?;
    let (pos, neg) = ds.class_counts();
    println!("rows: {} ({pos} clicks, {neg} non-clicks)", ds.len());
    println!("fields: {}  values per field: {}", a.fields, a.values);
    let mut manifest = Manifest::new("synth", &json!({ "planted": planted, "rows": a.rows, "seed": a.seed }));
    manifest.output(&raw_path)?;
    manifest.output(&schema_path)?;
    manifest.write(&a.out)?;
    Ok(0)
}
