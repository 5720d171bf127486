mod common;

use common::{pairwise_auc, random_dataset, reference_early_stopping};
use fefm::data::{Dataset, Instance, Label};
use fefm::shallow::ParamGroup;
use fefm::train::{
    auc_metric, batch_step, evaluate, fit, instance_loss, log_loss_metric, simulate_early_stopping, AdaGrad,
    TrainConfig,
};
use fefm::{Architecture, Error, Model, ModelSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn values_of(model: &Model, group: ParamGroup) -> Vec<f64> {
    model
        .blocks()
        .iter()
        .filter(|b| b.group == group)
        .flat_map(|b| b.values.to_vec())
        .collect()
}

#[test]
fn pair_and_embedding_decay_stay_in_their_groups() {
    let spec = ModelSpec {
        init_std: 0.1,
        ..ModelSpec::new(Architecture::Fefm, 3)
    };
    let start = spec.build(8, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let batch = [
        Instance::new(Label::Positive, vec![0, 5]),
        Instance::new(Label::Negative, vec![1, 6]),
    ];
    let refs: Vec<&Instance> = batch.iter().collect();
    let run = |lambda2: f64, lambda3: f64| {
        let mut model = start.clone();
        let cfg = TrainConfig {
            eta: 0.1,
            lambda2,
            lambda3,
            ..TrainConfig::default()
        };
        let mut opt = cfg.optimizer(&model).unwrap();
        batch_step(&mut model, &refs, &cfg, &mut opt, 0).unwrap();
        model
    };
    let base = run(0.0, 0.0);
    let pair_decay = run(0.0, 1.0);
    let emb_decay = run(1.0, 0.0);
    assert_eq!(
        values_of(&base, ParamGroup::Embedding),
        values_of(&pair_decay, ParamGroup::Embedding)
    );
    assert_ne!(
        values_of(&base, ParamGroup::FieldPair),
        values_of(&pair_decay, ParamGroup::FieldPair)
    );
    assert_eq!(
        values_of(&base, ParamGroup::FieldPair),
        values_of(&emb_decay, ParamGroup::FieldPair)
    );
    assert_ne!(
        values_of(&base, ParamGroup::Embedding),
        values_of(&emb_decay, ParamGroup::Embedding)
    );
    // Untouched embedding rows are left alone by the lazy decay.
    let (b, e) = (
        values_of(&base, ParamGroup::Embedding),
        values_of(&emb_decay, ParamGroup::Embedding),
    );
    assert_eq!(b[2 * 3..5 * 3], e[2 * 3..5 * 3]);
}

#[test]
fn adagrad_accumulators_grow_and_steps_shrink() {
    let spec = ModelSpec::new(Architecture::Lr, 1);
    let mut model = spec.build(2, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let cfg = TrainConfig {
        eta: 0.1,
        ..TrainConfig::default()
    };
    let mut opt: AdaGrad = cfg.optimizer(&model).unwrap();
    let inst = Instance::new(Label::Positive, vec![0]);
    let grad = model.gradient(&inst, -0.5).unwrap();
    let mut previous_acc = opt.accumulators().to_vec();
    let mut previous_step = f64::INFINITY;
    for _ in 0..20 {
        let before = model.blocks()[0].values[0];
        opt.step(&mut model, &grad, &cfg.regularization());
        let step = (model.blocks()[0].values[0] - before).abs();
        assert!(step < previous_step);
        previous_step = step;
        for (new, old) in opt.accumulators().iter().flatten().zip(previous_acc.iter().flatten()) {
            assert!(new >= old);
        }
        previous_acc = opt.accumulators().to_vec();
    }
}

fn planted(seed: u64) -> (Dataset, Dataset, usize, usize) {
    use fefm::synthetic::{PlantedConfig, PlantedTeacher};
    let cfg = PlantedConfig {
        n_fields: 4,
        values_per_field: 8,
        ..PlantedConfig::default()
    };
    let t = PlantedTeacher::new(cfg, seed).unwrap();
    (
        t.sample(2000, 1).unwrap(),
        t.sample(500, 2).unwrap(),
        t.n_features(),
        t.n_fields(),
    )
}

#[test]
fn returned_model_is_the_best_epoch() {
    let (train, val, m, n) = planted(4);
    for arch in [Architecture::Fm, Architecture::Fefm, Architecture::Deepfefm] {
        let spec = ModelSpec {
            init_std: 0.1,
            hidden: vec![8],
            ..ModelSpec::new(arch, 4)
        };
        let model = spec.build(m, n, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        // A large step overshoots, so the last epoch is usually not the best.
        let cfg = TrainConfig {
            eta: 2.0,
            batch_size: 64,
            max_epochs: 15,
            patience: 4,
            ..TrainConfig::default()
        };
        let (best, history) = fit(model, &train, &val, &cfg).unwrap();
        let min = history
            .records
            .iter()
            .map(|r| r.val_logloss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(evaluate(&best, &val).unwrap().log_loss, min, "{arch}");
        assert_eq!(history.best().unwrap().val_logloss, min);
    }
}

#[test]
fn batch_loss_is_the_mean() {
    let (train, _, m, n) = planted(5);
    let model = ModelSpec::new(Architecture::Fm, 2)
        .build(m, n, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    let batch: Vec<&Instance> = train.iter().take(50).collect();
    let expected = batch
        .iter()
        .map(|i| instance_loss(model.logit(i).unwrap(), i.label))
        .sum::<f64>()
        / 50.0;
    let cfg = TrainConfig::default();
    let mut opt = cfg.optimizer(&model).unwrap();
    let got = batch_step(&mut model.clone(), &batch, &cfg, &mut opt, 0).unwrap();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn constant_model_scores_ln2() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ds = random_dataset(&mut rng, 300, 3, 4);
    let model = Model::Shallow(fefm::shallow::ShallowParams::zeros(
        fefm::shallow::ModelKind::Fefm,
        12,
        3,
        2,
    ));
    let eval = evaluate(&model, &ds).unwrap();
    assert!((eval.log_loss - 2f64.ln()).abs() < 1e-12);
    assert_eq!(eval.auc, Some(0.5));
}

#[test]
fn single_class_auc_is_undefined() {
    let labels = vec![Label::Positive; 4];
    assert!(matches!(
        auc_metric(&[0.1, 0.2, 0.3, 0.4], &labels),
        Err(Error::Undefined(_))
    ));
}

proptest! {
    #[test]
    fn auc_equals_pairwise_count(
        data in prop::collection::vec((0u8..12, any::<bool>()), 2..200)
    ) {
        let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 * 0.25 - 1.0).collect();
        let labels: Vec<Label> = data.iter().map(|d| Label::from_bool(d.1)).collect();
        let positives = labels.iter().filter(|l| l.is_positive()).count();
        prop_assume!(positives > 0 && positives < labels.len());
        prop_assert_eq!(auc_metric(&scores, &labels).unwrap(), pairwise_auc(&scores, &labels));
    }

    #[test]
    fn log_loss_is_a_mean_of_terms(
        data in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..100)
    ) {
        let probs: Vec<f64> = data.iter().map(|d| d.0).collect();
        let labels: Vec<Label> = data.iter().map(|d| Label::from_bool(d.1)).collect();
        let direct = data
            .iter()
            .map(|&(p, y)| {
                let p = p.clamp(1e-15, 1.0 - 1e-15);
                -(if y { p } else { 1.0 - p }).ln()
            })
            .sum::<f64>()
            / data.len() as f64;
        let got = log_loss_metric(&probs, &labels).unwrap();
        prop_assert!((got - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn early_stopping_matches_reference(
        steps in prop::collection::vec(prop::sample::select(vec![-1e-3, -6e-6, -5e-6, -4e-6, 0.0, 1e-6, 1e-2]), 1..20),
        patience in 0usize..4,
        max_epochs in 1usize..25,
    ) {
        let mut x = 1.0;
        let losses: Vec<f64> = steps.iter().map(|s| { x += s; x }).collect();
        prop_assert_eq!(
            simulate_early_stopping(&losses, 5e-6, patience, max_epochs),
            reference_early_stopping(&losses, 5e-6, patience, max_epochs)
        );
    }
}
