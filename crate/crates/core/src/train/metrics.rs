use crate::data::Label;
use crate::error::{Error, Result};

/// Probabilities are clipped to `[EPS, 1 − EPS]` before taking logs.
pub const LOG_LOSS_CLIP: f64 = 1e-15;

/// Logistic function, stable over the whole `f64` range.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic loss `ln(1 + exp(−y φ))` for a ±1 label.
pub fn instance_loss(phi: f64, y: Label) -> f64 {
    softplus(-y.sign() * phi)
}

/// `∂ instance_loss / ∂φ = −y σ(−y φ)`.
pub fn loss_upstream(phi: f64, y: Label) -> f64 {
    let s = y.sign();
    -s * sigmoid(-s * phi)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::Data("metric over an empty set".into()));
    }
    if a != b {
        return Err(Error::Dimension(format!("{a} predictions for {b} labels")));
    }
    Ok(())
}

/// Mean binary cross-entropy of click probabilities.
pub fn log_loss_metric(probs: &[f64], labels: &[Label]) -> Result<f64> {
    check_lengths(probs.len(), labels.len())?;
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        if p.is_nan() {
            return Err(Error::Numeric("NaN probability".into()));
        }
        let p = p.clamp(LOG_LOSS_CLIP, 1.0 - LOG_LOSS_CLIP);
        total -= if y.is_positive() { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total / probs.len() as f64)
}

/// Area under the ROC curve from average ranks; ties count one half.
///
/// Works in doubled integer ranks so the result equals
/// `(2·wins + ties) / (2·P·N)` exactly.
pub fn auc_metric(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let positives = labels.iter().filter(|y| y.is_positive()).count() as u128;
    let negatives = labels.len() as u128 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined(
            "AUC is undefined when only one class is present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end share the doubled average start+1+end.
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i].is_positive()).count() as u128;
        doubled_rank_sum += pos_in_group * (start as u128 + 1 + end as u128);
        start = end;
    }
    let doubled_u = doubled_rank_sum - positives * (positives + 1);
    Ok(doubled_u as f64 / (2 * positives * negatives) as f64)
}
