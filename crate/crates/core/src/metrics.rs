//! Classification scores, confusion metrics, partition agreement, and estimator summaries.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::mixture::{Component, MixtureParams, RareEventParams, SetSize};
use crate::normal;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::Result;

/// Scores are clamped into `[LOG_LOSS_CLAMP, 1 − LOG_LOSS_CLAMP]` before taking logs.
pub const LOG_LOSS_CLAMP: f64 = 1e-12;

/// Posterior probability that a nominated observation came from `positive`.
pub fn posterior_component(y: f64, psi: &MixtureParams, positive: Component) -> f64 {
    let a = psi.pi.ln() + psi.comp1.log_pdf(y);
    let b = (1.0 - psi.pi).ln() + psi.comp2.log_pdf(y);
    let (num, other) = match positive {
        Component::First => (a, b),
        Component::Second => (b, a),
    };
    if num == f64::NEG_INFINITY {
        return 0.0;
    }
    1.0 / (1.0 + (other - num).exp())
}

/// p̂ = ε φ(y; δ, τ) / [(1 − ε) φ(y) + ε φ(y; δ, τ)].
pub fn posterior_positive(y: f64, params: &RareEventParams) -> f64 {
    posterior_component(y, &params.to_mixture(), Component::Second)
}

/// `true` (positive) iff score > threshold.
pub fn classify(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s > threshold).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[bool], pred: &[bool]) -> Self {
        assert_eq!(truth.len(), pred.len());
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(pred) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Rate metrics. A metric whose denominator is zero is reported as 0 with its flag set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub error_rate: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub sensitivity_undefined: bool,
    pub specificity_undefined: bool,
    pub precision_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn confusion_metrics(c: &ConfusionCounts) -> ConfusionMetrics {
    let (sensitivity, sens_u) = ratio(c.tp, c.tp + c.fn_);
    let (specificity, spec_u) = ratio(c.tn, c.tn + c.fp);
    let (precision, prec_u) = ratio(c.tp, c.tp + c.fp);
    let (error_rate, _) = ratio(c.fp + c.fn_, c.total());
    let f1 = if precision + sensitivity > 0.0 {
        2.0 * precision * sensitivity / (precision + sensitivity)
    } else {
        0.0
    };
    ConfusionMetrics {
        error_rate,
        sensitivity,
        specificity,
        precision,
        f1,
        balanced_accuracy: (sensitivity + specificity) / 2.0,
        sensitivity_undefined: sens_u,
        specificity_undefined: spec_u,
        precision_undefined: prec_u,
    }
}

fn choose2(n: u64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index from the pair-counting contingency table.
pub fn adjusted_rand_index<A, B>(truth: &[A], pred: &[B]) -> f64
where
    A: Eq + Hash,
    B: Eq + Hash,
{
    assert_eq!(truth.len(), pred.len(), "partitions must have equal length");
    let n = truth.len() as u64;
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (a, b) in truth.iter().zip(pred) {
        *table.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| choose2(v)).sum();
    let sum_rows: f64 = rows.values().map(|&v| choose2(v)).sum();
    let sum_cols: f64 = cols.values().map(|&v| choose2(v)).sum();
    let total = choose2(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        // both partitions trivial (all one cluster or all singletons)
        return if index == max_index { 1.0 } else { 0.0 };
    }
    (index - expected) / denom
}

/// Mann–Whitney AUC, P(score₊ > score₋) + ½P(tie). `None` when a class is absent.
pub fn auc(scores: &[f64], truth: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), truth.len());
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if truth[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}

/// Mean binary cross-entropy with scores clamped to [1e−12, 1 − 1e−12].
pub fn log_loss(scores: &[f64], truth: &[bool]) -> f64 {
    assert_eq!(scores.len(), truth.len());
    if scores.is_empty() {
        return 0.0;
    }
    let total: f64 = scores
        .iter()
        .zip(truth)
        .map(|(&s, &t)| {
            let s = s.clamp(LOG_LOSS_CLAMP, 1.0 - LOG_LOSS_CLAMP);
            if t {
                -s.ln()
            } else {
                -(1.0 - s).ln()
            }
        })
        .sum();
    total / scores.len() as f64
}

/// Everything reported for one scored fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ari: f64,
    pub error_rate: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub auc: f64,
    pub log_loss: f64,
    pub precision_undefined: bool,
    pub auc_undefined: bool,
}

impl MetricsReport {
    /// Scores predictions against truth, with `truth`/`pred` flags marking the positive class.
    pub fn compute(truth: &[bool], pred: &[bool], scores: &[f64]) -> Self {
        let counts = ConfusionCounts::from_predictions(truth, pred);
        let cm = confusion_metrics(&counts);
        let area = auc(scores, truth);
        Self {
            ari: if truth.len() >= 2 {
                adjusted_rand_index(truth, pred)
            } else {
                0.0
            },
            error_rate: cm.error_rate,
            sensitivity: cm.sensitivity,
            specificity: cm.specificity,
            precision: cm.precision,
            f1: cm.f1,
            balanced_accuracy: cm.balanced_accuracy,
            auc: area.unwrap_or(0.0),
            log_loss: log_loss(scores, truth),
            precision_undefined: cm.precision_undefined,
            auc_undefined: area.is_none(),
        }
    }
}

/// ER(k) = P(set maximum is rare)/ε = ∫ k φ(y; δ, τ) F(y)^(k−1) dy.
pub fn enrichment_ratio(params: &RareEventParams, k: SetSize) -> Result<f64> {
    params.validate()?;
    if k.get() == 1 {
        return Ok(1.0);
    }
    let psi = params.to_mixture();
    let m = k.get() as i32 - 1;
    let lo = (-10.0f64).min(params.delta - 10.0 * params.tau);
    let hi = 10.0f64.max(params.delta + 10.0 * params.tau);
    integrate(
        |y| {
            let rare = normal::pdf(y, params.delta, params.tau);
            k.as_f64() * rare * crate::mixture::mixture_cdf(y, &psi).powi(m)
        },
        lo,
        hi,
        QuadratureOptions::default(),
    )
}

/// Bias and RMSE of a set of replicate estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasRmse {
    pub bias: f64,
    pub rmse: f64,
}

pub fn bias_rmse(estimates: &[f64], truth: f64) -> BiasRmse {
    if estimates.is_empty() {
        return BiasRmse {
            bias: f64::NAN,
            rmse: f64::NAN,
        };
    }
    let b = estimates.len() as f64;
    let bias = estimates.iter().map(|e| e - truth).sum::<f64>() / b;
    let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / b;
    BiasRmse {
        bias,
        rmse: mse.sqrt(),
    }
}

/// Bias and RMSE of the three free parameters over B replicates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    /// ε (rare-event model) or π.
    pub weight: BiasRmse,
    /// δ or μ₂.
    pub location: BiasRmse,
    /// τ or σ₂.
    pub scale: BiasRmse,
    pub replicates: usize,
}

impl EstimatorSummary {
    /// `estimates` holds one (weight, location, scale) triple per replicate.
    pub fn compute(estimates: &[[f64; 3]], truth: [f64; 3]) -> Self {
        let col = |j: usize| estimates.iter().map(|e| e[j]).collect::<Vec<_>>();
        Self {
            weight: bias_rmse(&col(0), truth[0]),
            location: bias_rmse(&col(1), truth[1]),
            scale: bias_rmse(&col(2), truth[2]),
            replicates: estimates.len(),
        }
    }
}
