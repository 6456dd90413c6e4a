use rand::Rng;

use crate::mixture::{ComponentParams, MixtureParams, SIGMA_FLOOR};
use crate::sampling::{FscDataset, RngSeed};
use crate::{Error, Result};

const LLOYD_MAX_ITER: usize = 200;

/// Two-means partition of sorted 1-D data: a split index and its within-cluster SSE.
fn lloyd(sorted: &[f64], mut c: [f64; 2]) -> (usize, f64) {
    let mut split = usize::MAX;
    for _ in 0..LLOYD_MAX_ITER {
        if c[0] > c[1] {
            c.swap(0, 1);
        }
        let mid = 0.5 * (c[0] + c[1]);
        let s = sorted.partition_point(|&x| x <= mid);
        if s == split || s == 0 || s == sorted.len() {
            split = s;
            break;
        }
        split = s;
        c = [mean(&sorted[..s]), mean(&sorted[s..])];
    }
    let split = split.clamp(1, sorted.len() - 1);
    (split, sse(&sorted[..split]) + sse(&sorted[split..]))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sse(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum()
}

fn moments(x: &[f64], floor: f64) -> ComponentParams {
    let m = mean(x);
    let sd = (sse(x) / x.len() as f64).sqrt();
    ComponentParams {
        mu: m,
        sigma: sd.max(floor),
    }
}

/// 2-cluster k-means on the pooled observations, best of `restarts` seeded Lloyd runs.
///
/// Component 1 is the cluster whose mean is closest to the labeled-1 mean, or the
/// lower cluster when there is no labeled-1 sample. π₀ is the pooled proportion
/// assigned to component 1.
pub fn kmeans_init(data: &FscDataset, restarts: usize, seed: u64) -> Result<MixtureParams> {
    let mut sorted: Vec<f64> = data.pooled().collect();
    if sorted.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "k-means needs at least 2 values, got {}",
            sorted.len()
        )));
    }
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if lo == hi {
        return Ok(MixtureParams {
            pi: 0.5,
            comp1: ComponentParams {
                mu: lo - 0.5,
                sigma: 1.0,
            },
            comp2: ComponentParams {
                mu: lo + 0.5,
                sigma: 1.0,
            },
        });
    }
    let floor = (1e-3 * (sse(&sorted) / sorted.len() as f64).sqrt()).max(SIGMA_FLOOR);

    let mut rng = RngSeed::new(seed, 0).rng();
    let mut best = lloyd(&sorted, [lo, hi]);
    for _ in 0..restarts {
        let i = rng.random_range(0..sorted.len());
        let mut j = rng.random_range(0..sorted.len());
        while sorted[j] == sorted[i] {
            j = rng.random_range(0..sorted.len());
        }
        let cand = lloyd(&sorted, [sorted[i], sorted[j]]);
        if cand.1 < best.1 {
            best = cand;
        }
    }
    let (split, _) = best;
    let (low, high) = (
        moments(&sorted[..split], floor),
        moments(&sorted[split..], floor),
    );
    let p_low = split as f64 / sorted.len() as f64;

    let low_is_first = if data.labeled1.is_empty() {
        true
    } else {
        let anchor = mean(&data.labeled1);
        (low.mu - anchor).abs() <= (high.mu - anchor).abs()
    };
    Ok(if low_is_first {
        MixtureParams {
            pi: p_low,
            comp1: low,
            comp2: high,
        }
    } else {
        MixtureParams {
            pi: 1.0 - p_low,
            comp1: high,
            comp2: low,
        }
    })
}

/// Component moments from the labeled groups; π₀ = n₁/(n₁ + n₂).
pub fn labeled_moments_init(data: &FscDataset) -> Result<MixtureParams> {
    let (a, b) = (&data.labeled1, &data.labeled2);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(
            "labeled-moments start needs 2 values per labeled group".into(),
        ));
    }
    Ok(MixtureParams {
        pi: a.len() as f64 / (a.len() + b.len()) as f64,
        comp1: moments(a, SIGMA_FLOOR),
        comp2: moments(b, SIGMA_FLOOR),
    })
}
