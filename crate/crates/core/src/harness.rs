//! Monte Carlo replication over scenario grids, and the objective-curve demonstration.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, EmConfig, Method, Model, Weights};
use crate::metrics::{EstimatorSummary, MetricsReport};
use crate::mixture::{
    log_improper_likelihood, log_ns_likelihood, Component, ComponentParams, MixtureParams,
    RareEventParams, SetSize,
};
use crate::sampling::{
    draw_ns_max, generate_dataset, GroupSizes, RankingModel, RngSeed, Standardization,
};
use crate::{Error, Result};

/// Parameter grid swept by [`run_grid`]. Every list must be nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub tau: Vec<f64>,
    pub k: Vec<u32>,
    pub rho: Vec<f64>,
    pub w3: Vec<f64>,
    pub n3: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            epsilon: vec![0.02, 0.05, 0.10],
            delta: vec![3.0, 4.0, 5.0],
            tau: vec![1.0, 1.5, 2.0],
            k: vec![2, 3, 5, 8],
            rho: vec![0.85],
            w3: vec![3.0],
            n3: vec![200],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub grid: Grid,
    /// Labeled background (component 1) sets.
    pub n1: usize,
    /// Labeled rare (component 2) sets.
    pub n2: usize,
    pub w1: f64,
    pub w2: f64,
    /// Replicates per scenario (B).
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub standardization: Standardization,
    pub em: EmConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid: Grid::default(),
            n1: 20,
            n2: 10,
            w1: 1.0,
            w2: 1.0,
            replicates: 50,
            seed: 2025,
            methods: vec![Method::Ns, Method::Srs],
            standardization: Standardization::Population,
            em: EmConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let lens = [
            ("epsilon", g.epsilon.len()),
            ("delta", g.delta.len()),
            ("tau", g.tau.len()),
            ("k", g.k.len()),
            ("rho", g.rho.len()),
            ("w3", g.w3.len()),
            ("n3", g.n3.len()),
            ("methods", self.methods.len()),
        ];
        if let Some((name, _)) = lens.iter().find(|(_, n)| *n == 0) {
            return Err(Error::InvalidParameter(format!("grid.{name} is empty")));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter(
                "replicates must be at least 1".into(),
            ));
        }
        for s in self.scenarios() {
            s.validate()?;
        }
        Weights::new(self.w1, self.w2, 1.0)?;
        self.em.validate()
    }

    /// Cartesian product of the grid, ε varying slowest and n₃ fastest.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &epsilon in &g.epsilon {
            for &delta in &g.delta {
                for &tau in &g.tau {
                    for &k in &g.k {
                        for &rho in &g.rho {
                            for &w3 in &g.w3 {
                                for &n3 in &g.n3 {
                                    out.push(Scenario {
                                        epsilon,
                                        delta,
                                        tau,
                                        k,
                                        rho,
                                        w3,
                                        n3,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub k: u32,
    pub rho: f64,
    pub w3: f64,
    pub n3: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        RareEventParams::new(self.epsilon, self.delta, self.tau)?;
        SetSize::new(self.k)?;
        RankingModel::new(self.rho)?;
        if !(self.w3 >= 0.0 && self.w3.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "w3 must be finite and >= 0, got {}",
                self.w3
            )));
        }
        Ok(())
    }

    pub fn truth(&self) -> RareEventParams {
        RareEventParams {
            epsilon: self.epsilon,
            delta: self.delta,
            tau: self.tau,
        }
    }
}

/// Result of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimate: RareEventParams,
    pub metrics: MetricsReport,
    pub iterations: usize,
    pub converged: bool,
    pub max_loglik_drop: f64,
}

/// Per-method outcomes of one replicate; `Err` holds the abort message.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub results: Vec<(Method, std::result::Result<MethodOutcome, String>)>,
}

/// Generates the dataset for (`scenario`, `replicate`) and fits every method.
///
/// The random stream is `RngSeed::new(config.seed, replicate)`; all methods
/// share the same k-means start.
pub fn run_replicate(
    config: &SimConfig,
    scenario: &Scenario,
    replicate: u64,
) -> Result<ReplicateOutcome> {
    let truth = scenario.truth();
    let k = SetSize::new(scenario.k)?;
    let ranking = RankingModel {
        rho: scenario.rho,
        standardization: config.standardization,
    };
    let sizes = GroupSizes {
        n1: config.n1,
        n2: config.n2,
        n3: scenario.n3,
    };
    let data = generate_dataset(
        &truth.to_mixture(),
        k,
        sizes,
        &ranking,
        RngSeed::new(config.seed, replicate),
    )?;
    let w = Weights::new(config.w1, config.w2, scenario.w3)?;
    let labels = data.truth.as_deref().expect("generated data carries truth");
    let is_rare: Vec<bool> = labels.iter().map(|&c| c == Component::Second).collect();

    let results = config
        .methods
        .iter()
        .map(|&method| {
            let outcome = fit(&data, &w, &config.em, Model::RareEvent, method)
                .map(|f| {
                    let pred: Vec<bool> = f
                        .classifications
                        .iter()
                        .map(|&c| c == Component::Second)
                        .collect();
                    MethodOutcome {
                        method,
                        estimate: f.rare_params(),
                        metrics: MetricsReport::compute(&is_rare, &pred, &f.scores),
                        iterations: f.iterations,
                        converged: f.converged,
                        max_loglik_drop: f.max_loglik_drop(),
                    }
                })
                .map_err(|e| e.to_string());
            (method, outcome)
        })
        .collect();
    Ok(ReplicateOutcome { replicate, results })
}

/// Aggregate of one (scenario, method) over its replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub scenario: Scenario,
    pub method: Method,
    pub replicates: usize,
    /// Replicates whose fit aborted; excluded from every mean.
    pub aborted: usize,
    pub not_converged: usize,
    pub precision_undefined: usize,
    pub auc_undefined: usize,
    /// Means of every metric over non-aborted replicates.
    pub metrics: MetricsReport,
    pub mean_estimate: RareEventParams,
    pub estimation: EstimatorSummary,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    /// Largest per-iteration log-likelihood decrease over all replicates.
    pub max_loglik_drop: f64,
}

fn aggregate(
    scenario: Scenario,
    method: Method,
    outcomes: &[&MethodOutcome],
    total: usize,
) -> GridRow {
    let n = outcomes.len() as f64;
    let mean = |f: &dyn Fn(&MethodOutcome) -> f64| {
        if outcomes.is_empty() {
            f64::NAN
        } else {
            outcomes.iter().map(|o| f(o)).sum::<f64>() / n
        }
    };
    let metrics = MetricsReport {
        ari: mean(&|o| o.metrics.ari),
        error_rate: mean(&|o| o.metrics.error_rate),
        sensitivity: mean(&|o| o.metrics.sensitivity),
        specificity: mean(&|o| o.metrics.specificity),
        precision: mean(&|o| o.metrics.precision),
        f1: mean(&|o| o.metrics.f1),
        balanced_accuracy: mean(&|o| o.metrics.balanced_accuracy),
        auc: mean(&|o| o.metrics.auc),
        log_loss: mean(&|o| o.metrics.log_loss),
        precision_undefined: false,
        auc_undefined: false,
    };
    let estimates: Vec<[f64; 3]> = outcomes
        .iter()
        .map(|o| [o.estimate.epsilon, o.estimate.delta, o.estimate.tau])
        .collect();
    let t = scenario.truth();
    GridRow {
        scenario,
        method,
        replicates: total,
        aborted: total - outcomes.len(),
        not_converged: outcomes.iter().filter(|o| !o.converged).count(),
        precision_undefined: outcomes
            .iter()
            .filter(|o| o.metrics.precision_undefined)
            .count(),
        auc_undefined: outcomes.iter().filter(|o| o.metrics.auc_undefined).count(),
        metrics,
        mean_estimate: RareEventParams {
            epsilon: mean(&|o| o.estimate.epsilon),
            delta: mean(&|o| o.estimate.delta),
            tau: mean(&|o| o.estimate.tau),
        },
        estimation: EstimatorSummary::compute(&estimates, [t.epsilon, t.delta, t.tau]),
        mean_iterations: mean(&|o| o.iterations as f64),
        max_iterations: outcomes.iter().map(|o| o.iterations).max().unwrap_or(0),
        max_loglik_drop: outcomes
            .iter()
            .map(|o| o.max_loglik_drop)
            .fold(0.0, f64::max),
    }
}

/// Runs every (scenario, replicate) pair in parallel and aggregates in grid order.
///
/// Output is independent of thread count and scheduling.
pub fn run_grid(config: &SimConfig) -> Result<Vec<GridRow>> {
    config.validate()?;
    let scenarios = config.scenarios();
    let b = config.replicates as u64;
    let tasks: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|s| (0..b).map(move |r| (s, r)))
        .collect();
    let outcomes: Vec<ReplicateOutcome> = tasks
        .par_iter()
        .map(|&(s, r)| run_replicate(config, &scenarios[s], r))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(scenarios.len() * config.methods.len());
    for (s, scenario) in scenarios.iter().enumerate() {
        let chunk = &outcomes[s * b as usize..(s + 1) * b as usize];
        for (m, &method) in config.methods.iter().enumerate() {
            let ok: Vec<&MethodOutcome> = chunk
                .iter()
                .filter_map(|o| o.results[m].1.as_ref().ok())
                .collect();
            rows.push(aggregate(*scenario, method, &ok, chunk.len()));
        }
    }
    Ok(rows)
}

/// Runs `f` on a dedicated pool of `jobs` threads, or the global pool when `None`.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// [`run_grid`] on a dedicated pool of `jobs` threads.
pub fn run_grid_with_jobs(config: &SimConfig, jobs: usize) -> Result<Vec<GridRow>> {
    with_jobs(Some(jobs), || run_grid(config))?
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub const GRID_CSV_HEADER: &str = "epsilon,delta,tau,k,rho,w3,n3,method,replicates,aborted,not_converged,\
ari,error_rate,sensitivity,specificity,precision,f1,balanced_accuracy,auc,log_loss,\
precision_undefined,auc_undefined,mean_epsilon,mean_delta,mean_tau,\
bias_epsilon,rmse_epsilon,bias_delta,rmse_delta,bias_tau,rmse_tau,mean_iterations,max_iterations,max_loglik_drop";

pub fn write_grid_csv<W: Write>(rows: &[GridRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{GRID_CSV_HEADER}")?;
    for r in rows {
        let s = &r.scenario;
        let m = &r.metrics;
        let e = &r.estimation;
        let floats = [
            m.ari,
            m.error_rate,
            m.sensitivity,
            m.specificity,
            m.precision,
            m.f1,
            m.balanced_accuracy,
            m.auc,
            m.log_loss,
        ];
        let est = [
            r.mean_estimate.epsilon,
            r.mean_estimate.delta,
            r.mean_estimate.tau,
            e.weight.bias,
            e.weight.rmse,
            e.location.bias,
            e.location.rmse,
            e.scale.bias,
            e.scale.rmse,
            r.mean_iterations,
        ];
        let join = |v: &[f64]| {
            v.iter()
                .map(|&x| format_float(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.epsilon,
            s.delta,
            s.tau,
            s.k,
            s.rho,
            s.w3,
            s.n3,
            r.method.label(),
            r.replicates,
            r.aborted,
            r.not_converged,
            join(&floats),
            r.precision_undefined,
            r.auc_undefined,
            join(&est),
            r.max_iterations,
            format_float(r.max_loglik_drop),
        )?;
    }
    Ok(())
}

/// Optional (μ₂, σ₂) grid for the surface part of [`lemma_demo`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub mu2: Vec<f64>,
    pub sigma2: Vec<f64>,
}

/// ℓ_C and ℓ_W over a (μ₂, σ₂) grid; `values[i][j]` is at (mu2[i], sigma2[j]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub grid: SurfaceGrid,
    pub correct: Vec<Vec<f64>>,
    pub improper: Vec<Vec<f64>>,
    pub argmax_correct: (f64, f64),
    pub argmax_improper: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaDemo {
    pub data: Vec<f64>,
    pub pi: Vec<f64>,
    /// ℓ_C(π) shifted so its maximum is 0.
    pub correct: Vec<f64>,
    /// ℓ_W(π) shifted so its maximum is 0.
    pub improper: Vec<f64>,
    pub argmax_correct: f64,
    pub argmax_improper: f64,
    pub surface: Option<Surface>,
}

fn shift_to_zero(v: &mut [f64]) -> usize {
    let (imax, max) =
        v.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc },
        );
    v.iter_mut().for_each(|x| *x -= max);
    imax
}

/// Simulates `n` NS maxima from `psi0` and profiles ℓ_C and ℓ_W over π ∈ {0.01, …, 0.99}
/// with the components held at truth; optionally over a (μ₂, σ₂) grid with π at truth.
pub fn lemma_demo(
    psi0: &MixtureParams,
    k: SetSize,
    n: usize,
    seed: u64,
    surface: Option<SurfaceGrid>,
) -> Result<LemmaDemo> {
    psi0.validate()?;
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "lemma demo needs n >= 2, got {n}"
        )));
    }
    let mut rng = RngSeed::new(seed, 0).rng();
    let data: Vec<f64> = (0..n).map(|_| draw_ns_max(psi0, k, &mut rng).0).collect();

    let pi: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let mut correct = Vec::with_capacity(pi.len());
    let mut improper = Vec::with_capacity(pi.len());
    for &p in &pi {
        let psi = MixtureParams { pi: p, ..*psi0 };
        correct.push(log_ns_likelihood(&data, &psi, k)?);
        improper.push(log_improper_likelihood(&data, &psi, k)?);
    }
    let ic = shift_to_zero(&mut correct);
    let iw = shift_to_zero(&mut improper);

    let surface = match surface {
        None => None,
        Some(g) => {
            if g.mu2.is_empty() || g.sigma2.is_empty() {
                return Err(Error::InvalidParameter("surface grid is empty".into()));
            }
            let mut c = vec![vec![0.0; g.sigma2.len()]; g.mu2.len()];
            let mut w = c.clone();
            for (i, &mu) in g.mu2.iter().enumerate() {
                for (j, &sd) in g.sigma2.iter().enumerate() {
                    let psi = MixtureParams {
                        comp2: ComponentParams::new(mu, sd)?,
                        ..*psi0
                    };
                    c[i][j] = log_ns_likelihood(&data, &psi, k)?;
                    w[i][j] = log_improper_likelihood(&data, &psi, k)?;
                }
            }
            let argmax = |m: &[Vec<f64>]| {
                let mut best = (0, 0, f64::NEG_INFINITY);
                for (i, row) in m.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if v > best.2 {
                            best = (i, j, v);
                        }
                    }
                }
                (g.mu2[best.0], g.sigma2[best.1])
            };
            let (ac, aw) = (argmax(&c), argmax(&w));
            Some(Surface {
                argmax_correct: ac,
                argmax_improper: aw,
                correct: c,
                improper: w,
                grid: g,
            })
        }
    };
    Ok(LemmaDemo {
        data,
        argmax_correct: pi[ic],
        argmax_improper: pi[iw],
        pi,
        correct,
        improper,
        surface,
    })
}

pub fn write_lemma_csv<W: Write>(demo: &LemmaDemo, mut out: W) -> std::io::Result<()> {
    writeln!(out, "pi,loglik_correct,loglik_improper")?;
    for i in 0..demo.pi.len() {
        writeln!(
            out,
            "{},{},{}",
            demo.pi[i],
            format_float(demo.correct[i]),
            format_float(demo.improper[i])
        )?;
    }
    Ok(())
}
