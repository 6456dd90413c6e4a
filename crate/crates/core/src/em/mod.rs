//! Weighted-likelihood EM for fractionally supervised classification.
//!
//! Two fitters share the same skeleton:
//!
//! * **FSC-NS** uses the nomination-sampling likelihood. Each unlabeled maximum
//!   carries the latent pair (Z, V): the component of the maximum and the number
//!   of component-1 units among the k − 1 unmeasured set members. The π update
//!   divides by n₃k and the component updates include cdf terms.
//! * **FSC-SRS** treats every nominated value as an ordinary mixture draw.

mod estep;
mod fit;
mod init;
mod loglik;
mod optimize;

pub use estep::{e_step_ns, e_step_srs, update_pi, update_pi_srs};
pub use fit::{fit, fit_fsc_ns, fit_fsc_srs, m_step_component, m_step_rare};
pub use init::{kmeans_init, labeled_moments_init};
pub use loglik::{component_objective, component_terms, q_function, weighted_loglik};
pub use optimize::ComponentTerms;

use serde::{Deserialize, Serialize};

use crate::mixture::{Component, MixtureParams, RareEventParams};
use crate::{Error, Result};

/// Clamp applied to every π (or 1 − ε) update.
pub const PI_CLAMP: f64 = 1e-6;
/// Components with less total density weight than this are treated as empty.
pub const MIN_EFFECTIVE_WEIGHT: f64 = 1e-8;

/// (w₁, w₂, w₃) for the labeled-1, labeled-2 and unlabeled groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Weights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let w = Self { w1, w2, w3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w1, self.w2, self.w3];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite and >= 0, got {all:?}"
            )));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParameter(
                "weights must not all be zero".into(),
            ));
        }
        Ok(())
    }

    pub fn labeled(&self, which: Component) -> f64 {
        match which {
            Component::First => self.w1,
            Component::Second => self.w2,
        }
    }
}

/// Which likelihood the fitter maximises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Nomination-sampling weighted likelihood.
    Ns,
    /// Ordinary weighted mixture likelihood (nominated values treated as SRS draws).
    Srs,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ns => "FSC-NS",
            Method::Srs => "FSC-SRS",
        }
    }
}

/// Component family being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Both components free.
    GeneralGaussian,
    /// Component 1 fixed at N(0, 1); only (ε, δ, τ) are estimated.
    RareEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerOptConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for InnerOptConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    KMeans,
    LabeledMoments,
    Explicit(MixtureParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    /// Stop when |Δℓ_w| ≤ tol.
    pub tol: f64,
    pub max_iter: usize,
    pub inner: InnerOptConfig,
    pub init: InitStrategy,
    pub kmeans_restarts: usize,
    pub kmeans_seed: u64,
    /// Posterior threshold for assigning component 2.
    pub threshold: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 500,
            inner: InnerOptConfig::default(),
            init: InitStrategy::KMeans,
            kmeans_restarts: 10,
            kmeans_seed: 0,
            threshold: 0.5,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter(
                "threshold must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

/// E-step quantities for the unlabeled sample: z̃ᵣ = E[Zᵣ | yᵣ] and ṽᵣ = E[Vᵣ | yᵣ],
/// both referring to component 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatentPosteriors {
    pub z_tilde: Vec<f64>,
    pub v_tilde: Vec<f64>,
}

impl LatentPosteriors {
    pub fn len(&self) -> usize {
        self.z_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_tilde.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: Method,
    pub model: Model,
    pub psi_hat: MixtureParams,
    /// ℓ_w at the initial value followed by one entry per iteration.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// E-step quantities at `psi_hat`.
    pub posteriors: LatentPosteriors,
    /// Posterior probability that each unlabeled maximum is from component 2.
    pub scores: Vec<f64>,
    pub classifications: Vec<Component>,
}

impl FitResult {
    /// (ε̂, δ̂, τ̂) view of the estimate.
    pub fn rare_params(&self) -> RareEventParams {
        RareEventParams::from_mixture(&self.psi_hat)
    }

    /// Largest single-iteration decrease of the trace (0 for a monotone trace).
    pub fn max_loglik_drop(&self) -> f64 {
        self.loglik_trace
            .windows(2)
            .map(|p| p[0] - p[1])
            .fold(0.0, f64::max)
    }

    pub fn final_loglik(&self) -> f64 {
        *self
            .loglik_trace
            .last()
            .expect("trace has the initial value")
    }
}
