use crate::metrics::posterior_component;
use crate::mixture::{Component, ComponentParams, MixtureParams, RareEventParams};
use crate::sampling::FscDataset;
use crate::{Error, Result};

use super::estep::{e_step_ns, e_step_srs, update_pi, update_pi_srs};
use super::init::{kmeans_init, labeled_moments_init};
use super::loglik::{component_terms, weighted_loglik};
use super::optimize::{closed_form_maximizer, closed_form_start, maximize};
use super::{EmConfig, FitResult, InitStrategy, LatentPosteriors, Method, Model, Weights};

/// Updates one component's (μ, σ).
///
/// Without cdf terms (k = 1, or SRS) the objective is a weighted normal
/// log-likelihood and its exact maximiser is returned. Otherwise the closed-form
/// start (variance centred at `current.mu`) is refined by Newton steps, starting
/// from whichever of the start and `current` scores higher.
pub fn m_step_component(
    which: Component,
    data: &FscDataset,
    post: &LatentPosteriors,
    w: &Weights,
    config: &EmConfig,
    current: &ComponentParams,
    method: Method,
) -> Result<ComponentParams> {
    let terms = component_terms(which, data, post, w, method);
    let tag = |e: Error| match e {
        Error::EmptyComponent { weight, .. } => Error::EmptyComponent {
            component: which.index(),
            weight,
        },
        other => other,
    };
    if !terms.has_cdf_terms() {
        return closed_form_maximizer(&terms).map_err(tag);
    }
    let start = closed_form_start(&terms, current.mu).map_err(tag)?;
    let from = if terms.value(current) > terms.value(&start) {
        *current
    } else {
        start
    };
    Ok(maximize(&terms, from, &config.inner))
}

/// (δ, τ) update of the rare-event model: component 2 with the background fixed.
pub fn m_step_rare(
    data: &FscDataset,
    post: &LatentPosteriors,
    w: &Weights,
    config: &EmConfig,
    current: &RareEventParams,
    method: Method,
) -> Result<(f64, f64)> {
    let cur = ComponentParams {
        mu: current.delta,
        sigma: current.tau,
    };
    let theta = m_step_component(Component::Second, data, post, w, config, &cur, method)?;
    Ok((theta.mu, theta.sigma))
}

fn initial_params(data: &FscDataset, config: &EmConfig, model: Model) -> Result<MixtureParams> {
    let mut psi = match config.init {
        InitStrategy::KMeans => kmeans_init(data, config.kmeans_restarts, config.kmeans_seed)?,
        InitStrategy::LabeledMoments => labeled_moments_init(data)?,
        InitStrategy::Explicit(p) => p,
    };
    if model == Model::RareEvent {
        psi.comp1 = ComponentParams::standard();
    }
    psi.pi = super::estep::clamp_pi(psi.pi);
    psi.validate()?;
    Ok(psi)
}

fn e_step(data: &FscDataset, psi: &MixtureParams, method: Method) -> Result<LatentPosteriors> {
    match method {
        Method::Ns => e_step_ns(&data.unlabeled, psi, data.k),
        Method::Srs => e_step_srs(&data.unlabeled, psi),
    }
}

/// Runs EM for `method` under `model` until |Δℓ_w| ≤ tol or `max_iter` iterations.
pub fn fit(
    data: &FscDataset,
    w: &Weights,
    config: &EmConfig,
    model: Model,
    method: Method,
) -> Result<FitResult> {
    data.validate()?;
    w.validate()?;
    config.validate()?;
    let mut psi = initial_params(data, config, model)?;
    let loglik = |p: &MixtureParams| -> Result<f64> {
        let l = weighted_loglik(data, p, w, method)?;
        if l.is_finite() {
            Ok(l)
        } else {
            Err(Error::Degenerate(format!("weighted log-likelihood is {l}")))
        }
    };
    let mut trace = vec![loglik(&psi)?];
    let mut converged = false;
    let mut iterations = 0;
    let n3 = data.unlabeled.len();

    while iterations < config.max_iter {
        iterations += 1;
        let post = e_step(data, &psi, method)?;
        let mut next = psi;
        // With w₃ = 0 the objective is flat in π, so π keeps its starting value.
        if n3 > 0 && w.w3 > 0.0 {
            next.pi = match method {
                Method::Ns => update_pi(&post, n3, data.k)?,
                Method::Srs => update_pi_srs(&post)?,
            };
        }
        if model == Model::GeneralGaussian {
            next.comp1 =
                m_step_component(Component::First, data, &post, w, config, &psi.comp1, method)?;
        }
        next.comp2 = m_step_component(
            Component::Second,
            data,
            &post,
            w,
            config,
            &psi.comp2,
            method,
        )?;
        let l = loglik(&next)?;
        let prev = *trace.last().expect("nonempty trace");
        psi = next;
        trace.push(l);
        if (l - prev).abs() <= config.tol {
            converged = true;
            break;
        }
    }

    let posteriors = e_step(data, &psi, method)?;
    let scores: Vec<f64> = data
        .unlabeled
        .iter()
        .map(|&y| posterior_component(y, &psi, Component::Second))
        .collect();
    let classifications = scores
        .iter()
        .map(|&s| {
            if s > config.threshold {
                Component::Second
            } else {
                Component::First
            }
        })
        .collect();
    Ok(FitResult {
        method,
        model,
        psi_hat: psi,
        loglik_trace: trace,
        iterations,
        converged,
        posteriors,
        scores,
        classifications,
    })
}

/// FSC-NS: EM on the nomination-sampling weighted likelihood.
pub fn fit_fsc_ns(
    data: &FscDataset,
    w: &Weights,
    config: &EmConfig,
    model: Model,
) -> Result<FitResult> {
    fit(data, w, config, model, Method::Ns)
}

/// FSC-SRS: ordinary weighted mixture EM that ignores the set size.
pub fn fit_fsc_srs(
    data: &FscDataset,
    w: &Weights,
    config: &EmConfig,
    model: Model,
) -> Result<FitResult> {
    fit(data, w, config, model, Method::Srs)
}
