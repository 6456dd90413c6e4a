use crate::mixture::{log_ns_density, Component, ComponentParams, MixtureParams, SetSize};
use crate::sampling::FscDataset;
use crate::{Error, Result};

use super::{ComponentTerms, LatentPosteriors, Method, Weights};

/// ln of the density of the maximum of k draws from one component.
fn log_pure_max(y: f64, theta: &ComponentParams, k: SetSize) -> f64 {
    let d = theta.log_pdf(y);
    if k.get() == 1 {
        return d;
    }
    k.as_f64().ln() + d + k.others() * theta.log_cdf(y)
}

fn effective_k(data: &FscDataset, method: Method) -> SetSize {
    match method {
        Method::Ns => data.k,
        Method::Srs => SetSize::new(1).expect("1 is a valid set size"),
    }
}

fn labeled_sum(data: &FscDataset, psi: &MixtureParams, w: &Weights, k: SetSize) -> f64 {
    let mut total = 0.0;
    for which in [Component::First, Component::Second] {
        let wm = w.labeled(which);
        if wm == 0.0 {
            continue;
        }
        let theta = psi.component(which);
        total += wm
            * data
                .labeled(which)
                .iter()
                .map(|&y| log_pure_max(y, theta, k))
                .sum::<f64>();
    }
    total
}

/// Weighted log-likelihood.
///
/// `Ns`: w₁Σ ln[k f₁F₁^(k−1)] + w₂Σ ln[k f₂F₂^(k−1)] + w₃Σ ln g_k.
/// `Srs`: w₁Σ ln f₁ + w₂Σ ln f₂ + w₃Σ ln f, ignoring k.
pub fn weighted_loglik(
    data: &FscDataset,
    psi: &MixtureParams,
    w: &Weights,
    method: Method,
) -> Result<f64> {
    psi.validate()?;
    w.validate()?;
    let k = effective_k(data, method);
    let mut total = labeled_sum(data, psi, w, k);
    if w.w3 != 0.0 {
        total += w.w3
            * data
                .unlabeled
                .iter()
                .map(|&y| log_ns_density(y, psi, k))
                .sum::<f64>();
    }
    if total.is_nan() {
        return Err(Error::Degenerate("weighted log-likelihood is NaN".into()));
    }
    Ok(total)
}

/// Density weights `a` and cdf weights `c` of one component's M-step objective.
///
/// Labeled group m contributes (w_m, w_m(k−1)); the unlabeled group contributes
/// w₃(z̃, ṽ) for component 1 and w₃(1 − z̃, k − 1 − ṽ) for component 2.
pub fn component_terms(
    which: Component,
    data: &FscDataset,
    post: &LatentPosteriors,
    w: &Weights,
    method: Method,
) -> ComponentTerms {
    let km1 = effective_k(data, method).others();
    let mut terms = ComponentTerms::default();
    let wm = w.labeled(which);
    if wm != 0.0 {
        for &y in data.labeled(which) {
            terms.push(y, wm, wm * km1);
        }
    }
    if w.w3 != 0.0 {
        for (r, &y) in data.unlabeled.iter().enumerate() {
            let (z, v) = (post.z_tilde[r], post.v_tilde.get(r).copied().unwrap_or(0.0));
            let (e, c) = match which {
                Component::First => (z, v),
                Component::Second => (1.0 - z, km1 - v),
            };
            let c = if method == Method::Srs {
                0.0
            } else {
                c.max(0.0)
            };
            terms.push(y, w.w3 * e, w.w3 * c);
        }
    }
    terms
}

/// Value of the component-`which` M-step objective at `theta`.
pub fn component_objective(
    theta: &ComponentParams,
    which: Component,
    data: &FscDataset,
    post: &LatentPosteriors,
    w: &Weights,
) -> Result<f64> {
    theta.validate()?;
    Ok(component_terms(which, data, post, w, Method::Ns).value(theta))
}

/// Q(ψ; ψ⁽ᵗ⁾) for NS data, with `post` computed at ψ⁽ᵗ⁾.
///
/// Labeled lines are as in [`weighted_loglik`]; the unlabeled lines are
/// w₃Σ[(z̃ + ṽ) ln π + (k − z̃ − ṽ) ln(1 − π) + z̃ ln f₁ + (1 − z̃) ln f₂
/// + ṽ ln F₁ + (k − 1 − ṽ) ln F₂], without the ln k and binomial constants.
pub fn q_function(
    data: &FscDataset,
    psi: &MixtureParams,
    post: &LatentPosteriors,
    w: &Weights,
) -> Result<f64> {
    psi.validate()?;
    let k = data.k;
    let kf = k.as_f64();
    let mut total = labeled_sum(data, psi, w, k);
    if w.w3 == 0.0 {
        return Ok(total);
    }
    let (lp, lq) = psi.ln_pi();
    let mut unl = 0.0;
    for (r, &y) in data.unlabeled.iter().enumerate() {
        let (z, v) = (post.z_tilde[r], post.v_tilde[r]);
        unl += xlogy(z + v, lp) + xlogy(kf - z - v, lq);
        unl += xlogy(z, psi.comp1.log_pdf(y)) + xlogy(1.0 - z, psi.comp2.log_pdf(y));
        if k.get() > 1 {
            unl += xlogy(v, psi.comp1.log_cdf(y)) + xlogy(k.others() - v, psi.comp2.log_cdf(y));
        }
    }
    total += w.w3 * unl;
    Ok(total)
}

/// a·ln(b) with the convention 0·(−∞) = 0.
fn xlogy(a: f64, lb: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * lb
    }
}
