//! Maximisation of a single component's weighted objective
//! Σ aᵢ ln φ(yᵢ; μ, σ) + cᵢ ln Φ(yᵢ; μ, σ) over (μ, ln σ).

use crate::mixture::{ComponentParams, SIGMA_FLOOR};
use crate::normal::{self, LN_SQRT_2PI};
use crate::{Error, Result};

use super::InnerOptConfig;

/// Per-observation density weights `a` and cdf weights `c` for one component.
#[derive(Debug, Clone, Default)]
pub struct ComponentTerms {
    pub y: Vec<f64>,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
}

impl ComponentTerms {
    pub fn push(&mut self, y: f64, a: f64, c: f64) {
        if a != 0.0 || c != 0.0 {
            self.y.push(y);
            self.a.push(a);
            self.c.push(c);
        }
    }

    /// ñ, the total density weight.
    pub fn effective_weight(&self) -> f64 {
        self.a.iter().sum()
    }

    pub fn has_cdf_terms(&self) -> bool {
        self.c.iter().any(|&c| c != 0.0)
    }

    pub fn value(&self, theta: &ComponentParams) -> f64 {
        let s = theta.sigma.ln();
        let mut f = 0.0;
        for i in 0..self.y.len() {
            let z = (self.y[i] - theta.mu) / theta.sigma;
            f += self.a[i] * (-0.5 * z * z - s - LN_SQRT_2PI);
            if self.c[i] != 0.0 {
                f += self.c[i] * normal::std_log_cdf(z);
            }
        }
        f
    }

    /// Value, gradient and Hessian in (μ, s = ln σ).
    pub fn derivatives(&self, mu: f64, s: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let sigma = s.exp();
        let (mut f, mut g, mut h) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
        for i in 0..self.y.len() {
            let (a, c) = (self.a[i], self.c[i]);
            let z = (self.y[i] - mu) / sigma;
            f += a * (-0.5 * z * z - s - LN_SQRT_2PI);
            g[0] += a * z / sigma;
            g[1] += a * (z * z - 1.0);
            h[0][0] -= a / (sigma * sigma);
            h[0][1] -= 2.0 * a * z / sigma;
            h[1][1] -= 2.0 * a * z * z;
            if c != 0.0 {
                let lc = normal::std_log_cdf(z);
                let lambda = (normal::std_log_pdf(z) - lc).exp();
                let dl = -lambda * (z + lambda);
                f += c * lc;
                g[0] -= c * lambda / sigma;
                g[1] -= c * lambda * z;
                h[0][0] += c * dl / (sigma * sigma);
                h[0][1] += c * (dl * z + lambda) / sigma;
                h[1][1] += c * (dl * z * z + lambda * z);
            }
        }
        h[1][0] = h[0][1];
        (f, g, h)
    }

    /// Weighted mean and the weighted second moment about `centre`.
    pub fn density_moments(&self, centre: Option<f64>) -> Result<(f64, f64)> {
        let n = self.effective_weight();
        if !(n >= super::MIN_EFFECTIVE_WEIGHT) {
            return Err(Error::EmptyComponent {
                component: 0,
                weight: n,
            });
        }
        let mean = self.y.iter().zip(&self.a).map(|(y, a)| a * y).sum::<f64>() / n;
        let c = centre.unwrap_or(mean);
        let var = self
            .y
            .iter()
            .zip(&self.a)
            .map(|(y, a)| a * (y - c).powi(2))
            .sum::<f64>()
            / n;
        Ok((mean, var))
    }
}

fn floor_sigma(sigma: f64) -> f64 {
    if sigma.is_finite() {
        sigma.max(SIGMA_FLOOR)
    } else {
        SIGMA_FLOOR
    }
}

/// Exact maximiser when there are no cdf terms: weighted mean and variance.
pub fn closed_form_maximizer(terms: &ComponentTerms) -> Result<ComponentParams> {
    let (mu, var) = terms.density_moments(None)?;
    Ok(ComponentParams {
        mu,
        sigma: floor_sigma(var.sqrt()),
    })
}

/// Closed-form start: weighted mean, and variance centred at the previous mean.
pub fn closed_form_start(terms: &ComponentTerms, previous_mu: f64) -> Result<ComponentParams> {
    let (mu, var) = terms.density_moments(Some(previous_mu))?;
    Ok(ComponentParams {
        mu,
        sigma: floor_sigma(var.sqrt()),
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Safeguarded Newton ascent with Armijo backtracking; coordinate-wise golden
/// section when the Hessian is not negative definite. Never returns a point
/// worse than `start`.
pub fn maximize(
    terms: &ComponentTerms,
    start: ComponentParams,
    cfg: &InnerOptConfig,
) -> ComponentParams {
    let s_min = SIGMA_FLOOR.ln();
    let eval = |mu: f64, s: f64| terms.value(&ComponentParams { mu, sigma: s.exp() });
    let (mut mu, mut s) = (start.mu, start.sigma.ln().max(s_min));
    let mut f = eval(mu, s);
    if !f.is_finite() {
        return start;
    }
    for _ in 0..cfg.max_iter {
        let (_, g, h) = terms.derivatives(mu, s);
        if g[0].abs().max(g[1].abs()) <= cfg.grad_tol {
            break;
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut moved = false;
        if h[0][0] < 0.0 && det > 0.0 {
            // d = −H⁻¹ g
            let mut d = [
                -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
            ];
            let sigma = s.exp();
            let cap = (d[0].abs() / (5.0 * sigma)).max(d[1].abs() / 2.0);
            if cap > 1.0 {
                d = [d[0] / cap, d[1] / cap];
            }
            let slope = g[0] * d[0] + g[1] * d[1];
            let mut t = 1.0;
            for _ in 0..40 {
                let (m2, s2) = (mu + t * d[0], (s + t * d[1]).max(s_min));
                let f2 = eval(m2, s2);
                if f2.is_finite() && f2 >= f + 1e-4 * t * slope {
                    if f2 >= f {
                        moved = f2 > f || (m2, s2) != (mu, s);
                        mu = m2;
                        s = s2;
                        f = f2;
                    }
                    break;
                }
                t *= 0.5;
            }
        } else {
            let sigma = s.exp();
            let (m2, _) = golden_section(|m| eval(m, s), mu - 3.0 * sigma, mu + 3.0 * sigma, 60);
            let (s2, f2) = golden_section(|v| eval(m2, v), (s - 2.0).max(s_min), s + 2.0, 60);
            if f2 > f {
                mu = m2;
                s = s2;
                f = f2;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    ComponentParams {
        mu,
        sigma: floor_sigma(s.exp()),
    }
}
