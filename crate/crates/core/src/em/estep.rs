use crate::mixture::{MixtureParams, SetSize};
use crate::{Error, Result};

use super::{LatentPosteriors, PI_CLAMP};

/// 1 / (1 + e^(other − own)), the share of `own` in a two-term log-sum.
#[inline]
fn share(own: f64, other: f64) -> f64 {
    if own == f64::NEG_INFINITY {
        return 0.0;
    }
    1.0 / (1.0 + (other - own).exp())
}

fn check(y3: &[f64], psi: &MixtureParams) -> Result<()> {
    psi.validate()?;
    if let Some(y) = y3.iter().find(|y| !y.is_finite()) {
        return Err(Error::Degenerate(format!("non-finite observation {y}")));
    }
    Ok(())
}

/// z̃ᵣ = π f₁(yᵣ)/f(yᵣ) and ṽᵣ = (k − 1) π F₁(yᵣ)/F(yᵣ).
pub fn e_step_ns(y3: &[f64], psi: &MixtureParams, k: SetSize) -> Result<LatentPosteriors> {
    check(y3, psi)?;
    let (lp, lq) = (psi.pi.ln(), (1.0 - psi.pi).ln());
    let mut post = LatentPosteriors {
        z_tilde: Vec::with_capacity(y3.len()),
        v_tilde: Vec::with_capacity(y3.len()),
    };
    for &y in y3 {
        let z = share(lp + psi.comp1.log_pdf(y), lq + psi.comp2.log_pdf(y));
        let v = if k.get() == 1 {
            0.0
        } else {
            k.others() * share(lp + psi.comp1.log_cdf(y), lq + psi.comp2.log_cdf(y))
        };
        if z.is_nan() || v.is_nan() {
            return Err(Error::Degenerate(format!("posterior undefined at y = {y}")));
        }
        post.z_tilde.push(z);
        post.v_tilde.push(v);
    }
    Ok(post)
}

/// Single-indicator E-step: z̃ only, ṽ ≡ 0.
pub fn e_step_srs(y3: &[f64], psi: &MixtureParams) -> Result<LatentPosteriors> {
    e_step_ns(y3, psi, SetSize::new(1).expect("1 is a valid set size"))
}

/// π = Σ(z̃ᵣ + ṽᵣ)/(n₃k), clamped to [1e−6, 1 − 1e−6].
pub fn update_pi(post: &LatentPosteriors, n3: usize, k: SetSize) -> Result<f64> {
    if post.len() != n3 || post.v_tilde.len() != n3 {
        return Err(Error::InvalidParameter(format!(
            "posterior length {} != n3 {n3}",
            post.len()
        )));
    }
    if n3 == 0 {
        return Err(Error::InsufficientData("no unlabeled observations".into()));
    }
    let total: f64 = post
        .z_tilde
        .iter()
        .zip(&post.v_tilde)
        .map(|(z, v)| z + v)
        .sum();
    Ok(clamp_pi(total / (n3 as f64 * k.as_f64())))
}

/// π = Σ z̃ᵣ / n₃.
pub fn update_pi_srs(post: &LatentPosteriors) -> Result<f64> {
    if post.is_empty() {
        return Err(Error::InsufficientData("no unlabeled observations".into()));
    }
    Ok(clamp_pi(
        post.z_tilde.iter().sum::<f64>() / post.len() as f64,
    ))
}

pub(crate) fn clamp_pi(pi: f64) -> f64 {
    pi.clamp(PI_CLAMP, 1.0 - PI_CLAMP)
}

/// Unclamped value of the π update, for checking its limits.
#[cfg(test)]
pub(crate) fn raw_pi(post: &LatentPosteriors, k: SetSize) -> f64 {
    let total: f64 = post
        .z_tilde
        .iter()
        .zip(&post.v_tilde)
        .map(|(z, v)| z + v)
        .sum();
    total / (post.len() as f64 * k.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{Component, ComponentParams};
    use crate::sampling::{RngSeed, UnitSource};

    fn k(n: u32) -> SetSize {
        SetSize::new(n).unwrap()
    }

    fn reference() -> MixtureParams {
        MixtureParams::new(
            0.40,
            ComponentParams::standard(),
            ComponentParams::new(3.5, 1.2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_component_limit() {
        let psi = MixtureParams {
            pi: 1.0,
            ..reference()
        };
        let post = e_step_ns(&[-1.0, 0.5, 3.0], &psi, k(4)).unwrap();
        assert!(post.z_tilde.iter().all(|&z| z == 1.0));
        assert!(post.v_tilde.iter().all(|&v| v == 3.0));
    }

    #[test]
    fn no_unmeasured_units_at_k1() {
        let post = e_step_ns(&[-1.0, 0.5, 3.0], &reference(), k(1)).unwrap();
        assert!(post.v_tilde.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pi_update_arithmetic() {
        let post = LatentPosteriors {
            z_tilde: vec![0.5, 0.25],
            v_tilde: vec![1.0, 0.5],
        };
        assert!((update_pi(&post, 2, k(3)).unwrap() - 0.375).abs() < 1e-15);
        let all = LatentPosteriors {
            z_tilde: vec![1.0; 3],
            v_tilde: vec![2.0; 3],
        };
        assert_eq!(raw_pi(&all, k(3)), 1.0);
        assert_eq!(update_pi(&all, 3, k(3)).unwrap(), 1.0 - PI_CLAMP);
        let none = LatentPosteriors {
            z_tilde: vec![0.0; 3],
            v_tilde: vec![0.0; 3],
        };
        assert_eq!(raw_pi(&none, k(3)), 0.0);
        assert_eq!(update_pi(&none, 3, k(3)).unwrap(), PI_CLAMP);
        assert!(update_pi(&post, 3, k(3)).is_err());
    }

    #[test]
    fn posteriors_stay_in_bounds_in_the_tails() {
        let post = e_step_ns(&[-60.0, -10.0, 0.0, 12.0, 80.0], &reference(), k(5)).unwrap();
        for (z, v) in post.z_tilde.iter().zip(&post.v_tilde) {
            assert!((0.0..=1.0).contains(z));
            assert!((0.0..=4.0).contains(v));
        }
    }

    /// Keeps simulated sets whose maximum falls in [y − h, y + h] and averages the
    /// component-1 indicator of the maximum and the component-1 count among the rest.
    fn rejection_oracle(
        psi: &MixtureParams,
        kk: u32,
        y: f64,
        h: f64,
        sets: usize,
    ) -> (f64, f64, f64, f64, usize) {
        let mut rng = RngSeed::new(99, kk as u64).rng();
        let (mut sz, mut szz, mut sv, mut svv, mut n) = (0.0, 0.0, 0.0, 0.0, 0usize);
        let mut set = Vec::with_capacity(kk as usize);
        for _ in 0..sets {
            set.clear();
            for _ in 0..kk {
                set.push(psi.draw(&mut rng));
            }
            let (imax, &(m, c)) = set
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                .unwrap();
            if (m - y).abs() > h {
                continue;
            }
            let z = (c == Component::First) as u8 as f64;
            let v = set
                .iter()
                .enumerate()
                .filter(|(i, u)| *i != imax && u.1 == Component::First)
                .count() as f64;
            sz += z;
            szz += z * z;
            sv += v;
            svv += v * v;
            n += 1;
        }
        let nf = n as f64;
        let (mz, mv) = (sz / nf, sv / nf);
        let (sez, sev) = (
            ((szz / nf - mz * mz) / nf).sqrt(),
            ((svv / nf - mv * mv) / nf).sqrt(),
        );
        (mz, sez, mv, sev, n)
    }

    #[test]
    fn e_step_matches_rejection_sampling() {
        let psi = reference();
        let (mz, sez, mv, sev, n) = rejection_oracle(&psi, 3, 4.0, 0.05, 2_000_000);
        assert!(n > 1000);
        let post = e_step_ns(&[4.0], &psi, k(3)).unwrap();
        assert!(
            (post.z_tilde[0] - mz).abs() < 3.0 * sez,
            "z {} vs {mz}±{sez}",
            post.z_tilde[0]
        );
        assert!(
            (post.v_tilde[0] - mv).abs() < 3.0 * sev,
            "v {} vs {mv}±{sev}",
            post.v_tilde[0]
        );
    }
}
