//! Increment variance defined through the symmetric spectral density
//! g(lambda) = (ln|lambda| - 1)/|lambda|^3 on |lambda| >= e:
//!
//!   sigma^2(u) = 8 * int_e^inf sin^2(pi lambda u) g(lambda) dlambda.
//!
//! Near zero this behaves like C u^2 ln^2(1/u): regularly varying of index 2
//! with a slowly-growing second derivative.

use crate::error::Result;
use crate::quad::{adaptive_gk15, gl32_panel};

pub const SUPPORT_LO: f64 = std::f64::consts::E;

/// Stateless evaluator; all methods are pure.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogSpectral;

impl LogSpectral {
    /// One-sided density value at lambda > 0 (the two-sided density is its
    /// even extension).
    pub fn density(&self, lam: f64) -> f64 {
        let a = lam.abs();
        if a < SUPPORT_LO {
            0.0
        } else {
            (a.ln() - 1.0) / (a * a * a)
        }
    }

    /// Closed-form tail mass int_A^inf g = (2 ln A - 1) / (4 A^2), A >= e.
    pub fn tail_mass(&self, a: f64) -> f64 {
        (2.0 * a.ln() - 1.0) / (4.0 * a * a)
    }

    /// Closed-form band mass int_A^B g.
    pub fn band_mass(&self, a: f64, b: f64) -> f64 {
        self.tail_mass(a) - self.tail_mass(b)
    }

    /// Closed-form first moment int_A^B lambda g = ln A / A - ln B / B.
    pub fn band_first_moment(&self, a: f64, b: f64) -> f64 {
        a.ln() / a - b.ln() / b
    }

    /// sigma^2(u) by the oscillation-split scheme: adaptive quadrature below
    /// the scale 1/(pi u), one Gauss panel per period up to ~100 radians of
    /// phase, then a four-term integration-by-parts tail.
    pub fn sigma2(&self, u: f64) -> Result<f64> {
        if u == 0.0 {
            return Ok(0.0);
        }
        let omega = 2.0 * std::f64::consts::PI * u;
        let lam_star = 1.0 / (std::f64::consts::PI * u);
        let integrand = |lam: f64| {
            let s = (std::f64::consts::PI * lam * u).sin();
            8.0 * s * s * self.density(lam)
        };

        // Smooth region [e, lam_star): less than a sixth of a period.
        let mut total = 0.0;
        let mut start = SUPPORT_LO;
        if lam_star > SUPPORT_LO {
            total += integrate_by_decades(&integrand, SUPPORT_LO, lam_star)?;
            start = lam_star;
        }

        // Oscillatory mid-range, one <= period panel at a time.
        let cutoff = (100.0 / omega).max(start);
        if cutoff > start {
            let n_panels = ((cutoff - start) * u).ceil().max(1.0) as usize;
            let width = (cutoff - start) / n_panels as f64;
            for i in 0..n_panels {
                let lo = start + i as f64 * width;
                let hi = lo + width;
                total += gl32_panel(&integrand, lo, hi);
            }
        }

        // Beyond the cutoff: 8 sin^2 = 4 (1 - cos), with the non-oscillatory
        // part in closed form and the cosine part by asymptotic expansion.
        total += 4.0 * self.tail_mass(cutoff) - 4.0 * cos_tail(omega, cutoff);
        Ok(total)
    }
}

/// int_A^inf cos(omega lam) g(lam) dlam by repeated integration by parts;
/// valid for omega * A >> 1 (the caller uses omega * A >= 100).
fn cos_tail(omega: f64, a: f64) -> f64 {
    let ln_a = a.ln();
    let a3 = a * a * a;
    let g0 = (ln_a - 1.0) / a3;
    let g1 = (4.0 - 3.0 * ln_a) / (a3 * a);
    let g2 = (12.0 * ln_a - 19.0) / (a3 * a * a);
    let g3 = (107.0 - 60.0 * ln_a) / (a3 * a3);
    let theta = omega * a;
    let (s, c) = theta.sin_cos();
    -g0 * s / omega - g1 * c / (omega * omega) + g2 * s / omega.powi(3) + g3 * c / omega.powi(4)
}

/// Adaptive quadrature over a possibly very wide range, one decade at a time.
pub(crate) fn integrate_by_decades<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut a = lo;
    while a < hi {
        let b = (a * 10.0).min(hi);
        total += adaptive_gk15(f, a, b, 1e-300, 1e-13, 4000)?.value;
        a = b;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tail_mass_matches_quadrature() {
        let ls = LogSpectral;
        let q = adaptive_gk15(|l| ls.density(l), 10.0, 1e7, 1e-16, 1e-13, 4000).unwrap();
        assert_relative_eq!(q.value, ls.tail_mass(10.0), max_relative = 1e-10);
    }

    #[test]
    fn band_first_moment_matches_quadrature() {
        let ls = LogSpectral;
        let q = adaptive_gk15(|l| l * ls.density(l), 5.0, 50.0, 1e-16, 1e-13, 4000).unwrap();
        assert_relative_eq!(q.value, ls.band_first_moment(5.0, 50.0), max_relative = 1e-10);
    }

    #[test]
    fn sigma2_vanishes_at_zero_and_grows() {
        let ls = LogSpectral;
        assert_eq!(ls.sigma2(0.0).unwrap(), 0.0);
        let v1 = ls.sigma2(1e-4).unwrap();
        let v2 = ls.sigma2(2e-4).unwrap();
        assert!(v1 > 0.0 && v2 > v1);
    }

    #[test]
    fn sigma2_is_smooth_under_tiny_perturbations() {
        // The piecewise integration scheme must not leave seams: second
        // differences at the finite-difference scale stay coherent.
        let ls = LogSpectral;
        for &u in &[1e-5, 1e-3, 0.05, 0.4, 1.9] {
            let d = u * 1e-4;
            let s0 = ls.sigma2(u).unwrap();
            let sp = ls.sigma2(u + d).unwrap();
            let sm = ls.sigma2(u - d).unwrap();
            let rho = (sp + sm - 2.0 * s0) / (2.0 * d * d);
            // rho should be positive and of order ln^2(1/u) for small u.
            assert!(rho.is_finite(), "u={u} rho={rho}");
            if u < 0.01 {
                let ln2 = u.recip().ln().powi(2);
                assert!(rho > 0.05 * ln2 && rho < 20.0 * ln2, "u={u} rho={rho} ln2={ln2}");
            }
        }
    }

    #[test]
    fn sigma2_scales_like_u2_log2_at_zero() {
        let ls = LogSpectral;
        for &u in &[1e-3, 1e-4, 1e-5, 1e-8] {
            let v = ls.sigma2(u).unwrap();
            let scale = u * u * u.recip().ln().powi(2);
            let ratio = v / scale;
            assert!(
                ratio > 0.5 && ratio < 40.0,
                "u = {u}: sigma2 = {v}, ratio = {ratio}"
            );
        }
    }
}
