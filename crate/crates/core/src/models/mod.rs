//! Increment-variance models sigma^2, their second derivatives rho, the
//! normalized kernel tau_h, and spectral representations.
//!
//! A model is immutable after construction; every evaluator is pure and safe
//! to call concurrently.

pub mod logspectral;
pub mod regularity;

use crate::error::{Error, Result};
use crate::quad::graded_mesh_quad;
use logspectral::LogSpectral;
use std::cell::Cell;

/// Margin used when testing the hypothesis boundary k * zeta < 1, so that a
/// product that is exactly 1 up to floating-point noise counts as >= 1.
const ORDER_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone)]
enum ModelKind {
    /// sigma^2(x) = x^r.
    PowerLaw { r: f64 },
    /// sigma^2(x) = sum_i w_i x^{e_i}, a discrete FB-mixture.
    Mixture { weights: Vec<f64>, exponents: Vec<f64> },
    /// Quadrature-backed model with an explicit spectral density.
    LogSpectral(LogSpectral),
}

/// An increment variance sigma^2 with its second derivative rho and
/// regular-variation metadata.
#[derive(Debug, Clone)]
pub struct Model {
    name: String,
    kind: ModelKind,
    beta_index: f64,
    zeta: f64,
    rho_closed_form: bool,
    domain_max: f64,
}

/// sigma^2(x) = x^r for 0 < r < 2 (fractional-Brownian increment variance).
pub fn make_fbm(r: f64) -> Result<Model> {
    if !(r > 0.0 && r < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "fbm exponent must lie in (0, 2), got {r}"
        )));
    }
    Ok(Model {
        name: format!("fbm:r={r}"),
        kind: ModelKind::PowerLaw { r },
        beta_index: r,
        zeta: 2.0 - r,
        rho_closed_form: true,
        domain_max: f64::INFINITY,
    })
}

/// Power law restricted to the range covered by the normal central limit
/// theorem (concave when r <= 1, and h^r with 1 < r <= 3/2).
pub fn make_concave(r: f64) -> Result<Model> {
    if !(r > 0.0 && r <= 1.5) {
        return Err(Error::InvalidParameter(format!(
            "concave/CLT power law needs 0 < r <= 1.5, got {r}"
        )));
    }
    let mut m = make_fbm(r)?;
    m.name = format!("concave:r={r}");
    Ok(m)
}

fn validate_mixture(weights: &[f64], exponents: &[f64]) -> Result<()> {
    if weights.is_empty() || weights.len() != exponents.len() {
        return Err(Error::InvalidParameter(
            "mixture needs equally many positive weights and exponents".into(),
        ));
    }
    for &w in weights {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mixture weight must be positive and finite, got {w}"
            )));
        }
    }
    for &e in exponents {
        if !(e > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mixture exponent out of range: {e} <= 1"
            )));
        }
        if !(e < 2.0) {
            // Integrability of the defining measure against 1/(2-s) fails.
            return Err(Error::InvalidParameter(format!(
                "mixture exponent {e} >= 2 makes the mixing integral diverge"
            )));
        }
    }
    Ok(())
}

fn mixture_model(name: String, weights: Vec<f64>, exponents: Vec<f64>) -> Model {
    let beta = exponents.iter().cloned().fold(f64::INFINITY, f64::min);
    Model {
        name,
        kind: ModelKind::Mixture { weights, exponents },
        beta_index: beta,
        zeta: 2.0 - beta,
        rho_closed_form: true,
        domain_max: f64::INFINITY,
    }
}

/// Discrete FB-mixture sigma^2(x) = sum_k a_k x^{beta_k}.
pub fn make_fb_mixture_discrete(weights: &[f64], exponents: &[f64]) -> Result<Model> {
    validate_mixture(weights, exponents)?;
    let a: Vec<String> = weights.iter().map(|v| format!("{v}")).collect();
    let b: Vec<String> = exponents.iter().map(|v| format!("{v}")).collect();
    Ok(mixture_model(
        format!("fbmix:a={};beta={}", a.join(","), b.join(",")),
        weights.to_vec(),
        exponents.to_vec(),
    ))
}

/// FB-mixture given by quadrature nodes of a finite mixing measure on
/// (1, 2): sigma^2(x) = sum_i w_i x^{s_i}.
pub fn make_fb_mixture_measure(nodes: &[f64], weights: &[f64]) -> Result<Model> {
    validate_mixture(weights, nodes)?;
    let s: Vec<String> = nodes.iter().map(|v| format!("{v}")).collect();
    let w: Vec<String> = weights.iter().map(|v| format!("{v}")).collect();
    Ok(mixture_model(
        format!("fbmix-measure:s={};w={}", s.join(","), w.join(",")),
        weights.to_vec(),
        nodes.to_vec(),
    ))
}

/// FB-mixture in Laplace form sigma^2(x) = x^beta * rhohat(ln 1/x) with
/// rhohat the Laplace transform of a discrete measure sum_i w_i delta_{v_i}
/// on [0, 2 - beta); equivalently exponents beta + v_i.
pub fn make_fb_mixture_laplace(beta: f64, nodes: &[f64], weights: &[f64]) -> Result<Model> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "laplace mixture base exponent must lie in (1, 2), got {beta}"
        )));
    }
    if nodes.len() != weights.len() || nodes.is_empty() {
        return Err(Error::InvalidParameter(
            "laplace mixture needs equally many nodes and weights".into(),
        ));
    }
    for &v in nodes {
        if !(v >= 0.0 && v < 2.0 - beta) {
            return Err(Error::InvalidParameter(format!(
                "laplace node {v} outside [0, {}) makes the mixing integral diverge",
                2.0 - beta
            )));
        }
    }
    let exponents: Vec<f64> = nodes.iter().map(|v| beta + v).collect();
    validate_mixture(weights, &exponents)?;
    let vs: Vec<String> = nodes.iter().map(|v| format!("{v}")).collect();
    let ws: Vec<String> = weights.iter().map(|v| format!("{v}")).collect();
    Ok(mixture_model(
        format!("fbmix-laplace:beta={beta};v={};w={}", vs.join(","), ws.join(",")),
        weights.to_vec(),
        exponents,
    ))
}

/// The log-spectral model: density (ln|l| - 1)/|l|^3 on |l| >= e, sigma^2
/// regularly varying of index 2 at zero with rho growing like ln^2(1/s).
///
/// zeta = 0.25 is an envelope exponent on the calibrated domain: |rho| grows
/// slower than any power, and s^{0.25} dominates ln^2(1/s) with a finite
/// constant there.
pub fn make_log_spectral() -> Model {
    Model {
        name: "logspec".into(),
        kind: ModelKind::LogSpectral(LogSpectral),
        beta_index: 2.0,
        zeta: 0.25,
        rho_closed_form: false,
        domain_max: 64.0,
    }
}

impl Model {
    /// Parses a model spec string: `fbm:r=1.8`, `concave:r=1.0`,
    /// `fbmix:a=1,1;beta=1.7,1.9`, `fbmix-measure:s=...;w=...`,
    /// `fbmix-laplace:beta=...;v=...;w=...`, `logspec`.
    pub fn from_spec(spec: &str) -> Result<Model> {
        let spec = spec.trim();
        if spec == "logspec" {
            return Ok(make_log_spectral());
        }
        if let Some(rest) = spec.strip_prefix("fbm:") {
            return make_fbm(parse_kv_f64(rest, "r")?);
        }
        if let Some(rest) = spec.strip_prefix("concave:") {
            return make_concave(parse_kv_f64(rest, "r")?);
        }
        if let Some(rest) = spec.strip_prefix("fbmix:") {
            let (a, beta) = parse_two_lists(rest, "a", "beta")?;
            return make_fb_mixture_discrete(&a, &beta);
        }
        if let Some(rest) = spec.strip_prefix("fbmix-measure:") {
            let (s, w) = parse_two_lists(rest, "s", "w")?;
            return make_fb_mixture_measure(&s, &w);
        }
        if let Some(rest) = spec.strip_prefix("fbmix-laplace:") {
            let mut beta = None;
            let mut v = None;
            let mut w = None;
            for part in rest.split(';') {
                let (key, val) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("bad model spec '{spec}'")))?;
                match key.trim() {
                    "beta" => beta = Some(val.parse::<f64>().map_err(|_| bad_spec(spec))?),
                    "v" => v = Some(parse_list(val).map_err(|_| bad_spec(spec))?),
                    "w" => w = Some(parse_list(val).map_err(|_| bad_spec(spec))?),
                    other => {
                        return Err(Error::Config(format!(
                            "unknown key '{other}' in model spec '{spec}'"
                        )))
                    }
                }
            }
            let beta = beta.ok_or_else(|| bad_spec(spec))?;
            let v = v.ok_or_else(|| bad_spec(spec))?;
            let w = w.ok_or_else(|| bad_spec(spec))?;
            return make_fb_mixture_laplace(beta, &v, &w);
        }
        Err(Error::Config(format!("unknown model spec '{spec}'")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Claimed regular-variation index of sigma^2 at zero.
    pub fn beta_index(&self) -> f64 {
        self.beta_index
    }

    /// Claimed singularity exponent of rho near zero: |rho(x)| <= C_M |x|^{-zeta}.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn rho_is_closed_form(&self) -> bool {
        self.rho_closed_form
    }

    /// Calibrated evaluation domain (0, x_max]; infinite for closed forms.
    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    /// Increment variance sigma^2(x); sigma^2(0) = 0 exactly.
    pub fn sigma2(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("sigma2 needs x >= 0, got {x}")));
        }
        if x > self.domain_max {
            return Err(Error::Domain(format!(
                "x = {x} beyond calibrated domain (0, {}] of model {}",
                self.domain_max, self.name
            )));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            ModelKind::PowerLaw { r } => Ok(x.powf(*r)),
            ModelKind::Mixture { weights, exponents } => Ok(weights
                .iter()
                .zip(exponents.iter())
                .map(|(w, e)| w * x.powf(*e))
                .sum()),
            ModelKind::LogSpectral(ls) => ls.sigma2(x),
        }
    }

    pub fn sigma(&self, x: f64) -> Result<f64> {
        Ok(self.sigma2(x)?.sqrt())
    }

    /// rho(s) = (sigma^2)''(s) / 2 for s > 0; closed form when available,
    /// else central second difference with one Richardson step.
    pub fn rho(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!(
                "rho needs s > 0 (rho(0) is infinite), got {s}"
            )));
        }
        match &self.kind {
            ModelKind::PowerLaw { r } => Ok(0.5 * r * (r - 1.0) * s.powf(r - 2.0)),
            ModelKind::Mixture { weights, exponents } => Ok(weights
                .iter()
                .zip(exponents.iter())
                .map(|(w, e)| 0.5 * w * e * (e - 1.0) * s.powf(e - 2.0))
                .sum()),
            ModelKind::LogSpectral(_) => self.rho_finite_difference(s),
        }
    }

    /// Finite-difference evaluation of rho with relative step s * 1e-4 and
    /// one Richardson refinement. Available for every model; the closed-form
    /// models use it as a cross-check only.
    pub fn rho_finite_difference(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("rho needs s > 0, got {s}")));
        }
        let delta = s * 1e-4;
        if s + delta > self.domain_max {
            return Err(Error::Domain(format!(
                "finite difference at s = {s} leaves the calibrated domain of {}",
                self.name
            )));
        }
        let base = self.sigma2(s)?;
        let second = |d: f64| -> Result<f64> {
            Ok((self.sigma2(s + d)? + self.sigma2(s - d)? - 2.0 * base) / (2.0 * d * d))
        };
        let coarse = second(delta)?;
        let fine = second(0.5 * delta)?;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// Normalized increment-covariance kernel
    /// tau_h(s) = (sigma^2(s+h) + sigma^2(|s-h|) - 2 sigma^2(s)) / (2 sigma^2(h)).
    pub fn tau_h(&self, h: f64, s: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("tau_h needs h > 0, got {h}")));
        }
        if s < 0.0 {
            return Err(Error::Domain(format!("tau_h needs s >= 0, got {s}")));
        }
        let s2h = self.sigma2(h)?;
        if !(s2h > 0.0) {
            return Err(Error::Domain(format!(
                "sigma2(h) = {s2h} must be positive at h = {h}"
            )));
        }
        Ok((self.sigma2(s + h)? + self.sigma2((s - h).abs())? - 2.0 * self.sigma2(s)?) / (2.0 * s2h))
    }

    /// Two-sided spectral density at `lam`, when the model carries one.
    pub fn spectral_density(&self, lam: f64) -> Option<f64> {
        match &self.kind {
            ModelKind::LogSpectral(ls) => Some(ls.density(lam)),
            _ => None,
        }
    }

    pub fn has_spectral_density(&self) -> bool {
        matches!(self.kind, ModelKind::LogSpectral(_))
    }

    pub(crate) fn log_spectral(&self) -> Option<&LogSpectral> {
        match &self.kind {
            ModelKind::LogSpectral(ls) => Some(ls),
            _ => None,
        }
    }

    /// Whether Wick order k satisfies the hypothesis k * zeta < 1 (with a
    /// floating-point margin so the boundary counts as unsupported).
    pub fn supports_order(&self, k: usize) -> bool {
        k == 0 || (k as f64) * self.zeta < 1.0 - ORDER_MARGIN
    }

    pub fn max_supported_order(&self) -> usize {
        (1..=64).take_while(|&k| self.supports_order(k)).last().unwrap_or(0)
    }

    pub fn require_order(&self, k: usize) -> Result<()> {
        if self.supports_order(k) {
            Ok(())
        } else {
            Err(Error::UnsupportedOrder {
                order: k,
                product: k as f64 * self.zeta,
                model: self.name.clone(),
            })
        }
    }

    /// The exponent r when sigma^2(x) = x^r.
    pub fn power_law_exponent(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::PowerLaw { r } => Some(*r),
            _ => None,
        }
    }

    /// For mixtures: (lam psi'(lam)/psi(lam), lam^2 psi''(lam)/psi(lam)) in
    /// closed form. These converge to beta and beta(beta-1) at zero.
    pub fn mixture_rv_ratios(&self, lam: f64) -> Option<(f64, f64)> {
        match &self.kind {
            ModelKind::Mixture { weights, exponents } => {
                let mut psi = 0.0;
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for (w, e) in weights.iter().zip(exponents.iter()) {
                    let p = w * lam.powf(*e);
                    psi += p;
                    d1 += e * p;
                    d2 += e * (e - 1.0) * p;
                }
                Some((d1 / psi, d2 / psi))
            }
            _ => None,
        }
    }
}

/// Quadrature controls for [`sigma2_from_spectral`].
#[derive(Debug, Clone, Copy)]
pub struct SpectralQuadSpec {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for SpectralQuadSpec {
    fn default() -> Self {
        SpectralQuadSpec {
            rel_tol: 1e-8,
            max_panels: 20_000,
        }
    }
}

/// Generic route for sigma^2 from a symmetric spectral density:
/// 2 int_R (1 - cos 2 pi lam u) nu(dlam) = 4 int_{lo}^inf (1 - cos 2 pi lam u) g(lam) dlam.
///
/// Splits at the oscillation scale 1/u; beyond it, sums one panel per period
/// until a fitted power-decay tail estimate meets the tolerance.
pub fn sigma2_from_spectral<F: Fn(f64) -> f64>(
    density: F,
    support_lo: f64,
    u: f64,
    quad: &SpectralQuadSpec,
) -> Result<f64> {
    if u < 0.0 {
        return Err(Error::Domain(format!("sigma2 needs u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let two_pi_u = 2.0 * std::f64::consts::PI * u;
    let integrand = |lam: f64| 4.0 * (1.0 - (two_pi_u * lam).cos()) * density(lam);

    let split = (1.0 / u).max(support_lo);
    let mut total = 0.0;
    if split > support_lo {
        total += logspectral::integrate_by_decades(&integrand, support_lo, split)?;
    }

    let width = 1.0 / u;
    let mut prev_panel = f64::INFINITY;
    let mut lo = split;
    for _ in 0..quad.max_panels {
        let hi = lo + width;
        let panel = crate::quad::gl32_panel(&integrand, lo, hi);
        total += panel;
        // Fit a local power decay to the last two panels and estimate the
        // remaining tail; the integrand is nonnegative on average, so panel
        // magnitudes trace the density envelope.
        if prev_panel.is_finite() && prev_panel > 0.0 && panel > 0.0 && panel < prev_panel {
            let mid_prev = lo - 0.5 * width;
            let mid = lo + 0.5 * width;
            let p = (prev_panel / panel).ln() / (mid / mid_prev).ln();
            if p > 1.2 {
                let tail_est = panel * (mid / width) / (p - 1.0);
                if tail_est <= quad.rel_tol * total.abs() {
                    return Ok(total + tail_est);
                }
            }
        }
        prev_panel = panel;
        lo = hi;
    }
    Err(Error::QuadratureNonConvergence {
        achieved: prev_panel,
        target: quad.rel_tol * total.abs(),
    })
}

/// Verifies sigma^2(x) = 2 int_0^x (x - s) rho(s) ds over the given x grid
/// by graded-mesh quadrature; returns the max relative error.
pub fn sigma2_from_rho_consistency(model: &Model, xs: &[f64], panels: usize) -> Result<f64> {
    if !model.supports_order(1) {
        return Err(Error::NonIntegrable {
            zeta: model.zeta(),
            model: model.name().to_string(),
        });
    }
    let grading = 1.0 / (1.0 - model.zeta());
    let mut worst = 0.0f64;
    for &x in xs {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("consistency grid needs x > 0, got {x}")));
        }
        let failure: Cell<Option<Error>> = Cell::new(None);
        let integrand = |s: f64| match model.rho(s) {
            Ok(v) => (x - s) * v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        };
        let quad = 2.0 * graded_mesh_quad(integrand, x, grading.max(1.0), panels);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let exact = model.sigma2(x)?;
        worst = worst.max((quad - exact).abs() / exact);
    }
    Ok(worst)
}

fn bad_spec(spec: &str) -> Error {
    Error::Config(format!("bad model spec '{spec}'"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',').map(|v| v.trim().parse::<f64>()).collect()
}

fn parse_kv_f64(rest: &str, key: &str) -> Result<f64> {
    let (k, v) = rest
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected {key}=<value>, got '{rest}'")))?;
    if k.trim() != key {
        return Err(Error::Config(format!("expected key '{key}', got '{k}'")));
    }
    v.trim()
        .parse::<f64>()
        .map_err(|e| Error::Config(format!("bad value in '{rest}': {e}")))
}

fn parse_two_lists(rest: &str, key_a: &str, key_b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = None;
    let mut b = None;
    for part in rest.split(';') {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad model params '{rest}'")))?;
        let list = parse_list(val)
            .map_err(|e| Error::Config(format!("bad list in model params '{rest}': {e}")))?;
        match key.trim() {
            k if k == key_a => a = Some(list),
            k if k == key_b => b = Some(list),
            other => {
                return Err(Error::Config(format!(
                    "unknown key '{other}' in model params '{rest}'"
                )))
            }
        }
    }
    match (a, b) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Config(format!(
            "model params '{rest}' need both '{key_a}=' and '{key_b}='"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn fbm_sigma2_values() {
        let m = make_fbm(1.8).unwrap();
        assert_eq!(m.sigma2(0.0).unwrap(), 0.0);
        assert_relative_eq!(m.sigma2(2.0).unwrap(), 2.0f64.powf(1.8), max_relative = 1e-15);
        assert!(m.sigma2(-1.0).is_err());
    }

    #[test]
    fn fbm_rho_closed_form() {
        let m = make_fbm(1.8).unwrap();
        assert_relative_eq!(m.rho(1.0).unwrap(), 0.72, max_relative = 1e-14);
        assert!(m.rho(0.0).is_err());
        assert!(m.rho(-0.5).is_err());
    }

    #[test]
    fn rho_finite_difference_matches_closed_form() {
        for spec in ["fbm:r=1.8", "fbm:r=1.3", "fbmix:a=1,1;beta=1.7,1.9"] {
            let m = Model::from_spec(spec).unwrap();
            for &s in &[1e-3, 0.01, 0.5, 1.0] {
                let fd = m.rho_finite_difference(s).unwrap();
                let cf = m.rho(s).unwrap();
                assert_relative_eq!(fd, cf, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn mixture_rho_is_term_wise_second_derivative() {
        let m = make_fb_mixture_discrete(&[1.0, 1.0], &[1.7, 1.9]).unwrap();
        let s: f64 = 0.37;
        let expect = 0.5 * (1.7 * 0.7 * s.powf(-0.3) + 1.9 * 0.9 * s.powf(-0.1));
        assert_relative_eq!(m.rho(s).unwrap(), expect, max_relative = 1e-14);
        assert_eq!(m.beta_index(), 1.7);
        assert_relative_eq!(m.zeta(), 0.3, max_relative = 1e-12);
    }

    #[test]
    fn single_node_mixture_agrees_with_fbm() {
        let mix = make_fb_mixture_discrete(&[1.0], &[1.8]).unwrap();
        let fbm = make_fbm(1.8).unwrap();
        for &x in &[1e-6, 1e-3, 0.1, 1.0, 7.3] {
            assert_abs_diff_eq!(
                mix.sigma2(x).unwrap(),
                fbm.sigma2(x).unwrap(),
                epsilon = 1e-12 * fbm.sigma2(x).unwrap()
            );
        }
    }

    #[test]
    fn laplace_mixture_is_shifted_exponent_mixture() {
        let m = make_fb_mixture_laplace(1.5, &[0.0, 0.2], &[1.0, 0.5]).unwrap();
        let x: f64 = 0.3;
        let expect = x.powf(1.5) + 0.5 * x.powf(1.7);
        assert_relative_eq!(m.sigma2(x).unwrap(), expect, max_relative = 1e-14);
        assert_eq!(m.beta_index(), 1.5);
    }

    #[test]
    fn constructor_validation() {
        assert!(make_fbm(2.0).is_err());
        assert!(make_fbm(0.0).is_err());
        assert!(make_concave(1.6).is_err());
        assert!(make_fb_mixture_discrete(&[1.0, -1.0], &[1.7, 1.9]).is_err());
        assert!(make_fb_mixture_discrete(&[1.0], &[2.0]).is_err());
        assert!(make_fb_mixture_measure(&[2.1], &[1.0]).is_err());
        assert!(make_fb_mixture_laplace(1.5, &[0.6], &[1.0]).is_err());
    }

    #[test]
    fn tau_examples() {
        let m = make_fbm(1.8).unwrap();
        // s = 0: numerator is 2 sigma^2(h)
        assert_relative_eq!(m.tau_h(0.37, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        // Cauchy-Schwarz bound on a grid
        for &h in &[1e-3, 0.1, 1.0] {
            for i in 0..200 {
                let s = i as f64 * 0.02;
                let t = m.tau_h(h, s).unwrap();
                assert!(t.abs() <= 1.0 + 1e-12, "tau = {t} at h={h}, s={s}");
            }
        }
        // second-difference convergence: tau_h(s) sigma^2(h) / h^2 -> rho(s)
        let h = 1e-3;
        let lhs = m.tau_h(h, 1.0).unwrap() * m.sigma2(h).unwrap() / (h * h);
        assert_relative_eq!(lhs, 0.72, max_relative = 0.01);
    }

    #[test]
    fn supported_orders_fbm18() {
        let m = make_fbm(1.8).unwrap();
        assert!(m.supports_order(4));
        assert!(!m.supports_order(5), "5 * 0.2 = 1 sits on the boundary");
        assert_eq!(m.max_supported_order(), 4);
        assert!(m.require_order(5).is_err());
    }

    #[test]
    fn brownian_rho_vanishes_and_orders_unsupported() {
        let m = make_fbm(1.0).unwrap();
        assert_eq!(m.rho(0.5).unwrap(), 0.0);
        assert!(!m.supports_order(1));
        assert!(sigma2_from_rho_consistency(&m, &[0.5], 100).is_err());
    }

    #[test]
    fn consistency_identity_fbm() {
        let m = make_fbm(1.8).unwrap();
        // 2 * 0.72 * int_0^1 (1-s) s^{-0.2} ds = 1.44 (1/0.8 - 1/1.8) = 1 = sigma2(1)
        let err = sigma2_from_rho_consistency(&m, &[1.0], 600).unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn consistency_identity_mixture() {
        let m = make_fb_mixture_discrete(&[1.0, 1.0], &[1.7, 1.9]).unwrap();
        let err = sigma2_from_rho_consistency(&m, &[0.5], 600).unwrap();
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn measure_mixture_rv_ratios_converge() {
        // Discretized mixing measure with dominant mass at the bottom node.
        let m = make_fb_mixture_measure(&[1.5, 1.7, 1.9], &[1.0, 0.1, 0.01]).unwrap();
        let (r1, r2) = m.mixture_rv_ratios(1e-5).unwrap();
        assert_relative_eq!(r1, 1.5, max_relative = 0.02);
        assert_relative_eq!(r2, 1.5 * 0.5, max_relative = 0.02);
    }

    #[test]
    fn logspec_sigma2_bracketed_by_split_bounds() {
        // sin^2(pi l u) <= (pi l u)^2 below the split and <= 1 above it;
        // sin(x) >= 2x/pi on [0, pi/2] gives the lower bound. Both sides are
        // smooth one-dimensional integrals evaluated independently.
        let m = make_log_spectral();
        let u = 1e-4f64;
        let v = m.sigma2(u).unwrap();
        let ls = LogSpectral;
        let lam_star = 1.0 / (std::f64::consts::PI * u);
        let log_part = |a: f64, b: f64| {
            // int (ln l - 1)/l dl = ln^2(l)/2 - ln(l)
            let f = |l: f64| 0.5 * l.ln() * l.ln() - l.ln();
            f(b) - f(a)
        };
        let upper = 8.0 * (std::f64::consts::PI * u).powi(2) * log_part(std::f64::consts::E, lam_star)
            + 8.0 * ls.tail_mass(lam_star);
        let lower = 32.0 * u * u * log_part(std::f64::consts::E, 1.0 / (2.0 * u));
        assert!(v <= upper * (1.0 + 1e-10), "v = {v}, upper = {upper}");
        assert!(v >= lower * (1.0 - 1e-10), "v = {v}, lower = {lower}");
        // and the u^2 ln^2(1/u) scale bracket derived from those bounds
        let scale = u * u * u.recip().ln().powi(2);
        assert!(v / scale > 1.0 && v / scale < 30.0, "ratio {}", v / scale);
    }

    #[test]
    fn logspec_generic_spectral_route_agrees() {
        let m = make_log_spectral();
        let quad = SpectralQuadSpec::default();
        for &u in &[1e-3, 1e-2, 0.1] {
            let generic = sigma2_from_spectral(
                |l| m.spectral_density(l).unwrap(),
                logspectral::SUPPORT_LO,
                u,
                &quad,
            )
            .unwrap();
            let cached = m.sigma2(u).unwrap();
            assert_relative_eq!(generic, cached, max_relative = 1e-4);
        }
    }

    #[test]
    fn spectral_route_zero_is_exact() {
        let q = SpectralQuadSpec::default();
        assert_eq!(sigma2_from_spectral(|_| 1.0, 1.0, 0.0, &q).unwrap(), 0.0);
    }

    #[test]
    fn spec_parsing_round_trip() {
        for spec in [
            "fbm:r=1.8",
            "concave:r=1.0",
            "fbmix:a=1,1;beta=1.7,1.9",
            "fbmix-measure:s=1.5,1.7,1.9;w=1,0.1,0.01",
            "fbmix-laplace:beta=1.5;v=0,0.2;w=1,0.5",
            "logspec",
        ] {
            let m = Model::from_spec(spec).unwrap();
            let again = Model::from_spec(m.name()).unwrap();
            assert_eq!(m.name(), again.name());
        }
        assert!(Model::from_spec("fbm:r=abc").is_err());
        assert!(Model::from_spec("mystery").is_err());
    }

    #[test]
    fn logspec_domain_is_calibrated() {
        let m = make_log_spectral();
        assert!(m.sigma2(3.9).is_ok());
        assert!(m.sigma2(65.0).is_err());
    }
}
