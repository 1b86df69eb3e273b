//! Normalized Hermite polynomials, Wick powers of Gaussian values, and
//! Hermite coefficient extraction by Gauss–Hermite quadrature.
//!
//! The normalization is fixed by E[H_k(eta)^2] = 1 for eta ~ N(0,1), i.e.
//! H_k = He_k / sqrt(k!) with He the monic probabilists' family.

use crate::error::{Error, Result};

/// Tolerance below which a Hermite coefficient counts as zero when
/// determining the rank. Far above 64-node quadrature error, far below any
/// genuine coefficient in the built-in corpus.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Normalized probabilists' Hermite polynomial H_k(x) with E[H_k(eta)^2] = 1.
///
/// Uses the renormalized three-term recurrence
/// H_{k+1} = (x H_k - sqrt(k) H_{k-1}) / sqrt(k+1).
pub fn hermite(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        _ => {
            let mut hm = 1.0; // H_0
            let mut h = x; // H_1
            for j in 1..k {
                let jf = j as f64;
                let next = (x * h - jf.sqrt() * hm) / (jf + 1.0).sqrt();
                hm = h;
                h = next;
            }
            h
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

/// k-th order Wick power :x^k: of a value drawn from a mean-zero Gaussian
/// with variance v, evaluated through the Hermite route
/// :x^k: = v^{k/2} sqrt(k!) H_k(x / sqrt(v)).
pub fn wick_power(x: f64, v: f64, k: usize) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("wick_power requires v > 0, got {v}")));
    }
    let s = v.sqrt();
    Ok(s.powi(k as i32) * factorial(k).sqrt() * hermite(k, x / s))
}

/// Reference evaluation of :x^k: by the alternating-sum definition
/// sum_j (-1)^j C(k, 2j) E[X^{2j}] x^{k-2j} with E[X^{2j}] = (2j-1)!! v^j.
///
/// Kept as an independent route; it must agree with [`wick_power`] to 1e-10
/// relative for k <= 10.
pub fn wick_power_alternating(x: f64, v: f64, k: usize) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::Domain(format!("wick_power requires v > 0, got {v}")));
    }
    let mut total = 0.0;
    for j in 0..=(k / 2) {
        let mut binom = 1.0;
        for i in 0..(2 * j) {
            binom *= (k - i) as f64 / (i + 1) as f64;
        }
        let double_fact = (1..=j).fold(1.0, |acc, i| acc * (2.0 * i as f64 - 1.0));
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * double_fact * v.powi(j as i32) * x.powi((k - 2 * j) as i32);
    }
    Ok(total)
}

/// Polynomial coefficients of the Wick power :x^k: at fixed variance v, in
/// increasing degree. Lets hot loops evaluate Wick powers by Horner's rule.
pub fn wick_poly_coeffs(v: f64, k: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; k + 1];
    for j in 0..=(k / 2) {
        let mut binom = 1.0;
        for i in 0..(2 * j) {
            binom *= (k - i) as f64 / (i + 1) as f64;
        }
        let double_fact = (1..=j).fold(1.0, |acc, i| acc * (2.0 * i as f64 - 1.0));
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[k - 2 * j] = sign * binom * double_fact * v.powi(j as i32);
    }
    coeffs
}

/// Evaluates a dense polynomial (coefficients in increasing degree).
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Gauss–Hermite rule for the physicists' weight e^{-t^2} on (-inf, inf).
///
/// Nodes are found by Newton iteration on the orthonormal recurrence
/// (no table dependency); weights are 2 / (H'_n(t_i))^2.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(
                "Gauss-Hermite rule needs at least 2 nodes".into(),
            ));
        }
        if n > 600 {
            // exp(-z^2/2) underflows at the largest root beyond this range
            return Err(Error::InvalidParameter(format!(
                "Gauss-Hermite rule limited to 600 nodes, got {n}"
            )));
        }
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0f64;
        // Evaluates the weighted orthonormal recurrence psi_j = h_j e^{-z^2/2},
        // which stays bounded for large n where the bare polynomials overflow.
        let eval = |z: f64| {
            let mut p1 = pim4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64 + 1.0;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            (p1, p2)
        };
        for i in 0..m {
            // Initial guesses, largest root first.
            z = match i {
                0 => {
                    let a = (2.0 * n as f64 + 1.0).sqrt();
                    a - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0)
                }
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut converged = false;
            for _ in 0..200 {
                let (p1, p2) = eval(z);
                // psi_n'(z) = sqrt(2n) psi_{n-1}(z) - z psi_n(z)
                let pp = (2.0 * n as f64).sqrt() * p2 - z * p1;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-14 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::QuadratureInstability(format!(
                    "Gauss-Hermite Newton iteration failed for n = {n}, root {i}"
                )));
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            // w = 2 / (h_n'(z))^2 = e^{-z^2} / (n psi_{n-1}^2(z))
            let (_, p2) = eval(z);
            let t = (-0.5 * z * z).exp() / p2;
            weights[i] = t * t / n as f64;
            weights[n - 1 - i] = weights[i];
        }
        let rule = GaussHermite { nodes, weights };
        let sum: f64 = rule.weights.iter().sum();
        if (sum - std::f64::consts::PI.sqrt()).abs() > 1e-12 {
            return Err(Error::QuadratureInstability(format!(
                "Gauss-Hermite weight sum {sum} deviates from sqrt(pi) beyond 1e-12"
            )));
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// E[f(eta)] for eta ~ N(0,1): change of variables x = sqrt(2) t maps the
    /// e^{-t^2} weight onto standard Gaussian measure with factor 1/sqrt(pi).
    pub fn gaussian_expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut sum = 0.0;
        for (t, w) in self.nodes.iter().zip(self.weights.iter()) {
            sum += w * f(sqrt2 * t);
        }
        sum * inv_sqrt_pi
    }
}

/// Truncated Hermite coefficient sequence of a test function.
#[derive(Debug, Clone)]
pub struct HermiteCoeffs {
    /// a_0 .. a_J with a_k = E[H_k(eta) f(eta)].
    pub a: Vec<f64>,
    /// Hermite rank: smallest k >= 1 with |a_k| > RANK_TOLERANCE, if any.
    pub k0: Option<usize>,
    /// E[f(eta)^2] computed by the same rule.
    pub f_norm_sq: f64,
    /// f_norm_sq - sum of a_k^2 over k <= J.
    pub tail_mass: f64,
    /// Spec string of the expanded function.
    pub f_spec: String,
}

impl HermiteCoeffs {
    pub fn truncation(&self) -> usize {
        self.a.len() - 1
    }
}

/// Computes a_0..a_J of `f` by Gauss–Hermite quadrature with `n_quad` nodes.
pub fn hermite_coeffs(f: &TestFunction, j_max: usize, n_quad: usize) -> Result<HermiteCoeffs> {
    if n_quad < 2 * j_max + 2 {
        return Err(Error::InvalidParameter(format!(
            "n_quad = {n_quad} is below 2*J + 2 = {}",
            2 * j_max + 2
        )));
    }
    let rule = GaussHermite::new(n_quad)?;
    let mut a = Vec::with_capacity(j_max + 1);
    for k in 0..=j_max {
        a.push(rule.gaussian_expectation(|x| f.eval(x) * hermite(k, x)));
    }
    let f_norm_sq = rule.gaussian_expectation(|x| {
        let y = f.eval(x);
        y * y
    });
    let sum_sq: f64 = a.iter().map(|c| c * c).sum();
    let k0 = a
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, c)| c.abs() > RANK_TOLERANCE)
        .map(|(k, _)| k);
    Ok(HermiteCoeffs {
        a,
        k0,
        f_norm_sq,
        tail_mass: f_norm_sq - sum_sq,
        f_spec: f.spec_string(),
    })
}

/// The Hermite rank of an expanded function; errors when every coefficient
/// with k >= 1 sits below tolerance up to the truncation.
pub fn hermite_rank(coeffs: &HermiteCoeffs) -> Result<usize> {
    coeffs.k0.ok_or(Error::NoRank {
        truncation: coeffs.truncation(),
        tol: RANK_TOLERANCE,
    })
}

/// Built-in corpus of test functions, addressable by string spec:
/// `identity`, `abs`, `sign`, `hermite:k=3`, `poly:1,0,2`, `indicator:c=0.5`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Identity,
    Abs,
    Sign,
    /// Dense polynomial, coefficients in increasing degree.
    Poly(Vec<f64>),
    Hermite(usize),
    /// x -> 1 if x > c else 0.
    Indicator(f64),
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Identity => x,
            TestFunction::Abs => x.abs(),
            TestFunction::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            TestFunction::Poly(c) => poly_eval(c, x),
            TestFunction::Hermite(k) => hermite(*k, x),
            TestFunction::Indicator(c) => {
                if x > *c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether f(-x) = f(x) identically.
    pub fn is_symmetric(&self) -> bool {
        match self {
            TestFunction::Abs => true,
            TestFunction::Identity | TestFunction::Sign | TestFunction::Indicator(_) => false,
            TestFunction::Poly(c) => c.iter().skip(1).step_by(2).all(|&v| v == 0.0),
            TestFunction::Hermite(k) => k % 2 == 0,
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            TestFunction::Identity => "identity".into(),
            TestFunction::Abs => "abs".into(),
            TestFunction::Sign => "sign".into(),
            TestFunction::Poly(c) => {
                let list: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
                format!("poly:{}", list.join(","))
            }
            TestFunction::Hermite(k) => format!("hermite:k={k}"),
            TestFunction::Indicator(c) => format!("indicator:c={c}"),
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "identity" | "id" => return Ok(TestFunction::Identity),
            "abs" => return Ok(TestFunction::Abs),
            "sign" => return Ok(TestFunction::Sign),
            _ => {}
        }
        if let Some(rest) = spec.strip_prefix("hermite:") {
            let k = rest
                .strip_prefix("k=")
                .ok_or_else(|| Error::Config(format!("bad hermite spec '{spec}'")))?
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad hermite spec '{spec}': {e}")))?;
            return Ok(TestFunction::Hermite(k));
        }
        if let Some(rest) = spec.strip_prefix("poly:") {
            let coeffs: std::result::Result<Vec<f64>, _> =
                rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let coeffs =
                coeffs.map_err(|e| Error::Config(format!("bad poly spec '{spec}': {e}")))?;
            if coeffs.is_empty() {
                return Err(Error::Config(format!("empty poly spec '{spec}'")));
            }
            return Ok(TestFunction::Poly(coeffs));
        }
        if let Some(rest) = spec.strip_prefix("indicator:") {
            let c = rest
                .strip_prefix("c=")
                .ok_or_else(|| Error::Config(format!("bad indicator spec '{spec}'")))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad indicator spec '{spec}': {e}")))?;
            return Ok(TestFunction::Indicator(c));
        }
        Err(Error::Config(format!("unknown test function spec '{spec}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite(0, 3.7), 1.0);
        assert_eq!(hermite(1, -2.5), -2.5);
        // He_2(x) = x^2 - 1 normalized by sqrt(2)
        assert_relative_eq!(hermite(2, 0.0), -1.0 / 2.0f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn orthonormality_under_64_nodes() {
        let rule = GaussHermite::new(64).unwrap();
        let mut worst = 0.0f64;
        for j in 0..=20usize {
            for k in 0..=20usize {
                let v = rule.gaussian_expectation(|x| hermite(j, x) * hermite(k, x));
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        assert!(worst <= 1e-10, "worst orthonormality defect {worst}");
    }

    #[test]
    fn wick_examples() {
        assert_eq!(wick_power(4.2, 1.3, 0).unwrap(), 1.0);
        assert_relative_eq!(wick_power(4.2, 1.3, 1).unwrap(), 4.2, max_relative = 1e-14);
        // k = 2: x^2 - v
        assert_relative_eq!(
            wick_power(1.5, 0.7, 2).unwrap(),
            1.5 * 1.5 - 0.7,
            max_relative = 1e-13
        );
        // k = 3, v = 2, x = 1: x^3 - 3 v x = -5
        assert_relative_eq!(wick_power(1.0, 2.0, 3).unwrap(), -5.0, max_relative = 1e-13);
        assert!(wick_power(1.0, 0.0, 2).is_err());
        assert!(wick_power(1.0, -1.0, 2).is_err());
    }

    proptest! {
        #[test]
        fn wick_routes_agree(
            x in -10.0f64..10.0,
            log_v in -4.0f64..4.0,
            k in 0usize..=10,
        ) {
            let v = 10.0f64.powf(log_v);
            let a = wick_power(x, v, k).unwrap();
            let b = wick_power_alternating(x, v, k).unwrap();
            let scale = a.abs().max(b.abs()).max(v.powf(k as f64 / 2.0));
            prop_assert!((a - b).abs() <= 1e-10 * scale,
                "k={} x={} v={}: {} vs {}", k, x, v, a, b);
        }

        #[test]
        fn wick_poly_route_matches(x in -8.0f64..8.0, k in 0usize..=8) {
            let v = 1.7;
            let coeffs = wick_poly_coeffs(v, k);
            let a = poly_eval(&coeffs, x);
            let b = wick_power(x, v, k).unwrap();
            let scale = a.abs().max(b.abs()).max(1.0);
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn coeffs_of_identity() {
        let c = hermite_coeffs(&TestFunction::Identity, 8, 64).unwrap();
        assert_abs_diff_eq!(c.a[1], 1.0, epsilon = 1e-12);
        for (k, v) in c.a.iter().enumerate() {
            if k != 1 {
                assert!(v.abs() < 1e-12, "a_{k} = {v}");
            }
        }
        assert_eq!(c.k0, Some(1));
        assert_abs_diff_eq!(c.tail_mass, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn coeffs_of_abs() {
        // a_0 = sqrt(2/pi), a_2 = (E|eta|^3 - E|eta|)/sqrt(2) = 1/sqrt(pi).
        // |x| has a kink, so Gauss-Hermite converges slowly; a high-order rule
        // serves as the oracle and fixes the achievable tolerance.
        let c = hermite_coeffs(&TestFunction::Abs, 8, 400).unwrap();
        let a0 = (2.0 / std::f64::consts::PI).sqrt();
        let a2 = 1.0 / std::f64::consts::PI.sqrt();
        // the kink at zero slows Gauss-Hermite to O(1/n)
        assert_abs_diff_eq!(c.a[0], a0, epsilon = 2e-3);
        assert_abs_diff_eq!(c.a[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.a[2], a2, epsilon = 2e-3);
        assert_eq!(c.k0, Some(2));
        assert_eq!(hermite_rank(&c).unwrap(), 2);
    }

    #[test]
    fn symmetric_functions_have_zero_odd_coefficients() {
        for f in [
            TestFunction::Abs,
            TestFunction::Poly(vec![1.0, 0.0, 2.0]),
            TestFunction::Hermite(4),
        ] {
            let c = hermite_coeffs(&f, 9, 64).unwrap();
            for k in (1..=9).step_by(2) {
                assert!(c.a[k].abs() < 1e-12, "{f:?} a_{k} = {}", c.a[k]);
            }
        }
    }

    #[test]
    fn rank_of_hermite_is_its_order() {
        let c = hermite_coeffs(&TestFunction::Hermite(3), 8, 64).unwrap();
        assert_eq!(hermite_rank(&c).unwrap(), 3);
        assert_abs_diff_eq!(c.a[3], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_function_has_no_rank() {
        let c = hermite_coeffs(&TestFunction::Poly(vec![2.5]), 6, 64).unwrap();
        assert!(c.k0.is_none());
        assert!(matches!(hermite_rank(&c), Err(Error::NoRank { .. })));
    }

    #[test]
    fn parseval_with_tail() {
        // Bessel: tail mass stays nonnegative, and a_k^2 sums to Ef^2 as J grows.
        let c = hermite_coeffs(&TestFunction::Poly(vec![0.0, 1.0, 0.0, 1.0]), 12, 64).unwrap();
        assert!(c.tail_mass >= -1e-10);
        assert_abs_diff_eq!(c.tail_mass, 0.0, epsilon = 1e-9);
        let sum_sq: f64 = c.a.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(sum_sq + c.tail_mass, c.f_norm_sq, epsilon = 1e-10);
    }

    #[test]
    fn n_quad_precondition() {
        assert!(hermite_coeffs(&TestFunction::Abs, 10, 20).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for spec in ["abs", "sign", "identity", "hermite:k=3", "poly:1,0,2", "indicator:c=0.5"] {
            let f = TestFunction::parse(spec).unwrap();
            let again = TestFunction::parse(&f.spec_string()).unwrap();
            assert_eq!(f, again);
        }
        assert!(TestFunction::parse("nope").is_err());
    }

    #[test]
    fn symmetry_flags() {
        assert!(TestFunction::Abs.is_symmetric());
        assert!(TestFunction::Hermite(2).is_symmetric());
        assert!(!TestFunction::Hermite(3).is_symmetric());
        assert!(TestFunction::Poly(vec![1.0, 0.0, 2.0]).is_symmetric());
        assert!(!TestFunction::Poly(vec![0.0, 1.0, 0.0, 1.0]).is_symmetric());
        assert!(!TestFunction::Sign.is_symmetric());
    }
}
