//! One-dimensional quadrature building blocks: adaptive Gauss–Kronrod,
//! fixed Gauss–Legendre panels, and graded meshes for endpoint singularities.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// 7-point Gauss / 15-point Kronrod pair (QUADPACK QK15 constants).
/// Abscissae of the Kronrod rule on [-1, 1], positive half in decreasing order.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_2,
    0.949_107_912_342_758_524_5,
    0.864_864_423_359_769_072_8,
    0.741_531_185_599_394_439_9,
    0.586_087_235_467_691_130_3,
    0.405_845_151_377_397_166_9,
    0.207_784_955_007_898_467_6,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_964,
    0.063_092_092_629_978_553_29,
    0.104_790_010_322_250_183_84,
    0.140_653_259_715_525_918_75,
    0.169_004_726_639_267_902_83,
    0.190_350_578_064_785_409_91,
    0.204_432_940_075_298_892_07,
    0.209_482_141_084_727_828_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_27,
    0.279_705_391_489_276_667_9,
    0.381_830_050_505_118_944_95,
    0.417_959_183_673_469_387_76,
];

/// Result of a quadrature pass: value and an error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadValue {
    pub value: f64,
    pub abs_err: f64,
}

/// One Gauss–Kronrod 15 evaluation over [a, b]; returns (kronrod, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut result_k = fc * WGK[7];
    let mut result_g = fc * WG[3];

    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        result_k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            result_g += WG[j / 2] * (f1 + f2);
        }
    }
    let value = result_k * half;
    let err = ((result_k - result_g) * half).abs();
    (value, err)
}

/// Adaptive Gauss–Kronrod quadrature of `f` over [a, b].
///
/// Splits the worst interval until the summed error estimate meets
/// `max(abs_tol, rel_tol * |value|)` or `max_intervals` is exceeded.
pub fn adaptive_gk15<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadValue> {
    if a == b {
        return Ok(QuadValue {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let (v0, e0) = gk15(&f, a, b);
    let mut intervals: Vec<(f64, f64, f64, f64)> = vec![(a, b, v0, e0)];

    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target {
            return Ok(QuadValue {
                value: total,
                abs_err: err,
            });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureNonConvergence {
                achieved: err,
                target,
            });
        }
        // Split the interval with the largest error estimate.
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (ia, ib, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (ia + ib);
        let (vl, el) = gk15(&f, ia, mid);
        let (vr, er) = gk15(&f, mid, ib);
        intervals.push((ia, mid, vl, el));
        intervals.push((mid, ib, vr, er));
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// Fixed 16-point Gauss–Legendre integral of `f` over [a, b].
pub fn gl16_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl16();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        sum += w * f(c + h * x);
    }
    sum * h
}

/// Fixed 32-point Gauss–Legendre integral of `f` over [a, b].
pub fn gl32_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl32();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        sum += w * f(c + h * x);
    }
    sum * h
}

/// Integrates `f` over (0, c] where `f` may blow up like s^{-alpha} at 0.
///
/// Mesh points are c * (i/n)^grading, so panel widths shrink toward the
/// singularity; each panel uses 16-point Gauss–Legendre, which never
/// evaluates at the panel ends.
pub fn graded_mesh_quad<F: Fn(f64) -> f64>(f: F, c: f64, grading: f64, panels: usize) -> f64 {
    assert!(c > 0.0 && grading >= 1.0 && panels >= 1);
    let mut total = 0.0;
    let mut lo = 0.0;
    for i in 1..=panels {
        let hi = c * ((i as f64) / (panels as f64)).powf(grading);
        total += gl16_panel(&f, lo, hi);
        lo = hi;
    }
    total
}
