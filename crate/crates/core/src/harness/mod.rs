//! Experiment orchestration: seeded parallel Monte Carlo over replicate
//! paths, L2 estimation with jackknife errors, and statistical verdicts for
//! the expansion, rank, rate, normality, and variance experiments.

pub mod config;
pub mod report;
pub mod stats;

pub use config::{ExperimentConfig, Thresholds};
pub use report::*;

use crate::error::{Error, Result};
use crate::hermite::{
    hermite_coeffs, hermite_rank, poly_eval, wick_poly_coeffs, HermiteCoeffs, RANK_TOLERANCE,
};
use crate::models::Model;
use crate::pathgen::{derive_replicate_seed, PathGenerator, PathSample};
use rayon::prelude::*;
use stats::{l2_with_jackknife_se, mean_var, monotone_decreasing_with_slack, shape_stats, slope_fit};

/// Runs `f` once per replicate, in parallel, collecting results in replicate
/// order so reductions are deterministic regardless of scheduling.
fn map_replicates<T, F>(workers: usize, replicates: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let run = || {
        (0..replicates)
            .into_par_iter()
            .map(&f)
            .collect::<Vec<Result<T>>>()
    };
    let results = if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(run)
    };
    results.into_iter().collect()
}

/// Window step indices on the configured grid.
fn window_indices(cfg: &ExperimentConfig) -> (usize, usize) {
    let delta = cfg.delta();
    (
        (cfg.window.0 / delta).round() as usize,
        (cfg.window.1 / delta).round() as usize,
    )
}

/// Left-endpoint Riemann sum of f(increment / sigma_h) over the window.
fn functional_sum(
    path: &PathSample,
    f: &crate::hermite::TestFunction,
    sigma_h: f64,
    m: usize,
    ia: usize,
    ib: usize,
) -> f64 {
    let mut sum = 0.0;
    for i in ia..ib {
        sum += f.eval(path.increment(i, m) / sigma_h);
    }
    sum * path.grid.delta()
}

/// Riemann sum of the Wick power with precomputed polynomial coefficients.
fn wick_sum(path: &PathSample, coeffs: &[f64], d: f64, m: usize, ia: usize, ib: usize) -> f64 {
    let mut sum = 0.0;
    for i in ia..ib {
        sum += poly_eval(coeffs, path.increment(i, m) / d);
    }
    sum * path.grid.delta()
}

/// Chaos references at the finest scale for orders 0..=j_max, skipping
/// orders whose coefficient is numerically zero. Order 1 is exact.
fn chaos_refs(
    path: &PathSample,
    model: &Model,
    coeffs: &HermiteCoeffs,
    j_max: usize,
    ia: usize,
    ib: usize,
    c_len: f64,
) -> Result<Vec<f64>> {
    let delta = path.grid.delta();
    let mut refs = vec![0.0; j_max + 1];
    for (j, r) in refs.iter_mut().enumerate() {
        if j > 0 && coeffs.a[j].abs() <= RANK_TOLERANCE {
            continue;
        }
        *r = match j {
            0 => c_len,
            1 => path.values[ib] - path.values[ia],
            _ => {
                let v = model.sigma2(delta)? / (delta * delta);
                wick_sum(path, &wick_poly_coeffs(v, j), delta, 1, ia, ib)
            }
        };
    }
    Ok(refs)
}

fn bottom_decade_filter(hs: &[f64]) -> Vec<usize> {
    let h_min = hs.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..hs.len())
        .filter(|&i| hs[i] <= 10.0 * h_min * (1.0 + 1e-12))
        .collect()
}

/// Theorem-style expansion experiment: per replicate and per h, the L2 gap
/// between F_h and the truncated chaos sum, normalized by (h/sigma(h))^j0.
pub fn run_expansion(cfg: &ExperimentConfig) -> Result<ExpansionReport> {
    let (model, f) = cfg.validate()?;
    let coeffs = hermite_coeffs(&f, cfg.truncation.max(cfg.j0), cfg.n_quad)?;
    let grid = cfg.grid()?;
    let generator = PathGenerator::new(&model, grid)?;
    let (ia, ib) = window_indices(cfg);
    let c_len = cfg.window.1 - cfg.window.0;
    let hs_steps = cfg.h_steps_descending();
    let delta = cfg.delta();
    let j0 = cfg.j0;

    let mut sig_h = Vec::with_capacity(hs_steps.len());
    let mut ratio = Vec::with_capacity(hs_steps.len());
    for &m in &hs_steps {
        let h = m as f64 * delta;
        let s = model.sigma(h)?;
        sig_h.push(s);
        ratio.push(h / s);
    }

    let per_rep: Vec<Vec<(f64, f64)>> =
        map_replicates(cfg.workers, cfg.replicates, |r| {
            let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
            let refs = chaos_refs(&path, &model, &coeffs, j0, ia, ib, c_len)?;
            let mut out = Vec::with_capacity(hs_steps.len());
            for (k, &m) in hs_steps.iter().enumerate() {
                let fh = functional_sum(&path, &f, sig_h[k], m, ia, ib);
                let mut s = 0.0;
                let mut factorial = 1.0;
                for j in 0..=j0 {
                    if j > 0 {
                        factorial *= j as f64;
                    }
                    s += ratio[k].powi(j as i32) * coeffs.a[j] / factorial.sqrt() * refs[j];
                }
                out.push((fh - s, fh));
            }
            Ok(out)
        })?;

    let mut rows = Vec::with_capacity(hs_steps.len());
    for (k, &m) in hs_steps.iter().enumerate() {
        let h = m as f64 * delta;
        let ds: Vec<f64> = per_rep.iter().map(|row| row[k].0).collect();
        let fs: Vec<f64> = per_rep.iter().map(|row| row[k].1).collect();
        let (l2, se) = l2_with_jackknife_se(&ds);
        let denom = ratio[k].powi(j0 as i32);
        let lhs_l2 = (fs.iter().map(|v| v * v).sum::<f64>() / fs.len() as f64).sqrt();
        rows.push(ExpansionRow {
            h,
            h_over_sigma: ratio[k],
            l2_error: l2,
            l2_se: se,
            normalized: l2 / denom,
            normalized_se: se / denom,
            lhs_l2,
        });
    }

    let lx: Vec<f64> = rows.iter().map(|r| r.h_over_sigma.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.l2_error.max(1e-300).ln()).collect();
    let slope = slope_fit(&lx, &ly);

    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let bottom = bottom_decade_filter(&hs);
    let vals: Vec<f64> = bottom.iter().map(|&i| rows[i].normalized).collect();
    let ses: Vec<f64> = bottom.iter().map(|&i| rows[i].normalized_se).collect();
    let monotone = monotone_decreasing_with_slack(&vals, &ses, cfg.thresholds.monotone_se_slack);

    let verdicts = vec![VerdictRow::new(
        "normalized_error_monotone_bottom_decade",
        monotone,
        *vals.last().unwrap(),
        cfg.thresholds.monotone_se_slack,
    )];

    Ok(ExpansionReport {
        rows,
        slope,
        verdicts,
    })
}

/// Rank-normalized convergence: (F_h - a_0 (b-a)) / (h/sigma(h))^{k0}
/// against (a_{k0}/sqrt(k0!)) times the chaos reference.
pub fn run_corollary_rank(cfg: &ExperimentConfig) -> Result<RankReport> {
    let (model, f) = cfg.validate()?;
    let coeffs = hermite_coeffs(&f, cfg.truncation, cfg.n_quad)?;
    let k0 = hermite_rank(&coeffs)?;
    let delta = cfg.delta();
    let hs_steps = cfg.h_steps_descending();

    // Numerical check of the growth condition: (h^2/sigma^2(h))^{k0} / h
    // must blow up along the grid as h decreases.
    let mut q_prev = f64::NEG_INFINITY;
    let mut failing: Vec<f64> = Vec::new();
    for &m in &hs_steps {
        let h = m as f64 * delta;
        let q = (h * h / model.sigma2(h)?).powi(k0 as i32) / h;
        if q <= q_prev {
            failing.push(h);
        }
        q_prev = q;
    }
    if !failing.is_empty() {
        let list: Vec<String> = failing.iter().map(|h| format!("{h:.3e}")).collect();
        return Err(Error::Precondition(format!(
            "growth condition h = o((h^2/sigma^2(h))^k0) fails on the grid at h in [{}]",
            list.join(", ")
        )));
    }
    model.require_order(k0)?;

    let generator = PathGenerator::new(&model, cfg.grid()?)?;
    let (ia, ib) = window_indices(cfg);
    let c_len = cfg.window.1 - cfg.window.0;
    let a0 = coeffs.a[0];
    let k0_fact = (1..=k0).fold(1.0, |acc, j| acc * j as f64);
    let tcoef = coeffs.a[k0] / k0_fact.sqrt();
    let csm = crate::functionals::chaos_second_moment(&model, k0, cfg.window.0, cfg.window.1)?;
    let target_norm_exact = tcoef.abs() * csm.sqrt();

    let mut sig_h = Vec::with_capacity(hs_steps.len());
    for &m in &hs_steps {
        sig_h.push(model.sigma(m as f64 * delta)?);
    }

    let per_rep: Vec<(Vec<f64>, f64)> = map_replicates(cfg.workers, cfg.replicates, |r| {
        let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
        let target = tcoef
            * match k0 {
                1 => path.values[ib] - path.values[ia],
                _ => {
                    let v = model.sigma2(delta)? / (delta * delta);
                    wick_sum(&path, &wick_poly_coeffs(v, k0), delta, 1, ia, ib)
                }
            };
        let mut ds = Vec::with_capacity(hs_steps.len());
        for (k, &m) in hs_steps.iter().enumerate() {
            let h = m as f64 * delta;
            let fh = functional_sum(&path, &f, sig_h[k], m, ia, ib);
            let lhs = (fh - a0 * c_len) / (h / sig_h[k]).powi(k0 as i32);
            ds.push(lhs - target);
        }
        Ok((ds, target))
    })?;

    let targets: Vec<f64> = per_rep.iter().map(|(_, t)| *t).collect();
    let target_norm_mc =
        (targets.iter().map(|t| t * t).sum::<f64>() / targets.len() as f64).sqrt();

    let mut rows = Vec::with_capacity(hs_steps.len());
    for (k, &m) in hs_steps.iter().enumerate() {
        let ds: Vec<f64> = per_rep.iter().map(|(d, _)| d[k]).collect();
        let (l2, se) = l2_with_jackknife_se(&ds);
        rows.push(RankRow {
            h: m as f64 * delta,
            distance: l2,
            se,
            target_norm_mc,
        });
    }

    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let bottom = bottom_decade_filter(&hs);
    let vals: Vec<f64> = bottom.iter().map(|&i| rows[i].distance).collect();
    let ses: Vec<f64> = bottom.iter().map(|&i| rows[i].se).collect();
    let rel_at_min = rows.last().unwrap().distance / target_norm_exact;
    let verdicts = vec![
        VerdictRow::new(
            "distance_small_at_hmin",
            rel_at_min <= cfg.thresholds.rel_gap,
            rel_at_min,
            cfg.thresholds.rel_gap,
        ),
        VerdictRow::new(
            "distance_monotone_bottom_decade",
            monotone_decreasing_with_slack(&vals, &ses, cfg.thresholds.monotone_se_slack),
            *vals.last().unwrap(),
            cfg.thresholds.monotone_se_slack,
        ),
    ];

    Ok(RankReport {
        k0,
        rows,
        target_norm_exact,
        verdicts,
    })
}

/// Monte Carlo decay of || W_j(h) - reference_j || with fitted slopes
/// against the bound exponent (1 - j zeta)/2.
pub fn run_wick_rate(cfg: &ExperimentConfig) -> Result<WickRateReport> {
    let (model, _) = cfg.validate()?;
    for &j in &cfg.orders {
        if j > 0 {
            model.require_order(j)?;
        }
    }
    let generator = PathGenerator::new(&model, cfg.grid()?)?;
    let (ia, ib) = window_indices(cfg);
    let delta = cfg.delta();
    let hs_steps = cfg.h_steps_descending();
    let orders = cfg.orders.clone();

    let per_rep: Vec<Vec<Vec<f64>>> = map_replicates(cfg.workers, cfg.replicates, |r| {
        let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
        let mut per_order = Vec::with_capacity(orders.len());
        for &j in &orders {
            if j == 0 {
                per_order.push(vec![0.0; hs_steps.len()]);
                continue;
            }
            let reference = if j == 1 {
                path.values[ib] - path.values[ia]
            } else {
                let v = model.sigma2(delta)? / (delta * delta);
                wick_sum(&path, &wick_poly_coeffs(v, j), delta, 1, ia, ib)
            };
            let mut ds = Vec::with_capacity(hs_steps.len());
            for &m in &hs_steps {
                let h = m as f64 * delta;
                let vh = model.sigma2(h)? / (h * h);
                let w = wick_sum(&path, &wick_poly_coeffs(vh, j), h, m, ia, ib);
                ds.push(w - reference);
            }
            per_order.push(ds);
        }
        Ok(per_order)
    })?;

    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut verdicts = Vec::new();
    for (oi, &j) in orders.iter().enumerate() {
        let mut l2s = Vec::with_capacity(hs_steps.len());
        for (k, &m) in hs_steps.iter().enumerate() {
            let ds: Vec<f64> = per_rep.iter().map(|rep| rep[oi][k]).collect();
            let (l2, se) = l2_with_jackknife_se(&ds);
            rows.push(RateRow {
                order: j,
                h: m as f64 * delta,
                l2_distance: l2,
                se,
            });
            l2s.push(l2);
        }
        let bound_exponent = (1.0 - j as f64 * model.zeta()) / 2.0;
        if j == 0 {
            slopes.push((j, None, bound_exponent));
            verdicts.push(VerdictRow::new(
                "order_0_identically_zero",
                l2s.iter().all(|&v| v == 0.0),
                l2s.iter().cloned().fold(0.0, f64::max),
                0.0,
            ));
            continue;
        }
        let lx: Vec<f64> = hs_steps.iter().map(|&m| (m as f64 * delta).ln()).collect();
        let ly: Vec<f64> = l2s.iter().map(|v| v.max(1e-300).ln()).collect();
        let fit = slope_fit(&lx, &ly);
        let floor = bound_exponent - cfg.thresholds.slope_margin;
        verdicts.push(VerdictRow::new(
            &format!("order_{j}_slope_at_least_bound"),
            fit.slope >= floor,
            fit.slope,
            floor,
        ));
        slopes.push((j, Some(fit), bound_exponent));
    }

    Ok(WickRateReport {
        rows,
        slopes,
        verdicts,
    })
}

/// Normality of the standardized statistic (F_h - (b-a) a_0) / Phi_hat(h)
/// via sample skewness and excess kurtosis at the smallest h. Runs outside
/// the stated hypothesis range too (contrast mode), reporting the range flag.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<CltReport> {
    let (model, f) = cfg.validate()?;
    if !f.is_symmetric() {
        return Err(Error::Config(format!(
            "the normal-limit experiment needs a symmetric f, got {}",
            f.spec_string()
        )));
    }
    let coeffs = hermite_coeffs(&f, cfg.truncation, cfg.n_quad)?;
    let a0 = coeffs.a[0];
    let hypothesis_in_range = model.power_law_exponent().is_some_and(|r| r <= 1.5);

    let generator = PathGenerator::new(&model, cfg.grid()?)?;
    let (ia, ib) = window_indices(cfg);
    let c_len = cfg.window.1 - cfg.window.0;
    let delta = cfg.delta();
    let hs_steps = cfg.h_steps_descending();
    let mut sig_h = Vec::with_capacity(hs_steps.len());
    for &m in &hs_steps {
        sig_h.push(model.sigma(m as f64 * delta)?);
    }

    let per_rep: Vec<Vec<f64>> = map_replicates(cfg.workers, cfg.replicates, |r| {
        let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
        Ok(hs_steps
            .iter()
            .enumerate()
            .map(|(k, &m)| functional_sum(&path, &f, sig_h[k], m, ia, ib))
            .collect())
    })?;

    let mut rows = Vec::with_capacity(hs_steps.len());
    for (k, &m) in hs_steps.iter().enumerate() {
        let fs: Vec<f64> = per_rep.iter().map(|rep| rep[k]).collect();
        let s = shape_stats(&fs);
        let phi_hat = s.var.sqrt();
        rows.push(CltRow {
            h: m as f64 * delta,
            phi_hat,
            mean_z: (s.mean - a0 * c_len) / phi_hat,
            var_z: 1.0,
            skewness: s.skewness,
            se_skewness: s.se_skewness,
            excess_kurtosis: s.excess_kurtosis,
            se_kurtosis: s.se_kurtosis,
        });
    }

    let last = rows.last().unwrap();
    let skew_limit = cfg.thresholds.clt_skew + 3.0 * last.se_skewness;
    let kurt_limit = cfg.thresholds.clt_kurt + 3.0 * last.se_kurtosis;
    let verdicts = vec![
        VerdictRow::new(
            "skewness_normal_at_hmin",
            last.skewness.abs() <= skew_limit,
            last.skewness.abs(),
            skew_limit,
        ),
        VerdictRow::new(
            "excess_kurtosis_normal_at_hmin",
            last.excess_kurtosis.abs() <= kurt_limit,
            last.excess_kurtosis.abs(),
            kurt_limit,
        ),
    ];

    Ok(CltReport {
        rows,
        hypothesis_in_range,
        verdicts,
    })
}

/// Variance asymptotics for rank-1 functions:
/// Phi_hat(h) sigma(h) / h approaches sigma(b-a) |a_1|.
pub fn run_variance_asymptotics(cfg: &ExperimentConfig) -> Result<VarianceReport> {
    let (model, f) = cfg.validate()?;
    let coeffs = hermite_coeffs(&f, cfg.truncation, cfg.n_quad)?;
    let a1 = coeffs.a[1];
    if a1.abs() <= RANK_TOLERANCE {
        return Err(Error::Precondition(format!(
            "variance asymptotics need E(eta f(eta)) != 0; {} has a_1 = {a1:.3e}",
            f.spec_string()
        )));
    }
    model.require_order(1)?;

    let generator = PathGenerator::new(&model, cfg.grid()?)?;
    let (ia, ib) = window_indices(cfg);
    let delta = cfg.delta();
    let hs_steps = cfg.h_steps_descending();
    let mut sig_h = Vec::with_capacity(hs_steps.len());
    for &m in &hs_steps {
        sig_h.push(model.sigma(m as f64 * delta)?);
    }

    let per_rep: Vec<Vec<f64>> = map_replicates(cfg.workers, cfg.replicates, |r| {
        let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
        Ok(hs_steps
            .iter()
            .enumerate()
            .map(|(k, &m)| functional_sum(&path, &f, sig_h[k], m, ia, ib))
            .collect())
    })?;

    let limit_exact = model.sigma(cfg.window.1 - cfg.window.0)? * a1.abs();
    let mut rows = Vec::with_capacity(hs_steps.len());
    for (k, &m) in hs_steps.iter().enumerate() {
        let fs: Vec<f64> = per_rep.iter().map(|rep| rep[k]).collect();
        let (_, var) = mean_var(&fs);
        let phi_hat = var.sqrt();
        let h = m as f64 * delta;
        rows.push(VarianceRow {
            h,
            phi_hat,
            scaled: phi_hat * sig_h[k] / h,
        });
    }

    let rel = (rows.last().unwrap().scaled - limit_exact).abs() / limit_exact;
    let verdicts = vec![VerdictRow::new(
        "scaled_phi_converges_at_hmin",
        rel <= cfg.thresholds.rel_gap,
        rel,
        cfg.thresholds.rel_gap,
    )];

    Ok(VarianceReport {
        rows,
        limit_exact,
        verdicts,
    })
}

/// Path-synthesis exactness: empirical increment covariances at small lags
/// against the model's exact values, judged at 4 standard errors.
pub fn run_simulate(
    cfg: &ExperimentConfig,
    lags: &[usize],
    dump_dir: Option<&std::path::Path>,
) -> Result<SimulateReport> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let generator = PathGenerator::new(&model, grid)?;
    let delta = grid.delta();
    let n = grid.steps();
    let max_lag = *lags.iter().max().unwrap_or(&0);
    if max_lag + 2 > n {
        return Err(Error::Config(format!(
            "lag {max_lag} too large for a grid of {n} steps"
        )));
    }
    if let Some(dir) = dump_dir {
        std::fs::create_dir_all(dir)?;
    }

    let lags_owned = lags.to_vec();
    let per_rep: Vec<Vec<f64>> = map_replicates(cfg.workers, cfg.replicates, |r| {
        let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
        if let Some(dir) = dump_dir {
            let mut file = std::fs::File::create(dir.join(format!("path_{r:06}.bin")))?;
            crate::pathgen::write_path_dump(&mut file, &path, model.name())?;
        }
        Ok(lags_owned
            .iter()
            .map(|&lag| {
                let count = n - lag;
                let mut acc = 0.0;
                for i in 0..count {
                    acc += path.increment(i, 1) * path.increment(i + lag, 1);
                }
                acc / count as f64
            })
            .collect())
    })?;

    let mut rows = Vec::with_capacity(lags.len());
    let mut verdicts = Vec::with_capacity(lags.len());
    for (k, &lag) in lags.iter().enumerate() {
        let vals: Vec<f64> = per_rep.iter().map(|rep| rep[k]).collect();
        let (mean, var) = mean_var(&vals);
        let se = (var / vals.len() as f64).sqrt();
        let exact = crate::pathgen::increment_covariance(&model, delta, lag)?;
        let z = (mean - exact).abs() / se;
        rows.push(SimulateRow {
            lag,
            empirical: mean,
            exact,
            se,
        });
        verdicts.push(VerdictRow::new(
            &format!("lag_{lag}_within_4se"),
            z <= 4.0,
            z,
            4.0,
        ));
    }

    Ok(SimulateReport {
        rows,
        min_eig_ratio: generator.min_eig_ratio(),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.n = 1 << 12;
        cfg.replicates = 64;
        cfg.h_list = vec![4, 8, 16, 32, 64];
        cfg.seed = 99;
        cfg
    }

    #[test]
    fn expansion_rows_sorted_and_deterministic_across_workers() {
        let mut cfg = small_cfg();
        cfg.workers = 1;
        let a = run_expansion(&cfg).unwrap();
        cfg.workers = 4;
        let b = run_expansion(&cfg).unwrap();
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.l2_error.to_bits(), rb.l2_error.to_bits());
            assert_eq!(ra.normalized.to_bits(), rb.normalized.to_bits());
        }
        assert!(a.rows.windows(2).all(|w| w[0].h > w[1].h));
    }

    #[test]
    fn expansion_of_pure_hermite_is_discretization_exact() {
        // With f = H_k and j0 = k the only surviving term is algebraically
        // equal to F_h when the chaos is taken at the same scale h; at the
        // finest-scale reference the gap is the refinement error, which the
        // k = 1 telescoping makes exactly zero at h = delta.
        let mut cfg = small_cfg();
        cfg.f_spec = "hermite:k=1".into();
        cfg.j0 = 1;
        cfg.h_list = vec![1, 2, 4];
        cfg.replicates = 8;
        let rep = run_expansion(&cfg).unwrap();
        // row for h = delta (last, smallest): identically zero error
        let last = rep.rows.last().unwrap();
        assert!(
            last.l2_error <= 1e-12,
            "telescoped error {}",
            last.l2_error
        );
    }

    #[test]
    fn triangle_inequality_between_truncations() {
        // e_{j0}(h) <= e_{j0-1}(h) + |term_{j0}(h)| pointwise in L2 sense:
        // check the weaker norm inequality on identical seeds.
        let mut cfg = small_cfg();
        cfg.f_spec = "abs".into();
        cfg.replicates = 32;
        cfg.j0 = 2;
        let e2 = run_expansion(&cfg).unwrap();
        cfg.j0 = 1;
        let e1 = run_expansion(&cfg).unwrap();
        // |x| has a_1 = 0, so the j = 1 and j = 2 reports differ exactly by
        // the k = 2 term; with the term norm taken over the same seeds the
        // triangle inequality holds sample-wise.
        let model = cfg.model().unwrap();
        let coeffs =
            hermite_coeffs(&crate::hermite::TestFunction::Abs, cfg.truncation, cfg.n_quad)
                .unwrap();
        let generator = PathGenerator::new(&model, cfg.grid().unwrap()).unwrap();
        let delta = cfg.delta();
        let (ia, ib) = window_indices(&cfg);
        let v = model.sigma2(delta).unwrap() / (delta * delta);
        let w2_coeffs = wick_poly_coeffs(v, 2);
        let w2: Vec<f64> = (0..cfg.replicates)
            .map(|r| {
                let path = generator.sample(derive_replicate_seed(cfg.seed, r as u64));
                wick_sum(&path, &w2_coeffs, delta, 1, ia, ib)
            })
            .collect();
        let w2_norm = (w2.iter().map(|x| x * x).sum::<f64>() / w2.len() as f64).sqrt();
        for (r2, r1) in e2.rows.iter().zip(e1.rows.iter()) {
            let term = (r2.h_over_sigma).powi(2) * coeffs.a[2] / 2f64.sqrt() * w2_norm;
            assert!(r2.l2_error <= r1.l2_error + term.abs() + 1e-12);
            assert!(r1.l2_error <= r2.l2_error + term.abs() + 1e-12);
        }
    }

    #[test]
    fn rank_run_k0_one_converges() {
        let mut cfg = small_cfg();
        cfg.f_spec = "identity".into();
        cfg.j0 = 1;
        cfg.replicates = 128;
        let rep = run_corollary_rank(&cfg).unwrap();
        assert_eq!(rep.k0, 1);
        // distance shrinks towards small h
        assert!(rep.rows.last().unwrap().distance < rep.rows.first().unwrap().distance);
    }

    #[test]
    fn rank_run_rejects_failing_growth_condition() {
        // f symmetric with a_2 != 0 on a model where 2 zeta >= 1.
        let mut cfg = small_cfg();
        cfg.model_spec = "fbm:r=1.4".into();
        cfg.f_spec = "abs".into();
        cfg.j0 = 1; // validation-level hypothesis only needs j0 * 0.6 < 1
        match run_corollary_rank(&cfg) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("growth condition")),
            other => panic!("expected precondition error, got {other:?}"),
        }
    }

    #[test]
    fn wick_rate_order_zero_is_zero() {
        let mut cfg = small_cfg();
        cfg.orders = vec![0, 1];
        cfg.replicates = 16;
        let rep = run_wick_rate(&cfg).unwrap();
        let zero_rows: Vec<_> = rep.rows.iter().filter(|r| r.order == 0).collect();
        assert!(zero_rows.iter().all(|r| r.l2_distance == 0.0));
        assert!(rep.verdicts[0].pass);
    }

    #[test]
    fn clt_requires_symmetric_f() {
        let mut cfg = small_cfg();
        cfg.model_spec = "concave:r=1.0".into();
        cfg.f_spec = "identity".into();
        cfg.j0 = 0;
        assert!(matches!(run_clt(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn variance_requires_rank_one() {
        let mut cfg = small_cfg();
        cfg.f_spec = "abs".into();
        assert!(matches!(
            run_variance_asymptotics(&cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn variance_identity_function_converges() {
        let mut cfg = small_cfg();
        cfg.f_spec = "identity".into();
        cfg.j0 = 1;
        cfg.replicates = 600;
        cfg.h_list = vec![2, 8, 32];
        let rep = run_variance_asymptotics(&cfg).unwrap();
        // limit sigma(1) * 1 = 1; at R = 600 the std estimate has ~3% noise
        let last = rep.rows.last().unwrap();
        assert!(
            (last.scaled - 1.0).abs() <= 0.12,
            "scaled phi = {}",
            last.scaled
        );
    }

    #[test]
    fn simulate_reports_lags() {
        let cfg = {
            let mut c = small_cfg();
            c.n = 1 << 9;
            c.replicates = 400;
            c
        };
        let rep = run_simulate(&cfg, &[0, 1, 2, 3, 4], None).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert!(rep.min_eig_ratio >= -crate::pathgen::EMBEDDING_NEG_TOL);
        assert!(all_pass(&rep.verdicts), "verdicts {:?}", rep.verdicts);
    }
}
