//! Seeded synthesis of Gaussian sample paths with stationary increments
//! matching a model exactly on a uniform grid.

use crate::error::{Error, Result};
use crate::models::Model;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::io::{Read, Write};
use std::sync::Arc;

/// Relative tolerance for clipping slightly negative embedding eigenvalues.
pub const EMBEDDING_NEG_TOL: f64 = 1e-8;

/// Uniform grid on [0, T] with a power-of-two number of steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t: f64,
    n: usize,
}

impl Grid {
    pub fn new(t: f64, n: usize) -> Result<Grid> {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon T must be positive, got {t}")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "step count must be a power of two >= 2, got {n}"
            )));
        }
        Ok(Grid { t, n })
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.t / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisMethod {
    Circulant,
    Cholesky,
    Spectral,
}

/// A seeded sample path G(0), G(delta), ..., G(T) with G(0) = 0.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub method: SynthesisMethod,
}

impl PathSample {
    /// Increment G((i+m) delta) - G(i delta).
    pub fn increment(&self, i: usize, m: usize) -> f64 {
        self.values[i + m] - self.values[i]
    }
}

/// Exact covariance of unit-lag increments at the given lag:
/// (sigma^2((lag+1) d) + sigma^2(|lag-1| d) - 2 sigma^2(lag d)) / 2.
pub fn increment_covariance(model: &Model, delta: f64, lag: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let l = lag as f64;
    Ok(0.5
        * (model.sigma2((l + 1.0) * delta)? + model.sigma2((l - 1.0).abs() * delta)?
            - 2.0 * model.sigma2(l * delta)?))
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Seed for replicate `r`: base_seed XOR mix64(r). Splittable and
/// order-independent, so parallel replicates never share a stream and the
/// assignment does not depend on scheduling.
pub fn derive_replicate_seed(base_seed: u64, replicate: u64) -> u64 {
    base_seed ^ mix64(replicate)
}

/// Circulant embedding of the stationary increment sequence. Exact in
/// distribution when the embedded circulant is nonnegative definite;
/// fractional-type sequences embed at their natural size, while models with
/// sign-changing rho may need the covariance extended to a longer horizon
/// before the wraparound becomes admissible.
pub struct CirculantEmbedding {
    grid: Grid,
    /// Lags carried by the embedding; the first `grid.steps()` increments of
    /// the synthesized length-`lags` sequence are returned.
    lags: usize,
    sqrt_eigs: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    min_eig_ratio: f64,
}

impl CirculantEmbedding {
    pub fn new(model: &Model, grid: Grid) -> Result<Self> {
        let n = grid.steps();
        let delta = grid.delta();
        let mut planner = FftPlanner::new();
        let mut worst_ratio = f64::INFINITY;

        for pad in [1usize, 2, 4, 8, 16] {
            let lags = n * pad;
            if (lags as f64 + 1.0) * delta > model.domain_max() {
                break;
            }
            let m = 2 * lags;
            // First row of the circulant: c(0..lags), then mirrored.
            let mut cov = Vec::with_capacity(lags + 1);
            for lag in 0..=lags {
                cov.push(increment_covariance(model, delta, lag)?);
            }
            let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
            row.extend(cov.iter().map(|&c| Complex::new(c, 0.0)));
            row.extend(cov[1..lags].iter().rev().map(|&c| Complex::new(c, 0.0)));

            let forward = planner.plan_fft_forward(m);
            forward.process(&mut row);

            let eigs: Vec<f64> = row.iter().map(|z| z.re).collect();
            let max_eig = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            let ratio = min_eig / max_eig;
            worst_ratio = worst_ratio.min(ratio);
            if ratio >= -EMBEDDING_NEG_TOL {
                let sqrt_eigs = eigs.iter().map(|&e| e.max(0.0).sqrt()).collect();
                return Ok(CirculantEmbedding {
                    grid,
                    lags,
                    sqrt_eigs,
                    fft: planner.plan_fft_inverse(m),
                    min_eig_ratio: ratio,
                });
            }
        }
        Err(Error::EmbeddingFailure {
            ratio: worst_ratio,
            tol: EMBEDDING_NEG_TOL,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Most negative eigenvalue over the largest one; diagnosable roundoff.
    pub fn min_eig_ratio(&self) -> f64 {
        self.min_eig_ratio
    }

    /// Draws one path. Identical seed gives bit-identical values; the
    /// generator holds no mutable state, so samples may run concurrently.
    pub fn sample(&self, seed: u64) -> PathSample {
        let n = self.grid.steps();
        let lags = self.lags;
        let m = 2 * lags;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;

        // Hermitian-symmetric complex Gaussian spectrum with unit variance
        // per frequency, scaled by sqrt(eigenvalue).
        let mut buf = vec![Complex::new(0.0, 0.0); m];
        let z0: f64 = normal.sample(&mut rng);
        buf[0] = Complex::new(self.sqrt_eigs[0] * z0, 0.0);
        let zh: f64 = normal.sample(&mut rng);
        buf[lags] = Complex::new(self.sqrt_eigs[lags] * zh, 0.0);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        for k in 1..lags {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            let a = Complex::new(re * half, im * half) * self.sqrt_eigs[k];
            buf[k] = a;
            buf[m - k] = a.conj();
        }

        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut buf, &mut scratch);

        let scale = 1.0 / (m as f64).sqrt();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for z in buf.iter().take(n) {
            acc += z.re * scale;
            values.push(acc);
        }

        PathSample {
            grid: self.grid,
            values,
            seed,
            method: SynthesisMethod::Circulant,
        }
    }
}

/// One-shot circulant synthesis.
pub fn simulate_circulant(model: &Model, grid: Grid, seed: u64) -> Result<PathSample> {
    Ok(CirculantEmbedding::new(model, grid)?.sample(seed))
}

/// Exact synthesis through a dense Cholesky factor of the increment
/// covariance. O(n^2) per path and O(n^3) setup, so it is capped at small
/// grids; used when no circulant embedding is admissible.
pub struct CholeskyFactor {
    grid: Grid,
    /// Lower-triangular factor, row-major, rows of increasing length.
    rows: Vec<Vec<f64>>,
}

pub const CHOLESKY_MAX_STEPS: usize = 2048;

impl CholeskyFactor {
    pub fn new(model: &Model, grid: Grid) -> Result<Self> {
        let n = grid.steps();
        if n > CHOLESKY_MAX_STEPS {
            return Err(Error::InvalidParameter(format!(
                "dense factorization capped at {CHOLESKY_MAX_STEPS} steps, got {n}"
            )));
        }
        let delta = grid.delta();
        let mut cov = Vec::with_capacity(n);
        for lag in 0..n {
            cov.push(increment_covariance(model, delta, lag)?);
        }
        // Toeplitz Cholesky with a tiny diagonal jitter absorbing the
        // quadrature noise of the covariance entries.
        let jitter = 1e-12 * cov[0];
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = vec![0.0; i + 1];
            for j in 0..=i {
                let lj = if j == i { &row } else { &rows[j] };
                let mut sum = cov[i - j];
                for k in 0..j {
                    sum -= row[k] * lj[k];
                }
                if i == j {
                    let d = sum + jitter;
                    if d <= 0.0 {
                        return Err(Error::EmbeddingFailure {
                            ratio: d / cov[0],
                            tol: EMBEDDING_NEG_TOL,
                        });
                    }
                    row[j] = d.sqrt();
                } else {
                    row[j] = sum / rows[j][j];
                }
            }
            rows.push(row);
        }
        Ok(CholeskyFactor { grid, rows })
    }

    pub fn sample(&self, seed: u64) -> PathSample {
        let n = self.grid.steps();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let z: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let mut inc = 0.0;
            for (k, l) in self.rows[i].iter().enumerate() {
                inc += l * z[k];
            }
            acc += inc;
            values.push(acc);
        }
        PathSample {
            grid: self.grid,
            values,
            seed,
            method: SynthesisMethod::Cholesky,
        }
    }
}

enum GeneratorKind {
    Circulant(CirculantEmbedding),
    Cholesky(CholeskyFactor),
}

/// Exact-in-distribution path generator: circulant embedding when the
/// embedded covariance is admissible, dense Cholesky as a small-grid
/// fallback for models whose truncated covariance does not embed.
pub struct PathGenerator {
    kind: GeneratorKind,
}

impl PathGenerator {
    pub fn new(model: &Model, grid: Grid) -> Result<Self> {
        match CirculantEmbedding::new(model, grid) {
            Ok(c) => Ok(PathGenerator {
                kind: GeneratorKind::Circulant(c),
            }),
            Err(Error::EmbeddingFailure { .. }) if grid.steps() <= CHOLESKY_MAX_STEPS => {
                Ok(PathGenerator {
                    kind: GeneratorKind::Cholesky(CholeskyFactor::new(model, grid)?),
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn sample(&self, seed: u64) -> PathSample {
        match &self.kind {
            GeneratorKind::Circulant(c) => c.sample(seed),
            GeneratorKind::Cholesky(c) => c.sample(seed),
        }
    }

    pub fn method(&self) -> SynthesisMethod {
        match &self.kind {
            GeneratorKind::Circulant(_) => SynthesisMethod::Circulant,
            GeneratorKind::Cholesky(_) => SynthesisMethod::Cholesky,
        }
    }

    /// Most negative circulant eigenvalue ratio; zero-like for the Cholesky
    /// route where the question does not arise.
    pub fn min_eig_ratio(&self) -> f64 {
        match &self.kind {
            GeneratorKind::Circulant(c) => c.min_eig_ratio(),
            GeneratorKind::Cholesky(_) => 0.0,
        }
    }
}

/// Geometric frequency partition used by the spectral route.
struct SpectralBins {
    /// Per-bin (mass, representative frequency).
    bins: Vec<(f64, f64)>,
}

impl SpectralBins {
    fn build(model: &Model, grid: Grid, n_freq_bins: usize) -> Result<SpectralBins> {
        let ls = model.log_spectral().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "model {} carries no spectral density",
                model.name()
            ))
        })?;
        if n_freq_bins < 1 << 10 {
            return Err(Error::InvalidParameter(format!(
                "spectral synthesis needs at least 2^10 frequency bins, got {n_freq_bins}"
            )));
        }
        // Upper cutoff: truncated mass must stay below 1e-4 of the total
        // mass relevant at the coarsest increment (1 - cos <= 2 bounds the
        // truncated sigma^2 contribution by 4 * tail mass).
        let delta = grid.delta();
        let target = 1e-4 * model.sigma2(delta)? / 4.0;
        let mut hi = crate::models::logspectral::SUPPORT_LO * 2.0;
        while ls.tail_mass(hi) > target {
            hi *= 2.0;
            if hi > 1e18 {
                return Err(Error::QuadratureNonConvergence {
                    achieved: ls.tail_mass(hi),
                    target,
                });
            }
        }
        let lo = crate::models::logspectral::SUPPORT_LO;
        let ratio = (hi / lo).powf(1.0 / n_freq_bins as f64);
        let mut bins = Vec::with_capacity(n_freq_bins);
        let mut a = lo;
        for _ in 0..n_freq_bins {
            let b = a * ratio;
            // Two-sided symmetric density: fold the negative axis in.
            let mass = 2.0 * ls.band_mass(a, b);
            if mass > 0.0 {
                let rep = ls.band_first_moment(a, b) / ls.band_mass(a, b);
                bins.push((mass, rep));
            }
            a = b;
        }
        Ok(SpectralBins { bins })
    }

    /// Covariance the binned field actually realizes:
    /// sigma_hat^2(u) = sum_j m_j * 2 (1 - cos 2 pi lam_j u).
    fn synthesized_sigma2(&self, u: f64) -> f64 {
        self.bins
            .iter()
            .map(|&(mass, lam)| mass * 2.0 * (1.0 - (2.0 * std::f64::consts::PI * lam * u).cos()))
            .sum()
    }
}

/// Approximate synthesis from the spectral representation
/// G(x) = sum_j sqrt(nu(B_j)) [xi_j (cos 2 pi lam_j x - 1) + xi'_j sin 2 pi lam_j x].
///
/// Retained as a cross-validation route; the covariance bias at lag 0 is
/// checked against the model and must stay within 2%.
pub fn simulate_spectral(
    model: &Model,
    grid: Grid,
    seed: u64,
    n_freq_bins: usize,
) -> Result<PathSample> {
    let bins = SpectralBins::build(model, grid, n_freq_bins)?;

    let delta = grid.delta();
    let exact = model.sigma2(delta)?;
    let bias = (bins.synthesized_sigma2(delta) - exact).abs() / exact;
    if bias > 0.02 {
        return Err(Error::SpectralBias { bias, max: 0.02 });
    }

    let n = grid.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut values = vec![0.0f64; n + 1];
    for &(mass, lam) in &bins.bins {
        let xi: f64 = normal.sample(&mut rng);
        let xi2: f64 = normal.sample(&mut rng);
        let amp = mass.sqrt();
        // Rotation recurrence for cos/sin along the uniform grid.
        let theta = 2.0 * std::f64::consts::PI * lam * delta;
        let (sd, cd) = theta.sin_cos();
        let mut c = 1.0;
        let mut s = 0.0;
        for v in values.iter_mut().skip(1) {
            let (c_next, s_next) = (c * cd - s * sd, s * cd + c * sd);
            c = c_next;
            s = s_next;
            *v += amp * (xi * (c - 1.0) + xi2 * s);
        }
    }

    Ok(PathSample {
        grid,
        values,
        seed,
        method: SynthesisMethod::Spectral,
    })
}

const DUMP_MAGIC: &[u8; 8] = b"WCPATH01";

/// Binary dump: magic, spec-string length and bytes, n, T, seed, then the
/// n+1 values as little-endian 64-bit floats.
pub fn write_path_dump<W: Write>(w: &mut W, path: &PathSample, model_spec: &str) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    let spec = model_spec.as_bytes();
    w.write_all(&(spec.len() as u32).to_le_bytes())?;
    w.write_all(spec)?;
    w.write_all(&(path.grid.steps() as u64).to_le_bytes())?;
    w.write_all(&path.grid.horizon().to_le_bytes())?;
    w.write_all(&path.seed.to_le_bytes())?;
    for v in &path.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a dump written by [`write_path_dump`]; returns the model spec and path.
pub fn read_path_dump<R: Read>(r: &mut R) -> Result<(String, PathSample)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::InvalidParameter("bad path dump magic".into()));
    }
    let mut len4 = [0u8; 4];
    r.read_exact(&mut len4)?;
    let mut spec = vec![0u8; u32::from_le_bytes(len4) as usize];
    r.read_exact(&mut spec)?;
    let spec = String::from_utf8(spec)
        .map_err(|e| Error::InvalidParameter(format!("bad spec string in dump: {e}")))?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let mut values = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok((
        spec,
        PathSample {
            grid: Grid::new(t, n)?,
            values,
            seed,
            method: SynthesisMethod::Circulant,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_fbm, make_log_spectral, Model};
    use approx::assert_relative_eq;

    fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1.0, 1024).is_ok());
        assert!(Grid::new(0.0, 1024).is_err());
        assert!(Grid::new(1.0, 1000).is_err());
        assert!(Grid::new(1.0, 1).is_err());
    }

    #[test]
    fn increment_covariance_examples() {
        let m = make_fbm(1.8).unwrap();
        assert_relative_eq!(
            increment_covariance(&m, 0.25, 0).unwrap(),
            m.sigma2(0.25).unwrap(),
            max_relative = 1e-15
        );
        // fbm(1.8), delta = 1, lag 1: (2^1.8 - 2)/2
        assert_relative_eq!(
            increment_covariance(&m, 1.0, 1).unwrap(),
            (2f64.powf(1.8) - 2.0) / 2.0,
            max_relative = 1e-14
        );
        // relation to tau: cov(lag)/sigma^2(delta) = tau_delta(lag * delta)
        let delta = 0.125;
        for lag in [0usize, 1, 2, 5] {
            let lhs = increment_covariance(&m, delta, lag).unwrap() / m.sigma2(delta).unwrap();
            let rhs = m.tau_h(delta, lag as f64 * delta).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
        // Brownian increments are uncorrelated
        let bm = make_fbm(1.0).unwrap();
        assert_relative_eq!(
            increment_covariance(&bm, 0.5, 1).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let m = make_fbm(1.8).unwrap();
        let grid = Grid::new(1.0, 1 << 10).unwrap();
        let a = simulate_circulant(&m, grid, 42).unwrap();
        let b = simulate_circulant(&m, grid, 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_circulant(&m, grid, 43).unwrap();
        assert_ne!(a.values, c.values);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.values.len(), grid.steps() + 1);
    }

    #[test]
    fn replicate_seeds_differ_and_are_stable() {
        let s1 = derive_replicate_seed(7, 0);
        let s2 = derive_replicate_seed(7, 1);
        assert_ne!(s1, s2);
        assert_eq!(s1, derive_replicate_seed(7, 0));
    }

    #[test]
    fn brownian_increments_are_uncorrelated() {
        let m = make_fbm(1.0).unwrap();
        let grid = Grid::new(1.0, 256).unwrap();
        let gen = CirculantEmbedding::new(&m, grid).unwrap();
        let delta = grid.delta();
        let reps = 2000;
        let mut lag1: Vec<f64> = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = gen.sample(derive_replicate_seed(99, r as u64));
            let mut acc = 0.0;
            for i in 0..grid.steps() - 1 {
                acc += p.increment(i, 1) * p.increment(i + 1, 1);
            }
            lag1.push(acc / (grid.steps() - 1) as f64);
        }
        let (mean, var) = sample_mean_var(&lag1);
        let se = (var / reps as f64).sqrt();
        assert!(
            mean.abs() <= 4.0 * se + 1e-12,
            "lag-1 autocovariance {mean} vs 4 SE {}",
            4.0 * se
        );
        let _ = delta;
    }

    #[test]
    fn fbm_terminal_variance_matches() {
        let m = make_fbm(1.8).unwrap();
        let grid = Grid::new(1.0, 1 << 10).unwrap();
        let gen = CirculantEmbedding::new(&m, grid).unwrap();
        let reps = 2000;
        let finals: Vec<f64> = (0..reps)
            .map(|r| {
                let p = gen.sample(derive_replicate_seed(4242, r as u64));
                *p.values.last().unwrap()
            })
            .collect();
        let (_, var) = sample_mean_var(&finals);
        // SE of a variance estimate for Gaussian data: var * sqrt(2/(R-1))
        let se = var * (2.0 / (reps as f64 - 1.0)).sqrt();
        assert!(
            (var - 1.0).abs() <= 4.0 * se,
            "Var(G(1)) = {var}, 4 SE = {}",
            4.0 * se
        );
    }

    #[test]
    fn empirical_increment_covariance_is_exact() {
        // Scaled-down version of the exactness check: lags 0..4 within 4 SE.
        let m = make_fbm(1.8).unwrap();
        let grid = Grid::new(1.0, 512).unwrap();
        let gen = CirculantEmbedding::new(&m, grid).unwrap();
        let delta = grid.delta();
        let reps = 2000;
        let n = grid.steps();
        for lag in 0..=4usize {
            let mut vals = Vec::with_capacity(reps);
            for r in 0..reps {
                let p = gen.sample(derive_replicate_seed(31337, r as u64));
                let mut acc = 0.0;
                let count = n - lag - 1;
                for i in 0..count {
                    acc += p.increment(i, 1) * p.increment(i + lag, 1);
                }
                vals.push(acc / count as f64);
            }
            let exact = increment_covariance(&m, delta, lag).unwrap();
            let (mean, var) = sample_mean_var(&vals);
            let se = (var / reps as f64).sqrt();
            assert!(
                (mean - exact).abs() <= 4.0 * se,
                "lag {lag}: {mean} vs {exact} (4 SE = {})",
                4.0 * se
            );
        }
    }

    #[test]
    fn stationarity_across_window_positions() {
        let m = make_fbm(1.6).unwrap();
        let grid = Grid::new(1.0, 512).unwrap();
        let gen = CirculantEmbedding::new(&m, grid).unwrap();
        let reps = 1500;
        let lag = 3usize;
        let windows = [(0usize, 128usize), (192, 320), (360, 488)];
        let mut per_window: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); windows.len()];
        for r in 0..reps {
            let p = gen.sample(derive_replicate_seed(777, r as u64));
            for (w, &(lo, hi)) in windows.iter().enumerate() {
                let mut acc = 0.0;
                for i in lo..hi - lag {
                    acc += p.increment(i, 1) * p.increment(i + lag, 1);
                }
                per_window[w].push(acc / (hi - lo - lag) as f64);
            }
        }
        let stats: Vec<(f64, f64)> = per_window.iter().map(|v| sample_mean_var(v)).collect();
        for w in 1..stats.len() {
            let se = ((stats[0].1 + stats[w].1) / reps as f64).sqrt();
            assert!(
                (stats[w].0 - stats[0].0).abs() <= 4.0 * se,
                "window {w} mean {} vs {} (4 SE {})",
                stats[w].0,
                stats[0].0,
                4.0 * se
            );
        }
    }

    #[test]
    fn spectral_path_starts_at_zero_and_matches_variance() {
        let m = make_log_spectral();
        let grid = Grid::new(1.0, 1 << 8).unwrap();
        let reps = 400;
        let checkpoints = [0.1f64, 0.5, 1.0];
        let mut at: Vec<Vec<f64>> = vec![Vec::with_capacity(reps); checkpoints.len()];
        for r in 0..reps {
            let p = simulate_spectral(&m, grid, derive_replicate_seed(5150, r as u64), 1 << 12)
                .unwrap();
            assert_eq!(p.values[0], 0.0);
            for (j, &x) in checkpoints.iter().enumerate() {
                let idx = (x / grid.delta()).round() as usize;
                at[j].push(p.values[idx]);
            }
        }
        for (j, &x) in checkpoints.iter().enumerate() {
            let (_, var) = sample_mean_var(&at[j]);
            let exact = m.sigma2(x).unwrap();
            let rel = (var - exact).abs() / exact;
            // 5% target plus Monte Carlo allowance at R = 400
            let se_rel = (2.0 / reps as f64).sqrt();
            assert!(
                rel <= 0.05 + 4.0 * se_rel,
                "x = {x}: sample var {var} vs {exact} (rel {rel})"
            );
        }
    }

    #[test]
    fn logspec_circulant_fails_but_generator_falls_back() {
        // The log-spectral density vanishes below lambda = e, so the raw
        // truncated increment covariance does not embed; the spec'd error
        // carries the most negative eigenvalue ratio, and the generic
        // generator switches to the exact dense factorization.
        let m = make_log_spectral();
        let grid = Grid::new(1.0, 1 << 8).unwrap();
        match simulate_circulant(&m, grid, 1) {
            Err(crate::error::Error::EmbeddingFailure { ratio, .. }) => {
                assert!(ratio < -1e-3, "ratio {ratio}")
            }
            other => panic!("expected embedding failure, got {other:?}"),
        }
        let gen = PathGenerator::new(&m, grid).unwrap();
        assert_eq!(gen.method(), SynthesisMethod::Cholesky);
        let p = gen.sample(7);
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.values, gen.sample(7).values);
    }

    #[test]
    fn cholesky_route_reproduces_increment_covariance() {
        let m = make_log_spectral();
        let grid = Grid::new(1.0, 256).unwrap();
        let gen = PathGenerator::new(&m, grid).unwrap();
        let delta = grid.delta();
        let reps = 2000;
        let n = grid.steps();
        for lag in [0usize, 1, 4] {
            let mut vals = Vec::with_capacity(reps);
            for r in 0..reps {
                let p = gen.sample(derive_replicate_seed(8080, r as u64));
                let count = n - lag;
                let mut acc = 0.0;
                for i in 0..count {
                    acc += p.increment(i, 1) * p.increment(i + lag, 1);
                }
                vals.push(acc / count as f64);
            }
            let exact = increment_covariance(&m, delta, lag).unwrap();
            let (mean, var) = sample_mean_var(&vals);
            let se = (var / reps as f64).sqrt();
            assert!(
                (mean - exact).abs() <= 4.0 * se,
                "lag {lag}: {mean} vs {exact} (4 SE {})",
                4.0 * se
            );
        }
    }

    #[test]
    fn exact_and_spectral_routes_agree_for_logspec() {
        let m = make_log_spectral();
        let grid = Grid::new(1.0, 1 << 8).unwrap();
        let gen = PathGenerator::new(&m, grid).unwrap();
        let reps = 400;
        let x = 0.5f64;
        let idx = (x / grid.delta()).round() as usize;
        let mut a = Vec::with_capacity(reps);
        let mut b = Vec::with_capacity(reps);
        for r in 0..reps {
            a.push(gen.sample(derive_replicate_seed(1, r as u64)).values[idx]);
            b.push(
                simulate_spectral(&m, grid, derive_replicate_seed(2, r as u64), 1 << 12)
                    .unwrap()
                    .values[idx],
            );
        }
        let (_, va) = sample_mean_var(&a);
        let (_, vb) = sample_mean_var(&b);
        // both estimate sigma2(x); joint MC error at R = 400 each
        let se = (va + vb) * (2.0 / reps as f64).sqrt();
        assert!(
            (va - vb).abs() <= 4.0 * se,
            "exact var {va} vs spectral var {vb}"
        );
    }

    #[test]
    fn spectral_requires_density_and_bins() {
        let fbm = make_fbm(1.8).unwrap();
        let grid = Grid::new(1.0, 256).unwrap();
        assert!(simulate_spectral(&fbm, grid, 1, 1 << 12).is_err());
        let ls = make_log_spectral();
        assert!(simulate_spectral(&ls, grid, 1, 512).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let m = make_fbm(1.8).unwrap();
        let grid = Grid::new(2.0, 64).unwrap();
        let p = simulate_circulant(&m, grid, 7).unwrap();
        let mut buf = Vec::new();
        write_path_dump(&mut buf, &p, m.name()).unwrap();
        let (spec, q) = read_path_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(spec, "fbm:r=1.8");
        assert_eq!(p.values, q.values);
        assert_eq!(p.seed, q.seed);
        assert_eq!(p.grid, q.grid);
        let _ = Model::from_spec(&spec).unwrap();
    }
}
