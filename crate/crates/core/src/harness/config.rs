//! Experiment configuration: defaults, flat key=value config files, and
//! validation against the chosen model and test function.

use crate::error::{Error, Result};
use crate::hermite::TestFunction;
use crate::models::Model;
use crate::pathgen::Grid;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Pass/fail thresholds; every verdict carries the threshold it used.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    /// Relative gap allowed at the smallest h for limit-value verdicts.
    pub rel_gap: f64,
    /// Slack subtracted from the rate-bound exponent in slope verdicts.
    pub slope_margin: f64,
    /// |skewness| allowance in the normality verdict (plus 3 SE).
    pub clt_skew: f64,
    /// |excess kurtosis| allowance in the normality verdict (plus 3 SE).
    pub clt_kurt: f64,
    /// Standard errors of slack in monotone-decrease verdicts.
    pub monotone_se_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            rel_gap: 0.05,
            slope_margin: 0.15,
            clt_skew: 0.1,
            clt_kurt: 0.2,
            monotone_se_slack: 1.0,
        }
    }
}

/// Everything an experiment run needs. `h_list` holds lags in grid steps;
/// the physical h is lag * (T / n), so every h is a grid multiple by
/// construction.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model_spec: String,
    pub f_spec: String,
    pub t: f64,
    pub n: usize,
    pub window: (f64, f64),
    pub h_list: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub j0: usize,
    pub orders: Vec<usize>,
    pub n_quad: usize,
    pub truncation: usize,
    pub outdir: PathBuf,
    pub workers: usize,
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model_spec: "fbm:r=1.8".into(),
            f_spec: "abs".into(),
            t: 2.0,
            n: 1 << 18,
            window: (0.25, 1.25),
            h_list: (4..=12).map(|p| 1usize << p).collect(),
            replicates: 1000,
            seed: 20260810,
            j0: 2,
            orders: vec![1, 2],
            n_quad: 400,
            truncation: 12,
            outdir: PathBuf::from("out"),
            workers: 0,
            thresholds: Thresholds::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn delta(&self) -> f64 {
        self.t / self.n as f64
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.t, self.n)
    }

    /// h values in descending order, de-duplicated.
    pub fn h_steps_descending(&self) -> Vec<usize> {
        let mut hs = self.h_list.clone();
        hs.sort_unstable_by(|a, b| b.cmp(a));
        hs.dedup();
        hs
    }

    pub fn model(&self) -> Result<Model> {
        Model::from_spec(&self.model_spec)
    }

    pub fn test_function(&self) -> Result<TestFunction> {
        TestFunction::parse(&self.f_spec)
    }

    /// Checks the grid, window, h grid, and the hypothesis j0 * zeta < 1.
    pub fn validate(&self) -> Result<(Model, TestFunction)> {
        let model = self.model()?;
        let f = self.test_function()?;
        let _ = self.grid()?;
        if self.h_list.is_empty() || self.h_list.iter().any(|&m| m == 0) {
            return Err(Error::Config("h_list needs positive entries".into()));
        }
        if self.replicates < 3 {
            return Err(Error::Config("need at least 3 replicates".into()));
        }
        let delta = self.delta();
        let (a, b) = self.window;
        if !(0.0 <= a && a < b) {
            return Err(Error::Config(format!("bad window ({a}, {b})")));
        }
        for (x, name) in [(a, "a"), (b, "b")] {
            let steps = x / delta;
            if (steps - steps.round()).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "window {name} = {x} is not a multiple of delta = {delta}"
                )));
            }
        }
        let h_max = *self.h_list.iter().max().unwrap() as f64 * delta;
        if b + h_max > self.t * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "window end {b} plus largest h {h_max} exceeds the horizon {}",
                self.t
            )));
        }
        if !model.supports_order(self.j0) {
            return Err(Error::Config(format!(
                "j0 = {} violates j0 * zeta < 1 for model {} (zeta = {})",
                self.j0,
                model.name(),
                model.zeta()
            )));
        }
        if model.sigma2(h_max)? <= 0.0 {
            return Err(Error::Config("sigma^2 vanishes on the h grid".into()));
        }
        Ok((model, f))
    }

    /// Echo of the configuration as ordered key/value strings for reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        let h: Vec<String> = self.h_list.iter().map(|v| v.to_string()).collect();
        let orders: Vec<String> = self.orders.iter().map(|v| v.to_string()).collect();
        vec![
            ("model".into(), self.model_spec.clone()),
            ("f".into(), self.f_spec.clone()),
            ("T".into(), format!("{}", self.t)),
            ("n".into(), format!("{}", self.n)),
            ("window".into(), format!("{},{}", self.window.0, self.window.1)),
            ("h_list".into(), h.join(",")),
            ("R".into(), format!("{}", self.replicates)),
            ("seed".into(), format!("{}", self.seed)),
            ("j0".into(), format!("{}", self.j0)),
            ("orders".into(), orders.join(",")),
            ("n_quad".into(), format!("{}", self.n_quad)),
            ("truncation".into(), format!("{}", self.truncation)),
            ("workers".into(), format!("{}", self.workers)),
            ("threshold.rel_gap".into(), format!("{}", self.thresholds.rel_gap)),
            ("threshold.slope_margin".into(), format!("{}", self.thresholds.slope_margin)),
            ("threshold.clt_skew".into(), format!("{}", self.thresholds.clt_skew)),
            ("threshold.clt_kurt".into(), format!("{}", self.thresholds.clt_kurt)),
            (
                "threshold.monotone_se_slack".into(),
                format!("{}", self.thresholds.monotone_se_slack),
            ),
        ]
    }

    /// Applies `key = value` pairs from a flat config file over `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let pairs = parse_kv_text(&text)?;
        for (key, value) in pairs {
            self.apply_pair(&key, &value)?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: String| Error::Config(format!("config key '{key}': {e}"));
        match key {
            "model" => self.model_spec = value.to_string(),
            "f" => self.f_spec = value.to_string(),
            "T" => self.t = value.parse().map_err(|e| bad(format!("{e}")))?,
            "n" => self.n = value.parse().map_err(|e| bad(format!("{e}")))?,
            "window" => {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| bad("expected 'a,b'".into()))?;
                self.window = (
                    a.trim().parse().map_err(|e| bad(format!("{e}")))?,
                    b.trim().parse().map_err(|e| bad(format!("{e}")))?,
                );
            }
            "h_list" => {
                self.h_list = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("{e}")))?;
            }
            "R" => self.replicates = value.parse().map_err(|e| bad(format!("{e}")))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
            "j0" => self.j0 = value.parse().map_err(|e| bad(format!("{e}")))?,
            "orders" => {
                self.orders = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("{e}")))?;
            }
            "n_quad" => self.n_quad = value.parse().map_err(|e| bad(format!("{e}")))?,
            "truncation" => self.truncation = value.parse().map_err(|e| bad(format!("{e}")))?,
            "outdir" => self.outdir = PathBuf::from(value),
            "workers" => self.workers = value.parse().map_err(|e| bad(format!("{e}")))?,
            "threshold.rel_gap" => {
                self.thresholds.rel_gap = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "threshold.slope_margin" => {
                self.thresholds.slope_margin = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "threshold.clt_skew" => {
                self.thresholds.clt_skew = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "threshold.clt_kurt" => {
                self.thresholds.clt_kurt = value.parse().map_err(|e| bad(format!("{e}")))?
            }
            "threshold.monotone_se_slack" => {
                self.thresholds.monotone_se_slack =
                    value.parse().map_err(|e| bad(format!("{e}")))?
            }
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }
}

/// Parses flat `key = value` text; '#' starts a comment.
pub fn parse_kv_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {} is not 'key = value'", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if seen.insert(key.clone(), ()).is_some() {
            return Err(Error::Config(format!("duplicate config key '{key}'")));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        let cfg = ExperimentConfig::default();
        let (model, f) = cfg.validate().unwrap();
        assert_eq!(model.name(), "fbm:r=1.8");
        assert_eq!(f, TestFunction::Abs);
    }

    #[test]
    fn kv_parsing_and_overrides() {
        let text = "\n# comment\nmodel = fbm:r=1.6\nR = 50   # trailing\nwindow = 0.5,1.5\nh_list = 4,16\n";
        let mut cfg = ExperimentConfig::default();
        for (k, v) in parse_kv_text(text).unwrap() {
            cfg.apply_pair(&k, &v).unwrap();
        }
        assert_eq!(cfg.model_spec, "fbm:r=1.6");
        assert_eq!(cfg.replicates, 50);
        assert_eq!(cfg.window, (0.5, 1.5));
        assert_eq!(cfg.h_list, vec![4, 16]);
    }

    #[test]
    fn rejects_duplicate_and_unknown_keys() {
        assert!(parse_kv_text("R = 5\nR = 6\n").is_err());
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_pair("nope", "1").is_err());
    }

    #[test]
    fn validation_catches_hypothesis_violation() {
        let mut cfg = ExperimentConfig::default();
        cfg.j0 = 5; // 5 * 0.2 = 1 for fbm(1.8)
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn validation_catches_window_overflow() {
        let mut cfg = ExperimentConfig::default();
        cfg.window = (0.25, 2.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn validation_catches_misaligned_window() {
        let mut cfg = ExperimentConfig::default();
        cfg.window = (0.1234567, 1.0);
        assert!(cfg.validate().is_err());
    }
}
