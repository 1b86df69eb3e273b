//! Report types and the CSV / JSON output surface. Floats are serialized
//! with 17 significant digits so runs with the same seed reproduce outputs
//! byte for byte.

use super::stats::SlopeFit;
use crate::error::Result;
use std::io::Write;
use std::path::Path;

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// One named pass/fail judged on a number and its threshold.
#[derive(Debug, Clone)]
pub struct VerdictRow {
    pub name: String,
    pub pass: bool,
    pub observed: f64,
    pub threshold: f64,
}

impl VerdictRow {
    pub fn new(name: &str, pass: bool, observed: f64, threshold: f64) -> Self {
        VerdictRow {
            name: name.into(),
            pass,
            observed,
            threshold,
        }
    }
}

pub fn all_pass(verdicts: &[VerdictRow]) -> bool {
    verdicts.iter().all(|v| v.pass)
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn json_f64(x: f64) -> String {
    if x.is_finite() {
        fmt17(x)
    } else {
        // JSON has no inf/nan literals; encode as strings.
        format!("\"{x}\"")
    }
}

/// Writes `<experiment>.summary.json` with the config echo, verdicts, and
/// the build identifier.
pub fn write_summary_json(
    path: &Path,
    experiment: &str,
    config_echo: &[(String, String)],
    verdicts: &[VerdictRow],
) -> Result<()> {
    let mut s = String::new();
    s.push_str("{\n");
    s.push_str(&format!("  \"experiment\": \"{}\",\n", json_escape(experiment)));
    s.push_str(&format!(
        "  \"git_describe\": \"{}\",\n",
        json_escape(env!("WICKCHAOS_GIT_DESCRIBE"))
    ));
    s.push_str("  \"config\": {\n");
    for (i, (k, v)) in config_echo.iter().enumerate() {
        let comma = if i + 1 < config_echo.len() { "," } else { "" };
        s.push_str(&format!(
            "    \"{}\": \"{}\"{comma}\n",
            json_escape(k),
            json_escape(v)
        ));
    }
    s.push_str("  },\n");
    s.push_str("  \"verdicts\": [\n");
    for (i, v) in verdicts.iter().enumerate() {
        let comma = if i + 1 < verdicts.len() { "," } else { "" };
        s.push_str(&format!(
            "    {{\"name\": \"{}\", \"pass\": {}, \"observed\": {}, \"threshold\": {}}}{comma}\n",
            json_escape(&v.name),
            v.pass,
            json_f64(v.observed),
            json_f64(v.threshold)
        ));
    }
    s.push_str("  ],\n");
    s.push_str(&format!("  \"all_pass\": {}\n", all_pass(verdicts)));
    s.push_str("}\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Per-h row of an expansion or rank experiment.
#[derive(Debug, Clone)]
pub struct ExpansionRow {
    pub h: f64,
    pub h_over_sigma: f64,
    pub l2_error: f64,
    pub l2_se: f64,
    pub normalized: f64,
    pub normalized_se: f64,
    /// L2 norm of the left side, for context.
    pub lhs_l2: f64,
}

/// Per-h L2 errors of the truncated expansion with fitted decay slope.
#[derive(Debug, Clone)]
pub struct ExpansionReport {
    /// Rows sorted by h descending.
    pub rows: Vec<ExpansionRow>,
    pub slope: SlopeFit,
    pub verdicts: Vec<VerdictRow>,
}

impl ExpansionReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "h,h_over_sigma,l2_error,l2_se,normalized_error,normalized_se,lhs_l2"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                fmt17(r.h),
                fmt17(r.h_over_sigma),
                fmt17(r.l2_error),
                fmt17(r.l2_se),
                fmt17(r.normalized),
                fmt17(r.normalized_se),
                fmt17(r.lhs_l2)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RankRow {
    pub h: f64,
    pub distance: f64,
    pub se: f64,
    pub target_norm_mc: f64,
}

/// L2 distances to the rank-k0 chaos target.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub k0: usize,
    pub rows: Vec<RankRow>,
    pub target_norm_exact: f64,
    pub verdicts: Vec<VerdictRow>,
}

impl RankReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "h,distance,se,target_norm_mc,target_norm_exact,ratio")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt17(r.h),
                fmt17(r.distance),
                fmt17(r.se),
                fmt17(r.target_norm_mc),
                fmt17(self.target_norm_exact),
                fmt17(r.distance / self.target_norm_exact)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RateRow {
    pub order: usize,
    pub h: f64,
    pub l2_distance: f64,
    pub se: f64,
}

/// Monte Carlo decay of || W_j(h) - reference || with fitted slopes.
#[derive(Debug, Clone)]
pub struct WickRateReport {
    pub rows: Vec<RateRow>,
    /// (order, fitted slope, bound exponent (1 - j zeta)/2); slope is None
    /// for order zero where the distance vanishes identically.
    pub slopes: Vec<(usize, Option<SlopeFit>, f64)>,
    pub verdicts: Vec<VerdictRow>,
}

impl WickRateReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "order,h,l2_distance,se")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.order,
                fmt17(r.h),
                fmt17(r.l2_distance),
                fmt17(r.se)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CltRow {
    pub h: f64,
    pub phi_hat: f64,
    pub mean_z: f64,
    pub var_z: f64,
    pub skewness: f64,
    pub se_skewness: f64,
    pub excess_kurtosis: f64,
    pub se_kurtosis: f64,
}

/// Standardized-statistic shape per h.
#[derive(Debug, Clone)]
pub struct CltReport {
    pub rows: Vec<CltRow>,
    /// Whether the model sits in the range the normal limit is stated for.
    pub hypothesis_in_range: bool,
    pub verdicts: Vec<VerdictRow>,
}

impl CltReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "h,phi_hat,mean_z,var_z,skewness,se_skewness,excess_kurtosis,se_kurtosis"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                fmt17(r.h),
                fmt17(r.phi_hat),
                fmt17(r.mean_z),
                fmt17(r.var_z),
                fmt17(r.skewness),
                fmt17(r.se_skewness),
                fmt17(r.excess_kurtosis),
                fmt17(r.se_kurtosis)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VarianceRow {
    pub h: f64,
    pub phi_hat: f64,
    /// phi_hat * sigma(h) / h, which approaches sigma(b-a) |a_1|.
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub rows: Vec<VarianceRow>,
    pub limit_exact: f64,
    pub verdicts: Vec<VerdictRow>,
}

impl VarianceReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "h,phi_hat,scaled,limit,rel_gap")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt17(r.h),
                fmt17(r.phi_hat),
                fmt17(r.scaled),
                fmt17(self.limit_exact),
                fmt17((r.scaled - self.limit_exact).abs() / self.limit_exact)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulateRow {
    pub lag: usize,
    pub empirical: f64,
    pub exact: f64,
    pub se: f64,
}

/// Empirical increment covariances against the model's exact values.
#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub rows: Vec<SimulateRow>,
    pub min_eig_ratio: f64,
    pub verdicts: Vec<VerdictRow>,
}

impl SimulateReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "lag,empirical_cov,exact_cov,se,z_score")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.lag,
                fmt17(r.empirical),
                fmt17(r.exact),
                fmt17(r.se),
                fmt17((r.empirical - r.exact) / r.se)
            )?;
        }
        Ok(())
    }
}
