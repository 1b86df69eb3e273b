//! Command-line front end: each subcommand reads an optional flat config
//! file plus flag overrides, writes `<outdir>/<experiment>.csv` and
//! `<outdir>/<experiment>.summary.json`, and exits 0 only when every
//! verdict passes (2 on config errors, 3 on numerical failures).

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wickchaos::error::{Error, Result};
use wickchaos::harness::{
    all_pass, report, run_clt, run_corollary_rank, run_expansion, run_simulate,
    run_variance_asymptotics, run_wick_rate, ExperimentConfig, VerdictRow,
};
use wickchaos::models::regularity::{check_regularity, RegularityGrid};

#[derive(Parser)]
#[command(name = "wickchaos", version, about = "Increment-functional experiments for Gaussian processes with stationary increments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides shared by the Monte Carlo experiments.
#[derive(Args, Clone, Default)]
struct CommonOverrides {
    /// Flat key = value config file applied before flag overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model spec, e.g. fbm:r=1.8, fbmix:a=1,1;beta=1.7,1.9, logspec.
    #[arg(long)]
    model: Option<String>,
    /// Test function spec, e.g. abs, sign, hermite:k=2, poly:0,1,0,1.
    #[arg(long)]
    f: Option<String>,
    /// Horizon T of the simulation grid.
    #[arg(long = "t", visible_alias = "horizon")]
    t: Option<f64>,
    /// Number of grid steps (power of two).
    #[arg(long)]
    n: Option<usize>,
    /// Window a,b.
    #[arg(long)]
    window: Option<String>,
    /// Lags in grid steps, comma separated; h = lag * T/n.
    #[arg(long = "h-list")]
    h_list: Option<String>,
    /// Number of Monte Carlo replicates.
    #[arg(long, visible_alias = "r")]
    replicates: Option<usize>,
    /// Base seed; replicate r uses seed XOR mix64(r).
    #[arg(long)]
    seed: Option<u64>,
    /// Truncation order of the expansion.
    #[arg(long)]
    j0: Option<usize>,
    /// Wick orders for the rate experiment, comma separated.
    #[arg(long)]
    orders: Option<String>,
    /// Output directory.
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Worker threads (0 = library default).
    #[arg(long)]
    workers: Option<usize>,
}

impl CommonOverrides {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = &self.model {
            cfg.apply_pair("model", v)?;
        }
        if let Some(v) = &self.f {
            cfg.apply_pair("f", v)?;
        }
        if let Some(v) = self.t {
            cfg.apply_pair("T", &v.to_string())?;
        }
        if let Some(v) = self.n {
            cfg.apply_pair("n", &v.to_string())?;
        }
        if let Some(v) = &self.window {
            cfg.apply_pair("window", v)?;
        }
        if let Some(v) = &self.h_list {
            cfg.apply_pair("h_list", v)?;
        }
        if let Some(v) = self.replicates {
            cfg.apply_pair("R", &v.to_string())?;
        }
        if let Some(v) = self.seed {
            cfg.apply_pair("seed", &v.to_string())?;
        }
        if let Some(v) = self.j0 {
            cfg.apply_pair("j0", &v.to_string())?;
        }
        if let Some(v) = &self.orders {
            cfg.apply_pair("orders", v)?;
        }
        if let Some(v) = &self.outdir {
            cfg.outdir = v.clone();
        }
        if let Some(v) = self.workers {
            cfg.apply_pair("workers", &v.to_string())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Certify the regular-variation and smoothness hypotheses of a model.
    ModelsCheck {
        #[command(flatten)]
        common: CommonOverrides,
        /// Upper end M of the check window.
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Decades spanned below M by the grid.
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
    },
    /// Deterministic kernel-integral limits over an h grid.
    KernelLimits {
        #[command(flatten)]
        common: CommonOverrides,
        /// Continuous h grid, comma separated; default 1e-4 * 2^0..2^8.
        #[arg(long = "h-grid")]
        h_grid: Option<String>,
        /// Window length c = b - a.
        #[arg(long = "window-len", default_value_t = 1.0)]
        window_len: f64,
    },
    /// Sample paths and verify increment covariances at small lags.
    Simulate {
        #[command(flatten)]
        common: CommonOverrides,
        /// Lags to check, comma separated.
        #[arg(long, default_value = "0,1,2,3,4")]
        lags: String,
        /// Dump every replicate path to this directory as binary files.
        #[arg(long = "dump-paths")]
        dump_paths: Option<PathBuf>,
    },
    /// L2 error of the truncated expansion across the h grid.
    Expand {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Rank-normalized convergence to the k0-th chaos.
    Rank {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Decay rate of || W_j(h) - reference || against the bound exponent.
    WickRate {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Normality of the standardized statistic (contrast mode included).
    Clt {
        #[command(flatten)]
        common: CommonOverrides,
    },
    /// Variance asymptotics for rank-1 test functions.
    Variance {
        #[command(flatten)]
        common: CommonOverrides,
    },
}

fn write_outputs<F>(
    cfg: &ExperimentConfig,
    experiment: &str,
    verdicts: &[VerdictRow],
    write_csv: F,
) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
{
    std::fs::create_dir_all(&cfg.outdir)?;
    let csv_path = cfg.outdir.join(format!("{experiment}.csv"));
    let mut w = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    write_csv(&mut w)?;
    use std::io::Write;
    w.flush()?;
    report::write_summary_json(
        &cfg.outdir.join(format!("{experiment}.summary.json")),
        experiment,
        &cfg.echo(),
        verdicts,
    )?;
    Ok(())
}

fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad list entry '{v}': {e}")))
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad list entry '{v}': {e}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::ModelsCheck { common, m, decades } => {
            let cfg = common.build()?;
            let model = cfg.model()?;
            let grid = RegularityGrid {
                decades,
                ..RegularityGrid::default()
            };
            let rep = check_regularity(&model, m, &grid)?;
            let verdicts: Vec<VerdictRow> = rep
                .verdicts
                .iter()
                .map(|v| VerdictRow::new(&v.name, v.pass, v.observed, v.threshold))
                .collect();
            write_outputs(&cfg, "models-check", &verdicts, |w| {
                use std::io::Write;
                writeln!(w, "x,h2_over_sigma2,sigma2_over_h")?;
                for ((h, r1), (_, r2)) in rep
                    .ratio_h2_over_sigma2
                    .iter()
                    .zip(rep.ratio_sigma2_over_h.iter())
                {
                    writeln!(
                        w,
                        "{},{},{}",
                        report::fmt17(*h),
                        report::fmt17(*r1),
                        report::fmt17(*r2)
                    )?;
                }
                Ok(())
            })?;
            println!(
                "models-check {}: index {:.4}, zeta {:?}, all_pass={}",
                model.name(),
                rep.rv_index_estimate,
                rep.zeta_estimate,
                all_pass(&verdicts)
            );
            Ok(all_pass(&verdicts))
        }
        Command::KernelLimits {
            common,
            h_grid,
            window_len,
        } => {
            let cfg = common.build()?;
            let model = cfg.model()?;
            let orders = cfg.orders.clone();
            let hs = match h_grid {
                Some(s) => parse_float_list(&s)?,
                None => (0..9).map(|i| 1e-4 * 2f64.powi(i)).collect(),
            };
            let rep =
                wickchaos::functionals::kernel_limits_check(&model, &orders, &hs, window_len)?;
            let verdicts: Vec<VerdictRow> = rep
                .verdicts
                .iter()
                .map(|v| VerdictRow::new(&v.name, v.pass, v.observed, v.threshold))
                .collect();
            write_outputs(&cfg, "kernel-limits", &verdicts, |w| rep.table.to_csv(w))?;
            println!(
                "kernel-limits {}: {} verdicts, all_pass={}",
                model.name(),
                verdicts.len(),
                all_pass(&verdicts)
            );
            Ok(all_pass(&verdicts))
        }
        Command::Simulate {
            common,
            lags,
            dump_paths,
        } => {
            let cfg = common.build()?;
            let lags = parse_usize_list(&lags)?;
            let rep = run_simulate(&cfg, &lags, dump_paths.as_deref())?;
            write_outputs(&cfg, "simulate", &rep.verdicts, |w| rep.write_csv(w))?;
            println!(
                "simulate {}: min eig ratio {:.3e}, all_pass={}",
                cfg.model_spec,
                rep.min_eig_ratio,
                all_pass(&rep.verdicts)
            );
            Ok(all_pass(&rep.verdicts))
        }
        Command::Expand { common } => {
            let cfg = common.build()?;
            let rep = run_expansion(&cfg)?;
            write_outputs(&cfg, "expand", &rep.verdicts, |w| rep.write_csv(w))?;
            println!(
                "expand {} f={} j0={}: slope {:.3} +/- {:.3}, all_pass={}",
                cfg.model_spec,
                cfg.f_spec,
                cfg.j0,
                rep.slope.slope,
                rep.slope.half_width,
                all_pass(&rep.verdicts)
            );
            Ok(all_pass(&rep.verdicts))
        }
        Command::Rank { common } => {
            let cfg = common.build()?;
            let rep = run_corollary_rank(&cfg)?;
            write_outputs(&cfg, "rank", &rep.verdicts, |w| rep.write_csv(w))?;
            println!(
                "rank {} f={} k0={}: distance/target {:.4} at smallest h, all_pass={}",
                cfg.model_spec,
                cfg.f_spec,
                rep.k0,
                rep.rows.last().map(|r| r.distance).unwrap_or(f64::NAN) / rep.target_norm_exact,
                all_pass(&rep.verdicts)
            );
            Ok(all_pass(&rep.verdicts))
        }
        Command::WickRate { common } => {
            let cfg = common.build()?;
            let rep = run_wick_rate(&cfg)?;
            write_outputs(&cfg, "wick-rate", &rep.verdicts, |w| rep.write_csv(w))?;
            for (j, fit, bound) in &rep.slopes {
                match fit {
                    Some(f) => println!(
                        "wick-rate order {j}: slope {:.3} (bound exponent {:.3})",
                        f.slope, bound
                    ),
                    None => println!("wick-rate order {j}: identically zero"),
                }
            }
            Ok(all_pass(&rep.verdicts))
        }
        Command::Clt { common } => {
            let cfg = common.build()?;
            let rep = run_clt(&cfg)?;
            write_outputs(&cfg, "clt", &rep.verdicts, |w| rep.write_csv(w))?;
            let last = rep.rows.last().unwrap();
            println!(
                "clt {} f={}: skew {:.4}, excess kurtosis {:.4} at h={:.3e}; in_range={}, all_pass={}",
                cfg.model_spec,
                cfg.f_spec,
                last.skewness,
                last.excess_kurtosis,
                last.h,
                rep.hypothesis_in_range,
                all_pass(&rep.verdicts)
            );
            Ok(all_pass(&rep.verdicts))
        }
        Command::Variance { common } => {
            let cfg = common.build()?;
            let rep = run_variance_asymptotics(&cfg)?;
            write_outputs(&cfg, "variance", &rep.verdicts, |w| rep.write_csv(w))?;
            println!(
                "variance {} f={}: scaled phi {:.4} vs limit {:.4}, all_pass={}",
                cfg.model_spec,
                cfg.f_spec,
                rep.rows.last().unwrap().scaled,
                rep.limit_exact,
                all_pass(&rep.verdicts)
            );
            Ok(all_pass(&rep.verdicts))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
