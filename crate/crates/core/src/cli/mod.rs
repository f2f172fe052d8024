//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for usage, configuration and I/O errors,
//! 3 when the integrator aborts a path.

pub mod config;
pub mod figures;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{ensemble_stats, uniform_times};
use crate::error::Error;
use crate::export::{fmt_f64, write_series, write_sweep};
use crate::regime::{classify_regime, sweep};
use crate::sde::convergence::{strong_convergence_study, GbmOracle};
use crate::sde::scheme::SchemeKind;
use crate::sde::{aligned_stride, simulate_ensemble_at, simulate_seeded};
use config::{ConfigDoc, ConfigError, RunConfig};
use figures::{emit_figure, FigurePreset};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numeric abort: {0}")]
    Numeric(Error),
    #[error("{0}")]
    Model(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numeric_abort() {
            CliError::Numeric(e)
        } else {
            CliError::Model(e)
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

#[derive(Debug, Parser)]
#[command(name = "forest-sde", version, about = "Stochastic two-age-class forest model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one path and write trajectory.csv.
    Simulate(Common),
    /// Ensemble means with standard errors: ensemble_u.csv, ensemble_v.csv.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Print the regime report as JSON; nothing is simulated.
    Classify(Common),
    /// Classify every cell of a two-parameter grid into sweep.csv.
    Sweep(Common),
    /// Data and a gnuplot script for one reference experiment.
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=8))]
        which: u8,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Strong-order study against geometric Brownian motion.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        paths: usize,
        /// Step sizes are 2^-k for k in [level_min, level_max].
        #[arg(long, default_value_t = 4)]
        level_min: u32,
        #[arg(long, default_value_t = 10)]
        level_max: u32,
    },
}

/// Parses `argv` (program name first), runs the command, and returns the
/// exit status. Normal output goes to `out`, diagnostics to stderr.
pub fn run(argv: impl IntoIterator<Item = String>, out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_doc(path: &Path) -> Result<ConfigDoc, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(ConfigDoc::parse(&text)?)
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Usage("this subcommand requires --config PATH".to_string()))?;
    let mut cfg = read_doc(path)?.resolve()?;
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &common.out {
        cfg.outputs = o.clone();
    }
    Ok(cfg)
}

fn out_dir(dir: &Path) -> Result<&Path, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: PathBuf, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    body(&mut w).map_err(io)?;
    w.flush().map_err(io)?;
    Ok(path)
}

fn print_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            let traj = simulate_seeded(&cfg.params, cfg.init, &cfg.solver, cfg.master_seed, 0)?;
            let dir = out_dir(&cfg.outputs)?;
            let file = write_file(dir.join("trajectory.csv"), |w| traj.write_csv(w))?;
            let last = traj.last();
            print_json(
                out,
                &json!({
                    "file": file.display().to_string(),
                    "points": traj.len(),
                    "t_end": traj.t_end(),
                    "final": {"u": last.u, "v": last.v},
                    "clamp_events": traj.clamp_events,
                    "seed": traj.seed,
                }),
            )
        }
        Command::Ensemble { common, paths } => {
            let cfg = load(&common)?;
            let n_paths = paths.unwrap_or(cfg.n_paths);
            if n_paths < 2 {
                return Err(CliError::Config("ensemble needs n_paths >= 2".to_string()));
            }
            let times = uniform_times(0.0, cfg.solver.t_end, cfg.samples);
            let solver = cfg
                .solver
                .with_stride(aligned_stride(cfg.solver.dt, cfg.solver.t_end, cfg.samples));
            let paths = simulate_ensemble_at(&cfg.params, cfg.init, &solver, cfg.master_seed, n_paths, &times)?;
            let stats = ensemble_stats(&paths, &times)?;
            let dir = out_dir(&cfg.outputs)?;
            let fu = write_file(dir.join("ensemble_u.csv"), |w| {
                write_series(w, &stats.times, &stats.mean_u, Some(&stats.se_u))
            })?;
            let fv = write_file(dir.join("ensemble_v.csv"), |w| {
                write_series(w, &stats.times, &stats.mean_v, Some(&stats.se_v))
            })?;
            let clamps: usize = paths.iter().map(|t| t.clamp_events).sum();
            print_json(
                out,
                &json!({
                    "files": [fu.display().to_string(), fv.display().to_string()],
                    "n_paths": n_paths,
                    "clamp_events": clamps,
                }),
            )
        }
        Command::Classify(common) => {
            let cfg = load(&common)?;
            print_json(out, &classify_regime(&cfg.params, cfg.init.u))
        }
        Command::Sweep(common) => {
            let cfg = load(&common)?;
            let spec = cfg
                .sweep
                .as_ref()
                .ok_or_else(|| CliError::Config("config key `sweep`: missing".to_string()))?;
            let grid = sweep(&cfg.params, &spec.axis1, &spec.axis2, cfg.init.u)
                .map_err(|e| CliError::Config(format!("config key `sweep`: {e}")))?;
            let dir = out_dir(&cfg.outputs)?;
            let file = write_file(dir.join("sweep.csv"), |w| write_sweep(w, &grid))?;
            print_json(out, &json!({"file": file.display().to_string(), "cells": grid.cells.len()}))
        }
        Command::Figure {
            which,
            common,
            paths,
            dt,
        } => {
            let mut preset = FigurePreset::get(which).ok_or_else(|| CliError::Usage(format!("no figure {which}")))?;
            let mut seed = 0;
            let mut dir = PathBuf::from(".");
            if let Some(path) = &common.config {
                let doc = read_doc(path)?;
                preset.params = doc.params_over(&preset.params)?;
                preset.inits[0] = doc.init_over(preset.inits[0])?;
                let s = doc.solver_over(preset.scheme, preset.dt, preset.t_end)?;
                (preset.scheme, preset.dt, preset.t_end) = (s.scheme, s.dt, s.t_end);
                preset.n_paths = doc.n_paths.unwrap_or(preset.n_paths);
                seed = doc.seed.unwrap_or(seed);
                dir = doc.outputs.unwrap_or(dir);
            }
            if let Some(n) = paths {
                preset.n_paths = n;
            }
            if let Some(dt) = dt {
                preset.dt = dt;
            }
            if preset.n_paths == 0 {
                return Err(CliError::Config("--paths must be >= 1".to_string()));
            }
            seed = common.seed.unwrap_or(seed);
            dir = common.out.clone().unwrap_or(dir);
            let files = emit_figure(&preset, seed, out_dir(&dir)?)?;
            let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            print_json(out, &json!({"figure": which, "files": names, "n_paths": preset.n_paths, "seed": seed}))
        }
        Command::Convergence {
            common,
            paths,
            level_min,
            level_max,
        } => {
            if level_min > level_max || level_max > 20 {
                return Err(CliError::Usage("need level_min <= level_max <= 20".to_string()));
            }
            let mut oracle = GbmOracle {
                h: 1.0,
                sigma: 0.5,
                v0: 1.0,
                t_end: 1.0,
            };
            let mut seed = 0;
            let mut dir = PathBuf::from(".");
            if let Some(path) = &common.config {
                let doc = read_doc(path)?;
                oracle.h = doc.h.unwrap_or(oracle.h);
                oracle.sigma = doc.sigma.unwrap_or(oracle.sigma);
                oracle.v0 = doc.v0.unwrap_or(oracle.v0);
                oracle.t_end = doc.t_end.unwrap_or(oracle.t_end);
                seed = doc.seed.unwrap_or(seed);
                dir = doc.outputs.unwrap_or(dir);
            }
            if !(oracle.v0 > 0.0 && oracle.t_end > 0.0 && oracle.h >= 0.0 && oracle.sigma >= 0.0) {
                return Err(CliError::Config("convergence needs h, sigma >= 0 and v0, t_end > 0".to_string()));
            }
            if paths == 0 {
                return Err(CliError::Usage("--paths must be >= 1".to_string()));
            }
            seed = common.seed.unwrap_or(seed);
            dir = common.out.clone().unwrap_or(dir);
            let schemes = [SchemeKind::EulerMaruyama, SchemeKind::Milstein, SchemeKind::StrongTaylor15];
            let levels: Vec<u32> = (level_min..=level_max).collect();
            let study = strong_convergence_study(oracle, &schemes, &levels, paths, seed)?;
            let file = write_file(out_dir(&dir)?.join("convergence.csv"), |w| {
                writeln!(w, "scheme,dt,error")?;
                for r in &study.rows {
                    writeln!(w, "{},{},{}", r.scheme, fmt_f64(r.dt), fmt_f64(r.error))?;
                }
                Ok(())
            })?;
            let orders: serde_json::Map<String, serde_json::Value> =
                study.orders.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            print_json(out, &json!({"file": file.display().to_string(), "orders": orders}))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let argv = std::iter::once("forest-sde").chain(args.iter().copied()).map(String::from);
        let code = run(argv, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&["bogus"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&[]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["figure", "--which", "9"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["classify"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn numeric_errors_exit_3() {
        let e: CliError = Error::NonFinite { step: 7 }.into();
        assert_eq!(e.exit_code(), EXIT_NUMERIC);
        assert!(e.to_string().contains("step 7"));
        let e: CliError = Error::Domain("x".into()).into();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }
}
