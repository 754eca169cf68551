//! `euler-line <command> [--config FILE] [--set key=value ...] [--out DIR]`
//!
//! Exit status: 0 on success, 2 on configuration errors, 3 on numerical
//! failures, 1 on I/O errors. Failures print `{"error": {...}}` to stderr.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::config::{load_config, ConfigError, RunConfig, SpectrumMethod};
use crate::dynamics::{advance_to, integrate, ns_field_into, LineState, Rk4, Trajectory};
use crate::lattice::{build_chain, canonical_representative, disk_intersection};
use crate::manifold::{grow_manifold, growth_rate, tangent_split_for, Direction, GrowthSettings};
use crate::output::{trajectory_csv, trajectory_header, trajectory_row, write_atomic};
use crate::spectral::{
    continuous_bound, find_point_spectrum_cf, truncated_point_spectrum, SearchBox, SpectrumReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Class members near the disk, disk intersection, predicted spectrum case.
    Classify,
    /// Point spectrum of the class operator (JSON).
    Spectrum,
    /// Line-model trajectory with invariant columns (CSV).
    Simulate,
    /// Local unstable or stable manifold as a trajectory family.
    Manifold,
    /// Stroboscopic section of the forced model, one row per period.
    Poincare,
}

#[derive(Debug, Parser)]
#[command(name = "euler-line", version, about = "Linearized 2D Euler spectra and line-model dynamics")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set model.gamma=1.5`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shorthand for `--set spectral.method=...`.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cf,
    Matrix,
    Both,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code()}})
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// What a command produced: text for stdout and the files written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

struct Sink<'a> {
    dir: &'a Path,
    outcome: Outcome,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = write_atomic(self.dir, name, bytes).map_err(|source| CliError::Io {
            path: self.dir.join(name),
            source,
        })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

/// Resolves the configuration from CLI arguments.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut overrides = cli.set.clone();
    if let Some(m) = cli.method {
        let name = match m {
            MethodArg::Cf => "cf",
            MethodArg::Matrix => "matrix",
            MethodArg::Both => "both",
        };
        overrides.push(format!("spectral.method=\"{name}\""));
    }
    if let Some(out) = &cli.out {
        let quoted = toml::Value::String(out.to_string_lossy().into_owned()).to_string();
        overrides.push(format!("output.dir={quoted}"));
    }
    Ok(load_config(cli.config.as_deref(), &overrides)?)
}

/// Runs one command, writing its files under `cfg.output.dir`.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut sink = Sink {
        dir: &cfg.output.dir,
        outcome: Outcome::default(),
    };
    match cmd {
        Command::Classify => classify(cfg, &mut sink)?,
        Command::Spectrum => spectrum(cfg, &mut sink)?,
        Command::Simulate => simulate(cfg, &mut sink)?,
        Command::Manifold => manifold(cfg, &mut sink)?,
        Command::Poincare => poincare(cfg, &mut sink)?,
    }
    Ok(sink.outcome)
}

fn classify(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let (khat, p) = (cfg.khat(), cfg.p());
    let sys = cfg.linear_subsystem();
    let centre = sys.centre_index();
    let chain = build_chain(khat, p, centre - 3, centre + 3).map_err(numerical)?;
    let members: Vec<_> = (centre - 3..=centre + 3)
        .map(|n| {
            let k = chain.member(n).unwrap();
            json!({"n": n, "k": [k.k1(), k.k2()], "rho": chain.rho(n).unwrap(), "a": chain.a(n).unwrap()})
        })
        .collect();
    let disk = disk_intersection(khat, p);
    let hits: Vec<_> = disk
        .iter()
        .map(|&n| {
            let k = khat.shifted(p, n).unwrap();
            json!({"n": n, "k": [k.k1(), k.k2()]})
        })
        .collect();
    let (case, prediction) = if disk.is_empty() {
        (1, "no point spectrum")
    } else {
        (2, "point spectrum possible")
    };
    let canon = canonical_representative(khat, p).map_err(numerical)?;
    let report = json!({
        "khat": [khat.k1(), khat.k2()],
        "p": [p.k1(), p.k2()],
        "gamma": cfg.model.gamma,
        "canonical_khat": [canon.k1(), canon.k2()],
        "disk_radius_sq": p.norm_sq(),
        "members": members,
        "disk_intersection": hits,
        "case": case,
        "prediction": prediction,
        "b": continuous_bound(&sys),
        "segment_halfwidth": sys.segment_halfwidth(),
    });

    let mut text = format!("class {khat} + n·{p}, disk |k|² ≤ {}\n", p.norm_sq());
    for n in centre - 3..=centre + 3 {
        let k = chain.member(n).unwrap();
        let mark = if disk.contains(&n) { "  in disk" } else { "" };
        text.push_str(&format!("  n = {n:>3}  k = {:<9}  |k|² = {:>3}{mark}\n", k.to_string(), chain.rho(n).unwrap()));
    }
    let listed: Vec<String> = disk
        .iter()
        .map(|&n| format!("n={n}: {}", khat.shifted(p, n).unwrap()))
        .collect();
    text.push_str(&format!("disk intersection: {{{}}}\n", listed.join(", ")));
    text.push_str(&format!("case ({case}): {prediction}\n"));
    text.push_str(&format!(
        "continuous spectrum: [-{0}i, {0}i]\n",
        sys.segment_halfwidth()
    ));
    sink.json("classify.json", &report)?;
    sink.outcome.stdout = text;
    Ok(())
}

fn spectrum(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let sys = cfg.linear_subsystem();
    let s = &cfg.spectral;
    let mut reports: Vec<(&str, SpectrumReport)> = Vec::new();
    if matches!(s.method, SpectrumMethod::Cf | SpectrumMethod::Both) {
        let r = find_point_spectrum_cf(&sys, SearchBox::square(s.search_half_width), s.depth).map_err(numerical)?;
        reports.push(("spectrum_cf.json", r));
    }
    if matches!(s.method, SpectrumMethod::Matrix | SpectrumMethod::Both) {
        let r = truncated_point_spectrum(&sys, s.truncation, cfg.spectral_threshold()).map_err(numerical)?;
        reports.push(("spectrum_matrix.json", r));
    }
    for (name, r) in &reports {
        let value = r.to_json();
        sink.json(name, &value)?;
        sink.outcome.stdout.push_str(&serde_json::to_string_pretty(&value).unwrap());
        sink.outcome.stdout.push('\n');
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = cfg.model_params();
    let forcing = cfg.forcing_spec();
    let y0 = cfg.initial_state(&params)?.into_vec();
    let i = &cfg.integration;
    let steps = (i.t_end / i.dt).round() as usize;
    let traj = if steps == 0 {
        Trajectory {
            times: vec![0.0],
            states: vec![y0],
        }
    } else {
        let field = |t: f64, y: &[f64], out: &mut [f64]| ns_field_into(&params, &forcing, t, y, out);
        integrate(&field, &y0, 0.0, i.dt, steps, i.stride).map_err(numerical)?
    };
    let csv = trajectory_csv(&params, &traj, cfg.output.sobolev_order, None, 1.0);
    sink.write("trajectory.csv", csv.as_bytes())?;
    let (_, last) = traj.last().unwrap();
    let (e, z) = crate::dynamics::invariants_flat(&params, last);
    sink.outcome.stdout = format!("{} samples to t = {}; final E = {e:.16e}, Z = {z:.16e}\n", traj.len(), traj.times[traj.len() - 1]);
    Ok(())
}

/// Longest prefix of `traj` whose norm stays within `bound`.
fn linear_window(traj: &Trajectory, bound: f64) -> Trajectory {
    let end = traj
        .states
        .iter()
        .position(|s| s.iter().map(|x| x * x).sum::<f64>().sqrt() > bound)
        .unwrap_or(traj.len());
    Trajectory {
        times: traj.times[..end].to_vec(),
        states: traj.states[..end].to_vec(),
    }
}

fn manifold(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = cfg.model_params();
    let m = &cfg.manifold;
    let split = tangent_split_for(&params, m.re_threshold).map_err(numerical)?;
    let settings = GrowthSettings {
        delta: cfg.manifold_delta(),
        samples: m.samples,
        t_end: m.t_end,
        dt: m.dt,
        stride: m.stride,
        direction: m.direction,
    };
    let family = grow_manifold(&split, &params, &settings).map_err(numerical)?;
    let (dir_name, time_sign) = match m.direction {
        Direction::Unstable => ("unstable", 1.0),
        Direction::Stable => ("stable", -1.0),
    };
    let fixed = LineState::fixed_point(&params).into_vec();
    let bound = 1e-3 * cfg.model.gamma.abs();
    let mut rates = Vec::new();
    for (j, (traj, theta)) in family.trajectories.iter().zip(&family.thetas).enumerate() {
        let csv = trajectory_csv(&params, traj, cfg.output.sobolev_order, Some(&fixed), time_sign);
        sink.write(&format!("manifold_{dir_name}_{j}.csv"), csv.as_bytes())?;
        let entry = match growth_rate(&linear_window(traj, bound), bound) {
            Ok(fit) => json!({"theta": theta, "rate": fit.rate, "frequency": fit.frequency}),
            Err(e) => json!({"theta": theta, "rate": null, "frequency": null, "error": e.to_string()}),
        };
        rates.push(entry);
    }
    let index = json!({
        "delta": family.delta,
        "samples": m.samples,
        "direction": dir_name,
        "lambda_u": {"re": split.lambda_u.re, "im": split.lambda_u.im},
        "rates": rates,
    });
    sink.json("manifold.json", &index)?;
    sink.outcome.stdout = serde_json::to_string_pretty(&index).unwrap() + "\n";
    Ok(())
}

fn poincare(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let params = cfg.model_params();
    let forcing = cfg.forcing_spec();
    let mut y = cfg.initial_state(&params)?.into_vec();
    let period = forcing.period();
    let field = |t: f64, y: &[f64], out: &mut [f64]| ns_field_into(&params, &forcing, t, y, out);
    let mut rk = Rk4::new(y.len());
    let s = cfg.output.sobolev_order;
    let mut csv = trajectory_header(&params);
    csv.push('\n');
    csv.push_str(&trajectory_row(&params, 0.0, &y, s));
    csv.push('\n');
    for k in 1..=cfg.forcing.periods {
        let (t0, t1) = ((k - 1) as f64 * period, k as f64 * period);
        advance_to(&field, &mut rk, &mut y, t0, t1, cfg.integration.dt).map_err(numerical)?;
        csv.push_str(&trajectory_row(&params, t1, &y, s));
        csv.push('\n');
    }
    sink.write("poincare.csv", csv.as_bytes())?;
    sink.outcome.stdout = format!("{} section points, period {period:.16e}\n", cfg.forcing.periods + 1);
    Ok(())
}

/// Parses `args`, runs the command, reports to stdout/stderr and returns
/// the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = json!({"error": {"kind": "config", "message": e.to_string().trim(), "exit_code": 2}});
            eprintln!("{err}");
            return 2;
        }
    };
    match resolve_config(&cli).and_then(|cfg| run_command(cli.command, &cfg)) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
