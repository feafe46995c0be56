//! `jc-discord` command-line front end.
//!
//! Every data command writes CSV (to `--out` or stdout) with `{:.16e}`
//! numbers. Exit codes: 0 ok, 1 validation failure, 2 I/O, 3 bad parameters.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{beat_report, predicted_beats, required_steps, uniform_grid, BeatReport, SampledSignal};
use crate::closed_form::{inversion, EvolutionAngles, ThermalWeights};
use crate::measurement::{discord, minimize_discord, MeasurementBasis, MinimizeOptions};
use crate::oracle::{cross_validate_model, AnalyticModel, ClosedForm, ValidationOptions, ValidationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

pub const DEFAULT_LAMBDA0: f64 = 0.5;
pub const DEFAULT_THETA_STEPS: usize = 181;
pub const DEFAULT_PHI_STEPS: usize = 37;
/// Default span in predicted ⟨σz⟩ beat periods; two full interior nodes.
pub const DEFAULT_BEATS: f64 = 2.5;
pub const VALIDATE_TAU_MAX: f64 = 20.0;
pub const VALIDATE_TAU_STEPS: usize = 64;
pub const VALIDATE_PHOTONS: [u32; 5] = [0, 1, 2, 4, 8];
pub const VALIDATE_LAMBDA0: [f64; 3] = [0.5, 0.75, 1.0];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("validation failed")]
    ValidationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
            CliError::ValidationFailed => EXIT_VALIDATION,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Parser, Debug)]
#[command(name = "jc-discord", version, about = "Quantum discord and inversion dynamics of the Jaynes-Cummings model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Discord over a (tau, theta) grid: tau,theta,discord
    Surface(Flags),
    /// Minimum discord and inversion vs tau: tau,delta,theta_star,inversion
    Dynamics(Flags),
    /// Discord vs tau at a fixed theta: tau,discord
    Slice(Flags),
    /// Measured vs predicted beat structure of inversion and minimum discord
    Beats(Flags),
    /// Cross-check the closed forms against the numerical oracle
    Validate(Flags),
    /// Exact and large-n beat predictions
    Predict(Flags),
}

#[derive(Args, Debug, Default, Clone, PartialEq)]
pub struct Flags {
    /// Photon number of the initial Fock state
    #[arg(long)]
    pub n: Option<u32>,
    /// Ground-state weight of the thermal atom
    #[arg(long, conflicts_with = "temp_ratio")]
    pub lambda0: Option<f64>,
    /// x = hbar*omega/kT; sets lambda0 = 1/(1+exp(-x))
    #[arg(long)]
    pub temp_ratio: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub tau_steps: Option<usize>,
    #[arg(long)]
    pub theta_steps: Option<usize>,
    #[arg(long)]
    pub phi_steps: Option<usize>,
    /// Measurement angle (slice only)
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG plot here
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// key=value file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Parses a `key=value` config file. Blank lines and `#` comments are skipped;
/// keys accept `-` or `_`.
pub fn parse_config(text: &str) -> Result<Flags, CliError> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
        v.parse().map_err(|_| CliError::Invalid(format!("config: bad value for {key}: {v:?}")))
    }
    let mut f = Flags::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Invalid(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = k.trim().replace('-', "_");
        let v = v.trim();
        match key.as_str() {
            "n" => f.n = Some(num(&key, v)?),
            "lambda0" => f.lambda0 = Some(num(&key, v)?),
            "temp_ratio" => f.temp_ratio = Some(num(&key, v)?),
            "tau_max" => f.tau_max = Some(num(&key, v)?),
            "tau_steps" => f.tau_steps = Some(num(&key, v)?),
            "theta_steps" => f.theta_steps = Some(num(&key, v)?),
            "phi_steps" => f.phi_steps = Some(num(&key, v)?),
            "theta" => f.theta = Some(num(&key, v)?),
            "out" => f.out = Some(PathBuf::from(v)),
            "plot" => f.plot = Some(PathBuf::from(v)),
            "seed" => f.seed = Some(num(&key, v)?),
            _ => return Err(CliError::Invalid(format!("config line {}: unknown key {k:?}", lineno + 1))),
        }
    }
    Ok(f)
}

/// `flags` over `file`. A temperature given on the command line in either
/// form replaces both forms from the file.
pub fn overlay(file: Flags, flags: Flags) -> Flags {
    let temp_from_flags = flags.lambda0.is_some() || flags.temp_ratio.is_some();
    Flags {
        n: flags.n.or(file.n),
        lambda0: if temp_from_flags { flags.lambda0 } else { file.lambda0 },
        temp_ratio: if temp_from_flags { flags.temp_ratio } else { file.temp_ratio },
        tau_max: flags.tau_max.or(file.tau_max),
        tau_steps: flags.tau_steps.or(file.tau_steps),
        theta_steps: flags.theta_steps.or(file.theta_steps),
        phi_steps: flags.phi_steps.or(file.phi_steps),
        theta: flags.theta.or(file.theta),
        out: flags.out.or(file.out),
        plot: flags.plot.or(file.plot),
        seed: flags.seed.or(file.seed),
        config: None,
    }
}

/// Validated parameters. Fields left `None` take per-command defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: Option<u32>,
    pub weights: Option<ThermalWeights>,
    pub tau_max: Option<f64>,
    pub tau_steps: Option<usize>,
    pub theta_steps: usize,
    pub phi_steps: usize,
    pub theta: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
    /// Accepted for reproducibility bookkeeping; no command draws random numbers.
    pub seed: u64,
}

impl RunConfig {
    pub fn from_flags(f: &Flags) -> Result<Self, CliError> {
        let weights = match (f.lambda0, f.temp_ratio) {
            (Some(_), Some(_)) => return Err(CliError::Invalid("give either lambda0 or temp-ratio, not both".into())),
            (Some(l), None) => Some(ThermalWeights::new(l)?),
            (None, Some(x)) => Some(ThermalWeights::from_temperature(x)?),
            (None, None) => None,
        };
        if let Some(t) = f.tau_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Invalid(format!("tau-max must be positive and finite, got {t}")));
            }
        }
        for (name, v) in [("tau-steps", f.tau_steps), ("theta-steps", f.theta_steps), ("phi-steps", f.phi_steps)] {
            if matches!(v, Some(s) if s < 2) {
                return Err(CliError::Invalid(format!("{name} must be at least 2")));
            }
        }
        if let Some(t) = f.theta {
            if !t.is_finite() {
                return Err(CliError::Invalid("theta must be finite".into()));
            }
        }
        Ok(Self {
            n: f.n,
            weights,
            tau_max: f.tau_max,
            tau_steps: f.tau_steps,
            theta_steps: f.theta_steps.unwrap_or(DEFAULT_THETA_STEPS),
            phi_steps: f.phi_steps.unwrap_or(DEFAULT_PHI_STEPS),
            theta: f.theta,
            output_path: f.out.clone(),
            plot_path: f.plot.clone(),
            seed: f.seed.unwrap_or(0),
        })
    }

    fn photons(&self) -> Result<u32, CliError> {
        self.n.ok_or_else(|| CliError::Invalid("--n is required".into()))
    }

    fn weights_or_default(&self) -> ThermalWeights {
        self.weights.unwrap_or_else(|| ThermalWeights::new(DEFAULT_LAMBDA0).expect("default lambda0 is valid"))
    }

    fn default_tau_max(n: u32) -> f64 {
        // the n = 0 "beat" degenerates; π(√1+√0) still gives a sensible span
        DEFAULT_BEATS * std::f64::consts::PI * (f64::from(n + 1).sqrt() + f64::from(n).sqrt())
    }

    /// τ grid for a discord-valued command (sampled for δ's halved period).
    pub fn tau_grid(&self, n: u32) -> Vec<f64> {
        let tau_max = self.tau_max.unwrap_or_else(|| Self::default_tau_max(n));
        let steps = self.tau_steps.unwrap_or_else(|| required_steps(n, tau_max, true));
        uniform_grid(tau_max, steps)
    }

    fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions { coarse_points: self.theta_steps, ..Default::default() }
    }
}

/// Fixed-width scientific notation, 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    // avoid "-0" rows that differ only in the sign of zero
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn write_output(path: Option<&Path>, content: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content).map_err(io_err(format!("cannot write {}", p.display()))),
        None => stdout.write_all(content.as_bytes()).map_err(io_err("stdout")),
    }
}

fn angles(n: u32, tau: f64) -> Result<EvolutionAngles, CliError> {
    Ok(EvolutionAngles::new(n, tau)?)
}

fn theta_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|j| std::f64::consts::PI * j as f64 / (steps - 1) as f64).collect()
}

/// Discord on the (τ, θ) grid, θ spanning [0, π]; rows τ-major.
pub fn surface_rows(n: u32, w: &ThermalWeights, tau: &[f64], theta_steps: usize) -> Result<Vec<[f64; 3]>, CliError> {
    let thetas = theta_grid(theta_steps);
    let blocks: Vec<Vec<[f64; 3]>> = tau
        .par_iter()
        .map(|&t| {
            let ang = angles(n, t)?;
            Ok(thetas.iter().map(|&th| [t, th, discord(w, &ang, &MeasurementBasis::theta(th)).discord]).collect())
        })
        .collect::<Result<_, CliError>>()?;
    Ok(blocks.concat())
}

/// (τ, δ, θ*, ⟨σz⟩) per grid point.
pub fn dynamics_rows(n: u32, w: &ThermalWeights, tau: &[f64], opts: &MinimizeOptions) -> Result<Vec<[f64; 4]>, CliError> {
    tau.par_iter()
        .map(|&t| {
            let ang = angles(n, t)?;
            let m = minimize_discord(w, &ang, opts);
            Ok([t, m.delta, m.theta_star, inversion(w, &ang)])
        })
        .collect()
}

pub fn slice_rows(n: u32, w: &ThermalWeights, tau: &[f64], theta: f64) -> Result<Vec<[f64; 2]>, CliError> {
    let b = MeasurementBasis::theta(theta);
    tau.par_iter().map(|&t| Ok([t, discord(w, &angles(n, t)?, &b).discord])).collect()
}

fn csv<const K: usize>(header: &str, rows: &[[f64; K]]) -> String {
    let mut s = String::with_capacity(rows.len() * K * 24 + header.len() + 1);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&v| fmt_num(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn beats_csv(inv: &BeatReport, delta: &BeatReport) -> String {
    let mut s = String::from("signal,mean_period,beat_period,oscillations_per_beat,extrema_count\n");
    for (name, r) in [("inversion", inv), ("delta", delta)] {
        let _ = writeln!(
            s,
            "{name},{},{},{},{}",
            fmt_num(r.mean_period),
            fmt_num(r.beat_period),
            fmt_num(r.oscillations_per_beat),
            r.extrema_count
        );
    }
    s
}

mod svg {
    use std::fmt::Write as _;

    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;

    fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    }

    fn frame(title: &str, xlabel: &str, xr: (f64, f64), yr: (f64, f64)) -> String {
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"20\" text-anchor=\"middle\">{title}</text>\n\
             <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            W / 2.0,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>", W / 2.0, H - 10.0);
        let _ = writeln!(s, "<text x=\"{PAD}\" y=\"{}\">{:.3}</text>", H - PAD + 15.0, xr.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", W - PAD, H - PAD + 15.0, xr.1);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", PAD - 4.0, H - PAD, yr.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", PAD - 4.0, PAD + 10.0, yr.1);
        s
    }

    fn map(v: f64, r: (f64, f64), a: f64, b: f64) -> f64 {
        a + (v - r.0) / (r.1 - r.0) * (b - a)
    }

    pub fn lines(title: &str, xlabel: &str, x: &[f64], series: &[(&str, &str, &[f64])]) -> String {
        let xr = bounds(x.iter().copied());
        let yr = bounds(series.iter().flat_map(|s| s.2.iter().copied()));
        let mut s = frame(title, xlabel, xr, yr);
        for (k, (name, color, y)) in series.iter().enumerate() {
            let pts: Vec<String> =
                x.iter().zip(y.iter()).map(|(&a, &b)| format!("{:.2},{:.2}", map(a, xr, PAD, W - PAD), map(b, yr, H - PAD, PAD))).collect();
            let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>", pts.join(" "));
            let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>", W - PAD + 5.0, PAD + 15.0 * (k as f64 + 1.0));
        }
        s.push_str("</svg>\n");
        s
    }

    /// Grey-scale map of `z[i][j]` over (x_i, y_j), at most `max_cells` per axis.
    pub fn heatmap(title: &str, x: &[f64], y: &[f64], z: &[Vec<f64>], max_cells: usize) -> String {
        let xr = bounds(x.iter().copied());
        let yr = bounds(y.iter().copied());
        let zr = bounds(z.iter().flatten().copied());
        let mut s = frame(title, "tau (vertical: theta)", xr, yr);
        let si = x.len().div_ceil(max_cells).max(1);
        let sj = y.len().div_ceil(max_cells).max(1);
        let cw = (W - 2.0 * PAD) / x.len().div_ceil(si) as f64;
        let ch = (H - 2.0 * PAD) / y.len().div_ceil(sj) as f64;
        for (ci, i) in (0..x.len()).step_by(si).enumerate() {
            for (cj, j) in (0..y.len()).step_by(sj).enumerate() {
                let g = (255.0 * (1.0 - map(z[i][j], zr, 0.0, 1.0))).round() as u8;
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({g},{g},{g})\"/>",
                    PAD + ci as f64 * cw,
                    H - PAD - (cj as f64 + 1.0) * ch,
                    cw + 0.2,
                    ch + 0.2
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn write_plot(cfg: &RunConfig, render: impl FnOnce() -> String) -> Result<(), CliError> {
    if let Some(p) = &cfg.plot_path {
        fs::write(p, render()).map_err(io_err(format!("cannot write {}", p.display())))?;
    }
    Ok(())
}

fn column<const K: usize>(rows: &[[f64; K]], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

pub fn cmd_surface(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let n = cfg.photons()?;
    let w = cfg.weights_or_default();
    let tau = cfg.tau_grid(n);
    let rows = surface_rows(n, &w, &tau, cfg.theta_steps)?;
    write_output(cfg.output_path.as_deref(), &csv("tau,theta,discord", &rows), stdout)?;
    write_plot(cfg, || {
        let z: Vec<Vec<f64>> = rows.chunks(cfg.theta_steps).map(|c| column(c, 2)).collect();
        svg::heatmap(&format!("D(tau, theta), n = {n}"), &tau, &theta_grid(cfg.theta_steps), &z, 200)
    })
}

pub fn cmd_dynamics(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let n = cfg.photons()?;
    let w = cfg.weights_or_default();
    let tau = cfg.tau_grid(n);
    let rows = dynamics_rows(n, &w, &tau, &cfg.minimize_options())?;
    write_output(cfg.output_path.as_deref(), &csv("tau,delta,theta_star,inversion", &rows), stdout)?;
    write_plot(cfg, || {
        let (d, i) = (column(&rows, 1), column(&rows, 3));
        svg::lines(&format!("n = {n}"), "tau", &tau, &[("delta", "blue", &d), ("inversion", "red", &i)])
    })
}

pub fn cmd_slice(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let n = cfg.photons()?;
    let theta = cfg.theta.ok_or_else(|| CliError::Invalid("slice needs --theta".into()))?;
    let w = cfg.weights_or_default();
    let tau = cfg.tau_grid(n);
    let rows = slice_rows(n, &w, &tau, theta)?;
    write_output(cfg.output_path.as_deref(), &csv("tau,discord", &rows), stdout)?;
    write_plot(cfg, || {
        let d = column(&rows, 1);
        svg::lines(&format!("D at theta = {theta}, n = {n}"), "tau", &tau, &[("discord", "blue", &d)])
    })
}

pub struct BeatAnalysis {
    pub n: u32,
    /// dynamics rows (τ, δ, θ*, ⟨σz⟩)
    pub rows: Vec<[f64; 4]>,
    pub inversion: BeatReport,
    pub delta: BeatReport,
}

/// Measured beat reports of ⟨σz⟩ and δ on the command's τ grid.
pub fn beat_analysis(cfg: &RunConfig) -> Result<BeatAnalysis, CliError> {
    let n = cfg.photons()?;
    let pred = predicted_beats(n)?;
    let w = cfg.weights_or_default();
    let tau = cfg.tau_grid(n);
    let tau_max = tau[tau.len() - 1];
    if tau_max < 2.0 * pred.beat_period {
        return Err(CliError::Invalid(format!(
            "tau-max {tau_max} is shorter than two predicted beat periods ({:.6})",
            2.0 * pred.beat_period
        )));
    }
    let rows = dynamics_rows(n, &w, &tau, &cfg.minimize_options())?;
    let inversion = beat_report(&SampledSignal::new(tau.clone(), column(&rows, 3))?)?;
    let delta = beat_report(&SampledSignal::new(tau, column(&rows, 1))?)?;
    Ok(BeatAnalysis { n, rows, inversion, delta })
}

pub fn cmd_beats(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let BeatAnalysis { n, rows, inversion: inv, delta } = beat_analysis(cfg)?;
    let pred = predicted_beats(n)?;
    let w = cfg.weights_or_default();
    let mut s = String::new();
    let _ = writeln!(s, "n = {n}, lambda0 = {}, {} samples on [0, {}]", w.lambda0, rows.len(), rows[rows.len() - 1][0]);
    let _ = writeln!(s, "{:<22} {:>12} {:>12} {:>12} {:>8}", "", "mean_period", "beat_period", "osc/beat", "extrema");
    let _ = writeln!(
        s,
        "{:<22} {:>12.6} {:>12.6} {:>12.6} {:>8}",
        "predicted inversion", pred.mean_period, pred.beat_period, pred.oscillations_per_beat, "-"
    );
    for (name, r) in [("measured inversion", &inv), ("measured delta", &delta)] {
        let _ = writeln!(
            s,
            "{name:<22} {:>12.6} {:>12.6} {:>12.6} {:>8}",
            r.mean_period, r.beat_period, r.oscillations_per_beat, r.extrema_count
        );
    }
    let _ = writeln!(s, "period_ratio.mean = {:.6}", delta.mean_period / inv.mean_period);
    let _ = writeln!(s, "period_ratio.beat = {:.6}", delta.beat_period / inv.beat_period);
    let alt: Vec<String> = delta.alternation.iter().map(|a| format!("{a:.4}")).collect();
    let _ = writeln!(s, "delta maxima alternation per beat window: [{}]", alt.join(", "));
    if (w.lambda0 - 0.5).abs() > 1e-12 {
        let _ = writeln!(s, "note: predictions assume lambda0 = 0.5");
    }
    stdout.write_all(s.as_bytes()).map_err(io_err("stdout"))?;
    if let Some(p) = &cfg.output_path {
        fs::write(p, beats_csv(&inv, &delta)).map_err(io_err(format!("cannot write {}", p.display())))?;
    }
    write_plot(cfg, || {
        let tau = column(&rows, 0);
        let (d, i) = (column(&rows, 1), column(&rows, 3));
        svg::lines(&format!("beats, n = {n}"), "tau", &tau, &[("delta", "blue", &d), ("inversion", "red", &i)])
    })
}

pub struct ValidationSweep {
    pub merged: ValidationReport,
    /// (n, λ0, report) per configuration
    pub parts: Vec<(u32, f64, ValidationReport)>,
}

/// Runs the oracle comparison over every configured (n, λ0).
pub fn validate_model<M: AnalyticModel>(model: &M, cfg: &RunConfig) -> Result<ValidationSweep, CliError> {
    let photons: Vec<u32> = match cfg.n {
        Some(n) => vec![n],
        None => VALIDATE_PHOTONS.to_vec(),
    };
    let weights: Vec<ThermalWeights> = match cfg.weights {
        Some(w) => vec![w],
        None => VALIDATE_LAMBDA0.iter().map(|&l| ThermalWeights::new(l)).collect::<Result<_, _>>()?,
    };
    let tau = uniform_grid(cfg.tau_max.unwrap_or(VALIDATE_TAU_MAX), cfg.tau_steps.unwrap_or(VALIDATE_TAU_STEPS));
    let opts = ValidationOptions { theta_points: cfg.theta_steps, phi_points: cfg.phi_steps, ..Default::default() };
    let mut parts = Vec::new();
    let mut merged = ValidationReport::default();
    for &n in &photons {
        for w in &weights {
            let r = cross_validate_model(model, n, &tau, w, &opts)?;
            merged = merged.merge(&r);
            parts.push((n, w.lambda0, r));
        }
    }
    Ok(ValidationSweep { merged, parts })
}

pub fn cmd_validate<M: AnalyticModel>(model: &M, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    if cfg.plot_path.is_some() {
        return Err(CliError::Invalid("validate has no plot".into()));
    }
    let ValidationSweep { merged, parts } = validate_model(model, cfg)?;
    let mut s = String::new();
    for (n, l0, r) in &parts {
        let _ = writeln!(s, "n={n} lambda0={l0} {}", if r.passed() { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(s, "{merged}");
    stdout.write_all(s.as_bytes()).map_err(io_err("stdout"))?;
    if let Some(p) = &cfg.output_path {
        fs::write(p, merged.to_key_value()).map_err(io_err(format!("cannot write {}", p.display())))?;
    }
    if merged.passed() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

pub fn predict_text(n: u32) -> Result<String, CliError> {
    let p = predicted_beats(n)?;
    let mut s = String::new();
    let _ = writeln!(s, "n = {n}");
    let _ = writeln!(s, "exact.mean_period = {}", fmt_num(p.mean_period));
    let _ = writeln!(s, "exact.beat_period = {}", fmt_num(p.beat_period));
    let _ = writeln!(s, "exact.oscillations_per_beat = {}", fmt_num(p.oscillations_per_beat));
    let _ = writeln!(s, "large_n.mean_period = {}", fmt_num(p.large_n_mean_period));
    let _ = writeln!(s, "large_n.beat_period = {}", fmt_num(p.large_n_beat_period));
    let _ = writeln!(s, "large_n.oscillations_per_beat = {}", fmt_num(p.large_n_approx));
    let _ = writeln!(s, "exact_minus_large_n = {}", fmt_num(p.oscillations_per_beat - p.large_n_approx));
    Ok(s)
}

pub fn cmd_predict(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    if cfg.plot_path.is_some() {
        return Err(CliError::Invalid("predict has no plot".into()));
    }
    let text = predict_text(cfg.photons()?)?;
    stdout.write_all(text.as_bytes()).map_err(io_err("stdout"))?;
    if let Some(p) = &cfg.output_path {
        fs::write(p, &text).map_err(io_err(format!("cannot write {}", p.display())))?;
    }
    Ok(())
}

fn resolve(flags: &Flags) -> Result<RunConfig, CliError> {
    let merged = match &flags.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(format!("cannot read {}", p.display())))?;
            overlay(parse_config(&text)?, flags.clone())
        }
        None => flags.clone(),
    };
    RunConfig::from_flags(&merged)
}

fn dispatch<M: AnalyticModel>(model: &M, cmd: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Slice(f) => cmd_slice(&resolve(f)?, stdout),
        Command::Surface(f) | Command::Dynamics(f) | Command::Beats(f) | Command::Validate(f) | Command::Predict(f) => {
            if f.theta.is_some() {
                return Err(CliError::Invalid("--theta applies to slice only".into()));
            }
            let mut cfg = resolve(f)?;
            // a theta key in a shared config file is meant for slice
            cfg.theta = None;
            match cmd {
                Command::Surface(_) => cmd_surface(&cfg, stdout),
                Command::Dynamics(_) => cmd_dynamics(&cfg, stdout),
                Command::Beats(_) => cmd_beats(&cfg, stdout),
                Command::Validate(_) => cmd_validate(model, &cfg, stdout),
                _ => cmd_predict(&cfg, stdout),
            }
        }
    }
}

/// Runs the CLI with `model` standing in for the closed forms during
/// `validate`. Returns the process exit code.
pub fn run_with_model<M, I, T>(model: &M, args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    M: AnalyticModel,
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(model, &cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_model(&ClosedForm, args, stdout, stderr)
}
