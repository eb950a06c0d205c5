// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a computation or file write fails, 2 on a
//! usage or configuration error.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{ChannelName, OutputFormat};
pub use config::{Config, ConfigError};
use output::{write_heatmap_png, Metadata, Table};

use crate::lindblad::steady_populations_with_tolerance;
use crate::model::{rad_to_hz, validate_regime};
use crate::response::chi_at_detuning;
use crate::scattering::Channel;
use crate::sensitivity::{
    ratio_map, resonant_slice, response_phase, sensitivity_map, Grid, PipelineConfig,
    SensitivityMap,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "nvreadout",
    version,
    about = "Dispersive cavity readout of an NV spin ensemble"
)]
struct Cli {
    /// Configuration file; `default` selects the built-in defaults.
    #[arg(long, global = true, default_value = "default")]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    format: Option<FormatArg>,
    #[arg(long, global = true)]
    channel: Option<ChannelArg>,
    /// Points per sweep axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Worker threads for map evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also render PNG heat maps.
    #[arg(long, global = true)]
    image: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    T,
    R,
    S21,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Steady-state level populations versus drive detuning.
    Populations,
    /// Amplitude and phase of the channel response versus drive detuning.
    Spectrum,
    /// Sensitivity map over cavity and drive detuning.
    Heatmap,
    /// One-mode and two-mode maps, their ratio and the resonant slice.
    Compare,
    /// Dispersive-regime report at the configured operating point.
    Validate,
}

/// A failure mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(format!("configuration error: {e}"))
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(format!("I/O error: {e}"))
    }
}

impl From<image::ImageError> for Failure {
    fn from(e: image::ImageError) -> Self {
        Failure::Compute(format!("image error: {e}"))
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = Config::load(&cli.config)?;
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(c) = cli.channel {
        cfg.output.channel = match c {
            ChannelArg::T => ChannelName::T,
            ChannelArg::R => ChannelName::R,
            ChannelArg::S21 => ChannelName::S21,
        };
    }
    if let Some(n) = cli.grid {
        cfg.sweep.points = n;
    }
    cfg.output.image |= cli.image;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    let cfg = resolve_config(cli)?;
    if cli.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        pipeline: cfg.pipeline()?,
        cfg,
        out: cli.out.clone(),
    };
    let work = || match cli.command {
        Command::Populations => ctx.populations(),
        Command::Spectrum => ctx.spectrum(),
        Command::Heatmap => ctx.heatmap(),
        Command::Compare => ctx.compare(),
        Command::Validate => ctx.validate(),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Compute(e.to_string()))?
            .install(work),
        None => work(),
    }
}

struct Context {
    cfg: Config,
    pipeline: PipelineConfig,
    out: PathBuf,
}

/// Resolved parameters embedded in every file: the user-facing configuration
/// and the derived internal (rad/s) records.
#[derive(Serialize)]
struct Params<'a> {
    config: &'a Config,
    resolved: &'a PipelineConfig,
}

impl Context {
    fn meta(&self, command: &str, pipeline: &PipelineConfig, extra: &impl Serialize) -> Metadata {
        let fingerprint = pipeline.fingerprint(&(command, extra));
        self.meta_with(command, pipeline, fingerprint)
    }

    fn meta_with(&self, command: &str, pipeline: &PipelineConfig, fingerprint: String) -> Metadata {
        let params = Params {
            config: &self.cfg,
            resolved: pipeline,
        };
        Metadata::new(command, fingerprint, &params)
    }

    fn write(&self, table: &Table, stem: &str, meta: &Metadata) -> Result<PathBuf, Failure> {
        Ok(table.write(&self.out, stem, self.cfg.output.format, meta)?)
    }

    fn populations(&self) -> Result<Vec<PathBuf>, Failure> {
        let axis = self.cfg.spectrum_axis();
        let spin = &self.pipeline.spin;
        let tol = self.pipeline.steady_state_tolerance;
        let mut table = Table::new(vec!["delta_ex_hz", "p_ground", "p_excited"]);
        for &d in &axis {
            let p = steady_populations_with_tolerance(spin, d, tol)?;
            table.push(vec![rad_to_hz(d).into(), p.ground.into(), p.excited.into()]);
        }
        let meta = self.meta("populations", &self.pipeline, &axis);
        Ok(vec![self.write(&table, "populations", &meta)?])
    }

    fn spectrum(&self) -> Result<Vec<PathBuf>, Failure> {
        let axis = self.cfg.spectrum_axis();
        let p = &self.pipeline;
        let delta_cav = p.cavity.omega_cav - p.spin.omega_sys;
        let mut table = Table::new(vec![
            "delta_ex_hz",
            "abs_amplitude",
            "phase_rad",
            "power_transmittance",
            "chi_re",
            "chi_im",
        ]);
        for &d in &axis {
            let r = response_phase(p, delta_cav, d, p.spin.omega_sys)?;
            table.push(vec![
                rad_to_hz(d).into(),
                r.amplitude.norm().into(),
                r.phase.into(),
                r.power_transmittance.into(),
                r.chi.re.into(),
                r.chi.im.into(),
            ]);
        }
        let stem = format!("spectrum_{}", p.channel.short_name());
        let meta = self.meta("spectrum", p, &(delta_cav, &axis));
        Ok(vec![self.write(&table, &stem, &meta)?])
    }

    fn map(&self, channel: Channel) -> Result<(PipelineConfig, SensitivityMap), Failure> {
        let pipeline = self.pipeline.with_channel(channel);
        let map = sensitivity_map(
            &pipeline,
            &self.cfg.delta_cav_axis(),
            &self.cfg.delta_ex_axis(),
        )?;
        Ok((pipeline, map))
    }

    fn write_map(
        &self,
        command: &str,
        stem: &str,
        pipeline: &PipelineConfig,
        map: &SensitivityMap,
    ) -> Result<Vec<PathBuf>, Failure> {
        let mut table = Table::new(vec![
            "delta_cav_hz",
            "delta_ex_hz",
            "eta_tesla",
            "n_photons",
            "slope_rad_per_rad_s",
            "phase_rad",
            "power_transmittance",
            "flag",
        ]);
        for row in &map.values {
            for pt in row {
                table.push(vec![
                    rad_to_hz(pt.delta_cav).into(),
                    rad_to_hz(pt.delta_ex).into(),
                    pt.eta.into(),
                    pt.n_photons.into(),
                    pt.slope.into(),
                    pt.phase.into(),
                    pt.power_transmittance.into(),
                    pt.flag.as_str().into(),
                ]);
            }
        }
        let meta = self.meta_with(command, pipeline, map.fingerprint.clone());
        let mut paths = vec![self.write(&table, stem, &meta)?];
        if self.cfg.output.image {
            paths.push(self.png(stem, map)?);
        }
        Ok(paths)
    }

    fn png(&self, stem: &str, grid: &impl Grid) -> Result<PathBuf, Failure> {
        let (n, m) = grid.shape();
        let values: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..m).map(|j| grid.value(i, j)).collect())
            .collect();
        let path = self.out.join(format!("{stem}.png"));
        write_heatmap_png(&path, &values)?;
        Ok(path)
    }

    fn heatmap(&self) -> Result<Vec<PathBuf>, Failure> {
        let (pipeline, map) = self.map(self.pipeline.channel)?;
        let stem = format!("heatmap_{}", pipeline.channel.short_name());
        self.write_map("heatmap", &stem, &pipeline, &map)
    }

    fn compare(&self) -> Result<Vec<PathBuf>, Failure> {
        let one_mode = match self.pipeline.channel {
            Channel::OneModeR => Channel::OneModeR,
            _ => Channel::OneModeT,
        };
        let (p1, m1) = self.map(one_mode)?;
        let (p2, m2) = self.map(Channel::TwoModeS21)?;
        let mut paths = self.write_map(
            "compare",
            &format!("map_{}", one_mode.short_name()),
            &p1,
            &m1,
        )?;
        paths.extend(self.write_map("compare", "map_s21", &p2, &m2)?);

        let ratio = ratio_map(&m1, &m2)?;
        let axes = (&ratio.delta_cav_axis, &ratio.delta_ex_axis);
        let meta = self.meta(
            "compare",
            &self.pipeline,
            &(&m1.fingerprint, &m2.fingerprint, axes),
        );
        let mut table = Table::new(vec!["delta_cav_hz", "delta_ex_hz", "eta_ratio"]);
        for (i, &dc) in ratio.delta_cav_axis.iter().enumerate() {
            for (j, &de) in ratio.delta_ex_axis.iter().enumerate() {
                table.push(vec![
                    rad_to_hz(dc).into(),
                    rad_to_hz(de).into(),
                    ratio.values[i][j].into(),
                ]);
            }
        }
        paths.push(self.write(&table, "ratio", &meta)?);
        if self.cfg.output.image {
            paths.push(self.png("ratio", &ratio)?);
        }

        let mut slice = Table::new(vec![
            "delta_cav_hz",
            "delta_ex_hz",
            "eta_one_mode_tesla",
            "eta_two_mode_tesla",
            "eta_ratio",
        ]);
        let r = resonant_slice(&ratio, 0.0)?;
        let a = resonant_slice(&m1, 0.0)?;
        let b = resonant_slice(&m2, 0.0)?;
        let j = nearest(&ratio.delta_ex_axis, 0.0);
        let de = ratio.delta_ex_axis[j];
        for ((&(dc, ratio_v), &(_, eta1)), &(_, eta2)) in r.iter().zip(&a).zip(&b) {
            slice.push(vec![
                rad_to_hz(dc).into(),
                rad_to_hz(de).into(),
                eta1.into(),
                eta2.into(),
                ratio_v.into(),
            ]);
        }
        paths.push(self.write(&slice, "slice", &meta)?);
        Ok(paths)
    }

    fn validate(&self) -> Result<Vec<PathBuf>, Failure> {
        let p = &self.pipeline;
        let delta_ex = p.drive.omega_ex - p.spin.omega_sys;
        let pops = steady_populations_with_tolerance(&p.spin, delta_ex, p.steady_state_tolerance)?;
        let chi = chi_at_detuning(&p.spin, &pops, delta_ex, p.chi_mode)?;
        let report = validate_regime(
            &p.cavity,
            chi,
            p.drive.omega_ex,
            self.cfg.numerics.regime_threshold,
        )?;
        let mut table = Table::new(vec!["quantity", "value", "threshold", "pass"]);
        for (name, v) in ["loss_ratio", "detuning_ratio", "shift_ratio"]
            .iter()
            .zip(report.ratios())
        {
            table.push(vec![
                (*name).into(),
                v.into(),
                report.threshold.into(),
                (v < report.threshold).into(),
            ]);
        }
        if !report.pass {
            eprintln!("warning: operating point is outside the dispersive regime");
        }
        let meta = self.meta("validate", p, &report);
        Ok(vec![self.write(&table, "regime", &meta)?])
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    (0..axis.len())
        .min_by(|&a, &b| (axis[a] - x).abs().total_cmp(&(axis[b] - x).abs()))
        .expect("axis is non-empty")
}

/// Loads a configuration file, mapping the literal `default` to the built-in
/// defaults.
pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    Config::load(path)
}
