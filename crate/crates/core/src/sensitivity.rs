// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Shot-noise-limited magnetic-field sensitivity.
//!
//! For each (cavity detuning, drive detuning) pair the pipeline solves the
//! spin steady state at the drive detuning, evaluates `χ` at the drive
//! frequency, takes the phase of the selected scattering amplitude, and
//! differentiates that phase with respect to the spin transition frequency.
//! The phase error of the demodulator then converts to a frequency error
//! `δω = δφ/|dφ/dω_sys|` and a field error `η = δω/γ_e`.
//!
//! Detunings are always measured from the spin transition:
//! `delta_cav = ω_cav − ω_sys`, `delta_ex = ω_ex − ω_sys`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::demod::{phase_noise, photon_count};
use crate::error::{Error, Result};
use crate::lindblad::{steady_populations_with_tolerance, LevelPopulations};
use crate::model::{CavityModel, DemodModel, DriveModel, SpinModel, TwoModeCavityModel, GAMMA_E};
use crate::response::{chi_at_detuning, ChiMode};
use crate::scattering::{reflection_amplitude, s21_amplitude, transmission_amplitude, Channel};

/// Points with fewer detected photons than this are reported as infinite.
pub const MIN_PHOTONS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub spin: SpinModel,
    /// Single-mode cavity; its frequency is overridden by `delta_cav`.
    pub cavity: CavityModel,
    /// Two-mode cavity; mode 1 follows `delta_cav`, mode 2 keeps its offset.
    pub cav2: TwoModeCavityModel,
    pub drive: DriveModel,
    pub demod: DemodModel,
    pub channel: Channel,
    /// Finite-difference step for `dφ/dω_sys`, rad/s.
    pub fd_step: f64,
    pub chi_mode: ChiMode,
    /// Bound on the relative steady-state residual.
    pub steady_state_tolerance: f64,
    /// Test mode: hold the populations fixed instead of re-solving the
    /// steady state at each detuning.
    pub frozen_populations: Option<LevelPopulations>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.spin.validate()?;
        self.cavity.validate()?;
        self.cav2.validate()?;
        self.drive.validate()?;
        self.demod.validate()?;
        if !(self.steady_state_tolerance > 0.0) {
            return Err(Error::invalid("steady_state_tolerance must be positive"));
        }
        if !(self.fd_step > 0.0 && self.fd_step < self.spin.gamma_coh / 10.0) {
            return Err(Error::invalid(format!(
                "fd_step must lie in (0, gamma_coh/10) = (0, {:e}) rad/s",
                self.spin.gamma_coh / 10.0
            )));
        }
        Ok(())
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    /// Stable hash of every parameter, used to tag output files.
    pub fn fingerprint(&self, extra: &impl Serialize) -> String {
        let json = serde_json::to_string(&(self, extra)).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Complex response of the configured channel at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelResponse {
    pub amplitude: Complex64,
    pub phase: f64,
    pub power_transmittance: f64,
    pub chi: Complex64,
    pub populations: LevelPopulations,
}

/// Phase and power transmittance of the configured channel with
/// `ω_cav = omega_sys + delta_cav` and `ω_ex = omega_sys + delta_ex`.
pub fn response_phase(
    config: &PipelineConfig,
    delta_cav: f64,
    delta_ex: f64,
    omega_sys: f64,
) -> Result<ChannelResponse> {
    let spin = config.spin.with_omega_sys(omega_sys);
    let populations = match config.frozen_populations {
        Some(p) => p,
        None => steady_populations_with_tolerance(&spin, delta_ex, config.steady_state_tolerance)?,
    };
    let chi = chi_at_detuning(&spin, &populations, delta_ex, config.chi_mode)?;
    let omega_cav = omega_sys + delta_cav;
    let amplitude = match config.channel {
        Channel::OneModeT => {
            let cav = config.cavity.retuned(omega_cav)?;
            transmission_amplitude(&cav, chi, delta_cav - delta_ex)
        }
        Channel::OneModeR => {
            let cav = config.cavity.retuned(omega_cav)?;
            reflection_amplitude(&cav, chi, delta_cav - delta_ex)
        }
        Channel::TwoModeS21 => {
            let splitting = config.cav2.omega2 - config.cav2.omega1;
            let d1 = delta_ex - delta_cav;
            s21_amplitude(&config.cav2, chi, d1, d1 - splitting)
        }
    };
    Ok(ChannelResponse {
        amplitude,
        phase: amplitude.arg(),
        power_transmittance: amplitude.norm_sqr(),
        chi,
        populations,
    })
}

fn wrap_phase(d: f64) -> f64 {
    let w = (d + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn central_slope(
    config: &PipelineConfig,
    delta_cav: f64,
    delta_ex: f64,
    omega_sys: f64,
    center_phase: f64,
    h: f64,
) -> Result<f64> {
    // ω_cav and ω_ex stay put while ω_sys moves, so both detunings move the
    // opposite way.
    let minus = response_phase(config, delta_cav + h, delta_ex + h, omega_sys - h)?.phase;
    let plus = response_phase(config, delta_cav - h, delta_ex - h, omega_sys + h)?.phase;
    let span = wrap_phase(center_phase - minus) + wrap_phase(plus - center_phase);
    if span.abs() >= PI {
        return Err(Error::StepTooLarge(format!(
            "phase changes by {span:.3} rad across 2h = {:e} rad/s",
            2.0 * h
        )));
    }
    Ok(span / (2.0 * h))
}

/// `dφ/dω_sys` by central differences with step `config.fd_step`.
pub fn phase_slope(
    config: &PipelineConfig,
    delta_cav: f64,
    delta_ex: f64,
    omega_sys: f64,
) -> Result<f64> {
    phase_slope_with_step(config, delta_cav, delta_ex, omega_sys, config.fd_step)
}

pub fn phase_slope_with_step(
    config: &PipelineConfig,
    delta_cav: f64,
    delta_ex: f64,
    omega_sys: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let center = response_phase(config, delta_cav, delta_ex, omega_sys)?.phase;
    central_slope(config, delta_cav, delta_ex, omega_sys, center, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    Ok,
    /// `dφ/dω_sys` vanished.
    ZeroSlope,
    /// Fewer than [`MIN_PHOTONS`] photons reached the detector.
    NoPhotons,
    /// The point could not be evaluated (e.g. ill-posed steady state).
    Failed,
}

impl PointFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointFlag::Ok => "ok",
            PointFlag::ZeroSlope => "zero_slope",
            PointFlag::NoPhotons => "no_photons",
            PointFlag::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityPoint {
    pub delta_cav: f64,
    pub delta_ex: f64,
    pub phase: f64,
    pub slope: f64,
    pub power_transmittance: f64,
    pub n_photons: f64,
    pub delta_phi: f64,
    pub delta_omega: f64,
    /// Field sensitivity in T (T/√Hz at τ = 1 s).
    pub eta: f64,
    pub flag: PointFlag,
}

impl SensitivityPoint {
    fn failed(delta_cav: f64, delta_ex: f64) -> Self {
        SensitivityPoint {
            delta_cav,
            delta_ex,
            phase: f64::NAN,
            slope: f64::NAN,
            power_transmittance: f64::NAN,
            n_photons: f64::NAN,
            delta_phi: f64::INFINITY,
            delta_omega: f64::INFINITY,
            eta: f64::INFINITY,
            flag: PointFlag::Failed,
        }
    }
}

pub fn shot_noise_sensitivity(
    config: &PipelineConfig,
    delta_cav: f64,
    delta_ex: f64,
    omega_sys: f64,
) -> Result<SensitivityPoint> {
    let resp = response_phase(config, delta_cav, delta_ex, omega_sys)?;
    let n_photons = photon_count(
        config.drive.power_in,
        resp.power_transmittance,
        omega_sys + delta_cav,
        config.drive.tau,
    );
    let mut point = SensitivityPoint {
        delta_cav,
        delta_ex,
        phase: resp.phase,
        slope: f64::NAN,
        power_transmittance: resp.power_transmittance,
        n_photons,
        delta_phi: f64::INFINITY,
        delta_omega: f64::INFINITY,
        eta: f64::INFINITY,
        flag: PointFlag::Ok,
    };
    // Checked before the slope: a vanishing amplitude has no defined phase.
    if !(n_photons >= MIN_PHOTONS) {
        point.flag = PointFlag::NoPhotons;
        return Ok(point);
    }
    let slope = central_slope(
        config,
        delta_cav,
        delta_ex,
        omega_sys,
        resp.phase,
        config.fd_step,
    )?;
    point.slope = slope;
    point.delta_phi = phase_noise(n_photons, config.demod.nf_db)?.delta_phi;
    if slope == 0.0 {
        point.flag = PointFlag::ZeroSlope;
        return Ok(point);
    }
    point.delta_omega = point.delta_phi / slope.abs();
    point.eta = point.delta_omega / GAMMA_E;
    Ok(point)
}

/// Read access shared by sensitivity and ratio grids.
pub trait Grid {
    fn delta_cav_axis(&self) -> &[f64];
    fn delta_ex_axis(&self) -> &[f64];
    /// Value at `(delta_cav_axis[i], delta_ex_axis[j])`.
    fn value(&self, i: usize, j: usize) -> f64;

    fn shape(&self) -> (usize, usize) {
        (self.delta_cav_axis().len(), self.delta_ex_axis().len())
    }

    /// Index and value of the smallest non-NaN entry.
    fn argmin(&self) -> Option<(usize, usize, f64)> {
        let (n, m) = self.shape();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in 0..m {
                let v = self.value(i, j);
                if v.is_nan() {
                    continue;
                }
                if best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityMap {
    pub delta_cav_axis: Vec<f64>,
    pub delta_ex_axis: Vec<f64>,
    /// `values[i][j]` is the point at `(delta_cav_axis[i], delta_ex_axis[j])`.
    pub values: Vec<Vec<SensitivityPoint>>,
    pub channel: Channel,
    pub fingerprint: String,
}

impl Grid for SensitivityMap {
    fn delta_cav_axis(&self) -> &[f64] {
        &self.delta_cav_axis
    }
    fn delta_ex_axis(&self) -> &[f64] {
        &self.delta_ex_axis
    }
    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j].eta
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!(
            "{name} axis must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// `n` points evenly spaced over `[−half_span, half_span]`, with an exact zero
/// in the middle when `n` is odd.
pub fn symmetric_axis(half_span: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let step = 2.0 * half_span / (n - 1) as f64;
            let mid = (n - 1) as f64 / 2.0;
            (0..n).map(|k| (k as f64 - mid) * step).collect()
        }
    }
}

/// Evaluates [`shot_noise_sensitivity`] over the grid. Points are computed in
/// parallel on the current rayon pool and collected by index; a point that
/// fails is stored as infinite with [`PointFlag::Failed`].
pub fn sensitivity_map(
    config: &PipelineConfig,
    delta_cav_axis: &[f64],
    delta_ex_axis: &[f64],
) -> Result<SensitivityMap> {
    config.validate()?;
    check_axis("delta_cav", delta_cav_axis)?;
    check_axis("delta_ex", delta_ex_axis)?;
    let omega_sys = config.spin.omega_sys;
    let m = delta_ex_axis.len();
    let flat: Vec<SensitivityPoint> = (0..delta_cav_axis.len() * m)
        .into_par_iter()
        .map(|idx| {
            let (dc, de) = (delta_cav_axis[idx / m], delta_ex_axis[idx % m]);
            shot_noise_sensitivity(config, dc, de, omega_sys)
                .unwrap_or_else(|_| SensitivityPoint::failed(dc, de))
        })
        .collect();
    let values = flat.chunks(m).map(|row| row.to_vec()).collect();
    Ok(SensitivityMap {
        delta_cav_axis: delta_cav_axis.to_vec(),
        delta_ex_axis: delta_ex_axis.to_vec(),
        values,
        channel: config.channel,
        fingerprint: config.fingerprint(&(delta_cav_axis, delta_ex_axis)),
    })
}

/// Pointwise ratio of two grids sharing axes. `∞/∞` and `0/0` become NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioMap {
    pub delta_cav_axis: Vec<f64>,
    pub delta_ex_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Grid for RatioMap {
    fn delta_cav_axis(&self) -> &[f64] {
        &self.delta_cav_axis
    }
    fn delta_ex_axis(&self) -> &[f64] {
        &self.delta_ex_axis
    }
    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

pub fn ratio_map(numerator: &impl Grid, denominator: &impl Grid) -> Result<RatioMap> {
    if numerator.delta_cav_axis() != denominator.delta_cav_axis()
        || numerator.delta_ex_axis() != denominator.delta_ex_axis()
    {
        return Err(Error::invalid("ratio of maps with different axes"));
    }
    let (n, m) = numerator.shape();
    let values = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| numerator.value(i, j) / denominator.value(i, j))
                .collect()
        })
        .collect();
    Ok(RatioMap {
        delta_cav_axis: numerator.delta_cav_axis().to_vec(),
        delta_ex_axis: numerator.delta_ex_axis().to_vec(),
        values,
    })
}

/// Values along the cavity-detuning axis at the drive detuning nearest
/// `delta_ex`. Returns `(delta_cav, value)` pairs.
pub fn resonant_slice(map: &impl Grid, delta_ex: f64) -> Result<Vec<(f64, f64)>> {
    let axis = map.delta_ex_axis();
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    if !(delta_ex >= lo && delta_ex <= hi) {
        return Err(Error::invalid(format!(
            "slice position {delta_ex:e} rad/s outside [{lo:e}, {hi:e}]"
        )));
    }
    let j = (0..axis.len())
        .min_by(|&a, &b| {
            (axis[a] - delta_ex)
                .abs()
                .total_cmp(&(axis[b] - delta_ex).abs())
        })
        .expect("axis is non-empty");
    Ok(map
        .delta_cav_axis()
        .iter()
        .enumerate()
        .map(|(i, &dc)| (dc, map.value(i, j)))
        .collect())
}
