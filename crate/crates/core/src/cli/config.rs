// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Configuration file schema.
//!
//! Files are TOML: named sections of `key = value` pairs. Frequencies are in
//! Hz (converted to rad/s on load), powers in W, times in s and incoherent
//! rates in 1/s. Every key is optional; absent keys take the defaults below.
//! Unknown keys are rejected.
//!
//! | section       | key                     | default            | notes |
//! |---------------|-------------------------|--------------------|-------|
//! | `spin`        | `omega_sys_hz`          | 2.87e9             | |
//! |               | `rabi_hz`               | 0.2e6              | |
//! |               | `pump_rate`             | 5e3                | unverified engineering default |
//! |               | `t1_rate`               | 200                | T1 = 5 ms; unverified |
//! |               | `thermal_rate`          | t1·exp(−ħω/k_BT)   | unverified |
//! |               | `temperature_k`         | 300                | only used for `thermal_rate` |
//! |               | `dephasing_rate`        | 1e6                | T2* ≈ 1 µs; unverified |
//! |               | `gamma_coh`             | 2·(Γ/2 + γ_φ)      | linewidth in χ, 1/s; unverified |
//! |               | `z_element`             | 1                  | |
//! | `cavity`      | `detuning_hz`           | 0                  | ω_cav − ω_sys for `spectrum`/`validate` |
//! |               | `q_factor`              | 5000               | loaded Q |
//! |               | `port_split`            | 0.5                | κ₁ = split·κ |
//! |               | `g_ens_hz`              | 1e5                | unverified |
//! |               | `g_single_hz`, `n_spins`| unset              | if both set, g = g_single·√N |
//! | `two_mode`    | `mode_splitting_hz`     | 0                  | ω₂ − ω₁ |
//! |               | `kappa1_hz`, `kappa2_hz`| ω_cav/Q/2π         | |
//! |               | `g1_hz`, `g2_hz`        | g_ens              | |
//! | `drive`       | `power_w`               | 0.04               | |
//! |               | `tau_s`                 | 1                  | |
//! |               | `detuning_hz`           | 0                  | ω_ex − ω_sys for `validate` |
//! | `demod`       | `nf_db`                 | 13.5               | unverified midpoint |
//! | `sweep`       | `cav_span_hz`           | 5e6                | half-width of the δ_cav axis |
//! |               | `ex_span_hz`            | 5e6                | half-width of the δ_ex axis |
//! |               | `points`                | 101                | per axis |
//! |               | `spectrum_span_hz`      | 5e6                | |
//! |               | `spectrum_points`       | 201                | |
//! | `numerics`    | `fd_step_hz`            | gamma_coh/(2π·100) | |
//! |               | `chi_mode`              | `"rwa_term_only"`  | or `"both_terms"` |
//! |               | `regime_threshold`      | 0.01               | |
//! |               | `steady_state_tolerance`| 1e-10              | |
//! | `output`      | `format`                | `"csv"`            | or `"json"` |
//! |               | `channel`               | `"t"`              | `"t"`, `"r"` or `"s21"` |
//! |               | `image`                 | false              | also write PNG heat maps |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lindblad::RESIDUAL_TOL;
use crate::model::{
    collective_coupling, hz_to_rad, thermal_excitation_rate, CavityModel, DemodModel, DriveModel,
    SpinModel, TwoModeCavityModel, DEFAULT_REGIME_THRESHOLD,
};
use crate::response::ChiMode;
use crate::scattering::Channel;
use crate::sensitivity::{symmetric_axis, PipelineConfig};

/// A configuration problem tied to a specific key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinSection {
    pub omega_sys_hz: f64,
    pub rabi_hz: f64,
    pub pump_rate: f64,
    pub t1_rate: f64,
    pub thermal_rate: Option<f64>,
    pub temperature_k: f64,
    pub dephasing_rate: f64,
    pub gamma_coh: Option<f64>,
    pub z_element: f64,
}

impl Default for SpinSection {
    fn default() -> Self {
        SpinSection {
            omega_sys_hz: 2.87e9,
            rabi_hz: 0.2e6,
            pump_rate: 5e3,
            t1_rate: 200.0,
            thermal_rate: None,
            temperature_k: 300.0,
            dephasing_rate: 1e6,
            gamma_coh: None,
            z_element: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub detuning_hz: f64,
    pub q_factor: f64,
    pub port_split: f64,
    pub g_ens_hz: Option<f64>,
    pub g_single_hz: Option<f64>,
    pub n_spins: Option<f64>,
}

impl Default for CavitySection {
    fn default() -> Self {
        CavitySection {
            detuning_hz: 0.0,
            q_factor: 5000.0,
            port_split: 0.5,
            g_ens_hz: None,
            g_single_hz: None,
            n_spins: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoModeSection {
    pub mode_splitting_hz: f64,
    pub kappa1_hz: Option<f64>,
    pub kappa2_hz: Option<f64>,
    pub g1_hz: Option<f64>,
    pub g2_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSection {
    pub power_w: f64,
    pub tau_s: f64,
    pub detuning_hz: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        DriveSection {
            power_w: 0.04,
            tau_s: 1.0,
            detuning_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemodSection {
    pub nf_db: f64,
}

impl Default for DemodSection {
    fn default() -> Self {
        DemodSection { nf_db: 13.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub cav_span_hz: f64,
    pub ex_span_hz: f64,
    pub points: usize,
    pub spectrum_span_hz: f64,
    pub spectrum_points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            cav_span_hz: 5e6,
            ex_span_hz: 5e6,
            points: 101,
            spectrum_span_hz: 5e6,
            spectrum_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    pub fd_step_hz: Option<f64>,
    pub chi_mode: ChiMode,
    pub regime_threshold: f64,
    pub steady_state_tolerance: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            fd_step_hz: None,
            chi_mode: ChiMode::RwaTermOnly,
            regime_threshold: DEFAULT_REGIME_THRESHOLD,
            steady_state_tolerance: RESIDUAL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ChannelName {
    #[default]
    #[serde(rename = "t")]
    T,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "s21")]
    S21,
}

impl From<ChannelName> for Channel {
    fn from(c: ChannelName) -> Self {
        match c {
            ChannelName::T => Channel::OneModeT,
            ChannelName::R => Channel::OneModeR,
            ChannelName::S21 => Channel::TwoModeS21,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub channel: ChannelName,
    pub image: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub spin: SpinSection,
    pub cavity: CavitySection,
    pub two_mode: TwoModeSection,
    pub drive: DriveSection,
    pub demod: DemodSection,
    pub sweep: SweepSection,
    pub numerics: NumericsSection,
    pub output: OutputSection,
}

/// Pulls the offending key out of a serde/TOML message such as
/// ``unknown field `quality`, expected one of ...``.
fn offending_key(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = offending_key(&msg).unwrap_or_else(|| "<file>".to_string());
            ConfigError::new(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a configuration file. The literal path `default` yields the
    /// built-in defaults when no file of that name exists.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if path == Path::new("default") && !path.exists() {
            return Ok(Config::default());
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Checks every key and the derived physical records.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("spin.omega_sys_hz", self.spin.omega_sys_hz),
            ("cavity.q_factor", self.cavity.q_factor),
            ("drive.power_w", self.drive.power_w),
            ("drive.tau_s", self.drive.tau_s),
            ("sweep.cav_span_hz", self.sweep.cav_span_hz),
            ("sweep.ex_span_hz", self.sweep.ex_span_hz),
            ("sweep.spectrum_span_hz", self.sweep.spectrum_span_hz),
            (
                "numerics.steady_state_tolerance",
                self.numerics.steady_state_tolerance,
            ),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::new(key, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("spin.rabi_hz", Some(self.spin.rabi_hz)),
            ("spin.pump_rate", Some(self.spin.pump_rate)),
            ("spin.t1_rate", Some(self.spin.t1_rate)),
            ("spin.thermal_rate", self.spin.thermal_rate),
            ("spin.temperature_k", Some(self.spin.temperature_k)),
            ("spin.dephasing_rate", Some(self.spin.dephasing_rate)),
            ("spin.z_element", Some(self.spin.z_element)),
            ("cavity.g_ens_hz", self.cavity.g_ens_hz),
            ("cavity.g_single_hz", self.cavity.g_single_hz),
            ("cavity.n_spins", self.cavity.n_spins),
            ("two_mode.g1_hz", self.two_mode.g1_hz),
            ("two_mode.g2_hz", self.two_mode.g2_hz),
            ("demod.nf_db", Some(self.demod.nf_db)),
        ];
        for (key, v) in non_negative {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(ConfigError::new(
                        key,
                        format!("must be finite and >= 0, got {v}"),
                    ));
                }
            }
        }
        for (key, v) in [
            ("spin.gamma_coh", self.spin.gamma_coh),
            ("two_mode.kappa1_hz", self.two_mode.kappa1_hz),
            ("two_mode.kappa2_hz", self.two_mode.kappa2_hz),
            ("numerics.fd_step_hz", self.numerics.fd_step_hz),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(ConfigError::new(key, format!("must be positive, got {v}")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.cavity.port_split) {
            return Err(ConfigError::new("cavity.port_split", "must lie in [0, 1]"));
        }
        let t = self.numerics.regime_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(ConfigError::new(
                "numerics.regime_threshold",
                "must lie in (0, 1)",
            ));
        }
        if self.sweep.points == 0 {
            return Err(ConfigError::new("sweep.points", "must be at least 1"));
        }
        if self.sweep.spectrum_points < 2 {
            return Err(ConfigError::new(
                "sweep.spectrum_points",
                "must be at least 2",
            ));
        }
        match (self.cavity.g_single_hz, self.cavity.n_spins) {
            (Some(_), None) | (None, Some(_)) => {
                return Err(ConfigError::new(
                    "cavity.g_single_hz",
                    "g_single_hz and n_spins must be given together",
                ))
            }
            (Some(_), Some(_)) if self.cavity.g_ens_hz.is_some() => {
                return Err(ConfigError::new(
                    "cavity.g_ens_hz",
                    "conflicts with g_single_hz/n_spins",
                ))
            }
            _ => {}
        }
        if self.spin.pump_rate + self.spin.t1_rate + self.spin.thermal_rate.unwrap_or(0.0) <= 0.0 {
            return Err(ConfigError::new(
                "spin.pump_rate",
                "at least one of pump_rate, t1_rate, thermal_rate must be positive",
            ));
        }
        let pipeline = self.build_pipeline()?;
        let fd_max = pipeline.spin.gamma_coh / 10.0;
        if pipeline.fd_step >= fd_max {
            return Err(ConfigError::new(
                "numerics.fd_step_hz",
                format!("must be below gamma_coh/10 = {:e} rad/s", fd_max),
            ));
        }
        pipeline
            .validate()
            .map_err(|e| ConfigError::new("<derived>", e.to_string()))
    }

    pub fn spin_model(&self) -> SpinModel {
        let s = &self.spin;
        let omega_sys = hz_to_rad(s.omega_sys_hz);
        let spin = SpinModel {
            omega_sys,
            rabi: hz_to_rad(s.rabi_hz),
            gamma_coh: 1.0,
            pump_rate: s.pump_rate,
            t1_rate: s.t1_rate,
            thermal_rate: s
                .thermal_rate
                .unwrap_or_else(|| thermal_excitation_rate(s.t1_rate, omega_sys, s.temperature_k)),
            dephasing_rate: s.dephasing_rate,
            z_element: s.z_element,
        };
        match s.gamma_coh {
            Some(g) => SpinModel {
                gamma_coh: g,
                ..spin
            },
            None => spin.with_consistent_linewidth(),
        }
    }

    pub fn g_ens(&self) -> f64 {
        match (self.cavity.g_single_hz, self.cavity.n_spins) {
            (Some(g), Some(n)) => collective_coupling(hz_to_rad(g), n),
            _ => hz_to_rad(self.cavity.g_ens_hz.unwrap_or(1e5)),
        }
    }

    fn build_pipeline(&self) -> Result<PipelineConfig, ConfigError> {
        let spin = self.spin_model();
        let omega_cav = spin.omega_sys + hz_to_rad(self.cavity.detuning_hz);
        let cavity = CavityModel::from_quality(
            omega_cav,
            self.cavity.q_factor,
            self.cavity.port_split,
            self.g_ens(),
        )
        .map_err(|e| ConfigError::new("cavity", e.to_string()))?;
        let degenerate = TwoModeCavityModel::degenerate(&cavity);
        let tm = &self.two_mode;
        let cav2 = TwoModeCavityModel {
            omega1: omega_cav,
            omega2: omega_cav + hz_to_rad(tm.mode_splitting_hz),
            kappa1: tm.kappa1_hz.map(hz_to_rad).unwrap_or(degenerate.kappa1),
            kappa2: tm.kappa2_hz.map(hz_to_rad).unwrap_or(degenerate.kappa2),
            g1: tm.g1_hz.map(hz_to_rad).unwrap_or(degenerate.g1),
            g2: tm.g2_hz.map(hz_to_rad).unwrap_or(degenerate.g2),
        };
        let drive = DriveModel {
            omega_ex: spin.omega_sys + hz_to_rad(self.drive.detuning_hz),
            power_in: self.drive.power_w,
            tau: self.drive.tau_s,
        };
        let fd_step = self
            .numerics
            .fd_step_hz
            .map(hz_to_rad)
            .unwrap_or(spin.gamma_coh / 100.0);
        Ok(PipelineConfig {
            spin,
            cavity,
            cav2,
            drive,
            demod: DemodModel {
                nf_db: self.demod.nf_db,
            },
            channel: self.output.channel.into(),
            fd_step,
            chi_mode: self.numerics.chi_mode,
            steady_state_tolerance: self.numerics.steady_state_tolerance,
            frozen_populations: None,
        })
    }

    /// Physical pipeline parameters in internal (rad/s) units.
    pub fn pipeline(&self) -> Result<PipelineConfig, ConfigError> {
        self.build_pipeline()
    }

    pub fn delta_cav_axis(&self) -> Vec<f64> {
        symmetric_axis(hz_to_rad(self.sweep.cav_span_hz), self.sweep.points)
    }

    pub fn delta_ex_axis(&self) -> Vec<f64> {
        symmetric_axis(hz_to_rad(self.sweep.ex_span_hz), self.sweep.points)
    }

    pub fn spectrum_axis(&self) -> Vec<f64> {
        symmetric_axis(
            hz_to_rad(self.sweep.spectrum_span_hz),
            self.sweep.spectrum_points,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TWO_PI;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::default());
        let p = cfg.pipeline().unwrap();
        assert!((p.spin.omega_sys - TWO_PI * 2.87e9).abs() < 1e-3);
        assert!((p.cavity.kappa - p.cavity.omega_cav / 5000.0).abs() < 1e-9);
        assert_eq!(p.cav2.kappa1, p.cavity.kappa);
        assert_eq!(p.cav2.g2, TWO_PI * 1e5);
        assert_eq!(p.drive.power_in, 0.04);
        assert_eq!(p.demod.nf_db, 13.5);
        assert!((p.fd_step - p.spin.gamma_coh / 100.0).abs() < 1e-12);
        assert_eq!(p.channel, Channel::OneModeT);
        assert_eq!(cfg.delta_cav_axis().len(), 101);
    }

    #[test]
    fn rabi_is_converted_to_angular_units() {
        let cfg = Config::from_toml_str("[spin]\nrabi_hz = 0.2e6\n").unwrap();
        let p = cfg.pipeline().unwrap();
        assert!((p.spin.rabi - TWO_PI * 0.2e6).abs() < 1e-9);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::from_toml_str("[cavity]\nquality = 5000\n").unwrap_err();
        assert_eq!(err.key, "quality");
        let err = Config::from_toml_str("[bogus]\nx = 1\n").unwrap_err();
        assert_eq!(err.key, "bogus");
    }

    #[test]
    fn invariant_violations_are_named() {
        let err = Config::from_toml_str("[drive]\npower_w = -1\n").unwrap_err();
        assert_eq!(err.key, "drive.power_w");
        let err = Config::from_toml_str("[cavity]\nport_split = 1.5\n").unwrap_err();
        assert_eq!(err.key, "cavity.port_split");
        let err = Config::from_toml_str("[numerics]\nfd_step_hz = 1e9\n").unwrap_err();
        assert_eq!(err.key, "numerics.fd_step_hz");
        let err = Config::from_toml_str("[spin]\npump_rate = 0\nt1_rate = 0\nthermal_rate = 0\n")
            .unwrap_err();
        assert_eq!(err.key, "spin.pump_rate");
        let err = Config::from_toml_str("[output]\nchannel = \"x\"\n").unwrap_err();
        assert!(err.message.contains("unknown variant"));
    }

    #[test]
    fn collective_coupling_helper() {
        let cfg = Config::from_toml_str("[cavity]\ng_single_hz = 1e-2\nn_spins = 1e14\n").unwrap();
        assert!((cfg.g_ens() - TWO_PI * 1e5).abs() < 1e-6);
        assert!(Config::from_toml_str("[cavity]\nn_spins = 1e14\n").is_err());
    }

    #[test]
    fn explicit_gamma_overrides_helper() {
        let cfg = Config::from_toml_str("[spin]\ngamma_coh = 3e6\n").unwrap();
        assert_eq!(cfg.spin_model().gamma_coh, 3e6);
    }
}
