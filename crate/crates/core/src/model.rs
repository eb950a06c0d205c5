// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical parameter records, constants and the dispersive-regime check.
//!
//! Every frequency and rate stored here is angular (rad/s). Conversion from
//! ordinary frequency happens once, at configuration load time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Electron gyromagnetic ratio, rad/(s·T).
pub const GAMMA_E: f64 = 1.760_859_63e11;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Converts an ordinary frequency in Hz to rad/s.
pub fn hz_to_rad(hz: f64) -> f64 {
    TWO_PI * hz
}

/// Converts rad/s to Hz.
pub fn rad_to_hz(rad: f64) -> f64 {
    rad / TWO_PI
}

/// Effective two-level spin: |g⟩ = m_s 0, |e⟩ = m_s −1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinModel {
    /// Transition frequency, rad/s.
    pub omega_sys: f64,
    /// Rabi frequency of the drive, rad/s.
    pub rabi: f64,
    /// Linewidth entering the susceptibility denominator as `i·gamma_coh/2`.
    pub gamma_coh: f64,
    /// Incoherent optical pumping |e⟩ → |g⟩, 1/s.
    pub pump_rate: f64,
    /// Longitudinal relaxation |e⟩ → |g⟩, 1/s.
    pub t1_rate: f64,
    /// Thermal excitation |g⟩ → |e⟩, 1/s.
    pub thermal_rate: f64,
    /// Pure dephasing: rate at which the ge coherence decays, 1/s.
    pub dephasing_rate: f64,
    /// |Z_ge|, transition matrix element of the coupling operator.
    pub z_element: f64,
}

impl SpinModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_sys > 0.0) {
            return Err(Error::invalid("omega_sys must be positive"));
        }
        if !(self.gamma_coh > 0.0) {
            return Err(Error::invalid("gamma_coh must be positive"));
        }
        let rates = [
            ("rabi", self.rabi),
            ("pump_rate", self.pump_rate),
            ("t1_rate", self.t1_rate),
            ("thermal_rate", self.thermal_rate),
            ("dephasing_rate", self.dephasing_rate),
            ("z_element", self.z_element),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Sum of the population-mixing rates, 1/s.
    pub fn population_rate(&self) -> f64 {
        self.pump_rate + self.t1_rate + self.thermal_rate
    }

    /// Rate at which the ge coherence decays under the configured channels:
    /// half the population-mixing rate plus pure dephasing.
    pub fn coherence_decay_rate(&self) -> f64 {
        0.5 * self.population_rate() + self.dephasing_rate
    }

    /// Linewidth consistent with the Lindblad channels.
    ///
    /// The susceptibility denominator carries `i·gamma_coh/2`, so matching the
    /// coherence decay rate of the master equation requires
    /// `gamma_coh = 2 × coherence_decay_rate()`.
    pub fn consistent_linewidth(&self) -> f64 {
        2.0 * self.coherence_decay_rate()
    }

    pub fn with_consistent_linewidth(mut self) -> Self {
        self.gamma_coh = self.consistent_linewidth();
        self
    }

    pub fn with_omega_sys(mut self, omega_sys: f64) -> Self {
        self.omega_sys = omega_sys;
        self
    }
}

/// Thermal excitation rate from detailed balance: `t1_rate·exp(−ħω/k_BT)`.
pub fn thermal_excitation_rate(t1_rate: f64, omega_sys: f64, temperature_k: f64) -> f64 {
    if temperature_k <= 0.0 {
        return 0.0;
    }
    t1_rate * (-HBAR * omega_sys / (K_B * temperature_k)).exp()
}

/// Collective coupling of `n_spins` identical emitters.
pub fn collective_coupling(g_single: f64, n_spins: f64) -> f64 {
    g_single * n_spins.sqrt()
}

/// Single-mode cavity with two ports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityModel {
    pub omega_cav: f64,
    pub q_factor: f64,
    /// Total loss `omega_cav / q_factor`.
    pub kappa: f64,
    /// Input port coupling.
    pub kappa1: f64,
    /// Output port coupling.
    pub kappa2: f64,
    /// Collective spin-cavity coupling.
    pub g_ens: f64,
}

impl CavityModel {
    /// Builds a cavity from its quality factor, with a fraction `split` of the
    /// loss assigned to port 1.
    pub fn from_quality(omega_cav: f64, q_factor: f64, split: f64, g_ens: f64) -> Result<Self> {
        if !(omega_cav > 0.0) {
            return Err(Error::invalid("omega_cav must be positive"));
        }
        if !(q_factor > 0.0) || !q_factor.is_finite() {
            return Err(Error::invalid("q_factor must be positive"));
        }
        if !(0.0..=1.0).contains(&split) {
            return Err(Error::invalid("port split fraction must lie in [0, 1]"));
        }
        if !(g_ens >= 0.0) {
            return Err(Error::invalid("g_ens must be >= 0"));
        }
        let kappa = omega_cav / q_factor;
        let kappa1 = split * kappa;
        let kappa2 = kappa - kappa1;
        Ok(CavityModel {
            omega_cav,
            q_factor,
            kappa,
            kappa1,
            kappa2,
            g_ens,
        })
    }

    /// Same cavity retuned to `omega_cav`, keeping Q and the port split.
    pub fn retuned(&self, omega_cav: f64) -> Result<Self> {
        let split = if self.kappa > 0.0 {
            self.kappa1 / self.kappa
        } else {
            0.5
        };
        Self::from_quality(omega_cav, self.q_factor, split, self.g_ens)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_cav > 0.0) || !(self.kappa > 0.0) {
            return Err(Error::invalid("omega_cav and kappa must be positive"));
        }
        if !(self.kappa1 >= 0.0) || !(self.kappa2 >= 0.0) || !(self.g_ens >= 0.0) {
            return Err(Error::invalid("port couplings and g_ens must be >= 0"));
        }
        let tol = 8.0 * f64::EPSILON * self.kappa;
        if (self.kappa1 + self.kappa2 - self.kappa).abs() > tol {
            return Err(Error::invalid("kappa1 + kappa2 must equal kappa"));
        }
        Ok(())
    }
}

/// Cavity with two spatially orthogonal modes, each tied to its own port.
/// The port-2 input is vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeCavityModel {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub g1: f64,
    pub g2: f64,
}

impl TwoModeCavityModel {
    /// Two degenerate modes sharing the single-mode cavity's frequency, total
    /// loss and coupling.
    pub fn degenerate(cavity: &CavityModel) -> Self {
        TwoModeCavityModel {
            omega1: cavity.omega_cav,
            omega2: cavity.omega_cav,
            kappa1: cavity.kappa,
            kappa2: cavity.kappa,
            g1: cavity.g_ens,
            g2: cavity.g_ens,
        }
    }

    /// Shifts both modes so mode 1 sits at `omega1`, preserving the splitting.
    pub fn retuned(&self, omega1: f64) -> Self {
        let split = self.omega2 - self.omega1;
        TwoModeCavityModel {
            omega1,
            omega2: omega1 + split,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("two-mode {name} must be positive")));
            }
        }
        if !(self.g1 >= 0.0) || !(self.g2 >= 0.0) {
            return Err(Error::invalid("two-mode couplings must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveModel {
    /// Probe frequency, rad/s. Sweeps override it point by point.
    pub omega_ex: f64,
    /// Incident microwave power, W.
    pub power_in: f64,
    /// Observation time, s.
    pub tau: f64,
}

impl DriveModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_in > 0.0) {
            return Err(Error::invalid("power_in must be positive"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid("tau must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodModel {
    pub nf_db: f64,
}

impl DemodModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.nf_db >= 0.0) || !self.nf_db.is_finite() {
            return Err(Error::invalid("nf_db must be finite and >= 0"));
        }
        Ok(())
    }
}

pub const DEFAULT_REGIME_THRESHOLD: f64 = 0.01;

/// Outcome of the dispersive-regime check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    /// `κ/ω_cav`.
    pub loss_ratio: f64,
    /// `|ω − ω_cav|/ω_cav`.
    pub detuning_ratio: f64,
    /// `|g²·Re χ|/ω_cav`.
    pub shift_ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl RegimeReport {
    pub fn ratios(&self) -> [f64; 3] {
        [self.loss_ratio, self.detuning_ratio, self.shift_ratio]
    }
}

/// Checks that loss, probe detuning and dispersive shift are all small
/// compared with the cavity frequency. Advisory only: callers decide what to
/// do with a failing report.
pub fn validate_regime(
    cavity: &CavityModel,
    chi: Complex64,
    omega: f64,
    threshold: f64,
) -> Result<RegimeReport> {
    if !(omega > 0.0) {
        return Err(Error::invalid("probe frequency must be positive"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("regime threshold must lie in (0, 1)"));
    }
    let w = cavity.omega_cav;
    let loss_ratio = cavity.kappa / w;
    let detuning_ratio = (omega - w).abs() / w;
    let shift_ratio = (cavity.g_ens * cavity.g_ens * chi.re).abs() / w;
    let pass = loss_ratio < threshold && detuning_ratio < threshold && shift_ratio < threshold;
    Ok(RegimeReport {
        loss_ratio,
        detuning_ratio,
        shift_ratio,
        threshold,
        pass,
    })
}
