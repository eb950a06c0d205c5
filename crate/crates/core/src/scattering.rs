// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form cavity scattering amplitudes.
//!
//! One mode, ports 1 and 2 with `κ₁ + κ₂ = κ`:
//!
//! ```text
//! t = i√(κ₁κ₂) / (ω_cav − ω + g²χ − iκ/2)
//! r = 1 + iκ₁ / (ω_cav − ω + g²χ − iκ/2)
//! ```
//!
//! Two orthogonal modes, port-2 input in vacuum:
//!
//! ```text
//!                         g₁g₂χ√(κ₁κ₂)
//! S21 = ─────────────────────────────────────────────────────────────
//!       (i(ω−ω₁) − ig₁²χ − κ₁/2)(i(ω−ω₂) − ig₂²χ − κ₂/2) + g₁²g₂²χ²
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{CavityModel, TwoModeCavityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// One-mode transmission, port 1 → port 2.
    #[default]
    OneModeT,
    /// One-mode reflection at port 1.
    OneModeR,
    /// Two orthogonal modes, port 1 → port 2.
    TwoModeS21,
}

impl Channel {
    pub fn short_name(&self) -> &'static str {
        match self {
            Channel::OneModeT => "t",
            Channel::OneModeR => "r",
            Channel::TwoModeS21 => "s21",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        match s {
            "t" => Some(Channel::OneModeT),
            "r" => Some(Channel::OneModeR),
            "s21" => Some(Channel::TwoModeS21),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringResponse {
    pub omega: f64,
    pub amplitude: Complex64,
    pub channel: Channel,
    pub power_transmittance: f64,
}

impl ScatteringResponse {
    fn new(omega: f64, amplitude: Complex64, channel: Channel) -> Self {
        ScatteringResponse {
            omega,
            amplitude,
            channel,
            power_transmittance: amplitude.norm_sqr(),
        }
    }
}

fn one_mode_denominator(cavity: &CavityModel, chi: Complex64, cav_detuning: f64) -> Complex64 {
    let g2 = cavity.g_ens * cavity.g_ens;
    Complex64::new(cav_detuning, -0.5 * cavity.kappa) + chi * g2
}

/// One-mode transmission amplitude; `cav_detuning = ω_cav − ω`.
pub fn transmission_amplitude(
    cavity: &CavityModel,
    chi: Complex64,
    cav_detuning: f64,
) -> Complex64 {
    let num = Complex64::new(0.0, (cavity.kappa1 * cavity.kappa2).sqrt());
    num / one_mode_denominator(cavity, chi, cav_detuning)
}

/// One-mode reflection amplitude; `cav_detuning = ω_cav − ω`.
pub fn reflection_amplitude(cavity: &CavityModel, chi: Complex64, cav_detuning: f64) -> Complex64 {
    Complex64::new(1.0, 0.0)
        + Complex64::new(0.0, cavity.kappa1) / one_mode_denominator(cavity, chi, cav_detuning)
}

/// Two-mode `S21`; `mode1_detuning = ω_ex − ω₁`, `mode2_detuning = ω_ex − ω₂`.
pub fn s21_amplitude(
    cav2: &TwoModeCavityModel,
    chi: Complex64,
    mode1_detuning: f64,
    mode2_detuning: f64,
) -> Complex64 {
    let i = Complex64::i();
    let (g1s, g2s) = (cav2.g1 * cav2.g1, cav2.g2 * cav2.g2);
    let num = chi * (cav2.g1 * cav2.g2 * (cav2.kappa1 * cav2.kappa2).sqrt());
    let d1 = i * mode1_detuning - i * g1s * chi - 0.5 * cav2.kappa1;
    let d2 = i * mode2_detuning - i * g2s * chi - 0.5 * cav2.kappa2;
    num / (d1 * d2 + chi * chi * (g1s * g2s))
}

pub fn transmission_one_mode(
    cavity: &CavityModel,
    chi: Complex64,
    omega: f64,
) -> ScatteringResponse {
    let amp = transmission_amplitude(cavity, chi, cavity.omega_cav - omega);
    ScatteringResponse::new(omega, amp, Channel::OneModeT)
}

pub fn reflection_one_mode(cavity: &CavityModel, chi: Complex64, omega: f64) -> ScatteringResponse {
    let amp = reflection_amplitude(cavity, chi, cavity.omega_cav - omega);
    ScatteringResponse::new(omega, amp, Channel::OneModeR)
}

pub fn s21_two_modes(
    cav2: &TwoModeCavityModel,
    chi: Complex64,
    omega_ex: f64,
) -> ScatteringResponse {
    let amp = s21_amplitude(cav2, chi, omega_ex - cav2.omega1, omega_ex - cav2.omega2);
    ScatteringResponse::new(omega_ex, amp, Channel::TwoModeS21)
}
