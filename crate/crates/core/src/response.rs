// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear-response susceptibility of the two-level spin.
//!
//! `χ(ω) = Σ_{m,n} (p_m − p_n)|Z_mn|² / (ω + E_m − E_n + iγ/2)` over the two
//! ordered pairs of levels. The near-resonant term is
//! `(p_g − p_e)|Z|² / (ω − ω_sys + iγ/2)`, which is absorptive
//! (`Im χ < 0`) for non-inverted populations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::LevelPopulations;
use crate::model::SpinModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMode {
    /// Only the term resonant at `ω = ω_sys`.
    #[default]
    RwaTermOnly,
    /// Resonant and counter-rotating terms.
    BothTerms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Susceptibility {
    pub omega: f64,
    pub value: Complex64,
    pub populations: LevelPopulations,
    pub mode: ChiMode,
}

/// Evaluates `χ` at probe frequency `omega`.
pub fn susceptibility(
    spin: &SpinModel,
    pops: &LevelPopulations,
    omega: f64,
    mode: ChiMode,
) -> Result<Susceptibility> {
    if !(omega > 0.0) {
        return Err(Error::invalid("probe frequency must be positive"));
    }
    chi_at_detuning(spin, pops, omega - spin.omega_sys, mode).map(|value| Susceptibility {
        omega,
        value,
        populations: *pops,
        mode,
    })
}

/// `χ` as a function of the probe detuning `ω − ω_sys`.
///
/// Taking the detuning directly avoids cancellation between two ~10¹⁰ rad/s
/// numbers when the caller already knows it.
pub fn chi_at_detuning(
    spin: &SpinModel,
    pops: &LevelPopulations,
    detuning: f64,
    mode: ChiMode,
) -> Result<Complex64> {
    let half_width = 0.5 * spin.gamma_coh;
    if half_width == 0.0 && detuning == 0.0 {
        return Err(Error::Singularity {
            omega: spin.omega_sys,
        });
    }
    let weight = pops.inversion_deficit() * spin.z_element * spin.z_element;
    let resonant = weight / Complex64::new(detuning, half_width);
    match mode {
        ChiMode::RwaTermOnly => Ok(resonant),
        ChiMode::BothTerms => {
            // (m, n) = (e, g): (p_e − p_g)|Z|² / (ω + ω_sys + iγ/2)
            let omega_sum = detuning + 2.0 * spin.omega_sys;
            Ok(resonant - weight / Complex64::new(omega_sum, half_width))
        }
    }
}

/// Derivative of the resonant term with respect to `ω_sys` at fixed
/// populations: `(p_g − p_e)|Z|² / (ω − ω_sys + iγ/2)²`.
pub fn chi_derivative_wrt_transition(
    spin: &SpinModel,
    pops: &LevelPopulations,
    detuning: f64,
) -> Complex64 {
    let weight = pops.inversion_deficit() * spin.z_element * spin.z_element;
    let d = Complex64::new(detuning, 0.5 * spin.gamma_coh);
    weight / (d * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hz_to_rad;

    fn spin(gamma: f64) -> SpinModel {
        SpinModel {
            omega_sys: hz_to_rad(2.87e9),
            rabi: 0.0,
            gamma_coh: gamma,
            pump_rate: 5e3,
            t1_rate: 200.0,
            thermal_rate: 0.0,
            dephasing_rate: 1e6,
            z_element: 1.0,
        }
    }

    fn pops(pg: f64, s: &SpinModel) -> LevelPopulations {
        LevelPopulations::new(pg, 1.0 - pg, s.omega_sys).unwrap()
    }

    #[test]
    fn balanced_populations_give_zero() {
        let s = spin(2e6);
        for mode in [ChiMode::RwaTermOnly, ChiMode::BothTerms] {
            for w in [s.omega_sys, s.omega_sys + 3e6, 1e9] {
                let chi = susceptibility(&s, &pops(0.5, &s), w, mode).unwrap();
                assert_eq!(chi.value, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn on_resonance_value() {
        let s = spin(2e6);
        let p = pops(0.8, &s);
        let chi = susceptibility(&s, &p, s.omega_sys, ChiMode::RwaTermOnly).unwrap();
        let expected = Complex64::new(0.0, -2.0 * 0.6 / 2e6);
        assert!((chi.value - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn far_detuned_asymptote() {
        let g = 2e6;
        let s = spin(g);
        let p = pops(0.9, &s);
        let chi = susceptibility(&s, &p, s.omega_sys + 100.0 * g, ChiMode::RwaTermOnly).unwrap();
        let target = 0.8 / (100.0 * g);
        assert!((chi.value.norm() - target).abs() < 0.02 * target);
    }

    #[test]
    fn pole_on_real_axis_is_an_error() {
        let mut s = spin(2e6);
        s.gamma_coh = 0.0;
        let err = susceptibility(&s, &pops(0.9, &s), s.omega_sys, ChiMode::RwaTermOnly);
        assert!(matches!(err, Err(Error::Singularity { .. })));
        assert!(susceptibility(&s, &pops(0.9, &s), 1.0, ChiMode::RwaTermOnly).is_ok());
        assert!(susceptibility(&s, &pops(0.9, &s), 0.0, ChiMode::RwaTermOnly).is_err());
    }

    #[test]
    fn absorptive_sign_for_non_inverted_populations() {
        let s = spin(1.3e6);
        for pg in [0.5, 0.6, 0.99, 1.0] {
            for k in -50..=50 {
                let w = s.omega_sys + k as f64 * 1e5;
                let chi = susceptibility(&s, &pops(pg, &s), w, ChiMode::RwaTermOnly).unwrap();
                assert!(chi.value.im <= 0.0);
            }
        }
    }

    #[test]
    fn mirror_symmetry_about_transition() {
        let s = spin(1.7e6);
        let p = pops(0.93, &s);
        for k in 1..=200 {
            let d = k as f64 * 3.3e4;
            let a = chi_at_detuning(&s, &p, d, ChiMode::RwaTermOnly).unwrap();
            let b = chi_at_detuning(&s, &p, -d, ChiMode::RwaTermOnly).unwrap();
            let scale = a.norm();
            assert!((a.re + b.re).abs() <= 1e-12 * scale);
            assert!((a.im - b.im).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn peak_and_sign_change_at_transition() {
        let s = spin(1.7e6);
        let p = pops(0.93, &s);
        let grid: Vec<f64> = (-40..=40).map(|k| k as f64 * 1.1e5).collect();
        let chis: Vec<Complex64> = grid
            .iter()
            .map(|&d| chi_at_detuning(&s, &p, d, ChiMode::RwaTermOnly).unwrap())
            .collect();
        let argmax = (0..grid.len())
            .max_by(|&i, &j| chis[i].norm().total_cmp(&chis[j].norm()))
            .unwrap();
        assert_eq!(grid[argmax], 0.0);
        let g2 = 4e11;
        assert!(g2 * chis[0].re < 0.0);
        assert!(g2 * chis[grid.len() - 1].re > 0.0);
    }

    #[test]
    fn counter_rotating_term_is_small_near_resonance() {
        let s = spin(2e6);
        let p = pops(0.9, &s);
        let w = s.omega_sys + 1e5;
        let rwa = susceptibility(&s, &p, w, ChiMode::RwaTermOnly)
            .unwrap()
            .value;
        let both = susceptibility(&s, &p, w, ChiMode::BothTerms).unwrap().value;
        assert!((both - rwa).norm() < 1e-3 * rwa.norm());
        let expected = -0.8 / Complex64::new(w + s.omega_sys, 1e6);
        assert!((both - rwa - expected).norm() < 1e-12 * expected.norm());
    }
}
