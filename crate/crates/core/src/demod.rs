// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! IQ demodulator model.
//!
//! A carrier `A·cos(ωt − φ)` is written as `I·cos ωt + Q·sin ωt` with
//! `I = A cos φ`, `Q = A sin φ`, so that `S = I + iQ = A·e^{iφ}`. Mixing with
//! `2cos ωt` and `2sin ωt` and low-pass filtering recovers `I` and `Q`.
//!
//! Shot noise limits the phase to `δφ = 10^(NF/20)/√N` for `N` detected
//! photons and a demodulator noise figure `NF` in dB.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::HBAR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IQSample {
    pub i_val: f64,
    pub q_val: f64,
    pub amplitude: f64,
    /// `atan2(Q, I)` in `(−π, π]`.
    pub phase: f64,
}

impl IQSample {
    pub fn from_iq(i_val: f64, q_val: f64) -> Self {
        let phase = if i_val == 0.0 && q_val == 0.0 {
            0.0
        } else {
            principal_phase(q_val.atan2(i_val))
        };
        IQSample {
            i_val,
            q_val,
            amplitude: i_val.hypot(q_val),
            phase,
        }
    }
}

fn principal_phase(p: f64) -> f64 {
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}

pub fn iq_from_phasor(amplitude: f64, phase: f64) -> Result<IQSample> {
    if !(amplitude >= 0.0) {
        return Err(Error::invalid("amplitude must be >= 0"));
    }
    let (s, c) = phase.sin_cos();
    Ok(IQSample::from_iq(amplitude * c, amplitude * s))
}

/// Returns `(amplitude, phase)` of `I + iQ`.
pub fn phasor_from_iq(i_val: f64, q_val: f64) -> Result<(f64, f64)> {
    if i_val == 0.0 && q_val == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let s = IQSample::from_iq(i_val, q_val);
    Ok((s.amplitude, s.phase))
}

/// Samples `A·cos(ωt − φ)` at `t_k = k / sample_rate`.
pub fn sample_carrier(
    amplitude: f64,
    phase: f64,
    omega: f64,
    sample_rate: f64,
    n_samples: usize,
) -> Vec<f64> {
    (0..n_samples)
        .map(|k| amplitude * (omega * k as f64 / sample_rate - phase).cos())
        .collect()
}

fn boxcar(x: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1 - window);
    let mut acc: f64 = x[..window].iter().sum();
    out.push(acc / window as f64);
    for k in window..x.len() {
        acc += x[k] - x[k - window];
        out.push(acc / window as f64);
    }
    out
}

/// Averages the longest prefix of `x` that spans a whole number of carrier
/// periods (to the nearest sample).
fn whole_period_mean(x: &[f64], samples_per_period: f64) -> f64 {
    let periods = (x.len() as f64 / samples_per_period).floor().max(1.0);
    let n = ((periods * samples_per_period).round() as usize).clamp(1, x.len());
    x[..n].iter().sum::<f64>() / n as f64
}

/// Recovers `(I, Q)` from a real carrier sampled at `sample_rate` (Hz).
///
/// The mixer products are smoothed by a moving average spanning the whole
/// number of carrier periods closest to `1/cutoff` (at least two, since
/// `cutoff < f/2`), then the settled tail is averaged over whole periods.
pub fn mix_and_filter(rf: &[f64], omega: f64, sample_rate: f64, cutoff: f64) -> Result<IQSample> {
    let carrier_hz = omega / (2.0 * PI);
    if !(carrier_hz > 0.0) {
        return Err(Error::Aliasing("carrier frequency must be positive".into()));
    }
    if !(sample_rate > 10.0 * carrier_hz) {
        return Err(Error::Aliasing(format!(
            "sample rate {sample_rate:e} Hz must exceed 10× the carrier {carrier_hz:e} Hz"
        )));
    }
    if !(cutoff > 0.0 && cutoff < carrier_hz / 2.0) {
        return Err(Error::Aliasing(format!(
            "cutoff {cutoff:e} Hz must lie in (0, {:e}) Hz",
            carrier_hz / 2.0
        )));
    }
    let samples_per_period = sample_rate / carrier_hz;
    let duration_periods = rf.len() as f64 / samples_per_period;
    if duration_periods < 20.0 {
        return Err(Error::Aliasing(format!(
            "waveform spans {duration_periods:.2} carrier cycles, need at least 20"
        )));
    }
    let window_periods = (carrier_hz / cutoff).ceil();
    let window = (window_periods * samples_per_period).round() as usize;
    let tail = rf.len() + 1 - window.min(rf.len());
    if window > rf.len() || (tail as f64) < 10.0 * samples_per_period {
        return Err(Error::Aliasing(format!(
            "cutoff {cutoff:e} Hz leaves fewer than 10 settled carrier cycles"
        )));
    }

    let (mut mixed_i, mut mixed_q) = (Vec::with_capacity(rf.len()), Vec::with_capacity(rf.len()));
    for (k, &x) in rf.iter().enumerate() {
        let (s, c) = (omega * k as f64 / sample_rate).sin_cos();
        mixed_i.push(2.0 * x * c);
        mixed_q.push(2.0 * x * s);
    }
    let i_val = whole_period_mean(&boxcar(&mixed_i, window), samples_per_period);
    let q_val = whole_period_mean(&boxcar(&mixed_q, window), samples_per_period);
    Ok(IQSample::from_iq(i_val, q_val))
}

/// Photons reaching the detector: `N = |t|²·P_in·τ / (ħω_c)`.
pub fn photon_count(power_in: f64, power_transmittance: f64, omega_c: f64, tau: f64) -> f64 {
    debug_assert!(omega_c > 0.0);
    power_transmittance * power_in * tau / (HBAR * omega_c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseNoise {
    pub n_photons: f64,
    pub nf_db: f64,
    pub delta_phi: f64,
}

impl PhaseNoise {
    /// `SNR_out = 1/δφ²`.
    pub fn snr_out(&self) -> f64 {
        1.0 / (self.delta_phi * self.delta_phi)
    }

    /// Noise figure implied by `SNR_in = N` and `SNR_out`.
    pub fn implied_noise_figure_db(&self) -> f64 {
        10.0 * (self.n_photons / self.snr_out()).log10()
    }
}

pub fn phase_noise(n_photons: f64, nf_db: f64) -> Result<PhaseNoise> {
    if !(n_photons > 0.0) {
        return Err(Error::invalid("photon number must be positive"));
    }
    Ok(PhaseNoise {
        n_photons,
        nf_db,
        delta_phi: 10f64.powf(nf_db / 20.0) / n_photons.sqrt(),
    })
}
