// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use nvreadout::cli::{self, Config};
use nvreadout::demod::{iq_from_phasor, mix_and_filter, phase_noise, sample_carrier};
use nvreadout::lindblad::{
    evolve, spin_liouvillian, steady_state, DensityMatrix, LevelPopulations,
};
use nvreadout::model::{hz_to_rad, CavityModel, SpinModel, TwoModeCavityModel};
use nvreadout::response::{susceptibility, ChiMode};
use nvreadout::scattering::{reflection_one_mode, s21_two_modes, transmission_one_mode, Channel};
use nvreadout::sensitivity::{
    phase_slope_with_step, ratio_map, resonant_slice, sensitivity_map, Grid, PipelineConfig,
};

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn random_two_mode(rng: &mut StdRng) -> TwoModeCavityModel {
    let omega1 = hz_to_rad(rng.random_range(1e8..1e11));
    TwoModeCavityModel {
        omega1,
        omega2: omega1 + hz_to_rad(rng.random_range(-1e7..1e7)),
        kappa1: hz_to_rad(rng.random_range(1e3..1e8)),
        kappa2: hz_to_rad(rng.random_range(1e3..1e8)),
        g1: hz_to_rad(rng.random_range(0.0..1e7)),
        g2: hz_to_rad(rng.random_range(0.0..1e7)),
    }
}

fn orthogonality() -> Outcome {
    let mut rng = seeded(1);
    let zero = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let cav2 = random_two_mode(&mut rng);
        let omega = cav2.omega1 + hz_to_rad(rng.random_range(-1e8..1e8));
        worst = worst.max(s21_two_modes(&cav2, zero, omega).amplitude.norm());
    }
    outcome(
        worst == 0.0,
        format!("max |S21| = {worst:e} over 10000 draws"),
    )
}

fn random_spin(rng: &mut StdRng) -> SpinModel {
    let t1_rate = rng.random_range(1.0..1e3);
    SpinModel {
        omega_sys: hz_to_rad(rng.random_range(1e9..4e9)),
        rabi: hz_to_rad(rng.random_range(0.0..1e6)),
        gamma_coh: 1.0,
        pump_rate: rng.random_range(1e2..1e5),
        t1_rate,
        thermal_rate: rng.random_range(0.0..t1_rate),
        dephasing_rate: rng.random_range(0.0..1e6),
        z_element: 1.0,
    }
    .with_consistent_linewidth()
}

/// Two-level Bloch equations with downward rate Γ↓, upward rate Γ↑, pure
/// dephasing γ_φ and drive Ω at detuning Δ:
/// `w = w₀(Δ² + γ₂²)/(Δ² + γ₂² + Ω²γ₂/Γ)`, `w₀ = (Γ↑ − Γ↓)/Γ`,
/// `Γ = Γ↓ + Γ↑`, `γ₂ = Γ/2 + γ_φ`, `p_e = (1 + w)/2`.
fn bloch_excited(spin: &SpinModel, det: f64) -> f64 {
    let down = spin.pump_rate + spin.t1_rate;
    let up = spin.thermal_rate;
    let gamma = down + up;
    let g2 = gamma / 2.0 + spin.dephasing_rate;
    let w0 = (up - down) / gamma;
    let lorentz = det * det + g2 * g2;
    let w = w0 * lorentz / (lorentz + spin.rabi * spin.rabi * g2 / gamma);
    0.5 * (1.0 + w)
}

fn steady_state_cross_validation() -> Outcome {
    let mut rng = seeded(2);
    let (mut worst_evolve, mut worst_bloch) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let spin = random_spin(&mut rng);
        let det = hz_to_rad(rng.random_range(-3e6..3e6));
        let l = spin_liouvillian(&spin, det).unwrap();
        let rho_ss = steady_state(&l).unwrap();
        let slowest = l.slowest_decay_rate().unwrap();
        let step = 0.05 / l.spectral_radius();
        let rho_t = evolve(&l, &DensityMatrix::ground(), 60.0 / slowest, step).unwrap();
        worst_evolve = worst_evolve.max(rho_ss.sup_distance(&rho_t));
        let pe = rho_ss.populations(spin.omega_sys).excited;
        worst_bloch = worst_bloch.max((pe - bloch_excited(&spin, det)).abs());
    }
    outcome(
        worst_evolve < 1e-8 && worst_bloch < 1e-10,
        format!("sup|ss - evolve| = {worst_evolve:e} (< 1e-8), |p_e - Bloch| = {worst_bloch:e} (< 1e-10)"),
    )
}

/// Least-squares fit of `1/|t|² = a·Δ² + b`, exact for a Lorentzian, giving
/// `FWHM = 2√(b/a)`.
fn fitted_fwhm(detunings: &[f64], power: &[f64]) -> f64 {
    let n = detunings.len() as f64;
    let x: Vec<f64> = detunings.iter().map(|d| d * d).collect();
    let y: Vec<f64> = power.iter().map(|p| 1.0 / p).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    2.0 * (b / a).sqrt()
}

fn bare_cavity_spectroscopy() -> Outcome {
    let cav = CavityModel::from_quality(hz_to_rad(2.87e9), 5000.0, 0.5, 0.0).unwrap();
    let zero = Complex64::new(0.0, 0.0);
    let detunings: Vec<f64> = (-400..=400).map(|k| k as f64 * cav.kappa / 200.0).collect();
    let power: Vec<f64> = detunings
        .iter()
        .map(|d| transmission_one_mode(&cav, zero, cav.omega_cav + d).power_transmittance)
        .collect();
    let fwhm = fitted_fwhm(&detunings, &power);
    let target = cav.omega_cav / 5000.0;
    let rel = (fwhm / target - 1.0).abs();
    outcome(
        rel < 0.01,
        format!("FWHM / (omega_cav/Q) - 1 = {rel:e} (< 1e-2)"),
    )
}

fn passivity() -> Outcome {
    let mut rng = seeded(4);
    let mut worst_t = 0.0f64;
    let mut worst_r = 0.0f64;
    for _ in 0..10_000 {
        let spin = random_spin(&mut rng);
        let pg = rng.random_range(0.5..=1.0);
        let pops = LevelPopulations::new(pg, 1.0 - pg, spin.omega_sys).unwrap();
        let omega = spin.omega_sys + hz_to_rad(rng.random_range(-2e7..2e7));
        let chi = susceptibility(&spin, &pops, omega, ChiMode::RwaTermOnly)
            .unwrap()
            .value;
        let q = rng.random_range(10.0..1e5);
        let g = hz_to_rad(rng.random_range(0.0..2e6));
        let omega_cav = spin.omega_sys + hz_to_rad(rng.random_range(-2e7..2e7));
        let split = rng.random_range(0.0..=1.0);
        let cav = CavityModel::from_quality(omega_cav, q, split, g).unwrap();
        worst_t = worst_t.max(transmission_one_mode(&cav, chi, omega).amplitude.norm());

        let single = CavityModel::from_quality(omega_cav, q, 1.0, g).unwrap();
        let real_chi = Complex64::new(chi.re, 0.0);
        let r = reflection_one_mode(&single, real_chi, omega)
            .amplitude
            .norm();
        worst_r = worst_r.max((r - 1.0).abs());
    }
    outcome(
        worst_t <= 1.0 && worst_r < 1e-12,
        format!("max |t| = {worst_t:.15} (<= 1), max ||r| - 1| = {worst_r:e} (< 1e-12)"),
    )
}

fn demodulator() -> Outcome {
    let mut rng = seeded(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let amplitude: f64 = rng.random_range(0.1..10.0);
        let phase = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let f: f64 = rng.random_range(1e5..1e8);
        let fs = rng.random_range(12.0..64.0) * f;
        let n = (60.0 * fs / f).ceil() as usize;
        let rf = sample_carrier(amplitude, phase, hz_to_rad(f), fs, n);
        let got = mix_and_filter(&rf, hz_to_rad(f), fs, f / 4.0).unwrap();
        let want = iq_from_phasor(amplitude, phase).unwrap();
        worst = worst
            .max((got.i_val - want.i_val).abs())
            .max((got.q_val - want.q_val).abs());
    }
    let sql_exact = [1.0, 7.0, 1e6, 2.103400948525243e22, 0.37]
        .iter()
        .all(|&n: &f64| phase_noise(n, 0.0).unwrap().delta_phi == 1.0 / n.sqrt());
    outcome(
        worst < 1e-3 && sql_exact,
        format!(
            "max IQ error = {worst:e} (< 1e-3), delta_phi = 1/sqrt(N) at NF 0 exact: {sql_exact}"
        ),
    )
}

fn default_pipeline() -> PipelineConfig {
    Config::default().pipeline().unwrap()
}

/// Chain rule with populations frozen: for `t = i√(κ₁κ₂)/D`,
/// `dφ/dω_sys = −Im(g²·∂χ/∂ω_sys / D)` with `∂χ/∂ω_sys = w/(Δ_ex + iγ/2)²`.
fn analytic_frozen_slope(cfg: &PipelineConfig, dc: f64, de: f64) -> f64 {
    let pops = cfg.frozen_populations.unwrap();
    let weight = (pops.ground - pops.excited) * cfg.spin.z_element.powi(2);
    let z = Complex64::new(de, cfg.spin.gamma_coh / 2.0);
    let chi = weight / z;
    let dchi = weight / (z * z);
    let kappa = (cfg.spin.omega_sys + dc) / 5000.0;
    let g2 = cfg.cavity.g_ens * cfg.cavity.g_ens;
    let d = Complex64::new(dc - de, -kappa / 2.0) + chi * g2;
    -(dchi * g2 / d).im
}

fn finite_difference_integrity() -> Outcome {
    let mut cfg = default_pipeline();
    // Strong polarisation so the spin term dominates the phase.
    cfg.frozen_populations = Some(LevelPopulations::new(0.9, 0.1, cfg.spin.omega_sys).unwrap());
    let gamma = cfg.spin.gamma_coh;
    let w = cfg.spin.omega_sys;
    let mut ratios = Vec::new();
    for (dc, de) in [(0.4, 0.3), (-0.7, 0.5), (1.5, -0.2)] {
        let (dc, de) = (dc * gamma, de * gamma);
        let exact = analytic_frozen_slope(&cfg, dc, de);
        let h = gamma / 20.0;
        let e1 = phase_slope_with_step(&cfg, dc, de, w, h).unwrap() - exact;
        let e2 = phase_slope_with_step(&cfg, dc, de, w, h / 2.0).unwrap() - exact;
        ratios.push(e1 / e2);
    }
    let pass = ratios.iter().all(|r| (r - 4.0).abs() <= 0.5);
    outcome(
        pass,
        format!("error ratios on halving = {ratios:.4?} (4 +/- 0.5)"),
    )
}

fn figure_reproduction() -> Outcome {
    let cfg = Config::default();
    let base = cfg.pipeline().unwrap();
    let (ac, ae) = (cfg.delta_cav_axis(), cfg.delta_ex_axis());
    let one = sensitivity_map(&base.with_channel(Channel::OneModeT), &ac, &ae).unwrap();
    let two = sensitivity_map(&base.with_channel(Channel::TwoModeS21), &ac, &ae).unwrap();
    let centre = (ac.len() / 2, ae.len() / 2);
    let (i1, j1, eta1) = one.argmin().unwrap();
    let (i2, j2, eta2) = two.argmin().unwrap();
    let minima_at_resonance = (i1, j1) == centre && (i2, j2) == centre;

    let ratio = ratio_map(&one, &two).unwrap();
    let slice_max = resonant_slice(&ratio, 0.0)
        .unwrap()
        .into_iter()
        .map(|(_, v)| v)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);

    let (pt1, pt2) = (eta1 * 1e12, eta2 * 1e12);
    let within = |v: f64, target: f64| v >= target / 3.0 && v <= target * 3.0;
    let pass = minima_at_resonance && slice_max >= 4.0 && within(pt1, 0.61) && within(pt2, 0.15);
    outcome(
        pass,
        format!(
            "(a) argmin one-mode ({i1},{j1}), two-mode ({i2},{j2}), resonance {centre:?}; \
             (b) slice max eta1/eta2 = {slice_max:.3} (>= 4); \
             (c) minima {pt1:.4} pT (0.61 x/ 3), {pt2:.4} pT (0.15 x/ 3)"
        ),
    )
}

fn heatmap_bytes(threads: &str) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = cli::run(["nvreadout", "--out", out, "--threads", threads, "heatmap"]);
    assert_eq!(code, cli::EXIT_OK, "heatmap exited with {code}");
    std::fs::read(dir.path().join("heatmap_t.csv")).unwrap()
}

fn determinism() -> Outcome {
    let a = heatmap_bytes("4");
    let b = heatmap_bytes("4");
    let c = heatmap_bytes("1");
    let d = heatmap_bytes("3");
    let pass = !a.is_empty() && a == b && a == c && a == d;
    outcome(
        pass,
        format!(
            "{} bytes; repeat identical: {}, 1/3/4 workers identical: {}",
            a.len(),
            a == b,
            a == c && a == d
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("orthogonality", orthogonality, Duration::from_secs(1)),
        (
            "steady-state cross-validation",
            steady_state_cross_validation,
            Duration::from_secs(30),
        ),
        (
            "bare-cavity spectroscopy",
            bare_cavity_spectroscopy,
            Duration::from_secs(5),
        ),
        ("passivity", passivity, Duration::from_secs(5)),
        ("demodulator", demodulator, Duration::from_secs(10)),
        (
            "finite-difference integrity",
            finite_difference_integrity,
            Duration::from_secs(10),
        ),
        (
            "sensitivity maps",
            figure_reproduction,
            Duration::from_secs(300),
        ),
        ("determinism", determinism, Duration::from_secs(600)),
    ];
    let mut failures = 0;
    for (k, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {} {name}: {} | {} | {:.3} s (budget {} s)",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
