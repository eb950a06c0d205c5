// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Lindblad dynamics of the effective two-level spin.
//!
//! Basis ordering is `|g⟩ = 0`, `|e⟩ = 1`, with `σz|g⟩ = +|g⟩`. Density
//! matrices are vectorised by stacking columns, so that
//! `vec(AρB) = (Bᵀ ⊗ A)·vec(ρ)`.
//!
//! The rotating-frame Hamiltonian is `H = (Δ/2)σz − (Ω/2)σx` with
//! `Δ = ω − ω_sys`. Optical pumping and T1 relaxation are `σ⁻` channels,
//! thermal excitation is a `σ⁺` channel and pure dephasing is a `σz` channel
//! at half the configured coherence-decay rate.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::SpinModel;

pub type Operator = Matrix2<Complex64>;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;
/// Smallest admissible pivot of the bordered system, relative to the largest.
const PIVOT_RATIO_TOL: f64 = 1e-12;
/// Default admissible `‖L·vec(ρ)‖ / max|L|` for a steady state.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn sigma_z() -> Operator {
    Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

pub fn sigma_x() -> Operator {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn sigma_y() -> Operator {
    let i = Complex64::i();
    Matrix2::new(c(0.0), -i, i, c(0.0))
}

/// Lowering operator `|g⟩⟨e|`.
pub fn sigma_minus() -> Operator {
    Matrix2::new(c(0.0), c(1.0), c(0.0), c(0.0))
}

/// Raising operator `|e⟩⟨g|`.
pub fn sigma_plus() -> Operator {
    Matrix2::new(c(0.0), c(0.0), c(1.0), c(0.0))
}

fn is_hermitian(m: &Operator, tol: f64) -> bool {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    (m - m.adjoint()).iter().all(|z| z.norm() <= tol * scale)
}

/// `(detuning/2)·σz − (rabi/2)·σx`.
pub fn rwa_hamiltonian(detuning: f64, rabi: f64) -> Operator {
    sigma_z() * c(0.5 * detuning) - sigma_x() * c(0.5 * rabi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipatorChannel {
    pub jump: Operator,
    pub rate: f64,
}

impl DissipatorChannel {
    pub fn new(jump: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::invalid("dissipator rate must be finite and >= 0"));
        }
        Ok(DissipatorChannel { jump, rate })
    }
}

/// The dissipators of a [`SpinModel`]. Channels with zero rate are omitted.
pub fn spin_channels(spin: &SpinModel) -> Vec<DissipatorChannel> {
    [
        (sigma_minus(), spin.pump_rate),
        (sigma_minus(), spin.t1_rate),
        (sigma_plus(), spin.thermal_rate),
        // σz at rate r damps the coherence at 2r.
        (sigma_z(), 0.5 * spin.dephasing_rate),
    ]
    .into_iter()
    .filter(|(_, rate)| *rate > 0.0)
    .map(|(jump, rate)| DissipatorChannel { jump, rate })
    .collect()
}

/// Generator of the master equation acting on column-stacked density
/// matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator(pub Matrix4<Complex64>);

impl Superoperator {
    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn apply(&self, rho: &Operator) -> Operator {
        let v = self.0 * vectorize(rho);
        unvectorize(&v)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Superoperator(self.0 * c(factor))
    }

    fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the generator.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self.0.eigenvalues() {
            Some(ev) => ev.iter().copied().collect(),
            None => Vec::new(),
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        let ev = self.eigenvalues();
        if ev.is_empty() {
            // Induced ∞-norm bounds the spectral radius from above.
            return (0..4)
                .map(|r| (0..4).map(|col| self.0[(r, col)].norm()).sum::<f64>())
                .fold(0.0, f64::max);
        }
        ev.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest nonzero `|Re λ|`, i.e. the slowest relaxation rate.
    pub fn slowest_decay_rate(&self) -> Option<f64> {
        let cutoff = 1e-9 * self.max_abs().max(f64::MIN_POSITIVE);
        self.eigenvalues()
            .into_iter()
            .filter(|z| z.norm() > cutoff)
            .map(|z| z.re.abs())
            .filter(|r| *r > 0.0)
            .min_by(|a, b| a.total_cmp(b))
    }
}

pub fn vectorize(rho: &Operator) -> Vector4<Complex64> {
    Vector4::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &Vector4<Complex64>) -> Operator {
    Matrix2::from_column_slice(v.as_slice())
}

/// Builds the Liouvillian of `ρ̇ = −i[H,ρ] + Σ_j γ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})`.
pub fn liouvillian(h: &Operator, channels: &[DissipatorChannel]) -> Result<Superoperator> {
    if !is_hermitian(h, HERMITIAN_TOL) {
        return Err(Error::invalid("Hamiltonian is not Hermitian"));
    }
    let id = Matrix2::<Complex64>::identity();
    let mut m: Matrix4<Complex64> =
        (id.kronecker(h) - h.transpose().kronecker(&id)) * -Complex64::i();
    for ch in channels {
        if ch.rate < 0.0 {
            return Err(Error::invalid("dissipator rate must be >= 0"));
        }
        let l = &ch.jump;
        let ldl = l.adjoint() * l;
        let d: Matrix4<Complex64> = l.conjugate().kronecker(l)
            - (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * c(0.5);
        m += d * c(ch.rate);
    }
    Ok(Superoperator(m))
}

/// Liouvillian of `spin` driven at `detuning = ω − ω_sys`.
pub fn spin_liouvillian(spin: &SpinModel, detuning: f64) -> Result<Superoperator> {
    liouvillian(&rwa_hamiltonian(detuning, spin.rabi), &spin_channels(spin))
}

/// A 2×2 Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub fn new(m: Operator) -> Result<Self> {
        if !is_hermitian(&m, 1e-12) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        if (m.trace() - c(1.0)).norm() > TRACE_TOL {
            return Err(Error::invalid("density matrix trace differs from 1"));
        }
        let rho = DensityMatrix(m);
        if rho.min_eigenvalue() < -PSD_TOL {
            return Err(Error::invalid(
                "density matrix is not positive semidefinite",
            ));
        }
        Ok(rho)
    }

    pub fn ground() -> Self {
        DensityMatrix(Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0)))
    }

    pub fn excited() -> Self {
        DensityMatrix(Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0)))
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Smaller eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = 0.5 * (self.0[(0, 1)] + self.0[(1, 0)].conj()).norm();
        0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
    }

    pub fn populations(&self, omega_sys: f64) -> LevelPopulations {
        LevelPopulations {
            ground: self.0[(0, 0)].re,
            excited: self.0[(1, 1)].re,
            energies: [0.0, omega_sys],
        }
    }

    /// Largest entrywise deviation.
    pub fn sup_distance(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Steady-state solution of `L·vec(ρ) = 0` with unit trace.
///
/// The first row of `L` is redundant (trace preservation makes it the negative
/// of the last) and is replaced by the trace functional; the resulting square
/// system is solved by LU with full pivoting.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    steady_state_with_tolerance(l, RESIDUAL_TOL)
}

/// [`steady_state`] with a caller-chosen bound on `‖L·vec(ρ)‖ / max|L|`.
pub fn steady_state_with_tolerance(l: &Superoperator, residual_tol: f64) -> Result<DensityMatrix> {
    let scale = l.max_abs();
    if scale == 0.0 {
        return Err(Error::IllPosedSteadyState(
            "generator vanishes; every state is stationary".into(),
        ));
    }
    let mut a = l.0;
    let trace_row = [c(scale), c(0.0), c(0.0), c(scale)];
    for (col, v) in trace_row.into_iter().enumerate() {
        a[(0, col)] = v;
    }
    let mut rhs = Vector4::zeros();
    rhs[0] = c(scale);

    let lu = a.full_piv_lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let smallest = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smallest > PIVOT_RATIO_TOL * largest) {
        return Err(Error::IllPosedSteadyState(
            "null space of the Liouvillian is degenerate; add a population-mixing \
             (pumping, relaxation or thermal) channel"
                .into(),
        ));
    }
    let v = lu
        .solve(&rhs)
        .ok_or_else(|| Error::IllPosedSteadyState("bordered system is singular".into()))?;

    let raw = unvectorize(&v);
    let mut rho = (raw + raw.adjoint()) * c(0.5);
    let tr = rho.trace().re;
    rho /= c(tr);

    let residual = (l.0 * vectorize(&rho)).norm() / scale;
    if !(residual <= residual_tol) {
        return Err(Error::IllPosedSteadyState(format!(
            "relative residual {residual:e} exceeds {residual_tol:e}"
        )));
    }
    DensityMatrix::new(rho).map_err(|e| Error::IllPosedSteadyState(e.to_string()))
}

/// Fixed-step fourth-order Runge–Kutta propagation of `vec(ρ̇) = L·vec(ρ)`.
///
/// For a linear generator one RK4 step is the matrix polynomial
/// `Σ_{k≤4} (hL)^k/k!`; the step count is applied by repeated squaring.
/// The step is shrunk so that an integer number of steps covers `duration`.
pub fn evolve(
    l: &Superoperator,
    rho0: &DensityMatrix,
    duration: f64,
    step: f64,
) -> Result<DensityMatrix> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid("step must be positive"));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::invalid("duration must be finite and >= 0"));
    }
    let radius = l.spectral_radius();
    if step * radius >= 0.1 {
        return Err(Error::Stability(format!(
            "step {step:e} s times spectral radius {radius:e} /s exceeds 0.1"
        )));
    }
    if duration == 0.0 {
        return Ok(*rho0);
    }
    let n_steps = (duration / step - 1e-9).ceil().max(1.0) as u64;
    let h = duration / n_steps as f64;

    let hl = l.0 * c(h);
    let id = Matrix4::<Complex64>::identity();
    let mut term = id;
    let mut one_step = id;
    for k in 1..=4 {
        term = term * hl * c(1.0 / k as f64);
        one_step += term;
    }
    let propagator = matrix_power(one_step, n_steps);
    let v = propagator * vectorize(rho0.matrix());
    let m = unvectorize(&v);
    Ok(DensityMatrix((m + m.adjoint()) * c(0.5)))
}

fn matrix_power(mut base: Matrix4<Complex64>, mut exp: u64) -> Matrix4<Complex64> {
    let mut acc = Matrix4::identity();
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        exp >>= 1;
    }
    acc
}

/// Populations of the two levels together with their lab-frame energies
/// (rad/s, ground at zero).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LevelPopulations {
    pub ground: f64,
    pub excited: f64,
    pub energies: [f64; 2],
}

impl LevelPopulations {
    pub fn new(ground: f64, excited: f64, omega_sys: f64) -> Result<Self> {
        let ok = |p: f64| (-1e-12..=1.0 + 1e-12).contains(&p);
        if !ok(ground) || !ok(excited) || (ground + excited - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("populations must lie in [0,1] and sum to 1"));
        }
        Ok(LevelPopulations {
            ground,
            excited,
            energies: [0.0, omega_sys],
        })
    }

    /// `p_g − p_e`.
    pub fn inversion_deficit(&self) -> f64 {
        self.ground - self.excited
    }

    pub fn transition_frequency(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

/// Steady-state populations of `spin` driven at `detuning`.
pub fn steady_populations(spin: &SpinModel, detuning: f64) -> Result<LevelPopulations> {
    steady_populations_with_tolerance(spin, detuning, RESIDUAL_TOL)
}

pub fn steady_populations_with_tolerance(
    spin: &SpinModel,
    detuning: f64,
    residual_tol: f64,
) -> Result<LevelPopulations> {
    if spin.population_rate() <= 0.0 {
        return Err(Error::IllPosedSteadyState(
            "no population-mixing channel (pump, T1 and thermal rates are all zero)".into(),
        ));
    }
    let rho = steady_state_with_tolerance(&spin_liouvillian(spin, detuning)?, residual_tol)?;
    Ok(rho.populations(spin.omega_sys))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PopulationCurve {
    pub detunings: Vec<f64>,
    pub populations: Vec<LevelPopulations>,
}

pub fn population_curve(spin: &SpinModel, detunings: &[f64]) -> Result<PopulationCurve> {
    if detunings.is_empty() {
        return Err(Error::invalid("detuning grid is empty"));
    }
    if detunings.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("detuning grid must be strictly increasing"));
    }
    let populations = detunings
        .iter()
        .map(|&d| steady_populations(spin, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(PopulationCurve {
        detunings: detunings.to_vec(),
        populations,
    })
}
