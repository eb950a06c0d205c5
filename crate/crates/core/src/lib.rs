// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

//! Dispersive readout of an NV-center spin ensemble coupled to a microwave
//! cavity.
//!
//! The crate is organised as a pipeline:
//!
//! * [`model`] holds the physical parameter records and the dispersive-regime
//!   check.
//! * [`lindblad`] builds the rotating-frame Hamiltonian and the Liouvillian of
//!   the effective two-level spin and solves for its steady state.
//! * [`response`] turns steady-state populations into the linear-response
//!   susceptibility.
//! * [`scattering`] evaluates one-mode transmission/reflection and the
//!   two-orthogonal-mode `S21` amplitude.
//! * [`demod`] models the IQ demodulator and shot-noise phase error.
//! * [`sensitivity`] composes everything into magnetic-field sensitivity maps.
//! * [`cli`] loads configuration files and writes CSV/JSON/PNG outputs.
//!
//! All frequencies and rates are angular (rad/s) internally.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod demod;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod response;
pub mod scattering;
pub mod sensitivity;

pub use error::{Error, Result};
