// Copyright 2026 The nvreadout Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ill-posed steady state: {0}")]
    IllPosedSteadyState(String),

    #[error("integrator unstable: {0}")]
    Stability(String),

    #[error("susceptibility pole on the real axis at omega = {omega} rad/s (gamma_coh = 0)")]
    Singularity { omega: f64 },

    #[error("phase undefined for a zero phasor")]
    UndefinedPhase,

    #[error("sampling preconditions violated: {0}")]
    Aliasing(String),

    #[error("finite-difference step too large: {0}")]
    StepTooLarge(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
