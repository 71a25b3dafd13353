//! Exact solutions of the time-dependent Schrödinger equation for a 2D
//! isotropic oscillator with time-dependent mass, frequency and magnetic
//! field, built from a pair of commuting invariants (the angular momentum
//! `L` and a quadratic invariant `I`).
//!
//! Pipeline:
//!
//! 1. [`profiles`] maps the physical inputs `M(t), Ω(t), B(t), e, θ` to the
//!    reduced coefficients `μ(t), ω²(t), ν(t)` of
//!    `H = p·p/(2μ) + ω² x·x/2 − ν L`.
//! 2. [`ermakov`] integrates the auxiliary equation for `σ(t)` together with
//!    the phase integrals.
//! 3. [`fockspace`] represents the ladder operators, `I`, `L` and `H` on the
//!    truncated joint eigenbasis `||n,m⟩`.
//! 4. [`wavefield`] realizes the basis states on a periodic 2D grid with
//!    spectral derivatives.
//! 5. [`phases`] assembles `ψ_{n,m}(t) = e^{iα_{n,m}(t)} ||n,m⟩` and checks it
//!    against the Schrödinger equation.
//!
//! Units: `ħ = 1`, all quantities dimensionless.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ermakov;
pub mod fockspace;
pub mod ode;
pub mod phases;
pub mod profiles;
pub mod wavefield;

pub use error::{Error, Result};
pub use ermakov::{
    coefficient_ode_residual, coeffs_from_sigma, solve_sigma, Frame, InitialCondition,
    InvariantCoeffs, SigmaSolution, SolverOptions, StepControl,
};
pub use fockspace::{FockIndex, FockOperatorSet};
pub use phases::PhaseRecord;
pub use profiles::{EffectiveParams, ParameterProfile, Side, TimeFunction};
pub use wavefield::{Grid2D, WaveField};

pub use num_complex::Complex64;
