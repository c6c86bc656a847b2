//! Long-time asymptotics of the defocusing nonlinear Schrödinger equation
//! `i q_t + q_xx − 2|q|² q = 0`.
//!
//! The crate computes scattering data of the Zakharov–Shabat (AKNS) system,
//! solves the scalar Riemann–Hilbert problem for the conjugation factor `δ`,
//! evaluates the leading-order asymptotic solution and its `ln t / t`
//! correction coefficients (whose sum cancels), and provides independent
//! numerical oracles — a split-step spectral NLS solver and the exact Fourier
//! solution of the linear Schrödinger equation — against which the decay
//! rates of the asymptotic formulas are measured.
//!
//! Interchangeable algorithms are trait objects held in name-keyed
//! [`registry::Registry`] instances and selected at runtime from
//! configuration.

pub mod alpha;
pub mod asymptotics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linear;
pub mod pde;
pub mod profiles;
pub mod quad;
pub mod registry;
pub mod remainder;
pub mod rhp;
pub mod scattering;
pub mod specfun;
pub mod tolerances;

pub use error::{Error, Result};
