//! Fidelity of quantum states under isotropic errors.
//!
//! An n-qubit state is a unit vector in `R^{2d}` (`d = 2^n`), and an
//! isotropic error is a random perturbation whose density depends only on
//! the polar angle `θ0` to the error-free state `|0⟩`. This crate provides:
//!
//! * [`mathcore`]: log-stable double factorials, the closed-form
//!   `sin^k` / Poisson-kernel integrals and sphere surfaces, and an adaptive
//!   Gauss–Kronrod integrator used as an independent oracle.
//! * [`distributions`]: isotropic densities on `S^{2d-1}`, their polar
//!   marginals, moments, and the variance algebra of composed errors.
//! * [`closedform`]: fidelity of the raw, uncoded, and code-corrected states
//!   together with the associated bounds.
//! * [`sampler`] and [`codesim`]: Monte Carlo generation of isotropic states,
//!   composition of errors, and an abstract block-code syndrome cycle.
//! * [`experiments`]: sweeps, verification reports, CSV/JSON/SVG output.
//!
//! All fidelities are reported squared (`F²`), matching `E[x0² + x1²]`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedform;
pub mod codesim;
pub mod distributions;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod mathcore;
pub mod sampler;

pub use closedform::{BoundVariant, FidelityReport};
pub use codesim::{BlockCode, Estimator, SyndromeOutcome};
pub use distributions::{CodeParams, DensityKind, IsotropicDensity, PolarMarginal, VarianceReport};
pub use error::{Error, Result};
pub use exec::Exec;
pub use mathcore::LogValue;
pub use sampler::{McConfig, McEstimate, StateVector};
