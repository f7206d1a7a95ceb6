//! Isotropic error distributions on `S^{2d-1}` and the variance algebra of
//! composed errors.

mod density;
mod marginal;
mod variance;

pub use density::{normal_density_eval, DensityKind, IsotropicDensity, PolarTable};
pub use marginal::{marginal_polar, PolarMarginal, MIN_MARGINAL_NODES};
pub use variance::{variance_compose, variance_compose_n, variance_split};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of an `(n, m)` block code: `n` physical qubits carrying `m`
/// logical ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: u32,
    pub m: u32,
    /// `2^n`, complex dimension of the encoded register.
    pub d: usize,
    /// `2^m`, complex dimension of the logical register.
    pub d_prime: usize,
    /// `2^(n-m)`, number of syndrome blocks.
    pub d_dprime: usize,
}

impl CodeParams {
    pub const MAX_QUBITS: u32 = 24;

    pub fn new(n: u32, m: u32) -> Result<Self> {
        if m < 1 || n <= m {
            return Err(Error::invalid(format!(
                "code ({n}, {m}) must satisfy n > m >= 1"
            )));
        }
        if n > Self::MAX_QUBITS {
            return Err(Error::invalid(format!(
                "code ({n}, {m}) exceeds {} qubits",
                Self::MAX_QUBITS
            )));
        }
        Ok(CodeParams {
            n,
            m,
            d: 1 << n,
            d_prime: 1 << m,
            d_dprime: 1 << (n - m),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VarianceSource {
    ClosedForm,
    Quadrature,
    Empirical,
}

/// `V = E[‖Ψ - Φ‖²] = 2 - 2E[x0]`, always in `[0, 4]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub v: f64,
    pub source: VarianceSource,
}
