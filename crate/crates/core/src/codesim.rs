//! Abstract `(n, m)` block code: `d″` orthogonal blocks of complex dimension
//! `d′`, with the code space as block 0 and the discrete error `E_j` mapping
//! block 0 onto block `j`.
//!
//! Correction measures the syndrome (which block), renormalizes the block
//! content and maps it back onto the code space. The correction itself is
//! noiseless and instantaneous.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{CodeParams, PolarMarginal};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::sampler::{estimate, sample_state, McConfig, McEstimate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCode {
    pub params: CodeParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeOutcome {
    pub syndrome: usize,
    pub probability: f64,
    /// Block content divided by `sqrt(P_j)`, as a state of half-dimension `d′`.
    pub projected_state: StateVector,
}

impl SyndromeOutcome {
    /// `|⟨Φ0|corrected⟩|²` for the logical reference `Φ0 = |0⟩`.
    pub fn fidelity_term(&self) -> f64 {
        self.projected_state.fidelity_term()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Estimator {
    /// Draw a syndrome per sample and score the corrected state.
    SyndromeSampled,
    /// Sum `P_j · (fidelity of the corrected block j)` over all syndromes;
    /// the renormalization cancels, leaving `Σ_j x_{2d′j}² + x_{2d′j+1}²`.
    #[default]
    BlockSum,
}

impl BlockCode {
    pub fn new(params: CodeParams) -> Self {
        BlockCode { params }
    }

    /// Real-coordinate range of block `j`: `[2d′j, 2d′(j+1))`.
    pub fn block(&self, j: usize) -> Range<usize> {
        let w = 2 * self.params.d_prime;
        j * w..(j + 1) * w
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.d() != self.params.d {
            return Err(Error::invalid(format!(
                "state half-dimension {} does not match code dimension {}",
                state.d(),
                self.params.d
            )));
        }
        Ok(())
    }

    /// `P_j` = squared norm of block `j`, for every syndrome `j`.
    pub fn syndrome_probabilities(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.check_state(state)?;
        Ok(state
            .coords()
            .chunks_exact(2 * self.params.d_prime)
            .map(|b| b.iter().map(|x| x * x).sum())
            .collect())
    }

    /// Samples a syndrome with probability `P_j` and returns the corrected
    /// logical state.
    pub fn measure_and_correct<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        rng: &mut R,
    ) -> Result<SyndromeOutcome> {
        let probs = self.syndrome_probabilities(state)?;
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("cannot measure the zero vector"));
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut syndrome = probs.iter().rposition(|&p| p > 0.0).expect("positive mass");
        for (j, &p) in probs.iter().enumerate() {
            acc += p;
            if target < acc && p > 0.0 {
                syndrome = j;
                break;
            }
        }
        let p = probs[syndrome];
        let inv = p.sqrt().recip();
        let coords = state.coords()[self.block(syndrome)]
            .iter()
            .map(|x| x * inv)
            .collect();
        Ok(SyndromeOutcome {
            syndrome,
            probability: p / total,
            projected_state: StateVector::from_raw(coords),
        })
    }

    /// `Σ_j P_j · |⟨E_jΦ|Π_jΨ⟩|²`, the expected corrected fidelity given `Ψ`.
    pub fn block_sum_term(&self, state: &StateVector) -> f64 {
        state
            .coords()
            .chunks_exact(2 * self.params.d_prime)
            .map(|b| b[0] * b[0] + b[1] * b[1])
            .sum()
    }
}

/// Monte Carlo estimate of `F²(Φ̃)`.
pub fn corrected_fidelity_mc(
    marginal: &PolarMarginal,
    code: &BlockCode,
    config: &McConfig,
    estimator: Estimator,
    exec: Exec,
) -> Result<McEstimate> {
    if marginal.density().d() as usize != code.params.d {
        return Err(Error::invalid(format!(
            "density half-dimension {} does not match code dimension {}",
            marginal.density().d(),
            code.params.d
        )));
    }
    match estimator {
        Estimator::BlockSum => estimate(config, exec, |rng| {
            code.block_sum_term(&sample_state(marginal, rng))
        }),
        Estimator::SyndromeSampled => estimate(config, exec, |rng| {
            let state = sample_state(marginal, rng);
            code.measure_and_correct(&state, rng)
                .map(|o| o.fidelity_term())
                .unwrap_or(f64::NAN)
        }),
    }
}

/// Monte Carlo estimate of `E[x0² + x1²]` for states drawn from `marginal`
/// (`F²(Ψ)` at `d`, `F²(Ψ0)` at `d′`).
pub fn raw_fidelity_mc(
    marginal: &PolarMarginal,
    config: &McConfig,
    exec: Exec,
) -> Result<McEstimate> {
    estimate(config, exec, |rng| {
        sample_state(marginal, rng).fidelity_term()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::chunk_rng;

    fn code(n: u32, m: u32) -> BlockCode {
        BlockCode::new(CodeParams::new(n, m).unwrap())
    }

    #[test]
    fn blocks_partition_coordinates() {
        let c = code(5, 1);
        let mut covered = vec![0; 64];
        for j in 0..c.params.d_dprime {
            for i in c.block(j) {
                covered[i] += 1;
            }
        }
        assert!(covered.iter().all(|&k| k == 1));
        assert_eq!(c.block(1).start, 2 * c.params.d_prime);
    }

    #[test]
    fn probabilities_of_basis_states() {
        let c = code(3, 1);
        let p = c.syndrome_probabilities(&StateVector::basis(8, 0)).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 0.0]);
        let p = c.syndrome_probabilities(&StateVector::basis(8, 4)).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0, 0.0]);
        assert!(c.syndrome_probabilities(&StateVector::basis(4, 0)).is_err());
    }

    #[test]
    fn correction_of_basis_states() {
        let c = code(3, 1);
        let mut rng = chunk_rng(1, 0);
        let o = c
            .measure_and_correct(&StateVector::basis(8, 0), &mut rng)
            .unwrap();
        assert_eq!((o.syndrome, o.fidelity_term()), (0, 1.0));
        assert_eq!(o.projected_state, StateVector::basis(2, 0));

        let o = c
            .measure_and_correct(&StateVector::basis(8, 2), &mut rng)
            .unwrap();
        assert_eq!((o.syndrome, o.fidelity_term()), (0, 0.0));
        assert_eq!(o.projected_state, StateVector::basis(2, 2));

        let o = c
            .measure_and_correct(&StateVector::basis(8, 4), &mut rng)
            .unwrap();
        assert_eq!((o.syndrome, o.fidelity_term()), (1, 1.0));
        assert_eq!(o.projected_state, StateVector::basis(2, 0));
    }

    #[test]
    fn zero_state_rejected() {
        let c = code(2, 1);
        let zero = StateVector::from_raw(vec![0.0; 8]);
        assert!(c.measure_and_correct(&zero, &mut chunk_rng(0, 0)).is_err());
    }

    #[test]
    fn syndrome_frequencies_follow_probabilities() {
        let c = code(2, 1);
        let h = 0.5f64.sqrt();
        let state = StateVector::new(vec![h, 0.0, 0.0, 0.0, 0.0, h, 0.0, 0.0]).unwrap();
        let mut rng = chunk_rng(4, 0);
        let mut ones = 0;
        let trials = 20_000;
        for _ in 0..trials {
            let o = c.measure_and_correct(&state, &mut rng).unwrap();
            assert!((o.fidelity_term() - 1.0).abs() < 1e-15);
            ones += o.syndrome;
        }
        let frac = ones as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / trials as f64).sqrt() * 1.5);
    }
}
