//! Exact-penalty thresholds and online penalty adaptation.

use serde::{Deserialize, Serialize};

use super::MultiTermProblem;
use crate::error::{input, Result};
use crate::prox_core::Nonsmooth;

/// Lipschitz constant of `weight·‖·‖₁` with respect to `‖·‖₂` in dimension `dim`.
/// Conservative: it comes from the norm equivalence `‖x‖₁ ≤ √dim·‖x‖₂`.
pub fn l1_euclidean_lipschitz(weight: f64, dim: usize) -> f64 {
    weight * (dim as f64).sqrt()
}

/// `G_k + H_k` for every term, or `None` when a constant is unknown.
///
/// `G_k` comes from the smooth term, `H_k` from the term's explicit constant
/// or, for ℓ1 terms, from the norm-equivalence bound.
pub fn penalty_floor(problem: &MultiTermProblem) -> Vec<Option<f64>> {
    problem
        .terms
        .iter()
        .map(|t| {
            let g = t.smooth.psi_lipschitz()?;
            let h = t.psi_lipschitz.or(match t.block.epigraph.nonsmooth {
                Nonsmooth::None | Nonsmooth::LinearZero => Some(0.0),
                Nonsmooth::L1 { weight } => Some(l1_euclidean_lipschitz(weight, t.block.shape.len())),
                // the nuclear norm is bounded by √rank times the Frobenius norm
                Nonsmooth::Nuclear { weight } => Some(weight * (t.block.shape.rows.min(t.block.shape.cols) as f64).sqrt()),
            })?;
            Some(g + h)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyDecision {
    Keep,
    Restart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyController {
    pub rho: Vec<f64>,
    pub growth: f64,
    pub kappa: f64,
    pub initial: f64,
    /// Grow only the penalties of terms whose correction loses value.
    pub selective: bool,
}

impl PenaltyController {
    pub fn new(n_terms: usize, initial: f64, growth: f64, kappa: f64) -> Result<Self> {
        if !(growth > 1.0) {
            return input(format!("penalty growth must exceed 1, got {growth}"));
        }
        if !(kappa > 0.0) {
            return input(format!("penalty tolerance must be positive, got {kappa}"));
        }
        if !(initial > 0.0) {
            return input(format!("initial penalty must be positive, got {initial}"));
        }
        Ok(Self { rho: vec![initial; n_terms], growth, kappa, initial, selective: false })
    }

    /// Whether `υ(ŷ) ≤ (1 + κ)Φ̄(x̄)` fails.
    pub fn violated(&self, upsilon_at_correction: f64, phi_bar_at_raw: f64) -> bool {
        upsilon_at_correction > (1.0 + self.kappa) * phi_bar_at_raw
    }

    /// Grow every penalty when the correction test fails.
    pub fn adapt_penalty(&mut self, upsilon_at_correction: f64, phi_bar_at_raw: f64) -> PenaltyDecision {
        if !self.violated(upsilon_at_correction, phi_bar_at_raw) {
            return PenaltyDecision::Keep;
        }
        self.rho.iter_mut().for_each(|r| *r *= self.growth);
        PenaltyDecision::Restart
    }

    /// Like [`Self::adapt_penalty`], but only the terms with positive
    /// correction loss grow; all grow if none does.
    pub fn adapt_selective(&mut self, upsilon_at_correction: f64, phi_bar_at_raw: f64, excess: &[f64]) -> PenaltyDecision {
        if !self.violated(upsilon_at_correction, phi_bar_at_raw) {
            return PenaltyDecision::Keep;
        }
        let any = excess.iter().any(|e| *e > 0.0);
        for (r, e) in self.rho.iter_mut().zip(excess) {
            if !any || *e > 0.0 {
                *r *= self.growth;
            }
        }
        PenaltyDecision::Restart
    }

    /// Raise every penalty to at least the given floor.
    pub fn apply_floor(&mut self, floor: &[Option<f64>]) {
        for (r, f) in self.rho.iter_mut().zip(floor) {
            if let Some(f) = f {
                *r = r.max(*f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptation_examples() {
        let mut c = PenaltyController::new(2, 0.001, 3.0, 1e-4).unwrap();
        assert_eq!(c.adapt_penalty(1.0, 1.0), PenaltyDecision::Keep);
        assert_eq!(c.adapt_penalty(1.001, 1.0), PenaltyDecision::Restart);
        assert!((c.rho[0] - 0.003).abs() < 1e-18 && (c.rho[1] - 0.003).abs() < 1e-18);
    }

    #[test]
    fn selective_grows_offending_terms() {
        let mut c = PenaltyController::new(2, 1.0, 3.0, 1e-4).unwrap();
        assert_eq!(c.adapt_selective(2.0, 1.0, &[0.5, -0.1]), PenaltyDecision::Restart);
        assert_eq!(c.rho, vec![3.0, 1.0]);
        assert_eq!(c.adapt_selective(2.0, 1.0, &[0.0, 0.0]), PenaltyDecision::Restart);
        assert_eq!(c.rho, vec![9.0, 3.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PenaltyController::new(1, 1.0, 1.0, 1e-4).is_err());
        assert!(PenaltyController::new(1, 1.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn norm_equivalence_floor() {
        assert!((l1_euclidean_lipschitz(0.5, 16) - 2.0).abs() < 1e-15);
        assert_eq!(l1_euclidean_lipschitz(0.0, 7), 0.0);
    }
}
