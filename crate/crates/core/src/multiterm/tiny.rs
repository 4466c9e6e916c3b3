//! Small coordinate-separable multi-term instances with exact saddle oracles.
//!
//! ```text
//! min_{‖y‖₂ ≤ r₀} ½‖y − c‖² + λ₀‖y‖₁ + Σ_k λ_k‖D_k y + b_k‖₁
//! ```
//!
//! with diagonal `D_k`, `|D_k| ≤ 1`. The ball is large enough to contain the
//! unconstrained minimizer, so the optimum can be found one coordinate at a
//! time, and both partial optimizations of the penalized saddle function have
//! closed forms.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{BlockIndex, CouplingTerm, MultiTermProblem, Quadratic, ZeroSmooth};
use crate::certificates::SaddleEvaluator;
use crate::error::Result;
use crate::linalg::{self, norm1, norm2, DiagonalMap};
use crate::prox_core::{ball_l2_l1_prox, soft_threshold, BaseSet, BlockShape, BlockSpec, CompositePoint, EpigraphBlock, Layout, Nonsmooth};

#[derive(Clone, Debug)]
pub struct SeparableInstance {
    pub center: Vec<f64>,
    pub lambda0: f64,
    pub diag: Vec<Vec<f64>>,
    pub offsets: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    pub radius: f64,
}

impl SeparableInstance {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let dim = rng.random_range(1..=6);
        let terms = rng.random_range(1..=2);
        let mut vec = |lo: f64, hi: f64| -> Vec<f64> { (0..dim).map(|_| rng.random_range(lo..hi)).collect() };
        let center = vec(-2.0, 2.0);
        let diag: Vec<Vec<f64>> = (0..terms).map(|_| vec(-1.0, 1.0)).collect();
        let offsets: Vec<Vec<f64>> = (0..terms).map(|_| vec(-1.0, 1.0)).collect();
        let lambda0 = rng.random_range(0.1..1.0);
        let lambdas: Vec<f64> = (0..terms).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut inst = Self { center, lambda0, diag, offsets, lambdas, radius: 1.0 };
        // ½‖y* − c‖² ≤ f(y*) ≤ f(0) bounds the minimizer's norm
        let f0 = inst.objective(&vec![0.0; dim]);
        inst.radius = norm2(&inst.center) + (2.0 * f0).sqrt() + 1.0;
        inst
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        let mut f = 0.5 * norm2(&linalg::sub(y, &self.center)).powi(2) + self.lambda0 * norm1(y);
        for k in 0..self.lambdas.len() {
            f += self.lambdas[k] * norm1(&self.coupled(k, y));
        }
        f
    }

    fn coupled(&self, k: usize, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.diag[k]).zip(&self.offsets[k]).map(|((y, d), b)| d * y + b).collect()
    }

    fn term_radius(&self, k: usize) -> f64 {
        self.radius + norm2(&self.offsets[k])
    }

    /// Exact-penalty floor `λ_k√dim` for each term.
    pub fn rho_floor(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l * (self.dim() as f64).sqrt()).collect()
    }

    pub fn problem(&self) -> MultiTermProblem {
        let n = self.dim();
        let ball_l1 = |name: String, r: f64, w: f64| {
            BlockSpec::new(name, BlockShape::vector(n), EpigraphBlock::new(BaseSet::EuclideanBall { radius: r }, Nonsmooth::L1 { weight: w }))
        };
        let terms = (0..self.lambdas.len())
            .map(|k| CouplingTerm {
                block: ball_l1(format!("y{}", k + 1), self.term_radius(k), self.lambdas[k]),
                source: 0,
                map: Arc::new(DiagonalMap(self.diag[k].clone())),
                offset: self.offsets[k].clone(),
                smooth: Arc::new(ZeroSmooth { n_blocks: 1 }),
                psi_lipschitz: Some(self.lambdas[k] * (n as f64).sqrt()),
            })
            .collect();
        MultiTermProblem {
            base: vec![ball_l1("y0".into(), self.radius, self.lambda0)],
            base_smooth: Arc::new(Quadratic { center: self.center.clone() }),
            terms,
            start: None,
        }
    }

    pub fn evaluator(&self, rho: Vec<f64>, layout: Layout, index: BlockIndex) -> SeparableEvaluator<'_> {
        SeparableEvaluator { inst: self, problem: self.problem(), rho, layout, index }
    }
}

/// Exact `Φ̄` and `Φ̲` of the penalized saddle function of a [`SeparableInstance`].
pub struct SeparableEvaluator<'a> {
    inst: &'a SeparableInstance,
    problem: MultiTermProblem,
    rho: Vec<f64>,
    layout: Layout,
    index: BlockIndex,
}

impl SaddleEvaluator for SeparableEvaluator<'_> {
    fn primal_value(&self, x: &CompositePoint) -> Result<f64> {
        Ok(self.problem.phi_bar(x, &self.rho, &self.layout, &self.index))
    }

    fn dual_value(&self, x: &CompositePoint) -> Result<f64> {
        let inst = self.inst;
        let n = inst.dim();
        let mut g = vec![0.0; n];
        let mut total = 0.0;
        for k in 0..inst.lambdas.len() {
            let w = &x.u_blocks[self.index.w.start + k];
            let rho = self.rho[k];
            for i in 0..n {
                g[i] += rho * inst.diag[k][i] * w[i];
            }
            // min over the ball of λ‖y‖₁ + ρ⟨w, y⟩
            let a = linalg::scaled(w, rho);
            total -= inst.term_radius(k) * norm2(&soft_threshold(&a, inst.lambdas[k]));
            total -= rho * linalg::dot(w, &inst.offsets[k]);
        }
        let shifted: Vec<f64> = inst.center.iter().zip(&g).map(|(c, g)| c + g).collect();
        let y = ball_l2_l1_prox(&shifted, inst.lambda0, inst.radius);
        total += 0.5 * norm2(&linalg::sub(&y, &inst.center)).powi(2) + inst.lambda0 * norm1(&y) - linalg::dot(&g, &y);
        Ok(total)
    }
}
