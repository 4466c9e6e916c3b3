//! Multi-term composite minimization through an exact-penalty saddle problem.
//!
//! The problem of interest is
//!
//! ```text
//! min_{y⁰ ∈ Y₀}  ψ₀(y⁰) + Ψ₀(y⁰) + Σ_k [ψ_k(y^k) + Ψ_k(y^k)],   y^k = A_k y⁰ + b_k,
//! ```
//!
//! where each `ψ_k(y) = max_z φ_k(y, z)` is given by a smooth coupling. The
//! coupling constraints are penalized by `ρ_k‖y^k − A_k y⁰ − b_k‖₂`, written
//! as a maximum over unit-ball multipliers `w^k`, and nonsmooth terms are
//! lifted into epigraph scalars. The result is a composite saddle problem
//! solved by [`crate::comp_mp`]; [`MultiTermProblem::correction`] maps its
//! solutions back to exactly feasible points.

mod mc;
mod penalty;
mod solve;
pub mod tiny;

pub use mc::{capped_domain, mc_lower_bound, mc_radius_bound, theta_plus, McLowerBounder};
pub use penalty::{l1_euclidean_lipschitz, penalty_floor, PenaltyController, PenaltyDecision};
pub use solve::{solve_multiterm, AggregationConfig, BoundContext, LowerBounder, MultiTermConfig, MultiTermOutcome, StopReason};

use std::ops::Range;
use std::sync::Arc;

use crate::comp_mp::SaddleOperator;
use crate::error::{input, Error, Result};
use crate::linalg::{self, norm2, LinearMap};
use crate::prox_core::{AggregatedSetup, BaseSet, BlockShape, BlockSpec, CompositePoint, EpigraphBlock, Layout, Nonsmooth};

/// A smooth convex-concave coupling `φ(y, z)` together with the closed form
/// of `ψ(y) = max_z φ(y, z)`.
pub trait SmoothTerm: Send + Sync {
    /// Blocks of the maximization variable `z`; empty when `φ` depends on `y` only.
    fn z_blocks(&self) -> Vec<BlockSpec> {
        Vec::new()
    }
    fn grad_y(&self, y: &[Vec<f64>], z: &[Vec<f64>]) -> Vec<Vec<f64>>;
    fn grad_z(&self, _y: &[Vec<f64>], _z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        Vec::new()
    }
    fn value(&self, y: &[Vec<f64>], z: &[Vec<f64>]) -> f64;
    fn psi(&self, y: &[Vec<f64>]) -> f64;
    /// Lipschitz constant of `ψ` with respect to the Euclidean norm, if known.
    fn psi_lipschitz(&self) -> Option<f64> {
        None
    }
}

/// `φ ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroSmooth {
    pub n_blocks: usize,
}

impl SmoothTerm for ZeroSmooth {
    fn grad_y(&self, y: &[Vec<f64>], _z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        y.iter().map(|b| vec![0.0; b.len()]).collect()
    }
    fn value(&self, _y: &[Vec<f64>], _z: &[Vec<f64>]) -> f64 {
        0.0
    }
    fn psi(&self, _y: &[Vec<f64>]) -> f64 {
        0.0
    }
    fn psi_lipschitz(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `½‖P_Ω y − b‖²` on a single block, with `Ω` given as flat indices.
#[derive(Clone, Debug)]
pub struct MaskedLeastSquares {
    pub dim: usize,
    pub mask: Vec<usize>,
    pub b: Vec<f64>,
}

impl MaskedLeastSquares {
    pub fn new(dim: usize, mask: Vec<usize>, b: Vec<f64>) -> Result<Self> {
        if mask.len() != b.len() {
            return input("observation mask and values differ in length");
        }
        if mask.iter().any(|&i| i >= dim) {
            return input("observation index out of range");
        }
        Ok(Self { dim, mask, b })
    }

    fn residual(&self, y: &[f64]) -> Vec<f64> {
        self.mask.iter().zip(&self.b).map(|(&i, b)| y[i] - b).collect()
    }
}

impl SmoothTerm for MaskedLeastSquares {
    fn grad_y(&self, y: &[Vec<f64>], _z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut g = vec![0.0; self.dim];
        for (&i, b) in self.mask.iter().zip(&self.b) {
            g[i] = y[0][i] - b;
        }
        vec![g]
    }
    fn value(&self, y: &[Vec<f64>], _z: &[Vec<f64>]) -> f64 {
        self.psi(y)
    }
    fn psi(&self, y: &[Vec<f64>]) -> f64 {
        0.5 * self.residual(&y[0]).iter().map(|r| r * r).sum::<f64>()
    }
}

/// `½‖y − c‖²` on a single block.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub center: Vec<f64>,
}

impl SmoothTerm for Quadratic {
    fn grad_y(&self, y: &[Vec<f64>], _z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        vec![linalg::sub(&y[0], &self.center)]
    }
    fn value(&self, y: &[Vec<f64>], _z: &[Vec<f64>]) -> f64 {
        self.psi(y)
    }
    fn psi(&self, y: &[Vec<f64>]) -> f64 {
        0.5 * norm2(&linalg::sub(&y[0], &self.center)).powi(2)
    }
}

/// `φ(y, z) = ⟨z, A(Σ_i y_i) − b⟩` with `z` in a Euclidean ball, so that
/// `ψ(y) = radius·‖A Σ y_i − b‖₂`.
#[derive(Clone)]
pub struct ResidualNorm {
    pub n_blocks: usize,
    pub map: Arc<dyn LinearMap>,
    pub b: Vec<f64>,
    pub z_shape: BlockShape,
    pub radius: f64,
}

impl ResidualNorm {
    fn residual(&self, y: &[Vec<f64>]) -> Vec<f64> {
        let mut s = y[0].clone();
        for b in &y[1..] {
            linalg::axpy(&mut s, 1.0, b);
        }
        linalg::sub(&self.map.apply(&s), &self.b)
    }
}

impl SmoothTerm for ResidualNorm {
    fn z_blocks(&self) -> Vec<BlockSpec> {
        vec![BlockSpec::new(
            "z",
            self.z_shape,
            EpigraphBlock::new(BaseSet::EuclideanBall { radius: self.radius }, Nonsmooth::None),
        )]
    }
    fn grad_y(&self, _y: &[Vec<f64>], z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let g = self.map.apply_adjoint(&z[0]);
        vec![g; self.n_blocks]
    }
    fn grad_z(&self, y: &[Vec<f64>], _z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        vec![self.residual(y)]
    }
    fn value(&self, y: &[Vec<f64>], z: &[Vec<f64>]) -> f64 {
        linalg::dot(&z[0], &self.residual(y))
    }
    fn psi(&self, y: &[Vec<f64>]) -> f64 {
        self.radius * norm2(&self.residual(y))
    }
    fn psi_lipschitz(&self) -> Option<f64> {
        self.map.norm_bound().map(|a| a * self.radius * (self.n_blocks as f64).sqrt())
    }
}

/// One penalized coupling `y^k = A_k y⁰_{source} + b_k`.
#[derive(Clone)]
pub struct CouplingTerm {
    /// `Y_k` together with `Ψ_k`.
    pub block: BlockSpec,
    /// Index of the base block `A_k` reads from.
    pub source: usize,
    pub map: Arc<dyn LinearMap>,
    pub offset: Vec<f64>,
    pub smooth: Arc<dyn SmoothTerm>,
    /// Lipschitz constant `H_k` of `Ψ_k` with respect to the Euclidean norm, if known.
    pub psi_lipschitz: Option<f64>,
}

#[derive(Clone)]
pub struct MultiTermProblem {
    /// Sub-blocks of `y⁰`, each with its share of `Ψ₀`.
    pub base: Vec<BlockSpec>,
    pub base_smooth: Arc<dyn SmoothTerm>,
    pub terms: Vec<CouplingTerm>,
    /// Starting `y⁰`; zeros when absent.
    pub start: Option<Vec<Vec<f64>>>,
}

/// Positions of the block groups inside the assembled layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockIndex {
    pub base: Range<usize>,
    pub terms: Range<usize>,
    pub z_base: Range<usize>,
    pub z_terms: Vec<Range<usize>>,
    pub w: Range<usize>,
}

impl BlockIndex {
    /// All blocks belonging to the minimization variable.
    pub fn primal(&self) -> Range<usize> {
        self.base.start..self.terms.end
    }
}

impl MultiTermProblem {
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.is_empty() {
            return Err(Error::Assembly("problem needs at least one base block".into()));
        }
        for (k, t) in self.terms.iter().enumerate() {
            let src = self.base.get(t.source).ok_or_else(|| Error::Assembly(format!("term {k} reads missing base block {}", t.source)))?;
            if t.map.input_dim() != src.shape.len() || t.map.output_dim() != t.block.shape.len() {
                return Err(Error::Assembly(format!(
                    "term {k}: map is {}→{}, blocks are {}→{}",
                    t.map.input_dim(),
                    t.map.output_dim(),
                    src.shape.len(),
                    t.block.shape.len()
                )));
            }
            if t.offset.len() != t.block.shape.len() {
                return Err(Error::Assembly(format!("term {k}: offset has wrong length")));
            }
        }
        if let Some(s) = &self.start {
            if s.len() != self.base.len() || s.iter().zip(&self.base).any(|(v, b)| v.len() != b.shape.len()) {
                return Err(Error::Assembly("starting point does not match the base blocks".into()));
            }
        }
        Ok(())
    }

    /// `A_k y⁰ + b_k`
    pub fn coupled(&self, k: usize, base: &[Vec<f64>]) -> Vec<f64> {
        let t = &self.terms[k];
        let mut v = t.map.apply(&base[t.source]);
        linalg::axpy(&mut v, 1.0, &t.offset);
        v
    }

    /// The objective `f(y⁰)` of the problem of interest.
    pub fn objective(&self, base: &[Vec<f64>]) -> Result<f64> {
        let mut f = self.base_smooth.psi(base);
        for (b, y) in self.base.iter().zip(base) {
            f += b.psi(y)?;
        }
        for (k, t) in self.terms.iter().enumerate() {
            let yk = self.coupled(k, base);
            f += t.smooth.psi(std::slice::from_ref(&yk)) + t.block.psi(&yk)?;
        }
        Ok(f)
    }

    pub fn layout(&self) -> Result<(Layout, BlockIndex)> {
        self.validate()?;
        let mut blocks: Vec<BlockSpec> = self.base.clone();
        let base = 0..blocks.len();
        blocks.extend(self.terms.iter().map(|t| t.block.clone()));
        let terms = base.end..blocks.len();
        blocks.extend(self.base_smooth.z_blocks());
        let z_base = terms.end..blocks.len();
        let mut z_terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let s = blocks.len();
            blocks.extend(t.smooth.z_blocks());
            z_terms.push(s..blocks.len());
        }
        let ws = blocks.len();
        for (k, t) in self.terms.iter().enumerate() {
            blocks.push(BlockSpec::new(
                format!("w{}", k + 1),
                t.block.shape,
                EpigraphBlock::new(BaseSet::EuclideanBall { radius: 1.0 }, Nonsmooth::None),
            ));
        }
        let w = ws..blocks.len();
        Ok((Layout::new(blocks)?, BlockIndex { base, terms, z_base, z_terms, w }))
    }

    /// Assemble the penalized saddle problem for the given penalties.
    pub fn assemble(self: &Arc<Self>, rho: &[f64], weights: &AggregationConfig) -> Result<Assembled> {
        if rho.len() != self.terms.len() {
            return Err(Error::Assembly(format!("{} penalties for {} terms", rho.len(), self.terms.len())));
        }
        if rho.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Assembly("penalties must be positive".into()));
        }
        let (layout, index) = self.layout()?;
        let setup = weights.setup(&index, layout.n_blocks())?;
        let fv = vec![1.0; layout.n_scalars()];
        let operator = MultiTermOperator { problem: Arc::clone(self), rho: rho.to_vec(), index: index.clone(), fv };
        let x0 = self.initial_point(&layout, &index)?;
        Ok(Assembled { layout, setup, operator, x0, index })
    }

    fn initial_point(&self, layout: &Layout, index: &BlockIndex) -> Result<CompositePoint> {
        let mut x = layout.zeros();
        if let Some(s) = &self.start {
            for (i, b) in s.iter().enumerate() {
                x.u_blocks[index.base.start + i] = b.clone();
            }
        }
        let base = x.u_blocks[index.base.clone()].to_vec();
        for k in 0..self.terms.len() {
            x.u_blocks[index.terms.start + k] = self.coupled(k, &base);
        }
        layout.lift(&mut x)?;
        Ok(x)
    }

    /// `‖y^k − A_k y⁰ − b_k‖₂` for every term.
    pub fn residual_norms(&self, x: &CompositePoint, index: &BlockIndex) -> Vec<f64> {
        let base = &x.u_blocks[index.base.clone()];
        (0..self.terms.len())
            .map(|k| norm2(&linalg::sub(&x.u_blocks[index.terms.start + k], &self.coupled(k, base))))
            .collect()
    }

    /// `Φ̄(x¹)`: the penalized objective at the primal part of `x`, using the
    /// epigraph scalars stored in `x`.
    pub fn phi_bar(&self, x: &CompositePoint, rho: &[f64], layout: &Layout, index: &BlockIndex) -> f64 {
        let base = &x.u_blocks[index.base.clone()];
        let mut v = self.base_smooth.psi(base);
        for k in index.primal() {
            if let Some(i) = layout.scalar_of(k) {
                v += x.v_scalars[i];
            }
        }
        for (k, r) in self.residual_norms(x, index).into_iter().enumerate() {
            let yk = &x.u_blocks[index.terms.start + k];
            v += self.terms[k].smooth.psi(std::slice::from_ref(yk)) + rho[k] * r;
        }
        v
    }

    /// Replace every `y^k` by `A_k y⁰ + b_k` and every `τ^k` by `Ψ_k(y^k)`;
    /// the base part and the dual part are kept.
    pub fn correction(&self, x: &CompositePoint, layout: &Layout, index: &BlockIndex) -> Result<CompositePoint> {
        let mut out = x.clone();
        let base = x.u_blocks[index.base.clone()].to_vec();
        for k in 0..self.terms.len() {
            let b = index.terms.start + k;
            out.u_blocks[b] = self.coupled(k, &base);
            if let Some(i) = layout.scalar_of(b) {
                out.v_scalars[i] = layout.blocks[b].psi(&out.u_blocks[b])?;
            }
        }
        Ok(out)
    }

    /// Per-term loss of the correction:
    /// `[ψ_k + Ψ_k](ŷ^k) − [ψ_k(ȳ^k) + τ̄^k + ρ_k‖ȳ^k − A_kȳ⁰ − b_k‖]`.
    pub fn correction_excess(&self, x: &CompositePoint, rho: &[f64], layout: &Layout, index: &BlockIndex) -> Result<Vec<f64>> {
        let base = x.u_blocks[index.base.clone()].to_vec();
        let res = self.residual_norms(x, index);
        let mut out = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.iter().enumerate() {
            let b = index.terms.start + k;
            let yk_hat = self.coupled(k, &base);
            let after = t.smooth.psi(std::slice::from_ref(&yk_hat)) + t.block.psi(&yk_hat)?;
            let tau = layout.scalar_of(b).map_or(0.0, |i| x.v_scalars[i]);
            let before = t.smooth.psi(std::slice::from_ref(&x.u_blocks[b])) + tau + rho[k] * res[k];
            out.push(after - before);
        }
        Ok(out)
    }
}

pub struct Assembled {
    pub layout: Layout,
    pub setup: AggregatedSetup,
    pub operator: MultiTermOperator,
    pub x0: CompositePoint,
    pub index: BlockIndex,
}

/// The field of the penalized saddle problem.
#[derive(Clone)]
pub struct MultiTermOperator {
    problem: Arc<MultiTermProblem>,
    pub rho: Vec<f64>,
    pub index: BlockIndex,
    fv: Vec<f64>,
}

impl SaddleOperator for MultiTermOperator {
    fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let p = &self.problem;
        let ix = &self.index;
        let base = &u[ix.base.clone()];
        let z0 = &u[ix.z_base.clone()];
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(u.len());
        out.extend(p.base_smooth.grad_y(base, z0));
        for (k, t) in p.terms.iter().enumerate() {
            let w = &u[ix.w.start + k];
            let at_w = t.map.apply_adjoint(w);
            linalg::axpy(&mut out[t.source], -self.rho[k], &at_w);
            let yk = std::slice::from_ref(&u[ix.terms.start + k]);
            let zk = &u[ix.z_terms[k].clone()];
            let mut g = t.smooth.grad_y(yk, zk).pop().unwrap_or_else(|| vec![0.0; w.len()]);
            linalg::axpy(&mut g, self.rho[k], w);
            out.push(g);
        }
        for g in p.base_smooth.grad_z(base, z0) {
            out.push(linalg::scaled(&g, -1.0));
        }
        for (k, t) in p.terms.iter().enumerate() {
            let yk = std::slice::from_ref(&u[ix.terms.start + k]);
            for g in t.smooth.grad_z(yk, &u[ix.z_terms[k].clone()]) {
                out.push(linalg::scaled(&g, -1.0));
            }
        }
        for k in 0..p.terms.len() {
            let r = linalg::sub(&u[ix.terms.start + k], &p.coupled(k, base));
            out.push(linalg::scaled(&r, -self.rho[k]));
        }
        if out.len() != u.len() {
            return Err(Error::Assembly(format!("field has {} blocks, point has {}", out.len(), u.len())));
        }
        Ok(out)
    }

    fn fv(&self) -> &[f64] {
        &self.fv
    }
}
