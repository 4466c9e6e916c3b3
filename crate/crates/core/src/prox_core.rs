//! Proximal setups, Bregman distances and the composite prox-mapping.
//!
//! A composite point `x = [u; v]` holds one coordinate array per block plus
//! one epigraph scalar for every block carrying a nonsmooth term. The
//! prox-mapping minimizes `⟨ξ_u, s⟩ + ⟨ζ, w⟩ + V_u(s)` jointly over blocks and
//! epigraph scalars; with `ζ > 0` the epigraph constraint is active, so each
//! block reduces to a closed-form solver.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::linalg::{self, norm1, norm2};

/// The set a block lives in before epigraph lifting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BaseSet {
    WholeSpace,
    EuclideanBall { radius: f64 },
    FrobeniusBall { radius: f64 },
}

impl BaseSet {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            BaseSet::WholeSpace => None,
            BaseSet::EuclideanBall { radius } | BaseSet::FrobeniusBall { radius } => Some(radius),
        }
    }
}

/// The nonsmooth term lifted into an epigraph scalar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Nonsmooth {
    /// No term and no epigraph scalar.
    None,
    L1 { weight: f64 },
    Nuclear { weight: f64 },
    /// An epigraph scalar over the zero function (`v ≥ 0`).
    LinearZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpigraphBlock {
    pub base_set: BaseSet,
    pub nonsmooth: Nonsmooth,
    /// Upper bound on the epigraph scalar. Bookkeeping only, unless a prox
    /// call has a nonpositive scalar cost.
    pub cap: Option<f64>,
}

impl EpigraphBlock {
    pub fn new(base_set: BaseSet, nonsmooth: Nonsmooth) -> Self {
        Self { base_set, nonsmooth, cap: None }
    }

    pub fn has_scalar(&self) -> bool {
        self.nonsmooth != Nonsmooth::None
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.base_set.radius() {
            if !(r > 0.0 && r.is_finite()) {
                return input(format!("ball radius must be positive, got {r}"));
            }
        }
        match self.nonsmooth {
            Nonsmooth::L1 { weight } | Nonsmooth::Nuclear { weight } if !(weight >= 0.0 && weight.is_finite()) => {
                input(format!("nonsmooth weight must be nonnegative, got {weight}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub rows: usize,
    pub cols: usize,
}

impl BlockShape {
    pub fn vector(n: usize) -> Self {
        Self { rows: n, cols: 1 }
    }
    pub fn matrix(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub shape: BlockShape,
    pub epigraph: EpigraphBlock,
}

impl BlockSpec {
    pub fn new(name: impl Into<String>, shape: BlockShape, epigraph: EpigraphBlock) -> Self {
        Self { name: name.into(), shape, epigraph }
    }

    /// Value of the lifted nonsmooth term at `u`.
    pub fn psi(&self, u: &[f64]) -> Result<f64> {
        Ok(match self.epigraph.nonsmooth {
            Nonsmooth::None | Nonsmooth::LinearZero => 0.0,
            Nonsmooth::L1 { weight } => weight * norm1(u),
            Nonsmooth::Nuclear { weight } => {
                if weight == 0.0 {
                    0.0
                } else {
                    weight * linalg::nuclear_norm(u, self.shape.rows, self.shape.cols)?
                }
            }
        })
    }

    /// Whether `u` lies in the base set up to `tol`.
    pub fn in_base_set(&self, u: &[f64], tol: f64) -> bool {
        match self.epigraph.base_set.radius() {
            None => true,
            Some(r) => norm2(u) <= r + tol,
        }
    }
}

/// Block structure of a composite point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub blocks: Vec<BlockSpec>,
    scalar_of_block: Vec<Option<usize>>,
    n_scalars: usize,
}

impl Layout {
    pub fn new(blocks: Vec<BlockSpec>) -> Result<Self> {
        let mut scalar_of_block = Vec::with_capacity(blocks.len());
        let mut n_scalars = 0;
        for b in &blocks {
            b.epigraph.validate()?;
            if b.shape.is_empty() {
                return input(format!("block {} is empty", b.name));
            }
            if b.epigraph.has_scalar() {
                scalar_of_block.push(Some(n_scalars));
                n_scalars += 1;
            } else {
                scalar_of_block.push(None);
            }
        }
        Ok(Self { blocks, scalar_of_block, n_scalars })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn n_scalars(&self) -> usize {
        self.n_scalars
    }

    /// Index of the epigraph scalar attached to block `k`.
    pub fn scalar_of(&self, k: usize) -> Option<usize> {
        self.scalar_of_block[k]
    }

    pub fn zeros(&self) -> CompositePoint {
        CompositePoint {
            u_blocks: self.blocks.iter().map(|b| vec![0.0; b.shape.len()]).collect(),
            v_scalars: vec![0.0; self.n_scalars],
        }
    }

    /// Check that `x` matches the block structure.
    pub fn check(&self, x: &CompositePoint) -> Result<()> {
        if x.u_blocks.len() != self.blocks.len() || x.v_scalars.len() != self.n_scalars {
            return input(format!(
                "point has {} blocks / {} scalars, layout expects {} / {}",
                x.u_blocks.len(),
                x.v_scalars.len(),
                self.blocks.len(),
                self.n_scalars
            ));
        }
        for (b, u) in self.blocks.iter().zip(&x.u_blocks) {
            if u.len() != b.shape.len() {
                return input(format!("block {} has {} entries, expected {}", b.name, u.len(), b.shape.len()));
            }
        }
        Ok(())
    }

    /// Set every epigraph scalar to the value of its nonsmooth term.
    pub fn lift(&self, x: &mut CompositePoint) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            if let Some(i) = self.scalar_of(k) {
                x.v_scalars[i] = b.psi(&x.u_blocks[k])?;
            }
        }
        Ok(())
    }

    /// Largest violation of `v ≥ Ψ(u)` and of the base sets.
    pub fn infeasibility(&self, x: &CompositePoint) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (k, b) in self.blocks.iter().enumerate() {
            if let Some(r) = b.epigraph.base_set.radius() {
                worst = worst.max(norm2(&x.u_blocks[k]) - r);
            }
            if let Some(i) = self.scalar_of(k) {
                worst = worst.max(b.psi(&x.u_blocks[k])? - x.v_scalars[i]);
            }
        }
        Ok(worst.max(0.0))
    }
}

/// A point `x = [u; v]`, also used for dual arrays `[ξ_u; ζ_v]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositePoint {
    pub u_blocks: Vec<Vec<f64>>,
    pub v_scalars: Vec<f64>,
}

impl CompositePoint {
    pub fn new(u_blocks: Vec<Vec<f64>>, v_scalars: Vec<f64>) -> Self {
        Self { u_blocks, v_scalars }
    }

    pub fn dot(&self, other: &CompositePoint) -> f64 {
        self.dot_u(&other.u_blocks) + linalg::dot(&self.v_scalars, &other.v_scalars)
    }

    pub fn dot_u(&self, other: &[Vec<f64>]) -> f64 {
        self.u_blocks.iter().zip(other).map(|(a, b)| linalg::dot(a, b)).sum()
    }

    /// `self += a * other`
    pub fn add_scaled(&mut self, a: f64, other: &CompositePoint) {
        for (s, o) in self.u_blocks.iter_mut().zip(&other.u_blocks) {
            linalg::axpy(s, a, o);
        }
        linalg::axpy(&mut self.v_scalars, a, &other.v_scalars);
    }

    pub fn scale(&mut self, a: f64) {
        self.u_blocks.iter_mut().flatten().for_each(|x| *x *= a);
        self.v_scalars.iter_mut().for_each(|x| *x *= a);
    }

    pub fn zeros_like(&self) -> CompositePoint {
        CompositePoint {
            u_blocks: self.u_blocks.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_scalars: vec![0.0; self.v_scalars.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u_blocks.iter().all(|b| linalg::all_finite(b)) && linalg::all_finite(&self.v_scalars)
    }
}

/// A norm with a compatible distance-generating function for one block.
pub trait ProximalSetup: Send + Sync + Debug {
    fn norm(&self, u: &[f64]) -> f64;
    fn dual_norm(&self, xi: &[f64]) -> f64;
    fn dgf(&self, u: &[f64]) -> f64;
    fn dgf_gradient(&self, u: &[f64]) -> Vec<f64>;

    fn strong_convexity_modulus(&self) -> f64 {
        1.0
    }

    /// `V_u(w) = ω(w) − ω(u) − ⟨ω′(u), w − u⟩`
    fn bregman(&self, u: &[f64], w: &[f64]) -> f64 {
        let g = self.dgf_gradient(u);
        let d: f64 = g.iter().zip(w.iter().zip(u)).map(|(g, (w, u))| g * (w - u)).sum();
        (self.dgf(w) - self.dgf(u) - d).max(0.0)
    }

    /// Solve `min_{s ∈ base} weight·V_u(s) + ⟨ξ, s⟩ + ζ·v` subject to
    /// `v ≥ Ψ(s)` for one block. Returns `s` and the epigraph scalar (if the
    /// block has one).
    fn prox_solve(&self, u: &[f64], xi: &[f64], weight: f64, zeta: f64, spec: &BlockSpec) -> Result<(Vec<f64>, Option<f64>)>;
}

/// The Euclidean setup `ω = ½‖·‖₂²` (Frobenius for matrix blocks).
#[derive(Clone, Copy, Debug, Default)]
pub struct EuclideanSetup;

impl ProximalSetup for EuclideanSetup {
    fn norm(&self, u: &[f64]) -> f64 {
        norm2(u)
    }
    fn dual_norm(&self, xi: &[f64]) -> f64 {
        norm2(xi)
    }
    fn dgf(&self, u: &[f64]) -> f64 {
        0.5 * linalg::dot(u, u)
    }
    fn dgf_gradient(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn bregman(&self, u: &[f64], w: &[f64]) -> f64 {
        0.5 * u.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn prox_solve(&self, u: &[f64], xi: &[f64], weight: f64, zeta: f64, spec: &BlockSpec) -> Result<(Vec<f64>, Option<f64>)> {
        let a: Vec<f64> = u.iter().zip(xi).map(|(u, x)| u - x / weight).collect();
        let eb = &spec.epigraph;
        let radius = eb.base_set.radius();
        let project = |mut s: Vec<f64>| {
            if let Some(r) = radius {
                radial_clip(&mut s, r);
            }
            s
        };
        if !eb.has_scalar() {
            return Ok((project(a), None));
        }
        if zeta <= 0.0 {
            return capped_solve(a, zeta, spec);
        }
        let beta = zeta / weight;
        match eb.nonsmooth {
            Nonsmooth::None => unreachable!(),
            Nonsmooth::LinearZero => Ok((project(a), Some(0.0))),
            Nonsmooth::L1 { weight: lam } => {
                let s = match radius {
                    None => soft_threshold(&a, beta * lam),
                    Some(r) => ball_l2_l1_prox(&a, beta * lam, r),
                };
                let v = lam * norm1(&s);
                Ok((s, Some(v)))
            }
            Nonsmooth::Nuclear { weight: mu } => {
                let (rows, cols) = (spec.shape.rows, spec.shape.cols);
                let (mut s, sv) = svt_with_spectrum(&a, rows, cols, beta * mu)?;
                let mut scale = 1.0;
                if let Some(r) = radius {
                    let fro = norm2(&sv);
                    if fro > r {
                        scale = r / fro;
                        s.iter_mut().for_each(|x| *x *= scale);
                    }
                }
                Ok((s, Some(mu * scale * sv.iter().sum::<f64>())))
            }
        }
    }
}

/// Nonpositive epigraph cost: only well posed when the scalar is capped.
/// The block then becomes a projection onto `{Ψ ≤ C}`.
fn capped_solve(a: Vec<f64>, zeta: f64, spec: &BlockSpec) -> Result<(Vec<f64>, Option<f64>)> {
    let eb = &spec.epigraph;
    let Some(cap) = eb.cap else {
        return Err(Error::UnboundedProx { index: 0, zeta });
    };
    if eb.base_set != BaseSet::WholeSpace {
        return Err(Error::Capability(format!(
            "capped epigraph with nonpositive cost over a ball (block {})",
            spec.name
        )));
    }
    let pick = |psi: f64| if zeta < 0.0 { cap } else { psi };
    match eb.nonsmooth {
        Nonsmooth::None => unreachable!(),
        Nonsmooth::LinearZero => Ok((a, Some(pick(0.0)))),
        Nonsmooth::L1 { weight } if weight == 0.0 => Ok((a, Some(pick(0.0)))),
        Nonsmooth::Nuclear { weight } if weight == 0.0 => Ok((a, Some(pick(0.0)))),
        Nonsmooth::L1 { weight } => {
            let mag = capped_simplex_project(&a, cap / weight);
            let s: Vec<f64> = a.iter().zip(&mag).map(|(x, m)| m * x.signum()).collect();
            let psi = weight * norm1(&s);
            Ok((s, Some(pick(psi))))
        }
        Nonsmooth::Nuclear { weight } => {
            let d = linalg::svd(&a, spec.shape.rows, spec.shape.cols)?;
            let sv = capped_simplex_project(&d.s, cap / weight);
            let s = linalg::recompose(&d.u, &sv, &d.v_t);
            Ok((s, Some(pick(weight * sv.iter().sum::<f64>()))))
        }
    }
}

fn radial_clip(s: &mut [f64], r: f64) {
    let n = norm2(s);
    if n > r {
        let f = r / n;
        s.iter_mut().for_each(|x| *x *= f);
    }
}

/// An aggregation of per-block setups with positive weights.
#[derive(Clone, Debug)]
pub struct AggregatedSetup {
    pub block_setups: Vec<Arc<dyn ProximalSetup>>,
    pub aggregation_weights: Vec<f64>,
}

impl AggregatedSetup {
    pub fn new(block_setups: Vec<Arc<dyn ProximalSetup>>, aggregation_weights: Vec<f64>) -> Result<Self> {
        if block_setups.len() != aggregation_weights.len() {
            return input("setups and aggregation weights differ in length");
        }
        if let Some(w) = aggregation_weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return input(format!("aggregation weight must be positive, got {w}"));
        }
        Ok(Self { block_setups, aggregation_weights })
    }

    /// Euclidean setups on every block.
    pub fn euclidean(aggregation_weights: Vec<f64>) -> Result<Self> {
        let setups: Vec<Arc<dyn ProximalSetup>> =
            aggregation_weights.iter().map(|_| Arc::new(EuclideanSetup) as Arc<dyn ProximalSetup>).collect();
        Self::new(setups, aggregation_weights)
    }

    pub fn n_blocks(&self) -> usize {
        self.block_setups.len()
    }

    pub fn dgf(&self, u: &[Vec<f64>]) -> f64 {
        self.iter().zip(u).map(|((s, a), u)| a * s.dgf(u)).sum()
    }

    pub fn norm(&self, u: &[Vec<f64>]) -> f64 {
        self.iter().zip(u).map(|((s, a), u)| a * s.norm(u).powi(2)).sum::<f64>().sqrt()
    }

    pub fn dual_norm(&self, xi: &[Vec<f64>]) -> f64 {
        self.iter().zip(xi).map(|((s, a), x)| s.dual_norm(x).powi(2) / a).sum::<f64>().sqrt()
    }

    pub fn bregman(&self, u: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
        self.iter().zip(u.iter().zip(w)).map(|((s, a), (u, w))| a * s.bregman(u, w)).sum()
    }

    fn iter(&self) -> impl Iterator<Item = (&Arc<dyn ProximalSetup>, f64)> {
        self.block_setups.iter().zip(self.aggregation_weights.iter().copied())
    }
}

pub fn bregman_distance(setup: &dyn ProximalSetup, u: &[f64], w: &[f64]) -> Result<f64> {
    if u.len() != w.len() {
        return input(format!("bregman distance between sizes {} and {}", u.len(), w.len()));
    }
    if !linalg::all_finite(u) || !linalg::all_finite(w) {
        return input("bregman distance at a non-finite point");
    }
    Ok(setup.bregman(u, w))
}

/// Componentwise `sign(a)·max(|a| − β, 0)`.
pub fn soft_threshold(a: &[f64], beta: f64) -> Vec<f64> {
    a.iter()
        .map(|&x| {
            let m = x.abs() - beta;
            if m > 0.0 {
                m.copysign(x)
            } else {
                0.0
            }
        })
        .collect()
}

/// Minimizer of `½‖X − A‖_F² + β‖X‖_nuc` for a row-major `rows × cols` matrix.
pub fn singular_value_threshold(a: &[f64], rows: usize, cols: usize, beta: f64) -> Result<Vec<f64>> {
    Ok(svt_with_spectrum(a, rows, cols, beta)?.0)
}

/// Singular value thresholding that also returns the shrunk spectrum.
pub fn svt_with_spectrum(a: &[f64], rows: usize, cols: usize, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if beta < 0.0 {
        return input(format!("threshold must be nonnegative, got {beta}"));
    }
    let d = linalg::svd(a, rows, cols)?;
    let s: Vec<f64> = d.s.iter().map(|&x| (x - beta).max(0.0)).collect();
    Ok((linalg::recompose(&d.u, &s, &d.v_t), s))
}

/// Minimizer of `½‖x − a‖₂² + β‖x‖₁` over `‖x‖₂ ≤ radius`.
pub fn ball_l2_l1_prox(a: &[f64], beta: f64, radius: f64) -> Vec<f64> {
    let mut s = soft_threshold(a, beta);
    radial_clip(&mut s, radius);
    s
}

/// Projection of `|b|` onto `{v ≥ 0, Σv ≤ r}`.
pub fn capped_simplex_project(b: &[f64], r: f64) -> Vec<f64> {
    let mag: Vec<f64> = b.iter().map(|x| x.abs()).collect();
    if r <= 0.0 {
        return vec![0.0; b.len()];
    }
    if mag.iter().sum::<f64>() <= r {
        return mag;
    }
    let mut sorted = mag.clone();
    sorted.sort_unstable_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cum += x;
        let t = (cum - r) / (k + 1) as f64;
        if x > t {
            theta = t;
        } else {
            break;
        }
    }
    mag.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// The prox-mapping `P_x(ξ)` over all blocks of `layout`.
pub fn composite_prox(
    x: &CompositePoint,
    xi_u: &[Vec<f64>],
    zeta_v: &[f64],
    setup: &AggregatedSetup,
    layout: &Layout,
) -> Result<CompositePoint> {
    if setup.n_blocks() != layout.n_blocks() || xi_u.len() != layout.n_blocks() || zeta_v.len() != layout.n_scalars() {
        return input("prox arguments do not match the layout");
    }
    let mut u_blocks = Vec::with_capacity(layout.n_blocks());
    let mut v_scalars = vec![0.0; layout.n_scalars()];
    for (k, spec) in layout.blocks.iter().enumerate() {
        let si = layout.scalar_of(k);
        let zeta = si.map_or(0.0, |i| zeta_v[i]);
        let solved = setup.block_setups[k].prox_solve(&x.u_blocks[k], &xi_u[k], setup.aggregation_weights[k], zeta, spec);
        let (s, v) = match solved {
            Err(Error::UnboundedProx { zeta, .. }) => {
                return Err(Error::UnboundedProx { index: si.unwrap_or(0), zeta });
            }
            other => other?,
        };
        if let (Some(i), Some(v)) = (si, v) {
            v_scalars[i] = v;
        }
        u_blocks.push(s);
    }
    Ok(CompositePoint { u_blocks, v_scalars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn bregman_examples() {
        let e = EuclideanSetup;
        assert_abs_diff_eq!(bregman_distance(&e, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert_abs_diff_eq!(bregman_distance(&e, &[1.0, 1.0], &[2.0, 3.0]).unwrap(), 2.5);
        assert_eq!(bregman_distance(&e, &[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert!(bregman_distance(&e, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -1.0, 0.5], 1.0), vec![2.0, 0.0, 0.0]);
        assert_eq!(soft_threshold(&[2.0, 0.5], 0.5), vec![1.5, 0.0]);
        assert_eq!(soft_threshold(&[1.25, -7.0], 0.0), vec![1.25, -7.0]);
    }

    #[test]
    fn svt_diagonal() {
        let s = singular_value_threshold(&[3.0, 0.0, 0.0, 1.0], 2, 2, 2.0).unwrap();
        close(&s, &[1.0, 0.0, 0.0, 0.0], 1e-12);
        let a = [0.3, -1.2, 2.0, 0.7, 0.1, -0.4];
        close(&singular_value_threshold(&a, 2, 3, 0.0).unwrap(), &a, 1e-12);
    }

    #[test]
    fn ball_prox_examples() {
        close(&ball_l2_l1_prox(&[2.0, 0.5], 0.5, 1.0), &[1.0, 0.0], 1e-15);
        close(&ball_l2_l1_prox(&[0.3, -0.2], 0.0, 1.0), &[0.3, -0.2], 0.0);
        close(&ball_l2_l1_prox(&[0.0, 0.0], 0.7, 1.0), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn ball_prox_grid_oracle() {
        // brute force over a 1e-3 grid of the unit disk, refined locally
        let (a, beta) = ([2.0, 0.5], 0.5);
        let obj = |x: f64, y: f64| 0.5 * ((x - a[0]).powi(2) + (y - a[1]).powi(2)) + beta * (x.abs() + y.abs());
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let h = 1e-3;
        for i in -1000..=1000 {
            for j in -1000..=1000 {
                let (x, y) = (i as f64 * h, j as f64 * h);
                if x * x + y * y <= 1.0 && obj(x, y) < best.0 {
                    best = (obj(x, y), x, y);
                }
            }
        }
        let s = ball_l2_l1_prox(&a, beta, 1.0);
        assert!((s[0] - best.1).abs() < 2e-3 && (s[1] - best.2).abs() < 2e-3);
        assert!(obj(s[0], s[1]) <= best.0 + 1e-12);
    }

    #[test]
    fn capped_simplex_examples() {
        close(&capped_simplex_project(&[3.0, 1.0], 2.0), &[2.0, 0.0], 1e-15);
        close(&capped_simplex_project(&[-1.0, 0.5], 10.0), &[1.0, 0.5], 0.0);
        close(&capped_simplex_project(&[4.0, -2.0], 0.0), &[0.0, 0.0], 0.0);
    }

    #[test]
    fn capped_simplex_grid_oracle() {
        let b = [3.0, 1.0];
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let h = 1e-3;
        for i in 0..=2000 {
            for j in 0..=(2000 - i) {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let v = 0.5 * ((x - b[0]).powi(2) + (y - b[1]).powi(2));
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        let p = capped_simplex_project(&b, 2.0);
        assert!((p[0] - best.1).abs() <= 1e-3 && (p[1] - best.2).abs() <= 1e-3);
    }

    fn l1_layout(base: BaseSet, lam: f64, n: usize) -> Layout {
        Layout::new(vec![BlockSpec::new("y", BlockShape::vector(n), EpigraphBlock::new(base, Nonsmooth::L1 { weight: lam }))])
            .unwrap()
    }

    #[test]
    fn prox_plain_ball_is_shifted_projection() {
        let layout = Layout::new(vec![BlockSpec::new(
            "w",
            BlockShape::vector(2),
            EpigraphBlock::new(BaseSet::EuclideanBall { radius: 1.0 }, Nonsmooth::None),
        )])
        .unwrap();
        let setup = AggregatedSetup::euclidean(vec![2.0]).unwrap();
        let x = CompositePoint::new(vec![vec![0.5, 0.0]], vec![]);
        let p = composite_prox(&x, &[vec![-3.0, -4.0]], &[], &setup, &layout).unwrap();
        // u − ξ/2 = [2, 2] projected onto the unit ball
        let h = 1.0 / 2f64.sqrt();
        close(&p.u_blocks[0], &[h, h], 1e-15);
    }

    #[test]
    fn prox_l1_epigraph_active() {
        let layout = l1_layout(BaseSet::WholeSpace, 0.5, 3);
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let x = CompositePoint::new(vec![vec![1.0, -2.0, 0.1]], vec![1.55]);
        let xi = vec![vec![-1.0, 0.5, 0.0]];
        let p = composite_prox(&x, &xi, &[2.0], &setup, &layout).unwrap();
        let expect = soft_threshold(&[2.0, -2.5, 0.1], 1.0);
        close(&p.u_blocks[0], &expect, 1e-15);
        assert_abs_diff_eq!(p.v_scalars[0], 0.5 * norm1(&expect), epsilon = 1e-15);
    }

    #[test]
    fn prox_rejects_nonpositive_uncapped_cost() {
        let layout = l1_layout(BaseSet::WholeSpace, 1.0, 2);
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let x = CompositePoint::new(vec![vec![0.0, 0.0]], vec![0.0]);
        let r = composite_prox(&x, &[vec![0.0, 0.0]], &[-1.0], &setup, &layout);
        assert!(matches!(r, Err(Error::UnboundedProx { .. })));
    }

    #[test]
    fn prox_capped_negative_cost_projects_on_l1_ball() {
        let mut eb = EpigraphBlock::new(BaseSet::WholeSpace, Nonsmooth::L1 { weight: 2.0 });
        eb.cap = Some(4.0);
        let layout = Layout::new(vec![BlockSpec::new("y", BlockShape::vector(2), eb)]).unwrap();
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let x = CompositePoint::new(vec![vec![3.0, -1.0]], vec![0.0]);
        let p = composite_prox(&x, &[vec![0.0, 0.0]], &[-1.0], &setup, &layout).unwrap();
        close(&p.u_blocks[0], &[2.0, 0.0], 1e-15);
        assert_eq!(p.v_scalars[0], 4.0);
    }

    fn random_two_block(rng: &mut ChaCha20Rng) -> (Layout, AggregatedSetup) {
        let layout = Layout::new(vec![
            BlockSpec::new(
                "y",
                BlockShape::matrix(3, 2),
                EpigraphBlock::new(BaseSet::FrobeniusBall { radius: 2.0 }, Nonsmooth::Nuclear { weight: 0.4 }),
            ),
            BlockSpec::new(
                "w",
                BlockShape::vector(4),
                EpigraphBlock::new(BaseSet::EuclideanBall { radius: 1.0 }, Nonsmooth::L1 { weight: 0.3 }),
            ),
        ])
        .unwrap();
        let setup = AggregatedSetup::euclidean(vec![rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)]).unwrap();
        (layout, setup)
    }

    fn random_feasible(layout: &Layout, rng: &mut ChaCha20Rng) -> CompositePoint {
        let mut x = layout.zeros();
        for (k, b) in layout.blocks.iter().enumerate() {
            for v in x.u_blocks[k].iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            if let Some(r) = b.epigraph.base_set.radius() {
                let f = rng.random_range(0.0..r) / norm2(&x.u_blocks[k]);
                x.u_blocks[k].iter_mut().for_each(|v| *v *= f.min(1.0));
            }
        }
        layout.lift(&mut x).unwrap();
        for v in x.v_scalars.iter_mut() {
            *v += rng.random_range(0.0..0.5);
        }
        x
    }

    #[test]
    fn prox_lemma_inequality_on_random_feasible_points() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (layout, setup) = random_two_block(&mut rng);
            let x = random_feasible(&layout, &mut rng);
            let xi: Vec<Vec<f64>> = x.u_blocks.iter().map(|b| b.iter().map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let zeta = vec![rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
            let p = composite_prox(&x, &xi, &zeta, &setup, &layout).unwrap();
            assert!(layout.infeasibility(&p).unwrap() < 1e-12);
            for k in 0..2 {
                assert_abs_diff_eq!(p.v_scalars[k], layout.blocks[k].psi(&p.u_blocks[k]).unwrap(), epsilon = 1e-10);
            }
            for _ in 0..100 {
                let s = random_feasible(&layout, &mut rng);
                let lhs: f64 = xi.iter().zip(p.u_blocks.iter().zip(&s.u_blocks)).map(|(g, (a, b))| linalg::dot(g, &linalg::sub(a, b))).sum::<f64>()
                    + linalg::dot(&zeta, &linalg::sub(&p.v_scalars, &s.v_scalars));
                let rhs = setup.bregman(&x.u_blocks, &s.u_blocks)
                    - setup.bregman(&p.u_blocks, &s.u_blocks)
                    - setup.bregman(&x.u_blocks, &p.u_blocks);
                assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn aggregated_dual_norm_is_conjugate() {
        // sup over ‖u‖ ≤ 1 of ⟨ξ,u⟩ is attained at u_k = ξ_k / (a_k ‖ξ‖_*)
        let setup = AggregatedSetup::euclidean(vec![0.25, 4.0]).unwrap();
        let xi = vec![vec![1.0, -2.0], vec![0.5]];
        let dn = setup.dual_norm(&xi);
        let u: Vec<Vec<f64>> = xi.iter().zip(&setup.aggregation_weights).map(|(x, a)| linalg::scaled(x, 1.0 / (a * dn))).collect();
        assert_abs_diff_eq!(setup.norm(&u), 1.0, epsilon = 1e-12);
        let pairing: f64 = xi.iter().zip(&u).map(|(a, b)| linalg::dot(a, b)).sum();
        assert_abs_diff_eq!(pairing, dn, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn bregman_dominates_half_square(u in prop::collection::vec(-5.0..5.0f64, 4), w in prop::collection::vec(-5.0..5.0f64, 4)) {
            let e = EuclideanSetup;
            let d = linalg::sub(&w, &u);
            prop_assert!(e.bregman(&u, &w) >= 0.5 * linalg::dot(&d, &d) - 1e-12);
        }

        #[test]
        fn three_term_identity(u in prop::collection::vec(-3.0..3.0f64, 3), up in prop::collection::vec(-3.0..3.0f64, 3), w in prop::collection::vec(-3.0..3.0f64, 3)) {
            // ⟨∇V_u(u′), w − u′⟩ = V_u(w) − V_{u′}(w) − V_u(u′)
            let e = EuclideanSetup;
            let grad = linalg::sub(&e.dgf_gradient(&up), &e.dgf_gradient(&u));
            let lhs = linalg::dot(&grad, &linalg::sub(&w, &up));
            let rhs = e.bregman(&u, &w) - e.bregman(&up, &w) - e.bregman(&u, &up);
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn soft_threshold_is_l1_prox(a in prop::collection::vec(-4.0..4.0f64, 5), beta in 0.0..2.0f64, d in prop::collection::vec(-0.1..0.1f64, 5)) {
            let s = soft_threshold(&a, beta);
            let obj = |x: &[f64]| 0.5 * x.iter().zip(&a).map(|(x, a)| (x - a).powi(2)).sum::<f64>() + beta * norm1(x);
            let pert: Vec<f64> = s.iter().zip(&d).map(|(x, d)| x + d).collect();
            prop_assert!(obj(&s) <= obj(&pert) + 1e-12);
        }

        #[test]
        fn capped_simplex_is_feasible(b in prop::collection::vec(-4.0..4.0f64, 1..8), r in 0.0..6.0f64) {
            let p = capped_simplex_project(&b, r);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            prop_assert!(p.iter().sum::<f64>() <= r + 1e-12);
        }
    }
}
