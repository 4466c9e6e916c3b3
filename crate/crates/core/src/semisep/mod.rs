//! Filter-driven multi-stage solution of semi-separable constrained problems
//!
//! ```text
//! Opt = min_{y ∈ Y} { f(y) = Σ_k [ψ_k(y^k) + Ψ_k(y^k)] : g(y) = ‖Σ_k A_k y^k − b‖₂ ≤ 0 }
//! ```
//!
//! over a bounded `Y`. Stage `s` runs CoMP on the weighted problem
//! `min_y α_s f(y) + (1 − α_s) g(y)`, every produced point feeds the
//! [`Filter`], stage certificates raise the lower bound `Opt̲`, and `α` moves
//! to the midpoint of `Δ = {h ≥ 0}` whenever it leaves the segment's middle
//! third.

mod filter;

pub use filter::{delta_segment, gap_and_weights, h_eval, stage_control, Filter, FilterEntry, GapSolution, StageDecision, StageState};

use std::ops::Range;
use std::sync::Arc;

use crate::certificates::{BlockDomain, NormKind, ResolutionDomain};
use crate::comp_mp::{RunState, SaddleOperator, StepPolicy};
use crate::error::{input, Error, Result};
use crate::linalg::{self, norm2, LinearMap};
use crate::multiterm::SmoothTerm;
use crate::prox_core::{AggregatedSetup, BaseSet, BlockSpec, CompositePoint, EpigraphBlock, Layout, Nonsmooth};

pub const ALPHA_MIN: f64 = 1e-6;

#[derive(Clone)]
pub struct ConstrainedProblem {
    /// The blocks `y^k` of `Y`, each with its `Ψ_k`; base sets must be balls.
    pub blocks: Vec<BlockSpec>,
    /// `Σ_k φ_k` as one smooth coupling over all blocks.
    pub smooth: Arc<dyn SmoothTerm>,
    pub maps: Vec<Arc<dyn LinearMap>>,
    pub b: Vec<f64>,
    /// A priori bound on `max(|f|, |g|)` over `Y`.
    pub l_bound: f64,
}

/// Positions of the block groups in the stage layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageIndex {
    pub y: Range<usize>,
    pub z: Range<usize>,
    pub w: usize,
}

impl ConstrainedProblem {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.len() != self.maps.len() {
            return Err(Error::Assembly("need one map per block and at least one block".into()));
        }
        for (k, (blk, map)) in self.blocks.iter().zip(&self.maps).enumerate() {
            if blk.epigraph.base_set.radius().is_none() {
                return Err(Error::Assembly(format!("block {k} is unbounded")));
            }
            if map.input_dim() != blk.shape.len() || map.output_dim() != self.b.len() {
                return Err(Error::Assembly(format!("map {k} has wrong dimensions")));
            }
        }
        if !(self.l_bound > 0.0 && self.l_bound.is_finite()) {
            return input(format!("L bound must be positive, got {}", self.l_bound));
        }
        Ok(())
    }

    pub fn residual(&self, y: &[Vec<f64>]) -> Vec<f64> {
        let mut r = linalg::scaled(&self.b, -1.0);
        for (m, yk) in self.maps.iter().zip(y) {
            linalg::axpy(&mut r, 1.0, &m.apply(yk));
        }
        r
    }

    pub fn f(&self, y: &[Vec<f64>]) -> Result<f64> {
        let mut v = self.smooth.psi(y);
        for (blk, yk) in self.blocks.iter().zip(y) {
            v += blk.psi(yk)?;
        }
        Ok(v)
    }

    pub fn g(&self, y: &[Vec<f64>]) -> f64 {
        norm2(&self.residual(y))
    }

    pub fn stage_layout(&self) -> Result<(Layout, StageIndex)> {
        self.validate()?;
        let mut blocks = self.blocks.clone();
        let y = 0..blocks.len();
        blocks.extend(self.smooth.z_blocks());
        let z = y.end..blocks.len();
        blocks.push(BlockSpec::new(
            "w",
            crate::prox_core::BlockShape::vector(self.b.len()),
            EpigraphBlock::new(BaseSet::EuclideanBall { radius: 1.0 }, Nonsmooth::None),
        ));
        let w = z.end;
        Ok((Layout::new(blocks)?, StageIndex { y, z, w }))
    }

    /// The weighted stage problem with `α` clamped into `[ALPHA_MIN, 1 − ALPHA_MIN]`.
    pub fn stage_problem(self: &Arc<Self>, alpha: f64) -> Result<StageOperator> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return input(format!("stage weight must lie in (0,1), got {alpha}"));
        }
        let a = alpha.clamp(ALPHA_MIN, 1.0 - ALPHA_MIN);
        self.weighted_operator(a, 1.0 - a)
    }

    /// `a·f + c·g` as a saddle operator; `(α, 1 − α)` for stages and `(1, R)`
    /// for the plain penalized problem.
    pub fn weighted_operator(self: &Arc<Self>, obj_weight: f64, con_weight: f64) -> Result<StageOperator> {
        let (layout, index) = self.stage_layout()?;
        let fv = vec![obj_weight; layout.n_scalars()];
        Ok(StageOperator { problem: Arc::clone(self), obj_weight, con_weight, index, layout, fv })
    }

    /// Product domain for stage certificates: epigraphs over balls for `y`,
    /// balls for `z` and `w`.
    pub fn stage_domain(&self, layout: &Layout) -> Result<ResolutionDomain> {
        let blocks = layout
            .blocks
            .iter()
            .map(|b| {
                let radius = b.epigraph.base_set.radius().ok_or_else(|| Error::Capability(format!("block {} is unbounded", b.name)))?;
                Ok(match b.epigraph.nonsmooth {
                    Nonsmooth::L1 { weight } => BlockDomain::EpigraphBall { kind: NormKind::L1, weight, radius, shape: b.shape },
                    Nonsmooth::Nuclear { weight } => BlockDomain::EpigraphBall { kind: NormKind::Nuclear, weight, radius, shape: b.shape },
                    Nonsmooth::LinearZero => BlockDomain::EpigraphBall { kind: NormKind::L1, weight: 0.0, radius, shape: b.shape },
                    Nonsmooth::None => BlockDomain::EuclidBall { center: vec![0.0; b.shape.len()], radius },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResolutionDomain { blocks })
    }

    pub fn start_point(&self, layout: &Layout) -> Result<CompositePoint> {
        let mut x = layout.zeros();
        layout.lift(&mut x)?;
        Ok(x)
    }
}

/// Field of `min_{y,τ} max_{z,w} a·[φ(y,z) + Στ] + c·⟨ΣA_k y^k − b, w⟩`.
#[derive(Clone)]
pub struct StageOperator {
    problem: Arc<ConstrainedProblem>,
    pub obj_weight: f64,
    pub con_weight: f64,
    pub index: StageIndex,
    pub layout: Layout,
    fv: Vec<f64>,
}

impl StageOperator {
    /// `Φ̄` at a point: `a·[ψ(y) + Στ] + c·g(y)`, with the point's own `τ`.
    pub fn phi_bar(&self, x: &CompositePoint) -> f64 {
        let y = &x.u_blocks[self.index.y.clone()];
        let tau: f64 = self.index.y.clone().filter_map(|k| self.layout.scalar_of(k)).map(|i| x.v_scalars[i]).sum();
        self.obj_weight * (self.problem.smooth.psi(y) + tau) + self.con_weight * self.problem.g(y)
    }
}

impl SaddleOperator for StageOperator {
    fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let p = &self.problem;
        let ix = &self.index;
        let y = &u[ix.y.clone()];
        let z = &u[ix.z.clone()];
        let w = &u[ix.w];
        let mut out: Vec<Vec<f64>> = p.smooth.grad_y(y, z).into_iter().map(|g| linalg::scaled(&g, self.obj_weight)).collect();
        for (k, m) in p.maps.iter().enumerate() {
            linalg::axpy(&mut out[k], self.con_weight, &m.apply_adjoint(w));
        }
        for g in p.smooth.grad_z(y, z) {
            out.push(linalg::scaled(&g, -self.obj_weight));
        }
        out.push(linalg::scaled(&p.residual(y), -self.con_weight));
        if out.len() != u.len() {
            return Err(Error::Assembly(format!("field has {} blocks, point has {}", out.len(), u.len())));
        }
        Ok(out)
    }

    fn fv(&self) -> &[f64] {
        &self.fv
    }
}

#[derive(Clone, Debug)]
pub struct SequentialConfig {
    /// Stop once `Gap ≤ eps`.
    pub eps: f64,
    pub max_steps: usize,
    pub per_stage_budget: Option<usize>,
    pub policy: StepPolicy,
}

impl Default for SequentialConfig {
    fn default() -> Self {
        Self { eps: 1e-5, max_steps: 100_000, per_stage_budget: None, policy: StepPolicy::default() }
    }
}

/// One row of the stage log, written when a stage ends.
#[derive(Clone, Debug, PartialEq)]
pub struct StageLogRow {
    pub stage: usize,
    pub alpha: f64,
    pub steps: usize,
    pub gap: f64,
    pub opt_lb: f64,
    pub segment: (f64, f64),
}

pub const STAGE_LOG_HEADER: &str = "stage,alpha,steps,gap,opt_lb,delta_lo,delta_hi";

impl StageLogRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:e},{},{:e},{:e},{:e},{:e}",
            self.stage, self.alpha, self.steps, self.gap, self.opt_lb, self.segment.0, self.segment.1
        )
    }
}

/// What the observer sees after every step.
pub struct SequentialProgress<'a> {
    pub step: usize,
    pub stage: &'a StageState,
    pub filter: &'a Filter,
    pub gap: &'a GapSolution,
    /// `Δ` at the end of the stage that just finished, if one did.
    pub stage_ended: Option<(f64, f64)>,
}

pub struct SequentialOutcome {
    /// Combined point of the final filter.
    pub solution: Vec<Vec<f64>>,
    pub gap: f64,
    pub opt_lb: f64,
    pub gap_history: Vec<f64>,
    pub stages: Vec<StageLogRow>,
    pub steps: usize,
    pub budget_exhausted: bool,
    pub stopped_by_observer: bool,
    pub filter: Filter,
}

pub fn run_sequential(
    problem: &Arc<ConstrainedProblem>,
    config: &SequentialConfig,
    observer: &mut dyn FnMut(&SequentialProgress<'_>) -> bool,
) -> Result<SequentialOutcome> {
    if !(config.eps > 0.0) {
        return input(format!("target gap must be positive, got {}", config.eps));
    }
    config.policy.validate()?;
    let mut stage = StageState::default();
    let mut op = problem.stage_problem(stage.alpha)?;
    let setup = AggregatedSetup::euclidean(vec![1.0; op.layout.n_blocks()])?;
    let domain = problem.stage_domain(&op.layout)?;
    let mut state = RunState::new(problem.start_point(&op.layout)?, &op.layout, false, config.policy.initial_guess)?;
    let mut filter = Filter::new(-problem.l_bound);
    let mut gap_history = Vec::new();
    let mut stages = Vec::new();
    let mut stage_steps = 0;
    let mut budget_exhausted = false;
    let mut stopped_by_observer = false;
    let mut last_gap = None;

    while state.iteration < config.max_steps {
        let step = state.adaptive_step(&op, &setup, &op.layout, &config.policy)?;
        stage_steps += 1;
        let avg = state.averaged_point()?;
        for cand in [&step.y, &avg] {
            let y = cand.u_blocks[op.index.y.clone()].to_vec();
            let (p, q) = (problem.f(&y)?, problem.g(&y));
            filter.insert(p, q, y);
        }
        let lower = op.phi_bar(&avg) - state.sums.resolution(&domain, &op.layout)?;
        if lower.is_finite() && op.obj_weight >= ALPHA_MIN {
            filter.raise_lower_bound(lower / op.obj_weight);
        }
        let gap = gap_and_weights(&filter)?;
        gap_history.push(gap.gap);
        let done = gap.gap <= config.eps;

        let mut stage_ended = None;
        let segment = delta_segment(&filter)?;
        if !done {
            if let Some(seg) = segment {
                if let StageDecision::NewStage(next) = stage_control(&stage, seg) {
                    stages.push(StageLogRow { stage: stage.stage_index, alpha: stage.alpha, steps: stage_steps, gap: gap.gap, opt_lb: filter.opt_lb, segment: seg });
                    stage_ended = Some(seg);
                    stage = StageState { alpha: next, segment: seg, stage_index: stage.stage_index + 1 };
                    op = problem.stage_problem(next.clamp(ALPHA_MIN, 1.0 - ALPHA_MIN))?;
                    state.restart();
                    stage_steps = 0;
                }
            }
        }
        let stop = observer(&SequentialProgress { step: state.iteration, stage: &stage, filter: &filter, gap: &gap, stage_ended });
        last_gap = Some(gap);
        if done || stop {
            stopped_by_observer = stop && !done;
            break;
        }
        if config.per_stage_budget.is_some_and(|b| stage_steps >= b) {
            budget_exhausted = true;
            break;
        }
    }
    if state.iteration >= config.max_steps && !last_gap.as_ref().is_some_and(|g| g.gap <= config.eps) && !stopped_by_observer {
        budget_exhausted = true;
    }
    let gap = match last_gap {
        Some(g) => g,
        None => return Err(Error::EmptyFilter),
    };
    let seg = delta_segment(&filter)?.unwrap_or((stage.alpha, stage.alpha));
    stages.push(StageLogRow { stage: stage.stage_index, alpha: stage.alpha, steps: stage_steps, gap: gap.gap, opt_lb: filter.opt_lb, segment: seg });
    Ok(SequentialOutcome {
        solution: gap.combined,
        gap: gap.gap,
        opt_lb: filter.opt_lb,
        gap_history,
        stages,
        steps: state.iteration,
        budget_exhausted,
        stopped_by_observer,
        filter,
    })
}

/// Which point of a step the observer of [`run_penalized`] is shown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    Search,
    /// The certificate-weighted average, CoMP's approximate solution.
    Averaged,
}

/// Plain CoMP on `min_y f(y) + R·g(y)`; the observer sees every search point
/// and averaged point and returns `true` to stop.
pub fn run_penalized(
    problem: &Arc<ConstrainedProblem>,
    penalty: f64,
    max_steps: usize,
    policy: &StepPolicy,
    observer: &mut dyn FnMut(usize, PointKind, &[Vec<f64>]) -> bool,
) -> Result<(usize, bool)> {
    if !(penalty > 0.0) {
        return input(format!("penalty must be positive, got {penalty}"));
    }
    policy.validate()?;
    let op = problem.weighted_operator(1.0, penalty)?;
    let setup = AggregatedSetup::euclidean(vec![1.0; op.layout.n_blocks()])?;
    let mut state = RunState::new(problem.start_point(&op.layout)?, &op.layout, false, policy.initial_guess)?;
    while state.iteration < max_steps {
        let step = state.adaptive_step(&op, &setup, &op.layout, policy)?;
        let avg = state.averaged_point()?;
        for (kind, cand) in [(PointKind::Search, &step.y), (PointKind::Averaged, &avg)] {
            if observer(state.iteration, kind, &cand.u_blocks[op.index.y.clone()]) {
                return Ok((state.iteration, true));
            }
        }
    }
    Ok((state.iteration, false))
}
