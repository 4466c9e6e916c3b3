//! The solve loop for multi-term problems: CoMP steps, bound bookkeeping,
//! penalty restarts and the optional rescaling of the distance guess `D`.

use std::sync::Arc;
use std::time::Instant;

use super::{Assembled, BlockIndex, MultiTermProblem, PenaltyController, PenaltyDecision};
use crate::certificates::BoundTracker;
use crate::comp_mp::{Checkpoints, RunState, StepPolicy};
use crate::error::{input, Result};
use crate::harness::trace::TraceRow;
use crate::linalg::norm2;
use crate::prox_core::{AggregatedSetup, CompositePoint, Layout};

/// Aggregation weights: `D^(−exponent)` on y-blocks, constants on z and w.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationConfig {
    pub d: f64,
    pub exponent: f64,
    pub z_weight: f64,
    pub w_weight: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self { d: 1.0, exponent: 2.0, z_weight: 1.0, w_weight: 1.0 }
    }
}

impl AggregationConfig {
    pub fn y_weight(&self) -> f64 {
        self.d.powf(-self.exponent)
    }

    pub(crate) fn setup(&self, index: &BlockIndex, n_blocks: usize) -> Result<AggregatedSetup> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return input(format!("distance guess D must be positive, got {}", self.d));
        }
        let weights = (0..n_blocks)
            .map(|k| {
                if index.primal().contains(&k) {
                    self.y_weight()
                } else if index.w.contains(&k) {
                    self.w_weight
                } else {
                    self.z_weight
                }
            })
            .collect();
        AggregatedSetup::euclidean(weights)
    }
}

#[derive(Clone, Debug)]
pub struct MultiTermConfig {
    pub max_iters: usize,
    pub policy: StepPolicy,
    pub checkpoints: Checkpoints,
    pub aggregation: AggregationConfig,
    pub rho_initial: f64,
    pub rho_growth: f64,
    pub kappa: f64,
    pub adapt_rho: bool,
    pub selective_rho: bool,
    /// Start every penalty at no less than its exact-penalty floor.
    pub use_rho_floor: bool,
    /// Double `D` and restart when the search point's y-norm exceeds this
    /// fraction of `D`.
    pub d_rescale: Option<f64>,
    /// Compute the lower bound every this many steps (and at checkpoints).
    pub bound_stride: usize,
    /// Stop once `(upper − lower)/|lower|` falls to this level.
    pub target_rel_gap: Option<f64>,
    pub record_protocol: bool,
}

impl Default for MultiTermConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            policy: StepPolicy::default(),
            checkpoints: Checkpoints::PowersOfTwo,
            aggregation: AggregationConfig::default(),
            rho_initial: 1e-3,
            rho_growth: 3.0,
            kappa: 1e-4,
            adapt_rho: true,
            selective_rho: false,
            use_rho_floor: false,
            d_rescale: None,
            bound_stride: 1,
            target_rel_gap: None,
            record_protocol: false,
        }
    }
}

/// What a lower bounder sees after each step.
pub struct BoundContext<'a> {
    pub problem: &'a MultiTermProblem,
    pub layout: &'a Layout,
    pub index: &'a BlockIndex,
    pub state: &'a RunState,
    pub averaged: &'a CompositePoint,
    /// `Φ̄` at the averaged point for the current phase's penalties.
    pub phi_bar_avg: f64,
    pub upsilon_best: f64,
}

/// A source of valid lower bounds on the optimal value.
pub trait LowerBounder {
    fn lower_bound(&mut self, ctx: &BoundContext<'_>) -> Result<Option<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    TargetGap,
}

pub struct MultiTermOutcome {
    /// Base point with the best objective seen.
    pub best_base: Vec<Vec<f64>>,
    pub upper: f64,
    pub lower: f64,
    pub rows: Vec<TraceRow>,
    pub rho: Vec<f64>,
    pub restarts: usize,
    /// Steps after which the penalties were raised.
    pub rho_restart_steps: Vec<usize>,
    pub iterations: usize,
    pub stop: StopReason,
    pub d: f64,
    pub state: RunState,
    pub assembled: Assembled,
}

pub fn solve_multiterm(
    problem: &Arc<MultiTermProblem>,
    config: &MultiTermConfig,
    mut bounder: Option<&mut dyn LowerBounder>,
    on_row: &mut dyn FnMut(&TraceRow),
) -> Result<MultiTermOutcome> {
    config.policy.validate()?;
    let k = problem.n_terms();
    let mut ctrl = PenaltyController::new(k, config.rho_initial, config.rho_growth, config.kappa)?;
    ctrl.selective = config.selective_rho;
    if config.use_rho_floor {
        ctrl.apply_floor(&super::penalty_floor(problem));
    }
    let mut agg = config.aggregation.clone();
    let mut asm = problem.assemble(&ctrl.rho, &agg)?;
    let mut state = RunState::new(asm.x0.clone(), &asm.layout, config.record_protocol, config.policy.initial_guess)?;
    let clock = Instant::now();
    let mut bounds = BoundTracker::default();
    let mut best_base = asm.x0.u_blocks[asm.index.base.clone()].to_vec();
    bounds.offer_upper(problem.objective(&best_base)?);
    let mut rows = Vec::new();
    let mut restarts = 0;
    let mut rho_restart_steps = Vec::new();
    let mut stop = StopReason::Budget;

    while state.iteration < config.max_iters {
        let step = state.adaptive_step(&asm.operator, &asm.setup, &asm.layout, &config.policy)?;
        let avg = state.averaged_point()?;
        let rho = asm.operator.rho.clone();
        let (layout, index) = (&asm.layout, &asm.index);

        let mut raise = false;
        let mut phi_bar_avg = f64::NAN;
        for (j, cand) in [&step.y, &avg].into_iter().enumerate() {
            let base = &cand.u_blocks[index.base.clone()];
            let upsilon = problem.objective(base)?;
            if bounds.offer_upper(upsilon) {
                best_base = base.to_vec();
            }
            let phi = problem.phi_bar(cand, &rho, layout, index);
            if j == 1 {
                phi_bar_avg = phi;
            }
            if config.adapt_rho && k > 0 && !raise {
                let decision = if ctrl.selective {
                    let excess = problem.correction_excess(cand, &rho, layout, index)?;
                    ctrl.adapt_selective(upsilon, phi, &excess)
                } else {
                    ctrl.adapt_penalty(upsilon, phi)
                };
                raise = decision == PenaltyDecision::Restart;
            }
        }

        let t = state.iteration;
        let at_checkpoint = config.checkpoints.contains(t);
        if let Some(b) = bounder.as_deref_mut() {
            if at_checkpoint || t % config.bound_stride.max(1) == 0 {
                let ctx = BoundContext {
                    problem,
                    layout,
                    index,
                    state: &state,
                    averaged: &avg,
                    phi_bar_avg,
                    upsilon_best: bounds.upper,
                };
                if let Some(l) = b.lower_bound(&ctx)? {
                    bounds.offer_lower(l);
                }
            }
        }

        let mut rescale = false;
        if let Some(frac) = config.d_rescale {
            let norm = step.y.u_blocks[index.primal()].iter().map(|b| norm2(b).powi(2)).sum::<f64>().sqrt();
            if norm > frac * agg.d {
                agg.d *= 2.0;
                rescale = true;
            }
        }
        if raise {
            rho_restart_steps.push(t);
        }
        if raise || rescale {
            restarts += 1;
            asm = problem.assemble(&ctrl.rho, &agg)?;
            state.restart();
        }

        if at_checkpoint {
            let row = TraceRow {
                t,
                seconds: clock.elapsed().as_secs_f64(),
                upper: bounds.upper,
                lower: bounds.lower,
                gap: bounds.gap(),
                rho_or_alpha: ctrl.rho.first().copied().unwrap_or(0.0),
                restarts,
            };
            on_row(&row);
            rows.push(row);
        }
        if let Some(target) = config.target_rel_gap {
            if bounds.relative_gap() <= target {
                stop = StopReason::TargetGap;
                break;
            }
        }
    }

    Ok(MultiTermOutcome {
        best_base,
        upper: bounds.upper,
        lower: bounds.lower,
        rows,
        rho: ctrl.rho,
        restarts,
        rho_restart_steps,
        iterations: state.iteration,
        stop,
        d: agg.d,
        state,
        assembled: asm,
    })
}
