//! The Composite Mirror Prox stepper.
//!
//! One step from `x_τ` computes
//!
//! ```text
//! y_τ     = P_{x_τ}(γ [F_u(u_τ); F_v])
//! x_{τ+1} = P_{x_τ}(γ [F_u(u′_τ); F_v])
//! δ_τ     = γ⟨F_u(u′_τ) − F_u(u_τ), u′_τ − u_{τ+1}⟩ − V_{u′_τ}(u_{τ+1}) − V_{u_τ}(u′_τ)
//! ```
//!
//! and accepts it when `δ_τ ≤ γ²M²`. Accepted search points `y_τ` and their
//! field values form the execution protocol; the certificate weights are
//! proportional to the stepsizes.

use serde::{Deserialize, Serialize};

use crate::certificates::{
    eps_sad_exact, AccuracyCertificate, ExecutionProtocol, ProtocolAccumulator, ResolutionDomain, SaddleEvaluator,
};
use crate::error::{input, Error, Result};
use crate::linalg::{self, DenseMatrix, LinearMap};
use crate::prox_core::{
    composite_prox, AggregatedSetup, BaseSet, BlockShape, BlockSpec, CompositePoint, EpigraphBlock, Layout, Nonsmooth,
};

/// A monotone field `F(u, v) = [F_u(u); F_v]` with constant `F_v > 0`.
pub trait SaddleOperator: Send + Sync {
    fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>>;
    fn fv(&self) -> &[f64];
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
    /// Size of the non-Lipschitz part of the field; zero for smooth fields.
    fn m_hint(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub initial_guess: f64,
    pub grow_factor: f64,
    pub shrink_factor: f64,
    pub max_retries: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { initial_guess: 1.0, grow_factor: 1.2, shrink_factor: 0.8, max_retries: 50 }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_guess > 0.0 && self.initial_guess.is_finite()) {
            return input(format!("initial stepsize must be positive, got {}", self.initial_guess));
        }
        if !(self.grow_factor > 1.0) {
            return input(format!("grow factor must exceed 1, got {}", self.grow_factor));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return input(format!("shrink factor must lie in (0,1), got {}", self.shrink_factor));
        }
        Ok(())
    }
}

/// Result of one trial step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub y: CompositePoint,
    pub fu_y: Vec<Vec<f64>>,
    pub x_next: CompositePoint,
    pub delta: f64,
}

pub fn comp_mp_step(
    x: &CompositePoint,
    fu_x: &[Vec<f64>],
    op: &dyn SaddleOperator,
    setup: &AggregatedSetup,
    layout: &Layout,
    gamma: f64,
) -> Result<StepOutcome> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return input(format!("stepsize must be positive, got {gamma}"));
    }
    let zeta: Vec<f64> = op.fv().iter().map(|f| gamma * f).collect();
    let scale = |f: &[Vec<f64>]| -> Vec<Vec<f64>> { f.iter().map(|b| linalg::scaled(b, gamma)).collect() };
    let y = composite_prox(x, &scale(fu_x), &zeta, setup, layout)?;
    let fu_y = op.eval_fu(&y.u_blocks)?;
    let x_next = composite_prox(x, &scale(&fu_y), &zeta, setup, layout)?;
    let mut cross = 0.0;
    for k in 0..layout.n_blocks() {
        for i in 0..fu_y[k].len() {
            cross += (fu_y[k][i] - fu_x[k][i]) * (y.u_blocks[k][i] - x_next.u_blocks[k][i]);
        }
    }
    let delta = gamma * cross - setup.bregman(&y.u_blocks, &x_next.u_blocks) - setup.bregman(&x.u_blocks, &y.u_blocks);
    if !delta.is_finite() || !y.is_finite() || !x_next.is_finite() {
        return Err(Error::Numerical(format!("non-finite step at gamma = {gamma:e}")));
    }
    Ok(StepOutcome { y, fu_y, x_next, delta })
}

/// A recorded step.
#[derive(Clone, Debug)]
pub struct AcceptedStep {
    pub y: CompositePoint,
    /// `F(y)`, including the constant `F_v` part.
    pub field: CompositePoint,
    pub gamma: f64,
    pub delta: f64,
    pub retries: usize,
}

/// State of one solve. Owned by a single run loop.
#[derive(Clone, Debug)]
pub struct RunState {
    pub x_current: CompositePoint,
    /// Starting point of the current phase.
    pub x_phase_start: CompositePoint,
    pub protocol: Option<ExecutionProtocol>,
    pub sums: ProtocolAccumulator,
    pub gamma_history: Vec<f64>,
    pub delta_history: Vec<f64>,
    /// Steps taken over all phases.
    pub iteration: usize,
    /// Index into the histories where the current phase begins.
    pub phase_start: usize,
    pub next_gamma: f64,
    fu_cache: Option<Vec<Vec<f64>>>,
}

impl RunState {
    pub fn new(x1: CompositePoint, layout: &Layout, record_protocol: bool, initial_gamma: f64) -> Result<Self> {
        layout.check(&x1)?;
        Ok(Self {
            x_phase_start: x1.clone(),
            x_current: x1,
            protocol: record_protocol.then(ExecutionProtocol::new),
            sums: ProtocolAccumulator::new(layout),
            gamma_history: Vec::new(),
            delta_history: Vec::new(),
            iteration: 0,
            phase_start: 0,
            next_gamma: initial_gamma,
            fu_cache: None,
        })
    }

    fn fu_current(&mut self, op: &dyn SaddleOperator) -> Result<Vec<Vec<f64>>> {
        match self.fu_cache.take() {
            Some(f) => Ok(f),
            None => op.eval_fu(&self.x_current.u_blocks),
        }
    }

    fn record(&mut self, op: &dyn SaddleOperator, out: StepOutcome, gamma: f64, retries: usize) -> AcceptedStep {
        let field = CompositePoint::new(out.fu_y, op.fv().to_vec());
        self.sums.push(&out.y, &field, gamma);
        if let Some(p) = self.protocol.as_mut() {
            p.push(out.y.clone(), field.clone());
        }
        self.gamma_history.push(gamma);
        self.delta_history.push(out.delta);
        self.iteration += 1;
        self.x_current = out.x_next;
        AcceptedStep { y: out.y, field, gamma, delta: out.delta, retries }
    }

    /// Shrink the stepsize until `δ ≤ γ²M²`, then record the step.
    pub fn adaptive_step(
        &mut self,
        op: &dyn SaddleOperator,
        setup: &AggregatedSetup,
        layout: &Layout,
        policy: &StepPolicy,
    ) -> Result<AcceptedStep> {
        let fu_x = self.fu_current(op)?;
        let m2 = op.m_hint().powi(2);
        let mut gamma = self.next_gamma;
        let mut last_delta = f64::NAN;
        for retry in 0..=policy.max_retries {
            let out = comp_mp_step(&self.x_current, &fu_x, op, setup, layout, gamma)?;
            if out.delta <= gamma * gamma * m2 {
                self.next_gamma = gamma * policy.grow_factor;
                return Ok(self.record(op, out, gamma, retry));
            }
            last_delta = out.delta;
            gamma *= policy.shrink_factor;
        }
        self.fu_cache = Some(fu_x);
        Err(Error::StepsizeCollapse { retries: policy.max_retries, gamma: gamma / policy.shrink_factor, delta: last_delta })
    }

    /// A step with a prescribed stepsize, rejected if `δ > γ²M²` beyond rounding.
    pub fn fixed_step(&mut self, op: &dyn SaddleOperator, setup: &AggregatedSetup, layout: &Layout, gamma: f64) -> Result<AcceptedStep> {
        let fu_x = self.fu_current(op)?;
        let out = comp_mp_step(&self.x_current, &fu_x, op, setup, layout, gamma)?;
        let bound = gamma * gamma * op.m_hint().powi(2);
        let slack = 1e-12 * (1.0 + setup.bregman(&self.x_current.u_blocks, &out.y.u_blocks));
        if out.delta > bound + slack {
            self.fu_cache = Some(fu_x);
            return Err(Error::StepsizeCollapse { retries: 0, gamma, delta: out.delta });
        }
        Ok(self.record(op, out, gamma, 0))
    }

    /// Drop the protocol and start a new phase from the current point.
    pub fn restart(&mut self) {
        self.sums.reset();
        if let Some(p) = self.protocol.as_mut() {
            *p = ExecutionProtocol::new();
        }
        self.phase_start = self.gamma_history.len();
        self.x_phase_start = self.x_current.clone();
        self.fu_cache = None;
    }

    pub fn phase_gammas(&self) -> &[f64] {
        &self.gamma_history[self.phase_start..]
    }

    /// Stepsize-proportional certificate of the current phase.
    pub fn certificate(&self) -> Result<AccuracyCertificate> {
        weighted_schedule(self.phase_gammas(), ScheduleKind::Proportional)
    }

    pub fn averaged_point(&self) -> Result<CompositePoint> {
        self.sums.averaged_point()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleKind {
    Proportional,
    /// Zero weight on the first half, weights proportional to γ afterwards.
    LastHalfUniform,
    /// Equal weights; only valid when `1/γ_τ` is nondecreasing.
    Uniform,
}

/// Certificate weights from a stepsize history, verified so that `λ_τ/γ_τ`
/// is nondecreasing.
pub fn weighted_schedule(gammas: &[f64], kind: ScheduleKind) -> Result<AccuracyCertificate> {
    if gammas.is_empty() {
        return input("empty stepsize history");
    }
    if gammas.iter().any(|g| !(*g > 0.0)) {
        return input("stepsizes must be positive");
    }
    let raw: Vec<f64> = match kind {
        ScheduleKind::Proportional => gammas.to_vec(),
        ScheduleKind::LastHalfUniform => {
            let skip = gammas.len() / 2;
            gammas.iter().enumerate().map(|(i, g)| if i < skip { 0.0 } else { *g }).collect()
        }
        ScheduleKind::Uniform => vec![1.0; gammas.len()],
    };
    let cert = AccuracyCertificate::proportional(&raw)?;
    check_schedule(gammas, &cert.weights)?;
    Ok(cert)
}

pub fn check_schedule(gammas: &[f64], weights: &[f64]) -> Result<()> {
    let ratios: Vec<f64> = weights.iter().zip(gammas).map(|(w, g)| w / g).collect();
    for (i, w) in ratios.windows(2).enumerate() {
        if w[1] < w[0] * (1.0 - 1e-12) {
            return Err(Error::Schedule(format!(
                "weight/stepsize ratio decreases at step {}: {} then {}",
                i + 2,
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepMode {
    Adaptive(StepPolicy),
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Checkpoints {
    PowersOfTwo,
    Every(usize),
    At(Vec<usize>),
}

impl Checkpoints {
    pub fn contains(&self, t: usize) -> bool {
        match self {
            Checkpoints::PowersOfTwo => t.is_power_of_two(),
            Checkpoints::Every(k) => *k > 0 && t % k == 0,
            Checkpoints::At(ts) => ts.contains(&t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub max_iters: usize,
    pub step: StepMode,
    pub checkpoints: Checkpoints,
    pub record_protocol: bool,
    /// Domain for the resolution and lower bound reported at checkpoints.
    pub domain: Option<ResolutionDomain>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            step: StepMode::Adaptive(StepPolicy::default()),
            checkpoints: Checkpoints::PowersOfTwo,
            record_protocol: false,
            domain: None,
        }
    }
}

/// Bound row emitted at a checkpoint.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub t: usize,
    pub gamma: f64,
    pub delta: f64,
    /// Best `Φ̄` of an averaged point so far (infinite without an evaluator).
    pub upper: f64,
    /// Best `Φ̄ − Res` so far (minus infinity without evaluator and domain).
    pub lower: f64,
    pub resolution: Option<f64>,
    /// `ε_Sad` of the averaged point, when the evaluator supports it.
    pub eps_sad: Option<f64>,
    pub averaged: CompositePoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Restart,
    Stop,
}

pub trait RunObserver {
    fn on_step(&mut self, _state: &RunState, _step: &AcceptedStep) -> Control {
        Control::Continue
    }
    fn on_checkpoint(&mut self, _cp: &Checkpoint) -> Control {
        Control::Continue
    }
}

/// Observer that never intervenes.
pub struct NoObserver;
impl RunObserver for NoObserver {}

pub struct RunOutcome {
    pub state: RunState,
    pub checkpoints: Vec<Checkpoint>,
    /// Certificate of the final phase.
    pub certificate: AccuracyCertificate,
    pub stopped_early: bool,
    pub budget_exhausted: bool,
}

pub fn run(
    op: &dyn SaddleOperator,
    setup: &AggregatedSetup,
    layout: &Layout,
    x1: CompositePoint,
    config: &RunConfig,
    evaluator: Option<&dyn SaddleEvaluator>,
    observer: &mut dyn RunObserver,
) -> Result<RunOutcome> {
    let initial = match config.step {
        StepMode::Adaptive(p) => {
            p.validate()?;
            p.initial_guess
        }
        StepMode::Constant(g) => g,
    };
    let mut state = RunState::new(x1, layout, config.record_protocol, initial)?;
    let mut checkpoints = Vec::new();
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut stopped_early = false;
    while state.iteration < config.max_iters {
        let step = match config.step {
            StepMode::Adaptive(p) => state.adaptive_step(op, setup, layout, &p)?,
            StepMode::Constant(g) => state.fixed_step(op, setup, layout, g)?,
        };
        let mut control = observer.on_step(&state, &step);
        if control == Control::Continue && config.checkpoints.contains(state.iteration) {
            let averaged = state.averaged_point()?;
            let resolution = config.domain.as_ref().map(|d| state.sums.resolution(d, layout)).transpose()?;
            let mut eps_sad = None;
            if let Some(ev) = evaluator {
                if let Ok(phi) = ev.primal_value(&averaged) {
                    upper = upper.min(phi);
                    if let Some(r) = resolution {
                        lower = lower.max(phi - r);
                    }
                }
                eps_sad = eps_sad_exact(&averaged, ev).ok();
            }
            let cp = Checkpoint { t: state.iteration, gamma: step.gamma, delta: step.delta, upper, lower, resolution, eps_sad, averaged };
            control = observer.on_checkpoint(&cp);
            checkpoints.push(cp);
        }
        match control {
            Control::Continue => {}
            Control::Restart => state.restart(),
            Control::Stop => {
                stopped_early = true;
                break;
            }
        }
    }
    if state.sums.is_empty() {
        return Err(Error::Input("run ended right after a restart; no certificate available".into()));
    }
    let certificate = state.certificate()?;
    Ok(RunOutcome { budget_exhausted: !stopped_early, stopped_early, certificate, checkpoints, state })
}

/// `min_{‖x‖₂≤r_x} max_{‖y‖₂≤r_y} ⟨y, Ax − b⟩` as a two-block saddle problem.
#[derive(Clone, Debug)]
pub struct BilinearBall {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub radius_x: f64,
    pub radius_y: f64,
    lipschitz: f64,
}

impl BilinearBall {
    pub fn new(a: DenseMatrix, b: Vec<f64>, radius_x: f64, radius_y: f64) -> Result<Self> {
        if b.len() != a.rows {
            return input("rhs length must equal the number of rows");
        }
        let lipschitz = a.spectral_norm()?;
        Ok(Self { a, b, radius_x, radius_y, lipschitz })
    }

    pub fn layout(&self) -> Layout {
        let ball = |r| EpigraphBlock::new(BaseSet::EuclideanBall { radius: r }, Nonsmooth::None);
        Layout::new(vec![
            BlockSpec::new("x", BlockShape::vector(self.a.cols), ball(self.radius_x)),
            BlockSpec::new("y", BlockShape::vector(self.a.rows), ball(self.radius_y)),
        ])
        .expect("radii validated by construction")
    }

    pub fn domain(&self) -> ResolutionDomain {
        use crate::certificates::BlockDomain::EuclidBall;
        ResolutionDomain {
            blocks: vec![
                EuclidBall { center: vec![0.0; self.a.cols], radius: self.radius_x },
                EuclidBall { center: vec![0.0; self.a.rows], radius: self.radius_y },
            ],
        }
    }
}

impl SaddleOperator for BilinearBall {
    fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let gx = self.a.apply_adjoint(&u[1]);
        let ax = self.a.apply(&u[0]);
        let gy = ax.iter().zip(&self.b).map(|(p, q)| q - p).collect();
        Ok(vec![gx, gy])
    }
    fn fv(&self) -> &[f64] {
        &[]
    }
    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

impl SaddleEvaluator for BilinearBall {
    fn primal_value(&self, x: &CompositePoint) -> Result<f64> {
        let r = linalg::sub(&self.a.apply(&x.u_blocks[0]), &self.b);
        Ok(self.radius_y * linalg::norm2(&r))
    }
    fn dual_value(&self, x: &CompositePoint) -> Result<f64> {
        let y = &x.u_blocks[1];
        Ok(-self.radius_x * linalg::norm2(&self.a.apply_adjoint(y)) - linalg::dot(y, &self.b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::{resolution, BlockDomain};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// `F(u) = M u + a` on one unconstrained or ball block.
    struct Affine {
        m: DenseMatrix,
        a: Vec<f64>,
        fv: Vec<f64>,
    }

    impl SaddleOperator for Affine {
        fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
            let mut f = self.m.apply(&u[0]);
            linalg::axpy(&mut f, 1.0, &self.a);
            Ok(vec![f])
        }
        fn fv(&self) -> &[f64] {
            &self.fv
        }
    }

    /// Skew part plus a small PSD part, so the field is monotone.
    fn random_monotone(n: usize, rng: &mut ChaCha20Rng) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = rng.random_range(-1.0..1.0);
                m.data[i * n + j] = v;
                m.data[j * n + i] = -v;
            }
            m.data[i * n + i] = rng.random_range(0.0..0.3);
        }
        m
    }

    fn ball_layout(n: usize, r: f64) -> Layout {
        Layout::new(vec![BlockSpec::new("u", BlockShape::vector(n), EpigraphBlock::new(BaseSet::EuclideanBall { radius: r }, Nonsmooth::None))])
            .unwrap()
    }

    fn bilinear(seed: u64, m: usize, n: usize) -> BilinearBall {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = DenseMatrix::new(m, n, (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let b = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        BilinearBall::new(a, b, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_field_fixed_point() {
        // F_u ≡ 0 with an ℓ1 epigraph: the origin minimizes ω + γλ‖·‖₁ and stays put
        let layout = Layout::new(vec![BlockSpec::new("y", BlockShape::vector(3), EpigraphBlock::new(BaseSet::WholeSpace, Nonsmooth::L1 { weight: 1.0 }))])
            .unwrap();
        let op = Affine { m: DenseMatrix::zeros(3, 3), a: vec![0.0; 3], fv: vec![1.0] };
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let x = layout.zeros();
        let out = comp_mp_step(&x, &[vec![0.0; 3]], &op, &setup, &layout, 0.7).unwrap();
        assert_eq!(out.y, x);
        assert_eq!(out.x_next, x);
        assert!(out.delta <= 0.0);
        // a nonzero point is shrunk toward the origin
        let x = CompositePoint::new(vec![vec![2.0, -0.5, 0.0]], vec![2.5]);
        let out = comp_mp_step(&x, &[vec![0.0; 3]], &op, &setup, &layout, 1.0).unwrap();
        assert_eq!(out.y.u_blocks[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(out.y.v_scalars[0], 1.0);
    }

    #[test]
    fn delta_nonpositive_at_inverse_lipschitz() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = random_monotone(4, &mut rng);
            let l = m.spectral_norm().unwrap();
            let op = Affine { m, a: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(), fv: vec![] };
            let layout = ball_layout(4, 1.0);
            let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
            let x = CompositePoint::new(vec![(0..4).map(|_| rng.random_range(-0.5..0.5)).collect()], vec![]);
            let fx = op.eval_fu(&x.u_blocks).unwrap();
            assert!(comp_mp_step(&x, &fx, &op, &setup, &layout, 1.0 / l).unwrap().delta <= 1e-14);
            assert!(comp_mp_step(&x, &fx, &op, &setup, &layout, 1e-6).unwrap().delta < 0.0);
        }
    }

    #[test]
    fn adaptive_policy_grows_and_shrinks() {
        let p = bilinear(2, 5, 6);
        let l = p.lipschitz_hint().unwrap();
        let layout = p.layout();
        let setup = AggregatedSetup::euclidean(vec![1.0, 1.0]).unwrap();
        let policy = StepPolicy::default();
        let mut st = RunState::new(layout.zeros(), &layout, false, 0.5 / l).unwrap();
        let s = st.adaptive_step(&p, &setup, &layout, &policy).unwrap();
        assert_eq!(s.retries, 0);
        assert_abs_diff_eq!(st.next_gamma, 0.6 / l, epsilon = 1e-15);

        let mut st = RunState::new(layout.zeros(), &layout, false, 100.0 / l).unwrap();
        for _ in 0..30 {
            let s = st.adaptive_step(&p, &setup, &layout, &policy).unwrap();
            assert!(s.delta <= 0.0);
        }
        assert!(st.delta_history.iter().all(|d| *d <= 0.0));
    }

    #[test]
    fn zero_field_accepts_any_step() {
        let layout = ball_layout(2, 1.0);
        let op = Affine { m: DenseMatrix::zeros(2, 2), a: vec![0.0; 2], fv: vec![] };
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let mut st = RunState::new(layout.zeros(), &layout, false, 1e6).unwrap();
        assert_eq!(st.adaptive_step(&op, &setup, &layout, &StepPolicy::default()).unwrap().retries, 0);
    }

    /// `F(u) = sign(u)` claimed smooth (`M = 0`): near a kink no stepsize passes.
    struct Sign;
    impl SaddleOperator for Sign {
        fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
            Ok(vec![u[0].iter().map(|x| if *x > 0.0 { 1.0 } else { -1.0 }).collect()])
        }
        fn fv(&self) -> &[f64] {
            &[]
        }
    }

    #[test]
    fn collapse_reports_last_trial() {
        let layout = ball_layout(1, 10.0);
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let mut st = RunState::new(CompositePoint::new(vec![vec![1e-30]], vec![]), &layout, false, 1.0).unwrap();
        let policy = StepPolicy { max_retries: 5, ..Default::default() };
        match st.adaptive_step(&Sign, &setup, &layout, &policy) {
            Err(Error::StepsizeCollapse { retries: 5, gamma, delta }) => {
                assert_abs_diff_eq!(gamma, 0.8f64.powi(5), epsilon = 1e-15);
                assert!(delta > 0.0);
            }
            other => panic!("expected collapse, got {:?}", other.map(|s| s.gamma)),
        }
        assert_eq!(st.iteration, 0);
    }

    #[test]
    fn schedules() {
        assert_eq!(weighted_schedule(&[1.0; 4], ScheduleKind::Proportional).unwrap().weights, vec![0.25; 4]);
        assert_eq!(weighted_schedule(&[1.0, 2.0], ScheduleKind::LastHalfUniform).unwrap().weights, vec![0.0, 1.0]);
        assert_eq!(weighted_schedule(&[2.0, 1.0], ScheduleKind::Uniform).unwrap().weights, vec![0.5, 0.5]);
        assert!(matches!(weighted_schedule(&[1.0, 2.0], ScheduleKind::Uniform), Err(Error::Schedule(_))));
        let g = [0.3, 0.9, 0.2, 0.5, 0.7];
        let c = weighted_schedule(&g, ScheduleKind::LastHalfUniform).unwrap();
        assert_eq!(&c.weights[..2], &[0.0, 0.0]);
    }

    #[test]
    fn toy_xy_saddle_converges_to_origin() {
        let a = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let p = BilinearBall::new(a, vec![0.0], 1.0, 1.0).unwrap();
        let layout = p.layout();
        let setup = AggregatedSetup::euclidean(vec![1.0, 1.0]).unwrap();
        let x1 = CompositePoint::new(vec![vec![0.9], vec![-0.4]], vec![]);
        let cfg = RunConfig { max_iters: 256, step: StepMode::Constant(1.0), domain: Some(p.domain()), ..Default::default() };
        let out = run(&p, &setup, &layout, x1, &cfg, Some(&p), &mut NoObserver).unwrap();
        let last = out.checkpoints.last().unwrap();
        assert!(last.eps_sad.unwrap() < 0.02);
        assert!(last.averaged.u_blocks[0][0].abs() < 0.02);
        assert!(out.budget_exhausted);
    }

    #[test]
    fn resolution_bounds_eps_vi_on_affine_instance() {
        // ε_VI(x̄) = sup_{x ∈ X} ⟨F(x), x̄ − x⟩, by grid over the 2-D unit disk
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let m = random_monotone(2, &mut rng);
        let op = Affine { m, a: vec![0.3, -0.6], fv: vec![] };
        let layout = ball_layout(2, 1.0);
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let dom = ResolutionDomain { blocks: vec![BlockDomain::EuclidBall { center: vec![0.0; 2], radius: 1.0 }] };
        let cfg = RunConfig { max_iters: 64, domain: Some(dom.clone()), record_protocol: true, ..Default::default() };
        let x1 = CompositePoint::new(vec![vec![0.5, 0.5]], vec![]);
        let out = run(&op, &setup, &layout, x1, &cfg, None, &mut NoObserver).unwrap();
        for cp in &out.checkpoints {
            let xb = &cp.averaged.u_blocks[0];
            let mut eps = f64::NEG_INFINITY;
            for i in 0..=200 {
                for j in 0..=200 {
                    let x = [-1.0 + i as f64 * 0.01, -1.0 + j as f64 * 0.01];
                    if x[0] * x[0] + x[1] * x[1] > 1.0 {
                        continue;
                    }
                    let f = op.eval_fu(&[x.to_vec()]).unwrap();
                    eps = eps.max(linalg::dot(&f[0], &linalg::sub(xb, &x)));
                }
            }
            assert!(eps <= cp.resolution.unwrap() + 1e-6, "t={}: {eps} > {:?}", cp.t, cp.resolution);
        }
        let proto = out.state.protocol.as_ref().unwrap();
        let r = resolution(proto, &out.certificate, &dom, &layout).unwrap();
        assert_abs_diff_eq!(r, out.state.sums.resolution(&dom, &layout).unwrap(), epsilon = 1e-12);
    }

    /// Affine monotone field plus a jump term `M/2 · sign(u)/√n` (gradient of a
    /// scaled ℓ1 norm), so `‖F(u) − F(u′)‖ ≤ L‖u − u′‖ + M`.
    struct Jumpy {
        inner: Affine,
        m: f64,
    }

    impl SaddleOperator for Jumpy {
        fn eval_fu(&self, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
            let mut f = self.inner.eval_fu(u)?;
            let c = 0.5 * self.m / (u[0].len() as f64).sqrt();
            for (fi, ui) in f[0].iter_mut().zip(&u[0]) {
                *fi += c * if *ui > 0.0 { 1.0 } else if *ui < 0.0 { -1.0 } else { 0.0 };
            }
            Ok(f)
        }
        fn fv(&self) -> &[f64] {
            &[]
        }
        fn m_hint(&self) -> f64 {
            self.m
        }
    }

    #[test]
    fn bounded_jump_branch_respects_rate_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let n = 4;
        let inner = Affine { m: random_monotone(n, &mut rng), a: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(), fv: vec![] };
        let op = Jumpy { inner, m: 0.5 };
        let layout = ball_layout(n, 1.0);
        let setup = AggregatedSetup::euclidean(vec![1.0]).unwrap();
        let dom = ResolutionDomain { blocks: vec![BlockDomain::EuclidBall { center: vec![0.0; n], radius: 1.0 }] };
        let cfg = RunConfig { max_iters: 200, domain: Some(dom), checkpoints: Checkpoints::Every(1), ..Default::default() };
        let out = run(&op, &setup, &layout, layout.zeros(), &cfg, None, &mut NoObserver).unwrap();
        // Θ = max over the unit ball of ½‖x‖² = ½ from x₁ = 0
        let theta = 0.5;
        let (mut sg, mut sg2) = (0.0, 0.0);
        for (g, cp) in out.state.gamma_history.iter().zip(&out.checkpoints) {
            sg += g;
            sg2 += g * g;
            assert!(cp.delta <= g * g * op.m * op.m);
            assert!(cp.resolution.unwrap() <= (theta + op.m * op.m * sg2) / sg + 1e-12);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let p = bilinear(7, 4, 5);
        let layout = p.layout();
        let setup = AggregatedSetup::euclidean(vec![1.0, 1.0]).unwrap();
        let cfg = RunConfig { max_iters: 50, ..Default::default() };
        let a = run(&p, &setup, &layout, layout.zeros(), &cfg, None, &mut NoObserver).unwrap();
        let b = run(&p, &setup, &layout, layout.zeros(), &cfg, None, &mut NoObserver).unwrap();
        assert_eq!(a.state.gamma_history, b.state.gamma_history);
        assert_eq!(a.state.x_current, b.state.x_current);
    }

    #[test]
    fn restart_keeps_point_and_resets_certificate() {
        let p = bilinear(8, 3, 3);
        let layout = p.layout();
        let setup = AggregatedSetup::euclidean(vec![1.0, 1.0]).unwrap();
        let mut st = RunState::new(layout.zeros(), &layout, true, 1.0).unwrap();
        for _ in 0..5 {
            st.adaptive_step(&p, &setup, &layout, &StepPolicy::default()).unwrap();
        }
        let x = st.x_current.clone();
        st.restart();
        assert_eq!(st.x_phase_start, x);
        assert!(st.sums.is_empty());
        assert_eq!(st.protocol.as_ref().unwrap().len(), 0);
        st.adaptive_step(&p, &setup, &layout, &StepPolicy::default()).unwrap();
        assert_eq!(st.certificate().unwrap().weights, vec![1.0]);
        assert_eq!(st.iteration, 6);
    }
}
