//! The `comp-prox` command line: `solve`, `verify` and `bounds`.
//!
//! Exit codes: 0 on success, 1 when a solve or a verification fails, 2 on
//! usage and configuration errors.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::config::{Family, InstanceConfig, Mode, RhoPolicy};
use super::generators::{build_image_problem, gen_image_synthetic, gen_l1_planted, gen_matrix_completion, gen_mc_known_opt, ImageInstance, L1Instance, McInstance, McParams};
use super::io::{dump_instance, load_instance, read_image, write_matrix_csv, Instance, ProtocolDump};
use super::trace::{write_trace, TraceRow};
use crate::error::{Error, Result};
use crate::linalg::norm1;
use crate::multiterm::{capped_domain, mc_radius_bound, solve_multiterm, LowerBounder, MultiTermConfig, MultiTermOutcome, MultiTermProblem};
use crate::semisep::{run_penalized, run_sequential, PointKind, SequentialConfig, STAGE_LOG_HEADER};

#[derive(Debug, Parser)]
#[command(name = "comp-prox", version, about = "Composite Mirror Prox solver with certified bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or load an instance, solve it and write the trace.
    Solve(SolveArgs),
    /// Re-check the planted optimum of a dumped instance.
    Verify {
        /// Directory written by `solve --dump-instance`.
        #[arg(long)]
        instance: PathBuf,
    },
    /// Recompute the certificate lower bound from a dumped protocol.
    Bounds {
        /// File written by `solve --dump-protocol`.
        #[arg(long)]
        protocol: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Flat `key = value` file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub dump_config: bool,
    #[arg(long, required_unless_present_any = ["config", "dump_config"])]
    pub family: Option<Family>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dual scale of the planted ℓ1 instance (`R* = c·n`).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// `pow2`, `every:K` or `at:T1;T2;...`
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Distance guess `D` used by the aggregation weights.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub weight_exponent: Option<f64>,
    #[arg(long)]
    pub rho_policy: Option<RhoPolicy>,
    /// Penalty of the `simple` mode (default: the planted `R*`).
    #[arg(long)]
    pub penalty: Option<f64>,
    /// Trace CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one CSV per solution block.
    #[arg(long)]
    pub solution_dir: Option<PathBuf>,
    #[arg(long)]
    pub dump_instance: Option<PathBuf>,
    #[arg(long)]
    pub dump_protocol: Option<PathBuf>,
    /// Any other config key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Comma-separated seeds to run as a batch (overrides `--seed`).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Number of batch runs in flight at once.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl SolveArgs {
    pub fn to_config(&self) -> Result<InstanceConfig> {
        let mut cfg = match &self.config {
            Some(p) => InstanceConfig::from_file(p)?,
            None => InstanceConfig::default(),
        };
        let show = |v: &dyn ToString| v.to_string();
        let path = |p: &PathBuf| p.display().to_string();
        let flags: [(&str, Option<String>); 19] = [
            ("family", self.family.map(|v| show(&v))),
            ("mode", self.mode.map(|v| show(&v))),
            ("n", self.n.map(|v| show(&v))),
            ("m", self.m.map(|v| show(&v))),
            ("seed", self.seed.map(|v| show(&v))),
            ("c", self.c.map(|v| show(&v))),
            ("max_iters", self.max_iters.map(|v| show(&v))),
            ("eps", self.eps.map(|v| show(&v))),
            ("checkpoints", self.checkpoints.clone()),
            ("image", self.image.as_ref().map(path)),
            ("sigma", self.sigma.map(|v| show(&v))),
            ("d", self.d.map(|v| show(&v))),
            ("weight_exponent", self.weight_exponent.map(|v| show(&v))),
            ("rho_policy", self.rho_policy.map(|v| show(&v))),
            ("penalty", self.penalty.map(|v| show(&v))),
            ("out", self.out.as_ref().map(path)),
            ("solution_dir", self.solution_dir.as_ref().map(path)),
            ("dump_instance", self.dump_instance.as_ref().map(path)),
            ("dump_protocol", self.dump_protocol.as_ref().map(path)),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Input(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

/// Result of one `solve` run.
#[derive(Clone, Debug)]
pub struct SolveSummary {
    pub family: Family,
    pub mode: Mode,
    pub seed: u64,
    pub steps: usize,
    pub upper: f64,
    pub lower: f64,
    pub relative_gap: f64,
    pub restarts: usize,
    /// Family-specific lines, e.g. the planted optimum or `ε(x)`.
    pub extra: Vec<(String, String)>,
    pub rows: Vec<TraceRow>,
    pub seconds: f64,
}

impl SolveSummary {
    pub fn render(&self) -> String {
        let mut s = format!(
            "family: {}\nmode: {}\nseed: {}\nsteps: {}\nupper: {:.10e}\nlower: {:.10e}\nrelative_gap: {:.3e}\nrestarts: {}\nseconds: {:.3}\n",
            self.family, self.mode, self.seed, self.steps, self.upper, self.lower, self.relative_gap, self.restarts, self.seconds
        );
        for (k, v) in &self.extra {
            s.push_str(&format!("{k}: {v}\n"));
        }
        s
    }
}

fn relative_gap(upper: f64, lower: f64) -> f64 {
    (upper - lower) / lower.abs().max(f64::MIN_POSITIVE)
}

fn multiterm_config(cfg: &InstanceConfig, mut base: MultiTermConfig) -> MultiTermConfig {
    base.checkpoints = cfg.checkpoints.clone();
    if let Some(d) = cfg.d {
        base.aggregation.d = d;
    }
    if let Some(e) = cfg.weight_exponent {
        base.aggregation.exponent = e;
    }
    base.kappa = cfg.kappa;
    base.rho_initial = cfg.rho_initial;
    base.rho_growth = cfg.rho_growth;
    base.selective_rho = cfg.selective_rho;
    base.bound_stride = cfg.bound_stride.max(1);
    match cfg.rho_policy {
        RhoPolicy::Adaptive => {}
        RhoPolicy::Floor => base.use_rho_floor = true,
        RhoPolicy::Fixed => base.adapt_rho = false,
    }
    base
}

fn mc_params(cfg: &InstanceConfig) -> McParams {
    McParams {
        obs_prob: cfg.obs_prob,
        noise_factor: cfg.noise_factor,
        density: cfg.density,
        lambda_factor: cfg.lambda_factor,
        mu_factor: cfg.mu_factor,
    }
}

fn with_weights(mut inst: ImageInstance, cfg: &InstanceConfig) -> ImageInstance {
    inst.mu1 = cfg.mu1.unwrap_or(inst.mu1);
    inst.mu2 = cfg.mu2.unwrap_or(inst.mu2);
    inst.mu3 = cfg.mu3.unwrap_or(inst.mu3);
    inst
}

/// Build the instance a config describes.
pub fn generate(cfg: &InstanceConfig) -> Result<(Instance, Vec<(String, String)>)> {
    let mut notes = Vec::new();
    let inst = match cfg.family {
        Family::MatrixCompletion => Instance::MatrixCompletion(gen_matrix_completion(cfg.n, cfg.seed, &mc_params(cfg))?),
        Family::McKnownOpt => {
            let (inst, attempt) = gen_mc_known_opt(cfg.n, cfg.seed, &mc_params(cfg))?;
            if attempt > 0 {
                notes.push(("instance_seed".into(), cfg.seed.wrapping_add(attempt).to_string()));
            }
            Instance::MatrixCompletion(inst)
        }
        Family::ImageDecompSynthetic => Instance::Image(with_weights(gen_image_synthetic(cfg.n, cfg.sparsity, cfg.sigma, cfg.seed)?, cfg)),
        Family::ImageDecompFile => {
            let path = cfg.image.as_ref().ok_or_else(|| Error::Input("image_decomp_file needs `image`".into()))?;
            let (b, n) = read_image(path)?;
            let s = cfg.sigma;
            Instance::Image(with_weights(ImageInstance { n, b, mu1: 10.0 * s, mu2: s, mu3: s }, cfg))
        }
        Family::L1Planted => Instance::L1Planted(gen_l1_planted(cfg.n, cfg.m, cfg.c, cfg.l1_density, cfg.seed)?),
    };
    Ok((inst, notes))
}

fn write_blocks(dir: &Path, names: &[&str], blocks: &[Vec<f64>], shape: impl Fn(usize) -> (usize, usize)) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, (name, b)) in names.iter().zip(blocks).enumerate() {
        let (r, c) = shape(k);
        write_matrix_csv(BufWriter::new(fs::File::create(dir.join(format!("{name}.csv")))?), b, r, c)?;
    }
    Ok(())
}

fn mc_protocol_dump(inst: &McInstance, problem: &MultiTermProblem, out: &MultiTermOutcome) -> Result<ProtocolDump> {
    let asm = &out.assembled;
    let avg = out.state.averaged_point()?;
    let phi_bar_avg = problem.phi_bar(&avg, &out.rho, &asm.layout, &asm.index);
    let y0_l1: f64 = avg.u_blocks[asm.index.base.clone()].iter().map(|v| norm1(v)).sum();
    let r_plus = mc_radius_bound(&inst.b, inst.lambda, out.upper)?.max(y0_l1);
    Ok(ProtocolDump {
        layout: asm.layout.clone(),
        domain: capped_domain(&asm.layout, r_plus)?,
        sums: out.state.sums.clone(),
        phi_bar_avg,
        upper: out.upper,
    })
}

fn solve_mc(cfg: &InstanceConfig, inst: &McInstance) -> Result<SolveSummary> {
    let problem = Arc::new(inst.problem()?);
    let config = multiterm_config(cfg, inst.solver_config(cfg.max_iters));
    let mut bounder = inst.bounder();
    let out = solve_multiterm(&problem, &config, Some(&mut bounder as &mut dyn LowerBounder), &mut |_| {})?;
    if let Some(dir) = &cfg.solution_dir {
        write_blocks(dir, &["y0"], &out.best_base, |_| (inst.n, inst.n))?;
    }
    if let Some(path) = &cfg.dump_protocol {
        mc_protocol_dump(inst, &problem, &out)?.save(path)?;
    }
    let mut extra = vec![("rho".to_string(), format!("{:e}", out.rho[0]))];
    if let Some(opt) = inst.opt {
        extra.push(("opt".into(), format!("{opt:.10e}")));
        extra.push(("relative_error".into(), format!("{:.3e}", (out.upper - opt) / opt)));
    }
    Ok(SolveSummary {
        family: cfg.family,
        mode: Mode::Multiterm,
        seed: cfg.seed,
        steps: out.iterations,
        upper: out.upper,
        lower: out.lower,
        relative_gap: relative_gap(out.upper, out.lower),
        restarts: out.restarts,
        extra,
        rows: out.rows,
        seconds: 0.0,
    })
}

fn solve_image(cfg: &InstanceConfig, inst: &ImageInstance) -> Result<SolveSummary> {
    if cfg.dump_protocol.is_some() {
        return Err(Error::Input("protocol dumps need a lower-bounded family (matrix completion)".into()));
    }
    let problem = Arc::new(build_image_problem(inst)?);
    let config = multiterm_config(cfg, inst.solver_config(cfg.max_iters));
    let out = solve_multiterm(&problem, &config, None, &mut |_| {})?;
    if let Some(dir) = &cfg.solution_dir {
        write_blocks(dir, &["low_rank", "sparse", "smooth"], &out.best_base, |_| (inst.n, inst.n))?;
    }
    Ok(SolveSummary {
        family: cfg.family,
        mode: Mode::Multiterm,
        seed: cfg.seed,
        steps: out.iterations,
        upper: out.upper,
        lower: out.lower,
        relative_gap: relative_gap(out.upper, out.lower),
        restarts: out.restarts,
        extra: vec![("rho".into(), format!("{:e}", out.rho[0])), ("d".into(), format!("{:e}", out.d))],
        rows: out.rows,
        seconds: 0.0,
    })
}

fn solve_l1(cfg: &InstanceConfig, inst: &L1Instance, mode: Mode, stage_log: Option<&Path>) -> Result<SolveSummary> {
    if cfg.dump_protocol.is_some() {
        return Err(Error::Input("protocol dumps need a lower-bounded family (matrix completion)".into()));
    }
    let problem = Arc::new(inst.problem());
    let clock = Instant::now();
    let mut rows = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut offer = |x: &[f64]| {
        let e = inst.eps_of(x);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, x.to_vec()));
        }
        e
    };
    let summary = match mode {
        Mode::Sequential => {
            let config = SequentialConfig { eps: cfg.eps, max_steps: cfg.max_iters, ..SequentialConfig::default() };
            let out = run_sequential(&problem, &config, &mut |p| {
                let e = offer(&p.gap.combined[0]);
                if cfg.checkpoints.contains(p.step) {
                    let upper = problem.f(&p.gap.combined).unwrap_or(f64::NAN);
                    rows.push(TraceRow {
                        t: p.step,
                        seconds: clock.elapsed().as_secs_f64(),
                        upper,
                        lower: p.filter.opt_lb,
                        gap: p.gap.gap,
                        rho_or_alpha: p.stage.alpha,
                        restarts: p.stage.stage_index - 1,
                    });
                }
                e <= cfg.eps
            })?;
            if let Some(path) = stage_log {
                let mut w = BufWriter::new(fs::File::create(path)?);
                writeln!(w, "{STAGE_LOG_HEADER}")?;
                for s in &out.stages {
                    writeln!(w, "{}", s.to_csv())?;
                }
            }
            let upper = problem.f(&out.solution)?;
            SolveSummary {
                family: cfg.family,
                mode,
                seed: cfg.seed,
                steps: out.steps,
                upper,
                lower: out.opt_lb,
                relative_gap: relative_gap(upper, out.opt_lb),
                restarts: out.stages.len().saturating_sub(1),
                extra: vec![
                    ("stages".into(), out.stages.len().to_string()),
                    ("gap".into(), format!("{:.3e}", out.gap)),
                    ("alpha".into(), format!("{:.6}", out.stages.last().map_or(f64::NAN, |s| s.alpha))),
                ],
                rows: Vec::new(),
                seconds: 0.0,
            }
        }
        Mode::Simple => {
            let penalty = cfg.penalty.unwrap_or(inst.r_star);
            let mut t_last = 0;
            let (steps, _) = run_penalized(&problem, penalty, cfg.max_iters, &Default::default(), &mut |t, kind, y| {
                if kind != PointKind::Averaged {
                    return false;
                }
                let e = offer(&y[0]);
                if t != t_last && cfg.checkpoints.contains(t) {
                    t_last = t;
                    rows.push(TraceRow {
                        t,
                        seconds: clock.elapsed().as_secs_f64(),
                        upper: problem.f(y).unwrap_or(f64::NAN),
                        lower: f64::NEG_INFINITY,
                        gap: inst.eps_of(&y[0]),
                        rho_or_alpha: penalty,
                        restarts: 0,
                    });
                }
                e <= cfg.eps
            })?;
            SolveSummary {
                family: cfg.family,
                mode,
                seed: cfg.seed,
                steps,
                upper: f64::NAN,
                lower: f64::NEG_INFINITY,
                relative_gap: f64::INFINITY,
                restarts: 0,
                extra: vec![("penalty".into(), format!("{penalty:e}"))],
                rows: Vec::new(),
                seconds: 0.0,
            }
        }
        Mode::Multiterm => return Err(Error::Input("l1_planted runs in mode `sequential` or `simple`".into())),
    };
    let (eps_best, x) = best.ok_or(Error::EmptyFilter)?;
    if let Some(dir) = &cfg.solution_dir {
        write_blocks(dir, &["x"], &[x.clone()], |_| (x.len(), 1))?;
    }
    let mut summary = SolveSummary { rows, ..summary };
    if summary.mode == Mode::Simple {
        summary.upper = norm1(&x);
    }
    summary.extra.push(("eps".into(), format!("{eps_best:.3e}")));
    summary.extra.push(("reached_eps".into(), (eps_best <= cfg.eps).to_string()));
    summary.extra.push(("opt".into(), format!("{:.10e}", norm1(&inst.x_star))));
    Ok(summary)
}

/// Path of a per-seed output in batch mode: `trace.csv` → `trace.seed7.csv`.
pub fn seeded_path(p: &Path, seed: u64) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match p.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    p.with_file_name(name)
}

fn stage_log_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.stages.csv"))
}

/// Run one configured solve, writing every requested file.
pub fn run_solve(cfg: &InstanceConfig) -> Result<SolveSummary> {
    cfg.validate()?;
    let clock = Instant::now();
    let (inst, notes) = generate(cfg)?;
    if let Some(dir) = &cfg.dump_instance {
        dump_instance(dir, &inst)?;
    }
    let mode = cfg.effective_mode();
    let mut summary = match &inst {
        Instance::MatrixCompletion(i) => solve_mc(cfg, i)?,
        Instance::Image(i) => solve_image(cfg, i)?,
        Instance::L1Planted(i) => solve_l1(cfg, i, mode, cfg.out.as_deref().map(stage_log_path).as_deref())?,
    };
    summary.extra.extend(notes);
    summary.seconds = clock.elapsed().as_secs_f64();
    if let Some(path) = &cfg.out {
        write_trace(BufWriter::new(fs::File::create(path)?), &summary.rows)?;
    }
    Ok(summary)
}

/// Exit code for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Parse(_) => 2,
        _ => 1,
    }
}

fn batch(cfg: &InstanceConfig, seeds: &[u64], jobs: usize) -> Vec<(u64, Result<SolveSummary>)> {
    let per_seed = |seed: u64| {
        let mut c = cfg.clone();
        c.seed = seed;
        for p in [&mut c.out, &mut c.solution_dir, &mut c.dump_instance, &mut c.dump_protocol].into_iter().flatten() {
            *p = seeded_path(p, seed);
        }
        c
    };
    let mut results = Vec::with_capacity(seeds.len());
    for chunk in seeds.chunks(jobs.max(1)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&seed| {
                    let c = per_seed(seed);
                    s.spawn(move || run_solve(&c))
                })
                .collect();
            for (&seed, h) in chunk.iter().zip(handles) {
                let r = h.join().unwrap_or_else(|_| Err(Error::Numerical("solver thread panicked".into())));
                results.push((seed, r));
            }
        });
    }
    results
}

fn solve_command(args: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = args.to_config()?;
    if args.dump_config {
        write!(out, "{}", cfg.to_text())?;
        return Ok(0);
    }
    if args.seeds.is_empty() {
        let summary = run_solve(&cfg)?;
        write!(out, "{}", summary.render())?;
        return Ok(0);
    }
    cfg.validate()?;
    let mut code = 0;
    for (seed, r) in batch(&cfg, &args.seeds, args.jobs) {
        match r {
            Ok(s) => write!(out, "{}\n", s.render())?,
            Err(e) => {
                writeln!(err, "seed {seed}: {e}")?;
                code = code.max(exit_code(&e));
            }
        }
    }
    Ok(code)
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Solve(args) => solve_command(args, out, err),
        Command::Verify { instance } => {
            let inst = load_instance(instance)?;
            match inst.verify() {
                Ok(Some(r)) => writeln!(out, "verified: worst residual {r:e}")?,
                Ok(None) => writeln!(out, "nothing to verify: instance has no planted optimum")?,
                Err(e) => {
                    writeln!(err, "{e}")?;
                    return Ok(1);
                }
            }
            Ok(0)
        }
        Command::Bounds { protocol } => {
            let dump = ProtocolDump::load(protocol)?;
            let lower = dump.lower_bound()?;
            writeln!(out, "upper: {:.10e}\nlower: {lower:.10e}\ngap: {:.3e}", dump.upper, dump.upper - lower)?;
            Ok(0)
        }
    }
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn cli_run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli_run(std::iter::once("comp-prox").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, _, err) = run(&["solve"]);
        assert_eq!(code, 2);
        assert!(err.contains("--family"), "{err}");
        assert_eq!(run(&["solve", "--family", "nope"]).0, 2);
        assert_eq!(run(&["solve", "--family", "l1_planted", "--mode", "multiterm"]).0, 2);
        assert_eq!(run(&["solve", "--family", "matrix_completion", "--set", "bogus=1"]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn dump_config_lists_every_key() {
        let (code, out, _) = run(&["solve", "--dump-config", "--n", "12"]);
        assert_eq!(code, 0);
        assert!(out.contains("n = 12\n"));
        let mut cfg = InstanceConfig::default();
        cfg.apply_text(&out).unwrap();
        assert_eq!(cfg.n, 12);
    }

    #[test]
    fn seeded_paths() {
        assert_eq!(seeded_path(Path::new("a/trace.csv"), 7), PathBuf::from("a/trace.seed7.csv"));
        assert_eq!(seeded_path(Path::new("sol"), 3), PathBuf::from("sol.seed3"));
    }
}
