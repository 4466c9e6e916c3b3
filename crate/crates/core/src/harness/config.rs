//! Flat `key = value` run configuration.
//!
//! Every key has a default; a config file sets any subset and command-line
//! flags override the file. Optional numeric keys accept `auto`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;

use crate::comp_mp::Checkpoints;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Family {
    MatrixCompletion,
    McKnownOpt,
    ImageDecompSynthetic,
    ImageDecompFile,
    L1Planted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    /// Penalized multi-term CoMP (matrix completion, image decomposition).
    Multiterm,
    /// Sequential stage-based CoMP on a constrained problem.
    Sequential,
    /// Plain CoMP on the penalized constrained problem with a fixed penalty.
    Simple,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum RhoPolicy {
    /// Start at `rho_initial` and grow on violated corrections.
    Adaptive,
    /// Start at the exact-penalty floor, still growing on violations.
    Floor,
    /// Keep `rho_initial` for the whole run.
    Fixed,
}

fn enum_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

macro_rules! display_via_value_enum {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&enum_name(self))
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                <$t as ValueEnum>::from_str(s, true).map_err(|_| {
                    let names: Vec<String> = <$t>::value_variants().iter().map(enum_name).collect();
                    Error::Input(format!("unknown value {s:?}; expected one of {}", names.join(", ")))
                })
            }
        }
    )*};
}

display_via_value_enum!(Family, Mode, RhoPolicy);

/// All parameters of a `solve` run.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceConfig {
    pub family: Family,
    /// `auto` picks `multiterm`, or `sequential` for `l1_planted`.
    pub mode: Option<Mode>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub obs_prob: f64,
    pub noise_factor: f64,
    /// Target fraction of nonzeros in the planted matrix.
    pub density: f64,
    pub lambda_factor: f64,
    pub mu_factor: f64,
    pub sparsity: f64,
    pub sigma: f64,
    pub image: Option<PathBuf>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub mu3: Option<f64>,
    /// Dual scale `c` with `R* = c·n`.
    pub c: f64,
    /// Fraction of nonzeros in the planted sparse vector.
    pub l1_density: f64,
    pub max_iters: usize,
    pub eps: f64,
    pub checkpoints: Checkpoints,
    pub d: Option<f64>,
    pub weight_exponent: Option<f64>,
    pub kappa: f64,
    pub rho_initial: f64,
    pub rho_growth: f64,
    pub rho_policy: RhoPolicy,
    pub selective_rho: bool,
    pub bound_stride: usize,
    /// Penalty of the simple mode; `auto` uses the planted `R*`.
    pub penalty: Option<f64>,
    pub out: Option<PathBuf>,
    pub solution_dir: Option<PathBuf>,
    pub dump_instance: Option<PathBuf>,
    pub dump_protocol: Option<PathBuf>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            family: Family::MatrixCompletion,
            mode: None,
            n: 64,
            m: 32,
            seed: 1,
            obs_prob: 0.25,
            noise_factor: 0.1,
            density: 0.1,
            lambda_factor: 10.0,
            mu_factor: 10.0,
            sparsity: 0.01,
            sigma: 0.01,
            image: None,
            mu1: None,
            mu2: None,
            mu3: None,
            c: 1.0,
            l1_density: 0.1,
            max_iters: 1024,
            eps: 1e-5,
            checkpoints: Checkpoints::PowersOfTwo,
            d: None,
            weight_exponent: None,
            kappa: 1e-4,
            rho_initial: 1e-3,
            rho_growth: 3.0,
            rho_policy: RhoPolicy::Adaptive,
            selective_rho: false,
            bound_stride: 1,
            penalty: None,
            out: None,
            solution_dir: None,
            dump_instance: None,
            dump_protocol: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::Input(format!("{key}: cannot parse {v:?}: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if v == "auto" || v == "none" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn opt_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), ToString::to_string)
}

fn path_string(v: &Option<PathBuf>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |p| p.display().to_string())
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (v != "none" && !v.is_empty()).then(|| PathBuf::from(v))
}

pub fn parse_checkpoints(v: &str) -> Result<Checkpoints> {
    if v == "pow2" {
        return Ok(Checkpoints::PowersOfTwo);
    }
    let err = || Error::Input(format!("checkpoints: expected `pow2`, `every:K` or `at:T1;T2;...`, got {v:?}"));
    if let Some(k) = v.strip_prefix("every:") {
        return match k.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Checkpoints::Every(k)),
            _ => Err(err()),
        };
    }
    let ts = v.strip_prefix("at:").ok_or_else(err)?;
    ts.split(';').map(|t| t.trim().parse::<usize>().map_err(|_| err())).collect::<Result<_>>().map(Checkpoints::At)
}

fn checkpoints_string(c: &Checkpoints) -> String {
    match c {
        Checkpoints::PowersOfTwo => "pow2".into(),
        Checkpoints::Every(k) => format!("every:{k}"),
        Checkpoints::At(ts) => format!("at:{}", ts.iter().map(usize::to_string).collect::<Vec<_>>().join(";")),
    }
}

impl InstanceConfig {
    pub fn effective_mode(&self) -> Mode {
        match (self.mode, self.family) {
            (Some(m), _) => m,
            (None, Family::L1Planted) => Mode::Sequential,
            (None, _) => Mode::Multiterm,
        }
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "family" => self.family = v.parse()?,
            "mode" => self.mode = if v == "auto" { None } else { Some(v.parse()?) },
            "n" => self.n = parse(key, v)?,
            "m" => self.m = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "obs_prob" => self.obs_prob = parse(key, v)?,
            "noise_factor" => self.noise_factor = parse(key, v)?,
            "density" => self.density = parse(key, v)?,
            "lambda_factor" => self.lambda_factor = parse(key, v)?,
            "mu_factor" => self.mu_factor = parse(key, v)?,
            "sparsity" => self.sparsity = parse(key, v)?,
            "sigma" => self.sigma = parse(key, v)?,
            "image" => self.image = opt_path(v),
            "mu1" => self.mu1 = parse_opt(key, v)?,
            "mu2" => self.mu2 = parse_opt(key, v)?,
            "mu3" => self.mu3 = parse_opt(key, v)?,
            "c" => self.c = parse(key, v)?,
            "l1_density" => self.l1_density = parse(key, v)?,
            "max_iters" => self.max_iters = parse(key, v)?,
            "eps" => self.eps = parse(key, v)?,
            "checkpoints" => self.checkpoints = parse_checkpoints(v)?,
            "d" => self.d = parse_opt(key, v)?,
            "weight_exponent" => self.weight_exponent = parse_opt(key, v)?,
            "kappa" => self.kappa = parse(key, v)?,
            "rho_initial" => self.rho_initial = parse(key, v)?,
            "rho_growth" => self.rho_growth = parse(key, v)?,
            "rho_policy" => self.rho_policy = v.parse()?,
            "selective_rho" => self.selective_rho = parse(key, v)?,
            "bound_stride" => self.bound_stride = parse(key, v)?,
            "penalty" => self.penalty = parse_opt(key, v)?,
            "out" => self.out = opt_path(v),
            "solution_dir" => self.solution_dir = opt_path(v),
            "dump_instance" => self.dump_instance = opt_path(v),
            "dump_protocol" => self.dump_protocol = opt_path(v),
            _ => return Err(Error::Input(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a stable order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("family", self.family.to_string()),
            ("mode", opt_string(&self.mode)),
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
            ("obs_prob", self.obs_prob.to_string()),
            ("noise_factor", self.noise_factor.to_string()),
            ("density", self.density.to_string()),
            ("lambda_factor", self.lambda_factor.to_string()),
            ("mu_factor", self.mu_factor.to_string()),
            ("sparsity", self.sparsity.to_string()),
            ("sigma", self.sigma.to_string()),
            ("image", path_string(&self.image)),
            ("mu1", opt_string(&self.mu1)),
            ("mu2", opt_string(&self.mu2)),
            ("mu3", opt_string(&self.mu3)),
            ("c", self.c.to_string()),
            ("l1_density", self.l1_density.to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("eps", self.eps.to_string()),
            ("checkpoints", checkpoints_string(&self.checkpoints)),
            ("d", opt_string(&self.d)),
            ("weight_exponent", opt_string(&self.weight_exponent)),
            ("kappa", self.kappa.to_string()),
            ("rho_initial", self.rho_initial.to_string()),
            ("rho_growth", self.rho_growth.to_string()),
            ("rho_policy", self.rho_policy.to_string()),
            ("selective_rho", self.selective_rho.to_string()),
            ("bound_stride", self.bound_stride.to_string()),
            ("penalty", opt_string(&self.penalty)),
            ("out", path_string(&self.out)),
            ("solution_dir", path_string(&self.solution_dir)),
            ("dump_instance", path_string(&self.dump_instance)),
            ("dump_protocol", path_string(&self.dump_protocol)),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("config line {}: expected `key = value`, got {raw:?}", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Input(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        for (k, p) in [("obs_prob", self.obs_prob), ("density", self.density), ("sparsity", self.sparsity), ("l1_density", self.l1_density)] {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("{k} must lie in (0,1], got {p}"));
            }
        }
        let positive = [
            ("lambda_factor", Some(self.lambda_factor)),
            ("mu_factor", Some(self.mu_factor)),
            ("sigma", Some(self.sigma)),
            ("c", Some(self.c)),
            ("eps", Some(self.eps)),
            ("kappa", Some(self.kappa)),
            ("rho_initial", Some(self.rho_initial)),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("d", self.d),
            ("penalty", self.penalty),
        ];
        for (k, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{k} must be positive, got {v}"));
                }
            }
        }
        if !(self.noise_factor >= 0.0) {
            return bad(format!("noise_factor must be nonnegative, got {}", self.noise_factor));
        }
        if !(self.rho_growth > 1.0) {
            return bad(format!("rho_growth must exceed 1, got {}", self.rho_growth));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        let constrained = self.family == Family::L1Planted;
        match (constrained, self.effective_mode()) {
            (true, Mode::Multiterm) => return bad("l1_planted runs in mode `sequential` or `simple`".into()),
            (false, Mode::Sequential | Mode::Simple) => return bad(format!("{} runs in mode `multiterm`", self.family)),
            _ => {}
        }
        if constrained && !(self.m >= 1 && self.m < self.n) {
            return bad(format!("l1_planted needs 1 ≤ m < n, got m = {}, n = {}", self.m, self.n));
        }
        if self.family == Family::ImageDecompFile && self.image.is_none() {
            return bad("image_decomp_file needs `image`".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = InstanceConfig::default();
        cfg.apply_text("family = l1_planted # comment\nmode=sequential\nn = 256\nd = 3.5\ncheckpoints = at:3;9\nout = t.csv\n").unwrap();
        assert_eq!(cfg.family, Family::L1Planted);
        assert_eq!(cfg.d, Some(3.5));
        assert_eq!(cfg.checkpoints, Checkpoints::At(vec![3, 9]));
        let mut back = InstanceConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = InstanceConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("family", "nope").is_err());
        assert!(cfg.set("n", "x").is_err());
        assert!(cfg.apply_text("n 5").is_err());
        cfg.set("obs_prob", "0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mode_must_match_family() {
        let mut cfg = InstanceConfig::default();
        cfg.mode = Some(Mode::Sequential);
        assert!(cfg.validate().is_err());
        cfg.family = Family::L1Planted;
        cfg.n = 16;
        cfg.m = 8;
        assert!(cfg.validate().is_ok());
    }
}
