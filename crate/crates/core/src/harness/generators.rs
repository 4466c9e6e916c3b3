//! Seeded instance generators.
//!
//! All randomness flows from a [`ChaCha20Rng`] seeded with the instance seed,
//! so an instance is a pure function of its parameters on every platform.

use std::sync::Arc;

use faer::Mat;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::linalg::{self, norm1, norm2, DenseMatrix, IdentityMap, LinearMap};
use crate::multiterm::{CouplingTerm, MaskedLeastSquares, McLowerBounder, MultiTermConfig, MultiTermProblem, ResidualNorm, ZeroSmooth};
use crate::prox_core::{BaseSet, BlockShape, BlockSpec, EpigraphBlock, Nonsmooth};
use crate::semisep::ConstrainedProblem;

pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn free_block(name: &str, shape: BlockShape, nonsmooth: Nonsmooth) -> BlockSpec {
    BlockSpec::new(name, shape, EpigraphBlock::new(BaseSet::WholeSpace, nonsmooth))
}

/// `0.1·Σ|y_ij| / n²`
pub fn mc_sigma(y: &[f64], n: usize) -> f64 {
    0.1 * norm1(y) / (n * n) as f64
}

/// `D = √(n²/M · max(‖b‖² − Mσ², 1))`
pub fn mc_distance_guess(n: usize, b: &[f64], sigma: f64) -> f64 {
    let m = b.len().max(1) as f64;
    ((n * n) as f64 / m * (norm2(b).powi(2) - m * sigma * sigma).max(1.0)).sqrt()
}

/// `Σ_{i≤k} e_i f_iᵀ` with Gaussian factors whose entries survive with a
/// probability chosen so that about `density` of the product is nonzero.
pub fn sparse_low_rank(rng: &mut ChaCha20Rng, n: usize, k: usize, density: f64) -> Vec<f64> {
    // an entry is nonzero iff some pair of factors is nonzero there
    let keep = (1.0 - (1.0 - density).powf(1.0 / k.max(1) as f64)).sqrt();
    let mut y = vec![0.0; n * n];
    for _ in 0..k {
        let factor = |rng: &mut ChaCha20Rng| -> Vec<f64> {
            (0..n).map(|_| {
                let g: f64 = rng.sample(StandardNormal);
                if rng.random::<f64>() < keep { g } else { 0.0 }
            }).collect()
        };
        let e = factor(rng);
        let f = factor(rng);
        for i in 0..n {
            if e[i] != 0.0 {
                for j in 0..n {
                    y[i * n + j] += e[i] * f[j];
                }
            }
        }
    }
    y
}

/// `min_y ½‖P_Ω y − b‖² + λ‖y‖₁ + μ‖y‖_nuc` over `n×n` matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McInstance {
    pub n: usize,
    /// Observed cells as row-major flat indices.
    pub mask: Vec<usize>,
    pub b: Vec<f64>,
    pub sigma: f64,
    pub lambda: f64,
    pub mu: f64,
    pub d: f64,
    pub y_sharp: Vec<f64>,
    /// Planted optimal value, when known.
    pub opt: Option<f64>,
    /// Subgradients `(g₁, g₂)` certifying optimality of `y_sharp`.
    pub certificate: Option<(Vec<f64>, Vec<f64>)>,
}

impl McInstance {
    pub fn objective(&self, y: &[f64]) -> Result<f64> {
        let fit: f64 = self.mask.iter().zip(&self.b).map(|(&i, b)| (y[i] - b).powi(2)).sum();
        Ok(0.5 * fit + self.lambda * norm1(y) + self.mu * linalg::nuclear_norm(y, self.n, self.n)?)
    }

    /// `y⁰` carries the ℓ1 term, the coupled copy `y¹ = y⁰` the nuclear one.
    pub fn problem(&self) -> Result<MultiTermProblem> {
        let n = self.n;
        let shape = BlockShape::matrix(n, n);
        Ok(MultiTermProblem {
            base: vec![free_block("y0", shape, Nonsmooth::L1 { weight: self.lambda })],
            base_smooth: Arc::new(MaskedLeastSquares::new(n * n, self.mask.clone(), self.b.clone())?),
            terms: vec![CouplingTerm {
                block: free_block("y1", shape, Nonsmooth::Nuclear { weight: self.mu }),
                source: 0,
                map: Arc::new(IdentityMap(n * n)),
                offset: vec![0.0; n * n],
                smooth: Arc::new(ZeroSmooth { n_blocks: 1 }),
                psi_lipschitz: None,
            }],
            start: Some(vec![self.observed_matrix()]),
        })
    }

    /// `P_Ω*b`: observations in their cells, zeros elsewhere.
    pub fn observed_matrix(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.n * self.n];
        for (&i, &b) in self.mask.iter().zip(&self.b) {
            y[i] = b;
        }
        y
    }

    /// Solver settings used for this family: weights `1/D` on the y-blocks.
    pub fn solver_config(&self, max_iters: usize) -> MultiTermConfig {
        let mut cfg = MultiTermConfig { max_iters, ..MultiTermConfig::default() };
        cfg.aggregation.d = self.d;
        cfg.aggregation.exponent = 1.0;
        cfg
    }

    pub fn bounder(&self) -> McLowerBounder {
        McLowerBounder::new(self.lambda, self.b.clone())
    }

    /// Re-check the planted optimality certificate.
    pub fn verify(&self) -> Result<f64> {
        let (g1, g2) = self.certificate.as_ref().ok_or_else(|| Error::Verification("instance has no planted optimum".into()))?;
        let n = self.n;
        if self.mask.len() != n * n {
            return Err(Error::Verification("planted instances observe every cell".into()));
        }
        let scale = 1.0 + linalg::norm_inf(&self.b);
        let mut worst: f64 = 0.0;
        for i in 0..n * n {
            let r = self.y_sharp[i] - self.b[i] + self.lambda * g1[i] + self.mu * g2[i];
            worst = worst.max(r.abs());
            let y = self.y_sharp[i];
            let sub_ok = if y != 0.0 { g1[i] == y.signum() } else { g1[i].abs() <= 1.0 };
            if !sub_ok {
                return Err(Error::Verification(format!("g₁ is not an ℓ1 subgradient at cell {i}")));
            }
        }
        if worst > 1e-10 * scale {
            return Err(Error::Verification(format!("optimality residual {worst:e}")));
        }
        let spec = linalg::spectral_norm(g2, n, n)?;
        let nuc = linalg::nuclear_norm(&self.y_sharp, n, n)?;
        if spec > 1.0 + 1e-10 || (linalg::dot(g2, &self.y_sharp) - nuc).abs() > 1e-10 * (1.0 + nuc) {
            return Err(Error::Verification(format!("g₂ is not a nuclear subgradient (spectral norm {spec})")));
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McParams {
    pub obs_prob: f64,
    pub noise_factor: f64,
    pub density: f64,
    /// Weights as multiples of `σ`.
    pub lambda_factor: f64,
    pub mu_factor: f64,
}

impl Default for McParams {
    fn default() -> Self {
        Self { obs_prob: 0.25, noise_factor: 0.1, density: 0.1, lambda_factor: 10.0, mu_factor: 10.0 }
    }
}

impl McParams {
    fn validate(&self, n: usize) -> Result<()> {
        if n < 2 {
            return input(format!("n must be at least 2, got {n}"));
        }
        if !(self.obs_prob > 0.0 && self.obs_prob <= 1.0) || !(self.density > 0.0 && self.density <= 1.0) {
            return input("probabilities must lie in (0,1]");
        }
        if !(self.noise_factor >= 0.0 && self.lambda_factor > 0.0 && self.mu_factor > 0.0) {
            return input("weights must be positive");
        }
        Ok(())
    }
}

pub fn gen_matrix_completion(n: usize, seed: u64, params: &McParams) -> Result<McInstance> {
    params.validate(n)?;
    let mut rng = seeded(seed);
    let y_sharp = sparse_low_rank(&mut rng, n, (n / 4).max(1), params.density);
    let sigma = params.noise_factor * norm1(&y_sharp) / (n * n) as f64;
    let mut mask = Vec::new();
    let mut b = Vec::new();
    for (i, y) in y_sharp.iter().enumerate() {
        let xi: f64 = rng.sample(StandardNormal);
        if rng.random::<f64>() < params.obs_prob {
            mask.push(i);
            b.push(y + sigma * xi);
        }
    }
    if mask.is_empty() {
        return input("no cell was observed");
    }
    let d = mc_distance_guess(n, &b, sigma);
    Ok(McInstance {
        n,
        mask,
        b,
        sigma,
        lambda: params.lambda_factor * sigma,
        mu: params.mu_factor * sigma,
        d,
        y_sharp,
        opt: None,
        certificate: None,
    })
}

/// Subgradients `g₁ ∈ ∂‖y‖₁`, `g₂ ∈ ∂‖y‖_nuc` with random free parts, or
/// `None` when the numerical rank of `y` is ambiguous.
pub fn planted_subgradients(rng: &mut ChaCha20Rng, y: &[f64], n: usize) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let g1: Vec<f64> = y.iter().map(|&v| if v != 0.0 { v.signum() } else { rng.random_range(-1.0..=1.0) }).collect();
    let svd = linalg::svd(y, n, n)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let (hi, lo) = (1e-9 * smax, 1e-13 * smax.max(1.0));
    if svd.s.iter().any(|&s| s > lo && s <= hi) {
        return Ok(None);
    }
    let r = svd.s.iter().filter(|&&s| s > hi).count();
    let u = Mat::from_fn(n, r, |i, k| svd.u.get(i, k));
    let v = Mat::from_fn(n, r, |j, k| svd.v_t.get(k, j));
    let noise = gaussian(rng, n * n);
    let g = Mat::from_fn(n, n, |i, j| noise[i * n + j]);
    let pu = Mat::<f64>::identity(n, n) - &u * u.transpose();
    let pv = Mat::<f64>::identity(n, n) - &v * v.transpose();
    let w = &pu * &g * &pv;
    let mut w = row_major(&w);
    let wn = linalg::spectral_norm(&w, n, n)?;
    if wn > 0.0 {
        // spectral norm in (0, 1): the free part stays strictly inside the ball
        w.iter_mut().for_each(|x| *x *= 0.5 / wn);
    }
    let uv = row_major(&(&u * v.transpose()));
    let g2 = uv.iter().zip(&w).map(|(a, b)| a + b).collect();
    Ok(Some((g1, g2)))
}

fn row_major(m: &Mat<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Build `b = y + λg₁ + μg₂` so that `y` minimizes the fully observed problem.
pub fn plant_observations(y: &[f64], n: usize, lambda: f64, mu: f64, rng: &mut ChaCha20Rng) -> Result<Option<(Vec<f64>, Vec<f64>, Vec<f64>)>> {
    let Some((g1, g2)) = planted_subgradients(rng, y, n)? else {
        return Ok(None);
    };
    let b = (0..n * n).map(|i| y[i] + lambda * g1[i] + mu * g2[i]).collect();
    Ok(Some((b, g1, g2)))
}

/// A fully observed instance whose optimum `y_sharp` and value are known.
/// Seeds with an ambiguous numerical rank are skipped; the seed actually used
/// is `seed + attempts`.
pub fn gen_mc_known_opt(n: usize, seed: u64, params: &McParams) -> Result<(McInstance, u64)> {
    params.validate(n)?;
    for attempt in 0..16u64 {
        let mut rng = seeded(seed.wrapping_add(attempt));
        let y_sharp = sparse_low_rank(&mut rng, n, (n / 4).max(1), params.density);
        let sigma = mc_sigma(&y_sharp, n);
        let (lambda, mu) = (params.lambda_factor * sigma.max(f64::MIN_POSITIVE), params.mu_factor * sigma.max(f64::MIN_POSITIVE));
        let Some((b, g1, g2)) = plant_observations(&y_sharp, n, lambda, mu, &mut rng)? else {
            continue;
        };
        let mut inst = McInstance {
            n,
            mask: (0..n * n).collect(),
            d: mc_distance_guess(n, &b, sigma),
            b,
            sigma,
            lambda,
            mu,
            y_sharp,
            opt: None,
            certificate: Some((g1, g2)),
        };
        inst.opt = Some(inst.objective(&inst.y_sharp)?);
        inst.verify()?;
        return Ok((inst, attempt));
    }
    Err(Error::Verification("no seed gave a well-determined rank".into()))
}

/// Rows of the orthonormal DCT-II basis, scaled by `√n` so that entries are of
/// unit order like those of a Fourier matrix.
pub fn dct_rows(n: usize, rows: &[usize]) -> DenseMatrix {
    let nf = n as f64;
    let mut data = Vec::with_capacity(rows.len() * n);
    for &k in rows {
        let c = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for j in 0..n {
            data.push(nf.sqrt() * c * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / nf).cos());
        }
    }
    DenseMatrix { rows: rows.len(), cols: n, data }
}

/// `min{‖x‖₁ : Ax = b, ‖x‖₂ ≤ 1}` with planted primal and dual solutions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1Instance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub r_star: f64,
    pub l_bound: f64,
}

impl L1Instance {
    pub fn n(&self) -> usize {
        self.a.cols
    }

    pub fn m(&self) -> usize {
        self.a.rows
    }

    pub fn problem(&self) -> ConstrainedProblem {
        ConstrainedProblem {
            blocks: vec![BlockSpec::new(
                "x",
                BlockShape::vector(self.n()),
                EpigraphBlock::new(BaseSet::EuclideanBall { radius: 1.0 }, Nonsmooth::L1 { weight: 1.0 }),
            )],
            smooth: Arc::new(ZeroSmooth { n_blocks: 1 }),
            maps: vec![Arc::new(self.a.clone())],
            b: self.b.clone(),
            l_bound: self.l_bound,
        }
    }

    /// `max((‖x‖₁ − ‖x*‖₁)/‖x*‖₁, ‖Ax − b‖₂)`
    pub fn eps_of(&self, x: &[f64]) -> f64 {
        let opt = norm1(&self.x_star);
        let rel = (norm1(x) - opt) / opt;
        rel.max(norm2(&linalg::sub(&self.a.apply(x), &self.b)))
    }

    /// Re-check `Ax* = b` and `Aᵀλ* ∈ ∂‖x*‖₁`; returns the worst residual.
    pub fn verify(&self) -> Result<f64> {
        let tol = 1e-10;
        let r = norm2(&linalg::sub(&self.a.apply(&self.x_star), &self.b));
        let g = self.a.apply_adjoint(&self.lambda_star);
        let mut worst = r;
        for (x, g) in self.x_star.iter().zip(&g) {
            let dev = if *x != 0.0 { (g - x.signum()).abs() } else { (g.abs() - 1.0).max(0.0) };
            worst = worst.max(dev);
        }
        if worst > tol {
            return Err(Error::Verification(format!("planted ℓ1 optimality residual {worst:e}")));
        }
        Ok(worst)
    }
}

pub fn gen_l1_planted(n: usize, m: usize, c: f64, density: f64, seed: u64) -> Result<L1Instance> {
    if m < 1 || m >= n {
        return input(format!("need 1 ≤ m < n, got m = {m}, n = {n}"));
    }
    if !(c > 0.0) || !(density > 0.0 && density <= 1.0) {
        return input("dual scale must be positive and density in (0,1]");
    }
    let mut rng = seeded(seed);
    let mut x: Vec<f64> = gaussian(&mut rng, n).into_iter().map(|g| if rng.random::<f64>() < density { g } else { 0.0 }).collect();
    if x.iter().all(|v| *v == 0.0) {
        x[rng.random_range(0..n)] = 1.0;
    }
    let s = 0.5 / norm2(&x);
    x.iter_mut().for_each(|v| *v *= s);
    let r_star = c * n as f64;
    let mut lam = gaussian(&mut rng, m);
    let s = r_star / norm2(&lam);
    lam.iter_mut().for_each(|v| *v *= s);
    let mut rows = sample(&mut rng, n, m).into_vec();
    rows.sort_unstable();
    let f_hat = dct_rows(n, &rows);
    let sub: Vec<f64> = x.iter().map(|&v| if v != 0.0 { v.signum() } else { rng.random_range(-1.0..=1.0) }).collect();
    let sqrt_n = (n as f64).sqrt();
    let ft_lam = f_hat.apply_adjoint(&lam);
    let q: Vec<f64> = sub.iter().zip(&ft_lam).map(|(s, f)| s - f / sqrt_n).collect();
    let lam_sq = norm2(&lam).powi(2);
    let p: Vec<f64> = lam.iter().map(|l| l / lam_sq).collect();
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            data.push(f_hat.get(i, j) / sqrt_n + p[i] * q[j]);
        }
    }
    let a = DenseMatrix::new(m, n, data)?;
    let b = a.apply(&x);
    let l_bound = sqrt_n.max(a.spectral_norm()? + norm2(&b));
    let inst = L1Instance { a, b, x_star: x, lambda_star: lam, r_star, l_bound };
    inst.verify().map_err(|e| Error::Verification(format!("generator produced an inconsistent instance: {e}")))?;
    Ok(inst)
}

/// Forward differences `T: ℝ^{n×n} → ℝ^{2n(n−1)}`: vertical differences
/// `y[i+1,j] − y[i,j]` ordered column by column, then horizontal differences
/// `y[i,j+1] − y[i,j]` ordered row by row. Images are row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TvOperator {
    pub n: usize,
}

impl TvOperator {
    fn half(&self) -> usize {
        self.n * (self.n - 1)
    }
}

impl LinearMap for TvOperator {
    fn input_dim(&self) -> usize {
        self.n * self.n
    }
    fn output_dim(&self) -> usize {
        2 * self.half()
    }
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; 2 * self.half()];
        for j in 0..n {
            for i in 0..n - 1 {
                out[j * (n - 1) + i] = y[(i + 1) * n + j] - y[i * n + j];
            }
        }
        let h = self.half();
        for i in 0..n {
            for j in 0..n - 1 {
                out[h + i * (n - 1) + j] = y[i * n + j + 1] - y[i * n + j];
            }
        }
        out
    }
    fn apply_adjoint(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n - 1 {
                let v = w[j * (n - 1) + i];
                y[(i + 1) * n + j] += v;
                y[i * n + j] -= v;
            }
        }
        let h = self.half();
        for i in 0..n {
            for j in 0..n - 1 {
                let v = w[h + i * (n - 1) + j];
                y[i * n + j + 1] += v;
                y[i * n + j] -= v;
            }
        }
        y
    }
    fn norm_bound(&self) -> Option<f64> {
        // each coordinate enters at most four differences with unit weight
        Some(2.0 * 2f64.sqrt())
    }
}

/// `min ‖y¹ + y² + y³ − b‖₂ + μ₁‖y¹‖_nuc + μ₂‖y²‖₁ + μ₃‖Ty³‖₁`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImageInstance {
    pub n: usize,
    pub b: Vec<f64>,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
}

impl ImageInstance {
    pub fn objective(&self, y: &[Vec<f64>]) -> Result<f64> {
        let n = self.n;
        let mut r = linalg::sub(&y[0], &self.b);
        linalg::axpy(&mut r, 1.0, &y[1]);
        linalg::axpy(&mut r, 1.0, &y[2]);
        Ok(norm2(&r)
            + self.mu1 * linalg::nuclear_norm(&y[0], n, n)?
            + self.mu2 * norm1(&y[1])
            + self.mu3 * norm1(&TvOperator { n }.apply(&y[2])))
    }

    /// `‖A‖₂,₂ + μ₃√(2n(n−1))` with `A` the identity.
    pub fn rho_floor(&self) -> f64 {
        1.0 + self.mu3 * ((2 * self.n * (self.n - 1)) as f64).sqrt()
    }

    /// Initial distance guess `D = ‖b‖₂`.
    pub fn distance_guess(&self) -> f64 {
        norm2(&self.b).max(1.0)
    }

    /// Solver settings used for this family: weights `1/D²` with `D`
    /// doubled whenever the search point's norm exceeds 20% of it.
    pub fn solver_config(&self, max_iters: usize) -> MultiTermConfig {
        let mut cfg = MultiTermConfig { max_iters, ..MultiTermConfig::default() };
        cfg.aggregation.d = self.distance_guess();
        cfg.aggregation.exponent = 2.0;
        cfg.d_rescale = Some(0.2);
        cfg
    }
}

/// Base blocks `y¹` (nuclear), `y²` (ℓ1), `y³` (free); one coupled block
/// `y⁰ = Ty³` carrying `μ₃‖·‖₁`; the fit term is a ball-constrained maximum.
pub fn build_image_problem(inst: &ImageInstance) -> Result<MultiTermProblem> {
    let n = inst.n;
    if n < 2 || inst.b.len() != n * n {
        return input(format!("image must be n×n with n ≥ 2, got {} values for n = {n}", inst.b.len()));
    }
    if !(inst.mu1 > 0.0 && inst.mu2 > 0.0 && inst.mu3 > 0.0) {
        return input("all weights must be positive");
    }
    let shape = BlockShape::matrix(n, n);
    let tv = TvOperator { n };
    let m = tv.output_dim();
    Ok(MultiTermProblem {
        base: vec![
            free_block("y1", shape, Nonsmooth::Nuclear { weight: inst.mu1 }),
            free_block("y2", shape, Nonsmooth::L1 { weight: inst.mu2 }),
            free_block("y3", shape, Nonsmooth::None),
        ],
        base_smooth: Arc::new(ResidualNorm {
            n_blocks: 3,
            map: Arc::new(IdentityMap(n * n)),
            b: inst.b.clone(),
            z_shape: BlockShape::vector(n * n),
            radius: 1.0,
        }),
        terms: vec![CouplingTerm {
            block: free_block("y0", BlockShape::vector(m), Nonsmooth::L1 { weight: inst.mu3 }),
            source: 2,
            map: Arc::new(tv),
            offset: vec![0.0; m],
            smooth: Arc::new(ZeroSmooth { n_blocks: 1 }),
            psi_lipschitz: Some(inst.mu3 * (m as f64).sqrt()),
        }],
        start: None,
    })
}

/// Low rank `⌊√n⌋` plus `sparsity`-sparse plus Gaussian noise of level `sigma`,
/// with weights `μ₁ = 10σ`, `μ₂ = μ₃ = σ`.
pub fn gen_image_synthetic(n: usize, sparsity: f64, sigma: f64, seed: u64) -> Result<ImageInstance> {
    if n < 2 {
        return input(format!("n must be at least 2, got {n}"));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) || !(sigma > 0.0) {
        return input("sparsity must lie in (0,1] and the noise level must be positive");
    }
    let mut rng = seeded(seed);
    let r = ((n as f64).sqrt().floor() as usize).max(1);
    let u = gaussian(&mut rng, n * r);
    let v = gaussian(&mut rng, n * r);
    let scale = 1.0 / (r as f64).sqrt();
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = scale * (0..r).map(|k| u[i * r + k] * v[j * r + k]).sum::<f64>();
        }
    }
    for v in b.iter_mut() {
        let s: f64 = rng.sample(StandardNormal);
        if rng.random::<f64>() < sparsity {
            *v += s;
        }
        let e: f64 = rng.sample(StandardNormal);
        *v += sigma * e;
    }
    Ok(ImageInstance { n, b, mu1: 10.0 * sigma, mu2: sigma, mu3: sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_of_all_ones() {
        assert!((mc_sigma(&[1.0; 4], 2) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mc_weights_follow_sigma() {
        let inst = gen_matrix_completion(32, 5, &McParams::default()).unwrap();
        assert_eq!(inst.lambda, 10.0 * inst.sigma);
        assert_eq!(inst.mu, 10.0 * inst.sigma);
        assert!(inst.d > 0.0);
    }

    #[test]
    fn observation_count_concentrates() {
        let n = 40;
        let (mean, sd) = (0.25 * (n * n) as f64, (0.25 * 0.75 * (n * n) as f64).sqrt());
        for seed in 0..5 {
            let m = gen_matrix_completion(n, seed, &McParams::default()).unwrap().mask.len() as f64;
            assert!((m - mean).abs() <= 5.0 * sd);
        }
    }

    #[test]
    fn density_is_near_target() {
        let mut rng = seeded(3);
        let y = sparse_low_rank(&mut rng, 128, 32, 0.1);
        let frac = y.iter().filter(|v| **v != 0.0).count() as f64 / y.len() as f64;
        assert!((frac - 0.1).abs() < 0.03, "{frac}");
    }

    #[test]
    fn zero_matrix_is_optimal_for_its_planted_data() {
        let n = 4;
        let mut rng = seeded(11);
        let (b, _, g2) = plant_observations(&[0.0; 16], n, 0.3, 0.2, &mut rng).unwrap().unwrap();
        assert!(linalg::spectral_norm(&g2, n, n).unwrap() <= 1.0 + 1e-12);
        let inst = McInstance { n, mask: (0..16).collect(), b, sigma: 0.0, lambda: 0.3, mu: 0.2, d: 1.0, y_sharp: vec![0.0; 16], opt: None, certificate: None };
        let f0 = inst.objective(&[0.0; 16]).unwrap();
        for _ in 0..100 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-1e-2..1e-2)).collect();
            assert!(inst.objective(&y).unwrap() >= f0 - 1e-12);
        }
    }

    #[test]
    fn diagonal_planted_subgradient() {
        let mut rng = seeded(2);
        let (_, g2) = planted_subgradients(&mut rng, &[1.0, 0.0, 0.0, 0.0], 2).unwrap().unwrap();
        assert!((g2[0] - 1.0).abs() < 1e-12 && g2[1].abs() < 1e-12 && g2[2].abs() < 1e-12 && g2[3].abs() <= 1.0);
    }

    #[test]
    fn known_opt_instances_verify() {
        let (inst, _) = gen_mc_known_opt(16, 1, &McParams::default()).unwrap();
        assert!(inst.verify().unwrap() <= 1e-10);
        assert!(inst.opt.unwrap() > 0.0);
    }

    #[test]
    fn l1_planted_identities() {
        let inst = gen_l1_planted(32, 16, 1.0, 0.2, 4).unwrap();
        let p_dot: f64 = {
            // pᵀλ* = 1 means Aᵀλ* − F̂ᵀλ*/√n recovers q exactly
            let g = inst.a.apply_adjoint(&inst.lambda_star);
            g.iter().zip(&inst.x_star).filter(|(_, x)| **x != 0.0).map(|(g, x)| g * x.signum()).sum::<f64>()
        };
        let support = inst.x_star.iter().filter(|x| **x != 0.0).count() as f64;
        assert!((p_dot - support).abs() < 1e-9);
        assert!(inst.eps_of(&inst.x_star).abs() < 1e-12);
        assert!((norm2(&inst.lambda_star) - 32.0).abs() < 1e-9);
    }

    #[test]
    fn dct_rows_are_orthogonal() {
        let f = dct_rows(8, &[0, 3, 5]);
        for i in 0..3 {
            for j in 0..3 {
                let d = linalg::dot(f.row(i), f.row(j)) / 8.0;
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tv_examples() {
        let t = TvOperator { n: 2 };
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(norm1(&t.apply(&y)), 6.0);
        assert!(t.apply(&[5.0; 4]).iter().all(|v| *v == 0.0));
        let mut rng = seeded(9);
        let t = TvOperator { n: 7 };
        for _ in 0..10 {
            let y = gaussian(&mut rng, 49);
            let w = gaussian(&mut rng, t.output_dim());
            assert!((linalg::dot(&t.apply(&y), &w) - linalg::dot(&y, &t.apply_adjoint(&w))).abs() < 1e-10);
        }
        let dense: Vec<f64> = (0..49).flat_map(|j| {
            let mut e = vec![0.0; 49];
            e[j] = 1.0;
            t.apply(&e)
        }).collect();
        // column-major dense Tᵀ, same spectral norm as T
        let spec = linalg::spectral_norm(&dense, 49, t.output_dim()).unwrap();
        assert!(spec <= t.norm_bound().unwrap() + 1e-12);
    }

    #[test]
    fn image_problem_objective_matches() {
        let inst = gen_image_synthetic(6, 0.05, 0.01, 1).unwrap();
        let p = build_image_problem(&inst).unwrap();
        let mut rng = seeded(4);
        let y: Vec<Vec<f64>> = (0..3).map(|_| gaussian(&mut rng, 36)).collect();
        assert!((p.objective(&y).unwrap() - inst.objective(&y).unwrap()).abs() < 1e-10);
    }
}
