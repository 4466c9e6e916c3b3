//! Dense vector and matrix helpers.
//!
//! Matrices are stored as flat row-major `Vec<f64>` together with their shape;
//! faer is only used for singular value decompositions.

use std::sync::Once;

use faer::{Mat, Par};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += a * x`
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// A thin singular value decomposition `A = U diag(s) Vᵀ` with `U` of shape
/// `rows × k`, `Vᵀ` of shape `k × cols`, `k = min(rows, cols)` and `s`
/// nonincreasing.
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v_t: DenseMatrix,
}

static THREADS: Once = Once::new();

/// Parallelism of the dense decompositions: `COMP_PROX_THREADS` workers,
/// sequential when unset so that results are reproducible.
fn configure_threads() {
    THREADS.call_once(|| {
        let n = std::env::var("COMP_PROX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(1);
        faer::set_global_parallelism(if n <= 1 { Par::Seq } else { Par::rayon(n) });
    });
}

fn to_mat(data: &[f64], rows: usize, cols: usize) -> Result<Mat<f64>> {
    if data.len() != rows * cols {
        return Err(Error::Input(format!(
            "matrix data has {} entries, shape {rows}x{cols}",
            data.len()
        )));
    }
    if !all_finite(data) {
        return Err(Error::Numerical(format!(
            "non-finite entry in {rows}x{cols} matrix passed to SVD"
        )));
    }
    configure_threads();
    Ok(Mat::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

fn no_convergence(data: &[f64], rows: usize, cols: usize) -> Error {
    Error::Numerical(format!(
        "SVD did not converge on {rows}x{cols} matrix (Frobenius norm {:e})",
        norm2(data)
    ))
}

pub fn svd(data: &[f64], rows: usize, cols: usize) -> Result<Svd> {
    let m = to_mat(data, rows, cols)?;
    let d = m.thin_svd().map_err(|_| no_convergence(data, rows, cols))?;
    let k = rows.min(cols);
    let (u, v) = (d.U(), d.V());
    let mut order: Vec<usize> = (0..k).collect();
    let s_raw: Vec<f64> = d.S().column_vector().iter().copied().collect();
    order.sort_by(|&a, &b| s_raw[b].total_cmp(&s_raw[a]));
    let mut ud = Vec::with_capacity(rows * k);
    for i in 0..rows {
        ud.extend(order.iter().map(|&c| u[(i, c)]));
    }
    let mut vd = Vec::with_capacity(k * cols);
    for &c in &order {
        vd.extend((0..cols).map(|j| v[(j, c)]));
    }
    Ok(Svd {
        u: DenseMatrix { rows, cols: k, data: ud },
        s: order.iter().map(|&c| s_raw[c]).collect(),
        v_t: DenseMatrix { rows: k, cols, data: vd },
    })
}

pub fn singular_values(data: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    let mut s = to_mat(data, rows, cols)?.singular_values().map_err(|_| no_convergence(data, rows, cols))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn nuclear_norm(data: &[f64], rows: usize, cols: usize) -> Result<f64> {
    Ok(singular_values(data, rows, cols)?.iter().sum())
}

pub fn spectral_norm(data: &[f64], rows: usize, cols: usize) -> Result<f64> {
    Ok(singular_values(data, rows, cols)?.iter().fold(0.0, |m: f64, s| m.max(*s)))
}

/// Rebuild `U diag(s) Vᵀ` as a row-major buffer.
pub fn recompose(u: &DenseMatrix, s: &[f64], v_t: &DenseMatrix) -> Vec<f64> {
    let (rows, cols) = (u.rows, v_t.cols);
    let mut out = vec![0.0; rows * cols];
    for (k, &sk) in s.iter().enumerate() {
        if sk == 0.0 {
            continue;
        }
        let vk = v_t.row(k);
        for i in 0..rows {
            let uik = u.get(i, k) * sk;
            if uik != 0.0 {
                axpy(&mut out[i * cols..(i + 1) * cols], uik, vk);
            }
        }
    }
    out
}

/// A linear map between flat coordinate spaces.
pub trait LinearMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64>;
    /// An upper bound on the operator norm induced by Euclidean norms, if known.
    fn norm_bound(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "dense matrix {rows}x{cols} given {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        spectral_norm(&self.data, self.rows, self.cols)
    }
}

impl LinearMap for DenseMatrix {
    fn input_dim(&self) -> usize {
        self.cols
    }
    fn output_dim(&self) -> usize {
        self.rows
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(&mut out, yi, self.row(i));
            }
        }
        out
    }
}

/// The identity on a space of the given dimension.
#[derive(Clone, Copy, Debug)]
pub struct IdentityMap(pub usize);

impl LinearMap for IdentityMap {
    fn input_dim(&self) -> usize {
        self.0
    }
    fn output_dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn norm_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Componentwise scaling `x ↦ d ⊙ x`.
#[derive(Clone, Debug)]
pub struct DiagonalMap(pub Vec<f64>);

impl LinearMap for DiagonalMap {
    fn input_dim(&self) -> usize {
        self.0.len()
    }
    fn output_dim(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().zip(x).map(|(d, v)| d * v).collect()
    }
    fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.apply(y)
    }
    fn norm_bound(&self) -> Option<f64> {
        Some(norm_inf(&self.0))
    }
}
