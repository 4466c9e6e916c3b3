//! The filter of achieved (objective, constraint) pairs and the gap function
//!
//! ```text
//! h(α) = min_{(p,q) ∈ Q} α(p − Opt̲) + (1 − α)q,    Gap = max_{α ∈ [0,1]} h(α).
//! ```
//!
//! `h` depends only on the lower-left convex envelope of the shifted pairs
//! `(p − Opt̲, q)`, so dominated entries are dropped on insertion and the gap
//! is read off the envelope's hull chain.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FilterEntry {
    pub p: f64,
    pub q: f64,
    pub y: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    /// Pareto-minimal entries sorted by increasing `p` (hence decreasing `q`).
    entries: Vec<FilterEntry>,
    pub opt_lb: f64,
}

impl Filter {
    pub fn new(opt_lb: f64) -> Self {
        Self { entries: Vec::new(), opt_lb }
    }

    pub fn entries(&self) -> &[FilterEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert `(p, q, y)` unless an entry dominates it; returns whether it was kept.
    pub fn insert(&mut self, p: f64, q: f64, y: Vec<Vec<f64>>) -> bool {
        if !(p.is_finite() && q.is_finite()) {
            return false;
        }
        if self.entries.iter().any(|e| e.p <= p && e.q <= q) {
            return false;
        }
        self.entries.retain(|e| !(p <= e.p && q <= e.q));
        let at = self.entries.partition_point(|e| e.p < p);
        self.entries.insert(at, FilterEntry { p, q, y });
        true
    }

    /// Raise `Opt̲`; lower values are ignored.
    pub fn raise_lower_bound(&mut self, l: f64) -> bool {
        if l > self.opt_lb {
            self.opt_lb = l;
            true
        } else {
            false
        }
    }

    fn shifted(&self, i: usize) -> (f64, f64) {
        (self.entries[i].p - self.opt_lb, self.entries[i].q)
    }

    /// Indices of the lower convex hull, ordered from the minimal-`q` vertex
    /// (active at `α = 0`) to the minimal-`p` vertex (active at `α = 1`).
    /// Collinear interior points are dropped.
    fn hull(&self) -> Vec<usize> {
        let mut chain: Vec<usize> = Vec::with_capacity(self.entries.len());
        for i in 0..self.entries.len() {
            while chain.len() >= 2 {
                let (o, a) = (self.shifted(chain[chain.len() - 2]), self.shifted(chain[chain.len() - 1]));
                let b = self.shifted(i);
                let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
                if cross <= 0.0 {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(i);
        }
        chain.reverse();
        chain
    }
}

fn line(x: f64, y: f64, alpha: f64) -> f64 {
    alpha * x + (1.0 - alpha) * y
}

/// `h(α)` evaluated over all entries.
pub fn h_eval(filter: &Filter, alpha: f64) -> Result<f64> {
    if filter.is_empty() {
        return Err(Error::EmptyFilter);
    }
    Ok((0..filter.len())
        .map(|i| {
            let (x, y) = filter.shifted(i);
            line(x, y, alpha)
        })
        .fold(f64::INFINITY, f64::min))
}

/// `Gap`, a maximizer `α*` and a convex combination of at most two entries
/// whose mixed pair `(p̄ − Opt̲, q̄)` has both coordinates at most `Gap`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapSolution {
    pub gap: f64,
    pub alpha: f64,
    /// `(entry index, weight)`.
    pub weights: Vec<(usize, f64)>,
    pub combined: Vec<Vec<f64>>,
}

/// Pieces of `h`: `(α_lo, α_hi, entry)` with consecutive breakpoints.
fn pieces(filter: &Filter, chain: &[usize]) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::with_capacity(chain.len());
    let mut lo = 0.0;
    for j in 0..chain.len() {
        let hi = if j + 1 < chain.len() {
            let (a, b) = (filter.shifted(chain[j]), filter.shifted(chain[j + 1]));
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            (dy / (dy - dx)).clamp(lo, 1.0)
        } else {
            1.0
        };
        out.push((lo, hi, chain[j]));
        lo = hi;
    }
    out
}

pub fn gap_and_weights(filter: &Filter) -> Result<GapSolution> {
    if filter.is_empty() {
        return Err(Error::EmptyFilter);
    }
    let chain = filter.hull();
    let s = |i: usize| {
        let (x, y) = filter.shifted(i);
        x - y
    };
    let first = chain[0];
    let last = *chain.last().unwrap_or(&first);
    let (gap, alpha, weights) = if s(first) <= 0.0 {
        // h decreases from α = 0
        (filter.shifted(first).1, 0.0, vec![(first, 1.0)])
    } else if s(last) > 0.0 {
        // h increases up to α = 1
        (filter.shifted(last).0, 1.0, vec![(last, 1.0)])
    } else {
        let b = chain.iter().position(|&i| s(i) <= 0.0).unwrap_or(chain.len() - 1);
        let (ia, ib) = (chain[b - 1], chain[b]);
        let (sa, sb) = (s(ia), s(ib));
        let wa = -sb / (sa - sb);
        let (pa, pb) = (filter.shifted(ia), filter.shifted(ib));
        let (dx, dy) = (pb.0 - pa.0, pb.1 - pa.1);
        let alpha = (dy / (dy - dx)).clamp(0.0, 1.0);
        let gap = line(pa.0, pa.1, alpha).min(line(pb.0, pb.1, alpha));
        let weights = if wa >= 1.0 {
            vec![(ia, 1.0)]
        } else if wa <= 0.0 {
            vec![(ib, 1.0)]
        } else {
            vec![(ia, wa), (ib, 1.0 - wa)]
        };
        (gap, alpha, weights)
    };
    let combined = combine(filter, &weights);
    Ok(GapSolution { gap, alpha, weights, combined })
}

fn combine(filter: &Filter, weights: &[(usize, f64)]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = filter.entries[weights[0].0].y.iter().map(|b| vec![0.0; b.len()]).collect();
    for &(i, w) in weights {
        for (o, b) in out.iter_mut().zip(&filter.entries[i].y) {
            crate::linalg::axpy(o, w, b);
        }
    }
    out
}

/// `Δ = {α ∈ [0,1] : h(α) ≥ 0}`, or `None` when `Gap < 0`.
pub fn delta_segment(filter: &Filter) -> Result<Option<(f64, f64)>> {
    if filter.is_empty() {
        return Err(Error::EmptyFilter);
    }
    let chain = filter.hull();
    let ps = pieces(filter, &chain);
    let value = |i: usize, a: f64| {
        let (x, y) = filter.shifted(i);
        line(x, y, a)
    };
    let root = |i: usize| {
        let (x, y) = filter.shifted(i);
        y / (y - x)
    };
    let mut left = None;
    for &(lo, hi, i) in &ps {
        if value(i, lo) >= 0.0 {
            left = Some(lo);
            break;
        }
        if value(i, hi) >= 0.0 {
            left = Some(root(i).clamp(lo, hi));
            break;
        }
    }
    let mut right = None;
    for &(lo, hi, i) in ps.iter().rev() {
        if value(i, hi) >= 0.0 {
            right = Some(hi);
            break;
        }
        if value(i, lo) >= 0.0 {
            right = Some(root(i).clamp(lo, hi));
            break;
        }
    }
    Ok(match (left, right) {
        (Some(l), Some(r)) if l <= r => Some((l, r)),
        _ => None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StageDecision {
    Continue,
    NewStage(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageState {
    pub alpha: f64,
    pub segment: (f64, f64),
    pub stage_index: usize,
}

impl Default for StageState {
    fn default() -> Self {
        Self { alpha: 0.5, segment: (0.0, 1.0), stage_index: 1 }
    }
}

/// Keep `α` while it lies in the closed middle third of `segment`,
/// otherwise move to the segment's midpoint.
pub fn stage_control(state: &StageState, segment: (f64, f64)) -> StageDecision {
    let (a, b) = segment;
    let third = (b - a) / 3.0;
    if state.alpha >= a + third && state.alpha <= b - third {
        StageDecision::Continue
    } else {
        StageDecision::NewStage(0.5 * (a + b))
    }
}
