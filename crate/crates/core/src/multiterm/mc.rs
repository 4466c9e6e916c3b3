//! Certificate lower bounds for ℓ1 + nuclear matrix completion.
//!
//! Every `y` satisfies `υ(y) ≥ ϑ⁺(‖y‖₁) = λ‖y‖₁ + ϑ(‖y‖₁)`, where
//! `ϑ(r) = min{½‖v − b‖² : ‖v‖₁ ≤ r}` is nonincreasing. Given an upper bound
//! `υ_best ≥ Opt`, any minimizer therefore has `‖y*‖₁ ≤ R_t`, the right end of
//! the `υ_best`-sublevel set of the convex `ϑ⁺`. Capping the epigraph
//! scalars by `λR⁺` and `μR⁺` gives a bounded domain containing a minimizer
//! of the penalized problem, over which the resolution is finite.

use super::solve::{BoundContext, LowerBounder};
use crate::certificates::{BlockDomain, NormKind, ResolutionDomain};
use crate::error::{Error, Result};
use crate::linalg::norm1;
use crate::prox_core::{capped_simplex_project, BaseSet, Layout, Nonsmooth};

/// `ϑ⁺(r) = λr + min{½‖v − b‖² : ‖v‖₁ ≤ r}`
pub fn theta_plus(b: &[f64], lambda: f64, r: f64) -> f64 {
    let v = capped_simplex_project(b, r);
    let d: f64 = b.iter().zip(&v).map(|(b, v)| (b.abs() - v).powi(2)).sum();
    lambda * r + 0.5 * d
}

/// `R_t = max{r ≥ 0 : ϑ⁺(r) ≤ υ_best}`, rounded up by bisection so the
/// returned value never underestimates the true radius.
pub fn mc_radius_bound(b: &[f64], lambda: f64, upsilon_best: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Bound(format!("ℓ1 weight must be positive, got {lambda}")));
    }
    // ϑ⁺ is minimized where the water-filling threshold equals λ
    let r_min: f64 = b.iter().map(|x| (x.abs() - lambda).max(0.0)).sum();
    if theta_plus(b, lambda, r_min) > upsilon_best {
        return Err(Error::Bound(format!(
            "upper bound {upsilon_best} lies below min ϑ⁺ = {}",
            theta_plus(b, lambda, r_min)
        )));
    }
    // ϑ⁺(r) ≥ λr, so the sublevel set ends before υ_best/λ
    let (mut lo, mut hi) = (r_min, (upsilon_best / lambda).max(r_min));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if theta_plus(b, lambda, mid) <= upsilon_best {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Domain whose ℓ1/nuclear epigraph scalars are capped at `weight·r_plus`
/// and whose plain ball blocks are kept as they are.
pub fn capped_domain(layout: &Layout, r_plus: f64) -> Result<ResolutionDomain> {
    let blocks = layout
        .blocks
        .iter()
        .map(|b| match (b.epigraph.nonsmooth, b.epigraph.base_set) {
            (Nonsmooth::L1 { weight }, BaseSet::WholeSpace) => {
                Ok(BlockDomain::EpigraphCapped { kind: NormKind::L1, weight, norm_cap: r_plus, shape: b.shape })
            }
            (Nonsmooth::Nuclear { weight }, BaseSet::WholeSpace) => {
                Ok(BlockDomain::EpigraphCapped { kind: NormKind::Nuclear, weight, norm_cap: r_plus, shape: b.shape })
            }
            (Nonsmooth::None, BaseSet::EuclideanBall { radius } | BaseSet::FrobeniusBall { radius }) => {
                Ok(BlockDomain::EuclidBall { center: vec![0.0; b.shape.len()], radius })
            }
            _ => Err(Error::Capability(format!("no capped domain for block {}", b.name))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResolutionDomain { blocks })
}

/// `(ℓ_t, R_t)` from the running protocol sums.
pub fn mc_lower_bound(ctx: &BoundContext<'_>, lambda: f64, b: &[f64]) -> Result<(f64, f64)> {
    let r_t = mc_radius_bound(b, lambda, ctx.upsilon_best)?;
    let y0_l1: f64 = ctx.averaged.u_blocks[ctx.index.base.clone()].iter().map(|v| norm1(v)).sum();
    let r_plus = r_t.max(y0_l1);
    let domain = capped_domain(ctx.layout, r_plus)?;
    let res = ctx.state.sums.resolution(&domain, ctx.layout)?;
    Ok((ctx.phi_bar_avg - res, r_t))
}

/// [`LowerBounder`] for matrix completion with ℓ1 weight `lambda` and
/// observations `b`.
#[derive(Clone, Debug)]
pub struct McLowerBounder {
    pub lambda: f64,
    pub b: Vec<f64>,
    pub last_radius: Option<f64>,
}

impl McLowerBounder {
    pub fn new(lambda: f64, b: Vec<f64>) -> Self {
        Self { lambda, b, last_radius: None }
    }
}

impl LowerBounder for McLowerBounder {
    fn lower_bound(&mut self, ctx: &BoundContext<'_>) -> Result<Option<f64>> {
        let (l, r) = mc_lower_bound(ctx, self.lambda, &self.b)?;
        self.last_radius = Some(r);
        Ok(Some(l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_observations_give_linear_theta() {
        let r = mc_radius_bound(&[0.0, 0.0], 2.0, 5.0).unwrap();
        assert!((r - 2.5).abs() < 1e-12);
    }

    #[test]
    fn radius_matches_grid_scan() {
        let b = [3.0, 1.0];
        let r = mc_radius_bound(&b, 1.0, 3.0).unwrap();
        let mut best = 0.0;
        let h = 1e-4;
        for i in 0..=60000 {
            let x = i as f64 * h;
            if theta_plus(&b, 1.0, x) <= 3.0 {
                best = x;
            }
        }
        assert!(r >= best && r - best <= 2e-4, "{r} vs {best}");
    }

    #[test]
    fn inconsistent_upper_bound_is_reported() {
        // min ϑ⁺ for b = [3, 1], λ = 1 is at r = 2: 2 + ½(1 + 1) = 3
        assert!(matches!(mc_radius_bound(&[3.0, 1.0], 1.0, 2.5), Err(Error::Bound(_))));
    }
}
