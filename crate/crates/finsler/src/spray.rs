//! Geodesic spray coefficients extracted from metric jets.
//!
//! For `L = F^2` the spray is
//!
//! ```text
//! G^i = (1/4) g^{il} ( ∂²L/∂ξ_l∂x_m ξ^m - ∂L/∂x_l ),
//! ```
//!
//! and geodesics solve `x'' = -2 G(x, x')`.  Everything here is computed
//! from one jet of `L` in the combined `(x, ξ)` variables: second partials
//! in `ξ` give the fundamental tensor, the mixed and first partials give
//! the right-hand side, and one linear solve with jet entries yields `G`
//! together with its own Taylor expansion.  Requesting `order` 1 exposes
//! the connection coefficients, `order` 2 everything curvature needs, all
//! without finite differencing.

use crate::error::Result;
use crate::jet::Jet;
use crate::linalg;
use crate::metric::{lift, MetricDescriptor, PointedVector, Seed};
use crate::Real;

/// Spray coefficients `G^i` as jets of `order` in the `2n` combined
/// variables: indices `0..n` are point displacements, `n..2n` direction
/// displacements.
pub fn spray_jets<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
    order: usize,
) -> Result<Vec<Jet<S>>> {
    assert!(order <= 2, "spray jets are supported up to order 2");
    let n = metric.dim();
    let (x, xi) = lift(pv, order + 2, Seed::PointAndDirection);
    let f = metric.eval_jets(&x, &xi)?;
    let l = &f * &f;

    let mut alpha = vec![0usize; 2 * n];
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            alpha.iter_mut().for_each(|a| *a = 0);
            alpha[n + i] += 1;
            alpha[n + j] += 1;
            g.push(l.derivative(&alpha).scale(S::real(0.5)));
        }
    }

    let xi_trunc: Vec<Jet<S>> = xi.iter().map(|c| c.truncated(order)).collect();
    let mut rhs = Vec::with_capacity(n);
    for lidx in 0..n {
        alpha.iter_mut().for_each(|a| *a = 0);
        alpha[lidx] = 1;
        let dl_dx = l.derivative(&alpha).truncated(order);
        let mut acc = dl_dx.scale(-S::one());
        for m in 0..n {
            alpha.iter_mut().for_each(|a| *a = 0);
            alpha[n + lidx] += 1;
            alpha[m] += 1;
            let mixed = l.derivative(&alpha);
            acc = &acc + &(&mixed * &xi_trunc[m]);
        }
        rhs.push(acc);
    }

    let solved = linalg::solve(&g, &rhs)?;
    Ok(solved
        .into_iter()
        .map(|c| c.scale(S::real(0.25)))
        .collect())
}

/// Spray values `G^i(x, ξ)`.
pub fn spray<S: Real>(metric: &MetricDescriptor<S>, pv: &PointedVector<S>) -> Result<Vec<S>> {
    Ok(spray_jets(metric, pv, 0)?
        .into_iter()
        .map(|j| j.value())
        .collect())
}

/// Connection coefficients `N^i_j = ∂G^i/∂ξ^j`, row major.
///
/// These define the covariant derivative along a curve:
/// `(DX)^i = X'^i + N^i_j(γ, γ') X^j`.
pub fn berwald_connection<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
) -> Result<Vec<S>> {
    let n = metric.dim();
    let jets = spray_jets(metric, pv, 1)?;
    let mut alpha = vec![0usize; 2 * n];
    let mut out = vec![S::zero(); n * n];
    for (i, jet) in jets.iter().enumerate() {
        for j in 0..n {
            alpha.iter_mut().for_each(|a| *a = 0);
            alpha[n + j] = 1;
            out[i * n + j] = jet.partial(&alpha);
        }
    }
    Ok(out)
}
