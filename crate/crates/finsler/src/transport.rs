//! Derivatives of vector fields along sampled curves.
//!
//! A field `X` along a curve `γ` with reference vector `γ'` has covariant
//! derivative `(DX)^i = X'^i + N^i_j(γ, γ') X^j` with `N` the connection
//! coefficients of the spray.  Everything here works on uniformly sampled
//! data: the time derivative uses fourth-order stencils, central in the
//! interior and one-sided at the ends, so the stencil error stays near
//! `h^4` and sampled checks are limited by the data, not the
//! differentiation.

use crate::error::{FinslerError, Result};
use crate::metric::{MetricDescriptor, PointedVector};
use crate::spray::berwald_connection;
use crate::Real;

/// Fourth-order time derivative of uniformly sampled vectors.
///
/// Needs at least five samples.  Interior nodes use the central stencil
/// `(f[-2] - 8 f[-1] + 8 f[1] - f[2]) / 12h`; the two nodes at each end
/// use one-sided stencils of the same order.
pub fn time_derivative<S: Real>(samples: &[Vec<S>], h: S) -> Result<Vec<Vec<S>>> {
    let m = samples.len();
    if m < 5 {
        return Err(FinslerError::TooFewSamples { needed: 5, got: m });
    }
    let dim = samples[0].len();
    let inv12h = (S::real(12.0) * h).recip();
    let combine = |terms: &[(f64, usize)]| -> Vec<S> {
        let mut out = vec![S::zero(); dim];
        for &(w, idx) in terms {
            for (o, &c) in out.iter_mut().zip(&samples[idx]) {
                *o = *o + S::real(w) * c;
            }
        }
        out.iter().map(|&c| c * inv12h).collect()
    };

    let mut out = Vec::with_capacity(m);
    out.push(combine(&[
        (-25.0, 0),
        (48.0, 1),
        (-36.0, 2),
        (16.0, 3),
        (-3.0, 4),
    ]));
    out.push(combine(&[
        (-3.0, 0),
        (-10.0, 1),
        (18.0, 2),
        (-6.0, 3),
        (1.0, 4),
    ]));
    for k in 2..m - 2 {
        out.push(combine(&[
            (1.0, k - 2),
            (-8.0, k - 1),
            (8.0, k + 1),
            (-1.0, k + 2),
        ]));
    }
    out.push(combine(&[
        (-1.0, m - 5),
        (6.0, m - 4),
        (-18.0, m - 3),
        (10.0, m - 2),
        (3.0, m - 1),
    ]));
    out.push(combine(&[
        (3.0, m - 5),
        (-16.0, m - 4),
        (36.0, m - 3),
        (-48.0, m - 2),
        (25.0, m - 1),
    ]));
    Ok(out)
}

/// Covariant derivative of a sampled field along a sampled curve, sample
/// by sample.
///
/// `positions`, `velocities`, and `field` must share one uniform time grid
/// of step `h`.  The reference vector at each node is the curve velocity
/// there.
pub fn covariant_derivative_along<S: Real>(
    metric: &MetricDescriptor<S>,
    positions: &[Vec<S>],
    velocities: &[Vec<S>],
    field: &[Vec<S>],
    h: S,
) -> Result<Vec<Vec<S>>> {
    let m = positions.len();
    if velocities.len() != m || field.len() != m {
        return Err(FinslerError::invalid(
            "curve and field sample counts disagree",
        ));
    }
    let n = metric.dim();
    let mut out = time_derivative(field, h)?;
    for k in 0..m {
        let pv = PointedVector::new(positions[k].clone(), velocities[k].clone())?;
        let conn = berwald_connection(metric, &pv)?;
        for i in 0..n {
            let mut acc = out[k][i];
            for j in 0..n {
                acc = acc + conn[i * n + j] * field[k][j];
            }
            out[k][i] = acc;
        }
    }
    Ok(out)
}

/// Largest norm among interior samples of a sampled field, skipping
/// `trim` samples at each end where one-sided stencils may have been
/// stacked.
pub fn interior_max_norm<S: Real>(samples: &[Vec<S>], trim: usize) -> S {
    let m = samples.len();
    let mut worst = S::zero();
    for sample in samples.iter().take(m.saturating_sub(trim)).skip(trim) {
        let norm = sample
            .iter()
            .fold(S::zero(), |acc, &c| acc + c * c)
            .sqrt();
        worst = worst.max(norm);
    }
    worst
}
