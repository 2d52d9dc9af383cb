//! Central finite differences, kept as an independent cross-check for the
//! jet machinery.
//!
//! The implementation shares nothing with [`crate::jet`]: mixed partials are
//! tensor products of one-dimensional central stencils, so agreement between
//! the two routes genuinely validates both.  Accuracy is O(h^2) per stencil;
//! [`fd_oracle_richardson`] removes the leading error term when call sites
//! need more.  Step sizes must grow with the derivative order to keep
//! rounding noise (eps / h^degree) in check, which is what
//! [`recommended_step`] encodes.

use crate::error::{FinslerError, Result};
use crate::Real;

/// One-dimensional central stencils by derivative order: (offset, weight)
/// pairs, to be divided by `h^order`.
fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("stencils stop at derivative order 4"),
    }
}

/// Mixed partial derivative `∂^alpha f(point)` by tensor-product central
/// differencing with step `h`.
///
/// Total degree is capped at 4 to match the jet engine.  Truncation error is
/// O(h^2); pick `h` with [`recommended_step`] or tighten with
/// [`fd_oracle_richardson`].
pub fn fd_oracle<S: Real>(
    f: impl Fn(&[S]) -> S,
    point: &[S],
    alpha: &[usize],
    h: S,
) -> Result<S> {
    if alpha.len() != point.len() {
        return Err(FinslerError::invalid(format!(
            "multi-index arity {} does not match point dimension {}",
            alpha.len(),
            point.len()
        )));
    }
    let degree: usize = alpha.iter().sum();
    if degree > 4 {
        return Err(FinslerError::invalid(format!(
            "finite-difference oracle supports total degree <= 4, got {degree}"
        )));
    }
    if h <= S::zero() {
        return Err(FinslerError::invalid("step size must be positive"));
    }

    // Accumulate the tensor product of the per-variable stencils.
    let mut acc = S::zero();
    let mut offsets = vec![0i32; point.len()];
    accumulate(&f, point, alpha, h, 0, S::one(), &mut offsets, &mut acc);
    let scale = h.powi(degree as i32);
    Ok(acc / scale)
}

#[allow(clippy::too_many_arguments)]
fn accumulate<S: Real>(
    f: &impl Fn(&[S]) -> S,
    point: &[S],
    alpha: &[usize],
    h: S,
    var: usize,
    weight: S,
    offsets: &mut [i32],
    acc: &mut S,
) {
    if var == point.len() {
        let shifted: Vec<S> = point
            .iter()
            .zip(offsets.iter())
            .map(|(&p, &o)| p + h * S::real(o as f64))
            .collect();
        *acc = *acc + weight * f(&shifted);
        return;
    }
    for &(offset, w) in stencil(alpha[var]) {
        offsets[var] = offset;
        accumulate(f, point, alpha, h, var + 1, weight * S::real(w), offsets, acc);
    }
    offsets[var] = 0;
}

/// One step of Richardson extrapolation over [`fd_oracle`]: combines the
/// estimates at `h` and `h/2` to cancel the O(h^2) term, leaving O(h^4).
pub fn fd_oracle_richardson<S: Real>(
    f: impl Fn(&[S]) -> S,
    point: &[S],
    alpha: &[usize],
    h: S,
) -> Result<S> {
    let coarse = fd_oracle(&f, point, alpha, h)?;
    let fine = fd_oracle(&f, point, alpha, h * S::real(0.5))?;
    let third = S::real(1.0 / 3.0);
    Ok((S::real(4.0) * fine - coarse) * third)
}

/// Step size balancing truncation against rounding for a given total degree,
/// assuming O(1) function scales.  Degree <= 2 keeps the classic 1e-4;
/// higher degrees must back off because rounding grows like eps / h^degree.
pub fn recommended_step<S: Real>(degree: usize) -> S {
    let h = match degree {
        0..=2 => 1e-4,
        3 => 2e-3,
        _ => 2e-2,
    };
    S::real(h)
}
