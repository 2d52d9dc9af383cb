//! Curvature of the geodesic spray and flag curvature.
//!
//! The spray `G` determines a direction-dependent curvature operator
//!
//! ```text
//! R^i_k = 2 ∂G^i/∂x^k - ξ^j ∂²G^i/∂x^j∂ξ^k
//!         + 2 G^j ∂²G^i/∂ξ^j∂ξ^k - ∂G^i/∂ξ^j ∂G^j/∂ξ^k ,
//! ```
//!
//! the same operator that drives the variation equation
//! `D²J + R(J) = 0` along geodesics.  It annihilates the flagpole `ξ`, is
//! symmetric with respect to the fundamental tensor at `(x, ξ)`, and its
//! normalized quadratic form is the flag curvature
//!
//! ```text
//! K(x, ξ, η) = g(R(η⊥), η⊥) / ( g(ξ, ξ) g(η⊥, η⊥) ),
//! ```
//!
//! with `η⊥` the `g`-orthogonal part of `η` against `ξ`.  On a Riemannian
//! surface this reduces to the Gaussian curvature whatever `η` is.

use crate::error::{FinslerError, Result};
use crate::metric::{FundamentalTensor, MetricDescriptor, PointedVector};
use crate::spray::spray_jets;
use crate::Real;

/// Threshold on the `g`-sine between flagpole and transverse edge below
/// which a flag is reported as degenerate.
pub const DEGENERATE_FLAG_SINE: f64 = 1e-8;

/// The curvature operator `R` at one pointed vector, stored row major.
#[derive(Clone, Debug)]
pub struct CurvatureOperator<S> {
    dim: usize,
    entries: Vec<S>,
}

impl<S: Real> CurvatureOperator<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, k: usize) -> S {
        self.entries[i * self.dim + k]
    }

    pub fn matrix(&self) -> &[S] {
        &self.entries
    }

    /// `R(u)`.
    pub fn apply(&self, u: &[S]) -> Vec<S> {
        crate::linalg::mat_vec(&self.entries, u)
    }
}

/// Curvature operator from the order-2 spray jets at `(x, ξ)`.
pub fn riemann_operator<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
) -> Result<CurvatureOperator<S>> {
    let n = metric.dim();
    let jets = spray_jets(metric, pv, 2)?;
    let mut alpha = vec![0usize; 2 * n];
    let mut partial = |jet: &crate::jet::Jet<S>, a: usize, b: Option<usize>| -> S {
        alpha.iter_mut().for_each(|c| *c = 0);
        alpha[a] += 1;
        if let Some(b) = b {
            alpha[b] += 1;
        }
        jet.partial(&alpha)
    };

    let g_values: Vec<S> = jets.iter().map(|j| j.value()).collect();
    let mut dg_dxi = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            dg_dxi[i * n + j] = partial(&jets[i], n + j, None);
        }
    }

    let mut entries = vec![S::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let mut value = S::real(2.0) * partial(&jets[i], k, None);
            for j in 0..n {
                value = value - pv.xi[j] * partial(&jets[i], j, Some(n + k));
                value = value + S::real(2.0) * g_values[j] * partial(&jets[i], n + j, Some(n + k));
                value = value - dg_dxi[i * n + j] * dg_dxi[j * n + k];
            }
            entries[i * n + k] = value;
        }
    }
    Ok(CurvatureOperator { dim: n, entries })
}

/// A validated flag: pole `ξ`, transverse edge reduced to its orthogonal
/// part, and the tensor data needed to normalize.
pub struct Flag<S> {
    pub tensor: FundamentalTensor<S>,
    pub eta_perp: Vec<S>,
    /// `g`-sine of the angle between pole and edge.
    pub sine: S,
}

/// Projects `eta` against the flagpole and rejects nearly collinear flags.
pub fn make_flag<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
    eta: &[S],
) -> Result<Flag<S>> {
    if eta.len() != pv.dim() {
        return Err(FinslerError::invalid(
            "flag edge dimension does not match the pointed vector",
        ));
    }
    let tensor = metric.fundamental_tensor(pv)?;
    let eta_perp = tensor.orthogonal_component(eta, &pv.xi);
    let ee = tensor.inner(eta, eta);
    let pp = tensor.inner(&eta_perp, &eta_perp);
    let sine = (pp / ee).max(S::zero()).sqrt();
    if sine < S::real(DEGENERATE_FLAG_SINE) {
        return Err(FinslerError::DegenerateFlag {
            sine: sine.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Flag {
        tensor,
        eta_perp,
        sine,
    })
}

/// Flag curvature `K(x, ξ, η)`.
pub fn flag_curvature<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
    eta: &[S],
) -> Result<S> {
    let flag = make_flag(metric, pv, eta)?;
    let r = riemann_operator(metric, pv)?;
    let r_eta = r.apply(&flag.eta_perp);
    let numerator = flag.tensor.inner(&r_eta, &flag.eta_perp);
    let denominator =
        flag.tensor.inner(&pv.xi, &pv.xi) * flag.tensor.inner(&flag.eta_perp, &flag.eta_perp);
    Ok(numerator / denominator)
}
