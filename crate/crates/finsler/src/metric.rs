//! Metric descriptors: positively homogeneous norms on the tangent bundle,
//! evaluable on jets, together with their fundamental tensors.
//!
//! A Finsler metric assigns each point `x` a norm `F(x, .)` that is
//! positively 1-homogeneous and strictly convex away from the origin; the
//! quadratic forms it induces,
//!
//! ```text
//! g_(x,xi)[i][j] = 1/2 d^2(F^2) / dxi_i dxi_j,
//! ```
//!
//! depend on the base direction `xi` unless the metric is Riemannian.  All
//! geometry downstream (sprays, curvature, transport) is driven by jets of
//! `F^2`, so a metric here is simply "something that evaluates to a jet",
//! plus a chart-domain predicate and a kind tag.
//!
//! Reversibility is never assumed: `F(x, -xi)` may differ from `F(x, xi)`,
//! which is exactly what wind deformations produce.

use std::sync::Arc;

use crate::error::{FinslerError, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::wind::WindField;
use crate::Real;

/// Broad classification of how a descriptor was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    /// `F^2` is a quadratic form in `xi`; the fundamental tensor is
    /// direction-independent.
    Riemannian,
    /// Built by deforming a base metric with a wind field.
    Zermelo,
    /// Anything user-supplied.
    Custom,
}

/// A point together with a nonzero tangent direction, the argument every
/// directional quantity takes.
#[derive(Clone, Debug)]
pub struct PointedVector<S> {
    pub x: Vec<S>,
    pub xi: Vec<S>,
}

impl<S: Real> PointedVector<S> {
    pub fn new(x: Vec<S>, xi: Vec<S>) -> Result<PointedVector<S>> {
        if x.len() != xi.len() {
            return Err(FinslerError::invalid(format!(
                "point dimension {} does not match direction dimension {}",
                x.len(),
                xi.len()
            )));
        }
        if x.is_empty() {
            return Err(FinslerError::invalid("empty pointed vector"));
        }
        if xi.iter().all(|&c| c == S::zero()) {
            return Err(FinslerError::invalid(
                "direction must be nonzero: the metric is not differentiable at the origin",
            ));
        }
        Ok(PointedVector { x, xi })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Chooses which coordinates become jet variables when lifting a pointed
/// vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seed {
    /// Only the direction varies; the point enters as constants.  Enough for
    /// fundamental tensors and direction gradients, at a fraction of the
    /// cost of the full lift.
    DirectionOnly,
    /// Point and direction both vary (`2n` jet variables), as sprays and
    /// curvature need.
    PointAndDirection,
}

/// Lifts a pointed vector into jet coordinates according to `seed`.
pub fn lift<S: Real>(pv: &PointedVector<S>, order: usize, seed: Seed) -> (Vec<Jet<S>>, Vec<Jet<S>>) {
    let n = pv.dim();
    match seed {
        Seed::DirectionOnly => {
            let x = pv.x.iter().map(|&c| Jet::constant(n, order, c)).collect();
            let xi = pv
                .xi
                .iter()
                .enumerate()
                .map(|(i, &c)| Jet::variable(n, order, i, c))
                .collect();
            (x, xi)
        }
        Seed::PointAndDirection => {
            let x = pv
                .x
                .iter()
                .enumerate()
                .map(|(i, &c)| Jet::variable(2 * n, order, i, c))
                .collect();
            let xi = pv
                .xi
                .iter()
                .enumerate()
                .map(|(i, &c)| Jet::variable(2 * n, order, n + i, c))
                .collect();
            (x, xi)
        }
    }
}

type Evaluator<S> = Arc<dyn Fn(&[Jet<S>], &[Jet<S>]) -> Result<Jet<S>> + Send + Sync>;
type Region<S> = Arc<dyn Fn(&[S]) -> bool + Send + Sync>;

/// A Finsler metric as the engine sees it: dimension, kind tag, jet
/// evaluator, and chart-domain predicate.
#[derive(Clone)]
pub struct MetricDescriptor<S: Real> {
    dim: usize,
    kind: MetricKind,
    evaluator: Evaluator<S>,
    admissible: Region<S>,
}

impl<S: Real> MetricDescriptor<S> {
    /// Builds a descriptor from a raw jet evaluator.
    pub fn custom(
        dim: usize,
        kind: MetricKind,
        evaluator: impl Fn(&[Jet<S>], &[Jet<S>]) -> Result<Jet<S>> + Send + Sync + 'static,
    ) -> MetricDescriptor<S> {
        MetricDescriptor {
            dim,
            kind,
            evaluator: Arc::new(evaluator),
            admissible: Arc::new(|_| true),
        }
    }

    /// The flat Euclidean norm.
    pub fn euclidean(dim: usize) -> MetricDescriptor<S> {
        MetricDescriptor::custom(dim, MetricKind::Riemannian, |_, xi| {
            let mut q = xi[0].same_shape(S::zero());
            for c in xi {
                q = &q + &(c * c);
            }
            q.sqrt()
        })
    }

    /// The round unit sphere in its stereographic chart: the conformal
    /// metric `F = 2 |xi| / (1 + |x|^2)`.  The chart covers everything but
    /// the projection pole; curves through the antipode of the chart origin
    /// leave every bounded region.
    pub fn sphere_stereographic(dim: usize) -> MetricDescriptor<S> {
        MetricDescriptor::conformal(dim, |x| {
            let mut r2 = x[0].same_shape(S::zero());
            for c in x {
                r2 = &r2 + &(c * c);
            }
            r2.add_scalar(S::one()).recip().map(|j| j.scale(S::real(2.0)))
        })
    }

    /// The sphere chart metric multiplied by `(1 + sum_i tilt_i x_i)`.
    ///
    /// For a nonzero tilt this is still Riemannian but no longer has
    /// constant curvature, which makes it the standard negative control for
    /// symmetry detection.  The admissible region keeps the extra factor
    /// bounded away from zero.
    pub fn sphere_stereographic_tilted(dim: usize, tilt: Vec<S>) -> MetricDescriptor<S> {
        assert_eq!(tilt.len(), dim, "tilt vector dimension");
        let region_tilt = tilt.clone();
        let metric = MetricDescriptor::conformal(dim, move |x| {
            let mut r2 = x[0].same_shape(S::zero());
            for c in x {
                r2 = &r2 + &(c * c);
            }
            let mut lin = x[0].same_shape(S::one());
            for (c, &w) in x.iter().zip(&tilt) {
                lin = &lin + &c.scale(w);
            }
            let base = r2.add_scalar(S::one()).recip()?.scale(S::real(2.0));
            Ok(&base * &lin)
        });
        metric.with_admissible_region(move |x: &[S]| {
            let lin = x
                .iter()
                .zip(&region_tilt)
                .fold(S::one(), |acc, (&c, &w)| acc + c * w);
            lin > S::real(0.05)
        })
    }

    /// A conformally flat metric `F = factor(x) |xi|` from a jet-evaluable
    /// positive factor.
    pub fn conformal(
        dim: usize,
        factor: impl Fn(&[Jet<S>]) -> Result<Jet<S>> + Send + Sync + 'static,
    ) -> MetricDescriptor<S> {
        MetricDescriptor::custom(dim, MetricKind::Riemannian, move |x, xi| {
            let mut q = xi[0].same_shape(S::zero());
            for c in xi {
                q = &q + &(c * c);
            }
            Ok(&factor(x)? * &q.sqrt()?)
        })
    }

    /// Returns a copy whose admissible region is the intersection with
    /// `region`.  Scenario code uses this to attach chart bounds.
    pub fn with_admissible_region(
        self,
        region: impl Fn(&[S]) -> bool + Send + Sync + 'static,
    ) -> MetricDescriptor<S> {
        let inner = self.admissible.clone();
        MetricDescriptor {
            dim: self.dim,
            kind: self.kind,
            evaluator: self.evaluator,
            admissible: Arc::new(move |x: &[S]| inner(x) && region(x)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Chart-domain predicate.
    pub fn is_admissible_point(&self, x: &[S]) -> bool {
        (self.admissible)(x)
    }

    /// Evaluates `F` on jet coordinates.
    pub fn eval_jets(&self, x: &[Jet<S>], xi: &[Jet<S>]) -> Result<Jet<S>> {
        if x.len() != self.dim || xi.len() != self.dim {
            return Err(FinslerError::invalid(format!(
                "metric of dimension {} evaluated with {} point and {} direction components",
                self.dim,
                x.len(),
                xi.len()
            )));
        }
        (self.evaluator)(x, xi)
    }

    /// Scalar evaluation `F(x, xi)`; errors outside the admissible region
    /// and on non-finite results.
    pub fn eval(&self, pv: &PointedVector<S>) -> Result<S> {
        self.check_dim(pv)?;
        if !self.is_admissible_point(&pv.x) {
            return Err(FinslerError::domain(
                "metric evaluated outside its admissible region",
            ));
        }
        let (x, xi) = lift(pv, 0, Seed::DirectionOnly);
        let value = self.eval_jets(&x, &xi)?.value();
        if !value.is_finite() || value <= S::zero() {
            return Err(FinslerError::domain(format!(
                "metric returned a non-positive or non-finite value {:?}",
                value.to_f64()
            )));
        }
        Ok(value)
    }

    /// Jet of `F` at `pv` with the chosen seeding.
    pub fn jet_at(&self, pv: &PointedVector<S>, order: usize, seed: Seed) -> Result<Jet<S>> {
        self.check_dim(pv)?;
        let (x, xi) = lift(pv, order, seed);
        self.eval_jets(&x, &xi)
    }

    /// Jet of `F^2` at `pv`; the object all connection and curvature
    /// formulas differentiate.
    pub fn squared_jet(&self, pv: &PointedVector<S>, order: usize, seed: Seed) -> Result<Jet<S>> {
        let f = self.jet_at(pv, order, seed)?;
        Ok(&f * &f)
    }

    /// Fundamental tensor `g_(x,xi)`, with strict convexity enforced.
    pub fn fundamental_tensor(&self, pv: &PointedVector<S>) -> Result<FundamentalTensor<S>> {
        let n = self.dim;
        let l = self.squared_jet(pv, 2, Seed::DirectionOnly)?;
        let mut entries = vec![S::zero(); n * n];
        let mut alpha = vec![0usize; n];
        for i in 0..n {
            for j in i..n {
                alpha.iter_mut().for_each(|a| *a = 0);
                alpha[i] += 1;
                alpha[j] += 1;
                let gij = l.partial(&alpha) * S::real(0.5);
                entries[i * n + j] = gij;
                entries[j * n + i] = gij;
            }
        }
        let eigenvalues = linalg::symmetric_eigenvalues(&entries, n);
        let min_eigenvalue = eigenvalues[0];
        if min_eigenvalue <= S::zero() {
            return Err(FinslerError::NonConvex {
                min_eigenvalue: min_eigenvalue.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(FundamentalTensor {
            dim: n,
            entries,
            min_eigenvalue,
        })
    }

    /// Gradient of `F` in the direction slot, `(dF/dxi_i)_i`, at `pv`.
    pub fn direction_gradient(&self, pv: &PointedVector<S>) -> Result<Vec<S>> {
        let n = self.dim;
        let f = self.jet_at(pv, 1, Seed::DirectionOnly)?;
        let mut alpha = vec![0usize; n];
        Ok((0..n)
            .map(|i| {
                alpha.iter_mut().for_each(|a| *a = 0);
                alpha[i] = 1;
                f.partial(&alpha)
            })
            .collect())
    }

    fn check_dim(&self, pv: &PointedVector<S>) -> Result<()> {
        if pv.dim() != self.dim {
            return Err(FinslerError::invalid(format!(
                "pointed vector of dimension {} on a metric of dimension {}",
                pv.dim(),
                self.dim
            )));
        }
        Ok(())
    }
}

impl<S: Real> std::fmt::Debug for MetricDescriptor<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricDescriptor")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish()
    }
}

/// The quadratic form induced by a metric at a pointed vector, stored row
/// major and guaranteed positive definite by construction.
#[derive(Clone, Debug)]
pub struct FundamentalTensor<S> {
    dim: usize,
    entries: Vec<S>,
    min_eigenvalue: S,
}

impl<S: Real> FundamentalTensor<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.entries[i * self.dim + j]
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[S] {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> S {
        self.min_eigenvalue
    }

    /// Bilinear pairing `g(u, w)`.
    pub fn inner(&self, u: &[S], w: &[S]) -> S {
        linalg::bilinear(&self.entries, u, w)
    }

    /// Norm `sqrt(g(u, u))`.
    pub fn norm(&self, u: &[S]) -> S {
        self.inner(u, u).max(S::zero()).sqrt()
    }

    /// Solves `g y = b`.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        linalg::solve(&self.entries, b)
    }

    /// Component of `u` that is `g`-orthogonal to `w`.
    pub fn orthogonal_component(&self, u: &[S], w: &[S]) -> Vec<S> {
        let ww = self.inner(w, w);
        let uw = self.inner(u, w);
        let c = uw / ww;
        u.iter().zip(w).map(|(&a, &b)| a - c * b).collect()
    }
}

/// Both available expressions of the pairing between `xi` and another vector
/// at `(x, xi)`: through the fundamental tensor, and through the direction
/// gradient of `F`.
///
/// For any metric these agree:
/// `g_(x,xi)(xi, u) = F(x, xi) * sum_r u^r dF/dxi_r(x, xi)`,
/// a consequence of homogeneity.  Keeping both routes visible lets tests and
/// callers confirm the identity rather than assume it.
#[derive(Clone, Debug)]
pub struct OrthogonalityPairing<S> {
    /// `g_(x,xi)(xi, u)`.
    pub tensor_pairing: S,
    /// `F(x,xi) * dF_(x,xi)(u)`.
    pub gradient_pairing: S,
}

impl<S: Real> OrthogonalityPairing<S> {
    /// Discrepancy between the two expressions.
    pub fn residual(&self) -> S {
        (self.tensor_pairing - self.gradient_pairing).abs()
    }
}

/// Evaluates both forms of the `xi`-`u` pairing at `pv`.
pub fn orthogonality_residual<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
    u: &[S],
) -> Result<OrthogonalityPairing<S>> {
    if u.len() != metric.dim() {
        return Err(FinslerError::invalid("pairing vector dimension mismatch"));
    }
    let g = metric.fundamental_tensor(pv)?;
    let tensor_pairing = g.inner(&pv.xi, u);
    let f = metric.eval(pv)?;
    let grad = metric.direction_gradient(pv)?;
    let df_u = grad.iter().zip(u).fold(S::zero(), |acc, (&d, &c)| acc + d * c);
    Ok(OrthogonalityPairing {
        tensor_pairing,
        gradient_pairing: f * df_u,
    })
}

/// Result of scanning `F(x, -v(x))` over sample points.
#[derive(Clone, Debug)]
pub struct AdmissibilityReport<S> {
    /// Largest observed `F(x, -v(x))`.
    pub max_value: S,
    /// Point realizing the maximum.
    pub worst_point: Vec<S>,
    /// Whether the deformation is admissible on the sampled set
    /// (`max_value < 1`).
    pub pass: bool,
}

/// Scans the wind-strength bound `F(x, -v(x)) < 1` over `samples`.
///
/// Points where the wind vanishes contribute zero and are always fine; the
/// interesting values live where the wind is strongest, so sample sets
/// should include the boundary of the intended domain.
pub fn check_admissible<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    samples: &[Vec<S>],
) -> Result<AdmissibilityReport<S>> {
    if wind.dim() != base.dim() {
        return Err(FinslerError::invalid(
            "wind dimension does not match the base metric",
        ));
    }
    if samples.is_empty() {
        return Err(FinslerError::invalid("admissibility scan needs samples"));
    }
    let mut max_value = S::zero();
    let mut worst_point = samples[0].clone();
    for x in samples {
        let v = wind.eval(x)?;
        let value = if v.iter().all(|&c| c == S::zero()) {
            S::zero()
        } else {
            let minus_v: Vec<S> = v.iter().map(|&c| -c).collect();
            let pv = PointedVector::new(x.clone(), minus_v)?;
            base.eval(&pv)?
        };
        if value > max_value {
            max_value = value;
            worst_point = x.clone();
        }
    }
    Ok(AdmissibilityReport {
        max_value,
        worst_point,
        pass: max_value < S::one(),
    })
}
