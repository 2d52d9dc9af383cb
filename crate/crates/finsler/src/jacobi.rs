//! Jacobi fields: integration of the variation equation and residual
//! measurements for sampled candidate fields.
//!
//! Along a geodesic the variation equation reads `D²J + R(J) = 0`, with
//! `D` the covariant derivative along the curve and `R` the curvature
//! operator at `(γ, γ')`.  In terms of `U = DJ` this is the first-order
//! system
//!
//! ```text
//! J' = U - N J,      U' = -N U - R J,
//! ```
//!
//! where `N` is the connection matrix.  The integrator walks this system
//! with RK4 on a step twice the operator sampling interval, so every RK4
//! stage lands exactly on a precomputed `(N, R)` sample and no
//! interpolation enters.  The same operator samples back the residual
//! measurements [`jacobi_residual`] and [`second_variation_residual`],
//! which grade *given* sampled fields instead of producing them.

use crate::curvature::{flag_curvature, riemann_operator};
use crate::error::{FinslerError, Result};
use crate::geodesic::GeodesicTrajectory;
use crate::metric::{MetricDescriptor, PointedVector};
use crate::spray::berwald_connection;
use crate::transport::covariant_derivative_along;
use crate::Real;

/// Connection and curvature matrices sampled along a trajectory at a
/// fixed stride of the fine grid.
pub struct CurvatureGrid<S: Real> {
    stride: usize,
    dim: usize,
    fine_step: S,
    conn: Vec<Vec<S>>,
    curv: Vec<Vec<S>>,
}

impl<S: Real> CurvatureGrid<S> {
    /// Samples `N` and `R` at every `stride`-th trajectory node.  The
    /// trajectory must be complete enough that its sample count minus one
    /// is a multiple of `2 * stride`, so the RK4 walk below ends exactly
    /// at the last sample.
    pub fn build(
        metric: &MetricDescriptor<S>,
        trajectory: &GeodesicTrajectory<S>,
        stride: usize,
    ) -> Result<CurvatureGrid<S>> {
        if stride == 0 {
            return Err(FinslerError::invalid("operator stride must be positive"));
        }
        let m = trajectory.len();
        if m < 2 * stride + 1 {
            return Err(FinslerError::TooFewSamples {
                needed: 2 * stride + 1,
                got: m,
            });
        }
        if !(m - 1).is_multiple_of(2 * stride) {
            return Err(FinslerError::invalid(format!(
                "trajectory with {m} samples cannot host an operator grid of stride {stride}"
            )));
        }
        let fine_step = trajectory.times()[1] - trajectory.times()[0];
        let mut conn = Vec::new();
        let mut curv = Vec::new();
        for k in (0..m).step_by(stride) {
            let pv = trajectory.sample(k)?;
            conn.push(berwald_connection(metric, &pv)?);
            curv.push(riemann_operator(metric, &pv)?.matrix().to_vec());
        }
        Ok(CurvatureGrid {
            stride,
            dim: metric.dim(),
            fine_step,
            conn,
            curv,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Integration step of the variation walk: two operator intervals.
    pub fn coarse_step(&self) -> S {
        self.fine_step * S::from_usize(2 * self.stride).expect("stride fits")
    }

    /// Number of coarse nodes, counting both ends.
    pub fn coarse_len(&self) -> usize {
        (self.conn.len() - 1) / 2 + 1
    }

    /// Fine-grid index of coarse node `c`.
    pub fn fine_index(&self, c: usize) -> usize {
        2 * self.stride * c
    }

    /// Operator pair `(N, R)` at coarse node `c`, row-major.
    pub fn coarse_ops(&self, c: usize) -> (&[S], &[S]) {
        self.ops(2 * c)
    }

    /// Operator pair at half-coarse resolution, where index `2c` is
    /// coarse node `c` and odd indices sit midway between nodes.  RK4
    /// walks over the grid take their stages here.
    pub fn coarse_half_ops(&self, half: usize) -> (&[S], &[S]) {
        self.ops(half)
    }

    fn ops(&self, half: usize) -> (&[S], &[S]) {
        (&self.conn[half], &self.curv[half])
    }
}

/// A Jacobi field and its covariant derivative sampled at the coarse
/// nodes of the grid it was integrated on.
#[derive(Clone, Debug)]
pub struct JacobiTrajectory<S> {
    times: Vec<S>,
    fine_indices: Vec<usize>,
    field: Vec<Vec<S>>,
    derivative: Vec<Vec<S>>,
}

impl<S: Real> JacobiTrajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    /// Fine-grid indices of the underlying trajectory matching each
    /// stored sample.
    pub fn fine_indices(&self) -> &[usize] {
        &self.fine_indices
    }

    /// `J` at each stored node.
    pub fn field(&self) -> &[Vec<S>] {
        &self.field
    }

    /// `DJ` at each stored node.
    pub fn derivative(&self) -> &[Vec<S>] {
        &self.derivative
    }
}

/// Integrates the variation equation over a prepared operator grid from
/// initial value `j0` and initial covariant derivative `dj0`.
pub fn integrate_jacobi<S: Real>(
    grid: &CurvatureGrid<S>,
    j0: &[S],
    dj0: &[S],
) -> Result<JacobiTrajectory<S>> {
    let n = grid.dim();
    if j0.len() != n || dj0.len() != n {
        return Err(FinslerError::invalid(
            "initial Jacobi data dimension does not match the grid",
        ));
    }
    let h = grid.coarse_step();
    let half = h * S::real(0.5);
    let sixth = h / S::real(6.0);
    let coarse = grid.coarse_len();

    let rhs = |half_idx: usize, j: &[S], u: &[S]| -> (Vec<S>, Vec<S>) {
        let (conn, curv) = grid.ops(half_idx);
        let mut dj = vec![S::zero(); n];
        let mut du = vec![S::zero(); n];
        for i in 0..n {
            let mut a = u[i];
            let mut b = S::zero();
            for k in 0..n {
                a = a - conn[i * n + k] * j[k];
                b = b - conn[i * n + k] * u[k] - curv[i * n + k] * j[k];
            }
            dj[i] = a;
            du[i] = b;
        }
        (dj, du)
    };
    let add = |y: &[S], a: S, d: &[S]| -> Vec<S> {
        y.iter().zip(d).map(|(&p, &q)| p + a * q).collect()
    };

    let mut times = Vec::with_capacity(coarse);
    let mut fine_indices = Vec::with_capacity(coarse);
    let mut field = Vec::with_capacity(coarse);
    let mut derivative = Vec::with_capacity(coarse);
    let mut j = j0.to_vec();
    let mut u = dj0.to_vec();
    times.push(S::zero());
    fine_indices.push(0);
    field.push(j.clone());
    derivative.push(u.clone());

    for c in 0..coarse - 1 {
        let (k1j, k1u) = rhs(2 * c, &j, &u);
        let (k2j, k2u) = rhs(2 * c + 1, &add(&j, half, &k1j), &add(&u, half, &k1u));
        let (k3j, k3u) = rhs(2 * c + 1, &add(&j, half, &k2j), &add(&u, half, &k2u));
        let (k4j, k4u) = rhs(2 * c + 2, &add(&j, h, &k3j), &add(&u, h, &k3u));
        for i in 0..n {
            j[i] = j[i] + sixth * (k1j[i] + S::real(2.0) * (k2j[i] + k3j[i]) + k4j[i]);
            u[i] = u[i] + sixth * (k1u[i] + S::real(2.0) * (k2u[i] + k3u[i]) + k4u[i]);
        }
        times.push(h * S::from_usize(c + 1).expect("node index fits"));
        fine_indices.push(grid.fine_index(c + 1));
        field.push(j.clone());
        derivative.push(u.clone());
    }

    Ok(JacobiTrajectory {
        times,
        fine_indices,
        field,
        derivative,
    })
}

/// Defect of the variation equation for a sampled candidate field:
/// `D²J + R(J)` at every node of a uniform grid.
///
/// The covariant derivative is applied twice with the stencils of
/// [`covariant_derivative_along`], so the first and last two samples of
/// the result lean on one-sided differencing twice over; residual checks
/// should trim them.
pub fn jacobi_residual_samples<S: Real>(
    metric: &MetricDescriptor<S>,
    positions: &[Vec<S>],
    velocities: &[Vec<S>],
    field: &[Vec<S>],
    h: S,
) -> Result<Vec<Vec<S>>> {
    let first = covariant_derivative_along(metric, positions, velocities, field, h)?;
    let mut second = covariant_derivative_along(metric, positions, velocities, &first, h)?;
    let n = metric.dim();
    for (k, out) in second.iter_mut().enumerate() {
        let pv = PointedVector::new(positions[k].clone(), velocities[k].clone())?;
        let r = riemann_operator(metric, &pv)?;
        let rj = r.apply(&field[k]);
        for i in 0..n {
            out[i] = out[i] + rj[i];
        }
    }
    Ok(second)
}

/// Defect of the variation equation at the center of a nine-sample
/// window: `D²J + R(J)` at the fifth node.
///
/// Nine uniformly spaced samples are exactly enough for two chained
/// central first-derivative stencils, so the center value carries no
/// one-sided differencing at all.  This is the probe of choice when a
/// candidate field is known along a whole trajectory but evaluating the
/// connection at every node would cost too much: slide the window to a
/// few probe times and take the worst defect.
pub fn variation_defect_at_center<S: Real>(
    metric: &MetricDescriptor<S>,
    positions: &[Vec<S>],
    velocities: &[Vec<S>],
    field: &[Vec<S>],
    h: S,
) -> Result<Vec<S>> {
    if positions.len() != 9 || velocities.len() != 9 || field.len() != 9 {
        return Err(FinslerError::invalid(
            "defect probe expects exactly nine samples",
        ));
    }
    let first = covariant_derivative_along(metric, positions, velocities, field, h)?;
    let second = covariant_derivative_along(
        metric,
        &positions[2..7],
        &velocities[2..7],
        &first[2..7],
        h,
    )?;
    let pv = PointedVector::new(positions[4].clone(), velocities[4].clone())?;
    let r = riemann_operator(metric, &pv)?;
    let rj = r.apply(&field[4]);
    Ok(second[2]
        .iter()
        .zip(&rj)
        .map(|(&a, &b)| a + b)
        .collect())
}

/// Largest interior norm of [`jacobi_residual_samples`], with two samples
/// trimmed at each end.
pub fn jacobi_residual<S: Real>(
    metric: &MetricDescriptor<S>,
    positions: &[Vec<S>],
    velocities: &[Vec<S>],
    field: &[Vec<S>],
    h: S,
) -> Result<S> {
    let samples = jacobi_residual_samples(metric, positions, velocities, field, h)?;
    Ok(crate::transport::interior_max_norm(&samples, 2))
}

/// Two-path check of the second-variation identity along a geodesic.
///
/// For a Jacobi field `J` the scalar `q(t) = g(J, J)` obeys
///
/// ```text
/// q''/2 = -K(γ, γ', J) ( g(γ',γ') q - g(γ',J)² ) + g(DJ, DJ).
/// ```
///
/// The left side is measured by a five-point second-difference of the
/// sampled `q`; the right side is assembled pointwise from the flag
/// curvature, the fundamental tensor, and the covariant derivative.  The
/// two never share a code path, so agreement certifies both.  Where the
/// flag degenerates (`J` nearly parallel to `γ'`) the right side falls
/// back to the curvature operator form `-g(R(J), J)`, which extends the
/// product `K · (...)` continuously.
///
/// Returns the maximum interior discrepancy normalized by the largest
/// right-side magnitude.
pub fn second_variation_residual<S: Real>(
    metric: &MetricDescriptor<S>,
    positions: &[Vec<S>],
    velocities: &[Vec<S>],
    field: &[Vec<S>],
    h: S,
) -> Result<S> {
    let m = positions.len();
    if m < 5 {
        return Err(FinslerError::TooFewSamples { needed: 5, got: m });
    }
    let dfield = covariant_derivative_along(metric, positions, velocities, field, h)?;

    let mut q = Vec::with_capacity(m);
    let mut right = Vec::with_capacity(m);
    for k in 0..m {
        let pv = PointedVector::new(positions[k].clone(), velocities[k].clone())?;
        let g = metric.fundamental_tensor(&pv)?;
        let qq = g.inner(&field[k], &field[k]);
        let vv = g.inner(&velocities[k], &velocities[k]);
        let vj = g.inner(&velocities[k], &field[k]);
        let flag_area = vv * qq - vj * vj;
        let du = g.inner(&dfield[k], &dfield[k]);
        let curvature_term = match flag_curvature(metric, &pv, &field[k]) {
            Ok(kappa) => -kappa * flag_area,
            Err(FinslerError::DegenerateFlag { .. }) => {
                let r = riemann_operator(metric, &pv)?;
                -g.inner(&r.apply(&field[k]), &field[k])
            }
            Err(err) => return Err(err),
        };
        q.push(qq);
        right.push(curvature_term + du);
    }

    let scale = right
        .iter()
        .fold(S::zero(), |acc, &c| acc.max(c.abs()))
        .max(S::one());
    let inv12h2 = (S::real(12.0) * h * h).recip();
    let mut worst = S::zero();
    for k in 2..m - 2 {
        let second = (-q[k - 2] + S::real(16.0) * q[k - 1] - S::real(30.0) * q[k]
            + S::real(16.0) * q[k + 1]
            - q[k + 2])
            * inv12h2;
        let left = second * S::real(0.5);
        worst = worst.max((left - right[k]).abs());
    }
    Ok(worst / scale)
}
