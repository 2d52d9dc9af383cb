//! Local symmetry of the curvature operator along geodesics.
//!
//! A space is locally symmetric along a geodesic when the covariant
//! derivative of the curvature operator in the flow direction vanishes,
//! `D_γ' R_γ' = 0`.  Two equivalent numerical witnesses are measured here:
//!
//! * transport a `g`-orthonormal frame `E_k` parallelly along the curve
//!   and differentiate the vector fields `W_k = R(E_k)`; since
//!   `D E_k = 0`, the product rule leaves `D W_k = (D R)(E_k)`, and the
//!   worst interior norm over samples and legs estimates `‖D R‖`;
//! * integrate a Jacobi field `J` and grade its covariant derivative
//!   `DJ` against the variation equation.  `DJ` is itself a Jacobi field
//!   exactly when the operator derivative vanishes, so the defect of
//!   `D²(DJ) + R(DJ)` measures the same quantity through an entirely
//!   different pipeline.
//!
//! Constant-curvature geometries and their Killing deformations drive
//! both witnesses to integrator noise; a conformal perturbation of the
//! round sphere pushes them up by several orders of magnitude.

use crate::error::{FinslerError, Result};
use crate::geodesic::GeodesicTrajectory;
use crate::jacobi::{integrate_jacobi, jacobi_residual, CurvatureGrid};
use crate::linalg::mat_vec;
use crate::metric::{MetricDescriptor, PointedVector};
use crate::transport::{covariant_derivative_along, interior_max_norm};
use crate::Real;

/// A frame transported parallelly along a geodesic, sampled at the
/// coarse nodes of a [`CurvatureGrid`].
pub struct ParallelFrame<S> {
    times: Vec<S>,
    fine_indices: Vec<usize>,
    legs: Vec<Vec<Vec<S>>>,
}

impl<S: Real> ParallelFrame<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn fine_indices(&self) -> &[usize] {
        &self.fine_indices
    }

    /// Frame legs at node `c`; the first leg starts as the geodesic
    /// velocity.
    pub fn legs(&self, c: usize) -> &[Vec<S>] {
        &self.legs[c]
    }

    /// Worst deviation of the transported frame from `g`-orthonormality
    /// over all sampled nodes, a drift diagnostic for the transport.
    pub fn orthonormality_defect(
        &self,
        metric: &MetricDescriptor<S>,
        trajectory: &GeodesicTrajectory<S>,
    ) -> Result<S> {
        let n = metric.dim();
        let mut worst = S::zero();
        for (c, &k) in self.fine_indices.iter().enumerate() {
            let pv = trajectory.sample(k)?;
            let g = metric.fundamental_tensor(&pv)?;
            for a in 0..n {
                for b in a..n {
                    let inner = g.inner(&self.legs[c][a], &self.legs[c][b]);
                    let target = if a == b { S::one() } else { S::zero() };
                    worst = worst.max((inner - target).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Transports a `g`-orthonormal frame along the trajectory by solving
/// `E' = -N E` with the same staged RK4 walk the Jacobi integrator uses.
/// The first leg is seeded with the velocity; the remaining legs come
/// from coordinate directions orthonormalized at the start.
pub fn parallel_frame<S: Real>(
    metric: &MetricDescriptor<S>,
    trajectory: &GeodesicTrajectory<S>,
    grid: &CurvatureGrid<S>,
) -> Result<ParallelFrame<S>> {
    let n = metric.dim();
    let start = trajectory.sample(0)?;
    let g0 = metric.fundamental_tensor(&start)?;

    let mut seeds: Vec<Vec<S>> = Vec::with_capacity(n);
    let speed = g0.norm(&start.xi);
    if speed <= S::zero() {
        return Err(FinslerError::invalid("zero velocity cannot seed a frame"));
    }
    seeds.push(start.xi.iter().map(|&c| c / speed).collect());
    for i in 0..n {
        if seeds.len() == n {
            break;
        }
        let mut w: Vec<S> = (0..n)
            .map(|j| if j == i { S::one() } else { S::zero() })
            .collect();
        for leg in &seeds {
            let coeff = g0.inner(&w, leg);
            for j in 0..n {
                w[j] = w[j] - coeff * leg[j];
            }
        }
        let norm = g0.norm(&w);
        if norm > S::real(1e-6) {
            for c in w.iter_mut() {
                *c = *c / norm;
            }
            seeds.push(w);
        }
    }
    if seeds.len() != n {
        return Err(FinslerError::invalid(
            "coordinate directions failed to complete the frame",
        ));
    }

    let h = grid.coarse_step();
    let half = h * S::real(0.5);
    let sixth = h / S::real(6.0);
    let coarse = grid.coarse_len();

    let rhs = |half_idx: usize, e: &[S]| -> Vec<S> {
        let (conn, _) = grid.coarse_half_ops(half_idx);
        let mut out = mat_vec(conn, e);
        for c in out.iter_mut() {
            *c = -*c;
        }
        out
    };
    let add = |y: &[S], a: S, d: &[S]| -> Vec<S> {
        y.iter().zip(d).map(|(&p, &q)| p + a * q).collect()
    };

    let mut times = Vec::with_capacity(coarse);
    let mut fine_indices = Vec::with_capacity(coarse);
    let mut legs = Vec::with_capacity(coarse);
    times.push(S::zero());
    fine_indices.push(0);
    legs.push(seeds.clone());
    let mut current = seeds;
    for c in 0..coarse - 1 {
        let mut next = Vec::with_capacity(n);
        for e in &current {
            let k1 = rhs(2 * c, e);
            let k2 = rhs(2 * c + 1, &add(e, half, &k1));
            let k3 = rhs(2 * c + 1, &add(e, half, &k2));
            let k4 = rhs(2 * c + 2, &add(e, h, &k3));
            let stepped: Vec<S> = (0..n)
                .map(|i| e[i] + sixth * (k1[i] + S::real(2.0) * (k2[i] + k3[i]) + k4[i]))
                .collect();
            next.push(stepped);
        }
        current = next;
        times.push(h * S::from_usize(c + 1).expect("node index fits"));
        fine_indices.push(grid.fine_index(c + 1));
        legs.push(current.clone());
    }

    Ok(ParallelFrame {
        times,
        fine_indices,
        legs,
    })
}

/// The two witnesses of local symmetry along one geodesic, plus the
/// transport drift diagnostic.
#[derive(Clone, Copy, Debug)]
pub struct SymmetryDiagnostics<S> {
    /// Worst interior norm of `D(R(E_k))` over a parallel frame.
    pub frame_residual: S,
    /// Variation-equation defect of the covariant derivative of an
    /// integrated Jacobi field.
    pub derived_field_residual: S,
    /// Worst `g`-orthonormality drift of the transported frame.
    pub frame_defect: S,
}

/// Measures local symmetry along the unit-speed geodesic from `start`.
///
/// `steps` fine integration steps cover `[0, t_max]` and must be a
/// multiple of `2 * stride` so the operator grid closes.
pub fn local_symmetry_residual<S: Real>(
    metric: &MetricDescriptor<S>,
    start: &PointedVector<S>,
    t_max: S,
    steps: usize,
    stride: usize,
) -> Result<SymmetryDiagnostics<S>> {
    let trajectory = crate::geodesic::integrate_geodesic(metric, start, t_max, steps)?;
    if !trajectory.is_complete() {
        return Err(FinslerError::domain(format!(
            "geodesic left the admissible region: {}",
            trajectory.exit_reason().unwrap_or("unknown")
        )));
    }
    let grid = CurvatureGrid::build(metric, &trajectory, stride)?;
    let frame = parallel_frame(metric, &trajectory, &grid)?;

    let n = metric.dim();
    let coarse = grid.coarse_len();
    let h = grid.coarse_step();
    let positions: Vec<Vec<S>> = frame
        .fine_indices()
        .iter()
        .map(|&k| trajectory.positions()[k].clone())
        .collect();
    let velocities: Vec<Vec<S>> = frame
        .fine_indices()
        .iter()
        .map(|&k| trajectory.velocities()[k].clone())
        .collect();

    let mut frame_residual = S::zero();
    for leg in 0..n {
        let curved: Vec<Vec<S>> = (0..coarse)
            .map(|c| {
                let (_, curv) = grid.coarse_ops(c);
                mat_vec(curv, &frame.legs(c)[leg])
            })
            .collect();
        let dw = covariant_derivative_along(metric, &positions, &velocities, &curved, h)?;
        frame_residual = frame_residual.max(interior_max_norm(&dw, 2));
    }

    let j0 = frame.legs(0)[n - 1].clone();
    let dj0: Vec<S> = frame.legs(0)[0]
        .iter()
        .zip(&frame.legs(0)[n - 1])
        .map(|(&a, &b)| S::real(0.4) * a + S::real(0.7) * b)
        .collect();
    let jac = integrate_jacobi(&grid, &j0, &dj0)?;
    let derived_field_residual = jacobi_residual(
        metric,
        &positions,
        &velocities,
        jac.derivative(),
        h,
    )?;

    let frame_defect = frame.orthonormality_defect(metric, &trajectory)?;
    Ok(SymmetryDiagnostics {
        frame_residual,
        derived_field_residual,
        frame_defect,
    })
}
