//! Geodesic integration for any metric the spray extractor can see.
//!
//! Geodesics solve `x'' = -2 G(x, x')` with `G` the spray of the metric.
//! The integrator is classical fixed-step RK4 on the first-order system in
//! `(x, ξ)`.  The metric value is a first integral of this system, so a
//! trajectory started with `F(x, ξ) = 1` stays unit speed up to the scheme
//! error and arc length equals elapsed time.
//!
//! Charts have edges.  When a step would leave the admissible region (or
//! any stage evaluation fails) the trajectory is truncated at the last
//! good sample and returned with an exit reason instead of an error, so
//! callers can distinguish "ran to the requested time" from "left the
//! chart" without losing the prefix.

use crate::error::{FinslerError, Result};
use crate::metric::{MetricDescriptor, PointedVector};
use crate::spray::spray;
use crate::Real;

/// Tolerated deviation from unit speed at the start of
/// [`integrate_geodesic`].
pub const UNIT_SPEED_TOLERANCE: f64 = 1e-9;

/// A sampled geodesic: times, positions, and velocities on a uniform grid,
/// possibly truncated where the curve left the admissible region.
#[derive(Clone, Debug)]
pub struct GeodesicTrajectory<S> {
    times: Vec<S>,
    positions: Vec<Vec<S>>,
    velocities: Vec<Vec<S>>,
    exit: Option<String>,
}

impl<S: Real> GeodesicTrajectory<S> {
    /// Number of stored samples, including the initial condition.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn positions(&self) -> &[Vec<S>] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec<S>] {
        &self.velocities
    }

    /// False if integration stopped before the requested time.
    pub fn is_complete(&self) -> bool {
        self.exit.is_none()
    }

    /// Why the trajectory was truncated, if it was.
    pub fn exit_reason(&self) -> Option<&str> {
        self.exit.as_deref()
    }

    /// Time of the last stored sample.
    pub fn final_time(&self) -> S {
        *self.times.last().expect("trajectory has at least one sample")
    }

    /// Sample `i` as a pointed vector.
    pub fn sample(&self, i: usize) -> Result<PointedVector<S>> {
        PointedVector::new(self.positions[i].clone(), self.velocities[i].clone())
    }
}

fn spray_rhs<S: Real>(
    metric: &MetricDescriptor<S>,
    x: &[S],
    xi: &[S],
) -> Result<(Vec<S>, Vec<S>)> {
    let g = spray(metric, &PointedVector::new(x.to_vec(), xi.to_vec())?)?;
    Ok((xi.to_vec(), g.iter().map(|&c| -(c + c)).collect()))
}

fn axpy<S: Real>(y: &[S], a: S, d: &[S]) -> Vec<S> {
    y.iter().zip(d).map(|(&u, &v)| u + a * v).collect()
}

/// Integrates the spray equation from `pv` for time `t_max` in `steps`
/// uniform RK4 steps, without any speed normalization.
///
/// Used directly by variation-of-geodesics code, where the family members
/// are spray solutions of slightly different speeds.
pub fn integrate_geodesic_any_speed<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
    t_max: S,
    steps: usize,
) -> Result<GeodesicTrajectory<S>> {
    if metric.dim() != pv.dim() {
        return Err(FinslerError::invalid(
            "initial condition dimension does not match the metric",
        ));
    }
    if steps == 0 {
        return Err(FinslerError::invalid("step count must be positive"));
    }
    if !metric.is_admissible_point(&pv.x) {
        return Err(FinslerError::invalid(
            "initial point is outside the admissible region",
        ));
    }
    let h = t_max / S::from_usize(steps).expect("step count fits the scalar type");
    let half = h * S::real(0.5);
    let sixth = h / S::real(6.0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    let mut exit = None;

    let mut x = pv.x.clone();
    let mut v = pv.xi.clone();
    times.push(S::zero());
    positions.push(x.clone());
    velocities.push(v.clone());

    'outer: for step in 0..steps {
        let stage = |xs: &[S], vs: &[S]| spray_rhs(metric, xs, vs);
        let result = (|| -> Result<(Vec<S>, Vec<S>)> {
            let (k1x, k1v) = stage(&x, &v)?;
            let (k2x, k2v) = stage(&axpy(&x, half, &k1x), &axpy(&v, half, &k1v))?;
            let (k3x, k3v) = stage(&axpy(&x, half, &k2x), &axpy(&v, half, &k2v))?;
            let (k4x, k4v) = stage(&axpy(&x, h, &k3x), &axpy(&v, h, &k3v))?;
            let next_x: Vec<S> = (0..x.len())
                .map(|i| {
                    x[i] + sixth
                        * (k1x[i] + S::real(2.0) * (k2x[i] + k3x[i]) + k4x[i])
                })
                .collect();
            let next_v: Vec<S> = (0..v.len())
                .map(|i| {
                    v[i] + sixth
                        * (k1v[i] + S::real(2.0) * (k2v[i] + k3v[i]) + k4v[i])
                })
                .collect();
            Ok((next_x, next_v))
        })();
        match result {
            Ok((next_x, next_v)) => {
                if !metric.is_admissible_point(&next_x) {
                    exit = Some("left the admissible region".to_string());
                    break 'outer;
                }
                x = next_x;
                v = next_v;
                times.push(h * S::from_usize(step + 1).expect("step index fits"));
                positions.push(x.clone());
                velocities.push(v.clone());
            }
            Err(err) => {
                exit = Some(format!("integration stage failed: {err}"));
                break 'outer;
            }
        }
    }

    Ok(GeodesicTrajectory {
        times,
        positions,
        velocities,
        exit,
    })
}

/// Integrates a unit-speed geodesic.  The initial condition must satisfy
/// `|F(x, ξ) - 1| <= UNIT_SPEED_TOLERANCE`; arc length then equals time.
pub fn integrate_geodesic<S: Real>(
    metric: &MetricDescriptor<S>,
    pv: &PointedVector<S>,
    t_max: S,
    steps: usize,
) -> Result<GeodesicTrajectory<S>> {
    let f = metric.eval(pv)?;
    let drift = (f - S::one()).abs();
    if drift > S::real(UNIT_SPEED_TOLERANCE) {
        return Err(FinslerError::invalid(format!(
            "initial speed {f} is not unit within {UNIT_SPEED_TOLERANCE:e}"
        )));
    }
    integrate_geodesic_any_speed(metric, pv, t_max, steps)
}

/// Rescales a direction so the metric takes value one on it.
pub fn unit_vector<S: Real>(
    metric: &MetricDescriptor<S>,
    x: &[S],
    direction: &[S],
) -> Result<Vec<S>> {
    let f = metric.eval(&PointedVector::new(x.to_vec(), direction.to_vec())?)?;
    Ok(direction.iter().map(|&c| c / f).collect())
}

/// Metric value at every stored sample, for conservation checks.
pub fn speed_samples<S: Real>(
    metric: &MetricDescriptor<S>,
    trajectory: &GeodesicTrajectory<S>,
) -> Result<Vec<S>> {
    (0..trajectory.len())
        .map(|i| metric.eval(&trajectory.sample(i)?))
        .collect()
}
