//! Independent reference routes used by the test suites.
//!
//! Nothing in the engine proper calls into this module.  Each function here
//! reaches a quantity the engine also computes, but by a deliberately
//! different path: closed-form algebra instead of root solves, explicit
//! sphere geometry instead of chart integration, difference quotients of
//! nearby geodesics instead of the variational equation.  Agreement between
//! the two routes is what the tests certify.

use crate::error::{FinslerError, Result};
use crate::geodesic::{integrate_geodesic_any_speed, GeodesicTrajectory};
use crate::metric::{MetricDescriptor, PointedVector};
use crate::Real;

/// Closed-form wind deformation of a Riemannian norm.
///
/// With `a` the (row-major, symmetric positive definite) metric matrix at
/// the point, the deformed norm `r` of `xi` under wind `v` solves
/// `a(xi - r v, xi - r v) = r^2`, a quadratic with exactly one positive
/// root whenever `a(v, v) < 1`:
///
/// ```text
/// r = ( -a(xi, v) + sqrt(a(xi, v)^2 + (1 - a(v, v)) a(xi, xi)) ) / (1 - a(v, v))
/// ```
pub fn randers_norm<S: Real>(a: &[S], v: &[S], xi: &[S]) -> Result<S> {
    let n = xi.len();
    if a.len() != n * n || v.len() != n {
        return Err(FinslerError::invalid("randers_norm shape mismatch"));
    }
    let quad = |u: &[S], w: &[S]| crate::linalg::bilinear(a, u, w);
    let vv = quad(v, v);
    if vv >= S::one() {
        return Err(FinslerError::Inadmissible {
            value: vv.sqrt().to_f64().unwrap_or(f64::NAN),
        });
    }
    let b = quad(xi, v);
    let q = quad(xi, xi);
    let denom = S::one() - vv;
    Ok(((b * b + denom * q).sqrt() - b) / denom)
}

/// Chart point to unit-sphere point for the stereographic chart used by
/// [`MetricDescriptor::sphere_stereographic`] in dimension 2: projection
/// from the north pole onto the equatorial plane, chart origin at the south
/// pole.
pub fn chart_to_sphere<S: Real>(x: &[S]) -> [S; 3] {
    let s = x[0] * x[0] + x[1] * x[1];
    let u = S::one() + s;
    [
        S::real(2.0) * x[0] / u,
        S::real(2.0) * x[1] / u,
        (s - S::one()) / u,
    ]
}

/// Inverse of [`chart_to_sphere`]; undefined at the north pole itself.
pub fn sphere_to_chart<S: Real>(p: &[S; 3]) -> [S; 2] {
    let denom = S::one() - p[2];
    [p[0] / denom, p[1] / denom]
}

/// Differential of [`chart_to_sphere`] applied to a chart tangent vector.
/// Its Euclidean length equals the chart metric value `2 |xi| / (1 + |x|^2)`,
/// since the chart is a conformal isometry onto the round sphere.
pub fn chart_velocity_to_sphere<S: Real>(x: &[S], xi: &[S]) -> [S; 3] {
    let s = x[0] * x[0] + x[1] * x[1];
    let u = S::one() + s;
    let w = S::real(2.0) * (x[0] * xi[0] + x[1] * xi[1]);
    let two = S::real(2.0);
    [
        two * xi[0] / u - two * x[0] * w / (u * u),
        two * xi[1] / u - two * x[1] * w / (u * u),
        two * w / (u * u),
    ]
}

/// Great-circle geodesic of the chart metric through `(x0, xi0)`, evaluated
/// at time `t`: returns the chart point and chart velocity.
///
/// Works for any speed: the sphere curve is
/// `cos(ct) P + sin(ct) V / c` with `c` the sphere speed of the lifted
/// start.  Breaks down (coordinates diverge) if the circle meets the north
/// pole; see [`great_circle_max_chart_radius`] to predict that.
pub fn great_circle_chart<S: Real>(x0: &[S], xi0: &[S], t: S) -> ([S; 2], [S; 2]) {
    let p = chart_to_sphere(x0);
    let v = chart_velocity_to_sphere(x0, xi0);
    let c = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (sn, cs) = ((c * t).sin(), (c * t).cos());
    let mut pos = [S::zero(); 3];
    let mut vel = [S::zero(); 3];
    for k in 0..3 {
        pos[k] = cs * p[k] + sn * v[k] / c;
        vel[k] = c * (cs * v[k] / c - sn * p[k]);
    }
    let chart = sphere_to_chart(&pos);
    // Differential of the projection (X, Y, Z) -> (X, Y) / (1 - Z).
    let denom = S::one() - pos[2];
    let chart_vel = [
        (vel[0] * denom + pos[0] * vel[2]) / (denom * denom),
        (vel[1] * denom + pos[1] * vel[2]) / (denom * denom),
    ];
    (chart, chart_vel)
}

/// Largest chart radius the great circle through `(x0, xi0)` ever reaches.
///
/// The sphere height along the circle oscillates with amplitude
/// `sqrt(P_z^2 + (V_z / c)^2)`; chart radius and height are linked by
/// `|x|^2 = (1 + Z) / (1 - Z)`.  Returns infinity when the circle passes
/// through the north pole.
pub fn great_circle_max_chart_radius<S: Real>(x0: &[S], xi0: &[S]) -> S {
    let p = chart_to_sphere(x0);
    let v = chart_velocity_to_sphere(x0, xi0);
    let c = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let amp = (p[2] * p[2] + (v[2] / c) * (v[2] / c)).sqrt().min(S::one());
    if S::one() - amp <= S::zero() {
        return S::infinity();
    }
    ((S::one() + amp) / (S::one() - amp)).sqrt()
}

/// Jacobi field by geodesic shooting: central difference of a family of
/// geodesics with perturbed initial data.
///
/// The family is `gamma_s` with `x_s(0) = x0 + s dx` and
/// `xdot_s(0) = xi0 + s dxi`; the returned samples approximate the
/// variation field `d/ds gamma_s(t) |_{s=0}` on the trajectory's time grid,
/// with O(s^2) truncation error.  The family members are genuine spray
/// solutions but not unit-speed, which is exactly what the variational
/// equation allows.
pub fn jacobi_by_shooting<S: Real>(
    metric: &MetricDescriptor<S>,
    pv0: &PointedVector<S>,
    dx: &[S],
    dxi: &[S],
    t_max: S,
    steps: usize,
    s: S,
) -> Result<Vec<Vec<S>>> {
    let shoot = |sign: S| -> Result<GeodesicTrajectory<S>> {
        let x: Vec<S> = pv0
            .x
            .iter()
            .zip(dx)
            .map(|(&p, &d)| p + sign * s * d)
            .collect();
        let xi: Vec<S> = pv0
            .xi
            .iter()
            .zip(dxi)
            .map(|(&p, &d)| p + sign * s * d)
            .collect();
        integrate_geodesic_any_speed(metric, &PointedVector::new(x, xi)?, t_max, steps)
    };
    let plus = shoot(S::one())?;
    let minus = shoot(-S::one())?;
    if plus.len() != minus.len() {
        return Err(FinslerError::domain(
            "shooting family left the admissible region",
        ));
    }
    let half = (S::real(2.0) * s).recip();
    Ok(plus
        .positions()
        .iter()
        .zip(minus.positions())
        .map(|(xp, xm)| {
            xp.iter()
                .zip(xm)
                .map(|(&a, &b)| (a - b) * half)
                .collect()
        })
        .collect())
}
