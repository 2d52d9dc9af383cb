//! Flows of wind fields, their tangent pushforwards, and the invariants
//! they generate.
//!
//! The flow `Psi_t` solves `d/dt Psi_t(x) = v(Psi_t(x))`.  Its derivative
//! `dPsi_t` acts on tangent vectors and solves the variational equation
//! `d/dt J = Dv(Psi_t(x)) J` along the same orbit.  When the wind is an
//! isometry generator (a Killing field) of a metric, `Psi_t` maps
//! geodesics to geodesics and `g(v, γ')` is constant along every geodesic;
//! both facts are measurable and both measurements live here.

use crate::error::{FinslerError, Result};
use crate::geodesic::GeodesicTrajectory;
use crate::jet::Jet;
use crate::metric::{MetricDescriptor, PointedVector};
use crate::wind::WindField;
use crate::Real;

enum FlowMode<S> {
    ClosedForm,
    Integrated { step: S },
}

/// The time-`t` flow of a wind field, with closed forms where the field
/// has one and RK4 integration of the orbit and variational equations
/// otherwise.
pub struct FlowMap<S: Real> {
    wind: WindField<S>,
    mode: FlowMode<S>,
}

impl<S: Real> FlowMap<S> {
    /// Picks the closed form when available, otherwise integrates with a
    /// default step of `1e-3`.
    pub fn new(wind: WindField<S>) -> FlowMap<S> {
        let mode = if wind.has_closed_form_flow() {
            FlowMode::ClosedForm
        } else {
            FlowMode::Integrated {
                step: S::real(1e-3),
            }
        };
        FlowMap { wind, mode }
    }

    /// Forces numerical integration with the given step, even when a
    /// closed form exists.  Cross-validation tests use this to check the
    /// integrator against the closed forms.
    pub fn integrated(wind: WindField<S>, step: S) -> FlowMap<S> {
        assert!(step > S::zero(), "flow step must be positive");
        FlowMap {
            wind,
            mode: FlowMode::Integrated { step },
        }
    }

    pub fn wind(&self) -> &WindField<S> {
        &self.wind
    }

    /// `Psi_t(x)`.
    pub fn at(&self, x: &[S], t: S) -> Result<Vec<S>> {
        match &self.mode {
            FlowMode::ClosedForm => self.wind.closed_flow(x, t),
            FlowMode::Integrated { step } => {
                let (x_t, _) = self.integrate(x, None, t, *step)?;
                Ok(x_t)
            }
        }
    }

    /// `(Psi_t(x), dPsi_t|_x ξ)`: the orbit point and the transported
    /// tangent vector.
    pub fn pushforward(&self, x: &[S], xi: &[S], t: S) -> Result<(Vec<S>, Vec<S>)> {
        if xi.len() != x.len() {
            return Err(FinslerError::invalid(
                "tangent vector dimension does not match the point",
            ));
        }
        match &self.mode {
            FlowMode::ClosedForm => Ok((
                self.wind.closed_flow(x, t)?,
                self.wind.closed_pushforward(x, t, xi)?,
            )),
            FlowMode::Integrated { step } => {
                let (x_t, j_t) = self.integrate(x, Some(xi), t, *step)?;
                Ok((x_t, j_t.expect("variational state requested")))
            }
        }
    }

    /// Pushes a whole pointed vector along the flow.
    pub fn pushforward_pointed(
        &self,
        pv: &PointedVector<S>,
        t: S,
    ) -> Result<PointedVector<S>> {
        let (x, xi) = self.pushforward(&pv.x, &pv.xi, t)?;
        PointedVector::new(x, xi)
    }

    /// RK4 on the orbit equation, with the variational equation coupled in
    /// when a tangent seed is supplied.  Handles negative times by flowing
    /// backward.
    fn integrate(
        &self,
        x0: &[S],
        xi0: Option<&[S]>,
        t: S,
        step: S,
    ) -> Result<(Vec<S>, Option<Vec<S>>)> {
        let n = x0.len();
        let total = t.abs();
        if total == S::zero() {
            return Ok((x0.to_vec(), xi0.map(|s| s.to_vec())));
        }
        let steps = (total / step).ceil().to_f64().unwrap_or(1.0).max(1.0) as usize;
        let h = t / S::from_usize(steps).expect("step count fits the scalar type");
        let half = h * S::real(0.5);
        let sixth = h / S::real(6.0);

        let rhs = |x: &[S], j: Option<&[S]>| -> Result<(Vec<S>, Option<Vec<S>>)> {
            match j {
                None => Ok((self.wind.eval(x)?, None)),
                Some(j) => {
                    let jets = self.wind.eval_jets(&Jet::variables(x, 1))?;
                    let v: Vec<S> = jets.iter().map(|c| c.value()).collect();
                    let mut jdot = vec![S::zero(); n];
                    let mut alpha = vec![0usize; n];
                    for (i, jet) in jets.iter().enumerate() {
                        for k in 0..n {
                            alpha.iter_mut().for_each(|a| *a = 0);
                            alpha[k] = 1;
                            jdot[i] = jdot[i] + jet.partial(&alpha) * j[k];
                        }
                    }
                    Ok((v, Some(jdot)))
                }
            }
        };

        let add = |x: &[S], a: S, d: &[S]| -> Vec<S> {
            x.iter().zip(d).map(|(&u, &w)| u + a * w).collect()
        };
        let add_opt = |x: &Option<Vec<S>>, a: S, d: &Option<Vec<S>>| -> Option<Vec<S>> {
            match (x, d) {
                (Some(x), Some(d)) => Some(add(x, a, d)),
                _ => None,
            }
        };

        let mut x = x0.to_vec();
        let mut j = xi0.map(|s| s.to_vec());
        for _ in 0..steps {
            let (k1x, k1j) = rhs(&x, j.as_deref())?;
            let (k2x, k2j) = rhs(
                &add(&x, half, &k1x),
                add_opt(&j, half, &k1j).as_deref(),
            )?;
            let (k3x, k3j) = rhs(
                &add(&x, half, &k2x),
                add_opt(&j, half, &k2j).as_deref(),
            )?;
            let (k4x, k4j) = rhs(&add(&x, h, &k3x), add_opt(&j, h, &k3j).as_deref())?;
            for i in 0..n {
                x[i] = x[i]
                    + sixth * (k1x[i] + S::real(2.0) * (k2x[i] + k3x[i]) + k4x[i]);
            }
            if let Some(j) = j.as_mut() {
                let (k1, k2, k3, k4) = (
                    k1j.as_ref().unwrap(),
                    k2j.as_ref().unwrap(),
                    k3j.as_ref().unwrap(),
                    k4j.as_ref().unwrap(),
                );
                for i in 0..n {
                    j[i] = j[i]
                        + sixth * (k1[i] + S::real(2.0) * (k2[i] + k3[i]) + k4[i]);
                }
            }
        }
        Ok((x, j))
    }
}

/// How far the wind is from generating isometries of `metric`: the largest
/// normalized derivative `|d/dt F(Psi_t x, dPsi_t ξ)| / F` at `t = 0` over
/// the given pointed vectors, by central difference.
///
/// A genuine Killing field scores near roundoff; a generic field scores
/// at the size of its symmetry defect.
pub fn killing_residual<S: Real>(
    metric: &MetricDescriptor<S>,
    wind: &WindField<S>,
    samples: &[PointedVector<S>],
) -> Result<S> {
    if samples.is_empty() {
        return Err(FinslerError::invalid(
            "killing residual needs at least one sample",
        ));
    }
    let flow = FlowMap::new(wind.clone());
    let dt = S::real(1e-5);
    let mut worst = S::zero();
    for pv in samples {
        let f0 = metric.eval(pv)?;
        let plus = flow.pushforward_pointed(pv, dt)?;
        let minus = flow.pushforward_pointed(pv, -dt)?;
        let fp = metric.eval(&plus)?;
        let fm = metric.eval(&minus)?;
        let derivative = (fp - fm) / (S::real(2.0) * dt);
        worst = worst.max((derivative / f0).abs());
    }
    Ok(worst)
}

/// The momentum the wind generates at one pointed vector:
/// `g_(x,ξ)(ξ, v(x)) = F dF(v)`.
///
/// Along any geodesic of a metric whose isometries the wind generates,
/// this quantity is constant.
pub fn noether_integral<S: Real>(
    metric: &MetricDescriptor<S>,
    wind: &WindField<S>,
    pv: &PointedVector<S>,
) -> Result<S> {
    let f = metric.eval(pv)?;
    let grad = metric.direction_gradient(pv)?;
    let v = wind.eval(&pv.x)?;
    let df_v = grad
        .iter()
        .zip(&v)
        .fold(S::zero(), |acc, (&d, &w)| acc + d * w);
    Ok(f * df_v)
}

/// [`noether_integral`] at every sample of a trajectory.
pub fn noether_along<S: Real>(
    metric: &MetricDescriptor<S>,
    wind: &WindField<S>,
    trajectory: &GeodesicTrajectory<S>,
) -> Result<Vec<S>> {
    (0..trajectory.len())
        .map(|i| noether_integral(metric, wind, &trajectory.sample(i)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{integrate_geodesic, unit_vector};
    use crate::zermelo::zermelo_metric;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn constant_wind_translates() {
        let wind = WindField::constant(vec![0.5, -0.2]);
        let flow = FlowMap::new(wind);
        let x = flow.at(&[1.0, 2.0], 3.0).unwrap();
        assert_relative_eq!(x[0], 2.5);
        assert_relative_eq!(x[1], 1.4);
        let (_, xi) = flow.pushforward(&[1.0, 2.0], &[0.3, 0.4], 3.0).unwrap();
        assert_relative_eq!(xi[0], 0.3);
        assert_relative_eq!(xi[1], 0.4);
    }

    #[test]
    fn rotation_wind_rotates_points_and_tangents() {
        let omega = 0.25;
        let wind = WindField::planar_rotation(2, omega);
        let flow = FlowMap::new(wind);
        let quarter = std::f64::consts::FRAC_PI_2 / omega;
        let x = flow.at(&[1.0, 0.0], quarter).unwrap();
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
        let (_, xi) = flow.pushforward(&[1.0, 0.0], &[0.0, 1.0], quarter).unwrap();
        assert_relative_eq!(xi[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(xi[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn integrated_flow_matches_closed_rotation() {
        let omega = 0.7;
        let closed = FlowMap::new(WindField::planar_rotation(2, omega));
        let numeric = FlowMap::integrated(WindField::planar_rotation(2, omega), 1e-3);
        let x0 = [0.8, -0.3];
        let xi0 = [0.2, 0.9];
        for &t in &[0.5, 2.0, -1.3] {
            let (xa, ja) = closed.pushforward(&x0, &xi0, t).unwrap();
            let (xb, jb) = numeric.pushforward(&x0, &xi0, t).unwrap();
            for i in 0..2 {
                assert_relative_eq!(xa[i], xb[i], epsilon = 1e-11);
                assert_relative_eq!(ja[i], jb[i], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn custom_wind_without_closed_form_integrates() {
        let wind = WindField::custom(2, |x: &[Jet<f64>]| {
            Ok(vec![-x[1].clone(), x[0].clone()])
        });
        assert!(!wind.has_closed_form_flow());
        let flow = FlowMap::new(wind);
        let half_turn = std::f64::consts::PI;
        let x = flow.at(&[1.0, 0.0], half_turn).unwrap();
        assert_relative_eq!(x[0], -1.0, epsilon = 1e-10);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn rotations_generate_sphere_isometries() {
        let metric = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.3);
        let samples: Vec<PointedVector<f64>> = vec![
            PointedVector::new(vec![0.3, -0.5], vec![1.0, 0.2]).unwrap(),
            PointedVector::new(vec![-0.9, 0.4], vec![0.1, -1.2]).unwrap(),
            PointedVector::new(vec![1.1, 0.9], vec![-0.7, 0.5]).unwrap(),
        ];
        let residual = killing_residual(&metric, &wind, &samples).unwrap();
        assert!(residual < 1e-9, "residual {residual}");
    }

    #[test]
    fn translations_generate_flat_isometries() {
        let metric = MetricDescriptor::<f64>::euclidean(2);
        let wind = WindField::constant(vec![0.4, 0.1]);
        let samples = vec![PointedVector::new(vec![0.2, 0.7], vec![0.6, -0.3]).unwrap()];
        let residual = killing_residual(&metric, &wind, &samples).unwrap();
        assert!(residual < 1e-12, "residual {residual}");
    }

    #[test]
    fn tilted_sphere_breaks_the_rotation_symmetry() {
        let metric = MetricDescriptor::<f64>::sphere_stereographic_tilted(2, vec![0.3, 0.0]);
        let wind = WindField::stereographic_rotation(2, 0.3);
        let samples = vec![
            PointedVector::new(vec![0.5, 0.2], vec![0.8, -0.4]).unwrap(),
            PointedVector::new(vec![-0.3, 0.6], vec![0.2, 1.0]).unwrap(),
        ];
        let residual = killing_residual(&metric, &wind, &samples).unwrap();
        assert!(residual > 1e-2, "residual {residual}");
    }

    #[test]
    fn momentum_is_conserved_along_wind_deformed_geodesics() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.3);
        let metric = zermelo_metric(&base, &wind).unwrap();
        let x = vec![0.5, -0.1];
        let dir = unit_vector(&metric, &x, &[0.4, 0.8]).unwrap();
        let pv = PointedVector::new(x, dir).unwrap();
        let traj = integrate_geodesic(&metric, &pv, 2.0, 2000).unwrap();
        assert!(traj.is_complete());
        let momenta = noether_along(&metric, &wind, &traj).unwrap();
        let first = momenta[0];
        for m in momenta {
            assert!((m - first).abs() < 1e-9, "momentum drifted from {first} to {m}");
        }
    }

    #[test]
    fn momentum_drifts_without_symmetry() {
        // Same wind, but the metric is a tilted sphere the rotation does
        // not preserve; the candidate invariant should visibly move.
        let metric = MetricDescriptor::<f64>::sphere_stereographic_tilted(2, vec![0.3, 0.0]);
        let wind = WindField::stereographic_rotation(2, 0.3);
        let x = vec![0.5, -0.1];
        let dir = unit_vector(&metric, &x, &[0.4, 0.8]).unwrap();
        let pv = PointedVector::new(x, dir).unwrap();
        let traj = integrate_geodesic(&metric, &pv, 2.0, 2000).unwrap();
        let momenta = noether_along(&metric, &wind, &traj).unwrap();
        let first = momenta[0];
        let spread = momenta
            .iter()
            .fold(0.0f64, |acc, &m| acc.max((m - first).abs()));
        assert!(spread > 1e-3, "spread {spread}");
    }

    #[test]
    fn zero_time_flow_is_the_identity() {
        let wind = WindField::custom(2, |x: &[Jet<f64>]| {
            Ok(vec![x[1].clone(), -x[0].clone()])
        });
        let flow = FlowMap::new(wind);
        let (x, xi) = flow.pushforward(&[0.4, 0.6], &[1.0, 2.0], 0.0).unwrap();
        assert_relative_eq!(x[0], 0.4);
        assert_relative_eq!(xi[1], 2.0);
    }

    #[test]
    fn flow_map_shares_the_wind_it_was_built_from() {
        let eval = Arc::new(|x: &[Jet<f64>]| Ok(vec![x[0].clone(), x[1].clone()]));
        let wind = WindField::custom(2, move |x: &[Jet<f64>]| eval(x));
        let flow = FlowMap::new(wind);
        assert_eq!(flow.wind().dim(), 2);
    }

    #[test]
    fn integrated_flow_satisfies_the_group_law() {
        let wind = WindField::custom(2, |x: &[Jet<f64>]| {
            let s = (&x[0] * &x[0]).add_scalar(1.0).recip()?;
            Ok(vec![&x[1] * &s, -(&x[0] * &s)])
        });
        let flow = FlowMap::integrated(wind, 1e-3);
        let x0 = [0.3, -0.4];
        for t in [0.7, 1.9] {
            let forward = flow.at(&x0, t).unwrap();
            let back = flow.at(&forward, -t).unwrap();
            let err = ((back[0] - x0[0]).powi(2) + (back[1] - x0[1]).powi(2)).sqrt();
            assert!(err < 1e-9, "round trip error {err} at t = {t}");
        }
    }

    #[test]
    fn pushforward_matches_a_differenced_flow_jacobian() {
        let wind = WindField::custom(2, |x: &[Jet<f64>]| {
            let s = (&x[0] * &x[0]).add_scalar(1.0).recip()?;
            Ok(vec![&x[1] * &s, -(&x[0] * &s)])
        });
        let flow = FlowMap::integrated(wind, 1e-3);
        let x0 = [0.5, 0.2];
        let xi = [0.8, -0.3];
        let t = 1.1;
        let (_, pushed) = flow.pushforward(&x0, &xi, t).unwrap();
        let s = 1e-5;
        for c in 0..2 {
            let mut plus = x0;
            let mut minus = x0;
            plus[0] += s * xi[0];
            plus[1] += s * xi[1];
            minus[0] -= s * xi[0];
            minus[1] -= s * xi[1];
            let fp = flow.at(&plus, t).unwrap();
            let fm = flow.at(&minus, t).unwrap();
            let fd = (fp[c] - fm[c]) / (2.0 * s);
            assert_relative_eq!(pushed[c], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn shear_field_is_not_a_flat_symmetry() {
        let metric = MetricDescriptor::<f64>::euclidean(2);
        let wind = WindField::custom(2, |x: &[Jet<f64>]| {
            Ok(vec![x[0].clone(), x[0].same_shape(0.0)])
        });
        let samples = vec![
            PointedVector::new(vec![0.3, 0.1], vec![1.0, 0.0]).unwrap(),
            PointedVector::new(vec![-0.2, 0.5], vec![0.6, 0.8]).unwrap(),
            PointedVector::new(vec![0.0, -0.4], vec![0.0, 1.0]).unwrap(),
        ];
        let residual = killing_residual(&metric, &wind, &samples).unwrap();
        assert!(residual > 1e-2, "residual {residual}");
    }

    #[test]
    fn flat_momentum_is_the_euclidean_pairing_with_the_wind() {
        let metric = MetricDescriptor::<f64>::euclidean(2);
        let wind = WindField::constant(vec![0.5, -0.2]);
        let x = [1.3, -0.7];
        let xi = [0.6, 0.8];
        let pv = PointedVector::new(x.to_vec(), xi.to_vec()).unwrap();
        let momentum = noether_integral(&metric, &wind, &pv).unwrap();
        // F dF(v) with F = |ξ| collapses to the plain pairing ⟨v, ξ⟩.
        let expected = 0.5 * 0.6 + (-0.2) * 0.8;
        assert_relative_eq!(momentum, expected, epsilon = 1e-12);
    }
}
