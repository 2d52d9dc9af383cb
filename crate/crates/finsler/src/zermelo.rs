//! Wind deformation of a Finsler metric (the Zermelo construction).
//!
//! Given a base metric `F` and a wind field `v` with `F(x, -v(x)) < 1`, the
//! deformed metric `Ft` is defined implicitly by
//!
//! ```text
//! Ft(x, xi) = F(x, xi - Ft(x, xi) v(x)),
//! ```
//!
//! equivalently: the `Ft`-unit ball at `x` is the `F`-unit ball translated
//! by `v(x)`.  The admissibility bound keeps the origin inside the
//! translated ball, which makes the deformed norm positive, finite, and
//! strictly convex wherever the base is.
//!
//! Two consequences drive the API:
//!
//! * `phi(r) = F(x, xi - r v) - r` is strictly decreasing (its slope is at
//!   most `F(x, -v) - 1 < 0`), so the defining equation has exactly one
//!   positive root and subadditivity bounds it by
//!   `F(x, xi) / (1 - F(x, -v))`.  The scalar solver is a safeguarded
//!   Newton iteration on that bracket.
//! * If `F(x, xi) = 1` then `Ft(x, xi + v) = 1`: unit vectors translate to
//!   unit vectors.  Derivatives transfer the same way; the closed forms
//!   below take base derivatives at `pv.xi` and produce deformed-metric
//!   derivatives valid at the translated argument
//!   `zeta = xi + F(x, xi) v(x)`.  Callers comparing against direct
//!   differentiation must differentiate at `zeta`, not at `xi`.

use crate::error::{FinslerError, Result};
use crate::jet::Jet;
use crate::metric::{MetricDescriptor, MetricKind, PointedVector, Seed};
use crate::wind::WindField;
use crate::Real;

/// Relative residual target for the implicit root solve.
fn solve_tolerance<S: Real>() -> S {
    // Clamp for f32, where 1e-13 would be below machine precision.
    S::real(1e-13).max(S::epsilon() * S::real(8.0))
}

fn check_dims<S: Real>(base: &MetricDescriptor<S>, wind: &WindField<S>) -> Result<()> {
    if base.dim() != wind.dim() {
        return Err(FinslerError::invalid(
            "wind dimension does not match the base metric",
        ));
    }
    Ok(())
}

/// Wind strength `F(x, -v(x))`, the admissibility certificate at one point.
/// Zero wind is trivially admissible.
pub fn wind_strength<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    x: &[S],
) -> Result<S> {
    let v = wind.eval(x)?;
    if v.iter().all(|&c| c == S::zero()) {
        return Ok(S::zero());
    }
    let minus_v: Vec<S> = v.iter().map(|&c| -c).collect();
    base.eval(&PointedVector::new(x.to_vec(), minus_v)?)
}

struct ScalarRoot<S> {
    r: S,
    /// `1 + v(F)` evaluated at the root's base argument; the negated slope
    /// of `phi` there.  Always positive under admissibility.
    one_plus_vf: S,
}

/// Safeguarded Newton iteration for the defining equation at fixed `x`.
fn solve_scalar<S: Real>(
    base: &MetricDescriptor<S>,
    x: &[S],
    xi: &[S],
    v: &[S],
) -> Result<ScalarRoot<S>> {
    let n = x.len();
    let pv = PointedVector::new(x.to_vec(), xi.to_vec())?;
    let f0 = base.eval(&pv)?;
    if v.iter().all(|&c| c == S::zero()) {
        return Ok(ScalarRoot {
            r: f0,
            one_plus_vf: S::one(),
        });
    }
    let minus_v: Vec<S> = v.iter().map(|&c| -c).collect();
    let fv = base.eval(&PointedVector::new(x.to_vec(), minus_v)?)?;
    if fv >= S::one() {
        return Err(FinslerError::Inadmissible {
            value: fv.to_f64().unwrap_or(f64::NAN),
        });
    }

    // phi and phi' from a single-variable first-order jet in r.
    let x_jets: Vec<Jet<S>> = x.iter().map(|&c| Jet::constant(1, 1, c)).collect();
    let phi = |r: S| -> Result<(S, S)> {
        let r_jet = Jet::variable(1, 1, 0, r);
        let arg: Vec<Jet<S>> = (0..n)
            .map(|i| (-&r_jet).scale(v[i]).add_scalar(xi[i]))
            .collect();
        let f = base.eval_jets(&x_jets, &arg)?;
        Ok((f.value() - r, f.partial(&[1]) - S::one()))
    };

    let tol = solve_tolerance::<S>() * f0.max(S::real(1e-300));
    let mut lo = S::zero();
    let mut hi = f0 / (S::one() - fv);
    let mut r = hi;
    let mut residual = f64::NAN;
    for _ in 0..200 {
        match phi(r) {
            // The base norm can be non-smooth where xi - r v crosses the
            // cone vertex; phi is still decreasing there, so a failed
            // evaluation means r is past the root.
            Err(_) => {
                hi = r;
                r = (lo + hi) * S::real(0.5);
            }
            Ok((value, slope)) => {
                residual = value.abs().to_f64().unwrap_or(f64::NAN);
                if value.abs() <= tol {
                    return Ok(ScalarRoot {
                        r,
                        one_plus_vf: -slope,
                    });
                }
                if value > S::zero() {
                    lo = r;
                } else {
                    hi = r;
                }
                let newton = r - value / slope;
                r = if newton > lo && newton < hi {
                    newton
                } else {
                    (lo + hi) * S::real(0.5)
                };
            }
        }
    }
    Err(FinslerError::NoConvergence {
        residual,
        iterations: 200,
    })
}

/// Deformed metric value at a pointed vector.
pub fn zermelo_eval<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    pv: &PointedVector<S>,
) -> Result<S> {
    check_dims(base, wind)?;
    let v = wind.eval(&pv.x)?;
    Ok(solve_scalar(base, &pv.x, &pv.xi, &v)?.r)
}

/// Deformed metric evaluated on jet coordinates.
///
/// The constant term comes from the scalar solve; higher coefficients are
/// polished by a chord iteration `R <- R + (F(X, Xi - R V) - R) / (1 + vF)`
/// whose error gains one exact Taylor grade per pass, so `order + 2` passes
/// suffice regardless of wind strength.
pub fn zermelo_eval_jets<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    x: &[Jet<S>],
    xi: &[Jet<S>],
) -> Result<Jet<S>> {
    check_dims(base, wind)?;
    let v = wind.eval_jets(x)?;
    let x0: Vec<S> = x.iter().map(|j| j.value()).collect();
    let xi0: Vec<S> = xi.iter().map(|j| j.value()).collect();
    let v0: Vec<S> = v.iter().map(|j| j.value()).collect();
    let root = solve_scalar(base, &x0, &xi0, &v0)?;
    if v0.iter().all(|&c| c == S::zero()) && v.iter().all(|j| j.max_abs_coeff() == S::zero()) {
        return base.eval_jets(x, xi);
    }

    let order = xi[0].order();
    let slope_inv = root.one_plus_vf.recip();
    let mut r = xi[0].same_shape(root.r);
    let tol = solve_tolerance::<S>() * (S::one() + root.r.abs());
    let mut residual = S::infinity();
    for _ in 0..(order + 3) {
        let arg: Vec<Jet<S>> = xi
            .iter()
            .zip(&v)
            .map(|(c, w)| c - &(w * &r))
            .collect();
        let phi = &base.eval_jets(x, &arg)? - &r;
        residual = phi.max_abs_coeff();
        if residual <= tol {
            return Ok(r);
        }
        r = &r + &phi.scale(slope_inv);
    }
    // One more evaluation to confirm the final iterate.
    let arg: Vec<Jet<S>> = xi.iter().zip(&v).map(|(c, w)| c - &(w * &r)).collect();
    let phi = &base.eval_jets(x, &arg)? - &r;
    if phi.max_abs_coeff() <= tol * S::real(10.0) {
        return Ok(r);
    }
    Err(FinslerError::NoConvergence {
        residual: residual.to_f64().unwrap_or(f64::NAN),
        iterations: order + 3,
    })
}

/// Packages the deformation as a [`MetricDescriptor`] so the geodesic and
/// curvature machinery can consume it like any other metric.
///
/// The admissible region is the base's intersected with the wind-strength
/// bound, so integrators abort exactly where the deformation stops making
/// sense.
pub fn zermelo_metric<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
) -> Result<MetricDescriptor<S>> {
    check_dims(base, wind)?;
    let eval_base = base.clone();
    let eval_wind = wind.clone();
    let region_base = base.clone();
    let region_wind = wind.clone();
    let evaluator = move |x: &[Jet<S>], xi: &[Jet<S>]| {
        zermelo_eval_jets(&eval_base, &eval_wind, x, xi)
    };
    let admissible = move |x: &[S]| {
        region_base.is_admissible_point(x)
            && matches!(
                wind_strength(&region_base, &region_wind, x),
                Ok(value) if value < S::one()
            )
    };
    Ok(MetricDescriptor::custom(base.dim(), MetricKind::Zermelo, evaluator)
        .with_admissible_region(admissible))
}

/// First and second derivatives of the deformed metric, obtained from base
/// derivatives by closed-form transfer.
///
/// All base quantities are evaluated at `pv = (x, xi)`; all deformed
/// quantities are valid at the translated argument
/// `zeta = xi + F(x, xi) v(x)`, where the deformed metric takes the same
/// value `F(x, xi)`.
#[derive(Clone, Debug)]
pub struct ZermeloTransfer<S> {
    /// `F(x, xi)`, which equals the deformed metric at `zeta`.
    pub value: S,
    /// The translated argument `zeta = xi + F(x, xi) v(x)`.
    pub translated_argument: Vec<S>,
    /// Base direction gradient `dF/dxi` at `xi`.
    pub base_gradient: Vec<S>,
    /// Base direction Hessian of `F` at `xi`, row major.
    pub base_hessian: Vec<S>,
    /// `1 + v(F)` with `v(F) = sum_r v^r dF/dxi_r` at `xi`; positive under
    /// admissibility.
    pub one_plus_vf: S,
    /// Deformed direction gradient at `zeta`.
    pub gradient: Vec<S>,
    /// Deformed direction Hessian at `zeta`, row major.
    pub hessian: Vec<S>,
    /// Deformed fundamental tensor at `(x, zeta)`, row major.
    pub fundamental: Vec<S>,
}

/// Computes the full derivative transfer at one pointed vector.
///
/// The gradient transfers by a plain rescale,
///
/// ```text
/// dFt_zeta = dF_xi / (1 + vF),
/// ```
///
/// while the Hessian picks up rank-one corrections from the dependence of
/// the translation on the direction:
///
/// ```text
/// Ht = H / (1+vF)
///    - (Hv ⊗ dF + dF ⊗ Hv) / (1+vF)^2
///    + (vHv) dF ⊗ dF / (1+vF)^3 .
/// ```
///
/// The correction terms vanish against any vector annihilated by `dF`,
/// and the full expression annihilates `zeta` itself, as the Hessian of a
/// 1-homogeneous function must.  The fundamental tensor then follows from
/// `g = F * Hess F + grad F ⊗ grad F` applied at `zeta`.
pub fn zermelo_transfer<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    pv: &PointedVector<S>,
) -> Result<ZermeloTransfer<S>> {
    check_dims(base, wind)?;
    let n = base.dim();
    let strength = wind_strength(base, wind, &pv.x)?;
    if strength >= S::one() {
        return Err(FinslerError::Inadmissible {
            value: strength.to_f64().unwrap_or(f64::NAN),
        });
    }

    let f_jet = base.jet_at(pv, 2, Seed::DirectionOnly)?;
    let value = f_jet.value();
    let mut alpha = vec![0usize; n];
    let mut base_gradient = vec![S::zero(); n];
    for i in 0..n {
        alpha.iter_mut().for_each(|a| *a = 0);
        alpha[i] = 1;
        base_gradient[i] = f_jet.partial(&alpha);
    }
    let mut base_hessian = vec![S::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            alpha.iter_mut().for_each(|a| *a = 0);
            alpha[i] += 1;
            alpha[j] += 1;
            let h = f_jet.partial(&alpha);
            base_hessian[i * n + j] = h;
            base_hessian[j * n + i] = h;
        }
    }

    let v = wind.eval(&pv.x)?;
    let vf = v
        .iter()
        .zip(&base_gradient)
        .fold(S::zero(), |acc, (&w, &d)| acc + w * d);
    let one_plus_vf = S::one() + vf;
    if one_plus_vf <= S::zero() {
        // Cannot happen under admissibility: vF >= -F(x, -v) > -1.
        return Err(FinslerError::domain(
            "derivative transfer hit a non-positive 1 + v(F)",
        ));
    }

    let translated_argument: Vec<S> = pv
        .xi
        .iter()
        .zip(&v)
        .map(|(&c, &w)| c + value * w)
        .collect();

    let gradient: Vec<S> = base_gradient.iter().map(|&d| d / one_plus_vf).collect();

    let hv = crate::linalg::mat_vec(&base_hessian, &v);
    let vhv = v
        .iter()
        .zip(&hv)
        .fold(S::zero(), |acc, (&w, &c)| acc + w * c);
    let inv1 = one_plus_vf.recip();
    let inv2 = inv1 * inv1;
    let inv3 = inv2 * inv1;
    let mut hessian = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            hessian[i * n + j] = base_hessian[i * n + j] * inv1
                - (hv[i] * base_gradient[j] + base_gradient[i] * hv[j]) * inv2
                + vhv * base_gradient[i] * base_gradient[j] * inv3;
        }
    }

    let mut fundamental = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            fundamental[i * n + j] = value * hessian[i * n + j] + gradient[i] * gradient[j];
        }
    }

    Ok(ZermeloTransfer {
        value,
        translated_argument,
        base_gradient,
        base_hessian,
        one_plus_vf,
        gradient,
        hessian,
        fundamental,
    })
}

/// Deformed direction gradient at the translated argument.
pub fn zermelo_gradient<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    pv: &PointedVector<S>,
) -> Result<Vec<S>> {
    Ok(zermelo_transfer(base, wind, pv)?.gradient)
}

/// Deformed direction Hessian at the translated argument (row major).
pub fn zermelo_hessian<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    pv: &PointedVector<S>,
) -> Result<Vec<S>> {
    Ok(zermelo_transfer(base, wind, pv)?.hessian)
}

/// Deformed fundamental tensor at `(x, zeta)` (row major).
pub fn zermelo_fundamental<S: Real>(
    base: &MetricDescriptor<S>,
    wind: &WindField<S>,
    pv: &PointedVector<S>,
) -> Result<Vec<S>> {
    Ok(zermelo_transfer(base, wind, pv)?.fundamental)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::eval_jet;
    use crate::oracles;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn pv(x: [f64; 2], xi: [f64; 2]) -> PointedVector<f64> {
        PointedVector::new(x.to_vec(), xi.to_vec()).unwrap()
    }

    fn flat_wind() -> (MetricDescriptor<f64>, WindField<f64>) {
        (
            MetricDescriptor::euclidean(2),
            WindField::constant(vec![0.5, 0.0]),
        )
    }

    #[test]
    fn anchor_values_down_and_upwind() {
        let (base, wind) = flat_wind();
        let down = zermelo_eval(&base, &wind, &pv([0.0, 0.0], [1.0, 0.0])).unwrap();
        assert_relative_eq!(down, 2.0 / 3.0, epsilon = 1e-14);
        let up = zermelo_eval(&base, &wind, &pv([0.0, 0.0], [-1.0, 0.0])).unwrap();
        assert_relative_eq!(up, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_wind_is_the_identity_deformation() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::constant(vec![0.0, 0.0]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = pv(
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0)],
            );
            let f = base.eval(&p).unwrap();
            let ft = zermelo_eval(&base, &wind, &p).unwrap();
            assert_relative_eq!(ft, f, max_relative = 1e-14);
        }
    }

    #[test]
    fn defining_identity_holds_at_the_root() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let p = pv(
                [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0)],
            );
            let r = zermelo_eval(&base, &wind, &p).unwrap();
            let v = wind.eval(&p.x).unwrap();
            let shifted: Vec<f64> = p.xi.iter().zip(&v).map(|(&c, &w)| c - r * w).collect();
            let f = base
                .eval(&PointedVector::new(p.x.clone(), shifted).unwrap())
                .unwrap();
            assert_relative_eq!(f, r, max_relative = 1e-13);
        }
    }

    #[test]
    fn newton_matches_quadratic_closed_form_flat() {
        let (base, wind) = flat_wind();
        let a = [1.0f64, 0.0, 0.0, 1.0];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let p = pv(
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
            );
            if p.xi.iter().map(|c| c * c).sum::<f64>() < 1e-4 {
                continue;
            }
            let newton = zermelo_eval(&base, &wind, &p).unwrap();
            let v = wind.eval(&p.x).unwrap();
            let closed = oracles::randers_norm(&a, &v, &p.xi).unwrap();
            assert!(
                (newton - closed).abs() < 1e-12,
                "newton {newton} vs closed form {closed}"
            );
        }
    }

    #[test]
    fn newton_matches_quadratic_closed_form_sphere() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.35);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            let x = [rng.gen_range(-1.3..1.3), rng.gen_range(-1.3..1.3)];
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if xi.iter().map(|c| c * c).sum::<f64>() < 1e-4 {
                continue;
            }
            let p = pv(x, xi);
            let lambda = 2.0 / (1.0 + x[0] * x[0] + x[1] * x[1]);
            let a = [lambda * lambda, 0.0, 0.0, lambda * lambda];
            let newton = zermelo_eval(&base, &wind, &p).unwrap();
            let v = wind.eval(&p.x).unwrap();
            let closed = oracles::randers_norm(&a, &v, &p.xi).unwrap();
            assert!(
                (newton - closed).abs() < 1e-12,
                "newton {newton} vs closed form {closed}"
            );
        }
    }

    #[test]
    fn unit_vectors_translate_to_unit_vectors() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.45);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let x = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
            let dir = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if dir.iter().map(|c| c * c).sum::<f64>() < 1e-4 {
                continue;
            }
            let norm = base.eval(&pv(x, dir)).unwrap();
            let unit: Vec<f64> = dir.iter().map(|&c| c / norm).collect();
            let v = wind.eval(&x).unwrap();
            let shifted: Vec<f64> = unit.iter().zip(&v).map(|(&c, &w)| c + w).collect();
            let ft = zermelo_eval(
                &base,
                &wind,
                &PointedVector::new(x.to_vec(), shifted).unwrap(),
            )
            .unwrap();
            assert_relative_eq!(ft, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn inadmissible_wind_is_reported() {
        let base = MetricDescriptor::<f64>::euclidean(2);
        let wind = WindField::constant(vec![1.5, 0.0]);
        let err = zermelo_eval(&base, &wind, &pv([0.0, 0.0], [1.0, 0.0])).unwrap_err();
        assert!(matches!(err, FinslerError::Inadmissible { .. }));
    }

    #[test]
    fn descriptor_matches_pointwise_solver() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.3);
        let deformed = zermelo_metric(&base, &wind).unwrap();
        assert_eq!(deformed.kind(), MetricKind::Zermelo);
        let p = pv([0.7, -0.4], [0.8, 1.1]);
        assert_relative_eq!(
            deformed.eval(&p).unwrap(),
            zermelo_eval(&base, &wind, &p).unwrap(),
            max_relative = 1e-14
        );
    }

    /// The closed-form transfer must agree with brute-force differentiation
    /// of the implicit solver at the translated argument.
    #[test]
    fn transfer_matches_direct_differentiation() {
        let cases: Vec<(MetricDescriptor<f64>, WindField<f64>)> = vec![
            (
                MetricDescriptor::euclidean(2),
                WindField::constant(vec![0.5, 0.0]),
            ),
            (
                MetricDescriptor::euclidean(2),
                WindField::planar_rotation(2, 0.45),
            ),
            (
                MetricDescriptor::sphere_stereographic(2),
                WindField::stereographic_rotation(2, 0.4),
            ),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
        for (base, wind) in &cases {
            let deformed = zermelo_metric(base, wind).unwrap();
            for _ in 0..100 {
                let x = [rng.gen_range(-1.1..1.1), rng.gen_range(-1.1..1.1)];
                let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                if xi.iter().map(|c| c * c).sum::<f64>() < 1e-2 {
                    continue;
                }
                let p = pv(x, xi);
                let transfer = zermelo_transfer(base, wind, &p).unwrap();
                let zeta = transfer.translated_argument.clone();

                // Direct jet differentiation of the deformed metric at zeta.
                let direct = eval_jet(
                    |dir: &[crate::jet::Jet<f64>]| {
                        let xj: Vec<_> =
                            x.iter().map(|&c| dir[0].same_shape(c)).collect();
                        deformed.eval_jets(&xj, dir)
                    },
                    &zeta,
                    2,
                )
                .unwrap();

                assert_relative_eq!(direct.value(), transfer.value, max_relative = 1e-10);
                for i in 0..2 {
                    let mut alpha = [0usize; 2];
                    alpha[i] = 1;
                    assert_relative_eq!(
                        direct.partial(&alpha),
                        transfer.gradient[i],
                        epsilon = 1e-9,
                        max_relative = 1e-9
                    );
                }
                for i in 0..2 {
                    for j in 0..2 {
                        let mut alpha = [0usize; 2];
                        alpha[i] += 1;
                        alpha[j] += 1;
                        assert_relative_eq!(
                            direct.partial(&alpha),
                            transfer.hessian[i * 2 + j],
                            epsilon = 1e-8,
                            max_relative = 1e-8
                        );
                    }
                }

                // Fundamental tensor of the deformed metric at (x, zeta).
                let g_direct = deformed
                    .fundamental_tensor(&PointedVector::new(x.to_vec(), zeta.clone()).unwrap())
                    .unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        assert_relative_eq!(
                            g_direct.entry(i, j),
                            transfer.fundamental[i * 2 + j],
                            epsilon = 1e-8,
                            max_relative = 1e-8
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn transferred_hessian_annihilates_translated_argument() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let p = pv(
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0)],
            );
            let transfer = zermelo_transfer(&base, &wind, &p).unwrap();
            let hz = crate::linalg::mat_vec(&transfer.hessian, &transfer.translated_argument);
            let scale: f64 = transfer
                .hessian
                .iter()
                .fold(0.0f64, |acc, &c| acc.max(c.abs()));
            for c in hz {
                assert!(c.abs() <= 1e-12 * (1.0 + scale), "H zeta component {c}");
            }
        }
    }

    #[test]
    fn tangency_survives_the_deformation() {
        // Vectors annihilated by dF at a unit xi stay annihilated by the
        // deformed gradient at the translated argument.
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(18);
        for _ in 0..50 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let dir = [rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0)];
            let norm = base.eval(&pv(x, dir)).unwrap();
            let unit: Vec<f64> = dir.iter().map(|&c| c / norm).collect();
            let p = PointedVector::new(x.to_vec(), unit).unwrap();
            let transfer = zermelo_transfer(&base, &wind, &p).unwrap();
            // Tangent to the base unit sphere: rotate the gradient 90 deg.
            let tangent = [-transfer.base_gradient[1], transfer.base_gradient[0]];
            let df_tangent: f64 = transfer
                .base_gradient
                .iter()
                .zip(&tangent)
                .map(|(d, t)| d * t)
                .sum();
            assert_relative_eq!(df_tangent, 0.0, epsilon = 1e-13);
            let dft_tangent: f64 = transfer
                .gradient
                .iter()
                .zip(&tangent)
                .map(|(d, t)| d * t)
                .sum();
            assert_relative_eq!(dft_tangent, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn deformed_tensor_stays_positive_definite() {
        let base = MetricDescriptor::<f64>::sphere_stereographic(2);
        let wind = WindField::stereographic_rotation(2, 0.6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let p = pv(
                [rng.gen_range(-1.4..1.4), rng.gen_range(-1.4..1.4)],
                [rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0)],
            );
            let transfer = zermelo_transfer(&base, &wind, &p).unwrap();
            let eig = crate::linalg::symmetric_eigenvalues(&transfer.fundamental, 2);
            assert!(eig[0] > 0.0, "fundamental tensor lost definiteness: {eig:?}");
        }
    }

    #[test]
    fn deformed_gradient_is_scale_invariant() {
        let base = MetricDescriptor::<f64>::euclidean(2);
        let wind = WindField::constant(vec![0.3, 0.2]);
        let deformed = zermelo_metric(&base, &wind).unwrap();
        let zeta = vec![0.9, -0.4];
        let g1 = deformed
            .direction_gradient(&PointedVector::new(vec![0.0, 0.0], zeta.clone()).unwrap())
            .unwrap();
        let g2 = deformed
            .direction_gradient(
                &PointedVector::new(vec![0.0, 0.0], zeta.iter().map(|&c| 3.7 * c).collect())
                    .unwrap(),
            )
            .unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }
}
