//! Release gate: one test per acceptance criterion, each printing a single
//! pass or fail line.  Tolerances are pinned in this file rather than read
//! from scenario configs, so the gate cannot drift with them.
//!
//! Comparisons stay in the negated `!(value < tol)` form throughout: a NaN
//! measurement must count as a failure, not slip past an inverted test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;

use finsler::fd::{fd_oracle, recommended_step};
use finsler::flow::noether_along;
use finsler::geodesic::{integrate_geodesic, speed_samples, unit_vector, GeodesicTrajectory};
use finsler::jacobi::{integrate_jacobi, second_variation_residual, CurvatureGrid};
use finsler::linalg;
use finsler::metric::{MetricDescriptor, PointedVector, Seed};
use finsler::oracles::{jacobi_by_shooting, randers_norm};
use finsler::curvature::riemann_operator;
use finsler::spray::{berwald_connection, spray};
use finsler::wind::WindField;
use finsler::zermelo::{zermelo_eval, zermelo_transfer};
use finsler_verify::checks::{
    verify_flag_equality, verify_geodesic_correspondence, verify_jacobi_correspondence,
    verify_local_symmetry,
};
use finsler_verify::report::CheckRecord;
use finsler_verify::scenario::{Scenario, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCENARIOS: [&str; 3] = ["katok.toml", "flat_randers.toml", "rotation_randers.toml"];

fn scenario(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name);
    ScenarioConfig::load(&path)
        .and_then(ScenarioConfig::build)
        .unwrap_or_else(|err| panic!("loading scenario {name}: {err:#}"))
}

fn value_of(record: &CheckRecord, measurement: &str) -> f64 {
    record
        .measurements
        .iter()
        .find(|m| m.name == measurement)
        .map(|m| m.value)
        .unwrap_or(f64::INFINITY)
}

/// Componentwise gap normalized by the reference scale, floored at one so
/// tiny references do not inflate the ratio.
fn scaled_gap(candidate: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(1.0f64, |acc, r| acc.max(r.abs()));
    candidate
        .iter()
        .zip(reference)
        .fold(0.0f64, |acc, (c, r)| acc.max((c - r).abs()))
        / scale
}

fn conclude(label: &str, failures: Vec<String>) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("{label}: {verdict}");
    assert!(failures.is_empty(), "{label}:\n  {}", failures.join("\n  "));
}

#[test]
fn criterion_1_implicit_wind_norm_matches_the_quadratic_closed_form() {
    const TOL: f64 = 1e-12;
    let mut failures = Vec::new();

    let base = MetricDescriptor::<f64>::euclidean(2);
    let wind = WindField::constant(vec![0.5, 0.0]);
    for (xi, expected) in [([1.0, 0.0], 2.0 / 3.0), ([-1.0, 0.0], 2.0)] {
        let pv = PointedVector::new(vec![0.3, -0.2], xi.to_vec()).unwrap();
        let got = zermelo_eval(&base, &wind, &pv).unwrap();
        if !((got - expected).abs() < TOL) {
            failures.push(format!("anchor xi={xi:?}: got {got}, want {expected}"));
        }
    }

    let identity = [1.0, 0.0, 0.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for name in ["flat_randers.toml", "rotation_randers.toml"] {
        let sc = scenario(name);
        for _ in 0..500 {
            let x = sc.sample_point(&mut rng);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = rng.gen_range(0.3..2.0);
            let xi = vec![rho * theta.cos(), rho * theta.sin()];
            let v = sc.wind.eval(&x).unwrap();
            let pv = PointedVector::new(x, xi).unwrap();
            let newton = zermelo_eval(&sc.base, &sc.wind, &pv).unwrap();
            let closed = randers_norm(&identity, &v, &pv.xi).unwrap();
            worst = worst.max((newton - closed).abs());
        }
    }
    if !(worst < TOL) {
        failures.push(format!("worst deviation over 1000 flat samples: {worst:e}"));
    }

    conclude(
        "criterion 1 (implicit wind norm vs quadratic closed form, 1e-12)",
        failures,
    );
}

#[test]
fn criterion_2_derivative_transfer_matches_direct_jet_differentiation() {
    const TOL: f64 = 1e-8;
    let mut failures = Vec::new();

    for name in SCENARIOS {
        let sc = scenario(name);
        let n = sc.dim();
        let mut rng = sc.rng(90);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let pv = sc.sample_pointed(&mut rng);
            let transfer = zermelo_transfer(&sc.base, &sc.wind, &pv).unwrap();
            let shifted =
                PointedVector::new(pv.x.clone(), transfer.translated_argument.clone()).unwrap();
            let jet = sc.deformed.jet_at(&shifted, 2, Seed::DirectionOnly).unwrap();

            worst = worst.max(scaled_gap(&[jet.value()], &[transfer.value]));

            let mut alpha = vec![0usize; n];
            let mut direct_grad = vec![0.0; n];
            for i in 0..n {
                alpha.iter_mut().for_each(|a| *a = 0);
                alpha[i] = 1;
                direct_grad[i] = jet.partial(&alpha);
            }
            worst = worst.max(scaled_gap(&transfer.gradient, &direct_grad));

            let mut direct_hess = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    alpha.iter_mut().for_each(|a| *a = 0);
                    alpha[i] += 1;
                    alpha[j] += 1;
                    direct_hess[i * n + j] = jet.partial(&alpha);
                }
            }
            worst = worst.max(scaled_gap(&transfer.hessian, &direct_hess));

            let tensor = sc.deformed.fundamental_tensor(&shifted).unwrap();
            let mut direct_fund = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    direct_fund[i * n + j] = tensor.entry(i, j);
                }
            }
            worst = worst.max(scaled_gap(&transfer.fundamental, &direct_fund));
        }
        if !(worst < TOL) {
            failures.push(format!("{name}: worst relative gap {worst:e}"));
        }
    }

    conclude(
        "criterion 2 (derivative transfer vs direct jets, 1e-8 relative)",
        failures,
    );
}

#[test]
fn criterion_3_flow_maps_base_geodesics_onto_deformed_geodesics() {
    const SUP_TOL: f64 = 1e-5;
    const UNIT_TOL: f64 = 1e-6;
    let mut failures = Vec::new();

    for name in SCENARIOS {
        let sc = scenario(name);
        let record = verify_geodesic_correspondence(&sc);
        if let Some(err) = &record.error {
            failures.push(format!("{name}: {err}"));
            continue;
        }
        let sup = value_of(&record, "sup_chart_distance");
        let unit = value_of(&record, "mapped_unit_defect");
        if !(sup < SUP_TOL) {
            failures.push(format!("{name}: sup chart distance {sup:e}"));
        }
        if !(unit < UNIT_TOL) {
            failures.push(format!("{name}: mapped unit defect {unit:e}"));
        }
    }

    conclude(
        "criterion 3 (flow carries geodesics to geodesics, sup 1e-5, unit defect 1e-6)",
        failures,
    );
}

#[test]
fn criterion_4_pushed_forward_jacobi_fields_remain_jacobi() {
    const EQUATION_TOL: f64 = 1e-4;
    const ORTHO_TOL: f64 = 1e-5;
    const RATIO_TOL: f64 = 1e-5;
    let mut failures = Vec::new();

    for name in SCENARIOS {
        let sc = scenario(name);
        let record = verify_jacobi_correspondence(&sc);
        if let Some(err) = &record.error {
            failures.push(format!("{name}: {err}"));
            continue;
        }
        let checks = [
            ("equation_residual", EQUATION_TOL),
            ("orthogonality_defect", ORTHO_TOL),
            ("ratio_deviation", RATIO_TOL),
        ];
        for (measurement, tol) in checks {
            let value = value_of(&record, measurement);
            if !(value < tol) {
                failures.push(format!("{name}: {measurement} {value:e} (tol {tol:e})"));
            }
        }
    }

    conclude(
        "criterion 4 (mapped Jacobi fields: equation 1e-4, orthogonality 1e-5, ratio 1e-5)",
        failures,
    );
}

#[test]
fn criterion_5_flag_curvature_is_preserved_and_katok_is_constant() {
    const TOL: f64 = 1e-6;
    let mut failures = Vec::new();

    for name in SCENARIOS {
        let sc = scenario(name);
        let record = verify_flag_equality(&sc);
        if let Some(err) = &record.error {
            failures.push(format!("{name}: {err}"));
            continue;
        }
        let difference = value_of(&record, "max_flag_difference");
        if !(difference < TOL) {
            failures.push(format!("{name}: flag difference {difference:e}"));
        }
        let deviation = value_of(&record, "deviation_from_expected_curvature");
        if !(deviation < TOL) {
            failures.push(format!("{name}: deviation from expected value {deviation:e}"));
        }
    }

    conclude(
        "criterion 5 (flag curvature preserved, rotated sphere constant at 1, 1e-6)",
        failures,
    );
}

#[test]
fn criterion_6_rotated_sphere_is_locally_symmetric_and_the_control_is_not() {
    const RESIDUAL_TOL: f64 = 1e-4;
    const CONTROL_FLOOR: f64 = 1e-2;
    let mut failures = Vec::new();

    let sc = scenario("katok.toml");
    let record = verify_local_symmetry(&sc);
    if let Some(err) = &record.error {
        failures.push(format!("katok: {err}"));
    } else {
        for measurement in ["frame_residual", "derived_field_residual"] {
            let value = value_of(&record, measurement);
            if !(value < RESIDUAL_TOL) {
                failures.push(format!("katok: {measurement} {value:e}"));
            }
        }
        let control = value_of(&record, "perturbed_sphere_control");
        if !(control > CONTROL_FLOOR) {
            failures.push(format!(
                "perturbed-sphere control {control:e} fails to exceed {CONTROL_FLOOR:e}"
            ));
        }
    }

    conclude(
        "criterion 6 (rotated sphere locally symmetric at 1e-4, control above 1e-2)",
        failures,
    );
}

#[test]
fn criterion_7_noether_integral_and_arc_length_are_conserved() {
    const NOETHER_TOL: f64 = 1e-8;
    const ARC_TOL: f64 = 1e-7;
    let mut failures = Vec::new();

    let drift = |values: &[f64]| -> f64 {
        values
            .iter()
            .fold(0.0f64, |acc, &v| acc.max((v - values[0]).abs()))
    };

    for name in SCENARIOS {
        let sc = scenario(name);
        let mut rng = sc.rng(70);
        let horizon = sc.config.run.horizon;
        let steps = sc.config.run.steps;
        let mut worst_noether = 0.0f64;
        let mut worst_arc = 0.0f64;
        for _ in 0..6 {
            let start = sc.sample_unit_start(&mut rng).unwrap();
            let v = sc.wind.eval(&start.x).unwrap();
            let base_xi: Vec<f64> = start.xi.iter().zip(&v).map(|(&a, &b)| a - b).collect();
            let base_start = PointedVector::new(start.x.clone(), base_xi).unwrap();

            let pairs: [(&MetricDescriptor<f64>, GeodesicTrajectory<f64>); 2] = [
                (
                    &sc.base,
                    integrate_geodesic(&sc.base, &base_start, horizon, steps).unwrap(),
                ),
                (
                    &sc.deformed,
                    integrate_geodesic(&sc.deformed, &start, horizon, steps).unwrap(),
                ),
            ];
            for (metric, traj) in &pairs {
                let momenta = noether_along(metric, &sc.wind, traj).unwrap();
                worst_noether = worst_noether.max(drift(&momenta));
                let speeds = speed_samples(metric, traj).unwrap();
                worst_arc = worst_arc.max(drift(&speeds));
            }
        }
        if !(worst_noether < NOETHER_TOL) {
            failures.push(format!("{name}: conserved-momentum drift {worst_noether:e}"));
        }
        if !(worst_arc < ARC_TOL) {
            failures.push(format!("{name}: arc-length drift {worst_arc:e}"));
        }
    }

    conclude(
        "criterion 7 (conserved momentum 1e-8, arc length 1e-7 along geodesics)",
        failures,
    );
}

#[test]
fn criterion_8_second_variation_identity_holds_along_geodesics() {
    const TOL: f64 = 1e-4;
    let mut failures = Vec::new();

    let katok = scenario("katok.toml");
    let flat = scenario("flat_randers.toml");
    let cases = [
        ("round sphere", &katok.base, [0.9, 0.0], [0.1, 1.0], 2.0, 2000),
        ("rotated sphere", &katok.deformed, [0.9, 0.0], [0.1, 1.0], 2.0, 2000),
        ("flat wind", &flat.deformed, [0.2, -0.3], [1.0, 0.4], 1.0, 1000),
    ];

    for (label, metric, x, dir, horizon, steps) in cases {
        let xi = unit_vector(metric, &x, &dir).unwrap();
        let start = PointedVector::new(x.to_vec(), xi).unwrap();
        let traj = integrate_geodesic(metric, &start, horizon, steps).unwrap();
        let grid = CurvatureGrid::build(metric, &traj, 1).unwrap();

        let j0 = [-start.xi[1], start.xi[0]];
        let dj0 = [
            0.3 * start.xi[0] + 0.1 * j0[0],
            0.3 * start.xi[1] + 0.1 * j0[1],
        ];
        let jac = integrate_jacobi(&grid, &j0, &dj0).unwrap();

        let positions: Vec<Vec<f64>> = (0..grid.coarse_len())
            .map(|c| traj.positions()[grid.fine_index(c)].clone())
            .collect();
        let velocities: Vec<Vec<f64>> = (0..grid.coarse_len())
            .map(|c| traj.velocities()[grid.fine_index(c)].clone())
            .collect();
        let residual = second_variation_residual(
            metric,
            &positions,
            &velocities,
            jac.field(),
            grid.coarse_step(),
        )
        .unwrap();
        if !(residual < TOL) {
            failures.push(format!("{label}: residual {residual:e}"));
        }
    }

    conclude(
        "criterion 8 (second-variation identity residual below 1e-4)",
        failures,
    );
}

#[test]
fn criterion_9_independent_oracles_agree_with_the_jet_engine() {
    const TOL: f64 = 1e-4;
    let mut failures = Vec::new();

    let katok = scenario("katok.toml");
    let flat = scenario("flat_randers.toml");

    // Variation-equation integrator vs difference quotient of a shooting
    // family of neighbouring geodesics.
    {
        let metric = &katok.deformed;
        let x = [0.95, 0.0];
        let xi = unit_vector(metric, &x, &[0.05, 1.0]).unwrap();
        let start = PointedVector::new(x.to_vec(), xi).unwrap();
        let traj = integrate_geodesic(metric, &start, 1.0, 1000).unwrap();
        let grid = CurvatureGrid::build(metric, &traj, 1).unwrap();

        let dx = [0.3, -0.1];
        let dxi = [0.2, 0.4];
        let conn = berwald_connection(metric, &start).unwrap();
        let dj0: Vec<f64> = (0..2)
            .map(|i| dxi[i] + conn[i * 2] * dx[0] + conn[i * 2 + 1] * dx[1])
            .collect();
        let jac = integrate_jacobi(&grid, &dx, &dj0).unwrap();
        let shot = jacobi_by_shooting(metric, &start, &dx, &dxi, 1.0, 1000, 1e-4).unwrap();

        let mut worst = 0.0f64;
        for c in 0..grid.coarse_len() {
            let reference = &shot[grid.fine_index(c)];
            worst = worst.max(scaled_gap(&jac.field()[c], reference));
        }
        if !(worst < TOL) {
            failures.push(format!("shooting-family gap {worst:e}"));
        }
    }

    // Jet-extracted derivatives vs central finite differences, for every
    // derivative the engine consumes: direction gradient, fundamental
    // tensor, spray, connection, curvature operator.
    let metrics: [(&str, &MetricDescriptor<f64>); 3] = [
        ("round sphere", &katok.base),
        ("rotated sphere", &katok.deformed),
        ("flat wind", &flat.deformed),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for (label, metric) in metrics {
        let n = metric.dim();
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.7..0.7)).collect();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = rng.gen_range(0.6..1.4);
            let xi = vec![rho * theta.cos(), rho * theta.sin()];
            let pv = PointedVector::new(x.clone(), xi.clone()).unwrap();

            let norm_at = |z: &[f64]| -> f64 {
                let p = PointedVector::new(x.clone(), z.to_vec()).unwrap();
                metric.eval(&p).unwrap()
            };
            let h1 = recommended_step::<f64>(1);
            let grad = metric.direction_gradient(&pv).unwrap();
            let mut fd_grad = vec![0.0; n];
            for i in 0..n {
                let mut alpha = vec![0usize; n];
                alpha[i] = 1;
                fd_grad[i] = fd_oracle(norm_at, &xi, &alpha, h1).unwrap();
            }
            worst = worst.max(scaled_gap(&grad, &fd_grad));

            let energy_at = |z: &[f64]| -> f64 {
                let p = PointedVector::new(x.clone(), z.to_vec()).unwrap();
                let f = metric.eval(&p).unwrap();
                0.5 * f * f
            };
            let h2 = recommended_step::<f64>(2);
            let tensor = metric.fundamental_tensor(&pv).unwrap();
            let mut fd_tensor = vec![0.0; n * n];
            let mut tensor_entries = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut alpha = vec![0usize; n];
                    alpha[i] += 1;
                    alpha[j] += 1;
                    fd_tensor[i * n + j] = fd_oracle(energy_at, &xi, &alpha, h2).unwrap();
                    tensor_entries[i * n + j] = tensor.entry(i, j);
                }
            }
            worst = worst.max(scaled_gap(&tensor_entries, &fd_tensor));

            // Spray rebuilt from finite differences of the energy over the
            // joint (point, direction) variables, including the linear solve.
            let joint = |z: &[f64]| -> f64 {
                let p = PointedVector::new(z[..n].to_vec(), z[n..].to_vec()).unwrap();
                let f = metric.eval(&p).unwrap();
                f * f
            };
            let mut zeta = x.clone();
            zeta.extend_from_slice(&xi);
            let mut rhs = vec![0.0; n];
            for l in 0..n {
                let mut alpha = vec![0usize; 2 * n];
                alpha[l] = 1;
                let dl = fd_oracle(joint, &zeta, &alpha, h2).unwrap();
                let mut mixed = 0.0;
                for m in 0..n {
                    let mut alpha = vec![0usize; 2 * n];
                    alpha[n + l] += 1;
                    alpha[m] += 1;
                    mixed += fd_oracle(joint, &zeta, &alpha, h2).unwrap() * xi[m];
                }
                rhs[l] = 0.25 * (mixed - dl);
            }
            let fd_spray = linalg::solve(&fd_tensor, &rhs).unwrap();
            let engine_spray = spray(metric, &pv).unwrap();
            worst = worst.max(scaled_gap(&engine_spray, &fd_spray));

            // Connection and curvature operator vs difference quotients of
            // the spray itself.
            let spray_at = |z: &[f64], i: usize| -> f64 {
                let p = PointedVector::new(z[..n].to_vec(), z[n..].to_vec()).unwrap();
                spray(metric, &p).unwrap()[i]
            };
            let conn = berwald_connection(metric, &pv).unwrap();
            let mut fd_conn = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut alpha = vec![0usize; 2 * n];
                    alpha[n + j] = 1;
                    fd_conn[i * n + j] = fd_oracle(|z| spray_at(z, i), &zeta, &alpha, h1).unwrap();
                }
            }
            worst = worst.max(scaled_gap(&conn, &fd_conn));

            let operator = riemann_operator(metric, &pv).unwrap();
            let mut fd_curv = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..n {
                    let mut alpha = vec![0usize; 2 * n];
                    alpha[k] = 1;
                    let mut value = 2.0 * fd_oracle(|z| spray_at(z, i), &zeta, &alpha, h1).unwrap();
                    for j in 0..n {
                        let mut alpha = vec![0usize; 2 * n];
                        alpha[j] += 1;
                        alpha[n + k] += 1;
                        value -=
                            xi[j] * fd_oracle(|z| spray_at(z, i), &zeta, &alpha, h2).unwrap();
                        let mut alpha = vec![0usize; 2 * n];
                        alpha[n + j] += 1;
                        alpha[n + k] += 1;
                        value += 2.0
                            * spray_at(&zeta, j)
                            * fd_oracle(|z| spray_at(z, i), &zeta, &alpha, h2).unwrap();
                        value -= fd_conn[i * n + j] * fd_conn[j * n + k];
                    }
                    fd_curv[i * n + k] = value;
                }
            }
            worst = worst.max(scaled_gap(operator.matrix(), &fd_curv));
        }
        if !(worst < TOL) {
            failures.push(format!("{label}: jet vs finite-difference gap {worst:e}"));
        }
    }

    conclude(
        "criterion 9 (shooting oracle and finite-difference oracle agree, 1e-4)",
        failures,
    );
}
