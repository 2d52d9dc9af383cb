//! File emission: reports and plot-ready CSV dumps.  All artifacts land
//! in the directory named by `FINSLER_OUT_DIR` (default: the current
//! directory).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use finsler::geodesic::GeodesicTrajectory;
use finsler::metric::PointedVector;

use crate::report::VerificationReport;
use crate::scenario::Scenario;

pub const OUT_DIR_VAR: &str = "FINSLER_OUT_DIR";

pub fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes the report in the requested format and returns the path.
pub fn emit_report(report: &VerificationReport, format: &str) -> Result<PathBuf> {
    let (suffix, contents) = match format {
        "json" => ("json", report.to_json()),
        "csv" => ("csv", report.to_csv()),
        other => return Err(anyhow!("unknown report format \"{other}\"")),
    };
    let path = out_dir().join(format!("{}_report.{suffix}", report.scenario));
    write(&path, &contents)?;
    Ok(path)
}

/// Writes a trajectory as `t,x_1..x_n,xi_1..xi_n` rows.
pub fn emit_geodesic(name: &str, traj: &GeodesicTrajectory<f64>) -> Result<PathBuf> {
    let n = if traj.is_empty() {
        0
    } else {
        traj.positions()[0].len()
    };
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",x_{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",xi_{i}"));
    }
    out.push('\n');
    for k in 0..traj.len() {
        out.push_str(&format!("{:.12e}", traj.times()[k]));
        for c in &traj.positions()[k] {
            out.push_str(&format!(",{c:.12e}"));
        }
        for c in &traj.velocities()[k] {
            out.push_str(&format!(",{c:.12e}"));
        }
        out.push('\n');
    }
    let path = out_dir().join(format!("{name}_geodesic.csv"));
    write(&path, &out)?;
    Ok(path)
}

/// One sampled flag with both curvature values.
pub struct FlagSample {
    pub pole: PointedVector<f64>,
    pub edge: Vec<f64>,
    pub base_curvature: f64,
    pub deformed_curvature: f64,
}

pub fn emit_curvature(name: &str, samples: &[FlagSample]) -> Result<PathBuf> {
    let n = samples.first().map_or(0, |s| s.pole.x.len());
    let mut out = String::new();
    for i in 1..=n {
        out.push_str(&format!("x_{i},"));
    }
    for i in 1..=n {
        out.push_str(&format!("xi_{i},"));
    }
    for i in 1..=n {
        out.push_str(&format!("eta_{i},"));
    }
    out.push_str("K_base,K_deformed\n");
    for s in samples {
        for c in &s.pole.x {
            out.push_str(&format!("{c:.12e},"));
        }
        for c in &s.pole.xi {
            out.push_str(&format!("{c:.12e},"));
        }
        for c in &s.edge {
            out.push_str(&format!("{c:.12e},"));
        }
        out.push_str(&format!(
            "{:.12e},{:.12e}\n",
            s.base_curvature, s.deformed_curvature
        ));
    }
    let path = out_dir().join(format!("{name}_curvature.csv"));
    write(&path, &out)?;
    Ok(path)
}

/// Indicatrix sections at one point: for each ray angle, the base unit
/// vector, the same vector translated by the wind, and the deformed
/// norm of the translated vector (which certifies it lies on the
/// deformed indicatrix).
pub fn emit_indicatrix(
    scenario: &Scenario,
    point: &[f64],
    dirs: usize,
) -> Result<PathBuf> {
    let v = scenario
        .wind
        .eval(point)
        .map_err(|e| anyhow!("wind evaluation failed: {e}"))?;
    let mut out =
        String::from("theta,base_x,base_y,translated_x,translated_y,deformed_norm_defect\n");
    for k in 0..dirs {
        let theta = std::f64::consts::TAU * k as f64 / dirs as f64;
        let dir = [theta.cos(), theta.sin()];
        let pv = PointedVector::new(point.to_vec(), dir.to_vec())
            .map_err(|e| anyhow!("{e}"))?;
        let f = scenario
            .base
            .eval(&pv)
            .map_err(|e| anyhow!("base norm failed: {e}"))?;
        let bx = dir[0] / f;
        let by = dir[1] / f;
        let tx = bx + v[0];
        let ty = by + v[1];
        let translated = PointedVector::new(point.to_vec(), vec![tx, ty])
            .map_err(|e| anyhow!("{e}"))?;
        let deformed_norm = scenario
            .deformed
            .eval(&translated)
            .map_err(|e| anyhow!("deformed norm failed: {e}"))?;
        out.push_str(&format!(
            "{theta:.12e},{bx:.12e},{by:.12e},{tx:.12e},{ty:.12e},{:.3e}\n",
            (deformed_norm - 1.0).abs()
        ));
    }
    let path = out_dir().join(format!("{}_indicatrix.csv", scenario.config.name));
    write(&path, &out)?;
    Ok(path)
}
