//! Declarative scenario configuration and construction.
//!
//! A scenario file names a base metric, a wind field, a sampling domain,
//! integration parameters, and the checks to run.  Loading validates the
//! whole file at once and reports every violated constraint, so a bad
//! config fails with one complete diagnostic instead of a scavenger
//! hunt.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use finsler::flow::FlowMap;
use finsler::geodesic::unit_vector;
use finsler::metric::{MetricDescriptor, PointedVector};
use finsler::oracles::great_circle_max_chart_radius;
use finsler::wind::WindField;
use finsler::zermelo::zermelo_metric;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub const KNOWN_CHECKS: [&str; 4] = [
    "geodesic_correspondence",
    "jacobi_correspondence",
    "flag_equality",
    "local_symmetry",
];

const KNOWN_TOLERANCES: [&str; 13] = [
    "admissibility_margin",
    "killing_gate",
    "geodesic_sup_distance",
    "mapped_unit_defect",
    "noether_drift",
    "arc_length_drift",
    "jacobi_equation_residual",
    "jacobi_orthogonality",
    "jacobi_ratio",
    "flag_difference",
    "flag_expected_deviation",
    "local_symmetry_residual",
    "symmetry_control",
];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Records which deformation convention the scenario assumes: unit
    /// balls are translated by `+v` and admissibility means
    /// `F(x, -v(x)) < 1`.  Stored verbatim in every report so results
    /// from the opposite sign convention cannot be mistaken for ours.
    pub convention: String,
    pub base: BaseConfig,
    pub wind: WindConfig,
    pub domain: DomainConfig,
    pub run: RunConfig,
    pub checks: ChecksConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub kind: String,
    pub dim: usize,
    /// Linear coefficients of the conformal perturbation for the
    /// `sphere_stereographic_tilted` kind.
    #[serde(default)]
    pub tilt: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindConfig {
    pub kind: String,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub components: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Radius of the disk random starts and flags are drawn from.
    pub sample_radius: f64,
    /// Largest chart radius a sampled geodesic orbit may reach;
    /// applies to spherical bases where orbits have a closed-form bound.
    #[serde(default)]
    pub orbit_bound: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
    #[serde(default = "default_flow_mode")]
    pub flow_mode: String,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_fields")]
    pub fields: usize,
    #[serde(default = "default_flags")]
    pub flags: usize,
    #[serde(default = "default_symmetry_starts")]
    pub symmetry_starts: usize,
}

fn default_flow_mode() -> String {
    "closed".to_string()
}

fn default_starts() -> usize {
    20
}

fn default_fields() -> usize {
    10
}

fn default_flags() -> usize {
    100
}

fn default_symmetry_starts() -> usize {
    10
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub names: Vec<String>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))?;
        let config: ScenarioConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse scenario file {}", path.display()))?;
        Ok(config)
    }

    /// Every constraint the config violates, empty when valid.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let dim = self.base.dim;
        if dim < 2 {
            errors.push("base dimension must be at least 2".to_string());
        }
        match self.base.kind.as_str() {
            "euclidean" | "sphere_stereographic" => {}
            "sphere_stereographic_tilted" => match &self.base.tilt {
                Some(t) if t.len() == dim => {}
                Some(_) => errors.push("tilt length must match the base dimension".to_string()),
                None => errors.push(
                    "sphere_stereographic_tilted base requires a tilt vector".to_string(),
                ),
            },
            other => errors.push(format!("unknown base kind \"{other}\"")),
        }

        match self.wind.kind.as_str() {
            "constant" => {
                match &self.wind.components {
                    None => errors.push("constant wind requires components".to_string()),
                    Some(v) if v.len() != dim => {
                        errors.push("wind components length must match the dimension".to_string())
                    }
                    Some(v) => {
                        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                        let reach = match self.base.kind.as_str() {
                            // The conformal factor peaks at 2 at the
                            // chart origin.
                            "sphere_stereographic" | "sphere_stereographic_tilted" => 2.0 * norm,
                            _ => norm,
                        };
                        if reach >= 1.0 {
                            errors.push(format!(
                                "admissibility violated: max F(x, -v) = {reach} >= 1 for the constant wind"
                            ));
                        }
                        if self.base.kind != "euclidean" {
                            errors.push(
                                "constant wind generates isometries only of the euclidean base"
                                    .to_string(),
                            );
                        }
                    }
                }
            }
            "planar_rotation" => {
                let omega = self.wind.omega.unwrap_or(0.0);
                if self.wind.omega.is_none() {
                    errors.push("planar_rotation wind requires omega".to_string());
                }
                if self.base.kind != "euclidean" {
                    errors.push(
                        "planar_rotation generates isometries only of the euclidean base"
                            .to_string(),
                    );
                }
                // Along deformed unit geodesics the radial speed never
                // exceeds 1 (the wind is tangential), so every start
                // stays inside sample_radius + horizon.
                let reach = self.domain.sample_radius + self.run.horizon;
                if omega.abs() * reach >= 0.98 {
                    errors.push(format!(
                        "admissibility violated: max F(x, -v) = {:.3} >= 1 on the reachable disk of radius {reach}",
                        omega.abs() * reach
                    ));
                }
            }
            "stereographic_rotation" => {
                if self.wind.omega.is_none() {
                    errors.push("stereographic_rotation wind requires omega".to_string());
                }
                let omega = self.wind.omega.unwrap_or(0.0);
                if omega.abs() >= 1.0 {
                    errors.push(format!(
                        "admissibility violated: max F(x, -v) = |omega| = {} >= 1 (attained at |x| = 1)",
                        omega.abs()
                    ));
                }
                if !self.base.kind.starts_with("sphere_stereographic") {
                    errors.push(
                        "stereographic_rotation generates isometries only of spherical bases"
                            .to_string(),
                    );
                }
            }
            other => errors.push(format!("unknown wind kind \"{other}\"")),
        }

        if self.domain.sample_radius <= 0.0 {
            errors.push("sample_radius must be positive".to_string());
        }
        if self.run.horizon <= 0.0 {
            errors.push("horizon must be positive".to_string());
        }
        if self.run.steps < 10 || !self.run.steps.is_multiple_of(2) {
            errors.push("steps must be an even number of at least 10".to_string());
        }
        if !matches!(self.run.flow_mode.as_str(), "closed" | "integrated") {
            errors.push(format!(
                "unknown flow mode \"{}\" (closed or integrated)",
                self.run.flow_mode
            ));
        }
        if self.checks.names.is_empty() {
            errors.push("at least one check must be enabled".to_string());
        }
        for name in &self.checks.names {
            if !KNOWN_CHECKS.contains(&name.as_str()) {
                errors.push(format!("unknown check \"{name}\""));
            }
        }
        for key in self.tolerances.keys() {
            if !KNOWN_TOLERANCES.contains(&key.as_str()) {
                errors.push(format!("unknown tolerance key \"{key}\""));
            }
        }
        errors
    }

    /// Validates and constructs the executable scenario.
    pub fn build(self) -> Result<Scenario> {
        let errors = self.validation_errors();
        if !errors.is_empty() {
            bail!("invalid scenario config:\n  - {}", errors.join("\n  - "));
        }
        let dim = self.base.dim;
        let base = match self.base.kind.as_str() {
            "euclidean" => MetricDescriptor::euclidean(dim),
            "sphere_stereographic" => MetricDescriptor::sphere_stereographic(dim),
            "sphere_stereographic_tilted" => MetricDescriptor::sphere_stereographic_tilted(
                dim,
                self.base.tilt.clone().expect("validated"),
            ),
            _ => unreachable!("validated"),
        };
        let wind = match self.wind.kind.as_str() {
            "constant" => WindField::constant(self.wind.components.clone().expect("validated")),
            "planar_rotation" => {
                WindField::planar_rotation(dim, self.wind.omega.expect("validated"))
            }
            "stereographic_rotation" => {
                WindField::stereographic_rotation(dim, self.wind.omega.expect("validated"))
            }
            _ => unreachable!("validated"),
        };
        let deformed = zermelo_metric(&base, &wind)
            .map_err(|e| anyhow!("cannot build the deformed metric: {e}"))?;
        Ok(Scenario {
            config: self,
            base,
            deformed,
            wind,
        })
    }
}

/// A validated scenario ready for checks.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub base: MetricDescriptor<f64>,
    pub deformed: MetricDescriptor<f64>,
    pub wind: WindField<f64>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fine_step(&self) -> f64 {
        self.config.run.horizon / self.config.run.steps as f64
    }

    /// Flow map honoring the configured mode; integrated mode steps the
    /// wind ODE instead of using the closed form.
    pub fn flow(&self) -> FlowMap<f64> {
        match self.config.run.flow_mode.as_str() {
            "integrated" => FlowMap::integrated(self.wind.clone(), 1e-3),
            _ => FlowMap::new(self.wind.clone()),
        }
    }

    /// Deterministic generator for one named stage; stages get disjoint
    /// streams so enabling or reordering checks never shifts samples.
    pub fn rng(&self, stage: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.run.seed.wrapping_mul(1001).wrapping_add(stage))
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.config.tolerances.get(key).copied().unwrap_or(default)
    }

    /// Flag-curvature value the base metric should exhibit, when it has
    /// one: 0 for the plane, 1 for the round sphere.
    pub fn expected_flag_curvature(&self) -> Option<f64> {
        match self.config.base.kind.as_str() {
            "euclidean" => Some(0.0),
            "sphere_stereographic" => Some(1.0),
            _ => None,
        }
    }

    /// Uniform point of the sampling disk.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.dim();
        let radius = self.config.domain.sample_radius;
        loop {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-radius..radius)).collect();
            if x.iter().map(|c| c * c).sum::<f64>() <= radius * radius {
                return x;
            }
        }
    }

    /// Random pointed vector with a direction of moderate length, for
    /// gates and flag sampling.
    pub fn sample_pointed(&self, rng: &mut ChaCha8Rng) -> PointedVector<f64> {
        let x = self.sample_point(rng);
        let n = self.dim();
        let xi: Vec<f64> = loop {
            let cand: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = cand.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 0.3 {
                break cand.iter().map(|c| c * rng.gen_range(0.5..1.5) / norm).collect();
            }
        };
        PointedVector::new(x, xi).expect("nonzero by construction")
    }

    /// Random deformed-unit start whose orbit respects the configured
    /// chart bound.  For spherical bases the bound is enforced through
    /// the closed-form maximal chart radius of the base great circle the
    /// deformed geodesic is a rotation of.
    pub fn sample_unit_start(&self, rng: &mut ChaCha8Rng) -> Result<PointedVector<f64>> {
        let n = self.dim();
        for _ in 0..500 {
            let x = self.sample_point(rng);
            let dir: Vec<f64> = loop {
                let cand: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if cand.iter().map(|c| c * c).sum::<f64>() > 0.09 {
                    break cand;
                }
            };
            let xi = unit_vector(&self.deformed, &x, &dir)
                .map_err(|e| anyhow!("cannot normalize a sampled start: {e}"))?;
            if let Some(bound) = self.config.domain.orbit_bound {
                if self.config.base.kind.starts_with("sphere") && n == 2 {
                    let v = self.wind.eval(&x).map_err(|e| anyhow!("{e}"))?;
                    let base_xi = [xi[0] - v[0], xi[1] - v[1]];
                    let reach = great_circle_max_chart_radius(&[x[0], x[1]], &base_xi);
                    if reach > bound {
                        continue;
                    }
                }
            }
            return PointedVector::new(x, xi).map_err(|e| anyhow!("{e}"));
        }
        bail!("could not sample an orbit-bounded start in 500 attempts");
    }

    /// Deterministic admissibility scan set: a grid over the sampling
    /// disk plus rings at the radii where known winds peak.
    pub fn admissibility_samples(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let radius = self.config.domain.sample_radius;
        let mut samples = Vec::new();
        if n == 2 {
            let m = 7;
            for i in 0..m {
                for j in 0..m {
                    let x = -radius + 2.0 * radius * i as f64 / (m - 1) as f64;
                    let y = -radius + 2.0 * radius * j as f64 / (m - 1) as f64;
                    if x * x + y * y <= radius * radius {
                        samples.push(vec![x, y]);
                    }
                }
            }
            for ring in [radius, 1.0, self.config.domain.orbit_bound.unwrap_or(radius)] {
                for k in 0..16 {
                    let theta = std::f64::consts::TAU * k as f64 / 16.0;
                    samples.push(vec![ring * theta.cos(), ring * theta.sin()]);
                }
            }
        } else {
            samples.push(vec![0.0; n]);
        }
        samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use finsler::oracles::great_circle_max_chart_radius;
    use finsler::zermelo::zermelo_eval;
    use rand::Rng;

    const KATOK_LIKE: &str = r#"
name = "t"
convention = "unit balls translated by +v; admissibility F(x, -v) < 1"

[base]
kind = "sphere_stereographic"
dim = 2

[wind]
kind = "stereographic_rotation"
omega = 0.3

[domain]
sample_radius = 1.2
orbit_bound = 3.0

[run]
horizon = 1.0
steps = 100
seed = 9

[checks]
names = ["flag_equality"]
"#;

    fn parse(body: &str) -> ScenarioConfig {
        toml::from_str(body).unwrap()
    }

    #[test]
    fn a_well_formed_config_builds() {
        let config = parse(KATOK_LIKE);
        assert!(config.validation_errors().is_empty());
        let scenario = config.build().unwrap();
        assert_eq!(scenario.dim(), 2);
        assert!((scenario.fine_step() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn all_violations_are_reported_together() {
        let mut config = parse(KATOK_LIKE);
        config.base.kind = "torus".to_string();
        config.wind.omega = Some(1.5);
        config.domain.sample_radius = -1.0;
        config.run.steps = 11;
        config.checks.names.push("spectral_gap".to_string());
        config.tolerances.insert("warp_factor".to_string(), 1.0);

        let errors = config.validation_errors();
        let text = errors.join("\n");
        assert!(errors.len() >= 6, "got only: {text}");
        for fragment in [
            "unknown base kind",
            "|omega| = 1.5",
            "spherical bases",
            "sample_radius",
            "even number",
            "unknown check",
            "unknown tolerance key",
        ] {
            assert!(text.contains(fragment), "missing \"{fragment}\" in: {text}");
        }
    }

    #[test]
    fn constant_wind_admissibility_uses_the_conformal_peak() {
        let mut config = parse(KATOK_LIKE);
        // |v| = 0.6 is fine in the plane but the sphere factor doubles it.
        config.wind.kind = "constant".to_string();
        config.wind.omega = None;
        config.wind.components = Some(vec![0.6, 0.0]);
        let text = config.validation_errors().join("\n");
        assert!(text.contains("max F(x, -v) = 1.2"), "got: {text}");
    }

    #[test]
    fn stage_streams_are_reproducible_and_disjoint() {
        let scenario = parse(KATOK_LIKE).build().unwrap();
        let a: f64 = scenario.rng(1).gen();
        let b: f64 = scenario.rng(1).gen();
        let c: f64 = scenario.rng(2).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unit_starts_have_deformed_speed_one_and_bounded_orbits() {
        let scenario = parse(KATOK_LIKE).build().unwrap();
        let mut rng = scenario.rng(5);
        for _ in 0..20 {
            let start = scenario.sample_unit_start(&mut rng).unwrap();
            let speed = zermelo_eval(&scenario.base, &scenario.wind, &start).unwrap();
            // F-tilde(start) = 1 means F(xi - v) = 1 by the defining relation.
            let v = scenario.wind.eval(&start.x).unwrap();
            let base_xi: Vec<f64> = start.xi.iter().zip(&v).map(|(&a, &b)| a - b).collect();
            assert!((scenario.deformed.eval(&start).unwrap() - 1.0).abs() < 1e-12);
            assert!(speed > 0.0);
            let reach = great_circle_max_chart_radius(&start.x, &base_xi);
            assert!(reach <= 3.0 + 1e-9, "orbit reaches {reach}");
        }
    }

    #[test]
    fn tolerance_lookup_prefers_the_override() {
        let mut config = parse(KATOK_LIKE);
        config
            .tolerances
            .insert("flag_difference".to_string(), 1e-9);
        let scenario = config.build().unwrap();
        assert_eq!(scenario.tolerance("flag_difference", 1e-6), 1e-9);
        assert_eq!(scenario.tolerance("jacobi_ratio", 1e-5), 1e-5);
    }

    #[test]
    fn expected_curvature_tracks_the_base_kind() {
        let sphere = parse(KATOK_LIKE).build().unwrap();
        assert_eq!(sphere.expected_flag_curvature(), Some(1.0));

        let mut flat = parse(KATOK_LIKE);
        flat.base.kind = "euclidean".to_string();
        flat.wind.kind = "planar_rotation".to_string();
        flat.wind.omega = Some(0.2);
        let flat = flat.build().unwrap();
        assert_eq!(flat.expected_flag_curvature(), Some(0.0));
    }
}
