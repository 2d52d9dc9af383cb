use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use finsler::curvature::flag_curvature;
use finsler::geodesic::{integrate_geodesic, unit_vector};
use finsler::metric::PointedVector;
use rand::Rng;

use finsler_verify::checks::run_scenario;
use finsler_verify::emit;
use finsler_verify::scenario::{Scenario, ScenarioConfig};

/// Verification harness for Finsler metrics deformed by the flow of an
/// isometry-generating wind field.
#[derive(Parser)]
#[command(name = "finsler-verify", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's gates and checks and write a report.
    Verify {
        /// Scenario config file (TOML).
        config: PathBuf,
        /// Report format.
        #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
        format: String,
        /// Override the flow evaluation mode.
        #[arg(long, value_parser = ["closed", "integrated"])]
        mode: Option<String>,
    },
    /// Integrate one deformed-metric geodesic and dump it as CSV.
    Geodesic {
        config: PathBuf,
        /// Start as comma-separated "x_1,..,x_n,xi_1,..,xi_n"; the
        /// direction is normalized to unit deformed speed.
        #[arg(long)]
        start: String,
        /// Time horizon.
        #[arg(long = "T")]
        t: f64,
        /// Fine integration steps (default: scaled from the scenario).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Sample random flags and dump both curvatures as CSV.
    Curvature {
        config: PathBuf,
        #[arg(long)]
        samples: usize,
    },
    /// Dump indicatrix sections of the base and deformed metrics at a
    /// point: the translation-by-wind picture in plot-ready form.
    Deform {
        config: PathBuf,
        /// Point as comma-separated "x_1,..,x_n".
        #[arg(long)]
        point: String,
        /// Number of ray directions.
        #[arg(long)]
        dirs: usize,
    },
}

fn parse_floats(text: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("cannot parse {what} \"{text}\""))?;
    if values.len() != expected {
        bail!("{what} must have {expected} components, got {}", values.len());
    }
    Ok(values)
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    ScenarioConfig::load(path)?.build()
}

fn cmd_verify(config: PathBuf, format: String, mode: Option<String>) -> Result<bool> {
    let mut cfg = ScenarioConfig::load(&config)?;
    if let Some(mode) = mode {
        cfg.run.flow_mode = mode;
    }
    let scenario = cfg.build()?;
    let report = run_scenario(&scenario)?;
    let path = emit::emit_report(&report, &format)?;
    print!("{}", report.summary());
    println!("report: {}", path.display());
    Ok(report.overall_pass)
}

fn cmd_geodesic(config: PathBuf, start: String, t: f64, steps: Option<usize>) -> Result<()> {
    let scenario = load_scenario(&config)?;
    let n = scenario.dim();
    let values = parse_floats(&start, 2 * n, "start")?;
    let x = values[..n].to_vec();
    let xi = unit_vector(&scenario.deformed, &x, &values[n..])
        .map_err(|e| anyhow!("cannot normalize the start direction: {e}"))?;
    let pv = PointedVector::new(x, xi).map_err(|e| anyhow!("{e}"))?;
    let steps = steps.unwrap_or_else(|| {
        ((t / scenario.fine_step()).abs().round() as usize).max(100)
    });
    let traj = integrate_geodesic(&scenario.deformed, &pv, t, steps)
        .map_err(|e| anyhow!("integration failed: {e}"))?;
    if let Some(reason) = traj.exit_reason() {
        eprintln!(
            "note: trajectory truncated at t = {} ({reason})",
            traj.final_time()
        );
    }
    let path = emit::emit_geodesic(&scenario.config.name, &traj)?;
    println!("geodesic: {}", path.display());
    Ok(())
}

fn cmd_curvature(config: PathBuf, samples: usize) -> Result<()> {
    let scenario = load_scenario(&config)?;
    let n = scenario.dim();
    let mut rng = scenario.rng(30);
    let mut out = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while out.len() < samples {
        attempts += 1;
        if attempts > 200 * samples {
            bail!("could not sample enough non-degenerate flags");
        }
        let x = scenario.sample_point(&mut rng);
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if dir.iter().map(|c| c * c).sum::<f64>() < 0.09 {
            continue;
        }
        let Ok(pole) = unit_vector(&scenario.base, &x, &dir) else {
            continue;
        };
        let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = scenario.wind.eval(&x).map_err(|e| anyhow!("{e}"))?;
        let shifted: Vec<f64> = pole.iter().zip(&v).map(|(&a, &b)| a + b).collect();
        let base_pv = PointedVector::new(x.clone(), pole).map_err(|e| anyhow!("{e}"))?;
        let def_pv = PointedVector::new(x, shifted).map_err(|e| anyhow!("{e}"))?;
        let Ok(k_base) = flag_curvature(&scenario.base, &base_pv, &eta) else {
            continue;
        };
        let Ok(k_def) = flag_curvature(&scenario.deformed, &def_pv, &eta) else {
            continue;
        };
        out.push(emit::FlagSample {
            pole: base_pv,
            edge: eta,
            base_curvature: k_base,
            deformed_curvature: k_def,
        });
    }
    let path = emit::emit_curvature(&scenario.config.name, &out)?;
    println!("curvature samples: {}", path.display());
    Ok(())
}

fn cmd_deform(config: PathBuf, point: String, dirs: usize) -> Result<()> {
    let scenario = load_scenario(&config)?;
    if dirs == 0 {
        bail!("--dirs must be positive");
    }
    let p = parse_floats(&point, scenario.dim(), "point")?;
    let path = emit::emit_indicatrix(&scenario, &p, dirs)?;
    println!("indicatrix sections: {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify {
            config,
            format,
            mode,
        } => cmd_verify(config, format, mode),
        Command::Geodesic {
            config,
            start,
            t,
            steps,
        } => cmd_geodesic(config, start, t, steps).map(|()| true),
        Command::Curvature { config, samples } => cmd_curvature(config, samples).map(|()| true),
        Command::Deform {
            config,
            point,
            dirs,
        } => cmd_deform(config, point, dirs).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
