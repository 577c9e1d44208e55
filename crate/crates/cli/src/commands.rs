//! Subcommand implementations.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use serde_json::json;
use vrjp_core::characterization::{
    canonicalize as canonicalize_rates, characterize as run_characterize, freedman_scan,
    exchangeability_report, CharacterizeOptions, CheckKind, ExchOptions, Verdict,
};
use vrjp_core::density::{log_density_x, log_density_y};
use vrjp_core::model::{GraphSpec, ModelSpec, RateSpec, ScaleSpec};
use vrjp_core::simulator::{simulate_stream, trial_rng};
use vrjp_core::trajectory::{Clock, Trajectory};
use vrjp_core::{Error as CoreError, Graph};

use crate::config::{self, ConfigFile, Overrides};

/// An error carrying its process exit code: 2 for configuration problems,
/// 1 for runtime or check failures.
#[derive(Debug)]
pub struct CliError {
    inner: anyhow::Error,
    code: u8,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.inner)
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn config_error(inner: anyhow::Error) -> CliError {
    CliError { inner, code: 2 }
}

fn runtime_error(inner: anyhow::Error) -> CliError {
    CliError { inner, code: 1 }
}

/// Configuration-shaped core errors exit with 2; everything else is a
/// runtime failure.
fn classify(err: CoreError) -> CliError {
    let code = match &err {
        CoreError::InvalidConfig(_)
        | CoreError::InvalidGraph(_)
        | CoreError::InvalidRates(_)
        | CoreError::InvalidScale(_)
        | CoreError::InvalidEvent(_)
        | CoreError::NotEquivalentStrings(_)
        | CoreError::VertexOutOfRange { .. }
        | CoreError::ZeroTrials => 2,
        _ => 1,
    };
    CliError {
        inner: anyhow::Error::new(err),
        code,
    }
}

fn load(path: &Path) -> Result<(ConfigFile, Graph, vrjp_core::RateFamily, vrjp_core::TimeScale), CliError> {
    let file = config::load(path).map_err(config_error)?;
    let (graph, rates, scale) = file.model.build().map_err(classify)?;
    Ok((file, graph, rates, scale))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(runtime_error),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn report_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

pub fn simulate(
    config_path: &Path,
    overrides: &Overrides,
    start: Option<u32>,
    horizon: Option<f64>,
    max_jumps: Option<u64>,
) -> CmdResult {
    let (file, graph, rates, _) = load(config_path)?;
    let sim = &file.sim;
    let start = start.or(sim.start).unwrap_or(0);
    let horizon = horizon.or(sim.horizon).ok_or_else(|| {
        config_error(anyhow::anyhow!(
            "simulate needs a horizon (flag --horizon or config sim.horizon)"
        ))
    })?;
    let seed = overrides.seed.or(sim.seed).unwrap_or(0);
    let trials = overrides.trials.or(sim.trials).unwrap_or(1);
    let max_jumps = max_jumps.or(sim.max_jumps).unwrap_or(1_000_000);

    let mut lines = String::new();
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let tr = simulate_stream(&graph, &rates, start, horizon, max_jumps, &mut rng)
            .map_err(classify)?;
        lines.push_str(&tr.to_json_line());
        lines.push('\n');
    }
    emit(&overrides.out, &lines)?;
    Ok(ExitCode::SUCCESS)
}

pub fn density(
    config_path: &Path,
    overrides: &Overrides,
    traj_path: &Path,
    breakdown: bool,
) -> CmdResult {
    let (file, graph, rates, scale) = load(config_path)?;
    let _ = file;
    let text = std::fs::read_to_string(traj_path)
        .with_context(|| format!("cannot read trajectories {}", traj_path.display()))
        .map_err(config_error)?;
    let trajectories: Vec<Trajectory> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(Trajectory::from_json_line)
        .collect::<Result<_, _>>()
        .map_err(classify)?;

    let mut csv = String::new();
    if breakdown {
        csv.push_str("log_product,integral_tilde,integral_hat,log_density\n");
        for tr in &trajectories {
            if tr.clock() != Clock::Y {
                return Err(config_error(anyhow::anyhow!(
                    "--breakdown needs reparametrized-clock trajectories"
                )));
            }
            let b = log_density_y(tr, &graph, &rates, &scale).map_err(classify)?;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                b.log_product,
                b.integral_tilde,
                b.integral_hat,
                b.log_density()
            ));
        }
    } else {
        csv.push_str("log_density\n");
        for tr in &trajectories {
            let value = match tr.clock() {
                Clock::X => log_density_x(tr, &graph, &rates).map_err(classify)?,
                Clock::Y => log_density_y(tr, &graph, &rates, &scale)
                    .map_err(classify)?
                    .log_density(),
            };
            csv.push_str(&format!("{value}\n"));
        }
    }
    emit(&overrides.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

pub fn exchangeability(
    config_path: &Path,
    overrides: &Overrides,
    pairs: Option<u64>,
    horizon: Option<f64>,
) -> CmdResult {
    let (file, graph, rates, scale) = load(config_path)?;
    let sec = &file.exchangeability;
    let opts = ExchOptions {
        start: sec.start.unwrap_or(0),
        x_horizon: horizon.or(sec.x_horizon).unwrap_or(2.0),
        max_jumps: sec.max_jumps.unwrap_or(100_000),
        tolerance: overrides.tol.or(sec.tolerance).unwrap_or(1e-9),
    };
    let pairs = pairs.or(sec.pairs).unwrap_or(1000);
    let seed = overrides.seed.or(sec.seed).unwrap_or(1);
    let report =
        exchangeability_report(&graph, &rates, &scale, pairs, seed, &opts).map_err(classify)?;
    emit(&overrides.out, &report_json(&report))?;
    Ok(if report.verdict == Verdict::Pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

pub fn freedman(
    config_path: &Path,
    overrides: &Overrides,
    string_a: Option<Vec<u32>>,
    string_b: Option<Vec<u32>>,
    grids: Option<Vec<f64>>,
    z_threshold: Option<f64>,
) -> CmdResult {
    let (file, graph, rates, scale) = load(config_path)?;
    let sec = &file.freedman;
    let missing = |what: &str| {
        config_error(anyhow::anyhow!(
            "freedman needs {what} (flag or config freedman section)"
        ))
    };
    let string_a = string_a.or_else(|| sec.string_a.clone()).ok_or_else(|| missing("--string-a"))?;
    let string_b = string_b.or_else(|| sec.string_b.clone()).ok_or_else(|| missing("--string-b"))?;
    let grids = grids.or_else(|| sec.grids.clone()).ok_or_else(|| missing("--grid"))?;
    let trials = overrides.trials.or(sec.trials).unwrap_or(100_000);
    let seed = overrides.seed.or(sec.seed).unwrap_or(1);
    let max_jumps = sec.max_jumps.unwrap_or(100_000);
    let z_threshold = z_threshold.or(sec.z_threshold).unwrap_or(3.0);

    let (reports, witness) = freedman_scan(
        &graph, &rates, &scale, &grids, &string_a, &string_b, trials, seed, max_jumps,
        z_threshold,
    )
    .map_err(classify)?;
    let payload = json!({
        "z_threshold": z_threshold,
        "reports": reports,
        "witness_grid": witness,
    });
    emit(&overrides.out, &report_json(&payload))?;
    Ok(if witness.is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

pub fn characterize(
    config_path: &Path,
    overrides: &Overrides,
    checks: Option<Vec<String>>,
    pairs: Option<u64>,
) -> CmdResult {
    let (file, graph, rates, scale) = load(config_path)?;
    let sec = &file.characterize;
    let defaults = CharacterizeOptions::default();
    let check_names = checks.or_else(|| sec.checks.clone());
    let checks = match check_names {
        Some(names) => names
            .iter()
            .map(|name| name.parse::<CheckKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(classify)?,
        None => defaults.checks.clone(),
    };
    let grid_max = sec.grid_max.unwrap_or(10.0);
    let grid_step = sec.grid_step.unwrap_or(0.5);
    if !(grid_step > 0.0 && grid_max >= grid_step) {
        return Err(config_error(anyhow::anyhow!(
            "characterize grid needs 0 < grid_step <= grid_max"
        )));
    }
    let steps = (grid_max / grid_step).round() as usize;
    let opts = CharacterizeOptions {
        checks,
        pairs: pairs.or(sec.pairs).unwrap_or(defaults.pairs),
        seed: overrides.seed.or(sec.seed).unwrap_or(defaults.seed),
        grid: (0..=steps).map(|k| k as f64 * grid_step).collect(),
        exch: ExchOptions {
            x_horizon: sec.x_horizon.unwrap_or(2.0),
            tolerance: overrides
                .tol
                .or(sec.exchangeability_tol)
                .unwrap_or(defaults.exch.tolerance),
            ..ExchOptions::default()
        },
        lambda_tol: sec.lambda_tol.unwrap_or(defaults.lambda_tol),
        reversibility_tol: sec.reversibility_tol.unwrap_or(defaults.reversibility_tol),
    };
    let report = run_characterize(&graph, &rates, &scale, &opts).map_err(classify)?;
    emit(&overrides.out, &report_json(&report))?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

pub fn canonicalize(config_path: &Path, overrides: &Overrides, pairs: Option<u64>) -> CmdResult {
    let (file, graph, rates, _) = load(config_path)?;
    let sec = &file.canonicalize;
    let tol = overrides.tol.or(sec.tolerance).unwrap_or(1e-9);
    let verify_pairs = pairs.or(sec.verify_pairs).unwrap_or(200);
    let seed = overrides.seed.or(sec.seed).unwrap_or(1);
    let verify = (verify_pairs > 0).then_some((verify_pairs, seed));

    let canon = canonicalize_rates(&graph, &rates, tol, verify).map_err(classify)?;

    // A loadable model for the reduced process: the canonical weights become
    // graph weights, rates and scale switch to the reinforced normal form.
    let weight_of = |i: u32, j: u32| -> f64 {
        canon
            .weights
            .iter()
            .find(|&&(a, b, _)| (a, b) == (i, j))
            .map(|&(_, _, w)| w)
            .unwrap_or(1.0)
    };
    let canonical_graph = Graph::new(
        graph.vertex_count(),
        &graph
            .edges()
            .map(|(i, j)| (i, j, 0.5 * (weight_of(i, j) + weight_of(j, i))))
            .collect::<Vec<_>>(),
    )
    .map_err(classify)?;
    let model = ModelSpec {
        graph: GraphSpec::from_graph(&canonical_graph),
        rates: RateSpec::Vrjp { weights: None },
        timescale: ScaleSpec::Vrjp,
    };
    let mut payload = serde_json::to_value(&model).expect("model serializes");
    payload["canonicalization"] = serde_json::to_value(&canon).expect("report serializes");
    let text = {
        let mut t = serde_json::to_string_pretty(&payload).expect("payload serializes");
        t.push('\n');
        t
    };
    emit(&overrides.out, &text)?;
    if overrides.out.is_some() {
        println!("{}", report_json(&canon).trim_end());
    }
    Ok(if canon.symmetric {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
