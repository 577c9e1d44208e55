//! The verification bench.
//!
//! A rate family together with a time scale is *exchangeable in density*
//! when equivalent reparametrized trajectories (same start, transition
//! counts, and final local times) carry equal densities. The bench measures
//! this directly ([`exchangeability_report`]), checks the discretized-string
//! counterpart by Monte Carlo ([`freedman_check`]), and estimates the two
//! analytic necessary conditions: the rate/derivative ratio
//! `f_{i,j}(x)/h_j'(x)` must be a constant `λ_{i,j}` ([`lambda_estimate`]),
//! the squared clock speed must be affine with slope `A_i`, and the
//! constants must balance as `λ_{i,j} A_j = λ_{j,i} A_i`
//! ([`reversibility_check`]).
//!
//! [`canonicalize`] reduces an admissible affine rate family to the
//! linearly reinforced normal form by a per-vertex rescaling of local time,
//! and verifies the reduction with the density engine.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::log_density_y;
use crate::dynamics::{RateFamily, TimeScale};
use crate::graph::Graph;
use crate::simulator::{simulate_stream, simulate_until_y, trial_rng, McEstimate};
use crate::trajectory::{TimeChange, TransitionCounts};
use crate::{Error, Result, Vertex};

type Pair = (Vertex, Vertex);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of an exchangeability run over simulated equivalent pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExchReport {
    pub pairs_tested: u64,
    pub max_abs_log_gap: f64,
    /// Index of the pair attaining the maximal gap.
    pub worst_pair: u64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Simulation knobs for [`exchangeability_report`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExchOptions {
    pub start: Vertex,
    /// Raw-clock horizon per simulated trajectory.
    pub x_horizon: f64,
    pub max_jumps: u64,
    pub tolerance: f64,
}

impl Default for ExchOptions {
    fn default() -> Self {
        ExchOptions {
            start: 0,
            x_horizon: 2.0,
            max_jumps: 100_000,
            tolerance: 1e-9,
        }
    }
}

/// Simulate `n_pairs` trajectories, transport them to the reparametrized
/// clock, draw an equivalent partner for each by shuffling, and report the
/// largest log-density gap.
pub fn exchangeability_report(
    g: &Graph,
    rates: &RateFamily,
    scale: &TimeScale,
    n_pairs: u64,
    seed: u64,
    opts: &ExchOptions,
) -> Result<ExchReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidConfig("need at least one pair".into()));
    }
    let gaps: Vec<f64> = (0..n_pairs)
        .into_par_iter()
        .map(|pair| -> Result<f64> {
            let mut rng = trial_rng(seed, pair);
            let tr_x = simulate_stream(
                g,
                rates,
                opts.start,
                opts.x_horizon,
                opts.max_jumps,
                &mut rng,
            )?;
            let tr_y = tr_x.time_change(scale, TimeChange::XToY)?;
            let partner = tr_y.excursion_shuffle(&mut rng);
            let d_a = log_density_y(&tr_y, g, rates, scale)?.log_density();
            let d_b = log_density_y(&partner, g, rates, scale)?.log_density();
            Ok((d_a - d_b).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    let (worst_pair, max_abs_log_gap) = gaps
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(wi, wg), (i, &gap)| {
            if gap > wg {
                (i, gap)
            } else {
                (wi, wg)
            }
        });
    Ok(ExchReport {
        pairs_tested: n_pairs,
        max_abs_log_gap,
        worst_pair: worst_pair as u64,
        tolerance: opts.tolerance,
        verdict: if max_abs_log_gap <= opts.tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

/// Monte Carlo comparison of two equivalent discretized strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreedmanReport {
    pub grid: f64,
    pub estimate_a: McEstimate,
    pub estimate_b: McEstimate,
    /// Paired z-score of the difference: the two indicators are evaluated
    /// on the same trajectories, so the variance is the multinomial
    /// `(p_a + p_b − (p_a − p_b)²)/n`.
    pub z: f64,
}

fn validate_string_pair(g: &Graph, a: &[Vertex], b: &[Vertex]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::NotEquivalentStrings("empty string".into()));
    }
    if a.len() != b.len() {
        return Err(Error::NotEquivalentStrings(format!(
            "lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a[0] != b[0] {
        return Err(Error::NotEquivalentStrings(format!(
            "starts differ: {} vs {}",
            a[0], b[0]
        )));
    }
    for &v in a.iter().chain(b.iter()) {
        g.check_vertex(v)?;
    }
    if TransitionCounts::of_string(a) != TransitionCounts::of_string(b) {
        return Err(Error::NotEquivalentStrings(
            "transition counts differ".into(),
        ));
    }
    Ok(())
}

/// Estimate the probabilities of observing two equivalent strings on the
/// grid `0, h, …, l·h` under the reparametrized process, and the z-score of
/// their difference. Trials simulate the raw process until the
/// reparametrized clock covers the grid, transport, then discretize.
#[allow(clippy::too_many_arguments)]
pub fn freedman_check(
    g: &Graph,
    rates: &RateFamily,
    scale: &TimeScale,
    grid: f64,
    string_a: &[Vertex],
    string_b: &[Vertex],
    trials: u64,
    seed: u64,
    max_jumps: u64,
) -> Result<FreedmanReport> {
    validate_string_pair(g, string_a, string_b)?;
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if !(grid.is_finite() && grid > 0.0) {
        return Err(Error::InvalidConfig(format!("grid step {grid} must be positive")));
    }
    let steps = string_a.len() - 1;
    // Single-state strings still simulate one grid step; only the k = 0
    // sample is compared, which the start vertex pins.
    let y_horizon = (steps.max(1)) as f64 * grid;
    let start = string_a[0];
    let (hits_a, hits_b) = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(u64, u64)> {
            let mut rng = trial_rng(seed, trial);
            let tr_x = simulate_until_y(g, rates, scale, start, y_horizon, max_jumps, &mut rng)?;
            let tr_y = tr_x.time_change(scale, TimeChange::XToY)?;
            let observed: Vec<Vertex> = (0..=steps)
                .map(|k| tr_y.state_at((k as f64 * grid).min(tr_y.horizon())))
                .collect::<Result<Vec<_>>>()?;
            Ok((
                (observed == string_a) as u64,
                (observed == string_b) as u64,
            ))
        })
        .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
    let estimate_a = McEstimate::from_successes(hits_a, trials);
    let estimate_b = McEstimate::from_successes(hits_b, trials);
    let pa = estimate_a.estimate;
    let pb = estimate_b.estimate;
    let var = (pa + pb - (pa - pb) * (pa - pb)) / trials as f64;
    let z = if var > 0.0 {
        (pa - pb) / var.sqrt()
    } else {
        0.0
    };
    Ok(FreedmanReport {
        grid,
        estimate_a,
        estimate_b,
        z,
    })
}

/// Run [`freedman_check`] over several grid steps; the witness is the first
/// grid whose |z| crosses `z_threshold`.
#[allow(clippy::too_many_arguments)]
pub fn freedman_scan(
    g: &Graph,
    rates: &RateFamily,
    scale: &TimeScale,
    grids: &[f64],
    string_a: &[Vertex],
    string_b: &[Vertex],
    trials: u64,
    seed: u64,
    max_jumps: u64,
    z_threshold: f64,
) -> Result<(Vec<FreedmanReport>, Option<f64>)> {
    let mut reports = Vec::with_capacity(grids.len());
    let mut witness = None;
    for &grid in grids {
        let report = freedman_check(
            g, rates, scale, grid, string_a, string_b, trials, seed, max_jumps,
        )?;
        if witness.is_none() && report.z.abs() > z_threshold {
            witness = Some(grid);
        }
        reports.push(report);
    }
    Ok((reports, witness))
}

/// Proportionality constants and reversibility diagnostics.
///
/// `lambda` is filled by [`lambda_estimate`]; `a`, `b`, and the gap by
/// [`reversibility_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaReport {
    /// `λ_{i,j}`: grid mean of `f_{i,j}(x)/h_j'(x)` per ordered pair.
    pub lambda: Vec<(Vertex, Vertex, f64)>,
    /// Largest `|ratio − λ|/λ` over the grid and all pairs.
    pub max_rel_deviation: f64,
    /// Least-squares slope of the squared clock speed per vertex.
    pub a: Vec<(Vertex, f64)>,
    /// Squared clock speed at zero per vertex.
    pub b: Vec<(Vertex, f64)>,
    /// `max |λ_{i,j} A_j − λ_{j,i} A_i|` over edges.
    pub reversibility_gap: f64,
    /// Whether the squared clock speed is affine on the grid within
    /// tolerance.
    pub h_squared_linear: bool,
    /// Largest squared-speed residual relative to its scale on the grid.
    pub max_h_squared_residual: f64,
    /// Set when some slope is (numerically) zero — the constant-rate Markov
    /// case, which carries no reinforcement.
    pub degenerate: bool,
}

impl LambdaReport {
    pub fn lambda_map(&self) -> BTreeMap<Pair, f64> {
        self.lambda.iter().map(|&(i, j, l)| ((i, j), l)).collect()
    }
}

/// Estimate `λ_{i,j}` as the grid mean of `f_{i,j}(x)/h_j'(x)` and report
/// the worst relative deviation of the ratio from its mean.
pub fn lambda_estimate(rates: &RateFamily, scale: &TimeScale, grid: &[f64]) -> Result<LambdaReport> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty evaluation grid".into()));
    }
    let mut lambda = Vec::new();
    let mut max_rel_deviation = 0.0f64;
    for (i, j) in rates.pairs() {
        let sc = scale.vertex(j)?;
        let mut ratios = Vec::with_capacity(grid.len());
        for &x in grid {
            let derivative = sc.h_prime(x)?;
            if derivative == 0.0 {
                return Err(Error::InvalidScale(format!(
                    "h'_{j} vanishes at grid point {x}"
                )));
            }
            ratios.push(rates.eval(i, j, x)? / derivative);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in &ratios {
            max_rel_deviation = max_rel_deviation.max((r - mean).abs() / mean.abs());
        }
        lambda.push((i, j, mean));
    }
    Ok(LambdaReport {
        lambda,
        max_rel_deviation,
        a: Vec::new(),
        b: Vec::new(),
        reversibility_gap: 0.0,
        h_squared_linear: true,
        max_h_squared_residual: 0.0,
        degenerate: false,
    })
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Estimate the squared-clock-speed slope `A_i` by least squares on `grid`,
/// the intercept `B_i = speed_i(0)²`, and the balance gap
/// `max |λ_{i,j} A_j − λ_{j,i} A_i|`. A non-affine squared speed is flagged,
/// not raised: such a model simply cannot be exchangeable.
pub fn reversibility_check(
    scale: &TimeScale,
    lambda: &BTreeMap<Pair, f64>,
    grid: &[f64],
) -> Result<LambdaReport> {
    if grid.len() < 2 {
        return Err(Error::InvalidConfig(
            "squared-speed fit needs at least two grid points".into(),
        ));
    }
    let vertices: BTreeSet<Vertex> = lambda.keys().flat_map(|&(i, j)| [i, j]).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut max_h_squared_residual = 0.0f64;
    let mut degenerate = false;
    for &v in &vertices {
        let sc = scale.vertex(v)?;
        let squared: Vec<f64> = grid
            .iter()
            .map(|&s| sc.speed(s).map(|sp| sp * sp))
            .collect::<Result<Vec<_>>>()?;
        let (slope, intercept) = least_squares_line(grid, &squared);
        let scale_of = squared.iter().fold(0.0f64, |m, &y| m.max(y.abs())).max(1e-300);
        for (&s, &y) in grid.iter().zip(&squared) {
            let resid = (y - (slope * s + intercept)).abs() / scale_of;
            max_h_squared_residual = max_h_squared_residual.max(resid);
        }
        let speed0 = sc.speed(0.0)?;
        if slope.abs() <= 1e-9 * scale_of {
            degenerate = true;
        }
        a.push((v, slope));
        b.push((v, speed0 * speed0));
    }
    let a_map: BTreeMap<Vertex, f64> = a.iter().copied().collect();
    let mut reversibility_gap = 0.0f64;
    for (&(i, j), &l_ij) in lambda {
        if i < j {
            if let Some(&l_ji) = lambda.get(&(j, i)) {
                reversibility_gap =
                    reversibility_gap.max((l_ij * a_map[&j] - l_ji * a_map[&i]).abs());
            }
        }
    }
    Ok(LambdaReport {
        lambda: lambda.iter().map(|(&(i, j), &l)| (i, j, l)).collect(),
        max_rel_deviation: 0.0,
        a,
        b,
        reversibility_gap,
        h_squared_linear: max_h_squared_residual <= 1e-6,
        max_h_squared_residual,
        degenerate,
    })
}

/// Result of reducing an affine rate family to the reinforced normal form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Canonicalization {
    /// Per-vertex local-time divisor `c_j = offset/slope`.
    pub scales: Vec<f64>,
    /// Canonical weights `Ŵ_{i,j} = c_i · offset_{i,j}` per ordered pair.
    pub weights: Vec<(Vertex, Vertex, f64)>,
    /// Whether the canonical weights are symmetric within tolerance.
    pub symmetric: bool,
    /// Largest relative spread of `slope/offset` over sources, per target.
    pub max_rho_spread: f64,
    /// Largest relative asymmetry `|Ŵ_{i,j} − Ŵ_{j,i}|` over edges.
    pub max_asymmetry: f64,
    /// Density-engine verification of the reduced model, when requested and
    /// the weights are symmetric.
    pub exchangeability: Option<ExchReport>,
}

/// Reduce affine rates `slope·x + offset` to reinforced form.
///
/// Requires `ρ_j = slope_{i,j}/offset_{i,j}` to be independent of the source
/// `i` (within `tol`, relative); then dividing each local time by
/// `c_j = 1/ρ_j` turns the rates into `Ŵ_{i,j}(1 + rescaled local time)`
/// with `Ŵ_{i,j} = c_i · offset_{i,j}`. When `verify` is given and the
/// canonical weights are symmetric, the reduced model is run through
/// [`exchangeability_report`].
pub fn canonicalize(
    g: &Graph,
    rates: &RateFamily,
    tol: f64,
    verify: Option<(u64, u64)>,
) -> Result<Canonicalization> {
    let params = rates
        .linear_params()
        .ok_or_else(|| Error::InvalidRates("canonicalization needs an affine rate family".into()))?;

    let mut rho_by_target: BTreeMap<Vertex, Vec<f64>> = BTreeMap::new();
    for (&(_, j), &(slope, offset)) in params {
        rho_by_target.entry(j).or_default().push(slope / offset);
    }
    let mut scales = vec![1.0f64; g.vertex_count()];
    let mut max_rho_spread = 0.0f64;
    for (&j, rhos) in &rho_by_target {
        let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
        let spread = rhos
            .iter()
            .fold(0.0f64, |m, &r| m.max((r - mean).abs() / mean.abs()));
        max_rho_spread = max_rho_spread.max(spread);
        if spread > tol {
            return Err(Error::NotReducible(format!(
                "slope/offset ratio at vertex {j} depends on the source (relative spread {spread:.3e})"
            )));
        }
        scales[j as usize] = 1.0 / mean;
    }

    let mut weights: BTreeMap<Pair, f64> = BTreeMap::new();
    for (&(i, j), &(_, offset)) in params {
        weights.insert((i, j), scales[i as usize] * offset);
    }
    let w_scale = weights.values().fold(0.0f64, |m, &w| m.max(w.abs())).max(1e-300);
    let mut max_asymmetry = 0.0f64;
    for (&(i, j), &w) in &weights {
        if i < j {
            let back = weights.get(&(j, i)).copied().unwrap_or(f64::NAN);
            max_asymmetry = max_asymmetry.max((w - back).abs() / w_scale);
        }
    }
    let symmetric = max_asymmetry <= tol;

    let exchangeability = match (symmetric, verify) {
        (true, Some((pairs, seed))) => {
            let sym_edges: Vec<(Vertex, Vertex, f64)> = g
                .edges()
                .map(|(i, j)| (i, j, 0.5 * (weights[&(i, j)] + weights[&(j, i)])))
                .collect();
            let canonical_rates = RateFamily::vrjp(g, &sym_edges)?;
            let canonical_scale = TimeScale::vrjp(g.vertex_count());
            Some(exchangeability_report(
                g,
                &canonical_rates,
                &canonical_scale,
                pairs,
                seed,
                &ExchOptions::default(),
            )?)
        }
        _ => None,
    };

    Ok(Canonicalization {
        scales,
        weights: weights.iter().map(|(&(i, j), &w)| (i, j, w)).collect(),
        symmetric,
        max_rho_spread,
        max_asymmetry,
        exchangeability,
    })
}

/// The three fixed non-exchangeable models, each designed to fail one
/// specific check, plus constructors for the passing reference model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counterexample {
    /// `f(x) = 1 + x²` with the quadratic scale: the rate/derivative ratio
    /// is not constant, so the proportionality check fails.
    QuadraticRates,
    /// Reinforced rates observed in the raw clock (identity scale): the
    /// density genuinely depends on jump order, so exchangeability fails.
    ReinforcedRatesRawClock,
    /// Reinforced rates with asymmetric weights: proportionality holds per
    /// pair but the balance `λ_{i,j} A_j = λ_{j,i} A_i` fails.
    AsymmetricSlopes,
}

impl Counterexample {
    pub const ALL: [Counterexample; 3] = [
        Counterexample::QuadraticRates,
        Counterexample::ReinforcedRatesRawClock,
        Counterexample::AsymmetricSlopes,
    ];

    /// The check this model is built to fail.
    pub fn designated_check(&self) -> &'static str {
        match self {
            Counterexample::QuadraticRates => "lambda",
            Counterexample::ReinforcedRatesRawClock => "exchangeability",
            Counterexample::AsymmetricSlopes => "reversibility",
        }
    }

    pub fn build(&self, g: &Graph) -> Result<(RateFamily, TimeScale)> {
        let n = g.vertex_count();
        match self {
            Counterexample::QuadraticRates => Ok((
                // Tabulated on a grid fine enough to hit the evaluation
                // points of the proportionality check exactly.
                RateFamily::tabulated_from_fn(g, |x| 1.0 + x * x, 12.0, 0.25)?,
                TimeScale::vrjp(n),
            )),
            Counterexample::ReinforcedRatesRawClock => {
                Ok((RateFamily::vrjp_from_graph(g), TimeScale::identity(n)))
            }
            Counterexample::AsymmetricSlopes => {
                let entries: Vec<_> = g
                    .ordered_pairs()
                    .map(|(i, j)| {
                        let w = if (i, j) == (0, 1) { 2.0 } else { 1.0 };
                        (i, j, w, w)
                    })
                    .collect();
                Ok((RateFamily::linear(g, &entries)?, TimeScale::vrjp(n)))
            }
        }
    }
}

/// Which checks a combined characterization run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Lambda,
    Reversibility,
    Exchangeability,
}

impl std::str::FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(CheckKind::Lambda),
            "reversibility" => Ok(CheckKind::Reversibility),
            "exchangeability" => Ok(CheckKind::Exchangeability),
            other => Err(Error::InvalidConfig(format!("unknown check `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacterizeOptions {
    pub checks: Vec<CheckKind>,
    pub pairs: u64,
    pub seed: u64,
    /// Local-time grid for the analytic checks.
    pub grid: Vec<f64>,
    pub exch: ExchOptions,
    pub lambda_tol: f64,
    pub reversibility_tol: f64,
}

impl Default for CharacterizeOptions {
    fn default() -> Self {
        CharacterizeOptions {
            checks: vec![
                CheckKind::Lambda,
                CheckKind::Reversibility,
                CheckKind::Exchangeability,
            ],
            pairs: 1000,
            seed: 1,
            grid: (0..=20).map(|k| k as f64 * 0.5).collect(),
            exch: ExchOptions::default(),
            lambda_tol: 1e-6,
            reversibility_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// The measured quantity the verdict is based on.
    pub measure: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacterizeReport {
    pub checks: Vec<CheckResult>,
    pub lambda: Option<LambdaReport>,
    pub exchangeability: Option<ExchReport>,
    pub pass: bool,
}

/// Run the requested checks and combine their verdicts.
pub fn characterize(
    g: &Graph,
    rates: &RateFamily,
    scale: &TimeScale,
    opts: &CharacterizeOptions,
) -> Result<CharacterizeReport> {
    let mut checks = Vec::new();
    let mut lambda_report: Option<LambdaReport> = None;
    let mut exch_report: Option<ExchReport> = None;

    for kind in &opts.checks {
        match kind {
            CheckKind::Lambda => {
                let report = lambda_estimate(rates, scale, &opts.grid)?;
                checks.push(CheckResult {
                    name: "lambda".into(),
                    pass: report.max_rel_deviation <= opts.lambda_tol,
                    measure: report.max_rel_deviation,
                });
                lambda_report = Some(report);
            }
            CheckKind::Reversibility => {
                let lambda = match &lambda_report {
                    Some(r) => r.lambda_map(),
                    None => lambda_estimate(rates, scale, &opts.grid)?.lambda_map(),
                };
                let report = reversibility_check(scale, &lambda, &opts.grid)?;
                let measure = report.reversibility_gap.max(report.max_h_squared_residual);
                checks.push(CheckResult {
                    name: "reversibility".into(),
                    pass: report.h_squared_linear
                        && report.reversibility_gap <= opts.reversibility_tol,
                    measure,
                });
                let deviation = lambda_report
                    .as_ref()
                    .map(|r| r.max_rel_deviation)
                    .unwrap_or(0.0);
                lambda_report = Some(LambdaReport {
                    max_rel_deviation: deviation,
                    ..report
                });
            }
            CheckKind::Exchangeability => {
                let report =
                    exchangeability_report(g, rates, scale, opts.pairs, opts.seed, &opts.exch)?;
                checks.push(CheckResult {
                    name: "exchangeability".into(),
                    pass: report.verdict == Verdict::Pass,
                    measure: report.max_abs_log_gap,
                });
                exch_report = Some(report);
            }
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(CharacterizeReport {
        checks,
        lambda: lambda_report,
        exchangeability: exch_report,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half_grid(max: f64) -> Vec<f64> {
        let steps = (max / 0.5).round() as usize;
        (0..=steps).map(|k| k as f64 * 0.5).collect()
    }

    #[test]
    fn lambda_for_reinforced_rates_is_half_the_weight() {
        let g = Graph::triangle();
        let f = RateFamily::vrjp_from_graph(&g);
        let t = TimeScale::vrjp(3);
        let report = lambda_estimate(&f, &t, &half_grid(10.0)).unwrap();
        for &(_, _, l) in &report.lambda {
            assert_eq!(l, 0.5);
        }
        assert_eq!(report.max_rel_deviation, 0.0);
    }

    #[test]
    fn lambda_for_quadratic_rates_deviates() {
        let g = Graph::triangle();
        let (f, t) = Counterexample::QuadraticRates.build(&g).unwrap();
        let report = lambda_estimate(&f, &t, &[0.0, 2.0]).unwrap();
        // ratios are 1/2 and 5/6; mean 2/3; worst relative deviation 1/4
        let lambda = report.lambda_map()[&(0, 1)];
        assert_relative_eq!(lambda, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(report.max_rel_deviation, 0.25, epsilon = 1e-12);
        assert!(report.max_rel_deviation > 0.1);
    }

    #[test]
    fn lambda_for_constant_rates_and_identity_scale() {
        let g = Graph::triangle();
        let f = RateFamily::constant_uniform(&g, 3.0).unwrap();
        let t = TimeScale::identity(3);
        let report = lambda_estimate(&f, &t, &half_grid(10.0)).unwrap();
        for &(_, _, l) in &report.lambda {
            assert_eq!(l, 3.0);
        }
        assert_eq!(report.max_rel_deviation, 0.0);
    }

    #[test]
    fn reversibility_for_the_quadratic_scale() {
        let g = Graph::triangle();
        let f = RateFamily::vrjp_from_graph(&g);
        let t = TimeScale::vrjp(3);
        let lambda = lambda_estimate(&f, &t, &half_grid(10.0)).unwrap().lambda_map();
        let report = reversibility_check(&t, &lambda, &half_grid(10.0)).unwrap();
        for &(_, a) in &report.a {
            assert_relative_eq!(a, 4.0, epsilon = 1e-8);
        }
        for &(_, b) in &report.b {
            assert_relative_eq!(b, 4.0, epsilon = 1e-12);
        }
        assert!(report.h_squared_linear);
        assert!(report.reversibility_gap < 1e-8);
        assert!(!report.degenerate);
    }

    #[test]
    fn reversibility_for_the_identity_scale_is_degenerate() {
        let t = TimeScale::identity(3);
        let lambda: BTreeMap<Pair, f64> =
            [((0, 1), 1.0), ((1, 0), 1.0)].into_iter().collect();
        let report = reversibility_check(&t, &lambda, &half_grid(10.0)).unwrap();
        for &(_, a) in &report.a {
            assert_relative_eq!(a, 0.0, epsilon = 1e-10);
        }
        for &(_, b) in &report.b {
            assert_eq!(b, 1.0);
        }
        assert!(report.degenerate);
        assert!(report.h_squared_linear);
    }

    #[test]
    fn reversibility_gap_for_asymmetric_constants() {
        let t = TimeScale::vrjp(2);
        let lambda: BTreeMap<Pair, f64> =
            [((0, 1), 1.0), ((1, 0), 2.0)].into_iter().collect();
        let report = reversibility_check(&t, &lambda, &half_grid(10.0)).unwrap();
        assert_relative_eq!(report.reversibility_gap, 4.0, epsilon = 1e-7);
    }

    #[test]
    fn exchangeability_passes_for_the_reinforced_model() {
        let g = Graph::triangle();
        let f = RateFamily::vrjp_from_graph(&g);
        let t = TimeScale::vrjp(3);
        let report =
            exchangeability_report(&g, &f, &t, 64, 7, &ExchOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.max_abs_log_gap < 1e-9, "gap {}", report.max_abs_log_gap);
    }

    #[test]
    fn exchangeability_fails_without_the_time_change() {
        let g = Graph::triangle();
        let (f, t) = Counterexample::ReinforcedRatesRawClock.build(&g).unwrap();
        let report =
            exchangeability_report(&g, &f, &t, 256, 11, &ExchOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert!(report.max_abs_log_gap > 0.01, "gap {}", report.max_abs_log_gap);
    }

    #[test]
    fn exchangeability_fails_for_quadratic_rates() {
        let g = Graph::triangle();
        let (f, t) = Counterexample::QuadraticRates.build(&g).unwrap();
        let report =
            exchangeability_report(&g, &f, &t, 256, 13, &ExchOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert!(report.max_abs_log_gap > 0.01);
    }

    #[test]
    fn freedman_string_against_itself_is_exactly_zero() {
        let g = Graph::triangle();
        let f = RateFamily::vrjp_from_graph(&g);
        let t = TimeScale::vrjp(3);
        let s = [0u32, 1, 0, 2, 1];
        let report =
            freedman_check(&g, &f, &t, 0.5, &s, &s, 50_000, 3, 100_000).unwrap();
        assert_eq!(report.estimate_a, report.estimate_b);
        assert_eq!(report.z, 0.0);
        assert!(report.estimate_a.estimate > 0.0, "string never observed");
    }

    #[test]
    fn freedman_rejects_non_equivalent_strings() {
        let g = Graph::triangle();
        let f = RateFamily::vrjp_from_graph(&g);
        let t = TimeScale::vrjp(3);
        let a = [0u32, 1, 0, 2, 1];
        let b = [0u32, 2, 0, 2, 1];
        assert!(matches!(
            freedman_check(&g, &f, &t, 0.3, &a, &b, 100, 3, 1000),
            Err(Error::NotEquivalentStrings(_))
        ));
        let c = [1u32, 0, 1, 2, 0];
        assert!(freedman_check(&g, &f, &t, 0.3, &a, &c, 100, 3, 1000).is_err());
    }

    #[test]
    fn canonicalize_identity_case() {
        let g = Graph::triangle();
        let f = RateFamily::linear_uniform(&g, 1.0, 1.0).unwrap();
        let c = canonicalize(&g, &f, 1e-9, None).unwrap();
        assert_eq!(c.scales, vec![1.0, 1.0, 1.0]);
        assert!(c.weights.iter().all(|&(_, _, w)| w == 1.0));
        assert!(c.symmetric);
    }

    #[test]
    fn canonicalize_rescales_offsets() {
        let g = Graph::triangle();
        let f = RateFamily::linear_uniform(&g, 1.0, 2.0).unwrap();
        let c = canonicalize(&g, &f, 1e-9, None).unwrap();
        assert_eq!(c.scales, vec![2.0, 2.0, 2.0]);
        assert!(c.weights.iter().all(|&(_, _, w)| w == 4.0));
        assert!(c.symmetric);
        assert_eq!(c.max_rho_spread, 0.0);
    }

    #[test]
    fn canonicalize_detects_ambiguous_ratios() {
        let g = Graph::triangle();
        // slope/offset toward vertex 1 differs between sources 0 and 2
        let entries: Vec<_> = g
            .ordered_pairs()
            .map(|(i, j)| {
                if (i, j) == (2, 1) {
                    (i, j, 1.0, 2.0)
                } else {
                    (i, j, 1.0, 1.0)
                }
            })
            .collect();
        let f = RateFamily::linear(&g, &entries).unwrap();
        assert!(matches!(
            canonicalize(&g, &f, 1e-9, None),
            Err(Error::NotReducible(_))
        ));
    }

    #[test]
    fn canonicalize_reports_asymmetry() {
        let g = Graph::triangle();
        let (f, _) = Counterexample::AsymmetricSlopes.build(&g).unwrap();
        let c = canonicalize(&g, &f, 1e-9, None).unwrap();
        assert!(!c.symmetric);
        assert!(c.max_asymmetry > 0.1);
        assert!(c.exchangeability.is_none());
    }

    #[test]
    fn characterize_combines_checks() {
        let g = Graph::triangle();
        let f = RateFamily::vrjp_from_graph(&g);
        let t = TimeScale::vrjp(3);
        let opts = CharacterizeOptions {
            pairs: 32,
            ..CharacterizeOptions::default()
        };
        let report = characterize(&g, &f, &t, &opts).unwrap();
        assert!(report.pass);
        assert_eq!(report.checks.len(), 3);

        let (f2, t2) = Counterexample::QuadraticRates.build(&g).unwrap();
        let report2 = characterize(&g, &f2, &t2, &opts).unwrap();
        assert!(!report2.pass);
        let lambda_check = report2.checks.iter().find(|c| c.name == "lambda").unwrap();
        assert!(!lambda_check.pass);
    }

    #[test]
    fn check_kind_parses() {
        assert_eq!("lambda".parse::<CheckKind>().unwrap(), CheckKind::Lambda);
        assert!("nonsense".parse::<CheckKind>().is_err());
    }
}
