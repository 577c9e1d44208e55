//! Exact simulation and seeded Monte Carlo estimation.
//!
//! While the walker sits at a vertex, every neighbor's local time is frozen
//! (there are no loops), so the outgoing rates are constant on the holding
//! interval: the holding time is exponential with the total outgoing rate
//! and the jump target is drawn proportionally to the individual rates.
//! Simulation is therefore exact, not discretized.
//!
//! # Reproducibility
//!
//! Randomness comes from ChaCha8 streams: trial `i` of a batch uses
//! `ChaCha8Rng::seed_from_u64(seed)` with `set_stream(i)`. The exponential
//! transform is the inverse CDF `Δ = −ln(1−U)/λ` with `U` uniform in
//! `[0, 1)` (a zero increment is redrawn); targets use one additional
//! uniform against the cumulative rates in ascending neighbor order. Batch
//! aggregation sums integer success counts, so estimates are identical
//! regardless of how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RateFamily, TimeScale};
use crate::graph::Graph;
use crate::trajectory::{Clock, Trajectory};
use crate::{Error, Result, Vertex};

/// Simulation parameters in the raw clock.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub start: Vertex,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_max_jumps")]
    pub max_jumps: u64,
}

fn default_max_jumps() -> u64 {
    10_000_000
}

impl SimConfig {
    pub fn validate(&self, g: &Graph) -> Result<()> {
        g.check_vertex(self.start)?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if self.max_jumps == 0 {
            return Err(Error::InvalidConfig("max_jumps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Frequency estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl McEstimate {
    pub fn from_successes(successes: u64, trials: u64) -> Self {
        let p = successes as f64 / trials as f64;
        McEstimate {
            estimate: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// The ChaCha stream for trial `trial` of a batch seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        let delta = -(1.0 - u).ln() / rate;
        if delta > 0.0 {
            return delta;
        }
    }
}

fn draw_target<R: Rng + ?Sized>(rng: &mut R, choices: &[(Vertex, f64)], total: f64) -> Vertex {
    let threshold: f64 = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for &(j, rate) in choices {
        cumulative += rate;
        if threshold < cumulative {
            return j;
        }
    }
    choices.last().expect("at least one neighbor").0
}

/// Simulate one raw-clock trajectory on the stream `(cfg.seed, 0)`.
pub fn simulate(g: &Graph, rates: &RateFamily, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate(g)?;
    let mut rng = trial_rng(cfg.seed, 0);
    simulate_stream(g, rates, cfg.start, cfg.horizon, cfg.max_jumps, &mut rng)
}

/// Simulate one raw-clock trajectory from an explicit stream.
pub fn simulate_stream<R: Rng + ?Sized>(
    g: &Graph,
    rates: &RateFamily,
    start: Vertex,
    horizon: f64,
    max_jumps: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    g.check_vertex(start)?;
    let mut local = vec![0.0f64; g.vertex_count()];
    let mut segments: Vec<(Vertex, f64)> = Vec::new();
    let mut current = start;
    let mut elapsed = 0.0f64;
    let mut choices: Vec<(Vertex, f64)> = Vec::new();
    loop {
        choices.clear();
        let mut total = 0.0;
        for &j in g.neighbors(current) {
            let f = rates.eval(current, j, local[j as usize])?;
            choices.push((j, f));
            total += f;
        }
        if total <= 0.0 {
            // Isolated vertex: the walk stays put until the horizon.
            return Trajectory::from_holds(start, segments, horizon - elapsed, Clock::X)
                .map(|tr| tr.pin_horizon(horizon));
        }
        let delta = draw_exponential(rng, total);
        if elapsed + delta >= horizon {
            return Trajectory::from_holds(start, segments, horizon - elapsed, Clock::X)
                .map(|tr| tr.pin_horizon(horizon));
        }
        if segments.len() as u64 == max_jumps {
            return Err(Error::MaxJumpsExceeded { max_jumps });
        }
        let target = draw_target(rng, &choices, total);
        local[current as usize] += delta;
        elapsed += delta;
        segments.push((target, delta));
        current = target;
    }
}

/// Simulate in the raw clock until the reparametrized clock
/// `Σ_i h_i(l_i(t))` reaches `y_horizon`, truncating the final holding
/// interval exactly there. The returned trajectory is in the raw clock;
/// transporting it with the same scale yields a reparametrized horizon of
/// `y_horizon` up to roundoff.
pub fn simulate_until_y<R: Rng + ?Sized>(
    g: &Graph,
    rates: &RateFamily,
    scale: &TimeScale,
    start: Vertex,
    y_horizon: f64,
    max_jumps: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    g.check_vertex(start)?;
    if !(y_horizon.is_finite() && y_horizon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "reparametrized horizon {y_horizon} must be positive"
        )));
    }
    let mut local = vec![0.0f64; g.vertex_count()];
    let mut segments: Vec<(Vertex, f64)> = Vec::new();
    let mut current = start;
    let mut reparam_elapsed = 0.0f64;
    let mut choices: Vec<(Vertex, f64)> = Vec::new();
    loop {
        let sc = scale.vertex(current)?;
        let l_here = local[current as usize];
        let h_before = sc.h(l_here)?;

        choices.clear();
        let mut total = 0.0;
        for &j in g.neighbors(current) {
            let f = rates.eval(current, j, local[j as usize])?;
            choices.push((j, f));
            total += f;
        }

        let truncate = |remaining: f64| -> Result<f64> {
            let l_end = sc.h_inv(h_before + remaining)?;
            Ok((l_end - l_here).max(0.0))
        };

        if total <= 0.0 {
            let final_hold = truncate(y_horizon - reparam_elapsed)?;
            return Trajectory::from_holds(start, segments, final_hold, Clock::X);
        }
        let delta = draw_exponential(rng, total);
        let advance = sc.h(l_here + delta)? - h_before;
        if reparam_elapsed + advance >= y_horizon {
            let final_hold = truncate(y_horizon - reparam_elapsed)?;
            return Trajectory::from_holds(start, segments, final_hold, Clock::X);
        }
        if segments.len() as u64 == max_jumps {
            return Err(Error::MaxJumpsExceeded { max_jumps });
        }
        let target = draw_target(rng, &choices, total);
        local[current as usize] += delta;
        reparam_elapsed += advance;
        segments.push((target, delta));
        current = target;
    }
}

/// An event whose probability the Monte Carlo estimator measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventSpec {
    /// Exactly these jumps, the `k`-th landing inside `bins[k]`.
    Bins {
        skeleton: Vec<Vertex>,
        bins: Vec<(f64, f64)>,
    },
    /// The trajectory discretized at `grid` starts with exactly `states`.
    String { states: Vec<Vertex>, grid: f64 },
}

impl EventSpec {
    pub fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            EventSpec::Bins { skeleton, bins } => {
                if bins.len() != skeleton.len() {
                    return Err(Error::InvalidEvent(format!(
                        "{} bins for {} jumps",
                        bins.len(),
                        skeleton.len()
                    )));
                }
                for &(a, b) in bins {
                    if !(a >= 0.0 && a < b && b <= horizon) {
                        return Err(Error::InvalidEvent(format!(
                            "bin [{a}, {b}] is empty or outside [0, {horizon}]"
                        )));
                    }
                }
                Ok(())
            }
            EventSpec::String { states, grid } => {
                if states.is_empty() {
                    return Err(Error::InvalidEvent("empty state string".into()));
                }
                if !(grid.is_finite() && *grid > 0.0) {
                    return Err(Error::InvalidEvent(format!("grid step {grid} must be positive")));
                }
                let needed = (states.len() - 1) as f64 * grid;
                if needed > horizon * (1.0 + 1e-12) {
                    return Err(Error::InvalidEvent(format!(
                        "string needs horizon {needed}, simulation stops at {horizon}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn matches(&self, tr: &Trajectory) -> bool {
        match self {
            EventSpec::Bins { skeleton, bins } => {
                if tr.n_jumps() != skeleton.len() {
                    return false;
                }
                let path = tr.skeleton();
                if path[1..] != skeleton[..] {
                    return false;
                }
                tr.jump_times()
                    .iter()
                    .zip(bins)
                    .all(|(&t, &(a, b))| a <= t && t <= b)
            }
            EventSpec::String { states, grid } => states.iter().enumerate().all(|(k, &want)| {
                let t = (k as f64 * grid).min(tr.horizon());
                tr.state_at(t).map(|s| s == want).unwrap_or(false)
            }),
        }
    }
}

/// Estimate the probability of `event` under the raw-clock process by
/// independent trials on streams `(cfg.seed, 0..trials)`.
pub fn mc_event_probability(
    g: &Graph,
    rates: &RateFamily,
    cfg: &SimConfig,
    event: &EventSpec,
    trials: u64,
) -> Result<McEstimate> {
    cfg.validate(g)?;
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    event.validate(cfg.horizon)?;
    let successes = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let mut rng = trial_rng(cfg.seed, trial);
            let tr =
                simulate_stream(g, rates, cfg.start, cfg.horizon, cfg.max_jumps, &mut rng)?;
            Ok(event.matches(&tr) as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(McEstimate::from_successes(successes, trials))
}
