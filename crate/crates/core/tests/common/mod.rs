//! Shared oracles for the integration suites: quadrature of raw-clock
//! densities over jump-time bins, and the equivalent-pair generator used by
//! the exchangeability criteria.
#![allow(dead_code)]

use rand::Rng;
use vrjp_core::characterization::ExchOptions;
use vrjp_core::density::log_density_x;
use vrjp_core::dynamics::{RateFamily, TimeScale};
use vrjp_core::graph::Graph;
use vrjp_core::numeric::adaptive_simpson_tol;
use vrjp_core::simulator::{simulate_stream, trial_rng};
use vrjp_core::trajectory::{Clock, TimeChange, Trajectory};
use vrjp_core::Vertex;

/// Probability of a bin event under the raw-clock process, by nested
/// adaptive quadrature of the exact density over the jump-time bins.
/// Supports up to two jumps, which the acceptance battery uses.
pub fn bin_event_probability(
    g: &Graph,
    rates: &RateFamily,
    start: Vertex,
    horizon: f64,
    skeleton: &[Vertex],
    bins: &[(f64, f64)],
) -> f64 {
    assert!(skeleton.len() <= 2, "oracle handles at most two jumps");
    match skeleton.len() {
        0 => {
            let stay = Trajectory::stay(start, horizon, Clock::X).unwrap();
            log_density_x(&stay, g, rates).unwrap().exp()
        }
        1 => {
            let (a, b) = bins[0];
            let f = |t1: f64| {
                // Quadrature nodes can land on the closed bin boundary;
                // nudge into the open simplex (the density is continuous).
                let t1 = t1.max(1e-12);
                let tr =
                    Trajectory::from_jumps(start, &[(skeleton[0], t1)], horizon, Clock::X)
                        .unwrap();
                log_density_x(&tr, g, rates).unwrap().exp()
            };
            adaptive_simpson_tol(&f, a, b, 1e-9).unwrap()
        }
        _ => {
            let (a1, b1) = bins[0];
            let (a2, b2) = bins[1];
            let outer = |t1: f64| {
                let t1 = t1.max(1e-12);
                let lo = a2.max(t1);
                if lo >= b2 {
                    return 0.0;
                }
                let inner = |t2: f64| {
                    let t2 = t2.max(t1 * (1.0 + 1e-14) + 1e-15);
                    let tr = Trajectory::from_jumps(
                        start,
                        &[(skeleton[0], t1), (skeleton[1], t2)],
                        horizon,
                        Clock::X,
                    )
                    .unwrap();
                    log_density_x(&tr, g, rates).unwrap().exp()
                };
                adaptive_simpson_tol(&inner, lo, b2, 1e-10).unwrap()
            };
            adaptive_simpson_tol(&outer, a1, b1, 1e-9).unwrap()
        }
    }
}

/// One simulated trajectory in the reparametrized clock plus an equivalent
/// shuffled partner, on the stream `(seed, index)` — the same mechanics the
/// exchangeability report uses.
pub fn equivalent_pair(
    g: &Graph,
    rates: &RateFamily,
    scale: &TimeScale,
    seed: u64,
    index: u64,
    opts: &ExchOptions,
) -> (Trajectory, Trajectory) {
    let mut rng = trial_rng(seed, index);
    let tr_x = simulate_stream(g, rates, opts.start, opts.x_horizon, opts.max_jumps, &mut rng)
        .expect("simulation stays under the jump cap");
    let tr_y = tr_x.time_change(scale, TimeChange::XToY).unwrap();
    let partner = tr_y.excursion_shuffle(&mut rng);
    (tr_y, partner)
}

/// Random symmetric weights in `[0.5, 2]` for every edge of `g`.
pub fn random_weights<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Vec<(Vertex, Vertex, f64)> {
    g.edges()
        .map(|(i, j)| (i, j, rng.random_range(0.5..2.0)))
        .collect()
}

/// One-sample Kolmogorov–Smirnov statistic against a CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Critical value of the Kolmogorov statistic at significance 1e-3:
/// `2·exp(−2nc²) = 1e-3` gives `c = 1.94948/√n` (higher terms negligible).
pub fn ks_critical_1e3(n: usize) -> f64 {
    1.94948 / (n as f64).sqrt()
}
