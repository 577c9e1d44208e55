//! Piecewise-constant trajectories of nearest-neighbor jump processes.
//!
//! A trajectory is a start vertex, an ordered list of jumps, and a horizon.
//! Internally it is stored as holding times rather than absolute jump times:
//! the equivalence-preserving shuffle permutes holding times between visits,
//! and keeping the holds themselves means per-vertex occupation totals are
//! preserved to the last bit (local times are accumulated per vertex in
//! sorted order, so any reordering of the same holds sums identically).
//!
//! Two trajectories are equivalent when they start at the same vertex, have
//! identical transition counts, and accumulate the same final local time at
//! every vertex. The shuffle, the time-change transport, and the
//! discretization here are the raw material for the exchangeability checks
//! in [`crate::characterization`].

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeScale;
use crate::graph::Graph;
use crate::numeric::{sorted_sum, CompensatedSum};
use crate::{Error, Result, Vertex};

/// Which clock the trajectory lives in: the raw clock of the simulated
/// process or the reparametrized clock after the time change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clock {
    X,
    Y,
}

/// Direction of the time-change transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeChange {
    XToY,
    YToX,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    /// Vertex jumped to.
    target: Vertex,
    /// Time spent in the previous state before this jump.
    hold: f64,
}

/// An immutable trajectory: right-continuous, piecewise constant, no
/// self-jumps, strictly increasing jump times within `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start: Vertex,
    clock: Clock,
    segments: Vec<Segment>,
    /// Time spent in the last state up to the horizon (zero if the last
    /// jump lands exactly on the horizon).
    final_hold: f64,
    jump_times: Vec<f64>,
    horizon: f64,
}

/// Transition counts `N_{i,j}`: number of jumps from `i` to `j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TransitionCounts(BTreeMap<(Vertex, Vertex), u64>);

impl TransitionCounts {
    pub fn get(&self, i: Vertex, j: Vertex) -> u64 {
        self.0.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((Vertex, Vertex), u64)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Counts of a discrete string of states, consecutive duplicates
    /// included (a string may hold still on its observation grid).
    pub fn of_string(states: &[Vertex]) -> Self {
        let mut map = BTreeMap::new();
        for w in states.windows(2) {
            *map.entry((w[0], w[1])).or_insert(0) += 1;
        }
        TransitionCounts(map)
    }
}

impl Trajectory {
    /// Build from per-segment holding times. Each hold is the time spent in
    /// the previous state strictly before the jump; `final_hold` is the time
    /// spent in the last state up to the horizon.
    pub fn from_holds(
        start: Vertex,
        segments: Vec<(Vertex, f64)>,
        final_hold: f64,
        clock: Clock,
    ) -> Result<Self> {
        let mut prev = start;
        for &(target, hold) in &segments {
            if target == prev {
                return Err(Error::InvalidTrajectory(format!(
                    "self-jump at vertex {target}"
                )));
            }
            if !(hold.is_finite() && hold > 0.0) {
                return Err(Error::InvalidTrajectory(format!(
                    "holding time {hold} is not positive"
                )));
            }
            prev = target;
        }
        if !(final_hold.is_finite() && final_hold >= 0.0) {
            return Err(Error::InvalidTrajectory(format!(
                "final holding time {final_hold} is negative"
            )));
        }
        let mut jump_times = Vec::with_capacity(segments.len());
        let mut acc = CompensatedSum::default();
        for &(_, hold) in &segments {
            acc.add(hold);
            jump_times.push(acc.value());
        }
        acc.add(final_hold);
        let horizon = acc.value();
        Ok(Trajectory {
            start,
            clock,
            segments: segments
                .into_iter()
                .map(|(target, hold)| Segment { target, hold })
                .collect(),
            final_hold,
            jump_times,
            horizon,
        })
    }

    /// Build from absolute jump times, as in the JSONL interchange format.
    pub fn from_jumps(
        start: Vertex,
        jumps: &[(Vertex, f64)],
        horizon: f64,
        clock: Clock,
    ) -> Result<Self> {
        let mut prev_time = 0.0;
        let mut segments = Vec::with_capacity(jumps.len());
        for &(target, time) in jumps {
            if time.is_nan() || time <= prev_time {
                return Err(Error::InvalidTrajectory(format!(
                    "jump times must increase strictly: {time} after {prev_time}"
                )));
            }
            segments.push((target, time - prev_time));
            prev_time = time;
        }
        if horizon.is_nan() || horizon < prev_time {
            return Err(Error::InvalidTrajectory(format!(
                "horizon {horizon} precedes the last jump at {prev_time}"
            )));
        }
        let mut tr = Self::from_holds(start, segments, horizon - prev_time, clock)?;
        // Preserve the caller's jump times and horizon bit-for-bit.
        tr.jump_times = jumps.iter().map(|&(_, t)| t).collect();
        tr.horizon = horizon;
        Ok(tr)
    }

    /// Trajectory with no jumps.
    pub fn stay(start: Vertex, horizon: f64, clock: Clock) -> Result<Self> {
        Self::from_holds(start, Vec::new(), horizon, clock)
    }

    /// Pin the horizon to the caller's exact value instead of the
    /// reconstructed sum of holds (they agree up to roundoff).
    pub(crate) fn pin_horizon(mut self, horizon: f64) -> Self {
        debug_assert!(self.jump_times.last().is_none_or(|&t| t <= horizon));
        self.horizon = horizon;
        self
    }

    pub fn start(&self) -> Vertex {
        self.start
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn n_jumps(&self) -> usize {
        self.segments.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Visited states in path order: start, then each jump target.
    pub fn skeleton(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push(self.start);
        out.extend(self.segments.iter().map(|s| s.target));
        out
    }

    /// Final state of the path.
    pub fn end(&self) -> Vertex {
        self.segments.last().map_or(self.start, |s| s.target)
    }

    /// Holding intervals in path order: `(state, duration)`, the last entry
    /// being the possibly censored final interval.
    pub fn intervals(&self) -> Vec<(Vertex, f64)> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut state = self.start;
        for seg in &self.segments {
            out.push((state, seg.hold));
            state = seg.target;
        }
        out.push((state, self.final_hold));
        out
    }

    /// State at time `t`, right continuous.
    pub fn state_at(&self, t: f64) -> Result<Vertex> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let jumps_before = self.jump_times.partition_point(|&jt| jt <= t);
        Ok(if jumps_before == 0 {
            self.start
        } else {
            self.segments[jumps_before - 1].target
        })
    }

    /// Check that consecutive states are adjacent in `g` and that all
    /// vertices are in range.
    pub fn validate_on(&self, g: &Graph) -> Result<()> {
        g.check_vertex(self.start)?;
        let mut prev = self.start;
        for seg in &self.segments {
            g.check_vertex(seg.target)?;
            if !g.is_adjacent(prev, seg.target) {
                return Err(Error::NotAdjacent(prev, seg.target));
            }
            prev = seg.target;
        }
        Ok(())
    }

    /// Occupation time of every vertex `0..vertex_count` up to time `t`.
    ///
    /// Per-vertex holds are summed in sorted order, so trajectories that
    /// merely permute the same holding times produce identical totals.
    pub fn local_times(&self, t: f64, vertex_count: usize) -> Result<Vec<f64>> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let mut per_vertex: Vec<Vec<f64>> = vec![Vec::new(); vertex_count];
        let push = |per_vertex: &mut Vec<Vec<f64>>, v: Vertex, hold: f64| -> Result<()> {
            let slot = per_vertex
                .get_mut(v as usize)
                .ok_or(Error::VertexOutOfRange {
                    vertex: v,
                    count: vertex_count,
                })?;
            slot.push(hold);
            Ok(())
        };
        if t == self.horizon {
            let mut state = self.start;
            for seg in &self.segments {
                push(&mut per_vertex, state, seg.hold)?;
                state = seg.target;
            }
            push(&mut per_vertex, state, self.final_hold)?;
        } else {
            let jumps_before = self.jump_times.partition_point(|&jt| jt <= t);
            let mut state = self.start;
            for seg in &self.segments[..jumps_before] {
                push(&mut per_vertex, state, seg.hold)?;
                state = seg.target;
            }
            let interval_start = if jumps_before == 0 {
                0.0
            } else {
                self.jump_times[jumps_before - 1]
            };
            push(&mut per_vertex, state, t - interval_start)?;
        }
        Ok(per_vertex
            .iter_mut()
            .map(|holds| sorted_sum(holds))
            .collect())
    }

    /// Final local times keyed by visited vertex.
    pub fn final_local_times_map(&self) -> BTreeMap<Vertex, f64> {
        let mut per_vertex: BTreeMap<Vertex, Vec<f64>> = BTreeMap::new();
        for (state, hold) in self.intervals() {
            per_vertex.entry(state).or_default().push(hold);
        }
        per_vertex
            .into_iter()
            .map(|(v, mut holds)| (v, sorted_sum(&mut holds)))
            .collect()
    }

    /// Transition counts of the jump skeleton.
    pub fn transition_counts(&self) -> TransitionCounts {
        let mut map = BTreeMap::new();
        let mut state = self.start;
        for seg in &self.segments {
            *map.entry((state, seg.target)).or_insert(0) += 1;
            state = seg.target;
        }
        TransitionCounts(map)
    }

    /// Equivalence: same clock and start, exactly equal transition counts,
    /// horizons within `tol`, and final local times within `tol` per vertex.
    pub fn is_equivalent(&self, other: &Trajectory, tol: f64) -> Result<bool> {
        if self.clock != other.clock {
            return Err(Error::ClockMismatch {
                expected: self.clock,
                got: other.clock,
            });
        }
        if self.start != other.start
            || self.transition_counts() != other.transition_counts()
            || (self.horizon - other.horizon).abs() > tol
        {
            return Ok(false);
        }
        let a = self.final_local_times_map();
        let b = other.final_local_times_map();
        for v in a.keys().chain(b.keys()) {
            let la = a.get(v).copied().unwrap_or(0.0);
            let lb = b.get(v).copied().unwrap_or(0.0);
            if (la - lb).abs() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Draw an equivalent trajectory by re-threading the jump multiset.
    ///
    /// The sampler rebuilds a path from the same start that consumes exactly
    /// the original transitions (so counts are preserved) and deals each
    /// vertex its original holding times in a random order (so per-vertex
    /// occupation is a permutation of the same numbers, and the totals are
    /// bit-identical under sorted summation). The identity outcome is
    /// possible but has probability below one whenever the equivalence class
    /// has another member. Trajectories with at most one jump are returned
    /// unchanged.
    pub fn excursion_shuffle<R: Rng + ?Sized>(&self, rng: &mut R) -> Trajectory {
        if self.n_jumps() <= 1 {
            return self.clone();
        }
        const MAX_ATTEMPTS: usize = 256;
        let n = self.n_jumps();
        let mut out_edges: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        {
            let mut state = self.start;
            for seg in &self.segments {
                out_edges.entry(state).or_default().push(seg.target);
                state = seg.target;
            }
        }
        for _ in 0..MAX_ATTEMPTS {
            let mut remaining = out_edges.clone();
            let mut path = Vec::with_capacity(n + 1);
            path.push(self.start);
            let mut current = self.start;
            let mut ok = true;
            for _ in 0..n {
                let Some(choices) = remaining.get_mut(&current) else {
                    ok = false;
                    break;
                };
                if choices.is_empty() {
                    ok = false;
                    break;
                }
                let idx = rng.random_range(0..choices.len());
                let next = choices.swap_remove(idx);
                path.push(next);
                current = next;
            }
            if !ok {
                // A greedy walk can strand transitions; retry.
                continue;
            }
            return self.rethread(&path, rng);
        }
        self.clone()
    }

    /// Reassemble this trajectory along `path`, which must consume the same
    /// transition multiset from the same start. Each vertex's holds are
    /// dealt to its visit slots in a random order.
    fn rethread<R: Rng + ?Sized>(&self, path: &[Vertex], rng: &mut R) -> Trajectory {
        let mut holds_by_vertex: BTreeMap<Vertex, Vec<f64>> = BTreeMap::new();
        for (state, hold) in self.intervals() {
            holds_by_vertex.entry(state).or_default().push(hold);
        }
        for holds in holds_by_vertex.values_mut() {
            holds.shuffle(rng);
        }
        let mut segments = Vec::with_capacity(path.len() - 1);
        for k in 0..path.len() - 1 {
            let hold = holds_by_vertex
                .get_mut(&path[k])
                .and_then(|q| q.pop())
                .expect("re-threaded path visits each vertex as often as the original");
            segments.push((path[k + 1], hold));
        }
        let final_hold = holds_by_vertex
            .get_mut(&path[path.len() - 1])
            .and_then(|q| q.pop())
            .expect("final visit keeps a holding time");
        Trajectory::from_holds(self.start, segments, final_hold, self.clock)
            .expect("re-threading preserves trajectory invariants")
    }

    /// Transport this trajectory between clocks.
    ///
    /// Raw to reparametrized maps every jump time `t` to
    /// `Σ_i h_i(l_i(t))`; the reverse direction inverts it. Both walk the
    /// holding intervals, so the map is exact per interval: while the walker
    /// sits at `v`, only `h_v` advances.
    pub fn time_change(&self, scale: &TimeScale, direction: TimeChange) -> Result<Trajectory> {
        let (expected, new_clock) = match direction {
            TimeChange::XToY => (Clock::X, Clock::Y),
            TimeChange::YToX => (Clock::Y, Clock::X),
        };
        if self.clock != expected {
            return Err(Error::ClockMismatch {
                expected,
                got: self.clock,
            });
        }
        let mut local: BTreeMap<Vertex, f64> = BTreeMap::new();
        let intervals = self.intervals();
        let mut new_holds = Vec::with_capacity(self.segments.len());
        let mut mapped_final = 0.0;
        for (k, &(state, hold)) in intervals.iter().enumerate() {
            let sc = scale.vertex(state)?;
            let before = local.entry(state).or_insert(0.0);
            let after = *before + hold;
            let mapped = match direction {
                TimeChange::XToY => sc.h(after)? - sc.h(*before)?,
                TimeChange::YToX => sc.h_inv(after)? - sc.h_inv(*before)?,
            };
            let is_final = k + 1 == intervals.len();
            if !mapped.is_finite() || mapped < 0.0 || (!is_final && mapped == 0.0 && hold > 0.0) {
                return Err(Error::NonMonotoneTimeChange);
            }
            *before = after;
            if is_final {
                mapped_final = mapped;
            } else {
                new_holds.push((self.segments[k].target, mapped));
            }
        }
        Trajectory::from_holds(self.start, new_holds, mapped_final, new_clock)
    }

    /// States sampled right-continuously at `0, h, 2h, …` up to the horizon.
    pub fn discretize(&self, h: f64) -> Result<Vec<Vertex>> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidConfig(format!("grid step {h} must be positive")));
        }
        // Grid points within 1e-9 of the horizon count as reaching it.
        let k_max = (self.horizon / h + 1e-9).floor() as usize;
        (0..=k_max)
            .map(|k| self.state_at((k as f64 * h).min(self.horizon)))
            .collect()
    }
}

/// JSONL record for trajectories:
/// `{"start": v, "jumps": [[target, time], …], "horizon": t, "clock": "X"}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub start: Vertex,
    pub jumps: Vec<(Vertex, f64)>,
    pub horizon: f64,
    pub clock: Clock,
}

impl From<&Trajectory> for TrajectoryRecord {
    fn from(tr: &Trajectory) -> Self {
        TrajectoryRecord {
            start: tr.start,
            jumps: tr
                .segments
                .iter()
                .zip(&tr.jump_times)
                .map(|(seg, &t)| (seg.target, t))
                .collect(),
            horizon: tr.horizon,
            clock: tr.clock,
        }
    }
}

impl TryFrom<TrajectoryRecord> for Trajectory {
    type Error = Error;

    fn try_from(rec: TrajectoryRecord) -> Result<Self> {
        Trajectory::from_jumps(rec.start, &rec.jumps, rec.horizon, rec.clock)
    }
}

impl Trajectory {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&TrajectoryRecord::from(self)).expect("trajectory serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: TrajectoryRecord = serde_json::from_str(line)
            .map_err(|e| Error::InvalidTrajectory(format!("bad trajectory JSON: {e}")))?;
        rec.try_into()
    }
}

/// Uniform random walk on `g` with holds drawn uniformly from `hold_range`,
/// for exercising the density machinery on arbitrary valid trajectories.
pub fn random_trajectory<R: Rng + ?Sized>(
    g: &Graph,
    start: Vertex,
    n_jumps: usize,
    hold_range: (f64, f64),
    clock: Clock,
    rng: &mut R,
) -> Trajectory {
    let mut segments = Vec::with_capacity(n_jumps);
    let mut state = start;
    for _ in 0..n_jumps {
        let nbrs = g.neighbors(state);
        let target = nbrs[rng.random_range(0..nbrs.len())];
        let hold = rng.random_range(hold_range.0..hold_range.1);
        segments.push((target, hold));
        state = target;
    }
    let final_hold = rng.random_range(hold_range.0..hold_range.1);
    Trajectory::from_holds(start, segments, final_hold, clock)
        .expect("random walk respects trajectory invariants")
}
