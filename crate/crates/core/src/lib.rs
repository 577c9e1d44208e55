//! Exact simulation and exact trajectory densities for nearest-neighbor jump
//! processes whose jump rates depend on the local time of the target vertex.
//!
//! The crate provides:
//!
//! - [`graph`]: finite undirected graphs with the structural validation the
//!   test bench needs (every edge on a cycle, i.e. no bridges);
//! - [`dynamics`]: parametric jump-rate families `f_{i,j}` and per-vertex
//!   time scales `h_i` together with the calculus objects derived from them
//!   (derivative, inverse, clock speed `h'∘h⁻¹` and its reciprocal
//!   primitive);
//! - [`trajectory`]: piecewise-constant trajectories, local times, transition
//!   counts, the equivalence relation (same start, counts, and final local
//!   times), equivalence-preserving shuffles, time-change transport between
//!   the raw and the reparametrized clock, and grid discretization;
//! - [`simulator`]: exact simulation (constant rates between jumps make the
//!   holding times exponential) and seeded, order-independent Monte Carlo
//!   event estimation;
//! - [`density`]: log-domain trajectory densities before and after time
//!   change, the closed form for linearly reinforced walks, and the split of
//!   the exponential term into visited / never-visited neighbor parts;
//! - [`characterization`]: the verification bench — exchangeability reports,
//!   discretized-string Monte Carlo checks, rate/scale proportionality and
//!   reversibility estimates, and canonicalization of linear rate families.
//!
//! All randomized entry points take explicit 64-bit seeds and derive
//! per-trial counter-based streams, so batch results are reproducible
//! regardless of parallel scheduling.

use thiserror::Error;

pub mod characterization;
pub mod density;
pub mod dynamics;
pub mod graph;
pub mod model;
pub mod numeric;
pub mod simulator;
pub mod trajectory;

pub use density::{log_density_vrjp, log_density_x, log_density_y, DensityBreakdown};
pub use dynamics::{RateFamily, TimeScale, VertexScale};
pub use graph::Graph;
pub use simulator::{McEstimate, SimConfig};
pub use trajectory::{Clock, Trajectory, TransitionCounts};

/// Vertex identifier; vertices are dense integers `0..n`.
pub type Vertex = u32;

/// Errors for graph construction, dynamics evaluation, trajectory
/// manipulation, simulation, and the verification bench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    VertexOutOfRange { vertex: Vertex, count: usize },

    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(Vertex, Vertex),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("clock mismatch: expected {expected:?}, got {got:?}")]
    ClockMismatch {
        expected: trajectory::Clock,
        got: trajectory::Clock,
    },

    #[error("local time must be nonnegative, got {0}")]
    NegativeLocalTime(f64),

    #[error("rate invariant breached: f_{{{i},{j}}}({x}) = {value} is not positive")]
    NonPositiveRate { i: Vertex, j: Vertex, x: f64, value: f64 },

    #[error("invalid rate family: {0}")]
    InvalidRates(String),

    #[error("invalid time scale: {0}")]
    InvalidScale(String),

    #[error("numeric routine failed to converge: {0}")]
    NonConvergent(String),

    #[error("time change produced a non-monotone clock (corrupted time scale)")]
    NonMonotoneTimeChange,

    #[error("jump cap of {max_jumps} exceeded before the horizon")]
    MaxJumpsExceeded { max_jumps: u64 },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("trials must be positive")]
    ZeroTrials,

    #[error("strings are not equivalent: {0}")]
    NotEquivalentStrings(String),

    #[error("rate family is not reducible to canonical form: {0}")]
    NotReducible(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
