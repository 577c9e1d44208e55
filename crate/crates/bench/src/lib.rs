//! Shared fixtures for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrjp_core::dynamics::{RateFamily, TimeScale};
use vrjp_core::graph::Graph;
use vrjp_core::trajectory::{random_trajectory, Clock, Trajectory};

pub struct Fixture {
    pub graph: Graph,
    pub rates: RateFamily,
    pub scale: TimeScale,
}

pub fn reinforced_triangle() -> Fixture {
    let graph = Graph::triangle();
    let rates = RateFamily::vrjp_from_graph(&graph);
    let scale = TimeScale::vrjp(graph.vertex_count());
    Fixture {
        graph,
        rates,
        scale,
    }
}

pub fn sample_trajectory(fixture: &Fixture, n_jumps: usize, clock: Clock, seed: u64) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_trajectory(&fixture.graph, 0, n_jumps, (0.02, 0.8), clock, &mut rng)
}
