//! Property tests over randomly generated trajectories and models.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vrjp_core::density::{jump_time_jacobian, log_density_vrjp, log_density_y};
use vrjp_core::dynamics::{RateFamily, TimeScale};
use vrjp_core::graph::Graph;
use vrjp_core::trajectory::{random_trajectory, Clock, TimeChange};

fn graphs() -> Vec<Graph> {
    vec![
        Graph::triangle(),
        Graph::square(),
        Graph::with_unit_weights(5, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_times_partition_the_horizon(seed in any::<u64>(), n_jumps in 0usize..25, which in 0usize..3) {
        let g = &graphs()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = random_trajectory(g, 0, n_jumps, (0.01, 1.0), Clock::X, &mut rng);
        let total: f64 = tr.local_times(tr.horizon(), g.vertex_count()).unwrap().iter().sum();
        prop_assert!((total - tr.horizon()).abs() < 1e-12);

        // interior sampling partitions t as well
        let t = tr.horizon() * 0.37;
        let partial: f64 = tr.local_times(t, g.vertex_count()).unwrap().iter().sum();
        prop_assert!((partial - t).abs() < 1e-12);
    }

    #[test]
    fn shuffle_stays_in_the_equivalence_class(seed in any::<u64>(), n_jumps in 2usize..25, which in 0usize..3) {
        let g = &graphs()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = random_trajectory(g, 0, n_jumps, (0.01, 1.0), Clock::Y, &mut rng);
        let partner = tr.excursion_shuffle(&mut rng);
        prop_assert!(tr.is_equivalent(&partner, 1e-12).unwrap());
        prop_assert_eq!(tr.transition_counts(), partner.transition_counts());
        let a = tr.final_local_times_map();
        let b = partner.final_local_times_map();
        prop_assert_eq!(a.len(), b.len());
        for (v, l) in &a {
            prop_assert_eq!(l.to_bits(), b[v].to_bits());
        }
        partner.validate_on(g).unwrap();
    }

    #[test]
    fn time_change_round_trip_is_tight(seed in any::<u64>(), n_jumps in 0usize..20) {
        let g = Graph::square();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales: Vec<f64> = (0..4).map(|_| rng.random_range(0.3..3.0)).collect();
        let scale = TimeScale::scaled_vrjp(&scales).unwrap();
        let tr = random_trajectory(&g, 0, n_jumps, (0.01, 1.0), Clock::X, &mut rng);
        let back = tr
            .time_change(&scale, TimeChange::XToY)
            .unwrap()
            .time_change(&scale, TimeChange::YToX)
            .unwrap();
        prop_assert_eq!(back.skeleton(), tr.skeleton());
        for (a, b) in back.jump_times().iter().zip(tr.jump_times()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((back.horizon() - tr.horizon()).abs() < 1e-10);
    }

    #[test]
    fn discretize_agrees_with_pointwise_sampling(seed in any::<u64>(), n_jumps in 0usize..15, step in 0.05f64..1.5) {
        let g = Graph::triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr = random_trajectory(&g, 0, n_jumps, (0.05, 0.9), Clock::X, &mut rng);
        let states = tr.discretize(step).unwrap();
        prop_assert!(!states.is_empty());
        prop_assert_eq!(states[0], 0);
        for (k, &s) in states.iter().enumerate() {
            let t = (k as f64 * step).min(tr.horizon());
            prop_assert_eq!(s, tr.state_at(t).unwrap());
        }
        prop_assert!((states.len() - 1) as f64 * step <= tr.horizon() + 1e-9 * step.max(1.0));
    }

    #[test]
    fn closed_form_equals_general_density(seed in any::<u64>(), n_jumps in 0usize..20, which in 0usize..2) {
        let g = &graphs()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = common::random_weights(g, &mut rng);
        let g_weighted = Graph::new(g.vertex_count(), &weights).unwrap();
        let rates = RateFamily::vrjp_from_graph(&g_weighted);
        let scale = TimeScale::vrjp(g.vertex_count());
        let tr = random_trajectory(&g_weighted, 0, n_jumps, (0.02, 1.0), Clock::Y, &mut rng);
        let closed = log_density_vrjp(&tr, &g_weighted, &g_weighted.ordered_weights()).unwrap();
        let general = log_density_y(&tr, &g_weighted, &rates, &scale).unwrap().log_density();
        prop_assert!((closed - general).abs() < 1e-10, "gap {}", (closed - general).abs());
    }

    #[test]
    fn clock_change_of_variables(seed in any::<u64>(), n_jumps in 0usize..15) {
        let g = Graph::triangle();
        let rates = RateFamily::vrjp_from_graph(&g);
        let scale = TimeScale::vrjp(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tr_x = random_trajectory(&g, 0, n_jumps, (0.02, 0.8), Clock::X, &mut rng);
        let tr_y = tr_x.time_change(&scale, TimeChange::XToY).unwrap();
        let lhs = vrjp_core::density::log_density_x(&tr_x, &g, &rates).unwrap();
        let rhs = log_density_y(&tr_y, &g, &rates, &scale).unwrap().log_density()
            + jump_time_jacobian(&tr_x, &scale).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "gap {}", (lhs - rhs).abs());
    }
}
