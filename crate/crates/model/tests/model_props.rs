//! Trajectory-level properties: reachability of every transition, crash
//! budget, absorption of the improved set, and forced flips.

use ela_model::{
    collect_records, collect_records_sequential, is_improved, is_reachable, model_round,
    parse_cells, run_model, run_trajectory_traced, Cell, InitialCondition, ModelConfig,
    ModelState, Sampling,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(n: usize, f: usize, p_f: f64, initial: InitialCondition) -> ModelConfig {
    ModelConfig {
        n,
        f,
        p_f,
        k: 6,
        sampling: Sampling::WithoutReplacement,
        initial,
        runs: 100,
        seed: 23,
    }
}

#[test]
fn every_transition_is_reachable_and_within_budget() {
    for (n, f, p_f) in [(50, 10, 0.1), (50, 25, 0.5), (30, 5, 0.0)] {
        let cfg = cfg(n, f, p_f, InitialCondition::RandomUniform01);
        for run in 0..50 {
            let mut improved_seen = false;
            run_trajectory_traced(&cfg, run, 6, |prev, next| {
                assert!(is_reachable(prev, next).unwrap());
                let bots = next.iter().filter(|&&c| c == Cell::Bot).count();
                assert!(bots <= f, "crash budget exceeded: {} > {}", bots, f);
                if improved_seen {
                    assert!(is_improved(next), "improvement is not absorbing");
                }
                improved_seen = improved_seen || is_improved(next);
            })
            .unwrap();
        }
    }
}

#[test]
fn forced_flip_when_draws_exceed_zero_count() {
    // p_f = 0, without replacement, n - f greater than the number of zeros:
    // a draw cannot avoid every 1, so all zeros flip in one round.
    let initial = parse_cells("0000001111").unwrap(); // 6 zeros, draws = 7
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = ModelState::new(initial.clone());
        let next = model_round(&state, 3, 0.0, Sampling::WithoutReplacement, &mut rng).unwrap();
        assert!(next.cells.iter().all(|&c| c == Cell::One));
    }
}

#[test]
fn parallel_matches_sequential_at_scale() {
    let cfg = ModelConfig {
        runs: 400,
        ..cfg(64, 16, 0.08, InitialCondition::WorstCase)
    };
    assert_eq!(
        collect_records(&cfg, 6).unwrap(),
        collect_records_sequential(&cfg, 6).unwrap()
    );
}

#[test]
fn run_model_success_counts_are_monotone_in_k() {
    let base = cfg(40, 10, 0.15, InitialCondition::WorstCase);
    let mut last = 0;
    for k in 1..=6 {
        let stats = run_model(&ModelConfig { k, ..base.clone() }).unwrap();
        assert!(stats.successes >= last, "k = {}", k);
        last = stats.successes;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn model_round_output_is_reachable(
        cells in proptest::collection::vec(0u8..3, 2..40),
        f_frac in 0u8..100,
        p_f in 0.0f64..=1.0,
        with in proptest::bool::ANY,
        seed in proptest::num::u64::ANY,
    ) {
        let cells: Vec<Cell> = cells
            .iter()
            .map(|&c| match c {
                0 => Cell::Zero,
                1 => Cell::One,
                _ => Cell::Bot,
            })
            .collect();
        let n = cells.len();
        let bots = cells.iter().filter(|&&c| c == Cell::Bot).count();
        prop_assume!(bots < n); // all-crashed states admit no valid budget
        let f = bots + (f_frac as usize * (n - bots - 1)) / 100;
        prop_assume!(f < n);
        let sampling = if with {
            Sampling::WithReplacement
        } else {
            Sampling::WithoutReplacement
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = ModelState::new(cells);
        let next = model_round(&state, f, p_f, sampling, &mut rng).unwrap();
        prop_assert!(is_reachable(&state.cells, &next.cells).unwrap());
        let bots_after = next.cells.iter().filter(|&&c| c == Cell::Bot).count();
        prop_assert!(bots_after <= f);
    }
}
