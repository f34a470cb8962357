use std::sync::Arc;

use ncsched_core::sched::brute_force_max_targeted;
use ncsched_core::sim::{build_layout, DriveMask};
use ncsched_core::{Mode, ScenarioConfig, SimState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHAPES: [(usize, usize, usize); 5] = [(4, 2, 2), (4, 1, 4), (4, 4, 1), (2, 2, 2), (3, 1, 3)];

/// Drives a random short history and returns the state plus a fresh busy mask.
fn random_state(mode: Mode, rng: &mut ChaCha8Rng) -> (SimState, DriveMask) {
    let (t, w, s) = SHAPES[rng.random_range(0..SHAPES.len())];
    let n = rng.random_range(1..=4);
    let lambda = rng.random_range(0.1..1.5);
    let pbd = rng.random_range(0.0..0.9);
    let mut cfg = ScenarioConfig::new(t, w, s, n, lambda, pbd, mode);
    cfg.master_seed = rng.random();
    cfg.policy = ["spread", "random", "first"][rng.random_range(0..3)].into();
    cfg.horizon = 1;
    cfg.warmup = Some(0);
    let layout = build_layout(&cfg).unwrap();
    let mut st = SimState::new(&cfg, Arc::clone(&layout), 0).unwrap();
    for _ in 0..rng.random_range(0..40) {
        st.run_slot().unwrap();
    }
    let arrivals = st.sample_arrivals();
    st.admit(arrivals);
    let busy = st.sample_availability();
    (st, busy)
}

fn check_mode(mode: Mode, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cases, mut mismatches) = (0, 0);
    while cases < 1000 {
        let (mut st, busy) = random_state(mode, &mut rng);
        if st.active().is_empty() {
            continue;
        }
        cases += 1;
        let layout = Arc::new(st.layout().clone());
        let users = st.active().to_vec();
        let best = brute_force_max_targeted(&layout, &users, busy).unwrap();
        let got = st.decide(busy).map_or(0, |d| {
            users
                .iter()
                .filter(|u| u.gains_from(&layout, d.chunk))
                .count()
        });
        if got != best {
            mismatches += 1;
        }
    }
    (cases, mismatches)
}

#[test]
fn uncoded_finite_matches_exhaustive_optimum() {
    let (cases, bad) = check_mode(Mode::UncodedFin, 11);
    assert_eq!(bad, 0, "{bad} of {cases} states below the optimum");
}

#[test]
fn coded_finite_matches_exhaustive_optimum() {
    let (cases, bad) = check_mode(Mode::CodedFin, 12);
    assert_eq!(bad, 0, "{bad} of {cases} states below the optimum");
}
