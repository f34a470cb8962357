//! Quick invariant checks runnable from the command line.

use std::sync::Arc;

use ncsched_core::analytics::erlang_blocking;
use ncsched_core::gf::Field;
use ncsched_core::layout::{Generator, LayoutParams};
use ncsched_core::sched::brute_force_max_targeted;
use ncsched_core::sim::{build_layout, DriveMask};
use ncsched_core::{run_replication, summarize, DriveLayout, Mode, ScenarioConfig, SimState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::document::ScenarioDocument;
use crate::output::{csv_bytes, result_row, RESULT_COLUMNS};
use crate::runner::run_cells;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Small shapes with T ≤ 4 and R ≤ 4.
const SMALL_SHAPES: [(usize, usize, usize); 5] =
    [(4, 2, 2), (4, 1, 4), (4, 4, 1), (2, 2, 2), (3, 1, 3)];

/// A state reached by a random short history of a random small system,
/// together with a freshly drawn availability mask.
pub fn random_small_state(mode: Mode, rng: &mut ChaCha8Rng) -> (SimState, DriveMask) {
    let (t, w, s) = SMALL_SHAPES[rng.random_range(0..SMALL_SHAPES.len())];
    let mut cfg = ScenarioConfig::new(
        t,
        w,
        s,
        rng.random_range(1..=4),
        rng.random_range(0.1..1.5),
        rng.random_range(0.0..0.9),
        mode,
    );
    cfg.master_seed = rng.random();
    cfg.policy = ["spread", "random", "first"][rng.random_range(0..3)].into();
    cfg.horizon = 1;
    cfg.warmup = Some(0);
    let layout = build_layout(&cfg).expect("small shapes are valid");
    let mut st = SimState::new(&cfg, layout, 0).expect("small config is valid");
    for _ in 0..rng.random_range(0..40) {
        st.run_slot().expect("simulation invariants hold");
    }
    let arrivals = st.sample_arrivals();
    st.admit(arrivals);
    let busy = st.sample_availability();
    (st, busy)
}

/// Compares scheduled targeted counts with the exhaustive optimum on `cases`
/// non-empty random states; returns the number of mismatches.
pub fn oracle_mismatches(mode: Mode, cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    let mut bad = 0;
    while done < cases {
        let (mut st, busy) = random_small_state(mode, &mut rng);
        if st.active().is_empty() {
            continue;
        }
        done += 1;
        let layout = Arc::new(st.layout().clone());
        let users = st.active().to_vec();
        let best = brute_force_max_targeted(&layout, &users, busy).expect("small state");
        let got = st.decide(busy).map_or(0, |d| {
            users
                .iter()
                .filter(|u| u.gains_from(&layout, d.chunk))
                .count()
        });
        bad += (got != best) as usize;
    }
    bad
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

fn field_check() -> Result<String, String> {
    for f in [Field::Gf256, Field::Prime(257)] {
        for a in 1..f.order() {
            let inv = f.inv(a).map_err(|e| e.to_string())?;
            if f.mul(a, inv) != 1 {
                return Err(format!("{f}: {a}·{inv} ≠ 1"));
            }
        }
    }
    Ok("all nonzero inverses in GF(256), GF(257)".into())
}

fn mds_check() -> Result<String, String> {
    for f in [Field::Gf256, Field::Prime(257)] {
        let mut p = LayoutParams::coded(4, 2, 2, f, Generator::Vandermonde);
        p.coded_chunks = Some(8);
        let l = DriveLayout::build(&p).map_err(|e| e.to_string())?;
        if !l.verify_mds().map_err(|e| e.to_string())? {
            return Err(format!("Vandermonde over {f} not MDS"));
        }
    }
    Ok("70/70 subsets full rank, T=4 H=8".into())
}

fn fault_check() -> Result<String, String> {
    let mut p = LayoutParams::coded(4, 2, 2, Field::Gf256, Generator::Vandermonde);
    p.coded_chunks = Some(8);
    let l = DriveLayout::build_coded_with_points(&p, &[1, 2, 3, 4, 5, 6, 7, 3])
        .map_err(|e| e.to_string())?;
    match l.verify_mds() {
        Ok(false) => Ok("duplicate point detected".into()),
        other => Err(format!("duplicate point not detected: {other:?}")),
    }
}

fn oracle_check() -> Result<String, String> {
    let bad =
        oracle_mismatches(Mode::UncodedFin, 100, 1) + oracle_mismatches(Mode::CodedFin, 100, 2);
    if bad == 0 {
        Ok("200 states, 0 mismatches".into())
    } else {
        Err(format!("{bad} of 200 states below the optimum"))
    }
}

fn erlang_check() -> Result<String, String> {
    let mut cfg = ScenarioConfig::new(10, 1, 1, 8, 0.3, 0.0, Mode::UncodedInf);
    cfg.horizon = 20_000;
    cfg.replications = 4;
    let accs: Vec<_> = (0..4)
        .map(|r| run_replication(&cfg, r))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let s = summarize(&accs).map_err(|e| e.to_string())?;
    let want = erlang_blocking(0.3, 10, 8).map_err(|e| e.to_string())?;
    let got = s.ext_block_prob;
    let tol = (3.0 * got.stderr).max(0.005);
    let msg = format!(
        "N=8: simulated {:.5} vs {:.5} (tolerance {:.4})",
        got.value, want, tol
    );
    if (got.value - want).abs() <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism_digest() -> Result<u64, String> {
    let doc = ScenarioDocument::from_value(json!({
        "id": "selftest",
        "T": 4, "W": 2, "s": 2, "N": 4,
        "lambda": 0.8, "pbd": 0.4,
        "horizon": 2000, "replications": 3, "master_seed": 7,
        "compare_modes": ["UNCODED_FIN", "CODED_FIN"],
    }))
    .map_err(|e| e.to_string())?;
    let cells = run_cells(&doc, None).map_err(|e| e.to_string())?;
    let bytes = csv_bytes(
        &RESULT_COLUMNS,
        cells.iter().map(|c| result_row(&doc.id, c).record()),
    );
    Ok(bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    }))
}

fn determinism_check() -> Result<String, String> {
    let (a, b) = (determinism_digest()?, determinism_digest()?);
    if a == b {
        Ok(format!("digest {a:016x} twice"))
    } else {
        Err(format!("{a:016x} vs {b:016x}"))
    }
}

pub fn run_selftest() -> Vec<Check> {
    vec![
        check("field inverses", field_check),
        check("vandermonde mds", mds_check),
        check("injected duplicate point", fault_check),
        check("oracle maximality", oracle_check),
        check("erlang spot check", erlang_check),
        check("determinism", determinism_check),
    ]
}
