use ncsched_core::metrics::{summarize, MetricsAccumulator};
use ncsched_core::sim::{
    run_replication_with, sample_arrivals, sample_availability, stream_rng, STREAM_ARRIVALS,
    STREAM_AVAILABILITY,
};
use ncsched_core::{run_replication, Mode, ScenarioConfig};
use rand::Rng;
use rand_distr::Poisson;

#[test]
fn poisson_arrival_counts() {
    let p = Poisson::new(0.9).unwrap();
    let mut rng = stream_rng(42, 0, STREAM_ARRIVALS);
    let n = 1_000_000;
    let (mut sum, mut zeros) = (0u64, 0u64);
    for _ in 0..n {
        let k = sample_arrivals(Some(&p), &mut rng);
        sum += k;
        zeros += (k == 0) as u64;
    }
    let mean = sum as f64 / n as f64;
    let p0 = zeros as f64 / n as f64;
    assert!((mean - 0.9).abs() < 0.01, "mean {mean}");
    assert!((p0 - (-0.9f64).exp()).abs() < 0.005, "P(0) {p0}");
    assert_eq!(sample_arrivals(None, &mut rng), 0);
}

#[test]
fn drive_blocking_rate() {
    let mut rng = stream_rng(42, 0, STREAM_AVAILABILITY);
    let busy: u64 = (0..100_000)
        .map(|_| sample_availability(8, 0.5, &mut rng).busy_count() as u64)
        .sum();
    let rate = busy as f64 / 800_000.0;
    assert!((rate - 0.5).abs() < 0.01, "{rate}");
    assert_eq!(sample_availability(8, 0.0, &mut rng).busy_count(), 0);
    assert_eq!(sample_availability(8, 1.0, &mut rng).busy_count(), 8);
}

#[test]
fn streams_are_distinct_and_reproducible() {
    let draw = |seed, rep, purpose| {
        let mut r = stream_rng(seed, rep, purpose);
        (0..8).map(|_| r.random::<u64>()).collect::<Vec<_>>()
    };
    assert_eq!(draw(1, 0, 0), draw(1, 0, 0));
    assert_ne!(draw(1, 0, 0), draw(1, 0, 1));
    assert_ne!(draw(1, 0, 0), draw(1, 1, 0));
    assert_ne!(draw(1, 0, 0), draw(2, 0, 0));
}

#[test]
fn modes_share_arrival_and_availability_streams() {
    let trace = |mode| {
        let mut c = ScenarioConfig::new(4, 2, 2, 3, 0.7, 0.4, mode);
        c.horizon = 500;
        let mut v = Vec::new();
        run_replication_with(&c, 1, |rec, _| {
            v.push((rec.arrivals, rec.busy));
            Ok(())
        })
        .unwrap();
        v
    };
    assert_eq!(trace(Mode::UncodedFin), trace(Mode::CodedFin));
}

fn reps(n: u64) -> (ScenarioConfig, Vec<MetricsAccumulator>) {
    let mut c = ScenarioConfig::new(4, 2, 2, 4, 0.8, 0.3, Mode::CodedFin);
    c.horizon = 2000;
    let accs = (0..n).map(|r| run_replication(&c, r).unwrap()).collect();
    (c, accs)
}

#[test]
fn merge_is_associative_and_commutative() {
    let (_, a) = reps(3);
    let left = a[0].merge(&a[1]).unwrap().merge(&a[2]).unwrap();
    let right = a[0].merge(&a[1].merge(&a[2]).unwrap()).unwrap();
    let swapped = a[2].merge(&a[0]).unwrap().merge(&a[1]).unwrap();
    // integer counters are exact; the throughput sum is compared with tolerance
    for m in [&right, &swapped] {
        assert_eq!(m.arrivals_total, left.arrivals_total);
        assert_eq!(m.blocked_total, left.blocked_total);
        assert_eq!(m.targeted_total, left.targeted_total);
        assert_eq!(m.leader_by_rank, left.leader_by_rank);
        assert_eq!(m.leader_by_useful, left.leader_by_useful);
        assert!((m.slot_throughput_sum - left.slot_throughput_sum).abs() < 1e-9);
    }
}

#[test]
fn merged_counters_match_one_long_pass() {
    let (c, accs) = reps(20);
    let merged = accs[1..]
        .iter()
        .fold(accs[0].clone(), |m, a| m.merge(a).unwrap());

    let mut concatenated = MetricsAccumulator::new(c.digest());
    for r in 0..20 {
        run_replication_with(&c, r, |rec, _| {
            if rec.slot >= c.warmup_slots() {
                concatenated.record_slot(rec);
            }
            Ok(())
        })
        .unwrap();
    }
    assert_eq!(merged.blocked_total, concatenated.blocked_total);
    assert_eq!(merged.arrivals_total, concatenated.arrivals_total);
    assert_eq!(merged.leader_by_rank, concatenated.leader_by_rank);
    assert_eq!(merged.nonempty_slots, concatenated.nonempty_slots);

    let pooled = summarize(&accs).unwrap();
    let single = summarize(&[merged]).unwrap();
    assert_eq!(pooled.ext_block_prob.value, single.ext_block_prob.value);
    assert!((pooled.throughput_norm.value - single.throughput_norm.value).abs() < 1e-12);
    assert!(pooled.ext_block_prob.stderr > 0.0);
    assert_eq!(single.ext_block_prob.stderr, 0.0);
    for p in pooled.leader_block_by_rank.values() {
        assert!((0.0..=1.0).contains(&p.prob));
    }
    assert!((0.0..=1.0).contains(&pooled.throughput_norm.value));
}

#[test]
fn mismatched_scenarios_refuse_to_merge() {
    let (_, a) = reps(1);
    let mut other = ScenarioConfig::new(4, 2, 2, 5, 0.8, 0.3, Mode::CodedFin);
    other.horizon = 2000;
    let b = run_replication(&other, 0).unwrap();
    assert!(a[0].merge(&b).is_err());
    assert!(summarize(&[a[0].clone(), b]).is_err());
}
