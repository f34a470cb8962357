//! Per-replication counters and their cross-replication summary.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::sim::SlotRecord;

/// Leader-blocking bins with fewer observations are left out of summaries.
pub const LEADER_MIN_OBS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("cannot merge metrics from different scenarios ({0:#x} vs {1:#x})")]
    ConfigMismatch(u64, u64),
    #[error("no replications to summarize")]
    NoReplications,
    #[error("no arrivals were observed; blocking probability is undefined")]
    NoArrivals,
}

/// Blocked/observed counts for one bin of the true-leader blocking curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BlockCount {
    pub blocked: u64,
    pub observed: u64,
}

impl BlockCount {
    fn add(&mut self, other: BlockCount) {
        self.blocked += other.blocked;
        self.observed += other.observed;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAccumulator {
    config_digest: u64,
    pub slots_counted: u64,
    pub arrivals_total: u64,
    pub blocked_total: u64,
    pub departures: u64,
    /// Σ |U_n(t)| / |U_A(t)| over slots with at least one active user.
    pub slot_throughput_sum: f64,
    pub nonempty_slots: u64,
    pub targeted_total: u64,
    pub active_total: u64,
    /// Indexed by the true leader's rank.
    pub leader_by_rank: Vec<BlockCount>,
    /// Indexed by how many drives could still serve the true leader.
    pub leader_by_useful: Vec<BlockCount>,
}

fn bump(bins: &mut Vec<BlockCount>, at: usize, blocked: bool) {
    if bins.len() <= at {
        bins.resize(at + 1, BlockCount::default());
    }
    bins[at].observed += 1;
    bins[at].blocked += blocked as u64;
}

fn merge_bins(into: &mut Vec<BlockCount>, from: &[BlockCount]) {
    if into.len() < from.len() {
        into.resize(from.len(), BlockCount::default());
    }
    for (a, &b) in into.iter_mut().zip(from) {
        a.add(b);
    }
}

impl MetricsAccumulator {
    pub fn new(config_digest: u64) -> Self {
        MetricsAccumulator {
            config_digest,
            slots_counted: 0,
            arrivals_total: 0,
            blocked_total: 0,
            departures: 0,
            slot_throughput_sum: 0.0,
            nonempty_slots: 0,
            targeted_total: 0,
            active_total: 0,
            leader_by_rank: Vec::new(),
            leader_by_useful: Vec::new(),
        }
    }

    pub fn config_digest(&self) -> u64 {
        self.config_digest
    }

    pub fn record_slot(&mut self, rec: &SlotRecord) {
        self.slots_counted += 1;
        self.arrivals_total += rec.arrivals;
        self.blocked_total += rec.blocked;
        self.departures += rec.departures as u64;
        self.targeted_total += rec.targeted as u64;
        self.active_total += rec.active_before as u64;
        if rec.active_before > 0 {
            self.nonempty_slots += 1;
            self.slot_throughput_sum += rec.targeted as f64 / rec.active_before as f64;
        }
        if let Some(rank) = rec.leader_rank {
            bump(&mut self.leader_by_rank, rank, rec.leader_blocked);
            bump(
                &mut self.leader_by_useful,
                rec.leader_useful_drives,
                rec.leader_blocked,
            );
        }
    }

    pub fn merge(&self, other: &MetricsAccumulator) -> Result<MetricsAccumulator, MetricsError> {
        if self.config_digest != other.config_digest {
            return Err(MetricsError::ConfigMismatch(
                self.config_digest,
                other.config_digest,
            ));
        }
        let mut out = self.clone();
        out.slots_counted += other.slots_counted;
        out.arrivals_total += other.arrivals_total;
        out.blocked_total += other.blocked_total;
        out.departures += other.departures;
        out.slot_throughput_sum += other.slot_throughput_sum;
        out.nonempty_slots += other.nonempty_slots;
        out.targeted_total += other.targeted_total;
        out.active_total += other.active_total;
        merge_bins(&mut out.leader_by_rank, &other.leader_by_rank);
        merge_bins(&mut out.leader_by_useful, &other.leader_by_useful);
        Ok(out)
    }
}

/// A pooled estimate with its standard error across replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation of the per-replication values over √reps;
    /// zero when fewer than two replications contribute.
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub prob: f64,
    pub stderr: f64,
    pub n_obs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub replications: usize,
    pub ext_block_prob: Estimate,
    pub throughput_norm: Estimate,
    pub throughput_raw: Estimate,
    pub mean_active_users: f64,
    pub leader_block_by_rank: BTreeMap<usize, CurvePoint>,
    pub leader_block_by_useful: BTreeMap<usize, CurvePoint>,
}

pub fn stderr_of(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn estimate(
    accs: &[MetricsAccumulator],
    num: impl Fn(&MetricsAccumulator) -> f64,
    den: impl Fn(&MetricsAccumulator) -> f64,
) -> Estimate {
    let total_num: f64 = accs.iter().map(&num).sum();
    let total_den: f64 = accs.iter().map(&den).sum();
    let per_rep: Vec<f64> = accs.iter().filter_map(|a| ratio(num(a), den(a))).collect();
    Estimate {
        value: ratio(total_num, total_den).unwrap_or(0.0),
        stderr: stderr_of(&per_rep),
    }
}

fn curve(
    accs: &[MetricsAccumulator],
    bins: impl Fn(&MetricsAccumulator) -> &[BlockCount],
) -> BTreeMap<usize, CurvePoint> {
    let width = accs.iter().map(|a| bins(a).len()).max().unwrap_or(0);
    let mut out = BTreeMap::new();
    for k in 0..width {
        let at = |a: &MetricsAccumulator| bins(a).get(k).copied().unwrap_or_default();
        let mut total = BlockCount::default();
        accs.iter().for_each(|a| total.add(at(a)));
        if total.observed < LEADER_MIN_OBS {
            continue;
        }
        let per_rep: Vec<f64> = accs
            .iter()
            .filter_map(|a| {
                let c = at(a);
                ratio(c.blocked as f64, c.observed as f64)
            })
            .collect();
        out.insert(
            k,
            CurvePoint {
                prob: total.blocked as f64 / total.observed as f64,
                stderr: stderr_of(&per_rep),
                n_obs: total.observed,
            },
        );
    }
    out
}

/// Pools per-replication accumulators into the reported statistics.
pub fn summarize(accs: &[MetricsAccumulator]) -> Result<SummaryStats, MetricsError> {
    let first = accs.first().ok_or(MetricsError::NoReplications)?;
    if let Some(other) = accs.iter().find(|a| a.config_digest != first.config_digest) {
        return Err(MetricsError::ConfigMismatch(
            first.config_digest,
            other.config_digest,
        ));
    }
    if accs.iter().all(|a| a.arrivals_total == 0) {
        return Err(MetricsError::NoArrivals);
    }
    let slots: f64 = accs.iter().map(|a| a.slots_counted as f64).sum();
    let active: f64 = accs.iter().map(|a| a.active_total as f64).sum();
    Ok(SummaryStats {
        replications: accs.len(),
        ext_block_prob: estimate(
            accs,
            |a| a.blocked_total as f64,
            |a| a.arrivals_total as f64,
        ),
        throughput_norm: estimate(accs, |a| a.slot_throughput_sum, |a| a.nonempty_slots as f64),
        throughput_raw: estimate(
            accs,
            |a| a.targeted_total as f64,
            |a| a.slots_counted as f64,
        ),
        mean_active_users: ratio(active, slots).unwrap_or(0.0),
        leader_block_by_rank: curve(accs, |a| &a.leader_by_rank),
        leader_block_by_useful: curve(accs, |a| &a.leader_by_useful),
    })
}
