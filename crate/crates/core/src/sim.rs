//! Slotted-time simulation engine.
//!
//! Each slot runs, in order: Poisson arrivals and admission into the bounded
//! buffer, drive availability sampling, the scheduling decision, broadcast of
//! the read chunk to every eligible user, and removal of users whose rank
//! reached T.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitSet;
use crate::gf::{Field, KnowledgeMatrix};
use crate::layout::{DriveLayout, Generator, LayoutError, LayoutParams, StorageMode};
use crate::metrics::MetricsAccumulator;
use crate::sched::{self, Decision, Registry, RegistryError, SchedContext, Scheduler, TiePolicy};

pub type SimRng = ChaCha8Rng;

/// RNG substream purposes. Each (replication, purpose) pair gets its own
/// ChaCha stream so arrivals and drive blocking line up across storage
/// modes run with the same seed.
pub const STREAM_ARRIVALS: u64 = 0;
pub const STREAM_AVAILABILITY: u64 = 1;
pub const STREAM_TIES: u64 = 2;
const STREAMS_PER_REP: u64 = 3;

pub fn stream_rng(master_seed: u64, rep: u64, purpose: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(rep * STREAMS_PER_REP + purpose);
    rng
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("invariant violated at slot {slot}: {what}")]
    Invariant { slot: u64, what: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    UncodedInf,
    UncodedFin,
    CodedFin,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::UncodedInf, Mode::UncodedFin, Mode::CodedFin];

    pub fn storage(self) -> StorageMode {
        match self {
            Mode::CodedFin => StorageMode::Coded,
            _ => StorageMode::Uncoded,
        }
    }

    /// Drives can be blocked.
    pub fn finite_io(self) -> bool {
        self != Mode::UncodedInf
    }

    pub fn scheduler_name(self) -> &'static str {
        match self {
            Mode::UncodedInf => sched::UNCODED_INFINITE,
            Mode::UncodedFin => sched::UNCODED_FINITE,
            Mode::CodedFin => sched::CODED_FINITE,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::UncodedInf => "UNCODED_INF",
            Mode::UncodedFin => "UNCODED_FIN",
            Mode::CodedFin => "CODED_FIN",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown mode `{s}` (expected UNCODED_INF, UNCODED_FIN or CODED_FIN)")
            })
    }
}

/// How coded users track rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tracking {
    /// Count receptions when the layout is MDS by construction, otherwise
    /// run elimination.
    #[default]
    Auto,
    /// Always keep an echelon basis per user.
    Echelon,
}

fn default_horizon() -> u64 {
    100_000
}
fn default_replications() -> u64 {
    20
}
fn default_policy() -> String {
    sched::SPREAD.to_string()
}
fn default_true() -> bool {
    true
}

/// Every model parameter for one simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub s: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub pbd: f64,
    pub mode: Mode,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub generator: Generator,
    /// Coded chunk count H; W·T when absent.
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub coded_chunks: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Slots excluded from metrics; 20% of the horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default)]
    pub tracking: Tracking,
    /// Users admitted in a slot receive that slot's broadcast.
    #[serde(default = "default_true")]
    pub serve_on_arrival: bool,
}

impl ScenarioConfig {
    pub fn new(t: usize, w: usize, s: usize, n: usize, lambda: f64, pbd: f64, mode: Mode) -> Self {
        ScenarioConfig {
            t,
            w,
            s,
            n,
            lambda,
            pbd,
            mode,
            field: Field::Gf256,
            generator: Generator::Vandermonde,
            coded_chunks: None,
            horizon: default_horizon(),
            warmup: None,
            replications: default_replications(),
            master_seed: 0,
            policy: default_policy(),
            tracking: Tracking::Auto,
            serve_on_arrival: true,
        }
    }

    pub fn drives(&self) -> usize {
        self.w * self.s
    }

    pub fn warmup_slots(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 5)
    }

    pub fn layout_params(&self) -> LayoutParams {
        LayoutParams {
            t: self.t,
            w: self.w,
            s: self.s,
            mode: self.mode.storage(),
            field: self.field,
            generator: self.generator,
            coded_chunks: self.coded_chunks,
            seed: self.master_seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n == 0 {
            return bad("buffer size N must be at least 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda = {} must be finite and non-negative",
                self.lambda
            ));
        }
        if !(0.0..=1.0).contains(&self.pbd) {
            return bad(format!("pbd = {} must lie in [0, 1]", self.pbd));
        }
        if self.warmup_slots() > self.horizon {
            return bad(format!(
                "warmup {} exceeds horizon {}",
                self.warmup_slots(),
                self.horizon
            ));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.drives() > 64 {
            return bad(format!(
                "R = {} drives exceeds the supported 64",
                self.drives()
            ));
        }
        Registry::global().policy(&self.policy)?;
        Ok(())
    }

    /// Stable FNV-1a digest of the resolved configuration, used to refuse
    /// merging metrics from different scenarios.
    pub fn digest(&self) -> u64 {
        let json = serde_json::to_string(self).expect("config serializes");
        json.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// Busy drives for one slot; bit i set means drive i is blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DriveMask(pub u64);

impl DriveMask {
    pub fn all_free() -> Self {
        DriveMask(0)
    }

    pub fn all_busy(r: usize) -> Self {
        DriveMask(if r >= 64 { u64::MAX } else { (1u64 << r) - 1 })
    }

    pub fn from_busy(bits: &[bool]) -> Self {
        DriveMask(
            bits.iter()
                .enumerate()
                .fold(0, |m, (i, &b)| m | (b as u64) << i),
        )
    }

    #[inline]
    pub fn is_busy(self, drive: usize) -> bool {
        self.0 >> drive & 1 == 1
    }

    pub fn busy_count(self) -> u32 {
        self.0.count_ones()
    }
}

/// One active user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserState {
    pub id: u64,
    pub arrival_slot: u64,
    /// Uncoded: undecoded file chunks (T bits). Coded: unreceived coded
    /// chunks (H bits).
    pending: BitSet,
    rank: usize,
    /// Present only when rank is tracked by elimination.
    knowledge: Option<KnowledgeMatrix>,
}

impl UserState {
    pub fn fresh(id: u64, arrival_slot: u64, layout: &DriveLayout, echelon: bool) -> Self {
        UserState {
            id,
            arrival_slot,
            pending: BitSet::full(layout.chunk_count()),
            rank: 0,
            knowledge: echelon.then(|| KnowledgeMatrix::new(layout.field(), layout.t())),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pending(&self) -> &BitSet {
        &self.pending
    }

    pub fn knowledge(&self) -> Option<&KnowledgeMatrix> {
        self.knowledge.as_ref()
    }

    /// Whether broadcasting `chunk` would raise this user's rank.
    pub fn gains_from(&self, layout: &DriveLayout, chunk: usize) -> bool {
        if !self.pending.contains(chunk) || self.rank >= layout.t() {
            return false;
        }
        match &self.knowledge {
            Some(k) => k.is_innovative(layout.vector(chunk)),
            None => true,
        }
    }

    /// Marks `chunk` received; returns true when it was innovative.
    pub fn receive(&mut self, layout: &DriveLayout, chunk: usize) -> bool {
        let was_pending = self.pending.remove(chunk);
        let gained = match &mut self.knowledge {
            Some(k) => was_pending && k.push(layout.vector(chunk)),
            None => was_pending && self.rank < layout.t(),
        };
        if gained {
            self.rank += 1;
        }
        gained
    }

    /// Number of drives holding at least one chunk that would raise rank.
    pub fn useful_drives(&self, layout: &DriveLayout) -> usize {
        (0..layout.drive_count())
            .filter(|&d| match &self.knowledge {
                Some(k) => layout
                    .drive_mask(d)
                    .iter_common(&self.pending)
                    .any(|c| k.is_innovative(layout.vector(c))),
                None => layout.drive_mask(d).intersects(&self.pending),
            })
            .count()
    }

    /// Test helper: a user who has already received `chunks`.
    pub fn with_received(id: u64, layout: &DriveLayout, echelon: bool, chunks: &[usize]) -> Self {
        let mut u = UserState::fresh(id, 0, layout, echelon);
        for &c in chunks {
            u.receive(layout, c);
        }
        u
    }
}

/// Everything observable about one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub arrivals: u64,
    pub admitted: u64,
    pub blocked: u64,
    pub busy: DriveMask,
    pub served: Option<Decision>,
    pub targeted: usize,
    /// Users eligible for this slot's broadcast.
    pub active_before: usize,
    pub leader_rank: Option<usize>,
    pub leader_blocked: bool,
    pub leader_useful_drives: usize,
    pub departures: usize,
}

/// Mutable state of one replication.
pub struct SimState {
    layout: Arc<DriveLayout>,
    scheduler: Arc<dyn Scheduler>,
    tie: Arc<dyn TiePolicy>,
    n: usize,
    lambda: f64,
    pbd: f64,
    finite_io: bool,
    echelon: bool,
    serve_on_arrival: bool,
    slot: u64,
    next_id: u64,
    active: Vec<UserState>,
    drive_reads: Vec<u64>,
    /// Coded chunks broadcast at least once since the start.
    broadcast_history: BitSet,
    free_chunks: BitSet,
    arrivals_rng: SimRng,
    availability_rng: SimRng,
    ties_rng: SimRng,
    poisson: Option<Poisson<f64>>,
}

impl SimState {
    pub fn new(
        config: &ScenarioConfig,
        layout: Arc<DriveLayout>,
        rep: u64,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let registry = Registry::global();
        let echelon = config.mode.storage() == StorageMode::Coded
            && (config.tracking == Tracking::Echelon || !layout.mds_by_construction());
        let poisson = if config.lambda > 0.0 {
            Some(Poisson::new(config.lambda).map_err(|e| SimError::Config(e.to_string()))?)
        } else {
            None
        };
        let chunks = layout.chunk_count();
        let r = layout.drive_count();
        Ok(SimState {
            scheduler: registry.scheduler(config.mode.scheduler_name())?,
            tie: registry.policy(&config.policy)?,
            n: config.n,
            lambda: config.lambda,
            pbd: config.pbd,
            finite_io: config.mode.finite_io(),
            echelon,
            serve_on_arrival: config.serve_on_arrival,
            slot: 0,
            next_id: 0,
            active: Vec::with_capacity(config.n),
            drive_reads: vec![0; r],
            broadcast_history: BitSet::empty(chunks),
            free_chunks: BitSet::empty(chunks),
            arrivals_rng: stream_rng(config.master_seed, rep, STREAM_ARRIVALS),
            availability_rng: stream_rng(config.master_seed, rep, STREAM_AVAILABILITY),
            ties_rng: stream_rng(config.master_seed, rep, STREAM_TIES),
            poisson,
            layout,
        })
    }

    pub fn layout(&self) -> &DriveLayout {
        &self.layout
    }

    pub fn active(&self) -> &[UserState] {
        &self.active
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn uses_elimination(&self) -> bool {
        self.echelon
    }

    pub fn broadcast_history(&self) -> &BitSet {
        &self.broadcast_history
    }

    pub fn drive_reads(&self) -> &[u64] {
        &self.drive_reads
    }

    /// Places a user directly into the buffer (test and replay setups).
    pub fn insert_user(&mut self, user: UserState) {
        self.next_id = self.next_id.max(user.id + 1);
        self.active.push(user);
    }

    pub fn new_user(&mut self) -> UserState {
        let u = UserState::fresh(self.next_id, self.slot, &self.layout, self.echelon);
        self.next_id += 1;
        u
    }

    pub fn sample_arrivals(&mut self) -> u64 {
        sample_arrivals(self.poisson.as_ref(), &mut self.arrivals_rng)
    }

    /// Admits up to the free buffer space; returns (admitted, blocked).
    pub fn admit(&mut self, count: u64) -> (u64, u64) {
        let room = (self.n - self.active.len().min(self.n)) as u64;
        let admitted = count.min(room);
        for _ in 0..admitted {
            let u = self.new_user();
            self.active.push(u);
        }
        (admitted, count - admitted)
    }

    pub fn sample_availability(&mut self) -> DriveMask {
        sample_availability(
            self.layout.drive_count(),
            self.pbd,
            &mut self.availability_rng,
        )
    }

    fn eligible_len(&self) -> usize {
        if self.serve_on_arrival {
            self.active.len()
        } else {
            self.active
                .iter()
                .take_while(|u| u.arrival_slot < self.slot)
                .count()
        }
    }

    /// Runs the scheduler against the current buffer and `busy`.
    pub fn decide(&mut self, busy: DriveMask) -> Option<Decision> {
        self.free_chunks.clear();
        for d in 0..self.layout.drive_count() {
            if !busy.is_busy(d) {
                self.free_chunks.union_with(self.layout.drive_mask(d));
            }
        }
        let eligible = self.eligible_len();
        let ctx = SchedContext {
            layout: &self.layout,
            users: &self.active[..eligible],
            busy,
            free_chunks: &self.free_chunks,
            drive_reads: &self.drive_reads,
            tie: self.tie.as_ref(),
        };
        if ctx.users.is_empty() {
            return None;
        }
        self.scheduler.decide(&ctx, &mut self.ties_rng)
    }

    /// Delivers `decision` to every eligible user; returns the indices of
    /// users whose rank grew.
    pub fn broadcast_update(&mut self, decision: &Decision) -> Result<Vec<usize>, SimError> {
        let layout = Arc::clone(&self.layout);
        let holds = layout
            .drives_holding(decision.chunk)
            .map(|ds| ds.contains(&decision.drive))
            .unwrap_or(false);
        if !holds {
            return Err(SimError::Invariant {
                slot: self.slot,
                what: format!(
                    "drive {} does not hold chunk {}",
                    decision.drive, decision.chunk
                ),
            });
        }
        self.drive_reads[decision.drive] += 1;
        if layout.mode() == StorageMode::Coded {
            self.broadcast_history.insert(decision.chunk);
        }
        let eligible = self.eligible_len();
        let mut gained = Vec::new();
        for (i, u) in self.active[..eligible].iter_mut().enumerate() {
            if u.receive(&layout, decision.chunk) {
                gained.push(i);
            }
        }
        Ok(gained)
    }

    fn depart(&mut self) -> usize {
        let t = self.layout.t();
        let before = self.active.len();
        self.active.retain(|u| u.rank < t);
        before - self.active.len()
    }

    /// One full slot.
    pub fn run_slot(&mut self) -> Result<SlotRecord, SimError> {
        let arrivals = self.sample_arrivals();
        let (admitted, blocked) = self.admit(arrivals);
        let busy = if self.finite_io {
            self.sample_availability()
        } else {
            DriveMask::all_free()
        };
        self.run_slot_with(arrivals, admitted, blocked, busy)
    }

    /// Runs the scheduling half of a slot with arrivals already admitted and
    /// availability given.
    pub fn run_slot_with(
        &mut self,
        arrivals: u64,
        admitted: u64,
        blocked: u64,
        busy: DriveMask,
    ) -> Result<SlotRecord, SimError> {
        let eligible = self.eligible_len();
        let leader = sched::select_leader(&self.active[..eligible]);
        let leader_rank = leader.map(|i| self.active[i].rank);
        let leader_useful = leader.map_or(0, |i| self.active[i].useful_drives(&self.layout));

        let served = self.decide(busy);
        let mut targeted = 0;
        let mut leader_targeted = false;
        if let Some(d) = &served {
            if self.finite_io && busy.is_busy(d.drive) {
                return Err(SimError::Invariant {
                    slot: self.slot,
                    what: format!("scheduler read busy drive {}", d.drive),
                });
            }
            let gained = self.broadcast_update(d)?;
            targeted = gained.len();
            leader_targeted = leader.is_some_and(|l| gained.contains(&l));
        }
        let departures = self.depart();

        if self.active.len() > self.n {
            return Err(SimError::Invariant {
                slot: self.slot,
                what: format!("{} active users exceed N = {}", self.active.len(), self.n),
            });
        }
        let rec = SlotRecord {
            slot: self.slot,
            arrivals,
            admitted,
            blocked,
            busy,
            served,
            targeted,
            active_before: eligible,
            leader_rank,
            leader_blocked: leader.is_some() && !leader_targeted,
            leader_useful_drives: leader_useful,
            departures,
        };
        self.slot += 1;
        Ok(rec)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

pub fn sample_arrivals(poisson: Option<&Poisson<f64>>, rng: &mut SimRng) -> u64 {
    match poisson {
        Some(p) => p.sample(rng) as u64,
        None => 0,
    }
}

pub fn sample_availability(r: usize, pbd: f64, rng: &mut SimRng) -> DriveMask {
    let mut m = 0u64;
    for i in 0..r {
        if rng.random_bool(pbd) {
            m |= 1 << i;
        }
    }
    DriveMask(m)
}

pub fn build_layout(config: &ScenarioConfig) -> Result<Arc<DriveLayout>, SimError> {
    Ok(Arc::new(DriveLayout::build(&config.layout_params())?))
}

/// Runs one replication and returns its post-warmup metrics.
pub fn run_replication(config: &ScenarioConfig, rep: u64) -> Result<MetricsAccumulator, SimError> {
    run_replication_with(config, rep, |_, _| Ok(()))
}

/// Like [`run_replication`], calling `observe` after every slot (including
/// warmup) with the record and the post-slot state.
pub fn run_replication_with<F>(
    config: &ScenarioConfig,
    rep: u64,
    observe: F,
) -> Result<MetricsAccumulator, SimError>
where
    F: FnMut(&SlotRecord, &SimState) -> Result<(), SimError>,
{
    let layout = build_layout(config)?;
    run_replication_on(config, layout, rep, observe)
}

pub fn run_replication_on<F>(
    config: &ScenarioConfig,
    layout: Arc<DriveLayout>,
    rep: u64,
    mut observe: F,
) -> Result<MetricsAccumulator, SimError>
where
    F: FnMut(&SlotRecord, &SimState) -> Result<(), SimError>,
{
    let mut state = SimState::new(config, layout, rep)?;
    let mut acc = MetricsAccumulator::new(config.digest());
    let warmup = config.warmup_slots();
    for _ in 0..config.horizon {
        let rec = state.run_slot()?;
        if rec.slot >= warmup {
            acc.record_slot(&rec);
        }
        observe(&rec, &state)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode) -> ScenarioConfig {
        let mut c = ScenarioConfig::new(4, 2, 2, 3, 0.5, 0.3, mode);
        c.horizon = 200;
        c
    }

    fn state(c: &ScenarioConfig) -> SimState {
        SimState::new(c, build_layout(c).unwrap(), 0).unwrap()
    }

    #[test]
    fn zero_rate_never_arrives() {
        let mut c = cfg(Mode::UncodedFin);
        c.lambda = 0.0;
        let mut s = state(&c);
        for _ in 0..1000 {
            assert_eq!(s.sample_arrivals(), 0);
        }
    }

    #[test]
    fn admission_capacity() {
        let c = cfg(Mode::UncodedFin);
        let mut s = state(&c);
        assert_eq!(s.admit(1), (1, 0));
        assert_eq!(s.admit(1), (1, 0));
        assert_eq!(s.admit(2), (1, 1));
        assert_eq!(s.admit(3), (0, 3));
        assert_eq!(s.active().len(), 3);
        let ids: Vec<u64> = s.active().iter().map(|u| u.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert!(s
            .active()
            .iter()
            .all(|u| u.rank() == 0 && u.pending().count() == 4));
    }

    #[test]
    fn availability_extremes() {
        let mut rng = stream_rng(3, 0, STREAM_AVAILABILITY);
        for _ in 0..100 {
            assert_eq!(sample_availability(8, 0.0, &mut rng), DriveMask(0));
            assert_eq!(
                sample_availability(8, 1.0, &mut rng),
                DriveMask::all_busy(8)
            );
        }
    }

    #[test]
    fn idle_slot_without_users() {
        let mut c = cfg(Mode::UncodedFin);
        c.lambda = 0.0;
        let mut s = state(&c);
        let rec = s.run_slot().unwrap();
        assert_eq!(rec.targeted, 0);
        assert_eq!(rec.served, None);
        assert_eq!(rec.leader_rank, None);
        assert!(!rec.leader_blocked);
    }

    #[test]
    fn uncoded_broadcast_targets_only_missing_users() {
        let c = cfg(Mode::UncodedFin);
        let mut s = state(&c);
        let l = build_layout(&c).unwrap();
        s.insert_user(UserState::with_received(0, &l, false, &[1]));
        s.insert_user(UserState::with_received(1, &l, false, &[]));
        let d = Decision {
            drive: 0,
            chunk: 1,
            excluded_leaders: vec![],
        };
        assert_eq!(s.broadcast_update(&d).unwrap(), vec![1]);
        let bad = Decision {
            drive: 1,
            chunk: 1,
            excluded_leaders: vec![],
        };
        assert!(matches!(
            s.broadcast_update(&bad),
            Err(SimError::Invariant { .. })
        ));
    }

    #[test]
    fn last_chunk_departs_same_slot() {
        let mut c = cfg(Mode::UncodedFin);
        c.lambda = 0.0;
        let mut s = state(&c);
        let l = build_layout(&c).unwrap();
        s.insert_user(UserState::with_received(0, &l, false, &[0, 1, 2]));
        let rec = s.run_slot_with(0, 0, 0, DriveMask::all_free()).unwrap();
        assert_eq!(rec.targeted, 1);
        assert_eq!(rec.departures, 1);
        assert!(s.active().is_empty());
    }

    #[test]
    fn all_busy_blocks_leader() {
        let mut c = cfg(Mode::CodedFin);
        c.lambda = 0.0;
        let mut s = state(&c);
        let l = build_layout(&c).unwrap();
        s.insert_user(UserState::with_received(0, &l, false, &[]));
        let rec = s.run_slot_with(0, 0, 0, DriveMask::all_busy(4)).unwrap();
        assert!(rec.leader_blocked);
        assert_eq!(rec.targeted, 0);
        assert_eq!(rec.served, None);
    }

    #[test]
    fn deferred_service_skips_new_arrivals() {
        let mut c = cfg(Mode::UncodedInf);
        c.serve_on_arrival = false;
        c.lambda = 0.0;
        let mut s = state(&c);
        s.admit(1);
        let rec = s.run_slot_with(1, 1, 0, DriveMask::all_free()).unwrap();
        assert_eq!(rec.active_before, 0);
        assert_eq!(rec.targeted, 0);
        let rec = s.run_slot_with(0, 0, 0, DriveMask::all_free()).unwrap();
        assert_eq!(rec.targeted, 1);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Mode::UncodedFin);
        c.n = 0;
        assert!(matches!(c.validate(), Err(SimError::Config(_))));
        let mut c = cfg(Mode::UncodedFin);
        c.pbd = 1.5;
        assert!(c.validate().is_err());
        let mut c = cfg(Mode::UncodedFin);
        c.warmup = Some(c.horizon + 1);
        assert!(c.validate().is_err());
        let mut c = cfg(Mode::UncodedFin);
        c.policy = "nope".into();
        assert!(matches!(c.validate(), Err(SimError::Registry(_))));
        assert!(cfg(Mode::CodedFin).validate().is_ok());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>(), Ok(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
    }
}
