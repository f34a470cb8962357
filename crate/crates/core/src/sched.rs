//! Leader-based scheduling policies.
//!
//! Every policy implements [`Scheduler`] and is looked up by name in a
//! [`Registry`]; the within-leader drive choice is a separate [`TiePolicy`]
//! registered the same way. All decisions are pure functions of the slot
//! snapshot in [`SchedContext`] plus the tie-break RNG stream.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use thiserror::Error;

use crate::bits::BitSet;
use crate::gf::KnowledgeMatrix;
use crate::layout::{DriveLayout, StorageMode};
use crate::sim::{DriveMask, SimRng, UserState};

pub const UNCODED_INFINITE: &str = "uncoded-infinite";
pub const UNCODED_FINITE: &str = "uncoded-finite";
pub const CODED_FINITE: &str = "coded-finite";

pub const SPREAD: &str = "spread";
pub const RANDOM: &str = "random";
pub const FIRST: &str = "first";

/// One read-and-broadcast for the slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub drive: usize,
    pub chunk: usize,
    /// Users dropped as temporary leaders before a servable one was found.
    pub excluded_leaders: Vec<u64>,
}

/// Slot snapshot handed to a scheduler.
pub struct SchedContext<'a> {
    pub layout: &'a DriveLayout,
    /// Users eligible this slot, in arrival order.
    pub users: &'a [UserState],
    pub busy: DriveMask,
    /// Union of the contents of every free drive.
    pub free_chunks: &'a BitSet,
    /// Cumulative reads per drive in this replication.
    pub drive_reads: &'a [u64],
    pub tie: &'a dyn TiePolicy,
}

impl SchedContext<'_> {
    fn free(&self, drive: usize) -> bool {
        !self.busy.is_busy(drive)
    }
}

pub trait Scheduler: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn decide(&self, ctx: &SchedContext<'_>, rng: &mut SimRng) -> Option<Decision>;
}

/// A drive that can serve the current (temporary) leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriveOption {
    pub drive: usize,
    /// Chunks on this drive that would help the leader.
    pub count: usize,
    pub reads: u64,
}

/// Index into the option list plus which of that drive's useful chunks
/// (in ascending id order) to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pick {
    pub option: usize,
    pub offset: usize,
}

pub trait TiePolicy: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    /// `options` is non-empty and sorted by drive id.
    fn choose(&self, options: &[DriveOption], storage: StorageMode, rng: &mut SimRng) -> Pick;
}

/// Coded: the drive with the most chunks still useful to the leader.
/// Uncoded: the least-read drive. Ties go to the lowest drive id.
#[derive(Debug, Default)]
pub struct Spread;

impl TiePolicy for Spread {
    fn name(&self) -> &'static str {
        SPREAD
    }

    fn choose(&self, options: &[DriveOption], storage: StorageMode, _rng: &mut SimRng) -> Pick {
        let mut best = 0;
        for (i, o) in options.iter().enumerate().skip(1) {
            let b = &options[best];
            let better = match storage {
                StorageMode::Coded => o.count > b.count,
                StorageMode::Uncoded => o.reads < b.reads,
            };
            if better {
                best = i;
            }
        }
        Pick {
            option: best,
            offset: 0,
        }
    }
}

/// Uniform over every (drive, chunk) candidate.
#[derive(Debug, Default)]
pub struct Uniform;

impl TiePolicy for Uniform {
    fn name(&self) -> &'static str {
        RANDOM
    }

    fn choose(&self, options: &[DriveOption], _storage: StorageMode, rng: &mut SimRng) -> Pick {
        let total: usize = options.iter().map(|o| o.count).sum();
        let mut k = rng.random_range(0..total);
        for (i, o) in options.iter().enumerate() {
            if k < o.count {
                return Pick {
                    option: i,
                    offset: k,
                };
            }
            k -= o.count;
        }
        unreachable!("index within total candidate count")
    }
}

/// Lowest (drive, chunk).
#[derive(Debug, Default)]
pub struct Lowest;

impl TiePolicy for Lowest {
    fn name(&self) -> &'static str {
        FIRST
    }

    fn choose(&self, _options: &[DriveOption], _storage: StorageMode, _rng: &mut SimRng) -> Pick {
        Pick {
            option: 0,
            offset: 0,
        }
    }
}

/// Picks among explicit (drive, chunk) candidates with `policy`.
/// `drive_reads` is indexed by drive id.
pub fn choose_among_candidates(
    candidates: &[(usize, usize)],
    storage: StorageMode,
    policy: &dyn TiePolicy,
    drive_reads: &[u64],
    rng: &mut SimRng,
) -> (usize, usize) {
    assert!(
        !candidates.is_empty(),
        "choose_among_candidates needs at least one candidate"
    );
    let mut by_drive: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(d, c) in candidates {
        by_drive.entry(d).or_default().push(c);
    }
    let groups: Vec<(usize, Vec<usize>)> = by_drive
        .into_iter()
        .map(|(d, mut cs)| {
            cs.sort_unstable();
            cs.dedup();
            (d, cs)
        })
        .collect();
    let options: Vec<DriveOption> = groups
        .iter()
        .map(|(d, cs)| DriveOption {
            drive: *d,
            count: cs.len(),
            reads: drive_reads.get(*d).copied().unwrap_or(0),
        })
        .collect();
    let pick = policy.choose(&options, storage, rng);
    let (d, cs) = &groups[pick.option];
    (*d, cs[pick.offset])
}

/// Index of the user with maximum rank, earliest arrival on ties.
pub fn select_leader(users: &[UserState]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, u) in users.iter().enumerate() {
        match best {
            Some(b)
                if (users[b].rank(), std::cmp::Reverse(users[b].id))
                    >= (u.rank(), std::cmp::Reverse(u.id)) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// User indices ordered as successive temporary leaders: rank descending,
/// then earliest arrival.
pub fn leader_order(users: &[UserState]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..users.len()).collect();
    let sorted = users
        .windows(2)
        .all(|w| (w[0].rank(), w[1].id) >= (w[1].rank(), w[0].id));
    if !sorted {
        idx.sort_by(|&a, &b| {
            users[b]
                .rank()
                .cmp(&users[a].rank())
                .then(users[a].id.cmp(&users[b].id))
        });
    }
    idx
}

/// Drives that can help `user` right now, with their useful-chunk counts.
fn drive_options(ctx: &SchedContext<'_>, user: &UserState) -> Vec<DriveOption> {
    let layout = ctx.layout;
    let mut out = Vec::new();
    for d in 0..layout.drive_count() {
        if !ctx.free(d) {
            continue;
        }
        let count = match user.knowledge() {
            Some(k) => layout
                .drive_mask(d)
                .iter_common(user.pending())
                .filter(|&c| k.is_innovative(layout.vector(c)))
                .count(),
            None => layout.drive_mask(d).intersection_count(user.pending()),
        };
        if count > 0 {
            out.push(DriveOption {
                drive: d,
                count,
                reads: ctx.drive_reads[d],
            });
        }
    }
    out
}

fn nth_useful_chunk(layout: &DriveLayout, user: &UserState, drive: usize, n: usize) -> usize {
    let mask = layout.drive_mask(drive);
    match user.knowledge() {
        Some(k) => mask
            .iter_common(user.pending())
            .filter(|&c| k.is_innovative(layout.vector(c)))
            .nth(n),
        None => mask.iter_common(user.pending()).nth(n),
    }
    .expect("offset within useful-chunk count")
}

/// Leader-based scheduling for uncoded storage when every drive is always
/// available: serve the leader's earliest undecoded chunk.
#[derive(Debug, Default)]
pub struct UncodedInfinite;

impl Scheduler for UncodedInfinite {
    fn name(&self) -> &'static str {
        UNCODED_INFINITE
    }

    fn decide(&self, ctx: &SchedContext<'_>, rng: &mut SimRng) -> Option<Decision> {
        let leader = &ctx.users[select_leader(ctx.users)?];
        let chunk = leader.pending().iter().next()?;
        let holders = ctx.layout.drives_holding(chunk).ok()?;
        let options: Vec<DriveOption> = holders
            .iter()
            .map(|&d| DriveOption {
                drive: d,
                count: 1,
                reads: ctx.drive_reads[d],
            })
            .collect();
        let pick = ctx.tie.choose(&options, StorageMode::Uncoded, rng);
        Some(Decision {
            drive: options[pick.option].drive,
            chunk,
            excluded_leaders: Vec::new(),
        })
    }
}

/// Uncoded storage with drive blocking: walk temporary leaders by rank and
/// serve the first one that has an undecoded chunk on a free drive, taking
/// its earliest such chunk.
#[derive(Debug, Default)]
pub struct UncodedFinite;

impl Scheduler for UncodedFinite {
    fn name(&self) -> &'static str {
        UNCODED_FINITE
    }

    fn decide(&self, ctx: &SchedContext<'_>, rng: &mut SimRng) -> Option<Decision> {
        let mut excluded = Vec::new();
        for i in leader_order(ctx.users) {
            let user = &ctx.users[i];
            let Some(chunk) = user.pending().first_common(ctx.free_chunks) else {
                excluded.push(user.id);
                continue;
            };
            let options: Vec<DriveOption> = ctx
                .layout
                .drives_holding(chunk)
                .ok()?
                .iter()
                .filter(|&&d| ctx.free(d))
                .map(|&d| DriveOption {
                    drive: d,
                    count: 1,
                    reads: ctx.drive_reads[d],
                })
                .collect();
            let pick = ctx.tie.choose(&options, StorageMode::Uncoded, rng);
            return Some(Decision {
                drive: options[pick.option].drive,
                chunk,
                excluded_leaders: excluded,
            });
        }
        None
    }
}

/// Coded storage with drive blocking: same temporary-leader walk, but the
/// candidates are the leader's unreceived (innovative) coded chunks on free
/// drives.
#[derive(Debug, Default)]
pub struct CodedFinite;

impl Scheduler for CodedFinite {
    fn name(&self) -> &'static str {
        CODED_FINITE
    }

    fn decide(&self, ctx: &SchedContext<'_>, rng: &mut SimRng) -> Option<Decision> {
        let mut excluded = Vec::new();
        for i in leader_order(ctx.users) {
            let user = &ctx.users[i];
            if !user.pending().intersects(ctx.free_chunks) {
                excluded.push(user.id);
                continue;
            }
            let options = drive_options(ctx, user);
            if options.is_empty() {
                excluded.push(user.id);
                continue;
            }
            let pick = ctx.tie.choose(&options, StorageMode::Coded, rng);
            let drive = options[pick.option].drive;
            return Some(Decision {
                drive,
                chunk: nth_useful_chunk(ctx.layout, user, drive, pick.offset),
                excluded_leaders: excluded,
            });
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("unknown scheduler `{0}`")]
    UnknownScheduler(String),
    #[error("unknown tie policy `{0}` (expected spread, random or first)")]
    UnknownPolicy(String),
}

/// Name-keyed table of schedulers and tie policies.
#[derive(Debug, Default)]
pub struct Registry {
    schedulers: BTreeMap<&'static str, Arc<dyn Scheduler>>,
    policies: BTreeMap<&'static str, Arc<dyn TiePolicy>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Registry::empty();
        r.register_scheduler(Arc::new(UncodedInfinite));
        r.register_scheduler(Arc::new(UncodedFinite));
        r.register_scheduler(Arc::new(CodedFinite));
        r.register_policy(Arc::new(Spread));
        r.register_policy(Arc::new(Uniform));
        r.register_policy(Arc::new(Lowest));
        r
    }

    /// Shared registry holding the built-in entries.
    pub fn global() -> &'static Registry {
        static GLOBAL: OnceLock<Registry> = OnceLock::new();
        GLOBAL.get_or_init(Registry::with_defaults)
    }

    pub fn register_scheduler(&mut self, s: Arc<dyn Scheduler>) {
        self.schedulers.insert(s.name(), s);
    }

    pub fn register_policy(&mut self, p: Arc<dyn TiePolicy>) {
        self.policies.insert(p.name(), p);
    }

    pub fn scheduler(&self, name: &str) -> Result<Arc<dyn Scheduler>, RegistryError> {
        self.schedulers
            .get(name)
            .cloned()
            .ok_or_else(|| RegistryError::UnknownScheduler(name.to_string()))
    }

    pub fn policy(&self, name: &str) -> Result<Arc<dyn TiePolicy>, RegistryError> {
        self.policies
            .get(name.to_ascii_lowercase().as_str())
            .cloned()
            .ok_or_else(|| RegistryError::UnknownPolicy(name.to_string()))
    }

    pub fn scheduler_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.schedulers.keys().copied()
    }

    pub fn policy_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.policies.keys().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("state too large for exhaustive search: {0}")]
pub struct OracleScaleError(pub String);

/// Exhaustive per-slot optimum: over every (free drive, stored chunk) read,
/// the largest number of users whose knowledge rank would grow. Each user's
/// knowledge is rebuilt from its reception record by elimination, so the
/// result does not depend on the simulator's rank bookkeeping.
pub fn brute_force_max_targeted(
    layout: &DriveLayout,
    users: &[UserState],
    busy: DriveMask,
) -> Result<usize, OracleScaleError> {
    let r = layout.drive_count();
    let per_drive = (0..r)
        .map(|d| layout.drive_contents(d).len())
        .max()
        .unwrap_or(0);
    if users.len() > 8 || r > 8 || per_drive > 8 {
        return Err(OracleScaleError(format!(
            "{} users, {r} drives, {per_drive} chunks per drive (limit 8 each)",
            users.len()
        )));
    }
    let knowledge: Vec<KnowledgeMatrix> = users
        .iter()
        .map(|u| {
            let mut k = KnowledgeMatrix::new(layout.field(), layout.t());
            for c in 0..layout.chunk_count() {
                if !u.pending().contains(c) {
                    k.push(layout.vector(c));
                }
            }
            k
        })
        .collect();
    let mut best = 0;
    for d in (0..r).filter(|&d| !busy.is_busy(d)) {
        for &c in layout.drive_contents(d) {
            let v = layout.vector(c);
            let gained = knowledge.iter().filter(|k| k.is_innovative(v)).count();
            best = best.max(gained);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stream_rng;

    #[test]
    fn registry_lookup() {
        let r = Registry::global();
        assert_eq!(r.scheduler(CODED_FINITE).unwrap().name(), CODED_FINITE);
        assert_eq!(r.policy("SPREAD").unwrap().name(), SPREAD);
        assert!(matches!(
            r.policy("best"),
            Err(RegistryError::UnknownPolicy(_))
        ));
        assert!(matches!(
            r.scheduler("ilp"),
            Err(RegistryError::UnknownScheduler(_))
        ));
        assert_eq!(r.scheduler_names().count(), 3);
    }

    #[test]
    fn candidate_policies() {
        let mut rng = stream_rng(7, 0, 0);
        let reads = [0u64; 4];
        assert_eq!(
            choose_among_candidates(&[(3, 9)], StorageMode::Coded, &Spread, &reads, &mut rng),
            (3, 9)
        );
        // drive 1 has three useful chunks left, drive 2 one
        let c = [(1, 2), (1, 3), (1, 4), (2, 6)];
        assert_eq!(
            choose_among_candidates(&c, StorageMode::Coded, &Spread, &reads, &mut rng).0,
            1
        );
        let c = [(2, 6), (0, 1), (0, 0)];
        assert_eq!(
            choose_among_candidates(&c, StorageMode::Coded, &Spread, &reads, &mut rng).0,
            0
        );
        assert_eq!(
            choose_among_candidates(
                &[(2, 5), (1, 7)],
                StorageMode::Uncoded,
                &Lowest,
                &reads,
                &mut rng
            ),
            (1, 7)
        );
        let reads = [5u64, 2, 9, 2];
        assert_eq!(
            choose_among_candidates(
                &[(0, 1), (2, 1), (3, 1)],
                StorageMode::Uncoded,
                &Spread,
                &reads,
                &mut rng
            ),
            (3, 1)
        );
    }

    #[test]
    fn uniform_policy_covers_every_candidate() {
        let mut rng = stream_rng(1, 0, 2);
        let c = [(0, 0), (0, 1), (3, 7)];
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            seen.insert(choose_among_candidates(
                &c,
                StorageMode::Coded,
                &Uniform,
                &[0; 4],
                &mut rng,
            ));
        }
        assert_eq!(seen.len(), 3);
    }
}
