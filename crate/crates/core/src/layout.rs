//! Placement of uncoded stripe sets or coded chunks onto drives.
//!
//! Drive and chunk ids are 0-based. Stripe set `k` (chunks `k·T/s .. (k+1)·T/s`)
//! has copy `w` on drive `w·s + k`; with `s = T` this is the one-chunk-per-drive
//! layout. Coded layouts place `H` chunks, `H/R` consecutive ids per drive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitSet;
use crate::gf::{Elem, EncodingVector, Field, KnowledgeMatrix};

/// Enumerate every T-subset up to this many; sample beyond it.
pub const MDS_ENUMERATION_LIMIT: u128 = 1_000_000;
const MDS_SAMPLES: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("invalid layout: {0}")]
    Config(String),
    #[error("operation requires a coded layout")]
    NotCoded,
    #[error("chunk {0} is not stored in this layout")]
    UnknownChunk(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StorageMode {
    Uncoded,
    Coded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Rows (1, x, x², …) at distinct nonzero points; MDS whenever q > H.
    #[default]
    Vandermonde,
    /// I.i.d. uniform coefficients; MDS only with high probability.
    Random,
    /// Each drive's coded chunks mix only that drive's uncoded stripe set;
    /// replicas of a set use disjoint Vandermonde points, so any T/s of the
    /// set's W·T/s chunks recover it.
    PerDrive,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayoutParams {
    pub t: usize,
    pub w: usize,
    pub s: usize,
    pub mode: StorageMode,
    pub field: Field,
    pub generator: Generator,
    /// Coded chunk count; `None` means W·T.
    pub coded_chunks: Option<usize>,
    /// Seed for the random generator.
    pub seed: u64,
}

impl LayoutParams {
    pub fn uncoded(t: usize, w: usize, s: usize) -> Self {
        LayoutParams {
            t,
            w,
            s,
            mode: StorageMode::Uncoded,
            field: Field::Gf256,
            generator: Generator::Vandermonde,
            coded_chunks: None,
            seed: 0,
        }
    }

    pub fn coded(t: usize, w: usize, s: usize, field: Field, generator: Generator) -> Self {
        LayoutParams {
            mode: StorageMode::Coded,
            field,
            generator,
            ..LayoutParams::uncoded(t, w, s)
        }
    }

    pub fn drives(&self) -> usize {
        self.w * self.s
    }

    pub fn coded_count(&self) -> usize {
        self.coded_chunks.unwrap_or(self.w * self.t)
    }

    fn validate(&self) -> Result<(), LayoutError> {
        let err = |m: String| Err(LayoutError::Config(m));
        if self.t == 0 || self.w == 0 || self.s == 0 {
            return err(format!(
                "T={}, W={}, s={} must all be positive",
                self.t, self.w, self.s
            ));
        }
        if !self.t.is_multiple_of(self.s) {
            return err(format!("s={} must divide T={}", self.s, self.t));
        }
        if self.mode == StorageMode::Coded {
            let h = self.coded_count();
            let r = self.drives();
            if h < self.t {
                return err(format!("H={h} coded chunks cannot cover T={}", self.t));
            }
            if !h.is_multiple_of(r) {
                return err(format!("H={h} must split evenly over R={r} drives"));
            }
            match self.generator {
                Generator::Vandermonde if self.field.order() as usize <= h => {
                    return err(format!(
                        "Vandermonde needs q > H, got q={} and H={h}",
                        self.field.order()
                    ));
                }
                Generator::PerDrive => {
                    if h != self.w * self.t {
                        return err("per-drive construction requires H = W·T".into());
                    }
                    if self.field.order() as usize <= self.w * self.t / self.s {
                        return err("per-drive construction needs q > W·T/s".into());
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Which drives hold which chunks, plus the coefficient vectors of every
/// stored chunk (unit vectors in the uncoded case).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriveLayout {
    params: LayoutParams,
    contents: Vec<Vec<usize>>,
    holders: Vec<Vec<usize>>,
    vectors: Vec<EncodingVector>,
    drive_masks: Vec<BitSet>,
    mds_by_construction: bool,
}

/// Stripe set of drive `d` under the replicated striping rule.
fn stripe_of_drive(d: usize, s: usize) -> usize {
    d % s
}

fn stripe_chunks(k: usize, t: usize, s: usize) -> std::ops::Range<usize> {
    let per = t / s;
    k * per..(k + 1) * per
}

impl DriveLayout {
    fn assemble(
        params: LayoutParams,
        contents: Vec<Vec<usize>>,
        vectors: Vec<EncodingVector>,
        mds: bool,
    ) -> Self {
        let universe = vectors.len();
        let mut holders = vec![Vec::new(); universe];
        let mut drive_masks = Vec::with_capacity(contents.len());
        for (d, chunks) in contents.iter().enumerate() {
            let mut mask = BitSet::empty(universe);
            for &c in chunks {
                holders[c].push(d);
                mask.insert(c);
            }
            drive_masks.push(mask);
        }
        DriveLayout {
            params,
            contents,
            holders,
            vectors,
            drive_masks,
            mds_by_construction: mds,
        }
    }

    pub fn build(params: &LayoutParams) -> Result<Self, LayoutError> {
        match params.mode {
            StorageMode::Uncoded => Self::build_uncoded(params),
            StorageMode::Coded => Self::build_coded(params),
        }
    }

    pub fn build_uncoded(params: &LayoutParams) -> Result<Self, LayoutError> {
        if params.mode != StorageMode::Uncoded {
            return Err(LayoutError::Config(
                "build_uncoded called with a coded mode".into(),
            ));
        }
        params.validate()?;
        let (t, s) = (params.t, params.s);
        let contents = (0..params.drives())
            .map(|d| stripe_chunks(stripe_of_drive(d, s), t, s).collect())
            .collect();
        let vectors = (0..t).map(|j| EncodingVector::unit(t, j)).collect();
        Ok(Self::assemble(params.clone(), contents, vectors, false))
    }

    pub fn build_coded(params: &LayoutParams) -> Result<Self, LayoutError> {
        if params.mode != StorageMode::Coded {
            return Err(LayoutError::Config(
                "build_coded called with an uncoded mode".into(),
            ));
        }
        params.validate()?;
        let h = params.coded_count();
        let f = params.field;
        let (vectors, mds) = match params.generator {
            Generator::Vandermonde => {
                let points: Vec<Elem> = (1..=h as Elem).collect();
                (vandermonde_rows(f, params.t, &points), true)
            }
            Generator::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                let q = f.order();
                let v = (0..h)
                    .map(|_| {
                        EncodingVector((0..params.t).map(|_| rng.random_range(0..q)).collect())
                    })
                    .collect();
                (v, false)
            }
            Generator::PerDrive => (per_drive_rows(params), false),
        };
        Ok(Self::coded_from_vectors(params, vectors, mds))
    }

    /// Coded layout over explicit Vandermonde points; used to inject faults.
    pub fn build_coded_with_points(
        params: &LayoutParams,
        points: &[Elem],
    ) -> Result<Self, LayoutError> {
        params.validate()?;
        if points.len() != params.coded_count() {
            return Err(LayoutError::Config(format!(
                "{} points given for H={}",
                points.len(),
                params.coded_count()
            )));
        }
        let distinct = points
            .iter()
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            == points.len();
        let vectors = vandermonde_rows(params.field, params.t, points);
        Ok(Self::coded_from_vectors(params, vectors, distinct))
    }

    /// Coded layout over caller-supplied vectors, `H/R` consecutive ids per drive.
    pub fn coded_from_vectors(
        params: &LayoutParams,
        vectors: Vec<EncodingVector>,
        mds: bool,
    ) -> Self {
        let r = params.drives();
        let per = vectors.len() / r;
        let contents = (0..r).map(|d| (d * per..(d + 1) * per).collect()).collect();
        let mut p = params.clone();
        p.mode = StorageMode::Coded;
        p.coded_chunks = Some(vectors.len());
        Self::assemble(p, contents, vectors, mds)
    }

    pub fn params(&self) -> &LayoutParams {
        &self.params
    }

    pub fn mode(&self) -> StorageMode {
        self.params.mode
    }

    pub fn field(&self) -> Field {
        self.params.field
    }

    pub fn t(&self) -> usize {
        self.params.t
    }

    pub fn drive_count(&self) -> usize {
        self.contents.len()
    }

    /// Size of the chunk id space: T uncoded, H coded.
    pub fn chunk_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn drive_contents(&self, drive: usize) -> &[usize] {
        &self.contents[drive]
    }

    pub fn drive_mask(&self, drive: usize) -> &BitSet {
        &self.drive_masks[drive]
    }

    pub fn vector(&self, chunk: usize) -> &EncodingVector {
        &self.vectors[chunk]
    }

    pub fn vectors(&self) -> &[EncodingVector] {
        &self.vectors
    }

    /// True when any T stored vectors are known to be independent without
    /// running the subset check (distinct-point Vandermonde).
    pub fn mds_by_construction(&self) -> bool {
        self.params.mode == StorageMode::Coded && self.mds_by_construction
    }

    pub fn drives_holding(&self, chunk: usize) -> Result<&[usize], LayoutError> {
        self.holders
            .get(chunk)
            .map(Vec::as_slice)
            .ok_or(LayoutError::UnknownChunk(chunk))
    }

    /// Stripe set held by `drive` (uncoded layouts, or per-drive coded).
    pub fn stripe_set_of_drive(&self, drive: usize) -> usize {
        stripe_of_drive(drive, self.params.s)
    }

    /// Checks that every T-subset of the coded vectors has full rank.
    /// Enumerates when C(H,T) ≤ 10^6, otherwise samples subsets.
    pub fn verify_mds(&self) -> Result<bool, LayoutError> {
        if self.params.mode != StorageMode::Coded {
            return Err(LayoutError::NotCoded);
        }
        let (h, t) = (self.vectors.len(), self.params.t);
        if h < t {
            return Ok(false);
        }
        let full_rank = |idx: &[usize]| {
            let mut k = KnowledgeMatrix::new(self.params.field, t);
            idx.iter().all(|&i| k.push(&self.vectors[i]))
        };
        if binomial(h, t) <= MDS_ENUMERATION_LIMIT {
            let mut idx: Vec<usize> = (0..t).collect();
            loop {
                if !full_rank(&idx) {
                    return Ok(false);
                }
                if !next_combination(&mut idx, h) {
                    return Ok(true);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed ^ 0x6d64_735f_7361_6d70);
        let mut pool: Vec<usize> = (0..h).collect();
        for _ in 0..MDS_SAMPLES {
            // partial Fisher-Yates
            for i in 0..t {
                let j = rng.random_range(i..h);
                pool.swap(i, j);
            }
            if !full_rank(&pool[..t]) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn dump(&self) -> LayoutDump {
        let coded = self.params.mode == StorageMode::Coded;
        LayoutDump {
            mode: self.params.mode,
            t: self.params.t,
            w: self.params.w,
            s: self.params.s,
            r: self.drive_count(),
            h: coded.then_some(self.vectors.len()),
            field: coded.then(|| self.params.field.order()),
            drives: self
                .contents
                .iter()
                .enumerate()
                .map(|(d, chunks)| DriveDump {
                    drive: d,
                    chunks: chunks.clone(),
                    coefficients: coded
                        .then(|| chunks.iter().map(|&c| self.vectors[c].0.clone()).collect()),
                })
                .collect(),
        }
    }
}

fn vandermonde_rows(f: Field, t: usize, points: &[Elem]) -> Vec<EncodingVector> {
    points
        .iter()
        .map(|&x| {
            let mut row = Vec::with_capacity(t);
            let mut acc = 1;
            for _ in 0..t {
                row.push(acc);
                acc = f.mul(acc, x);
            }
            EncodingVector(row)
        })
        .collect()
}

fn per_drive_rows(params: &LayoutParams) -> Vec<EncodingVector> {
    let (t, s) = (params.t, params.s);
    let per = t / s;
    let mut out = Vec::with_capacity(params.w * t);
    for d in 0..params.drives() {
        let replica = d / s;
        let points: Vec<Elem> = (replica * per + 1..=(replica + 1) * per)
            .map(|x| x as Elem)
            .collect();
        let base = stripe_chunks(stripe_of_drive(d, s), t, s).start;
        for row in vandermonde_rows(params.field, per, &points) {
            let mut v = vec![0; t];
            v[base..base + per].copy_from_slice(&row.0);
            out.push(EncodingVector(v));
        }
    }
    out
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
pub fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutDump {
    pub mode: StorageMode,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub s: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<u32>,
    pub drives: Vec<DriveDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriveDump {
    pub drive: usize,
    pub chunks: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<Elem>>>,
}
