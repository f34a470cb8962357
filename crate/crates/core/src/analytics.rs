//! Closed-form blocking probabilities: server external blocking under a
//! throughput-optimal schedule (Erlang B with offered load λT), and the
//! internal blocking of the true leader for the one-chunk-per-drive and
//! regular striped layouts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    Coded,
    Uncoded,
}

fn invalid<T>(msg: String) -> Result<T, AnalyticsError> {
    Err(AnalyticsError::InvalidQuery(msg))
}

fn check_pbd(pbd: f64) -> Result<(), AnalyticsError> {
    if !(0.0..=1.0).contains(&pbd) {
        return invalid(format!("drive blocking probability {pbd} outside [0,1]"));
    }
    Ok(())
}

/// Erlang-B blocking for offered load `rho` and `servers` service units,
/// via B(0)=1, B(k) = ρB(k−1) / (k + ρB(k−1)).
pub fn erlang_b(rho: f64, servers: usize) -> f64 {
    let mut b = 1.0;
    for k in 1..=servers {
        b = rho * b / (k as f64 + rho * b);
    }
    b
}

/// External blocking of a throughput-optimal server: each admitted user holds
/// a buffer slot for exactly `t` timeslots, so the buffer is an N-server loss
/// system with offered load λT.
pub fn erlang_blocking(lambda: f64, t: usize, n: usize) -> Result<f64, AnalyticsError> {
    if lambda.is_nan() || lambda < 0.0 || !lambda.is_finite() {
        return invalid(format!(
            "arrival rate {lambda} must be finite and non-negative"
        ));
    }
    if n == 0 {
        return invalid("buffer size N must be at least 1".into());
    }
    Ok(erlang_b(lambda * t as f64, n))
}

/// Leader blocking with one chunk per drive (R = W·T): the leader is blocked
/// exactly when every drive still useful to it is busy. Coded: W·T − r useful
/// drives. Uncoded: W·(T − r).
pub fn leader_block_single(
    pbd: f64,
    w: usize,
    t: usize,
    r_ell: usize,
    kind: StorageKind,
) -> Result<f64, AnalyticsError> {
    check_pbd(pbd)?;
    if r_ell >= t {
        return invalid(format!("leader rank {r_ell} must be below T={t}"));
    }
    let useful = match kind {
        StorageKind::Coded => w * t - r_ell,
        StorageKind::Uncoded => w * t - w * r_ell,
    };
    Ok(pbd.powi(useful as i32))
}

/// Uncoded striped layout (R = W·s): a leader with `r_sets` complete stripe
/// sets has W·(s − r_sets) useful drives.
pub fn leader_block_striped_uncoded(
    pbd: f64,
    w: usize,
    s: usize,
    r_sets: usize,
) -> Result<f64, AnalyticsError> {
    check_pbd(pbd)?;
    if r_sets >= s {
        return invalid(format!(
            "completed stripe sets {r_sets} must be below s={s}"
        ));
    }
    Ok(pbd.powi((w * s - w * r_sets) as i32))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on coded leader blocking in the striped layout.
///
/// Upper: reads were concentrated, so ⌊r/(T/s)⌋ drives are fully read.
/// Lower: reads were spread evenly, so no drive is exhausted until the rank
/// passes W·T − W·s, after which drives drop out one per extra rank.
pub fn leader_block_striped_coded_bounds(
    pbd: f64,
    w: usize,
    s: usize,
    t: usize,
    r_ell: usize,
) -> Result<BlockBounds, AnalyticsError> {
    check_pbd(pbd)?;
    if s == 0 || !t.is_multiple_of(s) {
        return invalid(format!("s={s} must divide T={t}"));
    }
    if r_ell >= t {
        return invalid(format!("leader rank {r_ell} must be below T={t}"));
    }
    let drives = w * s;
    let per_drive = t / s;
    let upper_exp = drives - r_ell / per_drive;
    let lower_exp = drives - r_ell.saturating_sub(w * t - w * s);
    Ok(BlockBounds {
        lower: pbd.powi(lower_exp as i32),
        upper: pbd.powi(upper_exp as i32),
    })
}

/// Completed stripe sets implied by a contiguous-decoding leader of rank r.
pub fn stripe_sets_for_rank(r_ell: usize, t: usize, s: usize) -> usize {
    r_ell / (t / s)
}
