//! Closed-form curves in the same row shapes as simulation output.

use ncsched_core::analytics::{
    erlang_blocking, leader_block_single, leader_block_striped_coded_bounds,
    leader_block_striped_uncoded, stripe_sets_for_rank, StorageKind,
};
use ncsched_core::layout::StorageMode;
use ncsched_core::{Mode, ScenarioConfig};

use crate::error::HarnessError;
use crate::output::{LeaderRow, ResultRow};

/// Closed-form leader blocking at one rank: an exact value or a bound pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticPoint {
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl AnalyticPoint {
    fn exact(v: f64) -> Self {
        AnalyticPoint {
            value: Some(v),
            ..Default::default()
        }
    }
}

/// Analytic leader blocking at rank `r`. The one-chunk-per-drive layout has
/// an exact value for both storage kinds; striped uncoded assumes contiguous
/// decoding; striped coded has bounds.
pub fn leader_curve_point(
    kind: StorageKind,
    pbd: f64,
    w: usize,
    t: usize,
    s: usize,
    r: usize,
) -> Result<AnalyticPoint, HarnessError> {
    let err = |e: ncsched_core::analytics::AnalyticsError| HarnessError::Config(e.to_string());
    if s == t {
        return Ok(AnalyticPoint::exact(
            leader_block_single(pbd, w, t, r, kind).map_err(err)?,
        ));
    }
    Ok(match kind {
        StorageKind::Uncoded => {
            let sets = stripe_sets_for_rank(r, t, s);
            AnalyticPoint::exact(leader_block_striped_uncoded(pbd, w, s, sets).map_err(err)?)
        }
        StorageKind::Coded => {
            let b = leader_block_striped_coded_bounds(pbd, w, s, t, r).map_err(err)?;
            AnalyticPoint {
                value: None,
                lower: Some(b.lower),
                upper: Some(b.upper),
            }
        }
    })
}

/// Analytic columns for a simulated configuration, when a formula applies.
pub fn leader_analytic_for(cfg: &ScenarioConfig, r: usize) -> AnalyticPoint {
    if !cfg.mode.finite_io() || r >= cfg.t || !cfg.t.is_multiple_of(cfg.s) {
        return AnalyticPoint::default();
    }
    let kind = match cfg.mode.storage() {
        StorageMode::Coded => {
            if cfg.coded_chunks.is_some_and(|h| h != cfg.w * cfg.t) {
                return AnalyticPoint::default();
            }
            StorageKind::Coded
        }
        StorageMode::Uncoded => StorageKind::Uncoded,
    };
    leader_curve_point(kind, cfg.pbd, cfg.w, cfg.t, cfg.s, r).unwrap_or_default()
}

/// Erlang blocking over a range of buffer sizes, as result rows.
pub fn erlang_rows(lambda: f64, t: usize, ns: &[usize]) -> Result<Vec<ResultRow>, HarnessError> {
    ns.iter()
        .map(|&n| {
            let p =
                erlang_blocking(lambda, t, n).map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(ResultRow {
                scenario: "erlang".into(),
                mode: Mode::UncodedInf,
                sweep_value: Some(n as f64),
                n,
                t,
                w: None,
                r: None,
                s: None,
                lambda,
                pbd: None,
                reps: None,
                slots: None,
                ext_block: None,
                throughput_norm: None,
                throughput_raw: None,
                analytic_ext_block: Some(p),
            })
        })
        .collect()
}

/// Leader blocking curve over every rank 0..T.
pub fn leader_rows(
    kind: StorageKind,
    pbd: f64,
    w: usize,
    t: usize,
    s: usize,
) -> Result<Vec<LeaderRow>, HarnessError> {
    if w == 0 || s == 0 || !t.is_multiple_of(s) {
        return Err(HarnessError::Config(format!(
            "need W ≥ 1 and s dividing T (W={w}, T={t}, s={s})"
        )));
    }
    let mode = match kind {
        StorageKind::Coded => Mode::CodedFin,
        StorageKind::Uncoded => Mode::UncodedFin,
    };
    (0..t)
        .map(|r| {
            let a = leader_curve_point(kind, pbd, w, t, s, r)?;
            Ok(LeaderRow {
                mode,
                pbd,
                rank: r,
                observed: None,
                analytic_value: a.value,
                analytic_lb: a.lower,
                analytic_ub: a.upper,
                sweep_value: None,
            })
        })
        .collect()
}
