//! Per-round estimators and the median-of-rounds drivers.
//!
//! Both modes share everything up to the cell count: a fresh prefix hash
//! per round, the same level search, and the same per-round RNG streams.
//! They differ only in what a round returns. Classic rounds return
//! `2^m × cellCount`; rounding rounds replace the cell count with a
//! precomputed value (or raise it to that value), which concentrates the
//! per-round estimates and lets far fewer rounds reach the same δ.

use std::time::Instant;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::Estimate;
use crate::formula::Formula;
use crate::hashing::XorHash;
use crate::oracle::{OracleError, SolverBackend};
use crate::planner::{self, ClassicIterRule, CountMode, PlanError};
use crate::search::{log_sat_search, HashCells, SearchError};

/// Fresh-hash retries allowed per round before the run is aborted.
pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    pub epsilon: f64,
    pub thresh: u64,
    pub pivot: f64,
    pub round_up: bool,
    pub round_value: f64,
}

pub fn make_round_config(epsilon: f64) -> Result<RoundConfig, PlanError> {
    let profile = planner::rounding_profile(epsilon)?;
    Ok(RoundConfig {
        epsilon,
        thresh: planner::thresh(epsilon),
        pivot: planner::pivot(epsilon),
        round_up: profile.round_up,
        round_value: profile.round_value(epsilon),
    })
}

/// `2^m × max(cell, roundValue)` when rounding up, else `2^m × roundValue`.
pub fn apply_rounding(cfg: &RoundConfig, m: u32, cell_count: u64) -> Estimate {
    let mantissa = if cfg.round_up {
        cfg.round_value.max(cell_count as f64)
    } else {
        cfg.round_value
    };
    Estimate::new(mantissa, m)
}

/// `2^m × cell`.
pub fn classic_estimate(m: u32, cell_count: u64) -> Estimate {
    Estimate::new(cell_count as f64, m)
}

#[derive(Debug, Error)]
pub enum CountError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("round {round} failed after {attempts} attempts: {reason}")]
    RoundFailed {
        round: u64,
        attempts: u32,
        reason: String,
    },
    #[error("median of an empty list")]
    EmptyMedian,
    #[error("median needs an odd number of estimates, got {0}")]
    EvenMedian(usize),
}

/// What a round needs besides its configuration.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub formula: &'a Formula,
    pub backend: &'a SolverBackend,
    pub deadline: Option<Instant>,
    pub max_retries: u32,
}

impl<'a> RoundContext<'a> {
    pub fn new(formula: &'a Formula, backend: &'a SolverBackend) -> Self {
        RoundContext {
            formula,
            backend,
            deadline: None,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundOutcome {
    pub estimate: Estimate,
    pub m: u32,
    pub cell_count: u64,
    pub queries: u32,
    /// Hashes discarded before this one succeeded.
    pub retries: u32,
}

/// One rounding-mode round. The caller must already know `|sol| ≥ thresh`.
pub fn round_mc_core(
    ctx: &RoundContext<'_>,
    cfg: &RoundConfig,
    rng: &mut impl RngCore,
    prev_m: Option<u32>,
) -> Result<RoundOutcome, CountError> {
    core_round(ctx, cfg, CountMode::Rounding, rng, prev_m, 0)
}

/// One classic-mode round. The caller must already know `|sol| ≥ thresh`.
pub fn approx_mc_core(
    ctx: &RoundContext<'_>,
    cfg: &RoundConfig,
    rng: &mut impl RngCore,
    prev_m: Option<u32>,
) -> Result<RoundOutcome, CountError> {
    core_round(ctx, cfg, CountMode::Classic, rng, prev_m, 0)
}

fn core_round(
    ctx: &RoundContext<'_>,
    cfg: &RoundConfig,
    mode: CountMode,
    rng: &mut impl RngCore,
    prev_m: Option<u32>,
    round: u64,
) -> Result<RoundOutcome, CountError> {
    let scope = ctx.formula.scope();
    let n = scope.len() as u32;
    let prev_m = prev_m.filter(|&m| (1..=n).contains(&m));
    let mut attempts = 0;
    loop {
        attempts += 1;
        let hash = XorHash::sample_for_scope(scope, rng).map_err(|e| CountError::RoundFailed {
            round,
            attempts,
            reason: e.to_string(),
        })?;
        let mut cells = HashCells {
            formula: ctx.formula,
            hash: &hash,
            backend: ctx.backend,
            thresh: cfg.thresh,
            deadline: ctx.deadline,
        };
        let reason = match log_sat_search(&mut cells, n, prev_m) {
            Ok(out) if !out.all_saturated => {
                let estimate = match mode {
                    CountMode::Rounding => apply_rounding(cfg, out.m, out.cell.count),
                    CountMode::Classic => classic_estimate(out.m, out.cell.count),
                };
                return Ok(RoundOutcome {
                    estimate,
                    m: out.m,
                    cell_count: out.cell.count,
                    queries: out.queries,
                    retries: attempts - 1,
                });
            }
            Ok(_) => "every level saturated".to_string(),
            Err(SearchError::Oracle(e)) => return Err(e.into()),
            Err(e) => e.to_string(),
        };
        log::warn!("round {round}: discarding hash ({reason})");
        if attempts > ctx.max_retries {
            return Err(CountError::RoundFailed {
                round,
                attempts,
                reason,
            });
        }
    }
}

/// The middle element by exact value. Sorting is stable, so among equal
/// values the earlier one wins.
pub fn find_median(estimates: &[Estimate]) -> Result<Estimate, CountError> {
    if estimates.is_empty() {
        return Err(CountError::EmptyMedian);
    }
    if estimates.len() % 2 == 0 {
        return Err(CountError::EvenMedian(estimates.len()));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort();
    Ok(sorted[sorted.len() / 2])
}

/// The RNG for round `round` under `seed`. Both modes draw round `i`'s
/// hashes from the same stream.
pub fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountParams {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: CountMode,
    pub seed: u64,
}

impl CountParams {
    pub fn new(epsilon: f64, delta: f64, mode: CountMode, seed: u64) -> Self {
        CountParams {
            epsilon,
            delta,
            mode,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CountOptions {
    pub backend: SolverBackend,
    pub deadline: Option<Instant>,
    pub classic_rule: ClassicIterRule,
    pub max_retries: u32,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            backend: SolverBackend::BuiltIn,
            deadline: None,
            classic_rule: ClassicIterRule::default(),
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalCount {
    pub estimate: Estimate,
    /// True when the model count was small enough to enumerate outright.
    pub exact: bool,
    pub mode: CountMode,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Planned number of rounds.
    pub t: u64,
    /// The level `m` of every executed round, in order. Empty when exact.
    pub round_levels: Vec<u32>,
    /// Discarded hashes over all rounds.
    pub retries: u32,
}

impl FinalCount {
    pub fn rounds(&self) -> usize {
        self.round_levels.len()
    }
}

pub fn count(formula: &Formula, params: &CountParams) -> Result<FinalCount, CountError> {
    count_with(formula, params, &CountOptions::default())
}

pub fn count_with(
    formula: &Formula,
    params: &CountParams,
    opts: &CountOptions,
) -> Result<FinalCount, CountError> {
    let plan = planner::plan(params.epsilon, params.delta, params.mode, opts.classic_rule)?;
    let cfg = make_round_config(params.epsilon)?;
    let mut result = FinalCount {
        estimate: Estimate::from_count(0),
        exact: true,
        mode: params.mode,
        epsilon: params.epsilon,
        delta: params.delta,
        seed: params.seed,
        t: plan.t,
        round_levels: Vec::new(),
        retries: 0,
    };

    let base = opts
        .backend
        .bounded_count(formula, &[], cfg.thresh, opts.deadline)?;
    if !base.saturated {
        result.estimate = Estimate::from_count(base.count);
        return Ok(result);
    }
    result.exact = false;

    let ctx = RoundContext {
        formula,
        backend: &opts.backend,
        deadline: opts.deadline,
        max_retries: opts.max_retries,
    };
    let mut estimates = Vec::with_capacity(plan.t as usize);
    let mut prev_m = None;
    for round in 0..plan.t {
        let mut rng = round_rng(params.seed, round);
        let out = core_round(&ctx, &cfg, params.mode, &mut rng, prev_m, round)?;
        log::debug!(
            "round {round}: m={} cell={} queries={} estimate={}",
            out.m,
            out.cell_count,
            out.queries,
            out.estimate
        );
        prev_m = Some(out.m);
        result.retries += out.retries;
        result.round_levels.push(out.m);
        estimates.push(out.estimate);
    }
    result.estimate = find_median(&estimates)?;
    Ok(result)
}
