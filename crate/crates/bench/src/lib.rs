//! Desk-scale benchmark harness: runs both counting modes over a directory
//! of DIMACS instances under a wall-clock limit and summarizes the runs.
//!
//! Scores follow the usual model-counting competition conventions. An
//! unsolved run scores twice the time limit (PAR-2), speedup is the
//! geometric mean of classic/rounding time over instances both modes solved,
//! and accuracy is `max(est/exact - 1, exact/est - 1)` where an exact count
//! is available.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hashcount_core::estimate::ln_biguint;
use hashcount_core::exact::ExactCounter;
use hashcount_core::{
    count_with, parse_dimacs, CountError, CountMode, CountOptions, CountParams, Estimate,
    Formula, OracleError, SolverBackend,
};
use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MODES: [CountMode; 2] = [CountMode::Rounding, CountMode::Classic];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no DIMACS instances (*.cnf) in {0}")]
    EmptyDirectory(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("observed error needs positive counts")]
    ZeroCount,
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dir: PathBuf,
    pub epsilon: f64,
    pub delta: f64,
    pub time_limit: Duration,
    pub workers: usize,
    pub seed: u64,
    pub backend: SolverBackend,
    /// Exact counts are computed for instances with at most this many
    /// scope variables; 0 disables them.
    pub exact_limit: usize,
}

impl BenchConfig {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        BenchConfig {
            dir: dir.into(),
            epsilon: 0.8,
            delta: 0.001,
            time_limit: Duration::from_secs(60),
            workers: 1,
            seed: 0,
            backend: SolverBackend::BuiltIn,
            exact_limit: 20,
        }
    }
}

/// One (instance, mode) run. `result` is absent when the run timed out or
/// failed.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub instance: String,
    pub mode: CountMode,
    pub seconds: f64,
    pub timed_out: bool,
    pub result: Option<Estimate>,
    pub seed: u64,
}

impl BenchRecord {
    pub fn solved(&self) -> bool {
        !self.timed_out && self.result.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: CountMode,
    pub attempted: usize,
    pub solved: usize,
    pub par2: f64,
    /// `(instance, observed error)` for solved instances with exact counts.
    pub errors: Vec<(String, f64)>,
}

impl ModeSummary {
    pub fn mean_error(&self) -> Option<f64> {
        if self.errors.is_empty() {
            return None;
        }
        Some(self.errors.iter().map(|(_, e)| e).sum::<f64>() / self.errors.len() as f64)
    }

    pub fn median_error(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.errors.iter().map(|&(_, e)| e).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[mid]
        } else {
            (v[mid - 1] + v[mid]) / 2.0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub time_limit: f64,
    pub modes: Vec<ModeSummary>,
    /// Instances solved by both modes.
    pub common_solved: usize,
    /// Geometric mean of classic time over rounding time on those.
    pub speedup: Option<f64>,
}

impl BenchReport {
    /// Aggregates records. Order of `records` does not matter.
    pub fn from_records(
        records: &[BenchRecord],
        time_limit: Duration,
        exact: &BTreeMap<String, BigUint>,
    ) -> BenchReport {
        let limit = time_limit.as_secs_f64();
        let mut sorted: Vec<&BenchRecord> = records.iter().collect();
        sorted.sort_by(|a, b| a.instance.cmp(&b.instance));

        let modes = MODES
            .iter()
            .map(|&mode| {
                let runs: Vec<_> = sorted.iter().filter(|r| r.mode == mode).collect();
                let scores: Vec<f64> = runs
                    .iter()
                    .map(|r| if r.solved() { r.seconds } else { 2.0 * limit })
                    .collect();
                let errors = runs
                    .iter()
                    .filter_map(|r| {
                        let est = r.result.as_ref().filter(|_| r.solved())?;
                        let e = exact.get(&r.instance)?;
                        observed_error(est, e).ok().map(|x| (r.instance.clone(), x))
                    })
                    .collect();
                ModeSummary {
                    mode,
                    attempted: runs.len(),
                    solved: runs.iter().filter(|r| r.solved()).count(),
                    par2: if scores.is_empty() {
                        0.0
                    } else {
                        scores.iter().sum::<f64>() / scores.len() as f64
                    },
                    errors,
                }
            })
            .collect();

        let solved_time = |mode: CountMode| -> BTreeMap<&str, f64> {
            sorted
                .iter()
                .filter(|r| r.mode == mode && r.solved())
                .map(|r| (r.instance.as_str(), r.seconds))
                .collect()
        };
        let rounding = solved_time(CountMode::Rounding);
        let classic = solved_time(CountMode::Classic);
        let ratios: Vec<f64> = rounding
            .iter()
            .filter_map(|(name, &tr)| classic.get(name).map(|&tc| tc / tr))
            .collect();
        let speedup = geometric_mean(&ratios);

        BenchReport {
            time_limit: limit,
            modes,
            common_solved: ratios.len(),
            speedup,
        }
    }

    pub fn mode(&self, mode: CountMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "time limit: {}s", self.time_limit)?;
        for m in &self.modes {
            write!(
                f,
                "{:<9} solved {}/{}  PAR-2 {:.3}",
                m.mode.to_string(),
                m.solved,
                m.attempted,
                m.par2
            )?;
            if let (Some(mean), Some(median)) = (m.mean_error(), m.median_error()) {
                write!(f, "  error mean {mean:.4} median {median:.4} (n={})", m.errors.len())?;
            }
            writeln!(f)?;
        }
        match self.speedup {
            Some(s) => writeln!(f, "speedup (classic/rounding, geomean over {}): {s:.3}", self.common_solved),
            None => writeln!(f, "speedup: no instance solved by both modes"),
        }
    }
}

/// Geometric mean of positive values; `None` for an empty slice.
pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let log_sum: f64 = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum();
    Some((log_sum / values.len() as f64).exp())
}

/// `max(est/exact - 1, exact/est - 1)`; exactly 0 iff the values are equal.
pub fn observed_error(estimate: &Estimate, exact: &BigUint) -> Result<f64, BenchError> {
    if estimate.is_zero() || exact.bits() == 0 {
        return Err(BenchError::ZeroCount);
    }
    if estimate.cmp_biguint(exact) == Ordering::Equal {
        return Ok(0.0);
    }
    let ratio = (estimate.ln() - ln_biguint(exact)).exp();
    Ok((ratio - 1.0).max(1.0 / ratio - 1.0))
}

/// FNV-1a, used to derive per-instance seeds that do not depend on the
/// order or number of instances.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn instance_seed(master: u64, instance: &str) -> u64 {
    master ^ fnv1a(instance.as_bytes())
}

/// `*.cnf` files directly inside `dir`, sorted by name.
pub fn list_instances(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let io_err = |source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "cnf") {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(BenchError::EmptyDirectory(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

fn instance_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub exact: BTreeMap<String, BigUint>,
    pub report: BenchReport,
}

fn run_one(config: &BenchConfig, name: &str, formula: &Formula, mode: CountMode) -> BenchRecord {
    let seed = instance_seed(config.seed, name);
    let start = Instant::now();
    let opts = CountOptions {
        backend: config.backend.clone(),
        deadline: Some(start + config.time_limit),
        ..CountOptions::default()
    };
    let params = CountParams::new(config.epsilon, config.delta, mode, seed);
    let outcome = catch_unwind(AssertUnwindSafe(|| count_with(formula, &params, &opts)));
    let seconds = start.elapsed().as_secs_f64();
    let (timed_out, result) = match outcome {
        Ok(Ok(r)) => (false, Some(r.estimate)),
        Ok(Err(CountError::Oracle(OracleError::Timeout))) => (true, None),
        Ok(Err(e)) => {
            log::warn!("{name} ({mode}): {e}");
            (false, None)
        }
        Err(_) => {
            log::error!("{name} ({mode}): worker panicked");
            (false, None)
        }
    };
    BenchRecord {
        instance: name.to_string(),
        mode,
        seconds,
        timed_out,
        result,
        seed,
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchOutput, BenchError> {
    let files = list_instances(&config.dir)?;
    let mut instances = Vec::new();
    for path in &files {
        let bytes = std::fs::read(path).map_err(|source| BenchError::Io {
            path: path.clone(),
            source,
        })?;
        match parse_dimacs(&bytes) {
            Ok(f) => instances.push((instance_name(path), f)),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if instances.is_empty() {
        return Err(BenchError::EmptyDirectory(config.dir.clone()));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;

    let jobs: Vec<(usize, CountMode)> = (0..instances.len())
        .flat_map(|i| MODES.iter().map(move |&m| (i, m)))
        .collect();
    let (mut records, exact) = pool.install(|| {
        let records: Vec<BenchRecord> = jobs
            .par_iter()
            .map(|&(i, mode)| run_one(config, &instances[i].0, &instances[i].1, mode))
            .collect();
        let counter = ExactCounter::with_limit(config.exact_limit);
        let exact: BTreeMap<String, BigUint> = instances
            .par_iter()
            .filter(|(_, f)| f.scope().len() <= config.exact_limit)
            .filter_map(|(name, f)| counter.count(f, &[]).ok().map(|c| (name.clone(), c.0)))
            .collect();
        (records, exact)
    });
    records.sort_by(|a, b| {
        a.instance
            .cmp(&b.instance)
            .then((a.mode == CountMode::Classic).cmp(&(b.mode == CountMode::Classic)))
    });
    let report = BenchReport::from_records(&records, config.time_limit, &exact);
    Ok(BenchOutput {
        records,
        exact,
        report,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    instance: String,
    mode: CountMode,
    seconds: f64,
    timeout: bool,
    estimate_mantissa: Option<f64>,
    estimate_exp: Option<u32>,
    seed: u64,
}

/// Writes per-run rows with columns
/// `instance,mode,seconds,timeout,estimate_mantissa,estimate_exp,seed`.
pub fn write_csv(records: &[BenchRecord], out: impl io::Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            instance: r.instance.clone(),
            mode: r.mode,
            seconds: r.seconds,
            timeout: r.timed_out,
            estimate_mantissa: r.result.map(|e| e.mantissa()),
            estimate_exp: r.result.map(|e| e.exponent()),
            seed: r.seed,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv(input: impl io::Read) -> Result<Vec<BenchRecord>, BenchError> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            let result = match (row.estimate_mantissa, row.estimate_exp) {
                (Some(m), Some(e)) if m.is_finite() && m >= 0.0 => Some(Estimate::new(m, e)),
                _ => None,
            };
            Ok(BenchRecord {
                instance: row.instance,
                mode: row.mode,
                seconds: row.seconds,
                timed_out: row.timeout,
                result,
                seed: row.seed,
            })
        })
        .collect()
}
