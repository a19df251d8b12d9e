//! Locating the level `m` at which hash cells drop below the threshold.
//!
//! For prefix hashes the cells are nested, so "the cell at level `m` is
//! saturated" is monotone: true up to some level and false afterwards. The
//! search finds the first unsaturated level with few oracle queries:
//!
//! 1. With a hint from the previous round, probe the hint and, depending on
//!    the answer, one neighbour.
//! 2. If that does not bracket the transition, gallop away from the last
//!    informative level with steps 2 and 4.
//! 3. Binary search inside the remaining bracket.
//!
//! Without a hint the search starts at step 3 over `[1, n]`. Level 0 is
//! known saturated (the caller has checked the whole formula) and `n + 1`
//! serves as an unqueried sentinel.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::formula::Formula;
use crate::hashing::XorHash;
use crate::oracle::{BoundedResult, OracleError, SolverBackend};

/// Galloping steps taken after the hint window, in order.
const GALLOP_STEPS: [u32; 2] = [2, 4];

/// Answers "bounded count of the cell at level `m`".
pub trait CellOracle {
    fn query(&mut self, m: u32) -> Result<BoundedResult, OracleError>;
}

impl<F> CellOracle for F
where
    F: FnMut(u32) -> Result<BoundedResult, OracleError>,
{
    fn query(&mut self, m: u32) -> Result<BoundedResult, OracleError> {
        self(m)
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cell counts are not monotone in the level (levels {big} and {small})")]
    NonMonotone { small: u32, big: u32 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("hint {hint} outside [1, {n}]")]
    InvalidHint { hint: u32, n: u32 },
    #[error("hash dimension must be at least 1")]
    ZeroDimension,
}

/// Result of one search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    pub m: u32,
    /// Bounded count of the cell at `m`.
    pub cell: BoundedResult,
    pub queries: u32,
    /// Every level up to `n` was saturated; `m = n` and `cell` is saturated.
    pub all_saturated: bool,
}

/// Bookkeeping for one search over one hash.
#[derive(Debug, Default)]
pub struct SearchState {
    /// Largest level seen saturated (0 is implied).
    known_big: u32,
    /// Smallest level seen unsaturated.
    known_small: Option<u32>,
    cache: BTreeMap<u32, BoundedResult>,
    queries: u32,
}

impl SearchState {
    pub fn queries(&self) -> u32 {
        self.queries
    }

    pub fn cached(&self, m: u32) -> Option<&BoundedResult> {
        self.cache.get(&m)
    }

    /// Queries level `m` unless cached, and checks it against what is known.
    fn probe(&mut self, oracle: &mut impl CellOracle, m: u32) -> Result<bool, SearchError> {
        if let Some(r) = self.cache.get(&m) {
            return Ok(r.saturated);
        }
        let r = oracle.query(m)?;
        self.queries += 1;
        self.cache.insert(m, r);
        if r.saturated {
            if let Some(small) = self.known_small.filter(|&s| s <= m) {
                return Err(SearchError::NonMonotone { small, big: m });
            }
            self.known_big = self.known_big.max(m);
        } else {
            if m <= self.known_big {
                return Err(SearchError::NonMonotone {
                    small: m,
                    big: self.known_big,
                });
            }
            // Nested cells: unsaturated counts cannot grow with m.
            for (&level, other) in &self.cache {
                let bad = !other.saturated
                    && ((level < m && other.count < r.count) || (level > m && other.count > r.count));
                if bad {
                    return Err(SearchError::NonMonotone {
                        small: m.max(level),
                        big: m.min(level),
                    });
                }
            }
            self.known_small = Some(self.known_small.map_or(m, |s| s.min(m)));
        }
        Ok(r.saturated)
    }

    fn bracketed(&self) -> bool {
        self.known_small == Some(self.known_big + 1)
    }
}

/// Finds the smallest `m ∈ [1, n]` whose cell is unsaturated, given that
/// level 0 is saturated.
pub fn log_sat_search(
    oracle: &mut impl CellOracle,
    n: u32,
    prev_m: Option<u32>,
) -> Result<SearchOutcome, SearchError> {
    if n == 0 {
        return Err(SearchError::ZeroDimension);
    }
    if let Some(hint) = prev_m {
        if hint == 0 || hint > n {
            return Err(SearchError::InvalidHint { hint, n });
        }
    }
    let mut st = SearchState::default();

    if let Some(hint) = prev_m {
        let up = st.probe(oracle, hint)?;
        let neighbour = if up { hint + 1 } else { hint - 1 };
        if (1..=n).contains(&neighbour) {
            st.probe(oracle, neighbour)?;
        }
        // Neighbour 0 is implicitly saturated, so `bracketed` covers it.
        if !st.bracketed() {
            gallop(&mut st, oracle, n, up)?;
        }
    }

    // Binary search over (known_big, hi); hi = n + 1 when nothing above is
    // known to be unsaturated.
    let mut hi = st.known_small.unwrap_or(n + 1);
    while hi - st.known_big > 1 {
        let mid = st.known_big + (hi - st.known_big) / 2;
        if !st.probe(oracle, mid)? {
            hi = mid;
        }
    }

    if hi == n + 1 {
        let cell = *st.cache.get(&n).expect("level n was queried");
        return Ok(SearchOutcome {
            m: n,
            cell,
            queries: st.queries,
            all_saturated: true,
        });
    }
    Ok(SearchOutcome {
        m: hi,
        cell: st.cache[&hi],
        queries: st.queries,
        all_saturated: false,
    })
}

fn gallop(
    st: &mut SearchState,
    oracle: &mut impl CellOracle,
    n: u32,
    upward: bool,
) -> Result<(), SearchError> {
    for step in GALLOP_STEPS {
        if upward {
            if st.known_big >= n {
                return Ok(());
            }
            let m = (st.known_big + step).min(n);
            if !st.probe(oracle, m)? {
                return Ok(());
            }
        } else {
            let small = st.known_small.expect("downward gallop starts from an unsaturated level");
            if small <= 1 {
                return Ok(());
            }
            let m = small.saturating_sub(step).max(1);
            if st.probe(oracle, m)? {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// A [`CellOracle`] over the prefix cells of one hash.
pub struct HashCells<'a> {
    pub formula: &'a Formula,
    pub hash: &'a XorHash,
    pub backend: &'a SolverBackend,
    pub thresh: u64,
    pub deadline: Option<Instant>,
}

impl CellOracle for HashCells<'_> {
    fn query(&mut self, m: u32) -> Result<BoundedResult, OracleError> {
        let slice = self
            .hash
            .prefix(m as usize)
            .map_err(|e| OracleError::Backend(e.to_string()))?;
        let xors = slice.cell_constraints();
        log::trace!("querying level {m} ({} xors)", xors.len());
        self.backend
            .bounded_count(self.formula, &xors, self.thresh, self.deadline)
    }
}
