//! Brute-force projected model counting, used as ground truth.
//!
//! Formulas with at most `limit` variables are counted by a bit-parallel
//! truth table (64 assignments per machine word). Larger formulas with a
//! small scope are counted by enumerating scope assignments and deciding
//! each extension with a plain backtracking search. Neither path shares
//! code with the CDCL oracle.

use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::formula::Formula;
use crate::hashing::XorConstraint;

pub const DEFAULT_SCOPE_LIMIT: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("projection scope of {scope} variables exceeds the brute-force limit of {limit}")]
    ScopeTooLarge { scope: usize, limit: usize },
}

/// The number of scope-projected models.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactCount(pub BigUint);

impl ExactCount {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Display for ExactCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn count_exact(formula: &Formula) -> Result<ExactCount, ExactError> {
    ExactCounter::default().count(formula, &[])
}

pub fn count_exact_with_xors(
    formula: &Formula,
    xors: &[XorConstraint],
) -> Result<ExactCount, ExactError> {
    ExactCounter::default().count(formula, xors)
}

#[derive(Debug, Clone, Copy)]
pub struct ExactCounter {
    pub limit: usize,
}

impl Default for ExactCounter {
    fn default() -> Self {
        ExactCounter {
            limit: DEFAULT_SCOPE_LIMIT,
        }
    }
}

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl ExactCounter {
    pub fn with_limit(limit: usize) -> Self {
        ExactCounter { limit }
    }

    pub fn count(&self, formula: &Formula, xors: &[XorConstraint]) -> Result<ExactCount, ExactError> {
        let scope = formula.scope().len();
        if scope > self.limit {
            return Err(ExactError::ScopeTooLarge {
                scope,
                limit: self.limit,
            });
        }
        let value = if formula.num_vars() as usize <= self.limit {
            truth_table(formula, xors)
        } else {
            scope_enumeration(formula, xors)
        };
        Ok(ExactCount(BigUint::from(value)))
    }
}

fn truth_table(formula: &Formula, xors: &[XorConstraint]) -> u64 {
    let n = formula.num_vars() as usize;
    let total: u64 = 1 << n;
    let blocks = total.div_ceil(64);
    let valid_lanes = if total >= 64 { u64::MAX } else { (1u64 << total) - 1 };
    let full_scope = formula.scope().is_full()
        || formula.scope().len() == n;
    let scope = formula.scope().variables();
    let mut seen = if full_scope {
        Vec::new()
    } else {
        vec![0u64; (1usize << scope.len()).div_ceil(64)]
    };
    let mut count = 0u64;
    let mut var_mask = vec![0u64; n];

    for block in 0..blocks {
        for (i, mask) in var_mask.iter_mut().enumerate() {
            *mask = if i < 6 {
                LANE_PATTERNS[i]
            } else if (block >> (i - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
        }
        let mut sat = valid_lanes;
        for c in formula.clauses() {
            let mut any = 0u64;
            for l in c.literals() {
                let m = var_mask[l.var() as usize - 1];
                any |= if l.is_positive() { m } else { !m };
            }
            sat &= any;
            if sat == 0 {
                break;
            }
        }
        for x in xors {
            if sat == 0 {
                break;
            }
            let parity = x
                .variables()
                .iter()
                .fold(0u64, |acc, &v| acc ^ var_mask[v as usize - 1]);
            sat &= if x.rhs() { parity } else { !parity };
        }
        if full_scope {
            count += sat.count_ones() as u64;
            continue;
        }
        while sat != 0 {
            let lane = sat.trailing_zeros() as u64;
            sat &= sat - 1;
            let assignment = block * 64 + lane;
            let mut key = 0usize;
            for (j, &v) in scope.iter().enumerate() {
                key |= (((assignment >> (v - 1)) & 1) as usize) << j;
            }
            let (w, b) = (key / 64, key % 64);
            if seen[w] >> b & 1 == 0 {
                seen[w] |= 1 << b;
                count += 1;
            }
        }
    }
    count
}

/// Whether the partial assignment extends to a model of every clause and
/// XOR. Unit propagation plus chronological backtracking.
fn extendable(formula: &Formula, xors: &[XorConstraint], assignment: &mut Vec<Option<bool>>) -> bool {
    loop {
        let mut changed = false;
        for c in formula.clauses() {
            let mut unassigned = None;
            let mut open = 0;
            let mut satisfied = false;
            for l in c.literals() {
                match assignment[l.var() as usize - 1] {
                    Some(v) if l.eval(v) => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some(*l);
                    }
                }
            }
            if satisfied {
                continue;
            }
            match (open, unassigned) {
                (0, _) => return false,
                (1, Some(l)) => {
                    assignment[l.var() as usize - 1] = Some(l.is_positive());
                    changed = true;
                }
                _ => {}
            }
        }
        for x in xors {
            let mut parity = false;
            let mut open = None;
            let mut n_open = 0;
            for &v in x.variables() {
                match assignment[v as usize - 1] {
                    Some(b) => parity ^= b,
                    None => {
                        n_open += 1;
                        open = Some(v);
                    }
                }
            }
            match (n_open, open) {
                (0, _) if parity != x.rhs() => return false,
                (1, Some(v)) => {
                    assignment[v as usize - 1] = Some(parity ^ x.rhs());
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let Some(branch) = assignment.iter().position(Option::is_none) else {
        return formula.clauses().iter().all(|c| {
            c.literals()
                .iter()
                .any(|l| assignment[l.var() as usize - 1] == Some(l.is_positive()))
        });
    };
    for value in [false, true] {
        let mut trial = assignment.clone();
        trial[branch] = Some(value);
        if extendable(formula, xors, &mut trial) {
            return true;
        }
    }
    false
}

fn scope_enumeration(formula: &Formula, xors: &[XorConstraint]) -> u64 {
    let scope = formula.scope().variables();
    let mut count = 0;
    for bits in 0u64..(1 << scope.len()) {
        let mut assignment = vec![None; formula.num_vars() as usize];
        for (j, &v) in scope.iter().enumerate() {
            assignment[v as usize - 1] = Some((bits >> j) & 1 == 1);
        }
        if extendable(formula, xors, &mut assignment) {
            count += 1;
        }
    }
    count
}
