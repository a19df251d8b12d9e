//! SAT oracles and bounded model enumeration.
//!
//! [`bounded_count`] enumerates scope-projected models of `F ∧ xors` until
//! `thresh` models are found or the cell is exhausted. Each model found is
//! excluded by a blocking clause over the scope variables only, so models
//! that differ solely on non-scope or auxiliary variables are counted once.
//!
//! Enumeration stops at `thresh` rather than `thresh + 1`: callers only ask
//! whether a cell holds fewer than `thresh` models, and finding the
//! `thresh`-th model already answers that.

pub mod cdcl;
pub mod external;
mod xor;

pub use external::ExternalSolver;
pub use xor::{encode_xors_cnf, XorEncoding};

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Literal};
use crate::hashing::XorConstraint;
use cdcl::{SolveResult, Solver};

/// Environment variable naming an external solver executable.
pub const SOLVER_ENV: &str = "HASHCOUNT_SOLVER";

/// Outcome of a bounded enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundedResult {
    pub count: u64,
    /// True iff enumeration stopped because `count` reached the threshold.
    pub saturated: bool,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("threshold must be at least 1")]
    InvalidThreshold,
    #[error("deadline exceeded")]
    Timeout,
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error("I/O error talking to solver: {0}")]
    Io(#[from] std::io::Error),
}

/// Which SAT engine answers enumeration queries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SolverBackend {
    #[default]
    BuiltIn,
    External(ExternalSolver),
}

impl SolverBackend {
    /// External solver from [`SOLVER_ENV`] if set, else the built-in solver.
    pub fn from_env() -> Self {
        match std::env::var_os(SOLVER_ENV) {
            Some(path) if !path.is_empty() => {
                SolverBackend::External(ExternalSolver::new(PathBuf::from(path)))
            }
            _ => SolverBackend::BuiltIn,
        }
    }

    pub fn bounded_count(
        &self,
        formula: &Formula,
        xors: &[XorConstraint],
        thresh: u64,
        deadline: Option<Instant>,
    ) -> Result<BoundedResult, OracleError> {
        match self {
            SolverBackend::BuiltIn => {
                bounded_count_with(formula, xors, thresh, formula.num_vars() + 1, deadline)
            }
            SolverBackend::External(ext) => ext.bounded_count(formula, xors, thresh, deadline),
        }
    }
}

/// Bounded count with the built-in solver and no deadline.
pub fn bounded_count(
    formula: &Formula,
    xors: &[XorConstraint],
    thresh: u64,
) -> Result<BoundedResult, OracleError> {
    bounded_count_with(formula, xors, thresh, formula.num_vars() + 1, None)
}

/// Bounded count with the built-in solver, placing XOR auxiliaries from
/// `first_aux_var` on. `first_aux_var` must exceed every formula variable.
pub fn bounded_count_with(
    formula: &Formula,
    xors: &[XorConstraint],
    thresh: u64,
    first_aux_var: u32,
    deadline: Option<Instant>,
) -> Result<BoundedResult, OracleError> {
    if thresh == 0 {
        return Err(OracleError::InvalidThreshold);
    }
    let count = enumerate_models(formula, xors, thresh, first_aux_var, deadline, |_| {})?;
    Ok(BoundedResult {
        count,
        saturated: count == thresh,
    })
}

/// Loads `F ∧ xors` into a fresh built-in solver.
pub fn load_solver(formula: &Formula, xors: &[XorConstraint], first_aux_var: u32) -> Solver {
    assert!(first_aux_var > formula.num_vars());
    let mut solver = Solver::new();
    solver.ensure_vars(formula.num_vars());
    for c in formula.clauses() {
        solver.add_clause(c.literals());
    }
    let enc = encode_xors_cnf(xors, first_aux_var);
    for c in &enc.clauses {
        solver.add_clause(c.literals());
    }
    solver
}

/// Enumerates up to `limit` distinct scope-projected models with the
/// built-in solver, calling `visit` with each (values of the scope
/// variables, in scope order). Returns the number enumerated.
pub fn enumerate_models(
    formula: &Formula,
    xors: &[XorConstraint],
    limit: u64,
    first_aux_var: u32,
    deadline: Option<Instant>,
    mut visit: impl FnMut(&[bool]),
) -> Result<u64, OracleError> {
    let mut solver = load_solver(formula, xors, first_aux_var);
    let scope = formula.scope().variables();
    let mut projected = vec![false; scope.len()];
    let mut block = Vec::with_capacity(scope.len());
    let mut count = 0;
    while count < limit {
        match solver.solve(deadline) {
            SolveResult::Unsat => break,
            SolveResult::Interrupted => return Err(OracleError::Timeout),
            SolveResult::Sat => {}
        }
        count += 1;
        block.clear();
        for (slot, &v) in projected.iter_mut().zip(scope) {
            let value = solver.model_value(v);
            *slot = value;
            block.push(Literal::new(v, !value));
        }
        visit(&projected);
        if !solver.add_clause(&block) {
            break;
        }
    }
    Ok(count)
}

/// Solves `F ∧ xors` once with the built-in solver. Returns the model over
/// the formula's variables, or `None` if unsatisfiable.
pub fn solve_once(
    formula: &Formula,
    xors: &[XorConstraint],
    deadline: Option<Instant>,
) -> Result<Option<Vec<bool>>, OracleError> {
    let mut solver = load_solver(formula, xors, formula.num_vars() + 1);
    match solver.solve(deadline) {
        SolveResult::Sat => Ok(Some(solver.model()[..formula.num_vars() as usize].to_vec())),
        SolveResult::Unsat => Ok(None),
        SolveResult::Interrupted => Err(OracleError::Timeout),
    }
}
