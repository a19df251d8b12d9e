//! Enumeration through an external solver process.
//!
//! Each enumeration step writes the formula, its XOR constraints and all
//! blocking clauses so far as extended DIMACS to a temporary file, runs the
//! solver on it and reads the SAT-competition style answer (`s SATISFIABLE`
//! / `s UNSATISFIABLE` and `v` lines). Scope variables the solver leaves
//! out of its `v` lines are treated as unconstrained: every completion of
//! them is a model, and the blocking clause mentions only the reported
//! variables.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{BoundedResult, OracleError};
use crate::formula::{serialize_extended_dimacs, Clause, Formula, Literal};
use crate::hashing::XorConstraint;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: PathBuf,
    /// Arguments placed before the input file path.
    pub args: Vec<String>,
}

/// A parsed solver answer. `assignment[i]` is variable `i + 1`, `None`
/// when the solver did not report it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat(Vec<Option<bool>>),
    Unsat,
}

/// Parses solver stdout. Values for variables beyond `num_vars` are ignored.
pub fn parse_solver_output(output: &str, num_vars: u32) -> Result<SolverAnswer, OracleError> {
    let mut status: Option<bool> = None;
    let mut assignment = vec![None; num_vars as usize];
    for line in output.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = match rest.trim() {
                "SATISFIABLE" => Some(true),
                "UNSATISFIABLE" => Some(false),
                other => return Err(OracleError::Backend(format!("solver answered `{other}`"))),
            };
        } else if let Some(rest) = line.strip_prefix('v') {
            for tok in rest.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| OracleError::Backend(format!("bad value token `{tok}`")))?;
                if v == 0 {
                    break;
                }
                let var = v.unsigned_abs();
                if var <= num_vars as u64 {
                    assignment[var as usize - 1] = Some(v > 0);
                }
            }
        }
    }
    match status {
        Some(true) => Ok(SolverAnswer::Sat(assignment)),
        Some(false) => Ok(SolverAnswer::Unsat),
        None => Err(OracleError::Backend("no `s` line in solver output".into())),
    }
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalSolver {
            program: program.into(),
            args: Vec::new(),
        }
    }

    pub fn with_args(mut self, args: impl IntoIterator<Item = String>) -> Self {
        self.args = args.into_iter().collect();
        self
    }

    /// Runs the solver once on `F ∧ xors`. The process is killed if the
    /// deadline passes.
    pub fn solve(
        &self,
        formula: &Formula,
        xors: &[XorConstraint],
        deadline: Option<Instant>,
    ) -> Result<SolverAnswer, OracleError> {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(OracleError::Timeout);
        }
        let mut file = tempfile::Builder::new()
            .prefix("hashcount-")
            .suffix(".cnf")
            .tempfile()?;
        file.write_all(&serialize_extended_dimacs(formula, xors))?;
        file.flush()?;

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(file.path())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| {
                OracleError::Backend(format!("cannot start {}: {e}", self.program.display()))
            })?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });

        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                return Err(OracleError::Timeout);
            }
            std::thread::sleep(Duration::from_micros(200));
        };
        let output = reader
            .join()
            .map_err(|_| OracleError::Backend("stdout reader panicked".into()))??;
        // Competition solvers exit with 10 (SAT) or 20 (UNSAT).
        if !status.success() && !matches!(status.code(), Some(10) | Some(20)) {
            return Err(OracleError::Backend(format!("solver exited with {status}")));
        }
        parse_solver_output(&output, formula.num_vars())
    }

    pub fn bounded_count(
        &self,
        formula: &Formula,
        xors: &[XorConstraint],
        thresh: u64,
        deadline: Option<Instant>,
    ) -> Result<BoundedResult, OracleError> {
        if thresh == 0 {
            return Err(OracleError::InvalidThreshold);
        }
        let mut working = formula.clone();
        let mut count = 0u64;
        while count < thresh {
            let assignment = match self.solve(&working, xors, deadline)? {
                SolverAnswer::Unsat => break,
                SolverAnswer::Sat(a) => a,
            };
            let mut block = Vec::new();
            let mut free = 0u32;
            for &v in formula.scope().variables() {
                match assignment[v as usize - 1] {
                    Some(value) => block.push(Literal::new(v, !value)),
                    None => free += 1,
                }
            }
            let completions = 1u64.checked_shl(free).unwrap_or(u64::MAX);
            count = count.saturating_add(completions).min(thresh);
            if block.is_empty() {
                break;
            }
            working.add_clause(Clause::new(block));
        }
        Ok(BoundedResult {
            count,
            saturated: count == thresh,
        })
    }
}
