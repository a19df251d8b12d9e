//! CNF formulas with optional projection scopes.
//!
//! A [`Formula`] owns its clauses and a [`ProjectionScope`]. Models of a
//! projected formula are assignments to the scope variables that extend to
//! a full satisfying assignment. Variables that occur in no clause still
//! count toward `num_vars`, so every free in-scope variable doubles the
//! projected count.

mod dimacs;

pub use dimacs::{
    parse_dimacs, parse_extended_dimacs, serialize_dimacs, serialize_extended_dimacs,
    ExtendedDimacs, ParseError, ParseErrorKind,
};

use std::collections::HashSet;
use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// A literal over a 1-based variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: u32,
    positive: bool,
}

impl Literal {
    /// Panics if `var` is zero.
    pub fn new(var: u32, positive: bool) -> Self {
        assert!(var >= 1, "variable indices are 1-based");
        Literal { var, positive }
    }

    pub fn positive(var: u32) -> Self {
        Literal::new(var, true)
    }

    pub fn negative(var: u32) -> Self {
        Literal::new(var, false)
    }

    /// Converts a signed DIMACS integer. Returns `None` for 0 and for
    /// magnitudes that do not fit a variable index.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        let var = u32::try_from(value.unsigned_abs()).ok()?;
        Some(Literal::new(var, value > 0))
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    /// Truth value of this literal when its variable takes `value`.
    pub fn eval(self, value: bool) -> bool {
        value == self.positive
    }
}

impl Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals. The empty clause is representable and is
/// unsatisfiable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    /// Builds a clause from signed DIMACS integers. Panics on 0.
    pub fn from_dimacs(values: &[i64]) -> Self {
        Clause::new(
            values
                .iter()
                .map(|&v| Literal::from_dimacs(v).expect("0 is not a literal"))
                .collect(),
        )
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_tautology(&self) -> bool {
        let set: HashSet<Literal> = self.literals.iter().copied().collect();
        self.literals.iter().any(|&l| set.contains(&!l))
    }

    /// Removes repeated literals, keeping first occurrences in order.
    /// Returns `None` when the clause contains both polarities of a variable.
    pub fn normalized(&self) -> Option<Clause> {
        if self.is_tautology() {
            return None;
        }
        let mut seen = HashSet::with_capacity(self.literals.len());
        let literals = self
            .literals
            .iter()
            .copied()
            .filter(|l| seen.insert(*l))
            .collect();
        Some(Clause { literals })
    }

    pub fn max_var(&self) -> u32 {
        self.literals.iter().map(|l| l.var).max().unwrap_or(0)
    }

    /// `assignment[i]` is the value of variable `i + 1`.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.literals
            .iter()
            .any(|l| l.eval(assignment[l.var as usize - 1]))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.literals {
            write!(f, "{l} ")?;
        }
        write!(f, "0")
    }
}

/// The set of variables models are projected onto.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProjectionScope {
    variables: Vec<u32>,
    is_full: bool,
}

impl ProjectionScope {
    pub fn full(num_vars: u32) -> Self {
        ProjectionScope {
            variables: (1..=num_vars).collect(),
            is_full: true,
        }
    }

    /// Sorted, deduplicated; `is_full` stays false even if every variable
    /// is listed.
    pub fn from_vars(vars: impl IntoIterator<Item = u32>) -> Self {
        let mut variables: Vec<u32> = vars.into_iter().collect();
        variables.sort_unstable();
        variables.dedup();
        ProjectionScope {
            variables,
            is_full: false,
        }
    }

    pub fn variables(&self) -> &[u32] {
        &self.variables
    }

    pub fn is_full(&self) -> bool {
        self.is_full
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn contains(&self, var: u32) -> bool {
        self.variables.binary_search(&var).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("variable {var} out of range (formula has {num_vars} variables)")]
    VariableOutOfRange { var: u32, num_vars: u32 },
    #[error("projection scope is empty")]
    EmptyScope,
}

/// A CNF formula over variables `1..=num_vars`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    num_vars: u32,
    clauses: Vec<Clause>,
    scope: ProjectionScope,
}

impl Formula {
    /// Creates a formula with a full projection scope.
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        for c in &clauses {
            let var = c.max_var();
            if var > num_vars {
                return Err(FormulaError::VariableOutOfRange { var, num_vars });
            }
        }
        Ok(Formula {
            num_vars,
            clauses,
            scope: ProjectionScope::full(num_vars),
        })
    }

    /// Convenience constructor from signed DIMACS clause lists.
    pub fn from_dimacs_clauses(num_vars: u32, clauses: &[&[i64]]) -> Result<Self, FormulaError> {
        Formula::new(
            num_vars,
            clauses.iter().map(|c| Clause::from_dimacs(c)).collect(),
        )
    }

    /// Restricts the projection scope.
    pub fn with_scope(mut self, vars: impl IntoIterator<Item = u32>) -> Result<Self, FormulaError> {
        let scope = ProjectionScope::from_vars(vars);
        if scope.is_empty() {
            return Err(FormulaError::EmptyScope);
        }
        let bad = scope
            .variables
            .iter()
            .copied()
            .find(|&v| v == 0 || v > self.num_vars);
        if let Some(var) = bad {
            return Err(FormulaError::VariableOutOfRange {
                var,
                num_vars: self.num_vars,
            });
        }
        self.scope = scope;
        Ok(self)
    }

    pub(crate) fn with_scope_unchecked(mut self, scope: ProjectionScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn scope(&self) -> &ProjectionScope {
        &self.scope
    }

    /// Appends a clause. Panics if it mentions a variable beyond `num_vars`.
    pub fn add_clause(&mut self, clause: Clause) {
        assert!(clause.max_var() <= self.num_vars);
        self.clauses.push(clause);
    }

    /// Deduplicates literals and drops tautological clauses. Returns the
    /// number of clauses dropped.
    pub fn normalize(&mut self) -> usize {
        let before = self.clauses.len();
        self.clauses = self.clauses.iter().filter_map(Clause::normalized).collect();
        before - self.clauses.len()
    }

    pub fn normalized(&self) -> Formula {
        let mut f = self.clone();
        f.normalize();
        f
    }

    /// `assignment[i]` is the value of variable `i + 1`.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.is_satisfied_by(assignment))
    }
}
