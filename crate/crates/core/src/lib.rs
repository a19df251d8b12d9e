//! Hashing-based approximate model counting.
//!
//! A count is estimated by splitting the solution space into random cells
//! with XOR hashes, counting one small cell with a SAT oracle, and scaling
//! up. The median of independent rounds gives an (ε, δ) guarantee. Two
//! per-round estimators are provided: the classic raw-count estimator and
//! a rounding estimator that needs far fewer rounds for the same δ.
//!
//! ```
//! use hashcount_core::{count, CountMode, CountParams, Formula};
//!
//! let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
//! let r = count(&f, &CountParams::new(0.8, 0.001, CountMode::Rounding, 7)).unwrap();
//! assert!(r.exact);
//! assert_eq!(r.estimate.to_f64(), 3.0);
//! ```

pub mod counter;
pub mod estimate;
pub mod exact;
pub mod formula;
pub mod generate;
pub mod hashing;
pub mod oracle;
pub mod planner;
pub mod search;

pub use counter::{
    apply_rounding, approx_mc_core, count, count_with, find_median, make_round_config,
    round_mc_core, round_rng, CountError, CountOptions, CountParams, FinalCount, RoundConfig,
    RoundContext, RoundOutcome,
};
pub use estimate::Estimate;
pub use exact::{count_exact, count_exact_with_xors, ExactCount, ExactError};
pub use formula::{
    parse_dimacs, parse_extended_dimacs, serialize_dimacs, serialize_extended_dimacs, Clause,
    ExtendedDimacs, Formula, FormulaError, Literal, ParseError, ParseErrorKind, ProjectionScope,
};
pub use hashing::{XorConstraint, XorHash};
pub use oracle::{bounded_count, BoundedResult, ExternalSolver, OracleError, SolverBackend};
pub use planner::{
    classic_iter, compute_iter, emit_error_curves, eta, exact_median_error, plan,
    trinomial_median_error, ClassicIterRule,
    CountMode, PlanError, RunPlan,
};
pub use search::{log_sat_search, CellOracle, SearchError, SearchOutcome};
