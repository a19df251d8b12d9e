//! Random instances for tests and benchmarks.

use rand::seq::index::sample;
use rand::Rng;

use crate::formula::{Clause, Formula, Literal};
use crate::hashing::XorConstraint;

/// Uniform random k-CNF: each clause picks `k` distinct variables and
/// independent signs. Panics if `k` is 0 or exceeds `num_vars`.
pub fn random_kcnf(num_vars: u32, num_clauses: usize, k: usize, rng: &mut impl Rng) -> Formula {
    assert!(k >= 1 && k <= num_vars as usize, "clause width must lie in [1, num_vars]");
    let clauses = (0..num_clauses)
        .map(|_| {
            let lits = sample(rng, num_vars as usize, k)
                .into_iter()
                .map(|i| Literal::new(i as u32 + 1, rng.gen()))
                .collect();
            Clause::new(lits)
        })
        .collect();
    Formula::new(num_vars, clauses).expect("variables are in range")
}

/// `count` XOR constraints, each containing every variable of `1..=num_vars`
/// with probability 1/2.
pub fn random_xors(num_vars: u32, count: usize, rng: &mut impl Rng) -> Vec<XorConstraint> {
    (0..count)
        .map(|_| {
            let vars: Vec<u32> = (1..=num_vars).filter(|_| rng.gen()).collect();
            XorConstraint::new(vars, rng.gen())
        })
        .collect()
}
