//! Blasting XOR constraints into CNF.

use crate::formula::{Clause, Literal};
use crate::hashing::XorConstraint;

/// Clauses for a set of XOR constraints plus the auxiliary variables they
/// introduced (`first_aux_var .. first_aux_var + num_aux`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorEncoding {
    pub clauses: Vec<Clause>,
    pub first_aux_var: u32,
    pub num_aux: u32,
}

/// Direct CNF of a parity over at most three variables: one clause per
/// assignment of the wrong parity, forbidding it.
fn expand_small(vars: &[u32], rhs: bool, out: &mut Vec<Clause>) {
    debug_assert!(vars.len() <= 3);
    let w = vars.len();
    for bits in 0u32..(1 << w) {
        let parity = bits.count_ones() % 2 == 1;
        if parity == rhs {
            continue;
        }
        let lits = (0..w)
            .map(|i| Literal::new(vars[i], (bits >> i) & 1 == 0))
            .collect();
        out.push(Clause::new(lits));
    }
}

/// Encodes each XOR as a chain of ternary XORs. A constraint of width
/// `w > 3` introduces `w - 3` auxiliary variables `a_k = a_{k-1} ⊕ x_{k+1}`
/// (with `a_0 = x_1`) and ends in a ternary constraint carrying the
/// right-hand side; widths up to 3 are expanded directly into 4, 2 or 1
/// clauses. The empty XOR yields the empty clause when `rhs` is 1 and
/// nothing otherwise.
pub fn encode_xors_cnf(xors: &[XorConstraint], first_aux_var: u32) -> XorEncoding {
    let mut clauses = Vec::new();
    let mut next = first_aux_var;
    for x in xors {
        let vars = x.variables();
        if vars.len() <= 3 {
            expand_small(vars, x.rhs(), &mut clauses);
            continue;
        }
        let mut carry = vars[0];
        for &v in &vars[1..vars.len() - 2] {
            let aux = next;
            next += 1;
            expand_small(&[carry, v, aux], false, &mut clauses);
            carry = aux;
        }
        let n = vars.len();
        expand_small(&[carry, vars[n - 2], vars[n - 1]], x.rhs(), &mut clauses);
    }
    XorEncoding {
        clauses,
        first_aux_var,
        num_aux: next - first_aux_var,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn satisfies(clauses: &[Clause], assignment: &[bool]) -> bool {
        clauses.iter().all(|c| c.is_satisfied_by(assignment))
    }

    #[test]
    fn binary_xor_expansion() {
        let enc = encode_xors_cnf(&[XorConstraint::new([1, 2], true)], 3);
        assert_eq!(
            enc.clauses,
            vec![Clause::from_dimacs(&[1, 2]), Clause::from_dimacs(&[-1, -2])]
        );
        assert_eq!(enc.num_aux, 0);
    }

    #[test]
    fn degenerate_xors() {
        let unsat = encode_xors_cnf(&[XorConstraint::new(Vec::<u32>::new(), true)], 1);
        assert_eq!(unsat.clauses, vec![Clause::new(vec![])]);
        let taut = encode_xors_cnf(&[XorConstraint::new(Vec::<u32>::new(), false)], 1);
        assert!(taut.clauses.is_empty());
        let unit = encode_xors_cnf(&[XorConstraint::new([4], false)], 5);
        assert_eq!(unit.clauses, vec![Clause::from_dimacs(&[-4])]);
    }

    #[test]
    fn ternary_has_four_clauses() {
        let enc = encode_xors_cnf(&[XorConstraint::new([1, 2, 3], false)], 4);
        assert_eq!(enc.clauses.len(), 4);
        assert_eq!(enc.num_aux, 0);
    }

    #[test]
    fn wide_xor_projects_to_parity() {
        // For every assignment of the original variables, exactly one
        // extension over the auxiliaries satisfies the encoding iff the
        // parity matches.
        for w in 4..=7u32 {
            for rhs in [false, true] {
                let x = XorConstraint::new(1..=w, rhs);
                let enc = encode_xors_cnf(&[x.clone()], w + 1);
                assert_eq!(enc.num_aux, w - 3);
                let total = w + enc.num_aux;
                for bits in 0u32..(1 << w) {
                    let base: Vec<bool> = (0..w).map(|i| (bits >> i) & 1 == 1).collect();
                    let extensions = (0u32..(1 << enc.num_aux))
                        .filter(|aux| {
                            let mut a = base.clone();
                            a.extend((0..enc.num_aux).map(|i| (aux >> i) & 1 == 1));
                            assert_eq!(a.len(), total as usize);
                            satisfies(&enc.clauses, &a)
                        })
                        .count();
                    let expected = usize::from(x.is_satisfied_by(&base));
                    assert_eq!(extensions, expected, "w={w} rhs={rhs} bits={bits:b}");
                }
            }
        }
    }
}
