//! Quick invariant checks runnable from an installed binary.

use hashcount_core::generate::{random_kcnf, random_xors};
use hashcount_core::oracle::bounded_count;
use hashcount_core::planner::trinomial_median_error;
use hashcount_core::{
    classic_iter, compute_iter, count, count_exact, count_exact_with_xors, exact_median_error,
    make_round_config, CountMode, CountParams, Formula,
};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn iteration_table() -> Result<(), String> {
    let got: Vec<u64> = [0.3, 0.8, 1.5, 3.5, 6.0]
        .iter()
        .map(|&e| compute_iter(e, 0.001).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if got != [37, 19, 17, 7, 5] {
        return Err(format!("compute_iter gave {got:?}"));
    }
    let c = (classic_iter(0.1).unwrap(), classic_iter(0.001).unwrap());
    if c != (21, 117) {
        return Err(format!("classic_iter gave {c:?}"));
    }
    Ok(())
}

fn round_constants() -> Result<(), String> {
    let c = make_round_config(0.8).map_err(|e| e.to_string())?;
    if c.thresh != 72 || (c.pivot - 49.815).abs() > 1e-3 || (c.round_value - 35.224).abs() > 1e-3 {
        return Err(format!("{c:?}"));
    }
    Ok(())
}

fn median_error_decomposition() -> Result<(), String> {
    for t in (1..=31).step_by(2) {
        for &(pl, pu) in &[(0.157, 0.169), (0.36, 0.36), (0.023, 0.044)] {
            let a = exact_median_error(t, pl, pu).unwrap();
            let b = trinomial_median_error(t, pl, pu).unwrap();
            if (a - b).abs() > 1e-12 {
                return Err(format!("t={t}: {a} vs {b}"));
            }
        }
    }
    Ok(())
}

fn oracle_against_brute_force() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..30 {
        let n = rng.gen_range(2..=10u32);
        let f = random_kcnf(n, n as usize, 2, &mut rng);
        let xors = random_xors(n, 2, &mut rng);
        let exact = count_exact_with_xors(&f, &xors).map_err(|e| e.to_string())?;
        let got = bounded_count(&f, &xors, (1 << n) + 1).map_err(|e| e.to_string())?;
        if BigUint::from(got.count) != exact.0 {
            return Err(format!("n={n}: oracle {} vs exact {}", got.count, exact));
        }
    }
    Ok(())
}

fn small_counts() -> Result<(), String> {
    let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]).unwrap();
    let r = count(&f, &CountParams::new(0.8, 0.001, CountMode::Rounding, 0)).map_err(|e| e.to_string())?;
    if !r.exact || r.estimate.to_f64() != 3.0 || count_exact(&f).unwrap().0 != BigUint::from(3u32) {
        return Err("(x1 ∨ x2) is not counted as 3".into());
    }
    Ok(())
}

fn determinism() -> Result<(), String> {
    let f = Formula::new(12, vec![]).unwrap();
    let p = CountParams::new(0.8, 0.1, CountMode::Rounding, 9);
    let a = count(&f, &p).map_err(|e| e.to_string())?;
    let b = count(&f, &p).map_err(|e| e.to_string())?;
    if a != b {
        return Err("two runs with one seed differ".into());
    }
    Ok(())
}

/// Runs every check, printing one line each. True iff all pass.
pub fn run() -> bool {
    let checks: [(&str, fn() -> Result<(), String>); 6] = [
        ("iteration table", iteration_table),
        ("round constants", round_constants),
        ("median error decomposition", median_error_decomposition),
        ("oracle vs brute force", oracle_against_brute_force),
        ("small exact counts", small_counts),
        ("seeded determinism", determinism),
    ];
    let mut ok = true;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                ok = false;
                println!("FAIL {name}: {e}");
            }
        }
    }
    ok
}
