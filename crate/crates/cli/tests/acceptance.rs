//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use hashcount_bench::observed_error;
use hashcount_core::counter::round_rng;
use hashcount_core::generate::{random_kcnf, random_xors};
use hashcount_core::planner::{trinomial_median_error, CurveRow};
use hashcount_core::{
    classic_iter, compute_iter, count, count_exact, count_exact_with_xors, emit_error_curves, eta,
    exact_median_error, make_round_config, round_mc_core, CountMode, CountParams,
    ExternalSolver, Formula, RoundContext, SolverBackend, XorHash,
};
use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn to_u64(x: &BigUint) -> u64 {
    u64::try_from(x.clone()).expect("count fits in u64")
}

// 1 ------------------------------------------------------------------------

fn iteration_tables() -> Outcome {
    let eps = [0.3, 0.8, 1.5, 3.5, 6.0];
    let got: Vec<u64> = eps.iter().map(|&e| compute_iter(e, 0.001).unwrap()).collect();
    ensure(got == [37, 19, 17, 7, 5], || format!("compute_iter at δ=0.001: {got:?}"))?;
    let at_01 = compute_iter(0.8, 0.1).unwrap();
    ensure(at_01 == 5, || format!("compute_iter(0.8, 0.1) = {at_01}"))?;
    let classic = (classic_iter(0.1).unwrap(), classic_iter(0.001).unwrap());
    ensure(classic == (21, 117), || format!("classic_iter = {classic:?}"))?;
    Ok(format!("compute_iter {got:?}, (0.8,0.1)→{at_01}, classic {classic:?}"))
}

// 2 ------------------------------------------------------------------------

fn median_error_decomposition() -> Outcome {
    let pl = [0.023, 0.085, 0.157, 0.262, 0.36];
    let pu = [0.044, 0.1, 0.169, 0.3, 0.36];
    let mut worst = 0.0f64;
    let mut checked = 0;
    for t in (1..=51u64).step_by(2) {
        for &a in &pl {
            for &b in &pu {
                let lemma = exact_median_error(t, a, b).unwrap();
                let dp = trinomial_median_error(t, a, b).unwrap();
                worst = worst.max((lemma - dp).abs());
                ensure((lemma - dp).abs() <= 1e-12, || {
                    format!("t={t} pL={a} pU={b}: {lemma:e} vs DP {dp:e}")
                })?;
                if t >= 3 {
                    let union = eta(t, t.div_ceil(2), a + b).unwrap();
                    ensure(dp < union, || format!("not strict at t={t} pL={a} pU={b}"))?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases, max |diff| = {worst:.2e}, strictness holds"))
}

// 3 ------------------------------------------------------------------------

fn bits(value: u32, len: usize) -> Vec<bool> {
    (0..len).map(|i| (value >> i) & 1 == 1).collect()
}

fn solutions(f: &Formula) -> Vec<Vec<bool>> {
    let n = f.num_vars() as usize;
    (0u32..1 << n)
        .map(|x| bits(x, n))
        .filter(|x| f.is_satisfied_by(x))
        .collect()
}

fn hash_family() -> Outcome {
    let n = 3usize;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let hashes: Vec<XorHash> = (0u32..1 << (n * n + 2 * n))
        .map(|code| {
            let matrix: Vec<Vec<bool>> = (0..n).map(|r| bits(code >> (r * n), n)).collect();
            XorHash::from_bits(&matrix, &bits(code >> (n * n), n), &bits(code >> (n * n + n), n))
        })
        .collect();
    for i in 0..20 {
        let f = random_kcnf(3, rng.gen_range(0..5), rng.gen_range(1..=3), &mut rng);
        let sols = solutions(&f);
        for m in 1..=n {
            let (mut sum, mut sum_sq) = (BigInt::from(0), BigInt::from(0));
            for h in &hashes {
                let cell = h.prefix(m).unwrap();
                let c = sols.iter().filter(|x| cell.contains(x)).count() as i64;
                sum += c;
                sum_sq += c * c;
            }
            let total = BigInt::from(hashes.len());
            // mean = sum/total must equal |sol|/2^m.
            ensure(&sum * (1i64 << m) == BigInt::from(sols.len()) * &total, || {
                format!("formula {i} m={m}: mean {sum}/{total} vs {}/2^{m}", sols.len())
            })?;
            // variance ≤ mean  ⇔  total·sum_sq − sum² ≤ total·sum
            ensure(&total * &sum_sq - &sum * &sum <= &total * &sum, || {
                format!("formula {i} m={m}: variance exceeds mean")
            })?;
        }
    }
    let mut prefix_checks = 0;
    for n in 1..=10u32 {
        for _ in 0..10 {
            let f = random_kcnf(n, n as usize, n.min(3) as usize, &mut rng);
            let sols = solutions(&f);
            let h = XorHash::sample(n as usize, &mut rng).unwrap();
            for m in 2..=n as usize {
                let outer = h.prefix(m - 1).unwrap();
                let inner = h.prefix(m).unwrap();
                ensure(sols.iter().all(|x| !inner.contains(x) || outer.contains(x)), || {
                    format!("prefix property fails at n={n} m={m}")
                })?;
                prefix_checks += 1;
            }
        }
    }
    Ok(format!(
        "20 formulas × 3 levels × {} hashes exact; {prefix_checks} prefix checks",
        hashes.len()
    ))
}

// 4 ------------------------------------------------------------------------

fn oracle_equivalence() -> Outcome {
    let external = SolverBackend::External(ExternalSolver::new(env!("CARGO_BIN_EXE_hashcount-sat")));
    let builtin = SolverBackend::BuiltIn;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total_models = 0u64;
    for i in 0..200 {
        let n = rng.gen_range(1..=12u32);
        let k = rng.gen_range(1..=n.min(3)) as usize;
        let ratio = rng.gen_range(0.5..5.0);
        let f = random_kcnf(n, (ratio * n as f64) as usize, k, &mut rng);
        let f = if rng.gen_bool(0.25) {
            let scope: Vec<u32> = (1..=n).filter(|_| rng.gen_bool(0.6)).collect();
            if scope.is_empty() { f } else { f.with_scope(scope).unwrap() }
        } else {
            f
        };
        let xors = random_xors(n, rng.gen_range(0..=3), &mut rng);
        let exact = to_u64(&count_exact_with_xors(&f, &xors).unwrap().0);
        total_models += exact;
        let thresh = (1u64 << n) + 1;
        for (name, backend) in [("built-in", &builtin), ("external", &external)] {
            let r = backend
                .bounded_count(&f, &xors, thresh, None)
                .map_err(|e| format!("pair {i} ({name}): {e}"))?;
            ensure(r.count == exact && !r.saturated, || {
                format!("pair {i} ({name}): {} vs brute force {exact}", r.count)
            })?;
        }
    }
    Ok(format!("200 pairs on both backends ({total_models} models in total)"))
}

// 5 and 8 ------------------------------------------------------------------

struct Instance {
    formula: Formula,
    exact: BigUint,
}

/// 30 random formulas with n ≤ 20 whose counts exceed the base-case
/// threshold; every fifth is projected onto a random scope.
fn pac_instances() -> Vec<Instance> {
    let thresh = make_round_config(0.8).unwrap().thresh;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut out = Vec::new();
    while out.len() < 30 {
        let n = rng.gen_range(10..=20u32);
        let ratio = rng.gen_range(1.0..4.2);
        let mut f = random_kcnf(n, (ratio * n as f64) as usize, 3, &mut rng);
        if out.len() % 5 == 4 {
            let scope: Vec<u32> = (1..=n).filter(|_| rng.gen_bool(0.7)).collect();
            if scope.is_empty() {
                continue;
            }
            f = f.with_scope(scope).unwrap();
        }
        let exact = count_exact(&f).unwrap().0;
        if exact >= BigUint::from(thresh) {
            out.push(Instance { formula: f, exact });
        }
    }
    out
}

fn pac_guarantee(instances: &[Instance]) -> Outcome {
    let runs = 200;
    let limit = 57;
    let mut worst = 0;
    for (i, inst) in instances.iter().enumerate() {
        let e = to_u64(&inst.exact) as f64;
        let mut violations = 0;
        for run in 0..runs {
            let seed = (i as u64) << 32 | run;
            let r = count(&inst.formula, &CountParams::new(0.8, 0.2, CountMode::Rounding, seed))
                .map_err(|err| format!("formula {i} run {run}: {err}"))?;
            let v = r.estimate.to_f64();
            if v < e / 1.8 || v > 1.8 * e {
                violations += 1;
            }
        }
        worst = worst.max(violations);
        ensure(violations <= limit, || {
            format!("formula {i} (|sol|={e}): {violations}/{runs} outside [E/1.8, 1.8E]")
        })?;
    }
    Ok(format!("30 formulas × {runs} runs, worst violation count {worst} (limit {limit})"))
}

fn observed_error_quality(instances: &[Instance]) -> Outcome {
    let mut errors = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let r = count(&inst.formula, &CountParams::new(0.8, 0.001, CountMode::Rounding, 800 + i as u64))
            .map_err(|e| format!("formula {i}: {e}"))?;
        errors.push(observed_error(&r.estimate, &inst.exact).map_err(|e| e.to_string())?);
    }
    errors.sort_by(f64::total_cmp);
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let median = (errors[14] + errors[15]) / 2.0;
    ensure(mean <= 0.3 && median <= 0.15, || {
        format!("mean {mean:.4} (≤ 0.3), median {median:.4} (≤ 0.15)")
    })?;
    Ok(format!("mean {mean:.4}, median {median:.4}, max {:.4}", errors[29]))
}

// 6 ------------------------------------------------------------------------

fn lemma_bounds() -> Outcome {
    let cfg = make_round_config(0.8).unwrap();
    let rounds = 2000u64;
    let sigma = |p: f64| 3.0 * (p * (1.0 - p) / rounds as f64).sqrt();
    let (bound_l, bound_u) = (0.157 + sigma(0.157), 0.169 + sigma(0.169));
    let backend = SolverBackend::BuiltIn;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut details = Vec::new();
    let mut made = 0;
    while made < 5 {
        let n = 12 + 2 * made;
        let f = random_kcnf(n, (2.0 * n as f64) as usize, 3, &mut rng);
        let exact = to_u64(&count_exact(&f).unwrap().0);
        if exact < cfg.thresh {
            continue;
        }
        made += 1;
        let ctx = RoundContext::new(&f, &backend);
        let (mut low, mut high) = (0u64, 0u64);
        for round in 0..rounds {
            let out = round_mc_core(&ctx, &cfg, &mut round_rng(made as u64, round), None)
                .map_err(|e| e.to_string())?;
            let v = out.estimate.to_f64();
            let e = exact as f64;
            if v < e / 1.8 {
                low += 1;
            }
            if v > 1.8 * e {
                high += 1;
            }
        }
        let (fl, fu) = (low as f64 / rounds as f64, high as f64 / rounds as f64);
        ensure(fl <= bound_l && fu <= bound_u, || {
            format!("n={n} |sol|={exact}: freq(L)={fl:.4} (≤ {bound_l:.4}), freq(U)={fu:.4} (≤ {bound_u:.4})")
        })?;
        details.push(format!("{fl:.3}/{fu:.3}"));
    }
    Ok(format!(
        "freq(L)/freq(U) per formula: {} (bounds {bound_l:.4}/{bound_u:.4})",
        details.join(", ")
    ))
}

// 7 ------------------------------------------------------------------------

fn repetition_speedup() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut t_round, mut t_classic) = (0.0, 0.0);
    let mut made = 0;
    while made < 10 {
        let n = 30 + made;
        let f = random_kcnf(n, (3.0 * n as f64) as usize, 3, &mut rng);
        let seed = 70 + made as u64;
        let start = Instant::now();
        let r = count(&f, &CountParams::new(0.8, 0.001, CountMode::Rounding, seed)).map_err(|e| e.to_string())?;
        let mid = Instant::now();
        let c = count(&f, &CountParams::new(0.8, 0.001, CountMode::Classic, seed)).map_err(|e| e.to_string())?;
        let end = Instant::now();
        if r.exact {
            continue;
        }
        made += 1;
        ensure(r.rounds() == 19 && c.rounds() == 117, || {
            format!("n={n}: {} rounding rounds, {} classic rounds", r.rounds(), c.rounds())
        })?;
        t_round += (mid - start).as_secs_f64();
        t_classic += (end - mid).as_secs_f64();
    }
    let ratio = t_classic / t_round;
    ensure(ratio >= 3.0, || format!("wall-clock ratio {ratio:.2} < 3"))?;
    Ok(format!(
        "19 vs 117 rounds on 10 instances; wall clock {t_round:.2}s vs {t_classic:.2}s (ratio {ratio:.2})"
    ))
}

// 9 ------------------------------------------------------------------------

fn error_curves() -> Outcome {
    let rows = emit_error_curves(0.8, 201).map_err(|e| e.to_string())?;
    let first = |f: fn(&CurveRow) -> f64| rows.iter().find(|r| f(r) <= 1e-3).map(|r| r.t);
    let (round, classic) = (first(|r| r.round_bound), first(|r| r.classic_bound));
    ensure(round == Some(19) && classic == Some(117), || {
        format!("crossings rounding {round:?}, classic {classic:?}")
    })?;
    Ok("crosses 1e-3 at t=19 (rounding) and t=117 (classic)".into())
}

fn main() -> ExitCode {
    let instances = pac_instances();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("iteration tables", Box::new(iteration_tables)),
        ("median error decomposition", Box::new(median_error_decomposition)),
        ("hash family exactness", Box::new(hash_family)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("end-to-end PAC guarantee", Box::new(|| pac_guarantee(&instances))),
        ("per-round error frequencies", Box::new(lemma_bounds)),
        ("repetition-count speedup", Box::new(repetition_speedup)),
        ("observed error quality", Box::new(|| observed_error_quality(&instances))),
        ("error curve crossings", Box::new(error_curves)),
    ];
    let mut failed = HashSet::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed.insert(i + 1);
                println!("FAIL [{}] {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        let mut ids: Vec<_> = failed.into_iter().collect();
        ids.sort();
        println!("acceptance: failed criteria {ids:?}");
        ExitCode::FAILURE
    }
}
