//! A small incremental CDCL solver.
//!
//! Two watched literals with blocker literals, first-UIP learning with
//! local clause minimization, VSIDS branching with phase saving, and Luby
//! restarts (unit 100 conflicts). Learnt clauses are halved by activity at
//! restarts once they exceed a growing budget; at that point the database is
//! also simplified against the top-level assignment.
//!
//! Clauses may be added between calls to [`Solver::solve`]; the solver
//! backtracks to the root first. Variables are 1-based at the API boundary.

use std::time::Instant;

use crate::formula::Literal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// The deadline passed before an answer was found.
    Interrupted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit(u32);

impl Lit {
    fn new(var: usize, positive: bool) -> Lit {
        Lit(((var as u32) << 1) | (!positive) as u32)
    }

    fn from_literal(l: Literal) -> Lit {
        Lit::new(l.var() as usize - 1, l.is_positive())
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    fn idx(self) -> usize {
        self.0 as usize
    }

    fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

const TRUE: i8 = 1;
const FALSE: i8 = -1;
const UNDEF: i8 = 0;

#[inline]
fn value_of(assigns: &[i8], l: Lit) -> i8 {
    let v = assigns[l.var()];
    if l.is_neg() {
        -v
    } else {
        v
    }
}

type CRef = u32;

struct ClauseData {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: CRef,
    blocker: Lit,
}

/// Max-heap of variables ordered by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<usize>,
    pos: Vec<usize>,
}

const NOT_IN_HEAP: usize = usize::MAX;

impl VarHeap {
    fn grow(&mut self) {
        self.pos.push(NOT_IN_HEAP);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NOT_IN_HEAP
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent]] >= act[v] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i]] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let len = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= len {
                break;
            }
            let r = l + 1;
            let child = if r < len && act[self.heap[r]] > act[self.heap[l]] {
                r
            } else {
                l
            };
            if act[self.heap[child]] <= act[v] {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i]] = i;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v] = i;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v] = i;
        self.sift_up(i, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

pub struct Solver {
    clauses: Vec<ClauseData>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<CRef>>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    seen: Vec<bool>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    ok: bool,
    var_inc: f64,
    cla_inc: f64,
    num_learnts: usize,
    max_learnts: f64,
    restarts: u64,
    model: Vec<bool>,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f64 = 0.999;
const RESTART_UNIT: f64 = 100.0;
const DEADLINE_CHECK_MASK: u64 = 0xff;

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            phase: Vec::new(),
            activity: Vec::new(),
            seen: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            ok: true,
            var_inc: 1.0,
            cla_inc: 1.0,
            num_learnts: 0,
            max_learnts: 0.0,
            restarts: 0,
            model: Vec::new(),
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    /// Makes variables `1..=n` available.
    pub fn ensure_vars(&mut self, n: u32) {
        while self.assigns.len() < n as usize {
            let v = self.assigns.len();
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(None);
            self.phase.push(false);
            self.activity.push(0.0);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.grow();
            self.heap.insert(v, &self.activity);
        }
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause set is known to be unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: Option<CRef>) {
        let v = l.var();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = if l.is_neg() { FALSE } else { TRUE };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.phase[v] = !l.is_neg();
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> CRef {
        debug_assert!(lits.len() >= 2);
        let cref = self.clauses.len() as CRef;
        self.watches[lits[0].idx()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].idx()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(ClauseData {
            lits,
            learnt,
            activity: 0.0,
        });
        if learnt {
            self.num_learnts += 1;
        }
        cref
    }

    /// Adds a clause over 1-based literals. Returns false if the clause set
    /// became unsatisfiable at the root.
    pub fn add_clause(&mut self, literals: &[Literal]) -> bool {
        self.cancel_until(0);
        if !self.ok {
            return false;
        }
        if let Some(max) = literals.iter().map(|l| l.var()).max() {
            self.ensure_vars(max);
        }
        let mut lits: Vec<Lit> = literals.iter().map(|&l| Lit::from_literal(l)).collect();
        lits.sort_unstable_by_key(|l| l.0);
        lits.dedup();
        let mut kept = Vec::with_capacity(lits.len());
        for (i, &l) in lits.iter().enumerate() {
            if i + 1 < lits.len() && lits[i + 1] == l.neg() {
                return true;
            }
            match value_of(&self.assigns, l) {
                TRUE => return true,
                FALSE => {}
                _ => kept.push(l),
            }
        }
        match kept.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(kept[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(kept, false);
                true
            }
        }
    }

    fn propagate(&mut self) -> Option<CRef> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p.neg();
            let mut ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if value_of(&self.assigns, w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let lits = &mut self.clauses[cref as usize].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                if first != w.blocker && value_of(&self.assigns, first) == TRUE {
                    ws[j] = Watcher {
                        cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..lits.len() {
                    if value_of(&self.assigns, lits[k]) != FALSE {
                        lits.swap(1, k);
                        self.watches[lits[1].idx()].push(Watcher {
                            cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher {
                    cref,
                    blocker: first,
                };
                j += 1;
                if value_of(&self.assigns, first) == FALSE {
                    conflict = Some(cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.idx()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: CRef) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: CRef) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;

        loop {
            self.bump_clause(confl);
            let start = usize::from(p.is_some());
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var()].expect("implied literal has a reason");
        }
        learnt[0] = p.unwrap().neg();

        // Local minimization: drop literals implied by other learnt literals.
        let mut keep = vec![true; learnt.len()];
        for (i, &l) in learnt.iter().enumerate().skip(1) {
            if let Some(r) = self.reason[l.var()] {
                let redundant = self.clauses[r as usize].lits[1..].iter().all(|q| {
                    let v = q.var();
                    self.seen[v] || self.level[v] == 0
                });
                if redundant {
                    keep[i] = false;
                }
            }
        }
        for &l in &learnt {
            self.seen[l.var()] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter_map(|(l, k)| k.then_some(l))
            .collect();

        let backtrack = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var()] > self.level[learnt[max_i].var()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var()] as usize
        };
        (learnt, backtrack)
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(Lit::new(v, self.phase[v]));
            }
        }
        None
    }

    /// Removes satisfied clauses and false literals at the root, optionally
    /// halving the learnt clauses, and rebuilds all watch lists.
    fn simplify_and_reduce(&mut self, reduce: bool) {
        debug_assert_eq!(self.decision_level(), 0);
        let mut cutoff = f64::NEG_INFINITY;
        if reduce {
            let mut acts: Vec<f64> = self
                .clauses
                .iter()
                .filter(|c| c.learnt && c.lits.len() > 2)
                .map(|c| c.activity)
                .collect();
            if !acts.is_empty() {
                acts.sort_by(|a, b| a.total_cmp(b));
                cutoff = acts[acts.len() / 2];
            }
        }
        let assigns = &self.assigns;
        let old = std::mem::take(&mut self.clauses);
        let mut kept = Vec::with_capacity(old.len());
        for mut c in old {
            if c.learnt && c.lits.len() > 2 && c.activity < cutoff {
                continue;
            }
            if c.lits.iter().any(|&l| value_of(assigns, l) == TRUE) {
                continue;
            }
            c.lits.retain(|&l| value_of(assigns, l) != FALSE);
            debug_assert!(c.lits.len() >= 2, "root propagation reached fixpoint");
            kept.push(c);
        }
        for v in self.trail.iter().map(|l| l.var()) {
            self.reason[v] = None;
        }
        for w in &mut self.watches {
            w.clear();
        }
        self.num_learnts = 0;
        for c in kept {
            self.attach(c.lits, c.learnt);
            if let Some(last) = self.clauses.last_mut() {
                last.activity = c.activity;
            }
        }
    }

    fn search(&mut self, budget: u64, deadline: Option<Instant>) -> Option<SolveResult> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, backtrack) = self.analyze(confl);
                self.cancel_until(backtrack);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;
                if self.stats.conflicts & DEADLINE_CHECK_MASK == 0 && expired(deadline) {
                    self.cancel_until(0);
                    return Some(SolveResult::Interrupted);
                }
            } else {
                if conflicts >= budget {
                    self.cancel_until(0);
                    return None;
                }
                if self.stats.decisions & 0xfff == 0xfff && expired(deadline) {
                    self.cancel_until(0);
                    return Some(SolveResult::Interrupted);
                }
                match self.pick_branch() {
                    None => {
                        self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                        return Some(SolveResult::Sat);
                    }
                    Some(l) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }

    pub fn solve(&mut self, deadline: Option<Instant>) -> SolveResult {
        self.stats.solves += 1;
        self.cancel_until(0);
        if !self.ok {
            return SolveResult::Unsat;
        }
        if expired(deadline) {
            return SolveResult::Interrupted;
        }
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        let originals = self.clauses.iter().filter(|c| !c.learnt).count();
        self.max_learnts = self.max_learnts.max(originals as f64 / 3.0 + 200.0);
        loop {
            let budget = (luby(2.0, self.restarts) * RESTART_UNIT) as u64;
            self.restarts += 1;
            match self.search(budget, deadline) {
                Some(r) => return r,
                None => {
                    let reduce = self.num_learnts as f64 > self.max_learnts;
                    self.simplify_and_reduce(reduce);
                    if reduce {
                        self.max_learnts *= 1.1;
                    }
                }
            }
        }
    }

    /// Value of a 1-based variable in the last model.
    pub fn model_value(&self, var: u32) -> bool {
        self.model[var as usize - 1]
    }

    /// The last model; entry `i` is variable `i + 1`.
    pub fn model(&self) -> &[bool] {
        &self.model
    }
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Clause;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lits(c: &[i64]) -> Vec<Literal> {
        Clause::from_dimacs(c).literals().to_vec()
    }

    fn brute_sat(n: u32, clauses: &[Vec<i64>]) -> bool {
        (0u64..1 << n).any(|bits| {
            clauses.iter().all(|c| {
                c.iter().any(|&l| {
                    let v = (bits >> (l.unsigned_abs() - 1)) & 1 == 1;
                    v == (l > 0)
                })
            })
        })
    }

    #[test]
    fn luby_sequence() {
        let seq: Vec<f64> = (0..15).map(|i| luby(2.0, i)).collect();
        assert_eq!(seq, [1., 1., 2., 1., 1., 2., 4., 1., 1., 2., 1., 1., 2., 4., 8.]);
    }

    #[test]
    fn trivial_cases() {
        let mut s = Solver::new();
        assert_eq!(s.solve(None), SolveResult::Sat);
        assert!(s.add_clause(&lits(&[1, 2])));
        assert!(s.add_clause(&lits(&[-1])));
        assert_eq!(s.solve(None), SolveResult::Sat);
        assert!(!s.model_value(1));
        assert!(s.model_value(2));
        assert!(!s.add_clause(&lits(&[-2])));
        assert_eq!(s.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn empty_clause_is_unsat() {
        let mut s = Solver::new();
        assert!(!s.add_clause(&[]));
        assert_eq!(s.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn pigeonhole_is_unsat() {
        // 5 pigeons into 4 holes.
        let (p, h) = (5u32, 4u32);
        let var = |i: u32, j: u32| (i * h + j + 1) as i64;
        let mut s = Solver::new();
        for i in 0..p {
            let c: Vec<i64> = (0..h).map(|j| var(i, j)).collect();
            s.add_clause(&lits(&c));
        }
        for j in 0..h {
            for a in 0..p {
                for b in a + 1..p {
                    s.add_clause(&lits(&[-var(a, j), -var(b, j)]));
                }
            }
        }
        assert_eq!(s.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn expired_deadline_interrupts() {
        let mut s = Solver::new();
        s.add_clause(&lits(&[1, 2]));
        let past = Instant::now() - std::time::Duration::from_secs(1);
        assert_eq!(s.solve(Some(past)), SolveResult::Interrupted);
        assert_eq!(s.solve(None), SolveResult::Sat);
    }

    #[test]
    fn random_3sat_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for round in 0..300 {
            let n = rng.gen_range(3..=14u32);
            let m = rng.gen_range(1..=(n * 6));
            let clauses: Vec<Vec<i64>> = (0..m)
                .map(|_| {
                    (0..3)
                        .map(|_| {
                            let v = rng.gen_range(1..=n) as i64;
                            if rng.gen() {
                                v
                            } else {
                                -v
                            }
                        })
                        .collect()
                })
                .collect();
            let mut s = Solver::new();
            s.ensure_vars(n);
            for c in &clauses {
                s.add_clause(&lits(c));
            }
            let expected = brute_sat(n, &clauses);
            let got = s.solve(None);
            assert_eq!(got == SolveResult::Sat, expected, "round {round}");
            if got == SolveResult::Sat {
                let model = s.model();
                for c in &clauses {
                    assert!(Clause::from_dimacs(c).is_satisfied_by(model));
                }
            }
        }
    }

    #[test]
    fn incremental_enumeration_counts_models() {
        // (x1 ∨ x2) over 3 variables has 6 models.
        let mut s = Solver::new();
        s.ensure_vars(3);
        s.add_clause(&lits(&[1, 2]));
        let mut count = 0;
        while s.solve(None) == SolveResult::Sat {
            count += 1;
            let block: Vec<Literal> = (1..=3).map(|v| Literal::new(v, !s.model_value(v))).collect();
            s.add_clause(&block);
        }
        assert_eq!(count, 6);
    }
}
