//! Error-probability arithmetic for median amplification.
//!
//! The median of `t` independent estimates (t odd) is wrong only if at
//! least `⌈t/2⌉` of them underestimate or at least `⌈t/2⌉` overestimate.
//! With per-round probabilities `p_L` and `p_U` of those events the failure
//! probability is exactly `η(t, ⌈t/2⌉, p_L) + η(t, ⌈t/2⌉, p_U)`, where `η`
//! is the binomial upper tail. The iteration counts below are the smallest
//! odd `t` that push this under `δ`.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("need 1 <= threshold <= trials, got threshold {m} for {t} trials")]
    InvalidThreshold { t: u64, m: u64 },
    #[error("trial count must be odd and positive, got {0}")]
    InvalidTrials(u64),
    #[error("p_L + p_U must not exceed 1")]
    InvalidPair,
}

/// Which per-round estimator the plan is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    /// Cell counts rounded to a precomputed value.
    Rounding,
    /// Raw cell counts.
    Classic,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Rounding => "rounding",
            CountMode::Classic => "classic",
        })
    }
}

impl FromStr for CountMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rounding" => Ok(CountMode::Rounding),
            "classic" => Ok(CountMode::Classic),
            other => Err(format!("unknown mode `{other}` (expected rounding or classic)")),
        }
    }
}

/// Upper bound on `max(Pr[L], Pr[U])` for one raw-count round.
pub const CLASSIC_ERROR_RATE: f64 = 0.36;

/// Cell-size constant shared by `thresh` and `pivot`.
pub const CELL_CONSTANT: f64 = 9.84;

pub fn pivot(epsilon: f64) -> f64 {
    let r = 1.0 + 1.0 / epsilon;
    CELL_CONSTANT * r * r
}

/// `⌈9.84 (1 + ε/(1+ε)) (1 + 1/ε)²⌉`.
pub fn thresh(epsilon: f64) -> u64 {
    (pivot(epsilon) * (1.0 + epsilon / (1.0 + epsilon))).ceil() as u64
}

fn check_epsilon(epsilon: f64) -> Result<(), PlanError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(PlanError::InvalidEpsilon(epsilon))
    }
}

fn check_delta(delta: f64) -> Result<(), PlanError> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(PlanError::InvalidDelta(delta))
    }
}

/// How the rounding value scales with `pivot` in an ε range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundValueRule {
    /// `√(1+2ε)/2 · pivot`
    HalfSqrtOnePlusTwoEps,
    /// `pivot/√2`
    InvSqrt2,
    /// `pivot`
    One,
    /// `√2 · pivot`
    Sqrt2,
}

impl RoundValueRule {
    pub fn factor(self, epsilon: f64) -> f64 {
        match self {
            RoundValueRule::HalfSqrtOnePlusTwoEps => (1.0 + 2.0 * epsilon).sqrt() / 2.0,
            RoundValueRule::InvSqrt2 => 1.0 / SQRT_2,
            RoundValueRule::One => 1.0,
            RoundValueRule::Sqrt2 => SQRT_2,
        }
    }
}

/// One ε range of the rounding estimator: how to round, and the per-round
/// bounds on under- and overestimation it guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundingProfile {
    /// Inclusive lower end of the ε range.
    pub epsilon_low: f64,
    /// Exclusive upper end of the ε range.
    pub epsilon_high: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    /// True: counts below the rounding value are raised to it. False: every
    /// count is replaced by it.
    pub round_up: bool,
    pub rule: RoundValueRule,
}

impl RoundingProfile {
    pub fn round_value(&self, epsilon: f64) -> f64 {
        self.rule.factor(epsilon) * pivot(epsilon)
    }
}

const EPS_BREAK_1: f64 = SQRT_2 - 1.0;
const EPS_BREAK_4: f64 = 4.0 * SQRT_2 - 1.0;

pub const ROUNDING_PROFILES: [RoundingProfile; 5] = [
    RoundingProfile {
        epsilon_low: 0.0,
        epsilon_high: EPS_BREAK_1,
        p_lower: 0.262,
        p_upper: 0.169,
        round_up: true,
        rule: RoundValueRule::HalfSqrtOnePlusTwoEps,
    },
    RoundingProfile {
        epsilon_low: EPS_BREAK_1,
        epsilon_high: 1.0,
        p_lower: 0.157,
        p_upper: 0.169,
        round_up: true,
        rule: RoundValueRule::InvSqrt2,
    },
    RoundingProfile {
        epsilon_low: 1.0,
        epsilon_high: 3.0,
        p_lower: 0.085,
        p_upper: 0.169,
        round_up: true,
        rule: RoundValueRule::One,
    },
    RoundingProfile {
        epsilon_low: 3.0,
        epsilon_high: EPS_BREAK_4,
        p_lower: 0.055,
        p_upper: 0.044,
        round_up: false,
        rule: RoundValueRule::One,
    },
    RoundingProfile {
        epsilon_low: EPS_BREAK_4,
        epsilon_high: f64::INFINITY,
        p_lower: 0.023,
        p_upper: 0.044,
        round_up: false,
        rule: RoundValueRule::Sqrt2,
    },
];

pub fn rounding_profile(epsilon: f64) -> Result<&'static RoundingProfile, PlanError> {
    check_epsilon(epsilon)?;
    Ok(ROUNDING_PROFILES
        .iter()
        .find(|p| epsilon < p.epsilon_high)
        .expect("last profile is unbounded"))
}

// ---------------------------------------------------------------------------
// Binomial probabilities

/// `ln(n!)` for small n by direct summation.
fn ln_factorial_small(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Stirling-series remainder `ln(n!) - ((n + ½) ln n - n + ½ ln 2π)`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let half_ln_2pi = 0.5 * (2.0 * PI).ln();
        return ln_factorial_small(n as u64) - (n + 0.5) * n.ln() + n - half_ln_2pi;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, series-evaluated near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `C(n,k) p^k (1-p)^(n-k)` via the saddle-point expansion, accurate to a
/// few ulps in relative terms even where the result underflows naive
/// products.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let (kf, nf) = (k as f64, n as f64);
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
        return lc.exp();
    }
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `η(t, m, p) = Σ_{k=m}^{t} C(t,k) p^k (1-p)^(t-k)`: the probability of at
/// least `m` successes in `t` Bernoulli(p) trials.
pub fn eta(t: u64, m: u64, p: f64) -> Result<f64, PlanError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PlanError::InvalidProbability(p));
    }
    if m < 1 || m > t {
        return Err(PlanError::InvalidThreshold { t, m });
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let mode = (t as f64) * p;
    // Kahan summation over the tail; stop once past the mode and terms no
    // longer register.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in m..=t {
        let term = binomial_pmf(k, t, p);
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if (k as f64) > mode && term < sum * 1e-18 {
            break;
        }
    }
    Ok(sum.min(1.0))
}

fn majority(t: u64) -> u64 {
    t.div_ceil(2)
}

/// `η(t, ⌈t/2⌉, p_L) + η(t, ⌈t/2⌉, p_U)` for odd `t`.
pub fn exact_median_error(t: u64, p_lower: f64, p_upper: f64) -> Result<f64, PlanError> {
    if t == 0 || t % 2 == 0 {
        return Err(PlanError::InvalidTrials(t));
    }
    if p_lower + p_upper > 1.0 + 1e-15 {
        return Err(PlanError::InvalidPair);
    }
    Ok(eta(t, majority(t), p_lower)? + eta(t, majority(t), p_upper)?)
}

/// The same failure probability computed independently: a dynamic program
/// over the joint distribution of (#under, #over) after `t` draws with
/// per-draw probabilities `(p_L, p_U, 1 - p_L - p_U)`. Works for any `t`.
pub fn trinomial_median_error(t: u64, p_lower: f64, p_upper: f64) -> Result<f64, PlanError> {
    for p in [p_lower, p_upper] {
        if !(0.0..=1.0).contains(&p) {
            return Err(PlanError::InvalidProbability(p));
        }
    }
    if p_lower + p_upper > 1.0 + 1e-15 {
        return Err(PlanError::InvalidPair);
    }
    let p_mid = (1.0 - p_lower - p_upper).max(0.0);
    let t = t as usize;
    // dist[l][u] after the draws so far.
    let mut dist = vec![vec![0.0f64; t + 1]; t + 1];
    dist[0][0] = 1.0;
    for draw in 0..t {
        let mut next = vec![vec![0.0f64; t + 1]; t + 1];
        for l in 0..=draw {
            for u in 0..=draw - l {
                let w = dist[l][u];
                if w == 0.0 {
                    continue;
                }
                next[l + 1][u] += w * p_lower;
                next[l][u + 1] += w * p_upper;
                next[l][u] += w * p_mid;
            }
        }
        dist = next;
    }
    let need = t.div_ceil(2);
    let mut total = 0.0;
    for (l, row) in dist.iter().enumerate() {
        for (u, &w) in row.iter().enumerate() {
            if l >= need || u >= need {
                total += w;
            }
        }
    }
    Ok(total)
}

/// Smallest odd `t` with `exact_median_error(t, p_L, p_U) <= δ` for the
/// rounding profile of ε.
pub fn compute_iter(epsilon: f64, delta: f64) -> Result<u64, PlanError> {
    check_delta(delta)?;
    let profile = rounding_profile(epsilon)?;
    smallest_odd(|t| exact_median_error(t, profile.p_lower, profile.p_upper), delta)
}

/// Smallest odd `t` with `η(t, ⌈t/2⌉, 0.36) <= δ`.
pub fn classic_iter(delta: f64) -> Result<u64, PlanError> {
    check_delta(delta)?;
    smallest_odd(|t| eta(t, majority(t), CLASSIC_ERROR_RATE), delta)
}

/// The closed form `⌈17 log₂(3/δ)⌉`, raised to the next odd integer so the
/// median is well defined. Much looser than [`classic_iter`].
pub fn classic_iter_closed_form(delta: f64) -> Result<u64, PlanError> {
    check_delta(delta)?;
    let t = (17.0 * (3.0 / delta).ln() / LN_2).ceil() as u64;
    Ok(if t % 2 == 0 { t + 1 } else { t })
}

fn smallest_odd(
    bound: impl Fn(u64) -> Result<f64, PlanError>,
    delta: f64,
) -> Result<u64, PlanError> {
    let mut t = 1;
    while bound(t)? > delta {
        t += 2;
    }
    Ok(t)
}

/// How classic mode picks its repetition count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicIterRule {
    /// Exact binomial tail with the 0.36 per-round bound.
    #[default]
    Eta,
    /// `⌈17 log₂(3/δ)⌉`.
    ClosedForm,
}

/// Everything a counting run needs to know up front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub mode: CountMode,
    /// Number of core rounds (odd).
    pub t: u64,
    pub thresh: u64,
    pub pivot: f64,
}

pub fn plan(
    epsilon: f64,
    delta: f64,
    mode: CountMode,
    classic_rule: ClassicIterRule,
) -> Result<RunPlan, PlanError> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let t = match (mode, classic_rule) {
        (CountMode::Rounding, _) => compute_iter(epsilon, delta)?,
        (CountMode::Classic, ClassicIterRule::Eta) => classic_iter(delta)?,
        (CountMode::Classic, ClassicIterRule::ClosedForm) => classic_iter_closed_form(delta)?,
    };
    Ok(RunPlan {
        epsilon,
        delta,
        mode,
        t,
        thresh: thresh(epsilon),
        pivot: pivot(epsilon),
    })
}

/// One row of the error-bound comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub t: u64,
    pub round_bound: f64,
    pub classic_bound: f64,
}

/// Failure-probability bounds of both estimators for every odd `t <= t_max`.
pub fn emit_error_curves(epsilon: f64, t_max: u64) -> Result<Vec<CurveRow>, PlanError> {
    let profile = rounding_profile(epsilon)?;
    if t_max < 1 {
        return Err(PlanError::InvalidTrials(t_max));
    }
    (1..=t_max)
        .step_by(2)
        .map(|t| {
            Ok(CurveRow {
                t,
                round_bound: exact_median_error(t, profile.p_lower, profile.p_upper)?,
                classic_bound: eta(t, majority(t), CLASSIC_ERROR_RATE)?,
            })
        })
        .collect()
}

/// Writes rows as CSV with header `t,round_bound,classic_bound`.
pub fn write_curves_csv(rows: &[CurveRow], mut out: impl io::Write) -> io::Result<()> {
    writeln!(out, "t,round_bound,classic_bound")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e}", r.t, r.round_bound, r.classic_bound)?;
    }
    Ok(())
}
