//! Count estimates of the form `mantissa × 2^exponent`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A non-negative value `mantissa × 2^exponent` with a finite mantissa.
///
/// Equality and ordering compare exact values, so `70 × 2^9` equals
/// `35 × 2^10`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    mantissa: f64,
    exponent: u32,
}

/// Splits a positive finite f64 into an integer significand with bit 52 set
/// and a binary exponent.
fn decompose(x: f64) -> (u64, i64) {
    debug_assert!(x > 0.0 && x.is_finite());
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        // Subnormal: normalize so bit 52 is set.
        let shift = frac.leading_zeros() as i64 - 11;
        (frac << shift, -1074 - shift)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    }
}

impl Estimate {
    /// Panics if `mantissa` is negative or not finite.
    pub fn new(mantissa: f64, exponent: u32) -> Self {
        assert!(
            mantissa >= 0.0 && mantissa.is_finite(),
            "mantissa must be finite and non-negative"
        );
        Estimate { mantissa, exponent }
    }

    /// An exact small count.
    pub fn from_count(count: u64) -> Self {
        Estimate::new(count as f64, 0)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Total order on exact values.
    pub fn cmp_value(&self, other: &Estimate) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (sa, ea) = decompose(self.mantissa);
        let (sb, eb) = decompose(other.mantissa);
        (ea + self.exponent as i64)
            .cmp(&(eb + other.exponent as i64))
            .then(sa.cmp(&sb))
    }

    /// Exact comparison with an integer.
    pub fn cmp_biguint(&self, other: &BigUint) -> Ordering {
        if self.is_zero() {
            return if other.is_zero() { Ordering::Equal } else { Ordering::Less };
        }
        let (sig, e) = decompose(self.mantissa);
        let shift = e + self.exponent as i64;
        let sig = BigUint::from(sig);
        if shift >= 0 {
            (sig << shift as u64).cmp(other)
        } else {
            sig.cmp(&(other << (-shift) as u64))
        }
    }

    /// Natural logarithm; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }

    /// Nearest f64, which may be infinite for large exponents.
    pub fn to_f64(&self) -> f64 {
        self.mantissa * 2f64.powi(self.exponent.min(i32::MAX as u32) as i32)
    }

    /// Exact floor of the value.
    pub fn floor_biguint(&self) -> BigUint {
        if self.is_zero() {
            return BigUint::zero();
        }
        let (sig, e) = decompose(self.mantissa);
        let shift = e + self.exponent as i64;
        let sig = BigUint::from(sig);
        if shift >= 0 {
            sig << shift as u64
        } else {
            sig >> (-shift) as u64
        }
    }

    /// The value rounded to `digits` significant decimal digits: fixed
    /// notation below 10^6, scientific (`1.234e9`) above.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return "0".to_string();
        }
        let log10 = self.mantissa.log10() + self.exponent as f64 * std::f64::consts::LOG10_2;
        let mut exp10 = log10.floor() as i64;
        let scale = 10f64.powi(digits as i32 - 1);
        let mut lead = (10f64.powf(log10 - exp10 as f64) * scale).round() / scale;
        if lead >= 10.0 {
            lead /= 10.0;
            exp10 += 1;
        }
        if (-4..6).contains(&exp10) {
            let decimals = (digits as i64 - 1 - exp10).max(0) as usize;
            format!("{:.*}", decimals, lead * 10f64.powi(exp10 as i32))
        } else {
            format!("{:.*}e{}", digits - 1, lead, exp10)
        }
    }
}

impl PartialEq for Estimate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for Estimate {}

impl PartialOrd for Estimate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Estimate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} × 2^{}", self.mantissa, self.exponent)
    }
}

/// Natural logarithm of a big integer; `-inf` for zero.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(f64::NAN, |v| (v as f64).ln());
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}
