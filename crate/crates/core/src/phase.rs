//! Exact probe phases as rational multiples of π, reduced modulo 2π.
//!
//! Homodyne postselection compares phases for equality, so phases never pass
//! through floating point. A `PhaseTag` stores the coefficient `c` of `c·π`
//! with `0 <= c < 2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::SimError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhaseTag(Rational64);

fn reduce(c: Rational64) -> Rational64 {
    // c mod 2, landing in [0, 2)
    let two = Rational64::from_integer(2);
    let q = (c / two).floor();
    let r = c - q * two;
    debug_assert!(!r.is_negative() && r < two);
    r
}

impl PhaseTag {
    pub const ZERO: PhaseTag = PhaseTag(Rational64::new_raw(0, 1));

    /// The phase `(numerator/denominator)·π`.
    ///
    /// Panics if `denominator` is zero.
    pub fn new(numerator: i64, denominator: i64) -> Self {
        PhaseTag(reduce(Rational64::new(numerator, denominator)))
    }

    pub fn pi() -> Self {
        PhaseTag::new(1, 1)
    }

    pub fn numerator(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denominator(&self) -> i64 {
        *self.0.denom()
    }

    /// Coefficient of π in `[0, 2)`.
    pub fn coefficient(&self) -> Rational64 {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Phase in radians, for display and for the coherent-state picture only.
    pub fn radians(&self) -> f64 {
        std::f64::consts::PI * (*self.0.numer() as f64) / (*self.0.denom() as f64)
    }

    /// The sign-blind class `{+φ, −φ}` an X-quadrature readout can resolve,
    /// represented by its member in `[0, π]`.
    pub fn magnitude_class(&self) -> PhaseTag {
        let neg = -*self;
        if neg.0 < self.0 {
            neg
        } else {
            *self
        }
    }
}

impl Default for PhaseTag {
    fn default() -> Self {
        PhaseTag::ZERO
    }
}

impl Add for PhaseTag {
    type Output = PhaseTag;
    fn add(self, rhs: PhaseTag) -> PhaseTag {
        PhaseTag(reduce(self.0 + rhs.0))
    }
}

impl Sub for PhaseTag {
    type Output = PhaseTag;
    fn sub(self, rhs: PhaseTag) -> PhaseTag {
        PhaseTag(reduce(self.0 - rhs.0))
    }
}

impl Neg for PhaseTag {
    type Output = PhaseTag;
    fn neg(self) -> PhaseTag {
        PhaseTag(reduce(-self.0))
    }
}

impl Mul<u32> for PhaseTag {
    type Output = PhaseTag;
    fn mul(self, n: u32) -> PhaseTag {
        PhaseTag(reduce(self.0 * Rational64::from_integer(n as i64)))
    }
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numerator(), self.denominator());
        match (n, d) {
            (0, _) => write!(f, "0"),
            (1, 1) => write!(f, "pi"),
            (n, 1) => write!(f, "{n}pi"),
            (1, d) => write!(f, "pi/{d}"),
            (n, d) => write!(f, "{n}pi/{d}"),
        }
    }
}

impl Serialize for PhaseTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses multiples of π: `pi/4`, `3pi/4`, `3*pi/4`, `π`, `0`, or a bare
/// rational coefficient such as `3/4` (read as 3π/4).
impl FromStr for PhaseTag {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::Config(format!("cannot parse phase `{s}` (expected e.g. pi/4, 3pi/4, 3/4)"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace() && *c != '*').collect();
        let stripped = compact.replace("pi", "").replace('π', "");
        let had_pi = stripped.len() != compact.len();
        let (num_str, den_str) = match stripped.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (stripped.as_str(), None),
        };
        let num: i64 = match num_str {
            "" if had_pi => 1,
            "-" if had_pi => -1,
            n => n.parse().map_err(|_| bad())?,
        };
        let den: i64 = match den_str {
            Some(d) => d.parse().map_err(|_| bad())?,
            None => 1,
        };
        if den == 0 {
            return Err(bad());
        }
        Ok(PhaseTag::new(num, den))
    }
}
