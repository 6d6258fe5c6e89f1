//! Exact rational simulation time.
//!
//! All timestamps are arbitrary-precision rationals, so `(a + b) - b == a`
//! holds exactly and horizon comparisons never suffer float drift. Clock
//! rates are rationals too (ticks per time unit); a rate's tick period is
//! its exact reciprocal.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point on the simulation clock. Exact, totally ordered, and signed:
/// event times are kept non-negative by the horizon rules, but stop
/// conditions may legitimately be negative ("run nothing").
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(BigRational);

impl Time {
    pub const ZERO: fn() -> Time = Time::zero;

    pub fn zero() -> Time {
        Time(BigRational::zero())
    }

    pub fn from_int(n: i64) -> Time {
        Time(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact fraction `num/den`. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Time {
        assert!(den != 0, "zero denominator");
        Time(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub(crate) fn as_rational(&self) -> &BigRational {
        &self.0
    }

    /// Canonical `numerator/denominator` form, used by the JSON-lines log
    /// schema. The denominator is always present and positive.
    pub fn fraction_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Time({})", self)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Add<&Time> for &Time {
    type Output = Time;
    fn add(self, rhs: &Time) -> Time {
        Time(&self.0 + &rhs.0)
    }
}

impl AddAssign<&Time> for Time {
    fn add_assign(&mut self, rhs: &Time) {
        self.0 += &rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl Sub<&Time> for &Time {
    type Output = Time;
    fn sub(self, rhs: &Time) -> Time {
        Time(&self.0 - &rhs.0)
    }
}

impl From<i64> for Time {
    fn from(n: i64) -> Time {
        Time::from_int(n)
    }
}

/// Parses `"3"`, `"-1"`, or `"5/4"`.
impl FromStr for Time {
    type Err = String;

    fn from_str(s: &str) -> Result<Time, String> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let den: BigInt = den.parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if den.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        Ok(Time(BigRational::new(num, den)))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.fraction_string())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Time, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A clock rate in ticks per unit of simulation time.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rate(BigRational);

impl Rate {
    /// `n` ticks per time unit. Panics unless positive.
    pub fn per_unit(n: i64) -> Rate {
        Rate::ratio(n, 1)
    }

    pub fn ratio(num: i64, den: i64) -> Rate {
        assert!(den != 0, "zero denominator");
        let r = BigRational::new(BigInt::from(num), BigInt::from(den));
        assert!(r.is_positive(), "clock rates must be positive");
        Rate(r)
    }

    /// The exact duration between consecutive ticks: `1 / rate`.
    pub fn period(&self) -> Time {
        Time(self.0.recip())
    }
}

impl FromStr for Rate {
    type Err = String;

    fn from_str(s: &str) -> Result<Rate, String> {
        let t: Time = s.parse()?;
        if !t.as_rational().is_positive() {
            return Err(format!("clock rate `{s}` must be positive"));
        }
        Ok(Rate(t.0))
    }
}
