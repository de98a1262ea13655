use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Minor units per major unit (paise per rupee, cents per dollar).
pub const MINOR_PER_MAJOR: i64 = 100;

const PPM: i128 = 1_000_000;

/// An amount of money in integer minor units.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_minor(minor: i64) -> Self {
        Money(minor)
    }

    pub const fn from_major(major: i64) -> Self {
        Money(major * MINOR_PER_MAJOR)
    }

    pub const fn minor(self) -> i64 {
        self.0
    }

    pub fn as_major(self) -> f64 {
        self.0 as f64 / MINOR_PER_MAJOR as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// `self × fraction`, rounded half-up to the nearest minor unit.
    ///
    /// The fraction is quantised to parts-per-million first so the result is
    /// bit-exact across platforms.
    pub fn scale_half_up(self, fraction: f64) -> Money {
        let num = self.0 as i128 * fraction_ppm(fraction);
        Money(div_half_up(num, PPM) as i64)
    }

    /// `self × fraction`, rounded up to the next minor unit.
    pub fn scale_ceil(self, fraction: f64) -> Money {
        let num = self.0 as i128 * fraction_ppm(fraction);
        Money(div_ceil(num, PPM) as i64)
    }
}

pub(crate) fn fraction_ppm(fraction: f64) -> i128 {
    (fraction * PPM as f64).round() as i128
}

fn div_half_up(num: i128, den: i128) -> i128 {
    // den > 0; half-up means ties go toward +inf
    (2 * num + den).div_euclid(2 * den)
}

fn div_ceil(num: i128, den: i128) -> i128 {
    -((-num).div_euclid(den))
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let m = MINOR_PER_MAJOR as u64;
        write!(f, "{sign}{}.{:02}", abs / m, abs % m)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}
