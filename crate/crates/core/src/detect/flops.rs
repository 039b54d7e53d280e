use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Real multiplications and real additions.
///
/// A complex multiplication is charged 4 RML + 2 RAD, a complex addition
/// or subtraction 2 RAD, and `|z|²` 2 RML + 1 RAD.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopCount {
    pub rml: u64,
    pub rad: u64,
}

impl FlopCount {
    pub const ZERO: FlopCount = FlopCount { rml: 0, rad: 0 };

    pub fn new(rml: u64, rad: u64) -> Self {
        Self { rml, rad }
    }

    #[inline]
    pub fn complex_mul(&mut self, n: u64) {
        self.rml += 4 * n;
        self.rad += 2 * n;
    }

    #[inline]
    pub fn complex_add(&mut self, n: u64) {
        self.rad += 2 * n;
    }

    #[inline]
    pub fn norm_sqr(&mut self, n: u64) {
        self.rml += 2 * n;
        self.rad += n;
    }

    #[inline]
    pub fn real_add(&mut self, n: u64) {
        self.rad += n;
    }

    pub fn total(&self) -> u64 {
        self.rml + self.rad
    }

    /// `self - other` as signed counts.
    pub fn delta(&self, other: &FlopCount) -> (i64, i64) {
        (self.rml as i64 - other.rml as i64, self.rad as i64 - other.rad as i64)
    }
}

impl Add for FlopCount {
    type Output = FlopCount;

    fn add(self, rhs: FlopCount) -> FlopCount {
        FlopCount { rml: self.rml + rhs.rml, rad: self.rad + rhs.rad }
    }
}

impl AddAssign for FlopCount {
    fn add_assign(&mut self, rhs: FlopCount) {
        self.rml += rhs.rml;
        self.rad += rhs.rad;
    }
}

impl Sum for FlopCount {
    fn sum<I: Iterator<Item = FlopCount>>(iter: I) -> Self {
        iter.fold(FlopCount::ZERO, Add::add)
    }
}
