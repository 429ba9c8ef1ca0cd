use std::fmt::Debug;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

/// Unsigned integer operations needed by trace construction. `u128` serves
/// moduli that leave headroom under the value cap; `BigUint` serves the rest.
pub(crate) trait Word: Clone + Ord + Debug {
    fn from_big(v: &BigUint) -> Option<Self>;
    fn to_big(&self) -> BigUint;
    fn is_even_word(&self) -> bool;
    fn is_unit(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    /// `self - other`; callers guarantee `self > other`.
    fn minus(&self, other: &Self) -> Self;
    fn half(&self) -> Self;
    fn sub_assign_word(&mut self, other: &Self);
    /// Divides out all factors of two, returning how many there were.
    fn strip_twos(&mut self) -> u64;
}

impl Word for u128 {
    fn from_big(v: &BigUint) -> Option<Self> {
        v.to_u128()
    }

    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }

    fn is_even_word(&self) -> bool {
        self & 1 == 0
    }

    fn is_unit(&self) -> bool {
        *self == 1
    }

    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    fn minus(&self, other: &Self) -> Self {
        self - other
    }

    fn half(&self) -> Self {
        self >> 1
    }

    fn sub_assign_word(&mut self, other: &Self) {
        *self -= other;
    }

    fn strip_twos(&mut self) -> u64 {
        let tz = self.trailing_zeros();
        *self >>= tz;
        tz as u64
    }
}

impl Word for BigUint {
    fn from_big(v: &BigUint) -> Option<Self> {
        Some(v.clone())
    }

    fn to_big(&self) -> BigUint {
        self.clone()
    }

    fn is_even_word(&self) -> bool {
        !self.bit(0)
    }

    fn is_unit(&self) -> bool {
        One::is_one(self)
    }

    fn plus(&self, other: &Self) -> Self {
        self + other
    }

    fn minus(&self, other: &Self) -> Self {
        self - other
    }

    fn half(&self) -> Self {
        self >> 1u32
    }

    fn sub_assign_word(&mut self, other: &Self) {
        *self -= other;
    }

    fn strip_twos(&mut self) -> u64 {
        let tz = self.trailing_zeros().unwrap_or(0);
        *self >>= tz;
        tz
    }
}
