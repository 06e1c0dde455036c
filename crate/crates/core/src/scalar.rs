//! The level-index scalar.
//!
//! Exactness is non-negotiable everywhere in this crate; the only freedom is
//! capacity. `u64` keeps the run kernels allocation-free and covers any
//! horizon whose top column height stays under 2^62; `BigUint` removes the
//! limit at a constant-factor cost. The bound set below is the intersection
//! of what both types support through `num-traits`.

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, Sub};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Unsigned integer scalar carrying level indices and run lengths.
pub trait LevelInt:
    Clone
    + Ord
    + Hash
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
{
    /// Convert from an unbounded integer; `None` when it does not fit.
    fn from_biguint(v: &BigUint) -> Option<Self>;

    /// Widen to an unbounded integer (always possible).
    fn to_biguint(&self) -> BigUint;

    /// Narrow to `u64` when the value fits.
    fn to_u64_checked(&self) -> Option<u64>;

    fn from_usize(v: usize) -> Self;
}

impl LevelInt for u64 {
    fn from_biguint(v: &BigUint) -> Option<Self> {
        v.to_u64()
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }

    fn to_u64_checked(&self) -> Option<u64> {
        Some(*self)
    }

    fn from_usize(v: usize) -> Self {
        v as u64
    }
}

impl LevelInt for BigUint {
    fn from_biguint(v: &BigUint) -> Option<Self> {
        Some(v.clone())
    }

    fn to_biguint(&self) -> BigUint {
        self.clone()
    }

    fn to_u64_checked(&self) -> Option<u64> {
        self.to_u64()
    }

    fn from_usize(v: usize) -> Self {
        BigUint::from(v)
    }
}
