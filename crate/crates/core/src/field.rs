//! Prime-field arithmetic, GF(q) for prime q ≤ 257.
//!
//! Elements are stored as canonical residues in `[0, q)`. Matrices use the
//! raw `u32` helpers on [`PrimeField`] directly; [`FieldElement`] is the
//! checked, self-describing form used at API boundaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported modulus.
pub const MAX_MODULUS: u32 = 257;

/// Handle to GF(q). Cheap to copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    q: u32,
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u32) -> u32 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if !(2..=MAX_MODULUS).contains(&q) {
            return Err(Error::UnsupportedModulus(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(PrimeField { q })
    }

    #[inline]
    pub fn q(self) -> u32 {
        self.q
    }

    /// Element with value `v mod q`.
    pub fn elem(self, v: u32) -> FieldElement {
        FieldElement {
            value: v % self.q,
            field: self,
        }
    }

    /// Element for a signed integer, reduced into `[0, q)`.
    pub fn from_i64(self, v: i64) -> FieldElement {
        self.elem(v.rem_euclid(self.q as i64) as u32)
    }

    pub fn zero(self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(self) -> FieldElement {
        self.elem(1)
    }

    /// All elements in increasing order.
    pub fn elements(self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(move |v| self.elem(v))
    }

    #[inline]
    pub(crate) fn add_raw(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub(crate) fn sub_raw(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub(crate) fn mul_raw(self, a: u32, b: u32) -> u32 {
        (a * b) % self.q
    }

    #[inline]
    pub(crate) fn neg_raw(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub(crate) fn inv_raw(self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.q) {
            return Err(Error::DivisionByZero);
        }
        let mut base = a % self.q;
        let mut exp = self.q - 2;
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            exp >>= 1;
        }
        Ok(acc)
    }
}

impl TryFrom<u32> for PrimeField {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        PrimeField::new(q)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.q
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

/// Binary field operation selector for [`arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

/// A residue together with the field it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    field: PrimeField,
}

impl FieldElement {
    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn field(self) -> PrimeField {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: FieldElement) -> Result<PrimeField> {
        if self.field != other.field {
            return Err(Error::ModulusMismatch {
                left: self.field.q,
                right: other.field.q,
            });
        }
        Ok(self.field)
    }

    pub fn add(self, other: FieldElement) -> Result<FieldElement> {
        let f = self.same_field(other)?;
        Ok(f.elem(f.add_raw(self.value, other.value)))
    }

    pub fn sub(self, other: FieldElement) -> Result<FieldElement> {
        let f = self.same_field(other)?;
        Ok(f.elem(f.sub_raw(self.value, other.value)))
    }

    pub fn mul(self, other: FieldElement) -> Result<FieldElement> {
        let f = self.same_field(other)?;
        Ok(f.elem(f.mul_raw(self.value, other.value)))
    }

    pub fn neg(self) -> FieldElement {
        self.field.elem(self.field.neg_raw(self.value))
    }

    pub fn inv(self) -> Result<FieldElement> {
        Ok(self.field.elem(self.field.inv_raw(self.value)?))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub fn arith(a: FieldElement, b: FieldElement, op: Op) -> Result<FieldElement> {
    match op {
        Op::Add => a.add(b),
        Op::Sub => a.sub(b),
        Op::Mul => a.mul(b),
    }
}
