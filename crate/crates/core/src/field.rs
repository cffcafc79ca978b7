//! Arithmetic in the prime field `Z_p`, `p = 2^31 - 1`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

/// The field modulus, the Mersenne prime `2^31 - 1`.
pub const MODULUS: u32 = (1 << 31) - 1;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero in Z_p")]
    DivisionByZero,
}

/// A residue in `[0, p)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fp(u32);

#[inline]
fn reduce(x: u64) -> u32 {
    // x < 2^62: fold the high bits twice, 2^31 = 1 (mod p)
    let folded = (x & MODULUS as u64) + (x >> 31);
    let folded = (folded & MODULUS as u64) + (folded >> 31);
    let r = folded as u32;
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

impl Fp {
    pub const ZERO: Fp = Fp(0);
    pub const ONE: Fp = Fp(1);

    pub fn new(value: u64) -> Self {
        Fp((value % MODULUS as u64) as u32)
    }

    /// Maps a signed integer to its residue.
    pub fn from_i64(value: i64) -> Self {
        Fp(value.rem_euclid(MODULUS as i64) as u32)
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Fp::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(MODULUS as u64 - 2))
    }

    pub fn checked_div(self, rhs: Fp) -> Result<Self, FieldError> {
        Ok(self * rhs.inv()?)
    }
}

/// The five field operations, for callers that select one at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    /// Unary: the second operand is ignored.
    Inv,
    Div,
}

pub fn field_arith(a: Fp, b: Fp, op: FieldOp) -> Result<Fp, FieldError> {
    match op {
        FieldOp::Add => Ok(a + b),
        FieldOp::Sub => Ok(a - b),
        FieldOp::Mul => Ok(a * b),
        FieldOp::Inv => a.inv(),
        FieldOp::Div => a.checked_div(b),
    }
}

impl Add for Fp {
    type Output = Fp;
    #[inline]
    fn add(self, rhs: Fp) -> Fp {
        let s = self.0 + rhs.0;
        Fp(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for Fp {
    type Output = Fp;
    #[inline]
    fn sub(self, rhs: Fp) -> Fp {
        if self.0 >= rhs.0 {
            Fp(self.0 - rhs.0)
        } else {
            Fp(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Mul for Fp {
    type Output = Fp;
    #[inline]
    fn mul(self, rhs: Fp) -> Fp {
        Fp(reduce(self.0 as u64 * rhs.0 as u64))
    }
}

impl Neg for Fp {
    type Output = Fp;
    fn neg(self) -> Fp {
        Fp::ZERO - self
    }
}

impl AddAssign for Fp {
    fn add_assign(&mut self, rhs: Fp) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fp {
    fn sub_assign(&mut self, rhs: Fp) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fp {
    fn mul_assign(&mut self, rhs: Fp) {
        *self = *self * rhs;
    }
}

impl From<u32> for Fp {
    fn from(v: u32) -> Self {
        Fp::new(v as u64)
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
