//! Exact scalar fields: big rationals and a 61-bit prime field.
//!
//! The prime field is only used to certify full-rank statements about
//! matrices that are reductions of rational ones: a square block that is
//! invertible mod p is invertible over the rationals.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;

pub trait Field: Clone + PartialEq + Debug + Send + Sync + 'static {
    const NAME: &'static str;
    /// Whether zero tests in this field are exact over the rationals.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &BigRational) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }
    fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul(&i))
    }
    fn add_assign(&mut self, o: &Self) {
        *self = self.add(o);
    }
    /// `self -= a * b`
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.sub(&a.mul(b));
    }
    /// Integer value when representable.
    fn to_i64(&self) -> Option<i64>;
    fn to_rational(&self) -> Option<BigRational>;
}

pub type Rational = BigRational;

impl Field for BigRational {
    const NAME: &'static str = "rational";
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &BigRational) -> Option<Self> {
        Some(q.clone())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if !Zero::is_zero(a) && !Zero::is_zero(b) {
            *self -= a * b;
        }
    }
    fn to_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.to_integer().to_i64()
        } else {
            None
        }
    }
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

/// Integers modulo the Mersenne prime 2^61 - 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Fp(u64);

pub const FP_MODULUS: u64 = (1u64 << 61) - 1;

impl Fp {
    pub fn new(v: u64) -> Self {
        Fp(v % FP_MODULUS)
    }
    pub fn value(self) -> u64 {
        self.0
    }
    fn reduce128(x: u128) -> u64 {
        let p = FP_MODULUS as u128;
        let lo = x & p;
        let hi = x >> 61;
        let mut s = lo + hi;
        while s >= p {
            s -= p;
        }
        s as u64
    }
    fn pow(self, mut e: u64) -> Fp {
        let mut base = self;
        let mut acc = Fp(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = Field::mul(&acc, &base);
            }
            base = Field::mul(&base, &base);
            e >>= 1;
        }
        acc
    }
    fn from_bigint(b: &BigInt) -> Fp {
        let m = BigInt::from(FP_MODULUS);
        let mut r = b % &m;
        if r.is_negative() {
            r += &m;
        }
        Fp(r.to_u64().expect("reduced residue fits"))
    }
}

impl Field for Fp {
    const NAME: &'static str = "modular";
    const EXACT: bool = false;

    fn zero() -> Self {
        Fp(0)
    }
    fn one() -> Self {
        Fp(1)
    }
    fn from_i64(v: i64) -> Self {
        if v >= 0 {
            Fp::new(v as u64)
        } else {
            Fp::new(v.unsigned_abs()).neg()
        }
    }
    fn from_rational(q: &BigRational) -> Option<Self> {
        let d = Fp::from_bigint(q.denom());
        d.inv().map(|di| Fp::from_bigint(q.numer()).mul(&di))
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
    fn add(&self, o: &Self) -> Self {
        let s = self.0 + o.0;
        Fp(if s >= FP_MODULUS { s - FP_MODULUS } else { s })
    }
    fn sub(&self, o: &Self) -> Self {
        if self.0 >= o.0 {
            Fp(self.0 - o.0)
        } else {
            Fp(self.0 + FP_MODULUS - o.0)
        }
    }
    fn mul(&self, o: &Self) -> Self {
        Fp(Fp::reduce128(self.0 as u128 * o.0 as u128))
    }
    fn neg(&self) -> Self {
        if self.0 == 0 {
            *self
        } else {
            Fp(FP_MODULUS - self.0)
        }
    }
    fn inv(&self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            Some(self.pow(FP_MODULUS - 2))
        }
    }
    fn to_i64(&self) -> Option<i64> {
        if self.0 < (1 << 40) {
            Some(self.0 as i64)
        } else if FP_MODULUS - self.0 < (1 << 40) {
            Some(-((FP_MODULUS - self.0) as i64))
        } else {
            None
        }
    }
    fn to_rational(&self) -> Option<BigRational> {
        None
    }
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
