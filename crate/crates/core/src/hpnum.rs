//! Arbitrary-precision real and complex scalars, complex vectors and the
//! unitary discrete Fourier transform.
//!
//! Precision is tracked in decimal digits. Every binary operation rounds to
//! the smaller precision of its operands, so a low-precision value can never
//! masquerade as a high-precision one further down a computation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Complex, Float};

use crate::error::{Error, Result};

pub const DEFAULT_DIGITS: u32 = 60;
pub const MIN_DIGITS: u32 = 30;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u32);

impl Precision {
    pub fn new(digits: u32) -> Result<Self> {
        if digits < MIN_DIGITS {
            return Err(Error::InvalidPrecision(digits));
        }
        Ok(Precision(digits))
    }

    pub fn digits(self) -> u32 {
        self.0
    }

    pub fn bits(self) -> u32 {
        (self.0 as f64 * LOG2_10).ceil() as u32
    }

    pub(crate) fn from_bits(bits: u32) -> Self {
        Precision((bits as f64 / LOG2_10).floor() as u32)
    }

    /// `10^(guard - digits)`, the usual shape of a tolerance at this precision.
    pub fn tolerance(self, guard: i32) -> PrecReal {
        PrecReal::pow10(guard - self.0 as i32, self)
    }

    /// Fails when `tol_digits` asks for more accuracy than the precision holds.
    pub fn check_tolerance(self, tol_digits: u32) -> Result<()> {
        if tol_digits > self.0 {
            Err(Error::PrecisionUnderflow {
                requested: tol_digits,
                available: self.0,
            })
        } else {
            Ok(())
        }
    }

    pub fn doubled(self) -> Self {
        Precision(self.0 * 2)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(DEFAULT_DIGITS)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arbitrary-precision real number.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecReal(Float);

impl PrecReal {
    pub fn from_float(value: Float) -> Self {
        PrecReal(value)
    }

    pub fn from_f64(value: f64, prec: Precision) -> Self {
        PrecReal(Float::with_val(prec.bits(), value))
    }

    pub fn from_i64(value: i64, prec: Precision) -> Self {
        PrecReal(Float::with_val(prec.bits(), value))
    }

    pub fn from_ratio(num: i64, den: i64, prec: Precision) -> Self {
        let n = Float::with_val(prec.bits(), num);
        PrecReal(Float::with_val(prec.bits(), n / den))
    }

    pub fn zero(prec: Precision) -> Self {
        Self::from_i64(0, prec)
    }

    pub fn one(prec: Precision) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn pi(prec: Precision) -> Self {
        PrecReal(Float::with_val(prec.bits(), Constant::Pi))
    }

    pub fn pow10(exponent: i32, prec: Precision) -> Self {
        PrecReal(Float::with_val(prec.bits(), 10).pow(exponent))
    }

    /// Parses a decimal string such as `-1.25e-3`.
    pub fn parse(text: &str, prec: Precision) -> Option<Self> {
        let parsed = Float::parse(text.trim()).ok()?;
        Some(PrecReal(Float::with_val(prec.bits(), parsed)))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn precision(&self) -> Precision {
        Precision::from_bits(self.0.prec())
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        PrecReal(Float::with_val(prec.bits(), &self.0))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    pub fn abs(&self) -> Self {
        PrecReal(self.0.clone().abs())
    }

    pub fn sqrt(&self) -> Self {
        PrecReal(self.0.clone().sqrt())
    }

    pub fn square(&self) -> Self {
        PrecReal(self.0.clone().square())
    }

    pub fn powi(&self, exponent: i32) -> Self {
        PrecReal(self.0.clone().pow(exponent))
    }

    pub fn ln(&self) -> Self {
        PrecReal(self.0.clone().ln())
    }

    pub fn exp(&self) -> Self {
        PrecReal(self.0.clone().exp())
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let prec = self.0.prec();
        let (s, c) = self.0.clone().sin_cos(Float::new(prec));
        (PrecReal(s), PrecReal(c))
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// `log10 |x|`, or `-inf` for zero. Handy for reporting residuals in digits.
    pub fn log10_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.0.clone().abs().log10().to_f64()
    }

    /// Decimal string with `digits` significant digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        self.0.to_string_radix(10, Some(digits.max(1) as usize))
    }
}

impl fmt::Display for PrecReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(self.precision().digits() as usize);
        write!(f, "{}", self.0.to_string_radix(10, Some(digits.max(1))))
    }
}

impl PartialOrd for PrecReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl PartialEq<f64> for PrecReal {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for PrecReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

macro_rules! real_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&PrecReal> for &PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: &PrecReal) -> PrecReal {
                let bits = self.0.prec().min(rhs.0.prec());
                PrecReal(Float::with_val(bits, (&self.0).$method(&rhs.0)))
            }
        }
        impl $tr<PrecReal> for PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: PrecReal) -> PrecReal {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&PrecReal> for PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: &PrecReal) -> PrecReal {
                (&self).$method(rhs)
            }
        }
        impl $tr<PrecReal> for &PrecReal {
            type Output = PrecReal;
            fn $method(self, rhs: PrecReal) -> PrecReal {
                self.$method(&rhs)
            }
        }
    };
}

real_binop!(Add, add);
real_binop!(Sub, sub);
real_binop!(Mul, mul);
real_binop!(Div, div);

impl Neg for PrecReal {
    type Output = PrecReal;
    fn neg(self) -> PrecReal {
        PrecReal(-self.0)
    }
}

impl Neg for &PrecReal {
    type Output = PrecReal;
    fn neg(self) -> PrecReal {
        PrecReal(-self.0.clone())
    }
}

impl AddAssign<&PrecReal> for PrecReal {
    fn add_assign(&mut self, rhs: &PrecReal) {
        if rhs.0.prec() < self.0.prec() {
            self.0.set_prec(rhs.0.prec());
        }
        self.0 += &rhs.0;
    }
}

/// Arbitrary-precision complex number.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecComplex(Complex);

impl PrecComplex {
    pub fn new(re: &PrecReal, im: &PrecReal) -> Self {
        let bits = re.0.prec().min(im.0.prec());
        PrecComplex(Complex::with_val(bits, (&re.0, &im.0)))
    }

    pub fn from_complex(value: Complex) -> Self {
        PrecComplex(value)
    }

    pub fn from_real(re: &PrecReal) -> Self {
        PrecComplex(Complex::with_val(re.0.prec(), (&re.0, 0)))
    }

    pub fn from_f64(re: f64, im: f64, prec: Precision) -> Self {
        PrecComplex(Complex::with_val(prec.bits(), (re, im)))
    }

    pub fn zero(prec: Precision) -> Self {
        Self::from_f64(0.0, 0.0, prec)
    }

    pub fn one(prec: Precision) -> Self {
        Self::from_f64(1.0, 0.0, prec)
    }

    pub fn i(prec: Precision) -> Self {
        Self::from_f64(0.0, 1.0, prec)
    }

    /// `r * e^{i phi}`.
    pub fn from_polar(modulus: &PrecReal, angle: &PrecReal) -> Self {
        let (s, c) = angle.sin_cos();
        PrecComplex::new(&(modulus * &c), &(modulus * &s))
    }

    pub fn as_complex(&self) -> &Complex {
        &self.0
    }

    pub fn precision(&self) -> Precision {
        Precision::from_bits(self.0.prec().0.min(self.0.prec().1))
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        PrecComplex(Complex::with_val(prec.bits(), &self.0))
    }

    pub fn re(&self) -> PrecReal {
        PrecReal(self.0.real().clone())
    }

    pub fn im(&self) -> PrecReal {
        PrecReal(self.0.imag().clone())
    }

    pub fn conj(&self) -> Self {
        PrecComplex(self.0.clone().conj())
    }

    /// `|z|^2`.
    pub fn norm_sqr(&self) -> PrecReal {
        PrecReal(Float::with_val(self.0.prec().0, self.0.norm_ref()))
    }

    pub fn abs(&self) -> PrecReal {
        PrecReal(Float::with_val(self.0.prec().0, self.0.abs_ref()))
    }

    pub fn arg(&self) -> PrecReal {
        PrecReal(Float::with_val(self.0.prec().0, self.0.arg_ref()))
    }

    /// Principal square root (branch cut along the negative real axis).
    pub fn sqrt(&self) -> Self {
        PrecComplex(self.0.clone().sqrt())
    }

    pub fn square(&self) -> Self {
        PrecComplex(self.0.clone().square())
    }

    pub fn powu(&self, exponent: u32) -> Self {
        PrecComplex(self.0.clone().pow(exponent))
    }

    pub fn scale(&self, factor: &PrecReal) -> Self {
        let bits = self.0.prec().0.min(factor.0.prec());
        PrecComplex(Complex::with_val(bits, &self.0 * &factor.0))
    }

    pub fn is_zero(&self) -> bool {
        self.0.real().is_zero() && self.0.imag().is_zero()
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.0.real().to_f64(), self.0.imag().to_f64())
    }
}

impl fmt::Display for PrecComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(self.precision().digits() as usize);
        write!(
            f,
            "{} {}",
            self.0.real().to_string_radix(10, Some(digits.max(1))),
            self.0.imag().to_string_radix(10, Some(digits.max(1)))
        )
    }
}

macro_rules! complex_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&PrecComplex> for &PrecComplex {
            type Output = PrecComplex;
            fn $method(self, rhs: &PrecComplex) -> PrecComplex {
                let bits = self.0.prec().0.min(rhs.0.prec().0);
                PrecComplex(Complex::with_val(bits, (&self.0).$method(&rhs.0)))
            }
        }
        impl $tr<PrecComplex> for PrecComplex {
            type Output = PrecComplex;
            fn $method(self, rhs: PrecComplex) -> PrecComplex {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&PrecComplex> for PrecComplex {
            type Output = PrecComplex;
            fn $method(self, rhs: &PrecComplex) -> PrecComplex {
                (&self).$method(rhs)
            }
        }
        impl $tr<PrecComplex> for &PrecComplex {
            type Output = PrecComplex;
            fn $method(self, rhs: PrecComplex) -> PrecComplex {
                self.$method(&rhs)
            }
        }
    };
}

complex_binop!(Add, add);
complex_binop!(Sub, sub);
complex_binop!(Mul, mul);
complex_binop!(Div, div);

impl Neg for PrecComplex {
    type Output = PrecComplex;
    fn neg(self) -> PrecComplex {
        PrecComplex(-self.0)
    }
}

impl Neg for &PrecComplex {
    type Output = PrecComplex;
    fn neg(self) -> PrecComplex {
        PrecComplex(-self.0.clone())
    }
}

impl AddAssign<&PrecComplex> for PrecComplex {
    fn add_assign(&mut self, rhs: &PrecComplex) {
        let bits = rhs.0.prec().0;
        if bits < self.0.prec().0 {
            self.0.set_prec(bits);
        }
        self.0 += &rhs.0;
    }
}

impl SubAssign<&PrecComplex> for PrecComplex {
    fn sub_assign(&mut self, rhs: &PrecComplex) {
        let bits = rhs.0.prec().0;
        if bits < self.0.prec().0 {
            self.0.set_prec(bits);
        }
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&PrecComplex> for PrecComplex {
    fn mul_assign(&mut self, rhs: &PrecComplex) {
        let bits = rhs.0.prec().0;
        if bits < self.0.prec().0 {
            self.0.set_prec(bits);
        }
        self.0 *= &rhs.0;
    }
}

/// `e(k/n) = exp(2 pi i k / n)`. Exact for the eighth-turn-free points
/// `1, i, -1, -i`.
pub fn root_of_unity(n: u64, k: i64, prec: Precision) -> PrecComplex {
    assert!(n >= 1, "root_of_unity needs n >= 1");
    let k = k.rem_euclid(n as i64) as u64;
    if k == 0 {
        return PrecComplex::one(prec);
    }
    if (4 * k).is_multiple_of(n) {
        return match 4 * k / n {
            1 => PrecComplex::i(prec),
            2 => PrecComplex::from_f64(-1.0, 0.0, prec),
            _ => PrecComplex::from_f64(0.0, -1.0, prec),
        };
    }
    // a few guard bits so that the reduction by 2 pi does not eat the last digit
    let bits = prec.bits() + 16;
    let angle = Float::with_val(bits, Constant::Pi) * 2u32 * k / n;
    let (s, c) = angle.sin_cos(Float::new(bits));
    PrecComplex(Complex::with_val(prec.bits(), (c, s)))
}

/// Table of `omega^m` for `m = 0..n` with `omega = e(1/n)`.
pub fn roots_of_unity(n: u64, prec: Precision) -> Vec<PrecComplex> {
    (0..n).map(|m| root_of_unity(n, m as i64, prec)).collect()
}

/// Fixed-length complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    entries: Vec<PrecComplex>,
}

impl ComplexVector {
    pub fn new(entries: Vec<PrecComplex>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension("vector must have dim >= 1".into()));
        }
        Ok(ComplexVector { entries })
    }

    pub fn zeros(dim: usize, prec: Precision) -> Self {
        assert!(dim >= 1);
        ComplexVector {
            entries: vec![PrecComplex::zero(prec); dim],
        }
    }

    pub fn basis(dim: usize, index: usize, prec: Precision) -> Self {
        let mut v = Self::zeros(dim, prec);
        v.entries[index] = PrecComplex::one(prec);
        v
    }

    pub fn from_f64_pairs(pairs: &[(f64, f64)], prec: Precision) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(re, im)| PrecComplex::from_f64(re, im, prec))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[PrecComplex] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<PrecComplex> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PrecComplex> {
        self.entries.iter()
    }

    pub fn precision(&self) -> Precision {
        self.entries
            .iter()
            .map(PrecComplex::precision)
            .min()
            .expect("non-empty")
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        ComplexVector {
            entries: self.entries.iter().map(|z| z.with_precision(prec)).collect(),
        }
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> PrecComplex {
        assert_eq!(self.dim(), other.dim());
        let mut acc = PrecComplex::zero(self.precision().min(other.precision()));
        for (a, b) in self.entries.iter().zip(&other.entries) {
            acc += &(a.conj() * b);
        }
        acc
    }

    pub fn norm_sqr(&self) -> PrecReal {
        let mut acc = PrecReal::zero(self.precision());
        for z in &self.entries {
            acc += &z.norm_sqr();
        }
        acc
    }

    pub fn norm(&self) -> PrecReal {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let inv = PrecReal::one(self.precision()) / self.norm();
        self.scale_real(&inv)
    }

    pub fn scale(&self, factor: &PrecComplex) -> Self {
        ComplexVector {
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: &PrecReal) -> Self {
        ComplexVector {
            entries: self.entries.iter().map(|z| z.scale(factor)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        ComplexVector {
            entries: self.entries.iter().map(PrecComplex::conj).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> Self {
        assert_eq!(self.dim(), other.dim());
        ComplexVector {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `max_k |self_k - other_k|`.
    pub fn max_abs_diff(&self, other: &ComplexVector) -> PrecReal {
        assert_eq!(self.dim(), other.dim());
        let prec = self.precision().min(other.precision());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(PrecReal::zero(prec), PrecReal::max)
    }

    /// Index of the entry of largest modulus (first one on ties).
    pub fn argmax_abs(&self) -> usize {
        let mut best = 0;
        let mut best_val = self.entries[0].norm_sqr();
        for (k, z) in self.entries.iter().enumerate().skip(1) {
            let v = z.norm_sqr();
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        best
    }

    pub fn to_f64_pairs(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(PrecComplex::to_f64_pair).collect()
    }
}

impl Index<usize> for ComplexVector {
    type Output = PrecComplex;
    fn index(&self, index: usize) -> &PrecComplex {
        &self.entries[index]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary DFT, `(F v)_k = d^{-1/2} sum_j omega^{jk} v_j` with
/// `omega = e(1/d)`; the inverse uses `omega^{-jk}`.
pub fn dft(v: &ComplexVector, direction: Direction) -> ComplexVector {
    let d = v.dim();
    let prec = v.precision();
    let roots = roots_of_unity(d as u64, prec);
    let inv_sqrt = PrecReal::one(prec) / PrecReal::from_i64(d as i64, prec).sqrt();
    let entries = (0..d)
        .map(|k| {
            let mut acc = PrecComplex::zero(prec);
            for (j, vj) in v.iter().enumerate() {
                let e = (j * k) % d;
                let e = match direction {
                    Direction::Forward => e,
                    Direction::Inverse => (d - e) % d,
                };
                acc += &(&roots[e] * vj);
            }
            acc.scale(&inv_sqrt)
        })
        .collect();
    ComplexVector { entries }
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<PrecComplex>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize, prec: Precision) -> Self {
        ComplexMatrix {
            n,
            data: vec![PrecComplex::zero(prec); n * n],
        }
    }

    pub fn identity(n: usize, prec: Precision) -> Self {
        let mut m = Self::zeros(n, prec);
        for k in 0..n {
            m.data[k * n + k] = PrecComplex::one(prec);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<PrecComplex>) -> Self {
        assert_eq!(data.len(), n * n);
        ComplexMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> &PrecComplex {
        &self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: PrecComplex) {
        self.data[row * self.n + col] = value;
    }

    pub fn precision(&self) -> Precision {
        self.data.iter().map(PrecComplex::precision).min().expect("non-empty")
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let prec = self.precision().min(other.precision());
        let mut out = Self::zeros(n, prec);
        for r in 0..n {
            for k in 0..n {
                let a = &self.data[r * n + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = &other.data[k * n + c];
                    if !b.is_zero() {
                        out.data[r * n + c] += &(a * b);
                    }
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(self.data[c * n + r].conj());
            }
        }
        ComplexMatrix { n, data }
    }

    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(PrecComplex::conj).collect(),
        }
    }

    pub fn scale(&self, factor: &PrecComplex) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.n, v.dim());
        let n = self.n;
        let prec = self.precision().min(v.precision());
        let entries = (0..n)
            .map(|r| {
                let mut acc = PrecComplex::zero(prec);
                for c in 0..n {
                    let a = &self.data[r * n + c];
                    if !a.is_zero() {
                        acc += &(a * &v[c]);
                    }
                }
                acc
            })
            .collect();
        ComplexVector { entries }
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> PrecReal {
        assert_eq!(self.n, other.n);
        let prec = self.precision().min(other.precision());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(PrecReal::zero(prec), PrecReal::max)
    }

    /// Largest-modulus entry position, used to fit projective phases.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = 0;
        let mut best_val = self.data[0].norm_sqr();
        for (k, z) in self.data.iter().enumerate().skip(1) {
            let v = z.norm_sqr();
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        (best / self.n, best % self.n)
    }

    /// `min over |c| = 1 of max |self - c other|`, with `c` fitted at the
    /// largest entry of `other`. Returns the residual and the fitted `c`.
    pub fn distance_up_to_phase(&self, other: &ComplexMatrix) -> (PrecReal, PrecComplex) {
        let (r, c) = other.argmax_abs();
        let ratio = self.get(r, c) / other.get(r, c);
        let unit = ratio.scale(&(PrecReal::one(ratio.precision()) / ratio.abs()));
        let phase_err = (ratio.abs() - PrecReal::one(ratio.precision())).abs();
        let diff = self.max_abs_diff(&other.scale(&unit));
        (diff.max(phase_err), unit)
    }
}

/// Dense real symmetric positive-definite solve by Cholesky, in place on
/// row-major `a` (n x n). Returns `None` if a pivot is not positive.
pub(crate) fn cholesky_solve(a: &mut [PrecReal], b: &[PrecReal]) -> Option<Vec<PrecReal>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j].clone();
        for k in 0..j {
            diag = diag - a[j * n + k].square();
        }
        if !(diag > 0.0) {
            return None;
        }
        let diag = diag.sqrt();
        a[j * n + j] = diag.clone();
        for i in (j + 1)..n {
            let mut s = a[i * n + j].clone();
            for k in 0..j {
                s = s - &a[i * n + k] * &a[j * n + k];
            }
            a[i * n + j] = s / &diag;
        }
    }
    let mut y: Vec<PrecReal> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[i].clone();
        for k in 0..i {
            s = s - &a[i * n + k] * &y[k];
        }
        y.push(s / &a[i * n + i]);
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i].clone();
        for k in (i + 1)..n {
            s = s - &a[k * n + i] * &x[k];
        }
        x[i] = s / &a[i * n + i];
    }
    Some(x)
}
