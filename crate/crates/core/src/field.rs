//! Prime-field arithmetic, field sizing and the rational <-> field encodings
//! used to carry `f1` values through the protocols.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::funcspec::FunctionTable;
use crate::rational::Rational;

/// Largest modulus accepted; keeps `a + b` inside `u64` and `a * b` inside `u128`.
pub const MAX_MODULUS: u64 = 1 << 62;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not a prime >= 3")]
    NotPrime(u64),
    #[error("modulus {0} exceeds the supported maximum 2^62")]
    ModulusTooLarge(u64),
    #[error("operands belong to different fields (p={left} vs p={right})")]
    MismatchedFields { left: u64, right: u64 },
    #[error("division by zero in F_{0}")]
    DivisionByZero(u64),
    #[error("{value} scaled by {denominator} is not an integer")]
    NotIntegral { value: String, denominator: u64 },
    #[error("encoded magnitude {magnitude} does not fit the signed range of F_{modulus}")]
    Overflow { magnitude: String, modulus: u64 },
    #[error("duplicate interpolation abscissa {0}")]
    DuplicateAbscissa(u64),
    #[error("interpolation abscissa must be nonzero")]
    ZeroAbscissa,
    #[error("interpolation needs at least one point")]
    NoPoints,
}

/// The prime field `F_p` together with its per-element transmission cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    modulus: u64,
    bits: u32,
}

impl PrimeField {
    pub fn new(modulus: u64) -> Result<Self, FieldError> {
        if modulus > MAX_MODULUS {
            return Err(FieldError::ModulusTooLarge(modulus));
        }
        if modulus < 3 || !is_prime(modulus) {
            return Err(FieldError::NotPrime(modulus));
        }
        Ok(PrimeField {
            modulus,
            bits: ceil_log2(modulus),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `⌈log2 p⌉`, the number of bits used to transmit one element.
    pub fn bits_per_element(&self) -> u32 {
        self.bits
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, field: *self }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, field: *self }
    }

    /// Reduces an arbitrary signed integer into the field.
    pub fn element(&self, value: i128) -> FieldElement {
        let p = self.modulus as i128;
        FieldElement {
            value: value.rem_euclid(p) as u64,
            field: *self,
        }
    }

    /// Wraps an already reduced residue. Panics if `value >= p`.
    pub fn from_residue(&self, value: u64) -> FieldElement {
        assert!(
            value < self.modulus,
            "residue {value} out of range for F_{}",
            self.modulus
        );
        FieldElement { value, field: *self }
    }

    pub fn from_bigint(&self, value: &BigInt) -> FieldElement {
        let p = BigInt::from(self.modulus);
        let r = ((value % &p) + &p) % &p;
        FieldElement {
            value: r.to_u64().expect("reduced residue fits in u64"),
            field: *self,
        }
    }

    /// Maps `num / den` to `num · den⁻¹`. Fails if `p | den`.
    pub fn encode_fraction(&self, q: &Rational) -> Result<FieldElement, FieldError> {
        let num = self.from_bigint(q.numer());
        let den = self.from_bigint(q.denom());
        num.checked_div(den)
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.modulus)
    }
}

/// An element of a [`PrimeField`]; always holds a reduced residue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<(), FieldError> {
        if self.field != other.field {
            return Err(FieldError::MismatchedFields {
                left: self.field.modulus,
                right: other.field.modulus,
            });
        }
        Ok(())
    }

    pub fn checked_add(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&other)?;
        let p = self.field.modulus;
        let s = self.value + other.value;
        Ok(FieldElement {
            value: if s >= p { s - p } else { s },
            field: self.field,
        })
    }

    pub fn checked_sub(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&other)?;
        let p = self.field.modulus;
        Ok(FieldElement {
            value: if self.value >= other.value {
                self.value - other.value
            } else {
                self.value + p - other.value
            },
            field: self.field,
        })
    }

    pub fn checked_mul(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&other)?;
        let p = self.field.modulus as u128;
        Ok(FieldElement {
            value: ((self.value as u128 * other.value as u128) % p) as u64,
            field: self.field,
        })
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inverse(self) -> Result<FieldElement, FieldError> {
        if self.value == 0 {
            return Err(FieldError::DivisionByZero(self.field.modulus));
        }
        let p = self.field.modulus as i128;
        let (mut r0, mut r1) = (p, self.value as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.field.element(t0))
    }

    pub fn checked_div(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.same_field(&other)?;
        self.checked_mul(other.inverse()?)
    }

    /// The representative of this residue in `(-p/2, p/2]`.
    pub fn centered(&self) -> i128 {
        let p = self.field.modulus as i128;
        let v = self.value as i128;
        if 2 * v > p {
            v - p
        } else {
            v
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator forms panic on mismatched fields; use the `checked_*` methods where
// the operands come from different sources.
impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.checked_add(rhs).expect("field mismatch in +")
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.checked_sub(rhs).expect("field mismatch in -")
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.checked_mul(rhs).expect("field mismatch in *")
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.field.zero() - self
    }
}

impl std::iter::Sum for FieldElement {
    /// Panics on an empty iterator since the field is unknown; seed with
    /// `field.zero()` via `fold` in that case.
    fn sum<I: Iterator<Item = FieldElement>>(mut iter: I) -> FieldElement {
        let first = iter.next().expect("sum of an empty FieldElement iterator");
        iter.fold(first, |acc, x| acc + x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    /// `a · b⁻¹`
    InvMul,
}

pub fn field_arith(a: FieldElement, b: FieldElement, op: FieldOp) -> Result<FieldElement, FieldError> {
    match op {
        FieldOp::Add => a.checked_add(b),
        FieldOp::Sub => a.checked_sub(b),
        FieldOp::Mul => a.checked_mul(b),
        FieldOp::InvMul => a.checked_div(b),
    }
}

/// `⌈log2 n⌉`, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Smallest prime strictly greater than `bound` and at least `floor`.
pub fn smallest_prime_above(bound: u64, floor: u64) -> u64 {
    let mut candidate = bound.saturating_add(1).max(floor);
    while !is_prime(candidate) {
        candidate += 1;
    }
    candidate
}

/// Signed magnitude bound `2·m·D·max|f1|` that the field modulus must exceed.
pub fn field_size_bound(f1: &FunctionTable, m: usize) -> u64 {
    let max_scaled = f1.max_abs_scaled();
    (2u128 * m as u128 * max_scaled as u128)
        .try_into()
        .expect("field size bound overflows u64")
}

/// The smallest prime `p > 2·m·D·max|f1|` (never below 3), where `D` is the
/// common denominator of `f1`'s values. The factor 2 reserves headroom for
/// centered decoding of negative sums.
pub fn min_field_size(f1: &FunctionTable, m: usize) -> PrimeField {
    let p = smallest_prime_above(field_size_bound(f1, m), 3);
    PrimeField::new(p).expect("smallest_prime_above returns a prime")
}

/// `(q·D) mod p`, rejecting values whose scaled magnitude would wrap.
pub fn encode_rational(q: &Rational, denominator: u64, field: PrimeField) -> Result<FieldElement, FieldError> {
    let scaled = q * Rational::from_integer(BigInt::from(denominator));
    if !scaled.is_integer() {
        return Err(FieldError::NotIntegral {
            value: crate::rational::format_rational(q),
            denominator,
        });
    }
    let v = scaled.to_integer();
    if BigInt::from(2u8) * v.abs() >= BigInt::from(field.modulus()) {
        return Err(FieldError::Overflow {
            magnitude: v.abs().to_string(),
            modulus: field.modulus(),
        });
    }
    Ok(field.from_bigint(&v))
}

/// Reads `e` as the signed integer `v ∈ (−p/2, p/2)` and returns `v / (D·scale)`.
pub fn decode_centered(e: FieldElement, denominator: u64, scale: u64) -> Rational {
    Rational::new(
        BigInt::from(e.centered()),
        BigInt::from(denominator) * BigInt::from(scale),
    )
}

/// Lagrange interpolation of the unique polynomial through `points`,
/// evaluated at zero.
pub fn interpolate_at_zero(points: &[(FieldElement, FieldElement)]) -> Result<FieldElement, FieldError> {
    let (first, _) = points.first().ok_or(FieldError::NoPoints)?;
    let field = first.field();
    for (i, (xi, yi)) in points.iter().enumerate() {
        xi.same_field(first)?;
        yi.same_field(first)?;
        if xi.is_zero() {
            return Err(FieldError::ZeroAbscissa);
        }
        if points[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(FieldError::DuplicateAbscissa(xi.value()));
        }
    }
    let mut acc = field.zero();
    for (j, (xj, yj)) in points.iter().enumerate() {
        // weight_j = Π_{k≠j} x_k / (x_k − x_j)
        let mut num = field.one();
        let mut den = field.one();
        for (k, (xk, _)) in points.iter().enumerate() {
            if k != j {
                num = num * *xk;
                den = den * (*xk - *xj);
            }
        }
        acc = acc + *yj * num.checked_div(den)?;
    }
    Ok(acc)
}

/// Interpolation weights at zero for abscissas 1, 2, 3: `(3, −3, 1)`.
pub fn lagrange_weights_123(field: PrimeField) -> [FieldElement; 3] {
    [field.element(3), field.element(-3), field.element(1)]
}
