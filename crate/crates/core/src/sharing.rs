//! Masking and sharing primitives: cyclic-shift one-time pads, two-party
//! additive shares, and degree-1 polynomial shares at abscissas 1, 2, 3.

use thiserror::Error;

use crate::field::{interpolate_at_zero, FieldElement, FieldError, PrimeField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SharingError {
    #[error("symbol {symbol} outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("shift {shift} outside an alphabet of size {size}")]
    ShiftOutOfRange { shift: usize, size: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A cyclic shift over an ordered alphabet of `size` symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PadSymbol {
    shift: usize,
    size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadDirection {
    Encrypt,
    Decrypt,
}

impl PadSymbol {
    pub fn new(shift: usize, size: usize) -> Result<Self, SharingError> {
        if shift >= size {
            return Err(SharingError::ShiftOutOfRange { shift, size });
        }
        Ok(PadSymbol { shift, size })
    }

    /// Uniform shift from one draw over `[0, size)`.
    pub fn random(size: usize, mut draw: impl FnMut(u64) -> u64) -> Self {
        PadSymbol {
            shift: draw(size as u64) as usize,
            size,
        }
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn alphabet_size(&self) -> usize {
        self.size
    }
}

/// Moves `symbol` forward (encrypt) or backward (decrypt) by the pad's shift,
/// cyclically over the alphabet ordering.
pub fn pad_shift(symbol: usize, pad: PadSymbol, direction: PadDirection) -> Result<usize, SharingError> {
    if symbol >= pad.size {
        return Err(SharingError::SymbolOutOfRange { symbol, size: pad.size });
    }
    Ok(match direction {
        PadDirection::Encrypt => (symbol + pad.shift) % pad.size,
        PadDirection::Decrypt => (symbol + pad.size - pad.shift) % pad.size,
    })
}

/// `(s_a, s_b)` with `s_a` uniform and `s_a + s_b = secret`.
pub fn additive_split(secret: FieldElement, mut draw: impl FnMut(u64) -> u64) -> (FieldElement, FieldElement) {
    let field = secret.field();
    let share_a = field.from_residue(draw(field.modulus()));
    (share_a, secret - share_a)
}

/// Evaluations of `g(q) = slope·q + secret` at `q = 1, 2, 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShareTriple {
    pub at: [FieldElement; 3],
}

impl ShareTriple {
    pub fn field(&self) -> PrimeField {
        self.at[0].field()
    }

    /// Interpolates the constant term from all three evaluations (valid up
    /// to degree 2).
    pub fn reconstruct(&self) -> Result<FieldElement, FieldError> {
        let field = self.field();
        let points: Vec<_> = (1..=3).zip(self.at).map(|(q, v)| (field.element(q), v)).collect();
        interpolate_at_zero(&points)
    }
}

pub fn degree1_share_with_slope(secret: FieldElement, slope: FieldElement) -> Result<ShareTriple, SharingError> {
    let field = secret.field();
    let mut at = [field.zero(); 3];
    for (q, slot) in at.iter_mut().enumerate() {
        *slot = slope.checked_mul(field.element(q as i128 + 1))?.checked_add(secret)?;
    }
    Ok(ShareTriple { at })
}

/// Degree-1 sharing with a uniformly drawn slope.
pub fn degree1_share(secret: FieldElement, mut draw: impl FnMut(u64) -> u64) -> ShareTriple {
    let field = secret.field();
    let slope = field.from_residue(draw(field.modulus()));
    degree1_share_with_slope(secret, slope).expect("slope drawn from the secret's field")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleOp {
    Add,
    Mul,
    Scale(FieldElement),
}

/// Coordinate-wise combination of two share triples. `Mul` yields samples of
/// a degree-2 polynomial whose constant term is the product of the secrets.
pub fn triple_pointwise(a: &ShareTriple, b: &ShareTriple, op: TripleOp) -> Result<ShareTriple, SharingError> {
    let mut at = a.at;
    for (k, slot) in at.iter_mut().enumerate() {
        *slot = match op {
            TripleOp::Add => a.at[k].checked_add(b.at[k])?,
            TripleOp::Mul => a.at[k].checked_mul(b.at[k])?,
            TripleOp::Scale(c) => a.at[k].checked_mul(c)?,
        };
    }
    Ok(ShareTriple { at })
}
