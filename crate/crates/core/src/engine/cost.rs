//! Closed-form bit counts for the three protocols.

use crate::field::ceil_log2;

use super::ProtocolKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostParams {
    pub n: usize,
    pub m: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub modulus: u64,
    /// Distinct x-factors Alice shares in the direct protocol.
    pub alice_factors: usize,
    /// Distinct y-factors Bob shares in the direct protocol.
    pub bob_factors: usize,
}

/// `m⌈log2 n⌉`
pub fn index_set_bits(n: usize, m: usize) -> u64 {
    m as u64 * ceil_log2(n as u64) as u64
}

/// Bits on top of the index set:
///
/// * one-time pad: `2m(⌈lg|X|⌉ + ⌈lg|Y|⌉ + |X||Y|⌈lg p⌉) + 3⌈lg p⌉`
/// * poly-L: `(2m(|X| + |Y|) + 2)⌈lg p⌉`
/// * poly-direct: `(2m(J + K) + 2)⌈lg p⌉` for `J` x-factors and `K`
///   y-factors, i.e. `(4m + 2)⌈lg p⌉` for a rank-1 form.
pub fn closed_form_extra_bits(kind: ProtocolKind, c: &CostParams) -> u64 {
    let m = c.m as u64;
    let lx = ceil_log2(c.x_size as u64) as u64;
    let ly = ceil_log2(c.y_size as u64) as u64;
    let lp = ceil_log2(c.modulus) as u64;
    let (nx, ny) = (c.x_size as u64, c.y_size as u64);
    match kind {
        ProtocolKind::Otp => 2 * m * (lx + ly + nx * ny * lp) + 3 * lp,
        ProtocolKind::PolyL => (2 * m * (nx + ny) + 2) * lp,
        ProtocolKind::PolyDirect => (2 * m * (c.alice_factors + c.bob_factors) as u64 + 2) * lp,
    }
}

pub fn closed_form_total_bits(kind: ProtocolKind, c: &CostParams) -> u64 {
    index_set_bits(c.n, c.m) + closed_form_extra_bits(kind, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, p: u64, j: usize, k: usize) -> CostParams {
        CostParams {
            n: 16,
            m,
            x_size: 2,
            y_size: 2,
            modulus: p,
            alice_factors: j,
            bob_factors: k,
        }
    }

    #[test]
    fn index_bits_examples() {
        assert_eq!(index_set_bits(16, 3), 12);
        assert_eq!(index_set_bits(2, 1), 1);
        assert_eq!(index_set_bits(1000, 10), 100);
    }

    #[test]
    fn table_rows_at_p101() {
        assert_eq!(closed_form_extra_bits(ProtocolKind::Otp, &params(3, 101, 0, 0)), 201);
        assert_eq!(closed_form_extra_bits(ProtocolKind::PolyL, &params(3, 101, 0, 0)), 182);
        assert_eq!(
            closed_form_extra_bits(ProtocolKind::PolyDirect, &params(3, 101, 1, 1)),
            98
        );
    }
}
