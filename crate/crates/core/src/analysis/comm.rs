use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{closed_form_extra_bits, index_set_bits, run_protocol, CostParams, ProtocolKind, RunOptions};
use crate::field::PrimeField;
use crate::funcspec::FunctionTable;
use crate::rational;
use crate::sampling::SequenceGenerator;

use super::AnalysisError;

/// How `m` is chosen for each `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MRule {
    Fixed(usize),
    /// `m = ⌈√n⌉`
    Sqrt,
    EqualN,
}

impl MRule {
    pub fn m_for(self, n: usize) -> usize {
        match self {
            MRule::Fixed(m) => m,
            MRule::Sqrt => ceil_sqrt(n),
            MRule::EqualN => n,
        }
    }
}

fn ceil_sqrt(n: usize) -> usize {
    let r = (n as f64).sqrt() as usize;
    (r.saturating_sub(1)..=r + 1)
        .find(|&c| c * c >= n)
        .expect("one candidate covers n")
}

impl FromStr for MRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sqrt" => Ok(MRule::Sqrt),
            "equal-n" => Ok(MRule::EqualN),
            _ => s
                .parse::<usize>()
                .ok()
                .filter(|&m| m > 0)
                .map(MRule::Fixed)
                .ok_or_else(|| format!("m rule must be a positive integer, `sqrt` or `equal-n`, got `{s}`")),
        }
    }
}

/// How the field is chosen for each cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRule {
    /// The protocol's smallest admissible prime for `(f1, m)`.
    Minimal,
    Fixed(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommRow {
    pub protocol: String,
    pub n: usize,
    pub m: usize,
    pub modulus: u64,
    pub index_bits: u64,
    pub extra_bits: u64,
    /// `k`
    pub total_bits: u64,
    /// `R = k/n`
    pub rate: String,
    pub rate_value: f64,
    /// Whether a live run metered exactly `total_bits`; `None` if not run.
    pub live_match: Option<bool>,
}

/// Closed-form `(n, m, k, R)` rows, optionally cross-checked by live runs on
/// `all-match` sequences. Cells with `m > n` are skipped.
pub fn comm_report(
    kind: ProtocolKind,
    f1: &FunctionTable,
    n_list: &[usize],
    m_rule: MRule,
    field_rule: FieldRule,
    verify_live: bool,
) -> Result<Vec<CommRow>, AnalysisError> {
    let protocol = kind.protocol();
    let form = f1.effective_product_form();
    let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
    let cells: Vec<(usize, usize)> = n_list
        .iter()
        .map(|&n| (n, m_rule.m_for(n)))
        .filter(|&(n, m)| m >= 1 && m <= n)
        .collect();
    cells
        .par_iter()
        .map(|&(n, m)| {
            let field = match field_rule {
                FieldRule::Minimal => protocol.default_field(f1, m),
                FieldRule::Fixed(p) => PrimeField::new(p).map_err(crate::engine::EngineError::from)?,
            };
            let params = CostParams {
                n,
                m,
                x_size: nx,
                y_size: ny,
                modulus: field.modulus(),
                alice_factors: form.alice_factors().len(),
                bob_factors: form.bob_factors().len(),
            };
            let index_bits = index_set_bits(n, m);
            let extra_bits = closed_form_extra_bits(kind, &params);
            let total_bits = index_bits + extra_bits;
            let live_match = if verify_live {
                let (x, y) = SequenceGenerator::AllMatch.generate(n, nx, ny);
                let opts = RunOptions {
                    modulus: Some(field.modulus()),
                    fixed_index_set: None,
                };
                Some(run_protocol(protocol, f1, &x, &y, m, 0, &opts)?.total_bits == total_bits)
            } else {
                None
            };
            let rate = rational::ratio(total_bits as i128, n as i128);
            Ok(CommRow {
                protocol: kind.name().to_string(),
                n,
                m,
                modulus: field.modulus(),
                index_bits,
                extra_bits,
                total_bits,
                rate: rational::format_rational(&rate),
                rate_value: rational::to_f64(&rate),
                live_match,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::builtin;

    #[test]
    fn ceil_sqrt_is_exact() {
        for n in 1..5000 {
            let r = ceil_sqrt(n);
            assert!(r * r >= n && (r - 1) * (r - 1) < n, "{n}");
        }
    }

    #[test]
    fn poly_l_row_at_n1024() {
        let f1 = builtin::hamming(2);
        let rows = comm_report(
            ProtocolKind::PolyL,
            &f1,
            &[1024],
            MRule::Fixed(32),
            FieldRule::Fixed(211),
            true,
        )
        .unwrap();
        assert_eq!(rows[0].total_bits, 2384);
        assert_eq!(rows[0].rate, "149/64");
        assert_eq!(rows[0].live_match, Some(true));
    }

    #[test]
    fn doubling_n_at_fixed_m_lowers_the_rate() {
        let f1 = builtin::hamming(2);
        let ns: Vec<usize> = (4..12).map(|k| 1 << k).collect();
        for kind in ProtocolKind::ALL {
            let rows = comm_report(kind, &f1, &ns, MRule::Fixed(8), FieldRule::Minimal, false).unwrap();
            assert!(rows.windows(2).all(|w| w[1].rate_value < w[0].rate_value), "{kind}");
        }
    }

    #[test]
    fn full_sample_has_the_largest_rate() {
        let f1 = builtin::hamming(2);
        let n = 64;
        let full = comm_report(ProtocolKind::Otp, &f1, &[n], MRule::EqualN, FieldRule::Minimal, false).unwrap();
        for m in 1..n {
            let row = comm_report(ProtocolKind::Otp, &f1, &[n], MRule::Fixed(m), FieldRule::Minimal, false).unwrap();
            assert!(row[0].rate_value < full[0].rate_value);
        }
    }

    #[test]
    fn sqrt_rule_rates_fall_and_live_runs_agree() {
        let f1 = builtin::product(2);
        let rows = comm_report(
            ProtocolKind::PolyDirect,
            &f1,
            &[64, 256, 1024, 4096],
            MRule::Sqrt,
            FieldRule::Minimal,
            true,
        )
        .unwrap();
        assert!(rows.windows(2).all(|w| w[1].rate_value < w[0].rate_value));
        assert!(rows.iter().all(|r| r.live_match == Some(true)));
    }

    #[test]
    fn m_rule_parsing() {
        assert_eq!("sqrt".parse::<MRule>(), Ok(MRule::Sqrt));
        assert_eq!("equal-n".parse::<MRule>(), Ok(MRule::EqualN));
        assert_eq!("12".parse::<MRule>(), Ok(MRule::Fixed(12)));
        assert!("0".parse::<MRule>().is_err());
    }
}
