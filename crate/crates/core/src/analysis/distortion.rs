use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{run_protocol, ProtocolKind, RunOptions};
use crate::funcspec::FunctionTable;
use crate::rational;
use crate::sampling::{worst_case_distortion, SearchMode};

use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub f1: String,
    pub n: usize,
    pub m: usize,
    /// `"exhaustive"` or `"monte_carlo"`.
    pub method: String,
    /// Measured `e_n`.
    pub e_n: f64,
    /// Exact `e_n` when the inner expectation was enumerated.
    pub e_n_exact: Option<String>,
    /// `‖f1‖₂ / √m`
    pub bound: f64,
    pub within_bound: bool,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub argmax_x: String,
    pub argmax_y: String,
    pub protocol: String,
    /// Realized `R = k/n` from a live run on the argmax pair.
    pub rate: String,
    pub rate_value: f64,
}

fn render_sequence(seq: &[usize], symbols: &[String]) -> String {
    seq.iter().map(|&s| symbols[s].as_str()).collect::<Vec<_>>().join(" ")
}

/// One report per `(n, m)` with `m ≤ n`, in grid order.
pub fn distortion_experiment(
    f1: &FunctionTable,
    n_list: &[usize],
    m_list: &[usize],
    mode: SearchMode,
    protocol: ProtocolKind,
    budget: u64,
) -> Result<Vec<DistortionReport>, AnalysisError> {
    let cells: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| m_list.iter().filter(move |&&m| m >= 1 && m <= n).map(move |&m| (n, m)))
        .collect();
    cells
        .par_iter()
        .map(|&(n, m)| {
            let wc = worst_case_distortion(f1, n, m, mode, budget)?;
            let seed = match mode {
                SearchMode::Exhaustive => None,
                SearchMode::MonteCarlo { seed, .. } => Some(seed),
            };
            let (x, y) = &wc.argmax;
            let run = run_protocol(
                protocol.protocol(),
                f1,
                x,
                y,
                m,
                seed.unwrap_or(0),
                &RunOptions::default(),
            )?;
            Ok(DistortionReport {
                f1: f1.name().to_string(),
                n,
                m,
                method: match mode {
                    SearchMode::Exhaustive => "exhaustive".to_string(),
                    SearchMode::MonteCarlo { .. } => "monte_carlo".to_string(),
                },
                e_n: wc.value,
                e_n_exact: wc.exact.as_ref().map(rational::format_rational),
                bound: wc.bound,
                within_bound: wc.within_bound,
                trials: wc.trials,
                seed,
                argmax_x: render_sequence(x, f1.x_alphabet().symbols()),
                argmax_y: render_sequence(y, f1.y_alphabet().symbols()),
                protocol: protocol.name().to_string(),
                rate: rational::format_rational(&run.rate),
                rate_value: rational::to_f64(&run.rate),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::builtin;
    use crate::sampling::DEFAULT_ENUMERATION_BUDGET;

    #[test]
    fn hamming_n4_exhaustive_grid() {
        let f1 = builtin::hamming(2);
        let reports = distortion_experiment(
            &f1,
            &[4],
            &[1, 2, 3, 4],
            SearchMode::Exhaustive,
            ProtocolKind::PolyL,
            DEFAULT_ENUMERATION_BUDGET,
        )
        .unwrap();
        assert_eq!(reports.len(), 4);
        assert_eq!(reports[1].e_n_exact.as_deref(), Some("1/4"));
        assert_eq!(reports[3].e_n_exact.as_deref(), Some("0"));
        for r in &reports {
            assert!(r.within_bound);
            assert!((r.bound - (2.0f64).sqrt() / (r.m as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn cells_with_m_above_n_are_skipped() {
        let f1 = builtin::equality(2);
        let reports =
            distortion_experiment(&f1, &[2, 3], &[3], SearchMode::Exhaustive, ProtocolKind::Otp, 1000).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!((reports[0].n, reports[0].m), (3, 3));
    }
}
