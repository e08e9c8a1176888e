//! Random subsampling without replacement, joint-type and function estimates
//! from the subsample, and exact hypergeometric error analysis.

use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::funcspec::{FuncSpecError, FunctionTable};
use crate::randomness::{Party, Randomness};
use crate::rational::{self, binomial, Rational};

/// Default cap on (sequence pair × subset) evaluations in exact enumerations.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplingError {
    #[error("sample size m={m} must satisfy 1 <= m <= n={n}")]
    SampleSize { n: usize, m: usize },
    #[error("index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("index {0} appears twice")]
    DuplicateIndex(usize),
    #[error("index set is over n={index_n} but the sequences have length {seq_n}")]
    PopulationMismatch { index_n: usize, seq_n: usize },
    #[error("frequency {count} outside 0..={n}")]
    FrequencyOutOfRange { count: u64, n: usize },
    #[error("frequencies sum to {sum}, expected n={n}")]
    InconsistentFrequencies { sum: u64, n: usize },
    #[error("enumeration needs {required} evaluations, budget is {budget}")]
    BudgetExceeded { required: String, budget: u64 },
    #[error("Monte Carlo search needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    FuncSpec(#[from] FuncSpecError),
}

/// The subsample locations `I ⊂ {1..n}`, kept sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n: usize,
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self, SamplingError> {
        let m = indices.len();
        if m == 0 || m > n {
            return Err(SamplingError::SampleSize { n, m });
        }
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(SamplingError::DuplicateIndex(w[0]));
            }
        }
        if let Some(&index) = indices.iter().find(|&&i| i == 0 || i > n) {
            return Err(SamplingError::IndexOutOfRange { index, n });
        }
        Ok(IndexSet { n, indices })
    }

    /// `{1, .., n}`.
    pub fn full(n: usize) -> Self {
        IndexSet {
            n,
            indices: (1..=n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// One-based indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Zero-based positions, ascending.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|i| i - 1)
    }
}

/// Partial Fisher–Yates over `[1..n]`, one `draw(range)` per selected slot.
pub fn sample_indices_with(n: usize, m: usize, mut draw: impl FnMut(u64) -> u64) -> Result<IndexSet, SamplingError> {
    if m == 0 || m > n {
        return Err(SamplingError::SampleSize { n, m });
    }
    let mut pool: Vec<usize> = (1..=n).collect();
    for k in 0..m {
        let j = k + draw((n - k) as u64) as usize;
        pool.swap(k, j);
    }
    pool.truncate(m);
    pool.sort_unstable();
    Ok(IndexSet { n, indices: pool })
}

/// Uniform `m`-subset of `{1..n}` drawn from Alice's stream.
pub fn sample_indices<R: Randomness + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<IndexSet, SamplingError> {
    sample_indices_with(n, m, |range| rng.draw(Party::Alice, range))
}

/// Counts `L(x, y)` over the subsample and the estimate `P̂ = L / m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointTypeEstimate {
    counts: Vec<u64>,
    y_size: usize,
    m: usize,
}

impl JointTypeEstimate {
    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.y_size + y]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn probability(&self, x: usize, y: usize) -> Rational {
        rational::ratio(self.count(x, y) as i128, self.m as i128)
    }

    pub fn probabilities(&self) -> Vec<Rational> {
        self.counts
            .iter()
            .map(|&c| rational::ratio(c as i128, self.m as i128))
            .collect()
    }
}

fn check_index_set(x_seq: &[usize], index_set: &IndexSet) -> Result<(), SamplingError> {
    if index_set.n() != x_seq.len() {
        return Err(SamplingError::PopulationMismatch {
            index_n: index_set.n(),
            seq_n: x_seq.len(),
        });
    }
    Ok(())
}

/// Full joint frequency `N(x, y)` of the sequence pair, row-major.
pub fn joint_frequency(x_seq: &[usize], y_seq: &[usize], x_size: usize, y_size: usize) -> Vec<u64> {
    let mut counts = vec![0u64; x_size * y_size];
    for (&x, &y) in x_seq.iter().zip(y_seq) {
        counts[x * y_size + y] += 1;
    }
    counts
}

pub fn partial_frequency(
    x_seq: &[usize],
    y_seq: &[usize],
    index_set: &IndexSet,
    x_size: usize,
    y_size: usize,
) -> Result<JointTypeEstimate, SamplingError> {
    check_index_set(x_seq, index_set)?;
    if y_seq.len() != x_seq.len() {
        return Err(FuncSpecError::LengthMismatch {
            x: x_seq.len(),
            y: y_seq.len(),
        }
        .into());
    }
    let mut counts = vec![0u64; x_size * y_size];
    for i in index_set.positions() {
        let (x, y) = (x_seq[i], y_seq[i]);
        if x >= x_size || y >= y_size {
            return Err(FuncSpecError::SymbolOutOfRange {
                position: i,
                symbol: if x >= x_size { x } else { y },
                size: if x >= x_size { x_size } else { y_size },
            }
            .into());
        }
        counts[x * y_size + y] += 1;
    }
    Ok(JointTypeEstimate {
        counts,
        y_size,
        m: index_set.m(),
    })
}

/// `F̂_n = (1/m) Σ_{i∈I} f1(x_i, y_i)`, the plaintext value every protocol
/// must reproduce. Debug builds cross-check the joint-type expansion
/// `(1/m) Σ_{x,y} f1(x,y) L(x,y)`.
pub fn estimate_function(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    index_set: &IndexSet,
) -> Result<Rational, SamplingError> {
    f1.check_sequences(x_seq, y_seq)?;
    check_index_set(x_seq, index_set)?;
    let sum: i128 = index_set
        .positions()
        .map(|i| f1.scaled(x_seq[i], y_seq[i]) as i128)
        .sum();
    let m = index_set.m() as i128;
    let direct = rational::ratio(sum, m * f1.common_denominator() as i128);
    #[cfg(debug_assertions)]
    {
        let via_type = estimate_via_partial_frequency(f1, x_seq, y_seq, index_set)?;
        debug_assert_eq!(direct, via_type);
    }
    Ok(direct)
}

/// `(1/m) Σ_{x,y} f1(x,y) · L(x,y)`.
pub fn estimate_via_partial_frequency(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    index_set: &IndexSet,
) -> Result<Rational, SamplingError> {
    let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
    let est = partial_frequency(x_seq, y_seq, index_set, nx, ny)?;
    let mut acc = Rational::zero();
    for x in 0..nx {
        for y in 0..ny {
            acc += f1.value(x, y) * est.probability(x, y);
        }
    }
    Ok(acc)
}

/// Mean and variance of `P̂(x,y) = L(x,y)/m` when `L` is hypergeometric
/// with population `n`, `full_count` successes and `m` draws.
pub fn hypergeometric_stats(n: usize, m: usize, full_count: u64) -> Result<(Rational, Rational), SamplingError> {
    if m == 0 || m > n {
        return Err(SamplingError::SampleSize { n, m });
    }
    if full_count > n as u64 {
        return Err(SamplingError::FrequencyOutOfRange { count: full_count, n });
    }
    let (n, m, k) = (n as i128, m as i128, full_count as i128);
    let mean = rational::ratio(k, n);
    let variance = if n == 1 {
        Rational::zero()
    } else {
        rational::ratio(k * (n - k) * (n - m), m * n * n * (n - 1))
    };
    Ok((mean, variance))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseBounds {
    /// `Σ_{x,y} Var[P̂(x,y)]`, exact.
    pub sigma_mse: Rational,
    /// `√Σ_MSE`, bounding `E‖P̂ − P‖₂`.
    pub l2_bound: f64,
}

pub fn mse_and_l2_bounds(n: usize, m: usize, frequencies: &[u64]) -> Result<MseBounds, SamplingError> {
    let sum: u64 = frequencies.iter().sum();
    if sum != n as u64 {
        return Err(SamplingError::InconsistentFrequencies { sum, n });
    }
    let mut sigma_mse = Rational::zero();
    for &count in frequencies {
        sigma_mse += hypergeometric_stats(n, m, count)?.1;
    }
    assert!(sigma_mse <= rational::ratio(1, m as i128), "Σ_MSE exceeds 1/m");
    let l2_bound = rational::to_f64(&sigma_mse).sqrt();
    Ok(MseBounds { sigma_mse, l2_bound })
}

fn check_budget(required: u128, budget: u64) -> Result<(), SamplingError> {
    if required > budget as u128 {
        return Err(SamplingError::BudgetExceeded {
            required: required.to_string(),
            budget,
        });
    }
    Ok(())
}

/// Σ over all m-subsets (lexicographic) of `|s·n − T·m|`, where `s` is the
/// subset sum of `values` and `T` the full sum. Dividing by
/// `C(n,m)·m·n·D` gives `E|F̂_n − f_n|`.
fn abs_error_numerator(values: &[i64], m: usize) -> u128 {
    let n = values.len() as i128;
    let total: i128 = values.iter().map(|&v| v as i128).sum();
    (0..values.len())
        .combinations(m)
        .map(|subset| {
            let s: i128 = subset.iter().map(|&i| values[i] as i128).sum();
            (s * n - total * m as i128).unsigned_abs()
        })
        .sum()
}

/// `E|F̂_n − f_n|` over all `C(n, m)` equally likely index sets, exactly.
pub fn exact_expected_abs_error(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    m: usize,
    budget: u64,
) -> Result<Rational, SamplingError> {
    f1.check_sequences(x_seq, y_seq)?;
    let n = x_seq.len();
    if m == 0 || m > n {
        return Err(SamplingError::SampleSize { n, m });
    }
    let subsets = binomial(n as u64, m as u64).unwrap_or(u128::MAX);
    check_budget(subsets, budget)?;
    let values: Vec<i64> = x_seq.iter().zip(y_seq).map(|(&x, &y)| f1.scaled(x, y)).collect();
    let num = abs_error_numerator(&values, m);
    Ok(expected_error_from_numerator(
        num,
        subsets,
        n,
        m,
        f1.common_denominator(),
    ))
}

fn expected_error_from_numerator(num: u128, subsets: u128, n: usize, m: usize, d: u64) -> Rational {
    Rational::new(
        BigInt::from(num),
        BigInt::from(subsets) * BigInt::from(m) * BigInt::from(n) * BigInt::from(d),
    )
}

/// Named, versioned sequence-pair generators for reproducible sweeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SequenceGenerator {
    /// `x_i = y_i = i mod min(|X|, |Y|)`
    AllMatch,
    /// `x_i = i mod |X|`, `y_i = (x_i + 1) mod |Y|`
    AllMismatch,
    /// First `⌊n/2⌋` positions `(0, 0)`, the rest `(0, 1 mod |Y|)`.
    HalfMismatch,
    /// `x_i = i mod |X|`, `y_i = ⌊i/2⌋ mod |Y|`
    Periodic,
    /// Independent uniform symbols from a ChaCha8 stream.
    Random { seed: u64 },
}

impl SequenceGenerator {
    pub const VERSION: &'static str = "v1";

    pub fn name(&self) -> String {
        let base = match self {
            SequenceGenerator::AllMatch => "all-match".to_string(),
            SequenceGenerator::AllMismatch => "all-mismatch".to_string(),
            SequenceGenerator::HalfMismatch => "half-mismatch".to_string(),
            SequenceGenerator::Periodic => "periodic".to_string(),
            SequenceGenerator::Random { seed } => format!("random:{seed}"),
        };
        format!("{base}@{}", Self::VERSION)
    }

    pub fn generate(&self, n: usize, x_size: usize, y_size: usize) -> (Vec<usize>, Vec<usize>) {
        match self {
            SequenceGenerator::AllMatch => {
                let k = x_size.min(y_size);
                let x: Vec<usize> = (0..n).map(|i| i % k).collect();
                (x.clone(), x)
            }
            SequenceGenerator::AllMismatch => {
                let x: Vec<usize> = (0..n).map(|i| i % x_size).collect();
                let y = x.iter().map(|&v| (v + 1) % y_size).collect();
                (x, y)
            }
            SequenceGenerator::HalfMismatch => {
                let y = (0..n).map(|i| if i < n / 2 { 0 } else { 1 % y_size }).collect();
                (vec![0; n], y)
            }
            SequenceGenerator::Periodic => (
                (0..n).map(|i| i % x_size).collect(),
                (0..n).map(|i| (i / 2) % y_size).collect(),
            ),
            SequenceGenerator::Random { seed } => {
                use rand::Rng;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let x = (0..n).map(|_| rng.gen_range(0..x_size)).collect();
                let y = (0..n).map(|_| rng.gen_range(0..y_size)).collect();
                (x, y)
            }
        }
    }
}

impl FromStr for SequenceGenerator {
    type Err = String;

    /// Accepts the bare name or the versioned form (`periodic@v1`,
    /// `random:7@v1`).
    fn from_str(s: &str) -> Result<Self, String> {
        let base = match s.split_once('@') {
            Some((base, version)) if version == Self::VERSION => base,
            Some((_, version)) => return Err(format!("unsupported generator version `{version}`")),
            None => s,
        };
        match base {
            "all-match" => Ok(SequenceGenerator::AllMatch),
            "all-mismatch" => Ok(SequenceGenerator::AllMismatch),
            "half-mismatch" => Ok(SequenceGenerator::HalfMismatch),
            "periodic" => Ok(SequenceGenerator::Periodic),
            _ => match base.strip_prefix("random:").map(str::parse::<u64>) {
                Some(Ok(seed)) => Ok(SequenceGenerator::Random { seed }),
                _ => Err(format!("unknown generator `{s}`")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Every sequence pair in `X^n × Y^n`, exact inner expectation.
    Exhaustive,
    /// Structured adversarial pairs plus `random_pairs` random ones; the
    /// inner expectation is exact when `C(n,m)` fits the budget and
    /// otherwise averaged over `trials` sampled index sets.
    MonteCarlo {
        trials: u64,
        seed: u64,
        random_pairs: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorstCase {
    /// Exact `e_n` (exhaustive mode, or Monte Carlo with exact inner sums).
    pub exact: Option<Rational>,
    /// The maximum as a float; equals `exact` when that is present.
    pub value: f64,
    /// `‖f1‖₂ / √m`
    pub bound: f64,
    pub within_bound: bool,
    pub argmax: (Vec<usize>, Vec<usize>),
    /// Index sets sampled per candidate; `None` when the inner expectation was exact.
    pub trials: Option<u64>,
    pub candidates: usize,
}

/// `e ≤ ‖f1‖₂/√m` decided exactly via `e²·m ≤ ‖f1‖²`.
pub fn within_theorem_bound(e: &Rational, f1: &FunctionTable, m: usize) -> bool {
    !e.is_negative() && e * e * rational::from_int(m as i128) <= f1.l2_norm_squared()
}

fn decode_pair(mut code: u64, n: usize, x_size: usize, y_size: usize) -> (Vec<usize>, Vec<usize>) {
    let mut x = vec![0; n];
    let mut y = vec![0; n];
    for v in x.iter_mut() {
        *v = (code % x_size as u64) as usize;
        code /= x_size as u64;
    }
    for v in y.iter_mut() {
        *v = (code % y_size as u64) as usize;
        code /= y_size as u64;
    }
    (x, y)
}

fn monte_carlo_candidates(
    f1: &FunctionTable,
    n: usize,
    seed: u64,
    random_pairs: usize,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
    let mut out = vec![
        SequenceGenerator::AllMatch.generate(n, nx, ny),
        SequenceGenerator::AllMismatch.generate(n, nx, ny),
        SequenceGenerator::HalfMismatch.generate(n, nx, ny),
        SequenceGenerator::Periodic.generate(n, nx, ny),
    ];
    // Two-cell block patterns between the extreme values of f1: e_n is driven
    // by the spread of f1 along the sequence, which these maximize.
    let cells: Vec<(usize, usize)> = (0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).collect();
    let hi = *cells
        .iter()
        .max_by_key(|&&(x, y)| f1.scaled(x, y))
        .expect("nonempty table");
    let lo = *cells
        .iter()
        .min_by_key(|&&(x, y)| f1.scaled(x, y))
        .expect("nonempty table");
    for (num, den) in [(1, 4), (1, 2), (3, 4)] {
        let cut = n * num / den;
        let x = (0..n).map(|i| if i < cut { hi.0 } else { lo.0 }).collect();
        let y = (0..n).map(|i| if i < cut { hi.1 } else { lo.1 }).collect();
        out.push((x, y));
    }
    for k in 0..random_pairs {
        out.push(
            SequenceGenerator::Random {
                seed: seed.wrapping_add(k as u64 + 1),
            }
            .generate(n, nx, ny),
        );
    }
    out
}

/// Searches for the sequence pair maximizing `E|F̂_n − f_n|`.
pub fn worst_case_distortion(
    f1: &FunctionTable,
    n: usize,
    m: usize,
    mode: SearchMode,
    budget: u64,
) -> Result<WorstCase, SamplingError> {
    if m == 0 || m > n {
        return Err(SamplingError::SampleSize { n, m });
    }
    let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
    let d = f1.common_denominator();
    let bound = f1.l2_norm() / (m as f64).sqrt();
    let subsets = binomial(n as u64, m as u64);

    match mode {
        SearchMode::Exhaustive => {
            let pairs = (nx as u128)
                .checked_pow(n as u32)
                .and_then(|a| a.checked_mul((ny as u128).checked_pow(n as u32)?));
            let required = pairs
                .zip(subsets)
                .and_then(|(p, s)| p.checked_mul(s))
                .unwrap_or(u128::MAX);
            check_budget(required, budget)?;
            let pairs = pairs.expect("checked above") as u64;
            let subsets = subsets.expect("checked above");
            // Largest numerator wins; ties go to the lowest pair code.
            let (best_num, best_code) = (0..pairs)
                .into_par_iter()
                .map(|code| {
                    let (x, y) = decode_pair(code, n, nx, ny);
                    let values: Vec<i64> = x.iter().zip(&y).map(|(&a, &b)| f1.scaled(a, b)).collect();
                    (abs_error_numerator(&values, m), code)
                })
                .reduce(
                    || (0, u64::MAX),
                    |a, b| {
                        if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                            a
                        } else {
                            b
                        }
                    },
                );
            let best_code = if best_code == u64::MAX { 0 } else { best_code };
            let exact = expected_error_from_numerator(best_num, subsets, n, m, d);
            let within_bound = within_theorem_bound(&exact, f1, m);
            Ok(WorstCase {
                value: rational::to_f64(&exact),
                exact: Some(exact),
                bound,
                within_bound,
                argmax: decode_pair(best_code, n, nx, ny),
                trials: None,
                candidates: pairs as usize,
            })
        }
        SearchMode::MonteCarlo {
            trials,
            seed,
            random_pairs,
        } => {
            let candidates = monte_carlo_candidates(f1, n, seed, random_pairs);
            let exact_inner = subsets
                .and_then(|s| s.checked_mul(candidates.len() as u128))
                .is_some_and(|r| r <= budget as u128);
            if !exact_inner && trials == 0 {
                return Err(SamplingError::NoTrials);
            }
            let scored: Vec<(Option<Rational>, f64)> = candidates
                .par_iter()
                .enumerate()
                .map(|(k, (x, y))| {
                    let values: Vec<i64> = x.iter().zip(y).map(|(&a, &b)| f1.scaled(a, b)).collect();
                    if exact_inner {
                        let num = abs_error_numerator(&values, m);
                        let e = expected_error_from_numerator(num, subsets.unwrap(), n, m, d);
                        let v = rational::to_f64(&e);
                        (Some(e), v)
                    } else {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(k as u64);
                        (None, sampled_abs_error(&values, m, d, trials, &mut rng))
                    }
                })
                .collect();
            let (best, _) =
                scored.iter().enumerate().fold(
                    (0usize, f64::NEG_INFINITY),
                    |(bi, bv), (i, (_, v))| {
                        if *v > bv {
                            (i, *v)
                        } else {
                            (bi, bv)
                        }
                    },
                );
            let (exact, value) = scored[best].clone();
            let within_bound = match &exact {
                Some(e) => within_theorem_bound(e, f1, m),
                None => value <= bound,
            };
            Ok(WorstCase {
                exact,
                value,
                bound,
                within_bound,
                argmax: candidates[best].clone(),
                trials: if exact_inner { None } else { Some(trials) },
                candidates: candidates.len(),
            })
        }
    }
}

/// Mean of `|F̂_n − f_n|` over `trials` uniformly sampled index sets.
pub fn sampled_abs_error(values: &[i64], m: usize, d: u64, trials: u64, rng: &mut ChaCha8Rng) -> f64 {
    let n = values.len();
    let total: i128 = values.iter().map(|&v| v as i128).sum();
    let scale = (m as f64) * (n as f64) * d as f64;
    let mut acc = 0f64;
    for _ in 0..trials {
        let s: i128 = rand::seq::index::sample(rng, n, m)
            .iter()
            .map(|i| values[i] as i128)
            .sum();
        acc += (s * n as i128 - total * m as i128).unsigned_abs() as f64 / scale;
    }
    acc / trials as f64
}
