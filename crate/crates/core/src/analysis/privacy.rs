//! Exact privacy audits by exhaustive enumeration of every random draw.
//!
//! For each input pair the protocol is replayed under an [`Odometer`] until
//! every leaf of the randomness tree has been visited, which yields the exact
//! distribution of each party's canonical view. Distributions are then
//! compared for exact equality.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{Party, Protocol, RunSetup};
use crate::field::PrimeField;
use crate::funcspec::FunctionTable;
use crate::randomness::Odometer;
use crate::rational::{self, Rational};
use crate::sampling::IndexSet;

use super::AnalysisError;

/// Default cap on (input pair × randomness leaf) replays.
pub const DEFAULT_AUDIT_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditTarget {
    AgainstAlice,
    AgainstBob,
    AgainstCharlie,
}

impl AuditTarget {
    pub const ALL: [AuditTarget; 3] = [
        AuditTarget::AgainstAlice,
        AuditTarget::AgainstBob,
        AuditTarget::AgainstCharlie,
    ];

    pub fn party(self) -> Party {
        match self {
            AuditTarget::AgainstAlice => Party::Alice,
            AuditTarget::AgainstBob => Party::Bob,
            AuditTarget::AgainstCharlie => Party::Charlie,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AuditTarget::AgainstAlice => "against_alice",
            AuditTarget::AgainstBob => "against_bob",
            AuditTarget::AgainstCharlie => "against_charlie",
        }
    }
}

/// What the enumeration ranges over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conditioning {
    /// All randomness, including Alice's choice of `I`.
    Full,
    /// `I` pinned; a weaker diagnostic that ignores leakage through `I`.
    FixedIndexSet(IndexSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug)]
pub struct AuditConfig {
    pub m: usize,
    pub field: PrimeField,
    pub conditioning: Conditioning,
    pub budget: u64,
}

impl AuditConfig {
    pub fn new(m: usize, field: PrimeField) -> Self {
        AuditConfig {
            m,
            field,
            conditioning: Conditioning::Full,
            budget: DEFAULT_AUDIT_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrivacyReport {
    pub protocol: String,
    pub n: usize,
    pub m: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub modulus: u64,
    pub definition: AuditTarget,
    /// `"full"` or `"fixed-index-set"`.
    pub conditioning: String,
    pub input_pairs: usize,
    /// Distribution pairs compared (for Charlie, per shared estimate value).
    pub comparisons: usize,
    pub verdict: Verdict,
    /// Largest exact total-variation distance found.
    pub worst_distance: String,
    /// The two inputs (and, for Charlie, the estimate) realizing it.
    pub witness: Option<String>,
    /// Input pairs × randomness leaves replayed.
    pub enumeration_size: u64,
}

/// Every sequence in `{0..k}^n`, lexicographic.
pub fn all_sequences(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..k).map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// Exact view distributions for one input pair: view → leaf count, out of
/// `leaves` equally likely leaves.
struct ViewCounts {
    leaves: u128,
    per_party: [HashMap<String, u128>; 3],
    /// Charlie's views grouped by the estimate they end with.
    charlie_by_estimate: BTreeMap<String, HashMap<String, u128>>,
}

fn setup_for(cfg: &AuditConfig) -> RunSetup {
    RunSetup {
        m: cfg.m,
        field: cfg.field,
        fixed_index_set: match &cfg.conditioning {
            Conditioning::Full => None,
            Conditioning::FixedIndexSet(i) => Some(i.clone()),
        },
    }
}

/// Draw ranges of one probe run; their product is the leaf count.
fn probe(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    x: &[usize],
    y: &[usize],
    setup: &RunSetup,
) -> Result<Vec<u64>, AnalysisError> {
    let mut odo = Odometer::new();
    protocol.execute(f1, x, y, setup, &mut odo)?;
    Ok(odo.last_ranges())
}

fn check_budget(pairs: usize, ranges: &[u64], budget: u64) -> Result<u64, AnalysisError> {
    let leaves = ranges.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r as u128));
    let total = leaves.and_then(|l| l.checked_mul(pairs as u128));
    match total {
        Some(t) if t <= budget as u128 => Ok(t as u64),
        Some(t) => Err(AnalysisError::BudgetExceeded {
            required: t.to_string(),
            budget,
        }),
        None => Err(AnalysisError::BudgetExceeded {
            required: format!("more than {}", u128::MAX),
            budget,
        }),
    }
}

/// Enumerates the subtree under one pinned leading draw (or the whole tree).
fn enumerate_subtree(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    x: &[usize],
    y: &[usize],
    setup: &RunSetup,
    prefix: &[(u64, u64)],
    leaves: u128,
) -> Result<[HashMap<String, u128>; 3], AnalysisError> {
    let mut counts: [HashMap<String, u128>; 3] = Default::default();
    let mut odo = Odometer::with_prefix(prefix);
    loop {
        let result = protocol.execute(f1, x, y, setup, &mut odo)?;
        if odo.leaf_inverse_weight() != Some(leaves) {
            return Err(AnalysisError::VariableDepth);
        }
        for (slot, view) in counts.iter_mut().zip(&result.views) {
            *slot.entry(view.canonical()).or_insert(0) += 1;
        }
        if !odo.advance() {
            return Ok(counts);
        }
    }
}

fn enumerate_views(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    x: &[usize],
    y: &[usize],
    setup: &RunSetup,
    ranges: &[u64],
) -> Result<ViewCounts, AnalysisError> {
    let leaves: u128 = ranges.iter().map(|&r| r as u128).product();
    let prefixes: Vec<Vec<(u64, u64)>> = match ranges.first() {
        Some(&r0) => (0..r0).map(|v| vec![(v, r0)]).collect(),
        None => vec![Vec::new()],
    };
    let parts: Vec<[HashMap<String, u128>; 3]> = prefixes
        .par_iter()
        .map(|prefix| enumerate_subtree(protocol, f1, x, y, setup, prefix, leaves))
        .collect::<Result<_, _>>()?;
    let mut per_party: [HashMap<String, u128>; 3] = Default::default();
    for part in parts {
        for (acc, map) in per_party.iter_mut().zip(part) {
            for (k, c) in map {
                *acc.entry(k).or_insert(0) += c;
            }
        }
    }
    let mut charlie_by_estimate: BTreeMap<String, HashMap<String, u128>> = BTreeMap::new();
    for (view, &c) in &per_party[Party::Charlie.index()] {
        let estimate = view
            .lines()
            .find_map(|l| l.strip_prefix("output "))
            .unwrap_or("-")
            .to_string();
        charlie_by_estimate.entry(estimate).or_default().insert(view.clone(), c);
    }
    Ok(ViewCounts {
        leaves,
        per_party,
        charlie_by_estimate,
    })
}

/// `½ Σ_v |P(v) − Q(v)|` with `P = a / a_total`, `Q = b / b_total`.
fn total_variation(a: &HashMap<String, u128>, a_total: u128, b: &HashMap<String, u128>, b_total: u128) -> Rational {
    let mut acc = Rational::from_integer(0.into());
    let pa = |c: u128| Rational::new(c.into(), a_total.into());
    let pb = |c: u128| Rational::new(c.into(), b_total.into());
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        acc += rational::abs(&(pa(ca) - pb(cb)));
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            acc += pb(cb);
        }
    }
    acc / Rational::from_integer(2.into())
}

fn describe(x: &[usize], y: &[usize]) -> String {
    let s = |v: &[usize]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("");
    format!("(x={}, y={})", s(x), s(y))
}

struct Tally {
    comparisons: usize,
    worst: Rational,
    witness: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            comparisons: 0,
            worst: Rational::from_integer(0.into()),
            witness: None,
        }
    }

    fn record(&mut self, d: Rational, witness: impl FnOnce() -> String) {
        self.comparisons += 1;
        if d > self.worst {
            self.worst = d;
            self.witness = Some(witness());
        }
    }
}

type Pair = (Vec<usize>, Vec<usize>);

/// Compares the unconditional view distributions of `party` across `group`.
fn compare_group(tally: &mut Tally, party: Party, group: &[(&Pair, &ViewCounts)]) {
    for (i, (pi, ci)) in group.iter().enumerate() {
        for (pj, cj) in &group[i + 1..] {
            let d = total_variation(
                &ci.per_party[party.index()],
                ci.leaves,
                &cj.per_party[party.index()],
                cj.leaves,
            );
            tally.record(d, || {
                format!("{} vs {}", describe(&pi.0, &pi.1), describe(&pj.0, &pj.1))
            });
        }
    }
}

/// Compares Charlie's conditional view distributions on every estimate value
/// both inputs can produce.
fn compare_charlie(tally: &mut Tally, group: &[(&Pair, &ViewCounts)]) {
    for (i, (pi, ci)) in group.iter().enumerate() {
        for (pj, cj) in &group[i + 1..] {
            for (estimate, vi) in &ci.charlie_by_estimate {
                let Some(vj) = cj.charlie_by_estimate.get(estimate) else {
                    continue;
                };
                let ti: u128 = vi.values().sum();
                let tj: u128 = vj.values().sum();
                let d = total_variation(vi, ti, vj, tj);
                tally.record(d, || {
                    format!(
                        "{} vs {} given estimate {estimate}",
                        describe(&pi.0, &pi.1),
                        describe(&pj.0, &pj.1)
                    )
                });
            }
        }
    }
}

struct Enumerated {
    pairs: Vec<Pair>,
    counts: Vec<ViewCounts>,
    size: u64,
}

fn enumerate_pairs(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    pairs: Vec<Pair>,
    cfg: &AuditConfig,
) -> Result<Enumerated, AnalysisError> {
    let (x0, y0) = pairs.first().ok_or(AnalysisError::NoVariants)?;
    let setup = setup_for(cfg);
    let ranges = probe(protocol, f1, x0, y0, &setup)?;
    let size = check_budget(pairs.len(), &ranges, cfg.budget)?;
    let counts = pairs
        .iter()
        .map(|(x, y)| enumerate_views(protocol, f1, x, y, &setup, &ranges))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Enumerated { pairs, counts, size })
}

fn report(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    cfg: &AuditConfig,
    target: AuditTarget,
    e: &Enumerated,
    tally: Tally,
) -> PrivacyReport {
    let verdict = if tally.worst == Rational::from_integer(0.into()) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    PrivacyReport {
        protocol: protocol.name().to_string(),
        n: e.pairs[0].0.len(),
        m: cfg.m,
        x_size: f1.x_alphabet().len(),
        y_size: f1.y_alphabet().len(),
        modulus: cfg.field.modulus(),
        definition: target,
        conditioning: match cfg.conditioning {
            Conditioning::Full => "full".to_string(),
            Conditioning::FixedIndexSet(_) => "fixed-index-set".to_string(),
        },
        input_pairs: e.pairs.len(),
        comparisons: tally.comparisons,
        verdict,
        worst_distance: rational::format_rational(&tally.worst),
        witness: tally.witness,
        enumeration_size: e.size,
    }
}

/// Alice's view must not depend on `y`: fixes `x` and compares every `y`.
pub fn audit_privacy_alice(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    x_fixed: &[usize],
    y_variants: &[Vec<usize>],
    cfg: &AuditConfig,
) -> Result<PrivacyReport, AnalysisError> {
    let pairs = y_variants.iter().map(|y| (x_fixed.to_vec(), y.clone())).collect();
    let e = enumerate_pairs(protocol, f1, pairs, cfg)?;
    let group: Vec<_> = e.pairs.iter().zip(&e.counts).collect();
    let mut tally = Tally::new();
    compare_group(&mut tally, Party::Alice, &group);
    Ok(report(protocol, f1, cfg, AuditTarget::AgainstAlice, &e, tally))
}

/// Bob's view must not depend on `x`: fixes `y` and compares every `x`.
pub fn audit_privacy_bob(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    y_fixed: &[usize],
    x_variants: &[Vec<usize>],
    cfg: &AuditConfig,
) -> Result<PrivacyReport, AnalysisError> {
    let pairs = x_variants.iter().map(|x| (x.clone(), y_fixed.to_vec())).collect();
    let e = enumerate_pairs(protocol, f1, pairs, cfg)?;
    let group: Vec<_> = e.pairs.iter().zip(&e.counts).collect();
    let mut tally = Tally::new();
    compare_group(&mut tally, Party::Bob, &group);
    Ok(report(protocol, f1, cfg, AuditTarget::AgainstBob, &e, tally))
}

/// Charlie's view given the estimate must not depend on the inputs.
pub fn audit_privacy_charlie(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    input_pairs: &[(Vec<usize>, Vec<usize>)],
    cfg: &AuditConfig,
) -> Result<PrivacyReport, AnalysisError> {
    let e = enumerate_pairs(protocol, f1, input_pairs.to_vec(), cfg)?;
    let group: Vec<_> = e.pairs.iter().zip(&e.counts).collect();
    let mut tally = Tally::new();
    compare_charlie(&mut tally, &group);
    Ok(report(protocol, f1, cfg, AuditTarget::AgainstCharlie, &e, tally))
}

/// All three definitions over every input pair in `X^n × Y^n`, sharing one
/// enumeration per pair.
pub fn audit_all(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    n: usize,
    cfg: &AuditConfig,
) -> Result<[PrivacyReport; 3], AnalysisError> {
    let xs = all_sequences(n, f1.x_alphabet().len());
    let ys = all_sequences(n, f1.y_alphabet().len());
    let pairs: Vec<Pair> = xs
        .iter()
        .flat_map(|x| ys.iter().map(move |y| (x.clone(), y.clone())))
        .collect();
    let e = enumerate_pairs(protocol, f1, pairs, cfg)?;
    let all: Vec<_> = e.pairs.iter().zip(&e.counts).collect();

    let mut alice = Tally::new();
    for x in &xs {
        let group: Vec<_> = all.iter().copied().filter(|(p, _)| &p.0 == x).collect();
        compare_group(&mut alice, Party::Alice, &group);
    }
    let mut bob = Tally::new();
    for y in &ys {
        let group: Vec<_> = all.iter().copied().filter(|(p, _)| &p.1 == y).collect();
        compare_group(&mut bob, Party::Bob, &group);
    }
    let mut charlie = Tally::new();
    compare_charlie(&mut charlie, &all);

    Ok([
        report(protocol, f1, cfg, AuditTarget::AgainstAlice, &e, alice),
        report(protocol, f1, cfg, AuditTarget::AgainstBob, &e, bob),
        report(protocol, f1, cfg, AuditTarget::AgainstCharlie, &e, charlie),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{OneTimePad, PolyDirect, PolyL};
    use crate::funcspec::{builtin, Alphabet};
    use crate::rational::ratio;

    fn cfg(p: u64) -> AuditConfig {
        AuditConfig::new(1, PrimeField::new(p).unwrap())
    }

    #[test]
    fn sequences_are_enumerated_lexicographically() {
        assert_eq!(
            all_sequences(2, 2),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(all_sequences(0, 3), vec![Vec::<usize>::new()]);
        assert_eq!(all_sequences(3, 3).len(), 27);
    }

    #[test]
    fn total_variation_is_exact() {
        let a: HashMap<String, u128> = [("u".to_string(), 1), ("v".to_string(), 3)].into();
        let b: HashMap<String, u128> = [("v".to_string(), 1), ("w".to_string(), 1)].into();
        // P = (1/4, 3/4, 0), Q = (0, 1/2, 1/2): ½(1/4 + 1/4 + 1/2) = 1/2.
        assert_eq!(total_variation(&a, 4, &b, 2), ratio(1, 2));
        assert_eq!(total_variation(&a, 4, &a, 4), ratio(0, 1));
    }

    #[test]
    fn otp_alice_audit_over_all_y() {
        let f1 = builtin::hamming(2);
        let ys = all_sequences(2, 2);
        let r = audit_privacy_alice(&OneTimePad, &f1, &[0, 1], &ys, &cfg(3)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.worst_distance, "0");
        assert_eq!(r.comparisons, 6);
        // I: 2, pads: 2·2, share matrix: 3^4, salt: 3.
        assert_eq!(r.enumeration_size, 4 * 2 * 4 * 81 * 3);
    }

    #[test]
    fn zero_function_passes_everywhere() {
        let f1 = FunctionTable::new(Alphabet::numeric(2), Alphabet::numeric(2), vec![ratio(0, 1); 4]).unwrap();
        for protocol in [&OneTimePad as &dyn Protocol, &PolyL, &PolyDirect] {
            let field = protocol.default_field(&f1, 1);
            for r in audit_all(protocol, &f1, 2, &AuditConfig::new(1, field)).unwrap() {
                assert_eq!(r.verdict, Verdict::Pass, "{} {:?}", r.protocol, r.definition);
            }
        }
    }

    #[test]
    fn singleton_alphabet_is_trivially_private() {
        let f1 = FunctionTable::new(
            Alphabet::numeric(2),
            Alphabet::numeric(1),
            vec![ratio(1, 1), ratio(0, 1)],
        )
        .unwrap();
        let r = audit_privacy_alice(&OneTimePad, &f1, &[0, 1], &all_sequences(2, 1), &cfg(3)).unwrap();
        assert_eq!((r.verdict, r.comparisons), (Verdict::Pass, 0));
    }

    #[test]
    fn disjoint_supports_pass_vacuously() {
        let f1 = builtin::hamming(2);
        let pairs = vec![(vec![0, 0], vec![0, 0]), (vec![0, 0], vec![1, 1])];
        let r = audit_privacy_charlie(&OneTimePad, &f1, &pairs, &cfg(3)).unwrap();
        assert_eq!((r.verdict, r.comparisons), (Verdict::Pass, 0));
    }

    #[test]
    fn budget_is_checked_before_enumerating() {
        let f1 = builtin::hamming(2);
        let mut c = cfg(3);
        c.budget = 1000;
        let err = audit_privacy_alice(&OneTimePad, &f1, &[0, 1], &all_sequences(2, 2), &c).unwrap_err();
        assert_eq!(
            err,
            AnalysisError::BudgetExceeded {
                required: (4u64 * 2 * 4 * 81 * 3).to_string(),
                budget: 1000
            }
        );
    }

    #[test]
    fn fixed_index_set_mode_is_labelled() {
        let f1 = builtin::hamming(2);
        let mut c = cfg(3);
        c.conditioning = Conditioning::FixedIndexSet(IndexSet::new(2, vec![2]).unwrap());
        let r = audit_privacy_bob(&OneTimePad, &f1, &[1, 0], &all_sequences(2, 2), &c).unwrap();
        assert_eq!(r.conditioning, "fixed-index-set");
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.enumeration_size, 4 * 4 * 81 * 3);
    }
}
