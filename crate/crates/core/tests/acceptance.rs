//! Acceptance criteria. Each test prints one `criterion N [PASS|FAIL]` line
//! to stdout (uncaptured) and then asserts it.

use std::io::Write;
use std::time::{Duration, Instant};

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumtype_mpc::analysis::{
    all_sequences, audit_all, audit_privacy_charlie, comm_report, AuditConfig, FieldRule, MRule, PrivacyReport, Verdict,
};
use sumtype_mpc::engine::{run_protocol, Party, Protocol, ProtocolKind, ProtocolResult, RunOptions};
use sumtype_mpc::funcspec::{builtin, Alphabet, FunctionTable, ProductForm};
use sumtype_mpc::randomness::RngSource;
use sumtype_mpc::rational::{ratio, Rational};
use sumtype_mpc::sampling::{
    estimate_function, hypergeometric_stats, partial_frequency, sample_indices, worst_case_distortion, IndexSet,
    SearchMode, SequenceGenerator, DEFAULT_ENUMERATION_BUDGET,
};
use sumtype_mpc_testkit::SaltlessOtp;

fn verdict(id: &str, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {id} [{}] {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(std::io::stdout(), "{line}");
    assert!(pass, "{line}");
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

fn ceil_lg(v: u64) -> u64 {
    (0..64).find(|&b| (1u128 << b) >= v as u128).unwrap()
}

/// Plaintext subsample mean, with `I` read back from Alice's message to Bob.
fn plaintext_estimate(f1: &FunctionTable, x: &[usize], y: &[usize], r: &ProtocolResult) -> Rational {
    let msg = r
        .messages
        .iter()
        .find(|m| m.tag.name == "index_set" && m.from == Party::Alice && m.to == Party::Bob)
        .expect("index set message");
    let sum = msg
        .payload
        .iter()
        .fold(Rational::zero(), |acc, &i| acc + f1.value(x[i as usize], y[i as usize]));
    sum / ratio(msg.payload.len() as i128, 1)
}

fn random_table(rng: &mut ChaCha8Rng, nx: usize, ny: usize, with_form: bool) -> FunctionTable {
    let q = |rng: &mut ChaCha8Rng| ratio(rng.gen_range(-5..=5), rng.gen_range(1..=4));
    if with_form {
        let rank = rng.gen_range(1..=3);
        let terms = (0..rank)
            .map(|_| ((0..nx).map(|_| q(rng)).collect(), (0..ny).map(|_| q(rng)).collect()))
            .collect();
        let form = ProductForm::from_terms(terms);
        let values = (0..nx * ny).map(|i| form.evaluate(i / ny, i % ny)).collect();
        FunctionTable::new(Alphabet::numeric(nx), Alphabet::numeric(ny), values)
            .unwrap()
            .with_product_form(form)
            .unwrap()
    } else {
        let values = (0..nx * ny).map(|_| q(rng)).collect();
        FunctionTable::new(Alphabet::numeric(nx), Alphabet::numeric(ny), values).unwrap()
    }
}

#[test]
fn criterion_1_estimator_exactness_chain() {
    let start = Instant::now();
    let mut checked = 0u64;
    let mut ok = true;
    for n in 1..=10usize {
        // Binary joint types: counts (N00, N01, N10, N11) summing to n.
        for c in (0..4)
            .map(|_| 0..=n)
            .multi_cartesian_product()
            .filter(|c| c.iter().sum::<usize>() == n)
        {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (cell, &count) in c.iter().enumerate() {
                x.extend(std::iter::repeat_n(cell / 2, count));
                y.extend(std::iter::repeat_n(cell % 2, count));
            }
            for m in 1..=n {
                let mut subsets = 0i128;
                let mut s1 = [0i128; 4];
                let mut s2 = [0i128; 4];
                for idx in (1..=n).combinations(m) {
                    let set = IndexSet::new(n, idx).unwrap();
                    let est = partial_frequency(&x, &y, &set, 2, 2).unwrap();
                    for cell in 0..4 {
                        let l = est.counts()[cell] as i128;
                        s1[cell] += l;
                        s2[cell] += l * l;
                    }
                    subsets += 1;
                }
                let (ni, mi) = (n as i128, m as i128);
                for cell in 0..4 {
                    let big_n = c[cell] as i128;
                    // E[L/m] = N/n  ⇔  s1·n = C·m·N
                    ok &= s1[cell] * ni == subsets * mi * big_n;
                    // Var[L/m] = s2/(C m²) − N²/n², against N(n−N)(n−m)/(m n² (n−1)).
                    let var =
                        Rational::new(s2[cell].into(), (subsets * mi * mi).into()) - ratio(big_n * big_n, ni * ni);
                    let expected = if n == 1 {
                        Rational::zero()
                    } else {
                        ratio(big_n * (ni - big_n) * (ni - mi), mi * ni * ni * (ni - 1))
                    };
                    ok &= var == expected;
                    let (mean_lib, var_lib) = hypergeometric_stats(n, m, c[cell] as u64).unwrap();
                    ok &= mean_lib == ratio(big_n, ni) && var_lib == expected;
                    checked += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "1",
        "estimator mean and variance match the hypergeometric closed forms",
        ok && within(elapsed, 10),
        &format!(
            "{checked} (type, m, cell) cases, zero tolerance, {:.2?} (limit 10s)",
            elapsed
        ),
    );
}

/// Independent brute force of `max_{x,y} E|F̂ − f|`.
fn brute_force_e(f1: &FunctionTable, n: usize, m: usize) -> Rational {
    let mut best = Rational::zero();
    for x in all_sequences(n, 2) {
        for y in all_sequences(n, 2) {
            let f = (0..n).fold(Rational::zero(), |a, i| a + f1.value(x[i], y[i])) / ratio(n as i128, 1);
            let mut acc = Rational::zero();
            let mut count = 0i128;
            for idx in (0..n).combinations(m) {
                let s = idx.iter().fold(Rational::zero(), |a, &i| a + f1.value(x[i], y[i])) / ratio(m as i128, 1);
                acc += (s - &f).abs();
                count += 1;
            }
            best = best.max(acc / ratio(count, 1));
        }
    }
    best
}

#[test]
fn criterion_2_distortion_bound() {
    let start = Instant::now();
    let mut ok = true;
    let mut cells = 0;
    let mut worst_ratio = 0.0f64;
    for f1 in [builtin::hamming(2), builtin::equality(2)] {
        let norm2 = f1.values().iter().fold(Rational::zero(), |a, v| a + v * v);
        for n in 1..=6usize {
            for m in 1..=n {
                let wc = worst_case_distortion(&f1, n, m, SearchMode::Exhaustive, DEFAULT_ENUMERATION_BUDGET).unwrap();
                let e = wc.exact.clone().expect("exhaustive mode is exact");
                ok &= &e * &e * ratio(m as i128, 1) <= norm2;
                if n <= 4 {
                    ok &= e == brute_force_e(&f1, n, m);
                }
                if m == n {
                    ok &= e.is_zero();
                }
                let bound = norm2.to_f64().unwrap().sqrt() / (m as f64).sqrt();
                worst_ratio = worst_ratio.max(e.to_f64().unwrap() / bound);
                cells += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "2",
        "exhaustive e_n never exceeds ||f1||_2/sqrt(m)",
        ok && within(elapsed, 60),
        &format!(
            "{cells} (f1, n, m) cells, max e_n/bound = {worst_ratio:.4}, {:.2?} (limit 60s)",
            elapsed
        ),
    );
}

#[test]
fn criterion_3_protocol_correctness_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for kind in ProtocolKind::ALL {
        for trial in 0..1000 {
            let (nx, ny) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let f1 = random_table(&mut rng, nx, ny, kind == ProtocolKind::PolyDirect && trial % 2 == 0);
            let n = rng.gen_range(1..=30);
            let m = rng.gen_range(1..=n);
            let x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..nx)).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ny)).collect();
            let seed = rng.gen();
            let r = run_protocol(kind.protocol(), &f1, &x, &y, m, seed, &RunOptions::default()).unwrap();
            if r.estimate != plaintext_estimate(&f1, &x, &y, &r) {
                mismatches.push(format!("{kind} trial {trial}"));
            }
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        "3",
        "protocol estimates equal the plaintext subsample mean",
        mismatches.is_empty() && within(elapsed, 60),
        &format!(
            "{runs} runs (1000 per protocol), {} mismatches {:?}, {:.2?} (limit 60s)",
            mismatches.len(),
            mismatches.first(),
            elapsed
        ),
    );
}

#[test]
fn criterion_4_full_sample_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut ok = true;
    let mut runs = 0;
    for kind in ProtocolKind::ALL {
        for _ in 0..100 {
            let (nx, ny) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let f1 = random_table(&mut rng, nx, ny, kind == ProtocolKind::PolyDirect);
            let n = rng.gen_range(1..=25);
            let x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..nx)).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ny)).collect();
            let f_n = (0..n).fold(Rational::zero(), |a, i| a + f1.value(x[i], y[i])) / ratio(n as i128, 1);
            let r = run_protocol(kind.protocol(), &f1, &x, &y, n, rng.gen(), &RunOptions::default()).unwrap();
            ok &= r.estimate == f_n;
            runs += 1;
        }
    }
    verdict(
        "4",
        "m = n returns f_n exactly",
        ok,
        &format!("{runs} runs across otp, poly-l, poly-direct"),
    );
}

#[test]
fn criterion_5_cost_reconciliation() {
    let alphabets = [(2usize, 2usize), (2, 3), (3, 2), (3, 3), (4, 5)];
    let ms = [1usize, 3, 6, 10];
    let ns = [16usize, 40, 100, 1000];
    let mut cells = [0usize; 3];
    let mut mismatches = Vec::new();
    for (ai, &(nx, ny)) in alphabets.iter().enumerate() {
        let general = {
            let values = (0..nx * ny).map(|i| ratio((i as i128 * 7) % 5 - 2, 1)).collect();
            FunctionTable::new(Alphabet::numeric(nx), Alphabet::numeric(ny), values).unwrap()
        };
        let rank_one = {
            let a: Vec<Rational> = (0..nx as i128).map(|v| ratio(v + 1, 1)).collect();
            let b: Vec<Rational> = (0..ny as i128).map(|v| ratio(v - 1, 1)).collect();
            let form = ProductForm::from_terms(vec![(a, b)]);
            let values = (0..nx * ny).map(|i| form.evaluate(i / ny, i % ny)).collect();
            FunctionTable::new(Alphabet::numeric(nx), Alphabet::numeric(ny), values)
                .unwrap()
                .with_product_form(form)
                .unwrap()
        };
        for (mi, &m) in ms.iter().enumerate() {
            let n = ns[(ai + mi) % ns.len()];
            let (x, y) = SequenceGenerator::Random {
                seed: (ai * 10 + mi) as u64,
            }
            .generate(n, nx, ny);
            for modulus in [None, Some(1009)] {
                for (pi, kind) in ProtocolKind::ALL.into_iter().enumerate() {
                    let f1 = if kind == ProtocolKind::PolyDirect {
                        &rank_one
                    } else {
                        &general
                    };
                    let opts = RunOptions {
                        modulus,
                        fixed_index_set: None,
                    };
                    let r = run_protocol(kind.protocol(), f1, &x, &y, m, 5, &opts).unwrap();
                    let lp = ceil_lg(r.params.modulus);
                    let (m64, nx64, ny64) = (m as u64, nx as u64, ny as u64);
                    let extra = match kind {
                        ProtocolKind::Otp => 2 * m64 * (ceil_lg(nx64) + ceil_lg(ny64) + nx64 * ny64 * lp) + 3 * lp,
                        ProtocolKind::PolyL => (2 * m64 * (nx64 + ny64) + 2) * lp,
                        ProtocolKind::PolyDirect => (4 * m64 + 2) * lp,
                    };
                    let expected = m64 * ceil_lg(n as u64) + extra;
                    let metered: u64 = r.messages.iter().map(|msg| msg.bit_cost).sum();
                    if metered != expected || r.total_bits != expected {
                        mismatches.push(format!("{kind} {nx}x{ny} n={n} m={m} p={}", r.params.modulus));
                    }
                    cells[pi] += 1;
                }
            }
        }
    }
    verdict(
        "5",
        "metered bits equal the closed-form costs",
        mismatches.is_empty() && cells.iter().all(|&c| c >= 20),
        &format!("cells per protocol {cells:?}, mismatches {mismatches:?}"),
    );
}

fn criterion_6_instances() -> Vec<FunctionTable> {
    vec![builtin::hamming(2), builtin::product(2)]
}

fn audit_line(reports: &[PrivacyReport]) -> String {
    reports
        .iter()
        .map(|r| {
            let w = r.witness.as_deref().map(|w| format!(" [{w}]")).unwrap_or_default();
            let v = if r.verdict == Verdict::Pass { "pass" } else { "fail" };
            format!("{}/{v} p={} tv={}{w}", r.definition.name(), r.modulus, r.worst_distance)
        })
        .join("; ")
}

fn criterion_6_for(kind: ProtocolKind) {
    let start = Instant::now();
    let protocol = kind.protocol();
    let mut all = Vec::new();
    for f1 in criterion_6_instances() {
        let cfg = AuditConfig::new(1, protocol.default_field(&f1, 1));
        let reports = audit_all(protocol, &f1, 2, &cfg).unwrap();
        all.push((f1.name().to_string(), reports));
    }
    let elapsed = start.elapsed();
    let pass = all.iter().all(|(_, rs)| rs.iter().all(|r| r.verdict == Verdict::Pass));
    let detail = all
        .iter()
        .map(|(name, rs)| format!("{name}: {}", audit_line(rs)))
        .join(" | ");
    verdict(
        &format!("6/{kind}"),
        "exact view-distribution equality, n=2 m=1 |X|=|Y|=2, smallest admissible prime, all input pairs",
        pass && within(elapsed, 300),
        &format!("{detail}; {:.2?}", elapsed),
    );
}

#[test]
fn criterion_6_privacy_otp() {
    criterion_6_for(ProtocolKind::Otp);
}

#[test]
fn criterion_6_privacy_poly_l() {
    criterion_6_for(ProtocolKind::PolyL);
}

#[test]
fn criterion_6_privacy_poly_direct() {
    criterion_6_for(ProtocolKind::PolyDirect);
}

#[test]
fn criterion_6_negative_control_fails() {
    let mut lines = Vec::new();
    let mut any_fail = false;
    for f1 in criterion_6_instances() {
        let pairs: Vec<_> = all_sequences(2, 2)
            .into_iter()
            .cartesian_product(all_sequences(2, 2))
            .collect();
        let cfg = AuditConfig::new(1, SaltlessOtp.default_field(&f1, 1));
        let r = audit_privacy_charlie(&SaltlessOtp, &f1, &pairs, &cfg).unwrap();
        any_fail |= r.verdict == Verdict::Fail;
        lines.push(format!("{}: {}", f1.name(), audit_line(std::slice::from_ref(&r))));
    }
    verdict(
        "6/negative-control",
        "salt-stripped one-time pad fails the Charlie audit",
        any_fail,
        &lines.join(" | "),
    );
}

#[test]
fn criterion_7_vanishing_rate() {
    let f1 = builtin::hamming(2);
    let ns: Vec<usize> = (6..=16).map(|k| 1usize << k).collect();
    let rows = comm_report(ProtocolKind::PolyL, &f1, &ns, MRule::Sqrt, FieldRule::Minimal, true).unwrap();
    let mut ok = rows.len() == ns.len() && rows.iter().all(|r| r.live_match == Some(true));
    // Independent recomputation of k = m⌈lg n⌉ + (2m(|X|+|Y|)+2)⌈lg p⌉.
    let mut rates = Vec::new();
    for (row, &n) in rows.iter().zip(&ns) {
        let m = (1..).find(|&c: &u64| c * c >= n as u64).unwrap();
        ok &= row.m as u64 == m;
        let p = row.modulus;
        ok &= p > 2 * m && (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0);
        ok &= !(2 * m + 1..p).any(|q| q >= 5 && (2..q).take_while(|d| d * d <= q).all(|d| q % d != 0));
        let k = m * ceil_lg(n as u64) + (2 * m * 4 + 2) * ceil_lg(p);
        ok &= row.total_bits == k;
        rates.push(Rational::new(BigInt::from(k), BigInt::from(n)));
    }
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    let shrink = (&rates[rates.len() - 1] / &rates[0]).to_f64().unwrap();
    verdict(
        "7",
        "R with m = ceil(sqrt n) strictly decreases and R(2^16)/R(2^6) < 0.1 (poly-l, binary)",
        ok && decreasing && shrink < 0.1,
        &format!(
            "R = [{}], ratio {shrink:.4}",
            rates.iter().map(|r| format!("{:.4}", r.to_f64().unwrap())).join(", ")
        ),
    );
}

#[test]
fn criterion_8_monte_carlo_distortion() {
    let start = Instant::now();
    let (n, m, trials) = (10_000usize, 100usize, 10_000u64);
    let f1 = builtin::hamming(2);
    let (x, y) = SequenceGenerator::HalfMismatch.generate(n, 2, 2);
    let f_n = f1.eval_sum_type(&x, &y).unwrap();

    // Exact E|L/m − f_n| with L ~ Hypergeometric(n, K, m), K mismatched positions.
    let k_total = (0..n).filter(|&i| x[i] != y[i]).count() as u64;
    let binom = |a: u64, b: u64| -> BigInt {
        if b > a {
            return BigInt::zero();
        }
        (0..b).fold(BigInt::from(1), |acc, i| {
            acc * BigInt::from(a - i) / BigInt::from(i + 1)
        })
    };
    let total = binom(n as u64, m as u64);
    let mut exact = Rational::zero();
    for l in 0..=m as u64 {
        let w = binom(k_total, l) * binom(n as u64 - k_total, m as u64 - l);
        exact += Rational::new(w, total.clone()) * (ratio(l as i128, m as i128) - &f_n).abs();
    }
    let exact = exact.to_f64().unwrap();

    let mut rng = RngSource(ChaCha8Rng::seed_from_u64(0xC8));
    let f_n_f = f_n.to_f64().unwrap();
    let mut acc = 0.0;
    for _ in 0..trials {
        let set = sample_indices(n, m, &mut rng).unwrap();
        acc += (estimate_function(&f1, &x, &y, &set).unwrap().to_f64().unwrap() - f_n_f).abs();
    }
    let empirical = acc / trials as f64;
    let bound = 2f64.sqrt() / 10.0;
    let elapsed = start.elapsed();
    verdict(
        "8",
        "Monte Carlo mean |F_hat - f_n| within sqrt(2)/10 and 3x the exact expectation",
        empirical <= bound && empirical <= 3.0 * exact && within(elapsed, 60),
        &format!(
            "empirical {empirical:.5} over {trials} trials, exact {exact:.5}, bound {bound:.5}, {:.2?} (limit 60s)",
            elapsed
        ),
    );
}
