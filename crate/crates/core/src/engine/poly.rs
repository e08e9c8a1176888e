//! Polynomial-sharing protocols.
//!
//! Alice and Bob give every sampled value a degree-1 share at abscissas 1, 2
//! and 3 (Alice keeps 1, Bob keeps 2, Charlie gets 3). Each party evaluates
//! the same bilinear expression on its shares, which yields one sample of a
//! degree-2 polynomial whose constant term is `D·m·F̂`. Alice and Bob send
//! Charlie their samples and Charlie interpolates at zero.
//!
//! [`PolyL`] shares the indicators `1{x_i = x}` and `1{y_i = y}`;
//! [`PolyDirect`] shares the factors of `f1`'s product form.

use crate::field::{decode_centered, field_size_bound, is_prime, lagrange_weights_123, FieldElement, PrimeField};
use crate::funcspec::{FunctionTable, ProductForm};
use crate::randomness::{Party, Randomness};
use crate::rational::Rational;
use crate::sampling::IndexSet;
use crate::sharing::degree1_share;

use super::{
    distribute_index_set, receive_index_set, sample_index_set, validate_inputs, EngineError, Network, Protocol,
    ProtocolResult, RunSetup, Tag,
};

/// Shares at abscissas 1, 2, 3 need three distinct nonzero residues.
const MIN_MODULUS: u64 = 5;

#[derive(Clone, Copy, Debug, Default)]
pub struct PolyL;

#[derive(Clone, Copy, Debug, Default)]
pub struct PolyDirect;

impl Protocol for PolyL {
    fn name(&self) -> &str {
        "poly-l"
    }

    fn default_field(&self, f1: &FunctionTable, m: usize) -> PrimeField {
        smallest_admissible(field_size_bound(f1, m), |_| true)
    }

    fn execute(
        &self,
        f1: &FunctionTable,
        x_seq: &[usize],
        y_seq: &[usize],
        setup: &RunSetup,
        rng: &mut dyn Randomness,
    ) -> Result<ProtocolResult, EngineError> {
        check_field(setup.field)?;
        let form = ProductForm::indicator(f1);
        run_bilinear(self.name(), f1, &form, x_seq, y_seq, setup, rng)
    }
}

impl Protocol for PolyDirect {
    fn name(&self) -> &str {
        "poly-direct"
    }

    fn default_field(&self, f1: &FunctionTable, m: usize) -> PrimeField {
        let form = f1.effective_product_form();
        smallest_admissible(field_size_bound(f1, m), |p| coprime_with_form(&form, p))
    }

    fn execute(
        &self,
        f1: &FunctionTable,
        x_seq: &[usize],
        y_seq: &[usize],
        setup: &RunSetup,
        rng: &mut dyn Randomness,
    ) -> Result<ProtocolResult, EngineError> {
        check_field(setup.field)?;
        let form = f1.effective_product_form();
        if !coprime_with_form(&form, setup.field.modulus()) {
            return Err(EngineError::DenominatorNotInvertible(setup.field.modulus()));
        }
        run_bilinear(self.name(), f1, &form, x_seq, y_seq, setup, rng)
    }
}

fn check_field(field: PrimeField) -> Result<(), EngineError> {
    if field.modulus() < MIN_MODULUS {
        return Err(EngineError::AbscissaCollision(field.modulus()));
    }
    Ok(())
}

fn coprime_with_form(form: &ProductForm, p: u64) -> bool {
    let p = num_bigint::BigInt::from(p);
    form.denominators().all(|d| d % &p != num_bigint::BigInt::from(0))
}

fn smallest_admissible(bound: u64, ok: impl Fn(u64) -> bool) -> PrimeField {
    let mut p = bound.saturating_add(1).max(MIN_MODULUS);
    while !(is_prime(p) && ok(p)) {
        p += 1;
    }
    PrimeField::new(p).expect("search returns a prime")
}

/// Degree-1 shares of `secrets[i][j]` for sampled position `i` and factor
/// `j`, flattened row-major and grouped by abscissa.
fn share_all(
    net: &mut Network<'_>,
    owner: Party,
    label: &'static str,
    secrets: &[Vec<FieldElement>],
) -> [Vec<FieldElement>; 3] {
    let mut out: [Vec<FieldElement>; 3] = Default::default();
    for row in secrets {
        for &s in row {
            let triple = degree1_share(s, |r| net.draw(owner, label, r));
            for (k, slot) in out.iter_mut().enumerate() {
                slot.push(triple.at[k]);
            }
        }
    }
    out
}

fn encode_factors(factors: &[Vec<Rational>], field: PrimeField) -> Result<Vec<Vec<FieldElement>>, EngineError> {
    factors
        .iter()
        .map(|f| f.iter().map(|q| Ok(field.encode_fraction(q)?)).collect())
        .collect()
}

/// `Σ_i Σ_(j,k) c_jk · A_ij · B_ik` on one party's shares.
fn bilinear_sample(
    a: &[FieldElement],
    b: &[FieldElement],
    coupling: &[(usize, usize, FieldElement)],
    m: usize,
    j_count: usize,
    k_count: usize,
    field: PrimeField,
) -> FieldElement {
    let mut acc = field.zero();
    for i in 0..m {
        for &(j, k, c) in coupling {
            acc = acc + c * a[i * j_count + j] * b[i * k_count + k];
        }
    }
    acc
}

fn to_residues(v: &[FieldElement]) -> Vec<u64> {
    v.iter().map(|e| e.value()).collect()
}

fn from_residues(field: PrimeField, v: &[u64]) -> Vec<FieldElement> {
    v.iter().map(|&r| field.from_residue(r)).collect()
}

fn run_bilinear(
    name: &str,
    f1: &FunctionTable,
    form: &ProductForm,
    x_seq: &[usize],
    y_seq: &[usize],
    setup: &RunSetup,
    rng: &mut dyn Randomness,
) -> Result<ProtocolResult, EngineError> {
    validate_inputs(f1, x_seq, y_seq, setup)?;
    let (n, m) = (x_seq.len(), setup.m);
    let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
    let field = setup.field;
    let a_enc = encode_factors(form.alice_factors(), field)?;
    let b_enc = encode_factors(form.bob_factors(), field)?;
    let (j_count, k_count) = (a_enc.len(), b_enc.len());
    let coupling: Vec<(usize, usize, FieldElement)> = form
        .coupling()
        .iter()
        .map(|c| Ok((c.alice, c.bob, field.encode_fraction(&c.coefficient)?)))
        .collect::<Result<_, EngineError>>()?;
    let mut net = Network::new(n, nx, ny, field, rng);

    // Round 1: index set.
    let alice_set = sample_index_set(&mut net, n, setup)?;
    distribute_index_set(&mut net, 1, &alice_set);
    let bob_set = receive_index_set(&mut net, n)?;

    // Round 2: shares of every sampled factor value.
    let alice_secrets: Vec<Vec<FieldElement>> = alice_set
        .positions()
        .map(|i| a_enc.iter().map(|a| a[x_seq[i]]).collect())
        .collect();
    let [a_at1, a_at2, a_at3] = share_all(&mut net, Party::Alice, "slope_x", &alice_secrets);
    net.send(2, Party::Alice, Party::Bob, Tag::SHARES_X, to_residues(&a_at2));
    net.send(2, Party::Alice, Party::Charlie, Tag::SHARES_X, to_residues(&a_at3));

    let bob_secrets: Vec<Vec<FieldElement>> = bob_set
        .positions()
        .map(|i| b_enc.iter().map(|b| b[y_seq[i]]).collect())
        .collect();
    let [b_at1, b_at2, b_at3] = share_all(&mut net, Party::Bob, "slope_y", &bob_secrets);
    net.send(2, Party::Bob, Party::Alice, Tag::SHARES_Y, to_residues(&b_at1));
    net.send(2, Party::Bob, Party::Charlie, Tag::SHARES_Y, to_residues(&b_at3));

    let alice_b = from_residues(field, &net.recv(Party::Alice, Party::Bob, Tag::SHARES_Y)?);
    let bob_a = from_residues(field, &net.recv(Party::Bob, Party::Alice, Tag::SHARES_X)?);
    let charlie_a = from_residues(field, &net.recv(Party::Charlie, Party::Alice, Tag::SHARES_X)?);
    let charlie_b = from_residues(field, &net.recv(Party::Charlie, Party::Bob, Tag::SHARES_Y)?);

    let sample = |a: &[FieldElement], b: &[FieldElement]| bilinear_sample(a, b, &coupling, m, j_count, k_count, field);
    let f_at1 = sample(&a_at1, &alice_b);
    let f_at2 = sample(&bob_a, &b_at2);
    let f_at3 = sample(&charlie_a, &charlie_b);
    check_samples(f1, x_seq, y_seq, &alice_set, [f_at1, f_at2, f_at3])?;

    // Round 3: Alice and Bob send their polynomial samples to Charlie.
    net.send(3, Party::Alice, Party::Charlie, Tag::POLY_SAMPLE, vec![f_at1.value()]);
    net.send(3, Party::Bob, Party::Charlie, Tag::POLY_SAMPLE, vec![f_at2.value()]);
    let s1 = field.from_residue(net.recv(Party::Charlie, Party::Alice, Tag::POLY_SAMPLE)?[0]);
    let s2 = field.from_residue(net.recv(Party::Charlie, Party::Bob, Tag::POLY_SAMPLE)?[0]);
    let [w1, w2, w3] = lagrange_weights_123(field);
    let at_zero = w1 * s1 + w2 * s2 + w3 * f_at3;
    let d = f1.common_denominator();
    let scaled = at_zero * field.element(d as i128);
    net.set_output(decode_centered(scaled, d, m as u64));

    Ok(net.finish(name, m, nx, ny, alice_set))
}

/// The three samples must interpolate to `D·Σ_{i∈I} f1(x_i, y_i)`.
fn check_samples(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    index_set: &IndexSet,
    samples: [FieldElement; 3],
) -> Result<(), EngineError> {
    let field = samples[0].field();
    let [w1, w2, w3] = lagrange_weights_123(field);
    let at_zero = w1 * samples[0] + w2 * samples[1] + w3 * samples[2];
    let expected: i128 = index_set
        .positions()
        .map(|i| f1.scaled(x_seq[i], y_seq[i]) as i128)
        .sum();
    let d = field.element(f1.common_denominator() as i128);
    if at_zero * d != field.element(expected) {
        return Err(EngineError::Inconsistent(
            "shared polynomial does not interpolate to the sampled sum".to_string(),
        ));
    }
    Ok(())
}
