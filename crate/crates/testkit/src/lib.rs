//! Control protocols for the privacy auditor.
//!
//! [`SaltlessOtp`] is the one-time-pad protocol with the salt removed, so
//! Charlie receives `F_A` and `F_B` in the clear; it must fail the Charlie
//! audit. [`RerandomizedPolyL`] is the indicator-sharing polynomial protocol
//! with a zero-constant degree-2 mask added to the product polynomial; it
//! should pass all three audits.

use sumtype_mpc::engine::{
    distribute_index_set, receive_index_set, sample_index_set, validate_inputs, EngineError, Network, Party, Protocol,
    ProtocolResult, RunSetup, Tag, Unit,
};
use sumtype_mpc::field::{decode_centered, field_size_bound, is_prime, lagrange_weights_123, FieldElement, PrimeField};
use sumtype_mpc::funcspec::{FunctionTable, ProductForm};
use sumtype_mpc::randomness::Randomness;
use sumtype_mpc::sharing::{additive_split, degree1_share, pad_shift, PadDirection, PadSymbol};

const PARTIAL_SUM: Tag = Tag::new("partial_sum", Unit::Field);
const MASK_SAMPLE: Tag = Tag::new("mask_sample", Unit::Field);

#[derive(Clone, Copy, Debug, Default)]
pub struct SaltlessOtp;

impl Protocol for SaltlessOtp {
    fn name(&self) -> &str {
        "broken-otp"
    }

    fn execute(
        &self,
        f1: &FunctionTable,
        x_seq: &[usize],
        y_seq: &[usize],
        setup: &RunSetup,
        rng: &mut dyn Randomness,
    ) -> Result<ProtocolResult, EngineError> {
        validate_inputs(f1, x_seq, y_seq, setup)?;
        let (n, m) = (x_seq.len(), setup.m);
        let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
        let field = setup.field;
        let f_enc = f1.to_field(field)?;
        let mut net = Network::new(n, nx, ny, field, rng);

        let alice_set = sample_index_set(&mut net, n, setup)?;
        distribute_index_set(&mut net, 1, &alice_set);
        let bob_set = receive_index_set(&mut net, n)?;

        let mut alpha = Vec::new();
        let mut masked_x = Vec::new();
        for i in alice_set.positions() {
            let pad = PadSymbol::random(nx, |r| net.draw(Party::Alice, "pad_x", r));
            masked_x.push(pad_shift(x_seq[i], pad, PadDirection::Encrypt)? as u64);
            alpha.push(pad.shift());
        }
        net.send(2, Party::Alice, Party::Charlie, Tag::MASKED_X, masked_x);
        let mut beta = Vec::new();
        let mut masked_y = Vec::new();
        for i in bob_set.positions() {
            let pad = PadSymbol::random(ny, |r| net.draw(Party::Bob, "pad_y", r));
            masked_y.push(pad_shift(y_seq[i], pad, PadDirection::Encrypt)? as u64);
            beta.push(pad.shift());
        }
        net.send(2, Party::Bob, Party::Charlie, Tag::MASKED_Y, masked_y);

        let cx = net.recv(Party::Charlie, Party::Alice, Tag::MASKED_X)?;
        let cy = net.recv(Party::Charlie, Party::Bob, Tag::MASKED_Y)?;
        let (mut share_a, mut share_b) = (Vec::new(), Vec::new());
        for (&xb, &yb) in cx.iter().zip(&cy) {
            for cell in 0..nx * ny {
                let entry = if cell == xb as usize * ny + yb as usize {
                    field.one()
                } else {
                    field.zero()
                };
                let (a, b) = additive_split(entry, |r| net.draw(Party::Charlie, "share_matrix", r));
                share_a.push(a.value());
                share_b.push(b.value());
            }
        }
        net.send(3, Party::Charlie, Party::Alice, Tag::INDICATOR_SHARES, share_a);
        net.send(3, Party::Charlie, Party::Bob, Tag::INDICATOR_SHARES, share_b);
        net.send(
            4,
            Party::Alice,
            Party::Bob,
            Tag::PAD_X,
            alpha.iter().map(|&s| s as u64).collect(),
        );
        net.send(
            4,
            Party::Bob,
            Party::Alice,
            Tag::PAD_Y,
            beta.iter().map(|&s| s as u64).collect(),
        );

        let alice_m = net.recv(Party::Alice, Party::Charlie, Tag::INDICATOR_SHARES)?;
        let alice_beta = net.recv(Party::Alice, Party::Bob, Tag::PAD_Y)?;
        let bob_m = net.recv(Party::Bob, Party::Charlie, Tag::INDICATOR_SHARES)?;
        let bob_alpha = net.recv(Party::Bob, Party::Alice, Tag::PAD_X)?;
        let alpha_u64: Vec<u64> = alpha.iter().map(|&s| s as u64).collect();
        let beta_u64: Vec<u64> = beta.iter().map(|&s| s as u64).collect();
        let f_a = fold(&f_enc, &alice_m, &alpha_u64, &alice_beta, nx, ny, field)?;
        let f_b = fold(&f_enc, &bob_m, &bob_alpha, &beta_u64, nx, ny, field)?;

        net.send(5, Party::Alice, Party::Charlie, PARTIAL_SUM, vec![f_a.value()]);
        net.send(5, Party::Bob, Party::Charlie, PARTIAL_SUM, vec![f_b.value()]);
        let s_a = field.from_residue(net.recv(Party::Charlie, Party::Alice, PARTIAL_SUM)?[0]);
        let s_b = field.from_residue(net.recv(Party::Charlie, Party::Bob, PARTIAL_SUM)?[0]);
        net.set_output(decode_centered(s_a + s_b, f1.common_denominator(), m as u64));
        Ok(net.finish(self.name(), m, nx, ny, alice_set))
    }
}

/// `Σ_{x,y} f1(x,y) Σ_i M_i(x + α_i, y + β_i)`.
fn fold(
    f_enc: &[FieldElement],
    matrices: &[u64],
    alpha: &[u64],
    beta: &[u64],
    nx: usize,
    ny: usize,
    field: PrimeField,
) -> Result<FieldElement, EngineError> {
    let cells = nx * ny;
    let mut acc = field.zero();
    for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        let (pa, pb) = (PadSymbol::new(a as usize, nx)?, PadSymbol::new(b as usize, ny)?);
        for x in 0..nx {
            for y in 0..ny {
                let xs = pad_shift(x, pa, PadDirection::Encrypt)?;
                let ys = pad_shift(y, pb, PadDirection::Encrypt)?;
                acc = acc + f_enc[x * ny + y] * field.from_residue(matrices[i * cells + xs * ny + ys]);
            }
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RerandomizedPolyL;

impl Protocol for RerandomizedPolyL {
    fn name(&self) -> &str {
        "poly-l-rerandomized"
    }

    fn default_field(&self, f1: &FunctionTable, m: usize) -> PrimeField {
        let mut p = field_size_bound(f1, m).saturating_add(1).max(5);
        while !is_prime(p) {
            p += 1;
        }
        PrimeField::new(p).expect("prime by search")
    }

    fn execute(
        &self,
        f1: &FunctionTable,
        x_seq: &[usize],
        y_seq: &[usize],
        setup: &RunSetup,
        rng: &mut dyn Randomness,
    ) -> Result<ProtocolResult, EngineError> {
        validate_inputs(f1, x_seq, y_seq, setup)?;
        if setup.field.modulus() < 5 {
            return Err(EngineError::AbscissaCollision(setup.field.modulus()));
        }
        let (n, m) = (x_seq.len(), setup.m);
        let (nx, ny) = (f1.x_alphabet().len(), f1.y_alphabet().len());
        let field = setup.field;
        let form = ProductForm::indicator(f1);
        let coupling: Vec<(usize, usize, FieldElement)> = form
            .coupling()
            .iter()
            .map(|c| Ok((c.alice, c.bob, field.encode_fraction(&c.coefficient)?)))
            .collect::<Result<_, EngineError>>()?;
        let mut net = Network::new(n, nx, ny, field, rng);

        let alice_set = sample_index_set(&mut net, n, setup)?;
        distribute_index_set(&mut net, 1, &alice_set);
        let bob_set = receive_index_set(&mut net, n)?;

        let mut a_sh: [Vec<FieldElement>; 3] = Default::default();
        for i in alice_set.positions() {
            for x in 0..nx {
                let secret = if x_seq[i] == x { field.one() } else { field.zero() };
                let t = degree1_share(secret, |r| net.draw(Party::Alice, "slope_x", r));
                for (slot, v) in a_sh.iter_mut().zip(t.at) {
                    slot.push(v);
                }
            }
        }
        let mut b_sh: [Vec<FieldElement>; 3] = Default::default();
        for i in bob_set.positions() {
            for y in 0..ny {
                let secret = if y_seq[i] == y { field.one() } else { field.zero() };
                let t = degree1_share(secret, |r| net.draw(Party::Bob, "slope_y", r));
                for (slot, v) in b_sh.iter_mut().zip(t.at) {
                    slot.push(v);
                }
            }
        }
        // Mask r(q) = r1·q + r2·q², dealt by Alice.
        let r1 = field.from_residue(net.draw(Party::Alice, "mask", field.modulus()));
        let r2 = field.from_residue(net.draw(Party::Alice, "mask", field.modulus()));
        let r_at = |q: i128| r1 * field.element(q) + r2 * field.element(q * q);

        let res = |v: &[FieldElement]| v.iter().map(|e| e.value()).collect::<Vec<_>>();
        net.send(2, Party::Alice, Party::Bob, Tag::SHARES_X, res(&a_sh[1]));
        net.send(2, Party::Alice, Party::Charlie, Tag::SHARES_X, res(&a_sh[2]));
        net.send(2, Party::Alice, Party::Bob, MASK_SAMPLE, vec![r_at(2).value()]);
        net.send(2, Party::Alice, Party::Charlie, MASK_SAMPLE, vec![r_at(3).value()]);
        net.send(2, Party::Bob, Party::Alice, Tag::SHARES_Y, res(&b_sh[0]));
        net.send(2, Party::Bob, Party::Charlie, Tag::SHARES_Y, res(&b_sh[2]));

        let from = |net: &mut Network<'_>, to, src, tag| -> Result<Vec<FieldElement>, EngineError> {
            Ok(net.recv(to, src, tag)?.iter().map(|&r| field.from_residue(r)).collect())
        };
        let alice_b = from(&mut net, Party::Alice, Party::Bob, Tag::SHARES_Y)?;
        let bob_a = from(&mut net, Party::Bob, Party::Alice, Tag::SHARES_X)?;
        let bob_r = from(&mut net, Party::Bob, Party::Alice, MASK_SAMPLE)?[0];
        let charlie_a = from(&mut net, Party::Charlie, Party::Alice, Tag::SHARES_X)?;
        let charlie_b = from(&mut net, Party::Charlie, Party::Bob, Tag::SHARES_Y)?;
        let charlie_r = from(&mut net, Party::Charlie, Party::Alice, MASK_SAMPLE)?[0];

        let sample = |a: &[FieldElement], b: &[FieldElement]| {
            let mut acc = field.zero();
            for i in 0..m {
                for &(j, k, c) in &coupling {
                    acc = acc + c * a[i * nx + j] * b[i * ny + k];
                }
            }
            acc
        };
        let f1_masked = sample(&a_sh[0], &alice_b) + r_at(1);
        let f2_masked = sample(&bob_a, &b_sh[1]) + bob_r;
        let f3_masked = sample(&charlie_a, &charlie_b) + charlie_r;

        net.send(
            3,
            Party::Alice,
            Party::Charlie,
            Tag::POLY_SAMPLE,
            vec![f1_masked.value()],
        );
        net.send(3, Party::Bob, Party::Charlie, Tag::POLY_SAMPLE, vec![f2_masked.value()]);
        let s1 = field.from_residue(net.recv(Party::Charlie, Party::Alice, Tag::POLY_SAMPLE)?[0]);
        let s2 = field.from_residue(net.recv(Party::Charlie, Party::Bob, Tag::POLY_SAMPLE)?[0]);
        let [w1, w2, w3] = lagrange_weights_123(field);
        let d = f1.common_denominator();
        let at_zero = (w1 * s1 + w2 * s2 + w3 * f3_masked) * field.element(d as i128);
        net.set_output(decode_centered(at_zero, d, m as u64));
        Ok(net.finish(self.name(), m, nx, ny, alice_set))
    }
}
