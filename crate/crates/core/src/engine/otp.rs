//! One-time-pad protocol with a trusted share dealer.
//!
//! Alice and Bob send Charlie their sampled symbols under cyclic-shift pads.
//! Charlie splits each one-hot indicator matrix into additive shares and
//! hands one to each of them. They swap pads, undo the shift on their share
//! matrices, fold in `f1` and return salted partial sums to Charlie.

use crate::field::{decode_centered, FieldElement};
use crate::funcspec::FunctionTable;
use crate::randomness::{Party, Randomness};
use crate::sharing::{additive_split, pad_shift, PadDirection, PadSymbol};

use super::{
    distribute_index_set, receive_index_set, sample_index_set, validate_inputs, EngineError, Network, Protocol,
    ProtocolResult, RunSetup, Tag,
};

#[derive(Clone, Copy, Debug, Default)]
pub struct OneTimePad;

impl Protocol for OneTimePad {
    fn name(&self) -> &str {
        "otp"
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
        let cells = nx * ny;
        let f_enc = f1.to_field(field)?;
        let mut net = Network::new(n, nx, ny, field, rng);

        // Round 1: index set.
        let alice_set = sample_index_set(&mut net, n, setup)?;
        distribute_index_set(&mut net, 1, &alice_set);
        let bob_set = receive_index_set(&mut net, n)?;

        // Round 2: padded symbols to Charlie.
        let mut alpha = Vec::with_capacity(m);
        let mut masked_x = Vec::with_capacity(m);
        for i in alice_set.positions() {
            let pad = PadSymbol::random(nx, |r| net.draw(Party::Alice, "pad_x", r));
            masked_x.push(pad_shift(x_seq[i], pad, PadDirection::Encrypt)? as u64);
            alpha.push(pad);
        }
        net.send(2, Party::Alice, Party::Charlie, Tag::MASKED_X, masked_x);

        let mut beta = Vec::with_capacity(m);
        let mut masked_y = Vec::with_capacity(m);
        for i in bob_set.positions() {
            let pad = PadSymbol::random(ny, |r| net.draw(Party::Bob, "pad_y", r));
            masked_y.push(pad_shift(y_seq[i], pad, PadDirection::Encrypt)? as u64);
            beta.push(pad);
        }
        net.send(2, Party::Bob, Party::Charlie, Tag::MASKED_Y, masked_y);

        // Round 3: Charlie deals additive shares of each one-hot matrix.
        let cx = net.recv(Party::Charlie, Party::Alice, Tag::MASKED_X)?;
        let cy = net.recv(Party::Charlie, Party::Bob, Tag::MASKED_Y)?;
        let mut share_a = Vec::with_capacity(m * cells);
        let mut share_b = Vec::with_capacity(m * cells);
        for (&xb, &yb) in cx.iter().zip(&cy) {
            let hot = xb as usize * ny + yb as usize;
            for cell in 0..cells {
                let entry = if cell == hot { field.one() } else { field.zero() };
                let (a, b) = additive_split(entry, |r| net.draw(Party::Charlie, "share_matrix", r));
                share_a.push(a.value());
                share_b.push(b.value());
            }
        }
        net.send(3, Party::Charlie, Party::Alice, Tag::INDICATOR_SHARES, share_a);
        net.send(3, Party::Charlie, Party::Bob, Tag::INDICATOR_SHARES, share_b);

        // Round 4: pad exchange.
        net.send(
            4,
            Party::Alice,
            Party::Bob,
            Tag::PAD_X,
            alpha.iter().map(|p| p.shift() as u64).collect(),
        );
        net.send(
            4,
            Party::Bob,
            Party::Alice,
            Tag::PAD_Y,
            beta.iter().map(|p| p.shift() as u64).collect(),
        );

        let alice_m = net.recv(Party::Alice, Party::Charlie, Tag::INDICATOR_SHARES)?;
        let alice_beta = net.recv(Party::Alice, Party::Bob, Tag::PAD_Y)?;
        let bob_m = net.recv(Party::Bob, Party::Charlie, Tag::INDICATOR_SHARES)?;
        let bob_alpha = net.recv(Party::Bob, Party::Alice, Tag::PAD_X)?;

        let l_a = unpad_shares(&alice_m, &shifts(&alpha), &shifts_u64(&alice_beta), nx, ny, field)?;
        let l_b = unpad_shares(&bob_m, &shifts_u64(&bob_alpha), &shifts(&beta), nx, ny, field)?;
        check_shares(&l_a, &l_b, x_seq, y_seq, &alice_set, ny)?;

        let f_a: FieldElement = f_enc.iter().zip(&l_a).map(|(f, l)| *f * *l).sum();
        let f_b: FieldElement = f_enc.iter().zip(&l_b).map(|(f, l)| *f * *l).sum();

        // Round 5: shared salt.
        let z = field.from_residue(net.draw(Party::Alice, "salt", field.modulus()));
        net.send(5, Party::Alice, Party::Bob, Tag::SALT, vec![z.value()]);
        let z_bob = field.from_residue(net.recv(Party::Bob, Party::Alice, Tag::SALT)?[0]);

        // Round 6: salted partial sums to Charlie.
        net.send(
            6,
            Party::Alice,
            Party::Charlie,
            Tag::SALTED_SHARE,
            vec![(f_a + z).value()],
        );
        net.send(
            6,
            Party::Bob,
            Party::Charlie,
            Tag::SALTED_SHARE,
            vec![(f_b - z_bob).value()],
        );
        let s_a = field.from_residue(net.recv(Party::Charlie, Party::Alice, Tag::SALTED_SHARE)?[0]);
        let s_b = field.from_residue(net.recv(Party::Charlie, Party::Bob, Tag::SALTED_SHARE)?[0]);
        let estimate = decode_centered(s_a + s_b, f1.common_denominator(), m as u64);
        net.set_output(estimate);

        Ok(net.finish(self.name(), m, nx, ny, alice_set))
    }
}

fn shifts(pads: &[PadSymbol]) -> Vec<usize> {
    pads.iter().map(|p| p.shift()).collect()
}

fn shifts_u64(raw: &[u64]) -> Vec<usize> {
    raw.iter().map(|&s| s as usize).collect()
}

/// `L(x, y) = Σ_i M_i(x + α_i, y + β_i)` over one party's share matrices.
fn unpad_shares(
    matrices: &[u64],
    alpha: &[usize],
    beta: &[usize],
    nx: usize,
    ny: usize,
    field: crate::field::PrimeField,
) -> Result<Vec<FieldElement>, EngineError> {
    let cells = nx * ny;
    let mut acc = vec![field.zero(); cells];
    for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        let pa = PadSymbol::new(a, nx)?;
        let pb = PadSymbol::new(b, ny)?;
        let block = &matrices[i * cells..(i + 1) * cells];
        for x in 0..nx {
            let xs = pad_shift(x, pa, PadDirection::Encrypt)?;
            for y in 0..ny {
                let ys = pad_shift(y, pb, PadDirection::Encrypt)?;
                acc[x * ny + y] = acc[x * ny + y] + field.from_residue(block[xs * ny + ys]);
            }
        }
    }
    Ok(acc)
}

/// `L_A + L_B` must equal the joint counts of the sampled pairs.
fn check_shares(
    l_a: &[FieldElement],
    l_b: &[FieldElement],
    x_seq: &[usize],
    y_seq: &[usize],
    index_set: &crate::sampling::IndexSet,
    ny: usize,
) -> Result<(), EngineError> {
    let mut counts = vec![0i128; l_a.len()];
    for i in index_set.positions() {
        counts[x_seq[i] * ny + y_seq[i]] += 1;
    }
    for (cell, &c) in counts.iter().enumerate() {
        let field = l_a[cell].field();
        if l_a[cell] + l_b[cell] != field.element(c) {
            return Err(EngineError::Inconsistent(format!(
                "indicator shares disagree with the sampled joint type at cell {cell}"
            )));
        }
    }
    Ok(())
}
