use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::field::{ceil_log2, PrimeField};
use crate::randomness::{Party, Randomness};
use crate::rational::{self, Rational};
use crate::sampling::IndexSet;

use super::{EngineError, ProtocolResult, RunParams};

/// What one payload value costs on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Unit {
    /// An index into `{1..n}`: `⌈log2 n⌉` bits.
    Index,
    /// A symbol or shift over `X`: `⌈log2 |X|⌉` bits.
    SymbolX,
    /// A symbol or shift over `Y`: `⌈log2 |Y|⌉` bits.
    SymbolY,
    /// A field element: `⌈log2 p⌉` bits.
    Field,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tag {
    pub name: &'static str,
    pub unit: Unit,
}

impl Tag {
    pub const fn new(name: &'static str, unit: Unit) -> Self {
        Tag { name, unit }
    }

    pub const INDEX_SET: Tag = Tag::new("index_set", Unit::Index);
    pub const MASKED_X: Tag = Tag::new("masked_x", Unit::SymbolX);
    pub const MASKED_Y: Tag = Tag::new("masked_y", Unit::SymbolY);
    pub const PAD_X: Tag = Tag::new("pad_x", Unit::SymbolX);
    pub const PAD_Y: Tag = Tag::new("pad_y", Unit::SymbolY);
    pub const INDICATOR_SHARES: Tag = Tag::new("indicator_shares", Unit::Field);
    pub const SALT: Tag = Tag::new("salt", Unit::Field);
    pub const SALTED_SHARE: Tag = Tag::new("salted_share", Unit::Field);
    pub const SHARES_X: Tag = Tag::new("shares_x", Unit::Field);
    pub const SHARES_Y: Tag = Tag::new("shares_y", Unit::Field);
    pub const POLY_SAMPLE: Tag = Tag::new("poly_sample", Unit::Field);
}

/// Per-value bit widths for one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitUnits {
    pub index: u32,
    pub symbol_x: u32,
    pub symbol_y: u32,
    pub field: u32,
}

impl BitUnits {
    pub fn new(n: usize, x_size: usize, y_size: usize, field: PrimeField) -> Self {
        BitUnits {
            index: ceil_log2(n as u64),
            symbol_x: ceil_log2(x_size as u64),
            symbol_y: ceil_log2(y_size as u64),
            field: field.bits_per_element(),
        }
    }

    pub fn bits(&self, unit: Unit) -> u32 {
        match unit {
            Unit::Index => self.index,
            Unit::SymbolX => self.symbol_x,
            Unit::SymbolY => self.symbol_y,
            Unit::Field => self.field,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub round: u32,
    pub from: Party,
    pub to: Party,
    pub tag: Tag,
    pub payload: Vec<u64>,
    /// `payload.len() × bits(tag.unit)`
    pub bit_cost: u64,
    /// Width of one payload value in the hex rendering.
    value_bytes: usize,
}

impl Message {
    /// `round from→to tag bits hex(payload)`; `-` marks an empty payload.
    pub fn line(&self) -> String {
        let mut hex = String::with_capacity(self.payload.len() * self.value_bytes * 2);
        for v in &self.payload {
            let bytes = v.to_be_bytes();
            hex.push_str(&hex::encode(&bytes[8 - self.value_bytes..]));
        }
        if hex.is_empty() {
            hex.push('-');
        }
        format!(
            "{} {}→{} {} {} {}",
            self.round, self.from, self.to, self.tag.name, self.bit_cost, hex
        )
    }
}

/// One labelled random draw.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Draw {
    pub label: &'static str,
    pub range: u64,
    pub value: u64,
}

impl Draw {
    pub fn line(&self) -> String {
        format!("{} {} {}", self.label, self.range, self.value)
    }
}

/// Everything one party sent, received or drew during a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct View {
    pub party: Party,
    pub randomness: Vec<Draw>,
    pub sent: Vec<Message>,
    pub received: Vec<Message>,
    /// Charlie's estimate; `None` for Alice and Bob.
    pub output: Option<Rational>,
}

impl View {
    fn new(party: Party) -> Self {
        View {
            party,
            randomness: Vec::new(),
            sent: Vec::new(),
            received: Vec::new(),
            output: None,
        }
    }

    /// Injective text serialization; two views are equal iff these are.
    pub fn canonical(&self) -> String {
        let mut out = format!("view {}\n", self.party);
        for m in &self.sent {
            let _ = writeln!(out, "sent {}", m.line());
        }
        for m in &self.received {
            let _ = writeln!(out, "recv {}", m.line());
        }
        for d in &self.randomness {
            let _ = writeln!(out, "rand {}", d.line());
        }
        if let Some(q) = &self.output {
            let _ = writeln!(out, "output {}", rational::format_rational(q));
        }
        out
    }
}

/// In-process simulated network: three reliable bidirectional channels,
/// delivery in program order.
pub struct Network<'r> {
    rng: &'r mut dyn Randomness,
    units: BitUnits,
    log: Vec<Message>,
    views: [View; 3],
    inbox: [VecDeque<Message>; 3],
    field: PrimeField,
    n: usize,
}

impl<'r> Network<'r> {
    pub fn new(n: usize, x_size: usize, y_size: usize, field: PrimeField, rng: &'r mut dyn Randomness) -> Self {
        Network {
            rng,
            units: BitUnits::new(n, x_size, y_size, field),
            log: Vec::new(),
            views: Party::ALL.map(View::new),
            inbox: Default::default(),
            field,
            n,
        }
    }

    pub fn units(&self) -> BitUnits {
        self.units
    }

    /// A uniform value in `[0, range)` from `party`'s randomness, recorded
    /// in that party's view.
    pub fn draw(&mut self, party: Party, label: &'static str, range: u64) -> u64 {
        let value = self.rng.draw(party, range);
        self.views[party.index()].randomness.push(Draw { label, range, value });
        value
    }

    pub fn send(&mut self, round: u32, from: Party, to: Party, tag: Tag, payload: Vec<u64>) {
        let bits = self.units.bits(tag.unit);
        let value_bytes = (bits.div_ceil(8) as usize).max(1);
        let msg = Message {
            round,
            from,
            to,
            tag,
            bit_cost: payload.len() as u64 * bits as u64,
            payload,
            value_bytes,
        };
        self.views[from.index()].sent.push(msg.clone());
        self.inbox[to.index()].push_back(msg.clone());
        self.log.push(msg);
    }

    /// Takes the oldest pending `tag` message from `from` addressed to `to`.
    pub fn recv(&mut self, to: Party, from: Party, tag: Tag) -> Result<Vec<u64>, EngineError> {
        let inbox = &mut self.inbox[to.index()];
        let pos = inbox
            .iter()
            .position(|m| m.from == from && m.tag == tag)
            .ok_or(EngineError::MissingMessage {
                to,
                from,
                tag: tag.name,
            })?;
        let msg = inbox.remove(pos).expect("position is in range");
        let payload = msg.payload.clone();
        self.views[to.index()].received.push(msg);
        Ok(payload)
    }

    pub fn set_output(&mut self, estimate: Rational) {
        self.views[Party::Charlie.index()].output = Some(estimate);
    }

    pub fn finish(self, protocol: &str, m: usize, x_size: usize, y_size: usize, index_set: IndexSet) -> ProtocolResult {
        let estimate = self.views[Party::Charlie.index()]
            .output
            .clone()
            .expect("protocol finished without an output for Charlie");
        let total_bits: u64 = self.log.iter().map(|m| m.bit_cost).sum();
        let index_bits = self
            .log
            .iter()
            .filter(|m| m.tag == Tag::INDEX_SET)
            .map(|m| m.bit_cost)
            .sum();
        ProtocolResult {
            protocol: protocol.to_string(),
            estimate,
            views: self.views,
            messages: self.log,
            total_bits,
            index_bits,
            rate: rational::ratio(total_bits as i128, self.n as i128),
            params: RunParams {
                n: self.n,
                m,
                x_size,
                y_size,
                modulus: self.field.modulus(),
                seed: None,
            },
            index_set,
        }
    }
}
