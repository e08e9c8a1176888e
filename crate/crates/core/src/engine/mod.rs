//! The three-party protocol machine.
//!
//! Parties exchange messages only through a [`Network`], which meters every
//! message, appends it to the sender's and receiver's [`View`], and records
//! each party's random draws. A finished run yields a [`ProtocolResult`]
//! holding Charlie's estimate, the three views and the bit count.

mod cost;
mod network;
mod otp;
mod poly;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use cost::{closed_form_extra_bits, closed_form_total_bits, index_set_bits, CostParams};
pub use network::{BitUnits, Draw, Message, Network, Tag, Unit, View};
pub use otp::OneTimePad;
pub use poly::{PolyDirect, PolyL};

pub use crate::randomness::Party;

use crate::field::{field_size_bound, min_field_size, FieldError, PrimeField};
use crate::funcspec::{FuncSpecError, FunctionTable};
use crate::randomness::{Randomness, SeededRandomness};
use crate::rational::{self, Rational};
use crate::sampling::{sample_indices_with, IndexSet, SamplingError};
use crate::sharing::SharingError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("F_{modulus} is too small: the protocol needs p > {bound}")]
    FieldTooSmall { modulus: u64, bound: u64 },
    #[error("F_{0} cannot hold distinct nonzero share abscissas 1, 2, 3 (needs p >= 5)")]
    AbscissaCollision(u64),
    #[error("F_{0} divides a denominator of the product form")]
    DenominatorNotInvertible(u64),
    #[error("{to} expected a `{tag}` message from {from}, none pending")]
    MissingMessage { to: Party, from: Party, tag: &'static str },
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("unknown protocol `{0}` (expected otp, poly-l or poly-direct)")]
    UnknownProtocol(String),
    #[error(transparent)]
    FuncSpec(#[from] FuncSpecError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
}

/// Per-run parameters handed to [`Protocol::execute`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSetup {
    pub m: usize,
    pub field: PrimeField,
    /// Pins Alice's index set instead of drawing it. Used by diagnostics that
    /// condition on `I`; normal runs leave this `None`.
    pub fixed_index_set: Option<IndexSet>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct RunParams {
    pub n: usize,
    pub m: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub modulus: u64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolResult {
    pub protocol: String,
    /// Charlie's output `F̂_n`.
    pub estimate: Rational,
    /// Alice, Bob, Charlie, in that order.
    pub views: [View; 3],
    /// Every message in send order.
    pub messages: Vec<Message>,
    /// `k`
    pub total_bits: u64,
    /// Bits spent sending `I` from Alice to Bob.
    pub index_bits: u64,
    /// `R = k / n`
    pub rate: Rational,
    pub params: RunParams,
    /// The realized index set, recorded by the simulator for oracle checks.
    pub index_set: IndexSet,
}

impl ProtocolResult {
    pub fn view(&self, party: Party) -> &View {
        &self.views[party.index()]
    }

    /// Bits beyond the `m⌈log2 n⌉` spent on the index set.
    pub fn extra_bits(&self) -> u64 {
        self.total_bits - self.index_bits
    }

    /// Line-oriented dump: one `round from→to tag bits hex` line per message,
    /// then one `randomness party label range value` line per draw.
    pub fn transcript(&self) -> String {
        let mut out = format!(
            "# protocol={} n={} m={} p={} seed={}\n",
            self.protocol,
            self.params.n,
            self.params.m,
            self.params.modulus,
            self.params.seed.map_or_else(|| "-".to_string(), |s| s.to_string())
        );
        for msg in &self.messages {
            out.push_str(&msg.line());
            out.push('\n');
        }
        for view in &self.views {
            for d in &view.randomness {
                out.push_str(&format!("randomness {} {}\n", view.party, d.line()));
            }
        }
        out.push_str(&format!(
            "output charlie {}\n",
            rational::format_rational(&self.estimate)
        ));
        out
    }
}

/// A three-party protocol producing `F̂_n` for Charlie.
pub trait Protocol: Sync {
    fn name(&self) -> &str;

    /// Smallest field this protocol accepts for `f1` and `m`.
    fn default_field(&self, f1: &FunctionTable, m: usize) -> PrimeField {
        min_field_size(f1, m)
    }

    fn execute(
        &self,
        f1: &FunctionTable,
        x_seq: &[usize],
        y_seq: &[usize],
        setup: &RunSetup,
        rng: &mut dyn Randomness,
    ) -> Result<ProtocolResult, EngineError>;
}

/// The three built-in protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Otp,
    PolyL,
    PolyDirect,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::Otp, ProtocolKind::PolyL, ProtocolKind::PolyDirect];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Otp => "otp",
            ProtocolKind::PolyL => "poly-l",
            ProtocolKind::PolyDirect => "poly-direct",
        }
    }

    pub fn protocol(self) -> &'static dyn Protocol {
        match self {
            ProtocolKind::Otp => &OneTimePad,
            ProtocolKind::PolyL => &PolyL,
            ProtocolKind::PolyDirect => &PolyDirect,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, EngineError> {
        match s {
            "otp" => Ok(ProtocolKind::Otp),
            "poly-l" => Ok(ProtocolKind::PolyL),
            "poly-direct" => Ok(ProtocolKind::PolyDirect),
            other => Err(EngineError::UnknownProtocol(other.to_string())),
        }
    }
}

/// Options for the seeded convenience runners.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Explicit modulus; must satisfy the protocol's sizing rule.
    pub modulus: Option<u64>,
    pub fixed_index_set: Option<IndexSet>,
}

/// Runs `protocol` with per-party randomness split from `seed`.
pub fn run_protocol(
    protocol: &dyn Protocol,
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    m: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<ProtocolResult, EngineError> {
    let field = match options.modulus {
        Some(p) => PrimeField::new(p)?,
        None => protocol.default_field(f1, m),
    };
    let setup = RunSetup {
        m,
        field,
        fixed_index_set: options.fixed_index_set.clone(),
    };
    let mut rng = SeededRandomness::new(seed);
    let mut result = protocol.execute(f1, x_seq, y_seq, &setup, &mut rng)?;
    result.params.seed = Some(seed);
    Ok(result)
}

pub fn run_protocol_otp(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    m: usize,
    seed: u64,
) -> Result<ProtocolResult, EngineError> {
    run_protocol(&OneTimePad, f1, x_seq, y_seq, m, seed, &RunOptions::default())
}

pub fn run_protocol_poly_l(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    m: usize,
    seed: u64,
) -> Result<ProtocolResult, EngineError> {
    run_protocol(&PolyL, f1, x_seq, y_seq, m, seed, &RunOptions::default())
}

pub fn run_protocol_poly_direct(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    m: usize,
    seed: u64,
) -> Result<ProtocolResult, EngineError> {
    run_protocol(&PolyDirect, f1, x_seq, y_seq, m, seed, &RunOptions::default())
}

/// Input checks shared by every protocol driver.
pub fn validate_inputs(
    f1: &FunctionTable,
    x_seq: &[usize],
    y_seq: &[usize],
    setup: &RunSetup,
) -> Result<(), EngineError> {
    f1.check_sequences(x_seq, y_seq)?;
    let n = x_seq.len();
    if setup.m == 0 || setup.m > n {
        return Err(SamplingError::SampleSize { n, m: setup.m }.into());
    }
    if let Some(fixed) = &setup.fixed_index_set {
        if fixed.n() != n || fixed.m() != setup.m {
            return Err(SamplingError::PopulationMismatch {
                index_n: fixed.n(),
                seq_n: n,
            }
            .into());
        }
    }
    let bound = field_size_bound(f1, setup.m);
    if setup.field.modulus() <= bound {
        return Err(EngineError::FieldTooSmall {
            modulus: setup.field.modulus(),
            bound,
        });
    }
    Ok(())
}

/// Alice's first step: draw `I` (or take the pinned one).
pub fn sample_index_set(net: &mut Network<'_>, n: usize, setup: &RunSetup) -> Result<IndexSet, EngineError> {
    match &setup.fixed_index_set {
        Some(fixed) => Ok(fixed.clone()),
        None => Ok(sample_indices_with(n, setup.m, |range| {
            net.draw(Party::Alice, "index_set", range)
        })?),
    }
}

/// Alice → Bob: the sorted indices, `⌈log2 n⌉` bits each.
pub fn distribute_index_set(net: &mut Network<'_>, round: u32, index_set: &IndexSet) {
    let payload = index_set.indices().iter().map(|&i| (i - 1) as u64).collect();
    net.send(round, Party::Alice, Party::Bob, Tag::INDEX_SET, payload);
}

/// Bob's side of [`distribute_index_set`].
pub fn receive_index_set(net: &mut Network<'_>, n: usize) -> Result<IndexSet, EngineError> {
    let payload = net.recv(Party::Bob, Party::Alice, Tag::INDEX_SET)?;
    Ok(IndexSet::new(n, payload.iter().map(|&i| i as usize + 1).collect())?)
}
