//! Sources of protocol randomness.
//!
//! Every random value a party uses is requested through [`Randomness::draw`]
//! as a uniform integer in `[0, range)`. Normal runs use [`SeededRandomness`];
//! the privacy auditor substitutes an [`Odometer`] that walks the whole
//! randomness space one leaf per run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The three protocol participants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::Alice, Party::Bob, Party::Charlie];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Shamir abscissa held by this party.
    pub fn abscissa(self) -> u64 {
        self as u64 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
            Party::Charlie => "charlie",
        }
    }
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Randomness {
    /// A uniform integer in `[0, range)`; `range >= 1`.
    fn draw(&mut self, party: Party, range: u64) -> u64;
}

/// One ChaCha20 stream per party, split from a single run seed.
#[derive(Clone, Debug)]
pub struct SeededRandomness {
    streams: [ChaCha20Rng; 3],
}

impl SeededRandomness {
    pub fn new(seed: u64) -> Self {
        let stream = |party: Party| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(party.index() as u64 + 1);
            rng
        };
        SeededRandomness {
            streams: [stream(Party::Alice), stream(Party::Bob), stream(Party::Charlie)],
        }
    }
}

impl Randomness for SeededRandomness {
    fn draw(&mut self, party: Party, range: u64) -> u64 {
        assert!(range >= 1, "empty draw range");
        self.streams[party.index()].gen_range(0..range)
    }
}

/// Adapts any `rand::Rng` for code that does not care which party draws.
pub struct RngSource<R>(pub R);

impl<R: Rng> Randomness for RngSource<R> {
    fn draw(&mut self, _party: Party, range: u64) -> u64 {
        assert!(range >= 1, "empty draw range");
        self.0.gen_range(0..range)
    }
}

/// Mixed-radix counter over the sequence of draws made by one run.
///
/// Each run replays the current digits; draws past the recorded prefix start
/// at zero. [`Odometer::advance`] moves to the next leaf in lexicographic
/// order and reports `false` once every leaf has been visited.
#[derive(Clone, Debug, Default)]
pub struct Odometer {
    digits: Vec<(u64, u64)>,
    cursor: usize,
    pinned: usize,
}

impl Odometer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Enumerates only the leaves whose leading draws equal `prefix`
    /// (`(value, range)` pairs).
    pub fn with_prefix(prefix: &[(u64, u64)]) -> Self {
        Odometer {
            digits: prefix.to_vec(),
            cursor: 0,
            pinned: prefix.len(),
        }
    }

    /// Ranges of the draws made in the last run.
    pub fn last_ranges(&self) -> Vec<u64> {
        self.digits[..self.cursor].iter().map(|&(_, r)| r).collect()
    }

    /// Product of the ranges drawn in the last run, i.e. the inverse
    /// probability of that leaf. `None` on overflow.
    pub fn leaf_inverse_weight(&self) -> Option<u128> {
        self.digits[..self.cursor]
            .iter()
            .try_fold(1u128, |acc, &(_, r)| acc.checked_mul(r as u128))
    }

    pub fn draws_in_last_run(&self) -> usize {
        self.cursor
    }

    pub fn advance(&mut self) -> bool {
        self.digits.truncate(self.cursor);
        self.cursor = 0;
        while self.digits.len() > self.pinned {
            let (value, range) = self.digits.pop().expect("length checked");
            if value + 1 < range {
                self.digits.push((value + 1, range));
                return true;
            }
        }
        false
    }
}

impl Randomness for Odometer {
    fn draw(&mut self, _party: Party, range: u64) -> u64 {
        assert!(range >= 1, "empty draw range");
        let value = match self.digits.get(self.cursor) {
            Some(&(value, recorded)) => {
                assert_eq!(recorded, range, "draw ranges changed between replays");
                value
            }
            None => {
                self.digits.push((0, range));
                0
            }
        };
        self.cursor += 1;
        value
    }
}
