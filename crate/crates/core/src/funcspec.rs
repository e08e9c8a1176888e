//! The per-symbol function `f1` as an exact rational table over `X × Y`,
//! its optional depth-one product representation, and evaluation of the
//! normalized sum-type function built from it.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::{encode_rational, FieldElement, FieldError, PrimeField};
use crate::rational::{self, format_rational, parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FuncSpecError {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("duplicate symbol `{0}` in alphabet")]
    DuplicateSymbol(String),
    #[error("expected {expected} table values, got {got}")]
    WrongValueCount { expected: usize, got: usize },
    #[error("common denominator of f1 exceeds 2^62")]
    DenominatorOverflow,
    #[error("sequence lengths differ: x has {x}, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("sequences must be nonempty")]
    EmptySequence,
    #[error("symbol index {symbol} at position {position} is outside an alphabet of size {size}")]
    SymbolOutOfRange {
        position: usize,
        symbol: usize,
        size: usize,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("product form disagrees with the table at ({x}, {y})")]
    ProductFormMismatch { x: String, y: String },
    #[error("malformed product form: {0}")]
    ProductFormShape(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// An ordered finite alphabet. The order fixes the cyclic shift used by the
/// one-time pad.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self, FuncSpecError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(FuncSpecError::EmptyAlphabet);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(FuncSpecError::DuplicateSymbol(s.clone()));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// `{0, 1, ..., size-1}` rendered as decimal labels.
    pub fn numeric(size: usize) -> Self {
        Alphabet::new((0..size).map(|i| i.to_string())).expect("numeric labels are distinct")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn parse_sequence<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<usize>, FuncSpecError> {
        tokens
            .iter()
            .map(|t| {
                self.index_of(t.as_ref())
                    .ok_or_else(|| FuncSpecError::UnknownSymbol(t.as_ref().to_string()))
            })
            .collect()
    }
}

/// One nonzero entry `c` of the bilinear coupling: contributes
/// `c · alice_factor[alice](x) · bob_factor[bob](y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    pub alice: usize,
    pub bob: usize,
    pub coefficient: Rational,
}

/// A depth-one polynomial representation
/// `f1(x, y) = Σ c_jk · a_j(x) · b_k(y)`.
///
/// Alice secret-shares each `a_j(x_i)` and Bob each `b_k(y_i)`, so the sharing
/// cost grows with the number of distinct factors, not the number of couplings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductForm {
    alice_factors: Vec<Vec<Rational>>,
    bob_factors: Vec<Vec<Rational>>,
    coupling: Vec<Coupling>,
}

impl ProductForm {
    /// Rank-r form `Σ_k a_k(x) b_k(y)` from explicit term pairs.
    pub fn from_terms(terms: Vec<(Vec<Rational>, Vec<Rational>)>) -> Self {
        let coupling = (0..terms.len())
            .map(|k| Coupling {
                alice: k,
                bob: k,
                coefficient: rational::from_int(1),
            })
            .collect();
        let (alice_factors, bob_factors) = terms.into_iter().unzip();
        ProductForm {
            alice_factors,
            bob_factors,
            coupling,
        }
    }

    pub fn new(alice_factors: Vec<Vec<Rational>>, bob_factors: Vec<Vec<Rational>>, coupling: Vec<Coupling>) -> Self {
        ProductForm {
            alice_factors,
            bob_factors,
            coupling,
        }
    }

    /// `f1(x,y) = Σ_{a,b} f1(a,b) · 1{x=a} · 1{y=b}`, always available.
    pub fn indicator(table: &FunctionTable) -> Self {
        let (nx, ny) = (table.x.len(), table.y.len());
        let unit = |size: usize, at: usize| -> Vec<Rational> {
            (0..size).map(|i| rational::from_int((i == at) as i128)).collect()
        };
        let mut coupling = Vec::new();
        for a in 0..nx {
            for b in 0..ny {
                let c = table.value(a, b);
                if !c.is_zero() {
                    coupling.push(Coupling {
                        alice: a,
                        bob: b,
                        coefficient: c.clone(),
                    });
                }
            }
        }
        ProductForm {
            alice_factors: (0..nx).map(|a| unit(nx, a)).collect(),
            bob_factors: (0..ny).map(|b| unit(ny, b)).collect(),
            coupling,
        }
    }

    pub fn alice_factors(&self) -> &[Vec<Rational>] {
        &self.alice_factors
    }

    pub fn bob_factors(&self) -> &[Vec<Rational>] {
        &self.bob_factors
    }

    pub fn coupling(&self) -> &[Coupling] {
        &self.coupling
    }

    /// Number of distinct term pairs when built from terms (diagonal coupling).
    pub fn is_diagonal(&self) -> bool {
        self.alice_factors.len() == self.bob_factors.len()
            && self.coupling.len() == self.alice_factors.len()
            && self
                .coupling
                .iter()
                .enumerate()
                .all(|(k, c)| c.alice == k && c.bob == k && c.coefficient == rational::from_int(1))
    }

    pub fn evaluate(&self, x: usize, y: usize) -> Rational {
        self.coupling
            .iter()
            .map(|c| &c.coefficient * &self.alice_factors[c.alice][x] * &self.bob_factors[c.bob][y])
            .fold(Rational::zero(), |acc, t| acc + t)
    }

    fn check_shape(&self, nx: usize, ny: usize) -> Result<(), FuncSpecError> {
        if self.alice_factors.iter().any(|a| a.len() != nx) {
            return Err(FuncSpecError::ProductFormShape(format!(
                "every x-factor needs {nx} values"
            )));
        }
        if self.bob_factors.iter().any(|b| b.len() != ny) {
            return Err(FuncSpecError::ProductFormShape(format!(
                "every y-factor needs {ny} values"
            )));
        }
        for c in &self.coupling {
            if c.alice >= self.alice_factors.len() || c.bob >= self.bob_factors.len() {
                return Err(FuncSpecError::ProductFormShape(format!(
                    "coupling ({}, {}) refers to a missing factor",
                    c.alice, c.bob
                )));
            }
        }
        Ok(())
    }

    /// Every denominator appearing in the representation.
    pub fn denominators(&self) -> impl Iterator<Item = &BigInt> {
        self.alice_factors
            .iter()
            .flatten()
            .chain(self.bob_factors.iter().flatten())
            .map(|q| q.denom())
            .chain(self.coupling.iter().map(|c| c.coefficient.denom()))
    }
}

/// `f1 : X × Y → Q`, stored row-major (`x * |Y| + y`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    name: String,
    x: Alphabet,
    y: Alphabet,
    values: Vec<Rational>,
    denominator: u64,
    scaled: Vec<i64>,
    product_form: Option<ProductForm>,
}

impl FunctionTable {
    pub fn new(x: Alphabet, y: Alphabet, values: Vec<Rational>) -> Result<Self, FuncSpecError> {
        let expected = x.len() * y.len();
        if values.len() != expected {
            return Err(FuncSpecError::WrongValueCount {
                expected,
                got: values.len(),
            });
        }
        let lcd = values.iter().fold(BigInt::from(1u8), |acc, q| acc.lcm(q.denom()));
        let denominator = lcd
            .to_u64()
            .filter(|&d| d <= crate::field::MAX_MODULUS)
            .ok_or(FuncSpecError::DenominatorOverflow)?;
        let scaled = values
            .iter()
            .map(|q| {
                (q * Rational::from_integer(lcd.clone()))
                    .to_integer()
                    .to_i64()
                    .ok_or(FuncSpecError::DenominatorOverflow)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FunctionTable {
            name: "custom".to_string(),
            x,
            y,
            values,
            denominator,
            scaled,
            product_form: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Attaches a product form after checking it reproduces every entry.
    pub fn with_product_form(mut self, form: ProductForm) -> Result<Self, FuncSpecError> {
        form.check_shape(self.x.len(), self.y.len())?;
        for xi in 0..self.x.len() {
            for yi in 0..self.y.len() {
                if &form.evaluate(xi, yi) != self.value(xi, yi) {
                    return Err(FuncSpecError::ProductFormMismatch {
                        x: self.x.symbol(xi).to_string(),
                        y: self.y.symbol(yi).to_string(),
                    });
                }
            }
        }
        self.product_form = Some(form);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        &self.x
    }

    pub fn y_alphabet(&self) -> &Alphabet {
        &self.y
    }

    pub fn value(&self, x: usize, y: usize) -> &Rational {
        &self.values[x * self.y.len() + y]
    }

    /// `D · f1(x, y)`, an integer.
    pub fn scaled(&self, x: usize, y: usize) -> i64 {
        self.scaled[x * self.y.len() + y]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Least common denominator `D` of all table values.
    pub fn common_denominator(&self) -> u64 {
        self.denominator
    }

    /// `D · max |f1|`.
    pub fn max_abs_scaled(&self) -> u64 {
        self.scaled.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn product_form(&self) -> Option<&ProductForm> {
        self.product_form.as_ref()
    }

    /// The explicit product form, or the indicator decomposition if none was given.
    pub fn effective_product_form(&self) -> ProductForm {
        self.product_form
            .clone()
            .unwrap_or_else(|| ProductForm::indicator(self))
    }

    pub fn l2_norm_squared(&self) -> Rational {
        self.values.iter().fold(Rational::zero(), |acc, q| acc + q * q)
    }

    pub fn l2_norm(&self) -> f64 {
        rational::to_f64(&self.l2_norm_squared()).sqrt()
    }

    pub fn check_sequences(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<(), FuncSpecError> {
        if x_seq.len() != y_seq.len() {
            return Err(FuncSpecError::LengthMismatch {
                x: x_seq.len(),
                y: y_seq.len(),
            });
        }
        if x_seq.is_empty() {
            return Err(FuncSpecError::EmptySequence);
        }
        for (seq, size) in [(x_seq, self.x.len()), (y_seq, self.y.len())] {
            if let Some((position, &symbol)) = seq.iter().enumerate().find(|(_, &s)| s >= size) {
                return Err(FuncSpecError::SymbolOutOfRange { position, symbol, size });
            }
        }
        Ok(())
    }

    /// `f_n = (1/n) Σ_i f1(x_i, y_i)`, exactly.
    pub fn eval_sum_type(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<Rational, FuncSpecError> {
        self.check_sequences(x_seq, y_seq)?;
        let total: i128 = x_seq.iter().zip(y_seq).map(|(&x, &y)| self.scaled(x, y) as i128).sum();
        Ok(rational::ratio(total, x_seq.len() as i128 * self.denominator as i128))
    }

    /// `f_n = Σ_{x,y} f1(x,y) · P_{x^n,y^n}(x,y)`, the joint-type expansion.
    pub fn eval_via_joint_type(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<Rational, FuncSpecError> {
        self.check_sequences(x_seq, y_seq)?;
        let ny = self.y.len();
        let mut counts = vec![0u64; self.x.len() * ny];
        for (&x, &y) in x_seq.iter().zip(y_seq) {
            counts[x * ny + y] += 1;
        }
        let n = x_seq.len() as i128;
        Ok(counts
            .iter()
            .zip(&self.values)
            .fold(Rational::zero(), |acc, (&c, v)| acc + v * rational::ratio(c as i128, n)))
    }

    /// Entrywise `encode_rational` with the table's common denominator.
    pub fn to_field(&self, field: PrimeField) -> Result<Vec<FieldElement>, FuncSpecError> {
        self.values
            .iter()
            .map(|q| encode_rational(q, self.denominator, field).map_err(FuncSpecError::from))
            .collect()
    }

    /// Parses the plain-text table format (see [`FunctionTable::to_text`]).
    pub fn parse(text: &str) -> Result<Self, FuncSpecError> {
        parse_table(text)
    }

    /// Renders the plain-text table format:
    ///
    /// ```text
    /// x: a b
    /// y: a b
    /// a a 0
    /// a b 1
    /// ...
    /// [product_form]
    /// term
    /// a <x> <rational>
    /// b <y> <rational>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "x: {}", self.x.symbols().join(" "));
        let _ = writeln!(out, "y: {}", self.y.symbols().join(" "));
        for xi in 0..self.x.len() {
            for yi in 0..self.y.len() {
                let _ = writeln!(
                    out,
                    "{} {} {}",
                    self.x.symbol(xi),
                    self.y.symbol(yi),
                    format_rational(self.value(xi, yi))
                );
            }
        }
        if let Some(form) = self.product_form.as_ref().filter(|f| f.is_diagonal()) {
            out.push_str("[product_form]\n");
            for (a, b) in form.alice_factors.iter().zip(&form.bob_factors) {
                out.push_str("term\n");
                for (xi, q) in a.iter().enumerate() {
                    let _ = writeln!(out, "a {} {}", self.x.symbol(xi), format_rational(q));
                }
                for (yi, q) in b.iter().enumerate() {
                    let _ = writeln!(out, "b {} {}", self.y.symbol(yi), format_rational(q));
                }
            }
        }
        out
    }
}

/// A factor column whose entries may not all have been read yet.
type PartialFactor = Vec<Option<Rational>>;

fn parse_table(text: &str) -> Result<FunctionTable, FuncSpecError> {
    let err = |line: usize, message: String| FuncSpecError::Parse { line, message };
    let mut x_alpha: Option<Alphabet> = None;
    let mut y_alpha: Option<Alphabet> = None;
    let mut entries: HashMap<(usize, usize), Rational> = HashMap::new();
    let mut terms: Vec<(PartialFactor, PartialFactor)> = Vec::new();
    let mut in_form = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("x:") {
            let alpha = Alphabet::new(rest.split_whitespace()).map_err(|e| err(line_no, e.to_string()))?;
            x_alpha = Some(alpha);
            continue;
        }
        if let Some(rest) = line.strip_prefix("y:") {
            let alpha = Alphabet::new(rest.split_whitespace()).map_err(|e| err(line_no, e.to_string()))?;
            y_alpha = Some(alpha);
            continue;
        }
        let (xa, ya) = match (&x_alpha, &y_alpha) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(err(line_no, "alphabet headers `x:` and `y:` must come first".into())),
        };
        if line == "[product_form]" {
            in_form = true;
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if in_form {
            if tokens == ["term"] {
                terms.push((vec![None; xa.len()], vec![None; ya.len()]));
                continue;
            }
            let Some(term) = terms.last_mut() else {
                return Err(err(line_no, "factor line before any `term`".into()));
            };
            let [side, sym, value] = tokens[..] else {
                return Err(err(line_no, "expected `a <x> <rational>` or `b <y> <rational>`".into()));
            };
            let q = parse_rational(value).ok_or_else(|| err(line_no, format!("bad rational `{value}`")))?;
            let (alpha, slots) = match side {
                "a" => (xa, &mut term.0),
                "b" => (ya, &mut term.1),
                _ => return Err(err(line_no, format!("unknown factor side `{side}`"))),
            };
            let idx = alpha
                .index_of(sym)
                .ok_or_else(|| err(line_no, format!("unknown symbol `{sym}`")))?;
            if slots[idx].replace(q).is_some() {
                return Err(err(line_no, format!("duplicate factor value for `{sym}`")));
            }
            continue;
        }
        let [xs, ys, value] = tokens[..] else {
            return Err(err(line_no, "expected `x y numerator/denominator`".into()));
        };
        let xi = xa
            .index_of(xs)
            .ok_or_else(|| err(line_no, format!("unknown x symbol `{xs}`")))?;
        let yi = ya
            .index_of(ys)
            .ok_or_else(|| err(line_no, format!("unknown y symbol `{ys}`")))?;
        let q = parse_rational(value).ok_or_else(|| err(line_no, format!("bad rational `{value}`")))?;
        if entries.insert((xi, yi), q).is_some() {
            return Err(err(line_no, format!("duplicate entry for ({xs}, {ys})")));
        }
    }

    let last = text.lines().count().max(1);
    let (x, y) = match (x_alpha, y_alpha) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(err(last, "missing alphabet headers".into())),
    };
    let mut values = Vec::with_capacity(x.len() * y.len());
    for xi in 0..x.len() {
        for yi in 0..y.len() {
            let q = entries
                .remove(&(xi, yi))
                .ok_or_else(|| err(last, format!("missing entry for ({}, {})", x.symbol(xi), y.symbol(yi))))?;
            values.push(q);
        }
    }
    let mut table = FunctionTable::new(x, y, values)?;
    if !terms.is_empty() {
        let mut pairs = Vec::with_capacity(terms.len());
        for (k, (a, b)) in terms.into_iter().enumerate() {
            let complete = |v: Vec<Option<Rational>>| v.into_iter().collect::<Option<Vec<_>>>();
            match (complete(a), complete(b)) {
                (Some(a), Some(b)) => pairs.push((a, b)),
                _ => return Err(err(last, format!("product_form term {} is incomplete", k + 1))),
            }
        }
        table = table.with_product_form(ProductForm::from_terms(pairs))?;
    }
    Ok(table)
}

/// The builtin tables shipped with the CLI, over `{0, .., k-1}`.
pub mod builtin {
    use super::*;

    pub const NAMES: [&str; 4] = ["hamming", "equality", "sqdiff", "product"];

    /// `1{x ≠ y}`
    pub fn hamming(k: usize) -> FunctionTable {
        let a = Alphabet::numeric(k);
        let values = (0..k * k)
            .map(|i| rational::from_int((i / k != i % k) as i128))
            .collect();
        FunctionTable::new(a.clone(), a, values)
            .expect("well-formed builtin")
            .with_name("hamming")
    }

    /// `1{x = y}`
    pub fn equality(k: usize) -> FunctionTable {
        let a = Alphabet::numeric(k);
        let values = (0..k * k)
            .map(|i| rational::from_int((i / k == i % k) as i128))
            .collect();
        FunctionTable::new(a.clone(), a, values)
            .expect("well-formed builtin")
            .with_name("equality")
    }

    /// `(x − y)²`, with the rank-3 form `x²·1 + 1·y² − 2x·y`.
    pub fn squared_difference(k: usize) -> FunctionTable {
        let a = Alphabet::numeric(k);
        let values = (0..k * k)
            .map(|i| {
                let d = (i / k) as i128 - (i % k) as i128;
                rational::from_int(d * d)
            })
            .collect();
        let col =
            |f: &dyn Fn(i128) -> i128| -> Vec<Rational> { (0..k as i128).map(|v| rational::from_int(f(v))).collect() };
        let form = ProductForm::from_terms(vec![
            (col(&|v| v * v), col(&|_| 1)),
            (col(&|_| 1), col(&|v| v * v)),
            (col(&|v| -2 * v), col(&|v| v)),
        ]);
        FunctionTable::new(a.clone(), a, values)
            .and_then(|t| t.with_product_form(form))
            .expect("well-formed builtin")
            .with_name("sqdiff")
    }

    /// `x · y`, rank one.
    pub fn product(k: usize) -> FunctionTable {
        let a = Alphabet::numeric(k);
        let values = (0..k * k)
            .map(|i| rational::from_int(((i / k) * (i % k)) as i128))
            .collect();
        let col: Vec<Rational> = (0..k as i128).map(rational::from_int).collect();
        FunctionTable::new(a.clone(), a, values)
            .and_then(|t| t.with_product_form(ProductForm::from_terms(vec![(col.clone(), col)])))
            .expect("well-formed builtin")
            .with_name("product")
    }

    pub fn by_name(name: &str, k: usize) -> Option<FunctionTable> {
        match name {
            "hamming" => Some(hamming(k)),
            "equality" => Some(equality(k)),
            "sqdiff" => Some(squared_difference(k)),
            "product" => Some(product(k)),
            _ => None,
        }
    }
}

impl FunctionTable {
    /// `true` iff every table value is an integer in `{0, 1}`.
    pub fn is_indicator(&self) -> bool {
        self.denominator == 1 && self.scaled.iter().all(|&v| v == 0 || v == 1)
    }

    /// Largest |value| as an exact rational.
    pub fn max_abs(&self) -> Rational {
        self.values.iter().map(|q| q.abs()).max().unwrap_or_else(Rational::zero)
    }
}
