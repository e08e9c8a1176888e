//! Three-party secure computation of normalized sum-type functions
//! `f_n(x, y) = (1/n) Σ f1(x_i, y_i)` from a uniform subsample of positions.
//!
//! Alice holds `x ∈ X^n`, Bob holds `y ∈ Y^n`, and Charlie learns only the
//! subsample estimate `F̂_n = (1/m) Σ_{i∈I} f1(x_i, y_i)`. The crate provides
//! exact prime-field arithmetic, the function tables, the subsampling
//! estimator with its error analysis, three protocols over a metered
//! simulated network, and exhaustive privacy audits.

pub mod analysis;
pub mod engine;
pub mod field;
pub mod funcspec;
pub mod randomness;
pub mod rational;
pub mod sampling;
pub mod sharing;

pub use engine::{
    run_protocol, run_protocol_otp, run_protocol_poly_direct, run_protocol_poly_l, EngineError, Party, Protocol,
    ProtocolKind, ProtocolResult, RunOptions,
};
pub use field::{FieldElement, PrimeField};
pub use funcspec::{builtin, Alphabet, FunctionTable, ProductForm};
pub use rational::Rational;
pub use sampling::IndexSet;
