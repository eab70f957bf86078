//! Sequential multiple testing with familywise error rate control.
//!
//! An ordered sequence of *subfamilies* of null hypotheses is tested one
//! subfamily at a time. At most one hypothesis is rejected per subfamily,
//! the one with the smallest p-value, and each rejection spends part of a
//! running alpha budget. The sequence halts at the first subfamily whose
//! smallest p-value no longer fits the budget. As long as the p-values of
//! true null hypotheses are independent of those of false ones, the
//! probability of ever rejecting a true null is at most the initial budget.
//!
//! Module map:
//!
//! - [`tester`]: the sequential state machine and its two spending rules.
//! - [`sim`]: Monte Carlo harness estimating FWER and true discoveries on
//!   synthetic subfamilies, with deterministic parallel RNG streams.
//! - [`binomial`]: exact binomial tail probabilities for small coin-toss
//!   experiments.
//! - [`counterexample`]: a two-experiment coin-toss scenario with dependent
//!   p-values where the FWER guarantee fails, evaluated by exact
//!   enumeration, a closed-form bound and Monte Carlo.
//! - [`cli`]: the `seqmt` binary with the `grid`, `counterexample` and
//!   `step` subcommands.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example streaming_decisions`.

pub mod binomial;
pub mod cli;
pub mod counterexample;
mod error;
pub mod sim;
pub mod tester;

pub use error::{Error, Result};
pub use tester::{
    min_with_index, run_sequence, Decision, RejectionRecord, StopReason, TesterState, Variant,
};
