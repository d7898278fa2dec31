//! Simulation of quantum closeness testers for discrete distributions.
//!
//! Distributions are given to the tester only through purified access
//! oracles. An amplitude-estimation routine reads off `‖p − q‖₂² / 4`, and
//! every oracle call is counted.

pub mod amplitude;
pub mod classical;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod oracles;
pub mod tester;

pub use amplitude::{estimate_amplitude, AmplitudeProblem, QaeBackend, QaeResult};
pub use classical::{classical_l2_tester, SampleBudget};
pub use distributions::{l1_distance, l2_distance, Distribution, Family};
pub use error::{Error, Result};
pub use oracles::{build_oracle, lemma_check, PurificationStyle, PurifiedOracle, QueryLedger};
pub use tester::{
    run_equality_tester, run_l1_tester, run_l2_tester, TesterMode, TesterParams, TestVerdict, Verdict,
};
