//! Quantum closeness testers: the robust l2 tester and its equality and
//! l1 specializations, with exact oracle-call accounting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::amplitude::{
    dense_qpe_distribution, median_success_probability, phase_bits, phase_to_estimate,
    qpe_outcome_distribution, sample_estimates, AmplitudeProblem, QaeBackend,
};
use crate::distributions::{l1_distance, l2_distance, Distribution};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Operator, RegisterLayout, RegisterPattern};
use crate::oracles::{
    build_oracle, build_tilde, controlled, OracleLabel, PurificationStyle, PurifiedOracle,
    QueryLedger, REG_D,
};

/// Default number of median repeats for tester runs.
pub const DEFAULT_TESTER_REPEATS: u32 = 15;

/// Slack used when classifying an instance against the promise.
const PROMISE_TOL: f64 = 1e-12;

/// Rule turning `(ν, ε)` into the Grover budget `t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TRule {
    /// `t = ⌈20π/(νε)⌉`, the budget the correctness argument needs.
    #[default]
    Proof,
    /// `t = ⌈10π/(νε)⌉`, the budget stated in the algorithm listing.
    Algorithm,
}

impl TRule {
    fn numerator(self) -> f64 {
        match self {
            TRule::Proof => 20.0 * PI,
            TRule::Algorithm => 10.0 * PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterParams {
    pub epsilon: f64,
    pub nu: f64,
    pub t_rule: TRule,
    pub repeats: u32,
    pub purification: PurificationStyle,
    pub backend: QaeBackend,
}

impl TesterParams {
    pub fn new(epsilon: f64, nu: f64) -> Result<Self> {
        let params = TesterParams {
            epsilon,
            nu,
            t_rule: TRule::Proof,
            repeats: DEFAULT_TESTER_REPEATS,
            purification: PurificationStyle::Mirror,
            backend: QaeBackend::SubspaceExact,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::parameter("epsilon", format!("{} is not in (0, 1)", self.epsilon)));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::parameter("nu", format!("{} is not in (0, 1]", self.nu)));
        }
        if self.repeats == 0 || self.repeats.is_multiple_of(2) {
            return Err(Error::parameter(
                "repeats",
                format!("must be a positive odd integer, got {}", self.repeats),
            ));
        }
        Ok(())
    }

    /// Grover budget `t` under the configured rule.
    pub fn grover_budget(&self) -> u64 {
        ((self.t_rule.numerator() / (self.nu * self.epsilon)).ceil() as u64).max(1)
    }

    pub fn phase_bits(&self) -> u32 {
        phase_bits(self.grover_budget())
    }

    /// CLOSE iff the estimate is strictly below `(1/4 − ν/8)ε²`.
    pub fn threshold(&self) -> f64 {
        (0.25 - self.nu / 8.0) * self.epsilon * self.epsilon
    }
}

/// Which tester a run uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TesterMode {
    /// Robust l2 tester with the given `(ε, ν)`.
    #[default]
    L2,
    /// `p = q` versus `‖p − q‖₂ ≥ ε`: the l2 tester at `ν = 1`.
    Equality,
    /// `p = q` versus `‖p − q‖₁ ≥ ε`: the l2 tester at `ν = 1`, `ε' = ε/√n`.
    L1,
}

/// Parameters the underlying l2 tester actually runs with.
pub fn effective_params(mode: TesterMode, params: &TesterParams, n: usize) -> Result<TesterParams> {
    let mut eff = *params;
    match mode {
        TesterMode::L2 => {}
        TesterMode::Equality => eff.nu = 1.0,
        TesterMode::L1 => {
            if !(params.epsilon > 0.0 && params.epsilon <= 2.0) {
                return Err(Error::parameter(
                    "epsilon",
                    format!("l1 distance threshold {} is not in (0, 2]", params.epsilon),
                ));
            }
            eff.nu = 1.0;
            eff.epsilon = params.epsilon / (n as f64).sqrt();
        }
    }
    eff.validate()?;
    Ok(eff)
}

/// Oracle calls a tester run is charged. Each raw estimation run prepares
/// `U` once (one `Ũ_p` and one `Ũ_q`, two calls each) and then applies
/// `2^m − 1` controlled Grover steps of eight calls.
pub fn query_count_formula(params: &TesterParams, mode: TesterMode, n: usize) -> Result<u64> {
    let eff = effective_params(mode, params, n)?;
    let steps = (1u64 << eff.phase_bits()) - 1;
    Ok(eff.repeats as u64 * (4 + 8 * steps))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Close,
    Far,
}

/// Where an instance sits relative to the tester's promise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromiseSide {
    Close,
    Far,
    /// Inside the gap; no output is guaranteed.
    Violated,
}

impl PromiseSide {
    pub fn expected(self) -> Option<Verdict> {
        match self {
            PromiseSide::Close => Some(Verdict::Close),
            PromiseSide::Far => Some(Verdict::Far),
            PromiseSide::Violated => None,
        }
    }
}

fn promise_side(mode: TesterMode, params: &TesterParams, p: &Distribution, q: &Distribution) -> Result<PromiseSide> {
    let l2 = l2_distance(p, q)?;
    Ok(match mode {
        TesterMode::L2 | TesterMode::Equality => {
            let nu = if mode == TesterMode::Equality { 1.0 } else { params.nu };
            if l2 <= (1.0 - nu) * params.epsilon + PROMISE_TOL {
                PromiseSide::Close
            } else if l2 >= params.epsilon - PROMISE_TOL {
                PromiseSide::Far
            } else {
                PromiseSide::Violated
            }
        }
        TesterMode::L1 => {
            let l1 = l1_distance(p, q)?;
            if l1 <= PROMISE_TOL {
                PromiseSide::Close
            } else if l1 >= params.epsilon - PROMISE_TOL {
                PromiseSide::Far
            } else {
                PromiseSide::Violated
            }
        }
    })
}

/// `U = (H)_D (Ũ_p ⊗ |0⟩⟨0| + Ũ_q ⊗ |1⟩⟨1|) (HX)_D` with
/// `Π = |0⟩⟨0|_A ⊗ |0⟩⟨0|_B ⊗ I_C ⊗ |0⟩⟨0|_D`.
pub fn build_tester_unitary(op_p: &PurifiedOracle, op_q: &PurifiedOracle) -> Result<AmplitudeProblem> {
    if op_p.support_size() != op_q.support_size() {
        return Err(Error::structural(format!(
            "oracles over different supports: {} vs {}",
            op_p.support_size(),
            op_q.support_size()
        )));
    }
    let d = op_p.register_dim();
    let layout = RegisterLayout::abcd(d, d)?;
    if layout.total_dim() > crate::linalg::MAX_STATE_DIM {
        return Err(Error::capacity(format!(
            "tester state of dimension {} exceeds the limit",
            layout.total_dim()
        )));
    }
    let op_p = op_p.clone().labelled(OracleLabel::P);
    let op_q = op_q.clone().labelled(OracleLabel::Q);
    let u = Operator::sequence([
        Operator::local(vec![REG_D], DenseMatrix::pauli_x()),
        Operator::local(vec![REG_D], DenseMatrix::hadamard()),
        controlled(build_tilde(&op_p, &layout)?, REG_D, 0)?,
        controlled(build_tilde(&op_q, &layout)?, REG_D, 1)?,
        Operator::local(vec![REG_D], DenseMatrix::hadamard()),
    ]);
    let projector = RegisterPattern::new(vec![Some(0), Some(0), None, Some(0)]);
    let reference = l2_distance(op_p.source(), op_q.source())?.powi(2) / 4.0;
    Ok(AmplitudeProblem::new(u, projector, layout)?.with_true_amplitude(reference))
}

fn purifications(style: PurificationStyle) -> (PurificationStyle, PurificationStyle) {
    match style {
        PurificationStyle::Mirror => (PurificationStyle::Mirror, PurificationStyle::Mirror),
        PurificationStyle::Permuted { seed } => (
            PurificationStyle::Permuted { seed },
            PurificationStyle::Permuted {
                seed: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            },
        ),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub verdict: Verdict,
    /// The amplitude estimate `Δ'`.
    pub delta_estimate: f64,
    /// `Δ = ‖Π U|0⟩‖²` from state-vector simulation.
    pub delta_true: f64,
    /// `‖p − q‖₂² / 4` from the distributions.
    pub delta_reference: f64,
    pub threshold: f64,
    pub ledger: QueryLedger,
    pub mode: TesterMode,
    /// Parameters the l2 tester ran with (after any specialization).
    pub params: TesterParams,
    /// ε as supplied by the caller.
    pub epsilon_requested: f64,
    pub t: u64,
    pub phase_bits: u32,
    pub raw_estimates: Vec<f64>,
    pub promise: PromiseSide,
}

impl TestVerdict {
    /// Whether the verdict matches the promise side (`None` inside the gap).
    pub fn correct(&self) -> Option<bool> {
        self.promise.expected().map(|v| v == self.verdict)
    }
}

/// A tester instance with oracles built and the phase distribution computed;
/// repeated runs only sample.
#[derive(Clone, Debug)]
pub struct PreparedTester {
    mode: TesterMode,
    requested: TesterParams,
    params: TesterParams,
    problem: AmplitudeProblem,
    promise: PromiseSide,
    distribution: Vec<f64>,
    per_run: QueryLedger,
}

impl PreparedTester {
    pub fn new(p: &Distribution, q: &Distribution, mode: TesterMode, params: &TesterParams) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::structural(format!(
                "distributions have different supports: {} vs {}",
                p.len(),
                q.len()
            )));
        }
        let eff = effective_params(mode, params, p.len())?;
        let (style_p, style_q) = purifications(eff.purification);
        let op_p = build_oracle(p, style_p)?;
        let op_q = build_oracle(q, style_q)?.labelled(OracleLabel::Q);
        let problem = build_tester_unitary(&op_p, &op_q)?;
        let m = eff.phase_bits();
        let (distribution, per_run) = match eff.backend {
            QaeBackend::SubspaceExact => (qpe_outcome_distribution(problem.amplitude(), m), problem.run_cost(m)),
            QaeBackend::DenseQpe => {
                let mut ledger = QueryLedger::default();
                let dist = dense_qpe_distribution(&problem, m, &mut ledger)?;
                (dist, ledger)
            }
        };
        Ok(PreparedTester {
            mode,
            requested: *params,
            params: eff,
            promise: promise_side(mode, params, p, q)?,
            problem,
            distribution,
            per_run,
        })
    }

    pub fn params(&self) -> &TesterParams {
        &self.params
    }

    pub fn problem(&self) -> &AmplitudeProblem {
        &self.problem
    }

    pub fn promise(&self) -> PromiseSide {
        self.promise
    }

    pub fn phase_distribution(&self) -> &[f64] {
        &self.distribution
    }

    /// Simulated `Δ`.
    pub fn delta(&self) -> f64 {
        self.problem.amplitude()
    }

    /// Exact probability that a run outputs CLOSE.
    pub fn close_probability(&self) -> f64 {
        close_probability_from(&self.distribution, &self.params)
    }

    pub fn run(&self, seed: u64) -> Result<TestVerdict> {
        let m = self.params.phase_bits();
        let qae = sample_estimates(&self.distribution, m, self.params.repeats, seed)?;
        let threshold = self.params.threshold();
        let verdict = if qae.estimate < threshold {
            Verdict::Close
        } else {
            Verdict::Far
        };
        Ok(TestVerdict {
            verdict,
            delta_estimate: qae.estimate,
            delta_true: self.problem.amplitude(),
            delta_reference: self.problem.true_amplitude().unwrap_or(f64::NAN),
            threshold,
            ledger: self.per_run.scaled(self.params.repeats as u64),
            mode: self.mode,
            params: self.params,
            epsilon_requested: self.requested.epsilon,
            t: self.params.grover_budget(),
            phase_bits: m,
            raw_estimates: qae.raw_estimates,
            promise: self.promise,
        })
    }
}

fn close_probability_from(dist: &[f64], params: &TesterParams) -> f64 {
    let m = params.phase_bits();
    let threshold = params.threshold();
    let single: f64 = dist
        .iter()
        .enumerate()
        .filter(|(y, _)| phase_to_estimate(*y as u64, m) < threshold)
        .map(|(_, p)| p)
        .sum();
    median_success_probability(single.min(1.0), params.repeats)
}

/// Exact probability of a CLOSE verdict for an instance with `Δ = delta`,
/// from the closed-form phase distribution.
pub fn close_probability(delta: f64, params: &TesterParams) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::parameter("delta", format!("{delta} is not in [0, 1]")));
    }
    let dist = qpe_outcome_distribution(delta, params.phase_bits());
    Ok(close_probability_from(&dist, params))
}

pub fn run_tester(
    p: &Distribution,
    q: &Distribution,
    mode: TesterMode,
    params: &TesterParams,
    rng_seed: u64,
) -> Result<TestVerdict> {
    PreparedTester::new(p, q, mode, params)?.run(rng_seed)
}

pub fn run_l2_tester(p: &Distribution, q: &Distribution, params: &TesterParams, rng_seed: u64) -> Result<TestVerdict> {
    run_tester(p, q, TesterMode::L2, params, rng_seed)
}

/// `p = q` versus `‖p − q‖₂ ≥ ε`, default repeats and purification.
pub fn run_equality_tester(p: &Distribution, q: &Distribution, epsilon: f64, rng_seed: u64) -> Result<TestVerdict> {
    let params = TesterParams::new(epsilon, 1.0)?;
    run_tester(p, q, TesterMode::Equality, &params, rng_seed)
}

/// `p = q` versus `‖p − q‖₁ ≥ ε`, `ε ∈ (0, 2]`.
pub fn run_l1_tester(p: &Distribution, q: &Distribution, epsilon: f64, rng_seed: u64) -> Result<TestVerdict> {
    let params = TesterParams {
        epsilon,
        nu: 1.0,
        t_rule: TRule::Proof,
        repeats: DEFAULT_TESTER_REPEATS,
        purification: PurificationStyle::Mirror,
        backend: QaeBackend::SubspaceExact,
    };
    run_tester(p, q, TesterMode::L1, &params, rng_seed)
}
