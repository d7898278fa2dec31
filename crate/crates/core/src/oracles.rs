//! Purified query-access oracles, the copy unitary, the composite `Ũ_p`
//! and oracle-call accounting.
//!
//! Registers `A` and `B` both have dimension `n + 1`: basis state `|0⟩` is
//! the blank input and `|i⟩`, `1 ≤ i ≤ n`, labels outcome `i`. An oracle
//! for `p` maps `|0⟩_A|0⟩_B ↦ Σᵢ √pᵢ |φᵢ⟩_A |i⟩_B`.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::linalg::{ComplexVec, Operator, RegisterLayout, SparseMatrix, C64, MAX_STATE_DIM};

pub const REG_A: usize = 0;
pub const REG_B: usize = 1;
pub const REG_C: usize = 2;
pub const REG_D: usize = 3;

/// Residual norm below which a Gram–Schmidt candidate counts as dependent.
const DEPENDENCE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OracleLabel {
    P,
    Q,
}

/// Counts of oracle invocations by kind. Inside any control every call is
/// recorded as the controlled variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    #[serde(rename = "U_p")]
    pub u_p: u64,
    #[serde(rename = "U_p_dagger")]
    pub u_p_dagger: u64,
    #[serde(rename = "ctrl_U_p")]
    pub ctrl_u_p: u64,
    #[serde(rename = "U_q")]
    pub u_q: u64,
    #[serde(rename = "U_q_dagger")]
    pub u_q_dagger: u64,
    #[serde(rename = "ctrl_U_q")]
    pub ctrl_u_q: u64,
}

impl QueryLedger {
    pub fn record(&mut self, label: OracleLabel, adjoint: bool, controlled: bool) {
        let slot = match (label, controlled, adjoint) {
            (OracleLabel::P, true, _) => &mut self.ctrl_u_p,
            (OracleLabel::P, false, false) => &mut self.u_p,
            (OracleLabel::P, false, true) => &mut self.u_p_dagger,
            (OracleLabel::Q, true, _) => &mut self.ctrl_u_q,
            (OracleLabel::Q, false, false) => &mut self.u_q,
            (OracleLabel::Q, false, true) => &mut self.u_q_dagger,
        };
        *slot += 1;
    }

    pub fn total(&self) -> u64 {
        self.u_p + self.u_p_dagger + self.ctrl_u_p + self.u_q + self.u_q_dagger + self.ctrl_u_q
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        self.add_scaled(other, 1);
    }

    pub fn add_scaled(&mut self, other: &QueryLedger, times: u64) {
        self.u_p += other.u_p * times;
        self.u_p_dagger += other.u_p_dagger * times;
        self.ctrl_u_p += other.ctrl_u_p * times;
        self.u_q += other.u_q * times;
        self.u_q_dagger += other.u_q_dagger * times;
        self.ctrl_u_q += other.ctrl_u_q * times;
    }

    pub fn scaled(&self, times: u64) -> QueryLedger {
        let mut out = QueryLedger::default();
        out.add_scaled(self, times);
        out
    }
}

/// How the environment states `|φᵢ⟩` are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurificationStyle {
    /// `|φᵢ⟩ = |i⟩`.
    #[default]
    Mirror,
    /// `|φᵢ⟩ = |σ(i)⟩` for a permutation `σ` of `1..=n` drawn from `seed`.
    Permuted { seed: u64 },
}

/// A concrete unitary `U_p` on `A ⊗ B` realizing purified query access.
#[derive(Clone, Debug)]
pub struct PurifiedOracle {
    source: Distribution,
    style: PurificationStyle,
    label: OracleLabel,
    environment: Vec<usize>,
    matrix: Arc<SparseMatrix>,
}

impl PurifiedOracle {
    /// Builds `U_p`. Its first column is the purified state; the remaining
    /// columns come from Gram–Schmidt over the standard basis in index order,
    /// dropping the one dependent candidate.
    pub fn build(p: &Distribution, style: PurificationStyle) -> Result<Self> {
        let n = p.len();
        let dim = n + 1;
        let ab_dim = dim * dim;
        if ab_dim > MAX_STATE_DIM {
            return Err(Error::capacity(format!(
                "oracle on {ab_dim}-dimensional A⊗B exceeds the state limit"
            )));
        }
        let environment: Vec<usize> = match style {
            PurificationStyle::Mirror => (0..=n).collect(),
            PurificationStyle::Permuted { seed } => {
                let mut sigma: Vec<usize> = (1..=n).collect();
                sigma.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                std::iter::once(0).chain(sigma).collect()
            }
        };

        // Support of the purified state, ascending in A⊗B index.
        let mut support: Vec<(usize, f64)> = p
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, &pi)| pi > 0.0)
            .map(|(i, &pi)| (environment[i + 1] * dim + (i + 1), pi.sqrt()))
            .collect();
        support.sort_by_key(|&(k, _)| k);
        let norm = support.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
        let psi: Vec<f64> = support.iter().map(|(_, a)| a / norm).collect();

        let completion = complete_block(&psi)?;
        let position: std::collections::HashMap<usize, usize> =
            support.iter().enumerate().map(|(j, &(k, _))| (k, j)).collect();
        let embed = |v: &[f64]| -> Vec<(usize, C64)> {
            support
                .iter()
                .zip(v)
                .filter(|(_, &x)| x != 0.0)
                .map(|(&(k, _), &x)| (k, C64::new(x, 0.0)))
                .collect()
        };

        let mut cols = Vec::with_capacity(ab_dim);
        cols.push(embed(&psi));
        for k in 0..ab_dim {
            match position.get(&k) {
                None => cols.push(vec![(k, C64::new(1.0, 0.0))]),
                Some(&j) => {
                    if let Some(v) = &completion[j] {
                        cols.push(embed(v));
                    }
                }
            }
        }
        let matrix = SparseMatrix::from_columns(ab_dim, cols)?;
        Ok(PurifiedOracle {
            source: p.clone(),
            style,
            label: OracleLabel::P,
            environment,
            matrix: Arc::new(matrix),
        })
    }

    pub fn labelled(mut self, label: OracleLabel) -> Self {
        self.label = label;
        self
    }

    pub fn label(&self) -> OracleLabel {
        self.label
    }

    pub fn source(&self) -> &Distribution {
        &self.source
    }

    pub fn style(&self) -> PurificationStyle {
        self.style
    }

    pub fn support_size(&self) -> usize {
        self.source.len()
    }

    /// Dimension of each of the `A` and `B` registers.
    pub fn register_dim(&self) -> usize {
        self.source.len() + 1
    }

    /// Environment index `φ(i)` for outcome `i` (index 0 maps to 0).
    pub fn environment(&self) -> &[usize] {
        &self.environment
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// `U_p` on registers `(a, b)`; every application is charged as an oracle call.
    pub fn operator(&self, a: usize, b: usize) -> Operator {
        Operator::Sparse {
            targets: vec![a, b],
            matrix: Arc::clone(&self.matrix),
            adjoint: false,
            label: Some(self.label),
        }
    }

    /// `U_p |0⟩_A|0⟩_B` as a vector on `A ⊗ B`.
    pub fn purified_state(&self) -> ComplexVec {
        let mut v = ComplexVec::zeros(self.matrix.dim());
        for &(r, a) in self.matrix.column(0) {
            v.amplitudes_mut()[r] = a;
        }
        v
    }

    /// Outcome distribution of measuring `B` in `U_p|0⟩|0⟩`, computed from
    /// amplitudes. Entry `i` is the weight on `|i + 1⟩_B`; the weight left on
    /// `|0⟩_B` is returned separately.
    pub fn b_marginal(&self) -> (Vec<f64>, f64) {
        let dim = self.register_dim();
        let mut marginal = vec![0.0; dim];
        for &(r, a) in self.matrix.column(0) {
            marginal[r % dim] += a.norm_sqr();
        }
        let blank = marginal[0];
        (marginal[1..].to_vec(), blank)
    }

    /// Largest `|⟨φᵢ|φⱼ⟩ − δᵢⱼ|` over outcomes with `pᵢ, pⱼ > 0`, with the
    /// environment states read off the purified state.
    pub fn environment_orthonormality_deviation(&self) -> f64 {
        let dim = self.register_dim();
        let mut conditionals: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; dim];
        for &(r, a) in self.matrix.column(0) {
            conditionals[r % dim][r / dim] = a;
        }
        let states: Vec<Vec<C64>> = conditionals
            .into_iter()
            .filter_map(|v| {
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (norm > 0.0).then(|| v.into_iter().map(|z| z / norm).collect())
            })
            .collect();
        let mut worst = 0.0f64;
        for (i, a) in states.iter().enumerate() {
            for (j, b) in states.iter().enumerate() {
                let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        worst
    }
}

/// Orthonormal completion of the real unit vector `psi` inside its support
/// block: candidate `e_j` yields `Some(v)` when kept, `None` when dependent.
fn complete_block(psi: &[f64]) -> Result<Vec<Option<Vec<f64>>>> {
    let k = psi.len();
    let mut basis: Vec<Vec<f64>> = vec![psi.to_vec()];
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        if basis.len() == k {
            out.push(None);
            continue;
        }
        let mut v = vec![0.0; k];
        v[j] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > DEPENDENCE_TOL {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v.clone());
            out.push(Some(v));
        } else {
            out.push(None);
        }
    }
    if basis.len() != k {
        return Err(Error::structural(format!(
            "unitary completion found {} of {k} basis vectors",
            basis.len()
        )));
    }
    Ok(out)
}

pub fn build_oracle(p: &Distribution, style: PurificationStyle) -> Result<PurifiedOracle> {
    PurifiedOracle::build(p, style)
}

/// `|b⟩_B|c⟩_C ↦ |b⟩_B|c + b mod d⟩_C`, extending `|i⟩|0⟩ ↦ |i⟩|i⟩`.
pub fn build_copy_unitary(layout: &RegisterLayout) -> Result<Operator> {
    if layout.len() <= REG_C {
        return Err(Error::structural("copy unitary needs registers B and C"));
    }
    let (db, dc) = (layout.dim(REG_B), layout.dim(REG_C));
    if db != dc {
        return Err(Error::structural(format!(
            "copy unitary needs dim B = dim C, got {db} and {dc}"
        )));
    }
    let image = (0..db * dc)
        .map(|j| {
            let (b, c) = (j / dc, j % dc);
            b * dc + (c + b) % dc
        })
        .collect();
    Ok(Operator::Permutation {
        targets: vec![REG_B, REG_C],
        image,
    })
}

/// `Ũ_p = (U_p†)_AB (U_copy)_BC (U_p)_AB`.
pub fn build_tilde(oracle: &PurifiedOracle, layout: &RegisterLayout) -> Result<Operator> {
    let d = oracle.register_dim();
    if layout.len() <= REG_C || (0..=REG_C).any(|r| layout.dim(r) != d) {
        return Err(Error::structural(format!(
            "layout {:?} does not host an oracle on {} outcomes",
            layout.dims(),
            oracle.support_size()
        )));
    }
    let forward = oracle.operator(REG_A, REG_B);
    let inverse = forward.adjoint();
    Ok(Operator::sequence([forward, build_copy_unitary(layout)?, inverse]))
}

/// Acts as `op` where `control` holds `value`; oracle calls inside are
/// charged as controlled calls.
pub fn controlled(op: Operator, control: usize, value: usize) -> Result<Operator> {
    if op.registers().contains(&control) {
        return Err(Error::structural(format!(
            "control register {control} overlaps the controlled operator"
        )));
    }
    Ok(Operator::Controlled {
        control,
        value,
        inner: Box::new(op),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    /// `⟨0,0,k|Ũ_p|0,0,0⟩` for `k = 1..=n` (real parts).
    pub extracted: Vec<f64>,
    /// `max_k |⟨0,0,k|Ũ_p|0,0,0⟩ − p_k|`.
    pub max_deviation: f64,
    /// `‖Π |0⊥⟩‖` where `|0⊥⟩` is the state minus `Σ p_k |0,0,k⟩`.
    pub residual_projection: f64,
    pub ledger: QueryLedger,
}

/// Largest outcome count for which the lemma check simulates densely.
pub const LEMMA_MAX_N: usize = 64;

/// Simulates `Ũ_p|0,0,0⟩` on `A ⊗ B ⊗ C` and compares its `|0,0,·⟩` block
/// with `p`.
pub fn lemma_check(oracle: &PurifiedOracle) -> Result<LemmaReport> {
    let n = oracle.support_size();
    if n > LEMMA_MAX_N {
        return Err(Error::capacity(format!(
            "lemma check simulates n ≤ {LEMMA_MAX_N}, got n = {n}"
        )));
    }
    let d = n + 1;
    let layout = RegisterLayout::new(vec![d, d, d])?;
    let tilde = build_tilde(oracle, &layout)?;
    let mut state = ComplexVec::basis(layout.total_dim(), 0);
    let mut ledger = QueryLedger::default();
    tilde.apply(&mut state, &layout, &mut ledger)?;

    let amps = state.amplitudes();
    let probs = oracle.source().probs();
    let mut extracted = Vec::with_capacity(n);
    let mut max_deviation = 0.0f64;
    let mut residual_sq = amps[0].norm_sqr();
    for k in 1..=n {
        let a = amps[k];
        let dev = (a - C64::new(probs[k - 1], 0.0)).norm();
        max_deviation = max_deviation.max(dev);
        residual_sq += dev * dev;
        extracted.push(a.re);
    }
    Ok(LemmaReport {
        extracted,
        max_deviation,
        residual_projection: residual_sq.sqrt(),
        ledger,
    })
}
