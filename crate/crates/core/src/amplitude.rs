//! Amplitude estimation by phase estimation on the Grover operator.
//!
//! Two interchangeable backends produce the distribution of the measured
//! phase register `y ∈ [0, M)`:
//!
//! * `SubspaceExact` evaluates it in closed form. `U|0⟩` splits into the
//!   two eigenvectors of `Q` with eigenphases `±2θ` (`a = sin²θ`), each with
//!   weight ½, so `P(y) = ½ F(θ/π − y/M) + ½ F(1 − θ/π − y/M)` with the Fejér
//!   kernel `F(δ) = sin²(Mπδ) / (M² sin²(πδ))`.
//! * `DenseQpe` simulates the whole phase register ⊗ system circuit.
//!
//! A raw run samples `y` and reports `sin²(πy/M)`; the estimate is the
//! median of the raw runs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    projector_norm_sq, ComplexVec, DenseMatrix, Operator, RegisterLayout, RegisterPattern, C64,
    MAX_DENSE_DIM, MAX_STATE_DIM,
};
use crate::oracles::QueryLedger;

/// Largest system dimension the dense phase-estimation backend accepts.
pub const DENSE_QPE_MAX_SYSTEM_DIM: usize = 1 << 14;

/// Upper bound on `system dimension × M²`, the amplitude updates the dense
/// backend performs across all controlled Grover steps.
pub const DENSE_QPE_MAX_WORK: u64 = 1 << 31;

/// Largest phase register (in qubits) either backend accepts.
pub const MAX_PHASE_BITS: u32 = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaeBackend {
    #[default]
    SubspaceExact,
    DenseQpe,
}

/// A state-preparation unitary `U` together with the projector `Π` whose
/// weight `a = ‖Π U|0⟩‖²` is to be estimated.
#[derive(Clone, Debug)]
pub struct AmplitudeProblem {
    unitary: Operator,
    projector: RegisterPattern,
    layout: RegisterLayout,
    prepared: ComplexVec,
    amplitude: f64,
    true_amplitude: Option<f64>,
}

impl AmplitudeProblem {
    /// Validates the pair and simulates `U|0…0⟩` once to obtain `a`.
    pub fn new(unitary: Operator, projector: RegisterPattern, layout: RegisterLayout) -> Result<Self> {
        if layout.total_dim() > MAX_STATE_DIM {
            return Err(Error::capacity(format!(
                "system dimension {} exceeds the state limit {MAX_STATE_DIM}",
                layout.total_dim()
            )));
        }
        unitary.validate(&layout)?;
        projector.validate(&layout)?;
        let mut prepared = ComplexVec::basis(layout.total_dim(), 0);
        unitary.apply_uncounted(&mut prepared, &layout)?;
        let amplitude = projector_norm_sq(&prepared, &projector, &layout)?.clamp(0.0, 1.0);
        Ok(AmplitudeProblem {
            unitary,
            projector,
            layout,
            prepared,
            amplitude,
            true_amplitude: None,
        })
    }

    /// Single-qubit problem `U = R_y`-type rotation with `‖Π U|0⟩‖² = a`, `Π = |1⟩⟨1|`.
    pub fn rotation(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::parameter("amplitude", format!("{a} is not in [0, 1]")));
        }
        let theta = a.sqrt().asin();
        let layout = RegisterLayout::new(vec![2])?;
        let u = Operator::local(vec![0], DenseMatrix::rotation(theta));
        Ok(Self::new(u, RegisterPattern::new(vec![Some(1)]), layout)?.with_true_amplitude(a))
    }

    /// Haar-like random dense unitary on `dims`, seeded; the projector pins
    /// registers as given by `projector`.
    pub fn random_toy(dims: Vec<usize>, projector: RegisterPattern, seed: u64) -> Result<Self> {
        let layout = RegisterLayout::new(dims)?;
        let n = layout.total_dim();
        if n > MAX_DENSE_DIM {
            return Err(Error::capacity(format!("toy problem of dimension {n} is too large")));
        }
        let targets: Vec<usize> = (0..layout.len()).collect();
        let u = Operator::local(targets, random_unitary(n, seed));
        Self::new(u, projector, layout)
    }

    pub fn with_true_amplitude(mut self, a: f64) -> Self {
        self.true_amplitude = Some(a);
        self
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn projector(&self) -> &RegisterPattern {
        &self.projector
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// `U|0…0⟩`.
    pub fn prepared_state(&self) -> &ComplexVec {
        &self.prepared
    }

    /// `‖Π U|0…0⟩‖²` from simulation.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn true_amplitude(&self) -> Option<f64> {
        self.true_amplitude
    }

    /// `Q = −U S₀ U† S_Π` with `S₀ = I − 2|0⟩⟨0|` and `S_Π = I − 2Π`.
    pub fn grover_operator(&self) -> Operator {
        Operator::sequence([
            Operator::Reflection(self.projector.clone()),
            self.unitary.adjoint(),
            Operator::Reflection(RegisterPattern::zeros(self.layout.len())),
            self.unitary.clone(),
            Operator::Scalar(C64::new(-1.0, 0.0)),
        ])
    }

    /// Normalized good and bad components `(ΠU|0⟩, (I−Π)U|0⟩)`; `None` for a
    /// vanishing component.
    pub fn invariant_frame(&self) -> (Option<ComplexVec>, Option<ComplexVec>) {
        let mut good = ComplexVec::zeros(self.layout.total_dim());
        let mut bad = self.prepared.clone();
        for i in self.projector.indices(&self.layout) {
            good.amplitudes_mut()[i] = self.prepared.amplitudes()[i];
            bad.amplitudes_mut()[i] = C64::new(0.0, 0.0);
        }
        let normalize = |mut v: ComplexVec| {
            let n = v.norm();
            (n > 1e-300).then(|| {
                v.scale(C64::new(1.0 / n, 0.0));
                v
            })
        };
        (normalize(good), normalize(bad))
    }

    /// Oracle calls of one raw estimation run with `2^m` phase values: one
    /// uncontrolled `U` to prepare, then `2^m − 1` controlled Grover steps.
    pub fn run_cost(&self, m: u32) -> QueryLedger {
        let mut ledger = self.unitary.query_cost(false);
        ledger.add_scaled(&self.grover_operator().query_cost(true), (1u64 << m) - 1);
        ledger
    }
}

fn random_unitary(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for _ in 0..2 {
            for c in &cols {
                let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    DenseMatrix::from_fn(n, |i, j| cols[j][i])
}

/// Phase-register width `m = ⌈log₂ t⌉` (at least one qubit).
pub fn phase_bits(t: u64) -> u32 {
    let t = t.max(2);
    64 - (t - 1).leading_zeros()
}

/// `2π√(a(1−a))/t + π²/t²`.
pub fn qae_error_bound(a: f64, t: u64) -> f64 {
    let t = t as f64;
    2.0 * PI * (a * (1.0 - a)).max(0.0).sqrt() / t + PI * PI / (t * t)
}

/// Estimate reported for phase reading `y` out of `2^m`.
pub fn phase_to_estimate(y: u64, m: u32) -> f64 {
    let s = (PI * y as f64 / (1u64 << m) as f64).sin();
    s * s
}

fn fejer(delta: f64, m_size: f64) -> f64 {
    let den = (PI * delta).sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    let num = (m_size * PI * delta).sin();
    (num * num) / (m_size * m_size * den * den)
}

/// Closed-form distribution of the `m`-bit phase reading for amplitude `a`.
pub fn qpe_outcome_distribution(a: f64, m: u32) -> Vec<f64> {
    let size = 1usize << m;
    let mf = size as f64;
    let theta = a.clamp(0.0, 1.0).sqrt().asin();
    let plus = theta / PI;
    let minus = 1.0 - plus;
    let mut dist: Vec<f64> = (0..size)
        .map(|y| {
            let x = y as f64 / mf;
            0.5 * fejer(plus - x, mf) + 0.5 * fejer(minus - x, mf)
        })
        .collect();
    let total: f64 = dist.iter().sum();
    dist.iter_mut().for_each(|p| *p /= total);
    dist
}

/// Phase-reading distribution from a full state-vector simulation of the
/// estimation circuit. Oracle calls made by the circuit are charged to `ledger`.
pub fn dense_qpe_distribution(
    problem: &AmplitudeProblem,
    m: u32,
    ledger: &mut QueryLedger,
) -> Result<Vec<f64>> {
    let sys = problem.layout();
    if sys.total_dim() > DENSE_QPE_MAX_SYSTEM_DIM {
        return Err(Error::capacity(format!(
            "dense phase estimation supports system dimension ≤ {DENSE_QPE_MAX_SYSTEM_DIM}, got {}",
            sys.total_dim()
        )));
    }
    let size = 1usize << m;
    if sys.total_dim().saturating_mul(size) > MAX_STATE_DIM {
        return Err(Error::capacity(format!(
            "dense phase estimation needs {} × {size} amplitudes (limit {MAX_STATE_DIM})",
            sys.total_dim()
        )));
    }
    let work = (sys.total_dim() as u64).saturating_mul((size as u64).saturating_mul(size as u64));
    if work > DENSE_QPE_MAX_WORK {
        return Err(Error::capacity(format!(
            "dense phase estimation with {size} phase values on dimension {} exceeds the work limit",
            sys.total_dim()
        )));
    }
    let mb = m as usize;
    let k = sys.len();
    let ext = sys.extended(&vec![2; mb])?;
    // phase qubits follow the system, most significant first
    let phase_regs: Vec<usize> = (k..k + mb).collect();
    let bit_reg = |j: usize| k + mb - 1 - j;

    let mut state = ComplexVec::basis(ext.total_dim(), 0);
    problem.unitary().apply(&mut state, &ext, ledger)?;
    for &r in &phase_regs {
        Operator::local(vec![r], DenseMatrix::hadamard()).apply(&mut state, &ext, ledger)?;
    }
    let grover = problem.grover_operator();
    for j in 0..mb {
        let step = Operator::Controlled {
            control: bit_reg(j),
            value: 1,
            inner: Box::new(grover.clone()),
        };
        step.validate(&ext)?;
        for _ in 0..(1usize << j) {
            step.apply(&mut state, &ext, ledger)?;
        }
    }
    let norm = 1.0 / (size as f64).sqrt();
    let inverse_qft = DenseMatrix::from_fn(size, |x, y| {
        let angle = -2.0 * PI * ((x * y) % size) as f64 / size as f64;
        Complex64::from_polar(norm, angle)
    });
    Operator::local(phase_regs, inverse_qft).apply(&mut state, &ext, ledger)?;

    let mut dist = vec![0.0; size];
    for (i, a) in state.amplitudes().iter().enumerate() {
        dist[i % size] += a.norm_sqr();
    }
    Ok(dist)
}

/// Outcome of amplitude estimation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaeResult {
    /// Median of `raw_estimates`.
    pub estimate: f64,
    pub t: u64,
    pub phase_bits: u32,
    pub repeats: u32,
    pub raw_estimates: Vec<f64>,
    pub raw_phases: Vec<u64>,
    pub backend: QaeBackend,
    pub ledger: QueryLedger,
}

fn check_budget(t: u64, repeats: u32) -> Result<u32> {
    if t == 0 {
        return Err(Error::parameter("t", "Grover budget must be at least 1"));
    }
    if repeats == 0 || repeats.is_multiple_of(2) {
        return Err(Error::parameter("repeats", format!("must be a positive odd integer, got {repeats}")));
    }
    let m = phase_bits(t);
    if m > MAX_PHASE_BITS {
        return Err(Error::capacity(format!("phase register of {m} qubits requested")));
    }
    Ok(m)
}

/// Runs `repeats` independent phase-estimation rounds with `M = 2^⌈log₂ t⌉`
/// and returns the median estimate.
pub fn estimate_amplitude(
    problem: &AmplitudeProblem,
    t: u64,
    repeats: u32,
    backend: QaeBackend,
    rng_seed: u64,
) -> Result<QaeResult> {
    let m = check_budget(t, repeats)?;
    let (dist, per_run) = match backend {
        QaeBackend::SubspaceExact => (qpe_outcome_distribution(problem.amplitude(), m), problem.run_cost(m)),
        QaeBackend::DenseQpe => {
            let mut ledger = QueryLedger::default();
            let dist = dense_qpe_distribution(problem, m, &mut ledger)?;
            (dist, ledger)
        }
    };
    let mut result = sample_estimates(&dist, m, repeats, rng_seed)?;
    result.t = t;
    result.backend = backend;
    result.ledger = per_run.scaled(repeats as u64);
    Ok(result)
}

/// Draws `repeats` phase readings from `dist` and assembles the result
/// (ledger left empty).
pub fn sample_estimates(dist: &[f64], m: u32, repeats: u32, rng_seed: u64) -> Result<QaeResult> {
    let sampler = WeightedIndex::new(dist)
        .map_err(|e| Error::structural(format!("phase distribution is not samplable: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let raw_phases: Vec<u64> = (0..repeats).map(|_| rng.sample(&sampler) as u64).collect();
    let raw_estimates: Vec<f64> = raw_phases.iter().map(|&y| phase_to_estimate(y, m)).collect();
    Ok(QaeResult {
        estimate: median(&raw_estimates),
        t: 1 << m,
        phase_bits: m,
        repeats,
        raw_estimates,
        raw_phases,
        backend: QaeBackend::SubspaceExact,
        ledger: QueryLedger::default(),
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Exact probability that one raw run lands within `qae_error_bound(a, t)`.
pub fn single_run_success_probability(a: f64, t: u64) -> f64 {
    let m = phase_bits(t);
    let bound = qae_error_bound(a, t);
    qpe_outcome_distribution(a, m)
        .iter()
        .enumerate()
        .filter(|(y, _)| (phase_to_estimate(*y as u64, m) - a).abs() <= bound)
        .map(|(_, p)| p)
        .sum()
}

/// Probability that at least `repeats / 2 + 1` of `repeats` independent
/// draws hit an event of probability `p_single`. Exact for the median of a
/// one-sided threshold event; a lower bound for two-sided intervals.
pub fn median_success_probability(p_single: f64, repeats: u32) -> f64 {
    let r = repeats as u64;
    let need = r / 2 + 1;
    let mut total = 0.0;
    let mut binom = 1.0f64; // C(r, k)
    for k in 0..=r {
        if k > 0 {
            binom *= (r - k + 1) as f64 / k as f64;
        }
        if k >= need {
            total += binom * p_single.powi(k as i32) * (1.0 - p_single).powi((r - k) as i32);
        }
    }
    total.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    /// Outcome distribution by direct summation of the phase-register
    /// amplitudes over the two eigencomponents.
    fn brute_force_distribution(a: f64, m: u32) -> Vec<f64> {
        let size = 1usize << m;
        let theta = a.sqrt().asin();
        (0..size)
            .map(|y| {
                [theta / PI, 1.0 - theta / PI]
                    .iter()
                    .map(|phi| {
                        let amp: C64 = (0..size)
                            .map(|k| {
                                C64::from_polar(1.0, 2.0 * PI * k as f64 * (phi - y as f64 / size as f64))
                            })
                            .sum::<C64>()
                            / size as f64;
                        0.5 * amp.norm_sqr()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn phase_bits_rounds_up() {
        assert_eq!(phase_bits(1), 1);
        assert_eq!(phase_bits(2), 1);
        assert_eq!(phase_bits(3), 2);
        assert_eq!(phase_bits(16), 4);
        assert_eq!(phase_bits(17), 5);
        assert_eq!(phase_bits(158), 8);
    }

    #[test]
    fn error_bound_examples() {
        assert!((qae_error_bound(0.0, 10) - 0.098696).abs() < 1e-6);
        let hand = 2.0 * PI * 0.1875f64.sqrt() / 100.0 + PI * PI / 1e4;
        assert!((qae_error_bound(0.25, 100) - hand).abs() < 1e-15);
        assert!((qae_error_bound(0.25, 100) - 0.028194).abs() < 1e-6);
        for &(a, t) in &[(0.1, 7u64), (0.3, 64), (0.42, 1000)] {
            assert!((qae_error_bound(a, t) - qae_error_bound(1.0 - a, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_brute_force() {
        for &a in &[0.0, 0.013, 0.3, 0.5, 0.77, 1.0] {
            for m in 1..=7 {
                let d = qpe_outcome_distribution(a, m);
                assert!(tv(&d, &brute_force_distribution(a, m)) < 1e-12, "a={a} m={m}");
            }
        }
    }

    #[test]
    fn zero_amplitude_is_deterministic() {
        let p = AmplitudeProblem::rotation(0.0).unwrap();
        for t in [1u64, 5, 64] {
            for seed in 0..20 {
                let r = estimate_amplitude(&p, t, 1, QaeBackend::SubspaceExact, seed).unwrap();
                assert_eq!(r.estimate, 0.0);
            }
        }
    }

    #[test]
    fn exactly_representable_phase_is_a_point_mass() {
        let a = (PI * 3.0 / 16.0).sin().powi(2);
        let d = qpe_outcome_distribution(a, 4);
        let support: Vec<usize> = (0..16).filter(|&y| d[y] > 1e-12).collect();
        assert_eq!(support, vec![3, 13]);
        let p = AmplitudeProblem::rotation(a).unwrap();
        for seed in 0..50 {
            let r = estimate_amplitude(&p, 16, 1, QaeBackend::SubspaceExact, seed).unwrap();
            assert!((r.estimate - a).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_single_amplitude_monte_carlo() {
        let a = 0.3;
        let t = 64;
        let p = AmplitudeProblem::rotation(a).unwrap();
        let bound = qae_error_bound(a, t);
        let hits = (0..1000)
            .filter(|&s| {
                let r = estimate_amplitude(&p, t, 1, QaeBackend::SubspaceExact, s).unwrap();
                (r.estimate - a).abs() <= bound
            })
            .count();
        assert!(hits as f64 / 1000.0 >= 8.0 / (PI * PI), "hits = {hits}");
        assert!(single_run_success_probability(a, t) >= 8.0 / (PI * PI));
    }

    #[test]
    fn grover_eigenphases_for_half_amplitude() {
        // a = 1/2: Q restricted to span{good, bad} is a rotation by π/2,
        // whose eigenvalues are ±i.
        let layout = RegisterLayout::new(vec![2, 2]).unwrap();
        let u = Operator::local(vec![1], DenseMatrix::hadamard());
        let half = AmplitudeProblem::new(u, RegisterPattern::new(vec![None, Some(1)]), layout.clone()).unwrap();
        assert!((half.amplitude() - 0.5).abs() < 1e-15);
        let q = half.grover_operator().to_dense(&layout).unwrap();
        let (good, bad) = half.invariant_frame();
        let (good, bad) = (good.unwrap(), bad.unwrap());
        let proj = |v: &ComplexVec| {
            let w = ComplexVec::from_amplitudes(q.matvec(v.amplitudes())).unwrap();
            [good.inner(&w), bad.inner(&w)]
        };
        let [g_g, b_g] = proj(&good);
        let [g_b, b_b] = proj(&bad);
        // 2x2 restricted matrix: trace 0 and determinant 1 give eigenvalues ±i
        let trace = g_g + b_b;
        let det = g_g * b_b - g_b * b_g;
        assert!(trace.norm() < 1e-12);
        assert!((det - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn grover_acts_as_rotation_on_invariant_plane() {
        for seed in 0..5 {
            let p = AmplitudeProblem::random_toy(
                vec![3, 2, 2],
                RegisterPattern::new(vec![Some(0), None, Some(1)]),
                seed,
            )
            .unwrap();
            let layout = p.layout().clone();
            let q = p.grover_operator().to_dense(&layout).unwrap();
            assert!(q.unitarity_deviation() < 1e-10);
            let (good, bad) = p.invariant_frame();
            let (good, bad) = (good.unwrap(), bad.unwrap());
            let theta = p.amplitude().sqrt().asin();
            let (s, c) = (2.0 * theta).sin_cos();
            // Q|good⟩ = cos2θ|good⟩ − sin2θ|bad⟩, Q|bad⟩ = sin2θ|good⟩ + cos2θ|bad⟩
            let apply = |v: &ComplexVec| ComplexVec::from_amplitudes(q.matvec(v.amplitudes())).unwrap();
            let combo = |x: f64, y: f64| {
                let mut out = good.clone();
                out.scale(C64::new(x, 0.0));
                for (o, b) in out.amplitudes_mut().iter_mut().zip(bad.amplitudes()) {
                    *o += b * y;
                }
                out
            };
            assert!(apply(&good).max_abs_diff(&combo(c, -s)) < 1e-10);
            assert!(apply(&bad).max_abs_diff(&combo(s, c)) < 1e-10);
        }
    }

    #[test]
    fn trivial_amplitudes_fix_the_prepared_state() {
        for a in [0.0, 1.0] {
            let p = AmplitudeProblem::rotation(a).unwrap();
            let mut v = p.prepared_state().clone();
            p.grover_operator().apply_uncounted(&mut v, p.layout()).unwrap();
            let overlap = p.prepared_state().inner(&v).norm();
            assert!((overlap - 1.0).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn backends_agree_on_toys() {
        for seed in 0..4u64 {
            let p = AmplitudeProblem::random_toy(
                vec![4, 2],
                RegisterPattern::new(vec![None, Some(0)]),
                seed,
            )
            .unwrap();
            for m in 1..=5 {
                let dense = dense_qpe_distribution(&p, m, &mut QueryLedger::default()).unwrap();
                let exact = qpe_outcome_distribution(p.amplitude(), m);
                assert!(tv(&dense, &exact) <= 1e-8, "seed {seed} m {m}");
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let p = AmplitudeProblem::rotation(0.2).unwrap();
        assert!(estimate_amplitude(&p, 0, 1, QaeBackend::SubspaceExact, 0).is_err());
        assert!(estimate_amplitude(&p, 8, 2, QaeBackend::SubspaceExact, 0).is_err());
        assert!(AmplitudeProblem::rotation(1.5).is_err());
        let big = AmplitudeProblem::new(
            Operator::Identity,
            RegisterPattern::any(2),
            RegisterLayout::new(vec![256, 128]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            estimate_amplitude(&big, 8, 1, QaeBackend::DenseQpe, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn median_amplification_formula() {
        assert!((median_success_probability(0.81, 1) - 0.81).abs() < 1e-15);
        // three draws: p³ + 3p²(1−p)
        let p: f64 = 0.7;
        let expect = p.powi(3) + 3.0 * p * p * (1.0 - p);
        assert!((median_success_probability(p, 3) - expect).abs() < 1e-15);
        assert!(median_success_probability(8.0 / (PI * PI), 15) > 0.99);
    }

    #[test]
    fn median_of_fifteen_fails_rarely_on_grid() {
        for &a in &[0.1, 0.25, 0.5, 0.9] {
            let problem = AmplitudeProblem::rotation(a).unwrap();
            for &t in &[16u64, 64, 256] {
                let bound = qae_error_bound(a, t);
                let misses = (0..1000u64)
                    .filter(|&s| {
                        let r = estimate_amplitude(&problem, t, 15, QaeBackend::SubspaceExact, s).unwrap();
                        (r.estimate - a).abs() > bound
                    })
                    .count();
                assert!(misses < 10, "a = {a}, t = {t}: {misses} misses");
            }
        }
    }
}
