//! Sample-based l2 closeness tester used as the classical comparison point.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{bump_pair, Distribution};
use crate::error::{Error, Result};
use crate::tester::Verdict;

/// Samples drawn from each distribution, and the seed they are drawn with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBudget {
    pub m: u64,
    pub seed: u64,
}

impl SampleBudget {
    pub fn new(m: u64, seed: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::parameter("m", format!("at least 2 samples are needed, got {m}")));
        }
        Ok(SampleBudget { m, seed })
    }

    /// `m = ⌈c / ε²⌉`, at least 2.
    pub fn for_epsilon(c: f64, epsilon: f64, seed: u64) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::parameter("epsilon", format!("{epsilon} is not positive")));
        }
        Self::new(((c / (epsilon * epsilon)).ceil() as u64).max(2), seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalVerdict {
    pub verdict: Verdict,
    /// Unbiased estimate of `‖p − q‖₂²`.
    pub statistic: f64,
    pub threshold: f64,
    pub samples_per_distribution: u64,
}

fn histogram(dist: &Distribution, m: u64, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let sampler = WeightedIndex::new(dist.probs())
        .map_err(|e| Error::Distribution(format!("cannot sample: {e}")))?;
    let mut counts = vec![0u64; dist.len()];
    for _ in 0..m {
        counts[rng.sample(&sampler)] += 1;
    }
    Ok(counts)
}

/// `Σ X(X−1)/(m(m−1)) + Σ Y(Y−1)/(m(m−1)) − 2 Σ XY/m²` for histograms
/// `X`, `Y` of `m` samples each.
pub fn collision_statistic(x: &[u64], y: &[u64], m: u64) -> f64 {
    let m = m as f64;
    let pairs = m * (m - 1.0);
    let self_p: f64 = x.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum();
    let self_q: f64 = y.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum();
    let cross: f64 = x.iter().zip(y).map(|(&a, &b)| a as f64 * b as f64).sum();
    self_p / pairs + self_q / pairs - 2.0 * cross / (m * m)
}

/// Draws `m` samples from each distribution and answers FAR iff the
/// collision statistic exceeds `ε²/2`.
pub fn classical_l2_tester(
    p: &Distribution,
    q: &Distribution,
    epsilon: f64,
    budget: SampleBudget,
) -> Result<ClassicalVerdict> {
    if p.len() != q.len() {
        return Err(Error::structural(format!(
            "distributions have different supports: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::parameter("epsilon", format!("{epsilon} is not positive")));
    }
    let budget = SampleBudget::new(budget.m, budget.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let x = histogram(p, budget.m, &mut rng)?;
    let y = histogram(q, budget.m, &mut rng)?;
    let statistic = collision_statistic(&x, &y, budget.m);
    let threshold = epsilon * epsilon / 2.0;
    Ok(ClassicalVerdict {
        verdict: if statistic > threshold { Verdict::Far } else { Verdict::Close },
        statistic,
        threshold,
        samples_per_distribution: budget.m,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub n: usize,
    pub epsilon: f64,
    pub m: u64,
    pub close_success: f64,
    pub far_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constant: f64,
    pub cells: Vec<CalibrationCell>,
}

/// Largest constant tried before giving up.
pub const MAX_SAMPLE_CONSTANT: f64 = (1u64 << 24) as f64;

/// Smallest `C ∈ {1, 2, 4, …}` such that `m = ⌈C/ε²⌉` succeeds with
/// empirical frequency ≥ 2/3 on every cell, both on `p = q = uniform` and on
/// a uniform/bump pair at distance `ε`.
pub fn calibrate_sample_constant(epsilons: &[f64], ns: &[usize], trials: u64, seed: u64) -> Result<Calibration> {
    if epsilons.is_empty() || ns.is_empty() || trials == 0 {
        return Err(Error::parameter("grid", "calibration grid and trial count must be non-empty"));
    }
    let mut constant = 1.0;
    while constant <= MAX_SAMPLE_CONSTANT {
        let cells = evaluate_constant(constant, epsilons, ns, trials, seed)?;
        if cells
            .iter()
            .all(|c| c.close_success >= 2.0 / 3.0 && c.far_success >= 2.0 / 3.0)
        {
            return Ok(Calibration { constant, cells });
        }
        constant *= 2.0;
    }
    Err(Error::capacity(format!("no sample constant up to {MAX_SAMPLE_CONSTANT} reached 2/3 success")))
}

/// Empirical success rates of the tester with `m = ⌈c/ε²⌉` on each cell.
pub fn evaluate_constant(c: f64, epsilons: &[f64], ns: &[usize], trials: u64, seed: u64) -> Result<Vec<CalibrationCell>> {
    let mut cells = Vec::new();
    for (ni, &n) in ns.iter().enumerate() {
        for (ei, &epsilon) in epsilons.iter().enumerate() {
            let (u, v) = bump_pair(n, epsilon)?;
            let m = SampleBudget::for_epsilon(c, epsilon, 0)?.m;
            let base = seed ^ ((ni as u64) << 48) ^ ((ei as u64) << 40);
            let rate = |q: &Distribution, want: Verdict, salt: u64| -> Result<f64> {
                let hits = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let budget = SampleBudget { m, seed: base ^ salt ^ t };
                        classical_l2_tester(&u, q, epsilon, budget).map(|r| r.verdict == want)
                    })
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .filter(|&ok| ok)
                    .count();
                Ok(hits as f64 / trials as f64)
            };
            cells.push(CalibrationCell {
                n,
                epsilon,
                m,
                close_success: rate(&u, Verdict::Close, 0)?,
                far_success: rate(&v, Verdict::Far, 1 << 32)?,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{dirichlet_random, l2_distance, uniform};

    #[test]
    fn budget_validation() {
        assert!(SampleBudget::new(1, 0).is_err());
        assert!(SampleBudget::new(2, 0).is_ok());
        assert_eq!(SampleBudget::for_epsilon(4.0, 0.1, 0).unwrap().m, 400);
        let u = uniform(3).unwrap();
        assert!(classical_l2_tester(&u, &u, 0.1, SampleBudget { m: 1, seed: 0 }).is_err());
        assert!(classical_l2_tester(&u, &uniform(4).unwrap(), 0.1, SampleBudget { m: 10, seed: 0 }).is_err());
    }

    #[test]
    fn statistic_on_hand_histograms() {
        // Two samples each: x = {1, 1}, y = {2, 2}.
        let s = collision_statistic(&[2, 0], &[0, 2], 2);
        assert_eq!(s, 1.0 + 1.0 - 0.0);
        let s = collision_statistic(&[1, 1], &[1, 1], 2);
        assert_eq!(s, 0.0 + 0.0 - 2.0 * 2.0 / 4.0);
    }

    #[test]
    fn estimator_is_unbiased() {
        let p = dirichlet_random(6, 11).unwrap();
        let q = dirichlet_random(6, 12).unwrap();
        let truth = l2_distance(&p, &q).unwrap().powi(2);
        let trials = 10_000u64;
        let stats: Vec<f64> = (0..trials)
            .map(|s| classical_l2_tester(&p, &q, 0.1, SampleBudget { m: 50, seed: s }).unwrap().statistic)
            .collect();
        let mean = stats.iter().sum::<f64>() / trials as f64;
        let var = stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!((mean - truth).abs() <= 3.0 * se, "mean {mean} truth {truth} se {se}");
    }

    #[test]
    fn calibrated_constant_works_on_examples() {
        let cal = calibrate_sample_constant(&[0.4, 0.2], &[4], 300, 9).unwrap();
        assert!(cal.constant >= 1.0);
        for cell in &cal.cells {
            assert!(cell.close_success >= 2.0 / 3.0);
            assert!(cell.far_success >= 2.0 / 3.0);
        }
        if cal.constant > 1.0 {
            let weaker = evaluate_constant(cal.constant / 2.0, &[0.4, 0.2], &[4], 300, 9).unwrap();
            assert!(weaker.iter().any(|c| c.close_success < 2.0 / 3.0 || c.far_success < 2.0 / 3.0));
        }
    }
}
