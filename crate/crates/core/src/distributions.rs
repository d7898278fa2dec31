//! Finite probability vectors, instance generators and exact distances.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σp − 1|` accepted at construction.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A validated probability vector on `[n]`. Entry `i` (0-based) holds the
/// probability of outcome `i + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Rejects negative, non-finite or unnormalized input; never renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Distribution("empty probability vector".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::Distribution(format!(
                "entry {i} is {p}, probabilities must be finite and non-negative"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Distribution(format!(
                "probabilities sum to {sum}, off by {:e}",
                sum - 1.0
            )));
        }
        Ok(Distribution { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Shortest round-tripping decimal rendering of each entry.
    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.probs.iter().map(|p| format!("{p}")).collect()
    }

    pub fn from_decimal_strings<S: AsRef<str>>(entries: &[S]) -> Result<Self> {
        let probs = entries
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.as_ref().trim().parse::<f64>().map_err(|e| Error::Parse {
                    context: format!("probability entry {i}"),
                    reason: format!("{:?}: {e}", s.as_ref()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(probs)
    }

    /// Reads the JSON distribution file format:
    /// `{"probabilities": ["0.25", "0.75"]}` (bare numbers are also accepted).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { context, reason } => Error::Parse {
                context: format!("{} ({context})", path.display()),
                reason,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: "distribution file".into(),
            reason: e.to_string(),
        })?;
        let entries: Vec<String> = file
            .probabilities
            .into_iter()
            .map(|e| match e {
                Entry::Text(s) => s,
                Entry::Number(x) => format!("{x}"),
            })
            .collect();
        Self::from_decimal_strings(&entries)
    }

    pub fn to_json(&self) -> String {
        let file = DistributionFile {
            probabilities: self.to_decimal_strings().into_iter().map(Entry::Text).collect(),
        };
        serde_json::to_string_pretty(&file).expect("distribution serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    probabilities: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Text(String),
    Number(f64),
}

fn check_sizes(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::structural(format!(
            "distributions have different supports: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

pub fn l2_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_sizes(p, q)?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

pub fn l1_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_sizes(p, q)?;
    Ok(p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum())
}

/// Instance generators for experiments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Uniform,
    PointMass,
    /// Uniform distribution paired with a copy moved `target` away in l2.
    BumpPair { target: f64 },
    DirichletRandom { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyInstance {
    Single(Distribution),
    Pair(Distribution, Distribution),
}

pub fn make_family(kind: Family, n: usize) -> Result<FamilyInstance> {
    if n < 2 {
        return Err(Error::parameter("n", format!("support size must be at least 2, got {n}")));
    }
    Ok(match kind {
        Family::Uniform => FamilyInstance::Single(uniform(n)?),
        Family::PointMass => FamilyInstance::Single(point_mass(n, 0)?),
        Family::BumpPair { target } => {
            let (u, v) = bump_pair(n, target)?;
            FamilyInstance::Pair(u, v)
        }
        Family::DirichletRandom { seed } => FamilyInstance::Single(dirichlet_random(n, seed)?),
    })
}

pub fn uniform(n: usize) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::parameter("n", "support size must be positive"));
    }
    Distribution::new(vec![1.0 / n as f64; n])
}

/// All mass on 0-based entry `index` (outcome `index + 1`).
pub fn point_mass(n: usize, index: usize) -> Result<Distribution> {
    if index >= n {
        return Err(Error::parameter("index", format!("{index} outside support of size {n}")));
    }
    let mut probs = vec![0.0; n];
    probs[index] = 1.0;
    Distribution::new(probs)
}

/// `(u, u')` with `u` uniform and `u' = (1 − s)·u + s·e₁`, the mixing weight
/// chosen so that `‖u − u'‖₂ = target`. Feasible for `target ≤ √(1 − 1/n)`.
pub fn bump_pair(n: usize, target: f64) -> Result<(Distribution, Distribution)> {
    if n < 2 {
        return Err(Error::parameter("n", format!("support size must be at least 2, got {n}")));
    }
    let reach = (1.0 - 1.0 / n as f64).sqrt();
    if !(0.0..=reach).contains(&target) {
        return Err(Error::parameter(
            "target_distance",
            format!("l2 distance {target} not reachable from uniform on {n} points (max {reach:.6})"),
        ));
    }
    let u = vec![1.0 / n as f64; n];
    let s = target / reach;
    let mut v: Vec<f64> = u.iter().map(|x| (1.0 - s) * x).collect();
    v[0] += s;
    Ok((Distribution::new(u)?, Distribution::new(v)?))
}

/// A point of the probability simplex drawn from the flat Dirichlet law,
/// reproducible from `seed` (ChaCha8 stream).
pub fn dirichlet_random(n: usize, seed: u64) -> Result<Distribution> {
    if n == 0 {
        return Err(Error::parameter("n", "support size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    Distribution::new(draws.into_iter().map(|x| x / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Distribution::new(vec![0.5, 0.5 + 1e-11]).is_err());
        assert!(Distribution::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn distance_examples() {
        let (a, b) = (d(&[1.0, 0.0]), d(&[0.0, 1.0]));
        assert_eq!(l2_distance(&a, &a).unwrap(), 0.0);
        assert!((l2_distance(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l1_distance(&a, &b).unwrap(), 2.0);
        let (p, q) = (d(&[0.5, 0.5]), d(&[0.75, 0.25]));
        assert!((l2_distance(&p, &q).unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        assert!((l2_distance(&p, &q).unwrap() - 0.353553).abs() < 1e-6);
        assert_eq!(l1_distance(&p, &q).unwrap(), 0.5);
        assert!(l2_distance(&p, &d(&[0.2, 0.3, 0.5])).is_err());
        assert!(l1_distance(&p, &d(&[0.2, 0.3, 0.5])).is_err());
    }

    #[test]
    fn family_examples() {
        match make_family(Family::Uniform, 4).unwrap() {
            FamilyInstance::Single(u) => assert_eq!(u.probs(), &[0.25; 4]),
            _ => panic!(),
        }
        match make_family(Family::PointMass, 3).unwrap() {
            FamilyInstance::Single(p) => assert_eq!(p.probs(), &[1.0, 0.0, 0.0]),
            _ => panic!(),
        }
        match make_family(Family::BumpPair { target: 0.2 }, 4).unwrap() {
            FamilyInstance::Pair(u, v) => {
                assert!((l2_distance(&u, &v).unwrap() - 0.2).abs() <= 1e-12)
            }
            _ => panic!(),
        }
        let a = dirichlet_random(9, 7).unwrap();
        assert_eq!(a, dirichlet_random(9, 7).unwrap());
        assert_ne!(a, dirichlet_random(9, 8).unwrap());
        assert!(make_family(Family::Uniform, 1).is_err());
        assert!(matches!(
            bump_pair(4, 0.9),
            Err(Error::Parameter { field: "target_distance", .. })
        ));
    }

    #[test]
    fn json_file_format() {
        let p = d(&[0.1, 0.2, 0.7]);
        let back = Distribution::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        let numeric = Distribution::from_json(r#"{"probabilities": [0.5, "0.5"]}"#).unwrap();
        assert_eq!(numeric.probs(), &[0.5, 0.5]);
        assert!(Distribution::from_json(r#"{"probabilities": ["0.5", "0.6"]}"#).is_err());
        assert!(Distribution::from_json(r#"{"probabilities": ["half", "0.5"]}"#).is_err());
        assert!(Distribution::from_json(r#"[0.5, 0.5]"#).is_err());
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_on_generated_pairs(n in 2usize..40, s1 in any::<u64>(), s2 in any::<u64>()) {
            let p = dirichlet_random(n, s1).unwrap();
            let q = dirichlet_random(n, s2).unwrap();
            let l2 = l2_distance(&p, &q).unwrap();
            let l1 = l1_distance(&p, &q).unwrap();
            prop_assert!(l2 >= l1 / (n as f64).sqrt() - 1e-12);
        }

        #[test]
        fn bump_pair_hits_target(n in 2usize..64, frac in 0.0f64..1.0) {
            let target = frac * (1.0 - 1.0 / n as f64).sqrt();
            let (u, v) = bump_pair(n, target).unwrap();
            prop_assert!((l2_distance(&u, &v).unwrap() - target).abs() <= 1e-12);
        }
    }
}
