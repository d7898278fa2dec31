//! Batch experiments: configuration, trial execution, result records and
//! scaling fits.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{
    estimate_amplitude, phase_bits, qae_error_bound, AmplitudeProblem, QaeBackend, DENSE_QPE_MAX_SYSTEM_DIM,
    DENSE_QPE_MAX_WORK,
};
use crate::linalg::MAX_STATE_DIM;
use crate::classical::{calibrate_sample_constant, classical_l2_tester, SampleBudget};
use crate::distributions::{
    bump_pair, dirichlet_random, l1_distance, l2_distance, point_mass, uniform, Distribution,
};
use crate::error::{Error, Result};
use crate::oracles::{build_oracle, lemma_check, PurificationStyle, QueryLedger, LEMMA_MAX_N};
use crate::tester::{effective_params, query_count_formula, PreparedTester, PromiseSide, TRule, TesterMode, TesterParams, Verdict};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tolerance a lemma-check trial must meet to count as a pass.
pub const LEMMA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    L2,
    Equality,
    L1,
    ClassicalL2,
    LemmaCheck,
    QaeEnvelope,
}

impl Mode {
    fn tester_mode(self) -> Option<TesterMode> {
        match self {
            Mode::L2 => Some(TesterMode::L2),
            Mode::Equality => Some(TesterMode::Equality),
            Mode::L1 => Some(TesterMode::L1),
            _ => None,
        }
    }
}

/// Instance families. Single-distribution families give `p = q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    #[default]
    Uniform,
    PointMass,
    BumpPair,
    DirichletRandom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurificationKind {
    #[default]
    Mirror,
    Permuted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub family: FamilyKind,
    pub n: usize,
    /// l2 distance of the bump pair; defaults to ε.
    pub target_distance: Option<f64>,
    /// Explicit `p` and `q` distribution files; override the family.
    pub dist_files: Option<(PathBuf, PathBuf)>,
    pub epsilon: f64,
    pub nu: f64,
    pub t_rule: TRule,
    pub repeats: u32,
    pub backend: QaeBackend,
    pub purification: PurificationKind,
    pub trials: u64,
    pub seed: u64,
    /// `a` for the envelope mode.
    pub amplitude: f64,
    /// Grover budget for the envelope mode.
    pub t: u64,
    /// `C` in `m = ⌈C/ε²⌉`; calibrated when absent.
    pub samples_constant: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::L2,
            family: FamilyKind::Uniform,
            n: 4,
            target_distance: None,
            dist_files: None,
            epsilon: 0.2,
            nu: 0.5,
            t_rule: TRule::Proof,
            repeats: 15,
            backend: QaeBackend::SubspaceExact,
            purification: PurificationKind::Mirror,
            trials: 100,
            seed: 0,
            amplitude: 0.25,
            t: 64,
            samples_constant: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    fn purification_style(&self) -> PurificationStyle {
        match self.purification {
            PurificationKind::Mirror => PurificationStyle::Mirror,
            PurificationKind::Permuted => PurificationStyle::Permuted {
                seed: derive_seed(self.seed, u64::MAX),
            },
        }
    }

    pub fn tester_params(&self) -> TesterParams {
        TesterParams {
            epsilon: self.epsilon,
            nu: self.nu,
            t_rule: self.t_rule,
            repeats: self.repeats,
            purification: self.purification_style(),
            backend: self.backend,
        }
    }

    /// Checks every field the configured mode uses.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::parameter("trials", "must be at least 1"));
        }
        if self.dist_files.is_none() && self.n < 2 {
            return Err(Error::parameter("n", format!("support size must be at least 2, got {}", self.n)));
        }
        if let Some(d) = self.target_distance {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::parameter("target_distance", format!("{d} is not a finite non-negative number")));
            }
        }
        match self.mode {
            Mode::L2 | Mode::Equality | Mode::L1 => {
                let n = if self.dist_files.is_some() { 2 } else { self.n };
                let eff = effective_params(self.mode.tester_mode().unwrap(), &self.tester_params(), n)?;
                if self.dist_files.is_none() {
                    check_tester_capacity(n, &eff)?;
                }
            }
            Mode::ClassicalL2 => {
                if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
                    return Err(Error::parameter("epsilon", format!("{} is not in (0, 1)", self.epsilon)));
                }
                if let Some(c) = self.samples_constant {
                    if !(c > 0.0 && c.is_finite()) {
                        return Err(Error::parameter("samples_constant", format!("{c} is not positive")));
                    }
                }
            }
            Mode::LemmaCheck => {
                if self.n > LEMMA_MAX_N {
                    return Err(Error::capacity(format!("lemma check supports n ≤ {LEMMA_MAX_N}, got {}", self.n)));
                }
            }
            Mode::QaeEnvelope => {
                if !(0.0..=1.0).contains(&self.amplitude) {
                    return Err(Error::parameter("amplitude", format!("{} is not in [0, 1]", self.amplitude)));
                }
                if self.t == 0 {
                    return Err(Error::parameter("t", "Grover budget must be at least 1"));
                }
                if self.repeats == 0 || self.repeats.is_multiple_of(2) {
                    return Err(Error::parameter("repeats", format!("must be a positive odd integer, got {}", self.repeats)));
                }
            }
        }
        Ok(())
    }

    /// The `(p, q)` instance the configuration describes. Explicit files are
    /// checked against the simulation limits here.
    pub fn instance(&self) -> Result<(Distribution, Distribution)> {
        if let Some((fp, fq)) = &self.dist_files {
            let p = Distribution::from_file(fp)?;
            let q = Distribution::from_file(fq)?;
            if p.len() != q.len() {
                return Err(Error::parameter(
                    "dist_files",
                    format!("supports differ: {} vs {}", p.len(), q.len()),
                ));
            }
            if let Some(mode) = self.mode.tester_mode() {
                check_tester_capacity(p.len(), &effective_params(mode, &self.tester_params(), p.len())?)?;
            }
            return Ok((p, q));
        }
        let single = |d: Distribution| (d.clone(), d);
        Ok(match self.family {
            FamilyKind::Uniform => single(uniform(self.n)?),
            FamilyKind::PointMass => single(point_mass(self.n, 0)?),
            FamilyKind::DirichletRandom => single(dirichlet_random(self.n, derive_seed(self.seed, u64::MAX - 1))?),
            FamilyKind::BumpPair => bump_pair(self.n, self.target_distance.unwrap_or(self.epsilon))?,
        })
    }
}

/// Rejects tester instances whose state vectors exceed the simulation limits.
pub fn check_tester_capacity(n: usize, params: &TesterParams) -> Result<()> {
    let system = 2 * (n + 1).pow(3);
    if system > MAX_STATE_DIM {
        return Err(Error::capacity(format!(
            "tester state for n = {n} has dimension {system} (limit {MAX_STATE_DIM})"
        )));
    }
    if params.backend == QaeBackend::DenseQpe {
        let phases = 1usize << params.phase_bits().min(40);
        let work = (system as u64).saturating_mul((phases as u64).saturating_mul(phases as u64));
        if system > DENSE_QPE_MAX_SYSTEM_DIM || system.saturating_mul(phases) > MAX_STATE_DIM || work > DENSE_QPE_MAX_WORK {
            return Err(Error::capacity(format!(
                "dense phase estimation for n = {n} needs {system} × {phases} amplitudes and {work} updates (limits {MAX_STATE_DIM}, {DENSE_QPE_MAX_WORK})"
            )));
        }
    }
    Ok(())
}

/// Per-trial seed: SplitMix64 finalizer over `master + (index + 1)·γ`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedChain {
    pub master: u64,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    /// `CLOSE`/`FAR` for testers, `PASS`/`FAIL` for checks.
    pub outcome: String,
    /// `None` when the instance violates the promise.
    pub success: Option<bool>,
    /// Tester estimate, classical statistic, lemma deviation or QAE estimate.
    pub value: f64,
    pub ledger_total: u64,
    pub samples: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub p: Vec<String>,
    pub q: Vec<String>,
    pub l1_distance: f64,
    pub l2_distance: f64,
    /// `‖p − q‖₂² / 4`.
    pub delta_exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub instance: Option<InstanceSummary>,
    /// `Δ` read off the simulated state.
    pub delta_simulated: Option<f64>,
    pub epsilon_internal: Option<f64>,
    pub threshold: Option<f64>,
    pub t: Option<u64>,
    pub phase_bits: Option<u32>,
    pub promise: Option<PromiseSide>,
    /// Exact probability of a correct answer (testers and envelope).
    pub success_probability_exact: Option<f64>,
    pub trials: Vec<TrialRecord>,
    pub successes: u64,
    /// Trials with a defined `success`.
    pub evaluated: u64,
    pub success_rate: Option<f64>,
    pub ledger: QueryLedger,
    pub ledger_total: u64,
    pub predicted_ledger_total: Option<u64>,
    pub samples_total: u64,
    pub samples_constant: Option<f64>,
    pub seed_chain: SeedChain,
    pub wall_time_ms: f64,
}

impl ResultRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| Error::Parse {
            context: "result record".into(),
            reason: e.to_string(),
        })
    }

    pub fn summary(&self) -> String {
        let rate = self
            .success_rate
            .map(|r| format!("{r:.4}"))
            .unwrap_or_else(|| "n/a (promise gap)".into());
        format!(
            "mode={} trials={} success_rate={} ledger_total={} samples_total={} wall_time_ms={:.1}",
            serde_json::to_value(self.config.mode).unwrap().as_str().unwrap(),
            self.trials.len(),
            rate,
            self.ledger_total,
            self.samples_total,
            self.wall_time_ms
        )
    }

    /// Oracle calls for quantum modes, samples for the classical mode.
    pub fn cost(&self) -> u64 {
        if self.config.mode == Mode::ClassicalL2 {
            self.samples_total
        } else {
            self.ledger_total
        }
    }
}

/// Appends (or writes) one JSON line per record.
pub fn write_records(path: &Path, records: &[ResultRecord], append: bool) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(io)?;
    for r in records {
        writeln!(file, "{}", r.to_json_line()).map_err(io)?;
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(ResultRecord::from_json_line(&line).map_err(|e| match e {
            Error::Parse { reason, .. } => Error::Parse {
                context: format!("{} line {}", path.display(), i + 1),
                reason,
            },
            other => other,
        })?);
    }
    Ok(out)
}

struct Outcome {
    trials: Vec<TrialRecord>,
    ledger: QueryLedger,
    instance: Option<InstanceSummary>,
    delta_simulated: Option<f64>,
    epsilon_internal: Option<f64>,
    threshold: Option<f64>,
    t: Option<u64>,
    phase_bits: Option<u32>,
    promise: Option<PromiseSide>,
    success_probability_exact: Option<f64>,
    predicted_ledger_total: Option<u64>,
    samples_constant: Option<f64>,
}

impl Outcome {
    fn new(trials: Vec<TrialRecord>) -> Self {
        Outcome {
            trials,
            ledger: QueryLedger::default(),
            instance: None,
            delta_simulated: None,
            epsilon_internal: None,
            threshold: None,
            t: None,
            phase_bits: None,
            promise: None,
            success_probability_exact: None,
            predicted_ledger_total: None,
            samples_constant: None,
        }
    }
}

fn summarize(p: &Distribution, q: &Distribution) -> Result<InstanceSummary> {
    let l2 = l2_distance(p, q)?;
    Ok(InstanceSummary {
        n: p.len(),
        p: p.to_decimal_strings(),
        q: q.to_decimal_strings(),
        l1_distance: l1_distance(p, q)?,
        l2_distance: l2,
        delta_exact: l2 * l2 / 4.0,
    })
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Close => "CLOSE",
        Verdict::Far => "FAR",
    }
}

fn run_trials<F>(config: &ExperimentConfig, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64, u64) -> Result<TrialRecord> + Sync,
{
    let mut trials = (0..config.trials)
        .into_par_iter()
        .map(|i| f(i, derive_seed(config.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    trials.sort_by_key(|t| t.index);
    Ok(trials)
}

fn run_tester_mode(config: &ExperimentConfig, mode: TesterMode) -> Result<Outcome> {
    let (p, q) = config.instance()?;
    let params = config.tester_params();
    let prepared = PreparedTester::new(&p, &q, mode, &params)?;
    let promise = prepared.promise();
    let trials = run_trials(config, |index, seed| {
        let v = prepared.run(seed)?;
        Ok(TrialRecord {
            index,
            seed,
            outcome: verdict_str(v.verdict).into(),
            success: v.correct(),
            value: v.delta_estimate,
            ledger_total: v.ledger.total(),
            samples: 0,
        })
    })?;
    let first = prepared.run(derive_seed(config.seed, 0))?;
    let eff = *prepared.params();
    let p_close = prepared.close_probability();
    let mut out = Outcome::new(trials);
    out.ledger = first.ledger.scaled(config.trials);
    out.instance = Some(summarize(&p, &q)?);
    out.delta_simulated = Some(prepared.delta());
    out.epsilon_internal = Some(eff.epsilon);
    out.threshold = Some(eff.threshold());
    out.t = Some(eff.grover_budget());
    out.phase_bits = Some(eff.phase_bits());
    out.promise = Some(promise);
    out.success_probability_exact = match promise {
        PromiseSide::Close => Some(p_close),
        PromiseSide::Far => Some(1.0 - p_close),
        PromiseSide::Violated => None,
    };
    out.predicted_ledger_total = Some(query_count_formula(&params, mode, p.len())? * config.trials);
    Ok(out)
}

fn run_classical(config: &ExperimentConfig) -> Result<Outcome> {
    let (p, q) = config.instance()?;
    let constant = match config.samples_constant {
        Some(c) => c,
        None => calibrate_sample_constant(&[config.epsilon], &[p.len().max(2)], 300, config.seed)?.constant,
    };
    let summary = summarize(&p, &q)?;
    let expected = if summary.l2_distance <= 1e-12 {
        Some(Verdict::Close)
    } else if summary.l2_distance >= config.epsilon - 1e-12 {
        Some(Verdict::Far)
    } else {
        None
    };
    let trials = run_trials(config, |index, seed| {
        let budget = SampleBudget::for_epsilon(constant, config.epsilon, seed)?;
        let v = classical_l2_tester(&p, &q, config.epsilon, budget)?;
        Ok(TrialRecord {
            index,
            seed,
            outcome: verdict_str(v.verdict).into(),
            success: expected.map(|e| e == v.verdict),
            value: v.statistic,
            ledger_total: 0,
            samples: 2 * v.samples_per_distribution,
        })
    })?;
    let mut out = Outcome::new(trials);
    out.instance = Some(summary);
    out.threshold = Some(config.epsilon * config.epsilon / 2.0);
    out.promise = Some(match expected {
        Some(Verdict::Close) => PromiseSide::Close,
        Some(Verdict::Far) => PromiseSide::Far,
        None => PromiseSide::Violated,
    });
    out.samples_constant = Some(constant);
    Ok(out)
}

fn run_lemma(config: &ExperimentConfig) -> Result<Outcome> {
    let fixed = match &config.dist_files {
        Some(_) => Some(config.instance()?.0),
        None => None,
    };
    let permuted = config.purification == PurificationKind::Permuted;
    let trials = run_trials(config, |index, seed| {
        let p = match &fixed {
            Some(p) => p.clone(),
            None => dirichlet_random(config.n, seed)?,
        };
        let style = if permuted {
            PurificationStyle::Permuted { seed }
        } else {
            PurificationStyle::Mirror
        };
        let report = lemma_check(&build_oracle(&p, style)?)?;
        let pass = report.max_deviation <= LEMMA_TOL && report.residual_projection <= LEMMA_TOL;
        Ok(TrialRecord {
            index,
            seed,
            outcome: if pass { "PASS" } else { "FAIL" }.into(),
            success: Some(pass),
            value: report.max_deviation.max(report.residual_projection),
            ledger_total: report.ledger.total(),
            samples: 0,
        })
    })?;
    let mut out = Outcome::new(trials);
    // Each check applies Ũ_p = U_p† · copy · U_p once.
    out.ledger = QueryLedger {
        u_p: config.trials,
        u_p_dagger: config.trials,
        ..QueryLedger::default()
    };
    out.predicted_ledger_total = Some(2 * config.trials);
    Ok(out)
}

fn run_envelope(config: &ExperimentConfig) -> Result<Outcome> {
    let problem = AmplitudeProblem::rotation(config.amplitude)?;
    let a = config.amplitude;
    let bound = qae_error_bound(a, config.t);
    let trials = run_trials(config, |index, seed| {
        let r = estimate_amplitude(&problem, config.t, config.repeats, config.backend, seed)?;
        let hit = (r.estimate - a).abs() <= bound;
        Ok(TrialRecord {
            index,
            seed,
            outcome: if hit { "PASS" } else { "FAIL" }.into(),
            success: Some(hit),
            value: r.estimate,
            ledger_total: r.ledger.total(),
            samples: 0,
        })
    })?;
    let per_trial = estimate_amplitude(&problem, config.t, config.repeats, config.backend, 0)?.ledger;
    let mut out = Outcome::new(trials);
    out.ledger = per_trial.scaled(config.trials);
    out.t = Some(config.t);
    out.phase_bits = Some(phase_bits(config.t));
    out.threshold = Some(bound);
    Ok(out)
}

/// Runs the configured experiment and assembles its record. Writing the
/// result file is left to the caller.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultRecord> {
    config.validate()?;
    let start = Instant::now();
    let out = match config.mode {
        Mode::L2 | Mode::Equality | Mode::L1 => run_tester_mode(config, config.mode.tester_mode().unwrap())?,
        Mode::ClassicalL2 => run_classical(config)?,
        Mode::LemmaCheck => run_lemma(config)?,
        Mode::QaeEnvelope => run_envelope(config)?,
    };
    let evaluated = out.trials.iter().filter(|t| t.success.is_some()).count() as u64;
    let successes = out.trials.iter().filter(|t| t.success == Some(true)).count() as u64;
    let ledger_total = out.trials.iter().map(|t| t.ledger_total).sum();
    let samples_total = out.trials.iter().map(|t| t.samples).sum();
    Ok(ResultRecord {
        tool_version: TOOL_VERSION.into(),
        config: config.clone(),
        instance: out.instance,
        delta_simulated: out.delta_simulated,
        epsilon_internal: out.epsilon_internal,
        threshold: out.threshold,
        t: out.t,
        phase_bits: out.phase_bits,
        promise: out.promise,
        success_probability_exact: out.success_probability_exact,
        success_rate: (evaluated > 0).then(|| successes as f64 / evaluated as f64),
        trials: out.trials,
        successes,
        evaluated,
        ledger: out.ledger,
        ledger_total,
        predicted_ledger_total: out.predicted_ledger_total,
        samples_total,
        samples_constant: out.samples_constant,
        seed_chain: SeedChain {
            master: config.seed,
            rule: "trial i uses splitmix64(master + (i + 1) * 0x9e3779b97f4a7c15)".into(),
        },
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    InvEps,
    InvNuEps,
    SqrtNOverEps,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<ScalingFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::parameter("records", format!("need at least 3 distinct x values, got {}", xs.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::parameter("records", "log-log fit needs positive x and cost"));
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        points: points.len(),
    })
}

/// Abscissa of a record on the chosen axis.
pub fn record_x(record: &ResultRecord, axis: XAxis) -> f64 {
    let c = &record.config;
    let nu = match c.mode {
        Mode::Equality | Mode::L1 => 1.0,
        _ => c.nu,
    };
    let n = record.instance.as_ref().map(|i| i.n).unwrap_or(c.n) as f64;
    match axis {
        XAxis::InvEps => 1.0 / c.epsilon,
        XAxis::InvNuEps => 1.0 / (nu * c.epsilon),
        XAxis::SqrtNOverEps => n.sqrt() / c.epsilon,
    }
}

/// Log-log fit of per-trial cost (oracle calls, or samples for the
/// classical mode) against the chosen abscissa.
pub fn fit_scaling(records: &[ResultRecord], axis: XAxis) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (record_x(r, axis), r.cost() as f64 / r.trials.len().max(1) as f64))
        .collect();
    fit_loglog(&points)
}
