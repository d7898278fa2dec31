use wasm_bindgen::prelude::*;

use qcloseness::amplitude::{phase_bits, phase_to_estimate, qae_error_bound, qpe_outcome_distribution};
use qcloseness::distributions::Distribution;
use qcloseness::oracles::{build_oracle, lemma_check, PurificationStyle};
use qcloseness::tester::{close_probability, TRule, TesterParams};

/// Largest Grover budget the page accepts.
pub const MAX_T: u32 = 1 << 16;

/// Phase-register outcome probabilities for amplitude `a` and budget `t`.
pub fn qpe_distribution(a: f64, t: u32) -> Result<Vec<f64>, String> {
    if !(0.0..=1.0).contains(&a) {
        return Err(format!("amplitude {a} is not in [0, 1]"));
    }
    if t == 0 || t > MAX_T {
        return Err(format!("t must be in 1..={MAX_T}"));
    }
    Ok(qpe_outcome_distribution(a, phase_bits(t as u64)))
}

/// `sin²(πy/M)` for every outcome `y`.
pub fn qpe_estimates(t: u32) -> Vec<f64> {
    let m = phase_bits(t as u64);
    (0..1u64 << m).map(|y| phase_to_estimate(y, m)).collect()
}

/// Probability of a CLOSE verdict at each l2 distance in `distances`.
pub fn close_curve(epsilon: f64, nu: f64, repeats: u32, algorithm_rule: bool, distances: &[f64]) -> Result<Vec<f64>, String> {
    let mut params = TesterParams::new(epsilon, nu).map_err(|e| e.to_string())?;
    params.repeats = repeats;
    if algorithm_rule {
        params.t_rule = TRule::Algorithm;
    }
    distances
        .iter()
        .map(|&d| {
            let delta = (d * d / 4.0).min(1.0);
            close_probability(delta, &params).map_err(|e| e.to_string())
        })
        .collect()
}

/// `⟨0,0,k|Ũ_p|0,0,0⟩` for `k = 1..=n`, parsed from comma or space separated
/// probabilities.
pub fn lemma_amplitudes(text: &str, permuted_seed: Option<u64>) -> Result<Vec<f64>, String> {
    let entries: Vec<&str> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let p = Distribution::from_decimal_strings(&entries).map_err(|e| e.to_string())?;
    let style = match permuted_seed {
        Some(seed) => PurificationStyle::Permuted { seed },
        None => PurificationStyle::Mirror,
    };
    let oracle = build_oracle(&p, style).map_err(|e| e.to_string())?;
    Ok(lemma_check(&oracle).map_err(|e| e.to_string())?.extracted)
}

#[wasm_bindgen(js_name = qpeDistribution)]
pub fn qpe_distribution_js(a: f64, t: u32) -> Result<Vec<f64>, JsError> {
    qpe_distribution(a, t).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = qpeEstimates)]
pub fn qpe_estimates_js(t: u32) -> Vec<f64> {
    qpe_estimates(t.clamp(1, MAX_T))
}

#[wasm_bindgen(js_name = errorBound)]
pub fn error_bound_js(a: f64, t: u32) -> f64 {
    qae_error_bound(a, t.max(1) as u64)
}

#[wasm_bindgen(js_name = closeCurve)]
pub fn close_curve_js(epsilon: f64, nu: f64, repeats: u32, algorithm_rule: bool, distances: Vec<f64>) -> Result<Vec<f64>, JsError> {
    close_curve(epsilon, nu, repeats, algorithm_rule, &distances).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lemmaAmplitudes)]
pub fn lemma_amplitudes_js(text: &str, permuted: bool, seed: u32) -> Result<Vec<f64>, JsError> {
    lemma_amplitudes(text, permuted.then_some(seed as u64)).map_err(|e| JsError::new(&e))
}
