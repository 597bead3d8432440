//! Confidence radii, the forced-exploration floor, problem complexity and
//! the sample-complexity bounds reported by the CLI.

use serde::Serialize;
use std::f64::consts::PI;

use crate::bandit::{argmax, true_gaps};
use crate::error::{arg, state, CbaiError, Result};

/// Parameters shared by every confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusParams {
    pub sigma: f64,
    pub epsilon: f64,
    pub num_arms: usize,
    pub delta: f64,
    /// Exponent `beta > 1` of the gap-based radius.
    pub beta_exp: f64,
    /// `C = 1 + 1 / (beta - 1)`, an upper bound on `sum_t t^-beta`.
    pub c_const: f64,
    /// Constant multiplying `sigma * eps * sqrt(ln(1/eps))` in the estimator's bias.
    pub c1_uncertainty: f64,
}

pub const DEFAULT_BETA_EXP: f64 = 2.0;
pub const DEFAULT_C1_UNCERTAINTY: f64 = 1.0;

/// Upper bound on `sum_{t>=1} t^-beta`: the first `terms` terms plus the
/// integral of the tail.
pub fn zeta_upper_bound(beta: f64, terms: u32) -> f64 {
    let head: f64 = (1..=terms).map(|t| (t as f64).powf(-beta)).sum();
    head + (terms as f64).powf(1.0 - beta) / (beta - 1.0)
}

impl RadiusParams {
    pub fn new(sigma: f64, epsilon: f64, num_arms: usize, delta: f64) -> Result<Self> {
        Self::with_constants(
            sigma,
            epsilon,
            num_arms,
            delta,
            DEFAULT_BETA_EXP,
            DEFAULT_C1_UNCERTAINTY,
        )
    }

    pub fn with_constants(
        sigma: f64,
        epsilon: f64,
        num_arms: usize,
        delta: f64,
        beta_exp: f64,
        c1_uncertainty: f64,
    ) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return arg(format!("sigma must be positive, got {sigma}"));
        }
        if !(0.0..0.5).contains(&epsilon) {
            return arg(format!("epsilon must lie in [0, 0.5), got {epsilon}"));
        }
        if num_arms == 0 {
            return arg("at least one arm is required");
        }
        check_delta(delta)?;
        if !(beta_exp.is_finite() && beta_exp > 1.0) {
            return arg(format!("beta exponent must exceed 1, got {beta_exp}"));
        }
        if !(c1_uncertainty.is_finite() && c1_uncertainty >= 0.0) {
            return arg("c1_uncertainty must be finite and non-negative");
        }
        let c_const = 1.0 + 1.0 / (beta_exp - 1.0);
        // The head-plus-tail bound with more terms is tighter; C must dominate it.
        let bound = zeta_upper_bound(beta_exp, 64);
        if !(c_const >= bound - 1e-12) {
            return Err(CbaiError::Infeasible(format!(
                "C = {c_const} is below sum t^-beta <= {bound}"
            )));
        }
        Ok(Self {
            sigma,
            epsilon,
            num_arms,
            delta,
            beta_exp,
            c_const,
            c1_uncertainty,
        })
    }

    fn prefactor(&self) -> f64 {
        self.sigma / (1.0 - self.epsilon)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        arg(format!("delta must lie in (0, 1), got {delta}"))
    }
}

/// Forced-exploration floor `T(alpha, delta) = (2 / alpha^2) ln(1/delta)`.
///
/// `alpha = 0` yields 0, which switches the floor off in the
/// contamination-free setting.
pub fn exploration_floor(alpha: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..0.5).contains(&alpha) {
        return arg(format!("alpha must lie in [0, 0.5), got {alpha}"));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 / (alpha * alpha) * (1.0 / delta).ln())
}

/// Gap-based radius
/// `sigma/(1-eps) * sqrt((2/N) ln((K-1) C t^beta / delta))`.
///
/// For `K = 1` the factor `K - 1` is replaced by 1 so that the radius stays finite.
pub fn beta_gap_radius(params: &RadiusParams, n_pulls: u64, t: u64) -> Result<f64> {
    if n_pulls == 0 {
        return state("radius of an arm with no pulls");
    }
    if t == 0 {
        return arg("rounds are numbered from 1");
    }
    let others = (params.num_arms.max(2) - 1) as f64;
    let log_term =
        (others * params.c_const / params.delta).ln() + params.beta_exp * (t as f64).ln();
    Ok(params.prefactor() * (2.0 / n_pulls as f64 * log_term).sqrt())
}

/// Successive-elimination radius
/// `sigma/(1-eps) * sqrt((2/t) ln(K t^2 pi^2 / (12 delta)))`.
pub fn gamma_se_radius(params: &RadiusParams, t: u64) -> Result<f64> {
    if t == 0 {
        return arg("rounds are numbered from 1");
    }
    let tf = t as f64;
    let log_term = (params.num_arms as f64 * PI * PI / (12.0 * params.delta)).ln() + 2.0 * tf.ln();
    Ok(params.prefactor() * (2.0 / tf * log_term).sqrt())
}

/// Tightened radius `sigma * sqrt((2/N) ln(ln(max(t,3)) / delta))`; carries
/// no contamination prefactor.
pub fn empirical_radius(params: &RadiusParams, n_pulls: u64, t: u64) -> Result<f64> {
    if n_pulls == 0 {
        return state("radius of an arm with no pulls");
    }
    let lt = (t.max(3) as f64).ln();
    Ok(params.sigma * (2.0 / n_pulls as f64 * (lt / params.delta).ln()).sqrt())
}

/// Complexity `H = sum_i (sqrt(2) sigma / max(Delta_i, Delta_b*))^2`.
pub fn problem_complexity(means: &[f64], uncertainty: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return arg("sigma must be positive");
    }
    if means.len() < 2 {
        return arg("problem complexity needs at least two arms");
    }
    let gaps = true_gaps(means, uncertainty)?;
    let best = argmax(means);
    let runner_up = runner_up_gap(&gaps, best);
    if !(runner_up > 0.0) {
        return Err(CbaiError::Infeasible(format!(
            "runner-up gap {runner_up} is not positive"
        )));
    }
    Ok(gaps
        .iter()
        .map(|g| {
            let d = g.max(runner_up);
            2.0 * sigma * sigma / (d * d)
        })
        .sum())
}

fn runner_up_gap(gaps: &[f64], best: usize) -> f64 {
    gaps.iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min)
}

/// `sigma * eps * sqrt(ln(1/eps))`, zero at `eps = 0`.
pub fn contamination_scale(sigma: f64, epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        0.0
    } else {
        sigma * epsilon * (1.0 / epsilon).ln().sqrt()
    }
}

/// Asymptotic slopes of `E[tau] / ln(1/delta)` from the lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundReport {
    /// Partially identifiable setting: equals `H`.
    pub asymptotic_slope_pibai: f64,
    /// Contaminated setting with uncertainty `c1 sigma eps sqrt(ln(1/eps))`
    /// subtracted from each uncertainty-free gap.
    pub asymptotic_slope_cbai: f64,
}

pub fn lower_bound_report(
    h: f64,
    delta: f64,
    epsilon: f64,
    sigma: f64,
    means: &[f64],
    c1: f64,
) -> Result<LowerBoundReport> {
    check_delta(delta)?;
    if !(0.0..0.5).contains(&epsilon) {
        return arg(format!("epsilon must lie in [0, 0.5), got {epsilon}"));
    }
    let slope = contaminated_sum(means, sigma, c1 * contamination_scale(sigma, epsilon))?;
    Ok(LowerBoundReport {
        asymptotic_slope_pibai: h,
        asymptotic_slope_cbai: slope,
    })
}

/// `sum_i (sqrt(2) sigma / (max(D_i, D_b*) - penalty))^2` with the
/// uncertainty-free gaps `D_i = mu_best - mu_i`.
fn contaminated_sum(means: &[f64], sigma: f64, penalty: f64) -> Result<f64> {
    if means.len() < 2 {
        return arg("at least two arms are required");
    }
    let best = argmax(means);
    let gaps: Vec<f64> = means.iter().map(|m| means[best] - m).collect();
    let runner_up = runner_up_gap(&gaps, best);
    let mut total = 0.0;
    for (i, g) in gaps.iter().enumerate() {
        let d = g.max(runner_up) - penalty;
        if !(d > 0.0) {
            return Err(CbaiError::Infeasible(format!(
                "effective gap of arm {i} is {d}: the best arm is not identifiable"
            )));
        }
        total += 2.0 * sigma * sigma / (d * d);
    }
    Ok(total)
}

/// Upper bounds on the sample complexity of the two policies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBoundReport {
    /// `max{8K/eps^2, 64 beta H}`; infinite at `eps = 0`.
    pub gap_slope: f64,
    /// Form kept from the analysis before `(1-eps)^-2 <= 4` is applied:
    /// `max{8K/eps^2, 16 beta H / (1-eps)^2}`.
    pub gap_slope_unabsorbed: f64,
    /// `max{8K/eps^2, 64 beta sum_i (sqrt(2) sigma / (max(D_i, D_b*) - 2 C1 sigma eps sqrt(ln 1/eps)))^2}`,
    /// `None` when the penalty closes a gap.
    pub gap_slope_contaminated: Option<f64>,
    /// High-probability bound for elimination, up to an unspecified constant
    /// on its second term:
    /// `max{(8K/eps^2) ln(1/delta), sum_{i != best} ln(K/(delta D_i)) / D_i^2}`.
    pub elimination_bound: f64,
    /// The second term above on its own.
    pub elimination_gap_term: f64,
}

pub fn upper_bound_report(
    params: &RadiusParams,
    means: &[f64],
    uncertainty: &[f64],
    h: f64,
) -> Result<UpperBoundReport> {
    let k = params.num_arms as f64;
    let eps = params.epsilon;
    let floor_term = if eps > 0.0 {
        8.0 * k / (eps * eps)
    } else {
        f64::INFINITY
    };
    let beta = params.beta_exp;
    let gap_slope = floor_term.max(64.0 * beta * h);
    let gap_slope_unabsorbed = floor_term.max(16.0 * beta * h / ((1.0 - eps) * (1.0 - eps)));
    let penalty = 2.0 * params.c1_uncertainty * contamination_scale(params.sigma, eps);
    let gap_slope_contaminated = contaminated_sum(means, params.sigma, penalty)
        .ok()
        .map(|s| floor_term.max(64.0 * beta * s));

    let gaps = true_gaps(means, uncertainty)?;
    let best = argmax(means);
    let gap_term: f64 = gaps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, d)| (k / (params.delta * d)).ln() / (d * d))
        .sum();
    let elimination_bound = (floor_term * (1.0 / params.delta).ln()).max(gap_term);
    Ok(UpperBoundReport {
        gap_slope,
        gap_slope_unabsorbed,
        gap_slope_contaminated,
        elimination_bound,
        elimination_gap_term: gap_term,
    })
}
