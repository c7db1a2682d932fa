//! Optimality-criteria and projected-gradient updates.

use serde::{Deserialize, Serialize};

use super::{OptimizerState, StepSummary};
use crate::entropy::{l2_volume_correct, BISECTION_MAX_ITERS, VOLUME_TOL};
use crate::error::{Error, Result};
use crate::field::DensityField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcConfig {
    /// Damping exponent `η` in `ρ (−∇F / λ)^η`.
    pub exponent: f64,
    /// Largest change of any element density per step.
    pub move_limit: f64,
}

impl Default for OcConfig {
    fn default() -> Self {
        Self {
            exponent: 0.5,
            move_limit: 0.2,
        }
    }
}

impl OcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::config("oc.exponent", "must be positive"));
        }
        if !(self.move_limit > 0.0 && self.move_limit <= 1.0) {
            return Err(Error::config("oc.move_limit", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Optimality-criteria update
/// `ρ₊ = clip(ρ (−∇F / λ)^η, max(0, ρ − m), min(1, ρ + m))`, with `λ > 0`
/// found by bisection (in `log λ`) so that the volume equals `θ|Ω|`.
///
/// Returns the new density and `λ`.
pub fn oc_update(rho: &[f64], grad: &[f64], theta: f64, cfg: &OcConfig) -> Result<(DensityField, f64)> {
    if rho.len() != grad.len() || rho.is_empty() {
        return Err(Error::InvalidArgument("density and gradient lengths differ".into()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("volume fraction {theta} outside (0, 1)")));
    }
    let descent: Vec<f64> = grad.iter().map(|g| (-g).max(0.0)).collect();
    if descent.iter().all(|&d| d == 0.0) {
        return Err(Error::InvalidArgument(
            "optimality criteria need a gradient with a negative entry".into(),
        ));
    }
    let m = cfg.move_limit;
    let update = |lambda: f64, e: usize| {
        let r = rho[e];
        (r * (descent[e] / lambda).powf(cfg.exponent)).clamp((r - m).max(0.0), (r + m).min(1.0))
    };
    let n = rho.len() as f64;
    // Volume residual relative to |Ω|; non-increasing in λ.
    let residual = |lambda: f64| (0..rho.len()).map(|e| update(lambda, e)).sum::<f64>() / n - theta;

    let (mut lo, mut hi) = (1e-12, 1e12);
    let mut expansions = 0;
    while residual(lo) < 0.0 || residual(hi) > 0.0 {
        if expansions == BISECTION_MAX_ITERS {
            return Err(Error::Internal("optimality-criteria bracket search failed".into()));
        }
        if residual(lo) < 0.0 {
            lo *= 0.5;
        }
        if residual(hi) > 0.0 {
            hi *= 2.0;
        }
        expansions += 1;
    }

    let mut lambda = (lo * hi).sqrt();
    for _ in 0..BISECTION_MAX_ITERS {
        let r = residual(lambda);
        if r.abs() <= VOLUME_TOL {
            break;
        }
        if r > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        lambda = mid;
    }
    let r = residual(lambda);
    if r.abs() > VOLUME_TOL {
        return Err(Error::Internal(format!(
            "optimality-criteria bisection stalled with volume residual {r:.3e}"
        )));
    }
    Ok(((0..rho.len()).map(|e| update(lambda, e)).collect(), lambda))
}

/// Projected gradient step `ρ₊ = 𝒫_{L²}(ρ − α∇F)`.
pub fn pgd_update(rho: &[f64], grad: &[f64], alpha: f64, theta: f64) -> Result<DensityField> {
    if rho.len() != grad.len() {
        return Err(Error::InvalidArgument("density and gradient lengths differ".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {alpha}")));
    }
    let moved: Vec<f64> = rho.iter().zip(grad).map(|(r, g)| r - alpha * g).collect();
    Ok(l2_volume_correct(&moved, theta, VOLUME_TOL)?.0)
}

/// One optimality-criteria iteration. The recorded step is the exponent `η`
/// and the multiplier is `λ`.
pub fn step_oc<F>(state: &mut OptimizerState, cfg: &OcConfig, mut objective: F) -> Result<StepSummary>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let (rho, lambda) = oc_update(&state.rho, &state.grad, state.theta, cfg)?;
    let value = objective(&rho)?;
    state.counters.objective_evals += 1;
    state.counters.line_search_trials += 1;
    state.advance(None, rho, value, cfg.exponent, lambda);
    Ok(StepSummary {
        alpha: cfg.exponent,
        initial_step: cfg.exponent,
        trials: 1,
    })
}

/// One projected-gradient iteration with fixed step `alpha`.
pub fn step_pgd<F>(state: &mut OptimizerState, alpha: f64, mut objective: F) -> Result<StepSummary>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let rho = pgd_update(&state.rho, &state.grad, alpha, state.theta)?;
    let value = objective(&rho)?;
    state.counters.objective_evals += 1;
    state.counters.line_search_trials += 1;
    state.advance(None, rho, value, alpha, 0.0);
    Ok(StepSummary {
        alpha,
        initial_step: alpha,
        trials: 1,
    })
}
