//! Sigmoidal mirror descent and the baseline update rules.
//!
//! One SiMPL iteration shifts the latent field against the gradient,
//! `ψ ← ψ − α∇F`, and then restores the volume with a scalar shift `μ`.
//! The step `α` starts from a Barzilai–Borwein-like estimate and is
//! backtracked until an Armijo or Bregman sufficient-decrease test holds.

mod baselines;
mod driver;
mod linesearch;
mod stationarity;

use serde::{Deserialize, Serialize};

use crate::entropy::{bregman_volume_correct, densities, VOLUME_TOL};
use crate::error::{Error, Result};
use crate::field::{l2_inner, DensityField, ElementField, LatentField};

pub use baselines::{oc_update, pgd_update, step_oc, step_pgd, OcConfig};
pub use driver::{run, run_observed, run_problem, IterationRecord, RunReport, RunStatus, Totals};
pub use linesearch::{armijo_search, bregman_search, Accepted, SufficientDecrease};
pub use stationarity::{stationarity_bregman, stationarity_l2, Stationarity};

/// Update rule selected for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Method {
    /// Mirror descent with Armijo backtracking.
    #[serde(rename = "simpl-a")]
    SimplA,
    /// Mirror descent with Bregman backtracking.
    #[default]
    #[serde(rename = "simpl-b")]
    SimplB,
    #[serde(rename = "oc")]
    Oc,
    #[serde(rename = "pgd")]
    Pgd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SimplA, Method::SimplB, Method::Oc, Method::Pgd];

    pub fn name(self) -> &'static str {
        match self {
            Method::SimplA => "simpl-a",
            Method::SimplB => "simpl-b",
            Method::Oc => "oc",
            Method::Pgd => "pgd",
        }
    }

    pub fn is_simpl(self) -> bool {
        matches!(self, Method::SimplA | Method::SimplB)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "method",
                    format!("unknown method `{s}` (expected simpl-a, simpl-b, oc or pgd)"),
                )
            })
    }
}

/// How stationarity is measured for the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationarityMetric {
    /// Bregman divergence of a short mirror step; compared against `tol_S²`.
    Bregman,
    /// L² length of a short projected-gradient step; compared against `tol_S`.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearchConfig {
    pub beta: f64,
    pub c1: f64,
    pub max_trials: usize,
    /// Initial step when no history is available.
    pub s_fallback: f64,
    /// Upper cap on the initial step.
    pub max_step: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            c1: 1e-4,
            max_trials: 60,
            s_fallback: 1.0,
            max_step: 1e6,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config("line_search.beta", "must lie in (0, 1)"));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::config("line_search.c1", "must lie in (0, 1)"));
        }
        if self.max_trials == 0 {
            return Err(Error::config("line_search.max_trials", "must be positive"));
        }
        if !(self.s_fallback > 0.0 && self.s_fallback.is_finite()) {
            return Err(Error::config("line_search.s_fallback", "must be positive"));
        }
        if !(self.max_step >= self.s_fallback && self.max_step.is_finite()) {
            return Err(Error::config(
                "line_search.max_step",
                "must be finite and at least s_fallback",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StoppingConfig {
    pub tol_s: f64,
    pub tol_f: f64,
    /// Step used to probe stationarity.
    pub probe: f64,
    pub max_iters: usize,
    /// `None` picks Bregman for the mirror-descent methods and L² otherwise.
    pub metric: Option<StationarityMetric>,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            tol_s: 1e-4,
            tol_f: 1e-5,
            probe: 1e-3,
            max_iters: 500,
            metric: None,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("stopping.tol_s", self.tol_s),
            ("stopping.tol_f", self.tol_f),
            ("stopping.probe", self.probe),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn metric_for(&self, method: Method) -> StationarityMetric {
        self.metric.unwrap_or(if method.is_simpl() {
            StationarityMetric::Bregman
        } else {
            StationarityMetric::L2
        })
    }

    /// Threshold the stationarity ratio must fall below.
    pub fn stationarity_threshold(&self, metric: StationarityMetric) -> f64 {
        match metric {
            StationarityMetric::Bregman => self.tol_s * self.tol_s,
            StationarityMetric::L2 => self.tol_s,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub objective_evals: usize,
    pub gradient_evals: usize,
    pub line_search_trials: usize,
}

/// The iterate before the last accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviousIterate {
    pub psi: Option<LatentField>,
    pub rho: DensityField,
    pub grad: ElementField,
}

/// Iterate, gradient and bookkeeping of a run.
///
/// For the mirror-descent methods `rho` is always `σ(psi)`; the baselines
/// work on densities directly and carry no latent field.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub k: usize,
    pub psi: Option<LatentField>,
    pub rho: DensityField,
    pub grad: ElementField,
    pub objective: f64,
    pub previous: Option<PreviousIterate>,
    /// Last accepted step (0 before the first step).
    pub alpha: f64,
    pub mu: f64,
    pub counters: Counters,
    pub theta: f64,
    pub cell_area: f64,
}

impl OptimizerState {
    pub fn from_latent(
        psi: LatentField,
        grad: ElementField,
        objective: f64,
        theta: f64,
        cell_area: f64,
    ) -> Self {
        let rho = densities(&psi);
        Self::build(Some(psi), rho, grad, objective, theta, cell_area)
    }

    pub fn from_density(
        rho: DensityField,
        grad: ElementField,
        objective: f64,
        theta: f64,
        cell_area: f64,
    ) -> Self {
        Self::build(None, rho, grad, objective, theta, cell_area)
    }

    fn build(
        psi: Option<LatentField>,
        rho: DensityField,
        grad: ElementField,
        objective: f64,
        theta: f64,
        cell_area: f64,
    ) -> Self {
        Self {
            k: 0,
            psi,
            rho,
            grad,
            objective,
            previous: None,
            alpha: 0.0,
            mu: 0.0,
            counters: Counters {
                objective_evals: 1,
                gradient_evals: 1,
                line_search_trials: 0,
            },
            theta,
            cell_area,
        }
    }

    pub(crate) fn latent(&self) -> Result<&LatentField> {
        self.psi
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("state carries no latent field".into()))
    }

    /// Moves to a new iterate; the caller supplies the gradient afterwards
    /// through [`Self::set_gradient`].
    pub(crate) fn advance(
        &mut self,
        psi: Option<LatentField>,
        rho: DensityField,
        objective: f64,
        alpha: f64,
        mu: f64,
    ) {
        let previous = PreviousIterate {
            psi: self.psi.take(),
            rho: std::mem::replace(&mut self.rho, rho),
            grad: std::mem::take(&mut self.grad),
        };
        self.previous = Some(previous);
        self.psi = psi;
        self.objective = objective;
        self.alpha = alpha;
        self.mu = mu;
        self.k += 1;
    }

    pub(crate) fn set_gradient(&mut self, grad: ElementField) {
        self.grad = grad;
        self.counters.gradient_evals += 1;
    }
}

/// Candidate iterate produced by one mirror step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub psi: LatentField,
    pub mu: f64,
    pub rho: DensityField,
}

/// `ψ₊ = ψ − α∇F + μ` with `μ` restoring the volume.
pub fn simpl_trial(state: &OptimizerState, alpha: f64) -> Result<Trial> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive and finite, got {alpha}"
        )));
    }
    let psi = state.latent()?;
    if let Some((e, g)) = state.grad.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gradient is not finite at element {e}: {g}"
        )));
    }
    let half: Vec<f64> = psi.iter().zip(state.grad.iter()).map(|(p, g)| p - alpha * g).collect();
    let correction = bregman_volume_correct(&half, state.theta, VOLUME_TOL)?;
    let rho = densities(&correction.psi);
    Ok(Trial {
        psi: correction.psi,
        mu: correction.mu,
        rho,
    })
}

/// Barzilai–Borwein-like step
/// `s = (ψₖ − ψₖ₋₁, ρₖ − ρₖ₋₁) / |(∇Fₖ − ∇Fₖ₋₁, ρₖ − ρₖ₋₁)|`, capped at
/// `max_step`.
///
/// Without history, or when either inner product vanishes, the previous
/// accepted step is reused (`s_fallback` before the first step).
pub fn initial_step(state: &OptimizerState, cfg: &LineSearchConfig) -> f64 {
    let fallback = if state.alpha > 0.0 {
        state.alpha
    } else {
        cfg.s_fallback
    };
    let estimate = (|| {
        let prev = state.previous.as_ref()?;
        let (psi, prev_psi) = (state.psi.as_ref()?, prev.psi.as_ref()?);
        let d_rho: Vec<f64> = state.rho.iter().zip(prev.rho.iter()).map(|(a, b)| a - b).collect();
        let d_psi: Vec<f64> = psi.iter().zip(prev_psi.iter()).map(|(a, b)| a - b).collect();
        let d_grad: Vec<f64> = state.grad.iter().zip(prev.grad.iter()).map(|(a, b)| a - b).collect();
        let num = l2_inner(&d_psi, &d_rho, state.cell_area);
        let den = l2_inner(&d_grad, &d_rho, state.cell_area).abs();
        let s = num / den;
        (num > 0.0 && den >= 1e-300 && s.is_finite()).then_some(s)
    })();
    estimate.unwrap_or(fallback).min(cfg.max_step)
}

/// What one accepted iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub alpha: f64,
    /// Step tried first.
    pub initial_step: f64,
    pub trials: usize,
}

/// One SiMPL iteration: initial step, backtracking with `rule`, and the
/// move to the accepted trial. The caller then supplies `∇F` at the new
/// iterate through [`OptimizerState::set_gradient`].
pub fn step_simpl<F>(
    state: &mut OptimizerState,
    rule: SufficientDecrease,
    cfg: &LineSearchConfig,
    objective: F,
) -> Result<StepSummary>
where
    F: FnMut(&Trial) -> Result<f64>,
{
    let s = initial_step(state, cfg);
    let outcome = linesearch::backtrack(state, s, cfg, rule, objective);
    let trials = match &outcome {
        Ok(a) => a.trials,
        Err(Error::LineSearchFailure { trials, .. }) => *trials,
        Err(_) => 0,
    };
    state.counters.objective_evals += trials;
    state.counters.line_search_trials += trials;
    let accepted = outcome?;
    let Trial { psi, mu, rho } = accepted.trial;
    state.advance(Some(psi), rho, accepted.objective, accepted.alpha, mu);
    Ok(StepSummary {
        alpha: accepted.alpha,
        initial_step: s,
        trials,
    })
}
