//! Backtracking on the mirror step `α = βᵐ s`.

use log::{debug, warn};

use super::{simpl_trial, LineSearchConfig, OptimizerState, Trial};
use crate::entropy::bregman_div;
use crate::error::{Error, Result};
use crate::field::l2_inner;

/// Sufficient-decrease test applied to each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SufficientDecrease {
    /// `F(ρ₊) ≤ F(ρ) + c₁ ∫ ∇F (ρ₊ − ρ)`.
    Armijo,
    /// `F(ρ₊) ≤ F(ρ) + ∫ ∇F (ρ₊ − ρ) + D_φ(ρ₊, ρ) / α`.
    Bregman,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accepted {
    pub alpha: f64,
    pub trial: Trial,
    pub objective: f64,
    /// Number of trials evaluated, including the accepted one.
    pub trials: usize,
}

/// Armijo backtracking starting from step `s`.
///
/// `objective` evaluates `F` at a trial iterate. A linear-solver failure at a
/// trial rejects that trial; other errors abort the search.
pub fn armijo_search<F>(
    state: &OptimizerState,
    s: f64,
    cfg: &LineSearchConfig,
    objective: F,
) -> Result<Accepted>
where
    F: FnMut(&Trial) -> Result<f64>,
{
    backtrack(state, s, cfg, SufficientDecrease::Armijo, objective)
}

/// Bregman backtracking starting from step `s`.
pub fn bregman_search<F>(
    state: &OptimizerState,
    s: f64,
    cfg: &LineSearchConfig,
    objective: F,
) -> Result<Accepted>
where
    F: FnMut(&Trial) -> Result<f64>,
{
    backtrack(state, s, cfg, SufficientDecrease::Bregman, objective)
}

pub(crate) fn backtrack<F>(
    state: &OptimizerState,
    s: f64,
    cfg: &LineSearchConfig,
    rule: SufficientDecrease,
    mut objective: F,
) -> Result<Accepted>
where
    F: FnMut(&Trial) -> Result<f64>,
{
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial step must be positive and finite, got {s}"
        )));
    }
    let psi = state.latent()?;
    let mut alpha = s;
    let mut best = (f64::NAN, f64::INFINITY);
    for trial_index in 1..=cfg.max_trials {
        // The multiplier is recomputed for every trial step.
        let trial = simpl_trial(state, alpha)?;
        let value = match objective(&trial) {
            Ok(v) => v,
            Err(Error::SolverFailure { iterations, residual }) => {
                warn!(
                    "trial step {alpha:.3e} rejected: linear solver stopped after {iterations} iterations at residual {residual:.3e}"
                );
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        if value < best.1 {
            best = (alpha, value);
        }
        let delta: Vec<f64> = trial.rho.iter().zip(state.rho.iter()).map(|(a, b)| a - b).collect();
        let linear = l2_inner(&state.grad, &delta, state.cell_area);
        let bound = match rule {
            SufficientDecrease::Armijo => state.objective + cfg.c1 * linear,
            SufficientDecrease::Bregman => {
                let div = bregman_div(&trial.psi, psi, state.cell_area)?;
                state.objective + linear + div / alpha
            }
        };
        debug!("trial {trial_index}: alpha {alpha:.6e}, F {value:.12e}, bound {bound:.12e}");
        if value <= bound {
            return Ok(Accepted {
                alpha,
                trial,
                objective: value,
                trials: trial_index,
            });
        }
        alpha *= cfg.beta;
    }
    Err(Error::LineSearchFailure {
        trials: cfg.max_trials,
        best_step: best.0,
        best_objective: best.1,
        reference: state.objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{densities, inv_sigmoid};

    fn state(psi: Vec<f64>, grad: Vec<f64>, objective: f64) -> OptimizerState {
        let theta = densities(&psi).iter().sum::<f64>() / psi.len() as f64;
        OptimizerState::from_latent(psi.into(), grad.into(), objective, theta, 0.25)
    }

    fn quadratic(target: &[f64], area: f64) -> impl Fn(&[f64]) -> f64 + '_ {
        move |rho: &[f64]| {
            0.5 * area * rho.iter().zip(target).map(|(r, t)| (r - t) * (r - t)).sum::<f64>()
        }
    }

    #[test]
    fn linear_objective_accepts_first_trial() {
        let grad = vec![-1.0, 0.5, -0.25, 2.0];
        let psi = vec![0.2, -0.1, 0.4, 0.0];
        let area = 0.25;
        let linear = |rho: &[f64]| l2_inner(&grad, rho, area);
        let s = {
            let mut s = state(psi, grad.clone(), 0.0);
            s.objective = linear(&s.rho);
            s
        };
        let out = armijo_search(&s, 4.0, &LineSearchConfig::default(), |t| Ok(linear(&t.rho)))
            .unwrap();
        assert_eq!(out.trials, 1);
        assert_eq!(out.alpha, 4.0);
    }

    #[test]
    fn zero_gradient_accepts_immediately() {
        let s = state(vec![0.3, -0.3], vec![0.0, 0.0], 2.0);
        for rule in [SufficientDecrease::Armijo, SufficientDecrease::Bregman] {
            let out = backtrack(&s, 1.0, &LineSearchConfig::default(), rule, |_| Ok(2.0)).unwrap();
            assert_eq!(out.trials, 1);
        }
    }

    #[test]
    fn bregman_search_accepts_steps_below_relative_smoothness_constant() {
        // F(ρ) = ½∫(ρ − t)² is 1/4-smooth relative to the Fermi–Dirac entropy,
        // whose Hessian 1/(ρ(1−ρ)) is at least 4, so any α ≤ 4 passes.
        let target = [0.9, 0.1, 0.7, 0.3];
        let area = 0.25;
        let f = quadratic(&target, area);
        let psi = vec![0.0, 0.5, -0.5, 1.0];
        let rho = densities(&psi);
        let grad: Vec<f64> = rho.iter().zip(&target).map(|(r, t)| r - t).collect();
        let s = state(psi, grad, f(&rho));
        for alpha in [0.1, 1.0, 4.0] {
            let out = bregman_search(&s, alpha, &LineSearchConfig::default(), |t| Ok(f(&t.rho)))
                .unwrap();
            assert_eq!(out.trials, 1, "alpha {alpha}");
            assert!(out.objective < s.objective);
        }
    }

    #[test]
    fn overlong_step_is_backtracked() {
        let target = [1.0, 0.0];
        let f = quadratic(&target, 0.25);
        let psi = vec![inv_sigmoid(0.5).unwrap(); 2];
        let rho = densities(&psi);
        let grad = vec![-0.5, 0.5];
        let s = state(psi, grad, f(&rho));
        // A concave bump makes large steps non-descent.
        let bumped = |t: &Trial| {
            let d = t.rho[0] - 0.5;
            Ok(f(&t.rho) + 10.0 * d * d)
        };
        let out = armijo_search(&s, 1e3, &LineSearchConfig::default(), bumped).unwrap();
        assert!(out.trials > 1);
        assert!(out.objective < s.objective);
        assert_eq!(out.alpha, 1e3 * 0.5f64.powi(out.trials as i32 - 1));
    }

    #[test]
    fn exhausted_search_reports_best_trial() {
        let s = state(vec![0.0, 0.0], vec![-1.0, 1.0], 1.0);
        let cfg = LineSearchConfig {
            max_trials: 5,
            ..Default::default()
        };
        let err = armijo_search(&s, 1.0, &cfg, |t| Ok(2.0 + t.rho[0])).unwrap_err();
        match err {
            Error::LineSearchFailure { trials, best_step, reference, .. } => {
                assert_eq!(trials, 5);
                assert_eq!(best_step, 1.0 / 16.0);
                assert_eq!(reference, 1.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn solver_failure_rejects_trial() {
        let s = state(vec![0.0, 0.0], vec![-1.0, 1.0], 1.0);
        let mut calls = 0;
        let out = armijo_search(&s, 1.0, &LineSearchConfig::default(), |_| {
            calls += 1;
            if calls == 1 {
                Err(Error::SolverFailure {
                    iterations: 10,
                    residual: 1.0,
                })
            } else {
                Ok(0.5)
            }
        })
        .unwrap();
        assert_eq!(out.trials, 2);
        assert_eq!(out.alpha, 0.5);
    }
}
