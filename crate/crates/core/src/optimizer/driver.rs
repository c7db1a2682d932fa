//! The optimization loop and its report.

use std::time::Instant;

use log::{debug, info, warn};
use serde::Serialize;

use super::{
    step_oc, step_pgd, step_simpl, Method, OptimizerState, StationarityMetric, Stationarity,
    SufficientDecrease,
};
use crate::config::RunConfig;
use crate::entropy::{inv_sigmoid, volume_error};
use crate::error::{Error, Result};
use crate::field::{l2_distance, DensityField, ElementField, LatentField, NodalField};
use crate::mesh::Mesh2D;
use crate::physics::{Compliance, EvaluationRecord};

/// One row of the convergence history; row 0 is the initial design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub compliance: f64,
    /// Stationarity relative to iteration 0.
    pub stationarity: f64,
    /// Accepted step (0 for the initial design).
    pub step: f64,
    pub ls_trials: usize,
    /// `|∫ρ dx − θ|Ω|| / |Ω|`.
    pub volume_error: f64,
    /// `‖ρₖ − ρₖ₋₁‖_{L²}` (0 for the initial design).
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIterations,
    /// Backtracking exhausted its trials; the message carries the details.
    LineSearchFailed(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub iterations: usize,
    pub objective_evals: usize,
    pub gradient_evals: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub metric: StationarityMetric,
    pub mesh: Mesh2D,
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
    pub totals: Totals,
    /// Iterations whose first trial step was accepted.
    pub first_trial_accepts: usize,
    pub max_step: f64,
    pub rho: DensityField,
    pub psi: Option<LatentField>,
    pub gradient: ElementField,
    pub rho_filtered: NodalField,
    pub displacement: NodalField,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    pub fn final_compliance(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.compliance)
    }
}

/// Builds the problem described by `config` and optimizes it.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let problem = Compliance::new(config.problem()?)?;
    run_problem(&problem, config)
}

/// Optimizes an already assembled problem with the algorithm settings of
/// `config` (its physical parameters are not consulted).
pub fn run_problem(problem: &Compliance, config: &RunConfig) -> Result<RunReport> {
    run_observed(problem, config, |_| {})
}

/// [`run_problem`] that also hands the initial state and every accepted
/// iterate to `observer`.
pub fn run_observed<O>(problem: &Compliance, config: &RunConfig, mut observer: O) -> Result<RunReport>
where
    O: FnMut(&OptimizerState),
{
    config.validate()?;
    let started = Instant::now();
    let method = config.method;
    let spec = problem.spec();
    let mesh = problem.mesh();
    let (n, area, theta) = (mesh.num_elements(), mesh.element_area(), spec.theta);
    let stopping = &config.stopping;
    let metric = stopping.metric_for(method);
    if metric == StationarityMetric::Bregman && !method.is_simpl() {
        return Err(Error::config("stopping.metric", "Bregman stationarity needs a latent field"));
    }
    let threshold = stopping.stationarity_threshold(metric);

    let rho0 = vec![theta; n];
    let mut eval = problem.evaluate(&rho0, None)?;
    let mut grad_record = problem.gradient(&eval, None)?;
    let mut state = if method.is_simpl() {
        let psi = vec![inv_sigmoid(theta)?; n];
        OptimizerState::from_latent(psi.into(), grad_record.gradient.clone(), eval.compliance, theta, area)
    } else {
        OptimizerState::from_density(rho0.into(), grad_record.gradient.clone(), eval.compliance, theta, area)
    };
    let stationarity = Stationarity::new(
        metric,
        stopping.probe,
        state.psi.as_deref(),
        &state.rho,
        &state.grad,
        theta,
        area,
    )?;
    observer(&state);
    let initial_ratio = if stationarity.reference() == 0.0 { 0.0 } else { 1.0 };
    let mut records = vec![IterationRecord {
        iter: 0,
        compliance: state.objective,
        stationarity: initial_ratio,
        step: 0.0,
        ls_trials: 0,
        volume_error: volume_error(&state.rho, theta),
        increment: 0.0,
    }];
    info!(
        "{method} on {}x{} elements: F0 = {:.10e}",
        mesh.nx(),
        mesh.ny(),
        state.objective
    );

    let mut status = if initial_ratio < threshold {
        RunStatus::Converged
    } else {
        RunStatus::MaxIterations
    };
    let mut first_trial_accepts = 0;
    let mut max_step = 0.0f64;
    while status != RunStatus::Converged && state.k < stopping.max_iters {
        let previous_objective = state.objective;
        let mut accepted_eval: Option<EvaluationRecord> = None;
        let warm = &eval;
        let mut evaluate = |rho: &[f64]| -> Result<f64> {
            let record = problem.evaluate(rho, Some(warm))?;
            let value = record.compliance;
            accepted_eval = Some(record);
            Ok(value)
        };
        let outcome = match method {
            Method::SimplA | Method::SimplB => {
                let rule = if method == Method::SimplA {
                    SufficientDecrease::Armijo
                } else {
                    SufficientDecrease::Bregman
                };
                step_simpl(&mut state, rule, &config.line_search, |trial| evaluate(&trial.rho))
            }
            Method::Oc => step_oc(&mut state, &config.oc, &mut evaluate),
            Method::Pgd => step_pgd(&mut state, config.pgd_step, &mut evaluate),
        };
        let step = match outcome {
            Ok(step) => step,
            Err(e @ Error::LineSearchFailure { .. }) => {
                warn!("stopping after iteration {}: {e}", state.k);
                status = RunStatus::LineSearchFailed(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        eval = accepted_eval.ok_or_else(|| Error::Internal("accepted step was never evaluated".into()))?;
        grad_record = problem.gradient(&eval, Some(&grad_record))?;
        state.set_gradient(grad_record.gradient.clone());
        observer(&state);

        if step.trials == 1 {
            first_trial_accepts += 1;
        }
        max_step = max_step.max(step.alpha);
        let ratio = stationarity.ratio(state.psi.as_deref(), &state.rho, &state.grad, theta, area)?;
        let change = ((state.objective - previous_objective) / state.objective).abs();
        let increment = state
            .previous
            .as_ref()
            .map_or(0.0, |p| l2_distance(&state.rho, &p.rho, area));
        records.push(IterationRecord {
            iter: state.k,
            compliance: state.objective,
            stationarity: ratio,
            step: step.alpha,
            ls_trials: step.trials,
            volume_error: volume_error(&state.rho, theta),
            increment,
        });
        info!(
            "iter {:4}  F {:.10e}  stat {:.3e}  step {:.3e} (from {:.3e}, {} trials)  dF {:.2e}",
            state.k, state.objective, ratio, step.alpha, step.initial_step, step.trials, change
        );
        debug!(
            "state/filter/adjoint CG iterations {}/{}/{}",
            eval.state_iterations, eval.filter_iterations, grad_record.iterations
        );
        if ratio < threshold && change <= stopping.tol_f {
            status = RunStatus::Converged;
        }
    }

    let totals = Totals {
        iterations: state.k,
        objective_evals: state.counters.objective_evals,
        gradient_evals: state.counters.gradient_evals,
    };
    info!(
        "{method}: {:?} after {} iterations ({} objective / {} gradient evaluations), F = {:.10e}",
        status, totals.iterations, totals.objective_evals, totals.gradient_evals, state.objective
    );
    Ok(RunReport {
        method,
        metric,
        mesh: mesh.clone(),
        records,
        status,
        totals,
        first_trial_accepts,
        max_step,
        rho: state.rho,
        psi: state.psi,
        gradient: state.grad,
        rho_filtered: eval.rho_filtered,
        displacement: eval.displacement,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
