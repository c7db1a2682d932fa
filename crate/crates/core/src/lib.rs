//! Density-based topology optimization with sigmoidal mirror descent.
//!
//! The optimizer updates a latent field `ψ` and reads densities off as
//! `ρ = σ(ψ)`, so every iterate stays strictly inside the box constraint. A
//! scalar shift of `ψ` enforces the volume constraint; this is the Bregman
//! projection for the Fermi–Dirac entropy. Step sizes come from a
//! Barzilai–Borwein-like estimate refined by backtracking with either an
//! Armijo or a Bregman sufficient-decrease test.
//!
//! The physics is the classical compliance problem: a screened-Poisson
//! density filter, SIMP interpolation and plane-stress linear elasticity on a
//! structured bilinear mesh. Optimality-criteria and projected-gradient
//! baselines are included for comparison.

pub mod config;
pub mod entropy;
pub mod error;
pub mod fem;
pub mod field;
pub mod mesh;
pub mod optimizer;
pub mod output;
pub mod physics;
pub mod solver;
pub mod sparse;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use field::{DensityField, ElementField, LatentField, NodalField};
pub use mesh::{build_mesh, BoundaryTag, Mesh2D};
pub use optimizer::{
    run, run_observed, run_problem, IterationRecord, LineSearchConfig, Method, OcConfig, OptimizerState,
    RunReport, RunStatus, StationarityMetric, StoppingConfig, Totals,
};
pub use physics::{BallLoad, Compliance, EvaluationRecord, GradientRecord, ProblemSpec};
pub use sparse::{Dirichlet, SparseOperator};
