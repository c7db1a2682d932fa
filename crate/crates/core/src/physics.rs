//! Reduced compliance objective: density filter, SIMP interpolation, linear
//! elasticity, and the adjoint gradient.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_scalar_filter_operator, body_force_load, clamp_boundary, element_means,
    element_to_node_load, node_weights, ElasticityAssembler,
};
use crate::field::{ElementField, NodalField};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::solver::{pcg, CgSettings, Preconditioner};
use crate::sparse::{Dirichlet, SparseOperator};

/// Body force `f = direction` on the disc `‖x − center‖ ≤ radius`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallLoad {
    pub center: [f64; 2],
    pub radius: f64,
    pub direction: [f64; 2],
}

impl BallLoad {
    pub fn force(&self, x: f64, y: f64) -> [f64; 2] {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        if (dx * dx + dy * dy).sqrt() <= self.radius {
            self.direction
        } else {
            [0.0, 0.0]
        }
    }
}

/// Physical and discretization parameters of a compliance problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub mesh: Mesh2D,
    /// Target volume fraction θ.
    pub theta: f64,
    /// Void stiffness ρ₀ in the SIMP law.
    pub rho0: f64,
    /// SIMP penalization exponent.
    pub penalty: f64,
    /// Filter radius; the screened-Poisson length is `r_min / (2√3)`.
    pub r_min: f64,
    pub young: f64,
    pub poisson: f64,
    pub load: BallLoad,
    /// Boundary where both displacement components vanish.
    pub clamped: BoundaryTag,
    /// Relative residual for every linear solve.
    pub solver_tol: f64,
}

impl ProblemSpec {
    /// The cantilever benchmark on `[0, 3] × [0, 1]` with element size `h`.
    pub fn cantilever_h(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("mesh size must be positive, got {h}")));
        }
        let ny = (1.0 / h).round() as usize;
        Ok(Self::cantilever(Mesh2D::new(3 * ny, ny, 3.0, 1.0)?))
    }

    /// Cantilever parameters on an arbitrary mesh: θ = 0.5, ρ₀ = 1e-6,
    /// penalty 3, r_min = 0.1, E = 1, ν = 0.3, load disc of radius 0.05 at
    /// (2.95, 0.5) pushing down, left edge clamped.
    pub fn cantilever(mesh: Mesh2D) -> Self {
        Self {
            mesh,
            theta: 0.5,
            rho0: 1e-6,
            penalty: 3.0,
            r_min: 0.1,
            young: 1.0,
            poisson: 0.3,
            load: BallLoad {
                center: [2.95, 0.5],
                radius: 0.05,
                direction: [0.0, -1.0],
            },
            clamped: BoundaryTag::Left,
            solver_tol: 1e-10,
        }
    }

    pub fn eps(&self) -> f64 {
        self.r_min / (2.0 * 3f64.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidArgument(format!("{what} = {v}")));
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta outside (0, 1)", self.theta);
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return bad("rho0 outside (0, 1)", self.rho0);
        }
        if !(self.penalty > 1.0) || !self.penalty.is_finite() {
            return bad("penalty must exceed 1", self.penalty);
        }
        if !(self.r_min > 0.0) || !self.r_min.is_finite() {
            return bad("r_min must be positive", self.r_min);
        }
        if !(self.young > 0.0) || !self.young.is_finite() {
            return bad("young must be positive", self.young);
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return bad("poisson outside [0, 0.5)", self.poisson);
        }
        if !(self.load.radius >= 0.0) {
            return bad("load radius", self.load.radius);
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return bad("solver tolerance outside (0, 1)", self.solver_tol);
        }
        Ok(())
    }
}

/// SIMP interpolation `r = ρ₀ + (1 − ρ₀) ρ̃ˢ` and its derivative.
///
/// The input is clamped to `[0, 1]`.
pub fn simp(rho_tilde: f64, rho0: f64, penalty: f64) -> (f64, f64) {
    let x = rho_tilde.clamp(0.0, 1.0);
    let r = rho0 + (1.0 - rho0) * x.powf(penalty);
    let dr = penalty * (1.0 - rho0) * x.powf(penalty - 1.0);
    (r, dr)
}

/// State of one objective evaluation.
#[derive(Debug, Clone)]
pub struct EvaluationRecord {
    /// Compliance `F = ∫ f · u dx`.
    pub compliance: f64,
    /// Nodal filtered density `ρ̃`.
    pub rho_filtered: NodalField,
    /// Element means of `ρ̃`, clamped to `[0, 1]`.
    pub rho_filtered_elem: ElementField,
    /// Whether each element mean was already inside `[0, 1]` before clamping.
    pub unclamped: Vec<bool>,
    /// Nodal displacements, `(x, y)` interleaved.
    pub displacement: NodalField,
    pub filter_iterations: usize,
    pub state_iterations: usize,
}

/// Gradient of the reduced objective and the filtered adjoint behind it.
#[derive(Debug, Clone)]
pub struct GradientRecord {
    /// `∇F` as a piecewise-constant field.
    pub gradient: ElementField,
    /// Nodal solution `w̃` of the filter-type adjoint equation.
    pub filtered: NodalField,
    pub iterations: usize,
}

/// Compliance objective on a fixed mesh, with all operators that do not
/// depend on the density assembled up front.
#[derive(Debug, Clone)]
pub struct Compliance {
    spec: ProblemSpec,
    filter: SparseOperator,
    elasticity: ElasticityAssembler,
    load: Vec<f64>,
    clamp: Dirichlet,
    node_weights: Vec<f64>,
}

impl Compliance {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let mesh = &spec.mesh;
        let filter = assemble_scalar_filter_operator(mesh, spec.eps())?;
        let elasticity = ElasticityAssembler::new(mesh, spec.young, spec.poisson)?;
        let load = body_force_load(mesh, |x, y| spec.load.force(x, y));
        let clamp = clamp_boundary(mesh, spec.clamped);
        let node_weights = node_weights(mesh);
        Ok(Self {
            spec,
            filter,
            elasticity,
            load,
            clamp,
            node_weights,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.spec.mesh
    }

    /// Nodal load vector before boundary conditions.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn filter_operator(&self) -> &SparseOperator {
        &self.filter
    }

    fn cg(&self, preconditioner: Preconditioner) -> CgSettings {
        CgSettings {
            rel_tol: self.spec.solver_tol,
            max_iters: None,
            preconditioner,
        }
    }

    fn check_density(&self, rho: &[f64]) -> Result<()> {
        let n = self.mesh().num_elements();
        if rho.len() != n {
            return Err(Error::InvalidArgument(format!(
                "density has {} entries, mesh has {n} elements",
                rho.len()
            )));
        }
        if let Some((e, r)) = rho.iter().enumerate().find(|(_, r)| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Infeasible(format!("element {e} has density {r}")));
        }
        Ok(())
    }

    /// Solves `(ε²K + M) ρ̃ = b` with `bᵢ = Σₑ ρₑ ∫ₑ φᵢ dx`.
    pub fn apply_filter(&self, rho: &[f64], guess: Option<&[f64]>) -> Result<(NodalField, usize)> {
        self.check_density(rho)?;
        let rhs = element_to_node_load(self.mesh(), rho);
        let out = pcg(&self.filter, &rhs, guess, self.cg(Preconditioner::Jacobi))?;
        let filtered = NodalField::new(out.x);
        debug_assert!({
            let mass_in: f64 = rhs.iter().sum();
            let mass_out: f64 = filtered.iter().zip(&self.node_weights).map(|(w, m)| w * m).sum();
            (mass_out - mass_in).abs() <= 1e-8 * mass_in.abs() + 1e-12
        });
        Ok((filtered, out.iterations))
    }

    /// Element means of a nodal filtered density, clamped to `[0, 1]`.
    pub fn element_filtered(&self, filtered: &[f64]) -> (ElementField, Vec<bool>) {
        let means = element_means(self.mesh(), filtered);
        let unclamped = means.iter().map(|m| (0.0..=1.0).contains(m)).collect();
        (means.into_iter().map(|m| m.clamp(0.0, 1.0)).collect(), unclamped)
    }

    /// Filter, interpolate and solve the clamped elasticity problem.
    ///
    /// `warm` supplies initial guesses for the two iterative solves.
    pub fn evaluate(&self, rho: &[f64], warm: Option<&EvaluationRecord>) -> Result<EvaluationRecord> {
        let (rho_filtered, filter_iterations) =
            self.apply_filter(rho, warm.map(|w| w.rho_filtered.as_slice()))?;
        let (rho_filtered_elem, unclamped) = self.element_filtered(&rho_filtered);
        let r: Vec<f64> = rho_filtered_elem
            .iter()
            .map(|&x| simp(x, self.spec.rho0, self.spec.penalty).0)
            .collect();
        let mut stiffness = self.elasticity.assemble(&r)?;
        let mut rhs = self.load.clone();
        stiffness.apply_dirichlet(&self.clamp, &mut rhs);
        let out = pcg(
            &stiffness,
            &rhs,
            warm.map(|w| w.displacement.as_slice()),
            self.cg(Preconditioner::IncompleteCholesky),
        )?;
        let compliance = self.load.iter().zip(&out.x).map(|(f, u)| f * u).sum();
        Ok(EvaluationRecord {
            compliance,
            rho_filtered,
            rho_filtered_elem,
            unclamped,
            displacement: NodalField::new(out.x),
            filter_iterations,
            state_iterations: out.iterations,
        })
    }

    /// `∇F` for the density that produced `record`.
    ///
    /// The compliance adjoint coincides with the state, so only one
    /// filter-type solve is needed: `(ε²K + M) w̃ = g` with
    /// `gᵢ = −Σₑ r′(ρ̃ₑ) (uₑᵀKₑuₑ / |e|) ∫ₑ φᵢ dx`, and `∇F` is the element
    /// mean of `w̃`.
    pub fn gradient(
        &self,
        record: &EvaluationRecord,
        guess: Option<&GradientRecord>,
    ) -> Result<GradientRecord> {
        let area = self.mesh().element_area();
        let energies = self.elasticity.element_energies(&record.displacement);
        let g: Vec<f64> = energies
            .iter()
            .zip(record.rho_filtered_elem.iter())
            .zip(&record.unclamped)
            .map(|((&energy, &x), &inside)| {
                if !inside {
                    return 0.0;
                }
                let (_, dr) = simp(x, self.spec.rho0, self.spec.penalty);
                -dr * energy / area
            })
            .collect();
        let rhs = element_to_node_load(self.mesh(), &g);
        let out = pcg(
            &self.filter,
            &rhs,
            guess.map(|g| g.filtered.as_slice()),
            self.cg(Preconditioner::Jacobi),
        )?;
        let gradient = ElementField::new(element_means(self.mesh(), &out.x));
        Ok(GradientRecord {
            gradient,
            filtered: NodalField::new(out.x),
            iterations: out.iterations,
        })
    }

    /// Compliance alone, from a cold start.
    pub fn objective(&self, rho: &[f64]) -> Result<f64> {
        Ok(self.evaluate(rho, None)?.compliance)
    }
}
