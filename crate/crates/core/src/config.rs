//! Run configuration read from JSON.
//!
//! Every key is optional; omitted keys take the cantilever benchmark
//! defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::optimizer::{LineSearchConfig, Method, OcConfig, StationarityMetric, StoppingConfig};
use crate::physics::{BallLoad, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Element size; used when `nx` and `ny` are absent.
    pub h: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub lx: f64,
    pub ly: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            h: None,
            nx: None,
            ny: None,
            lx: 3.0,
            ly: 1.0,
        }
    }
}

pub const DEFAULT_H: f64 = 1.0 / 64.0;

impl MeshConfig {
    /// Element counts along each axis.
    pub fn resolution(&self) -> Result<(usize, usize)> {
        for (name, v) in [("mesh.lx", self.lx), ("mesh.ly", self.ly)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        match (self.nx, self.ny) {
            (Some(nx), Some(ny)) => {
                if self.h.is_some() {
                    return Err(Error::config("mesh.h", "give either h or nx and ny, not both"));
                }
                if nx == 0 || ny == 0 {
                    return Err(Error::config("mesh.nx", "element counts must be positive"));
                }
                Ok((nx, ny))
            }
            (None, None) => {
                let h = self.h.unwrap_or(DEFAULT_H);
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::config("mesh.h", "must be positive"));
                }
                let nx = (self.lx / h).round();
                let ny = (self.ly / h).round();
                if nx < 1.0 || ny < 1.0 || nx > 1e6 || ny > 1e6 {
                    return Err(Error::config("mesh.h", format!("h = {h} gives no usable mesh")));
                }
                Ok((nx as usize, ny as usize))
            }
            (Some(_), None) => Err(Error::config("mesh.ny", "nx given without ny")),
            (None, Some(_)) => Err(Error::config("mesh.nx", "ny given without nx")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadConfig {
    pub center: [f64; 2],
    pub radius: f64,
    pub direction: [f64; 2],
}

impl Default for LoadConfig {
    fn default() -> Self {
        Self {
            center: [2.95, 0.5],
            radius: 0.05,
            direction: [0.0, -1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Relative residual for every linear solve.
    pub rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10 }
    }
}

/// All problem and algorithm parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub method: Method,
    pub mesh: MeshConfig,
    pub theta: f64,
    pub rho0: f64,
    pub penalty: f64,
    pub r_min: f64,
    pub young: f64,
    pub poisson: f64,
    pub load: LoadConfig,
    pub line_search: LineSearchConfig,
    pub stopping: StoppingConfig,
    pub solver: SolverConfig,
    pub oc: OcConfig,
    /// Fixed step of the projected-gradient baseline.
    pub pgd_step: f64,
    pub output_dir: Option<PathBuf>,
    pub vtk: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::SimplB,
            mesh: MeshConfig::default(),
            theta: 0.5,
            rho0: 1e-6,
            penalty: 3.0,
            r_min: 0.1,
            young: 1.0,
            poisson: 0.3,
            load: LoadConfig::default(),
            line_search: LineSearchConfig::default(),
            stopping: StoppingConfig::default(),
            solver: SolverConfig::default(),
            oc: OcConfig::default(),
            pgd_step: 1.0,
            output_dir: None,
            vtk: false,
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<document>".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("<file>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.resolution()?;
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::config("theta", format!("must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.rho0 > 0.0 && self.rho0 < 1.0) {
            return Err(Error::config("rho0", format!("must lie in (0, 1), got {}", self.rho0)));
        }
        if !(self.penalty > 1.0 && self.penalty.is_finite()) {
            return Err(Error::config("penalty", format!("must exceed 1, got {}", self.penalty)));
        }
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(Error::config("r_min", "must be positive"));
        }
        if !(self.young > 0.0 && self.young.is_finite()) {
            return Err(Error::config("young", "must be positive"));
        }
        if !(self.poisson >= 0.0 && self.poisson < 0.5) {
            return Err(Error::config("poisson", "must lie in [0, 0.5)"));
        }
        if !(self.load.radius > 0.0 && self.load.radius.is_finite()) {
            return Err(Error::config("load.radius", "must be positive"));
        }
        if self.load.center.iter().chain(&self.load.direction).any(|v| !v.is_finite()) {
            return Err(Error::config("load", "center and direction must be finite"));
        }
        self.line_search.validate()?;
        self.stopping.validate()?;
        if !(self.solver.rel_tol > 0.0 && self.solver.rel_tol < 1.0) {
            return Err(Error::config("solver.rel_tol", "must lie in (0, 1)"));
        }
        self.oc.validate()?;
        if !(self.pgd_step > 0.0 && self.pgd_step.is_finite()) {
            return Err(Error::config("pgd_step", "must be positive"));
        }
        if !self.method.is_simpl() && self.stopping.metric == Some(StationarityMetric::Bregman) {
            return Err(Error::config(
                "stopping.metric",
                format!("{} has no latent field; use the l2 metric", self.method),
            ));
        }
        Ok(())
    }

    /// Sets the mesh from an element size, dropping explicit counts.
    pub fn set_h(&mut self, h: f64) {
        self.mesh.h = Some(h);
        self.mesh.nx = None;
        self.mesh.ny = None;
    }

    pub fn build_mesh(&self) -> Result<Mesh2D> {
        let (nx, ny) = self.mesh.resolution()?;
        Mesh2D::new(nx, ny, self.mesh.lx, self.mesh.ly)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        self.validate()?;
        let spec = ProblemSpec {
            mesh: self.build_mesh()?,
            theta: self.theta,
            rho0: self.rho0,
            penalty: self.penalty,
            r_min: self.r_min,
            young: self.young,
            poisson: self.poisson,
            load: BallLoad {
                center: self.load.center,
                radius: self.load.radius,
                direction: self.load.direction,
            },
            clamped: BoundaryTag::Left,
            solver_tol: self.solver.rel_tol,
        };
        spec.validate()?;
        Ok(spec)
    }
}
