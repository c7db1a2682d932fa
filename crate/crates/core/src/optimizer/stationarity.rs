//! Stationarity measures used by the stopping test.
//!
//! Both measures take a short step of length `probe` and report how far it
//! moves the design. The driver normalizes by the value at iteration 0.

use super::StationarityMetric;
use crate::entropy::{bregman_div, bregman_volume_correct, l2_volume_correct, VOLUME_TOL};
use crate::error::{Error, Result};
use crate::field::l2_distance;

/// `D_φ(𝒫_φ(σ(ψ − probe ∇F)), σ(ψ))`.
pub fn stationarity_bregman(psi: &[f64], grad: &[f64], theta: f64, probe: f64, cell_area: f64) -> Result<f64> {
    check(psi.len(), grad.len(), probe)?;
    let half: Vec<f64> = psi.iter().zip(grad).map(|(p, g)| p - probe * g).collect();
    let projected = bregman_volume_correct(&half, theta, VOLUME_TOL)?;
    bregman_div(&projected.psi, psi, cell_area)
}

/// `‖𝒫_{L²}(ρ − probe ∇F) − ρ‖_{L²}`.
pub fn stationarity_l2(rho: &[f64], grad: &[f64], theta: f64, probe: f64, cell_area: f64) -> Result<f64> {
    check(rho.len(), grad.len(), probe)?;
    let moved: Vec<f64> = rho.iter().zip(grad).map(|(r, g)| r - probe * g).collect();
    let (projected, _) = l2_volume_correct(&moved, theta, VOLUME_TOL)?;
    Ok(l2_distance(&projected, rho, cell_area))
}

fn check(a: usize, b: usize, probe: f64) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!(
            "design has {a} entries but gradient has {b}"
        )));
    }
    if !(probe > 0.0 && probe.is_finite()) {
        return Err(Error::InvalidArgument(format!("probe step must be positive, got {probe}")));
    }
    Ok(())
}

/// Stationarity relative to the value at iteration 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    pub metric: StationarityMetric,
    pub probe: f64,
    reference: f64,
}

impl Stationarity {
    /// Records the reference value; a zero reference means the initial
    /// design is already stationary.
    pub fn new(
        metric: StationarityMetric,
        probe: f64,
        psi: Option<&[f64]>,
        rho: &[f64],
        grad: &[f64],
        theta: f64,
        cell_area: f64,
    ) -> Result<Self> {
        let mut s = Self {
            metric,
            probe,
            reference: 1.0,
        };
        s.reference = s.raw(psi, rho, grad, theta, cell_area)?;
        Ok(s)
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    fn raw(&self, psi: Option<&[f64]>, rho: &[f64], grad: &[f64], theta: f64, cell_area: f64) -> Result<f64> {
        match self.metric {
            StationarityMetric::Bregman => {
                let psi = psi.ok_or_else(|| {
                    Error::InvalidArgument("Bregman stationarity needs a latent field".into())
                })?;
                stationarity_bregman(psi, grad, theta, self.probe, cell_area)
            }
            StationarityMetric::L2 => stationarity_l2(rho, grad, theta, self.probe, cell_area),
        }
    }

    /// Ratio to the reference; 0 when the reference itself vanished.
    pub fn ratio(&self, psi: Option<&[f64]>, rho: &[f64], grad: &[f64], theta: f64, cell_area: f64) -> Result<f64> {
        if self.reference == 0.0 {
            return Ok(0.0);
        }
        Ok(self.raw(psi, rho, grad, theta, cell_area)? / self.reference)
    }
}
