//! Discrete fields on a [`Mesh2D`](crate::mesh::Mesh2D).

use std::ops::{Deref, DerefMut};

macro_rules! field_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn constant(len: usize, value: f64) -> Self {
                Self(vec![value; len])
            }

            pub fn zeros(len: usize) -> Self {
                Self::constant(len, 0.0)
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                Self(values)
            }
        }

        impl FromIterator<f64> for $name {
            fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }
    };
}

field_type! {
    /// Piecewise-constant scalar field, one value per element.
    ElementField
}

field_type! {
    /// Continuous piecewise-bilinear coefficients, one value per node
    /// (or two per node for displacements, interleaved `x, y`).
    NodalField
}

/// Latent variable `ψ`, with `ρ = σ(ψ)`.
pub type LatentField = ElementField;

/// Element-wise volume fractions `ρ ∈ [0, 1]`.
pub type DensityField = ElementField;

/// `∫ a b dx` for piecewise-constant fields on a uniform mesh.
pub fn l2_inner(a: &[f64], b: &[f64], cell_area: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    cell_area * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// `‖a − b‖_{L²}` for piecewise-constant fields on a uniform mesh.
pub fn l2_distance(a: &[f64], b: &[f64], cell_area: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    (cell_area * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()).sqrt()
}

/// `∫ a dx` for a piecewise-constant field on a uniform mesh.
pub fn integral(a: &[f64], cell_area: f64) -> f64 {
    cell_area * a.iter().sum::<f64>()
}
