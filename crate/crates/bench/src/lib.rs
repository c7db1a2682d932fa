//! Shared fixtures for the benchmarks.

use simpl_core::{Compliance, Mesh2D, ProblemSpec};

/// The cantilever benchmark with `ny` elements across its height.
pub fn cantilever(ny: usize) -> Compliance {
    let mesh = Mesh2D::new(3 * ny, ny, 3.0, 1.0).expect("valid mesh");
    Compliance::new(ProblemSpec::cantilever(mesh)).expect("valid problem")
}

/// A smooth density strictly inside (0, 1).
pub fn wavy_density(mesh: &Mesh2D) -> Vec<f64> {
    (0..mesh.num_elements())
        .map(|e| {
            let [x, y] = mesh.element_center(e);
            0.5 + 0.4 * (3.0 * x).sin() * (5.0 * y).cos()
        })
        .collect()
}
