//! Bilinear finite elements on structured meshes: element matrices and
//! global assembly of the screened-Poisson filter and plane-stress elasticity.

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh2D};
use crate::sparse::{Dirichlet, SparseOperator};

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Shape functions of the reference square `[-1, 1]²`.
pub fn shape_values(xi: f64, eta: f64) -> [f64; 4] {
    CORNERS.map(|[a, b]| 0.25 * (1.0 + a * xi) * (1.0 + b * eta))
}

/// Physical gradients `(∂x, ∂y)` of the shape functions on an `hx × hy` element.
pub fn shape_gradients(xi: f64, eta: f64, hx: f64, hy: f64) -> [[f64; 2]; 4] {
    CORNERS.map(|[a, b]| {
        [
            0.25 * a * (1.0 + b * eta) * 2.0 / hx,
            0.25 * b * (1.0 + a * xi) * 2.0 / hy,
        ]
    })
}

/// The four Gauss points of an element as `(ξ, η, weight)`, weights already
/// scaled by the Jacobian so that they sum to the element area.
fn gauss_points(hx: f64, hy: f64) -> impl Iterator<Item = (f64, f64, f64)> {
    let w = 0.25 * hx * hy;
    GAUSS
        .iter()
        .flat_map(move |&eta| GAUSS.iter().map(move |&xi| (xi, eta, w)))
}

/// Scalar Laplacian and mass matrices of one `hx × hy` element, row-major 4×4.
pub fn scalar_element_matrices(hx: f64, hy: f64) -> ([f64; 16], [f64; 16]) {
    let mut stiffness = [0.0; 16];
    let mut mass = [0.0; 16];
    for (xi, eta, w) in gauss_points(hx, hy) {
        let n = shape_values(xi, eta);
        let g = shape_gradients(xi, eta, hx, hy);
        for a in 0..4 {
            for b in 0..4 {
                stiffness[4 * a + b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                mass[4 * a + b] += w * n[a] * n[b];
            }
        }
    }
    (stiffness, mass)
}

/// Plane-stress element stiffness of one `hx × hy` element, row-major 8×8,
/// unknowns ordered `(u₀ₓ, u₀ᵧ, u₁ₓ, …)`.
pub fn elasticity_element_matrix(hx: f64, hy: f64, young: f64, poisson: f64) -> [f64; 64] {
    let f = young / (1.0 - poisson * poisson);
    let d = [
        [f, f * poisson, 0.0],
        [f * poisson, f, 0.0],
        [0.0, 0.0, f * 0.5 * (1.0 - poisson)],
    ];
    let mut k = [0.0; 64];
    for (xi, eta, w) in gauss_points(hx, hy) {
        let g = shape_gradients(xi, eta, hx, hy);
        let mut bmat = [[0.0; 8]; 3];
        for a in 0..4 {
            bmat[0][2 * a] = g[a][0];
            bmat[1][2 * a + 1] = g[a][1];
            bmat[2][2 * a] = g[a][1];
            bmat[2][2 * a + 1] = g[a][0];
        }
        let mut db = [[0.0; 8]; 3];
        for i in 0..3 {
            for c in 0..8 {
                db[i][c] = (0..3).map(|j| d[i][j] * bmat[j][c]).sum();
            }
        }
        for r in 0..8 {
            for c in 0..8 {
                k[8 * r + c] += w * (0..3).map(|i| bmat[i][r] * db[i][c]).sum::<f64>();
            }
        }
    }
    k
}

/// `∫ φᵢ dx` for every node (row sums of the consistent mass matrix).
pub fn node_weights(mesh: &Mesh2D) -> Vec<f64> {
    let quarter = 0.25 * mesh.element_area();
    let mut weights = vec![0.0; mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        for n in mesh.element_nodes(e) {
            weights[n] += quarter;
        }
    }
    weights
}

/// `bᵢ = Σₑ gₑ ∫ₑ φᵢ dx` for a piecewise-constant `g`.
pub fn element_to_node_load(mesh: &Mesh2D, g: &[f64]) -> Vec<f64> {
    let quarter = 0.25 * mesh.element_area();
    let mut b = vec![0.0; mesh.num_nodes()];
    for (e, &ge) in g.iter().enumerate() {
        for n in mesh.element_nodes(e) {
            b[n] += quarter * ge;
        }
    }
    b
}

/// Element means of a nodal bilinear field (exact: the average of the four
/// nodal values on a rectangle).
pub fn element_means(mesh: &Mesh2D, nodal: &[f64]) -> Vec<f64> {
    (0..mesh.num_elements())
        .map(|e| 0.25 * mesh.element_nodes(e).iter().map(|&n| nodal[n]).sum::<f64>())
        .collect()
}

/// Assembles `ε²K + M` for `−ε²Δw + w = g` with zero-flux boundary conditions.
pub fn assemble_scalar_filter_operator(mesh: &Mesh2D, eps: f64) -> Result<SparseOperator> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "filter length must be positive, got {eps}"
        )));
    }
    let (k, m) = scalar_element_matrices(mesh.hx(), mesh.hy());
    let block: Vec<f64> = k.iter().zip(&m).map(|(k, m)| eps * eps * k + m).collect();
    let connectivity: Vec<[usize; 4]> = (0..mesh.num_elements())
        .map(|e| mesh.element_nodes(e))
        .collect();
    let mut a = SparseOperator::from_element_pattern(
        mesh.num_nodes(),
        connectivity.iter().map(|c| &c[..]),
    );
    for nodes in &connectivity {
        let map = a.scatter_map(nodes);
        a.add_block(&map, &block, 1.0);
    }
    Ok(a)
}

/// Assembly workspace for `Σₑ rₑ Kₑ` that reuses the sparsity pattern and
/// scatter maps between calls.
#[derive(Debug, Clone)]
pub struct ElasticityAssembler {
    mesh: Mesh2D,
    young: f64,
    poisson: f64,
    unit_block: [f64; 64],
    template: SparseOperator,
    scatter: Vec<Vec<usize>>,
}

impl ElasticityAssembler {
    pub fn new(mesh: &Mesh2D, young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) || !young.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Young's modulus must be positive, got {young}"
            )));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(Error::InvalidArgument(format!(
                "Poisson ratio must lie in [0, 0.5), got {poisson}"
            )));
        }
        let dofs: Vec<[usize; 8]> = (0..mesh.num_elements())
            .map(|e| element_dofs(mesh, e))
            .collect();
        let template =
            SparseOperator::from_element_pattern(2 * mesh.num_nodes(), dofs.iter().map(|d| &d[..]));
        let scatter = dofs.iter().map(|d| template.scatter_map(d)).collect();
        Ok(Self {
            mesh: mesh.clone(),
            young,
            poisson,
            unit_block: elasticity_element_matrix(mesh.hx(), mesh.hy(), young, poisson),
            template,
            scatter,
        })
    }

    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn young(&self) -> f64 {
        self.young
    }

    pub fn poisson(&self) -> f64 {
        self.poisson
    }

    /// Element stiffness for unit material scaling, shared by all elements.
    pub fn element_matrix(&self) -> &[f64; 64] {
        &self.unit_block
    }

    pub fn assemble(&self, r: &[f64]) -> Result<SparseOperator> {
        if r.len() != self.mesh.num_elements() {
            return Err(Error::InvalidArgument(format!(
                "material field has {} entries, mesh has {} elements",
                r.len(),
                self.mesh.num_elements()
            )));
        }
        if let Some((e, &v)) = r.iter().enumerate().find(|(_, &v)| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "material scaling must be positive, element {e} has {v}"
            )));
        }
        let mut a = self.template.clone();
        for (map, &re) in self.scatter.iter().zip(r) {
            a.add_block(map, &self.unit_block, re);
        }
        Ok(a)
    }

    /// `uₑᵀ Kₑ uₑ` (unit material scaling) for every element.
    pub fn element_energies(&self, u: &[f64]) -> Vec<f64> {
        (0..self.mesh.num_elements())
            .map(|e| {
                let ue = element_dofs(&self.mesh, e).map(|d| u[d]);
                let mut acc = 0.0;
                for r in 0..8 {
                    let row = &self.unit_block[8 * r..8 * r + 8];
                    acc += ue[r] * row.iter().zip(&ue).map(|(k, x)| k * x).sum::<f64>();
                }
                acc
            })
            .collect()
    }
}

/// Global displacement unknowns of an element, `(x, y)` interleaved per node.
pub fn element_dofs(mesh: &Mesh2D, element: usize) -> [usize; 8] {
    let n = mesh.element_nodes(element);
    [
        2 * n[0],
        2 * n[0] + 1,
        2 * n[1],
        2 * n[1] + 1,
        2 * n[2],
        2 * n[2] + 1,
        2 * n[3],
        2 * n[3] + 1,
    ]
}

/// Assembles the plane-stress operator `Σₑ rₑ Kₑ` (no boundary conditions).
pub fn assemble_elasticity(mesh: &Mesh2D, r: &[f64], young: f64, poisson: f64) -> Result<SparseOperator> {
    ElasticityAssembler::new(mesh, young, poisson)?.assemble(r)
}

/// Both displacement components fixed on every node with the given tag.
pub fn clamp_boundary(mesh: &Mesh2D, tag: BoundaryTag) -> Dirichlet {
    Dirichlet::homogeneous(
        mesh.boundary_nodes(tag)
            .into_iter()
            .flat_map(|n| [2 * n, 2 * n + 1]),
    )
}

/// Consistent nodal load of a body force `f(x)`, integrated with 2×2 Gauss
/// points.
pub fn body_force_load(mesh: &Mesh2D, force: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let mut b = vec![0.0; 2 * mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        let [x0, y0] = mesh.element_origin(e);
        let nodes = mesh.element_nodes(e);
        for (xi, eta, w) in gauss_points(hx, hy) {
            let x = x0 + 0.5 * (1.0 + xi) * hx;
            let y = y0 + 0.5 * (1.0 + eta) * hy;
            let f = force(x, y);
            if f == [0.0, 0.0] {
                continue;
            }
            let n = shape_values(xi, eta);
            for a in 0..4 {
                b[2 * nodes[a]] += w * n[a] * f[0];
                b[2 * nodes[a] + 1] += w * n[a] * f[1];
            }
        }
    }
    b
}
