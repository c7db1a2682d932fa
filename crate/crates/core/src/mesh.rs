//! Structured quadrilateral meshes on axis-aligned rectangles.

use crate::error::{Error, Result};

/// Side of the rectangle a boundary node belongs to.
///
/// Corner nodes get a single tag, with priority `Left > Right > Bottom > Top`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Left,
    Right,
    Bottom,
    Top,
}

/// Uniform `nx × ny` grid of bilinear quadrilaterals covering `[0, lx] × [0, ly]`.
///
/// Nodes and elements are numbered row-major from the bottom-left corner:
/// node `(i, j)` has index `j * (nx + 1) + i` and element `(i, j)` has index
/// `j * nx + i`. Element nodes are listed counter-clockwise starting at the
/// bottom-left node.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Mesh2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "element counts must be positive, got {nx}×{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "domain extents must be positive and finite, got {lx}×{ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Element width along x.
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    /// Element height along y.
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Area shared by every element.
    pub fn element_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Total area `|Ω|`.
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn element_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        [
            self.lx * i as f64 / self.nx as f64,
            self.ly * j as f64 / self.ny as f64,
        ]
    }

    /// The four node indices of an element, counter-clockwise.
    pub fn element_nodes(&self, element: usize) -> [usize; 4] {
        let i = element % self.nx;
        let j = element / self.nx;
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    /// Coordinates of the bottom-left corner of an element.
    pub fn element_origin(&self, element: usize) -> [f64; 2] {
        self.node_coords(self.element_nodes(element)[0])
    }

    pub fn element_center(&self, element: usize) -> [f64; 2] {
        let [x, y] = self.element_origin(element);
        [x + 0.5 * self.hx(), y + 0.5 * self.hy()]
    }

    pub fn boundary_tag(&self, node: usize) -> Option<BoundaryTag> {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        if i == 0 {
            Some(BoundaryTag::Left)
        } else if i == self.nx {
            Some(BoundaryTag::Right)
        } else if j == 0 {
            Some(BoundaryTag::Bottom)
        } else if j == self.ny {
            Some(BoundaryTag::Top)
        } else {
            None
        }
    }

    /// All nodes carrying the given tag, in increasing order.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&n| self.boundary_tag(n) == Some(tag))
            .collect()
    }

    /// Node index of the mirror image about `y = ly / 2`.
    pub fn mirror_node_y(&self, node: usize) -> usize {
        let i = node % (self.nx + 1);
        let j = node / (self.nx + 1);
        self.node_index(i, self.ny - j)
    }

    /// Element index of the mirror image about `y = ly / 2`.
    pub fn mirror_element_y(&self, element: usize) -> usize {
        let i = element % self.nx;
        let j = element / self.nx;
        self.element_index(i, self.ny - 1 - j)
    }
}

/// Builds the structured mesh of `[0, lx] × [0, ly]` with `nx × ny` elements.
pub fn build_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh2D> {
    Mesh2D::new(nx, ny, lx, ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_mesh() {
        let mesh = build_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(mesh.num_elements(), 1);
        assert_eq!(mesh.num_nodes(), 4);
        assert_eq!(mesh.element_area(), 1.0);
        assert_eq!(mesh.element_nodes(0), [0, 1, 3, 2]);
    }

    #[test]
    fn cantilever_mesh_at_h_1_64() {
        let mesh = build_mesh(192, 64, 3.0, 1.0).unwrap();
        assert_eq!(mesh.num_elements(), 12288);
        assert_eq!(mesh.num_nodes(), 193 * 65);
        assert_eq!(mesh.hx(), 1.0 / 64.0);
        assert_eq!(mesh.hy(), 1.0 / 64.0);
    }

    #[test]
    fn two_elements_share_an_edge() {
        let mesh = build_mesh(2, 1, 2.0, 1.0).unwrap();
        assert_eq!(mesh.num_nodes(), 6);
        let a = mesh.element_nodes(0);
        let b = mesh.element_nodes(1);
        let shared: Vec<_> = a.iter().filter(|n| b.contains(n)).collect();
        assert_eq!(shared.len(), 2);
        assert_eq!(mesh.element_area(), 1.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(build_mesh(0, 1, 1.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_mesh(1, 0, 1.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_mesh(1, 1, 0.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_mesh(1, 1, 1.0, -2.0), Err(Error::InvalidArgument(_))));
        assert!(build_mesh(1, 1, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn boundary_tags_cover_boundary_once() {
        let mesh = build_mesh(4, 3, 4.0, 3.0).unwrap();
        let mut tagged = 0;
        for n in 0..mesh.num_nodes() {
            let [x, y] = mesh.node_coords(n);
            let on_boundary = x == 0.0 || x == 4.0 || y == 0.0 || y == 3.0;
            assert_eq!(mesh.boundary_tag(n).is_some(), on_boundary);
            tagged += on_boundary as usize;
        }
        assert_eq!(tagged, 2 * (4 + 3));
        // corners
        assert_eq!(mesh.boundary_tag(mesh.node_index(0, 0)), Some(BoundaryTag::Left));
        assert_eq!(mesh.boundary_tag(mesh.node_index(0, 3)), Some(BoundaryTag::Left));
        assert_eq!(mesh.boundary_tag(mesh.node_index(4, 0)), Some(BoundaryTag::Right));
        assert_eq!(mesh.boundary_tag(mesh.node_index(4, 3)), Some(BoundaryTag::Right));
        assert_eq!(mesh.boundary_nodes(BoundaryTag::Left).len(), 4);
        assert_eq!(mesh.boundary_nodes(BoundaryTag::Bottom).len(), 3);
    }

    #[test]
    fn mirror_maps_are_involutions() {
        let mesh = build_mesh(5, 4, 5.0, 2.0).unwrap();
        for n in 0..mesh.num_nodes() {
            assert_eq!(mesh.mirror_node_y(mesh.mirror_node_y(n)), n);
            let [x, y] = mesh.node_coords(n);
            let [xm, ym] = mesh.node_coords(mesh.mirror_node_y(n));
            assert_eq!(x, xm);
            assert!((y + ym - 2.0).abs() < 1e-14);
        }
        for e in 0..mesh.num_elements() {
            assert_eq!(mesh.mirror_element_y(mesh.mirror_element_y(e)), e);
        }
    }
}
