//! Quadratic nodal space on a triangle mesh: degree-of-freedom numbering,
//! boundary traces, and visualization views.

use std::collections::HashMap;

use crate::mesh::{BoundaryTag, Mesh, Region};

/// One boundary edge with its three trace degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryElement {
    /// `[endpoint 0, endpoint 1, midpoint]` global dof indices.
    pub dofs: [usize; 3],
    pub p0: [f64; 2],
    pub p1: [f64; 2],
}

/// Quadratic Lagrange space: vertex dofs first (same indices as mesh
/// nodes), then edge-midpoint dofs in sorted-edge order.
pub struct FeSpace<'m> {
    pub mesh: &'m Mesh,
    n_nodes: usize,
    edge_index: HashMap<(usize, usize), usize>,
    /// Global dofs per element, `[v0, v1, v2, e12, e20, e01]`.
    elem_dofs: Vec<[usize; 6]>,
    /// Coordinates of every dof (vertices then midpoints).
    pub dof_coords: Vec<[f64; 2]>,
}

impl<'m> FeSpace<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let n_nodes = mesh.nodes.len();
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * mesh.triangles.len());
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let edge_index: HashMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();

        let elem_dofs: Vec<[usize; 6]> = mesh
            .triangles
            .iter()
            .map(|t| {
                let e = |a: usize, b: usize| n_nodes + edge_index[&(a.min(b), a.max(b))];
                [t[0], t[1], t[2], e(t[1], t[2]), e(t[2], t[0]), e(t[0], t[1])]
            })
            .collect();

        let mut dof_coords = mesh.nodes.clone();
        dof_coords.extend(edges.iter().map(|&(a, b)| {
            let (p, q) = (mesh.nodes[a], mesh.nodes[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
        }));

        Self {
            mesh,
            n_nodes,
            edge_index,
            elem_dofs,
            dof_coords,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn elem_dofs(&self, t: usize) -> [usize; 6] {
        self.elem_dofs[t]
    }

    /// Midpoint dof of the mesh edge `(a, b)`; the edge must exist.
    pub fn edge_dof(&self, a: usize, b: usize) -> usize {
        self.n_nodes + self.edge_index[&(a.min(b), a.max(b))]
    }

    /// Boundary elements carrying the given tag, in the deterministic order
    /// of the mesh boundary list.
    pub fn boundary_elements(&self, tag: BoundaryTag) -> Vec<BoundaryElement> {
        self.mesh
            .boundary
            .iter()
            .filter(|b| b.tag == tag)
            .map(|b| {
                let [i, j] = b.nodes;
                BoundaryElement {
                    dofs: [i, j, self.edge_dof(i, j)],
                    p0: self.mesh.nodes[i],
                    p1: self.mesh.nodes[j],
                }
            })
            .collect()
    }

    /// All dofs (vertices and midpoints) lying on edges with the tag,
    /// sorted and deduplicated.
    pub fn boundary_dofs(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut dofs: Vec<usize> = self
            .boundary_elements(tag)
            .iter()
            .flat_map(|be| be.dofs)
            .collect();
        dofs.sort_unstable();
        dofs.dedup();
        dofs
    }

    /// All dofs supported in elements of the region, sorted.
    pub fn region_dofs(&self, region: Region) -> Vec<usize> {
        let mut dofs: Vec<usize> = (0..self.mesh.triangles.len())
            .filter(|&t| self.mesh.regions[t] == region)
            .flat_map(|t| self.elem_dofs[t])
            .collect();
        dofs.sort_unstable();
        dofs.dedup();
        dofs
    }

    /// Midpoint-refined triangulation whose vertices are exactly the dofs;
    /// plotting nodal values on it reproduces the quadratic interpolant at
    /// all dof locations.
    pub fn refined_view(&self) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
        let mut tris = Vec::with_capacity(4 * self.elem_dofs.len());
        for d in &self.elem_dofs {
            let [v0, v1, v2, m12, m20, m01] = *d;
            tris.push([v0, m01, m20]);
            tris.push([v1, m12, m01]);
            tris.push([v2, m20, m12]);
            tris.push([m01, m12, m20]);
        }
        (self.dof_coords.clone(), tris)
    }
}
