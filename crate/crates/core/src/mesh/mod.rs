//! Conforming triangle meshes for the channel, the ligament tubes, and the
//! auxiliary constant domains.
//!
//! All generators are deterministic: node sets come from recursive interval
//! bisection against an explicit sizing field, strips between neighbouring
//! vertical node columns are triangulated by a shortest-diagonal zipper, and
//! ligament tubes are extruded along their centerlines. Zipper triangles are
//! positively oriented by construction; tube extrusion stays embedded
//! because tube widths are validated against centerline curvature.

mod builder;

pub use builder::{
    build_full_mesh, build_half_mesh, build_halfplane_strip_mesh, build_source_channel_mesh,
    MeshParams,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification of boundary edges, driving boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Sound-hard channel or tube wall (homogeneous Neumann).
    Wall,
    /// Left truncation of the channel, carrying the modal radiation
    /// condition (or a prescribed Dirichlet trace on auxiliary domains).
    TruncationLeft,
    /// Right truncation (full meshes) or far cap (auxiliary strip).
    TruncationRight,
    /// Ligament cap on the symmetry plane `x = 0`, where half-problems
    /// apply their Neumann or Dirichlet artificial condition.
    Sigma,
    /// Reserved for explicit symmetry-plane conditions.
    Symmetry,
}

/// Sub-domain a triangle belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Channel,
    LigamentMinus,
    LigamentPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Straight-edge triangle mesh with region and boundary metadata.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Positively oriented corner triples.
    pub triangles: Vec<[usize; 3]>,
    /// One entry per triangle.
    pub regions: Vec<Region>,
    pub boundary: Vec<BoundaryEdge>,
    /// Target channel element size the mesh was built for.
    pub target_h: f64,
}

/// Summary statistics produced by [`Mesh::audit`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshAudit {
    pub n_nodes: usize,
    pub n_triangles: usize,
    pub n_boundary_edges: usize,
    pub total_area: f64,
    /// Scale-free triangle quality, 1 for equilateral.
    pub min_quality: f64,
}

impl Mesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = &self.nodes;
        0.5 * ((p[b][0] - p[a][0]) * (p[c][1] - p[a][1])
            - (p[c][0] - p[a][0]) * (p[b][1] - p[a][1]))
    }

    pub fn triangle_quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let p = &self.nodes;
        let l2 = |i: usize, j: usize| {
            (p[j][0] - p[i][0]).powi(2) + (p[j][1] - p[i][1]).powi(2)
        };
        let per = l2(a, b) + l2(b, c) + l2(c, a);
        4.0 * 3.0_f64.sqrt() * self.triangle_area(t) / per
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_quality(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Validates conformity: positive areas, every edge shared by at most
    /// two triangles, and boundary edges exactly the once-used ones.
    pub fn audit(&self) -> Result<MeshAudit> {
        let mut min_q = f64::INFINITY;
        let mut area = 0.0;
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            if !(a > 0.0) {
                return Err(Error::DegenerateMesh(format!(
                    "triangle {t} has area {a:.3e} near {:?}",
                    self.nodes[self.triangles[t][0]]
                )));
            }
            area += a;
            min_q = min_q.min(self.triangle_quality(t));
        }
        let mut counts: std::collections::HashMap<(usize, usize), u32> =
            std::collections::HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        if let Some((edge, n)) = counts.iter().find(|(_, &n)| n > 2) {
            return Err(Error::DegenerateMesh(format!(
                "edge {edge:?} is used by {n} triangles"
            )));
        }
        let n_once = counts.values().filter(|&&n| n == 1).count();
        if n_once != self.boundary.len() {
            return Err(Error::DegenerateMesh(format!(
                "{} once-used edges but {} boundary edges recorded",
                n_once,
                self.boundary.len()
            )));
        }
        for be in &self.boundary {
            let key = (be.nodes[0].min(be.nodes[1]), be.nodes[0].max(be.nodes[1]));
            if counts.get(&key) != Some(&1) {
                return Err(Error::DegenerateMesh(format!(
                    "recorded boundary edge {:?} is not a once-used edge",
                    be.nodes
                )));
            }
        }
        Ok(MeshAudit {
            n_nodes: self.nodes.len(),
            n_triangles: self.triangles.len(),
            n_boundary_edges: self.boundary.len(),
            total_area: area,
            min_quality: min_q,
        })
    }

    /// Node indices lying on boundary edges with the given tag.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .boundary
            .iter()
            .filter(|b| b.tag == tag)
            .flat_map(|b| b.nodes)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Reflects the half-domain mesh across `x = 0` and glues the shared
    /// symmetry-plane nodes, producing the full-domain mesh. Boundary tags
    /// are recomputed; ligament caps become interior edges.
    pub fn mirror(&self) -> Mesh {
        let n = self.nodes.len();
        let mut map = vec![usize::MAX; n];
        let mut nodes = self.nodes.clone();
        for (i, p) in self.nodes.iter().enumerate() {
            if p[0] == 0.0 {
                map[i] = i;
            } else {
                map[i] = nodes.len();
                nodes.push([-p[0], p[1]]);
            }
        }
        let mut triangles = self.triangles.clone();
        let mut regions = self.regions.clone();
        for (t, tri) in self.triangles.iter().enumerate() {
            triangles.push([map[tri[0]], map[tri[2]], map[tri[1]]]);
            regions.push(self.regions[t]);
        }
        let x_min = nodes
            .iter()
            .map(|p| p[0])
            .fold(f64::INFINITY, f64::min);
        let boundary = builder::tag_outer_boundary(&nodes, &triangles, |p0, p1| {
            let tol = 1e-9;
            if (p0[0] - x_min).abs() < tol && (p1[0] - x_min).abs() < tol {
                BoundaryTag::TruncationLeft
            } else if (p0[0] + x_min).abs() < tol && (p1[0] + x_min).abs() < tol {
                BoundaryTag::TruncationRight
            } else {
                BoundaryTag::Wall
            }
        });
        Mesh {
            nodes,
            triangles,
            regions,
            boundary,
            target_h: self.target_h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_two_triangles() -> Mesh {
        Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            regions: vec![Region::Channel; 2],
            boundary: vec![
                BoundaryEdge { nodes: [0, 1], tag: BoundaryTag::Wall },
                BoundaryEdge { nodes: [1, 2], tag: BoundaryTag::Wall },
                BoundaryEdge { nodes: [2, 3], tag: BoundaryTag::Wall },
                BoundaryEdge { nodes: [3, 0], tag: BoundaryTag::Wall },
            ],
            target_h: 1.0,
        }
    }

    #[test]
    fn audit_accepts_conforming_mesh() {
        let mesh = unit_square_two_triangles();
        let audit = mesh.audit().unwrap();
        assert_eq!(audit.n_triangles, 2);
        assert!((audit.total_area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn audit_rejects_inverted_triangle() {
        let mut mesh = unit_square_two_triangles();
        mesh.triangles[0] = [0, 2, 1];
        assert!(matches!(mesh.audit(), Err(Error::DegenerateMesh(_))));
    }

    #[test]
    fn audit_rejects_missing_boundary_edge() {
        let mut mesh = unit_square_two_triangles();
        mesh.boundary.pop();
        assert!(matches!(mesh.audit(), Err(Error::DegenerateMesh(_))));
    }
}
