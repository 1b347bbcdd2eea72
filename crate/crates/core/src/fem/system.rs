//! Assembly of stiffness, mass, modal radiation closures, load vectors,
//! and Dirichlet reduction into solvable systems.

use std::collections::HashMap;

use num_complex::Complex64;

use super::{edge_shapes, shape_grads, shape_values, FeSpace, TRI_QUAD_4, TRI_QUAD_7};
use crate::error::Result;
use crate::mesh::{BoundaryTag, Region};
use crate::modes::{ModeBasis, GAUSS6};
use crate::solver::{Factored, SolveScalar, SparseSymmetric};

/// Stiffness and mass in upper-triangle triplet form (duplicates unsummed).
pub struct StiffnessMass {
    pub k: Vec<(u32, u32, f64)>,
    pub m: Vec<(u32, u32, f64)>,
}

/// Exact integration of the quadratic-element stiffness and mass matrices.
pub fn assemble_stiffness_mass(space: &FeSpace) -> StiffnessMass {
    let ntri = space.mesh.triangles.len();
    let mut k = Vec::with_capacity(21 * ntri);
    let mut m = Vec::with_capacity(21 * ntri);
    for t in 0..ntri {
        let d = space.elem_dofs(t);
        let tri = space.mesh.triangles[t];
        let p: [[f64; 2]; 3] = [
            space.mesh.nodes[tri[0]],
            space.mesh.nodes[tri[1]],
            space.mesh.nodes[tri[2]],
        ];
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let gl = [
            [(p[1][1] - p[2][1]) / area2, (p[2][0] - p[1][0]) / area2],
            [(p[2][1] - p[0][1]) / area2, (p[0][0] - p[2][0]) / area2],
            [(p[0][1] - p[1][1]) / area2, (p[1][0] - p[0][0]) / area2],
        ];
        let mut ke = [[0.0f64; 6]; 6];
        let mut me = [[0.0f64; 6]; 6];
        for (lam, w) in TRI_QUAD_4 {
            let n = shape_values(lam);
            let g = shape_grads(lam, gl);
            let wq = w * 0.5 * area2;
            for a in 0..6 {
                for b in a..6 {
                    ke[a][b] += wq * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    me[a][b] += wq * n[a] * n[b];
                }
            }
        }
        for a in 0..6 {
            for b in a..6 {
                let (i, j) = (d[a].min(d[b]) as u32, d[a].max(d[b]) as u32);
                k.push((i, j, ke[a][b]));
                m.push((i, j, me[a][b]));
            }
        }
    }
    StiffnessMass { k, m }
}

/// Free/fixed dof bookkeeping for Dirichlet conditions.
pub struct DofMap {
    free_index: Vec<Option<u32>>,
    pub n_free: usize,
}

impl DofMap {
    pub fn new(n_dofs: usize, fixed: &[usize]) -> Self {
        let mut is_fixed = vec![false; n_dofs];
        for &d in fixed {
            is_fixed[d] = true;
        }
        let mut free_index = Vec::with_capacity(n_dofs);
        let mut next = 0u32;
        for fixed in is_fixed {
            if fixed {
                free_index.push(None);
            } else {
                free_index.push(Some(next));
                next += 1;
            }
        }
        Self {
            free_index,
            n_free: next as usize,
        }
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof].map(|i| i as usize)
    }

    pub fn expand<T: SolveScalar>(&self, free: &[T], fixed_vals: &[(usize, T)]) -> Vec<T> {
        let mut full = vec![T::zero(); self.free_index.len()];
        for (dof, slot) in self.free_index.iter().enumerate() {
            if let Some(i) = slot {
                full[dof] = free[*i as usize];
            }
        }
        for &(dof, v) in fixed_vals {
            full[dof] = v;
        }
        full
    }
}

/// Reduced symmetric system with Dirichlet lifting folded into the load.
pub struct LinearProblem<T> {
    pub matrix: SparseSymmetric<T>,
    pub map: DofMap,
    lift: Vec<T>,
    dirichlet: Vec<(usize, T)>,
}

impl<T: SolveScalar> LinearProblem<T> {
    pub fn factor(&self) -> Result<Factored<T>> {
        self.matrix.factor()
    }

    /// Solves for the full dof vector given a load over all dofs (entries
    /// on fixed dofs are ignored).
    pub fn solution(&self, factored: &Factored<T>, rhs_full: &[T]) -> Vec<T> {
        let mut rb = self.lift.clone();
        for (dof, slot) in self.map.free_index.iter().enumerate() {
            if let Some(i) = slot {
                rb[*i as usize] += rhs_full[dof];
            }
        }
        let free = factored.solve(&rb);
        self.map.expand(&free, &self.dirichlet)
    }
}

/// Combines `ck * K + cm * M + extra` over the free dofs. `extra` must be
/// upper-triangle entries (`i <= j`). Dirichlet values are lifted into the
/// load vector.
pub fn build_problem<T: SolveScalar + From<f64>>(
    n_dofs: usize,
    km: &StiffnessMass,
    ck: T,
    cm: T,
    extra: &[(usize, usize, T)],
    dirichlet: &[(usize, T)],
) -> LinearProblem<T> {
    let map = DofMap::new(n_dofs, &dirichlet.iter().map(|&(d, _)| d).collect::<Vec<_>>());
    let mut fixed_val: Vec<Option<T>> = vec![None; n_dofs];
    for &(d, v) in dirichlet {
        fixed_val[d] = Some(v);
    }
    let mut matrix = SparseSymmetric::new(map.n_free);
    let mut lift = vec![T::zero(); map.n_free];
    {
        let mut add = |i: usize, j: usize, v: T| {
            debug_assert!(i <= j);
            match (map.free_index(i), map.free_index(j)) {
                (Some(fi), Some(fj)) => matrix.add(fi, fj, v),
                (Some(fi), None) => lift[fi] -= v * fixed_val[j].unwrap(),
                (None, Some(fj)) => lift[fj] -= v * fixed_val[i].unwrap(),
                (None, None) => {}
            }
        };
        for &(i, j, v) in &km.k {
            add(i as usize, j as usize, ck * T::from(v));
        }
        for &(i, j, v) in &km.m {
            add(i as usize, j as usize, cm * T::from(v));
        }
        for &(i, j, v) in extra {
            add(i, j, v);
        }
    }
    LinearProblem {
        matrix,
        map,
        lift,
        dirichlet: dirichlet.to_vec(),
    }
}

/// Transverse-mode weight vectors on a truncation boundary:
/// `vectors[n][.] = (dof, w)` with `sum w * u_dof = int u phi_n dy`.
pub struct ModalVectors {
    pub tag: BoundaryTag,
    pub vectors: Vec<Vec<(usize, f64)>>,
}

pub fn modal_vectors(
    space: &FeSpace,
    basis: &ModeBasis,
    tag: BoundaryTag,
    n_terms: usize,
) -> ModalVectors {
    let mut maps: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n_terms];
    for be in space.boundary_elements(tag) {
        let jac = (be.p1[1] - be.p0[1]).abs();
        if jac == 0.0 {
            continue;
        }
        for &(t, w) in &GAUSS6 {
            let y = (1.0 - t) * be.p0[1] + t * be.p1[1];
            let s = edge_shapes(t);
            for (n, map) in maps.iter_mut().enumerate() {
                let c = basis.phi(n, y) * w * jac;
                for k in 0..3 {
                    *map.entry(be.dofs[k]).or_insert(0.0) += c * s[k];
                }
            }
        }
    }
    let vectors = maps
        .into_iter()
        .map(|m| {
            let mut v: Vec<(usize, f64)> = m.into_iter().collect();
            v.sort_unstable_by_key(|&(d, _)| d);
            v
        })
        .collect();
    ModalVectors { tag, vectors }
}

/// Upper-triangle entries of the modal radiation closure
/// `-sum_n (i beta_n) b_n b_n^T` for one truncation boundary.
pub fn dtn_entries(mv: &ModalVectors, basis: &ModeBasis) -> Vec<(usize, usize, Complex64)> {
    let mut entries = Vec::new();
    for (n, b) in mv.vectors.iter().enumerate() {
        let c = -Complex64::new(0.0, 1.0) * basis.beta(n);
        for (ai, &(da, wa)) in b.iter().enumerate() {
            for &(db, wb) in &b[ai..] {
                entries.push((da, db, c * wa * wb));
            }
        }
    }
    entries
}

/// Transverse projections `p_n = int u(x_c, y) phi_n(y) dy` of a discrete
/// field over a truncation boundary.
pub fn project_solution(
    space: &FeSpace,
    field: &[Complex64],
    tag: BoundaryTag,
    basis: &ModeBasis,
    n_proj: usize,
) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(0.0, 0.0); n_proj];
    for be in space.boundary_elements(tag) {
        let jac = (be.p1[1] - be.p0[1]).abs();
        if jac == 0.0 {
            continue;
        }
        for &(t, w) in &GAUSS6 {
            let y = (1.0 - t) * be.p0[1] + t * be.p1[1];
            let s = edge_shapes(t);
            let u = field[be.dofs[0]] * s[0] + field[be.dofs[1]] * s[1] + field[be.dofs[2]] * s[2];
            for (n, pn) in p.iter_mut().enumerate() {
                *pn += u * basis.phi(n, y) * (w * jac);
            }
        }
    }
    p
}

/// Natural-boundary load `rhs_dof = int g N_dof ds` over tagged edges.
pub fn boundary_flux_rhs(
    space: &FeSpace,
    tag: BoundaryTag,
    g: &dyn Fn([f64; 2]) -> f64,
) -> Vec<f64> {
    let mut rhs = vec![0.0; space.n_dofs()];
    for be in space.boundary_elements(tag) {
        let len = ((be.p1[0] - be.p0[0]).powi(2) + (be.p1[1] - be.p0[1]).powi(2)).sqrt();
        for &(t, w) in &GAUSS6 {
            let p = [
                (1.0 - t) * be.p0[0] + t * be.p1[0],
                (1.0 - t) * be.p0[1] + t * be.p1[1],
            ];
            let s = edge_shapes(t);
            let c = g(p) * w * len;
            for k in 0..3 {
                rhs[be.dofs[k]] += c * s[k];
            }
        }
    }
    rhs
}

/// Arc-length average of a scalar field over tagged edges.
pub fn boundary_mean(space: &FeSpace, field: &[f64], tag: BoundaryTag) -> f64 {
    let mut acc = 0.0;
    let mut measure = 0.0;
    for be in space.boundary_elements(tag) {
        let len = ((be.p1[0] - be.p0[0]).powi(2) + (be.p1[1] - be.p0[1]).powi(2)).sqrt();
        for &(t, w) in &GAUSS6 {
            let s = edge_shapes(t);
            let u = field[be.dofs[0]] * s[0] + field[be.dofs[1]] * s[1] + field[be.dofs[2]] * s[2];
            acc += u * w * len;
            measure += w * len;
        }
    }
    acc / measure
}

/// Volume load `rhs_dof = int f N_dof` restricted to elements near
/// `center` (within `radius` plus one element diameter), integrated with
/// the degree-7 rule.
pub fn volume_rhs_local(
    space: &FeSpace,
    center: [f64; 2],
    radius: f64,
    f: &dyn Fn([f64; 2]) -> f64,
) -> Vec<f64> {
    let mut rhs = vec![0.0; space.n_dofs()];
    for t in 0..space.mesh.triangles.len() {
        let tri = space.mesh.triangles[t];
        let p: [[f64; 2]; 3] = [
            space.mesh.nodes[tri[0]],
            space.mesh.nodes[tri[1]],
            space.mesh.nodes[tri[2]],
        ];
        let dist = |q: [f64; 2]| ((q[0] - center[0]).powi(2) + (q[1] - center[1]).powi(2)).sqrt();
        let diam = (0..3)
            .map(|i| {
                let q = p[(i + 1) % 3];
                ((q[0] - p[i][0]).powi(2) + (q[1] - p[i][1]).powi(2)).sqrt()
            })
            .fold(0.0f64, f64::max);
        if p.iter().map(|&q| dist(q)).fold(f64::INFINITY, f64::min) > radius + diam {
            continue;
        }
        let d = space.elem_dofs(t);
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        for (lam, w) in TRI_QUAD_7 {
            let q = [
                lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
                lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
            ];
            let n = shape_values(lam);
            let c = f(q) * w * 0.5 * area2;
            for a in 0..6 {
                rhs[d[a]] += c * n[a];
            }
        }
    }
    rhs
}

/// Largest `|Re|` and `|Im|` of the nodal values supported in a region.
pub fn region_extrema(space: &FeSpace, field: &[Complex64], region: Region) -> (f64, f64) {
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    for d in space.region_dofs(region) {
        re = re.max(field[d].re.abs());
        im = im.max(field[d].im.abs());
    }
    (re, im)
}
