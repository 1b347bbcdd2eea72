//! Deterministic mesh generation.
//!
//! Every domain is decomposed into vertical strips between node columns.
//! Column abscissae and per-column ordinate sets come from recursive
//! bisection of intervals against a sizing field, so refinement is graded
//! (sizes change by at most a factor two between neighbours) and fully
//! reproducible. Strips are triangulated with a shortest-diagonal zipper,
//! which cannot produce inverted elements between distinct columns.
//! Ligament tubes are extruded transversally along their centerlines and
//! share the junction-wall nodes with the channel columns, which keeps the
//! triangulation conforming without any floating-point node merging.

use serde::{Deserialize, Serialize};

use super::{BoundaryEdge, BoundaryTag, Mesh, Region};
use crate::error::{Error, Result};
use crate::geometry::{Centerline, Ligament, WaveguideGeometry};

/// Largest admissible ratio of a column's ordinate spacing to the gap
/// separating it from its neighbouring columns. Keeps triangle quality
/// above `sqrt(3) * a / (1 + a * a)` where sizing fields would otherwise
/// place finely spaced columns next to coarse transverse grids.
const TRANSVERSE_ASPECT: f64 = 5.0;

/// Discretization knobs for the scattering meshes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeshParams {
    /// Target element size in the channel bulk.
    pub h: f64,
    /// Dyadic refinement levels towards the attachment corners; the local
    /// size there is `h / 2^junction_levels`, further capped by the tube
    /// transverse spacing.
    pub junction_levels: u32,
    /// Element layers across each ligament width (at least 3).
    pub tube_layers: usize,
    /// Growth rate of the element size away from refined features.
    pub grade: f64,
    /// Maximum admissible edge-length anisotropy in the channel.
    pub aspect_cap: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            h: 0.05,
            junction_levels: 3,
            tube_layers: 3,
            grade: 0.6,
            aspect_cap: 6.0,
        }
    }
}

impl MeshParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h < 0.5) {
            return Err(Error::Config(format!("mesh size h = {} out of range", self.h)));
        }
        if self.tube_layers < 3 {
            return Err(Error::Config(format!(
                "tube_layers = {} but at least 3 layers across each ligament are required",
                self.tube_layers
            )));
        }
        if !(self.grade > 0.1 && self.grade <= 2.0) || !(self.aspect_cap >= 2.0) {
            return Err(Error::Config("mesh grading parameters out of range".into()));
        }
        Ok(())
    }

    /// Same sizing intent at a finer resolution, for convergence studies.
    pub fn refined(&self, factor: f64) -> Self {
        Self {
            h: self.h / factor,
            ..*self
        }
    }
}

// ---------------------------------------------------------------------------
// Graded point sets and the column zipper
// ---------------------------------------------------------------------------

fn refine_interval(a: f64, b: f64, sizing: &dyn Fn(f64) -> f64, depth: u32, out: &mut Vec<f64>) {
    let mid = 0.5 * (a + b);
    if depth < 48 && b - a > sizing(mid).max(1e-9) {
        refine_interval(a, mid, sizing, depth + 1, out);
        out.push(mid);
        refine_interval(mid, b, sizing, depth + 1, out);
    }
}

/// Sorted point set on `[a, b]` including both ends, bisected until every
/// gap respects the sizing field at its midpoint.
fn graded_points(a: f64, b: f64, sizing: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![a];
    refine_interval(a, b, sizing, 0, &mut out);
    out.push(b);
    out
}

struct ColumnMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
}

impl ColumnMesh {
    fn new() -> Self {
        Self {
            nodes: Vec::new(),
            triangles: Vec::new(),
            regions: Vec::new(),
        }
    }

    fn add_column(&mut self, x: f64, ys: &[f64]) -> Vec<usize> {
        ys.iter()
            .map(|&y| {
                self.nodes.push([x, y]);
                self.nodes.len() - 1
            })
            .collect()
    }

    /// Triangulates the strip between two node columns (left at smaller x).
    /// Both columns must be sorted by ordinate.
    fn zip(&mut self, left: &[usize], right: &[usize], region: Region) {
        let d2 = |i: usize, j: usize| {
            let (p, q) = (self.nodes[i], self.nodes[j]);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        let (mut i, mut j) = (0usize, 0usize);
        while i + 1 < left.len() || j + 1 < right.len() {
            let advance_left = if j + 1 >= right.len() {
                true
            } else if i + 1 >= left.len() {
                false
            } else {
                d2(left[i + 1], right[j]) <= d2(left[i], right[j + 1])
            };
            if advance_left {
                self.triangles.push([left[i], right[j], left[i + 1]]);
                i += 1;
            } else {
                self.triangles.push([left[i], right[j], right[j + 1]]);
                j += 1;
            }
            self.regions.push(region);
        }
    }
}

/// Collects once-used element edges (sorted for determinism) and tags them.
pub(crate) fn tag_outer_boundary(
    nodes: &[[f64; 2]],
    triangles: &[[usize; 3]],
    classify: impl Fn(&[f64; 2], &[f64; 2]) -> BoundaryTag,
) -> Vec<BoundaryEdge> {
    let mut counts: std::collections::HashMap<(usize, usize), u32> =
        std::collections::HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            *counts.entry((i.min(j), i.max(j))).or_insert(0) += 1;
        }
    }
    let mut once: Vec<(usize, usize)> = counts
        .into_iter()
        .filter_map(|(e, n)| (n == 1).then_some(e))
        .collect();
    once.sort_unstable();
    once.into_iter()
        .map(|(i, j)| BoundaryEdge {
            nodes: [i, j],
            tag: classify(&nodes[i], &nodes[j]),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scattering domain
// ---------------------------------------------------------------------------

/// Transverse node offsets across a tube of the given width. Shared by the
/// wall-column builder and the tube extruder so interface ordinates agree
/// bitwise.
fn tube_offsets(y_attach: f64, width: f64, layers: usize) -> Vec<f64> {
    (0..=layers)
        .map(|t| y_attach + (t as f64 / layers as f64 - 0.5) * width)
        .collect()
}

/// Builds the half-domain mesh: channel `(-R, -w) x (0, 1)` plus one tube
/// per ligament, capped on the symmetry plane `x = 0` (tag `Sigma`).
pub fn build_half_mesh(geom: &WaveguideGeometry, params: &MeshParams) -> Result<Mesh> {
    params.validate()?;
    let h = params.h;
    let x_wall = if geom.halfwidth == 0.0 { 0.0 } else { -geom.halfwidth };
    let x_left = -geom.truncation;

    // Local size at the attachment corners.
    let tube_spacing = geom
        .ligaments
        .iter()
        .map(|l| l.spec.width / params.tube_layers as f64)
        .fold(f64::INFINITY, f64::min);
    let delta = if geom.is_duct() {
        h
    } else {
        (h / f64::powi(2.0, params.junction_levels as i32)).min(tube_spacing)
    };

    let attach_dist = |x: f64, y: f64| -> f64 {
        geom.ligaments
            .iter()
            .map(|l| ((x - x_wall).powi(2) + (y - l.spec.y_attach).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    };

    let tau_x = |x: f64| (delta + params.grade * (x_wall - x)).clamp(delta, h);
    let xs = graded_points(x_left, x_wall, &tau_x);

    let mut cm = ColumnMesh::new();
    let mut prev_col: Option<Vec<usize>> = None;
    let mut wall_ys: Vec<f64> = Vec::new();
    let mut wall_col: Vec<usize> = Vec::new();

    for (i, &x) in xs.iter().enumerate() {
        let dx_local = {
            let mut d = f64::INFINITY;
            if i > 0 {
                d = d.min(x - xs[i - 1]);
            }
            if i + 1 < xs.len() {
                d = d.min(xs[i + 1] - x);
            }
            d
        };
        let cap = params.aspect_cap * dx_local;
        let tau_y = |y: f64| (delta + params.grade * attach_dist(x, y)).min(h).min(cap).max(delta);

        let ys = if i + 1 == xs.len() && !geom.is_duct() {
            // Junction wall: tube interfaces are mandatory and kept
            // unrefined so the extruded tubes share these exact nodes.
            let mut ligs: Vec<&Ligament> = geom.ligaments.iter().collect();
            ligs.sort_by(|a, b| a.spec.y_attach.total_cmp(&b.spec.y_attach));
            let mut ys = vec![0.0];
            let mut cursor = 0.0;
            for lig in &ligs {
                let offs = tube_offsets(lig.spec.y_attach, lig.spec.width, params.tube_layers);
                refine_interval(cursor, offs[0], &tau_y, 0, &mut ys);
                ys.extend_from_slice(&offs);
                cursor = *offs.last().unwrap();
            }
            refine_interval(cursor, 1.0, &tau_y, 0, &mut ys);
            ys.push(1.0);
            ys
        } else {
            graded_points(0.0, 1.0, &tau_y)
        };

        let col = cm.add_column(x, &ys);
        if let Some(prev) = prev_col.take() {
            cm.zip(&prev, &col, Region::Channel);
        }
        prev_col = Some(col.clone());
        if i + 1 == xs.len() {
            wall_ys = ys;
            wall_col = col;
        }
    }

    // Ligament tubes.
    for (li, lig) in geom.ligaments.iter().enumerate() {
        let region = if li == 0 { Region::LigamentMinus } else { Region::LigamentPlus };
        extrude_tube(&mut cm, lig, params, &wall_ys, &wall_col, region)?;
    }

    let boundary = tag_outer_boundary(&cm.nodes, &cm.triangles, |p0, p1| {
        let tol = 1e-9;
        if (p0[0] - x_left).abs() < tol && (p1[0] - x_left).abs() < tol {
            BoundaryTag::TruncationLeft
        } else if p0[0] == 0.0 && p1[0] == 0.0 {
            BoundaryTag::Sigma
        } else {
            BoundaryTag::Wall
        }
    });

    let mesh = Mesh {
        nodes: cm.nodes,
        triangles: cm.triangles,
        regions: cm.regions,
        boundary,
        target_h: h,
    };
    mesh.audit()?;
    Ok(mesh)
}

/// Full-domain mesh: the half mesh mirrored across `x = 0`.
pub fn build_full_mesh(geom: &WaveguideGeometry, params: &MeshParams) -> Result<Mesh> {
    let full = build_half_mesh(geom, params)?.mirror();
    full.audit()?;
    Ok(full)
}

/// Extrudes one tube along its centerline. Station spacing ramps up
/// geometrically from the junction (where the corner singularity lives) to
/// the bulk spacing; the centerline is rebuilt once with a compensated arc
/// length so the chord-sum of the discrete centerline matches the requested
/// length, which keeps the discrete resonance lengths faithful.
fn extrude_tube(
    cm: &mut ColumnMesh,
    lig: &Ligament,
    params: &MeshParams,
    wall_ys: &[f64],
    wall_col: &[usize],
    region: Region,
) -> Result<()> {
    let spec = lig.spec;
    let layers = params.tube_layers;
    let trans = spec.width / layers as f64;
    let ds_bulk = (3.0 * trans).min(params.h);
    let ds_start = trans.min(ds_bulk);

    let mut stations = vec![0.0];
    let mut step = ds_start;
    loop {
        let s = stations.last().unwrap() + step;
        if s >= spec.length - 0.6 * ds_bulk {
            break;
        }
        stations.push(s);
        step = (step * 1.5).min(ds_bulk);
    }
    stations.push(spec.length);
    let m = stations.len() - 1;

    let poly_len = |pts: &[[f64; 2]]| -> f64 {
        pts.windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    };
    let pts0 = lig.centerline.points(&stations);
    let len_adj = spec.length * spec.length / poly_len(&pts0);
    let cl = Centerline::build(spec.y_attach, len_adj, spec.bend)?;
    let scale = len_adj / spec.length;
    let stations: Vec<f64> = stations.iter().map(|s| s * scale).collect();
    let pts = cl.points(&stations);

    // Wall interface nodes: look up the exact ordinates in the wall column.
    let offsets = tube_offsets(spec.y_attach, spec.width, layers);
    let wall_ids: Vec<usize> = offsets
        .iter()
        .map(|&y| {
            let idx = wall_ys.partition_point(|&v| v < y);
            assert!(
                idx < wall_ys.len() && wall_ys[idx] == y,
                "tube interface ordinate missing from wall column"
            );
            wall_col[idx]
        })
        .collect();

    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(m + 1);
    cols.push(wall_ids);
    for k in 1..=m {
        let n = cl.normal(stations[k]);
        let snap_cap = k == m;
        let ids: Vec<usize> = (0..=layers)
            .map(|t| {
                let nu = (t as f64 / layers as f64 - 0.5) * spec.width;
                let mut p = [pts[k][0] + nu * n[0], pts[k][1] + nu * n[1]];
                if snap_cap {
                    debug_assert!(p[0].abs() < 1e-9, "cap node off the symmetry plane");
                    p[0] = 0.0;
                }
                cm.nodes.push(p);
                cm.nodes.len() - 1
            })
            .collect();
        cols.push(ids);
    }
    for k in 0..m {
        let (a, b) = (&cols[k], &cols[k + 1]);
        for t in 0..layers {
            cm.triangles.push([a[t], b[t], b[t + 1]]);
            cm.triangles.push([a[t], b[t + 1], a[t + 1]]);
            cm.regions.push(region);
            cm.regions.push(region);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Auxiliary domains for the asymptotic constants
// ---------------------------------------------------------------------------

/// Junction domain for the boundary-layer constant: half-square
/// `[-rho, 0] x [-rho, rho]` (truncating the half-plane) joined to the
/// semi-strip `[0, strip_len] x (-1/2, 1/2)`. The square truncation sides
/// are tagged `TruncationLeft` (they carry prescribed far-field Dirichlet
/// data), the strip cap `TruncationRight`.
pub fn build_halfplane_strip_mesh(rho: f64, strip_len: f64, h0: f64) -> Result<Mesh> {
    if !(rho >= 2.0) {
        return Err(Error::Config(format!("truncation radius {rho} is too small")));
    }
    if !(strip_len >= 1.0) {
        return Err(Error::Config(format!("strip length {strip_len} is too small")));
    }
    if !(h0 > 0.0 && h0 < 0.5) {
        return Err(Error::Config(format!("mesh size {h0} out of range")));
    }
    let corner = h0 / 8.0;
    let sizing = move |p: [f64; 2]| -> f64 {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let far = (0.12 * r).max(h0);
        let dc = ((p[0]).powi(2) + (p[1].abs() - 0.5).powi(2)).sqrt();
        far.min(corner + 0.6 * dc)
    };

    let mut cm = ColumnMesh::new();
    let tau_x_disk = |x: f64| sizing([x, 0.5]);
    let xs_left = graded_points(-rho, 0.0, &tau_x_disk);
    let tau_x_strip = |x: f64| sizing([x, 0.5]);
    let xs_right = graded_points(0.0, strip_len, &tau_x_strip);

    let mut prev: Option<Vec<usize>> = None;
    let mut mouth_slice: Vec<usize> = Vec::new();
    for (k, &x) in xs_left.iter().enumerate() {
        let gap_left = if k > 0 { x - xs_left[k - 1] } else { f64::INFINITY };
        let gap_right = if k + 1 < xs_left.len() {
            xs_left[k + 1] - x
        } else {
            xs_right[1] - xs_right[0]
        };
        let cap = TRANSVERSE_ASPECT * gap_left.min(gap_right);
        let tau_y = |y: f64| sizing([x, y]).min(cap);
        let ys = if x == 0.0 {
            let mut ys = vec![-rho];
            refine_interval(-rho, -0.5, &tau_y, 0, &mut ys);
            ys.push(-0.5);
            refine_interval(-0.5, 0.5, &tau_y, 0, &mut ys);
            ys.push(0.5);
            refine_interval(0.5, rho, &tau_y, 0, &mut ys);
            ys.push(rho);
            ys
        } else {
            graded_points(-rho, rho, &tau_y)
        };
        let col = cm.add_column(x, &ys);
        if let Some(p) = prev.take() {
            cm.zip(&p, &col, Region::Channel);
        }
        if x == 0.0 {
            let lo = ys.partition_point(|&v| v < -0.5);
            let hi = ys.partition_point(|&v| v < 0.5);
            assert!(ys[lo] == -0.5 && ys[hi] == 0.5);
            mouth_slice = col[lo..=hi].to_vec();
        }
        prev = Some(col);
    }

    let mut left = mouth_slice;
    for (k, &x) in xs_right.iter().enumerate().skip(1) {
        let gap_left = x - xs_right[k - 1];
        let gap_right = if k + 1 < xs_right.len() {
            xs_right[k + 1] - x
        } else {
            f64::INFINITY
        };
        let cap = TRANSVERSE_ASPECT * gap_left.min(gap_right);
        let tau_y = |y: f64| sizing([x, y]).min(cap);
        let ys = graded_points(-0.5, 0.5, &tau_y);
        let col = cm.add_column(x, &ys);
        cm.zip(&left, &col, Region::Channel);
        left = col;
    }

    let boundary = tag_outer_boundary(&cm.nodes, &cm.triangles, |p0, p1| {
        let tol = 1e-9;
        let on_square = |p: &[f64; 2]| {
            (p[0] + rho).abs() < tol || (p[1].abs() - rho).abs() < tol
        };
        if on_square(p0) && on_square(p1) {
            BoundaryTag::TruncationLeft
        } else if (p0[0] - strip_len).abs() < tol && (p1[0] - strip_len).abs() < tol {
            BoundaryTag::TruncationRight
        } else {
            BoundaryTag::Wall
        }
    });

    let mesh = Mesh {
        nodes: cm.nodes,
        triangles: cm.triangles,
        regions: cm.regions,
        boundary,
        target_h: h0,
    };
    mesh.audit()?;
    Ok(mesh)
}

/// Channel `(-truncation, -1/2) x (0, 1)` graded towards a wall source
/// point `(-1/2, y_source)`, which is guaranteed to be a mesh node. Used
/// for the Green's-function constant of the length-correction formula.
pub fn build_source_channel_mesh(
    truncation: f64,
    y_source: f64,
    h: f64,
    delta: f64,
) -> Result<Mesh> {
    if !(truncation > 0.6) {
        return Err(Error::Config(format!("truncation {truncation} too small")));
    }
    if !(y_source > 0.02 && y_source < 0.98) {
        return Err(Error::Config(format!("source ordinate {y_source} out of range")));
    }
    if !(delta > 0.0 && delta <= h && h < 0.5) {
        return Err(Error::Config("source mesh sizes out of range".into()));
    }
    let grade = 0.6;
    let aspect_cap = 6.0;
    let tau_x = |x: f64| (delta + grade * (-0.5 - x)).clamp(delta, h);
    let xs = graded_points(-truncation, -0.5, &tau_x);
    let mut cm = ColumnMesh::new();
    let mut prev: Option<Vec<usize>> = None;
    for (i, &x) in xs.iter().enumerate() {
        let mut dx_local = f64::INFINITY;
        if i > 0 {
            dx_local = dx_local.min(x - xs[i - 1]);
        }
        if i + 1 < xs.len() {
            dx_local = dx_local.min(xs[i + 1] - x);
        }
        let cap = aspect_cap * dx_local;
        let tau_y = |y: f64| {
            let d = ((x + 0.5).powi(2) + (y - y_source).powi(2)).sqrt();
            (delta + grade * d).min(h).min(cap).max(delta)
        };
        let ys = if i + 1 == xs.len() {
            let mut ys = vec![0.0];
            refine_interval(0.0, y_source, &tau_y, 0, &mut ys);
            ys.push(y_source);
            refine_interval(y_source, 1.0, &tau_y, 0, &mut ys);
            ys.push(1.0);
            ys
        } else {
            graded_points(0.0, 1.0, &tau_y)
        };
        let col = cm.add_column(x, &ys);
        if let Some(p) = prev.take() {
            cm.zip(&p, &col, Region::Channel);
        }
        prev = Some(col);
    }
    let boundary = tag_outer_boundary(&cm.nodes, &cm.triangles, |p0, p1| {
        let tol = 1e-9;
        if (p0[0] + truncation).abs() < tol && (p1[0] + truncation).abs() < tol {
            BoundaryTag::TruncationLeft
        } else {
            BoundaryTag::Wall
        }
    });
    let mesh = Mesh {
        nodes: cm.nodes,
        triangles: cm.triangles,
        regions: cm.regions,
        boundary,
        target_h: h,
    };
    mesh.audit()?;
    Ok(mesh)
}
