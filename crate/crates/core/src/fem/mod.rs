//! Quadratic Lagrange finite elements on triangles.
//!
//! Degrees of freedom are the mesh vertices followed by the edge midpoints.
//! Stiffness and mass integrands are polynomials of degree two and four and
//! are integrated exactly with a six-point degree-4 rule; load terms that
//! are merely smooth (or weakly singular after regularization) use a
//! thirteen-point degree-7 rule.

mod space;
mod system;

pub use space::{BoundaryElement, FeSpace};
pub use system::{
    assemble_stiffness_mass, boundary_flux_rhs, boundary_mean, build_problem, dtn_entries,
    modal_vectors, project_solution, region_extrema, volume_rhs_local, DofMap, LinearProblem,
    ModalVectors, StiffnessMass,
};

/// Degree-4 rule on the reference triangle, weights normalized to sum 1.
pub(crate) const TRI_QUAD_4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445948490915965;
    const B1: f64 = 1.0 - 2.0 * A1;
    const W1: f64 = 0.223381589678011;
    const A2: f64 = 0.091576213509771;
    const B2: f64 = 1.0 - 2.0 * A2;
    const W2: f64 = 0.109951743655322;
    [
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

/// Degree-7 rule on the reference triangle (13 points, one negative
/// weight), weights normalized to sum 1.
pub(crate) const TRI_QUAD_7: [([f64; 3], f64); 13] = {
    const W0: f64 = -0.149570044467670;
    const A1: f64 = 0.479308067841923;
    const B1: f64 = 0.260345966079038;
    const W1: f64 = 0.175615257433204;
    const A2: f64 = 0.869739794195568;
    const B2: f64 = 0.065130102902216;
    const W2: f64 = 0.053347235608839;
    const A3: f64 = 0.638444188569809;
    const B3: f64 = 0.312865496004875;
    const C3: f64 = 0.048690315425316;
    const W3: f64 = 0.077113760890257;
    const T: f64 = 1.0 / 3.0;
    [
        ([T, T, T], W0),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
        ([A3, B3, C3], W3),
        ([A3, C3, B3], W3),
        ([B3, A3, C3], W3),
        ([B3, C3, A3], W3),
        ([C3, A3, B3], W3),
        ([C3, B3, A3], W3),
    ]
};

/// Shape values at barycentric `lam`, ordered `[v0, v1, v2, e12, e20, e01]`.
pub(crate) fn shape_values(lam: [f64; 3]) -> [f64; 6] {
    let [l0, l1, l2] = lam;
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l0,
        4.0 * l0 * l1,
    ]
}

/// Shape gradients at barycentric `lam` given the barycentric gradients.
pub(crate) fn shape_grads(lam: [f64; 3], gl: [[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let [l0, l1, l2] = lam;
    let v = |i: usize, li: f64| [(4.0 * li - 1.0) * gl[i][0], (4.0 * li - 1.0) * gl[i][1]];
    let e = |i: usize, j: usize, li: f64, lj: f64| {
        [
            4.0 * (li * gl[j][0] + lj * gl[i][0]),
            4.0 * (li * gl[j][1] + lj * gl[i][1]),
        ]
    };
    [
        v(0, l0),
        v(1, l1),
        v(2, l2),
        e(1, 2, l1, l2),
        e(2, 0, l2, l0),
        e(0, 1, l0, l1),
    ]
}

/// Quadratic trace shapes on a boundary edge, `t` in `[0, 1]`, ordered
/// `[endpoint 0, endpoint 1, midpoint]`.
pub(crate) fn edge_shapes(t: f64) -> [f64; 3] {
    [
        (1.0 - t) * (1.0 - 2.0 * t),
        t * (2.0 * t - 1.0),
        4.0 * t * (1.0 - t),
    ]
}
