//! Asymptotic constants of the length-correction formula: the junction
//! constant `C_Xi` and the wall Green's constants `Gamma(y)`.
//!
//! `C_Xi` is the universal constant in the strip/half-plane boundary-layer
//! profile: the harmonic function `Y` with sound-hard walls, unit flux down
//! the semi-infinite strip and logarithmic far field in the half-plane
//! behaves as `Y = x + C_Xi + O(exp(-pi x))` along the strip. It is
//! computed here on a truncated domain with the exact far-field trace
//! `ln(1/|p|)/pi` imposed on the outer square and unit Neumann flux on the
//! strip cap, then Richardson-extrapolated in the truncation radius. Energy
//! arguments force `C_Xi` to be real, which the real-arithmetic pipeline
//! guarantees by construction.
//!
//! `Gamma(y)` is the finite part of the outgoing half-channel Green's
//! function with a boundary point source at `A = (-1/2, y)`:
//!
//! `gamma = ln(1/r)/pi + Gamma + O(r)` near `A`.
//!
//! The log singularity carries exactly the unit Dirac flux at a straight
//! sound-hard wall, so subtracting `S = chi(r) ln(1/r)/pi` with a smooth
//! radial cutoff `chi` leaves a regular Helmholtz problem for
//! `gamma - S` with smooth volume forcing `(Delta + omega^2) S`, solved
//! with the modal radiation condition. `Gamma` is the regular part
//! evaluated at the source node. The radiated far field determines the
//! imaginary part exactly: `Im(omega Gamma) = 1 + K` with the coupling
//! ratio `K` of [`crate::design::coupling_ratio`], and the outgoing
//! amplitudes are `s_1 = i/sqrt(beta_1)`, `s_2 = i sqrt(2) cos(pi y) /
//! sqrt(beta_2)`; both serve as independent checks of the computation.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design::{attachment_ordinates, DesignConstants};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_stiffness_mass, boundary_flux_rhs, boundary_mean, build_problem, dtn_entries,
    modal_vectors, project_solution, volume_rhs_local, FeSpace,
};
use crate::mesh::{build_halfplane_strip_mesh, build_source_channel_mesh, BoundaryTag};
use crate::modes::{coefficients_from_projections, ModeBasis, Side};
use crate::scattering::DEFAULT_DTN_TERMS;
use crate::solver::SparseSymmetric;

/// Base truncation radius of the junction-constant domain.
const JUNCTION_RHO: f64 = 6.0;
/// Base strip length of the junction-constant domain; the strip tail decays
/// like `exp(-pi L)`, already below 1e-4 here.
const JUNCTION_STRIP: f64 = 3.0;

/// One truncated junction solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JunctionRun {
    pub rho: f64,
    pub strip_len: f64,
    pub h: f64,
    /// Mean of the solution on the strip cap minus the strip length.
    pub value: f64,
    /// Defect of the discrete total-flux balance, a solver health check.
    pub flux_defect: f64,
}

/// Extrapolated junction constant with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JunctionConstant {
    pub value: f64,
    /// Spread of the last two extrapolations (single-run corrections when
    /// only two runs exist).
    pub estimated_error: f64,
    pub runs: Vec<JunctionRun>,
    /// `2 C(2 rho) - C(rho)` for successive run pairs; the truncation error
    /// decays like `1/rho`, so each entry cancels the leading term.
    pub extrapolations: Vec<f64>,
}

fn junction_run(rho: f64, strip_len: f64, h: f64) -> Result<JunctionRun> {
    let mesh = build_halfplane_strip_mesh(rho, strip_len, h)?;
    let space = FeSpace::new(&mesh);
    let km = assemble_stiffness_mass(&space);

    let mut dirichlet: Vec<(usize, f64)> = Vec::new();
    let trace = |p: [f64; 2]| -(p[0].hypot(p[1])).ln() / std::f64::consts::PI;
    for be in space.boundary_elements(BoundaryTag::TruncationLeft) {
        let mid = [0.5 * (be.p0[0] + be.p1[0]), 0.5 * (be.p0[1] + be.p1[1])];
        dirichlet.push((be.dofs[0], trace(be.p0)));
        dirichlet.push((be.dofs[1], trace(be.p1)));
        dirichlet.push((be.dofs[2], trace(mid)));
    }
    dirichlet.sort_by_key(|&(d, _)| d);
    dirichlet.dedup_by_key(|&mut (d, _)| d);

    let rhs = boundary_flux_rhs(&space, BoundaryTag::TruncationRight, &|_| 1.0);
    let problem = build_problem(space.n_dofs(), &km, 1.0, 0.0, &[], &dirichlet);
    let factored = problem.factor()?;
    let field = problem.solution(&factored, &rhs);

    // Total-flux balance: the stiffness matrix annihilates constants, so
    // the reactions on the Dirichlet part must return exactly the unit flux
    // injected through the cap.
    let mut full = SparseSymmetric::new(space.n_dofs());
    for &(i, j, v) in &km.k {
        full.add(i as usize, j as usize, v);
    }
    let residual = full.apply(&field);
    let reaction: f64 = dirichlet
        .iter()
        .map(|&(d, _)| residual[d] - rhs[d])
        .sum();
    let flux_defect = (reaction + 1.0).abs();

    let value = boundary_mean(&space, &field, BoundaryTag::TruncationRight) - strip_len;
    Ok(JunctionRun {
        rho,
        strip_len,
        h,
        value,
        flux_defect,
    })
}

/// Computes the junction constant from `doublings + 1` truncated solves at
/// radii `rho_0 2^k`, extrapolating away the `1/rho` truncation error.
pub fn junction_constant(doublings: usize, h: f64) -> Result<JunctionConstant> {
    if doublings == 0 {
        return Err(Error::Config(
            "junction constant needs at least one radius doubling".into(),
        ));
    }
    let mut runs = Vec::with_capacity(doublings + 1);
    for k in 0..=doublings {
        let rho = JUNCTION_RHO * (1 << k) as f64;
        let strip_len = JUNCTION_STRIP + k as f64;
        runs.push(junction_run(rho, strip_len, h)?);
    }
    let extrapolations: Vec<f64> = runs
        .windows(2)
        .map(|w| 2.0 * w[1].value - w[0].value)
        .collect();
    let diffs: Vec<f64> = extrapolations
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .collect();
    for w in diffs.windows(2) {
        if w[1] > w[0] && w[1] > 1e-4 {
            return Err(Error::NonConvergent(format!(
                "junction extrapolations drift apart: successive changes {:?}",
                diffs
            )));
        }
    }
    let value = *extrapolations.last().unwrap();
    let estimated_error = match diffs.last() {
        Some(&d) => d,
        None => (extrapolations[0] - runs[1].value).abs(),
    };
    Ok(JunctionConstant {
        value,
        estimated_error,
        runs,
        extrapolations,
    })
}

/// Discretization knobs of the Green's-constant solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GreensParams {
    /// Bulk mesh size; the mesh grades down to `h/3` at the source.
    pub h: f64,
    /// Channel truncation distance from `x = 0`.
    pub truncation: f64,
    /// Cutoff radius of the singularity subtraction; `None` picks
    /// `min(0.1, 0.4 clearance)` against the nearest foreign boundary.
    pub r0: Option<f64>,
    /// Modal terms in the radiation condition.
    pub n_terms: usize,
}

impl Default for GreensParams {
    fn default() -> Self {
        Self {
            h: 0.03,
            truncation: 1.5,
            r0: None,
            n_terms: DEFAULT_DTN_TERMS,
        }
    }
}

/// Wall Green's constant at one attachment ordinate, with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreensConstant {
    pub omega: f64,
    pub y_attach: f64,
    #[serde(with = "crate::report::complex_num")]
    pub gamma: Complex64,
    /// Outgoing propagating-mode amplitudes of the Green's function.
    #[serde(with = "crate::report::complex_vec")]
    pub far_field: Vec<Complex64>,
    /// Spread between the production solve and a 1.5x coarser one.
    pub estimated_error: f64,
    pub r0: f64,
    pub h: f64,
    pub truncation: f64,
    pub n_terms: usize,
}

/// Quintic cutoff `chi` with `chi = 1` for `r <= r0`, `chi = 0` for
/// `r >= 2 r0`, and two continuous derivatives; returns
/// `(chi, chi', chi'')`.
fn cutoff(r: f64, r0: f64) -> (f64, f64, f64) {
    let t = ((r - r0) / r0).clamp(0.0, 1.0);
    let chi = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let dchi = -30.0 * t * t * (1.0 - t) * (1.0 - t) / r0;
    let ddchi = -60.0 * t * (2.0 * t - 1.0) * (t - 1.0) / (r0 * r0);
    (chi, dchi, ddchi)
}

/// Snaps an ordinate to a `1e-12` grid. A mirror pair `(y, 1 - y)` does not
/// generally satisfy `1 - (1 - y) == y` in floating point, and the mesh
/// generator may break a shortest-diagonal tie differently for inputs one
/// ulp apart; snapping both members of the pair to the grid makes them
/// resolve to the same canonical ordinate. The `<= 5e-13` shift of the
/// evaluation point is far below every tolerance in this crate.
fn quantize_ordinate(y: f64) -> f64 {
    (y * 1e12).round() / 1e12
}

/// Solves the regularized source problem at a canonical ordinate
/// `y_c <= 1/2`.
fn greens_solve(
    omega: f64,
    y_c: f64,
    h: f64,
    truncation: f64,
    r0: f64,
    n_terms: usize,
) -> Result<(Complex64, Vec<Complex64>)> {
    let mesh = build_source_channel_mesh(truncation, y_c, h, h / 3.0)?;
    mesh.audit()?;
    let space = FeSpace::new(&mesh);
    let basis = ModeBasis::new(omega, n_terms)?;
    let km = assemble_stiffness_mass(&space);
    let mv = modal_vectors(&space, &basis, BoundaryTag::TruncationLeft, n_terms);
    let dtn = dtn_entries(&mv, &basis);
    let problem = build_problem(
        space.n_dofs(),
        &km,
        Complex64::new(1.0, 0.0),
        Complex64::new(-omega * omega, 0.0),
        &dtn,
        &[],
    );

    let source = [-0.5, y_c];
    let forcing = move |p: [f64; 2]| {
        let r = (p[0] - source[0]).hypot(p[1] - source[1]);
        if r >= 2.0 * r0 {
            return 0.0;
        }
        let g = -r.ln() / std::f64::consts::PI;
        let (chi, dchi, ddchi) = cutoff(r, r0);
        let mut val = omega * omega * chi * g;
        if r > r0 {
            let dg = -1.0 / (std::f64::consts::PI * r);
            val += 2.0 * dchi * dg + (ddchi + dchi / r) * g;
        }
        val
    };
    let rhs_real = volume_rhs_local(&space, source, 2.0 * r0, &forcing);
    let rhs: Vec<Complex64> = rhs_real.iter().map(|&v| Complex64::new(v, 0.0)).collect();

    let factored = problem.factor()?;
    let field = problem.solution(&factored, &rhs);

    let source_dof = mesh
        .nodes
        .iter()
        .position(|p| (p[0] - source[0]).abs() < 1e-12 && (p[1] - source[1]).abs() < 1e-12)
        .ok_or_else(|| {
            Error::DegenerateMesh(format!("no mesh node at the source point {source:?}"))
        })?;
    let gamma = field[source_dof];

    let n_prop = basis.propagating_count();
    let projections = project_solution(
        &space,
        &field,
        BoundaryTag::TruncationLeft,
        &basis,
        (n_prop + 1).min(basis.n_modes()),
    );
    let coeffs = coefficients_from_projections(
        &basis,
        &projections,
        -truncation,
        Side::Left,
        None,
        0.5,
    )?;
    Ok((gamma, coeffs.values))
}

/// Computes the wall Green's constant and its outgoing amplitudes at
/// attachment ordinate `y`, with an error estimate from a paired coarse
/// solve.
///
/// The solve runs at the canonical ordinate `min(y, 1 - y)` (snapped to the
/// quantization grid) and maps back by mode parity: `Gamma` is even under
/// the midline reflection and outgoing mode `n` picks up `(-1)^n`. The
/// symmetry `Gamma(y) = Gamma(1 - y)` therefore holds exactly in the
/// output, instead of up to independent discretization errors.
pub fn greens_constant(omega: f64, y: f64, params: &GreensParams) -> Result<GreensConstant> {
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::Config(format!(
            "attachment ordinate {y} outside the channel"
        )));
    }
    let y_q = quantize_ordinate(y);
    let flipped = y_q > 0.5;
    let y_c = if flipped {
        quantize_ordinate(1.0 - y_q)
    } else {
        y_q
    };
    let clearance = y_c.min(params.truncation - 0.5);
    let r0 = match params.r0 {
        Some(r0) => {
            if 2.0 * r0 >= clearance {
                return Err(Error::CutoffTooLarge {
                    radius: 2.0 * r0,
                    clearance,
                });
            }
            r0
        }
        None => (0.4 * clearance).min(0.1),
    };
    let (gamma, mut far_field) =
        greens_solve(omega, y_c, params.h, params.truncation, r0, params.n_terms)?;
    let (gamma_coarse, _) = greens_solve(
        omega,
        y_c,
        params.h * 1.5,
        params.truncation,
        r0,
        params.n_terms,
    )?;
    if flipped {
        for (n, v) in far_field.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    Ok(GreensConstant {
        omega,
        y_attach: y_q,
        gamma,
        far_field,
        estimated_error: (gamma - gamma_coarse).norm(),
        r0,
        h: params.h,
        truncation: params.truncation,
        n_terms: params.n_terms,
    })
}

/// Exact outgoing amplitudes of the wall Green's function, from the
/// bi-orthogonality of the propagating modes: `s_1 = i/sqrt(beta_1)`,
/// `s_2 = i sqrt(2) cos(pi y)/sqrt(beta_2)`.
pub fn predicted_far_field(omega: f64, y: f64) -> Result<[Complex64; 2]> {
    let basis = ModeBasis::new(omega, 3)?;
    if basis.propagating_count() != 2 {
        return Err(Error::Config(format!(
            "omega = {omega} is outside the two-mode band"
        )));
    }
    let b1 = basis.beta(0).re;
    let b2 = basis.beta(1).re;
    let c = (std::f64::consts::PI * y).cos();
    Ok([
        Complex64::new(0.0, 1.0 / b1.sqrt()),
        Complex64::new(0.0, std::f64::consts::SQRT_2 * c / b2.sqrt()),
    ])
}

/// Residual of the radiated-energy identity `Im(omega Gamma) = 1 + K`,
/// which ties the imaginary part of the Green's constant to the coupling
/// ratio of its attachment.
pub fn energy_identity_residual(gc: &GreensConstant) -> f64 {
    let k = crate::design::coupling_ratio(gc.omega, gc.y_attach).unwrap_or(f64::NAN);
    ((gc.omega * gc.gamma).im - (1.0 + k)).abs()
}

/// Everything the length-correction recipe consumes, with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub junction: JunctionConstant,
    pub gamma_minus: GreensConstant,
    pub gamma_plus: GreensConstant,
}

impl AsymptoticConstants {
    pub fn design_constants(&self) -> DesignConstants {
        DesignConstants {
            c_xi: self.junction.value,
            re_gamma_minus: self.gamma_minus.gamma.re,
            re_gamma_plus: self.gamma_plus.gamma.re,
        }
    }
}

/// Compute settings for the full constants pipeline.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConstantsParams {
    pub junction_doublings: usize,
    pub junction_h: f64,
    pub greens: GreensParams,
}

impl Default for ConstantsParams {
    fn default() -> Self {
        Self {
            junction_doublings: 2,
            junction_h: 0.05,
            greens: GreensParams::default(),
        }
    }
}

/// On-disk memo of computed constants, keyed by their full parameter sets.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConstantsCache {
    pub junction: Vec<JunctionConstant>,
    pub greens: Vec<GreensConstant>,
}

impl ConstantsCache {
    /// Loads a cache file, treating a missing file as an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Memoized junction constant; the boolean reports a cache hit.
    pub fn junction(&mut self, doublings: usize, h: f64) -> Result<(JunctionConstant, bool)> {
        if let Some(jc) = self
            .junction
            .iter()
            .find(|jc| jc.runs.len() == doublings + 1 && jc.runs.iter().all(|r| r.h == h))
        {
            return Ok((jc.clone(), true));
        }
        let jc = junction_constant(doublings, h)?;
        self.junction.push(jc.clone());
        Ok((jc, false))
    }

    /// Memoized Green's constant; the boolean reports a cache hit.
    pub fn greens(
        &mut self,
        omega: f64,
        y: f64,
        params: &GreensParams,
    ) -> Result<(GreensConstant, bool)> {
        if let Some(gc) = self.greens.iter().find(|gc| {
            gc.omega == omega
                && gc.y_attach == quantize_ordinate(y)
                && gc.h == params.h
                && gc.truncation == params.truncation
                && gc.n_terms == params.n_terms
                && params.r0.map_or(true, |r0| gc.r0 == r0)
        }) {
            return Ok((gc.clone(), true));
        }
        let gc = greens_constant(omega, y, params)?;
        self.greens.push(gc.clone());
        Ok((gc, false))
    }

    /// Full constants set at the designed attachment pair of `omega`.
    pub fn asymptotic(
        &mut self,
        omega: f64,
        params: &ConstantsParams,
    ) -> Result<(AsymptoticConstants, bool)> {
        let (y_minus, y_plus) = attachment_ordinates(omega)?;
        let (junction, hit_j) = self.junction(params.junction_doublings, params.junction_h)?;
        let (gamma_minus, hit_m) = self.greens(omega, y_minus, &params.greens)?;
        let (gamma_plus, hit_p) = self.greens(omega, y_plus, &params.greens)?;
        Ok((
            AsymptoticConstants {
                junction,
                gamma_minus,
                gamma_plus,
            },
            hit_j && hit_m && hit_p,
        ))
    }
}
