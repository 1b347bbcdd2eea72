//! Transverse mode basis of the unit-height waveguide and modal
//! decomposition of solution traces.
//!
//! With homogeneous Neumann walls at `y = 0` and `y = 1`, the transverse
//! eigenfunctions are `phi_0(y) = 1` and `phi_n(y) = sqrt(2) cos(n pi y)`,
//! orthonormal in `L^2(0, 1)`. At frequency `omega`, mode `n` carries the
//! propagation constant `beta_n = sqrt(omega^2 - n^2 pi^2)`, real for
//! propagating modes and positive imaginary for evanescent ones. Propagating
//! waves are normalized to unit energy flux:
//!
//! `w_n^±(x, y) = beta_n^{-1/2} exp(±i beta_n x) phi_n(y)`.
//!
//! Scattering coefficients are recovered from the trace of a solution on a
//! vertical cross-section by projecting onto the `phi_n` and stripping the
//! known phase accumulated between the cross-section and the reference plane
//! of the decomposition.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 6-point Gauss-Legendre rule on [0, 1] as (abscissa, weight) pairs.
/// Exact for polynomials up to degree 11.
pub(crate) const GAUSS6: [(f64, f64); 6] = [
    (0.033_765_242_898_423_975, 0.085_662_246_189_585_16),
    (0.169_395_306_766_867_76, 0.180_380_786_524_069_3),
    (0.380_690_406_958_401_56, 0.233_956_967_286_345_54),
    (0.619_309_593_041_598_44, 0.233_956_967_286_345_54),
    (0.830_604_693_233_132_3, 0.180_380_786_524_069_3),
    (0.966_234_757_101_576, 0.085_662_246_189_585_16),
];

/// Default absolute guard distance between `omega` and the nearest cut-off.
pub const DEFAULT_CUTOFF_TOL: f64 = 1e-6;

/// Propagation direction of a waveguide mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `exp(+i beta x)`, travelling towards `x -> +inf`.
    Forward,
    /// `exp(-i beta x)`, travelling towards `x -> -inf`.
    Backward,
}

/// Which duct a cross-section lives in, relative to the scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Frequency-dependent family of transverse modes.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    omega: f64,
    betas: Vec<Complex64>,
    propagating: usize,
}

impl ModeBasis {
    /// Builds the first `n_modes` transverse modes at frequency `omega`,
    /// rejecting frequencies within [`DEFAULT_CUTOFF_TOL`] of a cut-off.
    pub fn new(omega: f64, n_modes: usize) -> Result<Self> {
        Self::with_cutoff_tol(omega, n_modes, DEFAULT_CUTOFF_TOL)
    }

    pub fn with_cutoff_tol(omega: f64, n_modes: usize, tol: f64) -> Result<Self> {
        assert!(n_modes >= 1, "at least one transverse mode is required");
        if !(omega > 0.0) {
            return Err(Error::Config(format!(
                "frequency must be positive, got {omega}"
            )));
        }
        for n in 0..n_modes {
            if (omega - n as f64 * std::f64::consts::PI).abs() < tol {
                return Err(Error::CutoffWavenumber { omega, n, tol });
            }
        }
        let betas = (0..n_modes)
            .map(|n| {
                let d = omega * omega - (n as f64 * std::f64::consts::PI).powi(2);
                if d >= 0.0 {
                    Complex64::new(d.sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, (-d).sqrt())
                }
            })
            .collect::<Vec<_>>();
        let propagating = betas.iter().filter(|b| b.re > 0.0).count();
        Ok(Self {
            omega,
            betas,
            propagating,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn n_modes(&self) -> usize {
        self.betas.len()
    }

    /// Number of propagating modes; 2 throughout the two-mode band
    /// `pi < omega < 2 pi`.
    pub fn propagating_count(&self) -> usize {
        self.propagating
    }

    /// Propagation constant of transverse index `n` (0-based).
    pub fn beta(&self, n: usize) -> Complex64 {
        self.betas[n]
    }

    /// Transverse eigenfunction of index `n` (0-based), orthonormal on (0,1).
    pub fn phi(&self, n: usize, y: f64) -> f64 {
        if n == 0 {
            1.0
        } else {
            std::f64::consts::SQRT_2 * (n as f64 * std::f64::consts::PI * y).cos()
        }
    }

    /// Trace of the flux-normalized propagating mode `mode` (1-based) at
    /// abscissa `x_rel` measured from the decomposition reference plane.
    pub fn mode_trace(
        &self,
        mode: usize,
        direction: Direction,
        x_rel: f64,
        y: f64,
    ) -> Result<Complex64> {
        if mode == 0 || mode > self.propagating {
            return Err(Error::NotPropagating {
                mode,
                omega: self.omega,
            });
        }
        let beta = self.betas[mode - 1].re;
        let sign = match direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let phase = Complex64::from_polar(1.0, sign * beta * x_rel);
        Ok(phase * self.phi(mode - 1, y) / beta.sqrt())
    }
}

/// Modal content of one solution trace, after phase normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeCoefficients {
    /// Incident propagating mode this trace responds to, if any (1-based).
    pub incident: Option<usize>,
    /// Abscissa of the cross-section the trace was taken on.
    pub abscissa: f64,
    pub side: Side,
    /// One complex coefficient per propagating mode (index = mode - 1),
    /// referenced to the junction wall plane.
    #[serde(with = "crate::report::complex_vec")]
    pub values: Vec<Complex64>,
    /// Magnitude of the first evanescent projection, before normalization.
    pub evanescent_estimate: f64,
    /// Raised when the evanescent content suggests the cross-section sits
    /// too close to the scatterer for a clean two-mode decomposition.
    pub evanescent_warning: bool,
}

impl ModeCoefficients {
    /// Sum of squared moduli over the propagating coefficients.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Threshold on the raw evanescent projection above which a decomposition
/// is flagged as contaminated.
pub const EVANESCENT_WARN_THRESHOLD: f64 = 1e-6;

/// Turns raw transverse projections `p_n = int u(x_c, y) phi_n(y) dy` into
/// scattering coefficients.
///
/// `ref_halfwidth` is the half-width of the junction region: the reflected
/// decomposition on the left is referenced to `x = -ref_halfwidth`, the
/// transmitted one on the right to `x = +ref_halfwidth`. For `Side::Left`
/// with `incident = Some(i)`, the projection of the incident wave
/// `w_i^+(x + ref_halfwidth, y)` is subtracted before normalization.
pub fn coefficients_from_projections(
    basis: &ModeBasis,
    projections: &[Complex64],
    x_c: f64,
    side: Side,
    incident: Option<usize>,
    ref_halfwidth: f64,
) -> Result<ModeCoefficients> {
    let np = basis.propagating_count();
    if projections.len() < np {
        return Err(Error::Config(format!(
            "need at least {np} transverse projections, got {}",
            projections.len()
        )));
    }
    if let Some(i) = incident {
        if i == 0 || i > np {
            return Err(Error::NotPropagating {
                mode: i,
                omega: basis.omega(),
            });
        }
    }
    match side {
        Side::Left if x_c > -ref_halfwidth + 1e-12 => {
            return Err(Error::Config(format!(
                "abscissa {x_c} is not inside the left duct (wall at {})",
                -ref_halfwidth
            )));
        }
        Side::Right if x_c < ref_halfwidth - 1e-12 => {
            return Err(Error::Config(format!(
                "abscissa {x_c} is not inside the right duct (wall at {ref_halfwidth})"
            )));
        }
        _ => {}
    }

    let mut values = Vec::with_capacity(np);
    for j in 0..np {
        let beta = basis.beta(j).re;
        let value = match side {
            Side::Left => {
                // u = w_i^+(x + w) + sum_j r_j w_j^-(x + w) + evanescent
                let mut p = projections[j];
                if incident == Some(j + 1) {
                    p -= Complex64::from_polar(1.0 / beta.sqrt(), beta * (x_c + ref_halfwidth));
                }
                p * beta.sqrt() * Complex64::from_polar(1.0, beta * (x_c + ref_halfwidth))
            }
            Side::Right => {
                // u = sum_j t_j w_j^+(x - w) + evanescent
                projections[j]
                    * beta.sqrt()
                    * Complex64::from_polar(1.0, -beta * (x_c - ref_halfwidth))
            }
        };
        values.push(value);
    }
    let evanescent_estimate = projections.get(np).map_or(0.0, |p| p.norm());
    Ok(ModeCoefficients {
        incident,
        abscissa: x_c,
        side,
        values,
        evanescent_estimate,
        evanescent_warning: evanescent_estimate > EVANESCENT_WARN_THRESHOLD,
    })
}

/// Projects a trace `y -> u(x_c, y)` onto the first `n_proj` transverse
/// modes with a composite Gauss rule (`panels` panels, 6 points each).
pub fn project_trace(
    basis: &ModeBasis,
    trace: &dyn Fn(f64) -> Complex64,
    n_proj: usize,
    panels: usize,
) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(0.0, 0.0); n_proj];
    let dy = 1.0 / panels as f64;
    for k in 0..panels {
        let y0 = k as f64 * dy;
        for &(t, w) in &GAUSS6 {
            let y = y0 + t * dy;
            let u = trace(y);
            for (n, pn) in p.iter_mut().enumerate() {
                *pn += u * basis.phi(n, y) * (w * dy);
            }
        }
    }
    p
}

/// One-call decomposition of a cross-section trace into scattering
/// coefficients. Uses one transverse projection beyond the propagating
/// set to estimate evanescent contamination.
pub fn extract_coefficients(
    basis: &ModeBasis,
    trace: &dyn Fn(f64) -> Complex64,
    x_c: f64,
    side: Side,
    incident: Option<usize>,
    ref_halfwidth: f64,
) -> Result<ModeCoefficients> {
    let n_proj = (basis.propagating_count() + 1).min(basis.n_modes());
    let projections = project_trace(basis, trace, n_proj, 64);
    coefficients_from_projections(basis, &projections, x_c, side, incident, ref_halfwidth)
}
