//! Closed-form design recipe for the two-ligament mode converter.
//!
//! In the two-mode band `pi < omega < 2 pi` a thin ligament of width
//! `epsilon` grafted onto the junction wall at ordinate `y` acts, at leading
//! order, as a point-coupled resonator. Its half problem (Neumann or
//! Dirichlet condition on the symmetry plane) reflects the two propagating
//! modes with the 2x2 matrix
//!
//! `r11 = (K-1)/(K+1)`, `r12 = r21 = -2 c sqrt(2 b1/b2)/(K+1)`,
//! `r22 = (1-K)/(1+K)`, where `c = cos(pi y)` and `K = 2 b1 c^2 / b2`,
//!
//! provided the ligament length sits exactly on a resonance of the limit
//! 1D problem: `omega l = pi (m + 1/2)` for the Neumann end condition,
//! `omega l = pi m` for the Dirichlet one. The matrix is unitary for every
//! `K`, and at the coupling `K = 1`, reached when `cos^2(pi y) = b2/(2 b1)`,
//! it degenerates to a pure antidiagonal exchange of the two modes.
//!
//! Placing the Neumann-resonant ligament at the `K = 1` ordinate with
//! `cos(pi y) < 0` and the Dirichlet-resonant one at the mirror ordinate
//! `1 - y` makes the half-problem reflection matrices `(0,1;1,0)` and
//! `(0,-1;-1,0)`; recombining them gives zero reflection and full
//! conversion between the two modes of the assembled waveguide.
//!
//! At finite `epsilon` the resonance length shifts: the corrected lengths
//!
//! `l_eps = l_crit - epsilon (|ln eps|/pi + C_Xi + Re Gamma)`
//!
//! re-center the resonance, with `C_Xi` the junction constant of the
//! strip/half-plane boundary layer and `Gamma` the finite part of the
//! half-channel Green's function at the attachment point (see
//! [`crate::constants`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bend, LigamentSpec, WaveguideGeometry, GAP_HALFWIDTH};
use crate::modes::ModeBasis;

/// Fraction of the critical length beyond which the finite-width length
/// correction leaves the asymptotic regime.
pub const CORRECTION_BUDGET: f64 = 0.2;

/// Real propagation constants `(beta_1, beta_2)` of the two propagating
/// modes, rejecting frequencies outside the two-mode band.
fn two_mode_betas(omega: f64) -> Result<(f64, f64)> {
    let basis = ModeBasis::new(omega, 3)?;
    if basis.propagating_count() != 2 {
        return Err(Error::Config(format!(
            "omega = {omega} carries {} propagating modes, the design recipe needs exactly 2",
            basis.propagating_count()
        )));
    }
    Ok((basis.beta(0).re, basis.beta(1).re))
}

/// Coupling ratio `K = 2 beta_1 cos^2(pi y) / beta_2` of an attachment at
/// ordinate `y`. `K = 0` decouples the resonator from mode 1 and `K -> inf`
/// from mode 2; `K = 1` balances them.
pub fn coupling_ratio(omega: f64, y: f64) -> Result<f64> {
    let (b1, b2) = two_mode_betas(omega)?;
    let c = (std::f64::consts::PI * y).cos();
    Ok(2.0 * b1 * c * c / b2)
}

/// The unique attachment pair `(y_minus, y_plus)` in `(0, 1)` with
/// `cos^2(pi y) = beta_2 / (2 beta_1)`, `cos(pi y_minus) < 0` and
/// `cos(pi y_plus) > 0`. The pair is mirror-symmetric: `y_plus = 1 - y_minus`.
pub fn attachment_ordinates(omega: f64) -> Result<(f64, f64)> {
    let (b1, b2) = two_mode_betas(omega)?;
    let c2 = b2 / (2.0 * b1);
    debug_assert!(c2 < 1.0, "cos^2 target {c2} out of range");
    let y_plus = (c2.sqrt()).acos() / std::f64::consts::PI;
    Ok((1.0 - y_plus, y_plus))
}

/// Critical resonance lengths `(l_minus, l_plus)` of the two ligaments:
/// `omega l_minus = pi (m_minus + 1/2)` (Neumann-resonant) and
/// `omega l_plus = pi m_plus` (Dirichlet-resonant). Lengths that cannot
/// reach the symmetry plane are rejected.
pub fn resonance_lengths(omega: f64, m_minus: u32, m_plus: u32) -> Result<(f64, f64)> {
    two_mode_betas(omega)?;
    if m_plus < 1 {
        return Err(Error::Config(
            "the Dirichlet-resonant index m_plus must be at least 1".into(),
        ));
    }
    let l_minus = std::f64::consts::PI * (m_minus as f64 + 0.5) / omega;
    let l_plus = std::f64::consts::PI * m_plus as f64 / omega;
    for &length in &[l_minus, l_plus] {
        if length <= GAP_HALFWIDTH {
            return Err(Error::LigamentTooShort {
                length,
                min: GAP_HALFWIDTH,
            });
        }
    }
    Ok((l_minus, l_plus))
}

/// Asymptotic constants consumed by the length correction, reduced to the
/// three numbers the recipe needs. Produced by [`crate::constants`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DesignConstants {
    /// Junction constant of the strip/half-plane boundary layer.
    pub c_xi: f64,
    /// `Re Gamma` at the upper (Neumann-resonant) attachment.
    pub re_gamma_minus: f64,
    /// `Re Gamma` at the lower (Dirichlet-resonant) attachment.
    pub re_gamma_plus: f64,
}

/// Length shift `epsilon (|ln eps|/pi + C_Xi + Re Gamma)` that re-centers a
/// ligament resonance at width `epsilon`. Zero at `epsilon = 0`.
pub fn length_correction(epsilon: f64, c_xi: f64, re_gamma: f64) -> f64 {
    if epsilon == 0.0 {
        return 0.0;
    }
    epsilon * (epsilon.ln().abs() / std::f64::consts::PI + c_xi + re_gamma)
}

/// Detuning parameter `eta = omega (|ln eps|/pi + C_Xi + Re Gamma + l')` of
/// a ligament of length `l = l_crit + epsilon l'`. The corrected length is
/// exactly the root `eta = 0`.
pub fn detuning(
    omega: f64,
    epsilon: f64,
    length: f64,
    length_critical: f64,
    c_xi: f64,
    re_gamma: f64,
) -> f64 {
    let l_prime = (length - length_critical) / epsilon;
    omega * (epsilon.ln().abs() / std::f64::consts::PI + c_xi + re_gamma + l_prime)
}

/// Complete output of the design recipe at one `(omega, epsilon)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignSpec {
    pub omega: f64,
    pub epsilon: f64,
    pub m_minus: u32,
    pub m_plus: u32,
    /// Upper attachment ordinate (`cos(pi y) < 0`), Neumann-resonant.
    pub y_minus: f64,
    /// Lower attachment ordinate, `1 - y_minus`, Dirichlet-resonant.
    pub y_plus: f64,
    /// Critical resonance lengths at `epsilon = 0`.
    pub ell_minus: f64,
    pub ell_plus: f64,
    /// Width-corrected lengths actually built.
    pub ell_minus_eps: f64,
    pub ell_plus_eps: f64,
    pub constants: DesignConstants,
    /// Raised when a correction consumes more than [`CORRECTION_BUDGET`] of
    /// its critical length and the asymptotic regime becomes questionable.
    pub asymptotic_warning: bool,
}

impl DesignSpec {
    pub fn new(
        omega: f64,
        epsilon: f64,
        m_minus: u32,
        m_plus: u32,
        constants: DesignConstants,
    ) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "ligament width must be nonnegative, got {epsilon}"
            )));
        }
        let (y_minus, y_plus) = attachment_ordinates(omega)?;
        let (ell_minus, ell_plus) = resonance_lengths(omega, m_minus, m_plus)?;
        let corr_minus = length_correction(epsilon, constants.c_xi, constants.re_gamma_minus);
        let corr_plus = length_correction(epsilon, constants.c_xi, constants.re_gamma_plus);
        let ell_minus_eps = ell_minus - corr_minus;
        let ell_plus_eps = ell_plus - corr_plus;
        for &length in &[ell_minus_eps, ell_plus_eps] {
            if length <= GAP_HALFWIDTH {
                return Err(Error::LigamentTooShort {
                    length,
                    min: GAP_HALFWIDTH,
                });
            }
        }
        let asymptotic_warning = corr_minus.abs() > CORRECTION_BUDGET * ell_minus
            || corr_plus.abs() > CORRECTION_BUDGET * ell_plus;
        Ok(Self {
            omega,
            epsilon,
            m_minus,
            m_plus,
            y_minus,
            y_plus,
            ell_minus,
            ell_plus,
            ell_minus_eps,
            ell_plus_eps,
            constants,
            asymptotic_warning,
        })
    }

    /// Ligament pair realizing the recipe, bent away from each other so the
    /// tubes clear the mid-gap. Lengths may be overridden, e.g. with
    /// sweep-refined optima.
    pub fn ligaments_with_lengths(&self, ell_minus: f64, ell_plus: f64) -> (LigamentSpec, LigamentSpec) {
        (
            LigamentSpec {
                y_attach: self.y_minus,
                length: ell_minus,
                width: self.epsilon,
                bend: Bend::Up,
            },
            LigamentSpec {
                y_attach: self.y_plus,
                length: ell_plus,
                width: self.epsilon,
                bend: Bend::Down,
            },
        )
    }

    pub fn ligaments(&self) -> (LigamentSpec, LigamentSpec) {
        self.ligaments_with_lengths(self.ell_minus_eps, self.ell_plus_eps)
    }

    /// Assembled waveguide geometry at the corrected lengths.
    pub fn geometry(&self, truncation: f64) -> Result<WaveguideGeometry> {
        let (minus, plus) = self.ligaments();
        WaveguideGeometry::with_ligaments(minus, plus, truncation)
    }
}

/// Leading-order half-problem reflection matrix of a single resonant
/// ligament attached at ordinate `y`. The same closed form covers the
/// Neumann-resonant and Dirichlet-resonant cases, each evaluated at its own
/// attachment; entries are real.
pub fn predicted_half_matrix(omega: f64, y: f64) -> Result<[[Complex64; 2]; 2]> {
    let (b1, b2) = two_mode_betas(omega)?;
    let c = (std::f64::consts::PI * y).cos();
    let k = 2.0 * b1 * c * c / b2;
    let r11 = (k - 1.0) / (k + 1.0);
    let r12 = -2.0 * c * (2.0 * b1 / b2).sqrt() / (k + 1.0);
    Ok([
        [Complex64::new(r11, 0.0), Complex64::new(r12, 0.0)],
        [Complex64::new(r12, 0.0), Complex64::new(-r11, 0.0)],
    ])
}

/// Leading-order resonant amplitudes `(a_1, a_2)` of the ligament field for
/// incidence of mode 1 and mode 2: the field inside the ligament scales as
/// `a / epsilon`.
pub fn resonant_amplitudes(omega: f64, y: f64) -> Result<[Complex64; 2]> {
    let (b1, b2) = two_mode_betas(omega)?;
    let c = (std::f64::consts::PI * y).cos();
    let k = 2.0 * b1 * c * c / b2;
    Ok([
        Complex64::new(0.0, 2.0 / (b1.sqrt() * (1.0 + k))),
        Complex64::new(0.0, 2.0 * std::f64::consts::SQRT_2 * c / (b2.sqrt() * (1.0 + k))),
    ])
}

/// Mode-1 resonant amplitude at detuning `eta`, solving
/// `a (eta + i (1 + K)) = -2 / sqrt(beta_1)`. Reduces to the resonant value
/// at `eta = 0` and decays like `1/eta` off resonance.
pub fn detuned_amplitude(omega: f64, y: f64, eta: f64) -> Result<Complex64> {
    let (b1, b2) = two_mode_betas(omega)?;
    let c = (std::f64::consts::PI * y).cos();
    let k = 2.0 * b1 * c * c / b2;
    Ok(Complex64::new(-2.0 / b1.sqrt(), 0.0) / Complex64::new(eta, 1.0 + k))
}
