//! Waveguide geometry: two half-channels bridged by thin curved ligaments.
//!
//! The computational half-domain consists of the left channel
//! `(-R, -1/2) x (0, 1)` and, for each ligament, a tube of width `epsilon`
//! around a centerline that starts on the junction wall at `A = (-1/2, y)`
//! with a horizontal tangent and ends on the symmetry plane `x = 0`, again
//! with a horizontal tangent. The full domain is the mirror image of the
//! half-domain across `x = 0`.
//!
//! Centerlines are parametrized by arc length through their tangent angle,
//!
//! `theta(s) = bend * alpha * sin(2 pi s / L)`,
//!
//! which makes the arc length exact by construction, keeps the end tangents
//! horizontal, and spreads curvature evenly (max curvature `2 pi alpha / L`)
//! so that width offsets stay embedded even for the widest tubes of
//! interest. The single shape parameter `alpha` is resolved from the
//! requirement that the horizontal span of the curve equals the gap
//! half-width `1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::GAUSS6;

/// Horizontal gap half-width bridged by every ligament.
pub const GAP_HALFWIDTH: f64 = 0.5;

/// Largest admissible shape parameter. Beyond this the horizontal span
/// integral flattens out (first Bessel zero at 2.405) and tubes curl up on
/// themselves, so longer ligaments are rejected as unbuildable.
const ALPHA_MAX: f64 = 2.2;

/// Bend orientation of a ligament centerline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bend {
    /// Excursion towards larger `y`.
    Up,
    /// Excursion towards smaller `y`.
    Down,
}

impl Bend {
    pub fn sign(self) -> f64 {
        match self {
            Bend::Up => 1.0,
            Bend::Down => -1.0,
        }
    }
}

/// User-facing description of one ligament.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LigamentSpec {
    /// Attachment ordinate on the junction wall, in (0, 1).
    pub y_attach: f64,
    /// Arc half-length of the ligament, from the wall to the symmetry plane.
    pub length: f64,
    /// Tube width `epsilon`.
    pub width: f64,
    pub bend: Bend,
}

/// Arc-length parametrized centerline with horizontal end tangents.
#[derive(Debug, Clone)]
pub struct Centerline {
    y_attach: f64,
    length: f64,
    alpha: f64,
    bend: f64,
}

impl Centerline {
    /// Resolves the shape parameter so the curve spans the gap exactly.
    pub fn build(y_attach: f64, length: f64, bend: Bend) -> Result<Self> {
        if length <= GAP_HALFWIDTH {
            return Err(Error::LigamentTooShort {
                length,
                min: GAP_HALFWIDTH,
            });
        }
        // Horizontal span is length * J0(alpha); J0 decreases from 1 on
        // [0, ALPHA_MAX], so bisection is safe.
        let span = |alpha: f64| length * bessel_j0(alpha);
        if span(ALPHA_MAX) > GAP_HALFWIDTH {
            return Err(Error::LigamentDoesNotFit(format!(
                "length {length} exceeds the maximum reachable arc ({:.3}) across the gap",
                GAP_HALFWIDTH / bessel_j0(ALPHA_MAX)
            )));
        }
        let (mut lo, mut hi) = (0.0, ALPHA_MAX);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if span(mid) > GAP_HALFWIDTH {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let alpha = 0.5 * (lo + hi);
        let cl = Self {
            y_attach,
            length,
            alpha,
            bend: bend.sign(),
        };
        let end = cl.point(length);
        debug_assert!((end[0] - 0.0).abs() < 1e-11, "span residual {}", end[0]);
        Ok(cl)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn y_attach(&self) -> f64 {
        self.y_attach
    }

    /// Tangent angle at arc length `s`.
    pub fn tangent_angle(&self, s: f64) -> f64 {
        self.bend * self.alpha * (2.0 * std::f64::consts::PI * s / self.length).sin()
    }

    /// Signed curvature at arc length `s`.
    pub fn curvature(&self, s: f64) -> f64 {
        self.bend * self.alpha * 2.0 * std::f64::consts::PI / self.length
            * (2.0 * std::f64::consts::PI * s / self.length).cos()
    }

    pub fn max_curvature(&self) -> f64 {
        self.alpha * 2.0 * std::f64::consts::PI / self.length
    }

    /// Unit normal (left of the tangent) at arc length `s`.
    pub fn normal(&self, s: f64) -> [f64; 2] {
        let th = self.tangent_angle(s);
        [-th.sin(), th.cos()]
    }

    /// Point at arc length `s`, with the attachment at `(-1/2, y_attach)`.
    pub fn point(&self, s: f64) -> [f64; 2] {
        self.points(&[s])[0]
    }

    /// Points at a sorted list of arc lengths, integrated cumulatively.
    pub fn points(&self, stations: &[f64]) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(stations.len());
        let mut x = -GAP_HALFWIDTH;
        let mut y = self.y_attach;
        let mut s_prev = 0.0;
        for &s in stations {
            debug_assert!(s >= s_prev - 1e-14);
            // Sub-panel the interval so long gaps between stations keep
            // quadrature error at machine level.
            let panels = 1 + ((s - s_prev) / 0.05) as usize;
            let ds = (s - s_prev) / panels as f64;
            for k in 0..panels {
                let a = s_prev + k as f64 * ds;
                for &(t, w) in &GAUSS6 {
                    let th = self.tangent_angle(a + t * ds);
                    x += th.cos() * w * ds;
                    y += th.sin() * w * ds;
                }
            }
            s_prev = s;
            out.push([x, y]);
        }
        out
    }
}

/// `J0(x)` on `[0, ALPHA_MAX]` via its integral representation; plenty of
/// accuracy for the bracketed root-find above.
fn bessel_j0(x: f64) -> f64 {
    let mut acc = 0.0;
    let panels = 32;
    let dv = std::f64::consts::PI / panels as f64;
    for k in 0..panels {
        for &(t, w) in &GAUSS6 {
            let v = (k as f64 + t) * dv;
            acc += (x * v.sin()).cos() * w * dv;
        }
    }
    acc / std::f64::consts::PI
}

/// Fully validated ligament: spec plus resolved centerline.
#[derive(Debug, Clone)]
pub struct Ligament {
    pub spec: LigamentSpec,
    pub centerline: Centerline,
}

impl Ligament {
    pub fn new(spec: LigamentSpec) -> Result<Self> {
        if spec.width <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "ligament width must be positive, got {}",
                spec.width
            )));
        }
        if spec.y_attach - spec.width / 2.0 <= 1e-9
            || spec.y_attach + spec.width / 2.0 >= 1.0 - 1e-9
        {
            return Err(Error::InvalidGeometry(format!(
                "attachment at y = {} with width {} touches a channel wall",
                spec.y_attach, spec.width
            )));
        }
        let centerline = Centerline::build(spec.y_attach, spec.length, spec.bend)?;
        let kappa = centerline.max_curvature();
        if kappa * spec.width / 2.0 >= 0.9 {
            return Err(Error::LigamentDoesNotFit(format!(
                "width {} is too large for the centerline curvature {:.3}",
                spec.width, kappa
            )));
        }
        Ok(Self { spec, centerline })
    }
}

/// Complete device geometry. `ligaments` is empty for the straight duct.
#[derive(Debug, Clone)]
pub struct WaveguideGeometry {
    /// Channel truncation abscissa: the meshed half-domain starts at `-R`.
    pub truncation: f64,
    /// Junction half-width: `1/2` with ligaments, `0` for the duct, also
    /// the phase reference for scattering coefficients.
    pub halfwidth: f64,
    pub ligaments: Vec<Ligament>,
}

impl WaveguideGeometry {
    /// Unobstructed duct `(-R, R) x (0, 1)`; its scattering matrix is the
    /// identity and serves as the solver oracle.
    pub fn straight_duct(truncation: f64) -> Result<Self> {
        if truncation <= 0.1 {
            return Err(Error::InvalidGeometry(format!(
                "duct truncation {truncation} is too small"
            )));
        }
        Ok(Self {
            truncation,
            halfwidth: 0.0,
            ligaments: Vec::new(),
        })
    }

    /// Two-ligament device. `minus` is conventionally the upper attachment
    /// (the one tuned to a Neumann half-problem resonance), `plus` the
    /// lower, but any disjoint admissible pair is accepted.
    pub fn with_ligaments(
        minus: LigamentSpec,
        plus: LigamentSpec,
        truncation: f64,
    ) -> Result<Self> {
        if truncation < GAP_HALFWIDTH + 0.1 {
            return Err(Error::InvalidGeometry(format!(
                "truncation {truncation} leaves no channel left of the junction wall"
            )));
        }
        let lig_minus = Ligament::new(minus)?;
        let lig_plus = Ligament::new(plus)?;
        let min_gap = (minus.width + plus.width) / 2.0;
        if (minus.y_attach - plus.y_attach).abs() <= min_gap + 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "attachments y = {} and y = {} overlap on the junction wall",
                minus.y_attach, plus.y_attach
            )));
        }
        check_tube_separation(&lig_minus, &lig_plus)?;
        Ok(Self {
            truncation,
            halfwidth: GAP_HALFWIDTH,
            ligaments: vec![lig_minus, lig_plus],
        })
    }

    /// Single-ligament device, used to probe one resonator in isolation.
    pub fn single_ligament(spec: LigamentSpec, truncation: f64) -> Result<Self> {
        if truncation < GAP_HALFWIDTH + 0.1 {
            return Err(Error::InvalidGeometry(format!(
                "truncation {truncation} leaves no channel left of the junction wall"
            )));
        }
        let ligament = Ligament::new(spec)?;
        Ok(Self {
            truncation,
            halfwidth: GAP_HALFWIDTH,
            ligaments: vec![ligament],
        })
    }

    pub fn is_duct(&self) -> bool {
        self.ligaments.is_empty()
    }
}

fn check_tube_separation(a: &Ligament, b: &Ligament) -> Result<()> {
    let n = 160;
    let stations_a: Vec<f64> = (0..=n)
        .map(|k| a.spec.length * k as f64 / n as f64)
        .collect();
    let stations_b: Vec<f64> = (0..=n)
        .map(|k| b.spec.length * k as f64 / n as f64)
        .collect();
    let pa = a.centerline.points(&stations_a);
    let pb = b.centerline.points(&stations_b);
    let clearance = (a.spec.width + b.spec.width) / 2.0 * 1.2;
    let mut min_d2 = f64::INFINITY;
    for p in &pa {
        for q in &pb {
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if d2 < min_d2 {
                min_d2 = d2;
            }
        }
    }
    if min_d2.sqrt() <= clearance {
        return Err(Error::InvalidGeometry(format!(
            "ligament tubes come within {:.4} of each other (need > {:.4})",
            min_d2.sqrt(),
            clearance
        )));
    }
    Ok(())
}
