//! Design and verification toolkit for thin-ligament waveguide mode converters.
//!
//! The device under study is a planar acoustic waveguide of unit height,
//! operated at a frequency where exactly two modes propagate. Two thin
//! resonant channels ("ligaments") of width `epsilon` connect the two
//! half-waveguides across a gap. When the ligament lengths sit on narrow
//! resonance peaks and the attachment ordinates satisfy a closed-form
//! coupling condition, the device converts an incoming piston mode into the
//! second mode with near-unit efficiency.
//!
//! The crate provides:
//!
//! * closed-form design of attachment points and resonance lengths,
//!   including the logarithmic length corrections driven by two auxiliary
//!   constants (a junction boundary-layer constant and the regular part of
//!   a half-waveguide Green's function),
//! * a P2 finite element solver for the time-harmonic scattering problem
//!   with modal transparent boundary conditions, used to verify designs,
//! * mirror-symmetry decomposition of the full scattering problem into two
//!   half-domain problems with Neumann / Dirichlet caps,
//! * a deterministic sweep/refine optimizer over the two ligament lengths.
//!
//! Geometry convention: the left half-waveguide occupies `x < -1/2`, the
//! right one `x > 1/2`, and the ligaments bridge the gap symmetrically about
//! `x = 0`. Scattering coefficients are phase-referenced to the junction
//! walls at `x = ±1/2`.

pub mod constants;
pub mod design;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod modes;
pub mod optimize;
pub mod report;
pub mod scattering;
pub mod solver;

pub use error::{Error, Result};
