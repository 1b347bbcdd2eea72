//! Error type shared by all subsystems.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested frequency is too close to a modal cut-off, where the
    /// propagation constant of some mode vanishes and normalization blows up.
    #[error("cut-off wavenumber: omega = {omega} is within {tol} of n*pi (n = {n})")]
    CutoffWavenumber { omega: f64, n: usize, tol: f64 },

    /// No admissible centerline reaches the symmetry plane with the
    /// requested arc length.
    #[error("ligament does not fit: {0}")]
    LigamentDoesNotFit(String),

    /// A ligament shorter than the gap half-width cannot reach `x = 0`.
    #[error("ligament cannot reach symmetry axis: length {length} <= {min}")]
    LigamentTooShort { length: f64, min: f64 },

    /// Geometric validation failed (overlapping tubes, wall collision, ...).
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A propagating-mode index was expected.
    #[error("mode {mode} is not propagating at omega = {omega}")]
    NotPropagating { mode: usize, omega: f64 },

    /// Mesh generation produced an inverted or degenerate element.
    #[error("degenerate triangles: {0}")]
    DegenerateMesh(String),

    /// The direct solver hit a vanishing pivot; the discrete system is
    /// singular, which for this problem class means an exact interior
    /// resonance or a broken mesh.
    #[error("resonant or degenerate system: pivot {pivot:.3e} below threshold at dof {dof}")]
    SingularSystem { pivot: f64, dof: usize },

    /// Two runs whose metadata disagree were handed to a routine that
    /// requires matching discretizations.
    #[error("incomparable runs: {0}")]
    IncomparableRuns(String),

    /// The cut-off ball of the singularity subtraction touches boundary
    /// parts other than the attachment wall.
    #[error("cutoff too large: radius {radius} vs clearance {clearance}")]
    CutoffTooLarge { radius: f64, clearance: f64 },

    /// A refinement or extrapolation sequence failed to settle.
    #[error("extrapolation did not converge: {0}")]
    NonConvergent(String),

    /// Configuration file or CLI parameter rejected.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
