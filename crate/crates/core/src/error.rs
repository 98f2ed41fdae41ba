use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The variants are grouped so that callers (the CLI in particular) can map
/// them onto "invalid input" versus "numerical failure".
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate cell {cell}: signed volume {volume:.3e} (min dihedral angle {min_dihedral_deg:.2} deg)")]
    DegenerateCell { cell: usize, volume: f64, min_dihedral_deg: f64 },

    #[error("mesh is not watertight: {0}")]
    NotWatertight(String),

    #[error("over-refinement: cell volume {volume:.3e} below 1e-14")]
    OverRefinement { volume: f64 },

    #[error("patch under-resolved: only {found} facets inside the scaled patch (need at least {required})")]
    UnderResolvedPatch { found: usize, required: usize },

    #[error("patch overflows the flat face: patch radius {patch_radius:.4} >= face radius {face_radius:.4}")]
    PatchOverflow { patch_radius: f64, face_radius: f64 },

    #[error("invalid patch geometry: {0}")]
    InvalidPatch(String),

    #[error("empty free set: every vertex is constrained")]
    EmptyFreeSet,

    #[error("matrix is not positive definite (Cholesky failed)")]
    NotPositiveDefinite,

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Krylov breakdown after {steps} block steps with {converged} of {wanted} eigenpairs converged")]
    KrylovBreakdown { steps: usize, converged: usize, wanted: usize },

    #[error("field has zero mass norm")]
    ZeroNorm,

    #[error("radius {radius:.4} under-resolved (local mesh size {local_h:.4}, need r >= {factor} h)")]
    UnderResolvedRadius { radius: f64, local_h: f64, factor: f64 },

    #[error("radii under-resolved (need r >= {factor} local h): {radii:?}")]
    UnderResolvedRadii { radii: Vec<f64>, factor: f64 },

    #[error("radius {0:.4} lies outside the meshed region")]
    OutsideMesh(f64),

    #[error(
        "H(v, r) = {value:.3e} vanishes at r = {radius:.4}; a nonzero eigenfield cannot have vanishing boundary mass"
    )]
    VanishingH { radius: f64, value: f64 },

    #[error("ill-conditioned fit: condition estimate {condition:.3e}")]
    IllConditioned { condition: f64 },

    #[error("truncation failure: m(R) not monotone, m({r_small}) = {m_small:.6e} < m({r_large}) = {m_large:.6e}")]
    NonMonotoneTruncation { r_small: f64, m_small: f64, r_large: f64, m_large: f64 },

    #[error("eigenvalue {index} is not simple enough: relative gap {gap:.3e} below {threshold:.1e}")]
    NotSimple { index: usize, gap: f64, threshold: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error comes from bad input rather than from the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InvalidPatch(_)
                | Error::PatchOverflow { .. }
                | Error::Parse(_)
                | Error::Unsupported(_)
                | Error::UnderResolvedRadius { .. }
                | Error::UnderResolvedRadii { .. }
                | Error::OutsideMesh(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
