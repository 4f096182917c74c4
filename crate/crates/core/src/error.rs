//! Error type shared by every stage, with the process exit code each one maps to.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("expression error: {0}")]
    Expr(String),

    #[error("degeneracy curves are not transversal at the corner (slope gap {gap:.3e})")]
    TransversalityViolation { gap: f64 },
    #[error("grid does not cover the outer radius: covers {covered}, needs {required}")]
    CoverageError { covered: f64, required: f64 },
    #[error("marching direction does not enter hyperbolic component `{component}`")]
    OrientationFailure { component: String },
    #[error("curve does not pass through grid nodes: {0}")]
    CurveOffGrid(String),

    #[error("mask too thin for a {needed}-point stencil at node ({i}, {j})")]
    MaskTooThin { i: usize, j: usize, needed: usize },
    #[error("det D^2u / K is unbounded near the degeneracy set (|det D^2u| = {value:.3e} where K = 0)")]
    DivisionByDegeneracy { value: f64 },

    #[error("linear solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    SolverDivergence { iterations: usize, residual: f64 },
    #[error("maximum principle violated: min u = {min:.3e}")]
    MaximumPrincipleViolation { min: f64 },
    #[error("continuation gaps failed to decrease: {gaps:?}")]
    ContinuationStall { gaps: Vec<f64> },
    #[error("singular system at degree {degree} (pivot {pivot:.3e})")]
    SingularSystem { degree: usize, pivot: f64 },

    #[error("corner is characteristic: |1 - a kappa_x^2| = {value:.3e}")]
    CharacteristicCorner { value: f64 },
    #[error("Cauchy data incompatible at order {order}: residual {residual:.3e} > tol {tol:.3e}")]
    IncompatibleData { order: usize, residual: f64, tol: f64 },

    #[error("step {dy:.3e} exceeds the CFL limit {limit:.3e}")]
    CflViolation { dy: f64, limit: f64 },
    #[error("instability at y = {y:.4}: max |u| = {max:.3e} exceeds {threshold:.3e}")]
    InstabilityDetected { y: f64, max: f64, threshold: f64 },

    #[error("glue defect {defect:.3e} exceeds {tol:.3e}")]
    GlueDefectExceeded { defect: f64, tol: f64 },

    #[error("coordinate transform folds: min d1 y1 = {min:.3e}")]
    TransformDegenerate { min: f64 },
    #[error("residual stagnated at level {level}: {history:?}")]
    ResidualStagnation { level: usize, history: Vec<f64> },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Config(_) | Expr(_) => 2,
            TransversalityViolation { .. }
            | CoverageError { .. }
            | OrientationFailure { .. }
            | CurveOffGrid(_) => 3,
            MaskTooThin { .. } | DivisionByDegeneracy { .. } => 4,
            SolverDivergence { .. }
            | MaximumPrincipleViolation { .. }
            | ContinuationStall { .. }
            | SingularSystem { .. } => 5,
            CharacteristicCorner { .. } | IncompatibleData { .. } => 6,
            CflViolation { .. } | InstabilityDetected { .. } => 7,
            GlueDefectExceeded { .. } => 8,
            TransformDegenerate { .. } | ResidualStagnation { .. } => 9,
            Io(_) => 1,
        }
    }

    /// Short machine-readable name, used in reports.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            Config(_) => "config",
            Expr(_) => "expression",
            TransversalityViolation { .. } => "transversality_violation",
            CoverageError { .. } => "coverage",
            OrientationFailure { .. } => "orientation",
            CurveOffGrid(_) => "curve_off_grid",
            MaskTooThin { .. } => "mask_too_thin",
            DivisionByDegeneracy { .. } => "division_by_degeneracy",
            SolverDivergence { .. } => "solver_divergence",
            MaximumPrincipleViolation { .. } => "maximum_principle_violation",
            ContinuationStall { .. } => "continuation_stall",
            SingularSystem { .. } => "singular_system",
            CharacteristicCorner { .. } => "characteristic_corner",
            IncompatibleData { .. } => "incompatible_data",
            CflViolation { .. } => "cfl_violation",
            InstabilityDetected { .. } => "instability",
            GlueDefectExceeded { .. } => "glue_defect",
            TransformDegenerate { .. } => "transform_degenerate",
            ResidualStagnation { .. } => "residual_stagnation",
            Io(_) => "io",
        }
    }
}
