use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Variants are grouped by [`ErrorKind`], which front ends use to pick an
/// exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix dimensions must be at least 1x1, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian: max |A - A^H| = {residual:e} exceeds {bound:e}")]
    NotHermitian { residual: f64, bound: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("eigenvector basis is ill-conditioned (condition estimate {condition:e})")]
    IllConditionedBasis { condition: f64 },
    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("vectorization convention mismatch: expected {expected}, found {found}")]
    ConventionMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("operation requires a {expected} superoperator")]
    WrongSuperoperatorKind { expected: &'static str },

    #[error("{count} eigenvalues lie within the stationary tolerance {tol:e}")]
    DegenerateStationaryState { count: usize, tol: f64 },
    #[error("slowest mode eigenvalue has imaginary part {imag:e} above tolerance {tol:e}")]
    ComplexSlowMode { imag: f64, tol: f64 },
    #[error("slowest mode is not separated from the next: gap {gap:e} below {tol:e}")]
    DegenerateSlowMode { gap: f64, tol: f64 },
    #[error("slowest left mode is not Hermitian: residual {residual:e}")]
    NotHermitianSlowMode { residual: f64 },
    #[error("generator needs at least three modes, got {modes}")]
    TooFewModes { modes: usize },

    #[error("no eigenvalue of opposite sign and no zero eigenvalue")]
    NoOppositeSign,
    #[error("eigenvalues {first} and {second} do not have opposite signs")]
    SameSign { first: f64, second: f64 },
    #[error("the slow mode has a zero eigenvalue; use the permutation construction")]
    ZeroBranch,
    #[error("the slow mode has no zero eigenvalue within tolerance")]
    NoZeroEigenvalue,
    #[error("state vector is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid spin count {0}; need N >= 1")]
    InvalidSpinCount(usize),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("degenerate denominator 4*omega^2 + kappa^2 = {0}")]
    DegenerateDenominator(f64),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("step size {step:e} violates the stability bound {bound:e}")]
    StepTooLarge { step: f64, bound: f64 },
    #[error("fit window [{lo:e}, {hi:e}] holds fewer than two points")]
    WindowEmpty { hi: f64, lo: f64 },
}

/// Coarse classification of [`Error`] variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A modelling assumption (unique stationary state, real and isolated
    /// slow mode) does not hold.
    Assumption,
    /// The numerics failed or were handed inconsistent shapes.
    Numerical,
    /// Bad user-supplied parameters.
    Input,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            DegenerateStationaryState { .. }
            | ComplexSlowMode { .. }
            | DegenerateSlowMode { .. }
            | NotHermitianSlowMode { .. }
            | NoOppositeSign => ErrorKind::Assumption,
            InvalidSpinCount(_)
            | InvalidParameter { .. }
            | DegenerateDenominator(_)
            | InvalidTimeGrid(_)
            | NotNormalized { .. }
            | StepTooLarge { .. } => ErrorKind::Input,
            _ => ErrorKind::Numerical,
        }
    }

    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            ShapeMismatch { .. } => "SHAPE_MISMATCH",
            EmptyMatrix { .. } => "EMPTY_MATRIX",
            NonFinite { .. } => "NON_FINITE",
            NotHermitian { .. } => "NOT_HERMITIAN",
            NoConvergence { .. } => "NO_CONVERGENCE",
            IllConditionedBasis { .. } => "ILL_CONDITIONED_BASIS",
            Singular { .. } => "SINGULAR",
            ConventionMismatch { .. } => "CONVENTION_MISMATCH",
            WrongSuperoperatorKind { .. } => "WRONG_SUPEROPERATOR_KIND",
            DegenerateStationaryState { .. } => "DEGENERATE_STATIONARY_STATE",
            ComplexSlowMode { .. } => "COMPLEX_SLOW_MODE",
            DegenerateSlowMode { .. } => "DEGENERATE_SLOW_MODE",
            NotHermitianSlowMode { .. } => "NOT_HERMITIAN_SLOW_MODE",
            TooFewModes { .. } => "TOO_FEW_MODES",
            NoOppositeSign => "NO_OPPOSITE_SIGN",
            SameSign { .. } => "SAME_SIGN",
            ZeroBranch => "ZERO_BRANCH",
            NoZeroEigenvalue => "NO_ZERO_EIGENVALUE",
            NotNormalized { .. } => "NOT_NORMALIZED",
            IndexOutOfRange { .. } => "INDEX_OUT_OF_RANGE",
            InvalidSpinCount(_) => "INVALID_N",
            InvalidParameter { .. } => "INVALID_PARAMETER",
            DegenerateDenominator(_) => "DEGENERATE_DENOMINATOR",
            InvalidTimeGrid(_) => "INVALID_TIME_GRID",
            StepTooLarge { .. } => "STEP_TOO_LARGE",
            WindowEmpty { .. } => "WINDOW_EMPTY",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
