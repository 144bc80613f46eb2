use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {index} has degree {degree}, expected 1")]
    NonUnitDegree { index: usize, degree: i64 },
    #[error("points span a sublattice of rank {found}, expected {expected}")]
    RankDeficient { expected: usize, found: usize },
    #[error("extreme ray {0:?} of the cone is not among the points")]
    MissingRay(Vec<i64>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("triangulations are not related by a single circuit flip: {0}")]
    NotAdjacent(String),
    #[error("index set {0:?} is not a cone of the triangulation")]
    NotACone(Vec<usize>),
    #[error("no lift with the prescribed fractional parts: {0}")]
    Infeasible(String),
    #[error("element with zero scalar part is not invertible")]
    NotInvertible,
    #[error("point {0} lies on the branch cut of the principal logarithm")]
    BranchCut(String),
    #[error("series tail does not decay (fitted ratio {ratio:.3})")]
    DivergenceSuspected { ratio: f64 },
    #[error("lattice point is not in the interior of the cone")]
    NonInteriorPoint,
    #[error("cannot place arg y inside (-2pi, 0): {0}")]
    InfeasibleArgs(String),
    #[error("evaluation point is within {distance:.3e} of a pole")]
    PoleProximity { distance: f64 },
    #[error("a pole lies on the integration contour: {0}")]
    PoleOnContour(String),
    #[error("contour tail bound violated: {0}")]
    TailBoundViolated(String),
    #[error("epsilon poles failed to cancel (principal part norm {norm:.3e})")]
    UncancelledPole { norm: f64 },
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("pairing '{0}' is not implemented (needs Euler characteristic pairings on both sides)")]
    UnimplementedPairing(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
