//! Better-behaved GKZ systems of toric wall-crossings: lattice combinatorics,
//! sector cohomology, Gamma series, Mellin-Barnes continuation and the
//! K-theoretic Fourier-Mukai transform, with numerical cross-checks.

pub mod algebra;
pub mod dual;
pub mod error;
pub mod fixture;
pub mod linalg;
pub mod quad;
pub mod series;
pub mod special;
pub mod toric;
pub mod verify;
pub mod wall;

pub use algebra::{AlgebraElement, OrbifoldCohomology, OrbifoldSum, SectorAlgebra};
pub use error::{Error, Result};
pub use fixture::Fixture;
pub use linalg::{CMatrix, Q};
pub use toric::{
    AdjacentSector, Circuit, Cone, EssentialMode, Lift, Side, ToricData, Triangulation,
    TwistedSector,
};
pub use wall::{ContourSpec, Deformation, KBasis, PathSpec, Provenance, TransformMatrix, WallSetup};
pub use verify::{VerificationReport, VerifyConfig};
