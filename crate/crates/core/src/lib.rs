//! Almost complex structures on `R^2n`, their Ishihara-Yano lift to the
//! cotangent bundle, and numerical checks of total reality for conormal
//! bundles of real hypersurfaces.

pub mod acs;
pub mod conormal;
pub mod error;
pub mod expr;
pub mod hypersurface;
pub mod lift;
pub mod linalg;
pub mod oracle;
pub mod parallel;
pub mod scenario;

pub use acs::{AlmostComplexStructure, NijenhuisComponents, Validation};
pub use conormal::{ConormalPoint, ConormalTangentBasis, IntersectionCheck, TotalReality};
pub use error::{Error, Result, Stage};
pub use expr::{parse, Expression, Jet2, MatrixField, MatrixJet};
pub use hypersurface::{DistributionFrame, Hypersurface, LeviClass, LeviReport, SurfaceGeometry};
pub use lift::{CotangentPoint, LiftedStructure};
pub use parallel::Execution;
