//! Numerical engine for odd symplectic supergeometry on Cartan-Koszul
//! supermanifolds: exterior and supermatrix algebra, pointwise chart
//! geometry, the graded calculus of derivations, superconnections with
//! their symmetry/compatibility constraint systems, and graded curvature
//! up to the odd symplectic scalar supercurvature.

pub mod chart;
pub mod error;
pub mod exterior;
pub mod frame;
pub mod linalg;
pub mod supermatrix;

pub use error::{GeoError, Result};
pub use exterior::{Ext, ExtJet1, ExtJet2};
pub use frame::{FormKind, PointFrame};
pub use supermatrix::{Parity, SuperMatrix};

pub mod derivation;
pub mod scenario;
pub mod superform;
pub mod superconn;
pub mod supercurv;
