//! Certified two-sided enclosures for eigenvalues of bilinear-form
//! eigenproblems M(u,v) = lambda N(u,v), including the positive
//! semi-definite cases, and for the polynomial-projection error constants
//! C_k they control.
//!
//! The pipeline: nonconforming (Crouzeix-Raviart) finite elements give
//! discrete eigenvalues that convert into certified lower bounds through an
//! explicit interpolation constant; conforming quadratic elements give upper
//! bounds by the min-max principle; interval arithmetic with outward
//! rounding and verified LDL^T inertia counts make both directions rigorous.
//!
//! ```no_run
//! use eigenbounds::bounds::{constant_enclosure_pipeline, Mode, RunConfig};
//! use eigenbounds::mesh::DomainId;
//!
//! let cfg = RunConfig {
//!     domain: DomainId::K1,
//!     degree: 0,
//!     refine_level: 5,
//!     mode: Mode::Rigorous,
//!     count: 1,
//! };
//! let enclosure = constant_enclosure_pipeline(&cfg).unwrap();
//! assert!(enclosure.lo <= enclosure.hi);
//! ```

pub mod assembly;
pub mod bounds;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod polyint;
pub mod rigor;
pub mod scalar;

pub use error::{Error, Result};
