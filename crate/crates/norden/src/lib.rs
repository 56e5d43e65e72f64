//! Dense-tensor verification toolkit for almost complex manifolds with
//! Norden metric.
//!
//! The crate builds concrete finite-dimensional instances (left-invariant
//! structures on Lie groups, or polynomial coordinate charts), computes the
//! canonical, B- and KT-connections together with their torsion and
//! curvature, and verifies the identities relating them with explicit
//! residuals and tolerances.
//!
//! The narrative guide lives in `book/`; its code blocks compile and run as
//! doctests of this crate, so the guide cannot drift from the API.
//!
//! ```
//! use norden::{forge, frame, report, Tolerances};
//!
//! // a quasi-Kähler instance on a 4-dimensional Lie algebra
//! let (structure, frame_model) = forge::quasi_kahler_search(2, 7, 100)?;
//! let conn = frame::levi_civita(&structure, &frame_model)?;
//! let nj = frame::nabla_j(&conn, &structure, &frame_model);
//! assert!(nj.max_abs() > 0.0);
//!
//! // run the whole verification registry
//! let rep = report::verify_instance(
//!     "example", &structure, &frame_model, None, Tolerances::default(), None)?;
//! assert!(rep.all_pass());
//! # Ok::<(), norden::NordenError>(())
//! ```

pub mod connection;
pub mod curvature;
pub mod error;
pub mod forge;
pub mod frame;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod report;
pub mod tensor;
pub mod tol;

pub use error::{NordenError, Result};
pub use model::{FrameModel, NordenStructure};
pub use tensor::{apply_j, contract, raise_lower, DenseTensor, RaiseLower, Variance};
pub use tol::Tolerances;

// Book chapters double as doctests: every fenced Rust block in the guide is
// compiled and executed by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/first-order.md")]
    mod first_order {}
    #[doc = include_str!("../../../book/src/connections.md")]
    mod connections {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
}
