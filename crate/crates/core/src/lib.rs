//! Decide whether first and second moments of spin operators for total
//! spin `j` come from a quantum state.
//!
//! The crate is layered bottom-up:
//!
//! * [`matcore`]: complex Hermitian linear algebra (Jacobi eigensolver,
//!   partial traces, symmetric-subspace isometry).
//! * [`spinalg`]: spin operators, moment matrices, the 4x4 expectation value
//!   matrix and the rotational standard form.
//! * [`reduction`]: the two-qubit reduction of a spin-`j` state, renormalized
//!   coordinates, the reduced expectation value matrix and the PPT test.
//! * [`sdp`]: a dense primal-dual interior point SDP solver.
//! * [`feasibility`]: the decision procedures and witness extraction.
//! * [`scan`]: grid scans of the inner, exact and outer sets.

pub mod error;
pub mod feasibility;
pub mod matcore;
pub mod random;
pub mod reduction;
pub mod scan;
pub mod sdp;
pub mod selfcheck;
pub mod spinalg;

pub use error::{Error, Result};
pub use spinalg::{MomentMatrix, SpinNumber};
