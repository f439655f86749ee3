//! Variable-time-step BDF2 time integration coupled with P1 Galerkin finite
//! elements for nonlinear parabolic equations on the unit square and cube.
//!
//! The crate is organised around the pieces of the fully discrete scheme:
//!
//! * [`timegrid`] — nonuniform time partitions with step-ratio control,
//! * [`kernels`] — BDF2 convolution coefficients and the discrete orthogonal /
//!   complementary convolution (DOC/DCC) kernel tables with their identities,
//! * [`mesh`] — structured simplicial meshes of `(0,1)^d`, `d = 2, 3`,
//! * [`fem`] — P1 assembly, quadrature, error norms and a CG solver,
//! * [`problems`] — manufactured-solution problem definitions,
//! * [`solver`] — the linearized time-stepping loop,
//! * [`harness`] — convergence/stability studies and CSV emission.
//!
//! The `vbdf2` binary exposes the harness as a CLI; see the README.

pub mod error;
pub mod fem;
pub mod harness;
pub mod kernels;
pub mod mesh;
pub mod problems;
pub mod solver;
pub mod timegrid;

pub use error::{Error, Result};
