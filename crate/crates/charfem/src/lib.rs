//! Space-time moving finite elements for the 1D linear convection-diffusion
//! equation
//!
//! ```text
//!     u_t - (a u_x)_x + b u_x + c u = f        in  Omega x (0, T],
//!     a u_x . n = g                            on  dOmega x (0, T],
//!     u(x, 0) = u_0(x),
//! ```
//!
//! discretized with continuous piecewise polynomials of degree `p` on a mesh
//! whose nodes follow degree-`p` trajectories inside each time partition, and
//! collocated in time at the knots of an interpolatory quadrature rule of
//! order at least `2p - 1` (Gauss, right-Radau, or anything in between).
//!
//! The crate is organized around the pipeline
//!
//! * [`quadrature`] -- the one-parameter Gauss/Radau family of reference
//!   rules on `[0, 1]`,
//! * [`time_basis`] -- Lagrange time bases and the collocation derivative
//!   matrix,
//! * [`mesh`] -- moving 1D meshes: node trajectories, slicing, isoparametric
//!   maps, and space-time regularity monitoring,
//! * [`fespace`] -- slice finite element spaces, assembly, L2 projection,
//! * [`solver`] -- the per-partition collocation solve and the multi-partition
//!   time march,
//! * [`analysis`] -- L2/H1/negative norms, characteristic derivatives, and
//!   the mesh-dependent energy norm,
//! * [`problems`] -- manufactured benchmark problems and mesh motion
//!   strategies.

pub mod analysis;
pub mod error;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod time_basis;

mod poly;

pub use error::{Error, Result};
