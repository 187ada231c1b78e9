//! Discrete potential theory for centered, uniformly elliptic random walks
//! killed when leaving a globally Lipschitz domain of `Z^d`.
//!
//! The crate is `no_std` (it needs `alloc`). It provides:
//!
//! * [`geometry`]: lattice points, Lipschitz graph domains, the step-set
//!   dependent boundary operator, distance to the boundary and the
//!   ball / cube / collar regions.
//! * [`kernel`]: step sets and transition kernels, with validation of the
//!   normalization, centering and ellipticity conditions.
//! * [`dirichlet`]: Dirichlet problems on finite truncations, harmonic
//!   measure, Green functions and collar exit splits.
//! * [`monte_carlo`]: path simulation of the killed walk.
//! * [`harmonic`]: the positive harmonic function built by exhaustion,
//!   Martin kernels and uniqueness checks.
//! * [`lab`]: measured Harnack, Carleson and boundary Harnack constants
//!   and decay exponents.
//!
//! Enable the `parallel` feature to fan independent solves and paths out
//! over a rayon pool. Results are identical to serial execution.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dirichlet;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harmonic;
pub mod kernel;
pub mod lab;
pub mod linalg;
pub mod monte_carlo;
mod par;
pub mod report;

pub use error::{Error, Result};
pub use field::Field;
pub use geometry::{LatticePoint, LipschitzDomain, LipschitzProfile, PointSet, Radius, Region};
pub use kernel::{StepSet, TransitionKernel, Weight};

/// Default residual tolerance for Dirichlet solves.
pub const DEFAULT_TOL: f64 = 1e-10;
