//! Solvers for the radial mass equation
//!
//! ```text
//!     m_t + m (m_rho)_+^alpha = 0,      0 < alpha < 1,
//! ```
//!
//! the dimension-free form of the Newtonian-vortex equation with sublinear
//! mobility `u^alpha`, written for the mass `m(t, rho)` enclosed in the ball of
//! volume `rho`.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; enable `libm` in that case to supply the float math.
//!
//! Modules:
//!
//! * [`exact`]: friendly giant, self-similar profiles and their mass, the
//!   vortex limit, and an ODE oracle for the profile.
//! * [`characteristics`]: exact evaluator for non-increasing step data,
//!   with rarefaction fans at every jump.
//! * [`shocks`]: Rankine-Hugoniot speed, fixed-step RK4 shock paths, the
//!   two-bump scenario and the spurious square solution.
//! * [`hjfd`]: the monotone upwind scheme for the viscosity solution.
//! * [`viscous`]: explicit solver for the viscous mass equation.
//! * [`analysis`]: rescaling, relative errors, residuals and comparison checks.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("enable either the `std` or the `libm` feature");

extern crate alloc;

pub mod analysis;
pub mod characteristics;
pub mod error;
pub mod exact;
pub mod hjfd;
pub mod quadrature;
pub mod shocks;
pub mod viscous;

mod math;

pub use error::{Error, Result};
pub use exact::{MobilityExponent, SelfSimilarParams};
