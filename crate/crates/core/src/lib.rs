//! Numerical laboratory for the gradient-soliton ODE systems on a
//! two-function circle/line-bundle metric ansatz.
//!
//! The crate integrates three equivalent first-order formulations of the
//! soliton equations — geometric arclength coordinates (`ode_t`), squared
//! scale factors with fiber arclength (`ode_s`), and the polynomial
//! blow-up system (`special`) — with a shared adaptive embedded
//! Runge-Kutta engine (`integrator`) that provides dense output, event
//! localization, and augmented-state quadrature. Closed-form solution
//! families (`oracles`) supply ground truth for the residual, monitor,
//! and transform checks collected in `checks`.
//!
//! The core is `no_std`-compatible (allocation required); enable the
//! `libm` feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("building without `std` requires the `libm` feature");

pub(crate) mod math;

pub mod blowup;
pub mod checks;
pub mod integrator;
pub mod model;
pub mod ode_s;
pub mod ode_t;
pub mod oracles;
pub mod special;

pub use model::{AnsatzParams, Diagnostics, Formulation, SpecialState, StateS, StateT, Termination, Trajectory};
