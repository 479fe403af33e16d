//! Minimal traveling-wave speed for the non-local delayed reaction-diffusion
//! equation
//!
//! ```text
//! u_t = u_xx - u + ∫ K(x - s) g(u(t - h, s)) ds
//! ```
//!
//! The minimal speed is `c* = 1/sqrt(eps0)`, where `(z0, eps0)` is the positive
//! double root of the characteristic function
//! `psi(z, eps) = eps z^2 - z - 1 + p e^{-zh} M(sqrt(eps) z)` and `M` is the
//! moment-generating functional of the kernel `K`.
//!
//! Module map:
//!
//! * [`kernel`]: symmetric probability kernels and their MGF.
//! * [`charfun`]: `psi`, its partials, the w-form equations and `G`, `H`, `R`.
//! * [`solver`]: the double-root solver, the heat-kernel cubic and the
//!   continuation of `eps0(h)` along the delay.
//! * [`bounds`]: closed-form upper and lower speed bounds.
//! * [`front_sim`]: explicit finite-difference simulation of the PDE.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod charfun;
mod error;
pub mod front_sim;
pub mod kernel;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
