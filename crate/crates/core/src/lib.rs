//! Exact self-similar solutions of the two-component Camassa-Holm system
//!
//! ```text
//! rho_t + u rho_x + rho u_x = 0
//! m_t + 2 u_x m + u m_x + sigma rho rho_x = 0,   m = u - alpha^2 u_xx
//! ```
//!
//! built from the scale-factor ODE `a'' = xi / (3 a^{1/3})`, together with
//! the numerical machinery to check them: PDE residuals with convergence
//! orders, mass values and conservation, collapse times and blowup rates.

pub mod cli;
pub mod config;
pub mod dd;
pub mod dopri;
pub mod emden;
pub mod error;
pub mod quad;
pub mod selfsim;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
