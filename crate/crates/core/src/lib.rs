//! Traveling fronts, spatially independent solutions and front-like entire
//! solutions of monostable reaction-diffusion systems `u_t = D u_xx + f(u)`.

pub mod cache;
pub mod checker;
pub mod config;
pub mod entire;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod roots;
pub mod sampling;
pub mod sis;
pub mod spectral;
pub mod tridiag;
pub mod front;
pub mod pde;

pub use error::{Error, Result};
