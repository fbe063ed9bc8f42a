//! Honeycomb Schrödinger operators: bulk Bloch bands, Dirac points, slice problems,
//! effective Dirac dynamics and domain-wall edge states.

pub mod acceptance;
pub mod bloch;
pub mod edge;
pub mod effective;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod potential;
pub mod slice;

pub use error::{Error, Result};
