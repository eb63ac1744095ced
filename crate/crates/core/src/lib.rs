pub mod coherent;
pub mod error;
pub mod examples;
pub mod experiments;
pub mod fock;
pub mod projector;
pub mod propagator;
pub mod quad;
pub mod rkhs;
pub mod special;

pub use error::{Error, Result};
