pub mod autoencoder;
pub mod boolean;
pub mod conjunction;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod halfspace;
pub mod lifelong_linear;
pub mod lp;
pub mod polynomial;
pub mod sampling;

pub use error::{Error, Result};
