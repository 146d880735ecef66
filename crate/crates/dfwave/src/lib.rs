//! Divergence-free and curl-free spline wavelets on the periodic unit torus.

pub mod error;
pub mod fwt;
pub mod splines;

pub use error::{Error, Result};
pub mod oracle;
pub mod sampling;
pub mod divfree;
pub mod curlfree;
pub mod hodge;
pub mod analysis;
