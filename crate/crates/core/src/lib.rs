//! Performance analysis of a fixed-gain amplify-and-forward relay link with an
//! RF first hop (α-κ-μ shadowed fading) and a THz second hop (α-μ fading with
//! non-zero boresight pointing errors).

pub mod analytic;
pub mod error;
pub mod channels;
pub mod linkbudget;
pub mod montecarlo;
pub mod scenario;
pub mod specfun;

pub use error::{Error, Result};
