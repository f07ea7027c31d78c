//! Numerical toolkit for weight families, Young conjugates, seminorms and the
//! Fourier isomorphism on spaces of rapidly decreasing entire functions.

pub mod conjugate;
pub mod error;
pub mod fourier;
pub mod functions;
pub mod numeric;
pub mod scenario;
pub mod search;
pub mod seminorms;
pub mod theorems;
pub mod weights;

pub use error::{Error, Result};
