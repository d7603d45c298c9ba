//! Numerical laboratory for Baxter's difference systems on the unit circle.
//!
//! * [`measure`]: complex measures and their trigonometric moments.
//! * [`toeplitz`]: brute-force determinants, Baxter parameters and
//!   determinant-defined polynomials, used as ground truth.
//! * [`params`] and [`recurrence`]: parameter sequences and the transfer
//!   recurrences.
//! * [`benzaid_lutz`]: the nilpotent diagonalization and interior limits.
//! * [`tauberian`]: boundary diagnostics and the example families.

pub mod benzaid_lutz;
pub mod error;
pub mod measure;
pub mod numeric;
pub mod params;
pub mod recurrence;
pub mod tauberian;
pub mod toeplitz;

pub use error::{Error, Result};
pub use numeric::C64;
