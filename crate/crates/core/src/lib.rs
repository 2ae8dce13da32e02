// Tabulated coefficients keep every published digit, and negated float
// comparisons are how inputs reject NaN along with out-of-range values.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exitlaw;
pub mod kernels;
pub mod mc;
pub mod quad;
pub mod special;
mod spectral;
pub mod sum;
pub mod validate;

pub use error::{Error, Result};
pub use exitlaw::{Boundary, ExitLawQuery, Method, RegimeReport};
pub use special::{Index, SeriesConfig, ZeroBoundary, ZeroTable};
pub use spectral::SeriesOutcome;
