//! Low-discrepancy digital sequences over F2 and the machinery to study them.
//!
//! * [`f2`]: polynomial and bit-matrix arithmetic over the two-element field.
//! * [`lds`]: Niederreiter (NUT) and Sobol' generating matrices and points.
//! * [`tvalue`]: exact t-values of projections and pair frequency tables.
//! * [`rqmc`]: linear scrambling with digital shift and replicated estimates.
//! * [`pricing`]: path constructions and option payoffs used as integrands.

pub mod error;
pub mod f2;
pub mod lds;
#[cfg(any(test, feature = "oracles"))]
#[doc(hidden)]
pub mod oracles;
pub mod pricing;
pub mod rqmc;
pub mod tvalue;

pub use error::{Error, Result};
