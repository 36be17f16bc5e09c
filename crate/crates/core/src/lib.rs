//! Newton series expansions with remainder control, higher-order convexity
//! classification and principal indefinite sums, on top of MPFR-backed
//! configurable-precision reals.

pub mod arith;
pub mod convexity;
pub mod error;
pub mod expr;
pub mod finite_diff;
pub mod oracles;
pub mod newton;
pub mod registry;
pub mod sigma;
pub mod verify;

pub use arith::{Interval, Real, DEFAULT_PRECISION};
pub use error::{Error, Result};
pub use registry::FuncHandle;
