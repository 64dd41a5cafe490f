//! Direct, inverse and dual time/frequency warping operators for piecewise smooth periodic maps.

pub mod domain;
pub mod dual;
pub mod error;
pub mod error_analysis;
pub mod io;
pub mod jet;
pub mod nufft;
pub mod oracle;
pub mod saf;
pub mod special;
pub mod swf;
pub mod symbolic;
pub mod warp_map;

pub use error::{Result, WarpError};
