pub mod edgeworth;
pub mod error;
pub mod exactmath;
pub mod harness;
pub mod malliavin;
pub mod moments;
pub mod multiindex;
pub mod numerics;
pub mod opalg;
pub mod poly;
pub mod scalar;
pub mod seed;
pub mod splitting;

pub use error::{Error, Result};
