//! Every chapter of `book/src` as a doc-tested module.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}
#[doc = include_str!("../../../book/src/coefficients.md")]
pub mod coefficients {}
#[doc = include_str!("../../../book/src/moments.md")]
pub mod moments {}
#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}
#[doc = include_str!("../../../book/src/correctors.md")]
pub mod correctors {}
#[doc = include_str!("../../../book/src/numerics.md")]
pub mod numerics {}
#[doc = include_str!("../../../book/src/splitting.md")]
pub mod splitting {}
#[doc = include_str!("../../../book/src/malliavin.md")]
pub mod malliavin {}
#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}
