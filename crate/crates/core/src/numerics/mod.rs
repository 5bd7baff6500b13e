//! Grid densities, Fourier inversion for the law of `S_n`, total variation,
//! quadrature and a two-sample test.

pub mod fft;
pub mod grid;
pub mod quadrature;
pub mod stats;

pub use fft::{law_of_sn, law_of_sum};
pub use grid::{tv_distance, GridDensity, GridSpec, TvInterval};
pub use quadrature::{gauss_expect_checked, gauss_hermite, integrate, integrate_pieces, GaussHermite};
pub use stats::{ks_two_sample, KsResult};
