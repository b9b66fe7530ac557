//! Random streams, summation helpers and the closed-form distribution identities
//! the channel analysis is built on.

mod accum;
mod lemmas;
mod rng;

pub use accum::{CompensatedSum, MomentAccumulator};
pub use lemmas::{min_exponential_rate, rayleigh_ratio_moment, uniform_diff_pdf, uniform_sum_pdf};
pub use rng::{
    derive_stream, draw_complex_gaussian, sample_complex_gaussian, sample_uniform_angle,
    wrap_angle, ComplexVector, RngStream, SplitRng,
};
