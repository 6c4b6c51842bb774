//! Matching documents of different types by comparing their structural
//! components.
//!
//! Documents of type A (e.g. news articles) and type B (e.g. videos) are
//! indexed per component ([`index`]) after text normalization
//! ([`textpipe`]). A small network ([`simnet`]) mixes the A-side component
//! vectors with trainable weights, compares each mix to one B-side component
//! by cosine similarity and averages the results into a match score. The
//! weights are fitted from judged pairs ([`train`], [`eval`]).
//!
//! The math is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the binaries use.

pub mod error;
pub mod eval;
pub mod index;
pub mod scalar;
pub mod simnet;
pub mod textpipe;
pub mod train;

pub use error::{Error, Result};
pub use index::{DocType, Document, Index};
pub use scalar::Scalar;

pub type TermVector64 = textpipe::TermVector<f64>;
pub type WeightConfig64 = simnet::WeightConfig<f64>;
pub type Matcher64<'a> = simnet::Matcher<'a, f64>;
pub type Dataset64 = train::Dataset<f64>;
pub type TrainReport64 = train::TrainReport<f64>;
pub type EvalReport64 = eval::EvalReport<f64>;
pub type Ranked64 = simnet::Ranked<f64>;

pub type TermVector32 = textpipe::TermVector<f32>;
pub type WeightConfig32 = simnet::WeightConfig<f32>;
pub type Matcher32<'a> = simnet::Matcher<'a, f32>;
