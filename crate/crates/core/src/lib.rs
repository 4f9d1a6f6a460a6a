//! Bitext mining toolkit: sentence alignment over document pairs,
//! margin-based kNN filtering, corpus cleaning, token-budget subsampling and
//! contrastive training of an embedding projection.

pub mod align;
pub mod bitext;
pub mod embed;
pub mod error;
pub mod harness;
pub mod margin;
pub mod mnr;
pub mod preprocess;
pub mod select;

pub use error::{Error, Result};
