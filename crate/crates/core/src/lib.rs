//! Star-rating prediction for product and service reviews, with
//! aspect-phrase features learned from word embeddings.

pub mod aspects;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod models;
pub mod seeds;
pub mod textproc;

pub use error::{Error, ErrorKind, Result};
