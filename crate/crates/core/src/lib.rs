//! Recovers natural identifier names for minified JavaScript locals.
//!
//! The pipeline: a token-level analysis extracts a fixed-shape usage summary
//! for every local name, a sequence autoencoder compresses each usage context
//! into a small embedding, a recurrent predictor maps the embedding sequence
//! to a ranked list of candidate names, and a greedy assignment pass renames
//! the minified locals without changing the binding structure of the code.
//!
//! Entry points: [`js::analyze`] / [`js::mangle`] for the static side,
//! [`pipeline::ingest`] / [`pipeline::train`] for building models, and
//! [`recovery::recover_names`] / [`pipeline::evaluate_corpus`] for using them.

pub mod autoencoder;
pub mod bundle;
pub mod context;
pub mod error;
pub mod eval;
pub mod js;
pub mod nn;
pub mod pipeline;
pub mod predictor;
pub mod recovery;
pub mod vocab;

pub use error::{Error, Result};
