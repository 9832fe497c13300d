//! Detecting harmful documents in heterogeneous web corpora.
//!
//! The main route trains an n-gram language model with modified Kneser-Ney
//! smoothing on harmful text only, scores documents by perplexity, and labels
//! a document harmful when its perplexity falls **below** a selected
//! threshold. Text that resembles the harmful training data is predictable to
//! the model (low perplexity); everything else perplexes it.
//!
//! Supporting pieces: OSCAR-style JSONLines ingestion ([`corpus`]), a
//! configurable tokenization pipeline ([`textproc`]), threshold
//! characterization and selection ([`threshold`]), classifier baselines for
//! comparison ([`baselines`]), and evaluation metrics ([`metrics`]).

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod ngram;
pub mod textproc;
pub mod threshold;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
