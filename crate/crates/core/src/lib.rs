//! Noisy-channel recovery of words from transcribed child productions.
//!
//! A listener hearing a phoneme sequence in discourse context is modeled as a
//! Bayesian decoder: a context-conditioned prior over a candidate vocabulary is
//! combined with a likelihood that decays exponentially in the phoneme edit
//! distance between the observed sequence and each candidate's citation form.
//!
//! The crate is organized around that pipeline:
//!
//! - [`phonology`]: IPA tokenization, pronunciation lexicons, phoneme edit distance
//! - [`corpus`]: transcript ingestion and selection of successes and failures
//! - [`vocabulary`]: the candidate inventory
//! - [`priors`]: uniform, unigram, n-gram and external (wire protocol) priors
//! - [`likelihood`]: edit-distance likelihoods and grid calibration of the noise scale
//! - [`posterior`]: the posterior and its surprisal/entropy summaries
//! - [`analysis`]: surprisal reports, failure ROC, information gain by age
//! - [`pipeline`]: end-to-end runs with manifests and CSV outputs
//! - [`cli`]: the `cdl` command line
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod ingest;
pub mod likelihood;
pub mod phonology;
pub mod pipeline;
pub mod posterior;
pub mod priors;
pub mod synthetic;
pub mod vocabulary;

pub use corpus::{ContextWindow, ProductionToken, TokenKind, Utterance};
pub use likelihood::{BetaGrid, LikelihoodConfig, LikelihoodVector};
pub use phonology::{edit_distance, tokenize_ipa, Phoneme, PhonemeSeq, PronunciationLexicon};
pub use posterior::{entropy, posterior, surprisal, PosteriorResult};
pub use priors::{PriorDistribution, PriorSource, PriorSourceKind};
pub use vocabulary::CandidateVocab;
