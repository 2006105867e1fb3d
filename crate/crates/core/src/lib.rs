//! Dropout prediction from pre-enrolment motivation statements.
//!
//! Student records are turned into feature blocks (structured
//! characteristics, TFIDF, LDA topic proportions, dictionary categories),
//! combined per experiment model id, and classified with a class-weighted
//! linear SVM.

pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod lda;
pub mod lexicon;
pub mod model;
pub mod runner;
pub mod synth;
pub mod textprep;
pub mod tfidf;

pub use config::{Block, ExperimentConfig, ModelId};
pub use corpus::{Dataset, Label, StudentRecord};
pub use error::{Error, ErrorKind, Result};
pub use features::{FeatureBlock, FeatureMatrix, SparseVector};
pub use lda::{LdaParams, TopicModel, TopicModelState};
pub use lexicon::Lexicon;
pub use model::{ClassWeights, LinearModel, MetricsReport, SvmParams};
pub use textprep::{StopwordList, TokenizedDoc};
pub use tfidf::Vocabulary;
pub use runner::{run_all, run_experiment, ExperimentReport, Resources};
