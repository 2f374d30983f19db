//! Three-stage propaganda technique classification.
//!
//! A base classifier produces a distribution over the fourteen techniques.
//! Two override stages sit on top of it: a bank of one-versus-one linear
//! ensembles for the five minority techniques, and a repetition detector
//! built on longest-common-subsequence matching against a threshold that
//! relaxes with fragment length. The repetition stage has the final say,
//! then the minority stage, then the base prediction.
//!
//! ```
//! use propcascade::repetition::threshold_for_length;
//!
//! assert_eq!(threshold_for_length(0.2, 100, 50.0), 80.0);
//! ```

pub mod base_model;
pub mod cascade;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod featurizer;
mod linear;
pub mod minority;
pub mod persist;
pub mod pipeline;
pub mod repetition;
pub mod synth;
pub mod technique;
pub mod text;

pub use base_model::{BaseSources, Distribution, LinearSoftmaxModel, TrainConfig};
pub use cascade::{CascadeDecision, Stage};
pub use corpus::{Article, ContextPolicy, Instance, InstanceKey, Label, Span};
pub use error::{Error, Result};
pub use eval::ScoreReport;
pub use featurizer::{EmbeddingTable, FeatureVector, NgramConfig};
pub use minority::{Aggregation, Level1Ensemble, Level2Classifier, MinorityBank};
pub use repetition::{MatchReport, RepetitionConfig, WindowMode};
pub use technique::Technique;
