//! Discovery and evaluation of evolving topics in timestamped document corpora.
//!
//! Documents arrive with precomputed embeddings. The corpus is cut into
//! overlapping time windows, each window is reduced to a low-dimensional
//! space, consecutive windows are chained into one shared frame by Procrustes
//! alignment on the documents they share, each window is clustered with
//! HDBSCAN, and the per-window clusters are linked into evolving topics by
//! clustering their centroids. Topics are described with class-based TF-IDF
//! terms and scored with NPMI coherence and proportion-of-unique-words
//! diversity.
//!
//! Stage order:
//!
//! ```text
//! corpus -> windowing -> reduction -> hdbscan -> alignment -> representation -> metrics
//! ```
//!
//! [`pipeline::run`] drives the whole chain from a [`pipeline::PipelineConfig`].

pub mod alignment;
pub mod corpus;
pub mod error;
pub mod hdbscan;
pub mod metrics;
pub mod pipeline;
pub mod reduction;
pub mod representation;
pub mod synth;
pub mod windowing;

pub use error::{Error, Result};
