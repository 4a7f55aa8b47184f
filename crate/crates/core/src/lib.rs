//! Unsupervised representation learning on heterogeneous graphs guided by
//! homophilic and heterophilic latent graphs.
//!
//! The pipeline: meta-path subgraphs ([`graph`]), homophily analytics
//! ([`homophily`]), latent-graph mining ([`latent`]), dual-pass spectral
//! filtering ([`filters`]), the trainable model ([`model`]) and downstream
//! evaluation ([`eval`]).

pub mod binio;
pub mod dataset;
pub mod dense;
pub mod eval;
pub mod error;
pub mod filters;
pub mod graph;
pub mod homophily;
pub mod latent;
pub mod model;
pub mod sparse;
pub mod topk;

pub use dense::Dense;
pub use error::{Error, Result};
pub use graph::{HeteroGraph, MetaPath};
pub use latent::LatentGraphPair;
pub use sparse::SparseAdjacency;
