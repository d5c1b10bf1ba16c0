//! Part-partitioned graph convolution over the skeleton and the similarity
//! feature that conditions whole-body generation.

mod adjacency;
mod graph;
mod model;
mod ops;

pub use adjacency::{build_adjacency_subsets, AdjacencySubset, AdjacencySubsets};
pub use graph::{build_graph, node_features, MotionGraph, NODE_FEATURE_DIM};
pub use model::{GcnCache, GcnConfig, GcnParams};
pub use ops::{aggregate, similarity, spatial_feature_vector, temporal_compress, upper_triangle, Conv1d};
