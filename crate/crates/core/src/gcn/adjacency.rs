//! Part-partitioned, degree-normalized joint adjacency.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::motion::{GraphPart, Skeleton};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencySubset {
    pub label: String,
    /// Un-normalized undirected edges, without self-loops.
    pub edges: Vec<(usize, usize)>,
    /// `D^-1/2 (A + I) D^-1/2` over all joints.
    pub normalized: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencySubsets {
    pub num_nodes: usize,
    pub subsets: Vec<AdjacencySubset>,
}

impl AdjacencySubsets {
    /// One subset per part holding the edges inside it, plus a final subset
    /// of the edges joining different parts. Empty subsets are kept so the
    /// subset count is always `num_parts + 1`.
    pub fn from_partition(
        num_nodes: usize,
        edges: &[(usize, usize)],
        part_of: &[usize],
        num_parts: usize,
        labels: &[String],
    ) -> Result<Self> {
        if part_of.len() != num_nodes || labels.len() != num_parts + 1 {
            return Err(Error::InvalidArgument("partition does not cover the graph".into()));
        }
        if let Some(&p) = part_of.iter().find(|&&p| p >= num_parts) {
            return Err(Error::InvalidArgument(format!("part index {p} out of range")));
        }
        let mut buckets = vec![Vec::new(); num_parts + 1];
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            let k = if part_of[a] == part_of[b] { part_of[a] } else { num_parts };
            buckets[k].push((a, b));
        }
        let subsets = buckets
            .into_iter()
            .zip(labels)
            .map(|(edges, label)| AdjacencySubset {
                normalized: normalize(num_nodes, &edges),
                label: label.clone(),
                edges,
            })
            .collect();
        Ok(Self { num_nodes, subsets })
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn matrices(&self) -> Vec<&Array2<f64>> {
        self.subsets.iter().map(|s| &s.normalized).collect()
    }

    /// Edges joining different parts.
    pub fn inter_part(&self) -> &AdjacencySubset {
        self.subsets.last().expect("at least the inter-part subset")
    }
}

fn normalize(n: usize, edges: &[(usize, usize)]) -> Array2<f64> {
    let mut a = Array2::<f64>::eye(n);
    for &(i, j) in edges {
        a[[i, j]] = 1.0;
        a[[j, i]] = 1.0;
    }
    let inv_sqrt: Vec<f64> = a.rows().into_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    a
}

/// Five intra-part subsets (pelvis counted with the torso) and one
/// inter-part subset.
pub fn build_adjacency_subsets(skeleton: &Skeleton) -> AdjacencySubsets {
    let part_of: Vec<usize> = (0..skeleton.num_joints())
        .map(|j| skeleton.part(j).graph_part().index())
        .collect();
    let mut labels: Vec<String> = GraphPart::ALL.iter().map(|p| format!("{p:?}")).collect();
    labels.push("inter-part".into());
    AdjacencySubsets::from_partition(skeleton.num_joints(), &skeleton.edges(), &part_of, GraphPart::ALL.len(), &labels)
        .expect("skeleton edges are valid")
}
