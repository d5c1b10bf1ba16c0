use std::collections::BTreeSet;

use ndarray::{Array2, Array3};
use partmotion::diffusion::{rng_stream, standard_normal};
use partmotion::gcn::{build_adjacency_subsets, build_graph, GcnConfig, GcnParams, NODE_FEATURE_DIM};
use partmotion::motion::{canonical_skeleton, MotionSequence, PoseLayout};
use proptest::prelude::*;
use rand::seq::SliceRandom;

#[test]
fn canonical_subsets_and_inter_part_edges() {
    let adj = build_adjacency_subsets(&canonical_skeleton());
    assert_eq!(adj.len(), 6);
    assert_eq!(adj.num_nodes, 22);
    let total: usize = adj.subsets.iter().map(|s| s.edges.len()).sum();
    assert_eq!(total, 21);
    let inter: BTreeSet<_> = adj.inter_part().edges.iter().copied().collect();
    assert_eq!(inter, BTreeSet::from([(0, 1), (0, 2), (9, 13), (9, 14)]));
    // limbs are chains of four joints, torso plus pelvis holds six joints
    let sizes: Vec<usize> = adj.subsets[..5].iter().map(|s| s.edges.len()).collect();
    assert_eq!(sizes.iter().sum::<usize>(), 17);
    assert!(sizes.iter().all(|&n| n == 3 || n == 5), "{sizes:?}");
}

#[test]
fn normalized_subsets_are_symmetric_with_unit_isolated_diagonal() {
    let adj = build_adjacency_subsets(&canonical_skeleton());
    for s in &adj.subsets {
        let a = &s.normalized;
        assert!((a - &a.t()).iter().all(|v| v.abs() < 1e-15), "{}", s.label);
        let touched: BTreeSet<usize> = s.edges.iter().flat_map(|&(i, j)| [i, j]).collect();
        for i in 0..22 {
            if !touched.contains(&i) {
                assert_eq!(a[[i, i]], 1.0);
                assert_eq!(a.row(i).sum(), 1.0);
            }
        }
    }
}

#[test]
fn motion_graph_edge_counts() {
    let skeleton = canonical_skeleton();
    for frames in [1usize, 2, 7] {
        let x = Array2::zeros((frames, 263));
        let seq = MotionSequence::new(x, PoseLayout::canonical(), 20.0).unwrap();
        let g = build_graph(&seq, &skeleton).unwrap();
        assert_eq!(g.num_nodes(), 22 * frames);
        assert_eq!(g.anatomical_edge_count(), 21 * frames);
        assert_eq!(g.temporal_edge_count(), 22 * (frames - 1));
        assert_eq!(g.edges.len(), g.anatomical_edge_count() + g.temporal_edge_count());
        assert_eq!(g.features.dim(), (frames, 22, NODE_FEATURE_DIM));
        let unique: BTreeSet<_> = g.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        assert_eq!(unique.len(), g.edges.len());
    }
}

fn small_config() -> GcnConfig {
    GcnConfig { num_joints: 22, num_subsets: 6, hidden: 5, gcn_layers: 2, conv_layers: 2, kernel: 3, stride: 2, cond_dim: 4 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Renumbering joints permutes the joint similarity matrix the same way.
    #[test]
    fn similarity_is_permutation_equivariant(seed in any::<u64>(), frames in 1usize..6) {
        let mut rng = rng_stream(seed, 0);
        let skeleton = canonical_skeleton();
        let mut perm: Vec<usize> = (1..22).collect();
        perm.shuffle(&mut rng);
        perm.insert(0, 0);
        let permuted = skeleton.permuted(&perm).unwrap();
        let params = GcnParams::init(&small_config(), &mut rng).unwrap();
        let f: Array3<f64> = standard_normal(ndarray::Ix3(frames, 22, NODE_FEATURE_DIM), &mut rng);
        let mut g = Array3::zeros(f.dim());
        for old in 0..22 {
            g.slice_mut(ndarray::s![.., perm[old], ..]).assign(&f.slice(ndarray::s![.., old, ..]));
        }
        let (_, c1) = params.forward(f.view(), &build_adjacency_subsets(&skeleton)).unwrap();
        let (_, c2) = params.forward(g.view(), &build_adjacency_subsets(&permuted)).unwrap();
        let (s1, s2) = (c1.similarity(), c2.similarity());
        for i in 0..22 {
            for j in 0..22 {
                prop_assert!((s1[[i, j]] - s2[[perm[i], perm[j]]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn similarity_is_bounded_and_symmetric(seed in any::<u64>()) {
        let mut rng = rng_stream(seed, 1);
        let params = GcnParams::init(&small_config(), &mut rng).unwrap();
        let f: Array3<f64> = standard_normal(ndarray::Ix3(4, 22, NODE_FEATURE_DIM), &mut rng);
        let (out, cache) = params.forward(f.view(), &build_adjacency_subsets(&canonical_skeleton())).unwrap();
        prop_assert_eq!(out.len(), 4);
        let s = cache.similarity();
        for i in 0..22 {
            for j in 0..22 {
                prop_assert!(s[[i, j]] <= 1.0 + 1e-12 && s[[i, j]] >= -1.0 - 1e-12);
                prop_assert!((s[[i, j]] - s[[j, i]]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn forward_rejects_mismatched_adjacency() {
    let mut rng = rng_stream(3, 0);
    let mut cfg = small_config();
    cfg.num_subsets = 5;
    let params = GcnParams::init(&cfg, &mut rng).unwrap();
    let f = Array3::zeros((2, 22, NODE_FEATURE_DIM));
    assert!(params.forward(f.view(), &build_adjacency_subsets(&canonical_skeleton())).is_err());
}
