use ndarray::Array2;
use partmotion::diffusion::rng_stream;
use partmotion::gcn::{aggregate, AdjacencySubsets};
use partmotion::motion::{canonical_skeleton, part_mask, BodyPart, PoseLayout};
use rand::Rng;

use crate::Outcome;

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            let w = if a == v { b } else if b == v { a } else { continue };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// relu(sum_k sum_{j in N_k(i) + i} F_j W_k / sqrt(deg_k(i) deg_k(j))), one
/// node at a time from the edge lists.
fn oracle(
    n: usize,
    subsets: &[Vec<(usize, usize)>],
    f: &Array2<f64>,
    weights: &[Array2<f64>],
) -> Array2<f64> {
    let out_w = weights[0].ncols();
    let mut z = Array2::<f64>::zeros((n, out_w));
    for (edges, w) in subsets.iter().zip(weights) {
        let neighbours = |i: usize| -> Vec<usize> {
            let mut v = vec![i];
            for &(a, b) in edges {
                if a == i {
                    v.push(b);
                } else if b == i {
                    v.push(a);
                }
            }
            v
        };
        for i in 0..n {
            let ni = neighbours(i);
            for &j in &ni {
                let scale = 1.0 / ((ni.len() * neighbours(j).len()) as f64).sqrt();
                for o in 0..out_w {
                    let mut acc = 0.0;
                    for c in 0..f.ncols() {
                        acc += f[[j, c]] * w[[c, o]];
                    }
                    z[[i, o]] += scale * acc;
                }
            }
        }
    }
    z.mapv_inplace(|v| v.max(0.0));
    z
}

/// Every connected labelled graph on 1..=6 nodes, with a random node
/// partition and 20 weight draws each.
pub fn aggregation_oracle() -> Outcome {
    let mut rng = rng_stream(5, 0);
    let (c_in, c_out) = (3, 2);
    let mut graphs = 0usize;
    let mut worst: f64 = 0.0;
    for n in 1..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for bits in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).map(|(_, &e)| e).collect();
            if !connected(n, &edges) {
                continue;
            }
            graphs += 1;
            let parts = rng.gen_range(1..=3usize);
            let part_of: Vec<usize> = (0..n).map(|_| rng.gen_range(0..parts)).collect();
            let labels: Vec<String> = (0..=parts).map(|k| k.to_string()).collect();
            let adj = AdjacencySubsets::from_partition(n, &edges, &part_of, parts, &labels).unwrap();
            let mut split = vec![Vec::new(); parts + 1];
            for &(a, b) in &edges {
                let k = if part_of[a] == part_of[b] { part_of[a] } else { parts };
                split[k].push((a, b));
            }
            for _ in 0..20 {
                let f = Array2::from_shape_simple_fn((n, c_in), || rng.gen_range(-1.0..1.0));
                let w: Vec<Array2<f64>> = (0..=parts)
                    .map(|_| Array2::from_shape_simple_fn((c_in, c_out), || rng.gen_range(-1.0..1.0)))
                    .collect();
                let got = aggregate(f.view(), &adj.matrices(), &w).unwrap();
                let want = oracle(n, &split, &f, &w);
                worst = got.iter().zip(&want).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
        }
    }
    Outcome::new(worst < 1e-9, format!("{graphs} connected graphs x 20 draws, max |error| {worst:.1e}"))
}

pub fn mask_partition() -> Outcome {
    let layout = PoseLayout::canonical();
    let skeleton = canonical_skeleton();
    let mut counts = vec![0usize; layout.total_dim()];
    for part in BodyPart::ALL {
        let m = part_mask([part], &layout, &skeleton).unwrap();
        for d in m.selected() {
            counts[d] += 1;
        }
    }
    let pop = |p: BodyPart| part_mask([p], &layout, &skeleton).unwrap().popcount();
    let (la, rl) = (pop(BodyPart::LeftArm), pop(BodyPart::RightLeg));
    let ones = counts.iter().all(|&c| c == 1);
    Outcome::new(
        ones && counts.len() == 263 && la == 48 && rl == 50,
        format!("sum of six masks all-ones over {} dims: {ones}; left arm {la}, right leg {rl}", counts.len()),
    )
}
