//! Text-motion retrieval scores over a shared embedding space.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;

use crate::diffusion::rng_stream;
use crate::error::{Error, Result};

pub const DEFAULT_POOL_SIZE: usize = 32;

fn distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let d = &a - &b;
    d.dot(&d).sqrt()
}

fn check(motion: &ArrayView2<'_, f64>, text: &ArrayView2<'_, f64>) -> Result<()> {
    if motion.dim() != text.dim() {
        return Err(Error::shape("embedding sets", format!("{:?}", text.shape()), format!("{:?}", motion.shape())));
    }
    if motion.nrows() == 0 {
        return Err(Error::EmptyDataset("no embeddings to score".into()));
    }
    Ok(())
}

/// Fraction of motions whose own text ranks within the `top_k` nearest of a
/// pool made of the true text and `pool_size - 1` seeded distractors. Ties
/// with the true text are broken uniformly at random.
pub fn r_precision(
    motion: ArrayView2<'_, f64>,
    text: ArrayView2<'_, f64>,
    pool_size: usize,
    top_k: usize,
    seed: u64,
) -> Result<f64> {
    check(&motion, &text)?;
    let m = motion.nrows();
    if pool_size == 0 || pool_size > m {
        return Err(Error::InvalidArgument(format!("pool of {pool_size} from {m} pairs")));
    }
    let mut rng = rng_stream(seed, 0x5254);
    let mut hits = 0usize;
    for i in 0..m {
        let own = distance(motion.row(i), text.row(i));
        let (mut closer, mut ties) = (0usize, 0usize);
        for k in sample(&mut rng, m - 1, pool_size - 1) {
            let j = if k >= i { k + 1 } else { k };
            let d = distance(motion.row(i), text.row(j));
            if d < own {
                closer += 1;
            } else if d == own {
                ties += 1;
            }
        }
        let rank = closer + rng.gen_range(0..=ties);
        if rank < top_k {
            hits += 1;
        }
    }
    Ok(hits as f64 / m as f64)
}

pub fn r_precision_top3(motion: ArrayView2<'_, f64>, text: ArrayView2<'_, f64>, pool_size: usize, seed: u64) -> Result<f64> {
    r_precision(motion, text, pool_size, 3, seed)
}

/// Mean distance between matched motion and text embeddings.
pub fn mm_dist(motion: ArrayView2<'_, f64>, text: ArrayView2<'_, f64>) -> Result<f64> {
    check(&motion, &text)?;
    let total: f64 = (0..motion.nrows()).map(|i| distance(motion.row(i), text.row(i))).sum();
    Ok(total / motion.nrows() as f64)
}
