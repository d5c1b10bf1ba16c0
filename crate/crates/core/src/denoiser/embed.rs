//! Text, timestep and frame-position embeddings.

use std::hash::Hasher;

use fnv::FnvHasher;
use ndarray::Array1;

use crate::error::{Error, Result};

/// Maps text to a fixed-width vector.
pub trait TextEncoder: Send + Sync {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Array1<f64>;
}

/// Signed feature hashing of lowercase word tokens, L2-normalized.
/// Text without tokens maps to the zero vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedTextEncoder {
    dim: usize,
}

impl HashedTextEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding width must be positive");
        Self { dim }
    }
}

impl TextEncoder for HashedTextEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Array1<f64> {
        let mut v = Array1::<f64>::zeros(self.dim);
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let mut h = FnvHasher::default();
            h.write(token.to_lowercase().as_bytes());
            let h = h.finish();
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[(h % self.dim as u64) as usize] += sign;
        }
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            v /= norm;
        }
        v
    }
}

/// Default offline encoder.
pub fn text_encode(text: &str, dim: usize) -> Array1<f64> {
    HashedTextEncoder::new(dim).encode(text)
}

/// `[sin(p w_0), cos(p w_0), sin(p w_1), ...]` with `w_i = 10000^(-2i/width)`.
pub fn sinusoid(position: f64, width: usize) -> Array1<f64> {
    let half = width.div_ceil(2).max(1);
    Array1::from_shape_fn(width, |k| {
        let i = k / 2;
        let freq = 10000f64.powf(-(i as f64) / half as f64);
        if k % 2 == 0 {
            (position * freq).sin()
        } else {
            (position * freq).cos()
        }
    })
}

pub fn time_embed(t: usize, steps: usize, width: usize) -> Result<Array1<f64>> {
    if t == 0 || t > steps {
        return Err(Error::StepOutOfRange { step: t, max: steps });
    }
    Ok(sinusoid(t as f64, width))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_encoding_contract() {
        let a = text_encode("a person waves the left arm", 64);
        assert_eq!(a, text_encode("a person waves the left arm", 64));
        assert!((a.dot(&a).sqrt() - 1.0).abs() < 1e-9);
        assert!(text_encode("", 64).iter().all(|&v| v == 0.0));
        assert!(text_encode("  ,. ", 64).iter().all(|&v| v == 0.0));
        assert_ne!(a, text_encode("a person waves the right arm", 64));
    }

    #[test]
    fn time_embedding_contract() {
        assert!(time_embed(0, 10, 8).is_err());
        assert!(time_embed(11, 10, 8).is_err());
        let e = time_embed(3, 10, 8).unwrap();
        assert_eq!(e, time_embed(3, 10, 8).unwrap());
        assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn time_embeddings_are_distinct() {
        for width in [4, 8, 64] {
            let embs: Vec<Array1<f64>> = (1..=1000).map(|t| time_embed(t, 1000, width).unwrap()).collect();
            for i in 0..embs.len() {
                for j in i + 1..embs.len() {
                    let d = &embs[i] - &embs[j];
                    assert!(d.dot(&d) > 0.0, "width {width}: t={} and t={} collide", i + 1, j + 1);
                }
            }
        }
    }
}
