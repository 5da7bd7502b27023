use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Two Gaussian blobs in the plane: label 0 around `(−1, −1)`, label 1
/// around `(1, 1)`, shuffled.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyDataset {
    /// Flattened `(x₁, x₂)` pairs.
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
    pub per_class: usize,
    pub std: f64,
    pub seed: u64,
}

pub const BLOB_STD: f64 = 0.3;

impl ToyDataset {
    pub fn blobs(per_class: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        let noise = Normal::new(0.0, BLOB_STD).unwrap();
        let mut points: Vec<([f64; 2], usize)> = Vec::with_capacity(2 * per_class);
        for (label, mean) in [(0usize, -1.0), (1usize, 1.0)] {
            for _ in 0..per_class {
                let p = [mean + noise.sample(&mut rng), mean + noise.sample(&mut rng)];
                points.push((p, label));
            }
        }
        rng.shuffle(&mut points);
        Self {
            inputs: points.iter().flat_map(|(p, _)| *p).collect(),
            labels: points.iter().map(|(_, l)| *l).collect(),
            per_class,
            std: BLOB_STD,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[2 * i..2 * i + 2]
    }

    /// Contiguous partition into `n` batches whose sizes differ by at most one.
    pub fn batches(&self, n: usize) -> Result<Vec<std::ops::Range<usize>>> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot split {} points into {n} batches",
                self.len()
            )));
        }
        let (q, r) = (self.len() / n, self.len() % n);
        let mut out = Vec::with_capacity(n);
        let mut start = 0;
        for b in 0..n {
            let size = q + usize::from(b < r);
            out.push(start..start + size);
            start += size;
        }
        Ok(out)
    }
}
