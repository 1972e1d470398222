//! Halton low-discrepancy sequences.

use alloc::vec::Vec;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Points of `(0, 1)^dim`; index 0 (the origin) is skipped.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        Self { dim, index: 0 }
    }

    /// Starts after `skip` points, so independent streams can share a dimension.
    pub fn with_offset(dim: usize, skip: u64) -> Self {
        Self { dim, index: skip }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.index += 1;
        PRIMES[..self.dim]
            .iter()
            .map(|&b| radical_inverse(self.index, b))
            .collect()
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}

pub fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = u64::from(base);
    let inv = 1.0 / f64::from(base);
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}
