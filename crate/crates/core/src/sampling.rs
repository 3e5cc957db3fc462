//! Low-discrepancy sampling used for validity-set exploration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::SampleBox;

const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137,
    139, 149, 151, 157, 163, 167, 173,
];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// `n` points of a Halton sequence in the box, with a seeded
/// Cranley-Patterson shift so that sample points avoid lattice-aligned
/// coordinates such as exact zeros.
pub fn halton_points(bbox: &SampleBox, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = bbox.dim();
    assert!(dim <= PRIMES.len(), "Halton sampling supports at most {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (0..n)
        .map(|i| {
            let unit: Vec<f64> = (0..dim)
                .map(|d| (radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d]).fract())
                .collect();
            bbox.scale(&unit)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_stay_in_box_and_are_reproducible() {
        let b = SampleBox::new(vec![-1.0, 0.0, 5.0], vec![1.0, 2.0, 5.0]);
        let a = halton_points(&b, 100, 3);
        assert_eq!(a, halton_points(&b, 100, 3));
        assert!(a.iter().all(|p| b.contains(p)));
        assert_ne!(a, halton_points(&b, 100, 4));
    }
}
