#![allow(dead_code)]

use pltf_core::rng::{substream, Stream};
use pltf_core::{FactorMatrix, LatentFactors, RelationalTensor};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Planted factors with standard normal entries and the tensor of their
/// thresholded reconstructions, each entry observed with probability
/// `observe_prob`.
pub fn planted(
    seed: u64,
    n: usize,
    t: usize,
    d: usize,
    observe_prob: f64,
) -> (RelationalTensor, LatentFactors) {
    let mut rng = substream(seed, Stream::Synthetic);
    let mut m = |rows| {
        FactorMatrix::from_fn(rows, d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z
        })
    };
    let (u, v, r) = (m(n), m(n), m(t));
    let truth = LatentFactors::new(u, v, r, 1.0).unwrap();
    let mut rng = substream(seed, Stream::Observation);
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..t {
                if rng.random::<f64>() < observe_prob {
                    let s = truth.reconstruct_entry(i, j, k).unwrap();
                    triples.push((i, j, k, u8::from(s > 0.0)));
                }
            }
        }
    }
    (RelationalTensor::build(n, t, triples).unwrap(), truth)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Total-variation distance between the histogram of `draws` and the
/// probability mass a grid density puts in the same bins.
pub fn binned_tv(draws: &[f64], grid: &[f64], density: &[f64], bins: usize) -> f64 {
    let lo = grid[0];
    let hi = grid[grid.len() - 1];
    let width = (hi - lo) / bins as f64;
    let bin = |x: f64| (((x - lo) / width) as isize).clamp(0, bins as isize - 1) as usize;
    let mut q = vec![0.0; bins];
    let total: f64 = density.iter().sum();
    for (&x, &p) in grid.iter().zip(density) {
        q[bin(x)] += p / total;
    }
    let mut p = vec![0.0; bins];
    for &x in draws {
        p[bin(x)] += 1.0 / draws.len() as f64;
    }
    0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
        .collect()
}
