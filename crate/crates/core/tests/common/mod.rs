//! Reference implementations used as test oracles. They share no code with the library.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

/// Truncated tensor keyed by multi-index; the empty index holds the scalar term.
pub type Tensor = BTreeMap<Vec<usize>, f64>;

pub fn multi_indices(d: usize, depth: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut level = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for idx in &level {
            for i in 0..d {
                let mut j: Vec<usize> = idx.clone();
                j.push(i);
                next.push(j);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// exp of a linear segment: term(I) = prod(delta[I_r]) / |I|!.
pub fn segment_tensor(delta: &[f64], depth: usize) -> Tensor {
    multi_indices(delta.len(), depth)
        .into_iter()
        .map(|idx| {
            let v = idx.iter().map(|&i| delta[i]).product::<f64>() / factorial(idx.len());
            (idx, v)
        })
        .collect()
}

/// Truncated product via every split of each multi-index.
pub fn tensor_mul(a: &Tensor, b: &Tensor, d: usize, depth: usize) -> Tensor {
    multi_indices(d, depth)
        .into_iter()
        .map(|idx| {
            let v = (0..=idx.len())
                .map(|p| a[&idx[..p].to_vec()] * b[&idx[p..].to_vec()])
                .sum();
            (idx, v)
        })
        .collect()
}

/// Signature of the piecewise-linear path, folding segments from the right.
pub fn naive_signature(points: &[Vec<f64>], depth: usize) -> Tensor {
    let d = points[0].len();
    let mut acc: Tensor = multi_indices(d, depth)
        .into_iter()
        .map(|idx| {
            let v = if idx.is_empty() { 1.0 } else { 0.0 };
            (idx, v)
        })
        .collect();
    for w in points.windows(2).rev() {
        let delta: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
        acc = tensor_mul(&segment_tensor(&delta, depth), &acc, d, depth);
    }
    acc
}

/// Largest deviation from the oracle, each level scaled by the a-priori bound
/// `L^m / m!` on its terms, where `L` sums the max-norm of the increments.
pub fn bounded_error(
    lib: &sigrecog::signature::PathSignature,
    oracle: &Tensor,
    points: &[Vec<f64>],
) -> f64 {
    let total: f64 = points
        .windows(2)
        .map(|w| {
            w[1].iter()
                .zip(&w[0])
                .map(|(b, a)| (b - a).abs())
                .fold(0.0, f64::max)
        })
        .sum();
    oracle
        .iter()
        .map(|(idx, v)| {
            let bound = total.powi(idx.len() as i32) / factorial(idx.len());
            (lib.term(idx) - v).abs() / bound.max(1e-300)
        })
        .fold(0.0, f64::max)
}

pub fn random_path<R: Rng>(rng: &mut R, d: usize, len: usize) -> Vec<Vec<f64>> {
    let mut p = vec![(0..d)
        .map(|_| rng.gen_range(-5.0..5.0))
        .collect::<Vec<f64>>()];
    for _ in 1..len {
        let last = p.last().unwrap().clone();
        p.push(last.iter().map(|x| x + rng.gen_range(-1.0..1.0)).collect());
    }
    p
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Minimum DTW cost over every monotone path, by exhaustive enumeration.
pub fn brute_force_dtw(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, usize) {
    fn walk(
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        i: usize,
        j: usize,
        cost: f64,
        best: &mut f64,
        paths: &mut usize,
    ) {
        let cost = cost + sq(&a[i], &b[j]);
        if i + 1 == a.len() && j + 1 == b.len() {
            *paths += 1;
            *best = best.min(cost);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, cost, best, paths);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, cost, best, paths);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, cost, best, paths);
        }
    }
    let mut best = f64::INFINITY;
    let mut paths = 0;
    walk(a, b, 0, 0, 0.0, &mut best, &mut paths);
    (best, paths)
}

/// Series of random length in `1..=max_len`.
pub fn random_series<R: Rng>(rng: &mut R, max_len: usize, d: usize) -> Vec<Vec<f64>> {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect()
}
