//! Exact uniform sampling of tilings, row by row from the top.
//!
//! Given level `m` with particles `lambda`, level `m - 1` is `mu` with
//! probability `dim(mu) / dim(lambda)`, and `dim(mu)` is proportional to the
//! Vandermonde `prod_{i<j}(mu_i - mu_j)`. The coordinates `mu_i` live in the
//! disjoint intervals `(lambda_{i+1}, lambda_i]`, so they are drawn one at a
//! time: the marginal weight of the next coordinate is a product of
//! differences with the drawn ones times a determinant whose remaining rows
//! are weighted power sums over the later intervals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{to_f64, Q};
use crate::oracle::ParticleArray;
use crate::polygon::PolygonSpec;
use crate::{Error, Result};

/// Generator for sample `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Candidate values and exact (unnormalized, positive) weights for
/// coordinate `head.len()` of the row below `lam`.
fn coordinate_weights(lam: &[i64], head: &[i64]) -> Vec<(i64, Q)> {
    let p = lam.len() - 1;
    let r = head.len();
    let (lo, hi) = (lam[r + 1] + 1, lam[r]);
    if lo == hi {
        return vec![(lo, Q::one())];
    }
    let q = p - r;
    let shift = hi;
    let w = |z: i64| -> BigInt { head.iter().map(|&m| BigInt::from(m - z)).product() };
    // weighted power sums over the later intervals, in shifted coordinates
    let rows: Vec<Vec<BigInt>> = (r + 1..p)
        .map(|t| {
            let mut row = vec![BigInt::zero(); q];
            for z in lam[t + 1] + 1..=lam[t] {
                let mut term = w(z);
                let zs = BigInt::from(z - shift);
                for entry in row.iter_mut() {
                    *entry += &term;
                    term *= &zs;
                }
            }
            row
        })
        .collect();
    let c = null_vector(rows, q);
    let mut out: Vec<(i64, BigInt)> = (lo..=hi)
        .map(|y| {
            let ys = BigInt::from(y - shift);
            let mut e = BigInt::zero();
            for cj in c.iter().rev() {
                e = e * &ys + cj;
            }
            (y, e * w(y))
        })
        .collect();
    // the null vector's sign is arbitrary
    if out.iter().any(|(_, v)| v.is_negative()) {
        for (_, v) in out.iter_mut() {
            *v = -std::mem::take(v);
        }
    }
    out.into_iter().map(|(y, v)| (y, Q::from_integer(v))).collect()
}

/// A nonzero integer solution of `rows * c = 0` for a `(q-1) x q` integer matrix.
fn null_vector(mut rows: Vec<Vec<BigInt>>, q: usize) -> Vec<BigInt> {
    if rows.is_empty() {
        return vec![BigInt::one()];
    }
    // fraction-free elimination to echelon form, recording pivot columns
    let nrows = rows.len();
    let mut pivots = Vec::with_capacity(nrows);
    let mut prev = BigInt::one();
    let mut r = 0;
    for col in 0..q {
        if r == nrows {
            break;
        }
        let Some(pr) = (r..nrows).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, pr);
        for i in r + 1..nrows {
            for j in col + 1..q {
                let v = &rows[i][j] * &rows[r][col] - &rows[i][col] * &rows[r][j];
                rows[i][j] = v / &prev;
            }
            rows[i][col] = BigInt::zero();
        }
        prev = rows[r][col].clone();
        pivots.push(col);
        r += 1;
    }
    let free = (0..q).find(|c| !pivots.contains(c)).expect("more columns than rows");
    let mut c = vec![BigInt::zero(); q];
    c[free] = BigInt::one();
    // back substitution, rescaling the solved part to stay integral
    for (i, &pc) in pivots.iter().enumerate().rev() {
        let s: BigInt = (pc + 1..q).filter(|&j| !c[j].is_zero()).map(|j| &c[j] * &rows[i][j]).sum();
        let d = rows[i][pc].clone();
        let g = s.gcd(&d);
        let (s, d) = (s / &g, d / &g);
        for v in c.iter_mut().skip(pc + 1) {
            *v *= &d;
        }
        c[pc] = -s;
    }
    let g = c.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if !g.is_one() && !g.is_zero() {
        c.iter_mut().for_each(|v| *v /= &g);
    }
    c
}

/// Draw from exact weights by an `f64` inverse CDF.
fn draw<R: Rng>(weights: &[(i64, Q)], rng: &mut R) -> i64 {
    if weights.len() == 1 {
        return weights[0].0;
    }
    let total: Q = weights.iter().map(|(_, w)| w.clone()).sum();
    let mut probs: Vec<f64> = weights.iter().map(|(_, w)| to_f64(&(w / &total))).collect();
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return weights[i].0;
        }
    }
    // u landed in the rounding slack at the top
    weights.iter().rev().find(|(_, w)| !w.is_zero()).unwrap().0
}

/// Draw the row below `lam`.
pub fn sample_row<R: Rng>(lam: &[i64], rng: &mut R) -> Vec<i64> {
    let mut mu = Vec::with_capacity(lam.len() - 1);
    while mu.len() + 1 < lam.len() {
        let y = draw(&coordinate_weights(lam, &mu), rng);
        mu.push(y);
    }
    mu
}

/// One exactly uniform random tiling.
pub fn sample<R: Rng>(spec: &PolygonSpec, rng: &mut R) -> Result<ParticleArray> {
    let top = spec.top_row()?;
    let mut rows = vec![top];
    while rows.last().unwrap().len() > 1 {
        let next = sample_row(rows.last().unwrap(), rng);
        rows.push(next);
    }
    rows.reverse();
    Ok(ParticleArray { rows })
}

/// Probability that [`sample`] produces `arr`, as the exact product of
/// the coordinate conditionals it uses.
pub fn array_probability(spec: &PolygonSpec, arr: &ParticleArray) -> Result<Q> {
    arr.check(spec)?;
    let mut prob = Q::one();
    for m in (2..=spec.n).rev() {
        let lam = arr.row(m);
        let mu = arr.row(m - 1);
        for r in 0..mu.len() {
            let weights = coordinate_weights(lam, &mu[..r]);
            let total: Q = weights.iter().map(|(_, w)| w.clone()).sum();
            let hit = weights.iter().find(|(y, _)| *y == mu[r]).map(|(_, w)| w.clone());
            prob *= hit.unwrap_or_else(Q::zero) / total;
        }
    }
    Ok(prob)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub spec: PolygonSpec,
    pub seed: u64,
    pub arrays: Vec<ParticleArray>,
}

/// `count` samples; sample `i` uses stream `i`, so the batch depends only on
/// `(spec, seed, count)` and not on the worker count.
pub fn sample_batch(spec: &PolygonSpec, seed: u64, count: usize) -> Result<SampleBatch> {
    spec.ensure_valid()?;
    let arrays =
        (0..count as u64).into_par_iter().map(|i| sample(spec, &mut rng_for(seed, i))).collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch { spec: spec.clone(), seed, arrays })
}

/// Monte Carlo estimate of a centered product with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub points: Vec<(i64, i64)>,
    pub estimate: f64,
    pub std_error: f64,
}

pub const MIN_SAMPLES: usize = 100;
const BATCHES: usize = 20;

/// Estimates of `E prod_i (h(p_i) - E h(p_i))` for each requested product,
/// centered by exact mean heights; standard errors from batch means.
pub fn mc_moments(
    spec: &PolygonSpec,
    products: &[Vec<(i64, i64)>],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::OutOfRange(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    let engine = crate::KernelEngine::new(spec)?;
    let means: Vec<Vec<f64>> = products
        .iter()
        .map(|pts| {
            pts.iter().map(|&(x, n)| crate::fluctuations::mean_height(&engine, x, n).map(|v| to_f64(&v))).collect()
        })
        .collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let arr = sample(spec, &mut rng_for(seed, i))?;
            Ok(products
                .iter()
                .zip(&means)
                .map(|(pts, mu)| {
                    pts.iter()
                        .zip(mu)
                        .map(|(&(x, n), m)| crate::oracle::height_closed(&arr, x, n as usize) as f64 - m)
                        .product()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(products
        .iter()
        .enumerate()
        .map(|(k, pts)| {
            let xs: Vec<f64> = values.iter().map(|v| v[k]).collect();
            let (estimate, std_error) = batch_means(&xs, BATCHES);
            McEstimate { points: pts.clone(), estimate, std_error }
        })
        .collect())
}

/// Mean and batch-means standard error; trailing samples beyond a
/// multiple of `batches` only enter the mean.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let size = xs.len() / batches;
    let bm: Vec<f64> = xs.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let bmean = bm.iter().sum::<f64>() / batches as f64;
    let var = bm.iter().map(|b| (b - bmean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}
