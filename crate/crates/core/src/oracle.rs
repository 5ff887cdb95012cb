//! Ground truth at tiny scale: enumeration of interlacing arrays, lozenge
//! reconstruction, heights, tiling counts and the Kasteleyn matrix.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact_kernel::LozengeType;
use crate::linalg::{bareiss_det, inverse, Q};
use crate::polygon::PolygonSpec;
use crate::{Error, Result};

pub mod suite;

/// Interlacing array `x^1, ..., x^N`; `rows[m - 1]` is level `m`, decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticleArray {
    pub rows: Vec<Vec<i64>>,
}

impl ParticleArray {
    /// Particles on level `m`; level 0 is empty.
    pub fn row(&self, m: usize) -> &[i64] {
        if m == 0 {
            &[]
        } else {
            &self.rows[m - 1]
        }
    }

    pub fn levels(&self) -> usize {
        self.rows.len()
    }

    /// Check lengths, strict decrease, interlacing and the top row.
    pub fn check(&self, spec: &PolygonSpec) -> Result<()> {
        let top = spec.top_row()?;
        let bad = |msg: String| Err(Error::OutOfRange(format!("invalid array: {msg}")));
        if self.rows.len() != spec.n {
            return bad(format!("{} levels, expected {}", self.rows.len(), spec.n));
        }
        if self.rows[spec.n - 1] != top {
            return bad("top row differs from the polygon's".into());
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != i + 1 {
                return bad(format!("level {} has {} particles", i + 1, row.len()));
            }
        }
        for m in 2..=spec.n {
            let (lam, mu) = (self.row(m), self.row(m - 1));
            for (j, &v) in mu.iter().enumerate() {
                if !(lam[j + 1] < v && v <= lam[j]) {
                    return bad(format!("interlacing fails at level {} index {}", m - 1, j));
                }
            }
        }
        Ok(())
    }

    /// Number of particles on level `n` strictly right of `x`.
    fn count_right(&self, x: i64, n: usize) -> usize {
        self.row(n).iter().take_while(|&&v| v > x).count()
    }
}

/// Lozenge type at white triangle `(x, n)`, `1 <= n <= N`, any integer `x`.
///
/// Particles are `V`; elsewhere the cell is `S` when as many particles lie
/// to its right on level `n` as on level `n - 1`, and `L` when there is one
/// more on level `n`.
pub fn lozenge_type_at(arr: &ParticleArray, x: i64, n: usize) -> LozengeType {
    if arr.row(n).contains(&x) {
        return LozengeType::V;
    }
    let p = arr.count_right(x, n);
    let q = arr.count_right(x, n - 1);
    if p == q {
        LozengeType::S
    } else {
        debug_assert_eq!(p, q + 1);
        LozengeType::L
    }
}

/// Types of all lozenges of the tiling, keyed by their white triangle.
pub fn array_to_lozenges(spec: &PolygonSpec, arr: &ParticleArray) -> BTreeMap<(i64, i64), LozengeType> {
    let mut out = BTreeMap::new();
    for n in 1..=spec.n as i64 {
        let (lo, hi) = spec.strip_range(n);
        for x in lo..=hi {
            out.insert((x, n), lozenge_type_at(arr, x, n as usize));
        }
    }
    out
}

/// `h(x, n)`: number of `V` and `S` lozenges at `(x, 1), ..., (x, n)`.
pub fn height_of(arr: &ParticleArray, x: i64, n: usize) -> i64 {
    (1..=n).filter(|&m| lozenge_type_at(arr, x, m) != LozengeType::L).count() as i64
}

/// Closed form of the height: `n - #{j : x_j^n > x}`.
pub fn height_closed(arr: &ParticleArray, x: i64, n: usize) -> i64 {
    n as i64 - arr.count_right(x, n) as i64
}

/// Number of interlacing arrays below a strictly decreasing row:
/// `prod_{i<j} (x_i - x_j) / (j - i)`.
pub fn gt_dimension(row: &[i64]) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..row.len() {
        for j in i + 1..row.len() {
            num *= BigInt::from(row[i] - row[j]);
            den *= BigInt::from((j - i) as i64);
        }
    }
    num / den
}

/// Lexicographic stream of all arrays with the polygon's top row, rows
/// compared from level `N - 1` down to level 1.
pub struct ArrayIter {
    current: Option<ParticleArray>,
    emitted: u64,
    cap: u64,
}

/// Smallest row interlacing below `lam`.
fn min_row(lam: &[i64]) -> Vec<i64> {
    lam.windows(2).map(|w| w[1] + 1).collect()
}

/// Advance `mu` to the next row interlacing below `lam`; false when exhausted.
fn next_row(lam: &[i64], mu: &mut [i64]) -> bool {
    for i in (0..mu.len()).rev() {
        if mu[i] < lam[i] {
            mu[i] += 1;
            for (j, v) in mu.iter_mut().enumerate().skip(i + 1) {
                *v = lam[j + 1] + 1;
            }
            return true;
        }
    }
    false
}

impl ArrayIter {
    fn fill_below(rows: &mut [Vec<i64>], from: usize) {
        // rows[from] is set; reset all lower levels to their minimum
        for m in (0..from).rev() {
            rows[m] = min_row(&rows[m + 1]);
        }
    }
}

impl Iterator for ArrayIter {
    type Item = Result<ParticleArray>;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.current.clone()?;
        if self.emitted >= self.cap {
            self.current = None;
            return Some(Err(Error::EnumerationCap { cap: self.cap }));
        }
        self.emitted += 1;
        let mut rows = out.rows.clone();
        let mut advanced = false;
        for m in 0..rows.len().saturating_sub(1) {
            let (lower, upper) = rows.split_at_mut(m + 1);
            if next_row(&upper[0], &mut lower[m]) {
                ArrayIter::fill_below(&mut rows, m);
                advanced = true;
                break;
            }
        }
        self.current = if advanced { Some(ParticleArray { rows }) } else { None };
        Some(Ok(out))
    }
}

/// Stream every tiling once; yields an error after `cap` arrays.
pub fn enumerate_arrays(spec: &PolygonSpec, cap: u64) -> Result<ArrayIter> {
    let top = spec.top_row()?;
    let n = spec.n;
    let mut rows = vec![Vec::new(); n];
    rows[n - 1] = top;
    ArrayIter::fill_below(&mut rows, n - 1);
    Ok(ArrayIter { current: Some(ParticleArray { rows }), emitted: 0, cap })
}

pub fn collect_arrays(spec: &PolygonSpec, cap: u64) -> Result<Vec<ParticleArray>> {
    enumerate_arrays(spec, cap)?.collect()
}

/// White triangles of the dimer graph, in row-major order.
pub fn white_triangles(spec: &PolygonSpec) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for n in 1..=spec.n as i64 {
        let (lo, hi) = spec.strip_range(n);
        out.extend((lo..=hi).filter(|&x| !spec.forced_particle(x, n)).map(|x| (x, n)));
    }
    out
}

/// Black triangles of the dimer graph, levels `0..N`.
pub fn black_triangles(spec: &PolygonSpec) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for m in 0..spec.n as i64 {
        let (lo, hi) = spec.strip_range(m);
        out.extend((lo..=hi).filter(|&y| !spec.forced_particle(y, m)).map(|y| (y, m)));
    }
    out
}

/// Adjacency of white to black triangles with all weights 1.
pub struct Kasteleyn {
    pub whites: Vec<(i64, i64)>,
    pub blacks: Vec<(i64, i64)>,
    /// `entries[i][j]` pairs white `i` with black `j`.
    pub entries: Vec<Vec<u8>>,
}

pub fn kasteleyn_matrix(spec: &PolygonSpec) -> Result<Kasteleyn> {
    spec.ensure_valid()?;
    let whites = white_triangles(spec);
    let blacks = black_triangles(spec);
    let index: HashMap<(i64, i64), usize> = blacks.iter().enumerate().map(|(j, &b)| (b, j)).collect();
    let mut entries = vec![vec![0u8; blacks.len()]; whites.len()];
    for (i, &(x, n)) in whites.iter().enumerate() {
        for b in [(x, n), (x, n - 1), (x + 1, n - 1)] {
            if let Some(&j) = index.get(&b) {
                entries[i][j] = 1;
            }
        }
    }
    Ok(Kasteleyn { whites, blacks, entries })
}

impl Kasteleyn {
    pub fn is_square(&self) -> bool {
        self.whites.len() == self.blacks.len()
    }

    pub fn det(&self) -> BigInt {
        if !self.is_square() {
            return BigInt::zero();
        }
        let m = self.entries.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
        bareiss_det(m)
    }

    /// Exact inverse, indexed `[black][white]`.
    pub fn inverse(&self) -> Result<Vec<Vec<Q>>> {
        if !self.is_square() {
            return Err(Error::Numerical("Kasteleyn matrix is not square".into()));
        }
        let m: Vec<Vec<Q>> =
            self.entries.iter().map(|r| r.iter().map(|&v| Q::from_integer(BigInt::from(v))).collect()).collect();
        inverse(&m).ok_or_else(|| Error::Numerical("Kasteleyn matrix is singular".into()))
    }
}

/// Inverse Kasteleyn matrix keyed by `(black, white)`.
pub fn kasteleyn_inverse(spec: &PolygonSpec) -> Result<HashMap<((i64, i64), (i64, i64)), Q>> {
    let k = kasteleyn_matrix(spec)?;
    let inv = k.inverse()?;
    let mut out = HashMap::new();
    for (bi, &b) in k.blacks.iter().enumerate() {
        for (wi, &w) in k.whites.iter().enumerate() {
            out.insert((b, w), inv[bi][wi].clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingCounts {
    pub enumeration: Option<BigInt>,
    pub gt_dimension: BigInt,
    pub kasteleyn: BigInt,
}

impl TilingCounts {
    pub fn agree(&self) -> bool {
        self.enumeration.as_ref().is_none_or(|e| *e == self.gt_dimension) && self.gt_dimension == self.kasteleyn
    }
}

/// Tiling count by enumeration (skipped above `cap`), the product formula
/// on the top row, and `|det Kast|`.
pub fn count_tilings(spec: &PolygonSpec, cap: u64) -> Result<TilingCounts> {
    let top = spec.top_row()?;
    let gt = gt_dimension(&top);
    let mut count = 0u64;
    let mut enumeration = None;
    if gt <= BigInt::from(cap) {
        for a in enumerate_arrays(spec, cap)? {
            a?;
            count += 1;
        }
        enumeration = Some(BigInt::from(count));
    }
    let kasteleyn = kasteleyn_matrix(spec)?.det().abs();
    Ok(TilingCounts { enumeration, gt_dimension: gt, kasteleyn })
}

/// Exact uniform-measure expectation of `f` over all tilings.
pub fn expectation<F>(arrays: &[ParticleArray], f: F) -> Q
where
    F: Fn(&ParticleArray) -> Q,
{
    let total: Q = arrays.iter().map(f).sum();
    total / Q::from_integer(BigInt::from(arrays.len()))
}

/// `E prod_i (h(x_i, n_i) - E h(x_i, n_i))` under the uniform measure.
pub fn empirical_moment(spec: &PolygonSpec, points: &[(i64, i64)], cap: u64) -> Result<Q> {
    let arrays = collect_arrays(spec, cap)?;
    Ok(moment_over(&arrays, points))
}

/// [`empirical_moment`] over a precomputed list of all tilings.
pub fn moment_over(arrays: &[ParticleArray], points: &[(i64, i64)]) -> Q {
    let columns: Vec<Vec<i64>> =
        points.iter().map(|&(x, n)| arrays.iter().map(|a| height_closed(a, x, n as usize)).collect()).collect();
    let refs: Vec<&[i64]> = columns.iter().map(|c| c.as_slice()).collect();
    centered_moment(&refs)
}

/// `E prod_i (h_i - E h_i)` for equally likely outcomes, where `columns[i][t]`
/// is the value of `h_i` on outcome `t`.
///
/// Works in integers: with `C` outcomes and column sums `S_i`, the moment is
/// `sum_t prod_i (C h_i(t) - S_i) / C^(s+1)`.
pub fn centered_moment(columns: &[&[i64]]) -> Q {
    let count = columns.first().map_or(0, |c| c.len());
    if count == 0 {
        return Q::zero();
    }
    let c = BigInt::from(count);
    let sums: Vec<BigInt> = columns.iter().map(|col| BigInt::from(col.iter().sum::<i64>())).collect();
    let mut total = BigInt::zero();
    for t in 0..count {
        let mut term = BigInt::one();
        for (col, s) in columns.iter().zip(&sums) {
            term *= &c * col[t] - s;
        }
        total += term;
    }
    Q::new(total, c.pow(columns.len() as u32 + 1))
}
