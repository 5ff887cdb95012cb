//! Exact evaluation of the correlation kernel `K(x1,n1; x2,n2)`.
//!
//! The double contour integral collapses to a finite residue sum. With `T`
//! the fixed top row and `Phi(z) = prod_{t in T} (t - z)`, the `z`-integral
//! picks the simple poles at `t in T` with `t >= x2`, after which the
//! `w`-integrand is `prod_{s != t}(s - w)` divided by the falling product
//! `(w - x1)(w - x1 + 1)...(w - x1 + N - n1)`. Its residues at `w = x1 - j`
//! give a finite alternating sum; the pole at `w = t` is cancelled, so no
//! higher-order poles occur. All arithmetic is exact.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::{binomial, det, Q};
use crate::polygon::PolygonSpec;
use crate::{Error, Result};

pub use crate::linalg::pochhammer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LozengeType {
    /// Carries a particle of the interlacing array.
    V,
    /// The other non-horizontal lozenge.
    S,
    /// Horizontal lozenge.
    L,
}

impl fmt::Display for LozengeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            LozengeType::V => "V",
            LozengeType::S => "S",
            LozengeType::L => "L",
        };
        f.write_str(c)
    }
}

impl std::str::FromStr for LozengeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "V" | "v" => Ok(LozengeType::V),
            "S" | "s" => Ok(LozengeType::S),
            "L" | "l" => Ok(LozengeType::L),
            other => Err(Error::Parse(format!("unknown lozenge type {other:?}"))),
        }
    }
}

type InnerRow = Arc<Vec<(i64, Q)>>;

/// Kernel evaluator for one polygon, with read-mostly memo tables.
///
/// `K(x1,n1; x2,n2)` is defined for `1 <= n1 <= N` and `0 <= n2 <= N-1`;
/// level `n2 = 0` is the bottom boundary of black triangles and is needed by
/// the `S` and `L` cases of the extended kernel.
pub struct KernelEngine {
    spec: PolygonSpec,
    n: i64,
    top: Vec<i64>,
    inner: RwLock<HashMap<(i64, i64), InnerRow>>,
    values: RwLock<HashMap<(i64, i64, i64, i64), Q>>,
}

impl KernelEngine {
    pub fn new(spec: &PolygonSpec) -> Result<Self> {
        let top = spec.top_row()?;
        Ok(KernelEngine {
            spec: spec.clone(),
            n: spec.n as i64,
            top,
            inner: RwLock::new(HashMap::new()),
            values: RwLock::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &PolygonSpec {
        &self.spec
    }

    pub fn top_row(&self) -> &[i64] {
        &self.top
    }

    /// For each `t in T`: `sum_j (-1)^j C(N-n1, j) prod_{s != t}(s - (x1 - j))`
    /// divided by `prod_{s != t}(s - t)`.
    fn inner_row(&self, x1: i64, n1: i64) -> InnerRow {
        if let Some(row) = self.inner.read().unwrap().get(&(x1, n1)) {
            return row.clone();
        }
        let top = &self.top;
        let depth = self.n - n1;
        let mut acc: Vec<BigInt> = vec![BigInt::zero(); top.len()];
        for j in 0..=depth {
            let w = x1 - j;
            let c = binomial(depth, j);
            let c = if j % 2 == 1 { -c } else { c };
            if let Some(pos) = top.iter().position(|&t| t == w) {
                // only the t = w product survives
                let d: BigInt = top.iter().filter(|&&s| s != w).map(|&s| BigInt::from(s - w)).product();
                acc[pos] += c * d;
            } else {
                let phi: BigInt = top.iter().map(|&s| BigInt::from(s - w)).product();
                for (i, &t) in top.iter().enumerate() {
                    acc[i] += &c * (&phi / BigInt::from(t - w));
                }
            }
        }
        let row: Vec<(i64, Q)> = top
            .iter()
            .zip(acc)
            .map(|(&t, a)| {
                let d: BigInt = top.iter().filter(|&&s| s != t).map(|&s| BigInt::from(s - t)).product();
                (t, BigRational::new(a, d))
            })
            .collect();
        let row = Arc::new(row);
        self.inner.write().unwrap().insert((x1, n1), row.clone());
        row
    }

    /// Exact `K(x1,n1; x2,n2)`.
    pub fn kernel(&self, x1: i64, n1: i64, x2: i64, n2: i64) -> Result<Q> {
        if n1 < 1 || n1 > self.n || n2 < 0 || n2 > self.n - 1 {
            return Err(Error::OutOfRange(format!(
                "K({x1},{n1}; {x2},{n2}) needs 1 <= n1 <= {} and 0 <= n2 <= {}",
                self.n,
                self.n - 1
            )));
        }
        let key = (x1, n1, x2, n2);
        if let Some(v) = self.values.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let mut value = Q::zero();
        if n2 < n1 && x2 <= x1 {
            value -= Q::from_integer(binomial(x1 - x2 + n1 - n2 - 1, n1 - n2 - 1));
        }
        let row = self.inner_row(x1, n1);
        let m = self.n - n2 - 1;
        for (t, r) in row.iter() {
            if *t < x2 || r.is_zero() {
                continue;
            }
            value += r * Q::from_integer(binomial(t - x2 + m, m));
        }
        self.values.write().unwrap().insert(key, value.clone());
        Ok(value)
    }

    /// The extended kernel: the second argument is the white triangle of a
    /// lozenge of type `theta2`, paired with its black triangle.
    pub fn extended(&self, x1: i64, n1: i64, x2: i64, n2: i64, theta2: LozengeType) -> Result<Q> {
        match theta2 {
            LozengeType::V => self.kernel(x1, n1, x2, n2),
            LozengeType::S => Ok(-self.kernel(x1, n1, x2, n2 - 1)?),
            LozengeType::L => self.kernel(x1, n1, x2 + 1, n2 - 1),
        }
    }

    /// `det[K(p_i; p_j)]`: probability that all points carry particles.
    pub fn correlation(&self, points: &[(i64, i64)]) -> Result<Q> {
        check_distinct(points.iter().copied())?;
        let m = points
            .iter()
            .map(|&(x1, n1)| points.iter().map(|&(x2, n2)| self.kernel(x1, n1, x2, n2)).collect())
            .collect::<Result<Vec<Vec<Q>>>>()?;
        Ok(det(&m))
    }

    /// Joint probability of lozenges of the given types at distinct cells.
    pub fn lozenge_joint_prob(&self, items: &[(i64, i64, LozengeType)]) -> Result<Q> {
        check_distinct(items.iter().map(|&(x, n, _)| (x, n)))?;
        let m = items
            .iter()
            .map(|&(x1, n1, _)| items.iter().map(|&(x2, n2, th)| self.extended(x1, n1, x2, n2, th)).collect())
            .collect::<Result<Vec<Vec<Q>>>>()?;
        Ok(det(&m))
    }

    /// Probability of a single lozenge type at `(x, n)`, `1 <= n <= N`.
    ///
    /// On the top level the particles are fixed, so `V` there is read off
    /// the top row instead of the kernel.
    pub fn type_prob(&self, x: i64, n: i64, theta: LozengeType) -> Result<Q> {
        if n == self.n && theta == LozengeType::V {
            let hit = self.top.contains(&x);
            return Ok(if hit { Q::one() } else { Q::zero() });
        }
        self.lozenge_joint_prob(&[(x, n, theta)])
    }
}

fn check_distinct(points: impl Iterator<Item = (i64, i64)>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for p in points {
        if !seen.insert(p) {
            return Err(Error::OutOfRange(format!("duplicate position {p:?}")));
        }
    }
    Ok(())
}

/// One-shot `K(x1,n1; x2,n2)`; prefer [`KernelEngine`] for repeated calls.
pub fn kernel_k(spec: &PolygonSpec, x1: i64, n1: i64, x2: i64, n2: i64) -> Result<Q> {
    KernelEngine::new(spec)?.kernel(x1, n1, x2, n2)
}
