//! Exact rational helpers: binomials, Pochhammer symbols, Bareiss
//! determinants and Gauss-Jordan inverses over `BigRational`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Rising factorial `y (y+1) ... (y+m-1)`, with `(y)_0 = 1`.
pub fn pochhammer(y: &Q, m: u32) -> Q {
    let mut acc = Q::one();
    let mut term = y.clone();
    for _ in 0..m {
        acc *= &term;
        term += Q::one();
    }
    acc
}

/// `C(n, k)` for integer `n >= 0` (0 if `k` is outside `0..=n`).
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Determinant of an integer matrix by Bareiss fraction-free elimination.
pub fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// Determinant of a rational matrix: clear each row's denominators, then Bareiss.
pub fn det(m: &[Vec<Q>]) -> Q {
    let mut scale = BigInt::one();
    let rows: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            scale *= &l;
            row.iter().map(|v| v.numer() * (&l / v.denom())).collect()
        })
        .collect();
    Q::new(bareiss_det(rows), scale)
}

/// Exact inverse by Gauss-Jordan elimination; `None` if singular.
pub fn inverse(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let da = &f * &a[col][j];
                a[r][j] -= da;
                let di = &f * &inv[col][j];
                inv[r][j] -= di;
            }
        }
    }
    Some(inv)
}

pub fn to_f64(v: &Q) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or_else(|| {
        // huge numerator and denominator: shift both down before dividing
        let bits = v.numer().bits().max(v.denom().bits()) as i64;
        let shift = (bits - 900).max(0) as usize;
        let n = (v.numer().abs() >> shift).to_f64().unwrap_or(f64::MAX);
        let d = (v.denom() >> shift).to_f64().unwrap_or(f64::MAX);
        let r = n / d;
        if v.is_negative() {
            -r
        } else {
            r
        }
    })
}
