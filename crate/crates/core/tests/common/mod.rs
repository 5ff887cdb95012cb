#![allow(dead_code)]

pub mod dd;

use lozenge_core::PolygonSpec;

/// Every polygon with `k` intervals, strip height `n`, `A_1 = -1/2`,
/// and gaps between intervals in `1..=max_gap`.
pub fn specs_with(k: usize, n: usize, max_gap: i64) -> Vec<PolygonSpec> {
    let mut out = Vec::new();
    let mut lens = vec![1usize; k];
    loop {
        if lens.iter().sum::<usize>() == n {
            let mut gaps = vec![1i64; k - 1];
            loop {
                let mut a = Vec::new();
                let mut b = Vec::new();
                let mut pos = -1i64;
                for i in 0..k {
                    a.push(pos);
                    pos += 2 * lens[i] as i64;
                    b.push(pos);
                    if i + 1 < k {
                        pos += 2 * gaps[i];
                    }
                }
                out.push(PolygonSpec::from_twice(n, &a, &b));
                if !bump(&mut gaps, max_gap as usize, 1) {
                    break;
                }
            }
        }
        if !bump_lens(&mut lens, n) {
            break;
        }
    }
    out
}

fn bump(v: &mut [i64], max: usize, min: i64) -> bool {
    for x in v.iter_mut() {
        if *x < max as i64 {
            *x += 1;
            return true;
        }
        *x = min;
    }
    false
}

fn bump_lens(v: &mut [usize], n: usize) -> bool {
    for x in v.iter_mut() {
        if *x < n {
            *x += 1;
            return true;
        }
        *x = 1;
    }
    false
}

/// The N=2 polygon with top row (2, 0).
pub fn tiny() -> PolygonSpec {
    PolygonSpec::from_twice(2, &[-1, 3], &[1, 5])
}

/// A k=3, N=3 polygon with 8 tilings.
pub fn three_interval() -> PolygonSpec {
    PolygonSpec::from_twice(3, &[-1, 3, 7], &[1, 5, 9])
}
