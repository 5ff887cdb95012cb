//! Exact finite-N height moments and their comparison with the Gaussian
//! free field prediction.
//!
//! Heights are written as sums of lozenge indicators along lattice paths to
//! the bottom boundary: one step up a column adds `1 - 1{L}`, one step right
//! along a row adds `1{V}`. A product of centered heights is then a signed
//! sum of centered indicator products over one cell per path, and for
//! distinct cells `E prod (1_i - p_i)` is the determinant of the extended
//! kernel matrix with its diagonal zeroed.

use std::collections::HashSet;
use std::f64::consts::PI;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact_kernel::{KernelEngine, LozengeType};
use crate::limit_shape;
use crate::linalg::{det, to_f64, Q};
use crate::polygon::{scale, LimitPolygon, PolygonSpec};
use crate::sampler::mc_moments;
use crate::{Error, Result};

/// `E h(x, n)`: expected number of `V` and `S` lozenges at `(x, 1..=n)`.
pub fn mean_height(engine: &KernelEngine, x: i64, n: i64) -> Result<Q> {
    let big_n = engine.spec().n as i64;
    if n < 0 || n > big_n {
        return Err(Error::OutOfRange(format!("level {n} outside 0..={big_n}")));
    }
    let mut total = Q::zero();
    for m in 1..=n {
        total += Q::one() - engine.type_prob(x, m, LozengeType::L)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Segment {
    /// Along level `n`; contributes `h(x_from, n) - h(x_to, n)`.
    Horizontal { n: i64, x_from: i64, x_to: i64 },
    /// Down column `x`; contributes `h(x, n_from) - h(x, n_to)`.
    Vertical { x: i64, n_from: i64, n_to: i64 },
}

/// A lattice path from an anchor down to level 0; the height at the anchor
/// is the sum of the segment contributions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSpec {
    pub anchor: (i64, i64),
    pub segments: Vec<Segment>,
}

/// One indicator in a path sum: the lozenge of type `theta` at `(x, n)`
/// with coefficient `sign`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub x: i64,
    pub n: i64,
    pub theta: LozengeType,
    pub sign: i8,
}

const MAX_SEGMENTS: usize = 8;
const JOG_BUDGET: i64 = 16;
const TANGENCY_MARGIN: f64 = 0.02;

impl PathSpec {
    pub fn vertical(x: i64, n: i64) -> Self {
        PathSpec { anchor: (x, n), segments: vec![Segment::Vertical { x, n_from: n, n_to: 0 }] }
    }

    /// One horizontal jog to column `x + dx`, then straight down.
    pub fn jogged(x: i64, n: i64, dx: i64) -> Self {
        PathSpec {
            anchor: (x, n),
            segments: vec![
                Segment::Horizontal { n, x_from: x, x_to: x + dx },
                Segment::Vertical { x: x + dx, n_from: n, n_to: 0 },
            ],
        }
    }

    /// Indicator cells of the path; the constant parts drop out after centering.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for seg in &self.segments {
            match *seg {
                Segment::Horizontal { n, x_from, x_to } => {
                    let (lo, hi, sign) = if x_from > x_to { (x_to, x_from, 1) } else { (x_from, x_to, -1) };
                    out.extend((lo + 1..=hi).map(|x| Cell { x, n, theta: LozengeType::V, sign }));
                }
                Segment::Vertical { x, n_from, n_to } => {
                    let (lo, hi, sign) = if n_from > n_to { (n_to, n_from, -1) } else { (n_from, n_to, 1) };
                    out.extend((lo + 1..=hi).map(|n| Cell { x, n, theta: LozengeType::L, sign }));
                }
            }
        }
        out
    }

    /// Check the segments chain from the anchor to level 0.
    pub fn check(&self) -> Result<()> {
        let bad = || Err(Error::OutOfRange(format!("malformed path {self:?}")));
        if self.segments.is_empty() || self.segments.len() > MAX_SEGMENTS {
            return bad();
        }
        let mut at = self.anchor;
        for seg in &self.segments {
            at = match *seg {
                Segment::Horizontal { n, x_from, x_to } if (x_from, n) == at => (x_to, n),
                Segment::Vertical { x, n_from, n_to } if (x, n_from) == at => (x, n_to),
                _ => return bad(),
            };
        }
        if at.1 != 0 {
            return bad();
        }
        Ok(())
    }
}

fn positions(cells: &[Cell]) -> HashSet<(i64, i64)> {
    cells.iter().map(|c| (c.x, c.n)).collect()
}

/// Paths for lattice anchors: straight down where possible, else one jog of
/// minimal width (left first) keeping all cells of different paths distinct.
pub fn build_lattice_paths(anchors: &[(i64, i64)]) -> Result<Vec<PathSpec>> {
    let mut used: HashSet<(i64, i64)> = HashSet::new();
    let mut out: Vec<PathSpec> = Vec::new();
    for &(x, n) in anchors {
        let free = |p: &PathSpec| positions(&p.cells()).is_disjoint(&used);
        let mut found = None;
        let straight = PathSpec::vertical(x, n);
        if free(&straight) {
            found = Some(straight);
        } else {
            'search: for w in 1..=JOG_BUDGET {
                for dx in [-w, w] {
                    let p = PathSpec::jogged(x, n, dx);
                    if free(&p) {
                        found = Some(p);
                        break 'search;
                    }
                }
            }
        }
        let path = found.ok_or(Error::PathConflict { x, n })?;
        used.extend(positions(&path.cells()));
        out.push(path);
    }
    Ok(out)
}

/// Lattice anchor `(floor(chi N), floor(eta N))` of a limit point.
pub fn anchor(spec: &PolygonSpec, chi: f64, eta: f64) -> (i64, i64) {
    let n = spec.n as f64;
    ((chi * n).floor() as i64, (eta * n).floor() as i64)
}

/// Paths for limit points: the points must be liquid and distinct, and no
/// column may pass within a small margin of where the frozen boundary
/// touches the bottom side.
pub fn build_paths(spec: &PolygonSpec, lp: &LimitPolygon, points: &[(f64, f64)]) -> Result<Vec<PathSpec>> {
    let touch = limit_shape::bottom_tangency(lp);
    let mut anchors = Vec::new();
    for &(chi, eta) in points {
        if limit_shape::solve_w(lp, chi, eta)?.is_none() {
            return Err(Error::NotLiquid { chi, eta });
        }
        let a = anchor(spec, chi, eta);
        let column = a.0 as f64 / spec.n as f64;
        if (chi - touch).abs() < TANGENCY_MARGIN || (column - touch).abs() < TANGENCY_MARGIN {
            return Err(Error::OutOfRange(format!(
                "column chi = {chi} passes within {TANGENCY_MARGIN} of the bottom tangency at {touch}"
            )));
        }
        if anchors.contains(&a) {
            return Err(Error::OutOfRange(format!("points coincide on the lattice at {a:?}")));
        }
        anchors.push(a);
    }
    build_lattice_paths(&anchors)
}

/// `E prod_i (h(anchor_i) - E h(anchor_i))`, exactly.
pub fn moment_prop(engine: &KernelEngine, paths: &[PathSpec]) -> Result<Q> {
    let big_n = engine.spec().n as i64;
    let cells: Vec<Vec<Cell>> = paths
        .iter()
        .map(|p| {
            p.check()?;
            if p.anchor.1 >= big_n {
                return Err(Error::OutOfRange(format!("anchor {:?} must lie below level N", p.anchor)));
            }
            Ok(p.cells())
        })
        .collect::<Result<_>>()?;
    let mut seen = HashSet::new();
    for cs in &cells {
        let own = positions(cs);
        if own.iter().any(|p| seen.contains(p)) {
            return Err(Error::OutOfRange("paths share a summation cell".into()));
        }
        seen.extend(own);
    }
    let s = cells.len();
    if s <= 1 || cells.iter().any(|c| c.is_empty()) {
        return Ok(Q::zero());
    }
    // entries between every pair of cells of different paths
    let entry = |a: &Cell, b: &Cell| engine.extended(a.x, a.n, b.x, b.n, b.theta);
    let mut blocks: Vec<Vec<Vec<Vec<Q>>>> = vec![vec![Vec::new(); s]; s];
    for i in 0..s {
        for j in 0..s {
            if i != j {
                blocks[i][j] = cells[i]
                    .par_iter()
                    .map(|a| cells[j].iter().map(|b| entry(a, b)).collect::<Result<Vec<Q>>>())
                    .collect::<Result<_>>()?;
            }
        }
    }
    if s == 2 {
        let mut total = Q::zero();
        for (ia, a) in cells[0].iter().enumerate() {
            for (ib, b) in cells[1].iter().enumerate() {
                let term = &blocks[0][1][ia][ib] * &blocks[1][0][ib][ia];
                if a.sign * b.sign > 0 {
                    total -= term;
                } else {
                    total += term;
                }
            }
        }
        return Ok(total);
    }
    // general s: enumerate one cell per path
    let sizes: Vec<usize> = cells.iter().map(|c| c.len()).collect();
    let count: usize = sizes.iter().product();
    let total = (0..count)
        .into_par_iter()
        .map(|mut code| {
            let mut idx = vec![0usize; s];
            for (k, &sz) in sizes.iter().enumerate() {
                idx[k] = code % sz;
                code /= sz;
            }
            let m: Vec<Vec<Q>> = (0..s)
                .map(|i| {
                    (0..s).map(|j| if i == j { Q::zero() } else { blocks[i][j][idx[i]][idx[j]].clone() }).collect()
                })
                .collect();
            let sign: i32 = (0..s).map(|k| cells[k][idx[k]].sign as i32).product();
            let d = det(&m);
            if sign > 0 {
                d
            } else {
                -d
            }
        })
        .reduce(Q::zero, |a, b| a + b);
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MomentMode {
    Exact,
    MonteCarlo { n_samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub points: Vec<(f64, f64)>,
    /// Exact moment as `num/den`, when computed exactly.
    pub exact_moment: Option<String>,
    pub moment: f64,
    pub std_error: Option<f64>,
    pub gff_prediction: f64,
    pub scaled_gap: f64,
}

impl MomentReport {
    pub fn s(&self) -> usize {
        self.points.len()
    }
}

/// Exact or Monte Carlo moment of the heights at liquid points of `lp` on the
/// lattice polygon `spec`, with the GFF prediction and
/// `|pi^{s/2} moment - prediction|`.
pub fn moment_report(
    spec: &PolygonSpec,
    lp: &LimitPolygon,
    points: &[(f64, f64)],
    mode: &MomentMode,
) -> Result<MomentReport> {
    let prediction = limit_shape::gff_pairing_moment(lp, points)?;
    let factor = PI.powf(points.len() as f64 / 2.0);
    let paths = build_paths(spec, lp, points)?;
    let engine = KernelEngine::new(spec)?;
    let (exact_moment, moment, std_error) = match mode {
        MomentMode::Exact => {
            let m = moment_prop(&engine, &paths)?;
            (Some(m.to_string()), to_f64(&m), None)
        }
        MomentMode::MonteCarlo { n_samples, seed } => {
            if let Some(p) = paths.iter().find(|p| p.segments.len() > 1) {
                return Err(Error::PathConflict { x: p.anchor.0, n: p.anchor.1 });
            }
            let anchors: Vec<(i64, i64)> = paths.iter().map(|p| p.anchor).collect();
            let est = mc_moments(spec, &[anchors], *n_samples, *seed)?;
            (None, est[0].estimate, Some(est[0].std_error))
        }
    };
    Ok(MomentReport {
        n: spec.n,
        points: points.to_vec(),
        exact_moment,
        moment,
        std_error,
        gff_prediction: prediction,
        scaled_gap: (factor * moment - prediction).abs(),
    })
}

/// [`moment_report`] on `scale(lp, n)` for each strip height in `n_list`.
pub fn gff_gap_table(
    lp: &LimitPolygon,
    points: &[(f64, f64)],
    n_list: &[usize],
    mode: &MomentMode,
) -> Result<Vec<MomentReport>> {
    n_list.iter().map(|&n| moment_report(&scale(lp, n)?, lp, points, mode)).collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{collect_arrays, expectation, height_closed, moment_over};

    fn tiny() -> PolygonSpec {
        PolygonSpec::from_twice(2, &[-1, 3], &[1, 5])
    }

    #[test]
    fn mean_height_matches_oracle() {
        let spec = PolygonSpec::from_twice(4, &[-1, 7], &[3, 11]);
        let engine = KernelEngine::new(&spec).unwrap();
        let all = collect_arrays(&spec, 1000).unwrap();
        for x in -2..7 {
            assert_eq!(mean_height(&engine, x, 0).unwrap(), Q::zero());
            let mut prev = Q::zero();
            for n in 1..=4 {
                let exact = expectation(&all, |a| Q::from_integer(height_closed(a, x, n).into()));
                let m = mean_height(&engine, x, n as i64).unwrap();
                assert_eq!(m, exact, "({x},{n})");
                assert!(m >= prev);
                prev = m;
            }
        }
    }

    #[test]
    fn vertical_paths() {
        let paths = build_lattice_paths(&[(1, 2), (3, 1)]).unwrap();
        assert!(paths.iter().all(|p| p.segments.len() == 1));
        let paths = build_lattice_paths(&[(1, 1), (1, 3)]).unwrap();
        assert_eq!(paths[1].segments.len(), 2);
        let paths = build_lattice_paths(&[(1, 3), (1, 1)]).unwrap();
        assert_eq!(paths[1], PathSpec::jogged(1, 1, 1));
    }

    #[test]
    fn jogged_path_is_height() {
        let spec = PolygonSpec::from_twice(4, &[-1, 7], &[3, 11]);
        for a in collect_arrays(&spec, 1000).unwrap() {
            for dx in [-2, -1, 1, 2] {
                let p = PathSpec::jogged(2, 3, dx);
                let mut h = 0;
                for seg in &p.segments {
                    if let Segment::Vertical { n_from, n_to, .. } = seg {
                        h += n_from - n_to;
                    }
                }
                for c in p.cells() {
                    let t = crate::oracle::lozenge_type_at(&a, c.x, c.n as usize);
                    if t == c.theta {
                        h += c.sign as i64;
                    }
                }
                assert_eq!(h, height_closed(&a, 2, 3));
            }
        }
    }

    #[test]
    fn single_path_is_centered() {
        let engine = KernelEngine::new(&tiny()).unwrap();
        assert_eq!(moment_prop(&engine, &[PathSpec::vertical(1, 1)]).unwrap(), Q::zero());
    }

    #[test]
    fn two_and_three_paths_match_oracle() {
        let spec = PolygonSpec::from_twice(4, &[-1, 7], &[3, 11]);
        let engine = KernelEngine::new(&spec).unwrap();
        let all = collect_arrays(&spec, 1000).unwrap();
        let anchors = [(1, 2), (2, 3), (3, 1)];
        let paths = build_lattice_paths(&anchors[..2]).unwrap();
        assert_eq!(moment_prop(&engine, &paths).unwrap(), moment_over(&all, &anchors[..2]));
        let paths = build_lattice_paths(&anchors).unwrap();
        assert_eq!(moment_prop(&engine, &paths).unwrap(), moment_over(&all, &anchors));
    }

    #[test]
    fn overlapping_paths_rejected() {
        let engine = KernelEngine::new(&tiny()).unwrap();
        let p = vec![PathSpec::vertical(1, 1), PathSpec::vertical(1, 1)];
        assert!(moment_prop(&engine, &p).is_err());
    }

    #[test]
    fn slope() {
        assert!((regression_slope(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }
}
