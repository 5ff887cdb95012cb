//! Polygons of the 3k-sided class: a strip `0 <= n <= N` whose top line
//! carries `k` particle intervals `(A_i, B_i)` with half-integer endpoints.
//!
//! Coordinates follow the affine square-grid picture: `x` horizontal, `n`
//! vertical. The polygon is the strip minus three kinds of frozen zones:
//! the lower-left slanted zone, the zone right of `B_k`, and one triangle of
//! forced particles hanging below every top interval.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A number in `Z/2`, stored as twice its value so arithmetic stays exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt {
    twice_value: i64,
}

impl HalfInt {
    pub const fn from_twice(twice_value: i64) -> Self {
        HalfInt { twice_value }
    }

    /// `k + 1/2`.
    pub const fn half_above(k: i64) -> Self {
        HalfInt { twice_value: 2 * k + 1 }
    }

    pub const fn twice(self) -> i64 {
        self.twice_value
    }

    /// True for proper half-integers (`Z + 1/2`).
    pub const fn is_proper(self) -> bool {
        self.twice_value.rem_euclid(2) == 1
    }

    /// The integer `self + 1/2`; only meaningful for proper half-integers.
    pub const fn ceil(self) -> i64 {
        (self.twice_value + 1).div_euclid(2)
    }

    /// The integer `self - 1/2` for proper half-integers.
    pub const fn floor(self) -> i64 {
        self.twice_value.div_euclid(2)
    }

    pub fn to_f64(self) -> f64 {
        self.twice_value as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice_value % 2 == 0 {
            write!(f, "{}", self.twice_value / 2)
        } else {
            write!(f, "{}/2", self.twice_value)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a half-integer: {s:?}"));
        match s.split_once('/') {
            Some((num, den)) => {
                let num: i64 = num.trim().parse().map_err(|_| bad())?;
                match den.trim() {
                    "1" => Ok(HalfInt::from_twice(2 * num)),
                    "2" => Ok(HalfInt::from_twice(num)),
                    _ => Err(bad()),
                }
            }
            None => {
                if let Ok(k) = s.parse::<i64>() {
                    return Ok(HalfInt::from_twice(2 * k));
                }
                let v: f64 = s.parse().map_err(|_| bad())?;
                let twice = 2.0 * v;
                if (twice - twice.round()).abs() > 1e-12 {
                    return Err(bad());
                }
                Ok(HalfInt::from_twice(twice.round() as i64))
            }
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Num(f64),
        }
        let text = match Raw::deserialize(deserializer)? {
            Raw::Str(s) => s,
            Raw::Num(v) => v.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite polygon: strip height `N` and the `k` top intervals `(A_i, B_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolygonSpec {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<HalfInt>,
    #[serde(rename = "B")]
    pub b: Vec<HalfInt>,
}

/// Why a [`PolygonSpec`] is not a member of the polygon class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyStrip,
    LengthMismatch { a: usize, b: usize },
    TooFewIntervals(usize),
    NotHalfInteger(HalfInt),
    Ordering,
    SumMismatch { n: usize, sum: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyStrip => write!(f, "strip height N must be positive"),
            Violation::LengthMismatch { a, b } => {
                write!(f, "A has {a} entries but B has {b}")
            }
            Violation::TooFewIntervals(k) => write!(f, "need k >= 2 intervals, got {k}"),
            Violation::NotHalfInteger(h) => write!(f, "{h} is not a proper half-integer"),
            Violation::Ordering => write!(f, "ordering: A_1 < B_1 < A_2 < ... < B_k violated"),
            Violation::SumMismatch { n, sum } => {
                write!(f, "sum mismatch: sum(B_i - A_i) = {sum} but N = {n}")
            }
        }
    }
}

impl PolygonSpec {
    /// Build from doubled endpoints, e.g. `A = (-1/2, 3/2)` is `[-1, 3]`.
    pub fn from_twice(n: usize, a: &[i64], b: &[i64]) -> Self {
        PolygonSpec {
            n,
            a: a.iter().map(|&t| HalfInt::from_twice(t)).collect(),
            b: b.iter().map(|&t| HalfInt::from_twice(t)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.n == 0 {
            return Err(Violation::EmptyStrip);
        }
        if self.a.len() != self.b.len() {
            return Err(Violation::LengthMismatch { a: self.a.len(), b: self.b.len() });
        }
        if self.a.len() < 2 {
            return Err(Violation::TooFewIntervals(self.a.len()));
        }
        if let Some(h) = self.a.iter().chain(&self.b).find(|h| !h.is_proper()) {
            return Err(Violation::NotHalfInteger(*h));
        }
        let interleaved: Vec<HalfInt> = self.a.iter().zip(&self.b).flat_map(|(a, b)| [*a, *b]).collect();
        if interleaved.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Violation::Ordering);
        }
        let sum: i64 = self.a.iter().zip(&self.b).map(|(a, b)| (b.twice() - a.twice()) / 2).sum();
        if sum != self.n as i64 {
            return Err(Violation::SumMismatch { n: self.n, sum });
        }
        Ok(())
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidPolygon)
    }

    /// The fixed particles on level `N`, strictly decreasing.
    pub fn top_row(&self) -> Result<Vec<i64>> {
        self.ensure_valid()?;
        let mut row: Vec<i64> = self.a.iter().zip(&self.b).flat_map(|(a, b)| a.ceil()..=b.floor()).collect();
        row.reverse();
        Ok(row)
    }

    /// Whether the lattice point `(x, n)` lies in the closed polygon.
    pub fn contains(&self, x: i64, n: i64) -> bool {
        let big_n = self.n as i64;
        if n < 0 || n > big_n {
            return false;
        }
        let tx = 2 * x;
        let shift = 2 * (big_n - n);
        if tx < self.a[0].twice() + shift || tx > self.b[self.k() - 1].twice() {
            return false;
        }
        // open triangles of forced particles below each top interval
        !self.a.iter().zip(&self.b).any(|(a, b)| a.twice() + shift < tx && tx < b.twice())
    }

    /// Inclusive `x` range of white triangles on level `n` that are not in
    /// the lower-left or right frozen zones.
    pub(crate) fn strip_range(&self, n: i64) -> (i64, i64) {
        let big_n = self.n as i64;
        (self.a[0].ceil() + big_n - n, self.b[self.k() - 1].floor())
    }

    /// True when the triangle pair at `(x, n)` is a particle in every tiling
    /// because it sits in a forced triangle below a top interval.
    pub(crate) fn forced_particle(&self, x: i64, n: i64) -> bool {
        let big_n = self.n as i64;
        n >= 1 && n <= big_n && self.a.iter().zip(&self.b).any(|(a, b)| a.ceil() + (big_n - n) <= x && x <= b.floor())
    }
}

/// Free-function form of [`PolygonSpec::validate`].
pub fn validate(spec: &PolygonSpec) -> std::result::Result<(), Violation> {
    spec.validate()
}

pub fn top_row(spec: &PolygonSpec) -> Result<Vec<i64>> {
    spec.top_row()
}

pub fn lattice_membership(spec: &PolygonSpec, x: i64, n: i64) -> bool {
    spec.contains(x, n)
}

/// Continuous polygon parameters `a_1 < b_1 < ... < a_k < b_k`, `sum(b - a) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPolygon {
    #[serde(deserialize_with = "de_decimals", serialize_with = "ser_decimals")]
    pub a: Vec<f64>,
    #[serde(deserialize_with = "de_decimals", serialize_with = "ser_decimals")]
    pub b: Vec<f64>,
}

fn de_decimals<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Num(f64),
    }
    Vec::<Raw>::deserialize(d)?
        .into_iter()
        .map(|r| match r {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => s.trim().parse::<f64>().map_err(serde::de::Error::custom),
        })
        .collect()
}

fn ser_decimals<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| format!("{x}")))
}

impl LimitPolygon {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let lp = LimitPolygon { a, b };
        lp.validate()?;
        Ok(lp)
    }

    /// The symmetric hexagon `a = (-1, 1/2)`, `b = (-1/2, 1)`.
    pub fn hexagon() -> Self {
        LimitPolygon { a: vec![-1.0, 0.5], b: vec![-0.5, 1.0] }
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.b.len() || self.a.len() < 2 {
            return Err(Error::InvalidLimitPolygon("need k >= 2 matching a/b entries".into()));
        }
        let all: Vec<f64> = self.a.iter().zip(&self.b).flat_map(|(a, b)| [*a, *b]).collect();
        if all.iter().any(|v| !v.is_finite()) || all.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLimitPolygon("ordering a_1 < b_1 < ... < b_k violated".into()));
        }
        let sum: f64 = self.a.iter().zip(&self.b).map(|(a, b)| b - a).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLimitPolygon(format!("sum(b_i - a_i) = {sum}, expected 1")));
        }
        Ok(())
    }

    /// Whether `(chi, eta)` lies in the open limit polygon.
    pub fn contains(&self, chi: f64, eta: f64) -> bool {
        if !(eta > 0.0 && eta < 1.0) {
            return false;
        }
        if chi <= self.a[0] + 1.0 - eta || chi >= self.b[self.k() - 1] {
            return false;
        }
        !self.a.iter().zip(&self.b).any(|(a, b)| a + 1.0 - eta <= chi && chi <= *b)
    }

    /// Vertices of the limit polygon, counter-clockwise from the bottom-left corner.
    pub fn outline(&self) -> Vec<(f64, f64)> {
        let k = self.k();
        let mut pts = vec![(self.a[0] + 1.0, 0.0), (self.b[k - 1], 0.0)];
        for i in (0..k).rev() {
            let (a, b) = (self.a[i], self.b[i]);
            let foot = (b, 1.0 - (b - a));
            if i == k - 1 {
                pts.push(foot);
                pts.push((a, 1.0));
            } else {
                pts.push((b, 1.0));
                pts.push(foot);
                if i > 0 {
                    pts.push((a, 1.0));
                }
            }
        }
        pts
    }
}

/// Scale a limit polygon to strip height `n`.
///
/// Every endpoint is rounded as `floor(v * n) + 1/2`; then `B_k` absorbs the
/// integer needed to make `sum(B_i - A_i) = n`. Products within `1e-9` of an
/// integer are snapped to it so exact inputs like `0.5 * 8` do not round down.
pub fn scale(lp: &LimitPolygon, n: usize) -> Result<PolygonSpec> {
    lp.validate()?;
    let nf = n as f64;
    let round = |v: f64| -> i64 {
        let p = v * nf;
        let r = p.round();
        let base = if (p - r).abs() < 1e-9 { r } else { p.floor() };
        base as i64
    };
    let mut a: Vec<HalfInt> = lp.a.iter().map(|&v| HalfInt::half_above(round(v))).collect();
    let mut b: Vec<HalfInt> = lp.b.iter().map(|&v| HalfInt::half_above(round(v))).collect();
    let sum: i64 = a.iter().zip(&b).map(|(a, b)| (b.twice() - a.twice()) / 2).sum();
    let k = b.len();
    let correction = n as i64 - sum;
    b[k - 1] = HalfInt::from_twice(b[k - 1].twice() + 2 * correction);
    a.shrink_to_fit();
    let spec = PolygonSpec { n, a, b };
    match spec.validate() {
        Ok(()) => Ok(spec),
        Err(v) => Err(Error::ScaleTooSmall { n, reason: v.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_polygon() -> PolygonSpec {
        PolygonSpec::from_twice(2, &[-1, 3], &[1, 5])
    }

    #[test]
    fn validate_examples() {
        assert_eq!(test_polygon().validate(), Ok(()));
        let bad_sum = PolygonSpec::from_twice(3, &[-1, 3], &[1, 5]);
        let err = bad_sum.validate().unwrap_err();
        assert!(err.to_string().contains("sum mismatch"));
        let bad_order = PolygonSpec::from_twice(2, &[3, -1], &[5, 1]);
        assert!(bad_order.validate().unwrap_err().to_string().contains("ordering"));
        let integral = PolygonSpec::from_twice(2, &[-2, 2], &[0, 4]);
        assert!(matches!(integral.validate(), Err(Violation::NotHalfInteger(_))));
    }

    #[test]
    fn top_rows() {
        assert_eq!(test_polygon().top_row().unwrap(), vec![2, 0]);
        let three = PolygonSpec::from_twice(3, &[-1, 3], &[1, 7]);
        assert_eq!(three.top_row().unwrap(), vec![3, 2, 0]);
        // k = 2 forces N >= 2
        let one = PolygonSpec::from_twice(1, &[-1, 3], &[1, 5]);
        assert!(one.top_row().is_err());
    }

    #[test]
    fn half_int_text() {
        assert_eq!("-1/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(-1));
        assert_eq!("13/2".parse::<HalfInt>().unwrap().to_string(), "13/2");
        assert_eq!("2.5".parse::<HalfInt>().unwrap(), HalfInt::from_twice(5));
        assert!("1/3".parse::<HalfInt>().is_err());
        let json = r#"{"N": 6, "A": ["-1/2","3/2"], "B": ["1/2","13/2"]}"#;
        let spec: PolygonSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.validate(), Ok(()));
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(back, r#"{"N":6,"A":["-1/2","3/2"],"B":["1/2","13/2"]}"#);
    }

    #[test]
    fn scale_hexagon() {
        let spec = scale(&LimitPolygon::hexagon(), 8).unwrap();
        assert_eq!(spec.validate(), Ok(()));
        assert_eq!(spec, PolygonSpec::from_twice(8, &[-15, 9], &[-7, 17]));
    }

    #[test]
    fn scale_needs_correction() {
        let lp = LimitPolygon::new(vec![-0.7, 0.35], vec![-0.3, 0.95]).unwrap();
        let spec = scale(&lp, 10).unwrap();
        assert_eq!(spec.validate(), Ok(()));
        // floor(-7) = -7, floor(-3), floor(3.5) = 3, floor(9.5) = 9: 4 + 6 = 10
        assert_eq!(spec, PolygonSpec::from_twice(10, &[-13, 7], &[-5, 19]));
        let lp = LimitPolygon::new(vec![-0.33, 0.4], vec![0.1, 0.97]).unwrap();
        let spec = scale(&lp, 7).unwrap();
        assert_eq!(spec.validate(), Ok(()));
    }

    #[test]
    fn scale_boundary_width() {
        // b_1 - a_1 = 1/N exactly
        let lp = LimitPolygon::new(vec![0.0, 0.5], vec![0.125, 1.375]).unwrap();
        let spec = scale(&lp, 8).unwrap();
        assert_eq!(spec.validate(), Ok(()));
        assert_eq!(spec.b[0].twice() - spec.a[0].twice(), 2);
    }

    #[test]
    fn scale_too_small() {
        let lp = LimitPolygon::new(vec![0.0, 0.5], vec![0.01, 1.49]).unwrap();
        assert!(matches!(scale(&lp, 3), Err(Error::ScaleTooSmall { .. })));
    }

    #[test]
    fn membership() {
        let spec = test_polygon();
        // bottom side runs from x = A_1 + N = 3/2 to B_k = 5/2
        assert!(spec.contains(2, 0));
        assert!(!spec.contains(1, 0));
        assert!(!spec.contains(2, 3));
        let wide = PolygonSpec::from_twice(4, &[-1, 7], &[3, 11]);
        // top side between B_1 = 3/2 and A_2 = 7/2
        assert!(wide.contains(2, 4));
        assert!(!wide.contains(2, 5));
        // forced particles below the first top interval
        assert!(!wide.contains(1, 4));
        assert!(wide.contains(3, 1));
        assert!(!wide.contains(6, 1));
    }

    #[test]
    fn hexagon_outline() {
        let o = LimitPolygon::hexagon().outline();
        let expect = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 1.0), (-0.5, 1.0), (-0.5, 0.5)];
        assert_eq!(o.len(), 6);
        for (p, q) in o.iter().zip(expect) {
            assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12, "{o:?}");
        }
        assert!(LimitPolygon::hexagon().contains(0.25, 0.5));
        assert!(!LimitPolygon::hexagon().contains(-0.6, 0.8));
    }
}
