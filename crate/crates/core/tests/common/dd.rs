//! Double-double real and complex arithmetic (about 32 significant digits),
//! enough for an independent quadrature check of the exact kernel.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        // one Newton step in double-double
        let r = Dd::from_f64(x);
        let diff = self - r * r;
        r + Dd::from_f64(diff.hi / (2.0 * x))
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        Dd::from_f64(q1) + Dd::from_f64(q2) + Dd::from_f64(q3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };
    pub const ONE: Cdd = Cdd { re: Dd::ONE, im: Dd::ZERO };

    pub fn real(v: f64) -> Self {
        Cdd { re: Dd::from_f64(v), im: Dd::ZERO }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    /// Principal square root.
    pub fn sqrt(self) -> Cdd {
        let r = self.norm_sqr().sqrt();
        let two = Dd::from_f64(2.0);
        let re = ((r + self.re) / two).sqrt();
        let im = ((r - self.re) / two).sqrt();
        let im = if self.im.hi < 0.0 { -im } else { im };
        Cdd { re, im }
    }

    pub fn scale(self, s: Dd) -> Cdd {
        Cdd { re: self.re * s, im: self.im * s }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, o: Cdd) -> Cdd {
        let d = o.norm_sqr();
        let n = self * Cdd { re: o.re, im: -o.im };
        Cdd { re: n.re / d, im: n.im / d }
    }
}

/// `exp(2 pi i k / m)` for `k = 0..m`, `m` a power of two, built from
/// repeated principal square roots of `-1`.
pub fn roots_of_unity(m: usize) -> Vec<Cdd> {
    assert!(m.is_power_of_two() && m >= 2);
    let mut zeta = Cdd::real(-1.0);
    let mut order = 2;
    while order < m {
        zeta = zeta.sqrt();
        order *= 2;
    }
    let mut out = Vec::with_capacity(m);
    let mut cur = Cdd::ONE;
    for k in 0..m {
        out.push(cur);
        // reset exactly at the quarter points to limit drift
        let quarter = (k + 1) * 4;
        cur = if quarter % m == 0 {
            match quarter / m {
                1 => Cdd { re: Dd::ZERO, im: Dd::ONE },
                2 => Cdd::real(-1.0),
                3 => Cdd { re: Dd::ZERO, im: -Dd::ONE },
                _ => Cdd::ONE,
            }
        } else {
            cur * zeta
        };
    }
    out
}
