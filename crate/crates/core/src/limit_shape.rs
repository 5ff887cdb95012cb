//! Limit shape through the complex slope `w(chi, eta)`: the action and its
//! derivatives, the critical-point equation, its inverse map, the frozen
//! boundary, the Green function and the bulk kernel asymptotics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::polygon::{LimitPolygon, PolygonSpec};
use crate::{Error, Result};

pub type C64 = Complex64;

/// Threshold on `Im w` separating liquid points from frozen ones.
pub const LIQUID_IM: f64 = 1e-12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// The action `S(w; chi, eta)` of a limit polygon with its derivatives.
/// Logarithms use principal branches (cuts along the negative reals).
#[derive(Clone, Debug)]
pub struct Action<'a> {
    pub lp: &'a LimitPolygon,
    pub chi: f64,
    pub eta: f64,
}

impl<'a> Action<'a> {
    pub fn new(lp: &'a LimitPolygon, chi: f64, eta: f64) -> Self {
        Action { lp, chi, eta }
    }

    fn u(&self, w: C64) -> C64 {
        w - self.chi
    }

    fn v(&self, w: C64) -> C64 {
        w - self.chi + 1.0 - self.eta
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lp.a.iter().copied().zip(self.lp.b.iter().copied())
    }

    pub fn s(&self, w: C64) -> C64 {
        let xlnx = |z: C64| z * z.ln();
        let one_eta = 1.0 - self.eta;
        let mut out = xlnx(self.u(w)) - xlnx(self.v(w)) + one_eta * one_eta.ln();
        for (a, b) in self.pairs() {
            out += xlnx(c(b) - w) - xlnx(c(a) - w);
        }
        out
    }

    pub fn s1(&self, w: C64) -> C64 {
        let mut out = self.u(w).ln() - self.v(w).ln();
        for (a, b) in self.pairs() {
            out += (c(a) - w).ln() - (c(b) - w).ln();
        }
        out
    }

    /// `exp(S'(w))` as a rational function; branch-free.
    pub fn exp_s1(&self, w: C64) -> C64 {
        let mut out = self.u(w) / self.v(w);
        for (a, b) in self.pairs() {
            out *= (c(a) - w) / (c(b) - w);
        }
        out
    }

    pub fn s2(&self, w: C64) -> C64 {
        self.u(w).inv() - self.v(w).inv() - sigma(self.lp, w)
    }

    pub fn s3(&self, w: C64) -> C64 {
        let mut out = -self.u(w).powi(-2) + self.v(w).powi(-2);
        for (a, b) in self.pairs() {
            out += -(w - a).powi(-2) + (w - b).powi(-2);
        }
        out
    }

    /// `Xi(w) = (w - chi)(w - chi + 1 - eta) / (1 - eta)`.
    pub fn xi(&self, w: C64) -> C64 {
        self.u(w) * self.v(w) / (1.0 - self.eta)
    }

    /// Square root of `Xi` with the branch built from principal logarithms.
    pub fn sqrt_xi(&self, w: C64) -> C64 {
        (0.5 * (self.u(w).ln() + self.v(w).ln() - (1.0 - self.eta).ln())).exp()
    }
}

/// `Q(w) = prod (w - b_i) / (w - a_i)`.
pub fn q_fn(lp: &LimitPolygon, w: C64) -> C64 {
    lp.a.iter().zip(&lp.b).map(|(&a, &b)| (w - b) / (w - a)).product()
}

/// `Sigma(w) = sum (1/(w - b_i) - 1/(w - a_i))`.
pub fn sigma(lp: &LimitPolygon, w: C64) -> C64 {
    lp.a.iter().zip(&lp.b).map(|(&a, &b)| (b - a) / ((w - a) * (w - b))).sum()
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, x) in p.iter().enumerate() {
        for (j, y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients (lowest degree first) of
/// `(w - chi) prod (w - a_i) - (w - chi + 1 - eta) prod (w - b_i)`.
pub fn critical_polynomial(lp: &LimitPolygon, chi: f64, eta: f64) -> Vec<f64> {
    let mut pa = vec![-chi, 1.0];
    let mut pb = vec![-chi + 1.0 - eta, 1.0];
    for (&a, &b) in lp.a.iter().zip(&lp.b) {
        pa = poly_mul(&pa, &[-a, 1.0]);
        pb = poly_mul(&pb, &[-b, 1.0]);
    }
    let mut out: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
    // the leading terms cancel exactly
    out.pop();
    out
}

fn product_form(lp: &LimitPolygon, chi: f64, eta: f64, w: C64) -> (C64, C64) {
    // value and derivative of the product form, by logarithmic differentiation
    let mut fa = w - chi;
    let mut da = fa.inv();
    let mut fb = w - chi + 1.0 - eta;
    let mut db = fb.inv();
    for (&a, &b) in lp.a.iter().zip(&lp.b) {
        fa *= w - a;
        da += (w - a).inv();
        fb *= w - b;
        db += (w - b).inv();
    }
    (fa - fb, fa * da - fb * db)
}

/// All roots of the critical-point polynomial: companion-matrix eigenvalues
/// followed by Newton steps on the unexpanded product form.
pub fn critical_points(lp: &LimitPolygon, chi: f64, eta: f64) -> Vec<C64> {
    let coeffs = critical_polynomial(lp, chi, eta);
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let comp = DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    comp.complex_eigenvalues()
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..3 {
                let (f, df) = product_form(lp, chi, eta, z);
                if df.norm() == 0.0 {
                    break;
                }
                let step = f / df;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                z -= step;
            }
            z
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiquidPoint {
    pub chi: f64,
    pub eta: f64,
    pub w: C64,
}

/// The critical point in the upper half plane, or `None` if `(chi, eta)` is frozen.
pub fn solve_w(lp: &LimitPolygon, chi: f64, eta: f64) -> Result<Option<LiquidPoint>> {
    if !lp.contains(chi, eta) {
        return Err(Error::OutOfRange(format!("({chi}, {eta}) is outside the limit polygon")));
    }
    let roots = critical_points(lp, chi, eta);
    let upper: Vec<C64> = roots.iter().copied().filter(|z| z.im > LIQUID_IM).collect();
    match upper.as_slice() {
        [] => Ok(None),
        [w] => Ok(Some(LiquidPoint { chi, eta, w: *w })),
        _ => Err(Error::Numerical(format!("several non-real critical points at ({chi}, {eta}): {roots:?}"))),
    }
}

/// The point of the liquid region whose complex slope is `z`, `Im z > 0`.
pub fn invert_w(lp: &LimitPolygon, z: C64) -> Result<(f64, f64)> {
    if z.im <= 0.0 {
        return Err(Error::OutOfRange(format!("{z} is not in the upper half plane")));
    }
    let q = q_fn(lp, z);
    if q.im == 0.0 {
        return Err(Error::Numerical(format!("Im Q vanishes at {z}")));
    }
    let zq = z * (1.0 - q);
    let cc = -zq.im / q.im;
    let chi = (zq + cc * q).re;
    let eta = cc - chi + 1.0;
    Ok((chi, eta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrozenBoundaryPoint {
    pub w: f64,
    pub chi: f64,
    pub eta: f64,
    /// `|exp(S'(w)) - 1|`.
    pub residual_s1: f64,
    /// `|S''(w)|`.
    pub residual_s2: f64,
}

/// The frozen-boundary point where `w` is a double critical point:
/// `chi = w - (1 - Q)/Sigma`, `eta = 1 - (1 - Q)^2 / (Q Sigma)`.
pub fn frozen_boundary(lp: &LimitPolygon, w: f64) -> Result<FrozenBoundaryPoint> {
    if lp.a.iter().chain(&lp.b).any(|&p| p == w) {
        return Err(Error::OutOfRange(format!("w = {w} is an endpoint of the polygon")));
    }
    let q = q_fn(lp, c(w)).re;
    let s = sigma(lp, c(w)).re;
    // 1 - Q without cancellation when Q is close to 1
    let one_minus_q = if q > 0.0 {
        -lp.a.iter().zip(&lp.b).map(|(&a, &b)| ((a - b) / (w - a)).ln_1p()).sum::<f64>().exp_m1()
    } else {
        1.0 - q
    };
    if q == 0.0 || s == 0.0 || !q.is_finite() || !s.is_finite() {
        return Err(Error::OutOfRange(format!("Q or Sigma degenerate at w = {w}")));
    }
    let chi = w - one_minus_q / s;
    let eta = 1.0 - one_minus_q.powi(2) / (q * s);
    let act = Action::new(lp, chi, eta);
    let residual_s1 = (act.exp_s1(c(w)) - 1.0).norm();
    let residual_s2 = act.s2(c(w)).norm();
    Ok(FrozenBoundaryPoint { w, chi, eta, residual_s1, residual_s2 })
}

/// Where the frozen boundary touches the bottom side (the image of `w = infinity`):
/// `chi = (1 + sum (b_i^2 - a_i^2)) / 2`.
pub fn bottom_tangency(lp: &LimitPolygon) -> f64 {
    let s2: f64 = lp.a.iter().zip(&lp.b).map(|(a, b)| b * b - a * a).sum();
    (1.0 + s2) / 2.0
}

/// Frozen-boundary samples ordered by the real parameter: `m` values of
/// `w` spread over the whole real line, skipping degenerate parameters.
pub fn frozen_boundary_curve(lp: &LimitPolygon, m: usize) -> Vec<FrozenBoundaryPoint> {
    (0..m)
        .filter_map(|i| {
            // t in (-pi/2, pi/2) mapped through tan covers the real line
            let t = -PI / 2.0 + PI * (i as f64 + 0.5) / m as f64;
            let w = t.tan();
            frozen_boundary(lp, w).ok().filter(|p| p.chi.is_finite() && p.eta.is_finite())
        })
        .collect()
}

/// Parameter `w` in `(-infinity, a_1)` of the lower-left branch, from `t in (0, 1)`.
fn lower_left_w(lp: &LimitPolygon, t: f64) -> f64 {
    lp.a[0] - t / (1.0 - t)
}

/// The `chi` range `(low, high)` covered by the lower-left branch.
pub fn lower_left_range(lp: &LimitPolygon) -> Result<(f64, f64)> {
    let lo = frozen_boundary(lp, lower_left_w(lp, 1e-9))?.chi;
    let hi = bottom_tangency(lp);
    Ok((lo.min(hi), lo.max(hi)))
}

/// `eta` on the lower-left frozen-boundary branch above abscissa `chi`.
pub fn eta_fb(lp: &LimitPolygon, chi: f64) -> Result<f64> {
    let (lo, hi) = lower_left_range(lp)?;
    if !(chi > lo && chi < hi) {
        return Err(Error::OutOfRange(format!("chi = {chi} outside the lower-left branch ({lo}, {hi})")));
    }
    let chi_at = |t: f64| frozen_boundary(lp, lower_left_w(lp, t)).map(|p| p.chi);
    // chi decreases from the bottom tangency (t -> 1) to the left side (t -> 0)
    let (mut t0, mut t1) = (1e-12, 1.0 - 1e-12);
    let increasing = chi_at(t1)? > chi_at(t0)?;
    for _ in 0..200 {
        let mid = 0.5 * (t0 + t1);
        let above = chi_at(mid)? > chi;
        if above == increasing {
            t1 = mid;
        } else {
            t0 = mid;
        }
    }
    Ok(frozen_boundary(lp, lower_left_w(lp, 0.5 * (t0 + t1)))?.eta)
}

/// Dirichlet Green function of the upper half plane.
pub fn green(z1: C64, z2: C64) -> Result<f64> {
    if z1 == z2 {
        return Err(Error::OutOfRange("coincident points".into()));
    }
    if z1.im <= 0.0 || z2.im <= 0.0 {
        return Err(Error::OutOfRange("points must lie in the upper half plane".into()));
    }
    Ok(-((z1 - z2) / (z1 - z2.conj())).norm().ln() / (2.0 * PI))
}

/// Sum over perfect matchings of `prod G(w_i, w_j)`; zero for an odd count.
pub fn pairing_sum(ws: &[C64]) -> Result<f64> {
    if ws.is_empty() {
        return Ok(1.0);
    }
    if ws.len() % 2 == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for j in 1..ws.len() {
        let g = green(ws[0], ws[j])?;
        let rest: Vec<C64> = ws.iter().enumerate().filter(|&(i, _)| i != 0 && i != j).map(|(_, &w)| w).collect();
        total += g * pairing_sum(&rest)?;
    }
    Ok(total)
}

/// The Gaussian free field moment predicted for height fluctuations at liquid points.
pub fn gff_pairing_moment(lp: &LimitPolygon, points: &[(f64, f64)]) -> Result<f64> {
    let ws = points
        .iter()
        .map(|&(chi, eta)| solve_w(lp, chi, eta)?.map(|p| p.w).ok_or(Error::NotLiquid { chi, eta }))
        .collect::<Result<Vec<_>>>()?;
    pairing_sum(&ws)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BurgersResidual {
    /// `|(w - chi)/(1 - eta) w_chi + w_eta|`.
    pub burgers: f64,
    /// `|w_eta + 1 / (S''(w) (w - chi + 1 - eta))|`.
    pub om_eta: f64,
}

/// Residuals of the complex Burgers equation and the `w_eta` identity,
/// with fourth-order central differences of step `h`.
pub fn burgers_residual(lp: &LimitPolygon, chi: f64, eta: f64, h: f64) -> Result<BurgersResidual> {
    let w_at =
        |x: f64, y: f64| -> Result<C64> { solve_w(lp, x, y)?.map(|p| p.w).ok_or(Error::NotLiquid { chi: x, eta: y }) };
    let w = w_at(chi, eta)?;
    // fourth-order central differences
    let d = |f: &dyn Fn(f64) -> Result<C64>| -> Result<C64> {
        Ok((8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h))
    };
    let w_chi = d(&|t| w_at(chi + t, eta))?;
    let w_eta = d(&|t| w_at(chi, eta + t))?;
    let act = Action::new(lp, chi, eta);
    let burgers = ((w - chi) / (1.0 - eta) * w_chi + w_eta).norm();
    let om_eta = (w_eta + (act.s2(w) * (w - chi + 1.0 - eta)).inv()).norm();
    Ok(BurgersResidual { burgers, om_eta })
}

/// The limit polygon with `a_i = A_i / N`, `b_i = B_i / N`.
pub fn limit_of(spec: &PolygonSpec) -> LimitPolygon {
    let n = spec.n as f64;
    LimitPolygon {
        a: spec.a.iter().map(|v| v.to_f64() / n).collect(),
        b: spec.b.iter().map(|v| v.to_f64() / n).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BulkKernel {
    /// Approximation of `K(x1,n1; x2,n2)`.
    pub k: C64,
    /// Approximation of `K(x1,n1; x2+1,n2-1)`.
    pub k_shifted: C64,
}

/// Square root of `s` with negative real part (or positive imaginary part
/// when purely imaginary).
fn root_left(s: C64) -> C64 {
    let r = s.sqrt();
    if r.re > 0.0 || (r.re == 0.0 && r.im < 0.0) {
        -r
    } else {
        r
    }
}

/// Four-term saddle-point approximation of the kernel between two bulk points.
pub fn kernel_bulk_asymptotic(spec: &PolygonSpec, x1: i64, n1: i64, x2: i64, n2: i64) -> Result<BulkKernel> {
    spec.ensure_valid()?;
    let lp = limit_of(spec);
    let big_n = spec.n as f64;
    let (chi1, eta1) = (x1 as f64 / big_n, n1 as f64 / big_n);
    let (chi2, eta2) = (x2 as f64 / big_n, n2 as f64 / big_n);
    let sep = (((x1 - x2).pow(2) + (n1 - n2).pow(2)) as f64).sqrt();
    if sep < big_n.powf(0.6) {
        return Err(Error::OutOfRange(format!("points closer than N^0.6 ({sep})")));
    }
    let liquid = |chi: f64, eta: f64| -> Result<C64> {
        solve_w(&lp, chi, eta)?.map(|p| p.w).ok_or(Error::NotLiquid { chi, eta })
    };
    let w1 = liquid(chi1, eta1)?;
    let w2 = liquid(chi2, eta2)?;
    let s1 = Action::new(&lp, chi1, eta1);
    let s2 = Action::new(&lp, chi2, eta2);
    // contour directions: the w contour runs leftwards through w1, the z
    // contour downwards through w2; conjugate points reverse orientation
    let rw = root_left(-s1.s2(w1));
    let rz = C64::new(0.0, -1.0) * root_left(-s2.s2(w2));
    let first = [(w1, rw), (w1.conj(), -rw.conj())];
    let second = [(w2, rz, false), (w2.conj(), -rz.conj(), true)];
    let shift_factor = (w2 - chi2) / (1.0 - eta2);
    let mut k = C64::new(0.0, 0.0);
    let mut k_shifted = C64::new(0.0, 0.0);
    for &(p1, r1) in &first {
        for &(p2, r2, conj) in &second {
            let expo = (big_n * (s1.s(p1) - s2.s(p2))).exp();
            let term = expo / ((p1 - p2) * s1.sqrt_xi(p1) * s2.sqrt_xi(p2) * r1 * r2);
            k += term;
            k_shifted += term * if conj { shift_factor.conj() } else { shift_factor };
        }
    }
    let pre = -1.0 / (2.0 * PI * big_n);
    Ok(BulkKernel { k: k * pre, k_shifted: k_shifted * pre })
}
