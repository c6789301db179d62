//! Deterministic quadrature drivers: adaptive Gauss–Kronrod, double-exponential rules
//! for half-lines, composite Gauss–Legendre, and the trapezoid rule on the vertical
//! contour used by the holomorphic functional calculus.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Contour and tolerance settings shared by the contour and s-integrals.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Real part of the vertical contour λ = a + iv; must lie in (0, ½).
    pub contour_a: f64,
    /// Initial truncation of the contour; doubled (up to 2¹⁰×) until the tail bound is met.
    pub v_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { contour_a: 0.25, v_max: 1e6, abs_tol: 1e-10, rel_tol: 1e-10, max_nodes: 1 << 15 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.contour_a > 0.0 && self.contour_a < 0.5) {
            return Err(Error::Domain(format!("contour_a = {} not in (0, 1/2)", self.contour_a)));
        }
        if !(self.v_max > 0.0 && self.abs_tol > 0.0 && self.rel_tol >= 0.0 && self.max_nodes >= 16) {
            return Err(Error::Domain("quadrature tolerances and sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = abs_tol;
        self
    }
}

/// Values that can be integrated: scalars and fixed-length vectors of scalars.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, w: f64);
    fn norm_inf(&self) -> f64;

    fn diff_norm(&self, other: &Self) -> f64 {
        let mut d = self.clone();
        d.add_scaled(other, -1.0);
        d.norm_inf()
    }
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += w * other;
    }
    fn norm_inf(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C {
    fn zero_like(&self) -> Self {
        C::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn norm_inf(&self) -> f64 {
        self.norm()
    }
}

impl<T: QuadValue> QuadValue for Vec<T> {
    fn zero_like(&self) -> Self {
        self.iter().map(|x| x.zero_like()).collect()
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_scaled(b, w);
        }
    }
    fn norm_inf(&self) -> f64 {
        self.iter().map(|x| x.norm_inf()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub evals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<V: QuadValue>(f: &mut impl FnMut(f64) -> V, a: f64, b: f64) -> (V, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc.zero_like();
    let mut g = fc.zero_like();
    k.add_scaled(&fc, WGK[7]);
    g.add_scaled(&fc, WG[3]);
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        k.add_scaled(&f1, WGK[i]);
        k.add_scaled(&f2, WGK[i]);
        if i % 2 == 1 {
            g.add_scaled(&f1, WG[i / 2]);
            g.add_scaled(&f2, WG[i / 2]);
        }
    }
    let mut kv = k.zero_like();
    kv.add_scaled(&k, h);
    let err = h * k.diff_norm(&g);
    (kv, err)
}

/// Adaptive G7K15 on a finite interval with deterministic bisection of the worst panel.
pub fn adaptive_gk<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadResult<V>> {
    let (v0, e0) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, v0, e0)];
    let mut evals = 15;
    loop {
        let mut total = panels[0].2.zero_like();
        let mut err = 0.0;
        for p in &panels {
            total.add_scaled(&p.2, 1.0);
            err += p.3;
        }
        if err <= abs_tol.max(rel_tol * total.norm_inf()) {
            return Ok(QuadResult { value: total, error: err, evals });
        }
        if evals + 30 > max_evals {
            return Err(Error::Quadrature(format!(
                "adaptive Gauss-Kronrod: error {err:.3e} after {evals} evaluations"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| if p.3 > be { (i, p.3) } else { (bi, be) })
            .0;
        let (pa, pb, _, _) = panels.remove(worst);
        let mid = 0.5 * (pa + pb);
        let (vl, el) = gk15(&mut f, pa, mid);
        let (vr, er) = gk15(&mut f, mid, pb);
        evals += 30;
        panels.insert(worst, (mid, pb, vr, er));
        panels.insert(worst, (pa, mid, vl, el));
    }
}

/// ∫₀^∞ f(s) ds via s = tan u and adaptive Gauss–Kronrod in u.
pub fn tan_half_line<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadResult<V>> {
    adaptive_gk(
        |u| {
            let s = u.tan();
            let c = u.cos();
            let v = f(s);
            let mut out = v.zero_like();
            out.add_scaled(&v, 1.0 / (c * c));
            out
        },
        0.0,
        FRAC_PI_2,
        abs_tol,
        rel_tol,
        max_evals,
    )
}

/// ∫_{−∞}^{∞} f(s) ds via s = tan u.
pub fn tan_full_line<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadResult<V>> {
    adaptive_gk(
        |u| {
            let s = u.tan();
            let c = u.cos();
            let v = f(s);
            let mut out = v.zero_like();
            out.add_scaled(&v, 1.0 / (c * c));
            out
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        abs_tol,
        rel_tol,
        max_evals,
    )
}

/// Nested trapezoid levels on a uniform grid in `t ∈ [lo, hi]`, halving the step until
/// two successive levels agree. `g(t)` must already include the Jacobian.
#[allow(clippy::too_many_arguments)]
fn trapezoid_levels<V: QuadValue>(
    mut g: impl FnMut(f64) -> V,
    lo: f64,
    hi: f64,
    h0: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
    what: &str,
) -> Result<QuadResult<V>> {
    let n0 = ((hi - lo) / h0).ceil().max(2.0) as usize;
    let mut h = (hi - lo) / n0 as f64;
    let first = g(lo);
    let mut sum = first.zero_like();
    sum.add_scaled(&first, 0.5);
    sum.add_scaled(&g(hi), 0.5);
    for k in 1..n0 {
        sum.add_scaled(&g(lo + k as f64 * h), 1.0);
    }
    let mut evals = n0 + 1;
    let mut n = n0;
    let mut prev = sum.zero_like();
    prev.add_scaled(&sum, h);
    let mut level = 0;
    loop {
        // add the midpoints of the current grid
        for k in 0..n {
            sum.add_scaled(&g(lo + (k as f64 + 0.5) * h), 1.0);
        }
        evals += n;
        n *= 2;
        h *= 0.5;
        let mut cur = sum.zero_like();
        cur.add_scaled(&sum, h);
        let diff = cur.diff_norm(&prev);
        level += 1;
        if level >= 2 && diff <= abs_tol.max(rel_tol * cur.norm_inf()) {
            return Ok(QuadResult { value: cur, error: diff, evals });
        }
        if evals + n > max_evals {
            return Err(Error::Quadrature(format!(
                "{what}: level difference {diff:.3e} after {evals} evaluations"
            )));
        }
        prev = cur;
    }
}

/// ∫₀^∞ f(s) ds by the exp-sinh double-exponential rule s = exp(π/2·sinh t).
/// Suited to integrands with algebraic decay and a regular (or integrable) endpoint at 0.
pub fn exp_sinh<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadResult<V>> {
    let g = |t: f64| {
        let e = FRAC_PI_2 * t.sinh();
        let s = e.exp();
        let w = s * FRAC_PI_2 * t.cosh();
        let v = f(s);
        let mut out = v.zero_like();
        if w.is_finite() && w > 0.0 {
            out.add_scaled(&v, w);
        }
        out
    };
    trapezoid_levels(g, -4.5, 4.5, 0.5, abs_tol, rel_tol, max_evals, "exp-sinh")
}

/// (1/2πi)∫ f(λ) dλ over the vertical line λ = a + iv, oriented so that
/// (1/2πi)∫ λ^{-z}(λ−x)^{-1} dλ = x^{-z} for x > a (i.e. traversed downward).
/// The line is parametrised by v = sinh t and truncated at |v| ≤ v_max.
pub fn vertical_line<V: QuadValue>(
    mut f: impl FnMut(C) -> V,
    a: f64,
    v_max: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadResult<V>> {
    let t_max = v_max.asinh();
    let g = |t: f64| {
        let lam = C::new(a, t.sinh());
        let v = f(lam);
        let mut out = v.zero_like();
        // dλ = i cosh t dt, downward orientation, divided by 2πi
        out.add_scaled(&v, -t.cosh() / (2.0 * std::f64::consts::PI));
        out
    };
    trapezoid_levels(g, -t_max, t_max, 0.5, abs_tol, rel_tol, max_evals, "contour trapezoid")
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre nodes/weights on [a, b] with `panels` panels of `order` points.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for k in 0..order {
            out.push((c + 0.5 * h * x[k], 0.5 * h * w[k]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gk_polynomial_exact() {
        let r = adaptive_gk(|x: f64| x.powi(6), 0.0, 2.0, 1e-14, 0.0, 1000).unwrap();
        assert!((r.value - 128.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn half_line_rules() {
        // ∫₀^∞ (1+s²)^{-3/2} ds = 1
        let f = |s: f64| (1.0 + s * s).powf(-1.5);
        let a = tan_half_line(f, 1e-13, 0.0, 10_000).unwrap();
        let b = exp_sinh(f, 1e-13, 0.0, 10_000).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
        assert!((b.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertical_line_cauchy() {
        // (1/2πi)∫ λ^{-z}(λ−x)^{-2} dλ = d/dx x^{-z} = −z x^{−z−1}
        let (x, z) = (2.0, C::new(1.5, 0.0));
        let r = vertical_line(
            |l: C| l.powc(-z) / ((l - x) * (l - x)),
            0.25,
            1e8,
            1e-13,
            0.0,
            1 << 16,
        )
        .unwrap();
        let exact = -z * C::new(x, 0.0).powc(-z - 1.0);
        assert!((r.value - exact).norm() < 1e-10, "{:?} {:?}", r.value, exact);
    }

    #[test]
    fn gauss_legendre_weights() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m - 2.0 / 11.0).abs() < 1e-14);
        let pts = composite_gl(0.0, PI, 4, 10);
        let v: f64 = pts.iter().map(|(x, w)| w * x.sin()).sum();
        assert!((v - 2.0).abs() < 1e-13);
    }
}
