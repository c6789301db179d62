//! Zeta functions ζ_b(z) = τ(b(1+D²)^{-z}), heat traces, their Mellin continuation and
//! the Laurent data (twisted residues τ_j) extracted at a critical point.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::algebra::{BlockOperator, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quad;
use crate::special;

/// τ(b(1+D²)^{-z}) by direct eigensum (finite matrix scale: entire in z).
pub fn zeta_eval_matrix(dec: &SpectralDecomposition, b: &BlockOperator, z: C) -> C {
    dec.trace_with(b, |d| C::new(1.0 + d * d, 0.0).powc(-z))
}

/// θ(t) = Σ_{n∈ℤ} e^{-tn²}, by Poisson summation √(π/t) Σ_k e^{-π²k²/t} for small t.
pub fn theta(t: f64) -> f64 {
    if t <= 0.0 {
        return f64::INFINITY;
    }
    if t >= 1.0 {
        let mut s = 1.0;
        for n in 1.. {
            let v = (-t * (n * n) as f64).exp();
            s += 2.0 * v;
            if v < 1e-18 {
                break;
            }
        }
        s
    } else {
        let mut s = 1.0;
        for k in 1.. {
            let v = (-PI * PI * (k * k) as f64 / t).exp();
            s += 2.0 * v;
            if v < 1e-18 {
                break;
            }
        }
        (PI / t).sqrt() * s
    }
}

/// Σ_{|n|≤Λ} e^{-tn²}.
pub fn theta_truncated(t: f64, cutoff: usize) -> f64 {
    1.0 + 2.0 * (1..=cutoff).map(|n| (-t * (n * n) as f64).exp()).sum::<f64>()
}

/// Shifted, truncated heat trace τ_Λ(P₊e^{-t(1+D²)}) of the circle model: e^{-t}(1 + 2Σ_{n=1}^Λ e^{-tn²}).
pub fn circle_heat_trace(t: f64, cutoff: usize) -> f64 {
    (-t).exp() * theta_truncated(t, cutoff)
}

/// Shifted, truncated scalar heat trace of the flat torus: e^{-t}(Σ_{|n|≤Λ} e^{-tn²})².
pub fn torus_heat_trace(t: f64, cutoff: usize) -> f64 {
    (-t).exp() * theta_truncated(t, cutoff).powi(2)
}

/// Least-squares fit H(t) ≈ Σ_α c_α t^α on a logarithmic grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeatFit {
    pub menu: Vec<f64>,
    pub coefficients: Vec<[f64; 2]>,
    /// max |H − Σ c_α t^α| / max |H| on the fit grid
    pub residual: f64,
    /// condition number of the column-scaled design matrix
    pub condition: f64,
    pub window: (f64, f64),
}

impl HeatFit {
    pub fn coefficient(&self, i: usize) -> C {
        C::new(self.coefficients[i][0], self.coefficients[i][1])
    }

    pub fn eval(&self, t: f64) -> C {
        self.menu.iter().enumerate().map(|(i, &a)| self.coefficient(i) * t.powf(a)).sum()
    }
}

pub fn fit_heat_expansion(heat: &dyn Fn(f64) -> C, menu: &[f64], window: (f64, f64), points: usize) -> Result<HeatFit> {
    if menu.is_empty() || points < menu.len() || !(0.0 < window.0 && window.0 < window.1) {
        return Err(Error::Domain("bad heat-expansion fit setup".into()));
    }
    let ts: Vec<f64> = (0..points)
        .map(|i| (window.0.ln() + (window.1 / window.0).ln() * i as f64 / (points - 1) as f64).exp())
        .collect();
    let hs: Vec<C> = ts.iter().map(|&t| heat(t)).collect();
    let k = menu.len();
    // scale columns to unit norm
    let mut a = linalg::zeros(points, k);
    let mut norms = vec![0.0; k];
    for j in 0..k {
        let col: Vec<f64> = ts.iter().map(|&t| t.powf(menu[j])).collect();
        norms[j] = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..points {
            a[(i, j)] = C::new(col[i] / norms[j], 0.0);
        }
    }
    let (s, u, v) = linalg::svd_full(&a)?;
    let smax = s[0];
    let smin = s[k - 1];
    if smin <= 1e-14 * smax {
        return Err(Error::Continuation("degenerate exponent menu".into()));
    }
    // x = V Σ⁻¹ Uᵀ h
    let mut coeffs = vec![C::new(0.0, 0.0); k];
    for l in 0..k {
        let proj: C = (0..points).map(|i| u[(i, l)].conj() * hs[i]).sum::<C>() / s[l];
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c += v[(j, l)] * proj;
        }
    }
    for j in 0..k {
        coeffs[j] /= norms[j];
    }
    let hmax = hs.iter().map(|h| h.norm()).fold(0.0, f64::max).max(1e-300);
    let residual = ts
        .iter()
        .zip(&hs)
        .map(|(&t, h)| (h - menu.iter().zip(&coeffs).map(|(&al, c)| c * t.powf(al)).sum::<C>()).norm())
        .fold(0.0, f64::max)
        / hmax;
    Ok(HeatFit {
        menu: menu.to_vec(),
        coefficients: coeffs.iter().map(|c| [c.re, c.im]).collect(),
        residual,
        condition: smax / smin,
        window,
    })
}

/// Meromorphic continuation of ζ(s) = Γ(s)^{-1}∫₀^∞ t^{s−1} e^{-t} H(t) dt from the unshifted
/// heat trace H(t) = τ(b e^{-tD²}):
/// Γ(s)ζ(s) = Σ_α c_α γ(s+α, T) + ∫_{t_lo}^T t^{s−1}e^{-t}(H − Σ c_α t^α) dt + ∫_T^∞ t^{s−1}e^{-t}H dt.
/// The fitted expansion must capture H to exponential accuracy below t_lo.
pub struct MellinContinuation {
    pub fit: HeatFit,
    pub split: f64,
    near: Vec<(f64, f64, C)>,
    far: Vec<(f64, f64, C)>,
}

pub const MAX_FIT_RESIDUAL: f64 = 1e-6;
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (0.005, 0.1);

impl MellinContinuation {
    pub fn new(heat: &dyn Fn(f64) -> C, menu: &[f64], window: (f64, f64), split: f64) -> Result<Self> {
        if !(split > window.0 && split <= 5.0) {
            return Err(Error::Domain(format!("split point {split} outside (t_lo, 5]")));
        }
        let fit = fit_heat_expansion(heat, menu, window, 40)?;
        if fit.residual > MAX_FIT_RESIDUAL {
            return Err(Error::Continuation(format!("heat-expansion fit residual {:.2e}", fit.residual)));
        }
        let t_lo = window.0;
        let near = quad::composite_gl(t_lo.ln(), split.ln(), 40, 20)
            .into_iter()
            .map(|(u, w)| {
                let t = u.exp();
                (t, w * t, heat(t) - fit.eval(t))
            })
            .collect();
        let far = quad::composite_gl(split, split + 120.0, 60, 20).into_iter().map(|(t, w)| (t, w, heat(t))).collect();
        Ok(Self { fit, split, near, far })
    }

    pub fn zeta(&self, s: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (i, &a) in self.fit.menu.iter().enumerate() {
            acc += self.fit.coefficient(i) * special::lower_gamma_series(s + a, self.split);
        }
        for &(t, w, h) in self.near.iter().chain(&self.far) {
            acc += h * ((s - 1.0) * t.ln() - t).exp() * w;
        }
        acc * special::rgamma(s)
    }
}

/// Coefficients a_n, n ∈ range, of the Laurent expansion of f about `center`, from the
/// trapezoid rule on the circle |w − center| = radius.
pub fn laurent_coefficients(f: &dyn Fn(C) -> C, center: C, radius: f64, nodes: usize, range: std::ops::RangeInclusive<i32>) -> Vec<C> {
    let vals: Vec<(C, C)> = (0..nodes)
        .map(|k| {
            let u = C::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64);
            (u, f(center + u))
        })
        .collect();
    range.map(|n| vals.iter().map(|(u, v)| v * u.powi(-n)).sum::<C>() / nodes as f64).collect()
}

/// Residue at `center` of f, by the circle rule.
pub fn residue(f: &dyn Fn(C) -> C, center: C, radius: f64, nodes: usize) -> C {
    laurent_coefficients(f, center, radius, nodes, -1..=-1)[0]
}

/// Laurent data of a continued zeta function at its critical point:
/// τ_j = coefficient of w^{-j-1}, j = −1, 0, …, J (so τ_{−1} is the constant term).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaurentData {
    pub model_id: String,
    pub b_word: String,
    pub menu: Vec<f64>,
    pub critical_point: [f64; 2],
    /// τ_{−1}, τ_0, …, τ_J as (re, im)
    pub tau: Vec<[f64; 2]>,
    /// |a_{−J−2}|: first coefficient beyond the stored principal part (should vanish)
    pub truncation: f64,
    pub fit_residual: f64,
    pub condition: f64,
}

impl LaurentData {
    /// `f` is the continued zeta function in the local variable w = r − r₀, r₀ = `critical`.
    pub fn from_function(f: impl Fn(C) -> C, critical: C, max_j: usize, radius: f64, nodes: usize) -> Result<Self> {
        let g = |w: C| f(w);
        let lo = -(max_j as i32) - 2;
        let coeffs = laurent_coefficients(&g, C::new(0.0, 0.0), radius, nodes, lo..=0);
        // coeffs[i] = a_{lo+i}
        let a = |n: i32| coeffs[(n - lo) as usize];
        let tau: Vec<[f64; 2]> = (-1..=max_j as i32)
            .map(|j| {
                let v = a(-j - 1);
                [v.re, v.im]
            })
            .collect();
        if tau.iter().any(|t| !t[0].is_finite() || !t[1].is_finite()) {
            return Err(Error::Continuation("non-finite Laurent coefficient".into()));
        }
        Ok(Self {
            model_id: String::new(),
            b_word: String::new(),
            menu: Vec::new(),
            critical_point: [critical.re, critical.im],
            tau,
            truncation: a(lo).norm(),
            fit_residual: 0.0,
            condition: 1.0,
        })
    }

    /// Laurent data of w ↦ ζ(w + offset) at w = 0.
    pub fn from_mellin(cont: &MellinContinuation, offset: f64, critical: C, max_j: usize) -> Result<Self> {
        // stay clear of the other poles −α − offset − k of the continuation
        let mut dist: f64 = 1.0;
        for &a in &cont.fit.menu {
            for k in 0..16 {
                let pole = -a - offset - k as f64;
                if pole.abs() > 1e-9 {
                    dist = dist.min(pole.abs());
                }
            }
        }
        let mut d = Self::from_function(|w| cont.zeta(w + offset), critical, max_j, 0.5 * dist, 64)?;
        d.menu = cont.fit.menu.clone();
        d.fit_residual = cont.fit.residual;
        d.condition = cont.fit.condition;
        Ok(d)
    }

    pub fn max_j(&self) -> i32 {
        self.tau.len() as i32 - 2
    }

    pub fn tau_j(&self, j: i32) -> Result<C> {
        if j < -1 || j > self.max_j() {
            return Err(Error::Domain(format!("τ_{j} not stored (have −1..={})", self.max_j())));
        }
        let t = self.tau[(j + 1) as usize];
        Ok(C::new(t[0], t[1]))
    }

    pub fn is_pole_free(&self, tol: f64) -> bool {
        self.tau[1..].iter().all(|t| t[0].hypot(t[1]) <= tol)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Model(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_branches_agree() {
        for t in [0.3, 0.9, 1.0, 1.1, 2.0] {
            let direct = theta_truncated(t, 200);
            assert!((theta(t) - direct).abs() < 1e-13 * direct, "t={t}");
        }
    }

    #[test]
    fn circle_heat_example() {
        let expect = (-1.0f64).exp() * (1.0 + 2.0 * ((-1.0f64).exp() + (-4.0f64).exp()));
        assert!((circle_heat_trace(1.0, 2) - expect).abs() < 1e-15);
    }

    #[test]
    fn circle_zeta_pole() {
        // Σ_n (1+n²)^{-s}: residue 1 at s = 1/2
        let cont = MellinContinuation::new(&|t| C::new(theta(t), 0.0), &[-0.5], DEFAULT_FIT_WINDOW, 1.0).unwrap();
        let d = LaurentData::from_mellin(&cont, 0.5, C::new(0.0, 0.0), 1).unwrap();
        assert!((d.tau_j(0).unwrap() - 1.0).norm() < 1e-9);
        assert!(d.tau_j(1).unwrap().norm() < 1e-9);
        // agreement with direct summation in the convergence region
        let s = C::new(2.5, 0.3);
        let direct: C = (-20000i64..=20000).map(|n| C::new(1.0 + (n * n) as f64, 0.0).powc(-s)).sum();
        assert!((cont.zeta(s) - direct).norm() < 1e-9);
    }

    #[test]
    fn split_point_independence() {
        let h = |t: f64| C::new(theta(t).powi(2), 0.0);
        let a = MellinContinuation::new(&h, &[-1.0, 0.0], DEFAULT_FIT_WINDOW, 1.0).unwrap();
        let b = MellinContinuation::new(&h, &[-1.0, 0.0], DEFAULT_FIT_WINDOW, 2.0).unwrap();
        for s in [C::new(0.3, 0.2), C::new(-0.7, 0.0), C::new(1.6, -1.0)] {
            assert!((a.zeta(s) - b.zeta(s)).norm() < 1e-9, "{s}");
        }
        assert!((a.fit.coefficient(0).re - PI).abs() < 1e-10);
    }

    #[test]
    fn laurent_round_trip() {
        let f = |w: C| 2.0 / w + 3.0 + w * 0.5;
        let d = LaurentData::from_function(f, C::new(0.0, 0.0), 2, 0.5, 64).unwrap();
        assert!((d.tau_j(-1).unwrap() - 3.0).norm() < 1e-14);
        assert!((d.tau_j(0).unwrap() - 2.0).norm() < 1e-14);
        assert!(d.tau_j(3).is_err());
        let back = LaurentData::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back.tau, d.tau);
    }
}
