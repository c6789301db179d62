//! Resolvent and move-right expansions with exactly materialized remainders, plus the
//! Cauchy and Laplace-type integrals that turn expansion terms into zeta data.

use num_complex::Complex64 as C;

use crate::algebra::{BlockOperator, SpectralDecomposition};
use crate::constants::{self, Rational};
use crate::error::{Error, Result};
use crate::quad;
pub use crate::quad::QuadratureSpec;
use crate::special;
use crate::triple::{DoubledTriple, EvenTriple};

/// One right-collected term C(k)·a₀ B₁^{(k₁)}⋯B_m^{(k_m)} R^{|k|+m+1}.
#[derive(Clone, Debug)]
pub struct ExpansionTerm {
    pub k: Vec<u32>,
    /// C(k) = (|k|+m)! α(k).
    pub coefficient: Rational,
    /// (−1)^{|k|}, the sign acquired when the resolvent power is integrated against λ^{-z}
    /// (for even m; odd m carries the extra (−1)^m separately).
    pub cauchy_sign: i32,
    /// a₀, B₁^{(k₁)}, …, B_m^{(k_m)}.
    pub word: Vec<BlockOperator>,
    pub resolvent_power: u32,
}

impl ExpansionTerm {
    pub fn m(&self) -> usize {
        self.word.len() - 1
    }

    pub fn total_k(&self) -> u32 {
        self.k.iter().sum()
    }

    /// a₀ B₁^{(k₁)}⋯B_m^{(k_m)} (no resolvent).
    pub fn product(&self) -> BlockOperator {
        let mut out = self.word[0].clone();
        for w in &self.word[1..] {
            out = &out * w;
        }
        out
    }
}

/// Resolvent powers R_s(λ)^n = (λ − (1+s²+D²))^{-n}, shared by the expansions.
struct ResolventPowers {
    dec: SpectralDecomposition,
    shift: f64,
    lambda: C,
}

impl ResolventPowers {
    fn new(d: &BlockOperator, s: f64, lambda: C) -> Result<Self> {
        let dec = d.herm_eig()?;
        let shift = 1.0 + s * s;
        for vals in &dec.values {
            for &x in vals {
                if (lambda - (shift + x * x)).norm() < 1e-12 {
                    return Err(Error::Spectrum(format!("λ = {lambda} on the spectrum of 1+s²+D²")));
                }
            }
        }
        Ok(Self { dec, shift, lambda })
    }

    fn pow(&self, n: u32) -> BlockOperator {
        let (sh, l) = (self.shift, self.lambda);
        self.dec.apply(|x| (1.0 / (l - (sh + x * x))).powi(n as i32))
    }
}

/// Terms (R X)^m R, m = 0..=order, and the exact remainder (R X)^{order+1} R̃ with
/// X = 2sσ3σ2⊗[D,p], R = (λ − (1+s²+1⊗D²))^{-1} and R̃ = (λ − (1+D̃_{0,s}²))^{-1}.
pub fn resolvent_expand(
    doubled: &DoubledTriple,
    s: f64,
    lambda: C,
    order: usize,
) -> Result<(Vec<BlockOperator>, BlockOperator)> {
    let rp = ResolventPowers::new(&doubled.base.d, s, lambda)?;
    let r = doubled.lift(&crate::linalg::eye(2), &rp.pow(1));
    let x = doubled.x_perturbation(s);
    let rx = &r * &x;
    let mut terms = Vec::with_capacity(order + 1);
    let mut cur = r.clone();
    terms.push(cur.clone());
    for _ in 0..order {
        cur = &rx * &cur;
        terms.push(cur.clone());
    }
    let full = full_doubled_resolvent(doubled, s, lambda)?;
    let mut lead = rx.clone();
    for _ in 0..order {
        lead = &lead * &rx;
    }
    Ok((terms, &lead * &full))
}

/// R̃_s(λ) = (λ − (1+D̃_{0,s}²))^{-1}.
pub fn full_doubled_resolvent(doubled: &DoubledTriple, s: f64, lambda: C) -> Result<BlockOperator> {
    let dt = doubled.dtilde(0.0, s);
    dt.resolvent(1.0, lambda)
}

/// Rewrites a₀ R B₁ R ⋯ B_m R (R = R_s(λ)) as Σ_{|k| ≤ order−m} C(k) a₀B₁^{(k₁)}⋯B_m^{(k_m)} R^{|k|+m+1}
/// plus an exactly computed remainder, where B^{(n)} is the n-fold commutator with D².
pub fn move_right_expand(
    triple: &EvenTriple,
    a0: &BlockOperator,
    factors: &[BlockOperator],
    s: f64,
    lambda: C,
    order: usize,
) -> Result<(Vec<ExpansionTerm>, BlockOperator)> {
    let m = factors.len();
    if order < m {
        return Err(Error::Domain(format!("expansion order {order} below word length {m}")));
    }
    let budget = (order - m) as u32;
    let rp = ResolventPowers::new(&triple.d, s, lambda)?;
    let d2 = triple.d_squared();
    // tails[i] = R B_{i+1} R ⋯ B_m R (original, unexpanded), tails[m] = R... unused
    let r1 = rp.pow(1);
    let mut tails = vec![r1.clone(); m + 1];
    for i in (0..m).rev() {
        if i + 1 < m {
            tails[i] = &(&r1 * &factors[i + 1]) * &tails[i + 1];
        } else {
            tails[i] = r1.clone();
        }
    }
    let mut ctx = Ctx { rp: &rp, d2: &d2, factors, tails: &tails, terms: Vec::new(), remainder: BlockOperator::zeros(&triple.algebra), m };
    ctx.expand(0, a0.clone(), vec![a0.clone()], 1, budget, Vec::new(), 1.0);
    let Ctx { terms, remainder, .. } = ctx;
    Ok((terms, remainder))
}

struct Ctx<'a> {
    rp: &'a ResolventPowers,
    d2: &'a BlockOperator,
    factors: &'a [BlockOperator],
    tails: &'a [BlockOperator],
    terms: Vec<ExpansionTerm>,
    remainder: BlockOperator,
    m: usize,
}

impl Ctx<'_> {
    fn commutators(&self, t: &BlockOperator, upto: u32) -> Vec<BlockOperator> {
        let mut out = vec![t.clone()];
        for _ in 0..upto {
            let next = self.d2.commutator(out.last().expect("non-empty"));
            out.push(next);
        }
        out
    }

    /// Exact remainder of R^j T = Σ_{n ≤ M} binom(j+n−1, n) T^{(n)} R^{j+n} + rem(j, T, M).
    fn rem(&self, j: u32, t: &BlockOperator, budget: u32) -> BlockOperator {
        if j == 0 {
            return BlockOperator::zeros(t.algebra());
        }
        let cs = self.commutators(t, budget + 1);
        let mut out = &(&self.rp.pow(j) * &cs[budget as usize + 1]) * &self.rp.pow(budget + 1);
        for n in 0..=budget {
            if j > 1 {
                let inner = self.rem(j - 1, &cs[n as usize], budget - n);
                out = &out + &(&inner * &self.rp.pow(n + 1));
            }
        }
        out
    }

    /// coef·prefix·R^j·B_i·tail_i, where coef is the product of binomials collected so far.
    #[allow(clippy::too_many_arguments)]
    fn expand(&mut self, i: usize, prefix: BlockOperator, word: Vec<BlockOperator>, j: u32, budget: u32, ks: Vec<u32>, coef: f64) {
        if i == self.m {
            let coefficient = constants::c_of_k(&ks);
            debug_assert!((constants::to_f64(&coefficient) - coef).abs() <= 1e-12 * coef);
            let total: u32 = ks.iter().sum();
            self.terms.push(ExpansionTerm {
                cauchy_sign: if total.is_multiple_of(2) { 1 } else { -1 },
                coefficient,
                k: ks,
                word,
                resolvent_power: j,
            });
            return;
        }
        let b = &self.factors[i];
        let r = self.rem(j, b, budget);
        let piece = (&(&prefix * &r) * &self.tails[i]).scale_re(coef);
        self.remainder = &self.remainder + &piece;
        let cs = self.commutators(b, budget);
        for n in 0..=budget {
            let mut w = word.clone();
            w.push(cs[n as usize].clone());
            let mut k2 = ks.clone();
            k2.push(n);
            let pre = &prefix * &cs[n as usize];
            let c = coef * special::binomial((j + n - 1) as u64, n as u64);
            self.expand(i + 1, pre, w, j + n + 1, budget - n, k2, c);
        }
    }
}

/// Evaluate Σ terms (with their coefficients and resolvent powers) as an operator.
pub fn assemble_terms(triple: &EvenTriple, terms: &[ExpansionTerm], s: f64, lambda: C) -> Result<BlockOperator> {
    let rp = ResolventPowers::new(&triple.d, s, lambda)?;
    let mut out = BlockOperator::zeros(&triple.algebra);
    for t in terms {
        let c = constants::to_f64(&t.coefficient);
        out = &out + &(&t.product() * &rp.pow(t.resolvent_power)).scale_re(c);
    }
    Ok(out)
}

/// a₀ R B₁ R ⋯ B_m R.
pub fn direct_word(triple: &EvenTriple, a0: &BlockOperator, factors: &[BlockOperator], s: f64, lambda: C) -> Result<BlockOperator> {
    let rp = ResolventPowers::new(&triple.d, s, lambda)?;
    let r = rp.pow(1);
    let mut out = &a0.clone() * &r;
    for b in factors {
        out = &(&out * b) * &r;
    }
    Ok(out)
}

/// Truncation point of the vertical contour such that the tail bound
/// (1/π)K V^{-(Re z + k)}/(Re z + k) falls below `target` (K = e^{π|Im z|/2}).
pub fn contour_cutoff(exponent: C, k: u32, quad: &QuadratureSpec, target: f64) -> Result<f64> {
    let e = exponent.re + k as f64;
    if e <= 0.0 {
        return Err(Error::Domain(format!("contour integral diverges (Re z + k = {e})")));
    }
    let kk = (std::f64::consts::FRAC_PI_2 * exponent.im.abs()).exp();
    let mut v = quad.v_max;
    for _ in 0..=10 {
        let tail = kk * v.powf(-e) / (std::f64::consts::PI * e);
        if tail <= target {
            return Ok(v);
        }
        v *= 2.0;
    }
    Err(Error::Quadrature(format!("contour tail bound above {target:.1e} at v_max = {:.3e}", v / 2.0)))
}

/// Scalar Cauchy integrals (1/2πi)∫_l λ^{-z} (λ − x_i)^{-(k+1)} dλ for a list of x_i > a.
pub fn cauchy_scalars(xs: &[f64], exponent: C, k: u32, quad: &QuadratureSpec) -> Result<Vec<C>> {
    quad.validate()?;
    let v_max = contour_cutoff(exponent, k, quad, 0.1 * quad.abs_tol)?;
    let r = quad::vertical_line(
        |lam| xs.iter().map(|&x| lam.powc(-exponent) * (1.0 / (lam - x)).powi(k as i32 + 1)).collect::<Vec<C>>(),
        quad.contour_a,
        v_max,
        quad.abs_tol,
        quad.rel_tol,
        quad.max_nodes,
    )?;
    Ok(r.value)
}

/// (−1)^k Γ(z+k)/(Γ(z) k!) · x^{-z-k}.
pub fn cauchy_closed_form(x: f64, exponent: C, k: u32) -> C {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let g = (special::ln_gamma(exponent + k as f64) - special::ln_gamma(exponent)).exp() / special::factorial(k as u64);
    g * sign * C::new(x, 0.0).powc(-exponent - k as f64)
}

/// (numeric contour integral, closed form) of (1/2πi)∫_l λ^{-z} R^{k+1} dλ with
/// R = (λ − (shift + D²))^{-1}.
pub fn cauchy_power_integral(
    d: &BlockOperator,
    shift: f64,
    exponent: C,
    k: u32,
    quad: &QuadratureSpec,
) -> Result<(BlockOperator, BlockOperator)> {
    let dec = d.herm_eig()?;
    let xs: Vec<f64> = dec.values.iter().flatten().map(|&x| shift + x * x).collect();
    if xs.iter().any(|&x| x <= quad.contour_a) {
        return Err(Error::Spectrum(format!("spectrum of shift + D² must lie right of a = {}", quad.contour_a)));
    }
    let vals = cauchy_scalars(&xs, exponent, k, quad)?;
    let mut it = vals.into_iter();
    let mut per_block = Vec::new();
    for v in &dec.values {
        per_block.push((0..v.len()).map(|_| it.next().expect("length matches")).collect::<Vec<C>>());
    }
    let numeric = BlockOperator::from_blocks(
        dec.algebra(),
        per_block.iter().zip(&dec.vectors).map(|(d, u)| crate::algebra::conj_diag(u, d)).collect(),
    )?;
    let closed = dec.apply(|x| cauchy_closed_form(shift + x * x, exponent, k));
    Ok((numeric, closed))
}

/// 2^{m−1} Γ((m+1)/2) Γ(A−(m+1)/2)/Γ(A) · c^{(m+1)/2−A} = ∫₀^∞ (2s)^m (c+s²)^{-A} ds.
pub fn s_integral_closed(c: f64, m: u32, a: f64) -> f64 {
    let h = (m as f64 + 1.0) / 2.0;
    let lg = |x: f64| special::ln_gamma(C::new(x, 0.0)).re;
    ((m as f64 - 1.0) * std::f64::consts::LN_2 + lg(h) + lg(a - h) - lg(a) + (h - a) * c.ln()).exp()
}

/// (numeric, closed form) of ∫₀^∞ (2s)^m (c+s²)^{-A} ds.
pub fn s_integral_gamma(c: f64, m: u32, a: f64) -> Result<(f64, f64)> {
    if !m.is_multiple_of(2) || c <= 0.0 {
        return Err(Error::Domain("need even m and c > 0".into()));
    }
    if a <= (m as f64 + 1.0) / 2.0 {
        return Err(Error::Domain(format!("A = {a} ≤ (m+1)/2: divergent")));
    }
    let closed = s_integral_closed(c, m, a);
    let r = quad::exp_sinh(|s| (2.0 * s).powi(m as i32) * (c + s * s).powf(-a), 1e-300, 1e-13, 1 << 16)?;
    Ok((r.value, closed))
}
