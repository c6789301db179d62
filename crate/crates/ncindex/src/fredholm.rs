//! Skew-corner `(P·Q)`-Fredholm theory: kernel projections, the index, parametrices,
//! the bounded transform and the McKean–Singer formula.
//!
//! At matrix scale every corner operator is Fredholm, so the statements checked here are
//! the algebraic ones: index values, additivity, invariance and the trace formulas.

use num_complex::Complex64 as C;

use crate::algebra::BlockOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::triple::EvenTriple;

/// Singular values ≤ `DEFAULT_TOL · σ_max` count as kernel.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SkewCorner {
    pub p: BlockOperator,
    pub q: BlockOperator,
}

impl SkewCorner {
    pub fn new(p: BlockOperator, q: BlockOperator) -> Result<Self> {
        p.require_projection("P")?;
        q.require_projection("Q")?;
        if !p.same_algebra(&q) {
            return Err(Error::Shape("P and Q live on different algebras".into()));
        }
        Ok(Self { p, q })
    }

    /// Corner-membership defect ‖T − PTQ‖.
    pub fn defect(&self, t: &BlockOperator) -> f64 {
        let ptq = &(&self.p * t) * &self.q;
        (t - &ptq).fro_max()
    }

    pub fn require_member(&self, t: &BlockOperator) -> Result<()> {
        let d = self.defect(t);
        if d > 1e-10 * (1.0 + t.fro_max()) {
            return Err(Error::Corner(d));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self { p: self.q.clone(), q: self.p.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct KernelProjection {
    pub projection: BlockOperator,
    /// τ of the projection.
    pub trace: f64,
    /// Set when a singular value sits within a factor 10 of the threshold.
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FredholmReport {
    pub ker_q_trace: f64,
    pub coker_p_trace: f64,
    pub index: f64,
    pub ambiguous: bool,
}

/// Projection onto ker(T|_{Q H}): right singular vectors of T restricted to range(Q) whose
/// singular values are ≤ tol·max(σ_max, 1) (σ_max taken over all blocks of T).
pub fn kernel_projection(t: &BlockOperator, q: &BlockOperator, tol: f64) -> Result<KernelProjection> {
    if !t.same_algebra(q) {
        return Err(Error::Shape("T and Q live on different algebras".into()));
    }
    q.require_projection("Q")?;
    // relative to ‖T‖, floored so that a numerically vanishing T has full kernel
    let sigma_max = t.norm();
    let thr = tol * sigma_max.max(1.0);
    let mut ambiguous = false;
    let mut trace = 0.0;
    let mut blocks = Vec::with_capacity(t.blocks().len());
    for ((tb, qb), blk) in t.blocks().iter().zip(q.blocks()).zip(t.algebra().blocks()) {
        let w = linalg::range_basis(qb)?;
        let r = w.ncols();
        let n = tb.nrows();
        if r == 0 {
            blocks.push(linalg::zeros(n, n));
            continue;
        }
        let m = linalg::mul(tb, &w);
        let (s, _, v) = linalg::svd_full(&m)?;
        let mut cols = Vec::new();
        for j in 0..r {
            let sj = s.get(j).copied().unwrap_or(0.0);
            if sj <= thr {
                cols.push(j);
            }
            if sj > 0.1 * thr && sj < 10.0 * thr {
                ambiguous = true;
            }
        }
        let vk = CMat::from_fn(r, cols.len(), |i, j| v[(i, cols[j])]);
        let basis = linalg::mul(&w, &vk);
        trace += blk.weight * cols.len() as f64;
        blocks.push(linalg::mul(&basis, &linalg::adjoint(&basis)));
    }
    Ok(KernelProjection { projection: BlockOperator::from_blocks(t.algebra(), blocks)?, trace, ambiguous })
}

pub fn index(t: &BlockOperator, corner: &SkewCorner) -> Result<FredholmReport> {
    index_tol(t, corner, DEFAULT_TOL)
}

/// Ind(T) = τ(N_T^Q) − τ(N_{T*}^P).
pub fn index_tol(t: &BlockOperator, corner: &SkewCorner, tol: f64) -> Result<FredholmReport> {
    corner.require_member(t)?;
    let ker = kernel_projection(t, &corner.q, tol)?;
    let coker = kernel_projection(&t.adjoint(), &corner.p, tol)?;
    Ok(FredholmReport {
        ker_q_trace: ker.trace,
        coker_p_trace: coker.trace,
        index: ker.trace - coker.trace,
        ambiguous: ker.ambiguous || coker.ambiguous,
    })
}

/// Returns (Ind(ST), Ind(S) + Ind(T)) for T ∈ P·N·Q and S ∈ G·N·P.
pub fn product_index_check(
    s: &BlockOperator,
    t: &BlockOperator,
    g: &BlockOperator,
    p: &BlockOperator,
    q: &BlockOperator,
) -> Result<(f64, f64)> {
    let ct = SkewCorner::new(p.clone(), q.clone())?;
    let cs = SkewCorner::new(g.clone(), p.clone())?;
    let cst = SkewCorner::new(g.clone(), q.clone())?;
    let it = index(t, &ct)?.index;
    let is = index(s, &cs)?.index;
    let ist = index(&(s * t), &cst)?.index;
    Ok((ist, is + it))
}

/// T(1+|T|²)^{-1/2}.
pub fn bounded_transform(t: &BlockOperator, corner: &SkewCorner) -> Result<BlockOperator> {
    corner.require_member(t)?;
    let tt = &t.adjoint() * t;
    let f = tt.herm_eig()?.apply_real(|x| (1.0 + x.max(0.0)).powf(-0.5))?;
    Ok(t * &f)
}

/// ‖bt(T) − bt(T+A)‖ − ‖A‖, which the continuity estimate says is ≤ 0.
pub fn transform_continuity_check(t: &BlockOperator, a: &BlockOperator, corner: &SkewCorner) -> Result<f64> {
    let b0 = bounded_transform(t, corner)?;
    let b1 = bounded_transform(&(t + a), corner)?;
    Ok((&b0 - &b1).norm() - a.norm())
}

#[derive(Clone, Debug)]
pub struct ParametrixReport {
    /// ‖ST − Q‖
    pub k1_norm: f64,
    /// ‖TS − P‖
    pub k2_norm: f64,
    pub k1_in_corner: bool,
    pub k2_in_corner: bool,
}

impl ParametrixReport {
    pub fn distances(&self) -> (f64, f64) {
        (self.k1_norm, self.k2_norm)
    }
}

/// In finite dimensions the compact ideal is the whole algebra, so the parametrix
/// relations reduce to computing k1 = ST − Q and k2 = TS − P and checking that they lie in
/// the corners Q·N·Q and P·N·P.
pub fn parametrix_check(t: &BlockOperator, s: &BlockOperator, corner: &SkewCorner) -> Result<ParametrixReport> {
    corner.require_member(t)?;
    corner.adjoint().require_member(s)?;
    let k1 = &(s * t) - &corner.q;
    let k2 = &(t * s) - &corner.p;
    let qq = SkewCorner { p: corner.q.clone(), q: corner.q.clone() };
    let pp = SkewCorner { p: corner.p.clone(), q: corner.p.clone() };
    Ok(ParametrixReport {
        k1_norm: k1.norm(),
        k2_norm: k2.norm(),
        k1_in_corner: qq.require_member(&k1).is_ok(),
        k2_in_corner: pp.require_member(&k2).is_ok(),
    })
}

/// Partial isometry of the polar decomposition T = V|T|, truncated to the numerical
/// support of |T|.
pub fn polar_isometry(t: &BlockOperator, tol: f64) -> Result<BlockOperator> {
    let thr = tol * t.norm();
    let blocks = t
        .blocks()
        .iter()
        .map(|m| {
            let (s, u, v) = linalg::svd_full(m)?;
            let k = s.iter().filter(|&&x| x > thr).count();
            let uk = CMat::from_fn(u.nrows(), k, |i, j| u[(i, j)]);
            let vk = CMat::from_fn(v.nrows(), k, |i, j| v[(i, j)]);
            Ok(linalg::mul(&uk, &linalg::adjoint(&vk)))
        })
        .collect::<Result<Vec<_>>>()?;
    BlockOperator::from_blocks(t.algebra(), blocks)
}

fn check_grading(d: &BlockOperator, gamma: &BlockOperator) -> Result<()> {
    let one = BlockOperator::identity(gamma.algebra());
    let sq = (&(gamma * gamma) - &one).fro_max();
    let sa = gamma.sa_defect();
    let anti = d.anticommutator(gamma).fro_max();
    if sq > 1e-10 || sa > 1e-10 {
        return Err(Error::Grading(format!("γ is not a self-adjoint unitary (γ²−1: {sq:.2e}, γ−γ*: {sa:.2e})")));
    }
    if anti > 1e-10 * (1.0 + d.fro_max()) {
        return Err(Error::Grading(format!("Dγ + γD = {anti:.3e}")));
    }
    Ok(())
}

/// P = (1+γ)/2.
pub fn grading_projection(gamma: &BlockOperator) -> BlockOperator {
    let one = BlockOperator::identity(gamma.algebra());
    (&one + gamma).scale_re(0.5)
}

/// Returns (Ind(D⁺) by kernel projections, τ(γ f(D)) / f(0)).
pub fn mckean_singer(d: &BlockOperator, gamma: &BlockOperator, f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    check_grading(d, gamma)?;
    let f0 = f(0.0);
    if f0 == 0.0 || !f0.is_finite() {
        return Err(Error::Domain("f(0) must be finite and non-zero".into()));
    }
    let dec = d.herm_eig()?;
    for vals in &dec.values {
        for &x in vals {
            let (a, b) = (f(x), f(-x));
            if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1e-300) {
                return Err(Error::Domain(format!("f is not even at {x}")));
            }
        }
    }
    let fd = dec.apply_real(&f)?;
    let value = (gamma * &fd).trace().re / f0;
    let p = grading_projection(gamma);
    let pperp = &BlockOperator::identity(gamma.algebra()) - &p;
    let dplus = &(&pperp * d) * &p;
    let rep = index(&dplus, &SkewCorner::new(pperp, p)?)?;
    Ok((rep.index, value))
}

/// Returns (Ind(pD⁺p) by kernel count in the corner p⁻·N·p⁺,
/// (1+a)^{n/2} τ(γ p (p + a + (pDp)²)^{-n/2})), the inverse taken on pH.
pub fn mckean_singer_compressed(triple: &EvenTriple, p: &BlockOperator, n: f64, a: f64) -> Result<(f64, f64)> {
    p.require_projection("p")?;
    if a < 0.0 {
        return Err(Error::Domain("a must be ≥ 0".into()));
    }
    let gamma = &triple.gamma;
    if p.commutator(gamma).fro_max() > 1e-10 {
        return Err(Error::Grading("p does not commute with γ".into()));
    }
    let one = BlockOperator::identity(gamma.algebra());
    let pd = &(p * &triple.d) * p;
    let x = &(&p.scale_re(1.0 + a) + &(&pd * &pd)) + &(&one - p);
    let xp = x.herm_eig()?.apply_real(|v| v.powf(-0.5 * n))?;
    let value = (1.0 + a).powf(0.5 * n) * (&(gamma * p) * &xp).trace().re;
    let ind = compressed_index(triple, p)?;
    Ok((ind.index, value))
}

/// Ind(pD⁺p) with D⁺ = P^⊥ D P, in the corner (p P^⊥)·N·(p P).
pub fn compressed_index(triple: &EvenTriple, p: &BlockOperator) -> Result<FredholmReport> {
    let big_p = grading_projection(&triple.gamma);
    let one = BlockOperator::identity(triple.gamma.algebra());
    let pperp = &one - &big_p;
    let p_plus = p * &big_p;
    let p_minus = p * &pperp;
    let t = &(&p_minus * &triple.d) * &p_plus;
    index(&t, &SkewCorner::new(p_minus, p_plus)?)
}

/// τ(γ p): at matrix scale every corner operator has index τ(Q) − τ(P).
pub fn dimension_count_index(gamma: &BlockOperator, p: &BlockOperator) -> f64 {
    let v: C = (gamma * p).trace();
    v.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TracedAlgebra;
    use crate::linalg::{cr, diag_real};
    use std::sync::Arc;

    fn alg() -> Arc<TracedAlgebra> {
        TracedAlgebra::new([(2, 1.0), (1, 2f64.sqrt())]).unwrap()
    }

    fn op(alg: &Arc<TracedAlgebra>, a: &[f64], b: &[f64]) -> BlockOperator {
        BlockOperator::from_blocks(alg, vec![diag_real(a), diag_real(b)]).unwrap()
    }

    #[test]
    fn weighted_example_index_sqrt2() {
        let alg = alg();
        let q = op(&alg, &[1.0, 0.0], &[1.0]);
        let p = op(&alg, &[1.0, 0.0], &[0.0]);
        let t = op(&alg, &[1.0, 0.0], &[0.0]);
        let rep = index(&t, &SkewCorner::new(p, q).unwrap()).unwrap();
        assert!((rep.ker_q_trace - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(rep.coker_p_trace, 0.0);
        assert!((rep.index - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn kernel_projection_trivial_cases() {
        let alg = alg();
        let q = op(&alg, &[1.0, 0.0], &[1.0]);
        let k = kernel_projection(&q, &q, DEFAULT_TOL).unwrap();
        assert_eq!(k.trace, 0.0);
        let z = BlockOperator::zeros(&alg);
        let k = kernel_projection(&z, &q, DEFAULT_TOL).unwrap();
        assert!((&k.projection - &q).fro_max() < 1e-14);
    }

    #[test]
    fn corner_violation_is_an_error() {
        let alg = alg();
        let p = op(&alg, &[1.0, 0.0], &[0.0]);
        let t = BlockOperator::identity(&alg);
        assert!(matches!(index(&t, &SkewCorner::new(p.clone(), p).unwrap()), Err(Error::Corner(_))));
    }

    #[test]
    fn mckean_singer_rank_one() {
        // H = C³, γ = diag(1,1,−1), D⁺ of rank one: index 2 − 1 = 1.
        let alg = TracedAlgebra::matrix(3);
        let gamma = BlockOperator::from_blocks(&alg, vec![diag_real(&[1.0, 1.0, -1.0])]).unwrap();
        let mut d = linalg::zeros(3, 3);
        d[(2, 0)] = cr(0.7);
        d[(0, 2)] = cr(0.7);
        let d = BlockOperator::from_blocks(&alg, vec![d]).unwrap();
        let (ind, val) = mckean_singer(&d, &gamma, |x| (-x * x).exp()).unwrap();
        assert_eq!(ind, 1.0);
        assert!((val - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mckean_singer_rejects_even_d() {
        let alg = TracedAlgebra::matrix(2);
        let gamma = BlockOperator::from_blocks(&alg, vec![diag_real(&[1.0, -1.0])]).unwrap();
        let d = BlockOperator::identity(&alg);
        assert!(matches!(mckean_singer(&d, &gamma, |x| (-x * x).exp()), Err(Error::Grading(_))));
    }

    #[test]
    fn parametrix_examples() {
        let alg = TracedAlgebra::matrix(2);
        let one = BlockOperator::identity(&alg);
        let c = SkewCorner::new(one.clone(), one.clone()).unwrap();
        let z = BlockOperator::zeros(&alg);
        let r = parametrix_check(&z, &z, &c).unwrap();
        assert!((r.k1_norm - 1.0).abs() < 1e-14 && (r.k2_norm - 1.0).abs() < 1e-14);
        // S = D(1+D²)^{-1} is a parametrix for D with ST − 1 = −(1+D²)^{-1}.
        let d = BlockOperator::from_blocks(&alg, vec![diag_real(&[2.0, 0.5])]).unwrap();
        let s = d.func_calc(|x| x / (1.0 + x * x)).unwrap();
        let r = parametrix_check(&d, &s, &c).unwrap();
        assert!((r.k1_norm - 0.8).abs() < 1e-14 && (r.k2_norm - 0.8).abs() < 1e-14);
        assert!(r.k1_in_corner && r.k2_in_corner);
    }
}
