//! Even spectral triples at matrix scale and the Clifford doubling used to turn the
//! index into a one-parameter family of supertraces.

use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::algebra::{BlockOperator, TracedAlgebra};
use crate::error::{Error, Result};
use crate::fredholm;
use crate::linalg::{self, CMat};
use crate::quad::{self, QuadratureSpec};
use crate::special;

const GRADING_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct EvenTriple {
    pub algebra: Arc<TracedAlgebra>,
    pub generators: Vec<BlockOperator>,
    pub d: BlockOperator,
    pub gamma: BlockOperator,
    /// Formal spectral-dimension parameter (≥ 1).
    pub q: f64,
}

impl EvenTriple {
    pub fn new(generators: Vec<BlockOperator>, d: BlockOperator, gamma: BlockOperator, q: f64) -> Result<Self> {
        let t = Self { algebra: d.algebra().clone(), generators, d, gamma, q };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1.0 {
            return Err(Error::Domain(format!("q = {} < 1", self.q)));
        }
        let ops = std::iter::once(&self.gamma).chain(self.generators.iter());
        for a in ops {
            if !a.same_algebra(&self.d) {
                return Err(Error::Shape("triple operators live on different algebras".into()));
            }
        }
        let one = BlockOperator::identity(&self.algebra);
        let sa = self.gamma.sa_defect();
        let sq = (&(&self.gamma * &self.gamma) - &one).fro_max();
        if sa > GRADING_TOL || sq > GRADING_TOL {
            return Err(Error::Grading(format!("γ is not a symmetry (γ−γ*: {sa:.2e}, γ²−1: {sq:.2e})")));
        }
        let dsa = self.d.sa_defect();
        if dsa > GRADING_TOL * (1.0 + self.d.fro_max()) {
            return Err(Error::NotSelfAdjoint { defect: dsa, allowed: GRADING_TOL * (1.0 + self.d.fro_max()) });
        }
        let anti = self.d.anticommutator(&self.gamma).fro_max();
        if anti > GRADING_TOL * (1.0 + self.d.fro_max()) {
            return Err(Error::Grading(format!("Dγ + γD = {anti:.3e}")));
        }
        for (i, a) in self.generators.iter().enumerate() {
            let c = a.commutator(&self.gamma).fro_max();
            if c > GRADING_TOL * (1.0 + a.fro_max()) {
                return Err(Error::Grading(format!("generator {i} does not commute with γ ({c:.3e})")));
            }
        }
        Ok(())
    }

    /// [D, a].
    pub fn commutator(&self, a: &BlockOperator) -> BlockOperator {
        self.d.commutator(a)
    }

    pub fn d_squared(&self) -> BlockOperator {
        &self.d * &self.d
    }

    /// T^{(n)}: n-fold commutator with D².
    pub fn iterated_commutator(&self, t: &BlockOperator, n: usize) -> BlockOperator {
        let d2 = self.d_squared();
        let mut out = t.clone();
        for _ in 0..n {
            out = d2.commutator(&out);
        }
        out
    }

    /// Same triple with D replaced by εD.
    pub fn rescaled(&self, eps: f64) -> Result<Self> {
        Self::new(self.generators.clone(), self.d.scale_re(eps), self.gamma.clone(), self.q)
    }

    /// Rescale D so that ‖[D,p]‖ < √2 (ε = 1.3/‖[D,p]‖ when needed). Returns the factor used.
    pub fn rescaled_for(&self, p: &BlockOperator) -> Result<(Self, f64)> {
        let c = self.commutator(p).norm();
        if c >= std::f64::consts::SQRT_2 {
            let eps = 1.3 / c;
            Ok((self.rescaled(eps)?, eps))
        } else {
            Ok((self.clone(), 1.0))
        }
    }

    /// Ind(pD⁺p) via kernel projections in the corner p⁻·N·p⁺.
    pub fn compressed_index(&self, p: &BlockOperator) -> Result<f64> {
        Ok(fredholm::compressed_index(self, p)?.index)
    }
}

/// Which closed rectangle of perturbations to integrate the one-form around.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rectangle {
    /// D̂ = D̃_{w,s} = σ3⊗D_w + sσ2⊗(2p−1).
    Doubling,
    /// D̂ = σ3⊗D_w + sσ2⊗1.
    Clifford,
}

#[derive(Clone, Debug)]
pub struct DoubledTriple {
    pub base: EvenTriple,
    pub p: BlockOperator,
    /// Factor applied to D to enforce ‖[D,p]‖ < √2.
    pub scale: f64,
    pub sigma: [CMat; 3],
    alg2: Arc<TracedAlgebra>,
    dp_comm: BlockOperator,
    two_p_minus_1: BlockOperator,
    d_p: BlockOperator,
}

impl DoubledTriple {
    pub fn new(base: &EvenTriple, p: &BlockOperator) -> Result<Self> {
        p.require_projection("p")?;
        if p.commutator(&base.gamma).fro_max() > GRADING_TOL {
            return Err(Error::Grading("p does not commute with γ".into()));
        }
        let (base, scale) = base.rescaled_for(p)?;
        let one = BlockOperator::identity(&base.algebra);
        let pc = &one - p;
        let d_p = &(&(p * &base.d) * p) + &(&(&pc * &base.d) * &pc);
        Ok(Self {
            alg2: base.algebra.amplified(2),
            dp_comm: base.commutator(p),
            two_p_minus_1: &p.scale_re(2.0) - &one,
            d_p,
            sigma: linalg::pauli(),
            p: p.clone(),
            scale,
            base,
        })
    }

    pub fn doubled_algebra(&self) -> &Arc<TracedAlgebra> {
        &self.alg2
    }

    /// m ⊗ a on C² ⊗ H.
    pub fn lift(&self, m: &CMat, a: &BlockOperator) -> BlockOperator {
        a.kron_left(m, &self.alg2)
    }

    fn one2(&self) -> CMat {
        linalg::eye(2)
    }

    /// D_p = pDp + (1−p)D(1−p).
    pub fn d_p(&self) -> &BlockOperator {
        &self.d_p
    }

    /// D_w = (1−w)D + wD_p.
    pub fn d_w(&self, w: f64) -> BlockOperator {
        &self.base.d.scale_re(1.0 - w) + &self.d_p.scale_re(w)
    }

    pub fn dtilde(&self, w: f64, s: f64) -> BlockOperator {
        &self.lift(&self.sigma[2], &self.d_w(w)) + &self.lift(&self.sigma[1], &self.two_p_minus_1).scale_re(s)
    }

    /// The second family: σ3⊗D_w + sσ2⊗1.
    pub fn dhat_clifford(&self, w: f64, s: f64) -> BlockOperator {
        let one = BlockOperator::identity(&self.base.algebra);
        &self.lift(&self.sigma[2], &self.d_w(w)) + &self.lift(&self.sigma[1], &one).scale_re(s)
    }

    /// 1⊗D_w² + 2s(1−w)σ3σ2⊗[D,p] + s².
    pub fn dtilde_square_formula(&self, w: f64, s: f64) -> BlockOperator {
        let dw = self.d_w(w);
        let s3s2 = linalg::mul(&self.sigma[2], &self.sigma[1]);
        let one2 = self.one2();
        let id = BlockOperator::identity(&self.alg2);
        &(&self.lift(&one2, &(&dw * &dw)) + &self.lift(&s3s2, &self.dp_comm).scale_re(2.0 * s * (1.0 - w)))
            + &id.scale_re(s * s)
    }

    pub fn square_identity_defect(&self, w: f64, s: f64) -> f64 {
        let dt = self.dtilde(w, s);
        (&(&dt * &dt) - &self.dtilde_square_formula(w, s)).fro_max()
    }

    /// 2sσ3σ2⊗[D,p], the perturbation in D̃_{0,s}² = 1⊗(D²+s²) + X.
    pub fn x_perturbation(&self, s: f64) -> BlockOperator {
        let s3s2 = linalg::mul(&self.sigma[2], &self.sigma[1]);
        self.lift(&s3s2, &self.dp_comm).scale_re(2.0 * s)
    }

    pub fn dp_commutator(&self) -> &BlockOperator {
        &self.dp_comm
    }

    pub fn two_p_minus_one(&self) -> &BlockOperator {
        &self.two_p_minus_1
    }

    /// Sτ(T) = ½τ₂((σ3⊗1)γ̃T) with γ̃ = σ3⊗γ, i.e. ½τ₂((1⊗γ)T).
    pub fn supertrace(&self, t: &BlockOperator) -> C {
        let g = self.lift(&self.one2(), &self.base.gamma);
        (&g * t).trace() * 0.5
    }

    /// α_{D̂}(Y) = τ₂((σ2⊗γ) Y (1+D̂²)^{-n/2}).
    pub fn one_form(&self, dhat: &BlockOperator, y: &BlockOperator, n: f64) -> Result<C> {
        let big_gamma = self.lift(&self.sigma[1], &self.base.gamma);
        let dec = dhat.herm_eig()?;
        Ok(dec.trace_with(&(&big_gamma * y), |x| C::new((1.0 + x * x).powf(-0.5 * n), 0.0)))
    }

    /// ∮α around the rectangle [0,1]×[−s_max, s_max] traversed as in the constancy
    /// argument, with composite Gauss–Legendre on each leg.
    pub fn rectangle_loop(&self, kind: Rectangle, n: f64, s_max: f64, nodes_per_leg: usize) -> Result<C> {
        let order = 20;
        let panels_s = nodes_per_leg.div_ceil(order).max(1);
        let panels_w = panels_s;
        let family = |w: f64, s: f64| match kind {
            Rectangle::Doubling => self.dtilde(w, s),
            Rectangle::Clifford => self.dhat_clifford(w, s),
        };
        let one = BlockOperator::identity(&self.base.algebra);
        let ds = match kind {
            Rectangle::Doubling => self.lift(&self.sigma[1], &self.two_p_minus_1),
            Rectangle::Clifford => self.lift(&self.sigma[1], &one),
        };
        let dw = self.lift(&self.sigma[2], &(&self.d_p - &self.base.d));
        let mut total = C::new(0.0, 0.0);
        // up the w=0 edge, along s = s_max, down the w=1 edge, back along s = −s_max
        for (s, wt) in quad::composite_gl(-s_max, s_max, panels_s, order) {
            total += self.one_form(&family(0.0, s), &ds, n)? * wt;
            total -= self.one_form(&family(1.0, s), &ds, n)? * wt;
        }
        for (w, wt) in quad::composite_gl(0.0, 1.0, panels_w, order) {
            total += self.one_form(&family(w, s_max), &dw, n)? * wt;
            total -= self.one_form(&family(w, -s_max), &dw, n)? * wt;
        }
        Ok(total)
    }

    /// τ₂((1⊗γ(2p−1))(1+D̃_{w,s}²)^{-n/2}).
    pub fn a_integrand(&self, w: f64, n: f64, s: f64) -> Result<f64> {
        let b = self.lift(&self.one2(), &(&self.base.gamma * &self.two_p_minus_1));
        let dec = self.dtilde(w, s).herm_eig()?;
        Ok(dec.trace_with(&b, |x| C::new((1.0 + x * x).powf(-0.5 * n), 0.0)).re)
    }

    /// a(w) = ¼∫_ℝ τ₂((1⊗γ(2p−1))(1+D̃_{w,s}²)^{-n/2}) ds.
    pub fn a_of_w(&self, w: f64, n: f64, quad: &QuadratureSpec) -> Result<f64> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!("w = {w} outside [0,1]")));
        }
        if n < 2.0 {
            return Err(Error::Domain(format!("n = {n} too small for a(w)")));
        }
        let even = self.symmetric_in_s(|s| self.a_integrand(w, n, s))?;
        let r = if even {
            let h = quad::tan_half_line(|s| self.a_integrand(w, n, s).unwrap_or(f64::NAN), quad.abs_tol, quad.rel_tol, quad.max_nodes)?;
            2.0 * h.value
        } else {
            quad::tan_full_line(|s| self.a_integrand(w, n, s).unwrap_or(f64::NAN), quad.abs_tol, quad.rel_tol, quad.max_nodes)?.value
        };
        if !r.is_finite() {
            return Err(Error::Quadrature("a(w) integrand failed".into()));
        }
        Ok(0.25 * r)
    }

    fn symmetric_in_s(&self, f: impl Fn(f64) -> Result<f64>) -> Result<bool> {
        for &s in &[0.3, 1.1, 2.7] {
            let (a, b) = (f(s)?, f(-s)?);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// ∫_ℝ τ(γ(1+D²+s²)^{-n/2}) ds.
    pub fn graded_s_integral(&self, n: f64, quad: &QuadratureSpec) -> Result<f64> {
        let dec = self.base.d.herm_eig()?;
        let g = &self.base.gamma;
        let h = quad::tan_half_line(
            |s| dec.trace_with(g, |x| C::new((1.0 + x * x + s * s).powf(-0.5 * n), 0.0)).re,
            quad.abs_tol,
            quad.rel_tol,
            quad.max_nodes,
        )?;
        Ok(2.0 * h.value)
    }

    /// (Ind(pD⁺p)·C_{n/2}, a(0) + ½∫τ(γ(1+D²+s²)^{-n/2})ds).
    pub fn key_identity_check(&self, n: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
        let ind = self.base.compressed_index(&self.p)?;
        let lhs = ind * special::c_norm(C::new(0.5 * n, 0.0)).re;
        let rhs = self.a_of_w(0.0, n, quad)? + 0.5 * self.graded_s_integral(n, quad)?;
        Ok((lhs, rhs))
    }
}
