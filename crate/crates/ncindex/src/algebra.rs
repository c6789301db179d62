//! Weighted block-matrix model of a semifinite von Neumann algebra with faithful trace.
//!
//! An algebra is a finite direct sum of full matrix blocks `M_{d_i}(C)`, the trace being
//! `τ = Σ_i w_i · Tr_i` with positive weights. Elements are block-diagonal.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracedAlgebra {
    blocks: Vec<Block>,
}

impl TracedAlgebra {
    pub fn new(blocks: impl IntoIterator<Item = (usize, f64)>) -> Result<Arc<Self>> {
        let blocks: Vec<Block> = blocks.into_iter().map(|(dim, weight)| Block { dim, weight }).collect();
        if blocks.is_empty() {
            return Err(Error::Shape("algebra needs at least one block".into()));
        }
        for b in &blocks {
            if b.dim == 0 || !b.weight.is_finite() || b.weight <= 0.0 {
                return Err(Error::Shape(format!("invalid block {b:?}")));
            }
        }
        Ok(Arc::new(Self { blocks }))
    }

    /// A single block with the standard trace.
    pub fn matrix(dim: usize) -> Arc<Self> {
        Self::new([(dim, 1.0)]).expect("dim ≥ 1")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn trace_of_identity(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.dim as f64).sum()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// Same weights, every block dimension multiplied by `k` (the algebra `M_k ⊗ N`).
    pub fn amplified(&self, k: usize) -> Arc<Self> {
        Arc::new(Self { blocks: self.blocks.iter().map(|b| Block { dim: b.dim * k, weight: b.weight }).collect() })
    }
}

#[derive(Clone, Debug)]
pub struct BlockOperator {
    alg: Arc<TracedAlgebra>,
    blocks: Vec<CMat>,
}

impl BlockOperator {
    pub fn from_blocks(alg: &Arc<TracedAlgebra>, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != alg.blocks.len() {
            return Err(Error::Shape(format!("{} blocks for an algebra with {}", blocks.len(), alg.blocks.len())));
        }
        for (m, b) in blocks.iter().zip(&alg.blocks) {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::Shape(format!("block {}×{} where {} expected", m.nrows(), m.ncols(), b.dim)));
            }
        }
        Ok(Self { alg: alg.clone(), blocks })
    }

    pub fn from_fn(alg: &Arc<TracedAlgebra>, mut f: impl FnMut(usize, usize) -> CMat) -> Result<Self> {
        let blocks = alg.blocks.iter().enumerate().map(|(i, b)| f(i, b.dim)).collect();
        Self::from_blocks(alg, blocks)
    }

    pub fn zeros(alg: &Arc<TracedAlgebra>) -> Self {
        Self { alg: alg.clone(), blocks: alg.blocks.iter().map(|b| linalg::zeros(b.dim, b.dim)).collect() }
    }

    pub fn identity(alg: &Arc<TracedAlgebra>) -> Self {
        Self { alg: alg.clone(), blocks: alg.blocks.iter().map(|b| linalg::eye(b.dim)).collect() }
    }

    pub fn scalar(alg: &Arc<TracedAlgebra>, c: C) -> Self {
        Self::identity(alg).scale(c)
    }

    pub fn algebra(&self) -> &Arc<TracedAlgebra> {
        &self.alg
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMat {
        &self.blocks[i]
    }

    pub fn same_algebra(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg
    }

    pub fn map_blocks(&self, f: impl Fn(usize, &CMat) -> CMat) -> Self {
        Self { alg: self.alg.clone(), blocks: self.blocks.iter().enumerate().map(|(i, m)| f(i, m)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        self.map_blocks(|_, m| linalg::adjoint(m))
    }

    pub fn scale(&self, c: C) -> Self {
        self.map_blocks(|_, m| linalg::scale(m, c))
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(c64::new(x, 0.0))
    }

    /// τ(A) = Σ_i w_i Tr(A_i).
    pub fn trace(&self) -> C {
        self.blocks.iter().zip(&self.alg.blocks).map(|(m, b)| linalg::trace(m) * b.weight).sum()
    }

    /// Weighted Hilbert–Schmidt norm √τ(A*A).
    pub fn hs_norm(&self) -> f64 {
        self.blocks
            .iter()
            .zip(&self.alg.blocks)
            .map(|(m, b)| b.weight * m.norm_l2().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Max over blocks of the Frobenius norm (cheap proxy used in tolerances).
    pub fn fro_max(&self) -> f64 {
        self.blocks.iter().map(|m| m.norm_l2()).fold(0.0, f64::max)
    }

    /// Operator norm (largest singular value over all blocks).
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::opnorm).fold(0.0, f64::max)
    }

    pub fn sa_defect(&self) -> f64 {
        self.blocks.iter().map(linalg::herm_defect).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    /// Checks P² = P = P* to `tol` (Frobenius, per block).
    pub fn projection_defect(&self) -> f64 {
        let sq = self * self;
        (&sq - self).fro_max().max(self.sa_defect())
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.projection_defect() <= tol
    }

    pub fn require_projection(&self, what: &str) -> Result<()> {
        let d = self.projection_defect();
        if d > 1e-10 * (1.0 + self.fro_max()) {
            return Err(Error::NotProjection(format!("{what}: defect {d:.3e}")));
        }
        Ok(())
    }

    /// Self-adjointness check with tolerance 1e-12·‖A‖; returns the symmetrized operator.
    pub fn require_self_adjoint(&self) -> Result<Self> {
        let defect = self.sa_defect();
        let allowed = 1e-12 * self.fro_max().max(1e-300);
        if defect > allowed && defect > 1e-300 {
            return Err(Error::NotSelfAdjoint { defect, allowed });
        }
        Ok(self.map_blocks(|_, m| {
            let a = linalg::adjoint(m);
            linalg::scale(&(m + &a), c64::new(0.5, 0.0))
        }))
    }

    /// Hermitian eigendecomposition per block.
    pub fn herm_eig(&self) -> Result<SpectralDecomposition> {
        let sym = self.require_self_adjoint()?;
        let mut values = Vec::with_capacity(self.blocks.len());
        let mut vectors = Vec::with_capacity(self.blocks.len());
        for m in &sym.blocks {
            let (v, u) = linalg::eigh(m)?;
            values.push(v);
            vectors.push(u);
        }
        Ok(SpectralDecomposition { alg: self.alg.clone(), values, vectors })
    }

    /// f(D) for real-valued f via the spectral theorem.
    pub fn func_calc(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.herm_eig()?.apply_real(f)
    }

    /// (shift + D²)^{-z} on the principal branch.
    pub fn complex_power(&self, shift: f64, z: C) -> Result<Self> {
        self.herm_eig()?.complex_power(shift, z)
    }

    /// R(λ) = (λ − (shift + D²))^{-1}.
    pub fn resolvent(&self, shift: f64, lambda: C) -> Result<Self> {
        self.herm_eig()?.resolvent(shift, lambda)
    }

    /// Embed as `M ⊗ A` on the algebra `M_k ⊗ N` (block i becomes kron(M, A_i)).
    pub fn kron_left(&self, m: &CMat, target: &Arc<TracedAlgebra>) -> Self {
        Self { alg: target.clone(), blocks: self.blocks.iter().map(|b| linalg::kron(m, b)).collect() }
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl<'a> $tr<&'a BlockOperator> for &'a BlockOperator {
            type Output = BlockOperator;
            fn $f(self, rhs: &'a BlockOperator) -> BlockOperator {
                assert!(self.same_algebra(rhs), "operators live on different algebras");
                BlockOperator {
                    alg: self.alg.clone(),
                    blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a $op b).collect(),
                }
            }
        }
    };
}
binop!(Add, add, +);
binop!(Sub, sub, -);

impl<'a> Mul<&'a BlockOperator> for &'a BlockOperator {
    type Output = BlockOperator;
    fn mul(self, rhs: &'a BlockOperator) -> BlockOperator {
        assert!(self.same_algebra(rhs), "operators live on different algebras");
        BlockOperator {
            alg: self.alg.clone(),
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| linalg::mul(a, b)).collect(),
        }
    }
}

impl Neg for &BlockOperator {
    type Output = BlockOperator;
    fn neg(self) -> BlockOperator {
        self.scale_re(-1.0)
    }
}

/// τ(A) after checking that `a` belongs to `alg`.
pub fn trace(alg: &TracedAlgebra, a: &BlockOperator) -> Result<C> {
    if *alg != **a.algebra() {
        return Err(Error::Shape("operator does not belong to the algebra".into()));
    }
    Ok(a.trace())
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    alg: Arc<TracedAlgebra>,
    pub values: Vec<Vec<f64>>,
    pub vectors: Vec<CMat>,
}

impl SpectralDecomposition {
    pub fn algebra(&self) -> &Arc<TracedAlgebra> {
        &self.alg
    }

    /// U diag(f(λ)) U* per block.
    pub fn apply(&self, f: impl Fn(f64) -> C) -> BlockOperator {
        let blocks = self
            .values
            .iter()
            .zip(&self.vectors)
            .map(|(vals, u)| {
                let d: Vec<C> = vals.iter().map(|&x| f(x)).collect();
                conj_diag(u, &d)
            })
            .collect();
        BlockOperator { alg: self.alg.clone(), blocks }
    }

    pub fn apply_real(&self, f: impl Fn(f64) -> f64) -> Result<BlockOperator> {
        for vals in &self.values {
            for &x in vals {
                if !f(x).is_finite() {
                    return Err(Error::Undefined(x));
                }
            }
        }
        Ok(self.apply(|x| c64::new(f(x), 0.0)))
    }

    pub fn complex_power(&self, shift: f64, z: C) -> Result<BlockOperator> {
        for vals in &self.values {
            for &x in vals {
                if shift + x * x <= 0.0 {
                    return Err(Error::Spectrum(format!("base {shift} + {x}² is not positive")));
                }
            }
        }
        Ok(self.apply(|x| c64::new(shift + x * x, 0.0).powc(-z)))
    }

    pub fn resolvent(&self, shift: f64, lambda: C) -> Result<BlockOperator> {
        for vals in &self.values {
            for &x in vals {
                if (lambda - (shift + x * x)).norm() < 1e-12 {
                    return Err(Error::Spectrum(format!("λ={lambda} hits {}", shift + x * x)));
                }
            }
        }
        Ok(self.apply(|x| 1.0 / (lambda - (shift + x * x))))
    }

    /// τ(B f(X)) = Σ_i w_i Σ_k f(λ_k) (U*B U)_kk, without forming f(X).
    pub fn trace_with(&self, b: &BlockOperator, f: impl Fn(f64) -> C) -> C {
        let mut acc = c64::new(0.0, 0.0);
        for (((bm, u), vals), blk) in b.blocks.iter().zip(&self.vectors).zip(&self.values).zip(&self.alg.blocks) {
            let bu = linalg::mul(bm, u);
            let mut s = c64::new(0.0, 0.0);
            for (k, &x) in vals.iter().enumerate() {
                let mut d = c64::new(0.0, 0.0);
                for j in 0..u.nrows() {
                    d += u[(j, k)].conj() * bu[(j, k)];
                }
                s += f(x) * d;
            }
            acc += s * blk.weight;
        }
        acc
    }

    pub fn reconstruct(&self) -> BlockOperator {
        self.apply(|x| c64::new(x, 0.0))
    }

    /// Express an operator in the eigenbasis: U* A U per block.
    pub fn to_eigenbasis(&self, a: &BlockOperator) -> Vec<CMat> {
        a.blocks
            .iter()
            .zip(&self.vectors)
            .map(|(m, u)| linalg::mul(&linalg::adjoint(u), &linalg::mul(m, u)))
            .collect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.vectors
            .iter()
            .map(|u| (&linalg::mul(&linalg::adjoint(u), u) - &linalg::eye(u.nrows())).norm_l2())
            .fold(0.0, f64::max)
    }
}

/// U diag(d) U*.
pub fn conj_diag(u: &CMat, d: &[C]) -> CMat {
    let n = u.nrows();
    let ud = CMat::from_fn(n, d.len(), |i, j| u[(i, j)] * d[j]);
    linalg::mul(&ud, &linalg::adjoint(u))
}
