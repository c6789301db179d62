//! The flat torus T² = (ℝ/2πℤ)² with D = σ1⊗(−i∂_x) + σ2⊗(−i∂_y), γ = σ3, truncated to
//! the Fourier lattice |n_i| ≤ Λ. Two realizations share the same data:
//!
//! * dense triples on the momentum lattice (shift operators with wrap-around), small Λ;
//! * the position grid of L = 2Λ+1 points per axis, where multiplication operators are
//!   diagonal, used for the projection, its kernel count and the zeta residues.
//!
//! The projection is the rank-one Bott-type projection
//! p = [[f(y), g(y) + h(y)e^{ix}], [g(y) + h(y)e^{−ix}, 1 − f(y)]] with gh = 0 and
//! g² + h² = f − f², built from a C^∞ step so every derivative is spectrally accurate.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rustfft::FftPlanner;

use crate::algebra::{BlockOperator, TracedAlgebra};
use crate::cocycle::{self, UnitalElem};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::grid::{FlatResidues, GridField};
use crate::models::ModelInstance;
use crate::triple::EvenTriple;

/// Singular values at or below this count as (near-)zero modes.
pub const ZERO_MODE_CUTOFF: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusModel {
    pub cutoff: usize,
    /// Deformation θ = num/den (0 for the commutative torus).
    pub theta: (i64, u64),
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1, all derivatives vanishing at both ends.
pub fn smooth_step(t: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = psi(t);
    let b = psi(1.0 - t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// The Bott-type projection at (x, y).
pub fn bott_projection(x: f64, y: f64) -> CMat {
    let t = (y / PI).rem_euclid(2.0);
    let first = t <= 1.0;
    let phi = 0.5 * PI * smooth_step(if first { t } else { 2.0 - t });
    let f = phi.sin().powi(2);
    let c = phi.sin() * phi.cos();
    let (g, h) = if first { (c, 0.0) } else { (0.0, c) };
    let off = C::new(g, 0.0) + C::from_polar(h, x);
    let mut p = linalg::zeros(2, 2);
    p[(0, 0)] = C::new(f, 0.0);
    p[(0, 1)] = off;
    p[(1, 0)] = off.conj();
    p[(1, 1)] = C::new(1.0 - f, 0.0);
    p
}

/// Result of a localized zero-mode count of the compressed operator pD⁺p.
#[derive(Clone, Debug, serde::Serialize)]
pub struct KernelCount {
    pub index: i64,
    pub kernel: usize,
    pub cokernel: usize,
    /// near-zero modes discarded as lattice-boundary artifacts (right, left)
    pub delocalized: (usize, usize),
    /// largest singular value counted as zero / smallest one above the cutoff
    pub gap: (f64, f64),
}

impl TorusModel {
    pub fn new(cutoff: usize, theta: (i64, u64)) -> Result<Self> {
        if cutoff < 1 || theta.1 == 0 {
            return Err(Error::Model(format!("torus needs Λ ≥ 1 and a nonzero denominator, got Λ={cutoff}, θ={theta:?}")));
        }
        Ok(Self { cutoff, theta })
    }

    pub fn commutative(cutoff: usize) -> Result<Self> {
        Self::new(cutoff, (0, 1))
    }

    pub fn l(&self) -> usize {
        2 * self.cutoff + 1
    }

    fn theta_f64(&self) -> f64 {
        self.theta.0 as f64 / self.theta.1 as f64
    }

    /// (N₁, N₂, U, V) on the momentum lattice, ordered (n₁, n₂) with n_i = i − Λ.
    fn lattice_ops(&self) -> [CMat; 4] {
        let l = self.l();
        let lam = self.cutoff as i64;
        let n = l * l;
        let lab = |i: usize| i as i64 - lam;
        let n1 = CMat::from_fn(n, n, |i, j| if i == j { C::new(lab(i / l) as f64, 0.0) } else { C::new(0.0, 0.0) });
        let n2 = CMat::from_fn(n, n, |i, j| if i == j { C::new(lab(i % l) as f64, 0.0) } else { C::new(0.0, 0.0) });
        let th = self.theta_f64();
        // U e_{n₁,n₂} = e_{n₁+1,n₂}, V e_{n₁,n₂} = e^{2πiθn₁} e_{n₁,n₂+1} (indices mod L)
        let u = CMat::from_fn(n, n, |i, j| {
            if i % l == j % l && i / l == (j / l + 1) % l {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        let v = CMat::from_fn(n, n, |i, j| {
            if i / l == j / l && i % l == (j % l + 1) % l {
                C::from_polar(1.0, 2.0 * PI * th * lab(j / l) as f64)
            } else {
                C::new(0.0, 0.0)
            }
        });
        [n1, n2, u, v]
    }

    /// Dense triple on ℓ²(lattice)⊗C²_spin⊗C^r with D, γ = σ3 and the given lattice operators
    /// (acting trivially on spin).
    fn dense_triple(&self, rank: usize, generators: &[CMat]) -> Result<(EvenTriple, Vec<BlockOperator>)> {
        let [s1, s2, s3] = linalg::pauli();
        let [n1, n2, _, _] = self.lattice_ops();
        let er = linalg::eye(rank);
        let dim = 2 * self.l() * self.l() * rank;
        let alg = TracedAlgebra::matrix(dim);
        let d = &linalg::kron(&s1, &linalg::kron(&n1, &er)) + &linalg::kron(&s2, &linalg::kron(&n2, &er));
        let gamma = linalg::kron(&s3, &linalg::eye(dim / 2));
        let gens: Vec<BlockOperator> = generators
            .iter()
            .map(|g| BlockOperator::from_blocks(&alg, vec![linalg::kron(&linalg::eye(2), g)]))
            .collect::<Result<_>>()?;
        let triple = EvenTriple::new(
            gens.clone(),
            BlockOperator::from_blocks(&alg, vec![d])?,
            BlockOperator::from_blocks(&alg, vec![gamma])?,
            2.0,
        )?;
        Ok((triple, gens))
    }

    /// Dense triple generated by U, V (scalar internal space); dimension 2L².
    pub fn generator_triple(&self) -> Result<(EvenTriple, [BlockOperator; 2])> {
        let [_, _, u, v] = self.lattice_ops();
        let (t, g) = self.dense_triple(1, &[u, v])?;
        Ok((t, [g[0].clone(), g[1].clone()]))
    }

    /// Momentum-space matrix of multiplication by a grid field on the lattice grid (periodic
    /// convolution by its discrete Fourier coefficients).
    pub fn multiplication_matrix(&self, f: &GridField) -> CMat {
        let l = self.l();
        let r = f.rank;
        let lam = self.cutoff as i64;
        // f̂(k) = L^{-2} Σ_x f(x) e^{-ik·x}
        let h = 2.0 * PI / l as f64;
        let mut hat = vec![linalg::zeros(r, r); l * l];
        for k1 in 0..l {
            for k2 in 0..l {
                let mut acc = linalg::zeros(r, r);
                for (idx, v) in f.values.iter().enumerate() {
                    let (j1, j2) = (idx / l, idx % l);
                    let ph = C::from_polar(1.0, -h * ((k1 * j1 + k2 * j2) % l) as f64) / (l * l) as f64;
                    acc = &acc + &linalg::scale(v, ph);
                }
                hat[k1 * l + k2] = acc;
            }
        }
        let n = l * l;
        let lab = |i: usize| i as i64 - lam;
        let md = |a: i64| a.rem_euclid(l as i64) as usize;
        CMat::from_fn(n * r, n * r, |i, j| {
            let (mi, a) = (i / r, i % r);
            let (mj, b) = (j / r, j % r);
            let k1 = md(lab(mi / l) - lab(mj / l));
            let k2 = md(lab(mi % l) - lab(mj % l));
            hat[k1 * l + k2][(a, b)]
        })
    }

    pub fn projection_field(&self, l: usize) -> GridField {
        GridField::from_fn(2, l, 2, |x| bott_projection(x[0], x[1]))
    }

    /// Dense triple (dimension 4L²) carrying the projection as a generator.
    pub fn projection_instance(&self) -> Result<ModelInstance> {
        let pm = self.multiplication_matrix(&self.projection_field(self.l()));
        let (triple, gens) = self.dense_triple(2, &[pm])?;
        gens[0].require_projection("torus projection")?;
        let p = gens[0].clone();
        let kc = self.kernel_count()?;
        Ok(ModelInstance { id: format!("torus/L={}", self.cutoff), triple, p, expected_index: kc.index as f64 })
    }

    /// Residue data of D on grid fields.
    pub fn residues(&self) -> FlatResidues {
        FlatResidues { model_id: format!("torus/L={}", self.cutoff), axes: 2, menu: vec![-1.0, 0.0] }
    }

    /// Σ_{m=0,2} φ_m(Ch_m(p)) with the residue cocycle (N = 1).
    pub fn residue_pairing(&self) -> Result<C> {
        self.residue_pairing_at(self.l())
    }

    pub fn residue_pairing_at(&self, l: usize) -> Result<C> {
        let p = self.projection_field(l);
        let one = p.unit_like();
        let tpm = p.scale_re(2.0).sub(&one);
        let data = self.residues();
        cocycle::pair_with_chern(|m, a| cocycle::residue_cocycle(&data, m, a, 2), &p, &tpm, 2)
    }

    /// Mean trace of the symbol of γ(2p−1)[D,p]² on a grid of `l` points per axis.
    pub fn curvature_mean(&self, l: usize) -> C {
        let p = self.projection_field(l);
        let tpm = p.scale_re(2.0).sub(&p.unit_like());
        self.residues().heat_coefficient(&[tpm, p.clone(), p])
    }

    /// Residue of the assembled sum of zeta functions at the critical point (N = 1).
    pub fn zeta_sum_residue(&self) -> Result<C> {
        let l = self.l();
        let p = self.projection_field(l);
        let tpm = p.scale_re(2.0).sub(&p.unit_like());
        let data = self.residues();
        let c0 = data.continuation(data.heat_coefficient(std::slice::from_ref(&p)), 1.0)?;
        let c2 = data.continuation(data.heat_coefficient(&[tpm, p.clone(), p]), 1.0)?;
        let f = |w: C| {
            cocycle::zeta_sum(
                &|m, _k, w| Ok(if m == 0 { c0.zeta(w) } else { c2.zeta(w + 1.0) }),
                2,
                w,
            )
            .unwrap_or(C::new(f64::NAN, 0.0))
        };
        let r = crate::zeta::residue(&f, C::new(0.0, 0.0), 0.5, 64);
        if !r.re.is_finite() {
            return Err(Error::Continuation("zeta sum failed".into()));
        }
        Ok(r)
    }

    /// Localized zero-mode count of pD⁺p: p⁺H → p⁻H on the periodic grid.
    pub fn kernel_count(&self) -> Result<KernelCount> {
        let l = self.l();
        let p = self.projection_field(l);
        // rank-one range: unit vector ψ(x) with p(x)ψ(x) = ψ(x)
        let psi: Vec<[C; 2]> = p
            .values
            .iter()
            .map(|m| {
                let (_, v) = linalg::eigh(m).expect("2×2");
                [v[(0, 1)], v[(1, 1)]]
            })
            .collect();
        let dplus = self.dplus_position(l);
        let n = l * l;
        let t = CMat::from_fn(n, n, |i, j| {
            let ov = psi[i][0].conj() * psi[j][0] + psi[i][1].conj() * psi[j][1];
            dplus[(i, j)] * ov
        });
        let (s, u, v) = linalg::svd_full(&t)?;
        let lift = |f: &[C]| -> Vec<C> { (0..n).flat_map(|x| [f[x] * psi[x][0], f[x] * psi[x][1]]).collect() };
        let col = |m: &CMat, k: usize| -> Vec<C> { (0..n).map(|i| m[(i, k)]).collect() };
        let limit = (self.cutoff as f64 / 2.0).powi(2);
        let (mut ker, mut coker, mut dr, mut dl) = (0, 0, 0, 0);
        let mut counted: f64 = 0.0;
        let mut above = f64::INFINITY;
        for (k, &sk) in s.iter().enumerate().take(n) {
            if sk > ZERO_MODE_CUTOFF {
                above = above.min(sk);
                continue;
            }
            counted = counted.max(sk);
            if momentum_spread(&lift(&col(&v, k)), l, 2) <= limit {
                ker += 1;
            } else {
                dr += 1;
            }
            if momentum_spread(&lift(&col(&u, k)), l, 2) <= limit {
                coker += 1;
            } else {
                dl += 1;
            }
        }
        Ok(KernelCount { index: ker as i64 - coker as i64, kernel: ker, cokernel: coker, delocalized: (dr, dl), gap: (counted, above) })
    }

    /// Position-space matrix of D⁺ = (−i∂_x) + i(−i∂_y) on the L×L grid.
    fn dplus_position(&self, l: usize) -> CMat {
        let d1 = spectral_diff_matrix(l);
        let e = linalg::eye(l);
        &linalg::kron(&d1, &e) + &linalg::scale(&linalg::kron(&e, &d1), C::new(0.0, 1.0))
    }

    /// Same count with hard momentum truncation instead of wrap-around: p is replaced by the
    /// Toeplitz compression of its continuum Fourier coefficients, whose spectral projection
    /// above ½ serves as the range.
    pub fn hard_truncation_kernel_count(&self) -> Result<KernelCount> {
        let l = self.l();
        let lam = self.cutoff as i64;
        let fine = 4 * l + 1;
        let pf = self.projection_field(fine);
        let hat = fourier_coefficients(&pf);
        let n = l * l;
        let lab = |i: usize| i as i64 - lam;
        let md = |a: i64| a.rem_euclid(fine as i64) as usize;
        let pc = CMat::from_fn(2 * n, 2 * n, |i, j| {
            let (mi, a) = (i / 2, i % 2);
            let (mj, b) = (j / 2, j % 2);
            let k1 = md(lab(mi / l) - lab(mj / l));
            let k2 = md(lab(mi % l) - lab(mj % l));
            hat[k1 * fine + k2][(a, b)]
        });
        let (vals, vecs) = linalg::eigh(&pc)?;
        let keep: Vec<usize> = (0..2 * n).filter(|&k| vals[k] > 0.5).collect();
        let w = CMat::from_fn(2 * n, keep.len(), |i, c| vecs[(i, keep[c])]);
        let dp: Vec<C> = (0..2 * n).map(|i| C::new(lab((i / 2) / l) as f64, lab((i / 2) % l) as f64)).collect();
        let dw = CMat::from_fn(2 * n, keep.len(), |i, c| dp[i] * w[(i, c)]);
        let t = linalg::mul(&linalg::adjoint(&w), &dw);
        let (s, u, v) = linalg::svd_full(&t)?;
        let spread = |x: &CMat, k: usize| -> f64 {
            let y = linalg::mul(&w, &CMat::from_fn(keep.len(), 1, |r, _| x[(r, k)]));
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..2 * n {
                let a = y[(i, 0)].norm_sqr();
                let (n1, n2) = (lab((i / 2) / l) as f64, lab((i / 2) % l) as f64);
                num += a * (n1 * n1 + n2 * n2);
                den += a;
            }
            num / den
        };
        let limit = (self.cutoff as f64 / 2.0).powi(2);
        let (mut ker, mut coker, mut dr, mut dl) = (0, 0, 0, 0);
        let mut counted: f64 = 0.0;
        let mut above = f64::INFINITY;
        for (k, &sk) in s.iter().enumerate() {
            if sk > ZERO_MODE_CUTOFF {
                above = above.min(sk);
                continue;
            }
            counted = counted.max(sk);
            if spread(&v, k) <= limit {
                ker += 1;
            } else {
                dr += 1;
            }
            if spread(&u, k) <= limit {
                coker += 1;
            } else {
                dl += 1;
            }
        }
        Ok(KernelCount { index: ker as i64 - coker as i64, kernel: ker, cokernel: coker, delocalized: (dr, dl), gap: (counted, above) })
    }

    /// Hard-truncation value of the curvature mean: the n = 0 Fourier coefficient of the
    /// continuum symbol (the diagonal of any Toeplitz compression of it).
    pub fn curvature_mean_continuum(&self) -> C {
        self.curvature_mean(4 * self.l() + 1)
    }
}

/// L×L position-space matrix of −i d/dx on the periodic grid (F* diag(n) F, |n| ≤ Λ).
pub fn spectral_diff_matrix(l: usize) -> CMat {
    let lam = (l / 2) as i64;
    let h = 2.0 * PI / l as f64;
    CMat::from_fn(l, l, |i, j| {
        let mut acc = C::new(0.0, 0.0);
        for n in -lam..=lam {
            acc += C::from_polar(n as f64, h * (n * (i as i64 - j as i64)) as f64);
        }
        acc / l as f64
    })
}

/// Discrete Fourier coefficients f̂(k) = L^{-axes} Σ_x f(x) e^{-ik·x} (k mod L, 2 axes).
pub fn fourier_coefficients(f: &GridField) -> Vec<CMat> {
    let l = f.l;
    let r = f.rank;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(l);
    let mut out = vec![linalg::zeros(r, r); l * l];
    let mut grid = vec![C::new(0.0, 0.0); l * l];
    for a in 0..r {
        for b in 0..r {
            for (i, v) in f.values.iter().enumerate() {
                grid[i] = v[(a, b)];
            }
            fft2(&fft, &mut grid, l);
            for (i, g) in grid.iter().enumerate() {
                out[i][(a, b)] = *g / (l * l) as f64;
            }
        }
    }
    out
}

fn fft2(fft: &std::sync::Arc<dyn rustfft::Fft<f64>>, grid: &mut [C], l: usize) {
    for row in grid.chunks_mut(l) {
        fft.process(row);
    }
    let mut col = vec![C::new(0.0, 0.0); l];
    for c in 0..l {
        for r in 0..l {
            col[r] = grid[r * l + c];
        }
        fft.process(&mut col);
        for r in 0..l {
            grid[r * l + c] = col[r];
        }
    }
}

/// ⟨|n|²⟩ of a grid vector with `comps` internal components per point (position order).
fn momentum_spread(v: &[C], l: usize, comps: usize) -> f64 {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(l);
    let lam = (l / 2) as i64;
    let lab = |j: usize| if (j as i64) <= lam { j as f64 } else { j as f64 - l as f64 };
    let mut num = 0.0;
    let mut den = 0.0;
    for c in 0..comps {
        let mut g: Vec<C> = (0..l * l).map(|x| v[x * comps + c]).collect();
        fft2(&fft, &mut g, l);
        for (i, z) in g.iter().enumerate() {
            let a = z.norm_sqr();
            let (n1, n2) = (lab(i / l), lab(i % l));
            num += a * (n1 * n1 + n2 * n2);
            den += a;
        }
    }
    num / den.max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_internal_corner_residues() {
        // τ((1+D²)^{-z}) at z = 1: π per unit of symbol trace; b = 1 has trace 2 (spinor) × 2
        // (internal), b = e₁₁ only the spinor trace
        let data = TorusModel::commutative(16).unwrap().residues();
        for (mean, expect) in [(4.0, 4.0 * PI), (2.0, 2.0 * PI)] {
            let cont = data.continuation(C::new(mean, 0.0), 1.0).unwrap();
            let d = crate::zeta::LaurentData::from_mellin(&cont, 1.0, C::new(0.0, 0.0), 0).unwrap();
            assert!((d.tau_j(0).unwrap() - expect).norm() < 1e-9, "{mean}");
        }
    }

    #[test]
    fn commutative_generators_commute() {
        let t = TorusModel::commutative(8).unwrap();
        let [_, _, u, v] = t.lattice_ops();
        let c = &linalg::mul(&u, &v) - &linalg::mul(&v, &u);
        assert_eq!(linalg::fro(&c), 0.0);
    }

    #[test]
    fn rational_rotation_relation() {
        let t = TorusModel::new(2, (1, 5)).unwrap();
        let [_, _, u, v] = t.lattice_ops();
        let vu = linalg::mul(&v, &u);
        let uv = linalg::scale(&linalg::mul(&u, &v), C::from_polar(1.0, 2.0 * PI / 5.0));
        assert!(linalg::fro(&(&vu - &uv)) < 1e-12);
    }

    #[test]
    fn projection_is_projection() {
        let t = TorusModel::commutative(16).unwrap();
        assert!(t.projection_field(t.l()).projection_defect() < 1e-12);
    }

    #[test]
    fn dense_projection_small_lattice() {
        let t = TorusModel::commutative(2).unwrap();
        let pm = t.multiplication_matrix(&t.projection_field(t.l()));
        let d = linalg::fro(&(&linalg::mul(&pm, &pm) - &pm));
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn chern_mean_converges() {
        let t = TorusModel::commutative(8).unwrap();
        for lam in [8usize, 12, 16, 24, 32] {
            let m = t.curvature_mean(2 * lam + 1);
            eprintln!("Λ={lam}: mean={m} pairing={}", -0.5 * PI * m.re);
        }
    }
}
