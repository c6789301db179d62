//! Seeded random even triples with a distinguished projection of prescribed index.

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{BlockOperator, TracedAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::models::ModelInstance;
use crate::triple::EvenTriple;

/// One block M_{n₊+n₋} of the algebra, graded n₊ | n₋, carrying p = p₊ ⊕ p₋ of ranks
/// (r₊, r₋) and a corner p₋Dp₊ of rank min(r₊, r₋) − deficiency.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomBlockSpec {
    pub plus: usize,
    pub minus: usize,
    pub weight: f64,
    pub p_plus_rank: usize,
    pub p_minus_rank: usize,
    pub deficiency: usize,
}

impl RandomBlockSpec {
    pub fn validate(&self) -> Result<()> {
        if self.plus < 1 || self.minus < 1 || self.p_plus_rank > self.plus || self.p_minus_rank > self.minus {
            return Err(Error::Model(format!("degenerate block {self:?}")));
        }
        if self.deficiency > self.p_plus_rank.min(self.p_minus_rank) {
            return Err(Error::Model(format!("deficiency exceeds corner rank in {self:?}")));
        }
        Ok(())
    }

    /// τ-weighted index contribution w·(r₊ − r₋).
    pub fn index(&self) -> f64 {
        self.weight * (self.p_plus_rank as f64 - self.p_minus_rank as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomEvenModel {
    pub seed: u64,
    pub blocks: Vec<RandomBlockSpec>,
    /// Extra random even generators besides p.
    pub generators: usize,
    /// Formal spectral-dimension parameter of the produced triple.
    pub q: f64,
}

/// Entries uniform in the unit square of ℂ, centred.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMat {
    CMat::from_fn(n, m, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Haar-like unitary: eigenvectors of a random Hermitian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Result<CMat> {
    let a = random_matrix(rng, n, n);
    let h = &a + &linalg::adjoint(&a);
    Ok(linalg::eigh(&h)?.1)
}

/// Orthonormal basis (n×r) of a random r-dimensional subspace.
pub fn random_frame(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Result<CMat> {
    let u = random_unitary(rng, n)?;
    Ok(u.subcols(0, r).to_owned())
}

/// Random rank-r orthogonal projection on ℂⁿ.
pub fn random_projection(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Result<CMat> {
    let f = random_frame(rng, n, r)?;
    Ok(linalg::mul(&f, &linalg::adjoint(&f)))
}

/// Rank-`rank` n×m matrix A·B*.
pub fn low_rank(rng: &mut ChaCha8Rng, n: usize, m: usize, rank: usize) -> CMat {
    let a = random_matrix(rng, n, rank);
    let b = random_matrix(rng, m, rank);
    linalg::mul(&a, &linalg::adjoint(&b))
}

/// Projections G, P, Q on a one- or two-block algebra (weights 1, √2) with T ∈ P·N·Q and
/// S ∈ G·N·P whose kernels are forced by rank deficiency, and their matrix-scale indices
/// τ(Q) − τ(P) and τ(P) − τ(G) computed from the ranks.
#[derive(Clone, Debug)]
pub struct ComposableCorners {
    pub g: BlockOperator,
    pub p: BlockOperator,
    pub q: BlockOperator,
    pub s: BlockOperator,
    pub t: BlockOperator,
    pub index_t: f64,
    pub index_s: f64,
}

impl ComposableCorners {
    pub fn sample(seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nblocks = rng.random_range(1..=2usize);
        let weights = [1.0, std::f64::consts::SQRT_2];
        let dims: Vec<usize> = (0..nblocks).map(|_| rng.random_range(3..=7usize)).collect();
        let alg = TracedAlgebra::new(dims.iter().zip(weights).map(|(&n, w)| (n, w)))?;
        let mut parts: [Vec<CMat>; 5] = Default::default();
        let (mut index_t, mut index_s) = (0.0, 0.0);
        for (&n, w) in dims.iter().zip(weights) {
            let [rg, rp, rq] = [0; 3].map(|_| rng.random_range(1..=n));
            let g = random_projection(&mut rng, n, rg)?;
            let p = random_projection(&mut rng, n, rp)?;
            let q = random_projection(&mut rng, n, rq)?;
            let kt = rng.random_range(0..=n);
            let ks = rng.random_range(0..=n);
            let t = linalg::mul(&linalg::mul(&p, &low_rank(&mut rng, n, n, kt)), &q);
            let s = linalg::mul(&linalg::mul(&g, &low_rank(&mut rng, n, n, ks)), &p);
            index_t += w * (rq as f64 - rp as f64);
            index_s += w * (rp as f64 - rg as f64);
            for (v, m) in parts.iter_mut().zip([g, p, q, s, t]) {
                v.push(m);
            }
        }
        let [g, p, q, s, t] = parts.map(|b| BlockOperator::from_blocks(&alg, b));
        Ok(Self { g: g?, p: p?, q: q?, s: s?, t: t?, index_t, index_s })
    }
}

/// P·Y·Q for a random Y, scaled to operator norm `norm`.
pub fn random_corner_operator(rng: &mut ChaCha8Rng, p: &BlockOperator, q: &BlockOperator, norm: f64) -> Result<BlockOperator> {
    let y = BlockOperator::from_fn(p.algebra(), |_, n| random_matrix(rng, n, n))?;
    let a = &(p * &y) * q;
    let an = a.norm();
    Ok(if an == 0.0 { a } else { a.scale_re(norm / an) })
}

/// Smallest singular value above `rel·‖T‖` over all blocks (∞ if there is none).
pub fn smallest_nonzero_singular(t: &BlockOperator, rel: f64) -> Result<f64> {
    let smax = t.norm();
    let mut best = f64::INFINITY;
    for b in t.blocks() {
        let (s, _, _) = linalg::svd_full(b)?;
        best = s.into_iter().filter(|&v| v > rel * smax).fold(best, f64::min);
    }
    Ok(best)
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (a.nrows(), b.nrows());
    CMat::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (false, false) => b[(i - n, j - n)],
        _ => C::new(0.0, 0.0),
    })
}

impl RandomEvenModel {
    /// Single unit-weight block with Ind(pD⁺p) = `index`, dimension `plus + minus`.
    pub fn with_index(seed: u64, plus: usize, minus: usize, index: i64) -> Result<Self> {
        let r_minus = (minus / 2).max(1).min(minus);
        let r_plus = r_minus as i64 + index;
        if r_plus < 0 || r_plus as usize > plus {
            return Err(Error::Model(format!("index {index} not realizable with sectors {plus}|{minus}")));
        }
        Ok(Self {
            seed,
            blocks: vec![RandomBlockSpec { plus, minus, weight: 1.0, p_plus_rank: r_plus as usize, p_minus_rank: r_minus, deficiency: 0 }],
            generators: 1,
            q: 1.0,
        })
    }

    /// A random spec: 1–3 blocks (weights 1, √2, ½ in turn), total dimension ≤ `max_dim`.
    pub fn sample(seed: u64, max_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let nblocks = rng.random_range(1..=3usize);
        let weights = [1.0, std::f64::consts::SQRT_2, 0.5];
        let per = (max_dim / nblocks).max(4);
        let blocks = (0..nblocks)
            .map(|i| {
                let plus = rng.random_range(2..=per / 2);
                let minus = rng.random_range(2..=per - plus);
                let p_plus_rank = rng.random_range(0..=plus);
                let p_minus_rank = rng.random_range(0..=minus);
                let deficiency = rng.random_range(0..=p_plus_rank.min(p_minus_rank).min(1));
                RandomBlockSpec { plus, minus, weight: weights[i], p_plus_rank, p_minus_rank, deficiency }
            })
            .collect();
        Self { seed, blocks, generators: 1, q: 1.0 }
    }

    pub fn expected_index(&self) -> f64 {
        self.blocks.iter().map(RandomBlockSpec::index).sum()
    }

    pub fn build(&self) -> Result<ModelInstance> {
        for b in &self.blocks {
            b.validate()?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let alg = TracedAlgebra::new(self.blocks.iter().map(|b| (b.plus + b.minus, b.weight)))?;
        let mut gammas = Vec::new();
        let mut ds = Vec::new();
        let mut ps = Vec::new();
        let mut gens: Vec<Vec<CMat>> = vec![Vec::new(); self.generators];
        for b in &self.blocks {
            let (np, nm) = (b.plus, b.minus);
            let gamma: Vec<f64> = (0..np).map(|_| 1.0).chain((0..nm).map(|_| -1.0)).collect();
            gammas.push(linalg::diag_real(&gamma));
            let qp = random_frame(&mut rng, np, b.p_plus_rank)?;
            let qm = random_frame(&mut rng, nm, b.p_minus_rank)?;
            let pp = linalg::mul(&qp, &linalg::adjoint(&qp));
            let pm = linalg::mul(&qm, &linalg::adjoint(&qm));
            ps.push(block_diag(&pp, &pm));
            // odd part B: H₊ → H₋, with the corner Q₋*BQ₊ losing `deficiency` singular values
            let mut bmat = random_matrix(&mut rng, nm, np);
            if b.deficiency > 0 {
                let corner = linalg::mul(&linalg::mul(&linalg::adjoint(&qm), &bmat), &qp);
                let (s, u, v) = linalg::svd_full(&corner)?;
                let k = s.len();
                for (i, &si) in s.iter().enumerate().skip(k - b.deficiency) {
                    let ui = u.col(i).to_owned();
                    let vi = v.col(i).to_owned();
                    let lu = linalg::mul(&qm, &CMat::from_fn(ui.nrows(), 1, |r, _| ui[r]));
                    let lv = linalg::mul(&qp, &CMat::from_fn(vi.nrows(), 1, |r, _| vi[r]));
                    let rank1 = linalg::scale(&linalg::mul(&lu, &linalg::adjoint(&lv)), C::new(si, 0.0));
                    bmat = &bmat - &rank1;
                }
            }
            ds.push(CMat::from_fn(np + nm, np + nm, |i, j| match (i < np, j < np) {
                (false, true) => bmat[(i - np, j)],
                (true, false) => bmat[(j - np, i)].conj(),
                _ => C::new(0.0, 0.0),
            }));
            for g in gens.iter_mut() {
                g.push(block_diag(&random_matrix(&mut rng, np, np), &random_matrix(&mut rng, nm, nm)));
            }
        }
        let p = BlockOperator::from_blocks(&alg, ps)?;
        let mut generators = vec![p.clone()];
        for g in gens {
            generators.push(BlockOperator::from_blocks(&alg, g)?);
        }
        let triple = EvenTriple::new(
            generators,
            BlockOperator::from_blocks(&alg, ds)?,
            BlockOperator::from_blocks(&alg, gammas)?,
            self.q,
        )?;
        Ok(ModelInstance { triple, p, expected_index: self.expected_index(), id: format!("random-even/seed={}", self.seed) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm;

    #[test]
    fn prescribed_index_two() {
        let m = RandomEvenModel::with_index(7, 5, 4, 2).unwrap();
        let inst = m.build().unwrap();
        let rep = fredholm::compressed_index(&inst.triple, &inst.p).unwrap();
        assert_eq!(rep.index, 2.0);
        assert_eq!(rep.coker_p_trace, 0.0);
        assert_eq!(rep.ker_q_trace, 2.0);
    }

    #[test]
    fn weighted_sqrt2() {
        let m = RandomEvenModel {
            seed: 3,
            blocks: vec![
                RandomBlockSpec { plus: 3, minus: 3, weight: 1.0, p_plus_rank: 1, p_minus_rank: 1, deficiency: 1 },
                RandomBlockSpec { plus: 3, minus: 2, weight: std::f64::consts::SQRT_2, p_plus_rank: 2, p_minus_rank: 1, deficiency: 0 },
            ],
            generators: 1,
            q: 1.0,
        };
        let inst = m.build().unwrap();
        let rep = fredholm::compressed_index(&inst.triple, &inst.p).unwrap();
        assert!((rep.index - std::f64::consts::SQRT_2).abs() < 1e-12);
        // the deficient block contributes kernel and cokernel of weight 1 each
        assert!((rep.ker_q_trace - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn sampled_specs_build() {
        for seed in 0..20 {
            let m = RandomEvenModel::sample(seed, 24);
            let inst = m.build().unwrap();
            assert!(inst.triple.algebra.total_dim() <= 24);
            let idx = fredholm::compressed_index(&inst.triple, &inst.p).unwrap().index;
            assert!((idx - inst.expected_index).abs() < 1e-9, "seed {seed}: {idx} vs {} {m:?}", inst.expected_index);
        }
    }
}
