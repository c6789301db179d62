//! The even circle: D = σ1⊗(−i d/dx) on L²(S¹)⊗C², γ = σ3, spectral dimension 1.

use num_complex::Complex64 as C;

use crate::algebra::{BlockOperator, TracedAlgebra};
use crate::cocycle::{self, UnitalElem};
use crate::error::{Error, Result};
use crate::fredholm;
use crate::linalg::{self, CMat};
use crate::models::grid::{FlatResidues, GridField};
use crate::triple::EvenTriple;

#[derive(Clone, Debug, PartialEq)]
pub struct CircleModel {
    pub cutoff: usize,
}

impl CircleModel {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::Model("circle needs Λ ≥ 1".into()));
        }
        Ok(Self { cutoff })
    }

    pub fn l(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Dense triple on ℓ²({−Λ..Λ})⊗C² generated by the shift u = e^{ix} (with wrap-around).
    pub fn triple(&self) -> Result<EvenTriple> {
        let l = self.l();
        let lam = self.cutoff as f64;
        let [s1, _, s3] = linalg::pauli();
        let n = linalg::diag_real(&(0..l).map(|i| i as f64 - lam).collect::<Vec<_>>());
        let u = CMat::from_fn(l, l, |i, j| if i == (j + 1) % l { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
        let alg = TracedAlgebra::matrix(2 * l);
        let op = |m: CMat| BlockOperator::from_blocks(&alg, vec![m]);
        EvenTriple::new(
            vec![op(linalg::kron(&linalg::eye(2), &u))?],
            op(linalg::kron(&s1, &n))?,
            op(linalg::kron(&s3, &linalg::eye(l)))?,
            1.0,
        )
    }

    pub fn residues(&self) -> FlatResidues {
        FlatResidues { model_id: format!("circle/L={}", self.cutoff), axes: 1, menu: vec![-0.5] }
    }

    /// The constant projection c·1 (c ∈ {0, 1}) as a grid field.
    pub fn constant_projection(&self, c: f64) -> GridField {
        GridField::constant(1, self.l(), &linalg::diag_real(&[c]))
    }

    /// Σ_{m=0,2} φ_m(Ch_m(p)) and the m = 0 strand alone, for p = c·1.
    pub fn residue_pairing(&self, c: f64) -> Result<(C, C)> {
        let p = self.constant_projection(c);
        let tpm = p.scale_re(2.0).sub(&p.unit_like());
        let data = self.residues();
        let total = cocycle::pair_with_chern(|m, a| cocycle::residue_cocycle(&data, m, a, 2), &p, &tpm, 2)?;
        let strand0 = cocycle::residue_cocycle(&data, 0, std::slice::from_ref(&p), 2)?;
        Ok((total, strand0))
    }

    /// Ind(pD⁺p) for p = c·1 on the truncated lattice.
    pub fn index(&self, c: f64) -> Result<f64> {
        let t = self.triple()?;
        let p = BlockOperator::identity(&t.algebra).scale_re(c);
        Ok(fredholm::compressed_index(&t, &p)?.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta::LaurentData;

    #[test]
    fn trivial_pairing_and_index() {
        let c = CircleModel::new(16).unwrap();
        for v in [0.0, 1.0] {
            let (total, s0) = c.residue_pairing(v).unwrap();
            assert!(total.norm() < 1e-12 && s0.norm() < 1e-12);
            assert_eq!(c.index(v).unwrap(), 0.0);
        }
    }

    #[test]
    fn ungraded_half_residue() {
        // τ(P₊(1+D²)^{-s}) has residue 1 at s = ½, i.e. 2 in z = 2s
        let c = CircleModel::new(16).unwrap();
        let data = c.residues();
        let cont = data.continuation(C::new(1.0, 0.0), 1.0).unwrap();
        let d = LaurentData::from_mellin(&cont, 0.5, C::new(0.0, 0.0), 0).unwrap();
        assert!((2.0 * d.tau_j(0).unwrap() - 2.0).norm() < 1e-9);
        // b = 1 carries both spinor components: residue 4 in z
        let cont = data.continuation(C::new(2.0, 0.0), 1.0).unwrap();
        let d = LaurentData::from_mellin(&cont, 0.5, C::new(0.0, 0.0), 0).unwrap();
        assert!((2.0 * d.tau_j(0).unwrap() - 4.0).norm() < 1e-9);
    }
}
