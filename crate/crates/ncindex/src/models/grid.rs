//! Matrix-valued functions sampled on a periodic grid (the position-space picture of a
//! Fourier lattice with wrap-around), with spectral derivatives, and the residue data of
//! the flat Dirac operator D = Σ_a σ_a ⊗ (−i∂_a) acting on them.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rustfft::FftPlanner;

use crate::cocycle::{ResidueData, UnitalElem};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::zeta::{self, LaurentData, MellinContinuation, DEFAULT_FIT_WINDOW};

/// Samples of an r×r matrix function on the grid (2π j/L)_{j} in 1 or 2 variables,
/// row-major with the first variable slowest.
#[derive(Clone, Debug)]
pub struct GridField {
    pub axes: usize,
    pub l: usize,
    pub rank: usize,
    pub values: Vec<CMat>,
}

impl GridField {
    pub fn from_fn(axes: usize, l: usize, rank: usize, f: impl Fn(&[f64]) -> CMat) -> Self {
        let h = 2.0 * PI / l as f64;
        let values = (0..l.pow(axes as u32))
            .map(|idx| {
                let x: Vec<f64> = if axes == 1 { vec![idx as f64 * h] } else { vec![(idx / l) as f64 * h, (idx % l) as f64 * h] };
                f(&x)
            })
            .collect();
        Self { axes, l, rank, values }
    }

    pub fn constant(axes: usize, l: usize, m: &CMat) -> Self {
        Self::from_fn(axes, l, m.nrows(), |_| m.clone())
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect();
        Self { values, ..*self }
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self { values: self.values.iter().map(f).collect(), ..*self }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|a| linalg::scale(a, C::new(s, 0.0)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(linalg::fro).fold(0.0, f64::max)
    }

    pub fn projection_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|p| linalg::fro(&(&linalg::mul(p, p) - p)).max(linalg::herm_defect(p)))
            .fold(0.0, f64::max)
    }

    /// Signed Fourier label of grid index j: 0..=Λ, then −Λ..−1.
    pub fn label(&self, j: usize) -> i64 {
        let lam = (self.l / 2) as i64;
        let j = j as i64;
        if j <= lam {
            j
        } else {
            j - self.l as i64
        }
    }

    /// Spectral derivative ∂_axis.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.axes);
        let l = self.l;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(l);
        let inv = planner.plan_fft_inverse(l);
        let r = self.rank;
        let mut out = self.values.clone();
        let lines = self.points() / l;
        let stride = if self.axes == 1 || axis == 1 { 1 } else { l };
        let mut buf = vec![C::new(0.0, 0.0); l];
        for line in 0..lines {
            let start = if stride == 1 { line * l } else { line };
            for a in 0..r {
                for b in 0..r {
                    for (j, v) in buf.iter_mut().enumerate() {
                        *v = self.values[start + j * stride][(a, b)];
                    }
                    fwd.process(&mut buf);
                    for (j, v) in buf.iter_mut().enumerate() {
                        // the Nyquist mode does not occur for odd L
                        *v *= C::new(0.0, self.label(j) as f64 / l as f64);
                    }
                    inv.process(&mut buf);
                    for (j, v) in buf.iter().enumerate() {
                        out[start + j * stride][(a, b)] = *v;
                    }
                }
            }
        }
        Self { values: out, ..*self }
    }

    /// (1/L^axes) Σ_x tr f(x): the mean trace.
    pub fn mean_trace(&self) -> C {
        self.values.iter().map(linalg::trace).sum::<C>() / self.points() as f64
    }
}

impl UnitalElem for GridField {
    fn mul(&self, other: &Self) -> Self {
        self.zip(other, linalg::mul)
    }
    fn unit_like(&self) -> Self {
        Self::constant(self.axes, self.l, &linalg::eye(self.rank))
    }
}

/// Residue data of D = Σ_a σ_a⊗(−i∂_a) on L²(T^axes)⊗C²⊗C^r with γ = σ3, for words whose
/// iterated commutators are all of order zero (k = 0). The word b is then a multiplication
/// operator, τ(b e^{-tD²}) = mean-trace(b)·θ(t)^axes, and ζ_b is continued from that heat trace.
pub struct FlatResidues {
    pub model_id: String,
    pub axes: usize,
    pub menu: Vec<f64>,
}

impl FlatResidues {
    pub fn q(&self) -> f64 {
        self.axes as f64
    }

    /// Pointwise symbol of γa₀[D,a₁]⋯[D,a_m] on C²⊗C^r.
    pub fn word_symbol(&self, args: &[GridField]) -> GridField {
        let [s1, s2, s3] = linalg::pauli();
        let sig = [s1, s2];
        let lift = |a: &GridField, m: &CMat| a.map(|v| linalg::kron(m, v));
        let mut b = lift(&args[0], &s3);
        for a in &args[1..] {
            let mut comm = lift(&a.derivative(0), &linalg::scale(&sig[0], C::new(0.0, -1.0)));
            if self.axes == 2 {
                comm = comm.zip(&lift(&a.derivative(1), &linalg::scale(&sig[1], C::new(0.0, -1.0))), |x, y| x + y);
            }
            b = b.mul(&comm);
        }
        b
    }

    pub fn heat_coefficient(&self, args: &[GridField]) -> C {
        self.word_symbol(args).mean_trace()
    }

    pub fn continuation(&self, mean: C, split: f64) -> Result<MellinContinuation> {
        let axes = self.axes as i32;
        MellinContinuation::new(&|t| mean * zeta::theta(t).powi(axes), &self.menu, DEFAULT_FIT_WINDOW, split)
    }
}

impl ResidueData for FlatResidues {
    type Elem = GridField;
    fn laurent(&self, args: &[GridField], k: &[u32], h: u32) -> Result<LaurentData> {
        if k.iter().any(|&x| x > 0) {
            return Err(Error::Unsupported("iterated commutators with D² are not multiplication operators".into()));
        }
        let mean = self.heat_coefficient(args);
        let cont = self.continuation(mean, 1.0)?;
        let crit = C::new((1.0 - self.q()) / 2.0, 0.0);
        let mut d = LaurentData::from_mellin(&cont, h as f64, crit, h as usize)?;
        d.model_id = self.model_id.clone();
        d.b_word = format!("gamma a0 [D,a]^{} h={h} mean-trace={:.6e}", args.len() - 1, mean.re);
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_is_exact_on_trigonometric_data() {
        let f = GridField::from_fn(2, 9, 1, |x| CMat::from_fn(1, 1, |_, _| C::new((2.0 * x[0]).sin() * x[1].cos(), 0.0)));
        let dx = f.derivative(0);
        let dy = f.derivative(1);
        let h = 2.0 * PI / 9.0;
        for i in 0..9 {
            for j in 0..9 {
                let (x, y) = (i as f64 * h, j as f64 * h);
                assert!((dx.values[i * 9 + j][(0, 0)].re - 2.0 * (2.0 * x).cos() * y.cos()).abs() < 1e-12);
                assert!((dy.values[i * 9 + j][(0, 0)].re + (2.0 * x).sin() * y.sin()).abs() < 1e-12);
            }
        }
    }
}
