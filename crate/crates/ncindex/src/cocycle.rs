//! Chern character, the resolvent cocycle φ^r_m, the residue cocycle φ_m, the (b,B)
//! coboundaries and index pairings.
//!
//! The resolvent cocycle is evaluated in the eigenbasis of D², where R_s(λ) is diagonal:
//! τ(γa₀R[D,a₁]R⋯[D,a_m]R) collapses to a weighted sum of pole products Π(λ − s² − x_c)^{-1}
//! over multisets of distinct eigenvalue classes, so the contour and s integrals act on a
//! scalar function whatever the size of the matrices.

use std::collections::BTreeMap;

use num_complex::Complex64 as C;

use crate::algebra::{BlockOperator, SpectralDecomposition};
pub use crate::constants::{alpha, c_of_k, chern_coefficient, eta, legendre_duplication_check, sigma_elementary, Rational};
use crate::constants::{self, multi_indices, to_f64};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::quad::{self, QuadratureSpec};
use crate::special;
use crate::triple::{DoubledTriple, EvenTriple};
use crate::zeta::LaurentData;

/// Ch_m(p): coefficient times the tensor word (2p−1)⊗p^{⊗m} (or p alone for m = 0).
#[derive(Clone, Debug)]
pub struct ChernComponent {
    pub m: usize,
    pub coefficient: Rational,
    pub word: Vec<BlockOperator>,
}

pub fn chern(p: &BlockOperator, m: usize) -> Result<ChernComponent> {
    p.require_projection("p")?;
    if !m.is_multiple_of(2) {
        return Err(Error::Domain("Chern components live in even degree".into()));
    }
    let word = if m == 0 {
        vec![p.clone()]
    } else {
        let one = BlockOperator::identity(p.algebra());
        let mut w = vec![&p.scale_re(2.0) - &one];
        w.extend(std::iter::repeat_n(p.clone(), m));
        w
    };
    Ok(ChernComponent { m, coefficient: chern_coefficient(m as u32), word })
}

/// A multilinear functional of degree m (m+1 arguments).
pub trait Cochain<E> {
    fn degree(&self) -> usize;
    fn eval(&self, args: &[E]) -> Result<C>;
}

/// Anything that multiplies and has a unit: enough to build b and B.
pub trait UnitalElem: Clone {
    fn mul(&self, other: &Self) -> Self;
    fn unit_like(&self) -> Self;
}

impl UnitalElem for BlockOperator {
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn unit_like(&self) -> Self {
        BlockOperator::identity(self.algebra())
    }
}

/// Cochain given by a closure.
pub struct FnCochain<F> {
    pub degree: usize,
    pub f: F,
}

impl<E, F: Fn(&[E]) -> Result<C>> Cochain<E> for FnCochain<F> {
    fn degree(&self) -> usize {
        self.degree
    }
    fn eval(&self, args: &[E]) -> Result<C> {
        if args.len() != self.degree + 1 {
            return Err(Error::Shape(format!("degree-{} cochain given {} arguments", self.degree, args.len())));
        }
        (self.f)(args)
    }
}

/// Hochschild coboundary bφ (degree m+1).
pub struct HochschildB<'a, E>(pub &'a dyn Cochain<E>);

impl<E: UnitalElem> Cochain<E> for HochschildB<'_, E> {
    fn degree(&self) -> usize {
        self.0.degree() + 1
    }
    fn eval(&self, a: &[E]) -> Result<C> {
        let m = self.0.degree();
        if a.len() != m + 2 {
            return Err(Error::Shape("bφ needs m+2 arguments".into()));
        }
        let mut acc = C::new(0.0, 0.0);
        for j in 0..=m {
            let mut args: Vec<E> = Vec::with_capacity(m + 1);
            args.extend_from_slice(&a[..j]);
            args.push(a[j].mul(&a[j + 1]));
            args.extend_from_slice(&a[j + 2..]);
            let v = self.0.eval(&args)?;
            acc += if j % 2 == 0 { v } else { -v };
        }
        let mut args = vec![a[m + 1].mul(&a[0])];
        args.extend_from_slice(&a[1..=m]);
        let v = self.0.eval(&args)?;
        acc += if (m + 1) % 2 == 0 { v } else { -v };
        Ok(acc)
    }
}

/// (Bφ)(a₀,…,a_n) = Σ_j (−1)^{nj} φ(1, a_j, …, a_n, a₀, …, a_{j−1}) for φ of degree n+1
/// (normalized form; B∘B = 0 on normalized cochains).
pub struct ConnesB<'a, E>(pub &'a dyn Cochain<E>);

impl<E: UnitalElem> Cochain<E> for ConnesB<'_, E> {
    fn degree(&self) -> usize {
        self.0.degree().saturating_sub(1)
    }
    fn eval(&self, a: &[E]) -> Result<C> {
        let n = a.len();
        if self.0.degree() + 1 != n + 1 || n == 0 {
            return Err(Error::Shape("Bφ needs deg φ arguments".into()));
        }
        let mut acc = C::new(0.0, 0.0);
        for j in 0..n {
            let mut args = vec![a[0].unit_like()];
            args.extend_from_slice(&a[j..]);
            args.extend_from_slice(&a[..j]);
            let v = self.0.eval(&args)?;
            acc += if ((n - 1) * j).is_multiple_of(2) { v } else { -v };
        }
        Ok(acc)
    }
}

/// Weighted pole products Σ_e W_e Π_{l∈e} (λ − y_l)^{-1}.
#[derive(Clone, Debug, Default)]
pub(crate) struct PoleSum {
    pub points: Vec<f64>,
    pub entries: Vec<(Vec<u16>, C)>,
}

impl PoleSum {
    fn from_map(points: Vec<f64>, map: BTreeMap<Vec<u16>, C>) -> Self {
        Self { points, entries: map.into_iter().filter(|(_, w)| w.norm() > 0.0).collect() }
    }

    fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w.norm()).sum()
    }

    fn order(&self) -> usize {
        self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(1)
    }

    /// Crude size Σ|W| y_min^{-Re z - order + 1} of the contour integral.
    fn scale(&self, z: C) -> f64 {
        let ymin = self.points.iter().cloned().fold(f64::INFINITY, f64::min);
        self.weight_sum() * ymin.powf(-(z.re + self.order() as f64 - 1.0))
    }

    /// (1/2πi)∫_l λ^{-z} Σ_e W_e Π (λ − y_l)^{-1} dλ to absolute accuracy `abs` (floored at the
    /// roundoff level of the integrand's L¹ mass).
    fn contour(&self, z: C, quad: &QuadratureSpec, abs: f64) -> Result<C> {
        if self.entries.is_empty() {
            return Ok(C::new(0.0, 0.0));
        }
        let order = self.order() as u32;
        let ymin = self.points.iter().cloned().fold(f64::INFINITY, f64::min);
        if ymin <= quad.contour_a {
            return Err(Error::Spectrum("pole left of the contour".into()));
        }
        let ymax = self.points.iter().cloned().fold(0.0, f64::max);
        let wsum = self.weight_sum();
        let mass = wsum * ymin.powi(-(order as i32)) * (quad.contour_a.powf(1.0 - z.re) + ymin.powf(1.0 - z.re));
        let target = abs.max(1e-13 * mass);
        // tail of |λ|^{-Re z}|λ−y|^{-order} beyond V, times Σ|W|
        let e = z.re + order as f64 - 1.0;
        let kk = (std::f64::consts::FRAC_PI_2 * z.im.abs()).exp();
        let mut v = (kk * wsum / (std::f64::consts::PI * e * 0.1 * target)).powf(1.0 / e);
        v = v.max(10.0 * ymax).max(10.0);
        let mut inv = vec![C::new(0.0, 0.0); self.points.len()];
        let r = quad::vertical_line(
            |lam| {
                for (i, &y) in self.points.iter().enumerate() {
                    inv[i] = 1.0 / (lam - y);
                }
                let mut acc = C::new(0.0, 0.0);
                for (key, w) in &self.entries {
                    let mut prod = *w;
                    for &c in key {
                        prod *= inv[c as usize];
                    }
                    acc += prod;
                }
                acc * lam.powc(-z)
            },
            quad.contour_a,
            v,
            0.1 * target,
            0.0,
            quad.max_nodes,
        )?;
        Ok(r.value)
    }
}

fn slice(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Σ over class sequences (c₀,…,c_L) of close(first[:,c₀]·mids[0][c₀,c₁]⋯mids[L−1][c_{L−1},c_L]·last[c_L,:]),
/// accumulated into `out` under the sorted key (c₀…c_L ++ extra).
#[allow(clippy::too_many_arguments)]
fn class_chain(
    first: &CMat,
    mids: &[&CMat],
    last: &CMat,
    classes: &[(u16, Vec<usize>)],
    extra: &[u16],
    scale: C,
    close: &dyn Fn(&CMat) -> C,
    out: &mut BTreeMap<Vec<u16>, C>,
) {
    let all_rows: Vec<usize> = (0..first.nrows()).collect();
    for (c0, idx0) in classes {
        let a = slice(first, &all_rows, idx0);
        if a.norm_l2() == 0.0 {
            continue;
        }
        let mut key = vec![*c0];
        chain_rec(&a, idx0, 0, mids, last, classes, extra, scale, close, &mut key, out);
    }
}

#[allow(clippy::too_many_arguments)]
fn chain_rec(
    acc: &CMat,
    cur: &[usize],
    depth: usize,
    mids: &[&CMat],
    last: &CMat,
    classes: &[(u16, Vec<usize>)],
    extra: &[u16],
    scale: C,
    close: &dyn Fn(&CMat) -> C,
    key: &mut Vec<u16>,
    out: &mut BTreeMap<Vec<u16>, C>,
) {
    if depth == mids.len() {
        let all_cols: Vec<usize> = (0..last.ncols()).collect();
        let fin = linalg::mul(acc, &slice(last, cur, &all_cols));
        let v = close(&fin) * scale;
        if v.norm() > 0.0 {
            let mut k = key.clone();
            k.extend_from_slice(extra);
            k.sort_unstable();
            *out.entry(k).or_insert(C::new(0.0, 0.0)) += v;
        }
        return;
    }
    for (c, idx) in classes {
        let step = slice(mids[depth], cur, idx);
        if step.norm_l2() == 0.0 {
            continue;
        }
        let next = linalg::mul(acc, &step);
        key.push(*c);
        chain_rec(&next, idx, depth + 1, mids, last, classes, extra, scale, close, key, out);
        key.pop();
    }
}

/// Evaluator for the resolvent cocycle of a fixed triple.
pub struct ResolventCocycle<'a> {
    pub triple: &'a EvenTriple,
    pub quad: QuadratureSpec,
    dec: SpectralDecomposition,
    /// distinct values of 1 + d²
    values: Vec<f64>,
    /// per algebra block: (class id, eigen-indices in that class)
    block_classes: BlockGroups,
}

/// Per block: (group id, eigenvector columns) of each distinct eigenvalue.
type BlockGroups = Vec<Vec<(u16, Vec<usize>)>>;

fn group_values(dec: &SpectralDecomposition) -> (Vec<f64>, BlockGroups) {
    let mut all: Vec<f64> = dec.values.iter().flatten().map(|&d| 1.0 + d * d).collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut values: Vec<f64> = Vec::new();
    for x in all {
        if values.last().is_none_or(|&l| x - l > 1e-11 * x) {
            values.push(x);
        }
    }
    let class_of = |x: f64| -> u16 {
        let i = values.partition_point(|&v| v < x * (1.0 - 1e-11) - 1e-300);
        i.min(values.len() - 1) as u16
    };
    let block_classes = dec
        .values
        .iter()
        .map(|vals| {
            let mut m: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
            for (i, &d) in vals.iter().enumerate() {
                m.entry(class_of(1.0 + d * d)).or_default().push(i);
            }
            m.into_iter().collect()
        })
        .collect();
    (values, block_classes)
}

impl<'a> ResolventCocycle<'a> {
    pub fn new(triple: &'a EvenTriple, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let dec = triple.d.herm_eig()?;
        let (values, block_classes) = group_values(&dec);
        Ok(Self { triple, quad, dec, values, block_classes })
    }

    /// Pole sum for τ(γa₀R[D,a₁]R⋯[D,a_m]R) (s-independent weights; points are x_c).
    fn pole_sum(&self, args: &[BlockOperator]) -> PoleSum {
        let g = &self.triple.gamma * &args[0];
        let gt = self.dec.to_eigenbasis(&g);
        let bs: Vec<Vec<CMat>> = args[1..].iter().map(|a| self.dec.to_eigenbasis(&self.triple.commutator(a))).collect();
        let mut map = BTreeMap::new();
        for (bi, (classes, blk)) in self.block_classes.iter().zip(self.triple.algebra.blocks()).enumerate() {
            let w = C::new(blk.weight, 0.0);
            if bs.is_empty() {
                for (c, idx) in classes {
                    let v: C = idx.iter().map(|&i| gt[bi][(i, i)]).sum::<C>() * w;
                    *map.entry(vec![*c]).or_insert(C::new(0.0, 0.0)) += v;
                }
                continue;
            }
            // Tr(P_e G P_{c1} B1 ⋯ B_m P_e): first = G[e,:], mids = B1..B_{m−1}, last = B_m[:,e]
            for (e, idx_e) in classes {
                let all: Vec<usize> = (0..gt[bi].ncols()).collect();
                let first = slice(&gt[bi], idx_e, &all);
                let lastfull = &bs[bs.len() - 1][bi];
                let last = slice(lastfull, &all, idx_e);
                let mids: Vec<&CMat> = bs[..bs.len() - 1].iter().map(|b| &b[bi]).collect();
                class_chain(&first, &mids, &last, classes, &[*e], w, &|m: &CMat| linalg::trace(m), &mut map);
            }
        }
        PoleSum::from_map(self.values.clone(), map)
    }

    /// φ^r_m(a₀,…,a_m) with z = q/2 + r.
    pub fn eval(&self, m: usize, r: C, args: &[BlockOperator]) -> Result<C> {
        if args.len() != m + 1 {
            return Err(Error::Shape(format!("φ_{m} needs {} arguments", m + 1)));
        }
        if !m.is_multiple_of(2) {
            return Err(Error::Domain("the resolvent cocycle is defined in even degree".into()));
        }
        if r.re <= (1.0 - m as f64) / 2.0 {
            return Err(Error::Domain(format!("Re r = {} outside the convergence region", r.re)));
        }
        let z = C::new(0.5 * self.triple.q, 0.0) + r;
        if m == 0 {
            // φ^r_0(a₀) = C_z τ(γa₀(1+D²)^{1/2−z})
            let g = &self.triple.gamma * &args[0];
            let cz = special::c_norm(z);
            let half = C::new(0.5, 0.0);
            return Ok(cz * self.dec.trace_with(&g, |d| C::new(1.0 + d * d, 0.0).powc(half - z)));
        }
        let ps = self.pole_sum(args);
        if ps.entries.is_empty() {
            return Ok(C::new(0.0, 0.0));
        }
        let eta = to_f64(&eta(m as u32));
        let v = integrate_s(&ps, z, m as i32, &self.quad, |s, ps| {
            let mut shifted = ps.clone();
            for y in &mut shifted.points {
                *y += s * s;
            }
            shifted
        })?;
        Ok(v * eta)
    }

    pub fn cochain(&'a self, m: usize, r: C) -> ResolventCochain<'a> {
        ResolventCochain { engine: self, m, r }
    }
}

/// ∫₀^∞ s^{pow} · contour(shift(s, ps)) ds on an exp-sinh grid; nodes whose crude bound is
/// negligible are skipped.
fn integrate_s(ps: &PoleSum, z: C, pow: i32, quad: &QuadratureSpec, shift: impl Fn(f64, &PoleSum) -> PoleSum) -> Result<C> {
    let order = ps.order() as f64;
    let wsum = ps.weight_sum();
    let ymin = ps.points.iter().cloned().fold(f64::INFINITY, f64::min);
    let decay = z.re + order - 1.0;
    // crude scale of the s-integrand, used for the skip test and the absolute tolerance
    let bound = |s: f64| wsum * s.powi(pow) * (ymin + s * s).powf(-decay);
    let peak = (0..200).map(|i| bound(10f64.powf(-3.0 + 6.0 * i as f64 / 199.0))).fold(0.0, f64::max);
    let abs = quad.abs_tol * peak.max(1e-300);
    let mut failure: Option<Error> = None;
    let r = quad::exp_sinh(
        |s| {
            if failure.is_some() || bound(s) * s < 1e-3 * abs {
                return C::new(0.0, 0.0);
            }
            let sp = shift(s, ps);
            let target = contour_target(&sp, z, quad, abs, s, pow);
            match sp.contour(z, quad, target) {
                Ok(v) => v * s.powi(pow),
                Err(e) => {
                    failure = Some(e);
                    C::new(0.0, 0.0)
                }
            }
        },
        abs,
        quad.rel_tol,
        quad.max_nodes,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// Contour accuracy at node s so that the s-integral of the errors stays below `abs`.
fn contour_target(ps: &PoleSum, z: C, quad: &QuadratureSpec, abs: f64, s: f64, pow: i32) -> f64 {
    let spread = 0.1 * abs * (1.0f64).min(s.powi(-2)) / s.powi(pow).max(1e-300);
    (1e-2 * quad.rel_tol * ps.scale(z)).max(spread)
}

pub struct ResolventCochain<'a> {
    engine: &'a ResolventCocycle<'a>,
    m: usize,
    r: C,
}

impl Cochain<BlockOperator> for ResolventCochain<'_> {
    fn degree(&self) -> usize {
        self.m
    }
    fn eval(&self, args: &[BlockOperator]) -> Result<C> {
        self.engine.eval(self.m, self.r, args)
    }
}

/// (Bφ^r_{m+2} + bφ^r_m)(a₀,…,a_{m+1}).
pub fn bb_cocycle_check(engine: &ResolventCocycle, m: usize, r: C, args: &[BlockOperator]) -> Result<C> {
    if args.len() != m + 2 {
        return Err(Error::Shape("(b,B) check needs m+2 arguments".into()));
    }
    let lo = engine.cochain(m, r);
    let hi = engine.cochain(m + 2, r);
    let b = HochschildB(&lo);
    let bb = ConnesB(&hi);
    Ok(b.eval(args)? + bb.eval(args)?)
}

/// Σ_m coefficient(Ch_m)·φ_m(Ch_m(p)) over m = 0, 2, …, 2N.
pub fn pair_with_chern<E: Clone>(
    phi: impl Fn(usize, &[E]) -> Result<C>,
    p: &E,
    two_p_minus_1: &E,
    two_n: usize,
) -> Result<C> {
    let mut acc = C::new(0.0, 0.0);
    for m in (0..=two_n).step_by(2) {
        let args: Vec<E> = if m == 0 {
            vec![p.clone()]
        } else {
            let mut w = vec![two_p_minus_1.clone()];
            w.extend(std::iter::repeat_n(p.clone(), m));
            w
        };
        acc += phi(m, &args)? * to_f64(&chern_coefficient(m as u32));
    }
    Ok(acc)
}

/// Source of the twisted residues τ_j of ζ_b(w) = τ(b(1+D²)^{-w-h}) for the words
/// b = γa₀[D,a₁]^{(k₁)}⋯[D,a_m]^{(k_m)}.
pub trait ResidueData {
    type Elem: Clone;
    fn laurent(&self, args: &[Self::Elem], k: &[u32], h: u32) -> Result<LaurentData>;
}

/// φ_m(a₀,…,a_m) from Laurent data; φ₀(a₀) = τ_{−1}(γa₀).
pub fn residue_cocycle<P: ResidueData>(data: &P, m: usize, args: &[P::Elem], two_n: usize) -> Result<C> {
    if args.len() != m + 1 {
        return Err(Error::Shape(format!("φ_{m} needs {} arguments", m + 1)));
    }
    if m == 0 {
        return data.laurent(args, &[], 0)?.tau_j(-1);
    }
    if m > two_n {
        return Ok(C::new(0.0, 0.0));
    }
    let mut acc = C::new(0.0, 0.0);
    for k in multi_indices(m, (two_n - m) as u32) {
        let total: u32 = k.iter().sum();
        let h = total + m as u32 / 2;
        let coef = to_f64(&(constants::sign(total) * alpha(&k)));
        let data_k = data.laurent(args, &k, h)?;
        let sig = sigma_elementary(h);
        for j in 1..=h as i32 {
            acc += data_k.tau_j(j - 1)? * (coef * sig[(j - 1) as usize] as f64);
        }
    }
    Ok(acc)
}

/// Residue data of a finite matrix triple: every ζ_b is an entire eigensum.
pub struct MatrixResidues<'a> {
    pub triple: &'a EvenTriple,
    dec: SpectralDecomposition,
}

impl<'a> MatrixResidues<'a> {
    pub fn new(triple: &'a EvenTriple) -> Result<Self> {
        Ok(Self { dec: triple.d.herm_eig()?, triple })
    }

    pub fn word(&self, args: &[BlockOperator], k: &[u32]) -> BlockOperator {
        let mut b = &self.triple.gamma * &args[0];
        for (a, &ki) in args[1..].iter().zip(k) {
            b = &b * &self.triple.iterated_commutator(&self.triple.commutator(a), ki as usize);
        }
        b
    }
}

impl ResidueData for MatrixResidues<'_> {
    type Elem = BlockOperator;
    fn laurent(&self, args: &[BlockOperator], k: &[u32], h: u32) -> Result<LaurentData> {
        let b = self.word(args, k);
        let crit = C::new((1.0 - self.triple.q) / 2.0, 0.0);
        let dec = &self.dec;
        let f = |w: C| dec.trace_with(&b, |d| C::new(1.0 + d * d, 0.0).powc(-w - h as f64));
        let mut data = LaurentData::from_function(f, crit, h as usize, 0.5, 64)?;
        data.model_id = "matrix".into();
        data.b_word = format!("gamma a0 [D,a]^(k) k={k:?} h={h}");
        Ok(data)
    }
}

/// Same pairing through the part-2 assembly: the residue at the critical point of
/// S(w) = Σ_{m,k} (−1)^h m!/(2(m/2)!) α(k) Σ_j σ_{h,j} w^{j−1} Z_{m,k}(w), with 2p in place
/// of 2p−1 for m = 0 (where σ_{0,0} = 1 and the power is w^{−1}).
/// `zeta(m, k, w)` returns the continued ζ_{m,k} at w (offset h already applied); for m = 0 it
/// is ζ of γp, which absorbs the factor ½ of ½·2p.
/// ζ_{m,k}(w) callback used by [`zeta_sum`].
pub type ZetaFamily<'a> = &'a dyn Fn(usize, &[u32], C) -> Result<C>;

pub fn zeta_sum(zeta: ZetaFamily<'_>, two_n: usize, w: C) -> Result<C> {
    let mut acc = zeta(0, &[], w)? / w;
    for m in (2..=two_n).step_by(2) {
        for k in multi_indices(m, (two_n - m) as u32) {
            let total: u32 = k.iter().sum();
            let h = total + m as u32 / 2;
            let c = to_f64(&(constants::sign(h) * Rational::new(special::factorial(m as u64) as i128, 2 * special::factorial(m as u64 / 2) as i128) * alpha(&k)));
            let sig = sigma_elementary(h);
            let z = zeta(m, &k, w)?;
            for j in 1..=h as i32 {
                acc += z * w.powi(j - 1) * (c * sig[(j - 1) as usize] as f64);
            }
        }
    }
    Ok(acc)
}

/// The quantity (−1)^{m/2+|k|}(m!/(m/2)!)(α(k)/2)√π Γ(q/2+r+|k|+(m−1)/2)/Γ(q/2+r) and its
/// rewriting C_{q/2+r} Σ_j σ_{h,j}(r+(q−1)/2)^j times the same sign/α factor.
pub fn penultimate_pair(m: u32, k: &[u32], q: f64, r: C) -> (C, C) {
    let total: u32 = k.iter().sum();
    let h = total + m / 2;
    let sign = if (m / 2 + total).is_multiple_of(2) { 1.0 } else { -1.0 };
    let fac = sign * special::factorial(m as u64) / special::factorial(m as u64 / 2) * to_f64(&alpha(k)) / 2.0;
    let z = C::new(q / 2.0, 0.0) + r;
    let lhs = (special::ln_gamma(C::new(0.5, 0.0)) + special::ln_gamma(z + total as f64 + (m as f64 - 1.0) / 2.0)
        - special::ln_gamma(z))
    .exp()
        * fac;
    let x = r + (q - 1.0) / 2.0;
    let poly: C = sigma_elementary(h).iter().enumerate().map(|(i, &s)| x.powi(i as i32 + 1) * s as f64).sum();
    let rhs = special::c_norm(z) * poly * fac;
    (lhs, rhs)
}

/// One row of the matrix-scale pairing table.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PairingRow {
    pub r: f64,
    /// Σ_m φ^r_m(Ch_m(p)) over m = 0, 2.
    pub sum_phi: f64,
    /// The materialized resolvent-expansion remainder.
    pub remainder: f64,
    pub c_norm: f64,
    /// (sum_phi + remainder) / c_norm, equal to Ind(pD⁺p).
    pub ratio: f64,
}

/// φ^r_0(p) − φ^r_2(2p−1,p,p) + remainder = Ind(pD⁺p)·C_{q/2+r} with N = 1: the resolvent
/// expansion R̃ = R + RXR + RXRXR + (RX)³R̃ of the doubled triple, the m = 1 term dropping
/// out under the supertrace and the remainder integrated by nested quadrature.
pub fn matrix_pairing_row(doubled: &DoubledTriple, r: f64, quad: &QuadratureSpec) -> Result<PairingRow> {
    let triple = &doubled.base;
    let engine = ResolventCocycle::new(triple, quad.clone())?;
    let rc = C::new(r, 0.0);
    let p = &doubled.p;
    let tpm = doubled.two_p_minus_one();
    let sum_phi = pair_with_chern(|m, a| engine.eval(m, rc, a), p, tpm, 2)?;
    let remainder = expansion_remainder(doubled, &engine, rc)?;
    let z = C::new(0.5 * triple.q + r, 0.0);
    let c = special::c_norm(z).re;
    Ok(PairingRow { r, sum_phi: sum_phi.re, remainder: remainder.re, c_norm: c, ratio: (sum_phi.re + remainder.re) / c })
}

/// ∫₀^∞ Sτ((1⊗(2p−1)) (1/2πi)∫ λ^{-z} (RX)³ R̃ dλ) ds.
pub fn expansion_remainder(doubled: &DoubledTriple, engine: &ResolventCocycle, r: C) -> Result<C> {
    let triple = &doubled.base;
    let z = C::new(0.5 * triple.q, 0.0) + r;
    let dec = &engine.dec;
    let nvals = engine.values.len() as u16;
    let s3s2 = linalg::mul(&doubled.sigma[2], &doubled.sigma[1]);
    let one2 = linalg::eye(2);
    let y_base = dec.to_eigenbasis(&(&triple.gamma * doubled.two_p_minus_one()));
    let x_base = dec.to_eigenbasis(doubled.dp_commutator());
    let y2: Vec<CMat> = y_base.iter().map(|m| linalg::kron(&one2, m)).collect();
    let x2: Vec<CMat> = x_base.iter().map(|m| linalg::kron(&s3s2, m)).collect();
    let d2_base = dec.to_eigenbasis(&(&triple.d * &triple.d));
    let comm_base = x_base.clone();
    // doubled classes: index σ·n + i has the class of i
    let classes2: Vec<Vec<(u16, Vec<usize>)>> = engine
        .block_classes
        .iter()
        .zip(&dec.values)
        .map(|(cl, vals)| {
            let n = vals.len();
            cl.iter().map(|(c, idx)| (*c, idx.iter().flat_map(|&i| [i, n + i]).collect())).collect()
        })
        .collect();
    let blocks = triple.algebra.blocks().to_vec();
    let build = |s: f64| -> Result<PoleSum> {
        let mut points: Vec<f64> = engine.values.iter().map(|x| x + s * s).collect();
        let mut map = BTreeMap::new();
        for (bi, blk) in blocks.iter().enumerate() {
            let n = dec.values[bi].len();
            // D̃²_{0,s} in the doubled eigenbasis: 1⊗(D²+s²) + 2sσ3σ2⊗[D,p]
            let h = CMat::from_fn(2 * n, 2 * n, |i, j| {
                let (a, b) = (i / n, j / n);
                let (ii, jj) = (i % n, j % n);
                let mut v = if a == b { d2_base[bi][(ii, jj)] } else { C::new(0.0, 0.0) };
                if a == b && ii == jj {
                    v += s * s;
                }
                v + s3s2[(a, b)] * comm_base[bi][(ii, jj)] * (2.0 * s)
            });
            let (beta, v) = linalg::eigh(&h)?;
            let xs = linalg::scale(&x2[bi], C::new(2.0 * s, 0.0));
            let vy = linalg::mul(&linalg::adjoint(&v), &y2[bi]);
            let xv = linalg::mul(&xs, &v);
            let all: Vec<usize> = (0..2 * n).collect();
            for (mu, &b) in beta.iter().enumerate() {
                let key_mu = points.len() as u16;
                points.push(1.0 + b.max(0.0));
                let first = slice(&vy, &[mu], &all);
                let last = slice(&xv, &all, &[mu]);
                class_chain(
                    &first,
                    &[&xs, &xs],
                    &last,
                    &classes2[bi],
                    &[key_mu],
                    C::new(0.5 * blk.weight, 0.0),
                    &|m: &CMat| m[(0, 0)],
                    &mut map,
                );
            }
        }
        let _ = nvals;
        Ok(PoleSum::from_map(points, map))
    };
    // Bound the s-integrand by the s = 1 sample scaled as s³(1+s²)^{-Re z - 3/2}.
    let probe = build(1.0)?;
    let quad = &engine.quad;
    let mut failure: Option<Error> = None;
    let wprobe = probe.weight_sum().max(1e-300);
    let decay = z.re + 1.5;
    let bound = |s: f64| wprobe * s.powi(3) * (1.0 + s * s).powf(-decay) * 2f64.powf(decay);
    let abs = quad.abs_tol * wprobe;
    let r = quad::exp_sinh(
        |s| {
            if failure.is_some() || bound(s) * s < 1e-3 * abs {
                return C::new(0.0, 0.0);
            }
            match build(s).and_then(|ps| {
                let target = contour_target(&ps, z, quad, abs, s, 0);
                ps.contour(z, quad, target)
            }) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    C::new(0.0, 0.0)
                }
            }
        },
        abs,
        quad.rel_tol,
        quad.max_nodes,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TracedAlgebra;
    use crate::linalg::{cr, diag_real};

    fn small() -> (EvenTriple, BlockOperator) {
        let alg = TracedAlgebra::matrix(4);
        let gamma = BlockOperator::from_blocks(&alg, vec![diag_real(&[1.0, 1.0, -1.0, -1.0])]).unwrap();
        let mut d = linalg::zeros(4, 4);
        for (i, j, v) in [(2, 0, 0.6), (3, 0, 0.3), (3, 1, 0.9), (2, 1, -0.2)] {
            d[(i, j)] = cr(v);
            d[(j, i)] = cr(v);
        }
        let d = BlockOperator::from_blocks(&alg, vec![d]).unwrap();
        // rank one in the even sector, zero in the odd one: Ind = 1
        let mut pm = linalg::zeros(4, 4);
        for (i, j, v) in [(0, 0, 0.64), (0, 1, 0.48), (1, 0, 0.48), (1, 1, 0.36)] {
            pm[(i, j)] = cr(v);
        }
        let p = BlockOperator::from_blocks(&alg, vec![pm]).unwrap();
        (EvenTriple::new(vec![p.clone()], d, gamma, 1.0).unwrap(), p)
    }

    #[test]
    fn phi0_closed_form_example() {
        // 2-dim, γ = diag(1,−1), D = 0, a₀ = diag(1,0), q = 1, r = 1 → C_{3/2} = 2
        let alg = TracedAlgebra::matrix(2);
        let gamma = BlockOperator::from_blocks(&alg, vec![diag_real(&[1.0, -1.0])]).unwrap();
        let d = BlockOperator::zeros(&alg);
        let a0 = BlockOperator::from_blocks(&alg, vec![diag_real(&[1.0, 0.0])]).unwrap();
        let t = EvenTriple::new(vec![a0.clone()], d, gamma, 1.0).unwrap();
        let e = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
        let v = e.eval(0, C::new(1.0, 0.0), &[a0]).unwrap();
        assert!((v.re - 2.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn central_argument_kills_higher_terms() {
        let (t, p) = small();
        let e = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
        let one = BlockOperator::identity(&t.algebra);
        let v = e.eval(2, C::new(1.0, 0.0), &[p.clone(), one, p]).unwrap();
        assert_eq!(v, C::new(0.0, 0.0));
    }

    #[test]
    fn bb_identity_m0() {
        let (t, p) = small();
        let e = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
        let mut a = linalg::zeros(4, 4);
        a[(0, 1)] = C::new(0.3, 0.2);
        a[(1, 0)] = C::new(-0.5, 0.1);
        a[(2, 2)] = cr(0.7);
        a[(3, 2)] = C::new(0.1, -0.4);
        let a = BlockOperator::from_blocks(&t.algebra, vec![a]).unwrap();
        for r in [0.75, 1.0, 1.5] {
            let v = bb_cocycle_check(&e, 0, C::new(r, 0.0), &[p.clone(), a.clone()]).unwrap();
            assert!(v.norm() < 1e-8, "r={r}: {v}");
        }
    }

    #[test]
    fn bb_identity_m2_nontrivial_pieces() {
        let (t, p) = small();
        let e = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
        let mk = |seed: f64| {
            let m = CMat::from_fn(4, 4, |i, j| {
                let even = (i < 2) == (j < 2);
                if even {
                    C::new((seed + (3 * i + j) as f64).sin(), (seed * 1.7 + (i + 5 * j) as f64).cos())
                } else {
                    C::new(0.0, 0.0)
                }
            });
            BlockOperator::from_blocks(&t.algebra, vec![m]).unwrap()
        };
        let args = [mk(0.3), p.clone(), mk(1.1), mk(2.9)];
        let r = C::new(1.0, 0.0);
        let lo = e.cochain(2, r);
        let hi = e.cochain(4, r);
        let b = HochschildB(&lo).eval(&args).unwrap();
        let bb = ConnesB(&hi).eval(&args).unwrap();
        assert!(b.norm() > 1e-3 && bb.norm() > 1e-3, "{b} {bb}");
        assert!((b + bb).norm() < 1e-8 * b.norm(), "{b} {bb}");
    }

    #[test]
    fn pairing_row_reproduces_index() {
        let (t, p) = small();
        let dt = DoubledTriple::new(&t, &p).unwrap();
        let ind = t.compressed_index(&p).unwrap();
        for r in [0.75, 1.0, 1.5] {
            let row = matrix_pairing_row(&dt, r, &QuadratureSpec::default()).unwrap();
            assert_eq!(ind, 1.0);
            assert!(row.remainder.abs() > 1e-6);
            assert!((row.ratio - ind).abs() < 1e-7, "r={r}: {row:?} vs {ind}");
        }
    }

    /// φ^r_2 by brute force: dense resolvents on the contour, adaptive quadrature in s.
    fn phi2_dense(t: &EvenTriple, r: f64, a: &[BlockOperator]) -> C {
        let z = C::new(0.5 * t.q + r, 0.0);
        let g = &t.gamma * &a[0];
        let b1 = t.commutator(&a[1]);
        let b2 = t.commutator(&a[2]);
        let dec = t.d.herm_eig().unwrap();
        let inner = |s: f64| -> C {
            quad::vertical_line(
                |lam| {
                    let rr = dec.resolvent(1.0 + s * s, lam).unwrap();
                    (&(&(&(&(&g * &rr) * &b1) * &rr) * &b2) * &rr).trace() * lam.powc(-z)
                },
                0.25,
                1e7,
                1e-12 * (1.0 + s * s).powi(-2),
                1e-11,
                1 << 18,
            )
            .unwrap()
            .value
                * (s * s)
        };
        let v = quad::tan_half_line(inner, 1e-12, 1e-10, 1 << 14).unwrap().value;
        v * to_f64(&eta(2))
    }

    #[test]
    fn phi2_matches_dense_oracle() {
        let (t, p) = small();
        let e = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
        let tpm = &p.scale_re(2.0) - &BlockOperator::identity(&t.algebra);
        let args = [tpm, p.clone(), p.clone()];
        for r in [0.75, 1.5] {
            let fast = e.eval(2, C::new(r, 0.0), &args).unwrap();
            let slow = phi2_dense(&t, r, &args);
            eprintln!("r={r} fast={fast} slow={slow}");
            assert!((fast - slow).norm() < 1e-8 * (1.0 + slow.norm()), "r={r}: {fast} vs {slow}");
        }
    }

    #[test]
    fn pairing_row_values() {
        let (t, p) = small();
        let dt = DoubledTriple::new(&t, &p).unwrap();
        let row = matrix_pairing_row(&dt, 1.0, &QuadratureSpec::default()).unwrap();
        eprintln!("{row:?} ind={}", t.compressed_index(&p).unwrap());
    }

    #[test]
    fn penultimate_rewrite() {
        for r in [0.6, 0.9, 1.7] {
            let (l, rr) = penultimate_pair(2, &[1, 0], 2.0, C::new(r, 0.3));
            assert!((l - rr).norm() <= 1e-12 * l.norm());
        }
    }
}
