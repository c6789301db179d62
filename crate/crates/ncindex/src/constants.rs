//! Exact combinatorial constants of the local index formula.

use num_complex::Complex64 as C;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::special;

pub type Rational = Ratio<i128>;

fn fact(n: u32) -> i128 {
    (1..=n as i128).product()
}

/// α(k) = 1 / (k₁!⋯k_m! (k₁+1)(k₁+k₂+2)⋯(|k|+m)).
pub fn alpha(k: &[u32]) -> Rational {
    let mut den: i128 = 1;
    let mut partial = 0i128;
    for (i, &ki) in k.iter().enumerate() {
        den *= fact(ki);
        partial += ki as i128;
        den *= partial + i as i128 + 1;
    }
    Rational::new(1, den)
}

/// C(k) = (|k|+m)! α(k).
pub fn c_of_k(k: &[u32]) -> Rational {
    let total: u32 = k.iter().sum::<u32>() + k.len() as u32;
    alpha(k) * Rational::from_integer(fact(total))
}

/// σ_{n,1..n}: ∏_{j=0}^{n−1}(z+j) = Σ_{j=1}^{n} σ_{n,j} z^j. Index 0 of the result is σ_{n,1}.
/// For n = 0 the empty product gives the single coefficient σ_{0,0} = 1.
pub fn sigma_elementary(n: u32) -> Vec<i128> {
    // coefficients of z^0..z^n
    let mut poly = vec![1i128];
    for j in 0..n as i128 {
        let mut next = vec![0i128; poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] += c * j;
        }
        poly = next;
    }
    if n == 0 {
        return poly;
    }
    poly[1..].to_vec()
}

/// η_m = 2^{m+1} (m/2)! / m! for even m.
pub fn eta(m: u32) -> Rational {
    assert!(m.is_multiple_of(2), "η_m needs even m");
    Rational::new((1i128 << (m + 1)) * fact(m / 2), fact(m))
}

/// Coefficient of Ch_m(p) = (−1)^{m/2} m!/(2 (m/2)!) (2p−1)⊗p^{⊗m}; Ch_0(p) = p has coefficient 1.
pub fn chern_coefficient(m: u32) -> Rational {
    assert!(m.is_multiple_of(2), "Chern components live in even degree");
    if m == 0 {
        return Rational::one();
    }
    let sign = if (m / 2).is_multiple_of(2) { 1 } else { -1 };
    Rational::new(sign * fact(m), 2 * fact(m / 2))
}

/// Relative defect of 2^{m−1}Γ((m+1)/2) = √π Γ(m)/Γ(m/2) (m = 0: right side √π/2).
pub fn legendre_duplication_check(m: u32) -> f64 {
    let lg = |x: f64| special::ln_gamma(C::new(x, 0.0)).re;
    let mf = m as f64;
    let lhs = (mf - 1.0) * std::f64::consts::LN_2 + lg((mf + 1.0) / 2.0);
    let rhs = if m == 0 {
        0.5 * std::f64::consts::PI.ln() - std::f64::consts::LN_2
    } else {
        0.5 * std::f64::consts::PI.ln() + lg(mf) - lg(mf / 2.0)
    };
    ((lhs - rhs).exp() - 1.0).abs()
}

pub use special::c_norm;

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// All multi-indices k ∈ N^m with |k| ≤ max_total, lexicographic order.
pub fn multi_indices(m: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, max_total, &mut cur, &mut out);
    out
}

/// (−1)^n as a rational.
pub fn sign(n: u32) -> Rational {
    if n.is_multiple_of(2) {
        Rational::one()
    } else {
        -Rational::one()
    }
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}
