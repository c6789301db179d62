//! φ^r_2 from the fast eigen-class engine against the termwise pipeline: move-right
//! expansion, Cauchy closed form for each resolvent power, Gamma closed form for the
//! s-integral, and the materialized remainder integrated by nested quadrature.

use ncindex::cocycle::{eta, ResolventCocycle};
use ncindex::constants::to_f64;
use ncindex::linalg::{self, cr};
use ncindex::psido::{move_right_expand, s_integral_closed};
use ncindex::quad::{self, QuadratureSpec};
use ncindex::special;
use ncindex::triple::EvenTriple;
use ncindex::{c64 as C, BlockOperator, TracedAlgebra};

fn triple() -> (EvenTriple, BlockOperator, BlockOperator) {
    let alg = TracedAlgebra::matrix(4);
    let gamma = BlockOperator::from_blocks(&alg, vec![linalg::diag_real(&[1.0, 1.0, -1.0, -1.0])]).unwrap();
    let mut d = linalg::zeros(4, 4);
    for (i, j, v) in [(2, 0, C::new(0.7, 0.1)), (3, 0, C::new(0.2, 0.0)), (3, 1, C::new(1.1, -0.3)), (2, 1, C::new(-0.4, 0.2))] {
        d[(i, j)] = v;
        d[(j, i)] = v.conj();
    }
    let d = BlockOperator::from_blocks(&alg, vec![d]).unwrap();
    let mut a = linalg::zeros(4, 4);
    a[(0, 0)] = cr(0.5);
    a[(0, 1)] = C::new(0.2, -0.7);
    a[(1, 0)] = C::new(0.9, 0.1);
    a[(2, 3)] = C::new(-0.3, 0.4);
    a[(3, 3)] = cr(-1.2);
    let a = BlockOperator::from_blocks(&alg, vec![a]).unwrap();
    let mut b = linalg::zeros(4, 4);
    b[(1, 1)] = cr(0.8);
    b[(0, 1)] = C::new(0.1, 0.6);
    b[(2, 2)] = C::new(0.3, 0.3);
    b[(3, 2)] = cr(-0.5);
    let b = BlockOperator::from_blocks(&alg, vec![b]).unwrap();
    (EvenTriple::new(vec![a.clone(), b.clone()], d, gamma, 1.0).unwrap(), a, b)
}

#[test]
fn phi2_engine_matches_expansion_pipeline() {
    let (t, a, b) = triple();
    let order = 4;
    let r = 1.0;
    let z = C::new(0.5 * t.q + r, 0.0);
    let args = [a.clone(), b.clone(), a.clone()];
    let engine = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
    let fast = engine.eval(2, C::new(r, 0.0), &args).unwrap();

    let g = &t.gamma * &a;
    let factors = [t.commutator(&b), t.commutator(&a)];
    let dec = t.d.herm_eig().unwrap();
    // closed-form terms: the expansion terms do not depend on (s, λ)
    let (terms, _) = move_right_expand(&t, &g, &factors, 0.0, C::new(0.25, 1.0), order).unwrap();
    let mut closed = C::new(0.0, 0.0);
    for term in &terms {
        let k = term.resolvent_power - 1;
        let cauchy = (special::ln_gamma(z + k as f64) - special::ln_gamma(z)).exp() / special::factorial(k as u64)
            * if k % 2 == 0 { 1.0 } else { -1.0 };
        let a_exp = z.re + k as f64;
        let v = dec.trace_with(&term.product(), |d| C::new(s_integral_closed(1.0 + d * d, 2, a_exp) / 4.0, 0.0));
        closed += v * cauchy * to_f64(&term.coefficient);
    }
    // remainder by nested quadrature
    let rem = quad::tan_half_line(
        |s: f64| {
            quad::vertical_line(
                |lam| {
                    let (_, rem) = move_right_expand(&t, &g, &factors, s, lam, order).unwrap();
                    rem.trace() * lam.powc(-z)
                },
                0.25,
                1e6,
                1e-12 * (1.0 + s * s).powi(-2),
                1e-10,
                1 << 17,
            )
            .unwrap()
            .value
                * (s * s)
        },
        1e-11,
        1e-9,
        1 << 13,
    )
    .unwrap()
    .value;
    let pipeline = (closed + rem) * to_f64(&eta(2));
    assert!(rem.norm() > 1e-6, "remainder should be material: {rem}");
    assert!((fast - pipeline).norm() < 1e-6 * (1.0 + fast.norm()), "engine {fast} vs pipeline {pipeline} (closed {closed}, remainder {rem})");
}
