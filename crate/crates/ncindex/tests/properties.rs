//! Property tests for the structural invariants: trace and functional calculus, Fredholm
//! reports, the doubling identity, expansion coefficients, constants, cochain algebra and
//! Laurent data.

mod common;

use ncindex::algebra::SpectralDecomposition;
use ncindex::cocycle::{
    chern, residue_cocycle, Cochain, ConnesB, FnCochain, HochschildB, MatrixResidues, ResolventCocycle,
};
use ncindex::constants::{self, alpha, c_of_k, chern_coefficient, eta, Rational};
use ncindex::fredholm::{self, SkewCorner};
use ncindex::linalg;
use ncindex::models::random::random_matrix;
use ncindex::models::RandomEvenModel;
use ncindex::psido::{move_right_expand, QuadratureSpec};
use ncindex::triple::{DoubledTriple, EvenTriple};
use ncindex::zeta::{zeta_eval_matrix, LaurentData};
use ncindex::{c64 as C, BlockOperator, TracedAlgebra};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn random_op(rng: &mut ChaCha8Rng, alg: &std::sync::Arc<TracedAlgebra>) -> BlockOperator {
    BlockOperator::from_fn(alg, |_, n| random_matrix(rng, n, n)).unwrap()
}

fn hermitian(rng: &mut ChaCha8Rng, alg: &std::sync::Arc<TracedAlgebra>) -> BlockOperator {
    let a = random_op(rng, alg);
    (&a + &a.adjoint()).scale_re(0.5)
}

fn triple(seed: u64, max_dim: usize) -> (EvenTriple, BlockOperator) {
    let inst = RandomEvenModel::sample(seed, max_dim).build().unwrap();
    (inst.triple, inst.p)
}

fn even_element(rng: &mut ChaCha8Rng, t: &EvenTriple) -> BlockOperator {
    let x = random_op(rng, &t.algebra);
    (&x + &(&(&t.gamma * &x) * &t.gamma)).scale_re(0.5)
}

fn weighted_algebra(seed: u64) -> std::sync::Arc<TracedAlgebra> {
    let dims = [2 + (seed % 4) as usize, 3 + (seed % 3) as usize];
    TracedAlgebra::new([(dims[0], 1.0), (dims[1], std::f64::consts::SQRT_2)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_is_tracial_and_adjoint_involutive(seed in any::<u64>()) {
        let alg = weighted_algebra(seed);
        let mut rng = common::rng(seed);
        let (a, b) = (random_op(&mut rng, &alg), random_op(&mut rng, &alg));
        let lhs = (&a * &b).trace();
        let rhs = (&b * &a).trace();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * a.norm() * b.norm() * alg.trace_of_identity());
        prop_assert!((&a.adjoint().adjoint() - &a).fro_max() == 0.0);
        let tr_ab_star = (&a * &b).adjoint().trace();
        prop_assert!((tr_ab_star - lhs.conj()).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn trace_is_faithful(seed in any::<u64>()) {
        let alg = weighted_algebra(seed);
        let mut rng = common::rng(seed);
        let a = random_op(&mut rng, &alg);
        let t = (&a.adjoint() * &a).trace();
        prop_assert!(t.re > 0.0 && t.im.abs() < 1e-12 * t.re);
        let z = BlockOperator::zeros(&alg);
        prop_assert_eq!((&z.adjoint() * &z).trace(), C::new(0.0, 0.0));
    }

    #[test]
    fn functional_calculus_is_multiplicative(seed in any::<u64>()) {
        let alg = weighted_algebra(seed);
        let mut rng = common::rng(seed);
        let h = hermitian(&mut rng, &alg);
        let f = |x: f64| (-(x * x)).exp();
        let g = |x: f64| 1.0 / (1.0 + x * x);
        let fg = h.func_calc(|x| f(x) * g(x)).unwrap();
        let prod = &h.func_calc(f).unwrap() * &h.func_calc(g).unwrap();
        prop_assert!((&fg - &prod).fro_max() < 1e-10);
    }

    #[test]
    fn spectral_decomposition_reconstructs(seed in any::<u64>()) {
        let alg = weighted_algebra(seed);
        let mut rng = common::rng(seed);
        let h = hermitian(&mut rng, &alg);
        let dec: SpectralDecomposition = h.herm_eig().unwrap();
        prop_assert!((&dec.reconstruct() - &h).fro_max() <= 1e-10 * h.fro_max());
        prop_assert!(dec.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn resolvent_identity(seed in any::<u64>(), s in 0.0..3.0f64, v1 in -4.0..4.0f64, v2 in -4.0..4.0f64) {
        let alg = weighted_algebra(seed);
        let mut rng = common::rng(seed);
        let d = hermitian(&mut rng, &alg);
        let (l1, l2) = (C::new(0.25, v1), C::new(0.25, v2));
        let shift = 1.0 + s * s;
        let r1 = d.resolvent(shift, l1).unwrap();
        let r2 = d.resolvent(shift, l2).unwrap();
        let lhs = &r1 - &r2;
        let rhs = (&r1 * &r2).scale(l2 - l1);
        prop_assert!((&lhs - &rhs).fro_max() < 1e-10);
        // (λ − (1+s²+D²))R = 1
        let one = BlockOperator::identity(&alg);
        let x = &(&one.scale(l1) - &one.scale_re(shift)) - &(&d * &d);
        prop_assert!((&(&x * &r1) - &one).fro_max() < 1e-10);
    }

    #[test]
    fn fredholm_reports_are_consistent(seed in any::<u64>()) {
        let c = common::composable(seed);
        let corner = SkewCorner::new(c.p.clone(), c.q.clone()).unwrap();
        let rep = fredholm::index(&c.t, &corner).unwrap();
        prop_assert!(rep.ker_q_trace >= 0.0 && rep.coker_p_trace >= 0.0);
        prop_assert_eq!(rep.index, rep.ker_q_trace - rep.coker_p_trace);
        prop_assert!((rep.index - c.index_t).abs() < 1e-10);
        let (ist, sum) = fredholm::product_index_check(&c.s, &c.t, &c.g, &c.p, &c.q).unwrap();
        prop_assert!((ist - sum).abs() < 1e-8);
        // the adjoint lives in the opposite corner with the opposite index
        let adj = fredholm::index(&c.t.adjoint(), &corner.adjoint()).unwrap();
        prop_assert!((adj.index + rep.index).abs() < 1e-10);
    }

    #[test]
    fn bounded_transform_is_a_contraction_in_the_corner(seed in any::<u64>()) {
        let c = common::composable(seed);
        let corner = SkewCorner::new(c.p.clone(), c.q.clone()).unwrap();
        let bt = fredholm::bounded_transform(&c.t, &corner).unwrap();
        prop_assert!(bt.norm() < 1.0);
        prop_assert!(corner.defect(&bt) < 1e-12);
        let mut rng = common::rng(seed ^ 1);
        let a = common::corner_noise(&mut rng, &c.p, &c.q, 0.3);
        prop_assert!(fredholm::transform_continuity_check(&c.t, &a, &corner).unwrap() <= 1e-12);
    }

    #[test]
    fn doubled_square_identity(seed in 0u64..1000, w in 0.0..1.0f64, s in -3.0..3.0f64) {
        let (t, p) = triple(seed, 12);
        let dt = DoubledTriple::new(&t, &p).unwrap();
        prop_assert!(dt.square_identity_defect(w, s) < 1e-10);
        prop_assert!(dt.base.commutator(&p).norm() < std::f64::consts::SQRT_2);
    }

    #[test]
    fn expansion_terms_carry_exact_coefficients(seed in 0u64..1000, m in 1usize..=3, extra in 0usize..=3) {
        let (t, p) = triple(seed, 8);
        let mut rng = common::rng(seed);
        let a0 = even_element(&mut rng, &t);
        let factors: Vec<BlockOperator> = (0..m).map(|i| t.commutator(if i % 2 == 0 { &p } else { &a0 })).collect();
        let (terms, _) = move_right_expand(&t, &a0, &factors, 0.5, C::new(0.25, 1.0), m + extra).unwrap();
        prop_assert_eq!(terms.len(), constants::multi_indices(m, extra as u32).len());
        for term in &terms {
            let total = term.total_k() + m as u32;
            prop_assert_eq!(term.resolvent_power, total + 1);
            let fact: i128 = (1..=total as i128).product();
            prop_assert_eq!(term.coefficient, alpha(&term.k) * Rational::from_integer(fact));
            prop_assert_eq!(term.coefficient, c_of_k(&term.k));
        }
    }

    #[test]
    fn resolvent_cocycle_is_multilinear(seed in 0u64..1000, c0 in -2.0..2.0f64, c1 in -2.0..2.0f64) {
        let (t, _) = triple(seed, 6);
        let engine = ResolventCocycle::new(&t, QuadratureSpec::default()).unwrap();
        let mut rng = common::rng(seed);
        let args: Vec<BlockOperator> = (0..3).map(|_| even_element(&mut rng, &t)).collect();
        let extra = even_element(&mut rng, &t);
        let r = C::new(1.0, 0.0);
        let coef = C::new(c0, c1);
        for slot in 0..3 {
            let mut mixed = args.clone();
            mixed[slot] = &args[slot] + &extra.scale(coef);
            let mut alt = args.clone();
            alt[slot] = extra.clone();
            let lhs = engine.eval(2, r, &mixed).unwrap();
            let rhs = engine.eval(2, r, &args).unwrap() + coef * engine.eval(2, r, &alt).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()), "slot {slot}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn coboundaries_square_to_zero(seed in any::<u64>(), m in 0usize..=3) {
        let alg = TracedAlgebra::matrix(3);
        let mut rng = common::rng(seed);
        let mats: Vec<BlockOperator> = (0..m + 3).map(|_| random_op(&mut rng, &alg)).collect();
        let x = random_op(&mut rng, &alg);
        // general multilinear functional: b∘b = 0
        let general = FnCochain {
            degree: m,
            f: |a: &[BlockOperator]| {
                let mut acc = BlockOperator::identity(&alg);
                for (ai, mi) in a.iter().zip(&mats) {
                    acc = &(&acc * ai) * mi;
                }
                Ok(acc.trace())
            },
        };
        let args: Vec<BlockOperator> = (0..m + 3).map(|_| random_op(&mut rng, &alg)).collect();
        let b1 = HochschildB(&general);
        let bb = HochschildB(&b1).eval(&args).unwrap();
        prop_assert!(bb.norm() < 1e-9, "b∘b = {bb}");
        // normalized functional a₀[X,a₁]⋯[X,a_k]: B∘B = 0
        let deg = m + 2;
        let normalized = FnCochain {
            degree: deg,
            f: |a: &[BlockOperator]| {
                let mut acc = a[0].clone();
                for ai in &a[1..] {
                    acc = &acc * &x.commutator(ai);
                }
                Ok(acc.trace())
            },
        };
        let b1 = ConnesB(&normalized);
        let b2 = ConnesB(&b1);
        let short: Vec<BlockOperator> = args[..deg - 1].to_vec();
        let v = b2.eval(&short).unwrap();
        prop_assert!(v.norm() < 1e-9, "B∘B = {v}");
    }

    #[test]
    fn laurent_data_is_linear_in_the_word(seed in 0u64..1000, c in -2.0..2.0f64, h in 0u32..=2) {
        let (t, _) = triple(seed, 8);
        let dec = t.d.herm_eig().unwrap();
        let mut rng = common::rng(seed);
        let b1 = random_op(&mut rng, &t.algebra);
        let b2 = random_op(&mut rng, &t.algebra);
        let crit = C::new(0.0, 0.0);
        let data = |b: &BlockOperator| {
            let b = b.clone();
            let dec = &dec;
            LaurentData::from_function(move |w: C| zeta_eval_matrix(dec, &b, w + h as f64), crit, 2, 0.5, 64).unwrap()
        };
        let mix = &b1 + &b2.scale_re(c);
        let (d1, d2, dm) = (data(&b1), data(&b2), data(&mix));
        for j in -1..=2 {
            let lhs = dm.tau_j(j).unwrap();
            let rhs = d1.tau_j(j).unwrap() + d2.tau_j(j).unwrap() * c;
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        }
        // entire at matrix scale: no principal part
        prop_assert!(dm.is_pole_free(1e-10));
    }

    #[test]
    fn residue_phi0_is_graded_trace(seed in 0u64..1000) {
        let (t, _) = triple(seed, 10);
        let data = MatrixResidues::new(&t).unwrap();
        let mut rng = common::rng(seed);
        let a0 = even_element(&mut rng, &t);
        let phi0 = residue_cocycle(&data, 0, std::slice::from_ref(&a0), 2).unwrap();
        let direct = (&t.gamma * &a0).trace();
        prop_assert!((phi0 - direct).norm() < 1e-10 * (1.0 + direct.norm()));
    }

    #[test]
    fn chern_components_have_the_stated_coefficients(seed in 0u64..1000, half in 0usize..=4) {
        let (_, p) = triple(seed, 8);
        let m = 2 * half;
        let ch = chern(&p, m).unwrap();
        prop_assert_eq!(ch.word.len(), m + 1);
        let expect = if m == 0 {
            Rational::from_integer(1)
        } else {
            let fact = |n: usize| (1..=n as i128).product::<i128>();
            let sign = if half % 2 == 0 { 1 } else { -1 };
            Rational::new(sign * fact(m), 2 * fact(half))
        };
        prop_assert_eq!(ch.coefficient, expect);
        prop_assert_eq!(chern_coefficient(m as u32), expect);
    }
}

#[test]
fn eta_recursion_is_exact() {
    for m in (0..=20u32).step_by(2) {
        assert_eq!(Rational::new(m as i128 + 1, 2) * eta(m + 2), eta(m));
    }
}

#[test]
fn sqrt2_weighted_index_example() {
    let alg = TracedAlgebra::new([(3, 1.0), (2, std::f64::consts::SQRT_2)]).unwrap();
    let p = BlockOperator::from_blocks(&alg, vec![linalg::diag_real(&[1.0, 1.0, 0.0]), linalg::diag_real(&[1.0, 0.0])]).unwrap();
    let q = BlockOperator::from_blocks(&alg, vec![linalg::diag_real(&[1.0, 0.0, 0.0]), linalg::diag_real(&[1.0, 1.0])]).unwrap();
    let t = &p * &q;
    let rep = fredholm::index(&t, &SkewCorner::new(p, q).unwrap()).unwrap();
    // block 1: τ(Q) − τ(P) = 1 − 2; block 2: √2(2 − 1)
    assert!((rep.index - (std::f64::consts::SQRT_2 - 1.0)).abs() < 1e-14);
}
