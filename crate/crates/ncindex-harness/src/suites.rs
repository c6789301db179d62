//! The verification suites. Each check becomes one [`CheckRecord`]; computation failures
//! are recorded as failed checks rather than aborting the suite.

use ncindex::cocycle::{self, bb_cocycle_check, matrix_pairing_row, MatrixResidues, ResolventCocycle};
use ncindex::constants::{self, Rational};
use ncindex::fredholm::{self, SkewCorner};
use ncindex::linalg;
use ncindex::models::random::{random_corner_operator, random_matrix, smallest_nonzero_singular};
use ncindex::models::{ComposableCorners, ModelInstance, RandomEvenModel};
use ncindex::psido;
use ncindex::quad::QuadratureSpec;
use ncindex::special;
use ncindex::triple::{DoubledTriple, EvenTriple};
use ncindex::zeta::{self, LaurentData, MellinContinuation, DEFAULT_FIT_WINDOW};
use ncindex::{BlockOperator, Error};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ModelKind, Suite, SuiteConfig};
use crate::error::{HarnessError, Result};
use crate::models::{self, Built};
use crate::report::{CheckRecord, Comparison, Report};

type Weight = fn(f64) -> f64;
type Checked = std::result::Result<(f64, f64), Error>;

pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    cfg.validate()?;
    let suite = cfg.suite.ok_or_else(|| HarnessError::Config("no suite given".into()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| match suite {
        Suite::Fredholm => Ok(per_instance(cfg, fredholm_checks)),
        Suite::MckeanSinger => Ok(per_instance(cfg, mckean_singer_checks)),
        Suite::Doubling => Ok(per_instance(cfg, doubling_checks)),
        Suite::Psido => Ok(psido_checks(cfg)),
        Suite::Cocycle => Ok(per_instance(cfg, cocycle_checks)),
        Suite::Zeta => Ok(zeta_checks(cfg)),
        Suite::IndexTheorem => index_theorem_checks(cfg),
    })?;
    Ok(Report::new(suite.name(), records))
}

/// Runs `f(cfg, i)` for i < instances, in parallel when threads > 1; order is preserved.
fn per_instance(cfg: &SuiteConfig, f: fn(&SuiteConfig, u64) -> Vec<CheckRecord>) -> Vec<CheckRecord> {
    (0..cfg.instances as u64).into_par_iter().map(|i| f(cfg, i)).collect::<Vec<_>>().concat()
}

fn rng(cfg: &SuiteConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(salt))
}

fn instance_seed(cfg: &SuiteConfig, i: u64) -> u64 {
    cfg.seed.wrapping_mul(1_000_003).wrapping_add(i)
}

fn random_triple(cfg: &SuiteConfig, i: u64, max_dim: usize) -> std::result::Result<ModelInstance, Error> {
    RandomEvenModel::sample(instance_seed(cfg, i), max_dim).build()
}

fn fredholm_checks(cfg: &SuiteConfig, i: u64) -> Vec<CheckRecord> {
    let seed = instance_seed(cfg, i);
    let id = |name: &str| format!("fredholm/{name}/{seed}");
    let inst = match ComposableCorners::sample(seed) {
        Ok(c) => c,
        Err(e) => return vec![CheckRecord::run(id("build"), "instance construction", Comparison::Equal, 0.0, || Err::<(f64, f64), _>(e))],
    };
    let corner = SkewCorner::new(inst.p.clone(), inst.q.clone());
    let mut out = vec![
        CheckRecord::run(id("index-oracle"), "Ind(T) = τ(Q) − τ(P) at matrix scale", Comparison::Equal, cfg.tol_or(1e-10), || -> Checked {
            Ok((fredholm::index(&inst.t, ok(&corner)?)?.index, inst.index_t))
        }),
        CheckRecord::run(id("product"), "Ind(ST) = Ind(S) + Ind(T)", Comparison::Equal, cfg.tol_or(1e-8), || -> Checked {
            fredholm::product_index_check(&inst.s, &inst.t, &inst.g, &inst.p, &inst.q)
        }),
        CheckRecord::run(id("bounded-transform"), "Ind(T(1+|T|²)^{-1/2}) = Ind(T)", Comparison::Equal, cfg.tol_or(1e-10), || -> Checked {
            let c = ok(&corner)?;
            let bt = fredholm::bounded_transform(&inst.t, c)?;
            Ok((fredholm::index(&bt, c)?.index, fredholm::index(&inst.t, c)?.index))
        }),
    ];
    let mut r = rng(cfg, 100 + i);
    out.push(CheckRecord::run(id("perturbation"), "Ind(T + A) = Ind(T) for ‖A‖ below the gap", Comparison::Equal, cfg.tol_or(1e-10), || -> Checked {
        let c = ok(&corner)?;
        let gap = smallest_nonzero_singular(&inst.t, 1e-6)?;
        let a = random_corner_operator(&mut r, &inst.p, &inst.q, if gap.is_finite() { gap / 4.0 } else { 1.0 })?;
        Ok((fredholm::index(&(&inst.t + &a), c)?.index, fredholm::index(&inst.t, c)?.index))
    }));
    let mut r = rng(cfg, 200 + i);
    out.push(CheckRecord::run(id("continuity"), "‖bt(T) − bt(T+A)‖ ≤ ‖A‖", Comparison::AtMost, cfg.tol_or(1e-12), || -> Checked {
        let c = ok(&corner)?;
        let size = 10f64.powf(r.random_range(-3.0..1.0));
        let a = random_corner_operator(&mut r, &inst.p, &inst.q, size)?;
        let excess = fredholm::transform_continuity_check(&inst.t, &a, c)?;
        Ok((excess + a.norm(), a.norm()))
    }));
    out
}

fn mckean_singer_checks(cfg: &SuiteConfig, i: u64) -> Vec<CheckRecord> {
    let seed = instance_seed(cfg, i);
    let inst = random_triple(cfg, i, cfg.model.max_dim);
    let mut out = Vec::new();
    let fs: [(&str, Weight); 2] = [("resolvent", |x| (1.0 + x * x).powf(-1.5)), ("gaussian", |x| (-x * x).exp())];
    for (name, f) in fs {
        out.push(CheckRecord::run(
            format!("mckean-singer/{name}/{seed}"),
            "Ind(D⁺) = τ(γ f(D)) / f(0)",
            Comparison::Equal,
            cfg.tol_or(1e-9),
            || -> Checked {
                let t = &ok(&inst)?.triple;
                fredholm::mckean_singer(&t.d, &t.gamma, f)
            },
        ));
    }
    for a in [0.0, 1.0] {
        out.push(CheckRecord::run(
            format!("mckean-singer/compressed-a{a}/{seed}"),
            "Ind(pD⁺p) = (1+a)^{n/2} τ(γp(p + a + (pDp)²)^{-n/2})",
            Comparison::Equal,
            cfg.tol_or(1e-8),
            || -> Checked {
                let m = ok(&inst)?;
                fredholm::mckean_singer_compressed(&m.triple, &m.p, 3.0, a)
            },
        ));
    }
    out
}

fn doubling_checks(cfg: &SuiteConfig, i: u64) -> Vec<CheckRecord> {
    let seed = instance_seed(cfg, i);
    let quad = &cfg.quadrature;
    let doubled = random_triple(cfg, i, cfg.model.max_dim.min(16)).and_then(|m| DoubledTriple::new(&m.triple, &m.p));
    let n = |d: &DoubledTriple| d.base.q + 2.0;
    vec![
        CheckRecord::run(format!("doubling/square/{seed}"), "D̃²_{w,s} = 1⊗D_w² + 2s(1−w)σ3σ2⊗[D,p] + s²", Comparison::Equal, cfg.tol_or(1e-10), || -> Checked {
            let d = ok(&doubled)?;
            let worst = [(0.0, 0.7), (0.5, -1.3), (1.0, 2.1)].iter().map(|&(w, s)| d.square_identity_defect(w, s)).fold(0.0, f64::max);
            Ok((worst, 0.0))
        }),
        CheckRecord::run(format!("doubling/a-constant/{seed}"), "a(w) is independent of w", Comparison::Equal, cfg.tol_or(1e-6), || -> Checked {
            let d = ok(&doubled)?;
            let vals = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&w| d.a_of_w(w, n(d), quad)).collect::<std::result::Result<Vec<_>, _>>()?;
            let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            Ok((hi - lo, 0.0))
        }),
        CheckRecord::run(format!("doubling/key-identity/{seed}"), "Ind(pD⁺p) C_{n/2} = a(0) + ½∫τ(γ(1+D²+s²)^{-n/2}) ds", Comparison::Equal, cfg.tol_or(1e-6), || -> Checked {
            let d = ok(&doubled)?;
            d.key_identity_check(n(d), quad)
        }),
    ]
}

fn rel(a: &BlockOperator, b: &BlockOperator) -> f64 {
    (a - b).fro_max() / b.fro_max().max(1e-300)
}

fn psido_checks(cfg: &SuiteConfig) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = (0..cfg.instances as u64)
        .into_par_iter()
        .map(|i| {
            let seed = instance_seed(cfg, i);
            let mut r = rng(cfg, 300 + i);
            let s = r.random_range(0.1..3.0);
            let lambda = C::new(cfg.quadrature.contour_a, r.random_range(-5.0..5.0));
            let inst = random_triple(cfg, i, 12);
            let doubled = ok(&inst).and_then(|m| DoubledTriple::new(&m.triple, &m.p));
            let mut recs = vec![
                CheckRecord::run(format!("psido/resolvent-expansion/{seed}"), "R̃ = Σ_{j≤3}(RX)^j R + (RX)^4 R̃", Comparison::Equal, cfg.tol_or(1e-9), || -> Checked {
                    let d = ok(&doubled)?;
                    let (terms, rem) = psido::resolvent_expand(d, s, lambda, 3)?;
                    let full = psido::full_doubled_resolvent(d, s, lambda)?;
                    let sum = terms.iter().fold(rem, |acc, t| &acc + t);
                    Ok((rel(&sum, &full), 0.0))
                }),
                CheckRecord::run(format!("psido/odd-supertrace/{seed}"), "Sτ((1⊗(2p−1))(RX)^m R) = 0 for odd m", Comparison::Equal, cfg.tol_or(1e-12), || -> Checked {
                    let d = ok(&doubled)?;
                    let (terms, _) = psido::resolvent_expand(d, s, lambda, 3)?;
                    let y = d.lift(&linalg::eye(2), d.two_p_minus_one());
                    let worst = [1, 3].iter().map(|&m| d.supertrace(&(&y * &terms[m])).norm()).fold(0.0, f64::max);
                    Ok((worst, 0.0))
                }),
                CheckRecord::run(format!("psido/move-right/{seed}"), "a₀RB₁R⋯B_mR = Σ_k C(k) a₀B₁^{(k₁)}⋯B_m^{(k_m)}R^{|k|+m+1} + remainder", Comparison::Equal, cfg.tol_or(1e-9), || -> Checked {
                    let d = ok(&doubled)?;
                    let t = &d.base;
                    let a = &t.generators[t.generators.len() - 1];
                    let a0 = &t.gamma * a;
                    let factors = [t.commutator(a), t.commutator(&d.p)];
                    let (terms, rem) = psido::move_right_expand(t, &a0, &factors, s, lambda, 5)?;
                    let assembled = &psido::assemble_terms(t, &terms, s, lambda)? + &rem;
                    Ok((rel(&assembled, &psido::direct_word(t, &a0, &factors, s, lambda)?), 0.0))
                }),
            ];
            let z = C::new(r.random_range(1.25..3.0), r.random_range(-1.0..1.0));
            let k = r.random_range(0..=3u32);
            recs.push(CheckRecord::run(format!("psido/cauchy/{seed}"), "(1/2πi)∫λ^{-z}R^{k+1}dλ = (−1)^k Γ(z+k)/(Γ(z)k!) x^{-z-k}", Comparison::Equal, cfg.tol_or(1e-6), || -> Checked {
                let m = ok(&inst)?;
                let (num, closed) = psido::cauchy_power_integral(&m.triple.d, 1.0 + s * s, z, k, &cfg.quadrature)?;
                Ok((rel(&num, &closed), 0.0))
            }));
            let c = r.random_range(0.5..5.0);
            let m = 2 * r.random_range(0..=2u32);
            let a = (m as f64 + 1.0) / 2.0 + r.random_range(0.3..3.0);
            recs.push(CheckRecord::run(format!("psido/laplace/{seed}"), "∫₀^∞(2s)^m(c+s²)^{-A}ds in Gamma form", Comparison::Equal, cfg.tol_or(1e-9), || -> Checked {
                let (num, closed) = psido::s_integral_gamma(c, m, a)?;
                Ok(((num - closed).abs() / closed.abs(), 0.0))
            }));
            recs
        })
        .collect::<Vec<_>>()
        .concat();
    out.extend(constant_checks(cfg));
    out
}

fn constant_checks(cfg: &SuiteConfig) -> Vec<CheckRecord> {
    let exact = |b: bool| -> Checked { Ok((if b { 0.0 } else { 1.0 }, 0.0)) };
    let mut out = vec![
        CheckRecord::run("constants/c-of-k", "C(k) = (|k|+m)! α(k)", Comparison::Equal, 0.0, || {
            exact((1..=6usize).all(|m| {
                constants::multi_indices(m, (8 - m) as u32).iter().all(|k| {
                    let total = k.iter().sum::<u32>() as i128 + m as i128;
                    constants::c_of_k(k) == constants::alpha(k) * Rational::from_integer((1..=total).product())
                })
            }))
        }),
        CheckRecord::run("constants/sigma", "Π_{j<n}(z+j) = Σ_j σ_{n,j} z^j", Comparison::Equal, 0.0, || {
            exact((1..=8u32).all(|n| {
                let sig = constants::sigma_elementary(n);
                // evaluate both sides at z = 2
                let lhs: i128 = (0..n as i128).map(|j| 2 + j).product();
                let rhs: i128 = sig.iter().enumerate().map(|(j, &s)| s * 2i128.pow(j as u32 + 1)).sum();
                lhs == rhs
            }))
        }),
        CheckRecord::run("constants/eta", "(m+1)/2 · η_{m+2} = η_m", Comparison::Equal, 0.0, || {
            exact((0..=18u32).step_by(2).all(|m| Rational::new(m as i128 + 1, 2) * constants::eta(m + 2) == constants::eta(m)))
        }),
    ];
    out.push(CheckRecord::run("constants/legendre", "2^{m−1}Γ((m+1)/2) = √π Γ(m)/Γ(m/2)", Comparison::Equal, cfg.tol_or(1e-12), || -> Checked {
        Ok(((0..=20).map(constants::legendre_duplication_check).fold(0.0, f64::max), 0.0))
    }));
    out
}

/// Random element (x + γxγ)/2 of the even part of the algebra.
fn even_element(r: &mut ChaCha8Rng, t: &EvenTriple) -> std::result::Result<BlockOperator, Error> {
    let x = BlockOperator::from_fn(&t.algebra, |_, n| random_matrix(r, n, n))?;
    Ok((&x + &(&(&t.gamma * &x) * &t.gamma)).scale_re(0.5))
}

fn cocycle_checks(cfg: &SuiteConfig, i: u64) -> Vec<CheckRecord> {
    let seed = instance_seed(cfg, i);
    let inst = random_triple(cfg, i, cfg.model.max_dim.min(8));
    let engine = ok(&inst).and_then(|m| ResolventCocycle::new(&m.triple, cfg.quadrature.clone()));
    let mut r = rng(cfg, 400 + i);
    let args: std::result::Result<Vec<BlockOperator>, Error> =
        ok(&inst).and_then(|m| (0..4).map(|_| even_element(&mut r, &m.triple)).collect());
    let mut out = Vec::new();
    for m in [0usize, 2] {
        for rr in [0.75, 1.0, 1.5] {
            out.push(CheckRecord::run(format!("cocycle/bB-m{m}-r{rr}/{seed}"), "Bφ^r_{m+2} + bφ^r_m = 0", Comparison::Equal, cfg.tol_or(1e-5), || -> Checked {
                let e = ok(&engine)?;
                let a = ok(&args)?;
                Ok((bb_cocycle_check(e, m, C::new(rr, 0.0), &a[..m + 2])?.norm(), 0.0))
            }));
        }
    }
    out.push(CheckRecord::run(format!("cocycle/residue-phi0/{seed}"), "φ₀(a₀) = τ_{−1}(γa₀)", Comparison::Equal, cfg.tol_or(1e-10), || -> Checked {
        let m = ok(&inst)?;
        let a = ok(&args)?;
        let data = MatrixResidues::new(&m.triple)?;
        let phi0 = cocycle::residue_cocycle(&data, 0, &a[..1], 2)?;
        Ok((phi0.re, (&m.triple.gamma * &a[0]).trace().re))
    }));
    out
}

fn zeta_checks(cfg: &SuiteConfig) -> Vec<CheckRecord> {
    let theta1 = |t: f64| C::new(zeta::theta(t), 0.0);
    let theta2 = |t: f64| C::new(zeta::theta(t).powi(2), 0.0);
    let cont = |h: &dyn Fn(f64) -> C, menu: &[f64], split: f64| MellinContinuation::new(h, menu, DEFAULT_FIT_WINDOW, split);
    let mut out = vec![
        CheckRecord::run("zeta/circle-pole", "res_{s=1/2} Σ_n(1+n²)^{-s} = 1", Comparison::Equal, cfg.tol_or(1e-8), || -> Checked {
            let c = cont(&theta1, &[-0.5], 1.0)?;
            Ok((LaurentData::from_mellin(&c, 0.5, C::new(0.0, 0.0), 0)?.tau_j(0)?.re, 1.0))
        }),
        CheckRecord::run("zeta/torus-pole", "res_{s=1} Σ_{n∈ℤ²}(1+|n|²)^{-s} = π", Comparison::Equal, cfg.tol_or(1e-8), || -> Checked {
            let c = cont(&theta2, &[-1.0, 0.0], 1.0)?;
            Ok((LaurentData::from_mellin(&c, 1.0, C::new(0.0, 0.0), 0)?.tau_j(0)?.re, std::f64::consts::PI))
        }),
        CheckRecord::run("zeta/direct-sum", "continued ζ agrees with Σ_n(1+n²)^{-s} for Re s > ½", Comparison::Equal, cfg.tol_or(1e-9), || -> Checked {
            let c = cont(&theta1, &[-0.5], 1.0)?;
            let s = C::new(2.5, 0.3);
            let direct: C = (-20000i64..=20000).map(|n| C::new(1.0 + (n * n) as f64, 0.0).powc(-s)).sum();
            Ok(((c.zeta(s) - direct).norm(), 0.0))
        }),
        CheckRecord::run("zeta/split-independence", "continuation independent of the split point", Comparison::Equal, cfg.tol_or(1e-9), || -> Checked {
            let a = cont(&theta2, &[-1.0, 0.0], 1.0)?;
            let b = cont(&theta2, &[-1.0, 0.0], 2.0)?;
            let worst = [C::new(0.3, 0.2), C::new(-0.7, 0.0), C::new(1.6, -1.0)].iter().map(|&s| (a.zeta(s) - b.zeta(s)).norm()).fold(0.0, f64::max);
            Ok((worst, 0.0))
        }),
        // spectral convergence in the cutoff: ~5e-6 at Λ = 8, ~3e-8 at Λ = 16
        CheckRecord::run("zeta/torus-curvature", "grid mean of tr γ(2p−1)[D,p]² = continuum value", Comparison::Equal, cfg.tol_or(1e-6), || -> Checked {
            let m = ncindex::models::TorusModel::commutative(cfg.model.cutoff)?;
            Ok((m.curvature_mean(m.l()).re, m.curvature_mean_continuum().re))
        }),
    ];
    for i in 0..cfg.instances.min(5) as u64 {
        let seed = instance_seed(cfg, i);
        out.push(CheckRecord::run(format!("zeta/matrix-entire/{seed}"), "ζ_b entire at matrix scale: τ_j = 0 for j ≥ 0", Comparison::Equal, cfg.tol_or(1e-10), || -> Checked {
            let m = random_triple(cfg, i, 12)?;
            let data = MatrixResidues::new(&m.triple)?;
            let d = ncindex::cocycle::ResidueData::laurent(&data, std::slice::from_ref(&m.p), &[], 1)?;
            let worst = (0..=1).map(|j| d.tau_j(j).map(|v| v.norm())).collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((worst.into_iter().fold(0.0, f64::max), 0.0))
        }));
    }
    out
}

fn index_theorem_checks(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let quad: &QuadratureSpec = &cfg.quadrature;
    let seed = cfg.seed;
    let built = models::build(&cfg.model, seed)?;
    Ok(match built {
        Built::Matrix(inst) => {
            let expected = fredholm::compressed_index(&inst.triple, &inst.p)?.index;
            let doubled = DoubledTriple::new(&inst.triple, &inst.p)?;
            let mut out = vec![CheckRecord::run(format!("index-theorem/{}/claimed", inst.id), "kernel count = constructed index", Comparison::Equal, 0.0, || -> Checked {
                Ok((expected, inst.expected_index))
            })];
            for r in [0.75, 1.0, 1.5] {
                out.push(CheckRecord::run(
                    format!("index-theorem/{}/r={r}", inst.id),
                    "(Σ_m φ^r_m(Ch_m(p)) + remainder) / C_{q/2+r} = Ind(pD⁺p)",
                    Comparison::Equal,
                    cfg.tol_or(1e-5),
                    || -> Checked { Ok((matrix_pairing_row(&doubled, r, quad)?.ratio, expected)) },
                ));
            }
            out
        }
        Built::Torus(m) => {
            let label = format!("index-theorem/torus-L{}", m.cutoff);
            let count = m.kernel_count()?;
            vec![
                CheckRecord::run(format!("{label}/pairing"), "Ind(pD⁺p) = Σ_m φ_m(Ch_m(p))", Comparison::Equal, cfg.tol_or(0.05), || -> Checked {
                    Ok((m.residue_pairing()?.re, count.index as f64))
                }),
                CheckRecord::run(format!("{label}/zeta-sum"), "residue of the assembled zeta sum = cocycle pairing", Comparison::Equal, cfg.tol_or(1e-8), || -> Checked {
                    Ok((m.zeta_sum_residue()?.re, m.residue_pairing()?.re))
                }),
            ]
        }
        Built::Circle(m) => {
            let c = cfg.model.projection;
            vec![CheckRecord::run(format!("index-theorem/circle-L{}/pairing", m.cutoff), "Ind(pD⁺p) = φ₀(p) = τ_{−1}(γp)", Comparison::Equal, cfg.tol_or(1e-6), || -> Checked {
                Ok((m.residue_pairing(c)?.0.re, m.index(c)?))
            })]
        }
    })
}

/// Pairing summary for `pair`: one record comparing the pairing with the index.
pub fn pair(cfg: &SuiteConfig) -> Result<Report> {
    cfg.validate()?;
    let mut c = cfg.clone();
    c.suite = Some(Suite::IndexTheorem);
    let mut rep = run_suite(&c)?;
    rep.suite = format!("pair-{}", model_label(cfg));
    Ok(rep)
}

pub fn model_label(cfg: &SuiteConfig) -> String {
    match cfg.model.id {
        ModelKind::Random => format!("random-{}", cfg.seed),
        ModelKind::Constructed => format!("constructed-{}", cfg.seed),
        ModelKind::Torus => format!("torus-L{}", cfg.model.cutoff),
        ModelKind::Circle => format!("circle-L{}", cfg.model.cutoff),
    }
}

/// Laurent data at the critical point of w ↦ ζ_b(w + offset) for a word b on the model.
pub fn zeta_data(cfg: &SuiteConfig, word: &str, offset: f64, max_j: usize) -> Result<LaurentData> {
    cfg.validate()?;
    let built = models::build(&cfg.model, cfg.seed)?;
    let mut data = match &built {
        Built::Matrix(inst) => {
            let b = models::matrix_word(inst, word)?;
            let dec = inst.triple.d.herm_eig()?;
            let crit = C::new((1.0 - inst.triple.q) / 2.0, 0.0);
            let mut d = LaurentData::from_function(|w| zeta::zeta_eval_matrix(&dec, &b, w + offset), crit, max_j, 0.5, 64)?;
            d.model_id = inst.id.clone();
            d
        }
        Built::Torus(m) => flat_zeta(&m.residues(), &m.projection_field(m.l()), word, offset, max_j)?,
        Built::Circle(m) => flat_zeta(&m.residues(), &m.constant_projection(cfg.model.projection), word, offset, max_j)?,
    };
    data.b_word = word.to_string();
    Ok(data)
}

fn flat_zeta(data: &ncindex::models::FlatResidues, p: &ncindex::models::GridField, word: &str, offset: f64, max_j: usize) -> Result<LaurentData> {
    let mean = models::flat_word_mean(data, p, word)?;
    let cont = data.continuation(mean, 1.0)?;
    let crit = C::new((1.0 - data.q()) / 2.0, 0.0);
    let mut d = LaurentData::from_mellin(&cont, offset, crit, max_j)?;
    d.model_id = data.model_id.clone();
    Ok(d)
}

/// c_norm helper shared with the table writer.
pub fn c_norm(q: f64, r: f64) -> f64 {
    special::c_norm(C::new(q / 2.0 + r, 0.0)).re
}

/// Borrows a shared build result inside a check, re-raising a build failure per check.
fn ok<T>(r: &std::result::Result<T, Error>) -> std::result::Result<&T, Error> {
    r.as_ref().map_err(|e| Error::Model(e.to_string()))
}
