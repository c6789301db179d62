//! Gamma-type special functions on the complex plane.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(z) (principal branch for Re z ≥ ½, continued by reflection elsewhere).
pub fn ln_gamma(z: C) -> C {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        C::new(PI.ln(), 0.0) - (z * PI).sin().ln() - ln_gamma(C::new(1.0, 0.0) - z)
    } else {
        let z = z - 1.0;
        let mut x = C::new(LANCZOS[0], 0.0);
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            x += *c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        C::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + x.ln()
    }
}

pub fn gamma(z: C) -> C {
    if z.re < 0.5 {
        PI / ((z * PI).sin() * gamma(C::new(1.0, 0.0) - z))
    } else {
        ln_gamma(z).exp()
    }
}

/// 1/Γ(z), entire; exactly zero at the non-positive integers.
pub fn rgamma(z: C) -> C {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return C::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (z * PI).sin() * gamma(C::new(1.0, 0.0) - z) / PI
    } else {
        (-ln_gamma(z)).exp()
    }
}

/// Lower incomplete gamma γ(a, x) = ∫₀ˣ t^{a−1} e^{−t} dt, continued meromorphically in `a`
/// through its series Σ (−1)^k x^{a+k} / (k! (a+k)). Intended for moderate x (≲ 5).
pub fn lower_gamma_series(a: C, x: f64) -> C {
    let lx = x.ln();
    let mut sum = C::new(0.0, 0.0);
    let mut coef = 1.0; // (−1)^k x^k / k!
    for k in 0..200 {
        let term = coef / (a + k as f64);
        sum += term;
        if k > 2 && term.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        coef *= -x / (k as f64 + 1.0);
    }
    (a * lx).exp() * sum
}

/// C_{h} = Γ(½)Γ(h−½)/Γ(h) = ∫_ℝ (1+s²)^{−h} ds.
pub fn c_norm(h: C) -> C {
    (ln_gamma(C::new(0.5, 0.0)) + ln_gamma(h - 0.5) - ln_gamma(h)).exp()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

pub fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_statrs_on_reals() {
        for &x in &[0.1, 0.5, 1.0, 1.5, 2.3, 5.5, 10.25, 17.0] {
            let ours = gamma(C::new(x, 0.0)).re;
            let theirs = statrs::function::gamma::gamma(x);
            assert!((ours - theirs).abs() <= 1e-13 * theirs.abs(), "x={x}");
        }
        let g = gamma(C::new(-0.5, 0.0)).re;
        assert!((g + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gamma_recurrence_complex() {
        let z = C::new(0.7, 1.3);
        let lhs = gamma(z + 1.0);
        let rhs = z * gamma(z);
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm());
        assert_eq!(rgamma(C::new(-3.0, 0.0)), C::new(0.0, 0.0));
    }

    #[test]
    fn lower_gamma_integer_case() {
        // γ(1, x) = 1 − e^{−x}
        for &x in &[0.5, 1.0, 2.0] {
            let v = lower_gamma_series(C::new(1.0, 0.0), x);
            assert!((v.re - (1.0 - (-x).exp())).abs() < 1e-14);
        }
        // γ(2, x) = 1 − (1+x)e^{−x}
        let v = lower_gamma_series(C::new(2.0, 0.0), 1.5);
        assert!((v.re - (1.0 - 2.5 * (-1.5f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn c_norm_examples() {
        assert!((c_norm(C::new(1.5, 0.0)).re - 2.0).abs() < 1e-14);
        assert!((c_norm(C::new(1.0, 0.0)).re - PI).abs() < 1e-14);
    }
}
