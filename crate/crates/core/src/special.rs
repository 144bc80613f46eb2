//! Complex Gamma-function family: `ln Gamma` and polygammas by upward
//! recurrence plus the Stirling asymptotic series, and the entire function
//! `1/Gamma`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Bernoulli numbers `B_2, B_4, ..., B_20`.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Real part threshold above which the asymptotic series is used.
pub const ASYMPTOTIC_RE: f64 = 10.0;

/// Number of unit shifts needed to bring `Re z` to at least `ASYMPTOTIC_RE`.
pub fn shift_count(z: Complex64) -> usize {
    if z.re >= ASYMPTOTIC_RE {
        0
    } else {
        (ASYMPTOTIC_RE - z.re).ceil() as usize
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Stirling series for `ln Gamma(w)`, valid for `Re w >= ASYMPTOTIC_RE`.
pub fn ln_gamma_asymptotic(w: Complex64) -> Complex64 {
    let mut s = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln();
    let w2 = w * w;
    let mut wp = w;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let n = 2 * (k + 1);
        s += b / ((n * (n - 1)) as f64) / wp;
        wp *= w2;
    }
    s
}

/// `psi^{(m)}(w)` (with `psi^{(0)}` the digamma function) for `Re w >= ASYMPTOTIC_RE`.
pub fn polygamma_asymptotic(m: usize, w: Complex64) -> Complex64 {
    if m == 0 {
        let mut s = w.ln() - 0.5 / w;
        let w2 = w * w;
        let mut wp = w2;
        for (k, b) in BERNOULLI.iter().enumerate() {
            s -= b / (2 * (k + 1)) as f64 / wp;
            wp *= w2;
        }
        return s;
    }
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let mut s = factorial(m - 1) / w.powu(m as u32) + factorial(m) / (2.0 * w.powu(m as u32 + 1));
    for (k, b) in BERNOULLI.iter().enumerate() {
        let n = 2 * (k + 1);
        s += b * factorial(n + m - 1) / factorial(n) / w.powu((n + m) as u32);
    }
    sign * s
}

/// `psi^{(m)}(z)` for any `z` off the poles.
pub fn polygamma(m: usize, z: Complex64) -> Complex64 {
    let shift = shift_count(z);
    let mut s = polygamma_asymptotic(m, z + shift as f64);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mf = factorial(m);
    for j in 0..shift {
        s -= sign * mf / (z + j as f64).powu(m as u32 + 1);
    }
    s
}

/// `1/Gamma(z)`, entire; exact zeros at non-positive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    let shift = shift_count(z);
    let mut p = Complex64::new(1.0, 0.0);
    for j in 0..shift {
        p *= z + j as f64;
    }
    p * (-ln_gamma_asymptotic(z + shift as f64)).exp()
}

pub fn gamma(z: Complex64) -> Complex64 {
    1.0 / rgamma(z)
}

/// Taylor coefficients of `1/Gamma(w + x)` in `x` up to `x^order`.
pub fn rgamma_taylor(w: Complex64, order: usize) -> Vec<Complex64> {
    let shift = shift_count(w);
    let ws = w + shift as f64;
    // P(x) = prod_{j<shift} (w + j + x)
    let mut p = vec![Complex64::new(0.0, 0.0); order + 1];
    p[0] = Complex64::new(1.0, 0.0);
    for j in 0..shift {
        let a = w + j as f64;
        for k in (0..=order).rev() {
            let lower = if k > 0 { p[k - 1] } else { Complex64::new(0.0, 0.0) };
            p[k] = p[k] * a + lower;
        }
    }
    // exp(-(ln Gamma(ws + x) - ln Gamma(ws))) = exp(-sum_{m>=1} psi^{(m-1)}(ws) x^m / m!)
    let mut g = vec![Complex64::new(0.0, 0.0); order + 1];
    for m in 1..=order {
        g[m] = -polygamma(m - 1, ws) / factorial(m);
    }
    let e = exp_series(&g);
    let base = (-ln_gamma_asymptotic(ws)).exp();
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    for i in 0..=order {
        for j in 0..=order - i {
            out[i + j] += p[i] * e[j] * base;
        }
    }
    out
}

/// Power series `exp(g(x))` for `g(0) = 0`, truncated at the length of `g`.
fn exp_series(g: &[Complex64]) -> Vec<Complex64> {
    let n = g.len();
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[0] = Complex64::new(1.0, 0.0);
    // e' = g' e  =>  k e_k = sum_{j=1}^{k} j g_j e_{k-j}
    for k in 1..n {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 1..=k {
            s += g[j] * e[k - j] * j as f64;
        }
        e[k] = s / k as f64;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Lanczos approximation (g = 7, n = 9), an independent reference.
    fn lanczos_gamma(z: Complex64) -> Complex64 {
        const G: f64 = 7.0;
        const COEF: [f64; 9] = [
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
        if z.re < 0.5 {
            return PI / ((PI * z).sin() * lanczos_gamma(1.0 - z));
        }
        let z = z - 1.0;
        let mut x = c(COEF[0], 0.0);
        for (i, &ci) in COEF.iter().enumerate().skip(1) {
            x += ci / (z + i as f64);
        }
        let t = z + G + 0.5;
        (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
    }

    #[test]
    fn known_values() {
        assert!((rgamma(c(1.0, 0.0)) - 1.0).norm() < 1e-15);
        assert!((rgamma(c(2.5, 0.0)) - 2.0 / PI.sqrt() / 1.5).norm() < 1e-14);
        assert!((gamma(c(1.5, 0.0)) - PI.sqrt() / 2.0).norm() < 1e-14);
        assert!(rgamma(c(-3.0, 0.0)).norm() < 1e-14);
        assert!((polygamma(0, c(1.0, 0.0)) + 0.577_215_664_901_532_9).norm() < 1e-14);
        assert!((polygamma(1, c(1.0, 0.0)) - PI * PI / 6.0).norm() < 1e-13);
    }

    #[test]
    fn matches_lanczos_on_strip() {
        for i in 0..40 {
            for j in 0..10 {
                let z = c(-5.0 + 0.2613 * i as f64, -5.0 + 1.0371 * j as f64);
                let near = (z.re.round() - z.re).abs() < 0.1 && z.im.abs() < 0.1 && z.re < 0.5;
                if near {
                    continue;
                }
                let a = rgamma(z);
                let b = 1.0 / lanczos_gamma(z);
                assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300) + 1e-300, "z = {z}");
            }
        }
    }

    #[test]
    fn taylor_coefficients_match_differences() {
        let w = c(0.3, 0.7);
        let t = rgamma_taylor(w, 3);
        assert!((t[0] - rgamma(w)).norm() < 1e-14);
        let h = 1e-4;
        let d1 = (rgamma(w + h) - rgamma(w - h)) / (2.0 * h);
        assert!((t[1] - d1).norm() < 1e-7);
        // Near a pole of Gamma: 1/Gamma(-1 + x) = -x + O(x^2).
        let t = rgamma_taylor(c(-1.0, 0.0), 2);
        assert!(t[0].norm() < 1e-14);
        assert!((t[1] + 1.0).norm() < 1e-13);
    }
}
