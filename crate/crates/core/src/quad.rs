//! Globally adaptive Gauss-Kronrod (7-15) quadrature for vector-valued
//! complex integrands on a finite real interval.

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: Vec<Complex64>,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-14, rel_tol: 1e-13, max_intervals: 4000 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, crate::linalg::nan_max)
}

fn gk15<F: FnMut(f64) -> Vec<Complex64>>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let dim = fc.len();
    let mut kron: Vec<Complex64> = fc.iter().map(|z| z * WGK[7]).collect();
    let mut gauss: Vec<Complex64> = fc.iter().map(|z| z * WG[3]).collect();
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            kron[d] += s * WGK[j];
            if j % 2 == 1 {
                gauss[d] += s * WG[j / 2];
            }
        }
    }
    let value: Vec<Complex64> = kron.iter().map(|z| z * h).collect();
    let error = kron
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * h).norm())
        .fold(0.0, crate::linalg::nan_max);
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, splitting into `initial` pieces first.
pub fn integrate<F: FnMut(f64) -> Vec<Complex64>>(
    mut f: F,
    a: f64,
    b: f64,
    initial: usize,
    cfg: &QuadConfig,
) -> QuadResult {
    let n0 = initial.max(1);
    let mut segs: Vec<Segment> = (0..n0)
        .map(|i| {
            let x0 = a + (b - a) * i as f64 / n0 as f64;
            let x1 = a + (b - a) * (i + 1) as f64 / n0 as f64;
            gk15(&mut f, x0, x1)
        })
        .collect();
    let mut evaluations = 15 * n0;
    loop {
        let dim = segs[0].value.len();
        let mut total = vec![Complex64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for s in &segs {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            err += s.error;
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * max_norm(&total));
        if err <= target || segs.len() >= cfg.max_intervals {
            return QuadResult { value: total, error: err, evaluations, converged: err <= target };
        }
        let worst = (0..segs.len())
            .max_by(|&i, &j| segs[i].error.total_cmp(&segs[j].error))
            .unwrap();
        let s = segs.swap_remove(worst);
        let m = 0.5 * (s.a + s.b);
        segs.push(gk15(&mut f, s.a, m));
        segs.push(gk15(&mut f, m, s.b));
        evaluations += 30;
    }
}
