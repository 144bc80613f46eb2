//! Numerical checks across a wall and the machine-readable verification report.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::linalg::{frac, nan_max, CMatrix, Q};
use crate::series::{c_battery, evaluate_gamma, EvaluationPoint, TruncationPolicy};
use crate::toric::{canonical_lift, fmt_cone, Cone};
use crate::wall::{
    default_radius, deformed_u, k_basis, left_pole_sum, localize_polynomial, mb_continuation,
    numeric_residue, oracle_continuation, pole_catalogue, pole_coefficients, right_pole_sum,
    select_endpoints, term_with, transform_at, transform_limit, ContourSpec, Deformation, KBasis,
    PathSpec, Provenance, WallSetup,
};

pub const SCHEMA_VERSION: u32 = 1;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn rel_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, nan_max);
    let den = a.iter().chain(b).map(|x| x.norm()).fold(0.0, nan_max);
    if den == 0.0 { num } else { num / den }
}

/// Values below this norm are compared absolutely in the end-to-end check.
const END_TO_END_FLOOR: f64 = 1e-8;

fn floored_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, nan_max);
    let den = a.iter().chain(b).map(|x| x.norm()).fold(0.0, nan_max);
    num / den.max(END_TO_END_FLOOR)
}

fn rel_elem(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    rel_dev(&a.coords, &b.coords)
}

fn fmt_l(l: &[Q]) -> String {
    format!("({})", l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

/// Matrix entries split into real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixEntries {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixEntries {
    pub fn new(m: &CMatrix, rows: Vec<String>, cols: Vec<String>) -> Self {
        let part = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.rows).map(|i| (0..m.cols).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixEntries { rows, cols, re: part(|z| z.re), im: part(|z| z.im) }
    }
}

fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub diagnostics: Vec<String>,
}

impl Check {
    /// Passes when `value < tolerance` (NaN fails).
    pub fn below(name: &str, value: f64, tolerance: f64, diagnostics: Vec<String>) -> Self {
        Check { name: name.into(), passed: value < tolerance, value, tolerance, diagnostics }
    }

    /// Passes when `value > tolerance`.
    pub fn above(name: &str, value: f64, tolerance: f64, diagnostics: Vec<String>) -> Self {
        Check { name: name.into(), passed: value > tolerance, value, tolerance, diagnostics }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub eps_samples: Vec<f64>,
    pub contour_eps: Vec<f64>,
    pub y_abs: f64,
    pub amplitude: Option<f64>,
    pub contour: ContourSpec,
    /// Degree bound of the minus-side series at `x-`.
    pub truncation: u32,
    pub c_depth: usize,
    pub generator_bound: u32,
    pub laurent_samples: usize,
    pub laurent_radius: Option<f64>,
    pub matrix_tol: f64,
    pub end_to_end_tol: f64,
    pub principal_tol: f64,
    pub contour_plus_tol: f64,
    pub contour_minus_tol: f64,
    pub det_min: f64,
    /// Also run the deformed contour checks.
    pub contour_checks: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            eps_samples: vec![1.23e-2, 2.71e-2, 4.7e-3],
            contour_eps: vec![1e-2, 1e-3],
            y_abs: 0.1,
            amplitude: None,
            contour: ContourSpec::default(),
            truncation: 120,
            c_depth: 2,
            generator_bound: 12,
            laurent_samples: 32,
            laurent_radius: None,
            matrix_tol: 1e-10,
            end_to_end_tol: 1e-6,
            principal_tol: 1e-9,
            contour_plus_tol: 1e-7,
            contour_minus_tol: 1e-6,
            det_min: 1e-6,
            contour_checks: true,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            self.matrix_tol,
            self.end_to_end_tol,
            self.principal_tol,
            self.contour_plus_tol,
            self.contour_minus_tol,
            self.det_min,
            self.contour.t_max,
            self.contour.quad.rel_tol,
        ];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        for list in [&self.eps_samples, &self.contour_eps] {
            if list.iter().any(|e| *e == 0.0 || !e.is_finite()) {
                return Err(Error::InvalidInput("eps samples must be finite and nonzero".into()));
            }
            for (i, a) in list.iter().enumerate() {
                if list[..i].contains(a) {
                    return Err(Error::InvalidInput(format!("eps sample {a} repeated")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureMeta {
    pub name: String,
    pub points: Vec<Vec<i64>>,
    pub plus: Vec<String>,
    pub minus: Vec<String>,
    pub h: Vec<i64>,
    pub i_plus: Vec<usize>,
    pub i_minus: Vec<usize>,
    pub dim_plus: usize,
    pub dim_minus: usize,
    pub deformation: Vec<f64>,
}

impl FixtureMeta {
    pub fn new(name: &str, s: &WallSetup) -> Self {
        FixtureMeta {
            name: name.into(),
            points: s.data.points.clone(),
            plus: s.plus.maximal_cones.iter().map(|c| fmt_cone(c)).collect(),
            minus: s.minus.maximal_cones.iter().map(|c| fmt_cone(c)).collect(),
            h: s.circuit.h.clone(),
            i_plus: s.circuit.i_plus.iter().map(|i| i + 1).collect(),
            i_minus: s.circuit.i_minus.iter().map(|i| i + 1).collect(),
            dim_plus: s.coh_plus.total_dim(),
            dim_minus: s.coh_minus.total_dim(),
            deformation: Deformation::for_circuit(&s.circuit).offsets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixSample {
    pub eps: f64,
    pub fm: MatrixEntries,
    pub ac: MatrixEntries,
    pub deviation: f64,
    pub det_fm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitMatrices {
    pub fm: MatrixEntries,
    pub ac: MatrixEntries,
    pub deviation: f64,
    pub fm_principal_part: f64,
    pub ac_principal_part: f64,
    pub radius: f64,
    pub samples: usize,
    pub det_fm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndToEnd {
    pub c: Vec<i64>,
    pub generators: Vec<String>,
    pub oracle: Vec<[f64; 2]>,
    pub transformed: Vec<[f64; 2]>,
    pub deviation: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourCheck {
    pub c: Vec<i64>,
    pub sector: String,
    pub generator: String,
    pub eps: f64,
    pub s0: f64,
    pub bridged: Vec<i64>,
    pub plus_deviation: f64,
    pub minus_deviation: f64,
    /// Largest single `(k, r)` contribution to the left sum, and the norm of the sum.
    pub left_part_max: f64,
    pub left_total: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Runtimes {
    /// Wall-clock milliseconds per stage.
    pub stages: Vec<(String, f64)>,
}

impl Runtimes {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.push((name.into(), t.elapsed().as_secs_f64() * 1e3));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub fixture: FixtureMeta,
    pub config: VerifyConfig,
    pub path: PathSpec,
    pub k_basis: Vec<Vec<i64>>,
    pub samples: Vec<MatrixSample>,
    pub limit: LimitMatrices,
    pub end_to_end: Vec<EndToEnd>,
    pub contour: Vec<ContourCheck>,
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Wall-clock milliseconds per stage; excluded from determinism comparisons.
    pub runtimes: Runtimes,
}

impl VerificationReport {
    pub fn max_end_to_end(&self) -> f64 {
        self.end_to_end.iter().map(|e| e.deviation).fold(0.0, nan_max)
    }

    /// JSON without the runtime section.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("runtimes");
        }
        v
    }
}

fn sub(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix { rows: a.rows, cols: a.cols, data: a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect() }
}

fn matrix_dev(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.max_abs().max(b.max_abs());
    let d = sub(a, b).max_abs();
    if scale == 0.0 { d } else { d / scale }
}

/// Contour integral against the right sum at `x+` and the left sum at `x-`,
/// per generator of every essential sector.
pub fn contour_checks(
    s: &WallSetup,
    path: &PathSpec,
    spec: &ContourSpec,
    eps_list: &[f64],
    c_list: &[Vec<i64>],
    generator_bound: u32,
) -> Result<Vec<ContourCheck>> {
    let lnp: Vec<Complex64> = path.x_plus.iter().map(|z| z.ln()).collect();
    let lnm: Vec<Complex64> = path.x_minus.iter().map(|z| z.ln()).collect();
    let d = Deformation::for_circuit(&s.circuit);
    let mut out = Vec::new();
    for cv in c_list {
        for (g, alg) in s.coh_plus.algebras.iter().enumerate() {
            if !s.essential_plus[g] {
                continue;
            }
            for lp in s.generators(cv, g, generator_bound)? {
                for &e in eps_list {
                    let sh = d.shifts(c(e));
                    let cp = mb_continuation(alg, &s.circuit, &lp, &lnp, &sh, spec)?;
                    let rp = right_pole_sum(alg, &s.circuit, &lp, &lnp, &sh, 0)?;
                    let cm = mb_continuation(alg, &s.circuit, &lp, &lnm, &sh, spec)?;
                    let (lm, parts) = left_pole_sum(s, alg, &lp, &lnm, &sh)?;
                    out.push(ContourCheck {
                        c: cv.clone(),
                        sector: alg.sector.label(),
                        generator: fmt_l(&lp),
                        eps: e,
                        s0: cp.s0,
                        bridged: cp.bridged.clone(),
                        plus_deviation: rel_elem(&cp.value, &rp),
                        minus_deviation: rel_elem(&cm.value, &lm),
                        left_part_max: parts.iter().copied().fold(0.0, nan_max),
                        left_total: lm.norm(),
                        quadrature_error: cp.error.max(cm.error),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidueCheck {
    pub generator: String,
    pub pole: String,
    pub residue_norm: f64,
    pub expected_norm: f64,
    /// Relative deviation, or the absolute residue when zero is expected.
    pub deviation: f64,
    pub expect_zero: bool,
}

/// Small-circle residues at integers `ms` and at the first Gamma poles, at
/// deformation `eps`, for the generator of every essential sector at `c = 0`.
pub fn residue_checks(s: &WallSetup, path: &PathSpec, eps: f64, ms: &[i64]) -> Result<Vec<ResidueCheck>> {
    let lnx: Vec<Complex64> = path.x_plus.iter().map(|z| z.ln()).collect();
    let sh = Deformation::for_circuit(&s.circuit).shifts(c(eps));
    let zero_c = vec![0i64; s.data.rank];
    let mut out = Vec::new();
    for (g, alg) in s.coh_plus.algebras.iter().enumerate() {
        if !s.essential_plus[g] {
            continue;
        }
        let u = deformed_u(alg, &sh);
        for lp in s.generators(&zero_c, g, 12)? {
            let l0: Vec<f64> = lp.iter().map(crate::linalg::to_f64).collect();
            let radius_at = |z: Complex64| -> f64 {
                let others = pole_catalogue(&s.circuit, &l0, &sh, z.re - 2.0, z.re + 2.0);
                let d = others
                    .iter()
                    .map(|p| (p.location - z).norm())
                    .filter(|&d| d > 1e-13)
                    .fold(f64::INFINITY, f64::min);
                0.4 * d.min(1.0)
            };
            for &m in ms {
                let z = c(m as f64);
                let r = numeric_residue(alg, &s.circuit, &l0, &lnx, &sh, z, radius_at(z), 64)?;
                let l: Vec<f64> = l0.iter().zip(s.h()).map(|(a, &h)| a + (m * h) as f64).collect();
                let t = term_with(&l, &u, &lnx);
                let expect_zero = m < 0;
                out.push(ResidueCheck {
                    generator: fmt_l(&lp),
                    pole: format!("s = {m}"),
                    residue_norm: r.norm(),
                    expected_norm: t.norm(),
                    deviation: if expect_zero { r.norm() } else { rel_elem(&r, &t) },
                    expect_zero,
                });
            }
            for pc in pole_coefficients(s, alg, &lp, &sh)? {
                let hk = -s.h()[pc.k];
                for w0 in 0..2i64 {
                    let w = w0 * hk + pc.r;
                    let z = crate::wall::gamma_pole(&s.circuit, &l0, &sh, pc.k, w);
                    let r = numeric_residue(alg, &s.circuit, &l0, &lnx, &sh, z, radius_at(z), 64)?;
                    let l: Vec<f64> = pc
                        .lift
                        .iter()
                        .zip(s.h())
                        .map(|(a, &h)| crate::linalg::to_f64(a) - (w0 * h) as f64)
                        .collect();
                    let t = &pc.value * &term_with(&l, &pc.exponents, &lnx);
                    out.push(ResidueCheck {
                        generator: fmt_l(&lp),
                        pole: format!("gamma pole k = {}, w = {w}", pc.k + 1),
                        residue_norm: r.norm(),
                        expected_norm: t.norm(),
                        deviation: rel_elem(&r, &t),
                        expect_zero: false,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftCheck {
    pub sector: String,
    pub k: usize,
    pub r: i64,
    pub r_other: i64,
    pub target: String,
    pub lift: String,
    pub other_lift: String,
    /// Fractional data of the pole and the target lift agree in rationals.
    pub exact: bool,
    pub max_deviation: f64,
}

/// Recomputes every `C_{k,r}` from the lift shifted by `shift` (an element of `L`)
/// and matches pairs by target sector.
pub fn lift_independence(s: &WallSetup, shift: &[i64], eps_list: &[f64]) -> Result<Vec<LiftCheck>> {
    let d = Deformation::for_circuit(&s.circuit);
    let zero_c = vec![0i64; s.data.rank];
    if s.data.combine_int(shift).iter().any(|&x| x != 0) {
        return Err(Error::InvalidInput("shift is not in L".into()));
    }
    let mut out = Vec::new();
    for (g, alg) in s.coh_plus.algebras.iter().enumerate() {
        if !s.essential_plus[g] {
            continue;
        }
        let a = canonical_lift(&s.data, &alg.sector, &zero_c)?.l;
        let b: Vec<Q> = a.iter().zip(shift).map(|(x, &y)| x + Q::from_integer(y as i128)).collect();
        let z = d.shifts(c(*eps_list.first().unwrap_or(&1e-2)));
        let pa = pole_coefficients(s, alg, &a, &z)?;
        let pb = pole_coefficients(s, alg, &b, &z)?;
        for x in &pa {
            let hk = Q::from_integer(-s.h()[x.k] as i128);
            let Some(y) = pb.iter().find(|y| y.k == x.k && y.target == x.target) else {
                out.push(LiftCheck {
                    sector: alg.sector.label(),
                    k: x.k + 1,
                    r: x.r,
                    r_other: -1,
                    target: x.target.label(),
                    lift: fmt_l(&a),
                    other_lift: fmt_l(&b),
                    exact: false,
                    max_deviation: f64::INFINITY,
                });
                continue;
            };
            let fa = frac((a[x.k] - Q::from_integer(x.r as i128)) / hk);
            let fb = frac((b[y.k] - Q::from_integer(y.r as i128)) / hk);
            let la: Vec<Q> = x.lift.iter().map(|v| frac(*v)).collect();
            let lb: Vec<Q> = y.lift.iter().map(|v| frac(*v)).collect();
            let mut dev: f64 = 0.0;
            for &e in eps_list {
                let sh = d.shifts(c(e));
                let ca = crate::wall::pole_coefficient(s, alg, &a, x.k, x.r, &sh)?;
                let cb = crate::wall::pole_coefficient(s, alg, &b, y.k, y.r, &sh)?;
                dev = nan_max(dev, rel_elem(&ca.value, &cb.value));
            }
            out.push(LiftCheck {
                sector: alg.sector.label(),
                k: x.k + 1,
                r: x.r,
                r_other: y.r,
                target: x.target.label(),
                lift: fmt_l(&a),
                other_lift: fmt_l(&b),
                exact: fa == fb && la == lb,
                max_deviation: dev,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// Index sets contained in no essential cone of either side.
    pub qualifying: Vec<String>,
    pub trials: usize,
    pub max_deviation: f64,
    /// Largest localized norm of a tested class on either side.
    pub max_class_norm: f64,
    /// Every tested class localizes to zero on both sides.
    pub vacuous: bool,
}

/// Applies the `eps^0` transform to `prod_{j in J} (1 - R_j) phi(R)` for random
/// Laurent polynomials `phi` and compares with the same class on the plus side.
pub fn nonessential_invariance(s: &WallSetup, fm: &CMatrix, trials: usize, seed: u64) -> InvarianceReport {
    let n = s.data.n();
    let ess: Vec<&Cone> = s.ess_plus.iter().chain(&s.ess_minus).collect();
    let qualifying: Vec<Cone> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect::<Cone>())
        .filter(|j| !ess.iter().any(|e| j.iter().all(|i| e.contains(i))))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev: f64 = 0.0;
    let mut max_norm: f64 = 0.0;
    let mut count = 0;
    for j in &qualifying {
        for _ in 0..trials {
            let mut poly: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
            for _ in 0..3 {
                let alpha: Vec<i64> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                *poly.entry(alpha).or_insert(Complex64::new(0.0, 0.0)) += z;
            }
            let scale: f64 = poly.values().map(|z| z.norm()).sum();
            for &i in j {
                let mut next: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
                for (alpha, z) in &poly {
                    *next.entry(alpha.clone()).or_insert(Complex64::new(0.0, 0.0)) += z;
                    let mut b = alpha.clone();
                    b[i] += 1;
                    *next.entry(b).or_insert(Complex64::new(0.0, 0.0)) -= z;
                }
                poly = next;
            }
            let list: Vec<(Complex64, Vec<i64>)> = poly.into_iter().map(|(a, z)| (z, a)).collect();
            let vm = localize_polynomial(&s.coh_minus, &list);
            let vp = localize_polynomial(&s.coh_plus, &list);
            let image = fm.mul_vec(&vm);
            let dev = image.iter().zip(&vp).map(|(a, b)| (a - b).norm()).fold(0.0, nan_max) / scale;
            max_dev = nan_max(max_dev, dev);
            let norm = vm.iter().chain(&vp).map(|z| z.norm()).fold(0.0, nan_max) / scale;
            max_norm = nan_max(max_norm, norm);
            count += 1;
        }
    }
    InvarianceReport {
        qualifying: qualifying.iter().map(|j| fmt_cone(j)).collect(),
        trials: count,
        max_deviation: max_dev,
        max_class_norm: max_norm,
        vacuous: max_norm < 1e-12,
    }
}

fn det_pair(m: &CMatrix) -> [f64; 2] {
    let d = m.det();
    [d.re, d.im]
}

/// Full transform battery on one wall: matrices at sampled `eps`, the `eps^0`
/// limit, end-to-end comparison with the contour oracle and optionally the
/// deformed contour checks.
pub fn verify_fm_equals_ac(name: &str, s: &WallSetup, cfg: &VerifyConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let mut rt = Runtimes::default();
    let path = select_endpoints(&s.circuit, cfg.y_abs, cfg.amplitude)?;
    let basis: KBasis = k_basis(&s.coh_minus)?;
    let d = Deformation::for_circuit(&s.circuit);
    let (rows, cols) = (s.labels_plus(), s.labels_minus());
    let mut checks = Vec::new();

    let samples = rt.time("matrix samples", || -> Result<Vec<MatrixSample>> {
        let mut out = Vec::new();
        for &e in &cfg.eps_samples {
            let fm = transform_at(s, &basis, Provenance::FourierMukai, &d, c(e))?;
            let ac = transform_at(s, &basis, Provenance::AnalyticContinuation, &d, c(e))?;
            out.push(MatrixSample {
                eps: e,
                deviation: matrix_dev(&fm, &ac),
                det_fm: det_pair(&fm),
                fm: MatrixEntries::new(&fm, rows.clone(), cols.clone()),
                ac: MatrixEntries::new(&ac, rows.clone(), cols.clone()),
            });
        }
        Ok(out)
    })?;
    let worst = samples.iter().map(|m| m.deviation).fold(0.0, nan_max);
    checks.push(Check::below("fm equals ac at sampled eps", worst, cfg.matrix_tol, vec![]));
    let min_det = samples
        .iter()
        .map(|m| Complex64::new(m.det_fm[0], m.det_fm[1]).norm())
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::above("fm determinant at sampled eps", min_det, cfg.det_min, vec![]));

    let radius = cfg.laurent_radius.unwrap_or_else(|| default_radius(&d));
    let (fm0, ac0) = rt.time("eps expansion", || -> Result<_> {
        let fm0 = transform_limit(s, &basis, Provenance::FourierMukai, &d, radius, cfg.laurent_samples)?.0;
        let ac0 = transform_limit(s, &basis, Provenance::AnalyticContinuation, &d, radius, cfg.laurent_samples)?.0;
        Ok((fm0, ac0))
    })?;
    let fpp = fm0.principal_part.unwrap_or(f64::NAN) / fm0.matrix.max_abs();
    let app = ac0.principal_part.unwrap_or(f64::NAN) / ac0.matrix.max_abs();
    checks.push(Check::below("eps principal part (relative)", nan_max(fpp, app), cfg.principal_tol, vec![]));
    let limit = LimitMatrices {
        fm: MatrixEntries::new(&fm0.matrix, rows.clone(), cols.clone()),
        ac: MatrixEntries::new(&ac0.matrix, rows.clone(), cols.clone()),
        deviation: matrix_dev(&fm0.matrix, &ac0.matrix),
        fm_principal_part: fpp,
        ac_principal_part: app,
        radius,
        samples: cfg.laurent_samples,
        det_fm: det_pair(&fm0.matrix),
    };
    checks.push(Check::below("fm equals ac at eps^0", limit.deviation, cfg.matrix_tol, vec![]));

    let xm = EvaluationPoint::new(path.x_minus.clone())?;
    let end_to_end = rt.time("end to end", || -> Result<Vec<EndToEnd>> {
        let mut out = Vec::new();
        for cv in c_battery(&s.data, cfg.c_depth, false) {
            let o = oracle_continuation(s, &cv, &xm, &cfg.contour, cfg.generator_bound, cfg.truncation)?;
            let gm = evaluate_gamma(&s.data, &s.minus, &s.coh_minus, &cv, &xm, &TruncationPolicy::new(cfg.truncation), None)?;
            let mapped = fm0.matrix.mul_vec(&gm.total.flatten());
            out.push(EndToEnd {
                generators: o.generators.iter().map(|(sec, l)| format!("{sec}:{}", fmt_l(l))).collect(),
                deviation: floored_dev(&o.value, &mapped),
                oracle: pairs(&o.value),
                transformed: pairs(&mapped),
                quadrature_error: o.quadrature_error,
                c: cv,
            });
        }
        Ok(out)
    })?;
    let e2e = end_to_end.iter().map(|e| e.deviation).fold(0.0, nan_max);
    let diag: Vec<String> = end_to_end
        .iter()
        .filter(|e| !(e.deviation < cfg.end_to_end_tol))
        .map(|e| format!("c = {:?}: deviation {:.3e}", e.c, e.deviation))
        .collect();
    checks.push(Check::below("continued plus series equals transformed minus series", e2e, cfg.end_to_end_tol, diag));

    let contour = if cfg.contour_checks {
        rt.time("contour checks", || {
            contour_checks(s, &path, &cfg.contour, &cfg.contour_eps, &c_battery(&s.data, 1, false), cfg.generator_bound)
        })?
    } else {
        vec![]
    };
    if cfg.contour_checks {
        let p = contour.iter().map(|k| k.plus_deviation).fold(0.0, nan_max);
        let m = contour.iter().map(|k| k.minus_deviation).fold(0.0, nan_max);
        checks.push(Check::below("contour equals right pole sum at x+", p, cfg.contour_plus_tol, vec![]));
        checks.push(Check::below("contour equals left pole sum at x-", m, cfg.contour_minus_tol, vec![]));
    }

    let passed = checks.iter().all(|k| k.passed);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        fixture: FixtureMeta::new(name, s),
        config: cfg.clone(),
        path,
        k_basis: basis.exponents.clone(),
        samples,
        limit,
        end_to_end,
        contour,
        checks,
        passed,
        runtimes: rt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::Fixture;
    use crate::toric::EssentialMode;

    fn setup(f: &Fixture) -> WallSetup {
        WallSetup::new(&f.data, f.plus(), f.minus(), EssentialMode::Containment).unwrap()
    }

    #[test]
    fn a1_verification_passes() {
        let f = Fixture::a1();
        let cfg = VerifyConfig { contour_eps: vec![1e-2], c_depth: 1, ..Default::default() };
        let r = verify_fm_equals_ac("a1", &setup(&f), &cfg).unwrap();
        for k in &r.checks {
            assert!(k.passed, "{k:?}");
        }
        assert!(r.max_end_to_end() < 1e-6);
        let j = r.deterministic_json();
        assert!(j.get("runtimes").is_none());
        assert_eq!(j["fixture"]["i_minus"], serde_json::json!([2]));
    }

    #[test]
    fn config_validation() {
        let cfg = VerifyConfig { eps_samples: vec![1e-2, 1e-2], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = VerifyConfig { eps_samples: vec![0.0], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = VerifyConfig { matrix_tol: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn residues_and_lifts() {
        for f in [Fixture::a1(), Fixture::conifold()] {
            let s = setup(&f);
            let p = select_endpoints(&s.circuit, 0.1, None).unwrap();
            for r in residue_checks(&s, &p, 1e-2, &[-2, -1, 0, 1, 2]).unwrap() {
                let tol = if r.expect_zero { 1e-10 } else { 1e-8 };
                assert!(r.deviation < tol, "{}: {r:?}", f.name);
            }
            let l = lift_independence(&s, s.h(), &[1e-2, 3e-3]).unwrap();
            assert!(!l.is_empty());
            for x in l {
                assert!(x.exact && x.max_deviation < 1e-12, "{x:?}");
            }
        }
    }

    #[test]
    fn invariance_is_vacuous_on_fixtures() {
        for f in [Fixture::a1(), Fixture::conifold()] {
            let s = setup(&f);
            let b = k_basis(&s.coh_minus).unwrap();
            let d = Deformation::for_circuit(&s.circuit);
            let fm = transform_limit(&s, &b, Provenance::FourierMukai, &d, default_radius(&d), 32).unwrap().0;
            let r = nonessential_invariance(&s, &fm.matrix, 20, 7);
            assert_eq!(r.qualifying.len(), 1);
            assert!(r.max_deviation < 1e-10);
            assert!(r.vacuous);
        }
    }
}
