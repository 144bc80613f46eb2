//! Mellin-Barnes continuation across a wall and the K-theoretic transform.
//!
//! A [`WallSetup`] bundles a pair of adjacent triangulations. On the plus side
//! every generator `l'` of the essential series `Gamma^+` gives a Barnes
//! integral whose right poles reproduce the series and whose left poles are
//! Gamma-series terms of the minus side. The transform matrices map
//! `sum_gamma H_gamma(minus)` to `sum_gamma H_gamma(plus)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::{AlgebraElement, AlgebraSummary, OrbifoldCohomology, SectorAlgebra, TWO_PI_I};
use crate::error::{Error, Result};
use crate::linalg::{q, CMatrix, Q};
use crate::quad::{self, QuadConfig};
use crate::series::{enumerate_terms, term_support, term_value, EvaluationPoint, TruncationPolicy};
use crate::toric::{
    adjacent_sector, canonical_lift, essential_cones, find_circuit, is_essential_sector, Circuit,
    Cone, EssentialMode, Side, ToricData, Triangulation, TwistedSector,
};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn qf(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Both sides of a wall together with their cohomology.
#[derive(Debug, Clone)]
pub struct WallSetup {
    pub data: ToricData,
    pub plus: Triangulation,
    pub minus: Triangulation,
    pub circuit: Circuit,
    pub coh_plus: OrbifoldCohomology,
    pub coh_minus: OrbifoldCohomology,
    pub ess_plus: Vec<Cone>,
    pub ess_minus: Vec<Cone>,
    /// Per sector of `coh_plus`.
    pub essential_plus: Vec<bool>,
    pub mode: EssentialMode,
}

impl WallSetup {
    pub fn new(data: &ToricData, plus: &Triangulation, minus: &Triangulation, mode: EssentialMode) -> Result<Self> {
        let circuit = find_circuit(data, plus, minus)?;
        let coh_plus = OrbifoldCohomology::build(data, plus);
        let coh_minus = OrbifoldCohomology::build(data, minus);
        let ess_plus = essential_cones(plus, &circuit, Side::Plus);
        let ess_minus = essential_cones(minus, &circuit, Side::Minus);
        let essential_plus = coh_plus
            .sectors
            .iter()
            .map(|s| is_essential_sector(s, &ess_plus, mode))
            .collect();
        Ok(WallSetup {
            data: data.clone(),
            plus: plus.clone(),
            minus: minus.clone(),
            circuit,
            coh_plus,
            coh_minus,
            ess_plus,
            ess_minus,
            essential_plus,
            mode,
        })
    }

    pub fn h(&self) -> &[i64] {
        &self.circuit.h
    }

    fn is_essential_l(&self, l: &[Q]) -> bool {
        let s = term_support(l);
        self.ess_plus.iter().any(|m| s.iter().all(|i| m.contains(i)))
    }

    /// `l in L^es` with `l - h` outside `L^es`, up to `|l|_1 <= bound`.
    pub fn generators(&self, c: &[i64], sector: usize, bound: u32) -> Result<Vec<Vec<Q>>> {
        let s = &self.coh_plus.sectors[sector];
        let terms = match enumerate_terms(&self.data, &self.plus, c, s, &TruncationPolicy::new(bound), Some(&self.ess_plus)) {
            Ok(t) => t,
            Err(Error::Infeasible(_)) => return Ok(vec![]),
            Err(e) => return Err(e),
        };
        let h = self.h();
        Ok(terms
            .into_iter()
            .filter(|t| t.essential)
            .filter(|t| {
                let down: Vec<Q> = t.l.iter().zip(h).map(|(x, &hj)| x - q(hj as i128)).collect();
                !self.is_essential_l(&down)
            })
            .map(|t| t.l)
            .collect())
    }

    /// Row labels `sector:basis` of the plus side.
    pub fn labels_plus(&self) -> Vec<String> {
        labels(&self.coh_plus)
    }

    pub fn labels_minus(&self) -> Vec<String> {
        labels(&self.coh_minus)
    }
}

fn labels(coh: &OrbifoldCohomology) -> Vec<String> {
    coh.algebras
        .iter()
        .flat_map(|a| {
            let s = AlgebraSummary::from(a);
            s.basis.into_iter().map(move |b| format!("{}:{}", s.sector, b))
        })
        .collect()
}

/// Scalar deformation `u_j -> u_j - a_j eps` of the `I-` indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deformation {
    pub offsets: Vec<f64>,
}

impl Deformation {
    /// Distinct offsets `1, 2, ...` on `I-` in index order, zero elsewhere.
    pub fn for_circuit(circuit: &Circuit) -> Self {
        let mut offsets = vec![0.0; circuit.h.len()];
        for (i, &k) in circuit.i_minus.iter().enumerate() {
            offsets[k] = (i + 1) as f64;
        }
        Deformation { offsets }
    }

    pub fn shifts(&self, eps: Complex64) -> Vec<Complex64> {
        self.offsets.iter().map(|a| -eps * a).collect()
    }

    pub fn max_offset(&self) -> f64 {
        self.offsets.iter().copied().fold(0.0, crate::linalg::nan_max)
    }
}

pub fn zero_shifts(n: usize) -> Vec<Complex64> {
    vec![Complex64::zero(); n]
}

/// Deformed `u_j` for every index.
pub fn deformed_u(alg: &SectorAlgebra, shifts: &[Complex64]) -> Vec<AlgebraElement> {
    shifts.iter().enumerate().map(|(j, s)| alg.u(j).add_scalar(*s)).collect()
}

/// Endpoints of the straight path in `log x` between the two convergence regions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSpec {
    pub args: Vec<f64>,
    pub x_plus: Vec<Complex64>,
    pub x_minus: Vec<Complex64>,
    pub amplitude: f64,
    pub y_plus: Complex64,
    pub y_minus: Complex64,
    pub arg_y: f64,
}

/// `log y = i pi sum_{I-} h_j + sum_j h_j log x_j`.
pub fn log_y(circuit: &Circuit, lnx: &[Complex64]) -> Complex64 {
    let m: i64 = circuit.i_minus.iter().map(|&j| circuit.h[j]).sum();
    let mut s = Complex64::new(0.0, PI * m as f64);
    for (h, l) in circuit.h.iter().zip(lnx) {
        s += l * *h as f64;
    }
    s
}

/// Places `arg y = -pi`, `|y(x+)| = y_abs` and by default `|y(x-)| = 1/y_abs`.
pub fn select_endpoints(circuit: &Circuit, y_abs: f64, amplitude: Option<f64>) -> Result<PathSpec> {
    if !(y_abs > 0.0 && y_abs < 1.0) {
        return Err(Error::InvalidInput(format!("|y(x+)| = {y_abs} must lie in (0, 1)")));
    }
    let h: Vec<f64> = circuit.h.iter().map(|&x| x as f64).collect();
    let hh: f64 = h.iter().map(|x| x * x).sum();
    let m: i64 = circuit.i_minus.iter().map(|&j| circuit.h[j]).sum();
    let tau = -PI - PI * m as f64;
    let args: Vec<f64> = h.iter().map(|x| tau * x / hh).collect();
    if let Some(a) = args.iter().find(|a| a.abs() >= PI) {
        return Err(Error::InfeasibleArgs(format!("required arg {a:.4} leaves (-pi, pi)")));
    }
    let amplitude = amplitude.unwrap_or(-2.0 * y_abs.ln() / hh);
    let rho: Vec<f64> = h.iter().map(|x| y_abs.ln() * x / hh).collect();
    let x_plus: Vec<Complex64> = rho.iter().zip(&args).map(|(r, a)| Complex64::from_polar(r.exp(), *a)).collect();
    let x_minus: Vec<Complex64> = rho
        .iter()
        .zip(&args)
        .zip(&h)
        .map(|((r, a), hj)| Complex64::from_polar((r + amplitude * hj).exp(), *a))
        .collect();
    let lp: Vec<Complex64> = x_plus.iter().map(|z| z.ln()).collect();
    let lm: Vec<Complex64> = x_minus.iter().map(|z| z.ln()).collect();
    let (yp, ym) = (log_y(circuit, &lp), log_y(circuit, &lm));
    if ym.re <= 0.0 {
        return Err(Error::InvalidInput("x- does not satisfy |y| > 1".into()));
    }
    Ok(PathSpec {
        args,
        x_plus,
        x_minus,
        amplitude,
        y_plus: yp.exp(),
        y_minus: ym.exp(),
        arg_y: yp.im,
    })
}

/// `prod_j x_j^{l_j + e_j} / Gamma(1 + l_j + e_j)` for arbitrary exponent elements.
pub fn term_with(l: &[f64], e: &[AlgebraElement], lnx: &[Complex64]) -> AlgebraElement {
    let mut exponent = e[0].same_algebra(Complex64::zero());
    let mut gam = e[0].same_algebra(c(1.0));
    for j in 0..l.len() {
        exponent = exponent + e[j].add_scalar(c(l[j])).scale(lnx[j]);
        gam = &gam * &e[j].reciprocal_gamma_shifted(c(l[j]));
    }
    &exponent.exp() * &gam
}

fn lq(l: &[Q]) -> Vec<f64> {
    l.iter().map(qf).collect()
}

/// Barnes integrand in the form used for integration:
/// `2 pi i/(1 - e^{-2 pi i s}) prod_{I-} (1 - e^{-2 pi i(l'_j + u_j)})/(1 - e^{-2 pi i(l'_j + s h_j + u_j)})
/// prod_j x_j^{l'_j + s h_j + u_j}/Gamma(1 + l'_j + s h_j + u_j)`.
pub fn mb_integrand(
    alg: &SectorAlgebra,
    circuit: &Circuit,
    lp: &[f64],
    lnx: &[Complex64],
    shifts: &[Complex64],
    s: Complex64,
) -> Result<AlgebraElement> {
    let u = deformed_u(alg, shifts);
    let denom = c(1.0) - (-TWO_PI_I * s).exp();
    if denom.norm() == 0.0 {
        return Err(Error::PoleProximity { distance: 0.0 });
    }
    let mut out = alg.scalar(TWO_PI_I / denom);
    for &j in &circuit.i_minus {
        let a = u[j].add_scalar(c(lp[j]));
        let b = a.add_scalar(s * circuit.h[j] as f64);
        out = &out * &(&a.one_minus_exp_neg_2pii() * &b.one_minus_exp_neg_2pii().inverse()?);
    }
    let mut exponent = alg.zero();
    for j in 0..lp.len() {
        let b = u[j].add_scalar(s * circuit.h[j] as f64 + lp[j]);
        exponent = exponent + b.scale(lnx[j]);
        out = &out * &b.reciprocal_gamma_shifted(Complex64::zero());
    }
    Ok(&out * &exponent.exp())
}

fn sin_pi(a: &AlgebraElement) -> AlgebraElement {
    let i = Complex64::i();
    (a.scale(i * PI).exp() - a.scale(-i * PI).exp()).scale(-0.5 * i)
}

/// The integrand in Gamma-function form, for cross-checking [`mb_integrand`]:
/// `-x^{l'+u} prod_{I-} [sin(pi(-l'_j-u_j))/pi Gamma(-l'_j-s h_j-u_j)]
/// / prod_{j not in I-} Gamma(1+l'_j+s h_j+u_j) Gamma(-s) Gamma(1+s) (e^{i pi} y)^s`.
pub fn mb_integrand_gamma_form(
    alg: &SectorAlgebra,
    circuit: &Circuit,
    lp: &[f64],
    lnx: &[Complex64],
    shifts: &[Complex64],
    s: Complex64,
) -> Result<AlgebraElement> {
    let u = deformed_u(alg, shifts);
    let mut out = alg.scalar(-crate::special::gamma(-s) * crate::special::gamma(c(1.0) + s));
    let ly = log_y(circuit, lnx);
    out = out.scale((s * (Complex64::new(0.0, PI) + ly)).exp());
    let mut exponent = alg.zero();
    for j in 0..lp.len() {
        let a = u[j].add_scalar(c(lp[j]));
        exponent = exponent + a.scale(lnx[j]);
        let b = a.add_scalar(s * circuit.h[j] as f64);
        if circuit.h[j] < 0 {
            // Gamma(-b) = 1/rgamma(1 + (-b - 1)).
            let g = (-b).add_scalar(c(-1.0)).reciprocal_gamma_shifted(Complex64::zero()).inverse()?;
            out = &out * &(&sin_pi(&(-a)).scale(c(1.0 / PI)) * &g);
        } else {
            out = &out * &b.reciprocal_gamma_shifted(Complex64::zero());
        }
    }
    Ok(&out * &exponent.exp())
}

/// Scalar location of the Gamma pole `p_{k,w} = -(l'_k + u_k)/h_k + w/h_k`.
pub fn gamma_pole(circuit: &Circuit, lp: &[f64], shifts: &[Complex64], k: usize, w: i64) -> Complex64 {
    let hk = circuit.h[k] as f64;
    -(c(lp[k]) + shifts[k]) / hk + c(w as f64 / hk)
}

/// Rightmost real part among the Gamma poles.
pub fn max_gamma_pole_re(circuit: &Circuit, lp: &[f64], shifts: &[Complex64]) -> f64 {
    circuit
        .i_minus
        .iter()
        .map(|&k| gamma_pole(circuit, lp, shifts, k, 0).re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PoleKind {
    Integer { m: i64 },
    Gamma { k: usize, w: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub kind: PoleKind,
    pub location: Complex64,
}

/// Scalar pole locations with real part in `[lo, hi]`.
pub fn pole_catalogue(circuit: &Circuit, lp: &[f64], shifts: &[Complex64], lo: f64, hi: f64) -> Vec<Pole> {
    let mut out = Vec::new();
    for m in lo.ceil() as i64..=hi.floor() as i64 {
        out.push(Pole { kind: PoleKind::Integer { m }, location: c(m as f64) });
    }
    for &k in &circuit.i_minus {
        let mut w = 0;
        loop {
            let p = gamma_pole(circuit, lp, shifts, k, w);
            if p.re < lo {
                break;
            }
            if p.re <= hi {
                out.push(Pole { kind: PoleKind::Gamma { k, w }, location: p });
            }
            w += 1;
        }
    }
    out
}

/// Coefficient of the Gamma-pole residues for the pair `(k, r)`.
#[derive(Debug, Clone)]
pub struct PoleCoefficient {
    pub k: usize,
    pub r: i64,
    /// `l'' = l' + ((l'_k - r)/(-h_k)) h`.
    pub lift: Vec<Q>,
    pub target: TwistedSector,
    /// `E_j = u_j - (h_j/h_k) u_k`.
    pub exponents: Vec<AlgebraElement>,
    pub value: AlgebraElement,
}

/// Computes `C_{k,r}` directly from the lifts `l'` and `l''`:
/// `[1 - e^{-2 pi i(l'_k+u_k)}] / [h_k (1 - e^{-2 pi i((l'_k - r)/(-h_k) - u_k/h_k)})]
///  prod_{j in I-, j != k} [1 - e^{-2 pi i(l'_j+u_j)}] / [1 - e^{-2 pi i(l''_j+E_j)}]`.
pub fn pole_coefficient(
    setup: &WallSetup,
    alg: &SectorAlgebra,
    lp: &[Q],
    k: usize,
    r: i64,
    shifts: &[Complex64],
) -> Result<PoleCoefficient> {
    let circuit = &setup.circuit;
    let adj = adjacent_sector(&setup.data, lp, k, r, circuit, &setup.coh_minus.sectors)?;
    let u = deformed_u(alg, shifts);
    let hk = circuit.h[k] as f64;
    let exponents: Vec<AlgebraElement> = (0..lp.len())
        .map(|j| &u[j] - &u[k].scale(c(circuit.h[j] as f64 / hk)))
        .collect();
    let num = u[k].add_scalar(c(qf(&lp[k]))).one_minus_exp_neg_2pii();
    let frac_part = (lp[k] - q(r as i128)) / q(-circuit.h[k] as i128);
    let z = u[k].scale(c(-1.0 / hk)).add_scalar(c(qf(&frac_part)));
    let den = z.one_minus_exp_neg_2pii().scale(c(hk));
    let mut value = &num * &den.inverse()?;
    for &j in &circuit.i_minus {
        if j == k {
            continue;
        }
        let a = u[j].add_scalar(c(qf(&lp[j]))).one_minus_exp_neg_2pii();
        let b = exponents[j].add_scalar(c(qf(&adj.lift[j]))).one_minus_exp_neg_2pii();
        value = &value * &(&a * &b.inverse()?);
    }
    Ok(PoleCoefficient { k, r, lift: adj.lift, target: adj.sector, exponents, value })
}

/// All `C_{k,r}` for `k in I-`, `0 <= r < -h_k`.
pub fn pole_coefficients(
    setup: &WallSetup,
    alg: &SectorAlgebra,
    lp: &[Q],
    shifts: &[Complex64],
) -> Result<Vec<PoleCoefficient>> {
    let mut out = Vec::new();
    for &k in &setup.circuit.i_minus {
        for r in 0..-setup.circuit.h[k] {
            out.push(pole_coefficient(setup, alg, lp, k, r, shifts)?);
        }
    }
    Ok(out)
}

const SUM_REL_TOL: f64 = 1e-18;
const SUM_MAX_TERMS: i64 = 4000;

/// Sum of `f(m)` for `m = from, from+1, ...` until three consecutive terms are negligible.
fn sum_until_small<F: FnMut(i64) -> AlgebraElement>(mut f: F, from: i64, zero: AlgebraElement) -> Result<(AlgebraElement, i64)> {
    let mut acc = zero;
    let mut small = 0;
    let mut prev = f64::INFINITY;
    let mut grew = 0;
    for m in from..from + SUM_MAX_TERMS {
        let t = f(m);
        let tn = t.norm();
        acc = acc + t;
        grew = if tn > prev && tn > 0.0 { grew + 1 } else { 0 };
        prev = tn;
        if m >= from + 4 && tn <= SUM_REL_TOL * acc.norm() {
            small += 1;
            if small >= 3 {
                return Ok((acc, m - from + 1));
            }
        } else {
            small = 0;
        }
        if grew > 50 {
            return Err(Error::DivergenceSuspected { ratio: f64::INFINITY });
        }
    }
    Err(Error::DivergenceSuspected { ratio: 1.0 })
}

/// `sum_{m >= from} term(l' + m h)` with deformed `u`.
pub fn right_pole_sum(
    alg: &SectorAlgebra,
    circuit: &Circuit,
    lp: &[Q],
    lnx: &[Complex64],
    shifts: &[Complex64],
    from: i64,
) -> Result<AlgebraElement> {
    let u = deformed_u(alg, shifts);
    let l0 = lq(lp);
    let f = |m: i64| {
        let l: Vec<f64> = l0.iter().zip(&circuit.h).map(|(a, &h)| a + (m * h) as f64).collect();
        term_with(&l, &u, lnx)
    };
    Ok(sum_until_small(f, from, alg.zero())?.0)
}

/// `-sum_{k,r} C_{k,r} sum_{w0 >= 0} term(l'' - w0 h; E)`, the continuation of
/// the right sum expressed through the left (Gamma) poles.
pub fn left_pole_sum(
    setup: &WallSetup,
    alg: &SectorAlgebra,
    lp: &[Q],
    lnx: &[Complex64],
    shifts: &[Complex64],
) -> Result<(AlgebraElement, Vec<f64>)> {
    let mut total = alg.zero();
    let mut parts = Vec::new();
    for pc in pole_coefficients(setup, alg, lp, shifts)? {
        let l0 = lq(&pc.lift);
        let f = |w0: i64| {
            let l: Vec<f64> = l0.iter().zip(&setup.circuit.h).map(|(a, &h)| a - (w0 * h) as f64).collect();
            term_with(&l, &pc.exponents, lnx)
        };
        let (s, _) = sum_until_small(f, 0, alg.zero())?;
        let contrib = &pc.value * &s;
        parts.push(contrib.norm());
        total = total - contrib;
    }
    Ok((total, parts))
}

/// Vertical contour `Re s = s0`, truncated to `|Im s| <= t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourSpec {
    /// `None` places the line half way past the rightmost Gamma pole.
    pub s0: Option<f64>,
    pub t_max: f64,
    #[serde(skip)]
    pub quad: QuadConfig,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec { s0: None, t_max: 40.0, quad: QuadConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ContourValue {
    /// `-(1/2 pi i) int I ds + sum of the bridged integer terms`.
    pub value: AlgebraElement,
    pub integral: AlgebraElement,
    pub s0: f64,
    /// Integer poles `0 <= m < s0`, whose terms are added back.
    pub bridged: Vec<i64>,
    pub error: f64,
    pub tail: f64,
    pub evaluations: usize,
}

pub fn auto_s0(circuit: &Circuit, lp: &[f64], shifts: &[Complex64]) -> f64 {
    let mp = max_gamma_pole_re(circuit, lp, shifts);
    (mp.ceil()).max(-1.0) + 0.5
}

/// Analytic continuation of `sum_{m >= 0} term(l' + m h)` through the Barnes integral.
pub fn mb_continuation(
    alg: &SectorAlgebra,
    circuit: &Circuit,
    lp: &[Q],
    lnx: &[Complex64],
    shifts: &[Complex64],
    spec: &ContourSpec,
) -> Result<ContourValue> {
    let l0 = lq(lp);
    let s0 = spec.s0.unwrap_or_else(|| auto_s0(circuit, &l0, shifts));
    let near = pole_catalogue(circuit, &l0, shifts, s0 - 1.0, s0 + 1.0);
    if let Some(p) = near.iter().find(|p| (p.location.re - s0).abs() < 1e-9) {
        return Err(Error::PoleOnContour(format!("{:?} at {}", p.kind, p.location)));
    }
    let dim = alg.dim();
    let mut failure: Option<Error> = None;
    let f = |t: f64| -> Vec<Complex64> {
        match mb_integrand(alg, circuit, &l0, lnx, shifts, Complex64::new(s0, t)) {
            Ok(v) => v.coords,
            Err(e) => {
                failure.get_or_insert(e);
                vec![Complex64::zero(); dim]
            }
        }
    };
    let pieces = (spec.t_max * 2.0).ceil().max(8.0) as usize;
    let res = quad::integrate(f, -spec.t_max, spec.t_max, pieces, &spec.quad);
    if let Some(e) = failure {
        return Err(e);
    }
    // ds = i dt, so -(1/2 pi i) int I ds = -(1/2 pi) int I dt.
    let integral = alg.element(res.value.iter().map(|z| z * (-1.0 / (2.0 * PI))).collect());
    let edge = [spec.t_max, -spec.t_max]
        .iter()
        .map(|&t| mb_integrand(alg, circuit, &l0, lnx, shifts, Complex64::new(s0, t)).map(|v| v.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let tail = edge.iter().copied().fold(0.0, crate::linalg::nan_max) / (2.0 * PI);
    let scale = integral.norm().max(1e-300);
    if tail > 1e-12 * scale && tail > 1e-30 {
        return Err(Error::TailBoundViolated(format!("|I| = {tail:.3e} at |Im s| = {}", spec.t_max)));
    }
    if !res.converged {
        return Err(Error::TailBoundViolated(format!("quadrature error {:.3e} above tolerance", res.error)));
    }
    let u = deformed_u(alg, shifts);
    let mut value = integral.clone();
    let mut bridged = Vec::new();
    let mut m = 0i64;
    while (m as f64) < s0 {
        let l: Vec<f64> = l0.iter().zip(&circuit.h).map(|(a, &h)| a + (m * h) as f64).collect();
        value = value + term_with(&l, &u, lnx);
        bridged.push(m);
        m += 1;
    }
    Ok(ContourValue {
        value,
        integral,
        s0,
        bridged,
        error: res.error / (2.0 * PI),
        tail,
        evaluations: res.evaluations,
    })
}

/// Residue of the integrand at `center` from an `n`-point trapezoid rule on a circle.
pub fn numeric_residue(
    alg: &SectorAlgebra,
    circuit: &Circuit,
    lp: &[f64],
    lnx: &[Complex64],
    shifts: &[Complex64],
    center: Complex64,
    radius: f64,
    n: usize,
) -> Result<AlgebraElement> {
    let mut acc = alg.zero();
    for i in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5) / n as f64);
        let v = mb_integrand(alg, circuit, lp, lnx, shifts, center + e * radius)?;
        acc = acc + v.scale(e * (radius / n as f64));
    }
    Ok(acc)
}

/// Laurent monomials `R^alpha` spanning `K_0` of the minus side, with their localizations.
#[derive(Debug, Clone)]
pub struct KBasis {
    pub exponents: Vec<Vec<i64>>,
    pub loc: CMatrix,
    pub loc_inv: CMatrix,
}

/// `log r_j = 2 pi i (u_j - gamma_j)` in one sector.
fn log_localization(alg: &SectorAlgebra, shifts: &[Complex64]) -> Vec<AlgebraElement> {
    deformed_u(alg, shifts)
        .into_iter()
        .enumerate()
        .map(|(j, u)| u.add_scalar(c(-qf(&alg.sector.coords[j]))).scale(TWO_PI_I))
        .collect()
}

fn monomial_at(logs: &[AlgebraElement], alpha: &[i64]) -> AlgebraElement {
    let mut e = logs[0].same_algebra(Complex64::zero());
    for (l, &a) in logs.iter().zip(alpha) {
        if a != 0 {
            e = e + l.scale(c(a as f64));
        }
    }
    e.exp()
}

/// Flattened localization of `R^alpha` over all sectors.
pub fn localize_monomial(coh: &OrbifoldCohomology, alpha: &[i64], shifts: &[Complex64]) -> Vec<Complex64> {
    coh.algebras
        .iter()
        .flat_map(|a| monomial_at(&log_localization(a, shifts), alpha).coords)
        .collect()
}

fn exponent_candidates(n: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut rem = code;
        let a: Vec<i64> = (0..n)
            .map(|_| {
                let d = (rem % 3) as i64 - 1;
                rem /= 3;
                d
            })
            .collect();
        out.push(a);
    }
    out.sort_by(|a, b| {
        let na: i64 = a.iter().map(|x| x.abs()).sum();
        let nb: i64 = b.iter().map(|x| x.abs()).sum();
        na.cmp(&nb).then(a.cmp(b))
    });
    out
}

pub fn k_basis(coh: &OrbifoldCohomology) -> Result<KBasis> {
    let n = coh.algebras[0].divisor_classes.len();
    let dim = coh.total_dim();
    let zero = zero_shifts(n);
    let mut exponents = Vec::new();
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for alpha in exponent_candidates(n) {
        let v = localize_monomial(coh, &alpha, &zero);
        let mut trial = cols.clone();
        trial.push(v.clone());
        if CMatrix::from_columns(dim, &trial).rank(1e-10) == trial.len() {
            cols = trial;
            exponents.push(alpha);
            if cols.len() == dim {
                break;
            }
        }
    }
    if cols.len() < dim {
        return Err(Error::VerificationFailed("Laurent monomials do not span the localized K-group".into()));
    }
    let loc = CMatrix::from_columns(dim, &cols);
    let loc_inv = loc.inverse().ok_or(Error::NotInvertible)?;
    Ok(KBasis { exponents, loc, loc_inv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// Residues of the kernel `T(r, t)` at the roots of `t^{-h_k} = r_k`.
    FourierMukai,
    /// Gamma-pole coefficients of the Barnes integral.
    AnalyticContinuation,
}

/// Matrix `sum H_gamma(minus) -> sum H_gamma(plus)`.
#[derive(Debug, Clone)]
pub struct TransformMatrix {
    pub provenance: Provenance,
    /// Deformation parameter, `None` for the `eps^0` coefficient.
    pub eps: Option<Complex64>,
    pub matrix: CMatrix,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Largest principal-part coefficient of the Laurent expansion, when extracted.
    pub principal_part: Option<f64>,
}

/// Value of the transformed class `phi = R^alpha` in one plus-side sector.
fn fm_sector_value(setup: &WallSetup, g: usize, alpha: &[i64], shifts: &[Complex64]) -> Result<AlgebraElement> {
    let alg = &setup.coh_plus.algebras[g];
    let logr = log_localization(alg, shifts);
    if !setup.essential_plus[g] {
        return Ok(monomial_at(&logr, alpha));
    }
    let h = setup.h();
    let one = alg.one();
    let mut total = alg.zero();
    for &k in &setup.circuit.i_minus {
        let hk = h[k];
        for qq in 0..-hk {
            let log_t = logr[k].add_scalar(TWO_PI_I * qq as f64).scale(c(-1.0 / hk as f64));
            let t = log_t.exp();
            let mut res = &(&t - &one).inverse()? * &t;
            res = &res * &(&one - &logr[k].scale(c(-1.0)).exp()).scale(c(1.0 / hk as f64));
            for &j in &setup.circuit.i_minus {
                if j == k {
                    continue;
                }
                let rinv = logr[j].scale(c(-1.0)).exp();
                let num = &one - &rinv;
                let den = &one - &(&rinv * &log_t.scale(c(-(h[j] as f64))).exp());
                res = &res * &(&num * &den.inverse()?);
            }
            let pts: Vec<AlgebraElement> = logr
                .iter()
                .zip(h)
                .map(|(l, &hj)| l + &log_t.scale(c(hj as f64)))
                .collect();
            total = total - &res * &monomial_at(&pts, alpha);
        }
    }
    Ok(total)
}

fn ac_sector_value(setup: &WallSetup, g: usize, alpha: &[i64], shifts: &[Complex64]) -> Result<AlgebraElement> {
    let alg = &setup.coh_plus.algebras[g];
    if !setup.essential_plus[g] {
        return Ok(monomial_at(&log_localization(alg, shifts), alpha));
    }
    let zero_c = vec![0i64; setup.data.rank];
    let lift = canonical_lift(&setup.data, &alg.sector, &zero_c)?;
    let mut total = alg.zero();
    for pc in pole_coefficients(setup, alg, &lift.l, shifts)? {
        let pts: Vec<AlgebraElement> = pc
            .exponents
            .iter()
            .zip(&pc.lift)
            .map(|(e, l)| e.add_scalar(c(qf(l))).scale(TWO_PI_I))
            .collect();
        total = total - &pc.value * &monomial_at(&pts, alpha);
    }
    Ok(total)
}

fn assemble(
    setup: &WallSetup,
    basis: &KBasis,
    shifts: &[Complex64],
    f: fn(&WallSetup, usize, &[i64], &[Complex64]) -> Result<AlgebraElement>,
) -> Result<CMatrix> {
    let rows = setup.coh_plus.total_dim();
    let mut cols = Vec::with_capacity(basis.exponents.len());
    for alpha in &basis.exponents {
        let mut col = Vec::with_capacity(rows);
        for g in 0..setup.coh_plus.sectors.len() {
            col.extend(f(setup, g, alpha, shifts)?.coords);
        }
        cols.push(col);
    }
    Ok(CMatrix::from_columns(rows, &cols).mul(&basis.loc_inv))
}

/// Transform matrix at a fixed deformation parameter.
pub fn transform_at(
    setup: &WallSetup,
    basis: &KBasis,
    provenance: Provenance,
    deformation: &Deformation,
    eps: Complex64,
) -> Result<CMatrix> {
    let shifts = deformation.shifts(eps);
    match provenance {
        Provenance::FourierMukai => assemble(setup, basis, &shifts, fm_sector_value),
        Provenance::AnalyticContinuation => assemble(setup, basis, &shifts, ac_sector_value),
    }
}

/// Laurent coefficients of orders `-3..=2` by sampling on `|eps| = radius`.
#[derive(Debug, Clone)]
pub struct Laurent {
    pub radius: f64,
    pub samples: usize,
    pub orders: Vec<i32>,
    pub coefficients: Vec<CMatrix>,
}

impl Laurent {
    pub fn coefficient(&self, order: i32) -> Option<&CMatrix> {
        self.orders.iter().position(|&o| o == order).map(|i| &self.coefficients[i])
    }

    pub fn principal_part(&self) -> f64 {
        self.orders
            .iter()
            .zip(&self.coefficients)
            .filter(|(o, _)| **o < 0)
            .map(|(_, m)| m.max_abs())
            .fold(0.0, crate::linalg::nan_max)
    }
}

pub fn laurent_by_circle<F: FnMut(Complex64) -> Result<CMatrix>>(mut f: F, radius: f64, samples: usize) -> Result<Laurent> {
    let orders: Vec<i32> = (-3..=2).collect();
    let mut coefficients: Vec<Option<CMatrix>> = vec![None; orders.len()];
    for i in 0..samples {
        let e = Complex64::from_polar(radius, 2.0 * PI * (i as f64 + 0.5) / samples as f64);
        let m = f(e)?;
        for (slot, &o) in coefficients.iter_mut().zip(&orders) {
            let w = e.powi(-o) / samples as f64;
            let acc = slot.get_or_insert_with(|| CMatrix::zeros(m.rows, m.cols));
            for (a, b) in acc.data.iter_mut().zip(&m.data) {
                *a += b * w;
            }
        }
    }
    Ok(Laurent {
        radius,
        samples,
        orders,
        coefficients: coefficients.into_iter().map(|m| m.unwrap()).collect(),
    })
}

/// Default sampling radius `0.05 / max a_j`.
pub fn default_radius(deformation: &Deformation) -> f64 {
    0.05 / deformation.max_offset().max(1.0)
}

/// `eps^0` coefficient of the deformed transform.
pub fn transform_limit(
    setup: &WallSetup,
    basis: &KBasis,
    provenance: Provenance,
    deformation: &Deformation,
    radius: f64,
    samples: usize,
) -> Result<(TransformMatrix, Laurent)> {
    let laurent = laurent_by_circle(|e| transform_at(setup, basis, provenance, deformation, e), radius, samples)?;
    let matrix = laurent.coefficient(0).cloned().expect("order 0 sampled");
    Ok((
        TransformMatrix {
            provenance,
            eps: None,
            matrix,
            row_labels: setup.labels_plus(),
            col_labels: setup.labels_minus(),
            principal_part: Some(laurent.principal_part()),
        },
        laurent,
    ))
}

/// Localization of a Laurent polynomial `sum coef R^alpha` on one side.
pub fn localize_polynomial(coh: &OrbifoldCohomology, poly: &[(Complex64, Vec<i64>)]) -> Vec<Complex64> {
    let n = coh.algebras[0].divisor_classes.len();
    let zero = zero_shifts(n);
    let mut out = vec![Complex64::zero(); coh.total_dim()];
    for (coef, alpha) in poly {
        for (o, v) in out.iter_mut().zip(localize_monomial(coh, alpha, &zero)) {
            *o += coef * v;
        }
    }
    out
}

/// Continuation of `Gamma^+_c` to `x`: Barnes integrals for the essential
/// sectors, the convergent non-essential part evaluated directly.
#[derive(Debug, Clone)]
pub struct OracleValue {
    pub c: Vec<i64>,
    pub value: Vec<Complex64>,
    /// `(sector label, generator)` pairs that contributed.
    pub generators: Vec<(String, Vec<Q>)>,
    pub quadrature_error: f64,
}

pub fn oracle_continuation(
    setup: &WallSetup,
    c_vec: &[i64],
    x: &EvaluationPoint,
    spec: &ContourSpec,
    generator_bound: u32,
    truncation: u32,
) -> Result<OracleValue> {
    let lnx = x.ln();
    let n = setup.data.n();
    let zero = zero_shifts(n);
    let mut value = Vec::with_capacity(setup.coh_plus.total_dim());
    let mut generators = Vec::new();
    let mut quadrature_error: f64 = 0.0;
    for (g, alg) in setup.coh_plus.algebras.iter().enumerate() {
        let mut acc = alg.zero();
        let policy = TruncationPolicy::new(truncation);
        match enumerate_terms(&setup.data, &setup.plus, c_vec, &alg.sector, &policy, Some(&setup.ess_plus)) {
            Ok(terms) => {
                for t in terms.iter().filter(|t| !t.essential) {
                    acc = acc + term_value(alg, &t.l, &lnx, &zero);
                }
            }
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
        if setup.essential_plus[g] {
            for lp in setup.generators(c_vec, g, generator_bound)? {
                let cv = mb_continuation(alg, &setup.circuit, &lp, &lnx, &zero, spec)?;
                quadrature_error = quadrature_error.max(cv.error);
                acc = acc + cv.value;
                generators.push((alg.sector.label(), lp));
            }
        }
        value.extend(acc.coords);
    }
    Ok(OracleValue { c: c_vec.to_vec(), value, generators, quadrature_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::Fixture;
    use crate::series::evaluate_gamma;

    fn setup(f: &Fixture) -> WallSetup {
        WallSetup::new(&f.data, f.plus(), f.minus(), EssentialMode::Containment).unwrap()
    }

    fn rel(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn endpoints_place_arg_y_at_minus_pi() {
        for f in [Fixture::conifold(), Fixture::a1()] {
            let s = setup(&f);
            let p = select_endpoints(&s.circuit, 0.1, None).unwrap();
            assert!((p.arg_y + PI).abs() < 1e-12);
            assert!((p.y_plus.norm() - 0.1).abs() < 1e-12);
            assert!((p.y_minus.norm() - 10.0).abs() < 1e-10);
        }
        let f = Fixture::a1();
        assert!(select_endpoints(&setup(&f).circuit, 1.5, None).is_err());
    }

    #[test]
    fn integrand_forms_agree() {
        for f in [Fixture::conifold(), Fixture::a1()] {
            let s = setup(&f);
            let p = select_endpoints(&s.circuit, 0.1, None).unwrap();
            let lnx: Vec<Complex64> = p.x_minus.iter().map(|z| z.ln()).collect();
            let alg = &s.coh_plus.algebras[0];
            let sh = Deformation::for_circuit(&s.circuit).shifts(c(0.013));
            let lp = lq(&s.generators(&[0; 3][..s.data.rank], 0, 8).unwrap()[0]);
            for t in [-3.0, -0.4, 0.0, 1.7, 5.0] {
                let z = Complex64::new(0.5, t);
                let a = mb_integrand(alg, &s.circuit, &lp, &lnx, &sh, z).unwrap();
                let b = mb_integrand_gamma_form(alg, &s.circuit, &lp, &lnx, &sh, z).unwrap();
                assert!(rel(&a, &b) < 1e-11, "{} at {z}: {a:?} vs {b:?}", f.name);
            }
        }
    }

    #[test]
    fn a1_pole_coefficient_scalar_limit() {
        let f = Fixture::a1();
        let s = setup(&f);
        let alg = &s.coh_plus.algebras[0];
        let lp = vec![Q::zero(); 3];
        let d = Deformation::for_circuit(&s.circuit);
        let pc = pole_coefficient(&s, alg, &lp, 1, 0, &d.shifts(c(1e-7))).unwrap();
        assert!((pc.value.scalar_part() - c(-1.0)).norm() < 1e-5);
        assert!(pc.target.is_untwisted());
        let pc1 = pole_coefficient(&s, alg, &lp, 1, 1, &d.shifts(c(1e-7))).unwrap();
        assert_eq!(pc1.target.label(), "(1/2,0,1/2)");
    }

    #[test]
    fn fm_residues_match_pole_coefficients() {
        let f = Fixture::a1();
        let s = setup(&f);
        let b = k_basis(&s.coh_minus).unwrap();
        let d = Deformation::for_circuit(&s.circuit);
        for e in [0.011, 0.037] {
            let fm = transform_at(&s, &b, Provenance::FourierMukai, &d, c(e)).unwrap();
            let ac = transform_at(&s, &b, Provenance::AnalyticContinuation, &d, c(e)).unwrap();
            let diff = CMatrix { rows: fm.rows, cols: fm.cols, data: fm.data.iter().zip(&ac.data).map(|(a, b)| a - b).collect() };
            assert!(diff.max_abs() < 1e-11 * fm.max_abs(), "{fm:?} {ac:?}");
        }
    }

    #[test]
    fn conifold_principal_part_cancels() {
        let f = Fixture::conifold();
        let s = setup(&f);
        let b = k_basis(&s.coh_minus).unwrap();
        let d = Deformation::for_circuit(&s.circuit);
        let single = pole_coefficient(&s, &s.coh_plus.algebras[0], &[Q::zero(); 4], 1, 0, &d.shifts(c(1e-3))).unwrap();
        assert!(single.value.norm() > 100.0);
        let (m, l) = transform_limit(&s, &b, Provenance::FourierMukai, &d, default_radius(&d), 32).unwrap();
        assert!(l.principal_part() < 1e-9 * m.matrix.max_abs(), "{}", l.principal_part());
        assert!(m.matrix.det().norm() > 1e-6);
    }

    #[test]
    fn residues_at_integers() {
        let f = Fixture::a1();
        let s = setup(&f);
        let alg = &s.coh_plus.algebras[0];
        let p = select_endpoints(&s.circuit, 0.1, None).unwrap();
        let lnx: Vec<Complex64> = p.x_plus.iter().map(|z| z.ln()).collect();
        let sh = Deformation::for_circuit(&s.circuit).shifts(c(1e-2));
        let lp = vec![0.0; 3];
        let u = deformed_u(alg, &sh);
        for m in -2..=2i64 {
            let r = numeric_residue(alg, &s.circuit, &lp, &lnx, &sh, c(m as f64), 2e-3, 64).unwrap();
            let l: Vec<f64> = s.h().iter().map(|&h| (m * h) as f64).collect();
            let t = term_with(&l, &u, &lnx);
            if m < 0 {
                assert!(r.norm() < 1e-10, "m = {m}: {r:?}");
            } else {
                assert!(rel(&r, &t) < 1e-8, "m = {m}");
            }
        }
    }

    #[test]
    fn contour_matches_pole_sums() {
        for f in [Fixture::a1(), Fixture::conifold()] {
            let s = setup(&f);
            let alg = &s.coh_plus.algebras[0];
            let p = select_endpoints(&s.circuit, 0.1, None).unwrap();
            let lp_ = s.generators(&vec![0; s.data.rank], 0, 8).unwrap()[0].clone();
            for e in [1e-2, 1e-3] {
                let sh = Deformation::for_circuit(&s.circuit).shifts(c(e));
                let lnp: Vec<Complex64> = p.x_plus.iter().map(|z| z.ln()).collect();
                let lnm: Vec<Complex64> = p.x_minus.iter().map(|z| z.ln()).collect();
                let cp = mb_continuation(alg, &s.circuit, &lp_, &lnp, &sh, &ContourSpec::default()).unwrap();
                let rp = right_pole_sum(alg, &s.circuit, &lp_, &lnp, &sh, 0).unwrap();
                assert!(rel(&cp.value, &rp) < 1e-9, "{} plus {e}: {:?} vs {:?}", f.name, cp.value, rp);
                let cm = mb_continuation(alg, &s.circuit, &lp_, &lnm, &sh, &ContourSpec::default()).unwrap();
                let (lm, _) = left_pole_sum(&s, alg, &lp_, &lnm, &sh).unwrap();
                assert!(rel(&cm.value, &lm) < 1e-8, "{} minus {e}: {:?} vs {:?}", f.name, cm.value, lm);
            }
        }
    }

    #[test]
    fn oracle_matches_transform_end_to_end() {
        for f in [Fixture::a1(), Fixture::conifold()] {
            let s = setup(&f);
            let b = k_basis(&s.coh_minus).unwrap();
            let d = Deformation::for_circuit(&s.circuit);
            let (fm, _) = transform_limit(&s, &b, Provenance::FourierMukai, &d, default_radius(&d), 32).unwrap();
            let p = select_endpoints(&s.circuit, 0.1, None).unwrap();
            let xm = EvaluationPoint::new(p.x_minus.clone()).unwrap();
            for cv in crate::series::c_battery(&s.data, 1, false) {
                let o = oracle_continuation(&s, &cv, &xm, &ContourSpec::default(), 12, 40).unwrap();
                let gm = evaluate_gamma(&s.data, &s.minus, &s.coh_minus, &cv, &xm, &TruncationPolicy::new(120), None).unwrap();
                let mapped = fm.matrix.mul_vec(&gm.total.flatten());
                let scale = o.value.iter().chain(&mapped).map(|z| z.norm()).fold(1e-300, f64::max);
                let dev = o.value.iter().zip(&mapped).map(|(a, b)| (a - b).norm()).fold(0.0, crate::linalg::nan_max) / scale;
                assert!(o.value.iter().all(|z| z.is_finite()) && dev < 1e-6, "{} c={cv:?}: {:?} vs {:?}", f.name, o.value, mapped);
            }
        }
    }
}
