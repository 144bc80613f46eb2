//! Gamma series of the bbGKZ system and of its compactly supported dual:
//! term enumeration over the solution lattices, truncated evaluation and
//! term-matched residual checks of the differential equations.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::algebra::{AlgebraElement, OrbifoldCohomology, OrbifoldSum, SectorAlgebra, TWO_PI_I};
use crate::dual::CohomologyModule;
use crate::error::{Error, Result};
use crate::linalg::{self, q, Q};
use crate::toric::{canonical_lift, fmt_cone, l1_norm, Cone, ToricData, Triangulation, TwistedSector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncationPolicy {
    /// Maximal `sum |l_i|` of an included term.
    pub degree_bound: u32,
    pub tail_check: bool,
}

impl TruncationPolicy {
    pub fn new(degree_bound: u32) -> Self {
        TruncationPolicy { degree_bound, tail_check: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeTerm {
    #[serde(serialize_with = "crate::toric::ser_qvec")]
    pub l: Vec<Q>,
    pub sector: TwistedSector,
    /// `I(l)`: negative integer entries together with `sigma(gamma)`.
    pub support: Cone,
    pub essential: bool,
    pub owning_cones: Vec<Cone>,
}

impl LatticeTerm {
    pub fn negative_integers(&self) -> Vec<usize> {
        (0..self.l.len())
            .filter(|&i| self.l[i].is_integer() && self.l[i].is_negative())
            .collect()
    }
}

pub fn term_support(l: &[Q]) -> Cone {
    (0..l.len())
        .filter(|&i| !l[i].is_integer() || l[i].is_negative())
        .collect()
}

/// All points `l0 + B t` (`t` integral, `B` the kernel basis) with `|l|_1 <= bound`.
pub fn lattice_translates(l0: &[Q], kernel: &[Vec<i64>], bound: Q) -> Vec<Vec<Q>> {
    let k = kernel.len();
    if k == 0 {
        return if l1_norm(l0) <= bound { vec![l0.to_vec()] } else { vec![] };
    }
    let n = l0.len();
    // Left inverse (B^T B)^{-1} B^T bounds the coefficient box.
    let gram: Vec<Vec<Q>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| q((0..n).map(|i| (kernel[a][i] * kernel[b][i]) as i128).sum()))
                .collect()
        })
        .collect();
    let radius = bound + l1_norm(l0);
    let mut extent = Vec::with_capacity(k);
    for a in 0..k {
        let mut e = vec![Q::zero(); k];
        e[a] = Q::one();
        let row = linalg::solve(&gram, &e).expect("kernel basis is independent");
        let mut maxc = Q::zero();
        for i in 0..n {
            let c: Q = (0..k).map(|b| row[b] * q(kernel[b][i] as i128)).sum();
            maxc = maxc.max(c.abs());
        }
        extent.push((maxc * radius).floor().to_integer() as i64);
    }
    let mut out = Vec::new();
    let mut t: Vec<i64> = extent.iter().map(|e| -e).collect();
    loop {
        let l: Vec<Q> = (0..n)
            .map(|i| l0[i] + q((0..k).map(|b| t[b] * kernel[b][i]).sum::<i64>() as i128))
            .collect();
        if l1_norm(&l) <= bound {
            out.push(l);
        }
        let mut a = 0;
        loop {
            if a == k {
                return out;
            }
            if t[a] < extent[a] {
                t[a] += 1;
                break;
            }
            t[a] = -extent[a];
            a += 1;
        }
    }
}

fn sort_terms(terms: &mut [Vec<Q>]) {
    terms.sort_by(|a, b| l1_norm(a).cmp(&l1_norm(b)).then_with(|| a.cmp(b)));
}

/// Terms of `L_{c,gamma}` within the truncation whose support lies in a cone of `t`.
/// `essential_cones` classifies terms; pass `None` to mark all as non-essential.
pub fn enumerate_terms(
    data: &ToricData,
    t: &Triangulation,
    c: &[i64],
    sector: &TwistedSector,
    policy: &TruncationPolicy,
    essential_cones: Option<&[Cone]>,
) -> Result<Vec<LatticeTerm>> {
    let lift = canonical_lift(data, sector, c)?;
    let kernel = linalg::integer_kernel(&data.points);
    let mut ls = lattice_translates(&lift.l, &kernel, q(policy.degree_bound as i128));
    sort_terms(&mut ls);
    let mut out = Vec::new();
    for l in ls {
        let support = term_support(&l);
        let owning: Vec<Cone> = t
            .maximal_cones
            .iter()
            .filter(|m| support.iter().all(|i| m.contains(i)))
            .cloned()
            .collect();
        if owning.is_empty() {
            continue;
        }
        let essential = essential_cones.is_some_and(|ess| owning.iter().any(|m| ess.contains(m)));
        out.push(LatticeTerm { l, sector: sector.clone(), support, essential, owning_cones: owning });
    }
    Ok(out)
}

/// A point `x` in `(C^*)^n` with every `arg x_i` in `(-pi, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationPoint {
    pub x: Vec<Complex64>,
}

impl EvaluationPoint {
    pub fn new(x: Vec<Complex64>) -> Result<Self> {
        for z in &x {
            if z.im == 0.0 && z.re <= 0.0 {
                return Err(Error::BranchCut(format!("{z}")));
            }
        }
        Ok(EvaluationPoint { x })
    }

    pub fn ln(&self) -> Vec<Complex64> {
        self.x.iter().map(|z| z.ln()).collect()
    }
}

/// `prod_j x_j^{l_j + u_j} / Gamma(1 + l_j + u_j)` with `u_j = D_j/2 pi i + shift_j`.
pub fn term_value(alg: &SectorAlgebra, l: &[Q], lnx: &[Complex64], shifts: &[Complex64]) -> AlgebraElement {
    let mut exponent = alg.zero();
    let mut gam = alg.one();
    for j in 0..l.len() {
        let lj = l[j].to_f64().unwrap_or(f64::NAN);
        let u = alg.u(j).add_scalar(shifts[j]);
        exponent = exponent + u.add_scalar(Complex64::new(lj, 0.0)).scale(lnx[j]);
        gam = &gam * &u.reciprocal_gamma_shifted(Complex64::new(lj, 0.0));
    }
    &exponent.exp() * &gam
}

/// As `term_value`, with the leading factor `u_i` of `1/Gamma(1 + l_i + u_i)`
/// divided out for every negative integer `l_i` and replaced by `1/2 pi i`.
pub fn dual_term_value(alg: &SectorAlgebra, l: &[Q], lnx: &[Complex64]) -> AlgebraElement {
    let mut exponent = alg.zero();
    let mut coef = alg.one();
    for j in 0..l.len() {
        let lj = l[j].to_f64().unwrap_or(f64::NAN);
        let u = alg.u(j);
        exponent = exponent + u.add_scalar(Complex64::new(lj, 0.0)).scale(lnx[j]);
        if l[j].is_integer() && l[j].is_negative() {
            let m = (-l[j]).to_integer() as i64;
            let mut f = u.reciprocal_gamma_shifted(Complex64::new(0.0, 0.0)).scale(1.0 / TWO_PI_I);
            for k in 1..m {
                f = &f * &u.add_scalar(Complex64::new(-(k as f64), 0.0));
            }
            coef = &coef * &f;
        } else {
            coef = &coef * &u.reciprocal_gamma_shifted(Complex64::new(lj, 0.0));
        }
    }
    &exponent.exp() * &coef
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorDiagnostics {
    pub sector: String,
    pub terms: usize,
    pub essential_terms: usize,
    /// Fitted geometric ratio of the last shell increments, when available.
    pub tail_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaValue {
    pub total: OrbifoldSum,
    pub essential: OrbifoldSum,
    pub nonessential: OrbifoldSum,
    pub diagnostics: Vec<SectorDiagnostics>,
}

/// Geometric ratio fitted to the last (up to 5) nonzero shell increments.
pub fn tail_ratio(increments: &[f64]) -> Option<f64> {
    let nz: Vec<f64> = increments.iter().copied().filter(|x| *x > 0.0).collect();
    if nz.len() < 3 {
        return None;
    }
    let tail = &nz[nz.len().saturating_sub(5)..];
    let k = tail.len() - 1;
    Some((tail[k] / tail[0]).powf(1.0 / k as f64))
}

/// Truncated `Gamma_c(x)`, optionally with scalar shifts of the `u_j`.
pub fn evaluate_gamma(
    data: &ToricData,
    t: &Triangulation,
    coh: &OrbifoldCohomology,
    c: &[i64],
    x: &EvaluationPoint,
    policy: &TruncationPolicy,
    essential_cones: Option<&[Cone]>,
) -> Result<GammaValue> {
    let zero_shift = vec![Complex64::new(0.0, 0.0); data.n()];
    evaluate_gamma_shifted(data, t, coh, c, x, policy, essential_cones, &zero_shift)
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_gamma_shifted(
    data: &ToricData,
    t: &Triangulation,
    coh: &OrbifoldCohomology,
    c: &[i64],
    x: &EvaluationPoint,
    policy: &TruncationPolicy,
    essential_cones: Option<&[Cone]>,
    shifts: &[Complex64],
) -> Result<GammaValue> {
    if !data.contains(c) {
        return Err(Error::InvalidInput(format!("c = {c:?} is not in the cone")));
    }
    let lnx = x.ln();
    let mut total = Vec::new();
    let mut ess = Vec::new();
    let mut non = Vec::new();
    let mut diagnostics = Vec::new();
    for (s, alg) in coh.sectors.iter().zip(&coh.algebras) {
        let terms = match enumerate_terms(data, t, c, s, policy, essential_cones) {
            Ok(v) => v,
            Err(Error::Infeasible(_)) => vec![],
            Err(e) => return Err(e),
        };
        let mut e_sum = alg.zero();
        let mut n_sum = alg.zero();
        let mut shells: BTreeMap<i128, AlgebraElement> = BTreeMap::new();
        for term in &terms {
            let v = term_value(alg, &term.l, &lnx, shifts);
            let shell = l1_norm(&term.l).floor().to_integer();
            let entry = shells.entry(shell).or_insert_with(|| alg.zero());
            *entry = &*entry + &v;
            if term.essential {
                e_sum = e_sum + v;
            } else {
                n_sum = n_sum + v;
            }
        }
        let incs: Vec<f64> = shells.values().map(|v| v.norm()).collect();
        let ratio = tail_ratio(&incs);
        if policy.tail_check {
            if let Some(r) = ratio {
                if r >= 1.0 {
                    return Err(Error::DivergenceSuspected { ratio: r });
                }
            }
        }
        diagnostics.push(SectorDiagnostics {
            sector: s.label(),
            terms: terms.len(),
            essential_terms: terms.iter().filter(|t| t.essential).count(),
            tail_ratio: ratio,
        });
        total.push(&e_sum + &n_sum);
        ess.push(e_sum);
        non.push(n_sum);
    }
    Ok(GammaValue {
        total: OrbifoldSum { components: total },
        essential: OrbifoldSum { components: ess },
        nonessential: OrbifoldSum { components: non },
        diagnostics,
    })
}

/// Truncated dual series: per sector, coefficients of the generators `F_I`
/// reduced in the compactly supported module.
#[derive(Debug, Clone)]
pub struct DualGammaValue {
    /// Per sector, reduced coordinates in the module basis.
    pub components: Vec<Vec<Complex64>>,
    /// Per sector, unreduced `I -> coefficient` data.
    pub raw: Vec<BTreeMap<Cone, AlgebraElement>>,
    pub terms: usize,
    /// Terms whose support is a cone with relative interior on the boundary of `C`.
    pub skipped_boundary_terms: usize,
}

pub fn evaluate_gamma_dual(
    data: &ToricData,
    t: &Triangulation,
    coh: &OrbifoldCohomology,
    c: &[i64],
    x: &EvaluationPoint,
    policy: &TruncationPolicy,
) -> Result<DualGammaValue> {
    if !data.interior_contains(c) {
        return Err(Error::NonInteriorPoint);
    }
    let lnx = x.ln();
    let mut components = Vec::new();
    let mut raw = Vec::new();
    let mut count = 0;
    let mut skipped = 0;
    for (s, alg) in coh.sectors.iter().zip(&coh.algebras) {
        let module = CohomologyModule::build(data, t, alg);
        let terms = match enumerate_terms(data, t, c, s, policy, None) {
            Ok(v) => v,
            Err(Error::Infeasible(_)) => vec![],
            Err(e) => return Err(e),
        };
        let mut acc: BTreeMap<Cone, AlgebraElement> = BTreeMap::new();
        for term in &terms {
            if module.generator_index(&term.support).is_none() {
                skipped += 1;
                continue;
            }
            count += 1;
            let v = dual_term_value(alg, &term.l, &lnx);
            let e = acc.entry(term.support.clone()).or_insert_with(|| alg.zero());
            *e = &*e + &v;
        }
        components.push(module.reduce(&acc));
        raw.push(acc);
    }
    Ok(DualGammaValue { components, raw, terms: count, skipped_boundary_terms: skipped })
}

/// Lattice points `sum of at most depth points`, inside `C` (or its interior).
pub fn c_battery(data: &ToricData, depth: usize, interior: bool) -> Vec<Vec<i64>> {
    let mut cur: Vec<Vec<i64>> = vec![vec![0; data.rank]];
    let mut all: std::collections::BTreeSet<Vec<i64>> = cur.iter().cloned().collect();
    for _ in 0..depth {
        let mut next = Vec::new();
        for c in &cur {
            for v in &data.points {
                let s: Vec<i64> = c.iter().zip(v).map(|(a, b)| a + b).collect();
                if all.insert(s.clone()) {
                    next.push(s);
                }
            }
        }
        cur = next;
    }
    let mut out: Vec<Vec<i64>> = all
        .into_iter()
        .filter(|c| if interior { data.interior_contains(c) } else { data.contains(c) })
        .collect();
    out.sort_by(|a, b| a.iter().sum::<i64>().cmp(&b.iter().sum::<i64>()).then(a.cmp(b)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum System {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionCheck {
    pub c: Vec<i64>,
    /// 1-based direction index.
    pub direction: usize,
    pub sector: String,
    pub pairs: usize,
    /// Largest relative deviation over matched term pairs.
    pub max_interior_residual: f64,
    /// Largest unmatched contribution at the truncation edge.
    pub boundary_max: f64,
    /// Largest term just beyond the truncation (of either series).
    pub dropped_max: f64,
    /// Derivatives of terms whose partner leaves the fan; must vanish.
    pub vanishing_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerCheck {
    pub c: Vec<i64>,
    pub sector: String,
    pub terms: usize,
    /// Every term multiplier `mu(sum l_i v_i + c) + sum mu(v_i) D_i` vanishes in rationals.
    pub exact_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeReport {
    pub system: System,
    pub truncation: u32,
    pub euler: Vec<EulerCheck>,
    pub recursion: Vec<RecursionCheck>,
}

/// Interior pairs count as exact below this relative deviation.
pub const RECURSION_TOL: f64 = 1e-12;

impl PdeReport {
    pub fn euler_ok(&self) -> bool {
        self.euler.iter().all(|e| e.exact_zero)
    }

    pub fn max_interior_residual(&self) -> f64 {
        self.recursion.iter().map(|r| r.max_interior_residual).fold(0.0, crate::linalg::nan_max)
    }

    pub fn recursion_ok(&self) -> bool {
        self.recursion.iter().all(|r| {
            r.max_interior_residual <= RECURSION_TOL
                && r.vanishing_max <= RECURSION_TOL
                && r.boundary_max <= r.dropped_max * (1.0 + 1e-9) + 1e-300
        })
    }

    pub fn ok(&self) -> bool {
        self.euler_ok() && self.recursion_ok()
    }
}

fn euler_exact(data: &ToricData, alg: &SectorAlgebra, l: &[Q], c: &[i64]) -> bool {
    // mu runs over the coordinate functionals, so mu(v_i) = v_i[k] and mu(c) = c[k].
    for (k, row) in data.dual_basis_values().iter().enumerate() {
        let scalar: Q = l.iter().zip(row).map(|(li, &m)| li * q(m as i128)).sum::<Q>() + q(c[k] as i128);
        if !scalar.is_zero() {
            return false;
        }
        let mut acc = vec![Q::zero(); alg.dim()];
        for (j, &m) in row.iter().enumerate() {
            for (a, d) in acc.iter_mut().zip(&alg.divisor_classes[j]) {
                *a += q(m as i128) * d;
            }
        }
        if acc.iter().any(|x| !x.is_zero()) {
            return false;
        }
    }
    true
}

fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, crate::linalg::nan_max);
    let den = a.iter().chain(b).map(|x| x.norm()).fold(0.0, crate::linalg::nan_max);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Residuals of the Euler equations and of `d_i Phi_c = Phi_{c + v_i}` on the
/// truncated term lists, matching term `l` of `Phi_c` with `l - e_i`.
pub fn pde_residuals(
    data: &ToricData,
    t: &Triangulation,
    coh: &OrbifoldCohomology,
    c_list: &[Vec<i64>],
    x: &EvaluationPoint,
    policy: &TruncationPolicy,
    system: System,
) -> Result<PdeReport> {
    let lnx = x.ln();
    let zero_shift = vec![Complex64::new(0.0, 0.0); data.n()];
    let wide = TruncationPolicy { degree_bound: policy.degree_bound + 2, tail_check: false };
    let mut euler = Vec::new();
    let mut recursion = Vec::new();
    for c in c_list {
        if system == System::Dual && !data.interior_contains(c) {
            return Err(Error::NonInteriorPoint);
        }
        for (s, alg) in coh.sectors.iter().zip(&coh.algebras) {
            let module = (system == System::Dual).then(|| CohomologyModule::build(data, t, alg));
            let list = |cc: &[i64], p: &TruncationPolicy| -> Result<Vec<LatticeTerm>> {
                match enumerate_terms(data, t, cc, s, p, None) {
                    Ok(v) => Ok(v),
                    Err(Error::Infeasible(_)) => Ok(vec![]),
                    Err(e) => Err(e),
                }
            };
            let base = list(c, policy)?;
            euler.push(EulerCheck {
                c: c.clone(),
                sector: s.label(),
                terms: base.len(),
                exact_zero: base.iter().all(|tm| euler_exact(data, alg, &tm.l, c)),
            });
            // Value of a term as a reduced vector (primal: algebra coords).
            let value = |l: &[Q], support: &Cone, pre: Option<&AlgebraElement>| -> Option<Vec<Complex64>> {
                match &module {
                    None => {
                        let v = term_value(alg, l, &lnx, &zero_shift);
                        Some(match pre {
                            Some(p) => (p * &v).coords,
                            None => v.coords,
                        })
                    }
                    Some(m) => {
                        m.generator_index(support)?;
                        let v = dual_term_value(alg, l, &lnx);
                        let v = match pre {
                            Some(p) => p * &v,
                            None => v,
                        };
                        let mut acc = BTreeMap::new();
                        acc.insert(support.clone(), v);
                        Some(m.reduce(&acc))
                    }
                }
            };
            for i in 0..data.n() {
                let ci: Vec<i64> = c.iter().zip(&data.points[i]).map(|(a, b)| a + b).collect();
                let shifted = list(&ci, policy)?;
                let shifted_keys: BTreeMap<&Vec<Q>, &LatticeTerm> = shifted.iter().map(|tm| (&tm.l, tm)).collect();
                let base_keys: BTreeMap<&Vec<Q>, &LatticeTerm> = base.iter().map(|tm| (&tm.l, tm)).collect();
                let mut pairs = 0;
                let mut max_res: f64 = 0.0;
                let mut boundary: f64 = 0.0;
                let mut vanishing: f64 = 0.0;
                // Terms of Phi_c.
                for tm in &base {
                    let factor = alg
                        .u(i)
                        .add_scalar(Complex64::new(tm.l[i].to_f64().unwrap(), 0.0))
                        .scale(1.0 / data_x(x, i));
                    let Some(d) = value(&tm.l, &tm.support, Some(&factor)) else { continue };
                    let mut partner = tm.l.clone();
                    partner[i] -= Q::one();
                    let pnorm = l1_norm(&partner);
                    match shifted_keys.get(&partner) {
                        Some(p) => {
                            let Some(pv) = value(&p.l, &p.support, None) else { continue };
                            pairs += 1;
                            max_res = max_res.max(rel_diff(&d, &pv));
                        }
                        None if pnorm > q(policy.degree_bound as i128) => {
                            boundary = boundary.max(norm(&d));
                        }
                        None => vanishing = vanishing.max(norm(&d)),
                    }
                }
                // Terms of Phi_{c+v_i} whose partner was truncated away.
                for p in &shifted {
                    let mut partner = p.l.clone();
                    partner[i] += Q::one();
                    if base_keys.contains_key(&partner) {
                        continue;
                    }
                    if let Some(pv) = value(&p.l, &p.support, None) {
                        boundary = boundary.max(norm(&pv));
                    }
                }
                // Terms just beyond the truncation.
                let mut dropped: f64 = 0.0;
                let bound = q(policy.degree_bound as i128);
                for tm in list(c, &wide)?.iter().filter(|tm| l1_norm(&tm.l) > bound) {
                    let factor = alg
                        .u(i)
                        .add_scalar(Complex64::new(tm.l[i].to_f64().unwrap(), 0.0))
                        .scale(1.0 / data_x(x, i));
                    if let Some(d) = value(&tm.l, &tm.support, Some(&factor)) {
                        dropped = dropped.max(norm(&d));
                    }
                }
                for tm in list(&ci, &wide)?.iter().filter(|tm| l1_norm(&tm.l) > bound) {
                    if let Some(v) = value(&tm.l, &tm.support, None) {
                        dropped = dropped.max(norm(&v));
                    }
                }
                recursion.push(RecursionCheck {
                    c: c.clone(),
                    direction: i + 1,
                    sector: s.label(),
                    pairs,
                    max_interior_residual: max_res,
                    boundary_max: boundary,
                    dropped_max: dropped,
                    vanishing_max: vanishing,
                });
            }
        }
    }
    Ok(PdeReport { system, truncation: policy.degree_bound, euler, recursion })
}

fn data_x(x: &EvaluationPoint, i: usize) -> Complex64 {
    x.x[i]
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, crate::linalg::nan_max)
}

pub fn describe_term(t: &LatticeTerm) -> String {
    let l: Vec<String> = t.l.iter().map(|x| x.to_string()).collect();
    format!("l=({}) I={} {}", l.join(","), fmt_cone(&t.support), if t.essential { "es" } else { "non-es" })
}
