//! Sector cohomology rings `H_gamma`: polynomial rings in the divisor classes
//! of the star of `sigma(gamma)` modulo linear and Stanley-Reisner relations,
//! with complex element arithmetic.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, q, Q};
use crate::special;
use crate::toric::{ToricData, Triangulation, TwistedSector};

pub const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * PI);

/// Exponent vector over the generator list.
pub type Monomial = Vec<u32>;

#[derive(Debug)]
pub struct MulTable {
    pub dim: usize,
    /// `table[a][b]` is the coordinate row of `e_a * e_b`.
    table: Vec<Vec<Vec<Complex64>>>,
}

#[derive(Debug, Clone)]
pub struct SectorAlgebra {
    pub sector: TwistedSector,
    pub generators: Vec<usize>,
    pub basis: Vec<Monomial>,
    pub mult_exact: Vec<Vec<Vec<Q>>>,
    /// Row of `D_j` for every `j` in `0..n`.
    pub divisor_classes: Vec<Vec<Q>>,
    table: Arc<MulTable>,
}

fn monomials_of_degree(nvars: usize, deg: u32) -> Vec<Monomial> {
    fn rec(nvars: usize, left: u32, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        if cur.len() == nvars - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e);
            rec(nvars, left - e, cur, out);
            cur.pop();
        }
    }
    if nvars == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(nvars, deg, &mut Vec::new(), &mut out);
    // Descending lex order: x_1 first, so row reduction pivots on earlier variables.
    out.sort_by(|a, b| b.cmp(a));
    out
}

fn mono_mul(a: &[u32], b: &[u32]) -> Monomial {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Homogeneous piece of the quotient in a single degree.
struct GradedPiece {
    monomials: Vec<Monomial>,
    /// Reduced rows, keyed by pivot column.
    reduced: BTreeMap<usize, Vec<Q>>,
    basis_cols: Vec<usize>,
}

impl SectorAlgebra {
    pub fn build(data: &ToricData, t: &Triangulation, sector: &TwistedSector) -> SectorAlgebra {
        let sigma = &sector.support;
        let generators = t.link_generators(sigma);
        let g = generators.len();
        // Ann(sigma) in the dual lattice.
        let sig_rows: Vec<Vec<Q>> = sigma
            .iter()
            .map(|&i| data.points[i].iter().map(|&x| q(x as i128)).collect())
            .collect();
        let ann = if sig_rows.is_empty() {
            (0..data.rank)
                .map(|c| (0..data.rank).map(|r| q((r == c) as i128)).collect())
                .collect()
        } else {
            linalg::kernel(&sig_rows, data.rank)
        };
        let linear: Vec<Vec<Q>> = ann
            .iter()
            .map(|mu| {
                generators
                    .iter()
                    .map(|&i| {
                        data.points[i]
                            .iter()
                            .zip(mu)
                            .fold(Q::zero(), |acc, (&x, m)| acc + q(x as i128) * m)
                    })
                    .collect()
            })
            .collect();
        // Squarefree monomials over generators that leave the star.
        let mut sr: Vec<Monomial> = Vec::new();
        for mask in 1u32..(1u32 << g) {
            let mut cone: Vec<usize> = sigma.clone();
            let mut mono = vec![0u32; g];
            for (b, &gi) in generators.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    cone.push(gi);
                    mono[b] = 1;
                }
            }
            cone.sort_unstable();
            if !t.is_cone(&cone) {
                sr.push(mono);
            }
        }
        let max_deg = (data.rank - sigma.len()) as u32 + 1;
        let mut pieces: Vec<GradedPiece> = Vec::new();
        for d in 0..=max_deg {
            let monos = monomials_of_degree(g, d);
            let index: BTreeMap<&Monomial, usize> = monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
            let mut rows: Vec<Vec<Q>> = Vec::new();
            if d >= 1 {
                for m in monomials_of_degree(g, d - 1) {
                    for lin in &linear {
                        let mut row = vec![Q::zero(); monos.len()];
                        for (b, coef) in lin.iter().enumerate() {
                            if coef.is_zero() {
                                continue;
                            }
                            let mut e = m.clone();
                            e[b] += 1;
                            row[index[&e]] += coef;
                        }
                        rows.push(row);
                    }
                }
            }
            for s in &sr {
                let sd: u32 = s.iter().sum();
                if sd > d {
                    continue;
                }
                for m in monomials_of_degree(g, d - sd) {
                    let mut row = vec![Q::zero(); monos.len()];
                    row[index[&mono_mul(&m, s)]] = q(1);
                    rows.push(row);
                }
            }
            let pivots = if rows.is_empty() { vec![] } else { linalg::rref(&mut rows) };
            let reduced: BTreeMap<usize, Vec<Q>> =
                pivots.iter().enumerate().map(|(r, &p)| (p, rows[r].clone())).collect();
            let basis_cols: Vec<usize> = (0..monos.len()).filter(|c| !reduced.contains_key(c)).collect();
            pieces.push(GradedPiece { monomials: monos, reduced, basis_cols });
        }
        debug_assert!(pieces.last().is_none_or(|p| p.basis_cols.is_empty()));
        let mut basis: Vec<Monomial> = Vec::new();
        let mut offset: Vec<usize> = Vec::new();
        for p in &pieces {
            offset.push(basis.len());
            basis.extend(p.basis_cols.iter().map(|&c| p.monomials[c].clone()));
        }
        let dim = basis.len();
        let normal_form = |m: &Monomial| -> Vec<Q> {
            let mut out = vec![Q::zero(); dim];
            let d: u32 = m.iter().sum();
            let Some(p) = pieces.get(d as usize) else { return out };
            let col = p.monomials.iter().position(|x| x == m).expect("monomial of right degree");
            if let Some(row) = p.reduced.get(&col) {
                for (k, &bc) in p.basis_cols.iter().enumerate() {
                    out[offset[d as usize] + k] = -row[bc];
                }
            } else {
                let k = p.basis_cols.iter().position(|&c| c == col).unwrap();
                out[offset[d as usize] + k] = q(1);
            }
            out
        };
        let mult_exact: Vec<Vec<Vec<Q>>> = basis
            .iter()
            .map(|a| basis.iter().map(|b| normal_form(&mono_mul(a, b))).collect())
            .collect();
        let divisor_classes: Vec<Vec<Q>> = (0..data.n())
            .map(|j| match generators.iter().position(|&gj| gj == j) {
                Some(b) => {
                    let mut e = vec![0u32; g];
                    e[b] = 1;
                    normal_form(&e)
                }
                None => vec![Q::zero(); dim],
            })
            .collect();
        let table = Arc::new(MulTable {
            dim,
            table: mult_exact
                .iter()
                .map(|r| r.iter().map(|v| v.iter().map(to_c).collect()).collect())
                .collect(),
        });
        SectorAlgebra { sector: sector.clone(), generators, basis, mult_exact, divisor_classes, table }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn one(&self) -> AlgebraElement {
        self.scalar(Complex64::new(1.0, 0.0))
    }

    pub fn zero(&self) -> AlgebraElement {
        self.scalar(Complex64::new(0.0, 0.0))
    }

    pub fn scalar(&self, z: Complex64) -> AlgebraElement {
        let mut coords = vec![Complex64::new(0.0, 0.0); self.dim()];
        coords[0] = z;
        AlgebraElement { table: self.table.clone(), coords }
    }

    pub fn element(&self, coords: Vec<Complex64>) -> AlgebraElement {
        assert_eq!(coords.len(), self.dim());
        AlgebraElement { table: self.table.clone(), coords }
    }

    pub fn divisor(&self, j: usize) -> AlgebraElement {
        self.element(self.divisor_classes[j].iter().map(to_c).collect())
    }

    /// `u_j = D_j / 2 pi i`.
    pub fn u(&self, j: usize) -> AlgebraElement {
        self.divisor(j).scale(1.0 / TWO_PI_I)
    }

    /// Exact product of two rational coordinate rows.
    pub fn mul_exact(&self, a: &[Q], b: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim()];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                for (o, m) in out.iter_mut().zip(&self.mult_exact[i][j]) {
                    *o += x * y * m;
                }
            }
        }
        out
    }

    /// Localization point `r_j = exp(D_j - 2 pi i gamma_j)`.
    pub fn localization_point(&self) -> Vec<AlgebraElement> {
        (0..self.divisor_classes.len())
            .map(|j| {
                let g = self.sector.coords[j].to_f64().unwrap_or(0.0);
                (self.divisor(j) - self.scalar(TWO_PI_I * g)).exp()
            })
            .collect()
    }

    /// Stable text dump of the basis and multiplication table.
    pub fn dump(&self) -> String {
        let name = |m: &Monomial| -> String {
            let parts: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(b, &e)| {
                    let v = format!("D{}", self.generators[b] + 1);
                    if e == 1 { v } else { format!("{v}^{e}") }
                })
                .collect();
            if parts.is_empty() { "1".into() } else { parts.join("*") }
        };
        let row = |r: &[Q]| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "sector {}", self.sector.label());
        let _ = writeln!(s, "basis {}", self.basis.iter().map(name).collect::<Vec<_>>().join(" "));
        for (j, d) in self.divisor_classes.iter().enumerate() {
            let _ = writeln!(s, "D{} = [{}]", j + 1, row(d));
        }
        for (a, ra) in self.mult_exact.iter().enumerate() {
            for (b, rb) in ra.iter().enumerate() {
                let _ = writeln!(s, "e{a}*e{b} = [{}]", row(rb));
            }
        }
        s
    }
}

fn to_c(x: &Q) -> Complex64 {
    Complex64::new(x.to_f64().unwrap_or(f64::NAN), 0.0)
}

/// Element of a sector algebra, stored as complex coordinates in its basis.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    table: Arc<MulTable>,
    pub coords: Vec<Complex64>,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl AlgebraElement {
    pub fn dim(&self) -> usize {
        self.table.dim
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.coords[0]
    }

    pub fn nilpotent_part(&self) -> AlgebraElement {
        let mut c = self.coords.clone();
        c[0] = Complex64::new(0.0, 0.0);
        self.with(c)
    }

    fn with(&self, coords: Vec<Complex64>) -> AlgebraElement {
        AlgebraElement { table: self.table.clone(), coords }
    }

    pub fn same_algebra(&self, z: Complex64) -> AlgebraElement {
        let mut c = vec![Complex64::new(0.0, 0.0); self.dim()];
        c[0] = z;
        self.with(c)
    }

    pub fn scale(&self, z: Complex64) -> AlgebraElement {
        self.with(self.coords.iter().map(|x| x * z).collect())
    }

    pub fn add_scalar(&self, z: Complex64) -> AlgebraElement {
        let mut c = self.coords.clone();
        c[0] += z;
        self.with(c)
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x.norm()).fold(0.0, crate::linalg::nan_max)
    }

    /// `f(self)` from the Taylor coefficients `f^{(m)}(a_0)/m!` at the scalar part.
    pub fn taylor(&self, coefs: &[Complex64]) -> AlgebraElement {
        let n = self.nilpotent_part();
        let mut out = self.same_algebra(coefs[0]);
        let mut pow = self.same_algebra(Complex64::new(1.0, 0.0));
        for c in coefs.iter().skip(1) {
            pow = &pow * &n;
            if pow.coords.iter().all(|x| x.is_zero()) {
                break;
            }
            out = out + pow.scale(*c);
        }
        out
    }

    /// Number of Taylor coefficients that can contribute.
    pub fn order(&self) -> usize {
        self.dim()
    }

    pub fn exp(&self) -> AlgebraElement {
        let e = self.scalar_part().exp();
        let mut coefs = Vec::with_capacity(self.order());
        let mut f = 1.0;
        for m in 0..self.order() {
            if m > 0 {
                f *= m as f64;
            }
            coefs.push(e / f);
        }
        self.taylor(&coefs)
    }

    pub fn inverse(&self) -> Result<AlgebraElement> {
        let a0 = self.scalar_part();
        if a0.norm() == 0.0 {
            return Err(Error::NotInvertible);
        }
        let inv = a0.inv();
        let coefs: Vec<Complex64> = (0..self.order())
            .map(|m| (-1.0f64).powi(m as i32) * inv.powu(m as u32 + 1))
            .collect();
        Ok(self.taylor(&coefs))
    }

    /// Principal logarithm; the scalar part must avoid the closed negative axis.
    pub fn ln(&self) -> Result<AlgebraElement> {
        let a0 = self.scalar_part();
        if a0.im == 0.0 && a0.re <= 0.0 {
            return Err(Error::BranchCut(format!("{a0}")));
        }
        let mut coefs = vec![a0.ln()];
        for m in 1..self.order() {
            let s = if m % 2 == 1 { 1.0 } else { -1.0 };
            coefs.push(a0.inv().powu(m as u32) * (s / m as f64));
        }
        Ok(self.taylor(&coefs))
    }

    pub fn powi(&self, k: i64) -> Result<AlgebraElement> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut out = self.same_algebra(Complex64::new(1.0, 0.0));
        for _ in 0..k.unsigned_abs() {
            out = &out * &base;
        }
        Ok(out)
    }

    /// `1/Gamma(1 + z + self)`.
    pub fn reciprocal_gamma_shifted(&self, z: Complex64) -> AlgebraElement {
        let coefs = special::rgamma_taylor(1.0 + z + self.scalar_part(), self.order());
        self.taylor(&coefs)
    }

    /// Product of `1 - exp(-2 pi i self)`, which vanishes when the scalar part is an integer.
    pub fn one_minus_exp_neg_2pii(&self) -> AlgebraElement {
        self.same_algebra(Complex64::new(1.0, 0.0)) - self.scale(-TWO_PI_I).exp()
    }
}

/// `x^a = exp(a (ln|x| + i arg x))` with `arg x` in `(-pi, pi)`.
pub fn branched_power(x: Complex64, a: &AlgebraElement) -> Result<AlgebraElement> {
    if x.im == 0.0 && x.re <= 0.0 {
        return Err(Error::BranchCut(format!("{x}")));
    }
    Ok(a.scale(x.ln()).exp())
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: AlgebraElement) -> AlgebraElement {
        &self + &rhs
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.with(self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect())
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: AlgebraElement) -> AlgebraElement {
        &self - &rhs
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.with(self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect())
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        let n = self.dim();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coords.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a * b;
                for (o, m) in out.iter_mut().zip(&self.table.table[i][j]) {
                    *o += ab * m;
                }
            }
        }
        self.with(out)
    }
}

impl Mul for AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: AlgebraElement) -> AlgebraElement {
        &self * &rhs
    }
}

/// One algebra element per twisted sector of a triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbifoldSum {
    pub components: Vec<AlgebraElement>,
}

impl OrbifoldSum {
    pub fn total_len(&self) -> usize {
        self.components.iter().map(|c| c.dim()).sum()
    }

    /// Concatenated coordinates.
    pub fn flatten(&self) -> Vec<Complex64> {
        self.components.iter().flat_map(|c| c.coords.iter().copied()).collect()
    }
}

/// All sector algebras of a triangulation, in `compute_box` order.
#[derive(Debug, Clone)]
pub struct OrbifoldCohomology {
    pub sectors: Vec<TwistedSector>,
    pub algebras: Vec<SectorAlgebra>,
}

impl OrbifoldCohomology {
    pub fn build(data: &ToricData, t: &Triangulation) -> OrbifoldCohomology {
        let sectors = crate::toric::compute_box(data, t);
        let algebras = sectors.iter().map(|s| SectorAlgebra::build(data, t, s)).collect();
        OrbifoldCohomology { sectors, algebras }
    }

    pub fn total_dim(&self) -> usize {
        self.algebras.iter().map(|a| a.dim()).sum()
    }

    pub fn sector_index(&self, s: &TwistedSector) -> Option<usize> {
        self.sectors.iter().position(|x| x == s)
    }

    /// Offsets of each sector block in the flattened coordinates.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.algebras.len());
        let mut acc = 0;
        for a in &self.algebras {
            out.push(acc);
            acc += a.dim();
        }
        out
    }

    pub fn zero(&self) -> OrbifoldSum {
        OrbifoldSum { components: self.algebras.iter().map(|a| a.zero()).collect() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraSummary {
    pub sector: String,
    pub generators: Vec<usize>,
    pub basis: Vec<String>,
    pub divisor_classes: Vec<Vec<String>>,
}

impl From<&SectorAlgebra> for AlgebraSummary {
    fn from(a: &SectorAlgebra) -> Self {
        AlgebraSummary {
            sector: a.sector.label(),
            generators: a.generators.iter().map(|g| g + 1).collect(),
            basis: a
                .basis
                .iter()
                .map(|m| {
                    let parts: Vec<String> = m
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e > 0)
                        .map(|(b, &e)| format!("D{}^{}", a.generators[b] + 1, e))
                        .collect();
                    if parts.is_empty() { "1".into() } else { parts.join("*") }
                })
                .collect(),
            divisor_classes: a
                .divisor_classes
                .iter()
                .map(|r| r.iter().map(|x| x.to_string()).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::Fixture;
    use crate::toric::compute_box;

    fn close(a: &AlgebraElement, b: &AlgebraElement, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn conifold_plus_untwisted() {
        let f = Fixture::conifold();
        let b = compute_box(&f.data, f.plus());
        let h = SectorAlgebra::build(&f.data, f.plus(), &b[0]);
        assert_eq!(h.dim(), 2);
        // basis {1, D4}
        assert_eq!(h.basis[1], vec![0, 0, 0, 1]);
        let t = vec![q(0), q(1)];
        let neg_t = vec![q(0), q(-1)];
        assert_eq!(h.divisor_classes, vec![t.clone(), neg_t.clone(), neg_t, t.clone()]);
        assert_eq!(h.mul_exact(&t, &t), vec![q(0), q(0)]);
    }

    #[test]
    fn a1_algebras() {
        let a = Fixture::a1();
        let bp = compute_box(&a.data, a.plus());
        let h = SectorAlgebra::build(&a.data, a.plus(), &bp[0]);
        assert_eq!(h.dim(), 2);
        assert_eq!(h.divisor_classes[1], vec![q(0), q(-2)]);
        let bm = compute_box(&a.data, a.minus());
        for s in &bm {
            let h = SectorAlgebra::build(&a.data, a.minus(), s);
            assert_eq!(h.dim(), 1);
            assert!(h.divisor_classes.iter().all(|r| r[0].is_zero()));
        }
        let h = SectorAlgebra::build(&a.data, a.minus(), &bm[1]);
        assert!(h.generators.is_empty());
        let r: Vec<Complex64> = h.localization_point().iter().map(|x| x.scalar_part()).collect();
        for (x, e) in r.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - e).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_relations_hold_exactly() {
        for f in [Fixture::conifold(), Fixture::a1()] {
            for t in &f.triangulations {
                for s in compute_box(&f.data, t) {
                    let h = SectorAlgebra::build(&f.data, t, &s);
                    for row in f.data.dual_basis_values() {
                        // Only functionals vanishing on sigma(gamma) give relations.
                        if s.support.iter().any(|&i| row[i] != 0) {
                            continue;
                        }
                        let mut acc = vec![Q::zero(); h.dim()];
                        for (j, &m) in row.iter().enumerate() {
                            for (a, d) in acc.iter_mut().zip(&h.divisor_classes[j]) {
                                *a += q(m as i128) * d;
                            }
                        }
                        assert!(acc.iter().all(|x| x.is_zero()));
                    }
                }
            }
        }
    }

    #[test]
    fn exp_inverse_and_powers() {
        let f = Fixture::conifold();
        let b = compute_box(&f.data, f.plus());
        let h = SectorAlgebra::build(&f.data, f.plus(), &b[0]);
        let t = h.divisor(3);
        assert!(close(&h.zero().exp(), &h.one(), 0.0));
        let two_minus = h.scalar(Complex64::new(2.0, 0.0)) - t.scale(Complex64::new(-1.0, 0.0)).exp();
        let inv = two_minus.inverse().unwrap();
        // (1 + t)^{-1} = 1 - t
        assert!(close(&inv, &h.element(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]), 1e-15));
        assert!(close(&t.exp().inverse().unwrap(), &t.scale(Complex64::new(-1.0, 0.0)).exp(), 1e-15));
        assert!(matches!(t.inverse(), Err(Error::NotInvertible)));
        let e = Complex64::new(1.0f64.exp(), 0.0);
        assert!(close(&branched_power(e, &t).unwrap(), &(h.one() + t.clone()), 1e-15));
        assert!(matches!(branched_power(Complex64::new(-1.0, 0.0), &t), Err(Error::BranchCut(_))));
        let g = t.reciprocal_gamma_shifted(Complex64::new(-1.0, 0.0));
        assert!(close(&g, &t, 1e-13));
        let g = h.zero().reciprocal_gamma_shifted(Complex64::new(0.5, 0.0));
        assert!((g.scalar_part() - 2.0 / PI.sqrt()).norm() < 1e-13);
    }

    #[test]
    fn localization_conifold() {
        let f = Fixture::conifold();
        let b = compute_box(&f.data, f.plus());
        let h = SectorAlgebra::build(&f.data, f.plus(), &b[0]);
        let r = h.localization_point();
        let t = h.divisor(3);
        assert!(close(&r[0], &t.exp(), 1e-15));
        assert!(close(&r[1], &t.scale(Complex64::new(-1.0, 0.0)).exp(), 1e-15));
        assert!(close(&r[3], &t.exp(), 1e-15));
    }

    #[test]
    fn dump_is_stable() {
        let a = Fixture::a1();
        let b = compute_box(&a.data, a.plus());
        let h = SectorAlgebra::build(&a.data, a.plus(), &b[0]);
        let d = h.dump();
        assert!(d.starts_with("sector 0\nbasis 1 D3\n"));
        assert_eq!(d, SectorAlgebra::build(&a.data, a.plus(), &b[0]).dump());
    }
}
