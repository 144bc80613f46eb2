//! Exact lattice combinatorics of the point configuration: validation,
//! triangulation checks, circuits of a flip, stars, twisted sectors and the
//! liftings of twisted sectors to rational solutions of `sum l_i v_i = -c`.
//!
//! Indices are 0-based internally. Fixture files and CLI output use 1-based
//! indices.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, frac, q, Q};

/// Sorted index set of points spanning a simplicial cone.
pub type Cone = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToricData {
    pub rank: usize,
    pub points: Vec<Vec<i64>>,
    pub deg: Vec<i64>,
    /// Indices of the points generating the extreme rays of `C`.
    pub cone_rays: Vec<usize>,
    /// Primitive inward facet normals of `C`.
    pub facets: Vec<Vec<i64>>,
}

impl ToricData {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    fn qpoint(&self, i: usize) -> Vec<Q> {
        self.points[i].iter().map(|&x| q(x as i128)).collect()
    }

    /// `sum_i coeffs_i v_i` over the rationals.
    pub fn combine(&self, coeffs: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.rank];
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(&self.points[i]) {
                *o += *c * q(x as i128);
            }
        }
        out
    }

    pub fn combine_int(&self, coeffs: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.rank];
        for (i, &c) in coeffs.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(&self.points[i]) {
                *o += c * x;
            }
        }
        out
    }

    /// True when `p` lies in the closed cone `C`.
    pub fn contains(&self, p: &[i64]) -> bool {
        self.facets.iter().all(|f| dot(f, p) >= 0)
    }

    /// True when `p` lies in the interior of `C`.
    pub fn interior_contains(&self, p: &[i64]) -> bool {
        !p.iter().all(|&x| x == 0) && self.facets.iter().all(|f| dot(f, p) > 0)
    }

    /// Rows of the dual basis functionals evaluated on the points: `mu_c(v_i) = v_i[c]`.
    pub fn dual_basis_values(&self) -> Vec<Vec<i64>> {
        (0..self.rank)
            .map(|c| self.points.iter().map(|v| v[c]).collect())
            .collect()
    }
}

pub fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn primitive(v: Vec<Q>) -> Vec<i64> {
    let lcm = v.iter().fold(1i128, |acc, x| num_integer::lcm(acc, *x.denom()));
    let ints: Vec<i64> = v.iter().map(|x| (x * q(lcm)).to_integer() as i64).collect();
    let g = linalg::gcd_slice(&ints).max(1);
    ints.into_iter().map(|x| x / g).collect()
}

/// Primitive normal of the hyperplane spanned by `idx`, if it has corank one.
fn hyperplane_normal(points: &[Vec<i64>], idx: &[usize], rank: usize) -> Option<Vec<i64>> {
    let rows: Vec<Vec<Q>> = idx
        .iter()
        .map(|&i| points[i].iter().map(|&x| q(x as i128)).collect())
        .collect();
    let k = linalg::kernel(&rows, rank);
    if k.len() != 1 {
        return None;
    }
    Some(primitive(k[0].clone()))
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, size, 0, &mut Vec::new(), &mut out);
    out
}

/// Validates the point configuration and computes the cone `C` it spans.
pub fn validate_toric_data(points: Vec<Vec<i64>>, deg: Vec<i64>) -> Result<ToricData> {
    if points.is_empty() {
        return Err(Error::InvalidInput("empty point list".into()));
    }
    let rank = deg.len();
    if rank == 0 || points.iter().any(|p| p.len() != rank) {
        return Err(Error::InvalidInput("inconsistent point dimensions".into()));
    }
    for (i, p) in points.iter().enumerate() {
        let d = dot(p, &deg);
        if d != 1 {
            return Err(Error::NonUnitDegree { index: i, degree: d });
        }
    }
    let set: BTreeSet<&Vec<i64>> = points.iter().collect();
    if set.len() != points.len() {
        return Err(Error::InvalidInput("repeated point".into()));
    }
    let qrows: Vec<Vec<Q>> = points.iter().map(|p| p.iter().map(|&x| q(x as i128)).collect()).collect();
    let r = linalg::rank(&qrows);
    if r != rank {
        return Err(Error::RankDeficient { expected: rank, found: r });
    }
    let all: Vec<usize> = (0..points.len()).collect();
    let mut facets: BTreeSet<Vec<i64>> = BTreeSet::new();
    if rank >= 2 {
        for s in subsets(&all, rank - 1) {
            let Some(nrm) = hyperplane_normal(&points, &s, rank) else { continue };
            let vals: Vec<i64> = points.iter().map(|p| dot(&nrm, p)).collect();
            if vals.iter().all(|&v| v >= 0) {
                facets.insert(nrm);
            } else if vals.iter().all(|&v| v <= 0) {
                facets.insert(nrm.iter().map(|x| -x).collect());
            }
        }
    }
    let facets: Vec<Vec<i64>> = facets.into_iter().collect();
    let cone_rays: Vec<usize> = (0..points.len())
        .filter(|&i| {
            if rank == 1 {
                return true;
            }
            let on: Vec<Vec<Q>> = facets
                .iter()
                .filter(|f| dot(f, &points[i]) == 0)
                .map(|f| f.iter().map(|&x| q(x as i128)).collect())
                .collect();
            linalg::rank(&on) == rank - 1
        })
        .collect();
    Ok(ToricData { rank, points, deg, cone_rays, facets })
}

/// Checks user-declared ray generators against the computed hull.
pub fn check_declared_rays(data: &ToricData, rays: &[Vec<i64>]) -> Result<()> {
    for r in rays {
        if !data.points.contains(r) {
            return Err(Error::MissingRay(r.clone()));
        }
    }
    for &i in &data.cone_rays {
        if !rays.contains(&data.points[i]) {
            return Err(Error::MissingRay(data.points[i].clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triangulation {
    pub label: String,
    pub maximal_cones: Vec<Cone>,
}

impl Triangulation {
    pub fn new(label: impl Into<String>, cones: Vec<Vec<usize>>) -> Self {
        let mut maximal_cones: Vec<Cone> = cones
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        maximal_cones.sort();
        maximal_cones.dedup();
        Triangulation { label: label.into(), maximal_cones }
    }

    /// True when `s` is a face of some maximal cone.
    pub fn is_cone(&self, s: &[usize]) -> bool {
        self.maximal_cones.iter().any(|c| s.iter().all(|i| c.contains(i)))
    }

    /// All cones (faces of maximal cones), the empty cone included.
    pub fn all_cones(&self) -> Vec<Cone> {
        let mut set = BTreeSet::new();
        for c in &self.maximal_cones {
            for k in 0..=c.len() {
                for s in subsets(c, k) {
                    set.insert(s);
                }
            }
        }
        let mut v: Vec<Cone> = set.into_iter().collect();
        v.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        v
    }

    /// Indices `i` not in `sigma` such that `sigma + i` is a cone.
    pub fn link_generators(&self, sigma: &[usize]) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for c in &self.maximal_cones {
            if sigma.iter().all(|i| c.contains(i)) {
                out.extend(c.iter().copied().filter(|i| !sigma.contains(i)));
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriangulationCheck {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

fn cone_coefficients(data: &ToricData, cone: &[usize], p: &[Q]) -> Option<Vec<Q>> {
    // Solve sum_j lambda_j v_{cone_j} = p.
    let rows: Vec<Vec<Q>> = (0..data.rank)
        .map(|c| cone.iter().map(|&i| q(data.points[i][c] as i128)).collect())
        .collect();
    linalg::solve(&rows, p)
}

fn strict_membership(data: &ToricData, cone: &[usize], p: &[Q]) -> Option<bool> {
    let lam = cone_coefficients(data, cone, p)?;
    if lam.iter().any(|x| x.is_zero()) {
        return None;
    }
    Some(lam.iter().all(|x| x.is_positive()))
}

/// Checks that the maximal cones form a simplicial subdivision of `C`.
///
/// The test is combinatorial: every maximal cone is simplicial and full
/// dimensional, each interior wall separates exactly two cones lying on
/// opposite sides, each boundary wall belongs to one cone, and a generic point
/// of `C` is covered exactly once. Seeded random points provide a redundant
/// cross-check of the covering degree.
pub fn check_triangulation(data: &ToricData, t: &Triangulation) -> TriangulationCheck {
    let mut diag = Vec::new();
    let d = data.rank;
    for c in &t.maximal_cones {
        if c.iter().any(|&i| i >= data.n()) {
            diag.push(format!("cone {} has an index out of range", fmt_cone(c)));
            continue;
        }
        let rows: Vec<Vec<Q>> = c.iter().map(|&i| data.qpoint(i)).collect();
        if c.len() != d || linalg::rank(&rows) != d {
            diag.push(format!("cone {} is not a full-dimensional simplicial cone", fmt_cone(c)));
        }
    }
    if !diag.is_empty() || t.maximal_cones.is_empty() {
        if t.maximal_cones.is_empty() {
            diag.push("no maximal cones".into());
        }
        return TriangulationCheck { valid: false, diagnostics: diag };
    }
    let mut walls: BTreeMap<Cone, Vec<usize>> = BTreeMap::new();
    for c in &t.maximal_cones {
        for &opp in c {
            let f: Cone = c.iter().copied().filter(|&i| i != opp).collect();
            walls.entry(f).or_default().push(opp);
        }
    }
    for (wall, opps) in &walls {
        let nrm = hyperplane_normal(&data.points, wall, d).unwrap_or_default();
        let on_boundary = data
            .facets
            .iter()
            .any(|f| wall.iter().all(|&i| dot(f, &data.points[i]) == 0));
        if d == 1 {
            continue;
        }
        if on_boundary {
            if opps.len() != 1 {
                diag.push(format!("boundary wall {} lies in {} cones", fmt_cone(wall), opps.len()));
            }
        } else if opps.len() != 2 {
            diag.push(format!("interior wall {} lies in {} cones", fmt_cone(wall), opps.len()));
        } else {
            let s0 = dot(&nrm, &data.points[opps[0]]).signum();
            let s1 = dot(&nrm, &data.points[opps[1]]).signum();
            if s0 == s1 {
                diag.push(format!(
                    "cones through wall {} overlap (both on the same side)",
                    fmt_cone(wall)
                ));
            }
        }
    }
    // Covering degree at seeded generic points of C.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 64 && attempts < 1000 {
        attempts += 1;
        let w: Vec<Q> = (0..data.n()).map(|_| Q::new(rng.gen_range(1..=997), 97)).collect();
        let p = data.combine(&w);
        let mut count = 0;
        let mut generic = true;
        for c in &t.maximal_cones {
            match strict_membership(data, c, &p) {
                Some(true) => count += 1,
                Some(false) => {}
                None => generic = false,
            }
        }
        if !generic {
            continue;
        }
        checked += 1;
        if count != 1 {
            diag.push(format!("generic point covered {count} times"));
            break;
        }
    }
    TriangulationCheck { valid: diag.is_empty(), diagnostics: diag }
}

pub fn fmt_cone(c: &[usize]) -> String {
    let parts: Vec<String> = c.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// Primitive linear relation governing the wall between two triangulations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Circuit {
    pub h: Vec<i64>,
    pub i_plus: Vec<usize>,
    pub i_minus: Vec<usize>,
    pub support: Vec<usize>,
    /// `sum_{i in I+} h_i v_i`, the ray added by the common blow-up.
    pub vhat: Vec<i64>,
}

impl Circuit {
    pub fn from_relation(data: &ToricData, h: Vec<i64>) -> Circuit {
        let i_plus: Vec<usize> = (0..h.len()).filter(|&i| h[i] > 0).collect();
        let i_minus: Vec<usize> = (0..h.len()).filter(|&i| h[i] < 0).collect();
        let support: Vec<usize> = (0..h.len()).filter(|&i| h[i] != 0).collect();
        let mut vhat = vec![0; data.rank];
        for &i in &i_plus {
            for (o, &x) in vhat.iter_mut().zip(&data.points[i]) {
                *o += h[i] * x;
            }
        }
        Circuit { h, i_plus, i_minus, support, vhat }
    }

    pub fn negated(&self, data: &ToricData) -> Circuit {
        Circuit::from_relation(data, self.h.iter().map(|x| -x).collect())
    }

    pub fn side(&self, side: Side) -> &[usize] {
        match side {
            Side::Plus => &self.i_plus,
            Side::Minus => &self.i_minus,
        }
    }

    pub fn h_q(&self) -> Vec<Q> {
        self.h.iter().map(|&x| q(x as i128)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Maximal cones of the form `F + (I \ i)` with `i` on the given side.
pub fn essential_cones(t: &Triangulation, circuit: &Circuit, side: Side) -> Vec<Cone> {
    let support = &circuit.support;
    t.maximal_cones
        .iter()
        .filter(|c| {
            let missing: Vec<usize> = support.iter().copied().filter(|i| !c.contains(i)).collect();
            missing.len() == 1 && circuit.side(side).contains(&missing[0])
        })
        .cloned()
        .collect()
}

fn flip(t: &Triangulation, circuit: &Circuit) -> Option<Vec<Cone>> {
    let ess = essential_cones(t, circuit, Side::Plus);
    if ess.is_empty() {
        return None;
    }
    let mut out: BTreeSet<Cone> = t
        .maximal_cones
        .iter()
        .filter(|c| !ess.contains(c))
        .cloned()
        .collect();
    for c in &ess {
        let f: Vec<usize> = c.iter().copied().filter(|i| !circuit.support.contains(i)).collect();
        for &k in &circuit.i_minus {
            let mut nc: Cone = f.clone();
            nc.extend(circuit.support.iter().copied().filter(|&i| i != k));
            nc.sort_unstable();
            out.insert(nc);
        }
    }
    Some(out.into_iter().collect())
}

/// Finds the circuit of the flip `t_plus -> t_minus`, signed so that the
/// essential cones of `t_plus` are those missing one index of `I+`.
pub fn find_circuit(data: &ToricData, t_plus: &Triangulation, t_minus: &Triangulation) -> Result<Circuit> {
    if t_plus.maximal_cones == t_minus.maximal_cones {
        return Err(Error::NotAdjacent("identical triangulations".into()));
    }
    let a: BTreeSet<&Cone> = t_plus.maximal_cones.iter().collect();
    let b: BTreeSet<&Cone> = t_minus.maximal_cones.iter().collect();
    let mut u: BTreeSet<usize> = BTreeSet::new();
    for c in a.symmetric_difference(&b) {
        u.extend(c.iter().copied());
    }
    let u: Vec<usize> = u.into_iter().collect();
    for size in 2..=(data.rank + 1).min(u.len()) {
        for s in subsets(&u, size) {
            let cols: Vec<Vec<Q>> = (0..data.rank)
                .map(|c| s.iter().map(|&i| q(data.points[i][c] as i128)).collect())
                .collect();
            let k = linalg::kernel(&cols, s.len());
            if k.len() != 1 || k[0].iter().any(|x| x.is_zero()) {
                continue;
            }
            let prim = primitive(k[0].clone());
            let mut h = vec![0i64; data.n()];
            for (j, &i) in s.iter().enumerate() {
                h[i] = prim[j];
            }
            for sign in [1i64, -1] {
                let hs: Vec<i64> = h.iter().map(|x| sign * x).collect();
                let circuit = Circuit::from_relation(data, hs);
                if flip(t_plus, &circuit).as_deref() == Some(&t_minus.maximal_cones[..]) {
                    return Ok(circuit);
                }
            }
        }
    }
    Err(Error::NotAdjacent("no circuit flip maps one triangulation onto the other".into()))
}

/// All cones of `t` containing `sigma`.
pub fn star_of(sigma: &[usize], t: &Triangulation) -> Result<Vec<Cone>> {
    let mut s = sigma.to_vec();
    s.sort_unstable();
    if !t.is_cone(&s) {
        return Err(Error::NotACone(s));
    }
    Ok(t.all_cones().into_iter().filter(|c| s.iter().all(|i| c.contains(i))).collect())
}

/// A twisted sector `gamma = sum gamma_j v_j` with `gamma_j` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TwistedSector {
    #[serde(serialize_with = "ser_qvec")]
    pub coords: Vec<Q>,
    pub support: Cone,
    pub point: Vec<i64>,
}

pub fn ser_qvec<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&x.to_string())?;
    }
    seq.end()
}

impl TwistedSector {
    pub fn from_coords(data: &ToricData, coords: Vec<Q>) -> Option<TwistedSector> {
        let support: Cone = (0..coords.len()).filter(|&i| !coords[i].is_zero()).collect();
        let p = data.combine(&coords);
        if p.iter().any(|x| !x.is_integer()) {
            return None;
        }
        let point = p.iter().map(|x| x.to_integer() as i64).collect();
        Some(TwistedSector { coords, support, point })
    }

    pub fn is_untwisted(&self) -> bool {
        self.support.is_empty()
    }

    /// Human-readable label: `0` or the list of nonzero fractional coordinates.
    pub fn label(&self) -> String {
        if self.is_untwisted() {
            return "0".into();
        }
        let parts: Vec<String> = self.coords.iter().map(|x| x.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

/// Twisted sectors of `t`, found by scanning the half-open parallelepiped of
/// every maximal cone. The untwisted sector comes first.
pub fn compute_box(data: &ToricData, t: &Triangulation) -> Vec<TwistedSector> {
    let mut found: BTreeSet<Vec<Q>> = BTreeSet::new();
    found.insert(vec![Q::zero(); data.n()]);
    for c in &t.maximal_cones {
        let m: Vec<Vec<i64>> = c.iter().map(|&i| data.points[i].clone()).collect();
        if m.len() != data.rank {
            continue;
        }
        let index = linalg::det_i64(&m).abs();
        if index <= 1 {
            continue;
        }
        let dim = c.len();
        let total = (index as usize).pow(dim as u32);
        for code in 0..total {
            let mut rem = code;
            let mut coords = vec![Q::zero(); data.n()];
            for &i in c {
                coords[i] = Q::new((rem % index as usize) as i128, index);
                rem /= index as usize;
            }
            if data.combine(&coords).iter().all(|x| x.is_integer()) {
                found.insert(coords);
            }
        }
    }
    let mut out: Vec<TwistedSector> = found
        .into_iter()
        .filter_map(|c| TwistedSector::from_coords(data, c))
        .collect();
    out.sort_by(|a, b| a.support.len().cmp(&b.support.len()).then(a.coords.cmp(&b.coords)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum EssentialMode {
    /// `sigma(gamma)` is contained in some essential cone.
    #[default]
    Containment,
    /// `sigma(gamma)` is itself an essential cone.
    Equality,
}

pub fn is_essential_sector(sector: &TwistedSector, ess: &[Cone], mode: EssentialMode) -> bool {
    match mode {
        EssentialMode::Containment => ess
            .iter()
            .any(|c| sector.support.iter().all(|i| c.contains(i))),
        EssentialMode::Equality => ess.contains(&sector.support),
    }
}

pub fn essential_sectors(
    sectors: &[TwistedSector],
    t: &Triangulation,
    circuit: &Circuit,
    side: Side,
    mode: EssentialMode,
) -> Vec<TwistedSector> {
    let ess = essential_cones(t, circuit, side);
    sectors
        .iter()
        .filter(|s| is_essential_sector(s, &ess, mode))
        .cloned()
        .collect()
}

/// A rational solution `l` of `sum l_i v_i = -c` whose fractional parts
/// `{-l_i}` are the coordinates of `sector`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lift {
    pub sector: TwistedSector,
    pub c: Vec<i64>,
    #[serde(serialize_with = "ser_qvec")]
    pub l: Vec<Q>,
}

pub fn l1_norm(l: &[Q]) -> Q {
    l.iter().map(|x| x.abs()).sum()
}

/// Deterministic lift: among `-gamma + m` (integer `m`) solving the
/// equation, the one with the smallest l1 norm, ties broken lexicographically.
pub fn canonical_lift(data: &ToricData, sector: &TwistedSector, c: &[i64]) -> Result<Lift> {
    let rhs: Vec<i64> = sector.point.iter().zip(c).map(|(p, ci)| p - ci).collect();
    let m = linalg::integer_solve(&data.points, &rhs).ok_or_else(|| {
        Error::Infeasible(format!("sector {} and c = {:?}", sector.label(), c))
    })?;
    let base: Vec<Q> = sector
        .coords
        .iter()
        .zip(&m)
        .map(|(g, &mi)| q(mi as i128) - g)
        .collect();
    let kernel = linalg::integer_kernel(&data.points);
    let l = minimize_over_lattice(&base, &kernel, 3);
    Ok(Lift { sector: sector.clone(), c: c.to_vec(), l })
}

fn minimize_over_lattice(base: &[Q], kernel: &[Vec<i64>], radius: i64) -> Vec<Q> {
    let k = kernel.len();
    let width = (2 * radius + 1) as usize;
    let mut best: Option<(Q, Vec<Q>)> = None;
    for code in 0..width.pow(k as u32) {
        let mut rem = code;
        let mut l = base.to_vec();
        for b in kernel {
            let t = (rem % width) as i64 - radius;
            rem /= width;
            for (li, &bi) in l.iter_mut().zip(b) {
                *li += q((t * bi) as i128);
            }
        }
        let norm = l1_norm(&l);
        let better = match &best {
            None => true,
            Some((bn, bl)) => norm < *bn || (norm == *bn && l < *bl),
        };
        if better {
            best = Some((norm, l));
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| base.to_vec())
}

/// The sector `gamma^(k,r)` across the wall, with its lift `l''`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjacentSector {
    pub sector: TwistedSector,
    #[serde(serialize_with = "ser_qvec")]
    pub lift: Vec<Q>,
}

/// `l'' = l' + ((l'_k - r) / (-h_k)) h`; its fractional parts give the sector.
pub fn adjacent_lift(l_prime: &[Q], k: usize, r: i64, circuit: &Circuit) -> Vec<Q> {
    let hk = circuit.h[k];
    let f = (l_prime[k] - q(r as i128)) / q(-hk as i128);
    l_prime
        .iter()
        .zip(&circuit.h)
        .map(|(&l, &h)| l + f * q(h as i128))
        .collect()
}

pub fn sector_of_lift(data: &ToricData, l: &[Q]) -> Option<TwistedSector> {
    TwistedSector::from_coords(data, l.iter().map(|&x| frac(-x)).collect())
}

pub fn adjacent_sector(
    data: &ToricData,
    l_prime: &[Q],
    k: usize,
    r: i64,
    circuit: &Circuit,
    target_box: &[TwistedSector],
) -> Result<AdjacentSector> {
    if !circuit.i_minus.contains(&k) {
        return Err(Error::InvalidInput(format!("index {} is not in I-", k + 1)));
    }
    if r < 0 || r >= -circuit.h[k] {
        return Err(Error::InvalidInput(format!("r = {r} out of range")));
    }
    let lift = adjacent_lift(l_prime, k, r, circuit);
    let sector = sector_of_lift(data, &lift)
        .filter(|s| target_box.contains(s))
        .ok_or_else(|| Error::Infeasible("adjacent lift is not a twisted sector of the target".into()))?;
    Ok(AdjacentSector { sector, lift })
}

/// True when `a - b` is a rational multiple of `h`.
pub fn differ_by_multiple_of(a: &[Q], b: &[Q], h: &[i64]) -> bool {
    let d: Vec<Q> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let Some(j) = h.iter().position(|&x| x != 0) else {
        return d.iter().all(|x| x.is_zero());
    };
    let f = d[j] / q(h[j] as i128);
    d.iter().zip(h).all(|(x, &hj)| *x == f * q(hj as i128))
}

/// Fractional support `{i : l_i not integral}`.
pub fn fractional_support(l: &[Q]) -> Cone {
    (0..l.len()).filter(|&i| !l[i].is_integer()).collect()
}

/// Result of matching a brute-force enumeration of `K_c` against `Box`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoxBijection {
    pub c: Vec<i64>,
    pub enumerated: usize,
    pub classes: usize,
    pub box_size: usize,
    /// Every class maps to a distinct sector and every sector is hit.
    pub bijective: bool,
    /// Two members of a class whose difference is not in `L` (must be empty).
    pub broken_classes: Vec<String>,
}

/// Largest index `[N : sum Z v_i]` over the maximal cones, as a denominator bound.
pub fn max_cone_index(data: &ToricData, t: &Triangulation) -> i64 {
    t.maximal_cones
        .iter()
        .map(|m| {
            let rows: Vec<Vec<i64>> = m.iter().map(|&i| data.points[i].clone()).collect();
            if rows.len() == data.rank {
                linalg::det_i64(&rows).unsigned_abs() as i64
            } else {
                1
            }
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

/// Enumerates `l` with `sum l_i v_i = -c`, entries in `(1/d) Z` with `|l_i| <= bound`
/// and fractional support a cone of `t`; groups them by `{-l}` and compares with `Box`.
pub fn box_bijection(data: &ToricData, t: &Triangulation, c: &[i64], bound: i64) -> BoxBijection {
    let d = max_cone_index(data, t);
    let n = data.n();
    let width = (2 * bound * d + 1) as usize;
    let kernel = linalg::integer_kernel(&data.points);
    let kq: Vec<Vec<Q>> = kernel.iter().map(|b| b.iter().map(|&x| q(x as i128)).collect()).collect();
    let mut classes: BTreeMap<Vec<Q>, Vec<Vec<Q>>> = BTreeMap::new();
    let mut enumerated = 0;
    let target: Vec<Q> = c.iter().map(|&x| q(-x as i128)).collect();
    for code in 0..width.pow(n as u32) {
        let mut rem = code;
        let l: Vec<Q> = (0..n)
            .map(|_| {
                let k = (rem % width) as i64 - bound * d;
                rem /= width;
                Q::new(k as i128, d as i128)
            })
            .collect();
        if data.combine(&l) != target || !t.is_cone(&fractional_support(&l)) {
            continue;
        }
        enumerated += 1;
        let gamma: Vec<Q> = l.iter().map(|&x| frac(-x)).collect();
        classes.entry(gamma).or_default().push(l);
    }
    let mut broken = Vec::new();
    for (g, members) in &classes {
        let first = &members[0];
        for m in &members[1..] {
            let diff: Vec<Q> = m.iter().zip(first).map(|(a, b)| a - b).collect();
            let integral = diff.iter().all(|x| x.is_integer());
            let in_span = integral && (kq.is_empty() && diff.iter().all(|x| x.is_zero()) || {
                let a: Vec<Vec<Q>> = (0..n).map(|i| kq.iter().map(|b| b[i]).collect()).collect();
                linalg::solve(&a, &diff).is_some_and(|x| x.iter().all(|v| v.is_integer()))
            });
            if !in_span {
                broken.push(format!("{g:?}"));
                break;
            }
        }
    }
    let boxed: BTreeSet<Vec<Q>> = compute_box(data, t).into_iter().map(|s| s.coords).collect();
    let found: BTreeSet<Vec<Q>> = classes.keys().cloned().collect();
    BoxBijection {
        c: c.to_vec(),
        enumerated,
        classes: classes.len(),
        box_size: boxed.len(),
        bijective: boxed == found && broken.is_empty(),
        broken_classes: broken,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::Fixture;

    fn conifold() -> Fixture {
        Fixture::conifold()
    }

    fn a1() -> Fixture {
        Fixture::a1()
    }

    #[test]
    fn cone_rays_of_fixtures() {
        assert_eq!(conifold().data.cone_rays, vec![0, 1, 2, 3]);
        assert_eq!(a1().data.cone_rays, vec![0, 2]);
        assert_eq!(conifold().data.facets.len(), 4);
    }

    #[test]
    fn non_unit_degree_rejected() {
        let e = validate_toric_data(vec![vec![0, 0, 2], vec![1, 0, 1]], vec![0, 0, 1]).unwrap_err();
        assert_eq!(e, Error::NonUnitDegree { index: 0, degree: 2 });
    }

    #[test]
    fn rank_deficient_rejected() {
        let e = validate_toric_data(vec![vec![0, 1, 1], vec![1, 1, 1]], vec![0, 0, 1]).unwrap_err();
        assert!(matches!(e, Error::RankDeficient { .. }));
    }

    #[test]
    fn declared_rays_are_checked() {
        let f = a1();
        assert!(check_declared_rays(&f.data, &[vec![0, 1], vec![2, 1]]).is_ok());
        assert_eq!(
            check_declared_rays(&f.data, &[vec![0, 1]]),
            Err(Error::MissingRay(vec![2, 1]))
        );
    }

    #[test]
    fn triangulation_checks() {
        let f = conifold();
        assert!(check_triangulation(&f.data, f.plus()).valid);
        assert!(check_triangulation(&f.data, f.minus()).valid);
        let bad = Triangulation::new("bad", vec![vec![0, 1, 2], vec![0, 1, 3]]);
        let chk = check_triangulation(&f.data, &bad);
        assert!(!chk.valid);
        assert!(!chk.diagnostics.is_empty());
        let a = a1();
        assert!(check_triangulation(&a.data, &Triangulation::new("coarse", vec![vec![0, 2]])).valid);
        assert!(!check_triangulation(&a.data, &Triangulation::new("half", vec![vec![0, 1]])).valid);
    }

    #[test]
    fn circuits_of_fixtures() {
        let f = conifold();
        let c = find_circuit(&f.data, f.plus(), f.minus()).unwrap();
        assert_eq!(c.h, vec![1, -1, -1, 1]);
        assert_eq!(c.i_plus, vec![0, 3]);
        assert_eq!(c.i_minus, vec![1, 2]);
        let a = a1();
        let c = find_circuit(&a.data, a.plus(), a.minus()).unwrap();
        assert_eq!(c.h, vec![1, -2, 1]);
        assert_eq!(c.i_plus, vec![0, 2]);
        assert_eq!(c.i_minus, vec![1]);
        assert_eq!(c.vhat, vec![2, 2]);
        assert!(matches!(find_circuit(&f.data, f.plus(), f.plus()), Err(Error::NotAdjacent(_))));
    }

    #[test]
    fn stars() {
        let a = a1();
        assert_eq!(star_of(&[], a.plus()).unwrap(), a.plus().all_cones());
        assert_eq!(star_of(&[0, 2], a.minus()).unwrap(), vec![vec![0, 2]]);
        let f = conifold();
        let s = star_of(&[1], f.plus()).unwrap();
        let expected: Vec<Cone> = vec![
            vec![1],
            vec![0, 1],
            vec![1, 2],
            vec![1, 3],
            vec![0, 1, 2],
            vec![1, 2, 3],
        ];
        assert_eq!(s, expected);
        assert!(matches!(star_of(&[0, 3], f.plus()), Err(Error::NotACone(_))));
    }

    #[test]
    fn boxes() {
        let f = conifold();
        assert_eq!(compute_box(&f.data, f.plus()).len(), 1);
        let a = a1();
        assert_eq!(compute_box(&a.data, a.plus()).len(), 1);
        let b = compute_box(&a.data, a.minus());
        assert_eq!(b.len(), 2);
        assert!(b[0].is_untwisted());
        assert_eq!(b[1].coords, vec![Q::new(1, 2), q(0), Q::new(1, 2)]);
        assert_eq!(b[1].point, vec![1, 1]);
    }

    #[test]
    fn essential_cones_and_sectors() {
        let f = conifold();
        let c = find_circuit(&f.data, f.plus(), f.minus()).unwrap();
        let mut e = essential_cones(f.plus(), &c, Side::Plus);
        e.sort();
        assert_eq!(e, vec![vec![0, 1, 2], vec![1, 2, 3]]);
        let a = a1();
        let c = find_circuit(&a.data, a.plus(), a.minus()).unwrap();
        assert_eq!(essential_cones(a.minus(), &c, Side::Minus), vec![vec![0, 2]]);
        assert_eq!(essential_cones(a.plus(), &c, Side::Plus), vec![vec![0, 1], vec![1, 2]]);
        let bm = compute_box(&a.data, a.minus());
        let em = essential_sectors(&bm, a.minus(), &c, Side::Minus, EssentialMode::Containment);
        assert_eq!(em.len(), 2);
        // The equality reading drops the untwisted sector.
        let eq = essential_sectors(&bm, a.minus(), &c, Side::Minus, EssentialMode::Equality);
        assert_eq!(eq.len(), 1);
        let bp = compute_box(&a.data, a.plus());
        assert_eq!(essential_sectors(&bp, a.plus(), &c, Side::Plus, EssentialMode::Containment).len(), 1);
    }

    #[test]
    fn lifts() {
        let f = conifold();
        let b = compute_box(&f.data, f.plus());
        assert_eq!(canonical_lift(&f.data, &b[0], &[0, 0, 0]).unwrap().l, vec![q(0); 4]);
        let a = a1();
        let bm = compute_box(&a.data, a.minus());
        let lift = canonical_lift(&a.data, &bm[1], &[0, 0]).unwrap();
        assert_eq!(fractional_support(&lift.l), vec![0, 2]);
        assert_eq!(sector_of_lift(&a.data, &lift.l).unwrap(), bm[1]);
        assert_eq!(a.data.combine(&lift.l), vec![q(0), q(0)]);
        let lift = canonical_lift(&a.data, &bm[0], &[1, 1]).unwrap();
        assert_eq!(lift.l, vec![q(0), q(-1), q(0)]);
    }

    #[test]
    fn adjacent_sectors_a1() {
        let a = a1();
        let c = find_circuit(&a.data, a.plus(), a.minus()).unwrap();
        let bp = compute_box(&a.data, a.plus());
        let bm = compute_box(&a.data, a.minus());
        let lp = canonical_lift(&a.data, &bp[0], &[0, 0]).unwrap();
        let s0 = adjacent_sector(&a.data, &lp.l, 1, 0, &c, &bm).unwrap();
        assert!(s0.sector.is_untwisted());
        let s1 = adjacent_sector(&a.data, &lp.l, 1, 1, &c, &bm).unwrap();
        assert_eq!(s1.sector, bm[1]);
        assert!(s1.lift[1].is_zero() || s1.lift[1].is_integer());
        assert!(differ_by_multiple_of(&s1.lift, &lp.l, &c.h));
        assert!(adjacent_sector(&a.data, &lp.l, 0, 0, &c, &bm).is_err());
    }

    #[test]
    fn adjacent_sectors_conifold() {
        let f = conifold();
        let c = find_circuit(&f.data, f.plus(), f.minus()).unwrap();
        let bp = compute_box(&f.data, f.plus());
        let bm = compute_box(&f.data, f.minus());
        let lp = canonical_lift(&f.data, &bp[0], &[0, 0, 0]).unwrap();
        for k in [1, 2] {
            let s = adjacent_sector(&f.data, &lp.l, k, 0, &c, &bm).unwrap();
            assert!(s.sector.is_untwisted());
            assert_eq!(s.lift[k], q(0));
        }
    }

    #[test]
    fn k_classes_biject_onto_box() {
        for f in [conifold(), Fixture::a1()] {
            for t in [f.plus(), f.minus()] {
                let mut cs = vec![vec![0; f.data.rank]];
                cs.extend(f.data.points.iter().cloned());
                for c in cs {
                    let b = box_bijection(&f.data, t, &c, 3);
                    assert!(b.bijective, "{} {} {c:?}: {b:?}", f.name, t.label);
                    assert!(b.enumerated > b.classes);
                }
            }
        }
        assert_eq!(max_cone_index(&Fixture::a1().data, Fixture::a1().minus()), 2);
    }
}
