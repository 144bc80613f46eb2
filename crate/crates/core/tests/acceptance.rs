//! Acceptance run over the bundled fixtures. Prints one line per criterion
//! and exits nonzero if any criterion fails.

use std::process::ExitCode;

use bbgkz_core::dual::{dual_transform_status, CompactKModule, PairingStub, PAIRING_SLOTS};
use bbgkz_core::series::{c_battery, pde_residuals, EvaluationPoint, System, TruncationPolicy};
use bbgkz_core::toric::box_bijection;
use bbgkz_core::verify::{
    contour_checks, lift_independence, nonessential_invariance, residue_checks, verify_fm_equals_ac,
    VerifyConfig,
};
use bbgkz_core::wall::{default_radius, k_basis, select_endpoints, transform_limit};
use bbgkz_core::{Deformation, EssentialMode, Error, Fixture, Provenance, WallSetup};

struct Outcome {
    passed: bool,
    detail: String,
}

fn fixtures() -> Vec<(Fixture, WallSetup)> {
    [Fixture::conifold(), Fixture::a1()]
        .into_iter()
        .map(|f| {
            let s = WallSetup::new(&f.data, f.plus(), f.minus(), EssentialMode::Containment).expect("fixture wall");
            (f, s)
        })
        .collect()
}

fn pde_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    let mut boundary = Vec::new();
    for (f, s) in fixtures() {
        let path = select_endpoints(&s.circuit, 0.1, None)?;
        for (t, coh, x) in [(&s.plus, &s.coh_plus, &path.x_plus), (&s.minus, &s.coh_minus, &path.x_minus)] {
            let x = EvaluationPoint::new(x.clone())?;
            for system in [System::Primal, System::Dual] {
                let cs = c_battery(&f.data, 2, system == System::Dual);
                let r = pde_residuals(&f.data, t, coh, &cs, &x, &TruncationPolicy::new(20), system)?;
                passed &= r.ok();
                worst = worst.max(r.max_interior_residual());
                let b = r.recursion.iter().map(|k| k.boundary_max).fold(0.0, f64::max);
                let d = r.recursion.iter().map(|k| k.dropped_max).fold(0.0, f64::max);
                boundary.push(format!("{}/{}/{:?} boundary {b:.1e} <= dropped {d:.1e}", f.name, t.label, system));
            }
        }
    }
    Ok(Outcome { passed, detail: format!("Euler exact, max interior residual {worst:.1e}; {}", boundary.join(", ")) })
}

fn box_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut n = 0;
    for (f, _) in fixtures() {
        for t in [f.plus(), f.minus()] {
            let mut cs = vec![vec![0; f.data.rank]];
            cs.extend(f.data.points.iter().cloned());
            for c in cs {
                let b = box_bijection(&f.data, t, &c, 3);
                passed &= b.bijective;
                n += 1;
            }
        }
    }
    Ok(Outcome { passed, detail: format!("{n} (fixture, fan, c) cases bijective") })
}

fn contour_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    let mut growth = String::new();
    let mut count = 0;
    for (f, s) in fixtures() {
        let path = select_endpoints(&s.circuit, 0.1, None)?;
        let cfg = VerifyConfig::default();
        let checks = contour_checks(&s, &path, &cfg.contour, &[1e-2, 1e-3], &c_battery(&f.data, 1, false), 12)?;
        for k in &checks {
            passed &= k.plus_deviation < 1e-7 && k.minus_deviation < 1e-6;
            plus = plus.max(k.plus_deviation);
            minus = minus.max(k.minus_deviation);
        }
        count += checks.len();
        if f.name == "conifold" {
            let at = |e: f64| checks.iter().find(|k| k.eps == e && k.c.iter().all(|&x| x == 0)).unwrap();
            let (a, b) = (at(1e-2), at(1e-3));
            growth = format!(
                "conifold left terms {:.1e} -> {:.1e}, sum {:.4e} -> {:.4e}",
                a.left_part_max, b.left_part_max, a.left_total, b.left_total
            );
        }
    }
    Ok(Outcome {
        passed,
        detail: format!("{count} generator checks, x+ {plus:.1e} (tol 1e-7), x- {minus:.1e} (tol 1e-6); {growth}"),
    })
}

fn fm_ac_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (f, s) in fixtures() {
        let cfg = VerifyConfig { contour_checks: false, ..Default::default() };
        let r = verify_fm_equals_ac(&f.name, &s, &cfg)?;
        passed &= r.passed;
        let m = r.samples.iter().map(|x| x.deviation).fold(0.0, f64::max);
        parts.push(format!(
            "{}: matrix {m:.1e}, end-to-end {:.1e} over {} c, principal part {:.1e}",
            f.name,
            r.max_end_to_end(),
            r.end_to_end.len(),
            r.limit.fm_principal_part.max(r.limit.ac_principal_part)
        ));
    }
    Ok(Outcome { passed, detail: parts.join("; ") })
}

fn invariance_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (f, s) in fixtures() {
        let d = Deformation::for_circuit(&s.circuit);
        let b = k_basis(&s.coh_minus)?;
        let fm = transform_limit(&s, &b, Provenance::FourierMukai, &d, default_radius(&d), 32)?.0;
        let r = nonessential_invariance(&s, &fm.matrix, 20, 11);
        passed &= r.max_deviation < 1e-10 && r.trials >= 20;
        parts.push(format!(
            "{}: J in {:?}, {} classes, deviation {:.1e}{}",
            f.name,
            r.qualifying,
            r.trials,
            r.max_deviation,
            if r.vacuous { " (every such class is zero on both sides)" } else { "" }
        ));
    }
    Ok(Outcome { passed, detail: parts.join("; ") })
}

fn dimension_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (f, s) in fixtures() {
        let kp = CompactKModule::build(&f.data, &s.plus, &s.coh_plus).dim();
        let km = CompactKModule::build(&f.data, &s.minus, &s.coh_minus).dim();
        let (hp, hm) = (s.coh_plus.total_dim(), s.coh_minus.total_dim());
        let d = Deformation::for_circuit(&s.circuit);
        let b = k_basis(&s.coh_minus)?;
        let det = [1.17e-2, 3.3e-3]
            .iter()
            .map(|&e| {
                bbgkz_core::wall::transform_at(&s, &b, Provenance::FourierMukai, &d, e.into())
                    .map(|m| m.det().norm())
            })
            .collect::<Result<Vec<f64>, Error>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        passed &= [hp, hm, kp, km].iter().all(|&x| x == 2) && det > 1e-6;
        parts.push(format!("{}: H+ {hp}, H- {hm}, Kc {kp}/{km}, |det| {det:.3}", f.name));
    }
    Ok(Outcome { passed, detail: parts.join("; ") })
}

fn residue_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut zero: f64 = 0.0;
    let mut term: f64 = 0.0;
    let mut n = 0;
    for (_, s) in fixtures() {
        let path = select_endpoints(&s.circuit, 0.1, None)?;
        for r in residue_checks(&s, &path, 1e-2, &[-2, -1, 0, 1, 2])? {
            if r.expect_zero {
                passed &= r.deviation < 1e-10;
                zero = zero.max(r.deviation);
            } else {
                passed &= r.deviation < 1e-8;
                term = term.max(r.deviation);
            }
            n += 1;
        }
    }
    Ok(Outcome { passed, detail: format!("{n} residues, |Res| at s=-1,-2 {zero:.1e}, term deviation {term:.1e}") })
}

fn lift_suite() -> Result<Outcome, Error> {
    let mut passed = true;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (_, s) in fixtures() {
        for mult in [1i64, -2] {
            let shift: Vec<i64> = s.h().iter().map(|h| h * mult).collect();
            for k in lift_independence(&s, &shift, &[1e-2, 2.9e-3, 7.1e-4])? {
                passed &= k.exact && k.max_deviation < 1e-12;
                worst = worst.max(k.max_deviation);
                n += 1;
            }
        }
    }
    Ok(Outcome { passed, detail: format!("{n} (sector, k, r) pairs, rational data identical, max deviation {worst:.1e}") })
}

fn dual_status_suite() -> Result<Outcome, Error> {
    let st = dual_transform_status();
    let stub = PairingStub;
    let raises = PAIRING_SLOTS
        .iter()
        .all(|slot| matches!(stub.evaluate(slot, &[], &[]), Err(Error::UnimplementedPairing(_))));
    let passed = st.implemented.len() == 3 && st.open_slots.len() == 1 && !st.verified && raises;
    Ok(Outcome {
        passed,
        detail: format!(
            "{} implemented ingredients, {} open slot, pairing raises UnimplementedPairing: {raises}",
            st.implemented.len(),
            st.open_slots.len()
        ),
    })
}

fn main() -> ExitCode {
    let suites: [(&str, fn() -> Result<Outcome, Error>); 9] = [
        ("1 PDE suite", pde_suite),
        ("2 Box bijection", box_suite),
        ("3 Mellin-Barnes oracle", contour_suite),
        ("4 FM equals AC", fm_ac_suite),
        ("5 non-essential invariance", invariance_suite),
        ("6 structural dimensions", dimension_suite),
        ("7 residue statements", residue_suite),
        ("8 C lift-independence", lift_suite),
        ("dual status", dual_status_suite),
    ];
    let mut all = true;
    for (name, f) in suites {
        let (ok, detail) = match f() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!("criterion {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    }
    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
