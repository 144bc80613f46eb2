use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use bbgkz_core::dual::{dual_transform_status, CompactKModule, CompactModuleSummary};
use bbgkz_core::series::{c_battery, evaluate_gamma, evaluate_gamma_dual, EvaluationPoint, TruncationPolicy};
use bbgkz_core::toric::{check_triangulation, compute_box, essential_sectors, fmt_cone};
use bbgkz_core::verify::{verify_fm_equals_ac, MatrixEntries};
use bbgkz_core::wall::{default_radius, k_basis, oracle_continuation, select_endpoints, transform_at, transform_limit};
use bbgkz_core::{
    ContourSpec, Deformation, EssentialMode, Error, Fixture, Provenance, Side, Triangulation, VerifyConfig,
    WallSetup,
};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "bbgkz", version, about = "Gamma series, Mellin-Barnes continuation and FM transforms across a toric wall")]
struct Cli {
    /// Bundled fixture name (conifold, a1) or path to a fixture file.
    #[arg(long, global = true, default_value = "conifold")]
    fixture: String,
    #[arg(long, global = true, default_value = "plus")]
    plus: String,
    #[arg(long, global = true, default_value = "minus")]
    minus: String,
    /// Degree bound M for truncated series.
    #[arg(long, global = true)]
    trunc: Option<u32>,
    /// Comma separated deformation samples.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
    /// Half length T of the truncated contour.
    #[arg(long, global = true)]
    contour_t: Option<f64>,
    /// Real part s0 of the contour (automatic when absent).
    #[arg(long, global = true, allow_hyphen_values = true)]
    contour_re: Option<f64>,
    /// Endpoint amplitude A.
    #[arg(long, global = true)]
    amp: Option<f64>,
    /// Target |y| at the plus endpoint.
    #[arg(long, global = true)]
    y_abs: Option<f64>,
    /// Depth of the c battery.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Use the equality reading of essential sectors.
    #[arg(long, global = true)]
    equality: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Toric data, triangulation checks, circuit and essential cones.
    Inspect,
    /// Twisted sectors of one triangulation (both when omitted).
    Box { label: Option<String> },
    /// Essential cones and sectors on both sides of the wall.
    Essential,
    /// Truncated Gamma series of one side.
    GammaEval {
        #[arg(long, value_enum, default_value_t = SideArg::Plus)]
        side: SideArg,
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<i64>>,
        /// Point as comma separated `re:im` pairs (path endpoint when absent).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<String>>,
    },
    /// Truncated dual Gamma series reduced in the compactly supported module.
    DualEval {
        #[arg(long, value_enum, default_value_t = SideArg::Plus)]
        side: SideArg,
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<i64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<String>>,
    },
    /// Fourier-Mukai matrix (eps^0 coefficient unless --eps is given).
    Fm,
    /// Analytic continuation matrix (eps^0 coefficient unless --eps is given).
    Ac,
    /// Mellin-Barnes continuation of the plus series to the minus endpoint.
    Oracle {
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<i64>>,
    },
    /// Full FM = AC battery.
    Verify {
        /// Skip the deformed contour checks.
        #[arg(long)]
        no_contour: bool,
    },
    /// Status of the dual transform.
    DualStatus,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum SideArg {
    Plus,
    Minus,
}

struct Output {
    json: Value,
    text: String,
    passed: bool,
}

fn input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::NonUnitDegree { .. }
            | Error::RankDeficient { .. }
            | Error::MissingRay(_)
            | Error::NotAdjacent(_)
            | Error::NotACone(_)
            | Error::NonInteriorPoint
            | Error::BranchCut(_)
            | Error::InfeasibleArgs(_)
    )
}

fn load_fixture(spec: &str) -> Result<Fixture, Error> {
    if let Some(f) = Fixture::bundled(spec) {
        return Ok(f);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::InvalidInput(format!("cannot read fixture '{spec}': {e}")))?;
    let name = std::path::Path::new(spec)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    Fixture::parse(&name, &text)
}

fn mode(cli: &Cli) -> EssentialMode {
    if cli.equality {
        EssentialMode::Equality
    } else {
        EssentialMode::Containment
    }
}

fn setup(cli: &Cli, f: &Fixture) -> Result<WallSetup, Error> {
    WallSetup::new(&f.data, f.triangulation(&cli.plus)?, f.triangulation(&cli.minus)?, mode(cli))
}

fn verify_config(cli: &Cli) -> Result<VerifyConfig, Error> {
    let mut cfg = VerifyConfig::default();
    if let Some(e) = &cli.eps {
        cfg.eps_samples = e.clone();
    }
    if let Some(m) = cli.trunc {
        cfg.truncation = m;
    }
    if let Some(t) = cli.contour_t {
        cfg.contour.t_max = t;
    }
    cfg.contour.s0 = cli.contour_re.or(cfg.contour.s0);
    cfg.amplitude = cli.amp.or(cfg.amplitude);
    if let Some(y) = cli.y_abs {
        cfg.y_abs = y;
    }
    if let Some(d) = cli.depth {
        cfg.c_depth = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn fmt_z(z: &Complex64) -> String {
    format!("{:+.12e}{:+.12e}i", z.re, z.im)
}

fn parse_point(raw: &[String], n: usize) -> Result<Vec<Complex64>, Error> {
    if raw.len() != n {
        return Err(Error::InvalidInput(format!("--x needs {n} coordinates, got {}", raw.len())));
    }
    raw.iter()
        .map(|s| {
            let (re, im) = s.split_once(':').unwrap_or((s, "0"));
            match (re.trim().parse::<f64>(), im.trim().parse::<f64>()) {
                (Ok(a), Ok(b)) => Ok(Complex64::new(a, b)),
                _ => Err(Error::InvalidInput(format!("bad coordinate '{s}'"))),
            }
        })
        .collect()
}

fn side_triangulation(s: &WallSetup, side: SideArg) -> &Triangulation {
    match side {
        SideArg::Plus => &s.plus,
        SideArg::Minus => &s.minus,
    }
}

fn inspect(f: &Fixture, s: &WallSetup) -> Output {
    let mut text = String::new();
    let _ = writeln!(text, "fixture {}: rank {}, {} points", f.name, f.data.rank, f.data.n());
    for (i, p) in f.data.points.iter().enumerate() {
        let _ = writeln!(text, "  v{} = {:?}", i + 1, p);
    }
    let mut tri = Vec::new();
    let mut passed = true;
    for t in &f.triangulations {
        let chk = check_triangulation(&f.data, t);
        passed &= chk.valid;
        let cones: Vec<String> = t.maximal_cones.iter().map(|c| fmt_cone(c)).collect();
        let _ = writeln!(text, "triangulation {}: {} ({})", t.label, cones.join(" "), if chk.valid { "valid" } else { "invalid" });
        for d in &chk.diagnostics {
            let _ = writeln!(text, "  {d}");
        }
        tri.push(json!({ "label": t.label, "cones": cones, "check": chk }));
    }
    let one = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
    let _ = writeln!(
        text,
        "circuit h = {:?}, I+ = {:?}, I- = {:?}",
        s.circuit.h,
        one(&s.circuit.i_plus),
        one(&s.circuit.i_minus)
    );
    let _ = writeln!(text, "dim H(plus) = {}, dim H(minus) = {}", s.coh_plus.total_dim(), s.coh_minus.total_dim());
    let json = json!({
        "fixture": f.name,
        "points": f.data.points,
        "deg": f.data.deg,
        "triangulations": tri,
        "circuit": s.circuit,
        "dims": { "plus": s.coh_plus.total_dim(), "minus": s.coh_minus.total_dim() },
    });
    Output { json, text, passed }
}

fn box_cmd(f: &Fixture, label: Option<&str>) -> Result<Output, Error> {
    let ts: Vec<&Triangulation> = match label {
        Some(l) => vec![f.triangulation(l)?],
        None => f.triangulations.iter().collect(),
    };
    let mut text = String::new();
    let mut out = Vec::new();
    for t in ts {
        let b = compute_box(&f.data, t);
        let _ = writeln!(text, "{}: {} sectors", t.label, b.len());
        for s in &b {
            let _ = writeln!(text, "  {}  support {}", s.label(), fmt_cone(&s.support));
        }
        out.push(json!({ "label": t.label, "sectors": b.iter().map(|s| json!({
            "label": s.label(),
            "support": fmt_cone(&s.support),
            "point": s.point,
        })).collect::<Vec<_>>() }));
    }
    Ok(Output { json: json!({ "fixture": f.name, "box": out }), text, passed: true })
}

fn essential_cmd(s: &WallSetup) -> Output {
    let mut text = String::new();
    let mut out = Vec::new();
    for (side, t, ess, coh) in [
        (Side::Plus, &s.plus, &s.ess_plus, &s.coh_plus),
        (Side::Minus, &s.minus, &s.ess_minus, &s.coh_minus),
    ] {
        let cones: Vec<String> = ess.iter().map(|c| fmt_cone(c)).collect();
        let secs: Vec<String> = essential_sectors(&coh.sectors, t, &s.circuit, side, s.mode)
            .iter()
            .map(|x| x.label())
            .collect();
        let _ = writeln!(text, "{}: essential cones {}; essential sectors {}", t.label, cones.join(" "), secs.join(" "));
        out.push(json!({ "label": t.label, "cones": cones, "sectors": secs }));
    }
    Output { json: json!({ "mode": s.mode, "sides": out }), text, passed: true }
}

fn element_json(labels: &[String], v: &[Complex64]) -> Value {
    Value::Array(
        labels
            .iter()
            .zip(v)
            .map(|(l, z)| json!({ "basis": l, "value": pair(z) }))
            .collect(),
    )
}

fn element_text(labels: &[String], v: &[Complex64]) -> String {
    labels.iter().zip(v).map(|(l, z)| format!("  {l:<12} {}\n", fmt_z(z))).collect()
}

fn gamma_cmd(cli: &Cli, s: &WallSetup, side: SideArg, c: Option<&[i64]>, x: Option<&[String]>, dual: bool) -> Result<Output, Error> {
    let cfg = verify_config(cli)?;
    let t = side_triangulation(s, side);
    let coh = match side {
        SideArg::Plus => &s.coh_plus,
        SideArg::Minus => &s.coh_minus,
    };
    let point = match x {
        Some(raw) => parse_point(raw, s.data.n())?,
        None => {
            let p = select_endpoints(&s.circuit, cfg.y_abs, cfg.amplitude)?;
            if side == SideArg::Plus { p.x_plus } else { p.x_minus }
        }
    };
    let c: Vec<i64> = match c {
        Some(c) => c.to_vec(),
        None if dual => c_battery(&s.data, 2, true)
            .into_iter()
            .next()
            .ok_or_else(|| Error::InvalidInput("no interior lattice point in the battery".into()))?,
        None => vec![0; s.data.rank],
    };
    let xp = EvaluationPoint::new(point.clone())?;
    let policy = TruncationPolicy::new(cli.trunc.unwrap_or(20));
    let xs: Vec<[f64; 2]> = point.iter().map(pair).collect();
    let mut text = format!("{} at x = {:?}, c = {c:?}, M = {}\n", t.label, xs, policy.degree_bound);
    if dual {
        let v = evaluate_gamma_dual(&s.data, t, coh, &c, &xp, &policy)?;
        let m = CompactKModule::build(&s.data, t, coh);
        let summary = CompactModuleSummary::from(&m);
        let comps: Vec<Value> = coh
            .sectors
            .iter()
            .zip(&v.components)
            .map(|(sec, comp)| json!({ "sector": sec.label(), "coords": comp.iter().map(pair).collect::<Vec<_>>() }))
            .collect();
        for (sec, comp) in coh.sectors.iter().zip(&v.components) {
            let _ = writeln!(text, "sector {}: {}", sec.label(), comp.iter().map(fmt_z).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(text, "{} terms, {} skipped boundary terms, compact module dim {}", v.terms, v.skipped_boundary_terms, summary.total_dim);
        let json = json!({ "side": t.label, "c": c, "x": xs, "components": comps, "terms": v.terms,
            "skipped_boundary_terms": v.skipped_boundary_terms, "module": summary });
        return Ok(Output { json, text, passed: true });
    }
    let v = evaluate_gamma(&s.data, t, coh, &c, &xp, &policy, None)?;
    let labels = match side {
        SideArg::Plus => s.labels_plus(),
        SideArg::Minus => s.labels_minus(),
    };
    let flat = v.total.flatten();
    text.push_str(&element_text(&labels, &flat));
    for d in &v.diagnostics {
        let _ = writeln!(text, "  sector {}: {} terms, tail ratio {:?}", d.sector, d.terms, d.tail_ratio);
    }
    let json = json!({ "side": t.label, "c": c, "x": xs, "value": element_json(&labels, &flat), "diagnostics": v.diagnostics });
    Ok(Output { json, text, passed: true })
}

fn transform_cmd(cli: &Cli, s: &WallSetup, prov: Provenance) -> Result<Output, Error> {
    let basis = k_basis(&s.coh_minus)?;
    let d = Deformation::for_circuit(&s.circuit);
    let (rows, cols) = (s.labels_plus(), s.labels_minus());
    let mut mats = Vec::new();
    match &cli.eps {
        Some(es) => {
            for &e in es {
                mats.push((format!("eps = {e}"), Some(e), transform_at(s, &basis, prov, &d, Complex64::new(e, 0.0))?, None));
            }
        }
        None => {
            let (m, _) = transform_limit(s, &basis, prov, &d, default_radius(&d), 32)?;
            mats.push(("eps^0 coefficient".to_string(), None, m.matrix, m.principal_part));
        }
    }
    let mut text = format!("{prov:?} matrix, rows {rows:?}, columns {cols:?}\n");
    let mut out = Vec::new();
    for (title, e, m, pp) in mats {
        let _ = writeln!(text, "{title}:");
        for i in 0..m.rows {
            let row: Vec<String> = (0..m.cols).map(|j| fmt_z(&m[(i, j)])).collect();
            let _ = writeln!(text, "  {}", row.join("  "));
        }
        if let Some(p) = pp {
            let _ = writeln!(text, "  principal part norm {p:.3e}");
        }
        out.push(json!({ "eps": e, "matrix": MatrixEntries::new(&m, rows.clone(), cols.clone()), "principal_part": pp }));
    }
    Ok(Output { json: json!({ "provenance": prov, "k_basis": basis.exponents, "matrices": out }), text, passed: true })
}

fn oracle_cmd(cli: &Cli, s: &WallSetup, c: Option<&[i64]>) -> Result<Output, Error> {
    let cfg = verify_config(cli)?;
    let path = select_endpoints(&s.circuit, cfg.y_abs, cfg.amplitude)?;
    let c = c.map(|c| c.to_vec()).unwrap_or_else(|| vec![0; s.data.rank]);
    let spec: ContourSpec = cfg.contour;
    let xm = EvaluationPoint::new(path.x_minus.clone())?;
    let o = oracle_continuation(s, &c, &xm, &spec, cfg.generator_bound, cfg.truncation)?;
    let labels = s.labels_plus();
    let mut text = format!("continued plus series at x- (|y| = {:.3e}), c = {c:?}\n", path.y_minus.norm());
    text.push_str(&element_text(&labels, &o.value));
    let _ = writeln!(text, "{} generators, quadrature error {:.2e}", o.generators.len(), o.quadrature_error);
    let gens: Vec<Value> = o
        .generators
        .iter()
        .map(|(sec, l)| json!({ "sector": sec, "l": l.iter().map(|q| q.to_string()).collect::<Vec<_>>() }))
        .collect();
    let json = json!({ "c": c, "path": path, "value": element_json(&labels, &o.value), "generators": gens,
        "quadrature_error": o.quadrature_error });
    Ok(Output { json, text, passed: true })
}

fn verify_cmd(cli: &Cli, f: &Fixture, s: &WallSetup, no_contour: bool) -> Result<Output, Error> {
    let mut cfg = verify_config(cli)?;
    cfg.contour_checks = !no_contour;
    let r = verify_fm_equals_ac(&f.name, s, &cfg)?;
    let mut text = format!("fixture {}: {}\n", f.name, if r.passed { "PASS" } else { "FAIL" });
    for k in &r.checks {
        let _ = writeln!(
            text,
            "  [{}] {}: {:.3e} (tolerance {:.1e})",
            if k.passed { "ok" } else { "FAIL" },
            k.name,
            k.value,
            k.tolerance
        );
        for d in &k.diagnostics {
            let _ = writeln!(text, "      {d}");
        }
    }
    let _ = writeln!(text, "  max end-to-end deviation {:.3e}", r.max_end_to_end());
    for (stage, ms) in &r.runtimes.stages {
        let _ = writeln!(text, "  runtime {stage}: {ms:.1} ms");
    }
    let mut json = r.deterministic_json();
    json["runtimes"] = serde_json::to_value(&r.runtimes).unwrap_or(Value::Null);
    Ok(Output { json, text, passed: r.passed })
}

fn dual_status_cmd() -> Output {
    let st = dual_transform_status();
    let mut text = format!("dual transforms verified: {}\n", st.verified);
    for i in &st.implemented {
        let _ = writeln!(text, "  implemented {}: {}", i.name, i.status);
    }
    for i in &st.open_slots {
        let _ = writeln!(text, "  open {}: {}", i.name, i.status);
    }
    for c in &st.contract {
        let _ = writeln!(text, "  contract {c}");
    }
    Output { json: serde_json::to_value(&st).unwrap_or(Value::Null), text, passed: true }
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let f = load_fixture(&cli.fixture)?;
    match &cli.command {
        Command::Box { label } => box_cmd(&f, label.as_deref()),
        Command::DualStatus => Ok(dual_status_cmd()),
        cmd => {
            let s = setup(cli, &f)?;
            match cmd {
                Command::Inspect => Ok(inspect(&f, &s)),
                Command::Essential => Ok(essential_cmd(&s)),
                Command::GammaEval { side, c, x } => gamma_cmd(cli, &s, *side, c.as_deref(), x.as_deref(), false),
                Command::DualEval { side, c, x } => gamma_cmd(cli, &s, *side, c.as_deref(), x.as_deref(), true),
                Command::Fm => transform_cmd(cli, &s, Provenance::FourierMukai),
                Command::Ac => transform_cmd(cli, &s, Provenance::AnalyticContinuation),
                Command::Oracle { c } => oracle_cmd(cli, &s, c.as_deref()),
                Command::Verify { no_contour } => verify_cmd(cli, &f, &s, *no_contour),
                Command::Box { .. } | Command::DualStatus => unreachable!(),
            }
        }
    }
}

fn emit(cli: &Cli, body: String) -> Result<(), String> {
    match &cli.out {
        Some(p) => std::fs::write(p, body).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (body, code) = match run(&cli) {
        Ok(o) => {
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&o.json).expect("json") + "\n",
                Format::Text => o.text,
            };
            (body, if o.passed { 0 } else { 1 })
        }
        Err(e) => {
            let code = if input_error(&e) { 2 } else { 1 };
            eprintln!("error: {e}");
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&json!({ "error": format!("{e:?}"), "message": e.to_string() }))
                    .expect("json")
                    + "\n",
                Format::Text => String::new(),
            };
            (body, code)
        }
    };
    if let Err(msg) = emit(&cli, body) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
