use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rbfrk::analysis::{check_doubling, side_by_side_csv, side_by_side_markdown, IntegrateOptions};
use rbfrk::stability::{parse_resolution, stability_methods};
use rbfrk::tableau::validate_order_conditions;
use rbfrk::{
    catalog, convergence_studies, integrate_with, lookup, problem_by_name, raster, real_stability_interval,
    AmplificationMode, AmplificationSpec, ConvergenceTable, OdeProblem, Trajectory, Window,
};
use serde::Serialize;

use crate::args::*;
use crate::error::{CliError, Result};

/// Environment variable that relocates relative output paths.
pub const OUT_DIR_VAR: &str = "RBFRK_OUT_DIR";

pub fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let path = resolve(path);
    std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })
}

fn emit(out: &Output, bytes: &[u8]) -> Result<()> {
    match &out.out {
        Some(p) => write_file(p, bytes),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).and_then(|_| so.flush()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn unsupported(cmd: &str, f: Format) -> CliError {
    CliError::Usage(format!("{cmd} does not support --format {}", format_name(f)))
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Md => "md",
        Format::Pgm => "pgm",
        Format::Json => "json",
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::List(a) => list(a),
        Command::Solve(a) => solve(a),
        Command::Study(a) => study(a),
        Command::Stability(a) => stability(a),
        Command::CheckTableau(a) => check_tableau(a),
        Command::Repro(a) => repro(a),
    }
}

#[derive(Serialize)]
struct MethodRow {
    name: String,
    stages: usize,
    order: u8,
    kernel: rbfrk::Kernel,
    baseline: Option<String>,
}

#[derive(Serialize)]
struct ProblemRow {
    name: String,
    t0: f64,
    t_end: f64,
    u0: f64,
}

fn list(a: ListArgs) -> Result<()> {
    let methods: Vec<MethodRow> = catalog()
        .iter()
        .map(|m| MethodRow {
            name: m.name.clone(),
            stages: m.stages(),
            order: m.theoretical_order,
            kernel: m.kernel(),
            baseline: m.baseline.clone(),
        })
        .collect();
    let problems: Vec<ProblemRow> = rbfrk::benchmark_problems()
        .into_iter()
        .map(|p| ProblemRow { name: p.name, t0: p.t0, t_end: p.t_end, u0: p.u0 })
        .collect();
    let kernel = |k: rbfrk::Kernel| match k {
        rbfrk::Kernel::None => "-",
        rbfrk::Kernel::Mq => "mq",
        rbfrk::Kernel::Imq => "imq",
    };
    let mut s = String::new();
    match a.format {
        Format::Md => {
            s.push_str("| method | stages | order | kernel | baseline |\n|---|---|---|---|---|\n");
            for m in &methods {
                let _ = writeln!(s, "| {} | {} | {} | {} | {} |", m.name, m.stages, m.order, kernel(m.kernel), m.baseline.as_deref().unwrap_or("-"));
            }
            s.push_str("\n| problem | t0 | t_end | u0 |\n|---|---|---|---|\n");
            for p in &problems {
                let _ = writeln!(s, "| {} | {} | {} | {} |", p.name, p.t0, p.t_end, p.u0);
            }
            let _ = writeln!(s, "\nstability-only: {}", stability_methods().iter().filter(|m| lookup(m).is_err()).cloned().collect::<Vec<_>>().join(", "));
        }
        Format::Csv => {
            s.push_str("method,stages,order,kernel,baseline\n");
            for m in &methods {
                let _ = writeln!(s, "{},{},{},{},{}", m.name, m.stages, m.order, kernel(m.kernel), m.baseline.as_deref().unwrap_or(""));
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Listing<'a> {
                methods: &'a [MethodRow],
                problems: &'a [ProblemRow],
            }
            return emit(&a.output, &json(&Listing { methods: &methods, problems: &problems }));
        }
        f => return Err(unsupported("list", f)),
    }
    emit(&a.output, s.as_bytes())
}

/// Most negative `h f_u` along the trajectory, if the jet is available.
fn min_linear_z(problem: &OdeProblem, tr: &Trajectory) -> Option<f64> {
    tr.times
        .iter()
        .zip(&tr.states)
        .filter_map(|(&t, &v)| problem.jet.jet(t, v).ok().map(|j| tr.h * j.f_u))
        .filter(|z| z.is_finite())
        .reduce(f64::min)
}

fn stiffness_warning(problem: &OdeProblem, method: &str, tr: &Trajectory) {
    let Ok(spec) = AmplificationSpec::exact(method) else { return };
    let Some(z) = min_linear_z(problem, tr) else { return };
    let (left, _) = real_stability_interval(&spec);
    if z < left {
        eprintln!(
            "warning: h*f_u reaches {z:.4} which is left of the real stability limit {left:.4} of {method}; the run may be unstable"
        );
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let problem = problem_by_name(&a.problem, a.lambda)?;
    let method = lookup(&a.method)?;
    if a.n == 0 {
        return Err(CliError::StepCounts("invalid step count list: --n must be positive".into()));
    }
    let opts = IntegrateOptions { collect_trace: a.trace.is_some(), ..Default::default() };
    let tr = integrate_with(&problem, method, a.n, &opts)?;
    stiffness_warning(&problem, &method.name, &tr);

    if let Some(path) = &a.trace {
        let mut s = String::from("n,t_n,v_n,eps2_stage2,eps2_stage3,reason\n");
        for (k, t) in tr.traces.iter().flatten().enumerate() {
            let e3 = t.shape.eps2_stage3.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{k},{},{},{},{e3},{}", tr.times[k], tr.states[k], t.shape.eps2_stage2, t.shape.reason.as_str());
        }
        write_file(path, s.as_bytes())?;
    }

    #[derive(Serialize)]
    struct Point {
        n: usize,
        t: f64,
        v: f64,
        exact: Option<f64>,
        error: Option<f64>,
    }
    let points: Vec<Point> = tr
        .times
        .iter()
        .zip(&tr.states)
        .enumerate()
        .map(|(n, (&t, &v))| {
            let exact = problem.exact_at(t);
            Point { n, t, v, exact, error: exact.map(|e| (v - e).abs()) }
        })
        .collect();
    match a.format {
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
            let mut s = String::from("n,t,v,exact,error\n");
            for p in &points {
                let _ = writeln!(s, "{},{},{},{},{}", p.n, p.t, p.v, opt(p.exact), opt(p.error));
            }
            emit(&a.output, s.as_bytes())
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Solution<'a> {
                problem: &'a str,
                method: &'a str,
                h: f64,
                points: &'a [Point],
            }
            emit(&a.output, &json(&Solution { problem: &problem.name, method: &method.name, h: tr.h, points: &points }))
        }
        f => Err(unsupported("solve", f)),
    }
}

/// Parse a comma-separated doubling list of step counts.
pub fn parse_step_counts(s: &str) -> Result<Vec<usize>> {
    let ns = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| CliError::StepCounts(format!("invalid step count list: `{}` is not a positive integer", x.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    check_doubling(&ns)?;
    Ok(ns)
}

fn render_tables(tables: &[ConvergenceTable], f: Format) -> Result<Vec<u8>> {
    match f {
        Format::Md => Ok(side_by_side_markdown(tables).into_bytes()),
        Format::Csv => Ok(side_by_side_csv(tables).into_bytes()),
        Format::Json => Ok(json(tables)),
        f => Err(unsupported("study", f)),
    }
}

fn study(a: StudyArgs) -> Result<()> {
    let problem = problem_by_name(&a.problem, a.lambda)?;
    let methods = a.methods.iter().map(|m| lookup(m)).collect::<rbfrk::Result<Vec<_>>>()?;
    let ns = parse_step_counts(&a.n)?;
    if matches!(a.format, Format::Pgm) {
        return Err(unsupported("study", a.format));
    }
    let tables = convergence_studies(&problem, &methods, &ns, a.norm.into())?;
    emit(&a.output, &render_tables(&tables, a.format)?)
}

fn stability(a: StabilityArgs) -> Result<()> {
    let mode = match a.mode {
        Mode::Exact => AmplificationMode::Exact,
        Mode::Polynomial => AmplificationMode::Polynomial,
    };
    let spec = AmplificationSpec::new(&a.method, mode)?;
    let window = Window::parse(&a.window)?;
    let res = parse_resolution(&a.res)?;
    let bytes_kind = match a.format {
        Format::Pgm if a.output.out.is_none() => return Err(CliError::Usage("pgm output needs --out".into())),
        Format::Pgm | Format::Csv => a.format,
        f => return Err(unsupported("stability", f)),
    };
    let r = raster(&spec, window, res)?;
    let mut buf = Vec::new();
    let io = |source| CliError::Io { path: "<buffer>".into(), source };
    match bytes_kind {
        Format::Pgm => r.write_pgm(&mut buf).map_err(io)?,
        _ => r.write_csv(&mut buf).map_err(io)?,
    }
    emit(&a.output, &buf)?;
    if let Some(path) = &a.boundary {
        let mut b = Vec::new();
        r.write_boundary_csv(&mut b).map_err(io)?;
        write_file(path, &b)?;
    }
    match r.real_axis_extent() {
        Some((lo, hi)) => eprintln!("real-axis extent: [{lo:.6}, {hi:.6}] (cell width {:.6})", r.cell_width()),
        None => eprintln!("real-axis extent: none"),
    }
    let (l, rr) = real_stability_interval(&spec);
    eprintln!("real stability interval: [{l:.10}, {rr:.10}]");
    eprintln!("inside fraction: {:.6}", r.inside_fraction());
    Ok(())
}

fn check_tableau(a: CheckArgs) -> Result<()> {
    let m = lookup(&a.method)?;
    let report = validate_order_conditions(m)?;
    let bytes = match a.format {
        Format::Json => json(&report),
        Format::Md => {
            let mut s = format!("{}: {}\n\n| condition | exact residual | residual | pass |\n|---|---|---|---|\n", report.method, if report.passed { "pass" } else { "FAIL" });
            for c in &report.conditions {
                let _ = writeln!(s, "| {} | {} | {:e} | {} |", c.condition, c.exact, c.residual, if c.passed { "yes" } else { "no" });
            }
            s.into_bytes()
        }
        f => return Err(unsupported("check-tableau", f)),
    };
    emit(&a.output, &bytes)?;
    if !report.passed {
        let failed: Vec<_> = report.conditions.iter().filter(|c| !c.passed).map(|c| c.condition.clone()).collect();
        return Err(CliError::Validation { method: report.method, failed: failed.join(", ") });
    }
    Ok(())
}

/// Studies in the reference report: problem, first N, section title, methods.
pub const REPRO_STUDIES: [(&str, usize, &str, &[&str]); 9] = [
    ("ex61", 10, "two-stage methods", &TWO_STAGE),
    ("ex61", 10, "three-stage IMQ methods", &IMQ_THREE),
    ("ex61", 10, "three-stage MQ methods", &MQ_THREE),
    ("ex62", 200, "two-stage methods", &TWO_STAGE),
    ("ex62", 200, "three-stage IMQ methods", &IMQ_THREE),
    ("ex62", 200, "three-stage MQ methods", &MQ_THREE),
    ("ex63", 10, "two-stage methods", &TWO_STAGE),
    ("ex63", 10, "three-stage IMQ methods", &IMQ_THREE),
    ("ex63", 10, "three-stage MQ methods", &MQ_THREE),
];

const TWO_STAGE: [&str; 3] = ["rk2", "mq-rk2", "imq-rk2"];
const IMQ_THREE: [&str; 8] =
    ["rk3-i", "imq-rk3-i", "rk3-ii", "imq-rk3-ii", "rk3-iii", "imq-rk3-iii", "rk3-iv", "imq-rk3-iv"];
const MQ_THREE: [&str; 6] = ["rk3-ii", "mq-rk3-i", "rk3-iii", "mq-rk3-ii", "rk3-iv", "mq-rk3-iii"];

fn repro(a: ReproArgs) -> Result<()> {
    #[derive(Serialize)]
    struct Section {
        problem: String,
        title: String,
        tables: Vec<ConvergenceTable>,
    }
    let mut sections = Vec::new();
    for (name, n0, title, methods) in REPRO_STUDIES {
        let problem = problem_by_name(name, -1.0)?;
        let ms = methods.iter().map(|m| lookup(m)).collect::<rbfrk::Result<Vec<_>>>()?;
        let tables = convergence_studies(&problem, &ms, &rbfrk::analysis::doubling(n0, 6), rbfrk::ErrorNorm::Max)?;
        sections.push(Section { problem: name.into(), title: title.into(), tables });
    }
    let bytes = match a.format {
        Format::Json => json(&sections),
        Format::Md | Format::Csv => {
            let mut s = String::new();
            for (i, sec) in sections.iter().enumerate() {
                if a.format == Format::Md {
                    let _ = writeln!(s, "## {}. {}: {}\n", i + 1, sec.problem, sec.title);
                    s.push_str(&side_by_side_markdown(&sec.tables));
                    s.push('\n');
                } else {
                    let _ = writeln!(s, "# {}. {}: {}", i + 1, sec.problem, sec.title);
                    s.push_str(&side_by_side_csv(&sec.tables));
                }
            }
            s.into_bytes()
        }
        f => return Err(unsupported("repro", f)),
    };
    emit(&a.output, &bytes)
}
