use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nodal_core::magnetic::{self, SurfaceGrid};
use nodal_core::selftest::{self, Fault, SelfTestConfig, Suite};
use nodal_core::{
    kuramoto, nodal, Error, FullVerification, Hypothesis, Instance, MorseCheck, NodalReport,
    StabilityVerdict,
};

use crate::{input, Common, Format, KSpec, SelftestArgs, SurfaceArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_HYPOTHESIS: u8 = 2;
pub const EXIT_PROPERTY: u8 = 3;

/// Entry-wise agreement required between analytic and finite-difference Hessians,
/// relative to the largest analytic entry.
const FD_REL_TOL: f64 = 1e-4;

/// Share of degenerate grid points above which `surface` exits with code 2.
const MAX_DEGENERATE_SHARE: f64 = 0.01;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: EXIT_IO, message: message.into() }
    }

    fn property(message: impl Into<String>) -> Self {
        Failure { code: EXIT_PROPERTY, message: message.into() }
    }
}

/// An eigenpair (or fixed point) left out of the results, and why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Skipped {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
    pub reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodalOutput {
    reports: Vec<NodalReport>,
    skipped: Vec<Skipped>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VerifyOutput {
    verifications: Vec<FullVerification>,
    skipped: Vec<Skipped>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MagneticReport {
    morse: MorseCheck,
    finite_difference: Vec<Vec<f64>>,
    fd_step: f64,
    max_relative_difference: f64,
    fd_agrees: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct MagneticOutput {
    reports: Vec<MagneticReport>,
    skipped: Vec<Skipped>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KuramotoOutput {
    seed: u64,
    starts: usize,
    drift: f64,
    n_fixed_points: usize,
    n_stable: usize,
    verdicts: Vec<StabilityVerdict>,
    skipped: Vec<Skipped>,
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::io(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::io(format!("stdout: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn indices(k: KSpec, n: usize) -> Result<Vec<usize>, Failure> {
    match k {
        KSpec::All => Ok((1..=n).collect()),
        KSpec::One(k) if k <= n => Ok(vec![k]),
        KSpec::One(k) => Err(Failure::io(format!("--k {k} is out of range 1..={n}"))),
    }
}

/// Sorts an error into "skip this eigenpair" or "abort".
fn skip_or_fail(index: usize, e: Error) -> Result<Skipped, Failure> {
    match e {
        Error::HypothesisViolation { hypothesis, .. } => {
            Ok(Skipped { index, hypothesis: Some(hypothesis), reason: e.to_string() })
        }
        Error::AmbiguousInertia { .. }
        | Error::SplitDegenerate(_)
        | Error::DegenerateNearZero(_)
        | Error::SingularPivotBlock(_) => Ok(Skipped { index, hypothesis: None, reason: e.to_string() }),
        other => Err(Failure::property(format!("eigenpair {index}: {other}"))),
    }
}

fn report_skips(skipped: &[Skipped]) {
    for s in skipped {
        eprintln!("nodal: skipped {}: {}", s.index, s.reason);
    }
}

fn exit_code(all_hold: bool, skipped: &[Skipped]) -> u8 {
    if !all_hold {
        EXIT_PROPERTY
    } else if !skipped.is_empty() {
        EXIT_HYPOTHESIS
    } else {
        EXIT_OK
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    input::instance(path)
}

pub fn nodal(path: &Path, k: KSpec, common: &Common, all_routes: bool) -> Result<u8, Failure> {
    let inst = load(path)?;
    let tol = common.tolerances();
    let eig = inst.matrix.eigensystem(tol).map_err(|e| Failure::property(e.to_string()))?;
    let mut skipped = Vec::new();
    let mut verifications = Vec::new();
    let mut reports = Vec::new();
    for k in indices(k, eig.len())? {
        if all_routes {
            match nodal::verify_all_routes(&inst.matrix, &eig, k, &inst.frame, tol) {
                Ok(v) => verifications.push(v),
                Err(e) => skipped.push(skip_or_fail(k, e)?),
            }
        } else {
            match nodal::verify_with(&inst.matrix, &eig, k, &inst.frame, tol) {
                Ok(r) => reports.push(r),
                Err(e) => skipped.push(skip_or_fail(k, e)?),
            }
        }
    }
    report_skips(&skipped);
    let all_hold = if all_routes {
        verifications.iter().all(|v| v.consistent)
    } else {
        reports.iter().all(|r| r.theorem_holds)
    };
    let text = match (common.format, all_routes) {
        (Format::Json, false) => to_json(&NodalOutput { reports, skipped: skipped.clone() }),
        (Format::Json, true) => to_json(&VerifyOutput { verifications, skipped: skipped.clone() }),
        (Format::Csv, false) => csv(
            &["k", "nodal_count", "surplus", "betti", "minus", "zero", "plus", "theorem_holds"],
            reports.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    r.nodal_count.to_string(),
                    r.surplus.to_string(),
                    r.betti.to_string(),
                    r.inertia.n_minus.to_string(),
                    r.inertia.n_zero.to_string(),
                    r.inertia.n_plus.to_string(),
                    r.theorem_holds.to_string(),
                ]
            }),
        ),
        (Format::Csv, true) => csv(
            &[
                "k",
                "nodal_count",
                "surplus",
                "bordered_minus",
                "bordered_zero",
                "exact_minus",
                "cycle_minus",
                "funny_product_residual",
                "consistent",
            ],
            verifications.iter().map(|v| {
                vec![
                    v.report.k.to_string(),
                    v.report.nodal_count.to_string(),
                    v.report.surplus.to_string(),
                    v.bordered.bordered.n_minus.to_string(),
                    v.bordered.bordered.n_zero.to_string(),
                    v.splitting.exact_block.n_minus.to_string(),
                    v.splitting.cycle_block.n_minus.to_string(),
                    num(v.funny_product_residual),
                    v.consistent.to_string(),
                ]
            }),
        ),
    };
    emit(common, &text)?;
    Ok(exit_code(all_hold, &skipped))
}

fn max_relative_difference(a: &nodal_core::nalgebra::DMatrix<f64>, b: &nodal_core::nalgebra::DMatrix<f64>) -> f64 {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}

pub fn magnetic(path: &Path, k: KSpec, fd_step: f64, common: &Common) -> Result<u8, Failure> {
    let inst = load(path)?;
    let tol = common.tolerances();
    let n = inst.matrix.n();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for k in indices(k, n)? {
        let run = || -> nodal_core::Result<MagneticReport> {
            let morse = magnetic::morse_index_check(&inst.matrix, k, tol)?;
            let analytic = magnetic::analytic_hessian(&inst.matrix, k, &inst.frame, tol)?;
            let fd = magnetic::finite_difference_hessian(&inst.matrix, k, &inst.frame, fd_step, tol)?;
            let diff = max_relative_difference(&analytic, &fd);
            Ok(MagneticReport {
                morse,
                finite_difference: fd.row_iter().map(|r| r.iter().copied().collect()).collect(),
                fd_step,
                max_relative_difference: diff,
                fd_agrees: diff <= FD_REL_TOL,
            })
        };
        match run() {
            Ok(r) => reports.push(r),
            Err(e) => skipped.push(skip_or_fail(k, e)?),
        }
    }
    report_skips(&skipped);
    let all_hold = reports.iter().all(|r| r.morse.agree && r.fd_agrees);
    let text = match common.format {
        Format::Json => to_json(&MagneticOutput { reports, skipped: skipped.clone() }),
        Format::Csv => csv(
            &["k", "morse", "surplus", "agree", "max_relative_difference", "fd_agrees"],
            reports.iter().map(|r| {
                vec![
                    r.morse.k.to_string(),
                    r.morse.morse.to_string(),
                    r.morse.surplus.to_string(),
                    r.morse.agree.to_string(),
                    num(r.max_relative_difference),
                    r.fd_agrees.to_string(),
                ]
            }),
        ),
    };
    emit(common, &text)?;
    Ok(exit_code(all_hold, &skipped))
}

pub fn surface(args: &SurfaceArgs) -> Result<u8, Failure> {
    let common = &args.common;
    let inst = load(&args.input)?;
    let tol = common.tolerances();
    let betti = inst.frame.betti();
    if betti == 0 {
        return Err(Failure::io("the graph is a tree: there are no fluxes to sweep"));
    }
    if args.k == 0 || args.k > inst.matrix.n() {
        return Err(Failure::io(format!("--k {} is out of range 1..={}", args.k, inst.matrix.n())));
    }
    let mut grid = SurfaceGrid::new(betti, args.grid.nx, args.grid.ny, (args.range.0, args.range.1))
        .map_err(|e| Failure::io(e.to_string()))?;
    if let Some(axes) = &args.axes {
        if axes.len() != grid.axes.len() || axes.iter().any(|&a| a == 0 || a > betti) {
            return Err(Failure::io(format!(
                "--axes needs {} distinct indices in 1..={betti}",
                grid.axes.len()
            )));
        }
        if axes.len() == 2 && axes[0] == axes[1] {
            return Err(Failure::io("--axes must name two different fluxes"));
        }
        grid.axes = axes.iter().map(|a| a - 1).collect();
    }
    let hessian = match magnetic::analytic_hessian(&inst.matrix, args.k, &inst.frame, tol) {
        Ok(h) => Some(h),
        Err(e) => {
            eprintln!("nodal: no quadratic model for k = {}: {e}", args.k);
            None
        }
    };
    let rows = magnetic::surface(&inst.matrix, args.k, &inst.frame, &grid, hessian.as_ref(), tol)
        .map_err(|e| Failure::property(e.to_string()))?;
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    let text = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            magnetic::write_surface_csv(&mut buf, &rows).map_err(|e| Failure::io(e.to_string()))?;
            String::from_utf8(buf).expect("CSV is ASCII")
        }
        Format::Json => to_json(
            &rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "fluxes": r.fluxes,
                        "spectrum": r.spectrum,
                        "degenerate": r.degenerate,
                        "quadratic_model": r.quadratic,
                    })
                })
                .collect::<Vec<_>>(),
        ),
    };
    emit(common, &text)?;
    let share = degenerate as f64 / rows.len().max(1) as f64;
    if share > MAX_DEGENERATE_SHARE {
        eprintln!(
            "nodal: λ_{} is degenerate at {degenerate} of {} grid points",
            args.k,
            rows.len()
        );
        return Ok(EXIT_HYPOTHESIS);
    }
    Ok(EXIT_OK)
}

pub fn kuramoto(path: &Path, starts: usize, seed: u64, common: &Common) -> Result<u8, Failure> {
    let sys = input::system(path)?;
    let tol = common.tolerances();
    let points = kuramoto::find_fixed_points(&sys, starts, seed);
    let mut verdicts = Vec::new();
    let mut skipped = Vec::new();
    for (i, fp) in points.iter().enumerate() {
        match kuramoto::classify(&sys, fp, tol) {
            Ok(v) => verdicts.push(v),
            Err(e) => skipped.push(skip_or_fail(i, e)?),
        }
    }
    report_skips(&skipped);
    let all_hold = verdicts.iter().all(|v| v.theorem_holds);
    let n_stable = verdicts.iter().filter(|v| v.stable_mod_symmetry).count();
    let text = match common.format {
        Format::Json => to_json(&KuramotoOutput {
            seed,
            starts,
            drift: sys.drift(),
            n_fixed_points: points.len(),
            n_stable,
            verdicts,
            skipped: skipped.clone(),
        }),
        Format::Csv => {
            let n = sys.n();
            let mut header: Vec<String> = [
                "nodal_count",
                "k",
                "unstable_dim",
                "stable",
                "necessarily_unstable",
                "minus",
                "zero",
                "plus",
                "theorem_holds",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            header.extend((0..n).map(|i| format!("theta_{i}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            csv(
                &header,
                verdicts.iter().map(|v| {
                    let mut row = vec![
                        v.nodal_count.to_string(),
                        v.k.to_string(),
                        v.unstable_dim.to_string(),
                        v.stable_mod_symmetry.to_string(),
                        v.necessarily_unstable.to_string(),
                        v.inertia.n_minus.to_string(),
                        v.inertia.n_zero.to_string(),
                        v.inertia.n_plus.to_string(),
                        v.theorem_holds.to_string(),
                    ];
                    row.extend(v.theta_star.iter().map(|&t| num(t)));
                    row
                }),
            )
        }
    };
    emit(common, &text)?;
    Ok(exit_code(all_hold, &skipped))
}

pub fn selftest(args: &SelftestArgs, seed: u64) -> Result<u8, Failure> {
    let suites = match &args.suite {
        None => Suite::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                Suite::parse(n.trim()).ok_or_else(|| {
                    let known: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                    Failure::io(format!("unknown suite {n:?}; known: {}", known.join(", ")))
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let cfg = SelfTestConfig {
        seed,
        instances: args.instances,
        suites,
        fault: args.inject_fault.map(|edge| Fault::FlipPhiSign { edge }),
        tolerances: args.common.tolerances(),
    };
    let summary = selftest::run(&cfg);
    let text = match args.common.format {
        Format::Json => to_json(&summary),
        Format::Csv => csv(
            &["suite", "passed", "failed", "skipped", "checks"],
            summary.suites.iter().map(|s| {
                vec![
                    s.suite.name().to_string(),
                    s.passed.to_string(),
                    s.failed.to_string(),
                    s.skipped.to_string(),
                    s.checks.to_string(),
                ]
            }),
        ),
    };
    emit(&args.common, &text)?;
    if summary.all_passed() {
        return Ok(EXIT_OK);
    }
    for s in summary.suites.iter().filter(|s| s.failed > 0) {
        eprintln!("nodal: suite {} failed on {} instances", s.suite.name(), s.failed);
        if let Some(fixture) = &s.first_failure {
            eprintln!("{fixture}");
        }
    }
    Ok(EXIT_PROPERTY)
}
