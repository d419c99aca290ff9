use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::anyhow;
use elongate::density::{audit_convexity_midpoint, audit_growth, audit_uniform_strict_convexity};
use elongate::field::io::{write_binary, write_csv, FieldHeader};
use elongate::field::extend_vertical;
use elongate::solver::{minimality_audit, minimize, solve_limit};
use elongate::study::{
    fit_rate, run_sweep, saint_venant_profile, theorem_verdicts, write_sweep_csv, FitModel, RateFit,
    Status, SweepRecord,
};
use elongate::{EnergyDensity, HypothesisReport, ScalarField, SolveReport};
use serde::Serialize;

use crate::config::{DensitySection, FieldFormat, Resolved, RunConfig};
use crate::output::OutDir;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

pub type Outcome = Result<(), Failure>;

pub trait WithCode<T> {
    fn code(self, code: i32) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: i32) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

fn fail(code: i32, msg: String) -> Failure {
    Failure {
        code,
        error: anyhow!(msg),
    }
}

fn prepare(config: &Path, out: Option<&Path>) -> Result<Resolved, Failure> {
    let mut cfg = RunConfig::load(config).code(EXIT_USAGE)?;
    if let Some(dir) = out {
        cfg.output.directory = dir.to_path_buf();
    }
    cfg.resolve().code(EXIT_USAGE)
}

fn open_output(res: &Resolved) -> Result<OutDir, Failure> {
    let out = OutDir::create(&res.config.output.directory).code(EXIT_USAGE)?;
    out.write_json("resolved-config.json", &res.config).code(EXIT_USAGE)?;
    Ok(out)
}

fn print_budget(res: &Resolved, ells: &[f64]) -> Outcome {
    let vg = res.sweep.vertical_grid().code(EXIT_USAGE)?;
    println!("limit grid: {} nodes", vg.node_count());
    for &ell in ells {
        let g = res.sweep.grid(ell).code(EXIT_USAGE)?;
        println!(
            "ell = {ell}: {} nodes, {} cells (budget {})",
            g.node_count(),
            g.cell_count(),
            res.sweep.node_budget
        );
    }
    println!("configuration valid; nothing solved (dry run)");
    Ok(())
}

fn dump_field(out: &OutDir, stem: &str, field: &ScalarField<f64>, formats: &[FieldFormat]) -> Outcome {
    for format in formats {
        let (ext, name) = match format {
            FieldFormat::Csv => ("csv", "csv"),
            FieldFormat::Binary => ("bin", "binary-f64"),
        };
        out.write_json(&format!("{stem}.{ext}.json"), &FieldHeader::describe(field, name))
            .code(EXIT_USAGE)?;
        out.write_with(&format!("{stem}.{ext}"), |w| {
            match format {
                FieldFormat::Csv => write_csv(field, w)?,
                FieldFormat::Binary => write_binary(field, w)?,
            }
            Ok(())
        })
        .code(EXIT_USAGE)?;
    }
    Ok(())
}

struct Solved {
    solution: ScalarField<f64>,
    report: SolveReport,
    limit: ScalarField<f64>,
    limit_report: SolveReport,
    limit_ext: ScalarField<f64>,
}

fn solve_at(res: &Resolved, ell: f64) -> Result<Solved, Failure> {
    let s = &res.sweep;
    let grid = Arc::new(s.grid(ell).code(EXIT_USAGE)?);
    let vgrid = Arc::new(s.vertical_grid().code(EXIT_USAGE)?);
    let (solution, report) = minimize(&grid, &s.density, &s.load, &s.solver, None).code(EXIT_SOLVER)?;
    let (limit, limit_report) = solve_limit(&vgrid, &s.density, &s.load, &s.solver).code(EXIT_SOLVER)?;
    let limit_ext = extend_vertical(&limit, &grid).code(EXIT_SOLVER)?;
    Ok(Solved {
        solution,
        report,
        limit,
        limit_report,
        limit_ext,
    })
}

fn check_converged(reports: &[(&str, &SolveReport)]) -> Outcome {
    for (name, r) in reports {
        if !r.converged {
            return Err(fail(
                EXIT_SOLVER,
                format!(
                    "{name} solve did not converge: gradient max-norm {:e} above {:e} after {} iterations",
                    r.grad_max_norm, r.grad_threshold, r.iterations
                ),
            ));
        }
    }
    Ok(())
}

pub fn solve(config: &Path, out: Option<&Path>, dry_run: bool) -> Outcome {
    let res = prepare(config, out)?;
    let ell = res.max_ell();
    if dry_run {
        return print_budget(&res, &[ell]);
    }
    let dir = open_output(&res)?;
    let s = solve_at(&res, ell)?;
    let formats = &res.config.output.formats;
    dump_field(&dir, "field", &s.solution, formats)?;
    dump_field(&dir, "limit", &s.limit, formats)?;
    dir.write_json("solve-report.json", &s.report).code(EXIT_USAGE)?;
    dir.write_json("limit-report.json", &s.limit_report).code(EXIT_USAGE)?;
    println!(
        "ell = {ell}: J = {:.12e}, {} iterations, gradient max-norm {:.3e}, converged: {}",
        s.report.energy, s.report.iterations, s.report.grad_max_norm, s.report.converged
    );
    check_converged(&[("P_ell", &s.report), ("limit", &s.limit_report)])?;

    let audit = minimality_audit(
        &s.solution,
        Some(&s.limit_ext),
        &res.sweep.density,
        &res.sweep.load,
        &res.audit_plan(),
    )
    .code(EXIT_SOLVER)?;
    dir.write_json("minimality-audit.json", &audit).code(EXIT_USAGE)?;
    println!(
        "minimality audit: {} violations in {} trials (tolerance {:.3e})",
        audit.violations, audit.trials, audit.tolerance
    );
    audit.into_result().code(EXIT_VERDICT)?;
    Ok(())
}

#[derive(Serialize)]
struct FitEntry {
    quantity: &'static str,
    model: FitModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn fits_for(records: &[&SweepRecord], p: f64, models: &[FitModel], floor: f64) -> Vec<FitEntry> {
    models
        .iter()
        .map(|&model| {
            let (quantity, pts): (&str, Vec<(f64, f64)>) = match model {
                FitModel::Exponential => (
                    "err_grad_p^(1/p)",
                    records.iter().map(|r| (r.ell, r.err_grad_p.powf(1.0 / p))).collect(),
                ),
                FitModel::Power => ("err_w1p", records.iter().map(|r| (r.ell, r.err_w1p)).collect()),
            };
            match fit_rate(&pts, model, floor) {
                Ok(fit) => FitEntry {
                    quantity,
                    model,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => {
                    eprintln!("warning: {quantity} {model:?} fit: {e}");
                    FitEntry {
                        quantity,
                        model,
                        fit: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    records: &'a [SweepRecord],
    limit_report: &'a SolveReport,
}

pub fn sweep(config: &Path, out: Option<&Path>, dry_run: bool) -> Outcome {
    let res = prepare(config, out)?;
    if dry_run {
        return print_budget(&res, &res.sweep.ell_list);
    }
    let dir = open_output(&res)?;
    let output = run_sweep(&res.sweep).code(EXIT_SOLVER)?;
    check_converged(&[("limit", &output.limit_report)])?;
    let records = &output.records;
    for r in records.iter().filter(|r| !r.converged) {
        eprintln!("warning: ell = {} did not converge; excluded from fits", r.ell);
    }
    dir.write_with("sweep.csv", |w| Ok(write_sweep_csv(records, w)?))
        .code(EXIT_USAGE)?;
    dir.write_json(
        "sweep.json",
        &SweepSummary {
            records,
            limit_report: &output.limit_report,
        },
    )
    .code(EXIT_USAGE)?;

    let p = res.sweep.density.p;
    let usable: Vec<&SweepRecord> = records.iter().filter(|r| r.converged).collect();
    let fits = fits_for(&usable, p, &res.config.study.fit_models, res.floor);
    dir.write_json("fits.json", &fits).code(EXIT_USAGE)?;

    let semilog: Vec<(f64, f64)> = usable.iter().map(|r| (r.ell, (r.err_grad_p.powf(1.0 / p)).ln())).collect();
    let loglog: Vec<(f64, f64)> = usable.iter().map(|r| (r.ell.ln(), r.err_w1p.ln())).collect();
    dir.write_columns("plot-ell-vs-ln-err.dat", "ell ln(err_grad_p^(1/p))", &semilog)
        .code(EXIT_USAGE)?;
    dir.write_columns("plot-lnell-vs-ln-err.dat", "ln(ell) ln(err_w1p)", &loglog)
        .code(EXIT_USAGE)?;

    let verdicts = theorem_verdicts(records, &res.sweep.density, &res.verdict_options());
    dir.write_json("verdicts.json", &verdicts).code(EXIT_USAGE)?;
    let mut failed = Vec::new();
    for v in &verdicts {
        println!("{:<12} {:<13} {}", v.claim, format!("{:?}", v.status).to_lowercase(), v.detail);
        match v.status {
            Status::Fail => failed.push(v.claim.clone()),
            Status::Inconclusive => eprintln!("warning: {} inconclusive: {}", v.claim, v.detail),
            _ => {}
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(EXIT_VERDICT, format!("failed verdicts: {}", failed.join(", "))))
    }
}

pub fn profile(config: &Path, out: Option<&Path>, dry_run: bool) -> Outcome {
    let res = prepare(config, out)?;
    let ell = res.max_ell();
    if dry_run {
        return print_budget(&res, &[ell]);
    }
    let dir = open_output(&res)?;
    let s = solve_at(&res, ell)?;
    check_converged(&[("P_ell", &s.report), ("limit", &s.limit_report)])?;
    let ts: Vec<f64> = (1..=ell.floor() as usize).map(|t| t as f64).collect();
    let prof = saint_venant_profile(&s.solution, &s.limit_ext, res.sweep.density.p, &ts).code(EXIT_USAGE)?;
    dir.write_with("profile.csv", |w| Ok(prof.write_csv(w)?)).code(EXIT_USAGE)?;
    if let Some(theta) = prof.theta(1.0, ell - 1.0) {
        println!("ell = {ell}: max g(t)/g(t+1) = {theta:.4e}");
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct AuditArgs {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub kind: Option<String>,
    pub p: Option<f64>,
    pub r: Option<usize>,
    pub n: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub big_lambda: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Serialize)]
struct DensityAudit {
    density: EnergyDensity<f64>,
    samples: usize,
    seed: u64,
    reports: Vec<HypothesisReport>,
    skipped: Vec<String>,
}

fn audit_density_of(args: &AuditArgs) -> anyhow::Result<EnergyDensity<f64>> {
    let base = match &args.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    let mut section = base.as_ref().map(|c| c.density.clone()).unwrap_or(DensitySection {
        kind: String::new(),
        p: None,
        lambda: None,
        big_lambda: None,
        beta: None,
    });
    if let Some(kind) = &args.kind {
        section.kind = kind.clone();
    }
    if section.kind.is_empty() {
        anyhow::bail!("a density kind is required (--kind or --config)");
    }
    section.p = args.p.or(section.p);
    section.lambda = args.lambda.or(section.lambda);
    section.big_lambda = args.big_lambda.or(section.big_lambda);
    section.beta = args.beta.or(section.beta);
    let r = args.r.or(base.as_ref().map(|c| c.domain.r)).unwrap_or(1);
    let n = args.n.or(base.as_ref().map(|c| c.domain.n)).unwrap_or(r + 1);
    section.build(r, n)
}

pub fn audit_density(args: &AuditArgs, dry_run: bool) -> Outcome {
    let d = audit_density_of(args).code(EXIT_USAGE)?;
    if args.samples == 0 {
        return Err(fail(EXIT_USAGE, "--samples must be positive".into()));
    }
    if dry_run {
        println!("{}", serde_json::to_string_pretty(&d).code(EXIT_USAGE)?);
        println!("configuration valid; nothing audited (dry run)");
        return Ok(());
    }
    let mut reports = vec![audit_growth(&d, args.samples, args.seed)];
    let mut skipped = Vec::new();
    if d.beta > 0.0 {
        reports.push(audit_uniform_strict_convexity(&d, args.samples, args.seed).code(EXIT_USAGE)?);
    } else {
        skipped.push("uniform-strict-convexity: beta = 0".to_string());
    }
    reports.push(audit_convexity_midpoint(&d, args.samples, args.seed));
    let report = DensityAudit {
        density: d,
        samples: args.samples,
        seed: args.seed,
        reports,
        skipped,
    };
    let text = serde_json::to_string_pretty(&report).code(EXIT_USAGE)?;
    println!("{text}");
    if let Some(out) = &args.out {
        let dir = OutDir::create(out).code(EXIT_USAGE)?;
        dir.write_json("density-audit.json", &report).code(EXIT_USAGE)?;
    }
    let bad: Vec<String> = report
        .reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} ({} violations)", r.hypothesis, r.violations))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(fail(EXIT_VERDICT, format!("hypotheses violated: {}", bad.join(", "))))
    }
}

