//! The four subcommand bodies. Grid sweeps emit rows strictly in grid order
//! so identical configs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use traceform::bell::{self, BellRegime};
use traceform::validate::{self, Check};
use traceform::{solver, ConstraintSet, EntropicFunctional, HermitianMatrix};

use crate::config::{self, FileConfig, Settings};
use crate::error::{usage, CliError};
use crate::{BellArgs, InferArgs, PhaseArgs, ThermoArgs};

/// Shortest round-trip decimal form; what every CSV field uses.
fn num(x: f64) -> String {
    format!("{x}")
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn bell(args: BellArgs) -> Result<(), CliError> {
    let file = config::load_file(args.common.config.as_deref())?;
    let settings = Settings::resolve(&args.common, &file)?;
    let out = settings.require_out()?;
    let range = args
        .b_range
        .clone()
        .or_else(|| file.b_range.clone())
        .ok_or_else(|| usage("missing --b-range (or `b_range` in the config file)"))?;
    let grid = config::parse_range(&range)?;
    let alpha = args.alpha.or(file.alpha).unwrap_or(1.0);

    let mut csv =
        String::from("b,p_plus,p_minus,p_zero,lambda0,lambda1,S_f,regime,concurrence,fake\n");
    for &b in &grid {
        let report = if alpha == 1.0 {
            bell::solve_bell(b, &settings.functional)?
        } else {
            bell::solve_bell_alpha(b, alpha, &settings.functional)?
        };
        let regime = match report.regime {
            BellRegime::Interior => "interior",
            BellRegime::Cutoff => "cutoff",
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            num(b),
            num(report.state.p_plus),
            num(report.state.p_minus),
            num(report.state.p_zero),
            num(report.lambda_0),
            num(report.lambda_1),
            num(report.state.entropy(&settings.functional)),
            regime,
            num(report.concurrence),
            report.fake,
        )
        .expect("writing to String cannot fail");
    }
    write_file(out, &csv)
}

pub fn phase(args: PhaseArgs) -> Result<(), CliError> {
    let file = config::load_file(args.common.config.as_deref())?;
    let settings = Settings::resolve(&args.common, &file)?;
    let out = settings.require_out()?;
    let family = args
        .family
        .clone()
        .or_else(|| file.family.clone())
        .ok_or_else(|| usage("missing --family (or `family` in the config file)"))?;
    let range = args
        .q_range
        .clone()
        .or_else(|| file.q_range.clone())
        .ok_or_else(|| usage("missing --q-range (or `q_range` in the config file)"))?;
    let grid = config::parse_range(&range)?;
    let build: fn(f64) -> traceform::Result<EntropicFunctional> = match family.as_str() {
        "tsallis" => |q| EntropicFunctional::tsallis(q, 1.0),
        "exponential" => |q| EntropicFunctional::exponential(q, 1.0),
        other => {
            return Err(usage(format!(
                "unknown family {other:?}; expected tsallis or exponential"
            )))
        }
    };

    let mut csv = String::from("q,b_c,fake_lo,fake_hi\n");
    for &q in &grid {
        let f = build(q)?;
        let b_c = bell::critical_b(&f);
        let (lo, hi) = match bell::fake_entanglement_interval(&f)? {
            Some((lo, hi)) => (num(lo), num(hi)),
            None => (String::new(), String::new()),
        };
        writeln!(csv, "{},{},{lo},{hi}", num(q), num(b_c))
            .expect("writing to String cannot fail");
    }
    write_file(out, &csv)
}

/// Observables and targets for infer/thermo, merged from flags and config,
/// with the dimension settled against the first matrix file.
fn load_problem(
    observable_flags: &[PathBuf],
    target_flags: &[f64],
    dim_flag: Option<usize>,
    file: &FileConfig,
) -> Result<ConstraintSet, CliError> {
    let paths: Vec<PathBuf> = if observable_flags.is_empty() {
        file.observables.clone().unwrap_or_default()
    } else {
        observable_flags.to_vec()
    };
    let targets: Vec<f64> = if target_flags.is_empty() {
        file.targets.clone().unwrap_or_default()
    } else {
        target_flags.to_vec()
    };
    if paths.len() != targets.len() {
        return Err(usage(format!(
            "{} observables but {} targets",
            paths.len(),
            targets.len()
        )));
    }
    let mut observables = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let matrix = traceform::linalg::parse_matrix(&text)
            .and_then(HermitianMatrix::new)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        observables.push(matrix);
    }
    let dim = match (dim_flag.or(file.dim), observables.first()) {
        (Some(d), Some(m)) if d != m.dim() => {
            return Err(usage(format!(
                "--dim {d} conflicts with {}x{} observable",
                m.dim(),
                m.dim()
            )))
        }
        (Some(d), _) => d,
        (None, Some(m)) => m.dim(),
        (None, None) => {
            return Err(usage(
                "no observables given; --dim is required for the trace-only problem",
            ))
        }
    };
    Ok(ConstraintSet::new(dim, observables, targets)?)
}

pub fn infer(args: InferArgs) -> Result<(), CliError> {
    let file = config::load_file(args.common.config.as_deref())?;
    let settings = Settings::resolve(&args.common, &file)?;
    let out = settings.require_out()?;
    let cs = load_problem(&args.observable, &args.target, args.dim, &file)?;
    let sol = solver::solve(&cs, &settings.functional, &settings.options)?;

    let m = cs.count();
    let mut header = Vec::new();
    let mut row = Vec::new();
    for (i, eig) in sol.rho.eigenvalues().iter().enumerate() {
        header.push(format!("eig_{i}"));
        row.push(num(*eig));
    }
    for (a, l) in sol.lambda.iter().enumerate() {
        header.push(format!("lambda_{a}"));
        row.push(num(*l));
    }
    header.push("S_f".to_string());
    row.push(num(sol.entropy));
    for (a, r) in sol.residuals.iter().enumerate() {
        header.push(format!("res_{a}"));
        row.push(num(*r));
    }
    for a in 0..m {
        for b in 0..m {
            header.push(format!("A_{a}_{b}"));
            row.push(num(sol.curvature.a[[a, b]]));
        }
    }
    let csv = format!("{}\n{}\n", header.join(","), row.join(","));
    write_file(out, &csv)
}

pub fn thermo(args: ThermoArgs) -> Result<(), CliError> {
    let file = config::load_file(args.common.config.as_deref())?;
    let settings = Settings::resolve(&args.common, &file)?;
    let bell_b = args.bell_b.or(file.bell_b);

    let checks: Vec<Check> = match bell_b {
        Some(b) => {
            let cs = ConstraintSet::new(4, vec![bell::chsh_observable()], vec![b])?;
            let (_, mut checks) =
                validate::thermo_suite(&cs, &settings.functional, &settings.options)?;
            checks.push(Check::new(
                "observable multiplier vs entropy slope",
                validate::bell_entropy_slope_deviation(b, &settings.functional)?,
                validate::DS_DB_TOL,
            ));
            checks
        }
        None => {
            let cs = load_problem(&args.observable, &args.target, args.dim, &file)?;
            let (_, checks) =
                validate::thermo_suite(&cs, &settings.functional, &settings.options)?;
            checks
        }
    };

    let mut table = String::from("check,observed,tolerance,pass\n");
    for c in &checks {
        writeln!(table, "{},{},{},{}", c.name, num(c.observed), num(c.tolerance), c.pass)
            .expect("writing to String cannot fail");
    }
    match &settings.out {
        Some(path) => write_file(path, &table)?,
        None => print!("{table}"),
    }

    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(())
}
