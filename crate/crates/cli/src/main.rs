//! qma: command-line front end for the quaternionic Monge-Ampere
//! toolkit. Subcommands cover the Dirichlet solver, Moore
//! determinants, plurisubharmonicity sampling, sup/inf-convolutions,
//! config linting and the randomized invariant suites.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 numerical
//! failure (non-convergence, degenerate eigenvalue grouping, failed
//! invariant suite).

mod config;
mod expr;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};
use serde::Serialize;

use qma_core::sampling::rng_from_seed;
use qma_core::{
    hha, inf_convolution, psh_check, solve_dirichlet, sup_convolution, CoreError, GridFunction,
    ScalarField,
};

use config::{build_problem, sample_in_domain, Config, Validated};
use expr::parse_expression;

#[derive(Parser)]
#[command(name = "qma", version, about = "Dirichlet solver for the quaternionic Monge-Ampere equation", max_term_width = 100)]
struct Cli {
    /// Problem configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, value_name = "PATH", default_value = ".")]
    output_dir: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the solver sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the Dirichlet problem from the config; writes the
    /// solution CSV and a JSON report.
    Solve,
    /// Print the Moore determinant of a matrix file from both the
    /// eigenvalue path and the recursive oracle.
    MooreDet {
        /// Plain-text matrix file: first line n, then n^2 lines
        /// `row col x0 x1 x2 x3`.
        matrix: PathBuf,
    },
    /// Sample the quaternionic Hessian of a field over the config
    /// domain and report plurisubharmonicity with a witness.
    PshCheck {
        /// Field expression in x0..x_{4n-1}.
        expr: String,
        /// Number of sample points.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Eigenvalue tolerance below which a point counts as a
        /// violation.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Sample a field on the config grid and write its sup- and
    /// inf-convolution CSVs.
    Convolve {
        /// Field expression in x0..x_{4n-1}.
        expr: String,
        /// Convolution parameter delta.
        #[arg(long)]
        delta: f64,
        /// Localization constant A; needs A^2 > 2 osc(f).
        #[arg(long, default_value_t = 2.0)]
        a_const: f64,
    },
    /// Check the config without running anything.
    Validate,
    /// Run the randomized invariant suites and print a pass/fail
    /// table.
    Properties,
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Numerical(e) => e,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(anyhow!(msg.into()))
}

// parameter and input problems surfaced by the core count as config
// errors; everything else is a numerical failure
fn core_err(e: CoreError) -> Failure {
    match e {
        CoreError::InvalidInput(_) | CoreError::Precondition(_) | CoreError::Io(_) => {
            Failure::Config(e.into())
        }
        _ => Failure::Numerical(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.cmd {
        Cmd::Solve => cmd_solve(cli),
        Cmd::MooreDet { matrix } => cmd_moore_det(matrix),
        Cmd::PshCheck { expr, samples, tol } => cmd_psh_check(cli, expr, *samples, *tol),
        Cmd::Convolve { expr, delta, a_const } => cmd_convolve(cli, expr, *delta, *a_const),
        Cmd::Validate => cmd_validate(cli),
        Cmd::Properties => cmd_properties(cli),
    }
}

/// Load the config, apply the --seed override, validate.
fn require_config(cli: &Cli) -> Result<(Config, Validated), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config_err("this subcommand needs --config <PATH>"))?;
    let mut config = Config::from_file(path).map_err(config_err)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let validated = config.validate().map_err(config_err)?;
    Ok((config, validated))
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(&cli.output_dir)
        .map_err(|e| config_err(format!("cannot create {}: {e}", cli.output_dir.display())))?;
    Ok(cli.output_dir.join(name))
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    iterations: usize,
    converged: bool,
    residual: f64,
    residual_history: &'a [f64],
    linf_error: Option<f64>,
    config_echo: &'a Config,
}

fn cmd_solve(cli: &Cli) -> Result<(), Failure> {
    let (config, v) = require_config(cli)?;
    let problem = build_problem(&v).map_err(core_err)?;
    let (grid, report) = solve_dirichlet(&problem, &v.params).map_err(core_err)?;

    let csv_path = out_path(cli, &v.solution_csv)?;
    grid.write_csv(&csv_path).map_err(core_err)?;
    let doc = ReportDoc {
        iterations: report.iterations,
        converged: report.converged,
        residual: report.residual,
        residual_history: &report.residual_history,
        linf_error: report.linf_error,
        config_echo: &config,
    };
    let report_path = out_path(cli, &v.report_json)?;
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    std::fs::write(&report_path, text).map_err(|e| core_err(e.into()))?;

    println!(
        "solve: {} iterations, residual {:.3e}, converged: {}",
        report.iterations, report.residual, report.converged
    );
    if let Some(err) = report.linf_error {
        println!("linf error against the exact solution: {err:.3e}");
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", report_path.display());

    if !report.converged {
        return Err(Failure::Numerical(anyhow!(
            "no convergence within {} iterations (best residual {:.3e})",
            v.params.max_iter,
            report.residual
        )));
    }
    Ok(())
}

fn cmd_moore_det(matrix: &Path) -> Result<(), Failure> {
    let x = hha::read_matrix_file(matrix).map_err(core_err)?;
    let d1 = hha::moore_det(&x).map_err(core_err)?;
    println!("moore-det (eigenvalue path): {d1}");
    match hha::moore_det_oracle(&x) {
        Ok(d2) => {
            println!("moore-det (recursive oracle): {d2}");
            let scale = d1.abs().max(d2.abs()).max(1e-300);
            println!("relative gap: {:.3e}", (d1 - d2).abs() / scale);
        }
        Err(CoreError::OracleDimension(_)) => {
            println!("moore-det (recursive oracle): not available for n > 4");
        }
        Err(e) => return Err(core_err(e)),
    }
    Ok(())
}

fn cmd_psh_check(cli: &Cli, text: &str, samples: usize, tol: f64) -> Result<(), Failure> {
    let (_, v) = require_config(cli)?;
    let parsed = parse_expression(text).map_err(|e| config_err(format!("field: {e}")))?;
    if parsed.uses_t() {
        return Err(config_err("field must not reference t"));
    }
    if let Some(k) = parsed.max_var() {
        if k >= 4 * v.n {
            return Err(config_err(format!("field: variable x{k} is out of range for n = {}", v.n)));
        }
    }
    let field = {
        let e = parsed.clone();
        ScalarField::new(v.n, move |x| e.eval(x, 0.0))
    };
    let mut rng = rng_from_seed(v.seed);
    let points: Vec<Vec<f64>> =
        (0..samples.max(1)).map(|_| sample_in_domain(&v.domain, &mut rng)).collect();
    let report = psh_check(&field, &points, tol, None).map_err(core_err)?;

    println!("psh-check: {} sample points, tolerance {tol:e}", points.len());
    if report.plurisubharmonic {
        println!("verdict: plurisubharmonic on all samples");
    } else {
        let w = report.witness.expect("failing check carries a witness");
        println!("verdict: not plurisubharmonic");
        println!("witness q = {:?}, smallest Hessian eigenvalue = {:.6e}", w.point, w.min_eigenvalue);
    }
    Ok(())
}

fn cmd_convolve(cli: &Cli, text: &str, delta: f64, a_const: f64) -> Result<(), Failure> {
    let (_, v) = require_config(cli)?;
    let parsed = parse_expression(text).map_err(|e| config_err(format!("field: {e}")))?;
    if parsed.uses_t() {
        return Err(config_err("field must not reference t"));
    }
    if let Some(k) = parsed.max_var() {
        if k >= 4 * v.n {
            return Err(config_err(format!("field: variable x{k} is out of range for n = {}", v.n)));
        }
    }
    let grid = GridFunction::from_domain(&v.domain, v.params.points_per_axis, |x| {
        parsed.eval(x, 0.0)
    })
    .map_err(core_err)?;

    let sup = sup_convolution(&grid, delta, a_const).map_err(core_err)?;
    let inf = inf_convolution(&grid, delta, a_const).map_err(core_err)?;

    let field_path = out_path(cli, "field.csv")?;
    let sup_path = out_path(cli, "sup_convolution.csv")?;
    let inf_path = out_path(cli, "inf_convolution.csv")?;
    grid.write_csv(&field_path).map_err(core_err)?;
    sup.write_csv(&sup_path).map_err(core_err)?;
    inf.write_csv(&inf_path).map_err(core_err)?;
    println!("convolve: delta = {delta}, A = {a_const}");
    println!("wrote {}", field_path.display());
    println!("wrote {}", sup_path.display());
    println!("wrote {}", inf_path.display());
    Ok(())
}

fn cmd_validate(cli: &Cli) -> Result<(), Failure> {
    let (config, v) = require_config(cli)?;
    println!(
        "config ok: n = {}, {} domain, {}^{} grid, tol {:.1e}, richness {}",
        v.n,
        config.domain,
        v.params.points_per_axis,
        4 * v.n,
        v.params.tol,
        v.params.richness
    );
    Ok(())
}

fn cmd_properties(cli: &Cli) -> Result<(), Failure> {
    let seed = match &cli.config {
        Some(path) => {
            let config = Config::from_file(path).map_err(config_err)?;
            cli.seed.unwrap_or(config.seed)
        }
        None => cli.seed.unwrap_or(0),
    };
    println!("invariant suites (seed {seed})");
    let outcomes = qma_core::properties::run_all(seed);
    let mut failed = 0usize;
    for o in &outcomes {
        println!("{} {}", if o.passed { "PASS" } else { "FAIL" }, o.name);
        if !o.passed {
            failed += 1;
            println!("     {}", o.details);
        }
    }
    println!("{} of {} suites passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        return Err(Failure::Numerical(anyhow!("{failed} invariant suite(s) failed")));
    }
    Ok(())
}
