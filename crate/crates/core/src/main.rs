//! Benchmark CLI for the variable-step BDF2 finite element solver.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vbdf2::harness::{
    convergence_study, kernel_diagnostics, stability_sweep, write_kernel_tables_csv,
    write_rows_csv, write_stability_plot_files, ConvergenceRow, ExperimentConfig, GridKind,
    GridSpec, RowStatus, StudyKind,
};
use vbdf2::kernels::{bdf2_coefficients, dcc_kernels, doc_kernels};
use vbdf2::mesh::{mesh_size, unit_cube_mesh, unit_square_mesh};
use vbdf2::problems;
use vbdf2::solver::{run, SolveOptions};
use vbdf2::timegrid::validate;

#[derive(Parser)]
#[command(
    name = "vbdf2",
    version,
    about = "Variable-step BDF2 + P1 FEM benchmark driver",
    after_help = "Exit codes: 0 success, 2 invalid configuration, 3 one or more failed rows."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study: temporal (vary N, M = N unless pinned) or spatial
    /// (one N, vary M); the mode is inferred from the lists.
    Converge(StudyArgs),
    /// Stability sweep: for each N, run every M and record the error curve.
    Stability(StudyArgs),
    /// Kernel-table diagnostics on a single grid.
    Kernels(KernelArgs),
    /// Single solver run with a one-line summary.
    Solve(SolveArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem name: example51, example52 or heat.
    #[arg(long, default_value = "example51")]
    problem: String,
    /// Time grid family.
    #[arg(long, value_parser = parse_grid, default_value = "capped")]
    grid: GridKind,
    /// Ratio cap for capped grids.
    #[arg(long, default_value_t = 4.8645)]
    cap: f64,
    /// Base RNG seed; row i of a study uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Final time.
    #[arg(long = "T", default_value_t = 1.0)]
    final_time: f64,
    /// Relative CG tolerance.
    #[arg(long = "cg-tol", default_value = "1e-12")]
    cg_tol: f64,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Time step counts (comma separated).
    #[arg(long = "N", value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Mesh subdivisions (comma separated).
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<usize>,
    /// CSV output path (stability also writes plot data next to it).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent row workers.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of time steps.
    #[arg(long = "N", required = true)]
    n: usize,
    /// Random sequences sampled for the quadratic-form minima.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// CSV dump of the kernel tables (n,j,theta,p).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of time steps.
    #[arg(long = "N", required = true)]
    n: usize,
    /// Mesh subdivisions per axis.
    #[arg(long = "M", required = true)]
    m: usize,
}

fn parse_grid(s: &str) -> Result<GridKind, String> {
    s.parse().map_err(|e: vbdf2::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> vbdf2::Result<ExitCode> {
    match cli.command {
        Command::Converge(args) => {
            let study = infer_study_kind(&args)?;
            let config = study_config(&args, study);
            let rows = convergence_study(&config)?;
            print_rows(&rows);
            if let Some(path) = &args.out {
                let mut file = std::fs::File::create(path)?;
                write_rows_csv(&rows, &mut file)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(exit_for_rows(&rows))
        }
        Command::Stability(args) => {
            let config = study_config(&args, StudyKind::Stability);
            let rows = stability_sweep(&config)?;
            print_rows(&rows);
            if let Some(path) = &args.out {
                let mut file = std::fs::File::create(path)?;
                write_rows_csv(&rows, &mut file)?;
                for written in write_stability_plot_files(path, &rows)? {
                    eprintln!("wrote {}", written.display());
                }
                eprintln!("wrote {}", path.display());
            }
            Ok(exit_for_rows(&rows))
        }
        Command::Kernels(args) => {
            let spec = GridSpec {
                kind: args.common.grid,
                cap: args.common.cap,
                seed: args.common.seed,
                final_time: args.common.final_time,
                num_steps: args.n,
            };
            let report = kernel_diagnostics(&spec, args.samples)?;
            println!("{report}");
            if let Some(path) = &args.out {
                let grid = spec.build()?;
                let coeffs = bdf2_coefficients(&grid);
                let doc = doc_kernels(&coeffs);
                let dcc = dcc_kernels(&doc);
                let mut file = std::fs::File::create(path)?;
                write_kernel_tables_csv(&doc, &dcc, &mut file)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => {
            let problem = problems::by_name(&args.common.problem).ok_or_else(|| {
                vbdf2::Error::InvalidArgument(format!("unknown problem {:?}", args.common.problem))
            })?;
            let spec = GridSpec {
                kind: args.common.grid,
                cap: args.common.cap,
                seed: args.common.seed,
                final_time: args.common.final_time,
                num_steps: args.n,
            };
            let grid = spec.build()?;
            let mesh = match problem.dim {
                2 => unit_square_mesh(args.m)?,
                _ => unit_cube_mesh(args.m)?,
            };
            let opts = SolveOptions {
                cg_tol: args.common.cg_tol,
                ..Default::default()
            };
            let report = validate(&grid, args.common.cap);
            let result = run(&problem, &grid, &mesh, &opts)?;
            println!(
                "problem={} grid={} N={} M={} h={:.4e} tau_max={:.4e} r_max={:.4} tau_sqrt_n={:.4e}",
                problem.name,
                args.common.grid.as_str(),
                args.n,
                args.m,
                mesh_size(&mesh),
                grid.max_step(),
                grid.max_ratio(),
                report.tau_sqrt_n,
            );
            println!(
                "l2_error={:.7e} steps={} cg_iterations={} wall_seconds={:.3}",
                result.final_l2_error,
                result.step_count,
                result.cg_iterations_total,
                result.wall_seconds
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn infer_study_kind(args: &StudyArgs) -> vbdf2::Result<StudyKind> {
    if args.n.len() > 1 && args.m.len() > 1 {
        return Err(vbdf2::Error::InvalidArgument(
            "converge varies either N (temporal) or M (spatial), not both; \
             use the stability subcommand for full sweeps"
                .into(),
        ));
    }
    if args.m.len() > 1 {
        Ok(StudyKind::Spatial)
    } else {
        Ok(StudyKind::Temporal)
    }
}

fn study_config(args: &StudyArgs, study: StudyKind) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(&args.common.problem, study);
    config.n_values = args.n.clone();
    config.m_values = args.m.clone();
    config.grid = args.common.grid;
    config.cap = args.common.cap;
    config.seed = args.common.seed;
    config.final_time = args.common.final_time;
    config.cg_tol = args.common.cg_tol;
    config.workers = args.workers;
    config.out = args.out.clone();
    config
}

fn print_rows(rows: &[ConvergenceRow]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{:>9} {:>6} {:>6} {:>12} {:>12} {:>10} {:>13} {:>8}  status",
        "study", "N", "M", "h", "tau_max", "r_max", "l2_error", "order"
    );
    for r in rows {
        let error = r
            .l2_error
            .map(|e| format!("{e:.6e}"))
            .unwrap_or_else(|| "-".into());
        let order = r
            .order
            .map(|o| format!("{o:.4}"))
            .unwrap_or_else(|| "-".into());
        let status = match &r.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(m) => format!("failed: {m}"),
        };
        let _ = writeln!(
            out,
            "{:>9} {:>6} {:>6} {:>12.4e} {:>12.4e} {:>10.4} {:>13} {:>8}  {}",
            r.study.as_str(),
            r.n,
            r.m,
            r.h,
            r.tau_max,
            r.r_max,
            error,
            order,
            status
        );
    }
}

fn exit_for_rows(rows: &[ConvergenceRow]) -> ExitCode {
    if rows.iter().all(|r| r.status.is_ok()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
