//! Experiment driver: convergence studies, stability sweeps, kernel
//! diagnostics and CSV/plot-data emission.
//!
//! Every study row derives its own RNG stream as `seed + row_index`, so
//! refining a study never reuses the randomness of a coarser row and any
//! single row can be reproduced in isolation.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernels::{
    apply_d2, bdf2_coefficients, dcc_kernels, doc_kernels, quadratic_form_b, quadratic_form_theta,
    rmax, DccKernels, DocKernels,
};
use crate::mesh::{mesh_size, unit_cube_mesh, unit_square_mesh, Mesh};
use crate::problems;
use crate::solver::{run, SolveOptions};
use crate::timegrid::{random_grid, GridPolicy, TimeGrid};
use crate::{Error, Result};

/// What a study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Fixed N, refine the mesh.
    Spatial,
    /// Refine the time grid (mesh follows N unless pinned).
    Temporal,
    /// Fixed N, sweep the mesh and watch for blow-up.
    Stability,
    /// Kernel-table diagnostics only.
    Kernels,
}

impl StudyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyKind::Spatial => "spatial",
            StudyKind::Temporal => "temporal",
            StudyKind::Stability => "stability",
            StudyKind::Kernels => "kernels",
        }
    }
}

impl std::str::FromStr for StudyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial" => Ok(StudyKind::Spatial),
            "temporal" => Ok(StudyKind::Temporal),
            "stability" => Ok(StudyKind::Stability),
            "kernels" => Ok(StudyKind::Kernels),
            _ => Err(Error::Parse(format!("unknown study kind {s:?}"))),
        }
    }
}

/// Grid family used by a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Uniform,
    Capped,
    Uncapped,
}

impl GridKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GridKind::Uniform => "uniform",
            GridKind::Capped => "capped",
            GridKind::Uncapped => "uncapped",
        }
    }

    pub fn policy(&self, cap: f64, seed: u64) -> GridPolicy {
        match self {
            GridKind::Uniform => GridPolicy::Uniform,
            GridKind::Capped => GridPolicy::RandomCapped { cap, seed },
            GridKind::Uncapped => GridPolicy::RandomUncapped { seed },
        }
    }
}

impl std::str::FromStr for GridKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(GridKind::Uniform),
            "capped" => Ok(GridKind::Capped),
            "uncapped" => Ok(GridKind::Uncapped),
            _ => Err(Error::Parse(format!("unknown grid kind {s:?}"))),
        }
    }
}

/// Time-grid request of a single run or diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub kind: GridKind,
    pub cap: f64,
    pub seed: u64,
    pub final_time: f64,
    pub num_steps: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        random_grid(
            self.final_time,
            self.num_steps,
            self.kind.policy(self.cap, self.seed),
        )
    }
}

/// A full study request.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: String,
    pub study: StudyKind,
    pub m_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub grid: GridKind,
    pub cap: f64,
    pub seed: u64,
    pub final_time: f64,
    pub cg_tol: f64,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, study: StudyKind) -> Self {
        ExperimentConfig {
            problem: problem.to_string(),
            study,
            m_values: Vec::new(),
            n_values: Vec::new(),
            grid: GridKind::Capped,
            cap: 4.8645,
            seed: 0,
            final_time: 1.0,
            cg_tol: 1e-12,
            workers: 1,
            out: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if problems::by_name(&self.problem).is_none() && self.study != StudyKind::Kernels {
            return Err(Error::InvalidArgument(format!(
                "unknown problem {:?}",
                self.problem
            )));
        }
        if !self.final_time.is_finite() || self.final_time <= 0.0 {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        if !self.cg_tol.is_finite() || self.cg_tol <= 0.0 {
            return Err(Error::InvalidArgument(
                "cg tolerance must be positive".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument(
                "worker count must be at least 1".into(),
            ));
        }
        match self.study {
            StudyKind::Spatial => {
                if self.n_values.len() != 1 || self.m_values.is_empty() {
                    return Err(Error::InvalidArgument(
                        "spatial studies need one N and at least one M".into(),
                    ));
                }
            }
            StudyKind::Temporal => {
                if self.n_values.is_empty() {
                    return Err(Error::InvalidArgument(
                        "temporal studies need N values".into(),
                    ));
                }
                if self.m_values.len() > 1 {
                    return Err(Error::InvalidArgument(
                        "temporal studies take at most one fixed M (default M = N)".into(),
                    ));
                }
            }
            StudyKind::Stability => {
                if self.n_values.is_empty() || self.m_values.is_empty() {
                    return Err(Error::InvalidArgument(
                        "stability sweeps need N values and M values".into(),
                    ));
                }
            }
            StudyKind::Kernels => {
                if self.n_values.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "kernel diagnostics take exactly one N".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one study row.
#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

impl RowStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RowStatus::Ok)
    }
}

/// One line of a study table; mirrors the CSV schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub study: StudyKind,
    pub problem: String,
    pub grid: GridKind,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub tau_max: f64,
    pub r_max: f64,
    pub l2_error: Option<f64>,
    pub order: Option<f64>,
    pub status: RowStatus,
}

fn build_mesh(dim: usize, m: usize) -> Result<Mesh> {
    match dim {
        2 => unit_square_mesh(m),
        3 => unit_cube_mesh(m),
        _ => Err(Error::InvalidArgument(format!(
            "unsupported dimension {dim}"
        ))),
    }
}

fn run_single_row(config: &ExperimentConfig, index: usize, n: usize, m: usize) -> ConvergenceRow {
    let row_seed = config.seed.wrapping_add(index as u64);
    let problem = problems::by_name(&config.problem).expect("validated");
    let mut row = ConvergenceRow {
        study: config.study,
        problem: config.problem.clone(),
        grid: config.grid,
        seed: row_seed,
        n,
        m,
        h: f64::NAN,
        tau_max: f64::NAN,
        r_max: f64::NAN,
        l2_error: None,
        order: None,
        status: RowStatus::Ok,
    };
    let spec = GridSpec {
        kind: config.grid,
        cap: config.cap,
        seed: row_seed,
        final_time: config.final_time,
        num_steps: n,
    };
    let outcome = spec.build().and_then(|grid| {
        row.tau_max = grid.max_step();
        row.r_max = grid.max_ratio();
        let mesh = build_mesh(problem.dim, m)?;
        row.h = mesh_size(&mesh);
        let opts = SolveOptions {
            cg_tol: config.cg_tol,
            ..Default::default()
        };
        run(&problem, &grid, &mesh, &opts)
    });
    match outcome {
        Ok(result) => row.l2_error = Some(result.final_l2_error),
        Err(e) => row.status = RowStatus::Failed(sanitize(&e.to_string())),
    }
    row
}

fn run_rows<F>(count: usize, workers: usize, job: F) -> Vec<ConvergenceRow>
where
    F: Fn(usize) -> ConvergenceRow + Sync,
{
    if workers <= 1 || count <= 1 {
        return (0..count).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<ConvergenceRow>> = vec![None; count];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers.min(count))
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= count {
                            break;
                        }
                        local.push((i, job(i)));
                    }
                    local
                })
            })
            .collect();
        for handle in handles {
            for (i, row) in handle.join().expect("worker panicked") {
                slots[i] = Some(row);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("all rows filled"))
        .collect()
}

/// Fills the order column from consecutive successful rows; `key` extracts
/// the refined parameter.
fn attach_orders<K: Fn(&ConvergenceRow) -> usize>(rows: &mut [ConvergenceRow], key: K) {
    for i in 1..rows.len() {
        let (prev, curr) = (&rows[i - 1], &rows[i]);
        let (Some(e_prev), Some(e_curr)) = (prev.l2_error, curr.l2_error) else {
            continue;
        };
        let rho = key(curr) as f64 / key(prev) as f64;
        if e_prev > 0.0 && e_curr > 0.0 && rho > 0.0 && rho != 1.0 {
            rows[i].order = Some((e_prev / e_curr).ln() / rho.ln());
        }
    }
}

/// Runs a spatial or temporal convergence study.
pub fn convergence_study(config: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = match config.study {
        StudyKind::Temporal => {
            let fixed_m = config.m_values.first().copied();
            config
                .n_values
                .iter()
                .map(|&n| (n, fixed_m.unwrap_or(n)))
                .collect()
        }
        StudyKind::Spatial => {
            let n = config.n_values[0];
            config.m_values.iter().map(|&m| (n, m)).collect()
        }
        _ => {
            return Err(Error::InvalidArgument(
                "convergence_study handles spatial and temporal kinds".into(),
            ))
        }
    };
    let mut rows = run_rows(jobs.len(), config.workers, |i| {
        run_single_row(config, i, jobs[i].0, jobs[i].1)
    });
    match config.study {
        StudyKind::Temporal => attach_orders(&mut rows, |r| r.n),
        _ => attach_orders(&mut rows, |r| r.m),
    }
    Ok(rows)
}

/// Runs a fixed-N stability sweep: one curve per N over the M list.
pub fn stability_sweep(config: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    if config.study != StudyKind::Stability {
        return Err(Error::InvalidArgument(
            "stability_sweep needs a stability config".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &n in &config.n_values {
        for &m in &config.m_values {
            jobs.push((n, m));
        }
    }
    Ok(run_rows(jobs.len(), config.workers, |i| {
        run_single_row(config, i, jobs[i].0, jobs[i].1)
    }))
}

/// Kernel-table diagnostics of a single grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub num_steps: usize,
    pub max_ratio: f64,
    pub max_step: f64,
    /// Complementary identity: `max |sum_j p b - 1|`.
    pub residual_dcc_identity: f64,
    /// Orthogonality: `max |sum_j theta b - delta|`.
    pub residual_doc_identity: f64,
    /// Telescoping against `u^n - u^0` on a random sequence.
    pub residual_dcc_telescope: f64,
    /// Telescoping against `u^n - u^{n-1}` on a random sequence.
    pub residual_doc_telescope: f64,
    /// Difference relation between the two tables.
    pub residual_difference_relation: f64,
    pub min_theta: f64,
    pub max_p: f64,
    pub max_theta_row_sum_deviation: f64,
    pub max_p_row_sum_deviation: f64,
    /// Minimum over sampled w of the b-form margin against its lower bound.
    pub min_b_form_margin: f64,
    /// Minimum over sampled w of the theta quadratic form.
    pub min_theta_form: f64,
}

impl std::fmt::Display for KernelReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "grid: N = {}, max ratio = {:.6}, max step = {:.6e}",
            self.num_steps, self.max_ratio, self.max_step
        )?;
        writeln!(f, "identity residuals:")?;
        writeln!(
            f,
            "  complementary (p * b = 1)      {:.3e}",
            self.residual_dcc_identity
        )?;
        writeln!(
            f,
            "  orthogonality (theta * b)      {:.3e}",
            self.residual_doc_identity
        )?;
        writeln!(
            f,
            "  telescope to u^n - u^0         {:.3e}",
            self.residual_dcc_telescope
        )?;
        writeln!(
            f,
            "  telescope to u^n - u^(n-1)     {:.3e}",
            self.residual_doc_telescope
        )?;
        writeln!(
            f,
            "  difference relation            {:.3e}",
            self.residual_difference_relation
        )?;
        writeln!(
            f,
            "row sums: |sum theta - tau| <= {:.3e}, |sum p - t| <= {:.3e}",
            self.max_theta_row_sum_deviation, self.max_p_row_sum_deviation
        )?;
        writeln!(
            f,
            "entries: min theta = {:.6e}, max p = {:.6e} (2 tau = {:.6e})",
            self.min_theta,
            self.max_p,
            2.0 * self.max_step
        )?;
        write!(
            f,
            "quadratic forms: min b-form margin = {:.3e}, min theta-form = {:.3e}",
            self.min_b_form_margin, self.min_theta_form
        )
    }
}

/// Computes kernel tables on the requested grid and reports the worst
/// residual of every identity plus positivity and bound diagnostics.
pub fn kernel_diagnostics(spec: &GridSpec, form_samples: usize) -> Result<KernelReport> {
    let grid = spec.build()?;
    let n_levels = grid.num_steps();
    let coeffs = bdf2_coefficients(&grid);
    let doc = doc_kernels(&coeffs);
    let dcc = dcc_kernels(&doc);

    let mut res_dcc = 0.0_f64;
    let mut res_doc = 0.0_f64;
    for nn in 1..=n_levels {
        for k in 1..=nn {
            // only b0 and b1 contribute to the inner sums
            let mut s_doc = doc.theta(nn, k) * coeffs.b0(k);
            let mut s_dcc = dcc.p(nn, k) * coeffs.b0(k);
            if k < nn {
                s_doc += doc.theta(nn, k + 1) * coeffs.b1(k + 1);
                s_dcc += dcc.p(nn, k + 1) * coeffs.b1(k + 1);
            }
            let delta = if nn == k { 1.0 } else { 0.0 };
            res_doc = res_doc.max((s_doc - delta).abs());
            res_dcc = res_dcc.max((s_dcc - 1.0).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
    let u: Vec<f64> = (0..=n_levels).map(|_| rng.random::<f64>()).collect();
    let d = apply_d2(&coeffs, &u)?;
    let mut res_tel_doc = 0.0_f64;
    let mut res_tel_dcc = 0.0_f64;
    for nn in 1..=n_levels {
        let mut s_doc = 0.0;
        let mut s_dcc = 0.0;
        for j in 1..=nn {
            s_doc += doc.theta(nn, j) * d[j - 1];
            s_dcc += dcc.p(nn, j) * d[j - 1];
        }
        res_tel_doc = res_tel_doc.max((s_doc - (u[nn] - u[nn - 1])).abs());
        res_tel_dcc = res_tel_dcc.max((s_dcc - (u[nn] - u[0])).abs());
    }

    let mut res_rel = 0.0_f64;
    for nn in 1..=n_levels {
        for j in 1..=nn {
            let prev = if j < nn { dcc.p(nn - 1, j) } else { 0.0 };
            res_rel = res_rel.max((doc.theta(nn, j) - (dcc.p(nn, j) - prev)).abs());
        }
    }

    let mut theta_dev = 0.0_f64;
    let mut p_dev = 0.0_f64;
    for nn in 1..=n_levels {
        theta_dev = theta_dev.max((doc.row_sum(nn) - grid.tau(nn)).abs());
        p_dev = p_dev.max((dcc.row_sum(nn) - grid.time(nn)).abs());
    }

    let delta = rmax() - grid.max_ratio();
    let mut min_margin = f64::INFINITY;
    let mut min_theta_form = f64::INFINITY;
    for _ in 0..form_samples {
        let w: Vec<f64> = (0..n_levels)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let bound: f64 = delta.max(0.0) / 20.0
            * w.iter()
                .zip(1..)
                .map(|(&wk, k)| wk * wk / grid.tau(k))
                .sum::<f64>();
        min_margin = min_margin.min(quadratic_form_b(&coeffs, &w) - bound);
        min_theta_form = min_theta_form.min(quadratic_form_theta(&doc, &w));
    }

    Ok(KernelReport {
        num_steps: n_levels,
        max_ratio: grid.max_ratio(),
        max_step: grid.max_step(),
        residual_dcc_identity: res_dcc,
        residual_doc_identity: res_doc,
        residual_dcc_telescope: res_tel_dcc,
        residual_doc_telescope: res_tel_doc,
        residual_difference_relation: res_rel,
        min_theta: doc.min_entry(),
        max_p: dcc.max_entry(),
        max_theta_row_sum_deviation: theta_dev,
        max_p_row_sum_deviation: p_dev,
        min_b_form_margin: min_margin,
        min_theta_form,
    })
}

/// Dumps kernel tables as CSV rows `n,j,theta,p`.
pub fn write_kernel_tables_csv<W: Write>(
    doc: &DocKernels,
    dcc: &DccKernels,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "n,j,theta,p")?;
    for n in 1..=doc.num_levels() {
        for j in 1..=n {
            writeln!(
                out,
                "{},{},{},{}",
                n,
                j,
                fmt_float(doc.theta(n, j)),
                fmt_float(dcc.p(n, j))
            )?;
        }
    }
    Ok(())
}

pub const CSV_HEADER: &str = "study,problem,grid,seed,N,M,h,tau_max,r_max,l2_error,order,status";

fn fmt_float(v: f64) -> String {
    format!("{v:.7e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn sanitize(message: &str) -> String {
    message.replace([',', '\n'], ";")
}

/// Writes study rows in the fixed CSV schema (8 significant digits,
/// scientific notation).
pub fn write_rows_csv<W: Write>(rows: &[ConvergenceRow], out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let status = match &r.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(msg) => format!("failed:{}", sanitize(msg)),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.study.as_str(),
            r.problem,
            r.grid.as_str(),
            r.seed,
            r.n,
            r.m,
            fmt_float(r.h),
            fmt_float(r.tau_max),
            fmt_float(r.r_max),
            fmt_opt(r.l2_error),
            fmt_opt(r.order),
            status
        )?;
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: &str, name: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("bad {name} field {field:?}")))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, name).map(Some)
    }
}

/// Parses a CSV written by [`write_rows_csv`].
pub fn read_rows_csv<R: BufRead>(reader: R) -> Result<Vec<ConvergenceRow>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty study CSV".into()))??;
    if header != CSV_HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(12, ',').collect();
        if fields.len() != 12 {
            return Err(Error::Parse(format!(
                "expected 12 fields, got {}",
                fields.len()
            )));
        }
        let status = match fields[11] {
            "ok" => RowStatus::Ok,
            s if s.starts_with("failed:") => RowStatus::Failed(s["failed:".len()..].to_string()),
            s => return Err(Error::Parse(format!("bad status {s:?}"))),
        };
        rows.push(ConvergenceRow {
            study: fields[0].parse()?,
            problem: fields[1].to_string(),
            grid: fields[2].parse()?,
            seed: parse_field(fields[3], "seed")?,
            n: parse_field(fields[4], "N")?,
            m: parse_field(fields[5], "M")?,
            h: parse_field(fields[6], "h")?,
            tau_max: parse_field(fields[7], "tau_max")?,
            r_max: parse_field(fields[8], "r_max")?,
            l2_error: parse_opt(fields[9], "l2_error")?,
            order: parse_opt(fields[10], "order")?,
            status,
        });
    }
    Ok(rows)
}

/// Writes per-curve plot data (`M error` pairs, one file per N) plus a
/// gnuplot script next to `csv_path`; returns the written paths.
pub fn write_stability_plot_files(
    csv_path: &Path,
    rows: &[ConvergenceRow],
) -> Result<Vec<PathBuf>> {
    let stem = csv_path.with_extension("");
    let stem_name = stem
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "stability".to_string());
    let mut written = Vec::new();
    let mut curves: Vec<usize> = Vec::new();
    for r in rows {
        if !curves.contains(&r.n) {
            curves.push(r.n);
        }
    }
    for &n in &curves {
        let path = stem.with_file_name(format!("{stem_name}_N{n}.dat"));
        let mut file = std::fs::File::create(&path)?;
        writeln!(file, "# M l2_error (N = {n})")?;
        for r in rows.iter().filter(|r| r.n == n) {
            if let Some(e) = r.l2_error {
                writeln!(file, "{} {}", r.m, fmt_float(e))?;
            }
        }
        written.push(path);
    }
    let script = stem.with_file_name(format!("{stem_name}.gp"));
    let mut file = std::fs::File::create(&script)?;
    writeln!(file, "set logscale xy")?;
    writeln!(file, "set xlabel 'M'")?;
    writeln!(file, "set ylabel 'L2 error'")?;
    writeln!(file, "set key top right")?;
    let plots: Vec<String> = curves
        .iter()
        .map(|n| format!("'{stem_name}_N{n}.dat' using 1:2 with linespoints title 'N={n}'"))
        .collect();
    writeln!(file, "plot {}", plots.join(", \\\n     "))?;
    written.push(script);
    Ok(written)
}
