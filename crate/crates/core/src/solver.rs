//! The fully discrete time-stepping loop.
//!
//! Level 1 is a backward Euler step, later levels use the variable-step BDF2
//! weights, and the nonlinearity is handled by the one-shot Newton
//! linearization `f(u^n) ~ f(U^{n-1}) + f'(U^{n-1}) (U^n - U^{n-1})`. On
//! interior dofs the step-`n` system reads
//!
//! ```text
//! (b0 M + A - W) U^n = b0 M U^{n-1} - b1 M (U^{n-1} - U^{n-2})
//!                      + F_f(U^{n-1}) - W U^{n-1} + F_g(t_n)
//! ```
//!
//! with `W` the mass matrix weighted by `f'(U^{n-1})`. Mass and stiffness are
//! assembled once; `W` and the loads are rebuilt every step on the shared
//! sparsity pattern.

use std::time::Instant;

use crate::fem::{cg_solve_guess, l2_error, Assembler, FeFunction, SparseMatrix};
use crate::kernels::bdf2_coefficients;
use crate::mesh::Mesh;
use crate::problems::ProblemSpec;
use crate::timegrid::TimeGrid;
use crate::{Error, Result};

/// Knobs for the per-step linear solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative residual target of the CG solves.
    pub cg_tol: f64,
    /// Iteration cap per solve; `None` means ten times the dof count.
    pub cg_max_iterations: Option<usize>,
    /// Record the L2 error at every time level, not just the last.
    pub record_per_step_errors: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cg_tol: 1e-12,
            cg_max_iterations: None,
            record_per_step_errors: false,
        }
    }
}

/// Outcome of a time-stepping run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub final_solution: FeFunction,
    pub per_step_l2_error: Option<Vec<f64>>,
    pub final_l2_error: f64,
    pub step_count: usize,
    pub cg_iterations_total: usize,
    pub wall_seconds: f64,
}

/// Runs the scheme for `problem` on `grid` and `mesh`.
///
/// Fails with [`Error::StepSolve`] when a per-step solve does not converge
/// and with [`Error::BlowUp`] when non-finite values appear; errors are
/// never reported as silent NaNs.
pub fn run(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    mesh: &Mesh,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if problem.dim != mesh.dim() {
        return Err(Error::InvalidArgument(format!(
            "problem dimension {} does not match mesh dimension {}",
            problem.dim,
            mesh.dim()
        )));
    }
    if !opts.cg_tol.is_finite() || opts.cg_tol <= 0.0 {
        return Err(Error::InvalidArgument(
            "cg tolerance must be positive".into(),
        ));
    }
    let started = Instant::now();
    let steps = grid.num_steps();
    let ndof = mesh.num_interior();
    let maxit = opts.cg_max_iterations.unwrap_or(10 * ndof.max(1));

    let assembler = Assembler::new(mesh)?;
    let mass = assembler.mass();
    let stiffness = assembler.stiffness();
    let coeffs = bdf2_coefficients(grid);

    // nodal interpolant of the initial data with the boundary pinned to zero
    let mut state = FeFunction::interpolate(mesh, |x| problem.initial(x));
    let mut nodal = state.values().to_vec();
    for (v, value) in nodal.iter_mut().enumerate() {
        if mesh.is_boundary(v) {
            *value = 0.0;
        }
    }
    state = FeFunction::from_nodal(mesh, nodal)?;

    let mut interior_prev = state.interior_values(mesh);
    let mut interior_prev2: Vec<f64> = Vec::new();
    let mut per_step_errors = if opts.record_per_step_errors {
        Some(Vec::with_capacity(steps))
    } else {
        None
    };
    let mut cg_iterations_total = 0;
    let mut rhs = vec![0.0; ndof];
    let mut m_prev = vec![0.0; ndof];
    let mut diff = vec![0.0; ndof];
    let mut m_diff = vec![0.0; ndof];

    for n in 1..=steps {
        let t_n = grid.time(n);
        let b0 = coeffs.b0(n);
        let b1 = coeffs.b1(n);

        let weighted = assembler.weighted_mass(&state, |v| (problem.f_prime)(v));
        let f_load = assembler.function_load(&state, |v| (problem.f)(v));
        let g_load = assembler.source_load(|x, t| problem.source(x, t), t_n);

        mass.matvec(&interior_prev, &mut m_prev);
        let w_prev = weighted.matvec_alloc(&interior_prev);
        if n >= 2 {
            for i in 0..ndof {
                diff[i] = interior_prev[i] - interior_prev2[i];
            }
            mass.matvec(&diff, &mut m_diff);
        } else {
            m_diff.iter_mut().for_each(|v| *v = 0.0);
        }
        for i in 0..ndof {
            rhs[i] = b0 * m_prev[i] - b1 * m_diff[i] + f_load[i] - w_prev[i] + g_load[i];
        }

        let lhs = SparseMatrix::combine(&[(b0, &mass), (1.0, &stiffness), (-1.0, &weighted)])?;
        let (solution, iterations) =
            cg_solve_guess(&lhs, &rhs, Some(&interior_prev), opts.cg_tol, maxit).map_err(|e| {
                Error::StepSolve {
                    step: n,
                    source: Box::new(e),
                }
            })?;
        cg_iterations_total += iterations;
        if solution.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: n });
        }

        interior_prev2 = std::mem::replace(&mut interior_prev, solution);
        state = FeFunction::from_interior(mesh, &interior_prev);

        if let Some(errors) = per_step_errors.as_mut() {
            let e = l2_error(mesh, &state, |x, t| (problem.exact_u)(x, t), t_n);
            if !e.is_finite() {
                return Err(Error::BlowUp { step: n });
            }
            errors.push(e);
        }
    }

    let final_l2_error = match per_step_errors.as_ref().and_then(|e| e.last()) {
        Some(&e) => e,
        None => l2_error(
            mesh,
            &state,
            |x, t| (problem.exact_u)(x, t),
            grid.time(steps),
        ),
    };
    if !final_l2_error.is_finite() {
        return Err(Error::BlowUp { step: steps });
    }

    Ok(SolveResult {
        final_solution: state,
        per_step_l2_error: per_step_errors,
        final_l2_error,
        step_count: steps,
        cg_iterations_total,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_source_load, assemble_stiffness};
    use crate::mesh::{unit_cube_mesh, unit_square_mesh};
    use crate::problems::{self, ProblemSpec};
    use crate::timegrid::{random_grid, uniform_grid, GridPolicy};

    fn cubic(u: f64) -> f64 {
        u - u * u * u
    }

    fn cubic_prime(u: f64) -> f64 {
        1.0 - 3.0 * u * u
    }

    fn zero_field(_: &[f64], _: f64) -> f64 {
        0.0
    }

    /// f(0) = 0 and zero data make the origin a fixed point of the scheme.
    #[test]
    fn zero_solution_is_reproduced_exactly() {
        let problem = ProblemSpec {
            name: "zero",
            dim: 2,
            f: cubic,
            f_prime: cubic_prime,
            exact_u: zero_field,
            exact_ut: zero_field,
            exact_lap_u: zero_field,
        };
        let mesh = unit_square_mesh(4).unwrap();
        let grid = random_grid(1.0, 6, GridPolicy::capped(5)).unwrap();
        let opts = SolveOptions {
            record_per_step_errors: true,
            ..Default::default()
        };
        let result = run(&problem, &grid, &mesh, &opts).unwrap();
        assert!(result.final_solution.values().iter().all(|&v| v == 0.0));
        assert_eq!(result.final_l2_error, 0.0);
        assert!(result.per_step_l2_error.unwrap().iter().all(|&e| e == 0.0));
    }

    /// With f = 0 and a single step the scheme is backward Euler; check the
    /// solve against the hand-built 1x1 system on the M = 2 mesh.
    #[test]
    fn single_step_reduces_to_backward_euler() {
        let base = problems::example_2d();
        let problem = ProblemSpec {
            name: "linear51",
            dim: 2,
            f: |_| 0.0,
            f_prime: |_| 0.0,
            exact_u: base.exact_u,
            exact_ut: base.exact_ut,
            exact_lap_u: base.exact_lap_u,
        };
        let mesh = unit_square_mesh(2).unwrap();
        let tau = 0.25;
        let grid = uniform_grid(tau, 1).unwrap();

        let mass = assemble_mass(&mesh).unwrap().get(0, 0);
        let stiff = assemble_stiffness(&mesh).unwrap().get(0, 0);
        let g1 = assemble_source_load(&mesh, |x, t| problem.source(x, t), tau).unwrap()[0];
        let u0 = (problem.exact_u)(&[0.5, 0.5], 0.0);
        let expected = (mass / tau * u0 + g1) / (mass / tau + stiff);

        let result = run(&problem, &grid, &mesh, &SolveOptions::default()).unwrap();
        let center = mesh.interior_vertices()[0];
        assert!((result.final_solution.value(center) - expected).abs() < 1e-13);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let problem = problems::example_2d();
        let mesh = unit_square_mesh(6).unwrap();
        let grid = random_grid(1.0, 8, GridPolicy::capped(11)).unwrap();
        let opts = SolveOptions {
            record_per_step_errors: true,
            ..Default::default()
        };
        let a = run(&problem, &grid, &mesh, &opts).unwrap();
        let b = run(&problem, &grid, &mesh, &opts).unwrap();
        assert_eq!(a.final_solution.values(), b.final_solution.values());
        assert_eq!(a.per_step_l2_error.unwrap(), b.per_step_l2_error.unwrap());
    }

    /// On a fine fixed mesh, uniformly halving the steps cuts the error by
    /// about four until the spatial floor interferes.
    #[test]
    fn temporal_error_is_second_order_on_fixed_mesh() {
        let problem = problems::example_2d();
        let mesh = unit_square_mesh(96).unwrap();
        let opts = SolveOptions::default();
        let e2 = run(&problem, &uniform_grid(1.0, 2).unwrap(), &mesh, &opts)
            .unwrap()
            .final_l2_error;
        let e4 = run(&problem, &uniform_grid(1.0, 4).unwrap(), &mesh, &opts)
            .unwrap()
            .final_l2_error;
        let ratio = e2 / e4;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let problem = problems::example_3d();
        let mesh = unit_square_mesh(4).unwrap();
        let grid = uniform_grid(1.0, 2).unwrap();
        assert!(run(&problem, &grid, &mesh, &SolveOptions::default()).is_err());
    }

    /// A stiff reaction term makes b0 M + A - W indefinite; the positive
    /// definiteness guard must surface that with the failing step index.
    #[test]
    fn indefinite_step_system_reports_step_index() {
        let base = problems::example_2d();
        let problem = ProblemSpec {
            name: "stiff",
            dim: 2,
            f: |u| 1.0e7 * u,
            f_prime: |_| 1.0e7,
            exact_u: base.exact_u,
            exact_ut: base.exact_ut,
            exact_lap_u: base.exact_lap_u,
        };
        let mesh = unit_square_mesh(8).unwrap();
        let grid = uniform_grid(1.0, 4).unwrap();
        match run(&problem, &grid, &mesh, &SolveOptions::default()) {
            Err(crate::Error::StepSolve { step, source }) => {
                assert_eq!(step, 1);
                assert!(matches!(*source, crate::Error::NotPositiveDefinite { .. }));
            }
            other => panic!("expected a step-solve failure, got {other:?}"),
        }
    }

    #[test]
    fn all_boundary_mesh_stays_at_zero_dofs() {
        // M = 1 has no interior vertices; the run degenerates gracefully
        let problem = problems::example_3d();
        let mesh = unit_cube_mesh(1).unwrap();
        let grid = uniform_grid(1.0, 3).unwrap();
        let result = run(&problem, &grid, &mesh, &SolveOptions::default()).unwrap();
        assert_eq!(result.cg_iterations_total, 0);
        assert!(result.final_l2_error.is_finite());
    }

    #[test]
    fn per_step_errors_have_step_count_length() {
        let problem = problems::example_2d();
        let mesh = unit_square_mesh(4).unwrap();
        let grid = random_grid(1.0, 5, GridPolicy::capped(3)).unwrap();
        let opts = SolveOptions {
            record_per_step_errors: true,
            ..Default::default()
        };
        let result = run(&problem, &grid, &mesh, &opts).unwrap();
        assert_eq!(result.per_step_l2_error.unwrap().len(), 5);
        assert_eq!(result.step_count, 5);
    }
}
