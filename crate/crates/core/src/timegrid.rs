//! Nonuniform time partitions with step-ratio control.
//!
//! Random grids follow the construction `tau_k = T * lambda_k / Lambda` with
//! `lambda_k` drawn i.i.d. from the open unit interval and
//! `Lambda = sum lambda_k`. Under [`GridPolicy::RandomCapped`] each draw is
//! rejected until `lambda_k / lambda_{k-1}` falls below the cap; since the
//! normalization preserves ratios, the final grid satisfies the cap exactly.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A partition `0 = t_0 < t_1 < ... < t_N = T` of the time interval.
///
/// Steps are `tau_k = t_k - t_{k-1}` for `k = 1..=N` and adjacent ratios are
/// `r_k = tau_k / tau_{k-1}` for `k = 2..=N` (`r_1` is fixed to `0` and never
/// enters any formula).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    final_time: f64,
    levels: Vec<f64>,
    steps: Vec<f64>,
    ratios: Vec<f64>,
}

impl TimeGrid {
    /// Builds a grid from explicit positive step sizes.
    pub fn from_steps(steps: &[f64]) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument(
                "grid needs at least one step".into(),
            ));
        }
        if steps.iter().any(|&tau| !tau.is_finite() || tau <= 0.0) {
            return Err(Error::InvalidArgument(
                "all steps must be positive and finite".into(),
            ));
        }
        let n = steps.len();
        let mut levels = Vec::with_capacity(n + 1);
        levels.push(0.0);
        for &tau in steps {
            levels.push(levels.last().unwrap() + tau);
        }
        let final_time = levels[n];
        let mut steps = steps.to_vec();
        // keep tau_k consistent with the stored levels
        for k in 1..=n {
            steps[k - 1] = levels[k] - levels[k - 1];
        }
        let mut ratios = vec![0.0; n];
        for k in 2..=n {
            ratios[k - 1] = steps[k - 1] / steps[k - 2];
        }
        Ok(TimeGrid {
            final_time,
            levels,
            steps,
            ratios,
        })
    }

    /// Number of steps `N`.
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Final time `T = t_N`.
    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    /// Time level `t_k`, `k = 0..=N`.
    pub fn time(&self, k: usize) -> f64 {
        self.levels[k]
    }

    /// Step size `tau_k`, `k = 1..=N`.
    pub fn tau(&self, k: usize) -> f64 {
        self.steps[k - 1]
    }

    /// Adjacent ratio `r_k = tau_k / tau_{k-1}` for `k >= 2`; `r_1 = 0`.
    pub fn ratio(&self, k: usize) -> f64 {
        self.ratios[k - 1]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Maximum step size `tau = max_k tau_k`.
    pub fn max_step(&self) -> f64 {
        self.steps.iter().cloned().fold(0.0, f64::max)
    }

    /// Maximum adjacent ratio over `k >= 2` (zero for single-step grids).
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().skip(1).cloned().fold(0.0, f64::max)
    }

    /// Writes the grid as CSV with columns `k,t_k,tau_k,r_k` for audit.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "k,t_k,tau_k,r_k")?;
        writeln!(out, "0,{},,", self.levels[0])?;
        for k in 1..=self.num_steps() {
            writeln!(
                out,
                "{},{},{},{}",
                k,
                self.levels[k],
                self.tau(k),
                self.ratio(k)
            )?;
        }
        Ok(())
    }
}

/// How the steps of a random grid are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy {
    /// Equal steps `T / N`.
    Uniform,
    /// Random steps with every adjacent ratio strictly below `cap`.
    RandomCapped { cap: f64, seed: u64 },
    /// Random steps with unconstrained ratios.
    RandomUncapped { seed: u64 },
}

impl GridPolicy {
    /// Random steps capped at the zero-stability ratio bound [`crate::kernels::rmax`].
    pub fn capped(seed: u64) -> Self {
        GridPolicy::RandomCapped {
            cap: crate::kernels::rmax(),
            seed,
        }
    }

    pub fn uncapped(seed: u64) -> Self {
        GridPolicy::RandomUncapped { seed }
    }
}

/// Summary statistics of a grid against a ratio cap.
///
/// `tau_sqrt_n` reports `tau * sqrt(N)`, the quantity entering the
/// maximum-step condition; no threshold is attached to it because the
/// admissible constant is problem dependent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridReport {
    pub max_ratio: f64,
    pub max_step: f64,
    pub tau_sqrt_n: f64,
    pub a1_satisfied: bool,
}

/// Equal partition of `[0, T]` into `N` steps.
pub fn uniform_grid(final_time: f64, num_steps: usize) -> Result<TimeGrid> {
    check_args(final_time, num_steps)?;
    let tau = final_time / num_steps as f64;
    TimeGrid::from_steps(&vec![tau; num_steps])
}

/// Random partition of `[0, T]` into `N` steps according to `policy`.
///
/// Deterministic for a fixed `(T, N, policy)`: draws come from `ChaCha8`
/// seeded with the policy seed.
pub fn random_grid(final_time: f64, num_steps: usize, policy: GridPolicy) -> Result<TimeGrid> {
    check_args(final_time, num_steps)?;
    let (cap, seed) = match policy {
        GridPolicy::Uniform => return uniform_grid(final_time, num_steps),
        GridPolicy::RandomCapped { cap, seed } => {
            if !cap.is_finite() || cap <= 0.0 {
                return Err(Error::InvalidArgument("ratio cap must be positive".into()));
            }
            if cap > crate::kernels::rmax() {
                return Err(Error::InvalidArgument(format!(
                    "ratio cap {cap} exceeds the admissible bound {}",
                    crate::kernels::rmax()
                )));
            }
            (Some(cap), seed)
        }
        GridPolicy::RandomUncapped { seed } => (None, seed),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambdas: Vec<f64> = Vec::with_capacity(num_steps);
    for k in 0..num_steps {
        let mut lam = draw_open_unit(&mut rng);
        if let Some(cap) = cap {
            if k > 0 {
                // rejection sampling against the previous draw; accepted with
                // probability >= min(1, cap * lambda_{k-1}) > 0
                while lam / lambdas[k - 1] >= cap {
                    lam = draw_open_unit(&mut rng);
                }
            }
        }
        lambdas.push(lam);
    }
    let total: f64 = lambdas.iter().sum();
    let steps: Vec<f64> = lambdas
        .iter()
        .map(|&lam| final_time * lam / total)
        .collect();
    TimeGrid::from_steps(&steps)
}

/// Reports ratio/step statistics of `grid` against `cap`.
pub fn validate(grid: &TimeGrid, cap: f64) -> GridReport {
    let max_ratio = grid.max_ratio();
    let max_step = grid.max_step();
    GridReport {
        max_ratio,
        max_step,
        tau_sqrt_n: max_step * (grid.num_steps() as f64).sqrt(),
        a1_satisfied: max_ratio < cap,
    }
}

fn check_args(final_time: f64, num_steps: usize) -> Result<()> {
    if num_steps == 0 {
        return Err(Error::InvalidArgument(
            "number of steps must be at least 1".into(),
        ));
    }
    if !final_time.is_finite() || final_time <= 0.0 {
        return Err(Error::InvalidArgument(
            "final time must be positive and finite".into(),
        ));
    }
    Ok(())
}

fn draw_open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_grid_quarters() {
        let g = uniform_grid(1.0, 4).unwrap();
        assert_eq!(g.steps(), &[0.25, 0.25, 0.25, 0.25]);
        for k in 2..=4 {
            assert_eq!(g.ratio(k), 1.0);
        }
        assert_eq!(g.ratio(1), 0.0);
    }

    #[test]
    fn uniform_grid_single_step() {
        let g = uniform_grid(2.0, 1).unwrap();
        assert_eq!(g.levels(), &[0.0, 2.0]);
        assert_eq!(g.steps(), &[2.0]);
        assert_eq!(g.max_ratio(), 0.0);
    }

    #[test]
    fn uniform_grid_thirds() {
        let g = uniform_grid(1.0, 3).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in g.levels().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(uniform_grid(1.0, 0).is_err());
        assert!(uniform_grid(0.0, 4).is_err());
        assert!(uniform_grid(-1.0, 4).is_err());
        assert!(TimeGrid::from_steps(&[]).is_err());
        assert!(TimeGrid::from_steps(&[0.1, 0.0]).is_err());
        assert!(random_grid(
            1.0,
            4,
            GridPolicy::RandomCapped {
                cap: 100.0,
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn capped_grid_respects_cap_exactly() {
        let cap = 4.8645;
        let g = random_grid(1.0, 100, GridPolicy::RandomCapped { cap, seed: 7 }).unwrap();
        let sum: f64 = g.steps().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(g.max_ratio() < cap);
    }

    #[test]
    fn single_step_random_grid() {
        let g = random_grid(1.0, 1, GridPolicy::uncapped(3)).unwrap();
        assert_eq!(g.steps(), &[1.0]);
    }

    #[test]
    fn uncapped_grid_reaches_large_ratios() {
        // ratios far beyond the capped regime appear at this size
        let g = random_grid(1.0, 10_000, GridPolicy::uncapped(12345)).unwrap();
        assert!(g.max_ratio() > 100.0, "max ratio {}", g.max_ratio());
    }

    #[test]
    fn validate_examples() {
        let g = uniform_grid(1.0, 4).unwrap();
        let rep = validate(&g, 4.8645);
        assert_eq!(rep.max_ratio, 1.0);
        assert!(rep.a1_satisfied);
        assert!((rep.tau_sqrt_n - 0.5).abs() < 1e-15);

        let g = TimeGrid::from_steps(&[0.1, 0.6, 0.3]).unwrap();
        let rep = validate(&g, 4.8645);
        assert!((rep.max_ratio - 6.0).abs() < 1e-12);
        assert!(!rep.a1_satisfied);

        let g = uniform_grid(1.0, 100).unwrap();
        assert!((validate(&g, 4.8645).tau_sqrt_n - 0.1).abs() < 1e-15);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = GridPolicy::capped(42);
        let a = random_grid(1.0, 200, p).unwrap();
        let b = random_grid(1.0, 200, p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_one_line_per_level() {
        let g = uniform_grid(1.0, 5).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("k,t_k,tau_k,r_k"));
    }

    proptest! {
        #[test]
        fn random_grids_are_increasing_and_sum_to_t(
            seed in 0u64..1_000_000,
            n in 1usize..250,
            t in 0.1f64..10.0,
            capped in proptest::bool::ANY,
        ) {
            let policy = if capped {
                GridPolicy::capped(seed)
            } else {
                GridPolicy::uncapped(seed)
            };
            let g = random_grid(t, n, policy).unwrap();
            prop_assert_eq!(g.num_steps(), n);
            prop_assert_eq!(g.time(0), 0.0);
            for k in 1..=n {
                prop_assert!(g.time(k) > g.time(k - 1));
            }
            let sum: f64 = g.steps().iter().sum();
            prop_assert!((sum - t).abs() <= 1e-12 * t);
            prop_assert!((g.final_time() - t).abs() <= 1e-12 * t);
            if capped {
                prop_assert!(g.max_ratio() < crate::kernels::rmax());
            }
        }
    }
}
