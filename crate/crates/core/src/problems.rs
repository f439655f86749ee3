//! Manufactured-solution problem definitions.
//!
//! Each problem fixes a nonlinearity `f`, its derivative, and an exact
//! solution together with its analytic time derivative and Laplacian; the
//! source term `g = u_t - lap(u) - f(u)` follows from those. Derivatives are
//! hardcoded in closed form so that source evaluation stays cheap inside
//! quadrature loops; the test suite validates them against finite
//! differences.

/// A nonlinear parabolic benchmark problem on `(0,1)^dim` with homogeneous
/// Dirichlet data.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub dim: usize,
    pub f: fn(f64) -> f64,
    pub f_prime: fn(f64) -> f64,
    pub exact_u: fn(&[f64], f64) -> f64,
    pub exact_ut: fn(&[f64], f64) -> f64,
    pub exact_lap_u: fn(&[f64], f64) -> f64,
}

impl ProblemSpec {
    /// Source term induced by the manufactured solution.
    pub fn source(&self, x: &[f64], t: f64) -> f64 {
        (self.exact_ut)(x, t) - (self.exact_lap_u)(x, t) - (self.f)((self.exact_u)(x, t))
    }

    /// Initial data `u_0 = exact_u(., 0)`.
    pub fn initial(&self, x: &[f64]) -> f64 {
        (self.exact_u)(x, 0.0)
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

/// `z (1-z)^2`, the per-axis factor of both exact solutions.
fn bump(z: f64) -> f64 {
    z * (1.0 - z) * (1.0 - z)
}

/// Second derivative of [`bump`].
fn bump_dd(z: f64) -> f64 {
    6.0 * z - 4.0
}

fn time_factor(t: f64) -> f64 {
    1.0 + t * t * t
}

fn f_sqrt(u: f64) -> f64 {
    (1.0 + u * u).sqrt()
}

fn f_sqrt_prime(u: f64) -> f64 {
    u / (1.0 + u * u).sqrt()
}

fn u_2d(x: &[f64], t: f64) -> f64 {
    time_factor(t) * bump(x[0]) * bump(x[1])
}

fn ut_2d(x: &[f64], t: f64) -> f64 {
    3.0 * t * t * bump(x[0]) * bump(x[1])
}

fn lap_2d(x: &[f64], t: f64) -> f64 {
    time_factor(t) * (bump_dd(x[0]) * bump(x[1]) + bump(x[0]) * bump_dd(x[1]))
}

fn f_cubic(u: f64) -> f64 {
    u - u * u * u
}

fn f_cubic_prime(u: f64) -> f64 {
    1.0 - 3.0 * u * u
}

fn u_3d(x: &[f64], t: f64) -> f64 {
    time_factor(t) * bump(x[0]) * bump(x[1]) * bump(x[2])
}

fn ut_3d(x: &[f64], t: f64) -> f64 {
    3.0 * t * t * bump(x[0]) * bump(x[1]) * bump(x[2])
}

fn lap_3d(x: &[f64], t: f64) -> f64 {
    time_factor(t)
        * (bump_dd(x[0]) * bump(x[1]) * bump(x[2])
            + bump(x[0]) * bump_dd(x[1]) * bump(x[2])
            + bump(x[0]) * bump(x[1]) * bump_dd(x[2]))
}

fn zero_scalar(_: f64) -> f64 {
    0.0
}

fn zero_field(_: &[f64], _: f64) -> f64 {
    0.0
}

/// 2D benchmark: `f(u) = sqrt(1 + u^2)`,
/// `u = (1 + t^3) x1 (1-x1)^2 x2 (1-x2)^2`.
pub fn example_2d() -> ProblemSpec {
    ProblemSpec {
        name: "example51",
        dim: 2,
        f: f_sqrt,
        f_prime: f_sqrt_prime,
        exact_u: u_2d,
        exact_ut: ut_2d,
        exact_lap_u: lap_2d,
    }
}

/// 3D benchmark: `f(u) = u - u^3`,
/// `u = (1 + t^3) prod_i x_i (1-x_i)^2`.
pub fn example_3d() -> ProblemSpec {
    ProblemSpec {
        name: "example52",
        dim: 3,
        f: f_cubic,
        f_prime: f_cubic_prime,
        exact_u: u_3d,
        exact_ut: ut_3d,
        exact_lap_u: lap_3d,
    }
}

/// Degenerate 2D check problem: `f = 0` and `u = 0`, hence `g = 0`.
pub fn heat() -> ProblemSpec {
    ProblemSpec {
        name: "heat",
        dim: 2,
        f: zero_scalar,
        f_prime: zero_scalar,
        exact_u: zero_field,
        exact_ut: zero_field,
        exact_lap_u: zero_field,
    }
}

/// Problem registry for CLI selection.
pub fn by_name(name: &str) -> Option<ProblemSpec> {
    match name {
        "example51" => Some(example_2d()),
        "example52" => Some(example_3d()),
        "heat" => Some(heat()),
        _ => None,
    }
}
