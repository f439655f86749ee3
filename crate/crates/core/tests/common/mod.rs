//! Independent dense-algebra reference for the 2D time stepper.
//!
//! Everything on the linear-algebra side is rebuilt from scratch here: dense
//! matrices, LU factorization with partial pivoting, basis gradients obtained
//! by solving small Vandermonde systems, and hand-written quadrature loops in
//! Cartesian coordinates. Only the mesh geometry and the problem definitions
//! are shared with the library, so a nodal match is meaningful evidence for
//! the sparse/CG path.

use vbdf2::mesh::Mesh;
use vbdf2::problems::ProblemSpec;
use vbdf2::timegrid::TimeGrid;

pub struct DenseMatrix {
    n: usize,
    a: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            a: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Solves `A x = b` by LU with partial pivoting (A copied).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut lu = self.a.clone();
        let mut x = b.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot = col;
            for (offset, &candidate) in perm[(col + 1)..].iter().enumerate() {
                if lu[candidate * n + col].abs() > lu[perm[pivot] * n + col].abs() {
                    pivot = col + 1 + offset;
                }
            }
            perm.swap(col, pivot);
            let p = perm[col];
            let diag = lu[p * n + col];
            assert!(diag != 0.0, "singular dense system");
            for &r in &perm[(col + 1)..] {
                let factor = lu[r * n + col] / diag;
                lu[r * n + col] = factor;
                for k in (col + 1)..n {
                    lu[r * n + k] -= factor * lu[p * n + k];
                }
            }
        }
        // forward/backward substitution in permuted order
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = x[perm[i]];
            for k in 0..i {
                acc -= lu[perm[i] * n + k] * y[k];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in (i + 1)..n {
                acc -= lu[perm[i] * n + k] * x[k];
            }
            x[i] = acc / lu[perm[i] * n + i];
        }
        x
    }
}

struct Triangle {
    verts: [usize; 3],
    x: [f64; 3],
    y: [f64; 3],
    area: f64,
    grad: [[f64; 2]; 3],
}

fn triangles(mesh: &Mesh) -> Vec<Triangle> {
    assert_eq!(mesh.dim(), 2, "dense oracle is two-dimensional");
    let mut out = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let verts = mesh.cell(c);
        let mut x = [0.0; 3];
        let mut y = [0.0; 3];
        for i in 0..3 {
            let p = mesh.vertex(verts[i]);
            x[i] = p[0];
            y[i] = p[1];
        }
        let area = 0.5 * ((x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]));
        assert!(area > 0.0);
        // gradient of each P1 basis function from the affine coefficients of
        // the Vandermonde system [1 x_i y_i] c = e_i
        let mut vander = DenseMatrix::zeros(3);
        for i in 0..3 {
            vander.add(i, 0, 1.0);
            vander.add(i, 1, x[i]);
            vander.add(i, 2, y[i]);
        }
        let mut grad = [[0.0; 2]; 3];
        for i in 0..3 {
            let mut rhs = [0.0; 3];
            rhs[i] = 1.0;
            let coef = vander.solve(&rhs);
            grad[i] = [coef[1], coef[2]];
        }
        out.push(Triangle {
            verts: [verts[0], verts[1], verts[2]],
            x,
            y,
            area,
            grad,
        });
    }
    out
}

/// Degree-4 rule on the reference triangle: (weight, barycentric) pairs,
/// weights normalized to 1.
fn degree4_rule() -> Vec<(f64, [f64; 3])> {
    let s10 = 10.0_f64.sqrt();
    let t = (38.0 - 44.0 * (2.0_f64 / 5.0).sqrt()).sqrt();
    let root = (213125.0 - 53320.0 * s10).sqrt();
    let mut rule = Vec::with_capacity(6);
    for (a, w) in [
        ((8.0 - s10 + t) / 18.0, (620.0 + root) / 3720.0),
        ((8.0 - s10 - t) / 18.0, (620.0 - root) / 3720.0),
    ] {
        let b = 1.0 - 2.0 * a;
        rule.push((w, [a, a, b]));
        rule.push((w, [a, b, a]));
        rule.push((w, [b, a, a]));
    }
    rule
}

/// Runs the linearized scheme with dense matrices and direct solves,
/// returning the nodal values at every time level `0..=N`.
pub fn dense_reference_run(problem: &ProblemSpec, grid: &TimeGrid, mesh: &Mesh) -> Vec<Vec<f64>> {
    let tris = triangles(mesh);
    let nv = mesh.num_vertices();
    let interior: Vec<usize> = mesh.interior_vertices().to_vec();
    let ndof = interior.len();
    let rule4 = degree4_rule();

    // mass and stiffness over all vertices
    let mut mass_full = DenseMatrix::zeros(nv);
    let mut stiff_full = DenseMatrix::zeros(nv);
    for tri in &tris {
        for i in 0..3 {
            for j in 0..3 {
                let m = tri.area / 12.0 * if i == j { 2.0 } else { 1.0 };
                mass_full.add(tri.verts[i], tri.verts[j], m);
                let k =
                    tri.area * (tri.grad[i][0] * tri.grad[j][0] + tri.grad[i][1] * tri.grad[j][1]);
                stiff_full.add(tri.verts[i], tri.verts[j], k);
            }
        }
    }
    let restrict = |full: &DenseMatrix| {
        let mut m = DenseMatrix::zeros(ndof);
        for (i, &vi) in interior.iter().enumerate() {
            for (j, &vj) in interior.iter().enumerate() {
                m.add(i, j, full.get(vi, vj));
            }
        }
        m
    };
    let mass = restrict(&mass_full);
    let stiff = restrict(&stiff_full);

    let mut nodal = vec![0.0; nv];
    for (v, value) in nodal.iter_mut().enumerate() {
        if !mesh.is_boundary(v) {
            *value = problem.initial(mesh.vertex(v));
        }
    }
    let mut levels = vec![nodal.clone()];
    let mut u_prev: Vec<f64> = interior.iter().map(|&v| nodal[v]).collect();
    let mut u_prev2: Vec<f64> = Vec::new();

    for n in 1..=grid.num_steps() {
        let tau = grid.tau(n);
        let (b0, b1) = if n == 1 {
            (1.0 / tau, 0.0)
        } else {
            let r = tau / grid.tau(n - 1);
            (
                (1.0 + 2.0 * r) / (tau * (1.0 + r)),
                -r * r / (tau * (1.0 + r)),
            )
        };
        let t_n = grid.time(n);

        // weighted mass and nonlinear load with the edge-midpoint rule;
        // the P1 value at an edge midpoint is the endpoint average
        let mut weighted_full = DenseMatrix::zeros(nv);
        let mut f_load_full = vec![0.0; nv];
        for tri in &tris {
            let w = tri.area / 3.0;
            for (p, q) in [(0, 1), (1, 2), (2, 0)] {
                let u_mid = 0.5 * (nodal[tri.verts[p]] + nodal[tri.verts[q]]);
                let mut lam = [0.0; 3];
                lam[p] = 0.5;
                lam[q] = 0.5;
                let fp = (problem.f_prime)(u_mid) * w;
                let fv = (problem.f)(u_mid) * w;
                for i in 0..3 {
                    f_load_full[tri.verts[i]] += fv * lam[i];
                    for j in 0..3 {
                        weighted_full.add(tri.verts[i], tri.verts[j], fp * lam[i] * lam[j]);
                    }
                }
            }
        }
        let mut g_load_full = vec![0.0; nv];
        for tri in &tris {
            for (w, lam) in &rule4 {
                let xq = lam[0] * tri.x[0] + lam[1] * tri.x[1] + lam[2] * tri.x[2];
                let yq = lam[0] * tri.y[0] + lam[1] * tri.y[1] + lam[2] * tri.y[2];
                let gv = problem.source(&[xq, yq], t_n) * w * tri.area;
                for i in 0..3 {
                    g_load_full[tri.verts[i]] += gv * lam[i];
                }
            }
        }
        let weighted = restrict(&weighted_full);
        let f_load: Vec<f64> = interior.iter().map(|&v| f_load_full[v]).collect();
        let g_load: Vec<f64> = interior.iter().map(|&v| g_load_full[v]).collect();

        let mut lhs = DenseMatrix::zeros(ndof);
        for i in 0..ndof {
            for j in 0..ndof {
                lhs.add(
                    i,
                    j,
                    b0 * mass.get(i, j) + stiff.get(i, j) - weighted.get(i, j),
                );
            }
        }
        let m_prev = mass.matvec(&u_prev);
        let w_prev = weighted.matvec(&u_prev);
        let m_diff = if n >= 2 {
            let diff: Vec<f64> = u_prev.iter().zip(&u_prev2).map(|(a, b)| a - b).collect();
            mass.matvec(&diff)
        } else {
            vec![0.0; ndof]
        };
        let rhs: Vec<f64> = (0..ndof)
            .map(|i| b0 * m_prev[i] - b1 * m_diff[i] + f_load[i] - w_prev[i] + g_load[i])
            .collect();
        let u_new = lhs.solve(&rhs);

        u_prev2 = std::mem::replace(&mut u_prev, u_new);
        nodal = vec![0.0; nv];
        for (i, &v) in interior.iter().enumerate() {
            nodal[v] = u_prev[i];
        }
        levels.push(nodal.clone());
    }
    levels
}
