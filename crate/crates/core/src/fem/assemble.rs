//! P1 Galerkin assembly on interior degrees of freedom.
//!
//! Dirichlet conditions are imposed by restriction: boundary rows and
//! columns are never assembled, which keeps every operator symmetric
//! positive definite. An [`Assembler`] precomputes the interior sparsity
//! pattern and per-cell basis gradients once so that the weighted-mass
//! matrix and the load vectors can be rebuilt cheaply inside a time loop.

use crate::fem::quadrature::QuadratureRule;
use crate::fem::sparse::SparseMatrix;
use crate::fem::FeFunction;
use crate::mesh::Mesh;
use crate::{Error, Result};

const SKIP: u32 = u32::MAX;
const MAX_LOCAL: usize = 4;

/// Gradients of the barycentric basis functions of one simplex, plus its
/// signed volume. `coords` packs the `dim + 1` vertices contiguously.
pub(crate) fn simplex_gradients(dim: usize, coords: &[f64]) -> ([f64; MAX_LOCAL * 3], f64) {
    let mut grads = [0.0; MAX_LOCAL * 3];
    match dim {
        2 => {
            let (ax, ay) = (coords[0], coords[1]);
            let e = [
                coords[2] - ax,
                coords[4] - ax,
                coords[3] - ay,
                coords[5] - ay,
            ];
            let det = e[0] * e[3] - e[1] * e[2];
            let inv = [e[3] / det, -e[1] / det, -e[2] / det, e[0] / det];
            // rows of the inverse are the gradients of the two edge coordinates
            grads[3] = inv[0];
            grads[4] = inv[1];
            grads[6] = inv[2];
            grads[7] = inv[3];
            grads[0] = -inv[0] - inv[2];
            grads[1] = -inv[1] - inv[3];
            (grads, det / 2.0)
        }
        3 => {
            let a = &coords[0..3];
            let mut e = [0.0; 9];
            for col in 0..3 {
                for row in 0..3 {
                    e[row * 3 + col] = coords[(col + 1) * 3 + row] - a[row];
                }
            }
            let det = e[0] * (e[4] * e[8] - e[5] * e[7]) - e[1] * (e[3] * e[8] - e[5] * e[6])
                + e[2] * (e[3] * e[7] - e[4] * e[6]);
            let cof = [
                e[4] * e[8] - e[5] * e[7],
                e[2] * e[7] - e[1] * e[8],
                e[1] * e[5] - e[2] * e[4],
                e[5] * e[6] - e[3] * e[8],
                e[0] * e[8] - e[2] * e[6],
                e[2] * e[3] - e[0] * e[5],
                e[3] * e[7] - e[4] * e[6],
                e[1] * e[6] - e[0] * e[7],
                e[0] * e[4] - e[1] * e[3],
            ];
            // inv[row][col] = cof[col*3+row] / det; gradients are its rows
            for row in 0..3 {
                for col in 0..3 {
                    grads[(row + 1) * 3 + col] = cof[row * 3 + col] / det;
                }
            }
            for col in 0..3 {
                grads[col] = -grads[3 + col] - grads[6 + col] - grads[9 + col];
            }
            (grads, det / 6.0)
        }
        _ => unreachable!(),
    }
}

/// Reusable assembly context for one mesh.
pub struct Assembler<'m> {
    mesh: &'m Mesh,
    template: SparseMatrix,
    slots: Vec<u32>,
    grads: Vec<f64>,
    rule_low: QuadratureRule,
    rule_high: QuadratureRule,
}

impl<'m> Assembler<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Assembler<'m>> {
        let dim = mesh.dim();
        let nloc = dim + 1;
        let ncells = mesh.num_cells();
        let ndof = mesh.num_interior();

        let mut grads = vec![0.0; ncells * nloc * 3];
        let mut coords = [0.0; MAX_LOCAL * 3];
        for c in 0..ncells {
            let verts = mesh.cell(c);
            for (i, &v) in verts.iter().enumerate() {
                coords[i * dim..(i + 1) * dim].copy_from_slice(mesh.vertex(v));
            }
            let (g, vol) = simplex_gradients(dim, &coords);
            if vol <= 0.0 || !vol.is_finite() {
                return Err(Error::DegenerateCell {
                    cell: c,
                    volume: vol,
                });
            }
            grads[c * nloc * 3..(c + 1) * nloc * 3].copy_from_slice(&g[..nloc * 3]);
        }

        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for c in 0..ncells {
            let verts = mesh.cell(c);
            for &vi in verts {
                let Some(i) = mesh.interior_index(vi) else {
                    continue;
                };
                for &vj in verts {
                    if let Some(j) = mesh.interior_index(vj) {
                        pairs.push((i, j));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let triplets: Vec<(usize, usize, f64)> = pairs.iter().map(|&(i, j)| (i, j, 0.0)).collect();
        let template = SparseMatrix::from_triplets(ndof, &triplets, true);

        let mut slots = vec![SKIP; ncells * nloc * nloc];
        for c in 0..ncells {
            let verts = mesh.cell(c);
            for (li, &vi) in verts.iter().enumerate() {
                let Some(i) = mesh.interior_index(vi) else {
                    continue;
                };
                let lo = template.row_offsets()[i];
                let hi = template.row_offsets()[i + 1];
                for (lj, &vj) in verts.iter().enumerate() {
                    if let Some(j) = mesh.interior_index(vj) {
                        let pos = template.col_indices()[lo..hi]
                            .binary_search(&j)
                            .expect("pair present in pattern");
                        slots[(c * nloc + li) * nloc + lj] = (lo + pos) as u32;
                    }
                }
            }
        }

        Ok(Assembler {
            mesh,
            template,
            slots,
            grads,
            rule_low: QuadratureRule::for_simplex(dim, 2),
            rule_high: QuadratureRule::for_simplex(dim, 4),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    fn scatter(&self, values: &mut [f64], cell: usize, local: &[f64]) {
        let nloc = self.mesh.dim() + 1;
        let base = cell * nloc * nloc;
        for (&value, &slot) in local.iter().zip(&self.slots[base..base + nloc * nloc]) {
            if slot != SKIP {
                values[slot as usize] += value;
            }
        }
    }

    /// `A[i][j] = \int grad(phi_i) . grad(phi_j)` over interior dofs.
    pub fn stiffness(&self) -> SparseMatrix {
        let mut out = self.template.clone();
        let dim = self.mesh.dim();
        let nloc = dim + 1;
        let mut local = [0.0; MAX_LOCAL * MAX_LOCAL];
        for c in 0..self.mesh.num_cells() {
            let vol = self.mesh.cell_volume(c);
            let g = &self.grads[c * nloc * 3..(c + 1) * nloc * 3];
            for i in 0..nloc {
                for j in 0..nloc {
                    let mut dot = 0.0;
                    for d in 0..dim {
                        dot += g[i * 3 + d] * g[j * 3 + d];
                    }
                    local[i * nloc + j] = vol * dot;
                }
            }
            self.scatter(out.values_mut(), c, &local[..nloc * nloc]);
        }
        out
    }

    /// `M[i][j] = \int phi_i phi_j` over interior dofs (exact closed form).
    pub fn mass(&self) -> SparseMatrix {
        let mut out = self.template.clone();
        let nloc = self.mesh.dim() + 1;
        let denom = (nloc * (nloc + 1)) as f64;
        let mut local = [0.0; MAX_LOCAL * MAX_LOCAL];
        for c in 0..self.mesh.num_cells() {
            let base = self.mesh.cell_volume(c) / denom;
            for i in 0..nloc {
                for j in 0..nloc {
                    local[i * nloc + j] = if i == j { 2.0 * base } else { base };
                }
            }
            self.scatter(out.values_mut(), c, &local[..nloc * nloc]);
        }
        out
    }

    /// `W[i][j] = \int deriv(w_h) phi_i phi_j` with `w_h` the P1 interpolant
    /// of `w` evaluated at the quadrature points (degree-2 rule).
    pub fn weighted_mass<D: Fn(f64) -> f64>(&self, w: &FeFunction, deriv: D) -> SparseMatrix {
        let mut out = self.template.clone();
        let nloc = self.mesh.dim() + 1;
        let rule = &self.rule_low;
        let jac_scale = 1.0 / rule.reference_volume();
        let nodal = w.values();
        let mut local = [0.0; MAX_LOCAL * MAX_LOCAL];
        let mut corner = [0.0; MAX_LOCAL];
        for c in 0..self.mesh.num_cells() {
            let verts = self.mesh.cell(c);
            for (i, &v) in verts.iter().enumerate() {
                corner[i] = nodal[v];
            }
            let jac = self.mesh.cell_volume(c) * jac_scale;
            local[..nloc * nloc].fill(0.0);
            for q in 0..rule.len() {
                let lam = rule.point(q);
                let mut u_q = 0.0;
                for i in 0..nloc {
                    u_q += lam[i] * corner[i];
                }
                let coef = deriv(u_q) * rule.weight(q) * jac;
                for i in 0..nloc {
                    let ci = coef * lam[i];
                    for j in 0..nloc {
                        local[i * nloc + j] += ci * lam[j];
                    }
                }
            }
            self.scatter(out.values_mut(), c, &local[..nloc * nloc]);
        }
        out
    }

    /// `F[i] = \int fnl(w_h) phi_i` (degree-2 rule), interior dofs.
    pub fn function_load<F: Fn(f64) -> f64>(&self, w: &FeFunction, fnl: F) -> Vec<f64> {
        let nloc = self.mesh.dim() + 1;
        let rule = &self.rule_low;
        let jac_scale = 1.0 / rule.reference_volume();
        let nodal = w.values();
        let mut out = vec![0.0; self.mesh.num_interior()];
        let mut corner = [0.0; MAX_LOCAL];
        for c in 0..self.mesh.num_cells() {
            let verts = self.mesh.cell(c);
            for (i, &v) in verts.iter().enumerate() {
                corner[i] = nodal[v];
            }
            let jac = self.mesh.cell_volume(c) * jac_scale;
            for q in 0..rule.len() {
                let lam = rule.point(q);
                let mut u_q = 0.0;
                for i in 0..nloc {
                    u_q += lam[i] * corner[i];
                }
                let coef = fnl(u_q) * rule.weight(q) * jac;
                for (i, &v) in verts.iter().enumerate() {
                    if let Some(dof) = self.mesh.interior_index(v) {
                        out[dof] += coef * lam[i];
                    }
                }
            }
        }
        out
    }

    /// `F[i] = \int g(x, t) phi_i(x)` with the high-order rule, interior dofs.
    pub fn source_load<G: Fn(&[f64], f64) -> f64>(&self, g: G, t: f64) -> Vec<f64> {
        let dim = self.mesh.dim();
        let rule = &self.rule_high;
        let jac_scale = 1.0 / rule.reference_volume();
        let mut out = vec![0.0; self.mesh.num_interior()];
        let mut x = [0.0; 3];
        for c in 0..self.mesh.num_cells() {
            let verts = self.mesh.cell(c);
            let jac = self.mesh.cell_volume(c) * jac_scale;
            for q in 0..rule.len() {
                let lam = rule.point(q);
                x[..dim].fill(0.0);
                for (i, &v) in verts.iter().enumerate() {
                    let p = self.mesh.vertex(v);
                    for d in 0..dim {
                        x[d] += lam[i] * p[d];
                    }
                }
                let coef = g(&x[..dim], t) * rule.weight(q) * jac;
                for (i, &v) in verts.iter().enumerate() {
                    if let Some(dof) = self.mesh.interior_index(v) {
                        out[dof] += coef * lam[i];
                    }
                }
            }
        }
        out
    }
}

/// One-shot stiffness matrix on interior dofs.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseMatrix> {
    Ok(Assembler::new(mesh)?.stiffness())
}

/// One-shot mass matrix on interior dofs.
pub fn assemble_mass(mesh: &Mesh) -> Result<SparseMatrix> {
    Ok(Assembler::new(mesh)?.mass())
}

/// One-shot weighted mass matrix on interior dofs.
pub fn assemble_weighted_mass<D: Fn(f64) -> f64>(
    mesh: &Mesh,
    w: &FeFunction,
    deriv: D,
) -> Result<SparseMatrix> {
    Ok(Assembler::new(mesh)?.weighted_mass(w, deriv))
}

/// One-shot nonlinear load vector on interior dofs.
pub fn assemble_function_load<F: Fn(f64) -> f64>(
    mesh: &Mesh,
    w: &FeFunction,
    fnl: F,
) -> Result<Vec<f64>> {
    Ok(Assembler::new(mesh)?.function_load(w, fnl))
}

/// One-shot source load vector on interior dofs.
pub fn assemble_source_load<G: Fn(&[f64], f64) -> f64>(
    mesh: &Mesh,
    g: G,
    t: f64,
) -> Result<Vec<f64>> {
    Ok(Assembler::new(mesh)?.source_load(g, t))
}

fn full_matrix(mesh: &Mesh, stiffness: bool) -> SparseMatrix {
    let dim = mesh.dim();
    let nloc = dim + 1;
    let mut coords = [0.0; MAX_LOCAL * 3];
    let mut triplets = Vec::with_capacity(mesh.num_cells() * nloc * nloc);
    for c in 0..mesh.num_cells() {
        let verts = mesh.cell(c);
        for (i, &v) in verts.iter().enumerate() {
            coords[i * dim..(i + 1) * dim].copy_from_slice(mesh.vertex(v));
        }
        let (g, vol) = simplex_gradients(dim, &coords);
        for i in 0..nloc {
            for j in 0..nloc {
                let value = if stiffness {
                    let mut dot = 0.0;
                    for d in 0..dim {
                        dot += g[i * 3 + d] * g[j * 3 + d];
                    }
                    vol * dot
                } else {
                    vol / ((nloc * (nloc + 1)) as f64) * if i == j { 2.0 } else { 1.0 }
                };
                triplets.push((verts[i], verts[j], value));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), &triplets, true)
}

/// Stiffness matrix over all vertices, boundary included (diagnostics).
pub fn assemble_stiffness_full(mesh: &Mesh) -> SparseMatrix {
    full_matrix(mesh, true)
}

/// Mass matrix over all vertices, boundary included (diagnostics).
pub fn assemble_mass_full(mesh: &Mesh) -> SparseMatrix {
    full_matrix(mesh, false)
}

/// `||u_h - exact(., t)||_{L^2}` with the high-order quadrature rule.
pub fn l2_error<E: Fn(&[f64], f64) -> f64>(mesh: &Mesh, u: &FeFunction, exact: E, t: f64) -> f64 {
    let dim = mesh.dim();
    let rule = QuadratureRule::for_simplex(dim, 4);
    let jac_scale = 1.0 / rule.reference_volume();
    let nodal = u.values();
    let mut acc = 0.0;
    let mut x = [0.0; 3];
    for c in 0..mesh.num_cells() {
        let verts = mesh.cell(c);
        let jac = mesh.cell_volume(c) * jac_scale;
        for q in 0..rule.len() {
            let lam = rule.point(q);
            x[..dim].fill(0.0);
            let mut u_q = 0.0;
            for (i, &v) in verts.iter().enumerate() {
                u_q += lam[i] * nodal[v];
                let p = mesh.vertex(v);
                for d in 0..dim {
                    x[d] += lam[i] * p[d];
                }
            }
            let diff = u_q - exact(&x[..dim], t);
            acc += rule.weight(q) * jac * diff * diff;
        }
    }
    acc.sqrt()
}
