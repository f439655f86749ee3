//! P1 finite element machinery: sparse operators, quadrature, assembly,
//! error norms and a conjugate-gradient solver.

mod assemble;
mod quadrature;
mod sparse;

pub use assemble::{
    assemble_function_load, assemble_mass, assemble_mass_full, assemble_source_load,
    assemble_stiffness, assemble_stiffness_full, assemble_weighted_mass, l2_error, Assembler,
};
pub use quadrature::QuadratureRule;
pub use sparse::{cg_solve, cg_solve_guess, SparseMatrix};

use crate::mesh::Mesh;
use crate::{Error, Result};

/// Piecewise-linear function given by nodal values at every mesh vertex.
///
/// Time-stepper states keep their boundary entries at zero (homogeneous
/// Dirichlet data); general interpolants used for error measurement may
/// carry nonzero boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    values: Vec<f64>,
}

impl FeFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        FeFunction {
            values: vec![0.0; mesh.num_vertices()],
        }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        FeFunction {
            values: vec![c; mesh.num_vertices()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate<F: Fn(&[f64]) -> f64>(mesh: &Mesh, f: F) -> Self {
        let values = (0..mesh.num_vertices())
            .map(|v| f(mesh.vertex(v)))
            .collect();
        FeFunction { values }
    }

    /// Wraps explicit nodal values; the length must match the mesh.
    pub fn from_nodal(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                mesh.num_vertices(),
                values.len()
            )));
        }
        Ok(FeFunction { values })
    }

    /// Expands interior dof values to all vertices with zero boundary data.
    pub fn from_interior(mesh: &Mesh, interior: &[f64]) -> Self {
        let mut values = vec![0.0; mesh.num_vertices()];
        for (dof, &v) in mesh.interior_vertices().iter().enumerate() {
            values[v] = interior[dof];
        }
        FeFunction { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, vertex: usize) -> f64 {
        self.values[vertex]
    }

    /// Restriction to interior dofs in dense order.
    pub fn interior_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.interior_vertices()
            .iter()
            .map(|&v| self.values[v])
            .collect()
    }
}
