//! Structured simplicial meshes of the unit square and unit cube.
//!
//! Vertices are numbered lexicographically (x fastest), every square cell is
//! split along the lower-left to upper-right diagonal, and every cube is
//! split into six tetrahedra sharing the main diagonal (Kuhn subdivision).
//! Both choices are fixed so that degree-of-freedom numbering and assembly
//! order are fully reproducible.

use std::io::Write;

use crate::{Error, Result};

/// Immutable simplicial partition of `(0,1)^dim` with boundary
/// classification and a dense numbering of the interior vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    subdivisions: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    is_boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_vertices: Vec<usize>,
    cell_volumes: Vec<f64>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Subdivisions per axis (`M`).
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn num_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    /// Coordinates of vertex `v`.
    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    /// Vertex indices of cell `c` (`dim + 1` entries).
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    /// Dense interior index of vertex `v`, or `None` on the boundary.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Vertex indices of the interior dofs in dense order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.cell_volumes[c]
    }

    /// Plain-text dump: `dim nv nc`, vertex coordinates, cell connectivity.
    pub fn write_plain<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "{} {} {}",
            self.dim,
            self.num_vertices(),
            self.num_cells()
        )?;
        for v in 0..self.num_vertices() {
            let x = self.vertex(v);
            let line: Vec<String> = x.iter().map(|c| format!("{c}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        for c in 0..self.num_cells() {
            let line: Vec<String> = self.cell(c).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    fn finish(
        dim: usize,
        subdivisions: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
    ) -> Result<Self> {
        let m = subdivisions;
        let nv = coords.len() / dim;
        let mut is_boundary = vec![false; nv];
        for v in 0..nv {
            let x = &coords[v * dim..(v + 1) * dim];
            is_boundary[v] = x.iter().any(|&c| c == 0.0 || c == 1.0);
        }
        let mut interior_index = vec![None; nv];
        let mut interior_vertices = Vec::new();
        for v in 0..nv {
            if !is_boundary[v] {
                interior_index[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }
        let nc = cells.len() / (dim + 1);
        let mut cell_volumes = Vec::with_capacity(nc);
        for c in 0..nc {
            let verts = &cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            let vol = signed_volume(dim, &coords, verts);
            if vol <= 0.0 {
                return Err(Error::DegenerateCell {
                    cell: c,
                    volume: vol,
                });
            }
            cell_volumes.push(vol);
        }
        let _ = m;
        Ok(Mesh {
            dim,
            subdivisions,
            coords,
            cells,
            is_boundary,
            interior_index,
            interior_vertices,
            cell_volumes,
        })
    }
}

fn signed_volume(dim: usize, coords: &[f64], verts: &[usize]) -> f64 {
    let p = |v: usize, c: usize| coords[verts[v] * dim + c];
    match dim {
        2 => {
            let (ax, ay) = (p(1, 0) - p(0, 0), p(1, 1) - p(0, 1));
            let (bx, by) = (p(2, 0) - p(0, 0), p(2, 1) - p(0, 1));
            0.5 * (ax * by - ay * bx)
        }
        3 => {
            let a = [p(1, 0) - p(0, 0), p(1, 1) - p(0, 1), p(1, 2) - p(0, 2)];
            let b = [p(2, 0) - p(0, 0), p(2, 1) - p(0, 1), p(2, 2) - p(0, 2)];
            let c = [p(3, 0) - p(0, 0), p(3, 1) - p(0, 1), p(3, 2) - p(0, 2)];
            let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]);
            det / 6.0
        }
        _ => unreachable!("only 2D and 3D meshes are constructed"),
    }
}

/// Uniform triangulation of the unit square: `M x M` squares, each split
/// into two triangles along the diagonal from `(i/M, j/M)` to
/// `((i+1)/M, (j+1)/M)`.
pub fn unit_square_mesh(subdivisions: usize) -> Result<Mesh> {
    if subdivisions == 0 {
        return Err(Error::InvalidArgument(
            "subdivisions must be at least 1".into(),
        ));
    }
    let m = subdivisions;
    let np = m + 1;
    let mut coords = Vec::with_capacity(np * np * 2);
    for j in 0..np {
        for i in 0..np {
            coords.push(i as f64 / m as f64);
            coords.push(j as f64 / m as f64);
        }
    }
    let vid = |i: usize, j: usize| j * np + i;
    let mut cells = Vec::with_capacity(2 * m * m * 3);
    for j in 0..m {
        for i in 0..m {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v01 = vid(i, j + 1);
            let v11 = vid(i + 1, j + 1);
            cells.extend_from_slice(&[v00, v10, v11]);
            cells.extend_from_slice(&[v00, v11, v01]);
        }
    }
    Mesh::finish(2, m, coords, cells)
}

/// Uniform tetrahedralization of the unit cube: `M^3` cubes, each split into
/// six tetrahedra along the main diagonal (Kuhn subdivision).
pub fn unit_cube_mesh(subdivisions: usize) -> Result<Mesh> {
    if subdivisions == 0 {
        return Err(Error::InvalidArgument(
            "subdivisions must be at least 1".into(),
        ));
    }
    let m = subdivisions;
    let np = m + 1;
    let mut coords = Vec::with_capacity(np * np * np * 3);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                coords.push(i as f64 / m as f64);
                coords.push(j as f64 / m as f64);
                coords.push(k as f64 / m as f64);
            }
        }
    }
    let vid = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut cells = Vec::with_capacity(6 * m * m * m * 4);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                for perm in PERMS {
                    let mut off = [0usize; 3];
                    let mut tet = [vid(i, j, k); 4];
                    for (step, &axis) in perm.iter().enumerate() {
                        off[axis] = 1;
                        tet[step + 1] = vid(i + off[0], j + off[1], k + off[2]);
                    }
                    // orient positively; odd axis permutations flip the sign
                    if parity_odd(&perm) {
                        tet.swap(2, 3);
                    }
                    cells.extend_from_slice(&tet);
                }
            }
        }
    }
    Mesh::finish(3, m, coords, cells)
}

fn parity_odd(perm: &[usize; 3]) -> bool {
    let mut inversions = 0;
    for a in 0..3 {
        for b in (a + 1)..3 {
            if perm[a] > perm[b] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Maximum cell diameter `h`.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    let mut h: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        let verts = mesh.cell(c);
        for a in 0..verts.len() {
            for b in (a + 1)..verts.len() {
                let pa = mesh.vertex(verts[a]);
                let pb = mesh.vertex(verts[b]);
                let d2: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
                h = h.max(d2.sqrt());
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        let m1 = unit_square_mesh(1).unwrap();
        assert_eq!(m1.num_vertices(), 4);
        assert_eq!(m1.num_cells(), 2);
        assert_eq!(m1.num_interior(), 0);

        let m2 = unit_square_mesh(2).unwrap();
        assert_eq!(m2.num_vertices(), 9);
        assert_eq!(m2.num_cells(), 8);
        assert_eq!(m2.num_interior(), 1);
        let center = m2.interior_vertices()[0];
        assert_eq!(m2.vertex(center), &[0.5, 0.5]);

        for m in [1usize, 2, 5] {
            let mesh = unit_square_mesh(m).unwrap();
            assert_eq!(mesh.num_vertices(), (m + 1) * (m + 1));
            assert_eq!(mesh.num_cells(), 2 * m * m);
            assert_eq!(mesh.num_interior(), (m - 1) * (m - 1));
        }
    }

    #[test]
    fn cube_counts() {
        let m1 = unit_cube_mesh(1).unwrap();
        assert_eq!(m1.num_vertices(), 8);
        assert_eq!(m1.num_cells(), 6);
        assert_eq!(m1.num_interior(), 0);

        let m2 = unit_cube_mesh(2).unwrap();
        assert_eq!(m2.num_vertices(), 27);
        assert_eq!(m2.num_cells(), 48);
        assert_eq!(m2.num_interior(), 1);

        for m in [1usize, 2, 3] {
            let mesh = unit_cube_mesh(m).unwrap();
            assert_eq!(mesh.num_vertices(), (m + 1).pow(3));
            assert_eq!(mesh.num_cells(), 6 * m * m * m);
            assert_eq!(mesh.num_interior(), if m > 0 { (m - 1).pow(3) } else { 0 });
        }
    }

    #[test]
    fn volumes_partition_the_domain() {
        for mesh in [unit_square_mesh(3).unwrap(), unit_square_mesh(7).unwrap()] {
            let total: f64 = (0..mesh.num_cells()).map(|c| mesh.cell_volume(c)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        for mesh in [unit_cube_mesh(2).unwrap(), unit_cube_mesh(3).unwrap()] {
            let total: f64 = (0..mesh.num_cells()).map(|c| mesh.cell_volume(c)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_cells_positively_oriented() {
        for mesh in [unit_square_mesh(4).unwrap(), unit_cube_mesh(3).unwrap()] {
            for c in 0..mesh.num_cells() {
                assert!(mesh.cell_volume(c) > 0.0);
            }
        }
    }

    #[test]
    fn boundary_iff_coordinate_on_face() {
        for mesh in [unit_square_mesh(4).unwrap(), unit_cube_mesh(2).unwrap()] {
            for v in 0..mesh.num_vertices() {
                let on_face = mesh.vertex(v).iter().any(|&c| c == 0.0 || c == 1.0);
                assert_eq!(mesh.is_boundary(v), on_face);
            }
        }
    }

    #[test]
    fn interior_indices_are_dense() {
        let mesh = unit_cube_mesh(4).unwrap();
        let mut seen = vec![false; mesh.num_interior()];
        for v in 0..mesh.num_vertices() {
            match mesh.interior_index(v) {
                Some(i) => {
                    assert!(!mesh.is_boundary(v));
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(mesh.interior_vertices()[i], v);
                }
                None => assert!(mesh.is_boundary(v)),
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn mesh_size_values() {
        let h = mesh_size(&unit_square_mesh(2).unwrap());
        assert!((h - 2.0_f64.sqrt() / 2.0).abs() < 1e-15);

        let h = mesh_size(&unit_cube_mesh(1).unwrap());
        assert!((h - 3.0_f64.sqrt()).abs() < 1e-15);

        let h8 = mesh_size(&unit_square_mesh(8).unwrap());
        let h16 = mesh_size(&unit_square_mesh(16).unwrap());
        assert!((h8 / h16 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn construction_is_deterministic() {
        assert_eq!(unit_square_mesh(5).unwrap(), unit_square_mesh(5).unwrap());
        assert_eq!(unit_cube_mesh(3).unwrap(), unit_cube_mesh(3).unwrap());
    }

    #[test]
    fn plain_dump_shape() {
        let mesh = unit_square_mesh(1).unwrap();
        let mut buf = Vec::new();
        mesh.write_plain(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "2 4 2");
        assert_eq!(lines.len(), 1 + 4 + 2);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(unit_square_mesh(0).is_err());
        assert!(unit_cube_mesh(0).is_err());
    }
}
