//! Quadrature rules on the reference triangle and tetrahedron.
//!
//! Points are stored in barycentric coordinates and weights sum to the
//! reference simplex volume (1/2 for the triangle, 1/6 for the tetrahedron),
//! so a physical integral is `sum_q w_q f(x_q) * |J|` with `|J| = vol / ref_vol`.

/// A fixed quadrature rule on the reference simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    nbary: usize,
    degree: usize,
}

impl QuadratureRule {
    /// Rule on the reference simplex of dimension `dim` integrating
    /// polynomials of total degree `min_degree` exactly.
    pub fn for_simplex(dim: usize, min_degree: usize) -> QuadratureRule {
        match (dim, min_degree) {
            (2, d) if d <= 2 => Self::triangle_midpoint(),
            (2, d) if d <= 4 => Self::triangle_six_point(),
            (3, d) if d <= 2 => Self::tet_four_point(),
            (3, d) if d <= 5 => Self::tet_fourteen_point(),
            _ => panic!("no rule of degree {min_degree} in dimension {dim}"),
        }
    }

    /// Edge-midpoint rule on the triangle, degree 2, 3 points.
    pub fn triangle_midpoint() -> QuadratureRule {
        let h = 0.5;
        QuadratureRule {
            points: vec![h, h, 0.0, 0.0, h, h, h, 0.0, h],
            weights: vec![1.0 / 6.0; 3],
            nbary: 3,
            degree: 2,
        }
    }

    /// Six-point rule on the triangle, degree 4. Orbit parameters and
    /// weights are the closed-form surds of the classical rule.
    pub fn triangle_six_point() -> QuadratureRule {
        let s10 = 10.0_f64.sqrt();
        let t = (38.0 - 44.0 * (0.4_f64).sqrt()).sqrt();
        let a1 = (8.0 - s10 + t) / 18.0;
        let a2 = (8.0 - s10 - t) / 18.0;
        let w1 = (620.0 + (213125.0 - 53320.0 * s10).sqrt()) / 3720.0;
        let w2 = (620.0 - (213125.0 - 53320.0 * s10).sqrt()) / 3720.0;
        let mut points = Vec::with_capacity(18);
        let mut weights = Vec::with_capacity(6);
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            for lam in [[a, a, b], [a, b, a], [b, a, a]] {
                points.extend_from_slice(&lam);
                weights.push(w * 0.5);
            }
        }
        QuadratureRule {
            points,
            weights,
            nbary: 3,
            degree: 4,
        }
    }

    /// Four-point rule on the tetrahedron, degree 2.
    pub fn tet_four_point() -> QuadratureRule {
        let a = (5.0 + 3.0 * 5.0_f64.sqrt()) / 20.0;
        let b = (5.0 - 5.0_f64.sqrt()) / 20.0;
        let mut points = Vec::with_capacity(16);
        for slot in 0..4 {
            for i in 0..4 {
                points.push(if i == slot { a } else { b });
            }
        }
        QuadratureRule {
            points,
            weights: vec![0.25 / 6.0; 4],
            nbary: 4,
            degree: 2,
        }
    }

    /// Fourteen-point rule on the tetrahedron, degree 5 (two vertex-type
    /// orbits and one edge-type orbit).
    pub fn tet_fourteen_point() -> QuadratureRule {
        const B1: f64 = 0.31088591926330056;
        const W1: f64 = 0.1126879257180151;
        const B2: f64 = 0.09273525031089103;
        const W2: f64 = 0.07349304311636161;
        const C: f64 = 0.045503704125650524;
        const W3: f64 = 0.042546020777082194;
        let mut points = Vec::with_capacity(56);
        let mut weights = Vec::with_capacity(14);
        for (b, w) in [(B1, W1), (B2, W2)] {
            let a = 1.0 - 3.0 * b;
            for slot in 0..4 {
                for i in 0..4 {
                    points.push(if i == slot { a } else { b });
                }
                weights.push(w / 6.0);
            }
        }
        let d = 0.5 - C;
        // the six (c,c,d,d) arrangements
        for pair in [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]] {
            for i in 0..4 {
                points.push(if pair.contains(&i) { C } else { d });
            }
            weights.push(W3 / 6.0);
        }
        QuadratureRule {
            points,
            weights,
            nbary: 4,
            degree: 5,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of point `q` (`dim + 1` entries).
    pub fn point(&self, q: usize) -> &[f64] {
        &self.points[q * self.nbary..(q + 1) * self.nbary]
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.weights[q]
    }

    /// Stated polynomial exactness degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Reference simplex volume (the sum of the weights).
    pub fn reference_volume(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact `\int x^p y^q` over the reference triangle.
    fn tri_moment(p: usize, q: usize) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    /// Exact `\int x^p y^q z^r` over the reference tetrahedron.
    fn tet_moment(p: usize, q: usize, r: usize) -> f64 {
        factorial(p) * factorial(q) * factorial(r) / factorial(p + q + r + 3)
    }

    #[test]
    fn weights_sum_to_reference_volume() {
        assert!((QuadratureRule::triangle_midpoint().reference_volume() - 0.5).abs() < 1e-15);
        assert!((QuadratureRule::triangle_six_point().reference_volume() - 0.5).abs() < 1e-15);
        assert!((QuadratureRule::tet_four_point().reference_volume() - 1.0 / 6.0).abs() < 1e-15);
        assert!(
            (QuadratureRule::tet_fourteen_point().reference_volume() - 1.0 / 6.0).abs() < 1e-15
        );
    }

    #[test]
    fn triangle_rules_integrate_monomials_exactly() {
        for rule in [
            QuadratureRule::triangle_midpoint(),
            QuadratureRule::triangle_six_point(),
        ] {
            for p in 0..=rule.degree() {
                for q in 0..=(rule.degree() - p) {
                    let mut acc = 0.0;
                    for k in 0..rule.len() {
                        let lam = rule.point(k);
                        let (x, y) = (lam[1], lam[2]);
                        acc += rule.weight(k) * x.powi(p as i32) * y.powi(q as i32);
                    }
                    assert!(
                        (acc - tri_moment(p, q)).abs() < 1e-14,
                        "degree {} rule failed on x^{p} y^{q}",
                        rule.degree()
                    );
                }
            }
        }
    }

    #[test]
    fn tet_rules_integrate_monomials_exactly() {
        for rule in [
            QuadratureRule::tet_four_point(),
            QuadratureRule::tet_fourteen_point(),
        ] {
            for p in 0..=rule.degree() {
                for q in 0..=(rule.degree() - p) {
                    for r in 0..=(rule.degree() - p - q) {
                        let mut acc = 0.0;
                        for k in 0..rule.len() {
                            let lam = rule.point(k);
                            acc += rule.weight(k)
                                * lam[1].powi(p as i32)
                                * lam[2].powi(q as i32)
                                * lam[3].powi(r as i32);
                        }
                        assert!(
                            (acc - tet_moment(p, q, r)).abs() < 1e-14,
                            "degree {} rule failed on x^{p} y^{q} z^{r}: {:e}",
                            rule.degree(),
                            (acc - tet_moment(p, q, r)).abs()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn barycentric_coordinates_sum_to_one() {
        for rule in [
            QuadratureRule::triangle_midpoint(),
            QuadratureRule::triangle_six_point(),
            QuadratureRule::tet_four_point(),
            QuadratureRule::tet_fourteen_point(),
        ] {
            for q in 0..rule.len() {
                let s: f64 = rule.point(q).iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn selection_by_degree() {
        assert_eq!(QuadratureRule::for_simplex(2, 2).len(), 3);
        assert_eq!(QuadratureRule::for_simplex(2, 4).len(), 6);
        assert_eq!(QuadratureRule::for_simplex(3, 2).len(), 4);
        assert_eq!(QuadratureRule::for_simplex(3, 4).len(), 14);
    }
}
