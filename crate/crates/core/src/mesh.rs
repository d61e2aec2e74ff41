//! Partitions of the unit interval and piecewise polynomial spaces on them.
//!
//! Every element carries the same reference basis, stored as monomial
//! coefficients in the scaled coordinate `s = (x - x_e) / h_e ∈ [0, 1]`.
//! Evaluating in the scaled coordinate keeps the basis well conditioned for
//! arbitrarily small elements.

use crate::error::{Error, Result};

/// A partition `0 = x_0 < x_1 < ... < x_N = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    points: Vec<f64>,
    sizes: Vec<f64>,
    h_max: f64,
    c_t: f64,
    c_qu: f64,
}

impl Mesh {
    /// Builds a mesh from its breakpoints.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMesh("need at least two breakpoints".into()));
        }
        if points[0] != 0.0 || *points.last().unwrap() != 1.0 {
            return Err(Error::InvalidMesh("breakpoints must start at 0 and end at 1".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh("non-finite breakpoint".into()));
        }
        let sizes: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = sizes.iter().position(|&h| h <= 0.0) {
            return Err(Error::InvalidMesh(format!(
                "breakpoints not strictly increasing at element {i}"
            )));
        }
        Ok(Self::from_parts(points, sizes))
    }

    /// `n` equal elements of width `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("a partition needs at least one element".into()));
        }
        let h = 1.0 / n as f64;
        let mut points: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        points[n] = 1.0;
        let mut mesh = Self::from_parts(points, vec![h; n]);
        mesh.c_t = 1.0;
        mesh.c_qu = 1.0;
        Ok(mesh)
    }

    fn from_parts(points: Vec<f64>, sizes: Vec<f64>) -> Self {
        let h_max = sizes.iter().cloned().fold(0.0, f64::max);
        let h_min = sizes.iter().cloned().fold(f64::INFINITY, f64::min);
        let c_t = sizes
            .windows(2)
            .map(|w| (w[0] / w[1]).max(w[1] / w[0]))
            .fold(1.0, f64::max);
        Self {
            points,
            sizes,
            h_max,
            c_t,
            c_qu: h_max / h_min,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn num_elements(&self) -> usize {
        self.sizes.len()
    }

    pub fn element_sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Left endpoint and width of element `e`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.points[e], self.sizes[e])
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Largest ratio of neighbouring element sizes.
    pub fn c_t(&self) -> f64 {
        self.c_t
    }

    /// Quasi-uniformity constant `h_max / h_min`.
    pub fn c_qu(&self) -> f64 {
        self.c_qu
    }

    /// Index of the element containing `x`; interior breakpoints belong to
    /// the element on their right, `x = 1` to the last element.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain(x));
        }
        let n = self.num_elements();
        let idx = self.points.partition_point(|&p| p <= x);
        Ok(idx.saturating_sub(1).min(n - 1))
    }
}

/// A polynomial in the scaled element coordinate `s ∈ [0, 1]`,
/// `p(s) = Σ_k coeffs[k] s^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPoly {
    pub coeffs: Vec<f64>,
}

impl LocalPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    /// `self + factor * other`.
    fn axpy(&mut self, factor: f64, other: &LocalPoly) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += factor * b;
        }
    }
}

/// Lagrange basis on the equispaced reference nodes `j/m`, `j = 0..=m`.
fn reference_lagrange(m: usize) -> Vec<LocalPoly> {
    if m == 0 {
        return vec![LocalPoly::new(vec![1.0])];
    }
    let nodes: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    (0..=m)
        .map(|j| {
            let mut coeffs = vec![1.0];
            for (k, &sk) in nodes.iter().enumerate() {
                if k == j {
                    continue;
                }
                let denom = nodes[j] - sk;
                // multiply by (s - sk) / denom
                let mut next = vec![0.0; coeffs.len() + 1];
                for (d, &c) in coeffs.iter().enumerate() {
                    next[d + 1] += c / denom;
                    next[d] -= c * sk / denom;
                }
                coeffs = next;
            }
            LocalPoly::new(coeffs)
        })
        .collect()
}

/// The space `S^m` of piecewise polynomials of degree `m`: discontinuous
/// for `m = 0`, continuous for `m >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    mesh: Mesh,
    degree: usize,
    nodes: Vec<f64>,
    reference: Vec<LocalPoly>,
}

impl FeSpace {
    pub fn new(mesh: Mesh, degree: usize) -> Self {
        let n = mesh.num_elements();
        let nodes = if degree == 0 {
            (0..n)
                .map(|e| {
                    let (a, h) = mesh.element(e);
                    a + 0.5 * h
                })
                .collect()
        } else {
            let mut nodes = Vec::with_capacity(n * degree + 1);
            for e in 0..n {
                let (a, h) = mesh.element(e);
                nodes.extend((0..degree).map(|j| a + j as f64 * h / degree as f64));
            }
            nodes.push(1.0);
            nodes
        };
        Self {
            reference: reference_lagrange(degree),
            mesh,
            degree,
            nodes,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `N` for `m = 0`, `N m + 1` otherwise.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Reference shape functions, indexed by local dof.
    pub fn reference_basis(&self) -> &[LocalPoly] {
        &self.reference
    }

    /// Number of shape functions per element.
    pub fn local_dim(&self) -> usize {
        self.reference.len()
    }

    /// Global index of local dof `j` on element `e`.
    pub fn global_index(&self, e: usize, j: usize) -> usize {
        if self.degree == 0 {
            e
        } else {
            e * self.degree + j
        }
    }

    /// First and last element (inclusive) of the support of basis `i`.
    pub fn support(&self, i: usize) -> Result<(usize, usize)> {
        self.check_index(i)?;
        let n = self.mesh.num_elements();
        if self.degree == 0 {
            return Ok((i, i));
        }
        let m = self.degree;
        let (e, j) = (i / m, i % m);
        Ok(match (j, e) {
            (0, 0) => (0, 0),
            (0, e) if e == n => (n - 1, n - 1),
            (0, e) => (e - 1, e),
            (_, e) => (e, e),
        })
    }

    /// Support of basis `i` as a coordinate interval.
    pub fn support_interval(&self, i: usize) -> Result<(f64, f64)> {
        let (first, last) = self.support(i)?;
        let pts = self.mesh.points();
        Ok((pts[first], pts[last + 1]))
    }

    pub fn eval_basis(&self, i: usize, x: f64) -> Result<f64> {
        self.check_index(i)?;
        let e = self.mesh.locate(x)?;
        let (a, h) = self.mesh.element(e);
        let s = (x - a) / h;
        Ok((0..self.local_dim())
            .find(|&j| self.global_index(e, j) == i)
            .map_or(0.0, |j| self.reference[j].eval(s)))
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> FeSolution {
        FeSolution {
            space: self.clone(),
            coefficients: self.nodes.iter().map(|&x| f(x)).collect(),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            });
        }
        Ok(())
    }
}

/// A function `Σ_i c_i b_i` of a finite element space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSolution {
    space: FeSpace,
    coefficients: Vec<f64>,
}

impl FeSolution {
    pub fn new(space: FeSpace, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coefficients.len(),
                space.dim()
            )));
        }
        Ok(Self {
            space,
            coefficients,
        })
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let e = self.space.mesh.locate(x)?;
        let (a, h) = self.space.mesh.element(e);
        Ok(self.local_poly(e).eval((x - a) / h))
    }

    /// Restriction to element `e` in its scaled coordinate.
    pub fn local_poly(&self, e: usize) -> LocalPoly {
        let mut p = LocalPoly::new(vec![0.0; self.space.degree + 1]);
        for (j, shape) in self.space.reference.iter().enumerate() {
            p.axpy(self.coefficients[self.space.global_index(e, j)], shape);
        }
        p
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            space: self.space.clone(),
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Convenience: a uniform mesh with `n` elements and its degree-`m` space.
pub fn build_space(n: usize, m: usize) -> Result<FeSpace> {
    Ok(FeSpace::new(Mesh::uniform(n)?, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_mesh_examples() {
        let m1 = Mesh::uniform(1).unwrap();
        assert_eq!(m1.points(), &[0.0, 1.0]);
        assert_eq!(m1.h_max(), 1.0);

        let m32 = Mesh::uniform(32).unwrap();
        assert_eq!(m32.h_max(), 1.0 / 32.0);
        assert_eq!(m32.c_qu(), 1.0);
        assert_eq!(m32.c_t(), 1.0);

        let m3 = Mesh::uniform(3).unwrap();
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (p, e) in m3.points().iter().zip(expect) {
            assert!((p - e).abs() < 1e-15);
        }
        assert!(matches!(Mesh::uniform(0), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn general_mesh_constants() {
        let mesh = Mesh::new(vec![0.0, 0.1, 0.3, 1.0]).unwrap();
        assert!((mesh.h_max() - 0.7).abs() < 1e-15);
        assert!((mesh.c_qu() - 7.0).abs() < 1e-12);
        assert!((mesh.c_t() - 3.5).abs() < 1e-12);
        assert!(Mesh::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Mesh::new(vec![0.0, 0.5]).is_err());
        assert!(Mesh::new(vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn space_dimensions_and_nodes() {
        let s = build_space(4, 0).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.nodes(), &[0.125, 0.375, 0.625, 0.875]);

        let s = build_space(4, 1).unwrap();
        assert_eq!(s.dim(), 5);
        assert_eq!(s.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);

        assert_eq!(build_space(2, 2).unwrap().dim(), 5);

        for n in 1..=64 {
            for m in 0..=4 {
                let s = build_space(n, m).unwrap();
                let expect = if m == 0 { n } else { n * m + 1 };
                assert_eq!(s.dim(), expect, "N={n}, m={m}");
            }
        }
    }

    #[test]
    fn basis_examples() {
        let s = build_space(2, 1).unwrap();
        assert_eq!(s.eval_basis(1, 0.5).unwrap(), 1.0);
        assert!((s.eval_basis(1, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let s0 = build_space(4, 0).unwrap();
        assert_eq!(s0.eval_basis(0, 0.9).unwrap(), 0.0);
        assert!(matches!(
            s0.eval_basis(4, 0.5),
            Err(Error::IndexOutOfRange { index: 4, dim: 4 })
        ));
        assert!(s0.eval_basis(0, 1.5).is_err());
    }

    #[test]
    fn supports() {
        let s = build_space(3, 2).unwrap();
        assert_eq!(s.support(0).unwrap(), (0, 0));
        assert_eq!(s.support(1).unwrap(), (0, 0));
        assert_eq!(s.support(2).unwrap(), (0, 1));
        assert_eq!(s.support(6).unwrap(), (2, 2));
        let s0 = build_space(3, 0).unwrap();
        assert_eq!(s0.support(1).unwrap(), (1, 1));
    }

    #[test]
    fn lagrange_property() {
        for m in 0..=4 {
            let s = build_space(5, m).unwrap();
            for i in 0..s.dim() {
                for (j, &x) in s.nodes().iter().enumerate() {
                    let v = s.eval_basis(i, x).unwrap();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-12, "m={m} i={i} j={j} v={v}");
                }
            }
        }
    }

    #[test]
    fn fe_eval_examples() {
        let s = build_space(3, 1).unwrap();
        let ones = FeSolution::new(s.clone(), vec![1.0; s.dim()]).unwrap();
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((ones.eval(x).unwrap() - 1.0).abs() < 1e-14);
        }
        let lin = s.interpolate(|x| x);
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((lin.eval(x).unwrap() - x).abs() < 1e-15);
        }
        let s0 = build_space(2, 0).unwrap();
        let pc = FeSolution::new(s0.clone(), vec![2.0, 3.0]).unwrap();
        assert_eq!(pc.eval(0.75).unwrap(), 3.0);
        assert_eq!(pc.eval(0.5).unwrap(), 3.0);
        assert!(pc.eval(-0.1).is_err());
        assert!(FeSolution::new(s0, vec![1.0]).is_err());
    }

    #[test]
    fn works_on_tiny_elements() {
        let mesh = Mesh::new(vec![0.0, 1e-12, 2e-12, 1.0]).unwrap();
        let s = FeSpace::new(mesh, 2);
        let q = s.interpolate(|x| 3.0 * x * x - x);
        let x = 1.5e-12;
        assert!((q.eval(x).unwrap() - (3.0 * x * x - x)).abs() < 1e-24);
    }

    proptest! {
        #[test]
        fn partition_of_unity(n in 1usize..20, m in 0usize..5, x in 0.0f64..=1.0) {
            let s = build_space(n, m).unwrap();
            let sum: f64 = (0..s.dim()).map(|i| s.eval_basis(i, x).unwrap()).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn polynomial_reproduction(
            n in 1usize..12,
            m in 1usize..5,
            coeffs in proptest::collection::vec(-3.0f64..3.0, 5),
            xs in proptest::collection::vec(0.0f64..=1.0, 1000),
        ) {
            let poly = |x: f64| coeffs[..=m].iter().rev().fold(0.0, |acc, &c| acc * x + c);
            let s = build_space(n, m).unwrap();
            let interp = s.interpolate(poly);
            let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
            for &x in &xs {
                let err = (interp.eval(x).unwrap() - poly(x)).abs();
                prop_assert!(err <= 1e-12 * scale, "x={} err={}", x, err);
            }
        }
    }
}
