//! Fractional norms through the cosine Hilbert scale.
//!
//! The functions `φ_n(t) = √2 cos(μ_n t)`, `μ_n = (n − 1/2)π`, form an
//! orthonormal basis of `L²(0, 1)`, and
//!
//! ```text
//! ‖v‖_β² = Σ μ_n^(2β) (v, φ_n)²
//! ```
//!
//! defines the scale `X_β`. Error norms use `β = −α/2`, truncated after a
//! fixed number of modes.
//!
//! Coefficients of finite element functions are computed exactly element by
//! element. Coefficients of closed-form functions use composite Gauss rules
//! on a mesh graded towards `0`, fine enough to resolve the highest mode.

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{FeSolution, LocalPoly};
use crate::operator::AbelProblem;
use crate::quadrature::{gauss_legendre, QuadRule};

pub const DEFAULT_MODES: usize = 4096;

const GRADED_LEVELS: i32 = 32;
const CELL_POINTS: usize = 12;
/// Largest phase change `μ_max · width` across one auxiliary cell.
const CELL_PHASE: f64 = 6.0;
/// Modes handled by one task; phases are reseeded at every chunk start.
const MODE_CHUNK: usize = 64;

/// `μ_n = (n − 1/2)π` for `n ≥ 1`.
pub fn frequency(n: usize) -> f64 {
    (n as f64 - 0.5) * std::f64::consts::PI
}

/// Exact `∫_a^b p((t − a)/(b − a)) √2 cos(μ t) dt` for a polynomial given in
/// the local coordinate of `[a, b]`.
#[derive(Debug, Clone)]
pub struct PolyCosIntegrator {
    rule: QuadRule,
}

impl PolyCosIntegrator {
    pub fn new(max_degree: usize) -> Result<Self> {
        Ok(Self {
            rule: gauss_legendre(max_degree + 16)?,
        })
    }

    /// `∫₀¹ p(s) e^{iωs} ds`
    fn local_moment(&self, poly: &LocalPoly, omega: f64) -> Complex64 {
        let c = &poly.coeffs;
        let deg = c.len().saturating_sub(1);
        if omega < (deg as f64).max(2.0) {
            return self
                .rule
                .iter()
                .map(|(s, w)| Complex64::from_polar(w * poly.eval(s), omega * s))
                .sum();
        }
        let i_omega = Complex64::new(0.0, omega);
        let e = Complex64::from_polar(1.0, omega);
        let mut j = (e - 1.0) / i_omega;
        let mut total = j * c.first().copied().unwrap_or(0.0);
        for (k, ck) in c.iter().enumerate().skip(1) {
            j = (e - k as f64 * j) / i_omega;
            total += j * *ck;
        }
        total
    }

    pub fn integrate(&self, poly: &LocalPoly, a: f64, b: f64, mu: f64) -> Result<f64> {
        if !(b > a) {
            return Err(Error::InvalidInterval(a, b));
        }
        Ok(self.integrate_unchecked(poly, a, b - a, mu))
    }

    #[inline]
    fn integrate_unchecked(&self, poly: &LocalPoly, a: f64, h: f64, mu: f64) -> f64 {
        let m = self.local_moment(poly, mu * h);
        std::f64::consts::SQRT_2 * h * (Complex64::from_polar(1.0, mu * a) * m).re
    }
}

/// Convenience form of [`PolyCosIntegrator::integrate`].
pub fn integrate_poly_cos(poly: &LocalPoly, a: f64, b: f64, mu: f64) -> Result<f64> {
    PolyCosIntegrator::new(poly.degree())?.integrate(poly, a, b, mu)
}

/// Norm of an error `f − f_S`, absolute and relative to `‖f‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorm {
    pub absolute: f64,
    pub reference: f64,
    pub relative: f64,
}

/// Truncated cosine expansion with a fixed number of modes.
#[derive(Debug, Clone)]
pub struct SpectralNormEvaluator {
    mu: Vec<f64>,
    /// auxiliary composite rule for closed-form functions, built on first use
    aux: OnceLock<(Vec<f64>, Vec<f64>)>,
}

impl SpectralNormEvaluator {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("at least one mode is required".into()));
        }
        let mu: Vec<f64> = (1..=modes).map(frequency).collect();
        Ok(Self {
            mu,
            aux: OnceLock::new(),
        })
    }

    fn auxiliary_rule(&self) -> &(Vec<f64>, Vec<f64>) {
        self.aux.get_or_init(|| {
            let mu_max = self.mu[self.mu.len() - 1];
            let base = gauss_legendre(CELL_POINTS).expect("fixed order");
            let mut points = Vec::new();
            let mut weights = Vec::new();
            let mut cell = |a: f64, b: f64| {
                let pieces = ((b - a) * mu_max / CELL_PHASE).ceil().max(1.0) as usize;
                let h = (b - a) / pieces as f64;
                for p in 0..pieces {
                    let start = a + p as f64 * h;
                    for (s, w) in base.iter() {
                        points.push(start + h * s);
                        weights.push(h * w);
                    }
                }
            };
            cell(0.0, 0.5f64.powi(GRADED_LEVELS));
            for k in (0..GRADED_LEVELS).rev() {
                let b = 0.5f64.powi(k);
                cell(0.5 * b, b);
            }
            (points, weights)
        })
    }

    pub fn modes(&self) -> usize {
        self.mu.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.mu
    }

    /// `(v, φ_n)` for a finite element function, exact up to rounding.
    pub fn fe_coefficients(&self, v: &FeSolution) -> Result<Vec<f64>> {
        let space = v.space();
        let integ = PolyCosIntegrator::new(space.degree())?;
        let mesh = space.mesh();
        let elements: Vec<(f64, f64, LocalPoly)> = (0..mesh.num_elements())
            .map(|e| {
                let (a, h) = mesh.element(e);
                (a, h, v.local_poly(e))
            })
            .collect();
        Ok(self
            .mu
            .par_iter()
            .map(|&mu| {
                elements
                    .iter()
                    .map(|(a, h, p)| integ.integrate_unchecked(p, *a, *h, mu))
                    .sum()
            })
            .collect())
    }

    /// `(f, φ_n)` by the graded composite rule.
    pub fn function_coefficients(&self, f: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Vec<f64>> {
        let (points, weights) = self.auxiliary_rule();
        let wf: Vec<f64> = points
            .iter()
            .zip(weights)
            .map(|(&y, &w)| w * f(y) * std::f64::consts::SQRT_2)
            .collect();
        if let Some(k) = wf.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "function is not finite at {}",
                points[k]
            )));
        }
        let pi = std::f64::consts::PI;
        let chunks: Vec<Vec<f64>> = self
            .mu
            .par_chunks(MODE_CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; chunk.len()];
                for (&y, &c) in points.iter().zip(&wf) {
                    let mut z = Complex64::from_polar(c, chunk[0] * y);
                    let rot = Complex64::from_polar(1.0, pi * y);
                    for a in acc.iter_mut() {
                        *a += z.re;
                        z *= rot;
                    }
                }
                acc
            })
            .collect();
        Ok(chunks.concat())
    }

    /// `(Σ μ_n^(2β) u_n²)^(1/2)` over the available coefficients.
    pub fn norm(&self, coeffs: &[f64], beta: f64) -> Result<f64> {
        if !(beta > -1.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("norm order {beta} not in (-1, 1)")));
        }
        if coeffs.len() > self.mu.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                self.mu.len()
            )));
        }
        let s: f64 = coeffs
            .iter()
            .zip(&self.mu)
            .map(|(u, mu)| mu.powf(2.0 * beta) * u * u)
            .sum();
        Ok(s.sqrt())
    }

    pub fn x_norm_fe(&self, v: &FeSolution, beta: f64) -> Result<f64> {
        self.norm(&self.fe_coefficients(v)?, beta)
    }

    pub fn x_norm_fn(&self, f: &(dyn Fn(f64) -> f64 + Sync), beta: f64) -> Result<f64> {
        self.norm(&self.function_coefficients(f)?, beta)
    }

    /// `‖f − f_S‖_β` from precomputed coefficients of `f`.
    pub fn error_norm_with(&self, exact: &[f64], sol: &FeSolution, beta: f64) -> Result<ErrorNorm> {
        if exact.len() != self.modes() {
            return Err(Error::DimensionMismatch(format!(
                "{} exact coefficients for {} modes",
                exact.len(),
                self.modes()
            )));
        }
        let fe = self.fe_coefficients(sol)?;
        let diff: Vec<f64> = exact.iter().zip(&fe).map(|(a, b)| a - b).collect();
        let absolute = self.norm(&diff, beta)?;
        let reference = self.norm(exact, beta)?;
        Ok(ErrorNorm {
            absolute,
            reference,
            relative: absolute / reference,
        })
    }

    /// `‖f − f_S‖_β` against the problem's exact solution.
    pub fn error_norm(&self, problem: &AbelProblem, sol: &FeSolution, beta: f64) -> Result<ErrorNorm> {
        let exact = problem
            .exact()
            .ok_or_else(|| Error::InvalidArgument("problem has no exact solution".into()))?;
        let coeffs = self.function_coefficients(&|y| exact(y))?;
        self.error_norm_with(&coeffs, sol, beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_space;
    use proptest::prelude::*;
    use std::f64::consts::{PI, SQRT_2};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn frequencies_increase() {
        let ev = SpectralNormEvaluator::new(100).unwrap();
        assert!(ev.frequencies().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(ev.frequencies()[0], PI / 2.0);
        assert!(SpectralNormEvaluator::new(0).is_err());
    }

    #[test]
    fn basis_is_orthonormal() {
        let ev = SpectralNormEvaluator::new(40).unwrap();
        for n in 1..=20 {
            let mu = frequency(n);
            let c = ev.function_coefficients(&|t| SQRT_2 * (mu * t).cos()).unwrap();
            for (k, v) in c.iter().enumerate() {
                let expect = if k + 1 == n { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10, "n={n} k={k}: {v}");
            }
        }
    }

    #[test]
    fn poly_cos_examples() {
        let one = LocalPoly::new(vec![1.0]);
        let v = integrate_poly_cos(&one, 0.0, 1.0, PI / 2.0).unwrap();
        assert!((v - 2.0 * SQRT_2 / PI).abs() < 1e-15);
        for n in 1..=50 {
            let mu = frequency(n);
            let v = integrate_poly_cos(&one, 0.0, 1.0, mu).unwrap();
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            assert!((v - sign * SQRT_2 / mu).abs() < 1e-14);
        }
        let p = LocalPoly::new(vec![1.0, -2.0, 3.0]);
        let v = integrate_poly_cos(&p, 0.25, 0.75, 0.0).unwrap();
        // √2 · 0.5 · ∫₀¹ (1 − 2s + 3s²) ds = √2 · 0.5
        assert!((v - SQRT_2 * 0.5).abs() < 1e-15);
        assert!(integrate_poly_cos(&p, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn poly_cos_against_quadrature() {
        let p = LocalPoly::new(vec![0.3, -1.0, 2.0, 0.5, -0.25]);
        let fine = gauss_legendre(60).unwrap();
        for &(a, b) in &[(0.0, 1.0), (0.1, 0.35), (0.9, 1.0)] {
            for &mu in &[0.0, 0.3, 1.5, 7.0, 40.0, 120.0] {
                let h = b - a;
                let q: f64 = (0..16)
                    .map(|c| {
                        let (lo, hi) = (c as f64 / 16.0, (c + 1) as f64 / 16.0);
                        fine.iter()
                            .map(|(s, w)| {
                                let t = lo + (hi - lo) * s;
                                (hi - lo) * w * p.eval(t) * SQRT_2 * (mu * (a + h * t)).cos()
                            })
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    * h;
                let v = integrate_poly_cos(&p, a, b, mu).unwrap();
                assert!((v - q).abs() < 1e-13, "a={a} mu={mu}: {v} vs {q}");
            }
        }
    }

    #[test]
    fn constant_function_coefficients() {
        let ev = SpectralNormEvaluator::new(256).unwrap();
        let c = ev.function_coefficients(&|_| 1.0).unwrap();
        let space = build_space(7, 1).unwrap();
        let fe = ev.fe_coefficients(&space.interpolate(|_| 1.0)).unwrap();
        for (n, (u, v)) in c.iter().zip(&fe).enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign * SQRT_2 / frequency(n + 1);
            assert!((u - expect).abs() < 1e-12);
            assert!((v - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_norm() {
        let ev = SpectralNormEvaluator::new(8).unwrap();
        let mu = frequency(1);
        let n = ev.x_norm_fn(&|t| SQRT_2 * (mu * t).cos(), -0.25).unwrap();
        assert!((n - (PI / 2.0).powf(-0.25)).abs() < 1e-10);
        assert!((n - 0.8932).abs() < 1e-4);
        assert!(ev.norm(&[1.0], 1.0).is_err());
        assert!(ev.norm(&[1.0; 9], 0.0).is_err());
    }

    #[test]
    fn constant_function_truncated_series() {
        let modes = 4096;
        let ev = SpectralNormEvaluator::new(modes).unwrap();
        let v = ev.x_norm_fn(&|_| 1.0, -0.25).unwrap();
        let series: f64 = (1..=modes).map(|n| 2.0 * frequency(n).powf(-2.5)).sum();
        assert!(rel(v * v, series) < 1e-10);
        // tail ≤ ∫_{N}^{∞} 2((x − 1/2)π)^{-5/2} dx
        let tail = 2.0 / PI * (2.0 / 3.0) * frequency(modes).powf(-1.5);
        let full: f64 = series + tail;
        assert!(v * v <= full && full - v * v < 1e-6);
    }

    fn random_fe(seed: &[f64], n: usize, m: usize, pin_right: bool) -> FeSolution {
        let space = build_space(n, m).unwrap();
        let mut c: Vec<f64> = (0..space.dim()).map(|i| seed[i % seed.len()] * (1.0 + i as f64).sin()).collect();
        if pin_right {
            *c.last_mut().unwrap() = 0.0;
        }
        FeSolution::new(space, c).unwrap()
    }

    fn l2_norm(v: &FeSolution) -> f64 {
        let rule = gauss_legendre(8).unwrap();
        let mesh = v.space().mesh();
        (0..mesh.num_elements())
            .map(|e| {
                let (_, h) = mesh.element(e);
                let p = v.local_poly(e);
                h * rule.integrate(|s| p.eval(s).powi(2))
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn parseval_for_fe_functions() {
        // continuous and zero at 1: coefficients decay like μ^{-2}
        let ev = SpectralNormEvaluator::new(DEFAULT_MODES).unwrap();
        for k in 0..10 {
            let seed = [1.0 + k as f64, -0.5, 0.25 * k as f64, 2.0];
            let v = random_fe(&seed, 5 + k, 1 + k % 3, true);
            let l2 = l2_norm(&v);
            let x = ev.x_norm_fe(&v, 0.0).unwrap();
            assert!(rel(x, l2) < 1e-6, "k={k}: {x} {l2} {}", rel(x, l2));
        }
        // general functions jump at interior nodes or at 1, so coefficients
        // only decay like μ^{-1}; add the leading-order tail
        //   (v, φ_n) ≈ √2/μ_n (v(1) sin μ_n − Σ_k J_k sin μ_n x_k)
        for k in 0..10 {
            let seed = [0.5 - k as f64, 1.5, 0.75];
            let v = random_fe(&seed, 3 + k, k % 3, false);
            let l2 = l2_norm(&v);
            let trunc = ev.x_norm_fe(&v, 0.0).unwrap();
            let tail = leading_tail(&v, DEFAULT_MODES);
            let x = (trunc * trunc + tail).sqrt();
            assert!(rel(x, l2) < 1e-6, "k={k}: {x} {l2}");
            assert!(rel(trunc, l2) > 1e-6);
        }
    }

    fn leading_tail(v: &FeSolution, modes: usize) -> f64 {
        let mesh = v.space().mesh();
        let n = mesh.num_elements();
        let right = v.local_poly(n - 1).eval(1.0);
        let jumps: Vec<(f64, f64)> = (1..n)
            .map(|e| {
                let x = mesh.points()[e];
                (x, v.local_poly(e).eval(0.0) - v.local_poly(e - 1).eval(1.0))
            })
            .collect();
        let far = 64 * modes;
        let sum: f64 = (modes + 1..=far)
            .map(|k| {
                let mu = frequency(k);
                let lead = right * mu.sin() - jumps.iter().map(|(x, j)| j * (mu * x).sin()).sum::<f64>();
                2.0 * lead * lead / (mu * mu)
            })
            .sum();
        let mean_sq = right * right + 0.5 * jumps.iter().map(|(_, j)| j * j).sum::<f64>();
        sum + 2.0 * mean_sq / (PI * PI * far as f64)
    }

    #[test]
    fn interpolant_error_vanishes() {
        let ev = SpectralNormEvaluator::new(512).unwrap();
        let space = build_space(6, 2).unwrap();
        let v = space.interpolate(|x| x * x - 0.5 * x + 0.1);
        let exact = ev.function_coefficients(&|x| x * x - 0.5 * x + 0.1).unwrap();
        let e = ev.error_norm_with(&exact, &v, -0.25).unwrap();
        assert!(e.absolute < 1e-12);
        assert!(ev.error_norm_with(&exact[..10], &v, -0.25).is_err());
    }

    #[test]
    fn partial_sums_are_monotone() {
        let ev = SpectralNormEvaluator::new(1024).unwrap();
        let c = ev.function_coefficients(&|y| y.powf(1.5)).unwrap();
        let mut last = 0.0;
        for k in [1, 2, 8, 64, 256, 1024] {
            let v = ev.norm(&c[..k], -0.25).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    proptest! {
        #[test]
        fn homogeneous(c in -100.0f64..100.0, a in 0.1f64..3.0) {
            let ev = SpectralNormEvaluator::new(128).unwrap();
            let v = random_fe(&[a, -1.0, 0.5], 6, 1, false);
            let n1 = ev.x_norm_fe(&v, -0.3).unwrap();
            let n2 = ev.x_norm_fe(&v.scaled(c), -0.3).unwrap();
            prop_assert!((n2 - c.abs() * n1).abs() <= 1e-13 * (1.0 + c.abs() * n1));
        }

        #[test]
        fn triangle_inequality(a in -3.0f64..3.0, b in -3.0f64..3.0, beta in -0.45f64..0.45) {
            let ev = SpectralNormEvaluator::new(256).unwrap();
            let u = random_fe(&[a, 1.0], 5, 2, false);
            let v = random_fe(&[b, -2.0, 0.3], 5, 2, false);
            let sum = FeSolution::new(
                u.space().clone(),
                u.coefficients().iter().zip(v.coefficients()).map(|(x, y)| x + y).collect(),
            ).unwrap();
            let lhs = ev.x_norm_fe(&sum, beta).unwrap();
            let rhs = ev.x_norm_fe(&u, beta).unwrap() + ev.x_norm_fe(&v, beta).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
