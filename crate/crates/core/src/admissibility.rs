//! Coercivity constants for separable kernels
//! `K(x, y) = Σ d_{n,m} ψ_n(x) ψ_m(y)`.
//!
//! With multiplier bounds `c_n ≤ C_n` for each factor, the kernel is
//! admissible when
//!
//! ```text
//! γ̃ = γ Σ_n d_{n,n} c_n² − C_c Σ_{n≠m} |d_{n,m}| C_n C_m > 0,   γ = cos(πα/2).
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::check_alpha;

/// Coercivity constant of the pure Abel operator, `cos(πα/2)`.
pub fn gamma(alpha: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * alpha).cos()
}

/// Lower and upper multiplier constants of one factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierBounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for MultiplierBounds {
    fn default() -> Self {
        Self {
            lower: 1.0,
            upper: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityInput {
    pub alpha: f64,
    /// `(n, m) → d_{n,m}`
    pub coefficients: BTreeMap<(usize, usize), f64>,
    /// Missing factors use `c = C = 1`.
    pub bounds: BTreeMap<usize, MultiplierBounds>,
    pub continuity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub gamma: f64,
    pub c_s_squared: f64,
    pub gamma_tilde: f64,
    pub admissible: bool,
}

impl AdmissibilityInput {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            coefficients: BTreeMap::new(),
            bounds: BTreeMap::new(),
            continuity: 1.0,
        }
    }

    pub fn with_coefficient(mut self, n: usize, m: usize, d: f64) -> Self {
        self.coefficients.insert((n, m), d);
        self
    }

    pub fn with_bounds(mut self, n: usize, lower: f64, upper: f64) -> Self {
        self.bounds.insert(n, MultiplierBounds { lower, upper });
        self
    }

    /// The experiment kernel `11/10 − (1 + x)(1 + y)/10` with the multiplier
    /// constants `c₂ = 2^(−1/2)`, `C₂ = 2√2` of `1 + x`.
    pub fn experiment(alpha: f64) -> Self {
        Self::new(alpha)
            .with_coefficient(1, 1, 11.0 / 10.0)
            .with_coefficient(2, 2, -1.0 / 10.0)
            .with_bounds(2, std::f64::consts::FRAC_1_SQRT_2, 2.0 * std::f64::consts::SQRT_2)
    }

    fn bounds_of(&self, n: usize) -> MultiplierBounds {
        self.bounds.get(&n).copied().unwrap_or_default()
    }

    pub fn evaluate(&self) -> Result<AdmissibilityReport> {
        check_alpha(self.alpha)?;
        if self.coefficients.is_empty() {
            return Err(Error::InvalidArgument("no kernel coefficients".into()));
        }
        if !(self.continuity > 0.0 && self.continuity.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "continuity constant {} must be positive",
                self.continuity
            )));
        }
        for (n, b) in &self.bounds {
            if !(b.lower > 0.0 && b.lower <= b.upper && b.upper.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "factor {n}: need 0 < c ≤ C, got c = {}, C = {}",
                    b.lower, b.upper
                )));
            }
        }
        if let Some(((n, m), d)) = self.coefficients.iter().find(|(_, d)| !d.is_finite()) {
            return Err(Error::InvalidArgument(format!("d[{n},{m}] = {d} is not finite")));
        }
        let g = gamma(self.alpha);
        let mut c_s_squared = 0.0;
        let mut diagonal = 0.0;
        let mut penalty = 0.0;
        for (&(n, m), &d) in &self.coefficients {
            let (bn, bm) = (self.bounds_of(n), self.bounds_of(m));
            c_s_squared += d.abs() * bn.upper * bm.upper;
            if n == m {
                diagonal += d * bn.lower * bn.lower;
            } else {
                penalty += d.abs() * bn.upper * bm.upper;
            }
        }
        let gamma_tilde = g * diagonal - self.continuity * penalty;
        Ok(AdmissibilityReport {
            gamma: g,
            c_s_squared,
            gamma_tilde,
            admissible: gamma_tilde > 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_values() {
        assert!((gamma(0.5) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((gamma(1e-12) - 1.0).abs() < 1e-15);
        assert!((gamma(0.9) - 0.15643446504023087).abs() < 1e-15);
    }

    #[test]
    fn experiment_constants() {
        for &alpha in &[0.1, 0.5, 0.9] {
            let r = AdmissibilityInput::experiment(alpha).evaluate().unwrap();
            assert!((r.c_s_squared - 19.0 / 10.0).abs() <= 1e-15);
            assert!((r.gamma_tilde - 21.0 / 20.0 * gamma(alpha)).abs() <= 1e-15);
            assert!(r.admissible);
        }
        let r = AdmissibilityInput::experiment(0.5).evaluate().unwrap();
        assert!((r.gamma_tilde - 0.7424621202458749).abs() < 1e-12);
    }

    #[test]
    fn pure_abel_kernel() {
        let r = AdmissibilityInput::new(0.3).with_coefficient(1, 1, 1.0).evaluate().unwrap();
        assert_eq!(r.c_s_squared, 1.0);
        assert_eq!(r.gamma_tilde, gamma(0.3));
        assert!(r.admissible);
    }

    #[test]
    fn off_diagonal_penalty() {
        let r = AdmissibilityInput::new(0.5)
            .with_coefficient(1, 1, 1.0)
            .with_coefficient(1, 2, 0.5)
            .with_coefficient(2, 1, 0.5)
            .evaluate()
            .unwrap();
        assert!((r.gamma_tilde - (gamma(0.5) - 1.0)).abs() < 1e-15);
        assert!(!r.admissible);
        let mut weak = AdmissibilityInput::new(0.5)
            .with_coefficient(1, 1, 1.0)
            .with_coefficient(1, 2, 0.1);
        weak.continuity = 2.0;
        let r = weak.evaluate().unwrap();
        assert!((r.gamma_tilde - (gamma(0.5) - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(AdmissibilityInput::new(0.5).evaluate().is_err());
        assert!(AdmissibilityInput::new(1.5).with_coefficient(1, 1, 1.0).evaluate().is_err());
        let bad = AdmissibilityInput::new(0.5)
            .with_coefficient(1, 1, 1.0)
            .with_bounds(1, 2.0, 1.0);
        assert!(bad.evaluate().is_err());
        let bad = AdmissibilityInput::new(0.5)
            .with_coefficient(1, 1, 1.0)
            .with_bounds(1, 0.0, 1.0);
        assert!(bad.evaluate().is_err());
    }

    proptest! {
        #[test]
        fn bounded_by_diagonal_and_monotone(
            alpha in 0.01f64..0.99,
            d in proptest::collection::vec(-2.0f64..2.0, 4),
            lower in proptest::collection::vec(0.1f64..1.0, 2),
            spread in proptest::collection::vec(1.0f64..3.0, 2),
            t in 1.0f64..4.0,
        ) {
            let mut input = AdmissibilityInput::new(alpha);
            for (k, &(n, m)) in [(1, 1), (1, 2), (2, 1), (2, 2)].iter().enumerate() {
                input = input.with_coefficient(n, m, d[k]);
            }
            for n in 0..2 {
                input = input.with_bounds(n + 1, lower[n], lower[n] * spread[n]);
            }
            let r = input.evaluate().unwrap();
            let diag: f64 = [(1, 0), (2, 3)]
                .iter()
                .map(|&(n, k)| d[k] * lower[n - 1] * lower[n - 1])
                .sum();
            prop_assert!(r.gamma_tilde <= gamma(alpha) * diag + 1e-15);

            let mut scaled = input.clone();
            for b in scaled.bounds.values_mut() {
                b.upper *= t;
            }
            prop_assert!(scaled.evaluate().unwrap().gamma_tilde <= r.gamma_tilde + 1e-15);
        }
    }

    #[test]
    fn pure_abel_always_admissible() {
        for k in 1..100 {
            let r = AdmissibilityInput::new(k as f64 / 100.0)
                .with_coefficient(1, 1, 1.0)
                .evaluate()
                .unwrap();
            assert!(r.admissible);
        }
    }
}
