//! Kernels, problem definitions and a high-accuracy evaluation of the
//! Abel-type operator
//!
//! ```text
//! (A f)(x) = (1/Γ(α)) ∫₀ˣ (x − y)^(α−1) K(x, y) f(y) dy.
//! ```
//!
//! The oracle substitutes `y = x t`, which turns the operator into
//! `x^α/Γ(α) ∫₀¹ (1 − t)^(α−1) K(x, xt) f(xt) dt`. The upper half of the
//! `t` range carries the `(1 − t)^(α−1)` singularity and is integrated with a
//! Gauss-Jacobi rule; the lower half is split geometrically towards `t = 0` so
//! that solutions with algebraic behaviour at the origin (`y^(3/2)`, …) are
//! resolved to machine precision as well.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{gamma, gauss_jacobi, gauss_legendre, QuadRule};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Default order of the oracle's Gauss-Jacobi rule.
pub const ORACLE_ORDER: usize = 40;
const ORACLE_LEVELS: i32 = 40;

/// `K(x, y) = Σ d_{n,m} ψ_n(x) ψ_m(y)` with finitely many terms.
#[derive(Clone)]
pub struct SeparableForm {
    /// `(n, m, d_{n,m})`, 1-based factor indices.
    pub coefficients: Vec<(usize, usize, f64)>,
    pub factors: BTreeMap<usize, ScalarFn>,
}

impl SeparableForm {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let psi = |n: usize, t: f64| self.factors.get(&n).map_or(1.0, |f| f(t));
        self.coefficients
            .iter()
            .map(|&(n, m, d)| d * psi(n, x) * psi(m, y))
            .sum()
    }
}

impl fmt::Debug for SeparableForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableForm")
            .field("coefficients", &self.coefficients)
            .field("factors", &self.factors.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// An analytic kernel on the triangle `0 ≤ y ≤ x ≤ 1` with
/// `‖K‖_{C^n} ≤ C_K Λ_K^n n!`.
#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    eval: KernelFn,
    pub c_k: f64,
    pub lambda_k: f64,
    pub separable: Option<SeparableForm>,
}

impl KernelSpec {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c_k: f64,
        lambda_k: f64,
    ) -> Result<Self> {
        if !(lambda_k >= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel analyticity scale {lambda_k} must be at least 2"
            )));
        }
        Ok(Self {
            name: name.into(),
            eval: Arc::new(eval),
            c_k,
            lambda_k,
            separable: None,
        })
    }

    /// `K ≡ 1`, the classical Abel kernel.
    pub fn unit() -> Self {
        let mut k = Self::new("one", |_, _| 1.0, 1.0, 2.0).unwrap();
        k.separable = Some(SeparableForm {
            coefficients: vec![(1, 1, 1.0)],
            factors: BTreeMap::new(),
        });
        k
    }

    /// `K(x, y) = 1 − (x + y)/10 − xy/10 = 11/10 − (1 + x)(1 + y)/10`.
    pub fn experiment() -> Self {
        let mut k = Self::new(
            "exp1",
            |x, y| 1.0 - (x + y) / 10.0 - x * y / 10.0,
            1.0,
            2.0,
        )
        .unwrap();
        let mut factors: BTreeMap<usize, ScalarFn> = BTreeMap::new();
        factors.insert(1, Arc::new(|_| 1.0));
        factors.insert(2, Arc::new(|x| 1.0 + x));
        k.separable = Some(SeparableForm {
            coefficients: vec![(1, 1, 11.0 / 10.0), (2, 2, -1.0 / 10.0)],
            factors,
        });
        k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("c_k", &self.c_k)
            .field("lambda_k", &self.lambda_k)
            .field("separable", &self.separable)
            .finish()
    }
}

/// Where a problem's right-hand side comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum RhsSource {
    ClosedForm,
    /// Closed form was rejected by the oracle check; `g` is sampled from the
    /// oracle instead. Carries the sup deviation of the rejected formula.
    Regenerated { rejected_sup_error: f64 },
    /// Manufactured from a prescribed solution through the oracle.
    Oracle,
}

/// An Abel-type equation `A_{K,α} f = g` on `(0, 1)`.
#[derive(Clone)]
pub struct AbelProblem {
    pub name: String,
    alpha: f64,
    pub kernel: KernelSpec,
    rhs: ScalarFn,
    pub rhs_source: RhsSource,
    pub c_g: f64,
    pub lambda_g: Option<f64>,
    exact: Option<ScalarFn>,
}

impl fmt::Debug for AbelProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbelProblem")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("kernel", &self.kernel)
            .field("rhs_source", &self.rhs_source)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

impl AbelProblem {
    pub fn new(
        name: impl Into<String>,
        alpha: f64,
        kernel: KernelSpec,
        rhs: impl Fn(f64) -> f64 + Send + Sync + 'static,
        exact: Option<ScalarFn>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            name: name.into(),
            alpha,
            kernel,
            rhs: Arc::new(rhs),
            rhs_source: RhsSource::ClosedForm,
            c_g: 1.0,
            lambda_g: None,
            exact,
        })
    }

    /// Right-hand side generated from `exact` through the operator oracle.
    pub fn manufactured(
        name: impl Into<String>,
        alpha: f64,
        kernel: KernelSpec,
        exact: ScalarFn,
    ) -> Result<Self> {
        let oracle = OperatorOracle::new(alpha, ORACLE_ORDER)?;
        let (k, f) = (kernel.clone(), exact.clone());
        let mut p = Self::new(
            name,
            alpha,
            kernel,
            move |x| oracle.apply(&k, &*f, x),
            Some(exact),
        )?;
        p.rhs_source = RhsSource::Oracle;
        Ok(p)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn rhs(&self, x: f64) -> f64 {
        (self.rhs)(x)
    }

    pub fn exact(&self) -> Option<&ScalarFn> {
        self.exact.as_ref()
    }

    /// `A f` at `x` through an oracle of order `n`.
    pub fn apply_operator(&self, f: impl Fn(f64) -> f64, x: f64, n: usize) -> Result<f64> {
        apply_operator(self.alpha, &self.kernel, f, x, n)
    }

    /// `sup |A f_exact − g|` over `samples` equispaced points in `(0, 1]`.
    pub fn rhs_consistency(&self, samples: usize) -> Result<f64> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("problem has no exact solution".into()))?;
        let oracle = OperatorOracle::new(self.alpha, ORACLE_ORDER)?;
        Ok(sup_deviation(&oracle, &self.kernel, &**exact, &*self.rhs, samples))
    }
}

fn sup_deviation(
    oracle: &OperatorOracle,
    kernel: &KernelSpec,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    samples: usize,
) -> f64 {
    (0..samples)
        .map(|k| {
            let x = (k + 1) as f64 / samples as f64;
            (oracle.apply(kernel, f, x) - g(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Reusable rules for evaluating the operator at many points.
#[derive(Debug, Clone)]
pub struct OperatorOracle {
    alpha: f64,
    prefactor: f64,
    upper: QuadRule,
    lower: QuadRule,
}

impl OperatorOracle {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if n == 0 {
            return Err(Error::ZeroOrder);
        }
        Ok(Self {
            alpha,
            prefactor: 1.0 / gamma(alpha),
            upper: gauss_jacobi(n, alpha - 1.0, 0.0)?,
            lower: gauss_legendre(n.clamp(8, 20))?,
        })
    }

    pub fn apply(&self, kernel: &KernelSpec, f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let integrand = |t: f64| kernel.eval(x, x * t) * f(x * t);
        let alpha = self.alpha;

        // t ∈ [1/2, 1], t = (1 + u)/2
        let mut sum = 0.5f64.powf(alpha) * self.upper.integrate(|u| integrand(0.5 + 0.5 * u));

        // t ∈ [0, 1/2], geometric cells towards 0
        let lower = |a: f64, b: f64| -> f64 {
            let h = b - a;
            self.lower
                .iter()
                .map(|(s, w)| {
                    let t = a + h * s;
                    w * (1.0 - t).powf(alpha - 1.0) * integrand(t)
                })
                .sum::<f64>()
                * h
        };
        for level in 1..=ORACLE_LEVELS {
            let b = 0.5f64.powi(level);
            sum += lower(0.5 * b, b);
        }
        sum += lower(0.0, 0.5f64.powi(ORACLE_LEVELS + 1));

        self.prefactor * x.powf(alpha) * sum
    }
}

/// `(A_{K,α} f)(x)` by an oracle of order `n`; `0` at `x = 0`.
pub fn apply_operator(
    alpha: f64,
    kernel: &KernelSpec,
    f: impl Fn(f64) -> f64,
    x: f64,
    n: usize,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain(x));
    }
    Ok(OperatorOracle::new(alpha, n)?.apply(kernel, &f, x))
}

/// `α = 1/2`, experiment kernel, `f(y) = y^(3/2)`.
pub fn experiment1() -> AbelProblem {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut p = AbelProblem::new(
        "exp1",
        0.5,
        KernelSpec::experiment(),
        move |x| -(sqrt_pi * x * x / 160.0) * (-60.0 + x * (11.0 + 5.0 * x)),
        Some(Arc::new(|y: f64| y.powf(1.5))),
    )
    .unwrap();
    p.lambda_g = Some(2.0);
    p
}

/// The printed closed form for [`experiment2`]'s right-hand side.
pub fn experiment2_printed_rhs(alpha: f64) -> impl Fn(f64) -> f64 + Send + Sync + Clone {
    use std::f64::consts::PI;
    let c = (2.0 - alpha) * (1.0 - alpha) * PI / (gamma(alpha) * (alpha * PI).sin());
    move |x| c * x * x * (30.0 - x * (6.0 - alpha + x * (3.0 - alpha)))
}

/// Experiment kernel with solution `f_α(y) = y^(2−α)`.
///
/// The printed right-hand side is checked against the oracle on 101 points;
/// if it deviates by more than `1e-8` the right-hand side is regenerated from
/// `f_α` through the oracle.
pub fn experiment2(alpha: f64) -> Result<AbelProblem> {
    check_alpha(alpha)?;
    let kernel = KernelSpec::experiment();
    let exact: ScalarFn = Arc::new(move |y: f64| y.powf(2.0 - alpha));
    let printed = experiment2_printed_rhs(alpha);
    let oracle = OperatorOracle::new(alpha, ORACLE_ORDER)?;
    let deviation = sup_deviation(&oracle, &kernel, &*exact, &printed, 101);
    let name = format!("exp2:alpha={alpha}");
    if deviation <= 1e-8 {
        let mut p = AbelProblem::new(name, alpha, kernel, printed, Some(exact))?;
        p.lambda_g = Some(2.0);
        return Ok(p);
    }
    let mut p = AbelProblem::manufactured(name, alpha, kernel, exact)?;
    p.rhs_source = RhsSource::Regenerated {
        rejected_sup_error: deviation,
    };
    Ok(p)
}

/// Prescribed solution of a manufactured problem.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionSpec {
    /// `y^p`
    Power(f64),
    /// `Σ c_k y^k`
    Poly(Vec<f64>),
}

impl SolutionSpec {
    pub fn to_fn(&self) -> ScalarFn {
        match self.clone() {
            SolutionSpec::Power(p) => Arc::new(move |y: f64| y.powf(p)),
            SolutionSpec::Poly(c) => {
                Arc::new(move |y: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * y + ck))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    One,
    Exp1,
}

impl KernelId {
    pub fn build(self) -> KernelSpec {
        match self {
            KernelId::One => KernelSpec::unit(),
            KernelId::Exp1 => KernelSpec::experiment(),
        }
    }
}

/// Problem names accepted by the command line:
/// `exp1`, `exp2:alpha=<v>` (or `exp2:α=<v>`) and
/// `manufactured:f=pow:<p>;alpha=<v>;kernel=one|exp1` (`f=poly:<c0>,<c1>,...`).
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemId {
    Exp1,
    Exp2 {
        alpha: Option<f64>,
    },
    Manufactured {
        solution: SolutionSpec,
        alpha: Option<f64>,
        kernel: KernelId,
    },
}

fn parse_alpha_value(v: &str) -> Result<f64> {
    let a: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad alpha `{v}`")))?;
    check_alpha(a)?;
    Ok(a)
}

fn parse_f64_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("bad coefficient `{c}`")))
        })
        .collect()
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("exp1", None) => Ok(ProblemId::Exp1),
            ("exp2", None) => Ok(ProblemId::Exp2 { alpha: None }),
            ("exp2", Some(r)) => {
                let (k, v) = r
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidArgument(format!("expected alpha=<v>, got `{r}`")))?;
                match k.trim() {
                    "alpha" | "α" => Ok(ProblemId::Exp2 {
                        alpha: Some(parse_alpha_value(v)?),
                    }),
                    other => Err(Error::InvalidArgument(format!("unknown exp2 parameter `{other}`"))),
                }
            }
            ("manufactured", Some(r)) => {
                let mut solution = None;
                let mut alpha = None;
                let mut kernel = KernelId::Exp1;
                for part in r.split(';').filter(|p| !p.trim().is_empty()) {
                    let (k, v) = part.split_once('=').ok_or_else(|| {
                        Error::InvalidArgument(format!("expected key=value, got `{part}`"))
                    })?;
                    match k.trim() {
                        "f" => {
                            let v = v.trim();
                            solution = Some(if let Some(p) = v.strip_prefix("pow:") {
                                let p: f64 = p.trim().parse().map_err(|_| {
                                    Error::InvalidArgument(format!("bad exponent `{p}`"))
                                })?;
                                if !(p >= 0.0 && p.is_finite()) {
                                    return Err(Error::InvalidArgument(format!(
                                        "exponent {p} must be non-negative"
                                    )));
                                }
                                SolutionSpec::Power(p)
                            } else if let Some(c) = v.strip_prefix("poly:") {
                                SolutionSpec::Poly(parse_f64_list(c)?)
                            } else {
                                return Err(Error::InvalidArgument(format!(
                                    "solution `{v}` is not pow:<p> or poly:<c0>,<c1>,..."
                                )));
                            });
                        }
                        "alpha" | "α" => alpha = Some(parse_alpha_value(v)?),
                        "kernel" => {
                            kernel = match v.trim() {
                                "one" => KernelId::One,
                                "exp1" => KernelId::Exp1,
                                other => {
                                    return Err(Error::InvalidArgument(format!(
                                        "unknown kernel `{other}`"
                                    )))
                                }
                            }
                        }
                        other => {
                            return Err(Error::InvalidArgument(format!(
                                "unknown manufactured parameter `{other}`"
                            )))
                        }
                    }
                }
                let solution = solution.ok_or_else(|| {
                    Error::InvalidArgument("manufactured problem needs f=...".into())
                })?;
                Ok(ProblemId::Manufactured {
                    solution,
                    alpha,
                    kernel,
                })
            }
            _ => Err(Error::InvalidArgument(format!("unknown problem `{s}`"))),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::Exp1 => write!(f, "exp1"),
            ProblemId::Exp2 { alpha: None } => write!(f, "exp2"),
            ProblemId::Exp2 { alpha: Some(a) } => write!(f, "exp2:alpha={a}"),
            ProblemId::Manufactured {
                solution,
                alpha,
                kernel,
            } => {
                write!(f, "manufactured:")?;
                match solution {
                    SolutionSpec::Power(p) => write!(f, "f=pow:{p}")?,
                    SolutionSpec::Poly(c) => {
                        let c: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                        write!(f, "f=poly:{}", c.join(","))?
                    }
                }
                if let Some(a) = alpha {
                    write!(f, ";alpha={a}")?;
                }
                let k = match kernel {
                    KernelId::One => "one",
                    KernelId::Exp1 => "exp1",
                };
                write!(f, ";kernel={k}")
            }
        }
    }
}

impl ProblemId {
    /// The singularity order fixed by the id, if any.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            ProblemId::Exp1 => Some(0.5),
            ProblemId::Exp2 { alpha } | ProblemId::Manufactured { alpha, .. } => *alpha,
        }
    }

    /// Same problem family with a different singularity order.
    pub fn with_alpha(&self, a: f64) -> Result<ProblemId> {
        check_alpha(a)?;
        Ok(match self.clone() {
            ProblemId::Exp1 => {
                return Err(Error::InvalidArgument(
                    "exp1 has a fixed alpha = 0.5".into(),
                ))
            }
            ProblemId::Exp2 { .. } => ProblemId::Exp2 { alpha: Some(a) },
            ProblemId::Manufactured {
                solution, kernel, ..
            } => ProblemId::Manufactured {
                solution,
                alpha: Some(a),
                kernel,
            },
        })
    }

    pub fn build(&self) -> Result<AbelProblem> {
        match self {
            ProblemId::Exp1 => Ok(experiment1()),
            ProblemId::Exp2 { alpha } => experiment2(alpha.ok_or_else(|| {
                Error::InvalidArgument("exp2 needs an alpha".into())
            })?),
            ProblemId::Manufactured {
                solution,
                alpha,
                kernel,
            } => AbelProblem::manufactured(
                self.to_string(),
                alpha.unwrap_or(0.5),
                kernel.build(),
                solution.to_fn(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_density() {
        let v = apply_operator(0.5, &KernelSpec::unit(), |_| 1.0, 1.0, ORACLE_ORDER).unwrap();
        assert!((v - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-13);
        assert!((v - 1.0 / gamma(1.5)).abs() < 1e-13);
    }

    #[test]
    fn linear_density() {
        for &alpha in &[0.1, 0.5, 0.9] {
            for &x in &[0.1, 0.5, 1.0] {
                let v = apply_operator(alpha, &KernelSpec::unit(), |y| y, x, ORACLE_ORDER).unwrap();
                let expect = x.powf(alpha + 1.0) / gamma(alpha + 2.0);
                assert!((v - expect).abs() < 1e-13, "alpha={alpha} x={x}");
            }
        }
    }

    #[test]
    fn origin_and_domain() {
        assert_eq!(
            apply_operator(0.3, &KernelSpec::unit(), |y| y + 3.0, 0.0, 10).unwrap(),
            0.0
        );
        assert!(apply_operator(0.3, &KernelSpec::unit(), |y| y, 1.5, 10).is_err());
        assert!(apply_operator(1.3, &KernelSpec::unit(), |y| y, 0.5, 10).is_err());
        assert!(apply_operator(0.3, &KernelSpec::unit(), |y| y, 0.5, 0).is_err());
    }

    #[test]
    fn experiment1_values() {
        let p = experiment1();
        let exact = p.exact().unwrap();
        assert!((exact(0.25) - 0.125).abs() < 1e-15);
        let g1 = 44.0 * std::f64::consts::PI.sqrt() / 160.0;
        assert!((p.rhs(1.0) - g1).abs() < 1e-15);
        assert!((p.rhs(1.0) - 0.4874).abs() < 1e-3);
        assert!(p.rhs_consistency(101).unwrap() <= 1e-8);
    }

    #[test]
    fn experiment2_rhs_is_validated() {
        for k in 1..=9 {
            let alpha = k as f64 / 10.0;
            let p = experiment2(alpha).unwrap();
            let exact = p.exact().unwrap();
            assert_eq!(exact(1.0), 1.0);
            assert!(p.rhs_consistency(101).unwrap() <= 1e-8, "alpha={alpha}");
        }
        let p = experiment2(0.5).unwrap();
        assert!((p.exact().unwrap()(0.25) - 0.125).abs() < 1e-15);
    }

    /// Beta-function identities give
    /// `A f_α = Γ(3−α)/60 · x² (30 − x(6 − α + x(3 − α)))`; the printed
    /// closed form is exactly 60 times that.
    #[test]
    fn experiment2_printed_formula_scale() {
        for &alpha in &[0.2, 0.5, 0.8] {
            let printed = experiment2_printed_rhs(alpha);
            let p = experiment2(alpha).unwrap();
            assert!(matches!(p.rhs_source, RhsSource::Regenerated { .. }));
            let derived = |x: f64| {
                gamma(3.0 - alpha) / 60.0 * x * x * (30.0 - x * (6.0 - alpha + x * (3.0 - alpha)))
            };
            for &x in &[0.2, 0.7, 1.0] {
                assert!((p.rhs(x) - derived(x)).abs() < 1e-12);
                assert!((printed(x) / derived(x) - 60.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn separable_forms_match() {
        for k in [KernelSpec::unit(), KernelSpec::experiment()] {
            let sep = k.separable.clone().unwrap();
            for &(x, y) in &[(0.0, 0.0), (0.3, 0.1), (1.0, 0.7), (1.0, 1.0)] {
                assert!((sep.eval(x, y) - k.eval(x, y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn oracle_order_convergence() {
        let p = experiment1();
        let f = p.exact().unwrap().clone();
        for &x in &[0.05, 0.3, 0.77, 1.0] {
            let a = p.apply_operator(&*f, x, ORACLE_ORDER).unwrap();
            let b = p.apply_operator(&*f, x, ORACLE_ORDER + 10).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn problem_ids() {
        assert_eq!("exp1".parse::<ProblemId>().unwrap(), ProblemId::Exp1);
        assert_eq!(
            "exp2:alpha=0.3".parse::<ProblemId>().unwrap(),
            ProblemId::Exp2 { alpha: Some(0.3) }
        );
        assert_eq!(
            "exp2:α=0.7".parse::<ProblemId>().unwrap(),
            ProblemId::Exp2 { alpha: Some(0.7) }
        );
        assert!("exp2:alpha=1.0".parse::<ProblemId>().is_err());
        assert!("exp3".parse::<ProblemId>().is_err());
        let id: ProblemId = "manufactured:f=poly:1,0,2;alpha=0.4;kernel=one".parse().unwrap();
        assert_eq!(
            id,
            ProblemId::Manufactured {
                solution: SolutionSpec::Poly(vec![1.0, 0.0, 2.0]),
                alpha: Some(0.4),
                kernel: KernelId::One
            }
        );
        assert_eq!(id.to_string().parse::<ProblemId>().unwrap(), id);
        assert!("manufactured:alpha=0.4".parse::<ProblemId>().is_err());
        assert!("manufactured:f=sin".parse::<ProblemId>().is_err());
        assert!("manufactured:f=pow:-1".parse::<ProblemId>().is_err());
    }

    #[test]
    fn manufactured_problem_is_consistent() {
        let id: ProblemId = "manufactured:f=pow:2.5;alpha=0.3".parse().unwrap();
        let p = id.build().unwrap();
        assert_eq!(p.rhs_source, RhsSource::Oracle);
        assert!((p.alpha() - 0.3).abs() < 1e-15);
        assert!(p.rhs_consistency(21).unwrap() < 1e-14);
    }

    proptest! {
        #[test]
        fn oracle_is_linear(
            x in 0.01f64..1.0,
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
            alpha in 0.05f64..0.95,
        ) {
            let k = KernelSpec::experiment();
            let f = |y: f64| (3.0 * y).sin();
            let g = |y: f64| y.powf(1.5) + 1.0;
            let lhs = apply_operator(alpha, &k, |y| a * f(y) + b * g(y), x, 20).unwrap();
            let rhs = a * apply_operator(alpha, &k, f, x, 20).unwrap()
                + b * apply_operator(alpha, &k, g, x, 20).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn monomial_moments(k in 0i32..=6, x in 0.0f64..=1.0, ai in 0usize..3) {
            let alpha = [0.1, 0.5, 0.9][ai];
            let v = apply_operator(alpha, &KernelSpec::unit(), |y| y.powi(k), x, ORACLE_ORDER).unwrap();
            let expect = x.powf(alpha + k as f64) * gamma(k as f64 + 1.0) / gamma(alpha + k as f64 + 1.0);
            prop_assert!((v - expect).abs() < 1e-10);
        }
    }
}
