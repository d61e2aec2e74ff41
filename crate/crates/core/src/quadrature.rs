//! Gauss rules on `[0, 1]` and the quadrature-order policy.
//!
//! Rules are produced from the three-term recurrence of the Jacobi
//! polynomials orthogonal for `(1 - x)^a x^b` on `[0, 1]`: the nodes are the
//! eigenvalues of the symmetric tridiagonal Jacobi matrix, refined by Newton
//! steps on the orthonormal recurrence, and the weights come from the
//! Christoffel function at the refined nodes.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub use statrs::function::gamma::gamma;

/// `B(a, b) = Γ(a) Γ(b) / Γ(a + b)`; log-Gamma for large arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    if a + b < 100.0 {
        return gamma(a) * gamma(b) / gamma(a + b);
    }
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Legendre,
    /// Weight `(1 - x)^a x^b` on `[0, 1]`.
    Jacobi { a: f64, b: f64 },
}

/// A Gauss rule: `∫ w(x) f(x) dx ≈ Σ_k weights[k] f(nodes[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: RuleKind,
}

impl QuadRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Affine image of a Legendre rule on `[a, b]`.
    pub fn map_to(&self, a: f64, b: f64) -> Result<QuadRule> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInterval(a, b));
        }
        if self.kind != RuleKind::Legendre {
            return Err(Error::InvalidArgument(
                "only Legendre rules can be mapped affinely".into(),
            ));
        }
        let h = b - a;
        Ok(QuadRule {
            nodes: self.nodes.iter().map(|x| a + h * x).collect(),
            weights: self.weights.iter().map(|w| h * w).collect(),
            kind: RuleKind::Legendre,
        })
    }
}

/// Free-function form of [`QuadRule::map_to`].
pub fn map_rule(rule: &QuadRule, a: f64, b: f64) -> Result<QuadRule> {
    rule.map_to(a, b)
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    let mut rule = gauss_jacobi(n, 0.0, 0.0)?;
    rule.kind = RuleKind::Legendre;
    // enforce the reflection symmetry exactly
    for k in 0..n / 2 {
        let j = n - 1 - k;
        let x = 0.5 * (rule.nodes[k] + 1.0 - rule.nodes[j]);
        let w = 0.5 * (rule.weights[k] + rule.weights[j]);
        rule.nodes[k] = x;
        rule.nodes[j] = 1.0 - x;
        rule.weights[k] = w;
        rule.weights[j] = w;
    }
    if n % 2 == 1 {
        rule.nodes[n / 2] = 0.5;
    }
    Ok(rule)
}

/// Recurrence coefficients of the orthonormal polynomials for
/// `(1 - x)^a x^b` on `[0, 1]`: `diag[k]` for `k < n` and `off[k]` coupling
/// degrees `k - 1` and `k` for `1 <= k <= n` (`off[0]` unused).
fn recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let diag = (0..n)
        .map(|k| {
            let t = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let s = 2.0 * k as f64 + ab;
                (b * b - a * a) / (s * (s + 2.0))
            };
            0.5 * (1.0 + t)
        })
        .collect();
    let off = (0..=n)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            let sq = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            0.5 * sq.sqrt()
        })
        .collect();
    (diag, off)
}

/// Orthonormal polynomial values `p_0..p_n` at `x` (with `p_0 = 1`) and the
/// derivative of `p_n`.
fn orthonormal_values(x: f64, diag: &[f64], off: &[f64], values: &mut Vec<f64>) -> f64 {
    let n = diag.len();
    values.clear();
    values.push(1.0);
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let p_next = ((x - diag[k]) * p - off[k] * p_prev) / off[k + 1];
        let d_next = (p + (x - diag[k]) * d - off[k] * d_prev) / off[k + 1];
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        values.push(p);
    }
    d
}

/// `n`-point Gauss-Jacobi rule for the weight `(1 - x)^a x^b` on `[0, 1]`.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadRule> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if !(a > -1.0 && b > -1.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidExponent { a, b });
    }
    let (diag, off) = recurrence(n, a, b);
    let mass = if a == 0.0 && b == 0.0 {
        1.0
    } else {
        beta(a + 1.0, b + 1.0)
    };

    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[j]
        } else if j + 1 == i {
            off[i]
        } else {
            0.0
        }
    });
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(|x, y| x.total_cmp(y));

    let mut values = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let dp = orthonormal_values(*x, &diag, &off, &mut values);
            let step = values[n] / dp;
            let candidate = *x - step;
            if !step.is_finite() || candidate <= 0.0 || candidate >= 1.0 {
                break;
            }
            *x = candidate;
            if step.abs() <= 1e-17 * x.abs().max(1e-300) {
                break;
            }
        }
        orthonormal_values(*x, &diag, &off, &mut values);
        let christoffel: f64 = values[..n].iter().map(|p| p * p).sum();
        weights.push(mass / christoffel);
    }

    Ok(QuadRule {
        nodes,
        weights,
        kind: RuleKind::Jacobi { a, b },
    })
}

/// How separated panel pairs choose their tensor-Gauss order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMode {
    /// Distance-dependent order with prefactor `s_i = m + i + α/4`,
    /// `i ∈ 1..=5`; `i = 2` is the recommended choice.
    Adaptive(u8),
    /// The same order for every separated pair.
    Fixed(usize),
}

impl Default for OrderMode {
    fn default() -> Self {
        OrderMode::Adaptive(2)
    }
}

impl fmt::Display for OrderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderMode::Adaptive(i) => write!(f, "s{i}"),
            OrderMode::Fixed(n) => write!(f, "fixed:{n}"),
        }
    }
}

impl FromStr for OrderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("fixed:") {
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad fixed order `{rest}`")))?;
            if n == 0 {
                return Err(Error::ZeroOrder);
            }
            return Ok(OrderMode::Fixed(n));
        }
        if let Some(rest) = s.strip_prefix('s') {
            if let Ok(i) = rest.parse::<u8>() {
                if (1..=5).contains(&i) {
                    return Ok(OrderMode::Adaptive(i));
                }
            }
        }
        Err(Error::InvalidArgument(format!(
            "order mode `{s}` is not one of s1..s5 or fixed:<n>"
        )))
    }
}

pub const DEFAULT_N_MAX: usize = 25;

/// Quadrature orders for every panel-pair case and for the load vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPolicy {
    pub degree: usize,
    pub alpha: f64,
    pub lambda_k: f64,
    /// Global mesh width entering `log(1/h)`.
    pub h: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub mode: OrderMode,
    /// Order of both Gauss-Jacobi rules on identical panels.
    pub singular_order: usize,
    /// Order of the Gauss-Jacobi rule in the radial Duffy variable.
    pub adjacent_radial_order: usize,
    /// Order of the Gauss-Legendre rule in the angular Duffy variable.
    pub adjacent_angular_order: usize,
    /// Gauss-Legendre order per element for the load vector.
    pub rhs_order: usize,
}

impl QuadPolicy {
    pub fn new(degree: usize, alpha: f64, lambda_k: f64, h: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(lambda_k >= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel analyticity scale {lambda_k} must be at least 2"
            )));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidArgument(format!("mesh width {h} not in (0, 1]")));
        }
        let n_min = degree / 2 + 1;
        let near = n_min.max(degree + 3);
        Ok(Self {
            degree,
            alpha,
            lambda_k,
            h,
            n_min,
            n_max: DEFAULT_N_MAX.max(n_min),
            mode: OrderMode::default(),
            singular_order: near,
            adjacent_radial_order: near,
            adjacent_angular_order: near + 8,
            rhs_order: ceil_tol(degree as f64 + alpha / 2.0 + 0.75).max(n_min),
        })
    }

    pub fn with_mode(mut self, mode: OrderMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        if n_max < self.n_min {
            return Err(Error::InvalidArgument(format!(
                "n_max = {n_max} below the minimal order {}",
                self.n_min
            )));
        }
        self.n_max = n_max;
        Ok(self)
    }

    /// Every order, including the singular and adjacent ones, multiplied by `factor`.
    pub fn scaled_orders(mut self, factor: usize) -> Self {
        self.singular_order *= factor;
        self.adjacent_radial_order *= factor;
        self.adjacent_angular_order *= factor;
        self.rhs_order *= factor;
        self.n_max *= factor;
        if let OrderMode::Fixed(n) = self.mode {
            self.mode = OrderMode::Fixed(n * factor);
        }
        self
    }

    /// `s_i = m + i + α/4`; for fixed modes the recommended `s_2`.
    pub fn prefactor(&self) -> f64 {
        let i = match self.mode {
            OrderMode::Adaptive(i) => i as f64,
            OrderMode::Fixed(_) => 2.0,
        };
        self.degree as f64 + i + self.alpha / 4.0
    }

    /// Tensor-Gauss order for a pair of panels at distance `dist` whose
    /// larger width is `h_pair`.
    ///
    /// Pairs closer than `Λ_K h_pair` use the same formula with the
    /// logarithm in the denominator floored at `log 2`, plus one point.
    pub fn select_order_regular(&self, dist: f64, h_pair: f64) -> Result<usize> {
        if !(dist > 0.0) {
            return Err(Error::NonPositiveDistance(dist));
        }
        let n = match self.mode {
            OrderMode::Fixed(n) => n.max(self.n_min),
            OrderMode::Adaptive(_) => {
                let near = dist < self.lambda_k * h_pair;
                let ratio = 2.0 / self.lambda_k * dist / h_pair;
                let denom = ratio.ln().max(std::f64::consts::LN_2);
                let raw = self.prefactor() * (1.0 / self.h).ln() / denom;
                (ceil_tol(raw) + usize::from(near)).clamp(self.n_min, self.n_max)
            }
        };
        Ok(n)
    }

    /// Gauss order for the load vector, `⌈m + α/2 + 3/4⌉`.
    pub fn select_order_rhs(&self) -> usize {
        self.rhs_order
    }
}

/// Ceiling that ignores round-off just above an integer.
fn ceil_tol(x: f64) -> usize {
    let c = (x - 1e-12 * x.abs().max(1.0)).ceil();
    if c <= 0.0 {
        0
    } else {
        c as usize
    }
}
