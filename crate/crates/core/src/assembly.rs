//! Assembly of the Galerkin matrix `a_ij = (A b_j, b_i)` and the load vector
//! `r_i = (g, b_i)`.
//!
//! Entries are accumulated panel pair by panel pair. For a test panel `τ` and
//! a trial panel `σ` to its left there are three cases:
//!
//! * `σ = τ`: the weakly singular diagonal is removed by the coordinates
//!   `x = a + hξ`, `y = a + hξη`, leaving the weights `ξ^α` and `(1 − η)^(α−1)`
//!   for two Gauss-Jacobi rules.
//! * `σ` touches `τ`: two Duffy maps collapse the corner singularity into a
//!   radial weight `u^α` with a smooth angular factor.
//! * otherwise the integrand is analytic and a tensor Gauss-Legendre rule of
//!   distance-dependent order is used.
//!
//! Pairs with `σ` to the right of `τ` contribute nothing, since the operator
//! only looks left.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{FeSpace, LocalPoly};
use crate::operator::{AbelProblem, KernelSpec};
use crate::quadrature::{gamma, gauss_jacobi, gauss_legendre, QuadPolicy, QuadRule};
use crate::solve::DenseMatrix;

/// An element `[start, start + width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub start: f64,
    pub width: f64,
}

impl Panel {
    pub fn new(start: f64, width: f64) -> Self {
        Self { start, width }
    }

    pub fn end(&self) -> f64 {
        self.start + self.width
    }
}

/// A rule with the local shape functions tabulated at its nodes.
#[derive(Debug, Clone)]
struct Tabulated {
    rule: QuadRule,
    /// `shape[j * n + k] = φ_j(node_k)`
    shape: Vec<f64>,
}

impl Tabulated {
    fn new(rule: QuadRule, shapes: &[LocalPoly]) -> Self {
        let shape = shapes
            .iter()
            .flat_map(|p| rule.nodes().iter().map(|&s| p.eval(s)).collect::<Vec<_>>())
            .collect();
        Self { rule, shape }
    }

    fn len(&self) -> usize {
        self.rule.len()
    }

    #[inline]
    fn phi(&self, j: usize, k: usize) -> f64 {
        self.shape[j * self.rule.len() + k]
    }
}

/// Quadrature rules for all three panel-pair cases, built once per assembly.
#[derive(Debug, Clone)]
pub struct PanelIntegrator {
    alpha: f64,
    inv_gamma: f64,
    shapes: Vec<LocalPoly>,
    singular_xi: Tabulated,
    singular_eta: QuadRule,
    radial: QuadRule,
    angular: QuadRule,
    regular: Vec<Option<Tabulated>>,
}

impl PanelIntegrator {
    /// `regular_orders` lists the tensor orders to prepare for separated pairs;
    /// other orders are built on demand.
    pub fn new(
        alpha: f64,
        shapes: &[LocalPoly],
        singular: (usize, usize),
        adjacent: (usize, usize),
        regular_orders: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        crate::operator::check_alpha(alpha)?;
        let mut regular: Vec<Option<Tabulated>> = Vec::new();
        for n in regular_orders {
            if n == 0 {
                return Err(Error::ZeroOrder);
            }
            if regular.len() <= n {
                regular.resize(n + 1, None);
            }
            if regular[n].is_none() {
                regular[n] = Some(Tabulated::new(gauss_legendre(n)?, shapes));
            }
        }
        Ok(Self {
            alpha,
            inv_gamma: 1.0 / gamma(alpha),
            shapes: shapes.to_vec(),
            singular_xi: Tabulated::new(gauss_jacobi(singular.0, 0.0, alpha)?, shapes),
            singular_eta: gauss_jacobi(singular.1, alpha - 1.0, 0.0)?,
            radial: gauss_jacobi(adjacent.0, 0.0, alpha)?,
            angular: gauss_legendre(adjacent.1)?,
            regular,
        })
    }

    /// Rules chosen by `policy` for the shapes of `space`.
    pub fn from_policy(space: &FeSpace, policy: &QuadPolicy) -> Result<Self> {
        let lo = policy.n_min;
        let hi = policy.n_max.max(lo);
        let mut orders: Vec<usize> = (lo..=hi).collect();
        if let crate::quadrature::OrderMode::Fixed(n) = policy.mode {
            orders.push(n.max(lo));
        }
        Self::new(
            policy.alpha,
            space.reference_basis(),
            (policy.singular_order, policy.singular_order),
            (policy.adjacent_radial_order, policy.adjacent_angular_order),
            orders,
        )
    }

    fn local_dim(&self) -> usize {
        self.shapes.len()
    }

    /// Local block `[i][j] = (1/Γ(α)) ∫_τ φ_i(x) ∫_τ^{y<x} (x−y)^(α−1) K φ_j(y)`.
    pub fn identical(&self, tau: Panel, kernel: &KernelSpec) -> Vec<f64> {
        let l = self.local_dim();
        let (a, h) = (tau.start, tau.width);
        let xi = &self.singular_xi;
        let mut block = vec![0.0; l * l];
        let mut phi_y = vec![0.0; l];
        for (k, (sx, wx)) in xi.rule.iter().enumerate() {
            let x = a + h * sx;
            for (se, we) in self.singular_eta.iter() {
                let sy = sx * se;
                let w = wx * we * kernel.eval(x, a + h * sy);
                for (j, p) in self.shapes.iter().enumerate() {
                    phi_y[j] = w * p.eval(sy);
                }
                for i in 0..l {
                    let pi = xi.phi(i, k);
                    for j in 0..l {
                        block[i * l + j] += pi * phi_y[j];
                    }
                }
            }
        }
        let scale = h.powf(self.alpha + 1.0) * self.inv_gamma;
        block.iter_mut().for_each(|v| *v *= scale);
        block
    }

    /// `σ` ends where `τ` starts.
    pub fn adjacent(&self, tau: Panel, sigma: Panel, kernel: &KernelSpec) -> Result<Vec<f64>> {
        let c = tau.start;
        let gap = c - sigma.end();
        let tol = 1e-12 * tau.width.max(sigma.width);
        if gap.abs() > tol {
            return Err(if gap < 0.0 && sigma.start < c {
                Error::PanelsOverlap
            } else {
                Error::PanelsNotTouching
            });
        }
        let l = self.local_dim();
        let (ht, hs) = (tau.width, sigma.width);
        let am1 = self.alpha - 1.0;
        let mut block = vec![0.0; l * l];
        let mut px = vec![0.0; l];
        let mut py = vec![0.0; l];
        let mut accumulate = |w: f64, sx: f64, sy: f64, x: f64, y: f64| {
            let w = w * kernel.eval(x, y);
            for (j, p) in self.shapes.iter().enumerate() {
                px[j] = p.eval(sx);
                py[j] = w * p.eval(sy);
            }
            for i in 0..l {
                for j in 0..l {
                    block[i * l + j] += px[i] * py[j];
                }
            }
        };
        for (u, wu) in self.radial.iter() {
            for (v, wv) in self.angular.iter() {
                let uv = u * v;
                // test coordinate is the larger one
                let w = wu * wv * (ht + hs * v).powf(am1);
                accumulate(w, u, 1.0 - uv, c + ht * u, c - hs * uv);
                // trial coordinate is the larger one
                let w = wu * wv * (ht * v + hs).powf(am1);
                accumulate(w, uv, 1.0 - u, c + ht * uv, c - hs * u);
            }
        }
        let scale = ht * hs * self.inv_gamma;
        block.iter_mut().for_each(|v| *v *= scale);
        Ok(block)
    }

    /// `σ` lies strictly to the left of `τ`; tensor Gauss-Legendre of order `n`.
    pub fn separated(
        &self,
        tau: Panel,
        sigma: Panel,
        kernel: &KernelSpec,
        n: usize,
    ) -> Result<Vec<f64>> {
        let gap = tau.start - sigma.end();
        if !(gap > 0.0) {
            return Err(Error::NonPositiveDistance(gap));
        }
        let built;
        let tab = match self.regular.get(n).and_then(Option::as_ref) {
            Some(t) => t,
            None => {
                if n == 0 {
                    return Err(Error::ZeroOrder);
                }
                built = Tabulated::new(gauss_legendre(n)?, &self.shapes);
                &built
            }
        };
        let l = self.local_dim();
        let (ht, hs) = (tau.width, sigma.width);
        let am1 = self.alpha - 1.0;
        let nodes = tab.rule.nodes();
        let weights = tab.rule.weights();
        let q = tab.len();
        let mut block = vec![0.0; l * l];
        // inner[j] = Σ_l w_l (x−y_l)^(α−1) K(x, y_l) φ_j(y_l) for fixed x
        let mut inner = vec![0.0; l];
        for k in 0..q {
            let x = tau.start + ht * nodes[k];
            inner.iter_mut().for_each(|v| *v = 0.0);
            for m in 0..q {
                let d = gap + ht * nodes[k] + hs * (1.0 - nodes[m]);
                let w = weights[m] * d.powf(am1) * kernel.eval(x, sigma.start + hs * nodes[m]);
                for (j, v) in inner.iter_mut().enumerate() {
                    *v += w * tab.phi(j, m);
                }
            }
            for i in 0..l {
                let pi = weights[k] * tab.phi(i, k);
                for j in 0..l {
                    block[i * l + j] += pi * inner[j];
                }
            }
        }
        let scale = ht * hs * self.inv_gamma;
        block.iter_mut().for_each(|v| *v *= scale);
        Ok(block)
    }
}

fn panel(space: &FeSpace, e: usize) -> Panel {
    let (a, h) = space.mesh().element(e);
    Panel::new(a, h)
}

fn local_entry(space: &FeSpace, i: usize, e: usize) -> Result<usize> {
    let dim = space.dim();
    if i >= dim {
        return Err(Error::IndexOutOfRange { index: i, dim });
    }
    (0..space.local_dim())
        .find(|&j| space.global_index(e, j) == i)
        .ok_or_else(|| Error::InvalidArgument(format!("basis {i} does not live on element {e}")))
}

/// Contribution of the identical pair `(τ, τ)` to `a_ij`.
pub fn integrate_identical(
    space: &FeSpace,
    tau: usize,
    i: usize,
    j: usize,
    problem: &AbelProblem,
    orders: (usize, usize),
) -> Result<f64> {
    let (li, lj) = (local_entry(space, i, tau)?, local_entry(space, j, tau)?);
    let pi = PanelIntegrator::new(problem.alpha(), space.reference_basis(), orders, (1, 1), [])?;
    let b = pi.identical(panel(space, tau), &problem.kernel);
    Ok(b[li * space.local_dim() + lj])
}

/// Contribution of the touching pair `(τ, σ)`, `σ` left of `τ`, to `a_ij`.
pub fn integrate_adjacent(
    space: &FeSpace,
    tau: usize,
    sigma: usize,
    i: usize,
    j: usize,
    problem: &AbelProblem,
    orders: (usize, usize),
) -> Result<f64> {
    let (li, lj) = (local_entry(space, i, tau)?, local_entry(space, j, sigma)?);
    let pi = PanelIntegrator::new(problem.alpha(), space.reference_basis(), (1, 1), orders, [])?;
    let b = pi.adjacent(panel(space, tau), panel(space, sigma), &problem.kernel)?;
    Ok(b[li * space.local_dim() + lj])
}

/// Contribution of a separated pair `(τ, σ)` to `a_ij` with tensor order `n`.
pub fn integrate_separated(
    space: &FeSpace,
    tau: usize,
    sigma: usize,
    i: usize,
    j: usize,
    problem: &AbelProblem,
    n: usize,
) -> Result<f64> {
    let (li, lj) = (local_entry(space, i, tau)?, local_entry(space, j, sigma)?);
    let pi = PanelIntegrator::new(problem.alpha(), space.reference_basis(), (1, 1), (1, 1), [n])?;
    let b = pi.separated(panel(space, tau), panel(space, sigma), &problem.kernel, n)?;
    Ok(b[li * space.local_dim() + lj])
}

/// Entries known to vanish: row `i` is zero from column `first_zero(i)` on,
/// where every trial support lies to the right of the test support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroPattern {
    first_zero: Vec<usize>,
}

impl ZeroPattern {
    pub fn new(space: &FeSpace) -> Self {
        let dim = space.dim();
        let first_elem: Vec<usize> = (0..dim).map(|j| space.support(j).unwrap().0).collect();
        let first_zero = (0..dim)
            .map(|i| {
                let last = space.support(i).unwrap().1;
                first_elem.partition_point(|&e| e <= last)
            })
            .collect();
        Self { first_zero }
    }

    pub fn first_zero(&self, row: usize) -> usize {
        self.first_zero[row]
    }

    pub fn is_zero(&self, i: usize, j: usize) -> bool {
        j >= self.first_zero[i]
    }

    /// Number of structurally zero entries.
    pub fn count(&self) -> usize {
        let dim = self.first_zero.len();
        self.first_zero.iter().map(|&f| dim - f).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    pub identical_pairs: usize,
    pub adjacent_pairs: usize,
    pub separated_pairs: usize,
    /// Pairs with the trial panel to the right, never evaluated.
    pub skipped_pairs: usize,
    pub kernel_evaluations: u64,
    pub max_separated_order: usize,
}

#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub zero_pattern: ZeroPattern,
    pub stats: AssemblyStats,
    pub policy: QuadPolicy,
}

/// Test elements handed to the thread pool at once.
const BATCH: usize = 256;

/// `(L rows × columns 0..cols)` contribution of one test element.
struct Strip {
    cols: usize,
    data: Vec<f64>,
    stats: AssemblyStats,
}

fn element_strip(
    space: &FeSpace,
    integ: &PanelIntegrator,
    policy: &QuadPolicy,
    kernel: &KernelSpec,
    t: usize,
) -> Result<Strip> {
    let l = space.local_dim();
    let cols = space.global_index(t, l - 1) + 1;
    let mut data = vec![0.0; l * cols];
    let mut stats = AssemblyStats::default();
    let tau = panel(space, t);
    let nr = integ.radial.len() as u64;
    let na = integ.angular.len() as u64;
    let ns = (integ.singular_xi.len() * integ.singular_eta.len()) as u64;
    for s in 0..=t {
        let sigma = panel(space, s);
        let block = if s == t {
            stats.identical_pairs += 1;
            stats.kernel_evaluations += ns;
            integ.identical(tau, kernel)
        } else if s + 1 == t {
            stats.adjacent_pairs += 1;
            stats.kernel_evaluations += 2 * nr * na;
            integ.adjacent(tau, sigma, kernel)?
        } else {
            let dist = tau.start - sigma.end();
            let n = policy.select_order_regular(dist, tau.width.max(sigma.width))?;
            stats.separated_pairs += 1;
            stats.kernel_evaluations += (n * n) as u64;
            stats.max_separated_order = stats.max_separated_order.max(n);
            integ.separated(tau, sigma, kernel, n)?
        };
        for i in 0..l {
            for j in 0..l {
                data[i * cols + space.global_index(s, j)] += block[i * l + j];
            }
        }
    }
    let n = space.mesh().num_elements();
    stats.skipped_pairs = n - 1 - t;
    Ok(Strip { cols, data, stats })
}

/// Galerkin matrix only. Runs on the current rayon pool; the result does not
/// depend on the number of threads.
pub fn assemble_matrix(
    space: &FeSpace,
    kernel: &KernelSpec,
    policy: &QuadPolicy,
) -> Result<(DenseMatrix, AssemblyStats)> {
    let integ = PanelIntegrator::from_policy(space, policy)?;
    let dim = space.dim();
    let l = space.local_dim();
    let n = space.mesh().num_elements();
    let mut matrix = DenseMatrix::zeros(dim, dim);
    let mut stats = AssemblyStats::default();
    for start in (0..n).step_by(BATCH) {
        let end = (start + BATCH).min(n);
        let strips: Vec<Result<Strip>> = (start..end)
            .into_par_iter()
            .map(|t| element_strip(space, &integ, policy, kernel, t))
            .collect();
        for (t, strip) in (start..end).zip(strips) {
            let strip = strip?;
            for i in 0..l {
                let row = space.global_index(t, i);
                for (c, v) in strip.data[i * strip.cols..(i + 1) * strip.cols].iter().enumerate() {
                    matrix.add(row, c, *v);
                }
            }
            stats.identical_pairs += strip.stats.identical_pairs;
            stats.adjacent_pairs += strip.stats.adjacent_pairs;
            stats.separated_pairs += strip.stats.separated_pairs;
            stats.skipped_pairs += strip.stats.skipped_pairs;
            stats.kernel_evaluations += strip.stats.kernel_evaluations;
            stats.max_separated_order = stats.max_separated_order.max(strip.stats.max_separated_order);
        }
    }
    for i in 0..dim {
        if let Some(j) = matrix.row(i).iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    Ok((matrix, stats))
}

/// `r_i = ∫ g b_i` with the policy's load-vector order on every element.
pub fn assemble_rhs(space: &FeSpace, g: impl Fn(f64) -> f64, policy: &QuadPolicy) -> Result<Vec<f64>> {
    let rule = Tabulated::new(gauss_legendre(policy.select_order_rhs())?, space.reference_basis());
    let mut r = vec![0.0; space.dim()];
    for e in 0..space.mesh().num_elements() {
        let (a, h) = space.mesh().element(e);
        for (k, (s, w)) in rule.rule.iter().enumerate() {
            let gw = h * w * g(a + h * s);
            for j in 0..space.local_dim() {
                r[space.global_index(e, j)] += gw * rule.phi(j, k);
            }
        }
    }
    if let Some(i) = r.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoad(i));
    }
    Ok(r)
}

/// Matrix and load vector for `problem` on `space`.
pub fn assemble(space: &FeSpace, problem: &AbelProblem, policy: &QuadPolicy) -> Result<GalerkinSystem> {
    if space.degree() != policy.degree || (problem.alpha() - policy.alpha).abs() > 0.0 {
        return Err(Error::InvalidArgument(
            "quadrature policy does not match the space or the problem".into(),
        ));
    }
    let (matrix, stats) = assemble_matrix(space, &problem.kernel, policy)?;
    let rhs = assemble_rhs(space, |x| problem.rhs(x), policy)?;
    Ok(GalerkinSystem {
        matrix,
        rhs,
        zero_pattern: ZeroPattern::new(space),
        stats,
        policy: policy.clone(),
    })
}

/// Policy with the default rules for `space` and `problem`.
pub fn default_policy(space: &FeSpace, problem: &AbelProblem) -> Result<QuadPolicy> {
    QuadPolicy::new(
        space.degree(),
        problem.alpha(),
        problem.kernel.lambda_k,
        space.mesh().h_max(),
    )
}

fn write_block(w: &mut impl Write, rows: usize, cols: usize, data: &[f64]) -> io::Result<()> {
    w.write_all(&(rows as u64).to_le_bytes())?;
    w.write_all(&(cols as u64).to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Little-endian dump: `rows, cols` as `u64` then row-major `f64` data, first
/// for the matrix and then for the load vector as a single column.
pub fn write_dump(matrix: &DenseMatrix, rhs: &[f64], mut w: impl Write) -> io::Result<()> {
    write_block(&mut w, matrix.rows(), matrix.cols(), matrix.as_slice())?;
    write_block(&mut w, rhs.len(), 1, rhs)?;
    w.flush()
}

fn read_block(bytes: &mut &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut u64_at = |what: &str| -> Result<u64> {
        if bytes.len() < 8 {
            return Err(Error::Malformed(format!("truncated before {what}")));
        }
        let (head, rest) = bytes.split_at(8);
        *bytes = rest;
        Ok(u64::from_le_bytes(head.try_into().unwrap()))
    };
    let rows = u64_at("row count")?;
    let cols = u64_at("column count")?;
    let count = rows
        .checked_mul(cols)
        .filter(|c| c.checked_mul(8).is_some_and(|b| b <= bytes.len() as u64))
        .ok_or_else(|| Error::Malformed(format!("{rows}x{cols} block exceeds the data")))?
        as usize;
    let (head, rest) = bytes.split_at(count * 8);
    *bytes = rest;
    let data = head
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows as usize, cols as usize, data))
}

/// Inverse of [`write_dump`].
pub fn read_dump(mut bytes: &[u8]) -> Result<(DenseMatrix, Vec<f64>)> {
    let (rows, cols, data) = read_block(&mut bytes)?;
    let matrix = DenseMatrix::from_row_major(rows, cols, data)?;
    let (len, one, rhs) = read_block(&mut bytes)?;
    if one != 1 || len != rows {
        return Err(Error::Malformed(format!(
            "load vector block is {len}x{one}, expected {rows}x1"
        )));
    }
    if !bytes.is_empty() {
        return Err(Error::Malformed(format!("{} trailing bytes", bytes.len())));
    }
    Ok((matrix, rhs))
}

impl GalerkinSystem {
    pub fn write_dump(&self, w: impl Write) -> io::Result<()> {
        write_dump(&self.matrix, &self.rhs, w)
    }
}
