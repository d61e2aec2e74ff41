//! Convergence studies and their outputs.
//!
//! A [`Study`] fixes a problem together with the norm evaluator and the
//! cosine coefficients of the exact solution, then solves on any number of
//! meshes. The `run_*` functions drive the studies behind the command line.

pub mod config;
pub mod report;
pub mod svg;

use std::io;
use std::path::Path;

use crate::assembly::{assemble, AssemblyStats};
use crate::error::Error;
use crate::mesh::{build_space, FeSolution};
use crate::norms::{ErrorNorm, SpectralNormEvaluator};
use crate::operator::AbelProblem;
use crate::quadrature::{OrderMode, QuadPolicy};
use crate::solve::solve;

pub use config::{RawConfig, StudyConfig};
pub use report::{ConvergenceReport, ConvergenceRow, SlopeFit};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] Error),
    #[error("numerical failure: error norm is not finite at N = {0}")]
    NonFiniteError(usize),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl HarnessError {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) | HarnessError::NonFiniteError(_) => 3,
            _ => 1,
        }
    }
}

/// Quadrature settings of a single solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub mode: OrderMode,
    pub n_max: usize,
    /// Multiplies every quadrature order.
    pub order_scale: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: OrderMode::default(),
            n_max: crate::quadrature::DEFAULT_N_MAX,
            order_scale: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub n: usize,
    pub h: f64,
    pub dim: usize,
    pub error: ErrorNorm,
    pub residual_inf: f64,
    pub rhs_inf: f64,
    pub pivot_min: f64,
    pub stats: AssemblyStats,
    pub solution: FeSolution,
}

/// A problem with its norm machinery, ready to be solved on many meshes.
pub struct Study {
    pub problem: AbelProblem,
    pub evaluator: SpectralNormEvaluator,
    pub beta: f64,
    exact: Vec<f64>,
}

impl Study {
    /// `beta` defaults to `−α/2`.
    pub fn new(problem: AbelProblem, n_modes: usize, beta: Option<f64>) -> Result<Self, HarnessError> {
        let evaluator = SpectralNormEvaluator::new(n_modes)?;
        let f = problem
            .exact()
            .ok_or_else(|| HarnessError::Config(format!("problem `{}` has no exact solution", problem.name)))?
            .clone();
        let exact = evaluator.function_coefficients(&|y| f(y))?;
        Ok(Self {
            beta: beta.unwrap_or(-problem.alpha() / 2.0),
            problem,
            evaluator,
            exact,
        })
    }

    /// Cosine coefficients of the exact solution.
    pub fn exact_coefficients(&self) -> &[f64] {
        &self.exact
    }

    pub fn policy(&self, degree: usize, n: usize, opts: &RunOptions) -> Result<QuadPolicy, HarnessError> {
        let policy = QuadPolicy::new(
            degree,
            self.problem.alpha(),
            self.problem.kernel.lambda_k,
            1.0 / n as f64,
        )?
        .with_mode(opts.mode)
        .with_n_max(opts.n_max)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(if opts.order_scale > 1 {
            policy.scaled_orders(opts.order_scale)
        } else {
            policy
        })
    }

    /// Assembles, solves and measures the error on the uniform mesh with `n`
    /// elements.
    pub fn run(&self, degree: usize, n: usize, opts: &RunOptions) -> Result<RunResult, HarnessError> {
        let space = build_space(n, degree)?;
        let policy = self.policy(degree, n, opts)?;
        let system = assemble(&space, &self.problem, &policy)?;
        let report = solve(&system.matrix, &system.rhs, &space)?;
        let error = self
            .evaluator
            .error_norm_with(&self.exact, &report.solution, self.beta)?;
        if !(error.absolute.is_finite() && error.relative.is_finite()) {
            return Err(HarnessError::NonFiniteError(n));
        }
        Ok(RunResult {
            n,
            h: 1.0 / n as f64,
            dim: space.dim(),
            error,
            residual_inf: report.residual_inf,
            rhs_inf: system.rhs.iter().fold(0.0, |m, v| m.max(v.abs())),
            pivot_min: report.pivot_min,
            stats: system.stats,
            solution: report.solution,
        })
    }

    pub fn convergence(
        &self,
        label: impl Into<String>,
        degree: usize,
        n_list: &[usize],
        opts: &RunOptions,
    ) -> Result<ConvergenceReport, HarnessError> {
        let mut report = ConvergenceReport::new(label);
        for &n in n_list {
            let r = self.run(degree, n, opts)?;
            report.push(n, r.h, r.dim, r.error.absolute, r.error.relative);
        }
        Ok(report)
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, HarnessError> + Send,
) -> Result<T, HarnessError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn build_problem(config: &StudyConfig) -> Result<AbelProblem, HarnessError> {
    let id = config.resolved_problem()?;
    id.build().map_err(|e| match e {
        Error::InvalidArgument(_) | Error::InvalidAlpha(_) => HarnessError::Config(e.to_string()),
        other => HarnessError::Numerical(other),
    })
}

fn options(config: &StudyConfig, mode: OrderMode) -> RunOptions {
    RunOptions {
        mode,
        n_max: config.n_max,
        order_scale: 1,
    }
}

pub fn order_label(mode: OrderMode) -> String {
    match mode {
        OrderMode::Adaptive(i) => format!("s{i}"),
        OrderMode::Fixed(n) => format!("n1={n}"),
    }
}

/// One solve at the last `N` of the configuration.
pub fn run_single(config: &StudyConfig) -> Result<RunResult, HarnessError> {
    config.validate()?;
    let n = *config.n_list.last().expect("validated");
    with_threads(config.threads, || {
        let study = Study::new(build_problem(config)?, config.modes(), config.beta)?;
        study.run(config.degree, n, &options(config, config.order_mode))
    })
}

pub fn run_convergence(config: &StudyConfig) -> Result<ConvergenceReport, HarnessError> {
    config.validate()?;
    with_threads(config.threads, || {
        let study = Study::new(build_problem(config)?, config.modes(), config.beta)?;
        study.convergence(
            format!("m={} {}", config.degree, order_label(config.order_mode)),
            config.degree,
            &config.n_list,
            &options(config, config.order_mode),
        )
    })
}

#[derive(Debug, Clone)]
pub struct FixedOrderStudy {
    pub adaptive: ConvergenceReport,
    pub fixed: Vec<(usize, ConvergenceReport)>,
    /// Finest-mesh error of the lowest fixed order over that of the adaptive run.
    pub pollution_ratio: f64,
    pub polluted: bool,
    /// Largest relative spread `max/min − 1` among the fixed orders at any `N`.
    pub spread: f64,
}

pub fn run_fixed_order_study(config: &StudyConfig) -> Result<FixedOrderStudy, HarnessError> {
    config.validate()?;
    if config.fixed_orders.is_empty() {
        return Err(HarnessError::Config("no fixed orders configured".into()));
    }
    with_threads(config.threads, || {
        let study = Study::new(build_problem(config)?, config.modes(), config.beta)?;
        let adaptive = study.convergence(
            format!("m={} {}", config.degree, order_label(config.order_mode)),
            config.degree,
            &config.n_list,
            &options(config, config.order_mode),
        )?;
        let mut orders = config.fixed_orders.clone();
        orders.sort_unstable();
        orders.dedup();
        let mut fixed = Vec::new();
        for &k in &orders {
            let mode = OrderMode::Fixed(k);
            let r = study.convergence(
                format!("m={} {}", config.degree, order_label(mode)),
                config.degree,
                &config.n_list,
                &options(config, mode),
            )?;
            fixed.push((k, r));
        }
        let finest = |r: &ConvergenceReport| r.rows.last().map(|x| x.error).unwrap_or(f64::NAN);
        let pollution_ratio = finest(&fixed[0].1) / finest(&adaptive);
        let spread = (0..config.n_list.len())
            .map(|i| {
                let (lo, hi) = fixed.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, r)| {
                    (lo.min(r.rows[i].error), hi.max(r.rows[i].error))
                });
                hi / lo - 1.0
            })
            .fold(0.0, f64::max);
        Ok(FixedOrderStudy {
            polluted: pollution_ratio >= config.pollution_factor,
            adaptive,
            fixed,
            pollution_ratio,
            spread,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub dim: usize,
    pub error: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweep {
    pub degree: usize,
    pub n: usize,
    pub rows: Vec<SweepRow>,
}

impl AlphaSweep {
    /// Relative errors strictly increase with `α`.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rel_error > w[0].rel_error)
    }

    pub fn write_csv(&self, w: impl io::Write) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "N", "M", "error", "rel_error"])?;
        for r in &self.rows {
            out.write_record([
                format!("{:.16e}", r.alpha),
                self.n.to_string(),
                r.dim.to_string(),
                format!("{:.16e}", r.error),
                format!("{:.16e}", r.rel_error),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Relative errors at the last configured `N` for every `α` in the sweep.
pub fn run_alpha_sweep(config: &StudyConfig) -> Result<AlphaSweep, HarnessError> {
    config.validate()?;
    if config.alphas.is_empty() {
        return Err(HarnessError::Config("no sweep values configured".into()));
    }
    let n = *config.n_list.last().expect("validated");
    with_threads(config.threads, || {
        let mut rows = Vec::new();
        for &alpha in &config.alphas {
            let id = config
                .problem
                .with_alpha(alpha)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let cfg = StudyConfig {
                problem: id,
                alpha: None,
                ..config.clone()
            };
            let study = Study::new(build_problem(&cfg)?, config.modes(), config.beta)?;
            let r = study.run(config.degree, n, &options(config, config.order_mode))?;
            rows.push(SweepRow {
                alpha,
                dim: r.dim,
                error: r.error.absolute,
                rel_error: r.error.relative,
            });
        }
        Ok(AlphaSweep {
            degree: config.degree,
            n,
            rows,
        })
    })
}

/// Log-log chart of several convergence reports.
pub fn convergence_chart(title: &str, reports: &[&ConvergenceReport], reference_slope: Option<f64>) -> svg::Chart {
    let series = reports
        .iter()
        .map(|r| svg::Series {
            label: r.label.clone(),
            points: r.rows.iter().map(|x| (x.n as f64, x.error)).collect(),
        })
        .collect();
    let reference = reference_slope.and_then(|slope| {
        let first = reports.first()?.rows.first()?;
        Some(svg::ReferenceLine {
            slope,
            anchor: (first.n as f64, 2.0 * first.error),
        })
    });
    svg::Chart {
        title: title.to_string(),
        x_label: "N".into(),
        y_label: "error".into(),
        x_axis: svg::Axis::Log(2.0),
        series,
        reference,
    }
}

pub fn sweep_chart(title: &str, sweep: &AlphaSweep) -> svg::Chart {
    svg::Chart {
        title: title.to_string(),
        x_label: "alpha".into(),
        y_label: "relative error".into(),
        x_axis: svg::Axis::Linear,
        series: vec![svg::Series {
            label: format!("m={} N={}", sweep.degree, sweep.n),
            points: sweep.rows.iter().map(|r| (r.alpha, r.rel_error)).collect(),
        }],
        reference: None,
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::ProblemId;

    #[test]
    fn single_row_study() {
        let config = StudyConfig {
            degree: 1,
            n_list: vec![8],
            n_modes: Some(256),
            ..Default::default()
        };
        let r = run_convergence(&config).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].rate, None);
        assert!(r.fit().is_none());
        assert!(r.rows[0].error > 0.0 && r.rows[0].error < 1e-2);
    }

    #[test]
    fn thread_count_is_irrelevant() {
        let base = StudyConfig {
            degree: 1,
            n_list: vec![8, 16, 32],
            n_modes: Some(512),
            ..Default::default()
        };
        let one = run_convergence(&StudyConfig { threads: Some(1), ..base.clone() }).unwrap();
        let four = run_convergence(&StudyConfig { threads: Some(4), ..base }).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn config_errors_map_to_exit_code_two() {
        let config = StudyConfig {
            problem: ProblemId::Exp2 { alpha: None },
            n_list: vec![4],
            ..Default::default()
        };
        let err = run_convergence(&config).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
        let config = StudyConfig {
            n_list: vec![],
            ..Default::default()
        };
        assert_eq!(run_convergence(&config).unwrap_err().exit_code(), 2);
        assert_eq!(HarnessError::Numerical(Error::SingularSystem { index: 0, value: 0.0 }).exit_code(), 3);
    }

    #[test]
    fn small_sweep_and_fixed_orders() {
        let config = StudyConfig {
            problem: ProblemId::Exp2 { alpha: None },
            degree: 0,
            n_list: vec![8, 16],
            n_modes: Some(256),
            alphas: vec![0.3, 0.6],
            fixed_orders: vec![4, 2],
            ..Default::default()
        };
        let sweep = run_alpha_sweep(&config).unwrap();
        assert_eq!(sweep.rows.len(), 2);
        assert_eq!(sweep.n, 16);
        let mut out = Vec::new();
        sweep.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("alpha,N,M,error,rel_error\n"));

        let config = StudyConfig {
            problem: ProblemId::Exp1,
            ..config
        };
        let fixed = run_fixed_order_study(&config).unwrap();
        assert_eq!(fixed.fixed.len(), 2);
        assert_eq!(fixed.fixed[0].0, 2);
        assert!(fixed.pollution_ratio.is_finite());
        let chart = convergence_chart("t", &[&fixed.adaptive, &fixed.fixed[0].1], Some(1.0)).render();
        assert_eq!(chart.matches("<polyline").count(), 2);
    }
}
