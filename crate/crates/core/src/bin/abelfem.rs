use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use abelfem::admissibility::AdmissibilityInput;
use abelfem::harness::config::parse_list;
use abelfem::harness::{
    self, convergence_chart, order_label, sweep_chart, write_file, HarnessError, RawConfig,
    StudyConfig,
};
use abelfem::quadrature::{beta, gauss_jacobi, gauss_legendre};

/// Galerkin solver for Abel-type integral equations.
#[derive(Parser, Debug)]
#[command(name = "abelfem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve once and report the error
    Solve {
        #[command(flatten)]
        common: Common,
        /// Number of elements
        #[arg(long)]
        n: Option<usize>,
        /// Write the assembled matrix and load vector to this file
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Convergence study over the N list
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Adaptive orders against a set of fixed tensor-Gauss orders
    FixedOrder {
        #[command(flatten)]
        common: Common,
        /// Fixed orders, e.g. 2,3,4,5,6,10
        #[arg(long)]
        orders: Option<String>,
    },
    /// Relative error over a list of singularity orders at fixed N
    AlphaSweep {
        #[command(flatten)]
        common: Common,
        /// Sweep values, e.g. 0.1,0.5,0.9
        #[arg(long)]
        alphas: Option<String>,
        /// Number of elements
        #[arg(long)]
        n: Option<usize>,
    },
    /// Moment errors of the Gauss-Legendre and Gauss-Jacobi rules
    QuadCheck {
        /// Largest rule order
        #[arg(long, default_value_t = 20)]
        max_order: usize,
        /// Singularity order for the Jacobi weights
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Coercivity constants of a separable kernel
    Admissibility {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Built-in kernel table: exp1 or one
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Continuity constant weighting the off-diagonal terms
        #[arg(long)]
        continuity: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// exp1, exp2:alpha=<v> or manufactured:f=pow:<p>;alpha=<v>;kernel=one|exp1
    #[arg(long)]
    problem: Option<String>,
    /// Polynomial degree
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated mesh sizes
    #[arg(long)]
    n_list: Option<String>,
    /// s1..s5 or fixed:<k>
    #[arg(long)]
    order_mode: Option<String>,
    /// Cap on the separated-pair order
    #[arg(long)]
    n_max: Option<usize>,
    /// Norm order (default -alpha/2)
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    n_modes: Option<usize>,
    #[arg(long, env = "ABELFEM_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Slope of the dashed reference line in plots
    #[arg(long)]
    reference_slope: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Permit N > 1024 for m >= 1
    #[arg(long)]
    allow_large: bool,
}

fn read_config(path: &PathBuf) -> Result<RawConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    RawConfig::parse(&text)
}

impl Common {
    fn into_config(self) -> Result<StudyConfig, HarnessError> {
        let cfg_err = |e: String| HarnessError::Config(e);
        let mut c = StudyConfig::default();
        if let Some(path) = &self.config {
            c.apply(&read_config(path)?)?;
        }
        if let Some(p) = self.problem {
            c.problem = p.parse().map_err(|e: abelfem::Error| cfg_err(e.to_string()))?;
        }
        if let Some(m) = self.m {
            c.degree = m;
        }
        if let Some(a) = self.alpha {
            c.alpha = Some(a);
        }
        if let Some(list) = self.n_list {
            c.n_list = parse_list(&list).map_err(cfg_err)?;
        }
        if let Some(mode) = self.order_mode {
            c.order_mode = mode.parse().map_err(|e: abelfem::Error| cfg_err(e.to_string()))?;
        }
        if let Some(n) = self.n_max {
            c.n_max = n;
        }
        if self.beta.is_some() {
            c.beta = self.beta;
        }
        if self.n_modes.is_some() {
            c.n_modes = self.n_modes;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if self.out_csv.is_some() {
            c.out_csv = self.out_csv;
        }
        if self.out_svg.is_some() {
            c.out_svg = self.out_svg;
        }
        if self.reference_slope.is_some() {
            c.reference_slope = self.reference_slope;
        }
        c.allow_large |= self.allow_large;
        Ok(c)
    }
}

fn default_slope(config: &StudyConfig) -> f64 {
    config.reference_slope.unwrap_or(if config.degree == 0 { 1.0 } else { 2.0 })
}

fn print_report(r: &harness::ConvergenceReport) {
    println!("# {}", r.label);
    println!("{:>7} {:>7} {:>13} {:>13} {:>7}", "N", "M", "error", "rel_error", "rate");
    for row in &r.rows {
        let rate = row.rate.map(|x| format!("{x:.3}")).unwrap_or_default();
        println!("{:>7} {:>7} {:>13.4e} {:>13.4e} {:>7}", row.n, row.dim, row.error, row.rel_error, rate);
    }
    if let Some(fit) = r.fit() {
        println!("fitted order {:.4} (residual {:.2e})", fit.order, fit.residual);
    }
}

fn emit_reports(
    config: &StudyConfig,
    title: &str,
    reports: &[&harness::ConvergenceReport],
) -> Result<(), HarnessError> {
    if let Some(path) = &config.out_csv {
        if reports.len() == 1 {
            let mut buf = Vec::new();
            reports[0].write_csv(&mut buf)?;
            write_file(path, buf)?;
        } else {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            for r in reports {
                let tag: String = r.label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
                let mut buf = Vec::new();
                r.write_csv(&mut buf)?;
                write_file(&path.with_file_name(format!("{stem}_{tag}.csv")), buf)?;
            }
        }
    }
    if let Some(path) = &config.out_svg {
        write_file(path, convergence_chart(title, reports, Some(default_slope(config))).render())?;
    }
    Ok(())
}

fn quad_check(max_order: usize, alpha: f64) -> Result<(), HarnessError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::Config(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    println!("{:>5} {:>14} {:>14} {:>14} {:>14}", "n", "legendre", "J(a-1,0)", "J(0,a)", "J(a-1,a)");
    for n in 1..=max_order.max(1) {
        let worst = |a: f64, b: f64, leg: bool| -> Result<f64, HarnessError> {
            let rule = if leg { gauss_legendre(n)? } else { gauss_jacobi(n, a, b)? };
            Ok((0..2 * n)
                .map(|k| {
                    let exact = if leg { 1.0 / (k as f64 + 1.0) } else { beta(a + 1.0, b + k as f64 + 1.0) };
                    (rule.integrate(|x| x.powi(k as i32)) - exact).abs() / exact
                })
                .fold(0.0, f64::max))
        };
        println!(
            "{n:>5} {:>14.3e} {:>14.3e} {:>14.3e} {:>14.3e}",
            worst(0.0, 0.0, true)?,
            worst(alpha - 1.0, 0.0, false)?,
            worst(0.0, alpha, false)?,
            worst(alpha - 1.0, alpha, false)?
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Solve { common, n, dump } => {
            let mut config = common.into_config()?;
            if let Some(n) = n {
                config.n_list = vec![n];
            }
            let r = harness::run_single(&config)?;
            println!("N = {}, M = {}, order mode {}", r.n, r.dim, order_label(config.order_mode));
            println!("error      {:.6e}", r.error.absolute);
            println!("rel_error  {:.6e}", r.error.relative);
            println!("residual   {:.3e} (|r|_inf {:.3e})", r.residual_inf, r.rhs_inf);
            println!("pivot_min  {:.3e}", r.pivot_min);
            println!(
                "pairs: {} identical, {} adjacent, {} separated (max order {}), {} skipped; {} kernel evaluations",
                r.stats.identical_pairs,
                r.stats.adjacent_pairs,
                r.stats.separated_pairs,
                r.stats.max_separated_order,
                r.stats.skipped_pairs,
                r.stats.kernel_evaluations
            );
            if let Some(path) = dump {
                let problem = config
                    .resolved_problem()?
                    .build()
                    .map_err(HarnessError::Numerical)?;
                let space = abelfem::mesh::build_space(r.n, config.degree)?;
                let study = harness::Study::new(problem, 1, config.beta)?;
                let policy = study.policy(config.degree, r.n, &harness::RunOptions {
                    mode: config.order_mode,
                    n_max: config.n_max,
                    order_scale: 1,
                })?;
                let sys = abelfem::assembly::assemble(&space, &study.problem, &policy)?;
                let mut buf = Vec::new();
                sys.write_dump(&mut buf)?;
                write_file(&path, buf)?;
            }
            if let Some(path) = &config.out_csv {
                let mut rep = harness::ConvergenceReport::new("solve");
                rep.push(r.n, r.h, r.dim, r.error.absolute, r.error.relative);
                let mut buf = Vec::new();
                rep.write_csv(&mut buf)?;
                write_file(path, buf)?;
            }
        }
        Command::Convergence { common } => {
            let config = common.into_config()?;
            let r = harness::run_convergence(&config)?;
            print_report(&r);
            emit_reports(&config, &format!("{} convergence", config.problem), &[&r])?;
        }
        Command::FixedOrder { common, orders } => {
            let mut config = common.into_config()?;
            if let Some(o) = orders {
                config.fixed_orders = parse_list(&o).map_err(HarnessError::Config)?;
            }
            let study = harness::run_fixed_order_study(&config)?;
            print_report(&study.adaptive);
            for (_, r) in &study.fixed {
                print_report(r);
            }
            println!(
                "lowest fixed order / adaptive at finest N: {:.3} ({})",
                study.pollution_ratio,
                if study.polluted { "polluted" } else { "not polluted" }
            );
            println!("largest spread among fixed orders: {:.3}%", 100.0 * study.spread);
            let mut all = vec![&study.adaptive];
            all.extend(study.fixed.iter().map(|(_, r)| r));
            emit_reports(&config, &format!("{} fixed orders", config.problem), &all)?;
        }
        Command::AlphaSweep { common, alphas, n } => {
            let mut config = common.into_config()?;
            if matches!(config.problem, abelfem::operator::ProblemId::Exp1) {
                config.problem = abelfem::operator::ProblemId::Exp2 { alpha: None };
            }
            if let Some(a) = alphas {
                config.alphas = parse_list(&a).map_err(HarnessError::Config)?;
            }
            if let Some(n) = n {
                config.n_list = vec![n];
            }
            let sweep = harness::run_alpha_sweep(&config)?;
            println!("# m={} N={}", sweep.degree, sweep.n);
            println!("{:>6} {:>13} {:>13}", "alpha", "error", "rel_error");
            for r in &sweep.rows {
                println!("{:>6.3} {:>13.4e} {:>13.4e}", r.alpha, r.error, r.rel_error);
            }
            println!("monotone in alpha: {}", sweep.is_monotone());
            if let Some(path) = &config.out_csv {
                let mut buf = Vec::new();
                sweep.write_csv(&mut buf)?;
                write_file(path, buf)?;
            }
            if let Some(path) = &config.out_svg {
                write_file(path, sweep_chart("relative error over alpha", &sweep).render())?;
            }
        }
        Command::QuadCheck { max_order, alpha } => quad_check(max_order, alpha)?,
        Command::Admissibility {
            config,
            preset,
            alpha,
            continuity,
        } => {
            let mut input = match &config {
                Some(path) => {
                    let mut c = StudyConfig::default();
                    c.apply(&read_config(path)?)?;
                    c.admissibility
                }
                None => None,
            };
            if let Some(p) = preset {
                let a = alpha.or(input.as_ref().map(|i| i.alpha)).unwrap_or(0.5);
                input = Some(match p.as_str() {
                    "exp1" => AdmissibilityInput::experiment(a),
                    "one" => AdmissibilityInput::new(a).with_coefficient(1, 1, 1.0),
                    other => return Err(HarnessError::Config(format!("unknown preset `{other}`"))),
                });
            }
            let mut input = input.unwrap_or_else(|| AdmissibilityInput::experiment(0.5));
            if let Some(a) = alpha {
                input.alpha = a;
            }
            if let Some(c) = continuity {
                input.continuity = c;
            }
            let r = input
                .evaluate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            println!("alpha        {}", input.alpha);
            println!("gamma        {:.15}", r.gamma);
            println!("C_s^2        {:.15}", r.c_s_squared);
            println!("gamma_tilde  {:.15}", r.gamma_tilde);
            println!("admissible   {}", r.admissible);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

