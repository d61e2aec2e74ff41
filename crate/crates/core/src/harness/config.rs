//! Study configuration and its `key = value` file format.
//!
//! ```text
//! # comment
//! [study]
//! problem = exp1
//! m = 1
//! n_list = 32, 64, 128
//! order_mode = s2
//!
//! [sweep]
//! alphas = 0.1, 0.5, 0.9
//!
//! [admissibility]
//! preset = exp1
//! d.1.2 = 0.05
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::admissibility::AdmissibilityInput;
use crate::norms::DEFAULT_MODES;
use crate::operator::ProblemId;
use crate::quadrature::{OrderMode, DEFAULT_N_MAX};

use super::HarnessError;

/// Largest `N` for `m ≥ 1` without `allow_large`.
pub const LARGE_N: usize = 1 << 10;

/// `section.key → (value, line)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, (String, usize)>,
}

const SECTIONS: [&str; 3] = ["study", "sweep", "admissibility"];

fn config_err(line: usize, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("line {line}: {msg}"))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut section = "study".to_string();
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(config_err(line, format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(config_err(line, "empty key"));
            }
            let full = format!("{section}.{key}");
            if entries.insert(full.clone(), (value.trim().to_string(), line)).is_some() {
                return Err(config_err(line, format!("duplicate key `{full}`")));
            }
        }
        Ok(Self { entries })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub problem: ProblemId,
    /// Overrides the problem's own `α` where the family allows it.
    pub alpha: Option<f64>,
    pub degree: usize,
    pub n_list: Vec<usize>,
    pub order_mode: OrderMode,
    pub n_max: usize,
    /// Norm order; `−α/2` when unset.
    pub beta: Option<f64>,
    /// Cosine modes of the error norm; chosen from the mesh when unset.
    pub n_modes: Option<usize>,
    pub threads: Option<usize>,
    pub out_csv: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
    pub allow_large: bool,
    pub fixed_orders: Vec<usize>,
    pub alphas: Vec<f64>,
    /// Finest-mesh error ratio that flags a low fixed order as polluting.
    pub pollution_factor: f64,
    pub reference_slope: Option<f64>,
    pub admissibility: Option<AdmissibilityInput>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Exp1,
            alpha: None,
            degree: 1,
            n_list: (5..=9).map(|k| 1 << k).collect(),
            order_mode: OrderMode::default(),
            n_max: DEFAULT_N_MAX,
            beta: None,
            n_modes: None,
            threads: None,
            out_csv: None,
            out_svg: None,
            allow_large: false,
            fixed_orders: vec![2, 3, 4, 5, 6, 10],
            alphas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            pollution_factor: 3.0,
            reference_slope: None,
            admissibility: None,
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| format!("bad list item `{t}`")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("bad number `{s}`"))
}

impl StudyConfig {
    /// Applies every entry of `raw`, rejecting unknown keys by name.
    pub fn apply(&mut self, raw: &RawConfig) -> Result<(), HarnessError> {
        let mut adm: Option<AdmissibilityInput> = None;
        let mut adm_keys: Vec<(&str, &str, usize)> = Vec::new();
        for (key, (value, line)) in &raw.entries {
            let v = value.as_str();
            let line = *line;
            let wrap = |e: String| config_err(line, format!("`{key}`: {e}"));
            match key.as_str() {
                "study.problem" => self.problem = v.parse().map_err(|e: crate::Error| wrap(e.to_string()))?,
                "study.alpha" => self.alpha = Some(parse_num(v).map_err(wrap)?),
                "study.m" => self.degree = parse_num(v).map_err(wrap)?,
                "study.n_list" => self.n_list = parse_list(v).map_err(wrap)?,
                "study.order_mode" => {
                    self.order_mode = v.parse().map_err(|e: crate::Error| wrap(e.to_string()))?
                }
                "study.n_max" => self.n_max = parse_num(v).map_err(wrap)?,
                "study.beta" => self.beta = Some(parse_num(v).map_err(wrap)?),
                "study.n_modes" => self.n_modes = Some(parse_num(v).map_err(wrap)?),
                "study.threads" => self.threads = Some(parse_num(v).map_err(wrap)?),
                "study.out_csv" => self.out_csv = Some(PathBuf::from(v)),
                "study.out_svg" => self.out_svg = Some(PathBuf::from(v)),
                "study.allow_large" => self.allow_large = parse_bool(v).map_err(wrap)?,
                "study.reference_slope" => self.reference_slope = Some(parse_num(v).map_err(wrap)?),
                "sweep.alphas" => self.alphas = parse_list(v).map_err(wrap)?,
                "sweep.fixed_orders" => self.fixed_orders = parse_list(v).map_err(wrap)?,
                "sweep.pollution_factor" => self.pollution_factor = parse_num(v).map_err(wrap)?,
                k if k.starts_with("admissibility.") => {
                    adm_keys.push((&k["admissibility.".len()..], v, line));
                }
                other => return Err(config_err(line, format!("unknown key `{other}`"))),
            }
        }
        // the preset and alpha come first so other keys refine them
        adm_keys.sort_by_key(|(k, _, _)| match *k {
            "preset" => 0,
            "alpha" => 1,
            _ => 2,
        });
        for (k, v, line) in adm_keys {
            let wrap = |e: String| config_err(line, format!("`admissibility.{k}`: {e}"));
            let input = adm.get_or_insert_with(|| AdmissibilityInput::new(0.5));
            match k {
                "preset" => match v {
                    "exp1" => *input = AdmissibilityInput::experiment(input.alpha),
                    "one" => *input = AdmissibilityInput::new(input.alpha).with_coefficient(1, 1, 1.0),
                    other => return Err(wrap(format!("unknown preset `{other}`"))),
                },
                "alpha" => input.alpha = parse_num(v).map_err(wrap)?,
                "continuity" => input.continuity = parse_num(v).map_err(wrap)?,
                _ => {
                    let parts: Vec<&str> = k.split('.').collect();
                    let idx = |s: &str| -> Result<usize, HarnessError> {
                        s.parse::<usize>()
                            .ok()
                            .filter(|&n| n >= 1)
                            .ok_or_else(|| wrap(format!("bad factor index `{s}`")))
                    };
                    let val: f64 = parse_num(v).map_err(wrap)?;
                    match parts.as_slice() {
                        ["d", n, m] => {
                            input.coefficients.insert((idx(n)?, idx(m)?), val);
                        }
                        ["lower", n] => {
                            input.bounds.entry(idx(n)?).or_default().lower = val;
                        }
                        ["upper", n] => {
                            input.bounds.entry(idx(n)?).or_default().upper = val;
                        }
                        _ => {
                            return Err(config_err(
                                line,
                                format!("unknown key `admissibility.{k}`"),
                            ))
                        }
                    }
                }
            }
        }
        if adm.is_some() {
            self.admissibility = adm;
        }
        Ok(())
    }

    /// Modes used by the error norm: the configured count, or enough to
    /// resolve the finest mesh of the study.
    pub fn modes(&self) -> usize {
        self.n_modes.unwrap_or_else(|| {
            let n = self.n_list.last().copied().unwrap_or(1);
            if self.degree == 0 {
                n.saturating_mul(32).clamp(DEFAULT_MODES, 8 * DEFAULT_MODES)
            } else {
                n.saturating_mul(4).clamp(DEFAULT_MODES, 4 * DEFAULT_MODES)
            }
        })
    }

    /// The problem with `alpha` applied.
    pub fn resolved_problem(&self) -> Result<ProblemId, HarnessError> {
        match (self.alpha, self.problem.alpha()) {
            (None, _) => Ok(self.problem.clone()),
            (Some(a), Some(b)) if a != b => Err(HarnessError::Config(format!(
                "conflicting options: alpha = {a} but problem `{}` fixes alpha = {b}",
                self.problem
            ))),
            (Some(a), _) => self
                .problem
                .with_alpha(a)
                .or_else(|e| match self.problem {
                    ProblemId::Exp1 if a == 0.5 => Ok(ProblemId::Exp1),
                    _ => Err(e),
                })
                .map_err(|e| HarnessError::Config(e.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("alpha = {a} must lie in (0, 1)"));
            }
        }
        self.resolved_problem()?;
        if self.n_list.is_empty() {
            return bad("the N list is empty".into());
        }
        if self.n_list.contains(&0) {
            return bad("N must be positive".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("the N list {:?} is not strictly ascending", self.n_list));
        }
        if self.degree >= 1 && !self.allow_large {
            if let Some(&n) = self.n_list.iter().find(|&&n| n > LARGE_N) {
                return bad(format!(
                    "N = {n} exceeds {LARGE_N} for m = {}; pass --allow-large to run it",
                    self.degree
                ));
            }
        }
        if self.n_modes == Some(0) {
            return bad("n_modes must be positive".into());
        }
        if let Some(b) = self.beta {
            if !(b > -1.0 && b < 1.0) {
                return bad(format!("beta = {b} must lie in (-1, 1)"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if self.n_max < self.degree / 2 + 1 {
            return bad(format!("n_max = {} is below the minimal order", self.n_max));
        }
        if self.fixed_orders.contains(&0) {
            return bad("fixed orders must be positive".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("sweep alpha = {a} must lie in (0, 1)"));
        }
        if !(self.pollution_factor > 0.0) {
            return bad("pollution_factor must be positive".into());
        }
        Ok(())
    }
}
