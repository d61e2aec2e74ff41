//! Convergence tables, rate fits and their CSV form.

use std::io::{Read, Write};

use text::Row;

use super::HarnessError;

/// One discretization of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dim: usize,
    pub error: f64,
    pub rel_error: f64,
    /// `log2(e_prev / e)` against the previous row.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
}

/// Least-squares line through `(log2 N, log2 e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// Negated slope, i.e. the observed order of convergence.
    pub order: f64,
    /// Root-mean-square deviation of the points from the line, in `log2` units.
    pub residual: f64,
}

pub const CSV_HEADER: [&str; 6] = ["N", "h", "M", "error", "rel_error", "rate"];

pub fn pairwise_rate(coarse: f64, fine: f64, n_coarse: usize, n_fine: usize) -> f64 {
    (coarse / fine).log2() / (n_fine as f64 / n_coarse as f64).log2()
}

pub fn fit_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(n, e)| (n.log2(), e.log2())).unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    Some(SlopeFit {
        order: -b,
        residual: (rss / k).sqrt(),
    })
}

impl ConvergenceReport {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            rows: Vec::new(),
        }
    }

    /// Appends a row and fills its rate from the previous one.
    pub fn push(&mut self, n: usize, h: f64, dim: usize, error: f64, rel_error: f64) {
        let rate = self
            .rows
            .last()
            .map(|prev| pairwise_rate(prev.error, error, prev.n, n));
        self.rows.push(ConvergenceRow {
            n,
            h,
            dim,
            error,
            rel_error,
            rate,
        });
    }

    pub fn fit(&self) -> Option<SlopeFit> {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.n as f64, r.error)).collect();
        fit_slope(&pts)
    }

    pub fn error_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.error)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record(Row::from(r).fields())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a table written by [`ConvergenceReport::write_csv`].
    pub fn read_csv(label: impl Into<String>, r: impl Read) -> Result<Self, HarnessError> {
        let mut input = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = input.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(HarnessError::Malformed(format!(
                "unexpected header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut report = Self::new(label);
        for (line, record) in input.records().enumerate() {
            let record = record?;
            let row = Row::parse(&record).map_err(|e| {
                HarnessError::Malformed(format!("row {}: {e}", line + 1))
            })?;
            report.rows.push(row);
        }
        Ok(report)
    }
}

/// Text form of a row. Floats carry 17 significant digits so that
/// reading them back is exact.
mod text {
    use super::ConvergenceRow;

    pub struct Row([String; 6]);

    fn float(v: f64) -> String {
        format!("{v:.16e}")
    }

    impl From<&ConvergenceRow> for Row {
        fn from(r: &ConvergenceRow) -> Self {
            Row([
                r.n.to_string(),
                float(r.h),
                r.dim.to_string(),
                float(r.error),
                float(r.rel_error),
                r.rate.map(float).unwrap_or_default(),
            ])
        }
    }

    impl Row {
        pub fn fields(&self) -> &[String; 6] {
            &self.0
        }

        pub fn parse(record: &csv::StringRecord) -> Result<ConvergenceRow, String> {
            if record.len() != 6 {
                return Err(format!("expected 6 fields, found {}", record.len()));
            }
            let int = |k: usize| -> Result<usize, String> {
                record[k].trim().parse().map_err(|_| format!("bad integer `{}`", &record[k]))
            };
            let real = |k: usize| -> Result<f64, String> {
                record[k].trim().parse().map_err(|_| format!("bad number `{}`", &record[k]))
            };
            Ok(ConvergenceRow {
                n: int(0)?,
                h: real(1)?,
                dim: int(2)?,
                error: real(3)?,
                rel_error: real(4)?,
                rate: if record[5].trim().is_empty() { None } else { Some(real(5)?) },
            })
        }
    }
}
