//! Minimal native SVG charts with logarithmic axes.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Linear,
    /// Logarithmic with the given base for tick placement.
    Log(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// `y = c · x^(−slope)` drawn dashed, anchored at `(x0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLine {
    pub slope: f64,
    pub anchor: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_axis: Axis,
    pub series: Vec<Series>,
    pub reference: Option<ReferenceLine>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x_axis: Axis,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn tx(&self, v: f64) -> f64 {
        match self.x_axis {
            Axis::Linear => v,
            Axis::Log(_) => v.log10(),
        }
    }

    fn px(&self, v: f64) -> f64 {
        let t = (self.tx(v) - self.x.0) / (self.x.1 - self.x.0);
        LEFT + t * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        let t = (v.log10() - self.y.0) / (self.y.1 - self.y.0);
        HEIGHT - BOTTOM - t * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64, pad: f64) -> (f64, f64) {
    if hi > lo {
        let d = (hi - lo) * pad;
        (lo - d, hi + d)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

impl Chart {
    /// Renders the chart; points with non-positive `y` (or `x` on a log axis)
    /// are skipped.
    pub fn render(&self) -> String {
        let x_ok = |x: f64| x.is_finite() && (self.x_axis == Axis::Linear || x > 0.0);
        let usable: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .copied()
                    .filter(|&(x, y)| x_ok(x) && y.is_finite() && y > 0.0)
                    .collect()
            })
            .collect();
        let all: Vec<(f64, f64)> = usable.iter().flatten().copied().collect();
        let mut frame = Frame {
            x_axis: self.x_axis,
            x: (0.0, 1.0),
            y: (-1.0, 0.0),
        };
        if !all.is_empty() {
            let tx: Vec<f64> = all.iter().map(|p| frame.tx(p.0)).collect();
            let ly: Vec<f64> = all.iter().map(|p| p.1.log10()).collect();
            let fold = |v: &[f64]| {
                v.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
            };
            let (x0, x1) = fold(&tx);
            let (y0, y1) = fold(&ly);
            frame.x = padded(x0, x1, 0.05);
            frame.y = padded(y0, y1, 0.08);
        }

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(&self.title)
        );
        self.grid(&mut svg, &frame);

        for (k, (s, pts)) in self.series.iter().zip(&usable).enumerate() {
            let color = COLORS[k % COLORS.len()];
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
                .collect();
            if path.len() > 1 {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                    path.join(" ")
                );
            }
            for &(x, y) in pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    frame.px(x),
                    frame.py(y)
                );
            }
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 15.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&s.label)
            );
        }

        if let (Some(r), false) = (self.reference, all.is_empty()) {
            let (xa, ya) = r.anchor;
            let (x_lo, x_hi) = all
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
            let line = |x: f64| ya * (x / xa).powf(-r.slope);
            if x_hi > x_lo && xa > 0.0 && ya > 0.0 {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.2" stroke-dasharray="6,4"/>"#,
                    frame.px(x_lo),
                    frame.py(line(x_lo)),
                    frame.px(x_hi),
                    frame.py(line(x_hi))
                );
                let ly = TOP + 10.0 + 18.0 * self.series.len() as f64;
                let lx = WIDTH - RIGHT + 15.0;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="black" stroke-dasharray="6,4"/><text x="{}" y="{}">slope {}</text>"#,
                    lx + 20.0,
                    lx + 26.0,
                    ly + 4.0,
                    r.slope
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }

    fn grid(&self, svg: &mut String, f: &Frame) {
        let (x_left, x_right) = (LEFT, WIDTH - RIGHT);
        let (y_top, y_bottom) = (TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<rect x="{x_left}" y="{y_top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x_right - x_left,
            y_bottom - y_top
        );
        for e in (f.y.0.ceil() as i32)..=(f.y.1.floor() as i32) {
            let y = f.py(10f64.powi(e));
            let _ = writeln!(
                svg,
                r##"<line x1="{x_left}" y1="{y:.2}" x2="{x_right}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
                x_left - 6.0,
                y + 4.0
            );
        }
        let ticks: Vec<(f64, String)> = match f.x_axis {
            Axis::Log(base) => {
                let lb = base.log10();
                let (a, b) = ((f.x.0 / lb).ceil() as i32, (f.x.1 / lb).floor() as i32);
                (a..=b)
                    .map(|k| (base.powi(k), if base == 2.0 { format!("2^{k}") } else { format!("{}", base.powi(k)) }))
                    .collect()
            }
            Axis::Linear => {
                let step = nice_step((f.x.1 - f.x.0) / 6.0);
                let start = (f.x.0 / step).ceil() as i64;
                let end = (f.x.1 / step).floor() as i64;
                (start..=end)
                    .map(|k| {
                        let v = k as f64 * step;
                        (v, format!("{}", (v * 1e6).round() / 1e6))
                    })
                    .collect()
            }
        };
        for (v, label) in ticks {
            let x = f.px(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{y_top}" x2="{x:.2}" y2="{y_bottom}" stroke="#eee"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                y_bottom + 18.0,
                escape(&label)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x_left + x_right) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            (y_top + y_bottom) / 2.0,
            (y_top + y_bottom) / 2.0,
            escape(&self.y_label)
        );
    }
}

fn nice_step(raw: f64) -> f64 {
    let p = 10f64.powf(raw.log10().floor());
    let m = raw / p;
    let k = if m <= 1.0 {
        1.0
    } else if m <= 2.0 {
        2.0
    } else if m <= 5.0 {
        5.0
    } else {
        10.0
    };
    k * p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart {
            title: "err <m=1>".into(),
            x_label: "N".into(),
            y_label: "error".into(),
            x_axis: Axis::Log(2.0),
            series: vec![Series {
                label: "s2".into(),
                points: vec![(32.0, 1e-3), (64.0, 2.6e-4), (128.0, 7e-5)],
            }],
            reference: Some(ReferenceLine {
                slope: 2.0,
                anchor: (32.0, 2e-3),
            }),
        }
    }

    #[test]
    fn renders_series_and_reference() {
        let svg = chart().render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("err &lt;m=1&gt;"));
        assert!(svg.contains("2^6"));
    }

    #[test]
    fn degenerate_inputs() {
        let mut c = chart();
        c.series[0].points = vec![(0.0, 1.0), (4.0, -1.0), (8.0, f64::NAN)];
        let svg = c.render();
        assert!(!svg.contains("NaN"));
        assert_eq!(svg.matches("<circle").count(), 0);
        c.series[0].points = vec![(0.3, 1e-2)];
        c.x_axis = Axis::Linear;
        let svg = c.render();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
