//! Self-contained SVG charts: line curves, step CDFs and grouped bars.
//!
//! Output depends only on the [`ChartSpec`], so identical specs render to
//! identical bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metrics::{Comparison, SensitivityTable};

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 450.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
/// Fraction of the data span added on each side of an axis.
pub const PADDING: f64 = 0.05;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Line,
    /// Points are `(x, F(x))` pairs drawn as a right-continuous staircase.
    Cdf,
    /// Point `x` values are group positions; series in a group sit side by side.
    Bar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }

    /// Points `(i, ys[i])`.
    pub fn indexed(label: impl Into<String>, ys: &[f64]) -> Self {
        Self::new(label, ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefLine {
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical dashed lines at these x values.
    pub ref_x: Vec<RefLine>,
    /// Horizontal dashed lines at these y values.
    pub ref_y: Vec<RefLine>,
    /// Tick labels for bar groups, indexed by rounded x.
    pub categories: Vec<String>,
}

impl ChartSpec {
    pub fn new(kind: ChartKind, title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            kind,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            ref_x: Vec::new(),
            ref_y: Vec::new(),
            categories: Vec::new(),
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn with_ref_x(mut self, value: f64, label: impl Into<String>) -> Self {
        self.ref_x.push(RefLine {
            value,
            label: label.into(),
        });
        self
    }

    pub fn with_ref_y(mut self, value: f64, label: impl Into<String>) -> Self {
        self.ref_y.push(RefLine {
            value,
            label: label.into(),
        });
        self
    }

    fn validate(&self) -> Result<()> {
        if self.series.is_empty() || self.series.iter().all(|s| s.points.is_empty()) {
            return Err(Error::EmptySamples);
        }
        let finite = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().flat_map(|&(x, y)| [x, y]))
            .chain(self.ref_x.iter().chain(&self.ref_y).map(|r| r.value))
            .all(f64::is_finite);
        if !finite {
            return Err(Error::NonFinite("chart data".into()));
        }
        Ok(())
    }
}

/// Linear map from a padded data interval onto a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub px_lo: f64,
    pub px_hi: f64,
}

impl Axis {
    /// Pads `[min, max]` by [`PADDING`] of its span on each side. A zero
    /// span is widened to `max(|v|, 1) * PADDING` each way.
    pub fn fit(min: f64, max: f64, px_lo: f64, px_hi: f64) -> Self {
        let span = max - min;
        let pad = if span > 0.0 { span * PADDING } else { min.abs().max(1.0) * PADDING };
        Self {
            lo: min - pad,
            hi: max + pad,
            px_lo,
            px_hi,
        }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    /// Round tick values (steps of 1, 2 or 5 times a power of ten) inside
    /// the axis range.
    pub fn ticks(&self) -> Vec<f64> {
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }
}

/// Horizontal and vertical axes of a spec after autoscaling.
pub fn axes(spec: &ChartSpec) -> Result<(Axis, Axis)> {
    spec.validate()?;
    let mut xs: Vec<f64> = spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let mut ys: Vec<f64> = spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    xs.extend(spec.ref_x.iter().map(|r| r.value));
    ys.extend(spec.ref_y.iter().map(|r| r.value));
    match spec.kind {
        ChartKind::Bar => {
            let (lo, hi) = min_max(&xs);
            xs = vec![lo - 0.5, hi + 0.5];
            ys.push(0.0);
        }
        ChartKind::Cdf => ys.extend([0.0, 1.0]),
        ChartKind::Line => {}
    }
    let (x0, x1) = min_max(&xs);
    let (y0, y1) = min_max(&ys);
    Ok((
        Axis::fit(x0, x1, MARGIN_LEFT, WIDTH - MARGIN_RIGHT),
        Axis::fit(y0, y1, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP),
    ))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn tick_label(v: f64) -> String {
    // trims float noise such as 0.30000000000000004
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Renders `spec` to an SVG document.
pub fn render_svg(spec: &ChartSpec) -> Result<String> {
    let (ax, ay) = axes(spec)?;
    let mut o = String::new();
    let w = |o: &mut String, s: std::fmt::Arguments| o.write_fmt(s).unwrap();
    w(
        &mut o,
        format_args!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ),
    );
    w(&mut o, format_args!("<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"));
    w(
        &mut o,
        format_args!(
            "<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            WIDTH / 2.0,
            escape(&spec.title)
        ),
    );

    // frame and ticks
    let (fx0, fx1, fy0, fy1) = (ax.px_lo, ax.px_hi, ay.px_hi, ay.px_lo);
    w(
        &mut o,
        format_args!(
            "<rect class=\"frame\" x=\"{fx0:.2}\" y=\"{fy0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
            fx1 - fx0,
            fy1 - fy0
        ),
    );
    o.push_str("<g class=\"x-ticks\">\n");
    if spec.kind == ChartKind::Bar && !spec.categories.is_empty() {
        for (i, c) in spec.categories.iter().enumerate() {
            let x = ax.map(i as f64);
            w(&mut o, format_args!("<line x1=\"{x:.2}\" y1=\"{fy1:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n", fy1 + 5.0));
            w(&mut o, format_args!("<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n", fy1 + 18.0, escape(c)));
        }
    } else {
        for t in ax.ticks() {
            let x = ax.map(t);
            w(&mut o, format_args!("<line x1=\"{x:.2}\" y1=\"{fy1:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n", fy1 + 5.0));
            w(&mut o, format_args!("<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n", fy1 + 18.0, tick_label(t)));
        }
    }
    o.push_str("</g>\n<g class=\"y-ticks\">\n");
    for t in ay.ticks() {
        let y = ay.map(t);
        w(&mut o, format_args!("<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{fx0:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n", fx0 - 5.0));
        w(&mut o, format_args!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n", fx0 - 8.0, y + 4.0, tick_label(t)));
    }
    o.push_str("</g>\n");
    w(
        &mut o,
        format_args!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            (fx0 + fx1) / 2.0,
            HEIGHT - 15.0,
            escape(&spec.x_label)
        ),
    );
    let ymid = (fy0 + fy1) / 2.0;
    w(
        &mut o,
        format_args!(
            "<text x=\"18\" y=\"{ymid:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {ymid:.2})\">{}</text>\n",
            escape(&spec.y_label)
        ),
    );

    // data
    let nseries = spec.series.len();
    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        w(&mut o, format_args!("<g class=\"series\" data-label=\"{}\">\n", escape(&s.label)));
        match spec.kind {
            ChartKind::Bar => {
                let group = 0.8 * (ax.map(1.0) - ax.map(0.0));
                let bw = group / nseries as f64;
                let base = ay.map(0.0);
                for &(x, y) in &s.points {
                    let left = ax.map(x) - group / 2.0 + i as f64 * bw;
                    let top = ay.map(y);
                    w(
                        &mut o,
                        format_args!(
                            "<rect class=\"bar\" x=\"{left:.2}\" y=\"{:.2}\" width=\"{bw:.2}\" height=\"{:.2}\" fill=\"{color}\"/>\n",
                            top.min(base),
                            (top - base).abs()
                        ),
                    );
                }
            }
            _ if s.points.len() == 1 => {
                let (x, y) = s.points[0];
                w(
                    &mut o,
                    format_args!(
                        "<circle class=\"marker\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>\n",
                        ax.map(x),
                        ay.map(y)
                    ),
                );
            }
            kind => {
                let mut pts = String::new();
                let mut prev_y: Option<f64> = None;
                for &(x, y) in &s.points {
                    if kind == ChartKind::Cdf {
                        if let Some(py) = prev_y {
                            write!(pts, "{:.2},{:.2} ", ax.map(x), ay.map(py)).unwrap();
                        }
                        prev_y = Some(y);
                    }
                    write!(pts, "{:.2},{:.2} ", ax.map(x), ay.map(y)).unwrap();
                }
                w(
                    &mut o,
                    format_args!(
                        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                        pts.trim_end()
                    ),
                );
            }
        }
        o.push_str("</g>\n");
    }

    // reference lines
    for r in &spec.ref_x {
        let x = ax.map(r.value);
        w(
            &mut o,
            format_args!(
                "<line class=\"ref-x\" x1=\"{x:.2}\" y1=\"{fy0:.2}\" x2=\"{x:.2}\" y2=\"{fy1:.2}\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n"
            ),
        );
        w(&mut o, format_args!("<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n", x + 4.0, fy0 + 14.0, escape(&r.label)));
    }
    for r in &spec.ref_y {
        let y = ay.map(r.value);
        w(
            &mut o,
            format_args!(
                "<line class=\"ref-y\" x1=\"{fx0:.2}\" y1=\"{y:.2}\" x2=\"{fx1:.2}\" y2=\"{y:.2}\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n"
            ),
        );
        w(&mut o, format_args!("<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n", fx0 + 4.0, y - 4.0, escape(&r.label)));
    }

    // legend
    let lx = fx1 - 150.0;
    let ly = fy0 + 10.0;
    w(
        &mut o,
        format_args!(
            "<g class=\"legend\">\n<rect x=\"{lx:.2}\" y=\"{ly:.2}\" width=\"140\" height=\"{:.2}\" fill=\"white\" stroke=\"#999\"/>\n",
            10.0 + 18.0 * nseries as f64
        ),
    );
    for (i, s) in spec.series.iter().enumerate() {
        let y = ly + 16.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        w(
            &mut o,
            format_args!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
                lx + 8.0,
                y - 4.0,
                lx + 28.0,
                y - 4.0
            ),
        );
        w(&mut o, format_args!("<text x=\"{:.2}\" y=\"{y:.2}\">{}</text>\n", lx + 34.0, escape(&s.label)));
    }
    o.push_str("</g>\n</svg>\n");
    Ok(o)
}

// chart builders for the metrics tables

/// Smoothed return curves of every compared policy.
pub fn returns_chart(c: &Comparison, title: &str) -> ChartSpec {
    let mut spec = ChartSpec::new(ChartKind::Line, title, "episode", "smoothed return");
    for (p, name) in c.policies.iter().enumerate() {
        let ys: Vec<f64> = c.smoothed.iter().map(|row| row[p]).collect();
        spec.series.push(Series::indexed(name.clone(), &ys));
    }
    spec
}

/// Delay CDFs with the delay budget and reliability target marked.
pub fn cdf_chart(c: &Comparison, d_max_s: f64, chi_h: f64) -> ChartSpec {
    let mut spec = ChartSpec::new(ChartKind::Cdf, "HRLLC delay CDF", "delay (s)", "Pr(delay <= x)")
        .with_ref_x(d_max_s, format!("D_max = {d_max_s} s"))
        .with_ref_y(chi_h, format!("target {chi_h}"));
    for (name, cdf) in c.policies.iter().zip(&c.cdfs) {
        if !cdf.is_empty() {
            spec.series.push(Series::new(name.clone(), cdf.clone()));
        }
    }
    spec
}

/// Mean PRBs, arrivals and departures per HRLLC user, grouped by DXI.
pub fn sensitivity_chart(t: &SensitivityTable) -> ChartSpec {
    let mut spec = ChartSpec::new(ChartKind::Bar, "Per-user means by dexterity", "DXI", "per slot");
    spec.categories = t.rows.iter().map(|r| tick_label(r.dxi)).collect();
    let col = |f: fn(&crate::metrics::SensitivityRow) -> f64| t.rows.iter().enumerate().map(|(i, r)| (i as f64, f(r))).collect();
    spec.series.push(Series::new("PRBs", col(|r| r.mean_prbs)));
    spec.series.push(Series::new("arrivals", col(|r| r.mean_arrivals)));
    spec.series.push(Series::new("departures", col(|r| r.mean_departures)));
    spec
}
