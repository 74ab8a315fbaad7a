//! Minimal static SVG charts: lines, dashed lines, scatter points and
//! filled polygons on linear axes.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Points,
    /// Closed polygon, drawn translucent.
    Fill,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub style: Style,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, color: &str, style: Style) -> Self {
        Series { name: name.into(), points, color: color.into(), style }
    }

    /// Polygon between an upper and a lower curve sharing x values.
    pub fn band(name: impl Into<String>, x: &[f64], lower: &[f64], upper: &[f64], color: &str) -> Self {
        let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(upper.iter().copied()).collect();
        pts.extend(x.iter().copied().zip(lower.iter().copied()).rev());
        Series::new(name, pts, color, Style::Fill)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub width: f64,
    pub height: f64,
    /// Fixed axis ranges; computed from the data when absent.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom

fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e6).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            width: 640.0,
            height: 420.0,
            x_range: None,
            y_range: None,
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let finite = self.series.iter().flat_map(|s| &s.points).filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let pad = |lo: f64, hi: f64| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 * (hi.abs() + 1.0) {
                (lo - 0.5 * (lo.abs() + 1.0), hi + 0.5 * (hi.abs() + 1.0))
            } else {
                (lo, hi + 0.02 * (hi - lo))
            }
        };
        (self.x_range.unwrap_or_else(|| pad(x0, x1)), self.y_range.unwrap_or_else(|| pad(y0, y1)))
    }

    /// The chart body as a `<g>` element, for embedding in a grid.
    pub fn group(&self, dx: f64, dy: f64) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let (ml, mr, mt, mb) = MARGIN;
        let pw = self.width - ml - mr;
        let ph = self.height - mt - mb;
        let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;
        let mut g = String::new();
        let _ = writeln!(g, r#"<g transform="translate({dx},{dy})" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(g, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, self.width, self.height);
        let _ = writeln!(
            g,
            r#"<defs><clipPath id="clip{dx}_{dy}"><rect x="{ml}" y="{mt}" width="{pw}" height="{ph}"/></clipPath></defs>"#
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(g, r##"<line x1="{x:.2}" y1="{mt}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##, mt + ph);
            let _ =
                writeln!(g, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, mt + ph + 15.0, fmt_num(t));
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(g, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/>"##, ml + pw);
            let _ =
                writeln!(g, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 5.0, y + 4.0, fmt_num(t));
        }
        let _ = writeln!(g, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(g, r#"<g clip-path="url(#clip{dx}_{dy})">"#);
        for s in &self.series {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            match s.style {
                Style::Line | Style::Dashed => {
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        g,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                        pts.join(" "),
                        s.color
                    );
                }
                Style::Fill => {
                    let _ = writeln!(
                        g,
                        r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                        pts.join(" "),
                        s.color
                    );
                }
                Style::Points => {
                    for p in &pts {
                        let (x, y) = p.split_once(',').expect("formatted pair");
                        let _ =
                            writeln!(g, r#"<circle cx="{x}" cy="{y}" r="1.8" fill="{}" fill-opacity="0.6"/>"#, s.color);
                    }
                }
            }
        }
        let _ = writeln!(g, "</g>");
        let _ = writeln!(
            g,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            ml + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            g,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            self.height - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            g,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        );
        let mut ly = mt + 12.0;
        for s in self.series.iter().filter(|s| !s.name.is_empty()) {
            let lx = ml + pw - 150.0;
            let _ = writeln!(g, r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="8" fill="{}"/>"#, ly - 8.0, s.color);
            let _ = writeln!(g, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 16.0, escape(&s.name));
            ly += 14.0;
        }
        g.push_str("</g>\n");
        g
    }

    pub fn render(&self) -> String {
        grid(std::slice::from_ref(self), 1)
    }
}

/// Several plots laid out row-major in `cols` columns.
pub fn grid(plots: &[Plot], cols: usize) -> String {
    let cols = cols.max(1);
    let w = plots.iter().map(|p| p.width).fold(0.0, f64::max);
    let h = plots.iter().map(|p| p.height).fold(0.0, f64::max);
    let rows = plots.len().div_ceil(cols);
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w * cols as f64,
        h * rows as f64,
        w * cols as f64,
        h * rows as f64
    );
    out.push('\n');
    for (i, p) in plots.iter().enumerate() {
        out.push_str(&p.group((i % cols) as f64 * w, (i / cols) as f64 * h));
    }
    out.push_str("</svg>\n");
    out
}
