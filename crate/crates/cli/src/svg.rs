//! Minimal static line plots.

use std::fmt::Write as _;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series<'a> {
    pub label: String,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

impl<'a> Series<'a> {
    pub fn new(label: impl Into<String>, xs: &'a [f64], ys: &'a [f64]) -> Self {
        Self { label: label.into(), xs, ys }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// An 800×400 plot with one polyline per series, axis extents as tick
/// labels and a legend. `comments` go into a leading XML comment.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>], comments: &[String]) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.xs.iter().copied()));
    let (y0, y1) = range(series.iter().flat_map(|s| s.ys.iter().copied()));
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    for c in comments {
        let _ = writeln!(out, "<!-- {} -->", escape(&c.replace("--", "- -")));
    }
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" width=\"{WIDTH}\" height=\"{HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(out, "<text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>", WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(y_label)
    );
    let tick = |v: f64| format!("{v:.3}");
    let bottom = MARGIN_TOP + ph;
    let _ = writeln!(out, "<text x=\"{MARGIN_LEFT}\" y=\"{}\" font-size=\"10\">{}</text>", bottom + 14.0, tick(x0));
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
        MARGIN_LEFT + pw,
        bottom + 14.0,
        tick(x1)
    );
    let _ = writeln!(out, "<text x=\"{}\" y=\"{bottom}\" font-size=\"10\" text-anchor=\"end\">{}</text>", MARGIN_LEFT - 4.0, tick(y0));
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{}</text>",
        MARGIN_LEFT - 4.0,
        MARGIN_TOP + 10.0,
        tick(y1)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = String::new();
        for (&x, &y) in s.xs.iter().zip(s.ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
            }
        }
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>",
            pts.trim_end()
        );
        let ly = MARGIN_TOP + 14.0 + 14.0 * k as f64;
        let lx = MARGIN_LEFT + pw - 150.0;
        let _ = writeln!(out, "<line x1=\"{lx}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\"/>", ly - 4.0, lx + 20.0, ly - 4.0);
        let _ = writeln!(out, "<text x=\"{}\" y=\"{ly}\" font-size=\"10\">{}</text>", lx + 24.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}
