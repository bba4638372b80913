//! Minimal self-contained SVG plots: log-y error curves with error bars.

use std::fmt::Write;

use super::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, y, std_error)`.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fraction(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo) / (self.hi - self.lo)
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }
}

/// Decade span `[floor(log₁₀ min), ceil(log₁₀ max)]`, at least one decade wide.
fn decades(min: f64, max: f64) -> (f64, f64) {
    let lo = min.log10().floor();
    let mut hi = max.log10().ceil();
    if hi <= lo {
        hi = lo + 1.0;
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders all series into one SVG document.
///
/// The y axis is logarithmic with one major gridline at the lower edge of
/// every decade spanned by the data. Points with `y ≤ 0` cannot be shown on
/// a log axis and are rejected.
pub fn emit_svg_plot(series: &[Series], style: &PlotStyle) -> Result<String, CliError> {
    let all: Vec<&(f64, f64, f64)> = series.iter().flat_map(|s| &s.points).collect();
    if all.len() < 2 {
        return Err(CliError::Validation {
            key: "plot".into(),
            message: "need at least two points to plot".into(),
        });
    }
    if let Some(p) = all.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(CliError::Validation {
            key: "plot".into(),
            message: format!("non-positive value {} cannot be drawn on a log axis", p.1),
        });
    }
    if style.log_x && all.iter().any(|p| !(p.0 > 0.0)) {
        return Err(CliError::Validation {
            key: "plot".into(),
            message: "log x axis needs positive x values".into(),
        });
    }
    let ymin = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (ylo, yhi) = decades(ymin, ymax);
    let y = Axis {
        lo: ylo,
        hi: yhi,
        log: true,
    };
    let xmin = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let x = if style.log_x {
        let (lo, hi) = decades(xmin, xmax);
        Axis { lo, hi, log: true }
    } else {
        let pad = if xmax > xmin { 0.03 * (xmax - xmin) } else { 1.0 };
        Axis {
            lo: xmin - pad,
            hi: xmax + pad,
            log: false,
        }
    };
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |v: f64| MARGIN_LEFT + x.fraction(v) * pw;
    let py = |v: f64| MARGIN_TOP + (1.0 - y.fraction(v)) * ph;
    let bottom = MARGIN_TOP + ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        escape(&style.title)
    );
    for k in (ylo as i64)..(yhi as i64) {
        let v = 10f64.powi(k as i32);
        let yy = py(v);
        let _ = writeln!(
            s,
            r##"<line class="grid-major" x1="{MARGIN_LEFT}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#cccccc"/>"##,
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{k}</text>"#,
            MARGIN_LEFT - 6.0,
            yy + 4.0
        );
    }
    if x.log {
        for k in (x.lo as i64)..=(x.hi as i64) {
            let xx = px(10f64.powi(k as i32));
            let _ = writeln!(
                s,
                r##"<line class="grid-major-x" x1="{xx:.2}" y1="{MARGIN_TOP}" x2="{xx:.2}" y2="{bottom:.2}" stroke="#eeeeee"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">1e{k}</text>"#,
                bottom + 16.0
            );
        }
    } else {
        let ticks = 5;
        for i in 0..=ticks {
            let v = x.lo + (x.hi - x.lo) * i as f64 / ticks as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#,
                px(v),
                bottom + 16.0,
                v
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        escape(&style.y_label)
    );

    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" stroke="{color}" fill="{color}">"#);
        if series.points.len() > 1 {
            let coords: Vec<String> = series
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1)))
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" points="{}"/>"#, coords.join(" "));
        }
        for &(xv, yv, se) in &series.points {
            let (cx, cy) = (px(xv), py(yv));
            if se > 0.0 {
                let top = py(yv + se).max(MARGIN_TOP);
                let low = if yv - se > 0.0 { py(yv - se).min(bottom) } else { bottom };
                let _ = writeln!(
                    s,
                    r#"<line class="errorbar" x1="{cx:.2}" y1="{top:.2}" x2="{cx:.2}" y2="{low:.2}"/>"#
                );
            }
            let _ = writeln!(s, r#"<circle class="marker" cx="{cx:.2}" cy="{cy:.2}" r="3"/>"#);
        }
        let _ = writeln!(s, "</g>");
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 9.0,
            lx + 14.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
