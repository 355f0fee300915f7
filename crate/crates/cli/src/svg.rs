//! Minimal line-plot renderer. Output depends only on the data, so repeated
//! runs produce identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a connected line.
    pub markers: bool,
    pub dashed: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            markers: false,
            dashed: false,
        }
    }

    pub fn markers(mut self) -> Self {
        self.markers = true;
        self
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Default::default()
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter_map(|v| transform(v, log)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.04 * (hi - lo);
        (lo, hi) = (lo - pad, hi + pad);
        Axis { lo, hi, log }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        transform(v, self.log).map(|t| (t - self.lo) / (self.hi - self.lo))
    }

    /// Tick positions in transformed coordinates, with labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (first, last) = (self.lo.ceil() as i64, self.hi.floor() as i64);
            if last > first {
                let stride = ((last - first) / 8).max(1);
                return (first..=last)
                    .filter(|k| (k - first) % stride == 0)
                    .map(|k| (k as f64, format!("1e{k}")))
                    .collect();
            }
            // less than two decades in view
            return [self.lo, self.hi]
                .iter()
                .map(|&v| (v, format!("{:.2e}", 10f64.powf(v))))
                .collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|f| f * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut k = (self.lo / step).ceil() as i64;
        while (k as f64) * step <= self.hi + 1e-9 * step {
            let v = k as f64 * step;
            out.push((v, tick_label(v, step)));
            k += 1;
        }
        out
    }
}

fn transform(v: f64, log: bool) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    if log {
        (v > 0.0).then(|| v.log10())
    } else {
        Some(v)
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let v = if v.abs() < 1e-9 * step { 0.0 } else { v };
    if step >= 1.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if step >= 1e-3 && v.abs() < 1e6 {
        let digits = (-step.log10().floor()) as usize;
        format!("{v:.digits$}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(plot: &Plot) -> String {
    let x = Axis::fit(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), plot.log_x);
    let y = Axis::fit(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), plot.log_y);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |u: f64| LEFT + u * pw;
    let py = |u: f64| TOP + (1.0 - u) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&plot.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in x.ticks() {
        let xp = px((v - x.lo) / (x.hi - x.lo));
        let _ = writeln!(
            s,
            r##"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="#ccc"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0,
            escape(&label)
        );
    }
    for (v, label) in y.ticks() {
        let yp = py((v - y.lo) / (y.hi - y.lo));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{yp:.2}" x2="{:.2}" y2="{yp:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            yp + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    for (i, series) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = series
            .points
            .iter()
            .filter_map(|&(a, b)| Some((px(x.unit(a)?), py(y.unit(b)?))))
            .collect();
        if series.markers {
            for (a, b) in &pts {
                let _ = writeln!(s, r#"<circle cx="{a:.2}" cy="{b:.2}" r="2.5" fill="{color}"/>"#);
            }
        } else if !pts.is_empty() {
            let coords: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly + 1.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_deterministically() {
        let plot = Plot::new("t", "x", "y <1>")
            .log_y()
            .with(Series::line("a", vec![(1.0, 1e-3), (2.0, 1e-1), (3.0, 0.0)]))
            .with(Series::line("b", vec![(1.0, 0.5)]).markers());
        let a = render(&plot);
        assert_eq!(a, render(&plot));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("y &lt;1&gt;"));
        assert!(a.contains("<polyline") && a.contains("<circle"));
    }

    #[test]
    fn linear_ticks_cover_range() {
        let ax = Axis::fit([0.0, 1.0].into_iter(), false);
        let t = ax.ticks();
        assert!(t.len() >= 4);
        assert!(t.iter().all(|(v, _)| *v >= ax.lo && *v <= ax.hi));
        assert_eq!(t[0].1, "0.0");
    }
}
