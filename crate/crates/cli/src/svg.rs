//! Minimal SVG output for traces, densities and goodness-of-fit bands.

use std::fmt::Write;

use ergm_core::{kde, GofResult, GofTable, PosteriorSample};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 170.0;
const MARGIN: f64 = 48.0;
const MAX_POINTS: usize = 1500;

struct Svg {
    buf: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(buf, r#"<rect width="100%" height="100%" fill="white"/>"#);
        Svg { buf }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let escaped = s
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{escaped}</text>"#
        );
    }

    fn path(&mut self, points: &[(f64, f64)], style: &str, close: bool) {
        if points.is_empty() {
            return;
        }
        let mut d = String::new();
        for (k, (x, y)) in points.iter().enumerate() {
            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
        }
        if close {
            d.push_str(" Z");
        }
        let _ = writeln!(self.buf, r#"<path d="{d}" {style}/>"#);
    }

    fn circle(&mut self, x: f64, y: f64, fill: &str) {
        let _ = writeln!(
            self.buf,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{fill}"/>"#
        );
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// A plotting area with data ranges.
struct Panel {
    left: f64,
    top: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn new(left: f64, top: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Panel {
            left,
            top,
            x: widen(x),
            y: widen(y),
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let px = self.left + (x - self.x.0) / (self.x.1 - self.x.0) * PANEL_W;
        let py = self.top + PANEL_H - (y - self.y.0) / (self.y.1 - self.y.0) * PANEL_H;
        (px, py)
    }

    fn frame(&self, svg: &mut Svg, title: &str) {
        let _ = writeln!(
            svg.buf,
            r##"<rect x="{:.1}" y="{:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#444"/>"##,
            self.left, self.top
        );
        svg.text(self.left + PANEL_W / 2.0, self.top - 6.0, "middle", title);
        let bottom = self.top + PANEL_H;
        svg.text(self.left, bottom + 14.0, "start", &fmt_tick(self.x.0));
        svg.text(
            self.left + PANEL_W,
            bottom + 14.0,
            "end",
            &fmt_tick(self.x.1),
        );
        svg.text(self.left - 4.0, bottom, "end", &fmt_tick(self.y.0));
        svg.text(self.left - 4.0, self.top + 10.0, "end", &fmt_tick(self.y.1));
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn stacked(panels: usize) -> Svg {
    Svg::new(
        PANEL_W + 1.5 * MARGIN,
        panels as f64 * (PANEL_H + MARGIN) + MARGIN / 2.0,
    )
}

/// One panel per parameter with every chain drawn as a line.
pub fn trace_plot(sample: &PosteriorSample, labels: &[String]) -> String {
    let mut svg = stacked(labels.len());
    let step = sample.iters().div_ceil(MAX_POINTS).max(1);
    for (k, label) in labels.iter().enumerate() {
        let values = sample.pooled().column(k);
        let panel = Panel::new(
            MARGIN,
            MARGIN / 2.0 + k as f64 * (PANEL_H + MARGIN),
            (1.0, sample.iters() as f64),
            range(values.iter().copied()),
        );
        panel.frame(&mut svg, label);
        for c in 0..sample.nchains() {
            let points: Vec<(f64, f64)> = (0..sample.iters())
                .step_by(step)
                .map(|t| panel.map((t + 1) as f64, sample.draw(c, t)[k]))
                .collect();
            let style = format!(
                r#"fill="none" stroke="{}" stroke-width="0.8" stroke-opacity="0.8""#,
                PALETTE[c % PALETTE.len()]
            );
            svg.path(&points, &style, false);
        }
    }
    svg.finish()
}

/// One kernel density panel per parameter over the pooled draws.
pub fn density_plot(sample: &PosteriorSample, labels: &[String]) -> String {
    let mut svg = stacked(labels.len());
    for (k, label) in labels.iter().enumerate() {
        let curve = kde(&sample.pooled().column(k), 256);
        let top = MARGIN / 2.0 + k as f64 * (PANEL_H + MARGIN);
        if curve.is_empty() {
            let panel = Panel::new(MARGIN, top, (0.0, 1.0), (0.0, 1.0));
            panel.frame(&mut svg, &format!("{label} (constant)"));
            continue;
        }
        let panel = Panel::new(
            MARGIN,
            top,
            range(curve.iter().map(|p| p.0)),
            (0.0, range(curve.iter().map(|p| p.1)).1),
        );
        panel.frame(&mut svg, label);
        let mut points: Vec<(f64, f64)> = curve.iter().map(|&(x, y)| panel.map(x, y)).collect();
        points.push(panel.map(curve[curve.len() - 1].0, 0.0));
        points.push(panel.map(curve[0].0, 0.0));
        svg.path(
            &points,
            r##"fill="#1f77b4" fill-opacity="0.35" stroke="#1f77b4""##,
            true,
        );
    }
    svg.finish()
}

fn gof_panel(svg: &mut Svg, table: &GofTable, top: f64) {
    let lo = table.quantiles(0.05);
    let mid = table.quantiles(0.5);
    let hi = table.quantiles(0.95);
    let bins = table.observed.len();
    let ymax = range(hi.iter().chain(&table.observed).copied()).1;
    let panel = Panel::new(MARGIN, top, (0.0, (bins - 1) as f64), (0.0, ymax));
    panel.frame(
        svg,
        &format!(
            "{} (bins {} to {})",
            table.statistic.name(),
            table.labels[0],
            table.labels[bins - 1]
        ),
    );
    let mut band: Vec<(f64, f64)> = hi
        .iter()
        .enumerate()
        .map(|(b, &v)| panel.map(b as f64, v))
        .collect();
    band.extend(
        lo.iter()
            .enumerate()
            .rev()
            .map(|(b, &v)| panel.map(b as f64, v)),
    );
    svg.path(
        &band,
        r##"fill="#999" fill-opacity="0.35" stroke="none""##,
        true,
    );
    let median: Vec<(f64, f64)> = mid
        .iter()
        .enumerate()
        .map(|(b, &v)| panel.map(b as f64, v))
        .collect();
    svg.path(
        &median,
        r##"fill="none" stroke="#555" stroke-dasharray="4 3""##,
        false,
    );
    let observed: Vec<(f64, f64)> = table
        .observed
        .iter()
        .enumerate()
        .map(|(b, &v)| panel.map(b as f64, v))
        .collect();
    svg.path(
        &observed,
        r##"fill="none" stroke="#d62728" stroke-width="1.5""##,
        false,
    );
    for (x, y) in observed {
        svg.circle(x, y, "#d62728");
    }
}

/// 5–95% replicate bands with the median dashed and the observed network
/// in red, one panel per statistic.
pub fn gof_plot(result: &GofResult) -> String {
    let tables = result.tables();
    let mut svg = stacked(tables.len());
    for (k, table) in tables.iter().enumerate() {
        gof_panel(
            &mut svg,
            table,
            MARGIN / 2.0 + k as f64 * (PANEL_H + MARGIN),
        );
    }
    svg.finish()
}
