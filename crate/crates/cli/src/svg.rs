use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use survfunnel::funnel::{Classification, FunnelChart, LimitCurve};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 610.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 440.0;

fn color(c: Classification) -> &'static str {
    match c {
        Classification::Over => "#1b9e77",
        Classification::Target => "#7f7f7f",
        Classification::Under => "#d95f02",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    lx: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x.ln() - self.lx.0) / (self.lx.1 - self.lx.0) * (RIGHT - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = y.clamp(self.y.0, self.y.1);
        BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }
}

fn frame(chart: &FunnelChart) -> Frame {
    let (lo, hi) = chart.x_range;
    let lx = ((lo / 1.15).ln(), (hi * 1.15).ln());
    let ys = chart
        .outer
        .lower
        .iter()
        .chain(&chart.outer.upper)
        .chain(chart.points.iter().map(|p| &p.oe_ratio))
        .chain(std::iter::once(&chart.target))
        .copied()
        .filter(|v| v.is_finite());
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = 0.05 * (y1 - y0).max(0.1);
    y0 = (y0 - pad).max(0.0);
    y1 += pad;
    Frame { lx, y: (y0, y1) }
}

/// Round step for about five ticks over `span`.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn path(f: &Frame, xs: &[f64], ys: &[f64]) -> String {
    let mut d = String::new();
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, f.px(*x), f.py(*y));
    }
    d
}

fn limit_paths(out: &mut String, f: &Frame, curve: &LimitCurve, level: &str, dash: &str) {
    for (side, ys) in [("lower", &curve.lower), ("upper", &curve.upper)] {
        let _ = writeln!(
            out,
            r##"<path class="limit {level} {side}" d="{}" fill="none" stroke="#333333" stroke-width="1.2"{dash}/>"##,
            path(f, &curve.x, ys)
        );
    }
}

pub fn render_funnel_svg(chart: &FunnelChart) -> String {
    let f = frame(chart);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">Funnel plot: {} by horizon (p0 = {:.4})</text>"#,
        (LEFT + RIGHT) / 2.0,
        chart.outcome.label(),
        chart.p0
    );

    // axes and ticks
    let _ = writeln!(s, r#"<g class="axes" stroke="black">"#);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}"/>"#);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}"/>"#);
    let _ = writeln!(s, "</g>");
    let (xlo, xhi) = (f.lx.0.exp(), f.lx.1.exp());
    let mut decade = 10f64.powf(xlo.log10().floor());
    while decade <= xhi {
        for m in [1.0, 2.0, 5.0] {
            let v = decade * m;
            if v >= xlo && v <= xhi {
                let x = f.px(v);
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{}" stroke="black"/>"#, BOTTOM + 5.0);
                let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, BOTTOM + 18.0, fmt_tick(v));
            }
        }
        decade *= 10.0;
    }
    let step = nice_step(f.y.1 - f.y.0);
    let mut v = (f.y.0 / step).ceil() * step;
    while v <= f.y.1 + 1e-12 {
        let y = f.py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(v));
        v += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">Effective sample size</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 42.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0:.1}" text-anchor="middle" transform="rotate(-90 18 {0:.1})">Observed / Expected</text>"#,
        (TOP + BOTTOM) / 2.0
    );

    let ty = f.py(chart.target);
    let _ = writeln!(s, r##"<line class="target" x1="{LEFT}" y1="{ty:.2}" x2="{RIGHT}" y2="{ty:.2}" stroke="#333333" stroke-width="1"/>"##);
    limit_paths(&mut s, &f, &chart.inner, "inner", "");
    limit_paths(&mut s, &f, &chart.outer, "outer", r#" stroke-dasharray="6 4""#);

    for p in &chart.points {
        let _ = writeln!(
            s,
            r#"<circle class="point {}" cx="{:.2}" cy="{:.2}" r="4" fill="{}" fill-opacity="0.8"><title>{}</title></circle>"#,
            p.classification.as_str(),
            f.px(p.eff_n),
            f.py(p.oe_ratio),
            color(p.classification),
            escape(&p.center_id)
        );
    }

    let entries = [
        (Classification::Over, chart.counts.over),
        (Classification::Target, chart.counts.target),
        (Classification::Under, chart.counts.under),
    ];
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, (c, n)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{}" cy="{y}" r="4" fill="{}"/>"#, RIGHT + 20.0, color(*c));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{} ({n})</text>"#, RIGHT + 30.0, y + 4.0, c.as_str());
    }
    let y = TOP + 80.0;
    let _ = writeln!(s, r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#333333"/>"##, RIGHT + 12.0, RIGHT + 28.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">{:.0}% limits</text>"#, RIGHT + 32.0, y + 4.0, 100.0 * (1.0 - chart.inner.alpha));
    let y = y + 20.0;
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#333333" stroke-dasharray="6 4"/>"##,
        RIGHT + 12.0,
        RIGHT + 28.0
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">{:.2}% limits</text>"#, RIGHT + 32.0, y + 4.0, 100.0 * (1.0 - chart.outer.alpha));
    if !chart.omitted.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{} not plotted</text>"#, RIGHT + 12.0, y + 30.0, chart.omitted.len());
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

pub fn write_funnel_svg(chart: &FunnelChart, path: &Path) -> Result<()> {
    std::fs::write(path, render_funnel_svg(chart)).with_context(|| format!("writing {}", path.display()))
}
