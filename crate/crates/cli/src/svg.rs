//! Minimal hand-rolled SVG line charts for result summaries.
//!
//! No drawing dependencies: the output is a fixed-size canvas with axes,
//! tick marks, one polyline with markers per series, and vertical bars for
//! the per-point spread. Coordinates are written with two decimals so the
//! file is deterministic across platforms.

use std::fmt::Write as _;

/// One plotted curve: `(x, y, half_spread)` per point, sorted by x by the
/// renderer.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 18.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

/// Smallest "round" step (1, 2, or 5 times a power of ten) not below `raw`,
/// so the tick count never exceeds the target by much.
fn nice_step(raw: f64) -> f64 {
    if !(raw > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac > 5.0 {
        10.0
    } else if frac > 2.0 {
        5.0
    } else if frac > 1.0 {
        2.0
    } else {
        1.0
    };
    nice * mag
}

/// Tick positions covering [lo, hi] with roughly `target` intervals.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let step = nice_step((hi - lo) / target.max(1) as f64);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * step {
        // Snap values like 0.30000000000000004 back onto the grid.
        out.push((t / step).round() * step);
        t += step;
    }
    out
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if a >= 1000.0 || a < 0.01 {
        format!("{x:.1e}")
    } else if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Render a line chart. Series points are sorted by x; y limits cover every
/// point plus its spread bar, padded 5% each side.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y, e) in &s.points {
            xs.push(x);
            ys.push(y - e);
            ys.push(y + e);
        }
    }
    let (x_lo, x_hi) = span(&xs);
    let (y_lo, y_hi) = span(&ys);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        fmt2(WIDTH / 2.0),
        escape(title)
    );

    // Axes box.
    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        fmt2(MARGIN_L),
        fmt2(MARGIN_T),
        fmt2(plot_w),
        fmt2(plot_h)
    );

    for t in ticks(x_lo, x_hi, 6) {
        let x = px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#333"/>"##,
            fmt2(x),
            fmt2(MARGIN_T + plot_h),
            fmt2(MARGIN_T + plot_h + 5.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt2(x),
            fmt2(MARGIN_T + plot_h + 18.0),
            tick_label(t)
        );
    }
    for t in ticks(y_lo, y_hi, 6) {
        let y = py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}" stroke="#333"/>"##,
            fmt2(MARGIN_L - 5.0),
            fmt2(MARGIN_L),
            fmt2(y)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt2(MARGIN_L - 8.0),
            fmt2(y + 4.0),
            tick_label(t)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}" stroke="#ddd"/>"##,
            fmt2(MARGIN_L),
            fmt2(MARGIN_L + plot_w),
            fmt2(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        fmt2(MARGIN_L + plot_w / 2.0),
        fmt2(HEIGHT - 10.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        fmt2(MARGIN_T + plot_h / 2.0),
        fmt2(MARGIN_T + plot_h / 2.0),
        escape(y_label)
    );

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));

        for &(x, y, e) in &pts {
            if e > 0.0 {
                let (cx, y0, y1) = (px(x), py(y - e), py(y + e));
                let _ = writeln!(
                    out,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{3}" stroke-width="1"/>"#,
                    fmt2(cx),
                    fmt2(y0),
                    fmt2(y1),
                    color
                );
                for yy in [y0, y1] {
                    let _ = writeln!(
                        out,
                        r#"<line x1="{}" y1="{2}" x2="{}" y2="{2}" stroke="{3}" stroke-width="1"/>"#,
                        fmt2(cx - 3.0),
                        fmt2(cx + 3.0),
                        fmt2(yy),
                        color
                    );
                }
            }
        }
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y, _)| format!("{},{}", fmt2(px(x)), fmt2(py(y))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            path.join(" "),
            color
        );
        for &(x, y, _) in &pts {
            let _ = writeln!(
                out,
                r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#,
                fmt2(px(x)),
                fmt2(py(y)),
                color
            );
        }
        // Legend entry.
        let ly = MARGIN_T + 14.0 + 16.0 * si as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{2}" x2="{}" y2="{2}" stroke="{3}" stroke-width="2"/>"#,
            fmt2(MARGIN_L + plot_w - 120.0),
            fmt2(MARGIN_L + plot_w - 100.0),
            fmt2(ly - 4.0),
            color
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            fmt2(MARGIN_L + plot_w - 94.0),
            fmt2(ly),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn span(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed_and_contains_all_series() {
        let series = vec![
            Series {
                label: "iid".into(),
                points: vec![(32.0, 10.0, 1.0), (64.0, 15.0, 0.8), (96.0, 18.0, 0.5)],
            },
            Series {
                label: "rakeness r=0.038".into(),
                points: vec![(32.0, 13.0, 1.1), (64.0, 17.0, 0.7), (96.0, 19.0, 0.4)],
            },
        ];
        let svg = line_chart("ARSNR vs M", "measurements M", "ARSNR [dB]", &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("rakeness r=0.038"));
        assert!(svg.contains("ARSNR [dB]"));
        // Deterministic output.
        assert_eq!(
            svg,
            line_chart("ARSNR vs M", "measurements M", "ARSNR [dB]", &series)
        );
    }

    #[test]
    fn tick_generation_covers_the_range_with_round_steps() {
        let t = ticks(0.0, 100.0, 6);
        assert!(t.len() >= 4 && t.len() <= 9);
        assert!((t[0] - 0.0).abs() < 1e-9);
        assert!(t.iter().all(|v| *v >= -1e-9 && *v <= 100.0 + 1e-6));
        let steps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        for s in &steps {
            assert!((s - steps[0]).abs() < 1e-9, "uneven ticks {steps:?}");
        }
        assert_eq!(tick_label(20.0), "20");
        assert_eq!(tick_label(0.25), "0.25");
    }

    #[test]
    fn degenerate_inputs_do_not_panic() {
        let svg = line_chart(
            "flat",
            "x",
            "y",
            &[Series { label: "s".into(), points: vec![(1.0, 2.0, 0.0), (2.0, 2.0, 0.0)] }],
        );
        assert!(svg.contains("<polyline"));
        let empty = line_chart("none", "x", "y", &[]);
        assert!(empty.contains("</svg>"));
    }
}
