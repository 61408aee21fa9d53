//! Minimal static SVG boxplots.

use std::fmt::Write;

use crate::stats::FiveNumber;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= target as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// One box per group; whiskers span min to max.
pub fn boxplot(title: &str, x_label: &str, y_label: &str, groups: &[(String, Option<FiveNumber>)]) -> String {
    let boxes: Vec<&FiveNumber> = groups.iter().filter_map(|(_, b)| b.as_ref()).collect();
    let (mut lo, mut hi) = boxes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), b| (l.min(b.min), h.max(b.max)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);
    let slot = plot_w / groups.len().max(1) as f64;
    let half = (slot * 0.3).min(30.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/><line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        TOP + plot_h,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    for t in nice_ticks(lo, hi, 6) {
        let ty = y(t);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{ty:.2}" x2="{LEFT}" y2="{ty:.2}" stroke="black"/><line x1="{LEFT}" y1="{ty:.2}" x2="{}" y2="{ty:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT + plot_w,
            LEFT - 8.0,
            ty + 4.0,
            fmt_tick(t)
        );
    }
    for (i, (label, b)) in groups.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            escape(label)
        );
        let Some(b) = b else { continue };
        let _ = writeln!(
            s,
            r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"##,
            y(b.max),
            y(b.min),
            cx - half / 2.0,
            y(b.max),
            cx + half / 2.0,
            y(b.max),
            cx - half / 2.0,
            y(b.min),
            cx + half / 2.0,
            y(b.min)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2"/>"##,
            cx - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5),
            cx - half,
            y(b.median),
            cx + half,
            y(b.median)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_boxes() {
        let b = FiveNumber { min: 0.0, q1: 1.0, median: 2.0, q3: 3.0, max: 4.0 };
        let svg = boxplot("t", "ε", "value", &[("0".into(), Some(b)), ("1".into(), None), ("2".into(), Some(b))]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect x=").count(), 2);
    }

    #[test]
    fn ticks() {
        assert_eq!(nice_ticks(0.0, 1.0, 5), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(fmt_tick(0.6000000000000001), "0.6");
        assert_eq!(fmt_tick(-0.0), "0");
    }
}
