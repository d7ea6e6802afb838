//! Bare-bones SVG output for histograms and scatter plots.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title)).unwrap();
    writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    )
    .unwrap();
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axis_labels(s: &mut String, xlabel: &str, ylabel: &str, xmax: f64, ymax: f64) {
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel)).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    )
    .unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, fmt_num(ymax)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">0</text>"#, PAD - 4.0, H - PAD).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 14.0, fmt_num(xmax)).unwrap();
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Bar chart of `(value, count)` pairs; values are placed in order.
pub fn histogram(title: &str, xlabel: &str, bars: &[(u64, u64)]) -> String {
    let mut s = header(title);
    let ymax = bars.iter().map(|b| b.1).max().unwrap_or(1).max(1) as f64;
    let xmax = bars.last().map_or(0, |b| b.0) as f64;
    let slot = (W - 2.0 * PAD) / bars.len().max(1) as f64;
    for (i, &(v, c)) in bars.iter().enumerate() {
        let h = (H - 2.0 * PAD) * c as f64 / ymax;
        let x = PAD + i as f64 * slot;
        writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4a78b5"><title>{v}: {c}</title></rect>"##,
            x + 0.1 * slot,
            H - PAD - h,
            0.8 * slot
        )
        .unwrap();
    }
    axis_labels(&mut s, xlabel, "count", xmax, ymax);
    s.push_str("</svg>\n");
    s
}

/// Scatter plot with the diagonal `y = x` drawn for reference.
pub fn scatter(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let mut s = header(title);
    let max = points
        .iter()
        .flat_map(|&(x, y)| [x, y])
        .fold(1.0f64, f64::max);
    let px = |v: f64| PAD + (W - 2.0 * PAD) * v / max;
    let py = |v: f64| H - PAD - (H - 2.0 * PAD) * v / max;
    writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        px(0.0),
        py(0.0),
        px(max),
        py(max)
    )
    .unwrap();
    for &(x, y) in points {
        writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#c0392b"><title>({x:.3}, {y:.3})</title></circle>"##,
            px(x),
            py(y)
        )
        .unwrap();
    }
    axis_labels(&mut s, xlabel, ylabel, max, max);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_is_well_formed() {
        let s = histogram("degrees", "degree", &[(0, 3), (1, 5), (4, 1)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<rect x=").count(), 3);
    }

    #[test]
    fn scatter_escapes_titles() {
        let s = scatter("a < b", "x", "y", &[(1.0, 2.0)]);
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<circle").count(), 1);
    }
}
