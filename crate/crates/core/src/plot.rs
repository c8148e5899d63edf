//! Static SVG line charts of mean quarantined counts.

use std::fmt::Write;

use crate::sim::ProfileComparison;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const DASHES: [&str; 4] = ["", "8 4", "2 3", "10 3 2 3"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick step covering `max` with about five ticks.
fn tick_step(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// One line per (profile, category): colour by category, dash pattern by
/// profile. `categories` selects category indices; all when empty.
pub fn quarantine_svg(cmp: &ProfileComparison, categories: &[usize], title: &str) -> String {
    let cats: Vec<usize> = if categories.is_empty() {
        (0..cmp.category_ids.len()).collect()
    } else {
        categories.to_vec()
    };
    let days = cmp.mean_quarantined.first().map_or(0, Vec::len);
    let y_max = cmp
        .mean_quarantined
        .iter()
        .flat_map(|p| p.iter().flat_map(|d| cats.iter().map(move |&c| d[c])))
        .fold(0.0f64, f64::max);
    let y_step = tick_step(y_max);
    let y_top = (y_max / y_step).ceil().max(1.0) * y_step;
    let x_top = days.max(1) as f64;
    let x_step = tick_step(x_top);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |day: f64| LEFT + day / x_top * plot_w;
    let sy = |v: f64| TOP + plot_h - v / y_top * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let mut y = 0.0;
    while y <= y_top + 1e-9 {
        let py = sy(y);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0,
            fmt_tick(y)
        );
        y += y_step;
    }
    let mut x = 0.0;
    while x <= x_top + 1e-9 {
        let px = sx(x);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            fmt_tick(x)
        );
        x += x_step;
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{LEFT},{TOP} {LEFT},{:.2} {:.2},{:.2}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">day</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">mean quarantined</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut legend_y = TOP + 10.0;
    for (p, series) in cmp.mean_quarantined.iter().enumerate() {
        let dash = DASHES[p % DASHES.len()];
        for &c in &cats {
            let color = COLORS[c % COLORS.len()];
            let points: Vec<String> = series
                .iter()
                .enumerate()
                .map(|(d, v)| format!("{:.2},{:.2}", sx((d + 1) as f64), sy(v[c])))
                .collect();
            let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash_attr}/>"#,
                points.join(" ")
            );
            let lx = WIDTH - RIGHT + 15.0;
            let label = format!("{} / {}", cmp.labels[p], cmp.category_ids[c]);
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="1.8"{dash_attr}/><text x="{}" y="{}">{}</text>"#,
                lx + 28.0,
                lx + 34.0,
                legend_y + 4.0,
                escape(&label)
            );
            legend_y += 18.0;
        }
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comparison() -> ProfileComparison {
        ProfileComparison {
            labels: vec!["A".into(), "B<1>".into()],
            category_ids: vec!["x".into(), "y".into()],
            replicates: 1,
            mean_quarantined: vec![
                vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]],
                vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![0.5, 0.0]],
            ],
            runs: Vec::new(),
        }
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(80.0), 20.0);
        assert_eq!(tick_step(4.3), 1.0);
        assert_eq!(tick_step(0.0), 1.0);
    }

    #[test]
    fn one_line_per_profile_and_category() {
        let svg = quarantine_svg(&comparison(), &[], "t");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline points=").count(), 1 + 4);
        assert!(svg.contains("B&lt;1&gt; / y"));
    }

    #[test]
    fn category_selection() {
        let svg = quarantine_svg(&comparison(), &[1], "t");
        assert_eq!(svg.matches("<polyline points=").count(), 1 + 2);
        assert!(!svg.contains("A / x"));
    }
}
