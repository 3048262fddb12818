//! Deterministic SVG line plots of sweep results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::sweep::SweepRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 45.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#333333"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub file_name: &'static str,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Figure {
    /// True when at least one series has two points to join.
    pub fn is_plottable(&self) -> bool {
        self.series.iter().any(|s| s.points.len() >= 2)
    }
}

fn collect<F>(rows: &[SweepRow], f: F) -> Vec<(f64, f64)>
where
    F: Fn(&SweepRow) -> Option<(f64, f64)>,
{
    let mut pts: Vec<_> = rows.iter().filter_map(&f).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn positive(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.into_iter().filter(|p| p.1 > 0.0).collect()
}

/// The four standard figures. Some may not be plottable; [`write_figures`]
/// skips those.
pub fn render_figures(rows: &[SweepRow]) -> Vec<Figure> {
    let not = Figure {
        file_name: "t_not_vs_r.svg",
        title: "NOT duration vs density-maxima separation".into(),
        x_label: "r (nm)".into(),
        y_label: "t_NOT (ns)".into(),
        log_y: true,
        series: vec![Series {
            label: "t_NOT".into(),
            points: positive(collect(rows, |r| Some((r.r_nm?, r.t_not_s? * 1e9)))),
        }],
    };

    let mut widths: Vec<f64> = rows.iter().filter(|r| r.t_cnot_s.is_some()).map(|r| r.w).collect();
    widths.sort_by(f64::total_cmp);
    widths.dedup();
    let cnot_series = widths
        .iter()
        .map(|&w| {
            let same: Vec<&SweepRow> = rows.iter().filter(|r| r.w == w).collect();
            let rs: Vec<f64> = same.iter().filter_map(|r| r.r_nm).collect();
            let label = if rs.is_empty() {
                format!("w = {w:.3}")
            } else {
                format!("r = {:.1} nm", rs.iter().sum::<f64>() / rs.len() as f64)
            };
            let points = positive(collect(rows, |r| {
                if r.w != w {
                    return None;
                }
                Some((r.big_r_nm?, r.t_cnot_s? * 1e9))
            }));
            Series { label, points }
        })
        .collect();
    let cnot = Figure {
        file_name: "t_cnot_vs_big_r.svg",
        title: "CNOT duration vs dot separation".into(),
        x_label: "R (nm)".into(),
        y_label: "t_CNOT (ns)".into(),
        log_y: true,
        series: cnot_series,
    };

    type Pick = fn(&SweepRow) -> Option<f64>;
    let channels: [(&str, Pick); 5] = [
        ("photon", |r| r.w_photon),
        ("deformation", |r| r.w_da),
        ("piezo transverse", |r| r.w_pa_t),
        ("piezo longitudinal", |r| r.w_pa_l),
        ("total", |r| r.total),
    ];
    let rates = Figure {
        file_name: "rates_vs_r.svg",
        title: "Relaxation rates vs density-maxima separation".into(),
        x_label: "r (nm)".into(),
        y_label: "rate (1/s)".into(),
        log_y: true,
        series: channels
            .iter()
            .map(|(label, pick)| Series {
                label: (*label).into(),
                points: positive(collect(rows, |r| Some((r.r_nm?, pick(r)?)))),
            })
            .collect(),
    };

    let eps = Figure {
        file_name: "eps10_vs_r.svg",
        title: "Tunnel splitting vs density-maxima separation".into(),
        x_label: "r (nm)".into(),
        y_label: "eps10 (ueV)".into(),
        log_y: true,
        series: vec![Series {
            label: "eps10".into(),
            points: positive(collect(rows, |r| Some((r.r_nm?, r.eps10_j? / (qdot_core::constants::MEV * 1e-3))))),
        }],
    };

    vec![not, cnot, rates, eps]
}

/// Writes every plottable figure into `dir`. Returns the
/// files written and a notice for each figure skipped.
pub fn write_figures(rows: &[SweepRow], dir: &Path) -> std::io::Result<(Vec<PathBuf>, Vec<String>)> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut skipped = Vec::new();
    for fig in render_figures(rows) {
        if !fig.is_plottable() {
            skipped.push(format!("skipped {}: no series has two plottable points", fig.file_name));
            continue;
        }
        let path = dir.join(fig.file_name);
        std::fs::write(&path, to_svg(&fig))?;
        written.push(path);
    }
    Ok((written, skipped))
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn linear_ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0)) };
    let step = nice_step(hi - lo, 5);
    let first = (lo / step).floor();
    let last = (hi / step).ceil();
    let ticks = (first as i64..=last as i64).map(|k| k as f64 * step).collect();
    (first * step, last * step, ticks)
}

fn log_ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let a = lo.log10().floor();
    let b = hi.log10().ceil().max(a + 1.0);
    let stride = ((b - a) / 8.0).ceil().max(1.0) as i64;
    let ticks = (a as i64..=b as i64).filter(|k| (k - a as i64) % stride == 0).map(|k| k as f64).collect();
    (a, b, ticks)
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG text of one figure. Pure function of its input.
pub fn to_svg(fig: &Figure) -> String {
    let pts = || fig.series.iter().flat_map(|s| s.points.iter());
    let (xmin, xmax) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ymin, ymax) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (xmin, xmax, ymin, ymax) = if xmin.is_finite() { (xmin, xmax, ymin, ymax) } else { (0.0, 1.0, 1.0, 10.0) };
    let (x0, x1, xt) = linear_ticks(xmin, xmax);
    let (y0, y1, yt) = if fig.log_y { log_ticks(ymin, ymax) } else { linear_ticks(ymin, ymax) };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| {
        let v = if fig.log_y { y.log10() } else { y };
        TOP + ph - (v - y0) / (y1 - y0) * ph
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>"##);

    for &t in &xt {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##,
            TOP + ph,
            TOP + ph + 5.0
        );
        let _ =
            writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 19.0, tick_label(t));
    }
    for &t in &yt {
        let y = TOP + ph - (t - y0) / (y1 - y0) * ph;
        let label = if fig.log_y { format!("1e{}", t as i64) } else { tick_label(t) };
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000"/>"##, LEFT - 5.0);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&fig.y_label)
    );

    for (k, series) in fig.series.iter().enumerate() {
        if series.points.is_empty() {
            continue;
        }
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for &(x, y) in &series.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
    }
    s.push_str("</svg>\n");
    s
}
