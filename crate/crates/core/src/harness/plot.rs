//! CTR-versus-episode learning curves as standalone SVG.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::metrics::{read_metrics, MetricsRecord};
use super::Variant;
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 45.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// One curve: per-episode mean CTR across seeds with the seed range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub label: String,
    pub variant: Variant,
    /// `(episode, mean, min, max)`.
    pub points: Vec<(usize, f64, f64, f64)>,
}

fn series_for(label: String, variant: Variant, rows: &[&MetricsRecord]) -> PlotSeries {
    let mut by_episode: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_episode.entry(r.episode).or_default().push(r.ctr);
    }
    let points = by_episode
        .into_iter()
        .map(|(ep, v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (ep, mean, lo, hi)
        })
        .collect();
    PlotSeries { label, variant, points }
}

/// Series per (input, variant) in input order, variants in order of first
/// appearance.
pub fn build_series(inputs: &[(String, Vec<MetricsRecord>)]) -> Vec<PlotSeries> {
    let mut out = Vec::new();
    for (name, rows) in inputs {
        let mut order: Vec<Variant> = Vec::new();
        for r in rows {
            if !order.contains(&r.variant) {
                order.push(r.variant);
            }
        }
        for v in order {
            let picked: Vec<&MetricsRecord> = rows.iter().filter(|r| r.variant == v).collect();
            let label = if inputs.len() > 1 {
                format!("{} ({name})", v.label())
            } else {
                v.label().to_string()
            };
            out.push(series_for(label, v, &picked));
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series. Output depends only on the input values.
pub fn plot(series: &[PlotSeries]) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y1) = (usize::MAX, 0usize, 0.0f64);
    for &(ep, _, _, hi) in all {
        x0 = x0.min(ep);
        x1 = x1.max(ep);
        y1 = y1.max(hi);
    }
    if x0 == usize::MAX {
        x0 = 0;
    }
    let (fx0, mut fx1) = (x0 as f64, x1 as f64);
    if fx1 <= fx0 {
        fx1 = fx0 + 1.0;
    }
    let y1 = if y1 > 0.0 { (y1 * 1.05).min(1.0).max(y1) } else { 1.0 };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - fx0) / (fx1 - fx0) * pw;
    let sy = |y: f64| TOP + ph - y / y1 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for k in 0..=4 {
        let fx = fx0 + (fx1 - fx0) * k as f64 / 4.0;
        let fy = y1 * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.0}</text>"##,
            sx(fx),
            TOP + ph + 15.0,
            fx
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"##,
            LEFT - 5.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">episode</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">CTR</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-label="{}">"#, escape(&ser.label));
        if ser.points.len() > 1 {
            let mut band = String::new();
            for &(ep, _, _, hi) in &ser.points {
                let _ = write!(band, "{:.2},{:.2} ", sx(ep as f64), sy(hi));
            }
            for &(ep, _, lo, _) in ser.points.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", sx(ep as f64), sy(lo));
            }
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                band.trim_end()
            );
            let line: Vec<String> = ser
                .points
                .iter()
                .map(|&(ep, m, _, _)| format!("{:.2},{:.2}", sx(ep as f64), sy(m)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                line.join(" ")
            );
        } else if let Some(&(ep, m, _, _)) = ser.points.first() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(ep as f64),
                sy(m)
            );
        }
        let ly = TOP + 10.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(&ser.label)
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Serialize)]
struct PointRow<'a> {
    series: &'a str,
    variant: Variant,
    episode: usize,
    mean_ctr: f64,
    min_ctr: f64,
    max_ctr: f64,
}

/// Reads metrics CSVs and writes `out` plus a companion CSV of the plotted
/// points next to it.
pub fn plot_files(paths: &[&Path], out: &Path) -> Result<Vec<PlotSeries>> {
    if paths.is_empty() {
        return Err(Error::invalid("no metrics files given"));
    }
    let mut inputs = Vec::new();
    for p in paths {
        let rows = read_metrics(p).map_err(|e| match e {
            Error::Schema(m) => Error::invalid(format!("schema mismatch: {m}")),
            Error::UnsupportedVersion { path, found } => {
                Error::invalid(format!("schema mismatch: {} has version line {found:?}", path.display()))
            }
            other => other,
        })?;
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        inputs.push((name, rows));
    }
    let series = build_series(&inputs);
    std::fs::write(out, plot(&series)).map_err(|e| Error::io(out, e))?;
    let companion = out.with_extension("csv");
    let mut w = csv::Writer::from_path(&companion)?;
    for ser in &series {
        for &(episode, mean_ctr, min_ctr, max_ctr) in &ser.points {
            w.serialize(PointRow {
                series: &ser.label,
                variant: ser.variant,
                episode,
                mean_ctr,
                min_ctr,
                max_ctr,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(&companion, e))?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(v: Variant, seed: u64, episode: usize, ctr: f64) -> MetricsRecord {
        MetricsRecord {
            variant: v,
            seed,
            episode,
            env_steps: 0,
            ctr,
            episode_return: 0.0,
            threshold_t: 1.0,
            buffer_size: 0,
            augmented_count: 0,
            j_q: 0.0,
            j_v: 0.0,
            j_pi: 0.0,
            j_p: 0.0,
            alpha_t: 0.2,
            eval_fingerprint: String::new(),
        }
    }

    #[test]
    fn single_point_renders_marker() {
        let s = build_series(&[("m".into(), vec![rec(Variant::Imrl, 0, 10, 0.4)])]);
        let svg = plot(&s);
        assert!(svg.contains("<circle"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn seeds_are_aggregated_per_episode() {
        let rows = vec![
            rec(Variant::Imrl, 0, 10, 0.2),
            rec(Variant::Imrl, 1, 10, 0.4),
            rec(Variant::Imrl, 0, 20, 0.5),
            rec(Variant::Imrl, 1, 20, 0.7),
        ];
        let s = build_series(&[("m".into(), rows)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points[0].0, 10);
        assert!((s[0].points[0].1 - 0.3).abs() < 1e-12);
        assert_eq!((s[0].points[1].2, s[0].points[1].3), (0.5, 0.7));
    }

    #[test]
    fn identical_inputs_overlap_exactly() {
        let rows = vec![rec(Variant::ImrlA, 0, 10, 0.2), rec(Variant::ImrlA, 0, 20, 0.6)];
        let s = build_series(&[("a".into(), rows.clone()), ("b".into(), rows)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points, s[1].points);
        let svg = plot(&s);
        let lines: Vec<&str> = svg.lines().filter(|l| l.starts_with("<polyline")).collect();
        let strip = |l: &str| l.split("stroke=").next().unwrap().to_string();
        assert_eq!(strip(lines[0]), strip(lines[1]));
    }

    #[test]
    fn legend_follows_file_order() {
        let rows = vec![
            rec(Variant::ImrlKl, 0, 10, 0.1),
            rec(Variant::Imrl, 0, 10, 0.2),
            rec(Variant::ImrlE, 0, 10, 0.3),
        ];
        let s = build_series(&[("m".into(), rows)]);
        let labels: Vec<&str> = s.iter().map(|x| x.label.as_str()).collect();
        assert_eq!(labels, ["IMRL-KL", "IMRL", "IMRL-E"]);
    }
}
