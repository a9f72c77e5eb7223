//! Minimal SVG rendering of result directories: the observation-space map
//! and learning curves. Everything is regenerated from the CSV artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::runner::{csv_reader, read_hash_tag, read_outcomes_csv};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const GOAL_SAMPLE: usize = 600;
const PALETTE: [&str; 7] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub taxel: usize,
    pub u: f64,
    pub v: f64,
    pub class: String,
    pub mean_error: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ObservationMap {
    pub title: String,
    pub config_hash: Option<String>,
    /// Every taxel of the patch.
    pub taxels: Vec<(f64, f64)>,
    /// Tested taxels with their class.
    pub summary: Vec<SummaryRow>,
    pub goals: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: [f64; 2],
    y: [f64; 2],
    scale: [f64; 2],
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, equal_aspect: bool) -> Frame {
        let mut x = [f64::INFINITY, f64::NEG_INFINITY];
        let mut y = x;
        for (px, py) in points {
            x = [x[0].min(px), x[1].max(px)];
            y = [y[0].min(py), y[1].max(py)];
        }
        if !x[0].is_finite() {
            x = [0.0, 1.0];
            y = [0.0, 1.0];
        }
        for r in [&mut x, &mut y] {
            if r[1] - r[0] < 1e-12 {
                r[0] -= 0.5;
                r[1] += 0.5;
            }
        }
        let w = WIDTH - 2.0 * MARGIN;
        let h = HEIGHT - 2.0 * MARGIN;
        let mut scale = [w / (x[1] - x[0]), h / (y[1] - y[0])];
        if equal_aspect {
            let s = scale[0].min(scale[1]);
            scale = [s, s];
        }
        Frame { x, y, scale }
    }

    fn px(&self, u: f64, v: f64) -> (f64, f64) {
        (
            MARGIN + (u - self.x[0]) * self.scale[0],
            HEIGHT - MARGIN - (v - self.y[0]) * self.scale[1],
        )
    }
}

fn header(out: &mut String, title: &str, hash: Option<&str>) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    if let Some(h) = hash {
        let _ = writeln!(out, "<!-- config_hash: {h} -->");
    }
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, y0) = f.px(f.x[0], f.y[0]);
    let (x1, y1) = f.px(f.x[1], f.y[1]);
    let _ = writeln!(
        out,
        "<path d=\"M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}\" fill=\"none\" stroke=\"black\"/>"
    );
    for (v, anchor, x, y) in [
        (f.x[0], "start", x0, y0 + 16.0),
        (f.x[1], "end", x1, y0 + 16.0),
    ] {
        let _ = writeln!(out, "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\">{v:.3}</text>");
    }
    for (v, y) in [(f.y[0], y0), (f.y[1], y1)] {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>",
            x0 - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn class_color(class: &str) -> &'static str {
    match class {
        "blue" => "#1f4fd8",
        "magenta" => "#d81fb4",
        _ => "#d8261f",
    }
}

/// Goals in grey, taxels colored by class, magenta taxels circled with a
/// radius of a fifth of their mean error.
pub fn render_observation_space(map: &ObservationMap) -> String {
    let points = map
        .taxels
        .iter()
        .copied()
        .chain(map.goals.iter().copied())
        .chain(map.summary.iter().map(|s| (s.u, s.v)));
    let f = Frame::fit(points, true);
    let mut out = String::new();
    header(&mut out, &map.title, map.config_hash.as_deref());
    axes(&mut out, &f, "u [m]", "v [m]");
    for &(u, v) in &map.goals {
        let (x, y) = f.px(u, v);
        let _ = writeln!(out, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"1.5\" fill=\"#b0b0b0\"/>");
    }
    for &(u, v) in &map.taxels {
        let (x, y) = f.px(u, v);
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2.5\" fill=\"none\" stroke=\"#606060\"/>"
        );
    }
    for s in &map.summary {
        let (x, y) = f.px(s.u, s.v);
        let color = class_color(&s.class);
        let _ = writeln!(out, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"4\" fill=\"{color}\"/>");
        if let (Some(e), "magenta") = (s.mean_error, s.class.as_str()) {
            let r = e / 5.0 * f.scale[0];
            let _ = writeln!(
                out,
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"{r:.2}\" fill=\"none\" stroke=\"{color}\"/>"
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of one or more series sharing the axes.
pub fn render_curves(title: &str, hash: Option<&str>, y_label: &str, series: &[Series]) -> String {
    let f = Frame::fit(
        series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .chain(std::iter::once((0.0, 0.0))),
        false,
    );
    let mut out = String::new();
    header(&mut out, title, hash);
    axes(&mut out, &f, "iteration", y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let (px, py) = f.px(x, y);
            let _ = write!(d, "{}{px:.1},{py:.1} ", if j == 0 { "M" } else { "L" });
        }
        let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>", d.trim_end());
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{ly:.1}\" fill=\"{color}\" text-anchor=\"end\">{}</text>",
            WIDTH - MARGIN,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn field_f64(rec: &csv::StringRecord, i: usize) -> Option<f64> {
    rec.get(i).and_then(|s| s.parse().ok())
}

fn read_points(path: &Path, cols: [usize; 2]) -> Result<Vec<(f64, f64)>> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if let (Some(u), Some(v)) = (field_f64(&rec, cols[0]), field_f64(&rec, cols[1])) {
            out.push((u, v));
        }
    }
    Ok(out)
}

fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(SummaryRow {
            taxel: rec.get(0).and_then(|s| s.parse().ok()).unwrap_or(0),
            u: field_f64(&rec, 1).unwrap_or(0.0),
            v: field_f64(&rec, 2).unwrap_or(0.0),
            class: rec.get(5).unwrap_or("red").to_string(),
            mean_error: field_f64(&rec, 4),
        });
    }
    Ok(out)
}

fn write_svg(path: PathBuf, svg: String, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn group_series(path: &Path, value_col: usize) -> Result<Vec<Series>> {
    let mut r = csv_reader(path)?;
    let mut series: Vec<Series> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let label = rec.get(0).unwrap_or("").to_string();
        let (Some(it), Some(y)) = (field_f64(&rec, 5), field_f64(&rec, value_col)) else {
            continue;
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((it, y)),
            None => series.push(Series { label, points: vec![(it, y)] }),
        }
    }
    Ok(series)
}

/// Goals of every trial in `dir`, thinned evenly to at most `GOAL_SAMPLE`.
fn pooled_goals(dir: &Path) -> Result<Vec<(f64, f64)>> {
    let mut trials: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path().join("outcomes.csv")))
        .filter(|p| p.exists())
        .collect();
    trials.sort();
    let mut all = Vec::new();
    for path in trials {
        let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        all.extend(read_outcomes_csv(f)?.iter().filter_map(|o| o.goal.map(|g| (g.u, g.v))));
    }
    let step = all.len().div_ceil(GOAL_SAMPLE).max(1);
    Ok(all.into_iter().step_by(step).collect())
}

/// Regenerates the SVG figures of an experiment directory (or of a matrix
/// directory holding `comparison.csv`). Returns the files written.
pub fn plot_result_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let comparison = dir.join("comparison.csv");
    if comparison.exists() {
        let hash = read_hash_tag(&comparison)?;
        write_svg(
            dir.join("comparison_mre.svg"),
            render_curves("Mean reaching error", hash.as_deref(), "MRE [m]", &group_series(&comparison, 6)?),
            &mut written,
        )?;
        write_svg(
            dir.join("comparison_touches.svg"),
            render_curves("Cumulative touches", hash.as_deref(), "touches", &group_series(&comparison, 7)?),
            &mut written,
        )?;
    }
    let summary_path = dir.join("taxels.csv");
    if summary_path.exists() {
        let hash = read_hash_tag(&summary_path)?;
        let title = fs::read_to_string(dir.join("metadata.json"))
            .ok()
            .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
            .and_then(|m| m["label"].as_str().map(str::to_string))
            .unwrap_or_else(|| "observation space".to_string());
        let goals = pooled_goals(dir)?;
        let map = ObservationMap {
            title,
            config_hash: hash.clone(),
            taxels: read_points(&dir.join("taxels_projected.csv"), [1, 2])?,
            summary: read_summary(&summary_path)?,
            goals,
        };
        write_svg(dir.join("observation_space.svg"), render_observation_space(&map), &mut written)?;
        let curve = dir.join("checkpoints_mean.csv");
        if curve.exists() {
            let series = vec![Series {
                label: map.title.clone(),
                points: read_points(&curve, [0, 1])?,
            }];
            write_svg(
                dir.join("learning_curve.svg"),
                render_curves("Mean reaching error", hash.as_deref(), "MRE [m]", &series),
                &mut written,
            )?;
        }
    }
    if written.is_empty() {
        return Err(Error::Config(format!(
            "{} holds neither taxels.csv nor comparison.csv",
            dir.display()
        )));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_map_marks_classes() {
        let map = ObservationMap {
            title: "a < b".into(),
            config_hash: Some("abc".into()),
            taxels: vec![(0.0, 0.0), (0.01, 0.0)],
            summary: vec![
                SummaryRow { taxel: 0, u: 0.0, v: 0.0, class: "blue".into(), mean_error: Some(0.0) },
                SummaryRow { taxel: 1, u: 0.01, v: 0.0, class: "magenta".into(), mean_error: Some(0.005) },
            ],
            goals: vec![(0.005, 0.002)],
        };
        let svg = render_observation_space(&map);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("config_hash: abc"));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("#1f4fd8"));
        assert_eq!(svg.matches("#d81fb4").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn curves_handle_degenerate_input() {
        let svg = render_curves("t", None, "y", &[Series { label: "s".into(), points: vec![(100.0, 1.0)] }]);
        assert!(svg.contains("M"));
        let empty = render_curves("t", None, "y", &[]);
        assert!(empty.contains("</svg>"));
    }
}
