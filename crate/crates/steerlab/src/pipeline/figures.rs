//! Report stage: figures (SVG) and the formatted run summary.
//!
//! Every plotted number is read back from a persisted analyze/geometry
//! artifact; nothing is recomputed from model outputs at render time, and
//! the emitted files are byte-identical across re-runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pipeline::stages::write_table;
use crate::pipeline::ExperimentConfig;
use crate::stats::{kde, BandwidthRule, KdeEstimate};

const BASELINE_COLOR: &str = "#3b6fb6";
const JAILBROKEN_COLOR: &str = "#c43f3f";

fn read_tsv(path: &Path) -> Result<Vec<Vec<String>>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push(line.split('\t').map(str::to_string).collect());
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Minimal deterministic SVG canvas
// ---------------------------------------------------------------------------

struct Svg {
    out: String,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
        );
        let _ = writeln!(
            out,
            "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>"
        );
        Svg { out }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, color: &str, width: f64, dashed: bool) {
        let dash = if dashed { " stroke-dasharray=\"5,4\"" } else { "" };
        let _ = writeln!(
            self.out,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-width=\"{width:.1}\"{dash}/>"
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, color: &str, opacity: f64) {
        let _ = writeln!(
            self.out,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.1}\" fill=\"{color}\" fill-opacity=\"{opacity:.2}\"/>"
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let escaped = content
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        let _ = writeln!(
            self.out,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-size=\"{size:.0}\" font-family=\"sans-serif\" text-anchor=\"{anchor}\">{escaped}</text>"
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str, dashed: bool) {
        let coords: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        let dash = if dashed { " stroke-dasharray=\"5,4\"" } else { "" };
        let _ = writeln!(
            self.out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            coords.join(" ")
        );
    }

    fn finish(mut self, path: &Path) -> Result<()> {
        let _ = writeln!(self.out, "</svg>");
        std::fs::write(path, self.out)?;
        Ok(())
    }
}

/// Linear map from data range to pixel range.
struct AxisScale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl AxisScale {
    fn map(&self, v: f64) -> f64 {
        if (self.d1 - self.d0).abs() < f64::EPSILON {
            return (self.p0 + self.p1) / 2.0;
        }
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

// ---------------------------------------------------------------------------
// Figures
// ---------------------------------------------------------------------------

struct MeanRow {
    category: String,
    condition: String,
    mean: f64,
    ci_lo: f64,
    ci_hi: f64,
}

fn fig_category_means(
    rows: &[MeanRow],
    human_mean: Option<f64>,
    title: &str,
    path: &Path,
) -> Result<()> {
    let categories: Vec<String> = {
        let mut seen = Vec::new();
        for r in rows {
            if !seen.contains(&r.category) {
                seen.push(r.category.clone());
            }
        }
        seen
    };
    let (w, h) = (120.0 + 60.0 * categories.len() as f64, 360.0);
    let mut svg = Svg::new(w, h);
    let y = AxisScale {
        d0: 0.0,
        d1: 10.0,
        p0: h - 60.0,
        p1: 40.0,
    };
    svg.text(w / 2.0, 20.0, 14.0, "middle", title);
    // y axis
    svg.line(70.0, y.map(0.0), 70.0, y.map(10.0), "#333333", 1.0, false);
    for tick in 0..=5 {
        let v = tick as f64 * 2.0;
        let py = y.map(v);
        svg.line(66.0, py, 70.0, py, "#333333", 1.0, false);
        svg.text(60.0, py + 4.0, 10.0, "end", &format!("{v:.0}"));
    }
    svg.text(20.0, h / 2.0, 11.0, "middle", "score");
    if let Some(hm) = human_mean {
        svg.line(70.0, y.map(hm), w - 20.0, y.map(hm), "#333333", 1.0, true);
        svg.text(w - 22.0, y.map(hm) - 5.0, 10.0, "end", "human mean");
    }
    for (ci, cat) in categories.iter().enumerate() {
        let x0 = 100.0 + 60.0 * ci as f64;
        svg.text(x0 + 10.0, h - 38.0, 10.0, "middle", cat);
        for r in rows.iter().filter(|r| &r.category == cat) {
            let (dx, color) = if r.condition == "baseline" {
                (0.0, BASELINE_COLOR)
            } else {
                (20.0, JAILBROKEN_COLOR)
            };
            let x = x0 + dx;
            svg.line(x, y.map(r.ci_lo), x, y.map(r.ci_hi), color, 1.5, false);
            svg.circle(x, y.map(r.mean), 4.0, color, 1.0);
        }
    }
    // legend
    svg.circle(80.0, h - 14.0, 4.0, BASELINE_COLOR, 1.0);
    svg.text(88.0, h - 10.0, 10.0, "start", "baseline");
    svg.circle(170.0, h - 14.0, 4.0, JAILBROKEN_COLOR, 1.0);
    svg.text(178.0, h - 10.0, 10.0, "start", "jailbroken");
    svg.finish(path)
}

fn fig_kde(
    curve: &KdeEstimate,
    means: &[(String, f64, &str)],
    path: &Path,
) -> Result<()> {
    let (w, h) = (520.0, 320.0);
    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 20.0, 14.0, "middle", "human mind-attribution density");
    match curve {
        KdeEstimate::Curve { grid, density, .. } => {
            let dmax = density.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
            let x = AxisScale {
                d0: grid[0],
                d1: grid[grid.len() - 1],
                p0: 60.0,
                p1: w - 30.0,
            };
            let y = AxisScale {
                d0: 0.0,
                d1: dmax * 1.1,
                p0: h - 50.0,
                p1: 40.0,
            };
            let points: Vec<(f64, f64)> = grid
                .iter()
                .zip(density.iter())
                .map(|(&g, &d)| (x.map(g), y.map(d)))
                .collect();
            svg.polyline(&points, "#333333", false);
            svg.line(60.0, h - 50.0, w - 30.0, h - 50.0, "#333333", 1.0, false);
            for (label, value, color) in means {
                svg.line(x.map(*value), h - 50.0, x.map(*value), 40.0, color, 1.2, true);
                svg.text(x.map(*value), 34.0, 9.0, "middle", label);
            }
            for tick in 0..=5 {
                let v = grid[0] + (grid[grid.len() - 1] - grid[0]) * tick as f64 / 5.0;
                svg.line(x.map(v), h - 50.0, x.map(v), h - 46.0, "#333333", 1.0, false);
                svg.text(x.map(v), h - 34.0, 10.0, "middle", &format!("{v:.1}"));
            }
        }
        KdeEstimate::Spike { at } => {
            svg.line(w / 2.0, h - 50.0, w / 2.0, 40.0, "#333333", 2.0, false);
            svg.text(
                w / 2.0,
                30.0,
                11.0,
                "middle",
                &format!("degenerate sample: all values at {at:.2}"),
            );
        }
    }
    svg.finish(path)
}

fn fig_cosine_profiles(
    profiles: &BTreeMap<(String, String), Vec<(usize, f64)>>,
    path: &Path,
) -> Result<()> {
    let concepts: Vec<String> = {
        let mut seen = Vec::new();
        for (concept, _) in profiles.keys() {
            if !seen.contains(concept) {
                seen.push(concept.clone());
            }
        }
        seen
    };
    let panel_w = 300.0;
    let (w, h) = (60.0 + panel_w * concepts.len() as f64, 300.0);
    let mut svg = Svg::new(w, h);
    let max_layer = profiles
        .values()
        .flat_map(|v| v.iter().map(|(l, _)| *l))
        .max()
        .unwrap_or(1) as f64;
    for (pi, concept) in concepts.iter().enumerate() {
        let x0 = 50.0 + panel_w * pi as f64;
        let x = AxisScale {
            d0: 0.0,
            d1: max_layer,
            p0: x0,
            p1: x0 + panel_w - 50.0,
        };
        let y = AxisScale {
            d0: -1.0,
            d1: 1.0,
            p0: h - 50.0,
            p1: 40.0,
        };
        svg.text(x0 + (panel_w - 50.0) / 2.0, 22.0, 12.0, "middle", &format!("safety vs {concept}"));
        svg.line(x0, y.map(0.0), x0 + panel_w - 50.0, y.map(0.0), "#bbbbbb", 1.0, false);
        svg.line(x0, y.map(-1.0), x0, y.map(1.0), "#333333", 1.0, false);
        for tick in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            svg.line(x0 - 4.0, y.map(tick), x0, y.map(tick), "#333333", 1.0, false);
            if pi == 0 {
                svg.text(x0 - 6.0, y.map(tick) + 3.0, 9.0, "end", &format!("{tick:.1}"));
            }
        }
        for (role, color, dashed) in [("base", "#3b6fb6", true), ("instruct", "#d97b29", false)] {
            if let Some(points) = profiles.get(&(concept.clone(), role.to_string())) {
                let coords: Vec<(f64, f64)> = points
                    .iter()
                    .map(|(l, s)| (x.map(*l as f64), y.map(*s)))
                    .collect();
                svg.polyline(&coords, color, dashed);
            }
        }
        svg.text(x0 + (panel_w - 50.0) / 2.0, h - 18.0, 10.0, "middle", "layer");
    }
    svg.text(70.0, h - 4.0, 10.0, "start", "dashed: base; solid: instruct");
    svg.finish(path)
}

fn fig_shift_ci(shifts: &BTreeMap<String, Vec<f64>>, path: &Path) -> Result<()> {
    let (w, h) = (120.0 + 110.0 * shifts.len() as f64, 340.0);
    let mut svg = Svg::new(w, h);
    svg.text(w / 2.0, 20.0, 14.0, "middle", "instruction-tuning shift by concept");
    let all: Vec<f64> = shifts.values().flatten().copied().collect();
    let lo = all.iter().cloned().fold(0.0f64, f64::min) - 0.1;
    let hi = all.iter().cloned().fold(0.0f64, f64::max) + 0.1;
    let y = AxisScale {
        d0: lo,
        d1: hi,
        p0: h - 60.0,
        p1: 40.0,
    };
    svg.line(70.0, y.map(0.0), w - 20.0, y.map(0.0), "#bbbbbb", 1.0, true);
    svg.line(70.0, y.map(lo), 70.0, y.map(hi), "#333333", 1.0, false);
    for tick in 0..=4 {
        let v = lo + (hi - lo) * tick as f64 / 4.0;
        svg.line(66.0, y.map(v), 70.0, y.map(v), "#333333", 1.0, false);
        svg.text(60.0, y.map(v) + 3.0, 9.0, "end", &format!("{v:.2}"));
    }
    for (ci, (concept, values)) in shifts.iter().enumerate() {
        let x = 120.0 + 110.0 * ci as f64;
        svg.text(x, h - 38.0, 10.0, "middle", concept);
        for v in values {
            svg.circle(x - 12.0, y.map(*v), 2.5, "#888888", 0.6);
        }
        let n = values.len() as f64;
        if n >= 2.0 {
            let mean = values.iter().sum::<f64>() / n;
            let sd =
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let half = 1.96 * sd / n.sqrt();
            svg.line(x + 10.0, y.map(mean - half), x + 10.0, y.map(mean + half), "#c43f3f", 2.0, false);
            svg.circle(x + 10.0, y.map(mean), 4.0, "#c43f3f", 1.0);
        }
    }
    svg.text(70.0, h - 8.0, 9.0, "start", "dots: per-layer shifts; bar: mean with 95% CI");
    svg.finish(path)
}

// ---------------------------------------------------------------------------
// Stage entry
// ---------------------------------------------------------------------------

pub(crate) fn stage_report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("report");
    std::fs::create_dir_all(&dir)?;
    let mut artifacts: Vec<PathBuf> = Vec::new();
    let mut summary = String::new();
    let _ = writeln!(summary, "run summary");
    let _ = writeln!(summary, "===========");

    // Human baseline: parsed once, reused for the overlay and the KDE fig.
    let human_scores: Option<Vec<f64>> = match &cfg.datasets.human_baseline {
        Some(path) => {
            let mut vals = Vec::new();
            for line in crate::pipeline::read_lines(path)? {
                vals.push(
                    line.parse::<f64>()
                        .map_err(|e| Error::Config(format!("human baseline: {e}")))?,
                );
            }
            Some(vals)
        }
        None => None,
    };
    let human_mean = human_scores.as_ref().map(|v| {
        v.iter().sum::<f64>() / v.len() as f64
    });

    for &cot in &cfg.conditions.cot {
        let label = if cot { "cot" } else { "no_cot" };
        let means_path = cfg
            .output_dir
            .join(format!("analyze/category_means_{label}.tsv"));
        let rows: Vec<MeanRow> = read_tsv(&means_path)?
            .into_iter()
            .filter(|r| r.len() >= 7)
            .map(|r| MeanRow {
                category: r[0].clone(),
                condition: r[1].clone(),
                mean: r[2].parse().unwrap_or(f64::NAN),
                ci_lo: r[5].parse().unwrap_or(f64::NAN),
                ci_hi: r[6].parse().unwrap_or(f64::NAN),
            })
            .filter(|r| r.mean.is_finite())
            .collect();
        if !rows.is_empty() {
            let rel = format!("report/fig_scores_{label}.svg");
            fig_category_means(
                &rows,
                human_mean,
                &format!("mind-attribution by category ({label})"),
                &cfg.output_dir.join(&rel),
            )?;
            artifacts.push(rel.into());
        }

        // Condensed regression summary for the text report.
        let reg_path = cfg
            .output_dir
            .join(format!("analyze/regression_mind_{label}.tsv"));
        if reg_path.exists() {
            let _ = writeln!(summary, "\njailbreak effects on mind-attribution ({label}):");
            for r in read_tsv(&reg_path)? {
                if r.len() >= 6 && r[1] == "main" && r[2] != "NA" {
                    let _ = writeln!(
                        summary,
                        "  {:<16} beta={:>8} se={:>8} q={}",
                        r[0], r[2], r[3], r[5]
                    );
                }
            }
        }
    }

    if let Some(scores) = &human_scores {
        let estimate = kde(scores, BandwidthRule::Silverman)?;
        let mut mean_lines: Vec<(String, f64, &str)> = Vec::new();
        if let Some(hm) = human_mean {
            mean_lines.push(("human".to_string(), hm, "#333333"));
        }
        // model means from the first available category-means table
        for &cot in &cfg.conditions.cot {
            let label = if cot { "cot" } else { "no_cot" };
            let path = cfg
                .output_dir
                .join(format!("analyze/category_means_{label}.tsv"));
            if !path.exists() {
                continue;
            }
            for cond in ["baseline", "jailbroken"] {
                let vals: Vec<f64> = read_tsv(&path)?
                    .iter()
                    .filter(|r| r.len() >= 3 && r[1] == cond)
                    .filter_map(|r| r[2].parse::<f64>().ok())
                    .collect();
                if !vals.is_empty() {
                    let m = vals.iter().sum::<f64>() / vals.len() as f64;
                    let color = if cond == "baseline" {
                        BASELINE_COLOR
                    } else {
                        JAILBROKEN_COLOR
                    };
                    mean_lines.push((cond.to_string(), m, color));
                }
            }
            break;
        }
        fig_kde(&estimate, &mean_lines, &cfg.output_dir.join("report/fig_human_kde.svg"))?;
        artifacts.push("report/fig_human_kde.svg".into());
    }

    // Geometry figures, when the geometry stage produced profiles.
    let profiles_path = cfg.output_dir.join("geometry/cosine_profiles.tsv");
    if profiles_path.exists() {
        let mut profiles: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
        for r in read_tsv(&profiles_path)? {
            if r.len() >= 4 && r[3] != "NA" {
                if let (Ok(layer), Ok(s)) = (r[2].parse::<usize>(), r[3].parse::<f64>()) {
                    profiles
                        .entry((r[0].clone(), r[1].clone()))
                        .or_default()
                        .push((layer, s));
                }
            }
        }
        if !profiles.is_empty() {
            fig_cosine_profiles(&profiles, &cfg.output_dir.join("report/fig_cosine_profiles.svg"))?;
            artifacts.push("report/fig_cosine_profiles.svg".into());
        }

        let mut shifts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut shift_summaries = Vec::new();
        for concept in ["idaq", "tom", "subject_matched_control", "general_topic_control"] {
            let path = cfg.output_dir.join(format!("geometry/shift_{concept}.tsv"));
            if !path.exists() {
                continue;
            }
            let mut values = Vec::new();
            let text = std::fs::read_to_string(&path)?;
            for line in text.lines().skip(1) {
                if let Some(rest) = line.strip_prefix("# ") {
                    shift_summaries.push(rest.to_string());
                    continue;
                }
                let mut parts = line.split('\t');
                let (_, v) = (parts.next(), parts.next());
                if let Some(Ok(v)) = v.map(str::parse::<f64>) {
                    values.push(v);
                }
            }
            if !values.is_empty() {
                shifts.insert(concept.to_string(), values);
            }
        }
        if !shifts.is_empty() {
            fig_shift_ci(&shifts, &cfg.output_dir.join("report/fig_shift_ci.svg"))?;
            artifacts.push("report/fig_shift_ci.svg".into());
            let _ = writeln!(summary, "\nrepresentation shifts:");
            for line in shift_summaries {
                let _ = writeln!(summary, "  {line}");
            }
        }
    }

    // ASR summary.
    let asr_path = cfg.output_dir.join("validate/asr.tsv");
    if asr_path.exists() {
        let _ = writeln!(summary, "\nattack success rate:");
        for r in read_tsv(&asr_path)? {
            if r.len() >= 4 {
                let _ = writeln!(
                    summary,
                    "  {:<12} baseline={:>6}%  ablated={:>6}%  (n={})",
                    r[0], r[1], r[2], r[3]
                );
            }
        }
    }

    // Validity rates.
    let validity_path = cfg.output_dir.join("analyze/validity.tsv");
    if validity_path.exists() {
        let _ = writeln!(summary, "\nvalid response rates:");
        for r in read_tsv(&validity_path)? {
            if r.len() >= 5 {
                let _ = writeln!(summary, "  {:<10} {:<7} {:>5}% ({}/{})", r[0], r[1], r[4], r[3], r[2]);
            }
        }
    }

    std::fs::write(dir.join("report.txt"), summary)?;
    artifacts.push("report/report.txt".into());
    write_table(
        &dir.join("artifact_index.tsv"),
        "artifact",
        &artifacts
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>(),
    )?;
    artifacts.push("report/artifact_index.tsv".into());
    Ok(artifacts)
}
