//! CSV and SVG reports rendered from a finished (or partial) run.
//!
//! Reports go to `<output_dir>/reports/` and are not listed in the index;
//! they can be regenerated from it at any time.
//!
//! | kind | files |
//! |---|---|
//! | `lmc_curves` | `lmc_curves.csv`, `lmc_curves_{family}.svg` |
//! | `landscape_heatmap` | `landscape_{family}_rNN.csv`, `landscape_{family}_rNN.svg` |
//! | `sparsity_accuracy` | `sparsity_accuracy.csv`, `sparsity_accuracy.svg` |
//! | `barrier_scatter` | `barrier_scatter.csv`, `barrier_scatter.svg` |
//! | `hessian_table` | `hessian_table.csv`, `hessian_table.md` |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checkpoint::load_checkpoint;
use super::pipeline::{read_rows, ArtifactEntry, ArtifactIndex, Family, HessianRow, PruneRow, RetrainRow, StabilityRow};
use crate::stability::{barrier_ratio, mean_report, StabilityReport};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    LmcCurves,
    LandscapeHeatmap,
    SparsityAccuracy,
    BarrierScatter,
    HessianTable,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::LmcCurves,
        ReportKind::LandscapeHeatmap,
        ReportKind::SparsityAccuracy,
        ReportKind::BarrierScatter,
        ReportKind::HessianTable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::LmcCurves => "lmc_curves",
            ReportKind::LandscapeHeatmap => "landscape_heatmap",
            ReportKind::SparsityAccuracy => "sparsity_accuracy",
            ReportKind::BarrierScatter => "barrier_scatter",
            ReportKind::HessianTable => "hessian_table",
        }
    }

    /// Artifact kinds (index `kind` values) the report reads.
    pub fn requires(self) -> &'static [&'static str] {
        match self {
            ReportKind::LmcCurves => &["curve"],
            ReportKind::LandscapeHeatmap => &["grid"],
            ReportKind::SparsityAccuracy => &["prune_records", "retrain"],
            ReportKind::BarrierScatter => &["prune_records", "stability", "retrain"],
            ReportKind::HessianTable => &["hessian_stats"],
        }
    }
}

impl std::str::FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown report kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePointRow {
    pub family: Family,
    pub round: usize,
    pub pair: usize,
    pub alpha: f64,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCellRow {
    pub x: f64,
    pub y: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityAccuracyRow {
    pub family: Family,
    pub round: usize,
    pub sparsity: f64,
    /// Mean over every retrained seed.
    pub val_accuracy: f64,
    pub pruning_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierScatterRow {
    pub round: usize,
    pub sparsity: f64,
    /// Synthetic over IMP mean retrained accuracy.
    pub accuracy_ratio: f64,
    /// Synthetic over IMP mean halfway barrier; empty when the IMP barrier is ~0.
    pub barrier_ratio: Option<f64>,
    pub synthetic_barrier: f64,
    pub imp_barrier: f64,
    /// IMP over distilled points used to find the mask.
    pub compression: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianTableRow {
    pub subnetwork: String,
    pub sparsity: String,
    pub min_max: String,
    pub mean_std: String,
    pub avg_magnitude: String,
}

/// Renders one report; returns the files written.
pub fn emit_report(index: &ArtifactIndex, kind: ReportKind) -> Result<Vec<PathBuf>> {
    let missing: Vec<String> = kind
        .requires()
        .iter()
        .filter(|k| index.of_kind(k).next().is_none())
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingArtifacts(missing));
    }
    let out = index.root.join("reports");
    std::fs::create_dir_all(&out)?;
    match kind {
        ReportKind::LmcCurves => lmc_curves(index, &out),
        ReportKind::LandscapeHeatmap => landscape_heatmaps(index, &out),
        ReportKind::SparsityAccuracy => sparsity_accuracy(index, &out),
        ReportKind::BarrierScatter => barrier_scatter(index, &out),
        ReportKind::HessianTable => hessian_table(index, &out),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text)?;
    Ok(path.to_path_buf())
}

fn rows_of<T: for<'de> Deserialize<'de>>(index: &ArtifactIndex, kind: &str) -> Result<Vec<T>> {
    let mut all = Vec::new();
    for entry in index.of_kind(kind) {
        all.extend(read_rows::<T>(&index.resolve(entry))?);
    }
    Ok(all)
}

/// `(family, round, pair)` from `curves/{family}_rNN_pK.ckpt` or
/// `(family, round, 0)` from `grids/{family}_rNN.ckpt`.
fn parse_name(entry: &ArtifactEntry) -> Result<(Family, usize, usize)> {
    let bad = || Error::InvalidConfig(format!("unexpected artifact name {}", entry.path));
    let stem = Path::new(&entry.path).file_stem().and_then(|s| s.to_str()).ok_or_else(bad)?;
    let mut parts = stem.split('_');
    let family = parts.next().ok_or_else(bad)?.parse()?;
    let round = parts
        .next()
        .and_then(|r| r.strip_prefix('r'))
        .and_then(|r| r.parse().ok())
        .ok_or_else(bad)?;
    let pair = match parts.next() {
        Some(p) => p.strip_prefix('p').and_then(|p| p.parse().ok()).ok_or_else(bad)?,
        None => 0,
    };
    Ok((family, round, pair))
}

fn family_color(family: Family) -> &'static str {
    match family {
        Family::Dense => "#444444",
        Family::Imp => "#d62728",
        Family::Distilled => "#1f77b4",
    }
}

fn family_label(family: Family) -> &'static str {
    match family {
        Family::Dense => "Dense",
        Family::Imp => "IMP",
        Family::Distilled => "Synthetic",
    }
}

fn lmc_curves(index: &ArtifactIndex, out: &Path) -> Result<Vec<PathBuf>> {
    let mut rows = Vec::new();
    type Curves = Vec<(usize, Vec<(f64, f64)>)>;
    let mut by_family: BTreeMap<Family, Curves> = BTreeMap::new();
    for entry in index.of_kind("curve") {
        let (family, round, pair) = parse_name(entry)?;
        let curve = load_checkpoint(&index.resolve(entry))?.to_curve()?;
        for i in 0..curve.len() {
            rows.push(CurvePointRow {
                family,
                round,
                pair,
                alpha: curve.alphas[i],
                train_loss: curve.train_loss[i],
                val_accuracy: curve.val_accuracy[i],
            });
        }
        let points = curve.alphas.iter().copied().zip(curve.train_loss.iter().copied()).collect();
        by_family.entry(family).or_default().push((round, points));
    }
    let mut files = vec![write_csv(&out.join("lmc_curves.csv"), &rows)?];
    let max_round = by_family.values().flatten().map(|(r, _)| *r).max().unwrap_or(0).max(1);
    for (family, curves) in by_family {
        let (lo, hi) = span(curves.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
        let mut svg = Svg::new(
            &format!("{} interpolation, train loss", family_label(family)),
            "alpha",
            "train loss",
            (0.0, 1.0),
            (lo, hi),
        );
        for (round, points) in &curves {
            let shade = 0.25 + 0.75 * *round as f64 / max_round as f64;
            svg.polyline(points, family_color(family), shade);
        }
        files.push(write_text(&out.join(format!("lmc_curves_{}.svg", family.as_str())), &svg.finish())?);
    }
    Ok(files)
}

fn landscape_heatmaps(index: &ArtifactIndex, out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in index.of_kind("grid") {
        let (family, round, _) = parse_name(entry)?;
        let grid = load_checkpoint(&index.resolve(entry))?.to_grid()?;
        let stem = format!("landscape_{}_r{round:02}", family.as_str());
        let rows: Vec<GridCellRow> = grid.cells().map(|(x, y, loss)| GridCellRow { x, y, loss }).collect();
        files.push(write_csv(&out.join(format!("{stem}.csv")), &rows)?);

        let (nx, ny) = grid.resolution;
        let mut svg = Svg::new(
            &format!("{} loss landscape", family_label(family)),
            "x",
            "y",
            grid.x_range,
            grid.y_range,
        );
        let (lo, hi) = grid.min_max().unwrap_or((0.0, 1.0));
        let (llo, lhi) = (lo.max(1e-12).ln(), hi.max(1e-12).ln());
        let dx = (grid.x_range.1 - grid.x_range.0) / (nx - 1) as f64;
        let dy = (grid.y_range.1 - grid.y_range.0) / (ny - 1) as f64;
        for j in 0..ny {
            for i in 0..nx {
                let loss = grid.at(i, j);
                let fill = if loss.is_finite() {
                    let t = if lhi > llo { (loss.max(1e-12).ln() - llo) / (lhi - llo) } else { 0.0 };
                    heat(t)
                } else {
                    "#ffffff".to_string()
                };
                svg.cell(grid.x(i) - dx / 2.0, grid.y(j) - dy / 2.0, dx, dy, &fill);
            }
        }
        for (k, &(x, y)) in grid.plane.ref_coords.iter().enumerate() {
            svg.marker(x, y, &format!("m{k}"));
        }
        files.push(write_text(&out.join(format!("{stem}.svg")), &svg.finish())?);
    }
    Ok(files)
}

fn mean_accuracy(retrain: &[RetrainRow]) -> BTreeMap<(Family, usize), f64> {
    let mut acc: BTreeMap<(Family, usize), (f64, usize)> = BTreeMap::new();
    for r in retrain {
        let e = acc.entry((r.family, r.round)).or_default();
        e.0 += r.val_accuracy;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn sparsity_accuracy(index: &ArtifactIndex, out: &Path) -> Result<Vec<PathBuf>> {
    let prune: Vec<PruneRow> = rows_of(index, "prune_records")?;
    let retrain: Vec<RetrainRow> = rows_of(index, "retrain")?;
    let acc = mean_accuracy(&retrain);
    let mut rows = Vec::new();
    if let Some(&dense) = acc.get(&(Family::Dense, 0)) {
        rows.push(SparsityAccuracyRow {
            family: Family::Dense,
            round: 0,
            sparsity: 0.0,
            val_accuracy: dense,
            pruning_points: 0,
        });
    }
    for p in &prune {
        rows.push(SparsityAccuracyRow {
            family: p.family,
            round: p.round,
            sparsity: p.sparsity,
            val_accuracy: acc.get(&(p.family, p.round)).copied().unwrap_or(p.val_accuracy),
            pruning_points: p.pruning_points,
        });
    }
    let (lo, hi) = span(rows.iter().map(|r| r.val_accuracy));
    let mut svg = Svg::new("Accuracy vs sparsity", "sparsity", "val accuracy", (0.0, 1.0), (lo, hi));
    let dense = rows.iter().find(|r| r.family == Family::Dense).map(|r| r.val_accuracy);
    for family in [Family::Imp, Family::Distilled] {
        let mut points: Vec<(f64, f64)> = dense.map(|d| vec![(0.0, d)]).unwrap_or_default();
        points.extend(rows.iter().filter(|r| r.family == family).map(|r| (r.sparsity, r.val_accuracy)));
        svg.polyline(&points, family_color(family), 1.0);
        for &(x, y) in &points {
            svg.dot(x, y, 3.0, family_color(family));
        }
    }
    Ok(vec![
        write_csv(&out.join("sparsity_accuracy.csv"), &rows)?,
        write_text(&out.join("sparsity_accuracy.svg"), &svg.finish())?,
    ])
}

fn mean_stability(rows: &[StabilityRow], family: Family, round: usize) -> Result<StabilityReport> {
    let reports: Vec<StabilityReport> = rows
        .iter()
        .filter(|r| r.family == family && r.round == round)
        .map(|r| StabilityReport {
            barrier_halfway: r.barrier_halfway,
            barrier_max: r.barrier_max,
            stable: r.stable,
            tolerance: r.tolerance,
            sparsity: r.sparsity,
            halfway_interpolated: r.halfway_interpolated,
        })
        .collect();
    mean_report(&reports)
}

fn barrier_scatter(index: &ArtifactIndex, out: &Path) -> Result<Vec<PathBuf>> {
    let prune: Vec<PruneRow> = rows_of(index, "prune_records")?;
    let stab: Vec<StabilityRow> = rows_of(index, "stability")?;
    let acc = mean_accuracy(&rows_of(index, "retrain")?);
    let points = |family: Family| -> BTreeMap<usize, usize> {
        prune.iter().filter(|p| p.family == family).map(|p| (p.round, p.pruning_points)).collect()
    };
    let (imp_points, dis_points) = (points(Family::Imp), points(Family::Distilled));
    let mut rows = Vec::new();
    for (&round, &ip) in &imp_points {
        let Some(&dp) = dis_points.get(&round) else { continue };
        let (Some(&ia), Some(&da)) = (acc.get(&(Family::Imp, round)), acc.get(&(Family::Distilled, round))) else {
            continue;
        };
        let imp = mean_stability(&stab, Family::Imp, round)?;
        let syn = mean_stability(&stab, Family::Distilled, round)?;
        rows.push(BarrierScatterRow {
            round,
            sparsity: imp.sparsity,
            accuracy_ratio: da / ia,
            barrier_ratio: barrier_ratio(&syn, &imp)?.value(),
            synthetic_barrier: syn.barrier_halfway,
            imp_barrier: imp.barrier_halfway,
            compression: ip as f64 / dp as f64,
        });
    }
    let plotted: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| r.barrier_ratio.map(|b| (b, r.accuracy_ratio, r.compression)))
        .collect();
    let (xlo, xhi) = span(plotted.iter().map(|p| p.0));
    let (ylo, yhi) = span(plotted.iter().map(|p| p.1));
    let max_c = plotted.iter().map(|p| p.2).fold(1.0, f64::max);
    let mut svg = Svg::new(
        "Synthetic vs IMP subnetworks",
        "barrier ratio (synthetic / IMP)",
        "accuracy ratio (synthetic / IMP)",
        (xlo, xhi),
        (ylo, yhi),
    );
    for &(x, y, c) in &plotted {
        svg.dot(x, y, 3.0 + 9.0 * (c / max_c).sqrt(), family_color(Family::Distilled));
    }
    Ok(vec![
        write_csv(&out.join("barrier_scatter.csv"), &rows)?,
        write_text(&out.join("barrier_scatter.svg"), &svg.finish())?,
    ])
}

fn hessian_table(index: &ArtifactIndex, out: &Path) -> Result<Vec<PathBuf>> {
    let stats: Vec<HessianRow> = rows_of(index, "hessian_stats")?;
    let rows: Vec<HessianTableRow> = stats
        .iter()
        .map(|s| HessianTableRow {
            subnetwork: family_label(s.family).to_string(),
            sparsity: format!("{:.0}%", 100.0 * s.sparsity),
            min_max: format!("{:.4} / {:.4}", s.min, s.max),
            mean_std: format!("{:.4} ± {:.4}", s.mean, s.std),
            avg_magnitude: format!("{:.4}", s.avg_magnitude),
        })
        .collect();
    let mut md = String::from("| Subnetwork | Sparsity | Min/Max | Mean ± Std | Avg Magnitude |\n|---|---|---|---|---|\n");
    for r in &rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} |",
            r.subnetwork, r.sparsity, r.min_max, r.mean_std, r.avg_magnitude
        );
    }
    Ok(vec![
        write_csv(&out.join("hessian_table.csv"), &rows)?,
        write_text(&out.join("hessian_table.md"), &md)?,
    ])
}

/// Finite range of `values`, padded; `(0, 1)` when there is nothing finite.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1e-3) };
    (lo - pad, hi + pad)
}

/// Dark blue (low) to yellow (high).
fn heat(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(40.0, 250.0), lerp(20.0, 230.0), lerp(120.0, 40.0))
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

/// Minimal plot canvas mapping data coordinates into a fixed frame.
struct Svg {
    body: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Svg {
    fn new(title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(body, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
        let _ = writeln!(
            body,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            body,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            HEIGHT / 2.0,
            escape(ylabel)
        );
        let mut svg = Self { body, x, y };
        svg.axes();
        svg
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&mut self) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(self.body, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let _ = writeln!(
                self.body,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"#,
                self.px(xv),
                b + 14.0,
                tick(xv)
            );
            let _ = writeln!(
                self.body,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
                l - 4.0,
                self.py(yv) + 3.0,
                tick(yv)
            );
        }
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str, opacity: f64) {
        let coords: Vec<String> = points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-opacity="{opacity:.2}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
    }

    fn dot(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="{color}" fill-opacity="0.7"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    fn cell(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let (x0, x1) = (self.px(x), self.px(x + w));
        let (y0, y1) = (self.py(y + h), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }

    /// A reference-model marker; these are the only elements with class `ref`.
    fn marker(&mut self, x: f64, y: f64, label: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.body,
            r#"<circle class="ref" cx="{cx:.2}" cy="{cy:.2}" r="5" fill="white" stroke="black" stroke-width="1.5"/>"#
        );
        let _ = writeln!(self.body, r#"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#, cx + 7.0, cy - 7.0);
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_back() {
        for k in ReportKind::ALL {
            assert_eq!(k.as_str().parse::<ReportKind>().unwrap(), k);
        }
        assert!("heatmap".parse::<ReportKind>().is_err());
    }

    #[test]
    fn artifact_names_parse() {
        let e = |p: &str| ArtifactEntry {
            path: p.into(),
            kind: "curve".into(),
            sha256: String::new(),
            bytes: 0,
        };
        assert_eq!(parse_name(&e("curves/imp_r03_p1.ckpt")).unwrap(), (Family::Imp, 3, 1));
        assert_eq!(parse_name(&e("grids/dense_r00.ckpt")).unwrap(), (Family::Dense, 0, 0));
        assert!(parse_name(&e("curves/other_r03_p1.ckpt")).is_err());
        assert!(parse_name(&e("curves/imp_x3.ckpt")).is_err());
    }

    #[test]
    fn span_pads_and_handles_degenerate_input() {
        assert_eq!(span([].into_iter()), (0.0, 1.0));
        let (lo, hi) = span([1.0, 3.0, f64::NAN].into_iter());
        assert!((lo - 0.9).abs() < 1e-12 && (hi - 3.1).abs() < 1e-12);
        let (lo, hi) = span([2.0].into_iter());
        assert!(lo < 2.0 && hi > 2.0);
    }

    #[test]
    fn heat_endpoints() {
        assert_eq!(heat(0.0), "#281478");
        assert_eq!(heat(1.0), "#fae628");
        assert_eq!(heat(7.0), heat(1.0));
    }
}
