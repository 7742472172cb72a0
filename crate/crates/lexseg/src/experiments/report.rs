//! Fold-level results and their aggregation into a cross-context table.
//!
//! Aggregation is a pure function of [`FoldRow`]s, so reports from separate
//! runs can be merged by concatenating their fold files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NUM_FOLDS;
use crate::error::{Error, Result};
use crate::metrics::{mean_std, wilcoxon_signed_rank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Random,
    OutContext,
    InContext,
    PooledOut,
    PooledIn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Random => "random",
            ModelKind::OutContext => "out_context",
            ModelKind::InContext => "in_context",
            ModelKind::PooledOut => "pooled_out",
            ModelKind::PooledIn => "pooled_in",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ModelKind::Random,
            ModelKind::OutContext,
            ModelKind::InContext,
            ModelKind::PooledOut,
            ModelKind::PooledIn,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Invalid(format!("unknown model kind {s:?}")))
    }
}

/// Scores of one trained model on one target fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub kind: ModelKind,
    /// Training context for out-of-context rows, otherwise the kind name.
    pub model: String,
    pub target: String,
    pub fold: usize,
    pub micro_f1: f64,
    pub f1_background: f64,
    pub f1_analysis: f64,
    pub f1_outcome: f64,
    pub sentences: usize,
}

impl FoldRow {
    /// The training context is the target: the in-context diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.kind == ModelKind::OutContext && self.model == self.target
    }
}

pub fn write_fold_csv<W: Write>(out: W, rows: &[FoldRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fold_csv(path: &Path) -> Result<Vec<FoldRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub kind: ModelKind,
    pub model: String,
    pub target: String,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over the fold scores.
    pub std: f64,
    /// Per-class F1 averaged over folds, Background/Analysis/Outcome.
    pub class_f1: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Average {
    pub targets: usize,
    pub mean: f64,
    /// Population standard deviation of the cell means.
    pub std: f64,
    pub class_f1: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub pairs: usize,
    pub w: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSummary {
    pub kind: ModelKind,
    pub model: String,
    /// Excludes the cell whose target is the training context.
    pub avg_minus_test: Average,
    pub avg_plus_test: Average,
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub folds: Vec<FoldRow>,
    pub cells: Vec<CellSummary>,
    pub rows: Vec<RowSummary>,
}

type CellKey = (ModelKind, String, String);

fn average(cells: &[&CellSummary]) -> Average {
    let means: Vec<f64> = cells.iter().map(|c| c.mean).collect();
    let (mean, std) = mean_std(&means);
    let class_f1 = std::array::from_fn(|k| cells.iter().map(|c| c.class_f1[k]).sum::<f64>() / cells.len() as f64);
    Average {
        targets: cells.len(),
        mean,
        std,
        class_f1,
    }
}

impl RunReport {
    /// Aggregates fold rows. Every cell must hold exactly one row per fold.
    pub fn from_folds(mut folds: Vec<FoldRow>) -> Result<Self> {
        folds.sort_by(|a, b| {
            (a.kind, &a.model, &a.target, a.fold).cmp(&(b.kind, &b.model, &b.target, b.fold))
        });
        let mut grouped: BTreeMap<CellKey, Vec<&FoldRow>> = BTreeMap::new();
        for row in &folds {
            grouped
                .entry((row.kind, row.model.clone(), row.target.clone()))
                .or_default()
                .push(row);
        }
        let mut cells = Vec::new();
        for ((kind, model, target), rows) in &grouped {
            let fold_ids: BTreeSet<usize> = rows.iter().map(|r| r.fold).collect();
            if rows.len() != NUM_FOLDS || fold_ids.len() != NUM_FOLDS || fold_ids.iter().any(|&f| f >= NUM_FOLDS) {
                return Err(Error::Invalid(format!(
                    "cell {kind}/{model}→{target} has folds {fold_ids:?}, expected 0..{NUM_FOLDS} once each"
                )));
            }
            let scores: Vec<f64> = rows.iter().map(|r| r.micro_f1).collect();
            let (mean, std) = mean_std(&scores);
            let n = rows.len() as f64;
            let class_f1 = [
                rows.iter().map(|r| r.f1_background).sum::<f64>() / n,
                rows.iter().map(|r| r.f1_analysis).sum::<f64>() / n,
                rows.iter().map(|r| r.f1_outcome).sum::<f64>() / n,
            ];
            cells.push(CellSummary {
                kind: *kind,
                model: model.clone(),
                target: target.clone(),
                fold_scores: scores,
                mean,
                std,
                class_f1,
            });
        }

        let lookup: BTreeMap<CellKey, &CellSummary> = cells
            .iter()
            .map(|c| ((c.kind, c.model.clone(), c.target.clone()), c))
            .collect();
        let mut models: BTreeMap<(ModelKind, String), Vec<&CellSummary>> = BTreeMap::new();
        for c in &cells {
            models.entry((c.kind, c.model.clone())).or_default().push(c);
        }
        let in_context = |target: &str| {
            lookup
                .get(&(ModelKind::InContext, ModelKind::InContext.name().to_string(), target.to_string()))
                .or_else(|| lookup.get(&(ModelKind::OutContext, target.to_string(), target.to_string())))
                .map(|c| c.mean)
        };
        let random = |target: &str| {
            lookup
                .get(&(ModelKind::Random, ModelKind::Random.name().to_string(), target.to_string()))
                .map(|c| c.mean)
        };
        let best_out_context = |target: &str| {
            cells
                .iter()
                .filter(|c| c.kind == ModelKind::OutContext && c.target == target && c.model != target)
                .map(|c| c.mean)
                .fold(None, |best: Option<f64>, m| Some(best.map_or(m, |b| b.max(m))))
        };

        let mut rows = Vec::new();
        for ((kind, model), row_cells) in &models {
            let off_diagonal: Vec<&CellSummary> = row_cells
                .iter()
                .copied()
                .filter(|c| !(c.kind == ModelKind::OutContext && c.model == c.target))
                .collect();
            let avg_plus_test = average(row_cells);
            let avg_minus_test = if off_diagonal.is_empty() {
                avg_plus_test.clone()
            } else {
                average(&off_diagonal)
            };
            let (baseline, pairs): (&str, Vec<(f64, f64)>) = match kind {
                ModelKind::OutContext => (
                    "random",
                    off_diagonal.iter().filter_map(|c| Some((c.mean, random(&c.target)?))).collect(),
                ),
                ModelKind::PooledOut => (
                    "best_out_context",
                    row_cells.iter().filter_map(|c| Some((c.mean, best_out_context(&c.target)?))).collect(),
                ),
                ModelKind::PooledIn => (
                    "in_context",
                    row_cells.iter().filter_map(|c| Some((c.mean, in_context(&c.target)?))).collect(),
                ),
                ModelKind::Random | ModelKind::InContext => ("", Vec::new()),
            };
            let comparison = if pairs.is_empty() {
                None
            } else {
                let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                let result = wilcoxon_signed_rank(&a, &b)?;
                Some(Comparison {
                    baseline: baseline.to_string(),
                    pairs: a.len(),
                    w: result.w,
                    p_value: result.p_value,
                })
            };
            rows.push(RowSummary {
                kind: *kind,
                model: model.clone(),
                avg_minus_test,
                avg_plus_test,
                comparison,
            });
        }
        Ok(RunReport { folds, cells, rows })
    }

    pub fn targets(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|c| c.target.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn cell(&self, kind: ModelKind, model: &str, target: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.kind == kind && c.model == model && c.target == target)
    }

    pub fn row(&self, kind: ModelKind, model: &str) -> Option<&RowSummary> {
        self.rows.iter().find(|r| r.kind == kind && r.model == model)
    }

    /// One line per cell: model, target, mean, std and per-class F1.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "model", "target", "micro_f1", "std", "f1_background", "f1_analysis", "f1_outcome"])?;
        for c in &self.cells {
            w.write_record([
                c.kind.name().to_string(),
                c.model.clone(),
                c.target.clone(),
                format!("{:.6}", c.mean),
                format!("{:.6}", c.std),
                format!("{:.6}", c.class_f1[0]),
                format!("{:.6}", c.class_f1[1]),
                format!("{:.6}", c.class_f1[2]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Model rows against target columns, followed by the two averages.
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let targets = self.targets();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["model".to_string(), "kind".to_string(), "baseline".to_string(), "p_value".to_string()];
        let columns: Vec<String> = targets
            .iter()
            .cloned()
            .chain(["Avg(-test)".to_string(), "Avg(+test)".to_string()])
            .collect();
        for t in &columns {
            for part in ["micro", "std", "B", "A", "O"] {
                header.push(format!("{t} {part}"));
            }
        }
        w.write_record(&header)?;
        let f = |v: f64| format!("{v:.4}");
        for row in &self.rows {
            let mut record = vec![
                row.model.clone(),
                row.kind.name().to_string(),
                row.comparison.as_ref().map_or(String::new(), |c| c.baseline.clone()),
                row.comparison.as_ref().map_or(String::new(), |c| f(c.p_value)),
            ];
            for t in &targets {
                match self.cell(row.kind, &row.model, t) {
                    Some(c) => {
                        record.extend([f(c.mean), f(c.std)]);
                        record.extend(c.class_f1.iter().map(|&v| f(v)));
                    }
                    None => record.extend(std::iter::repeat_n(String::new(), 5)),
                }
            }
            for avg in [&row.avg_minus_test, &row.avg_plus_test] {
                record.extend([f(avg.mean), f(avg.std)]);
                record.extend(avg.class_f1.iter().map(|&v| f(v)));
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text rendering: `mean±std` with per-class F1 underneath.
    pub fn to_text_table(&self) -> String {
        let targets = self.targets();
        let short = |v: f64| {
            let s = format!("{v:.2}");
            s.strip_prefix('0').map(str::to_string).unwrap_or(s)
        };
        let width = 16;
        let mut out = format!("{:<14}", "");
        for t in targets.iter().map(String::as_str).chain(["Avg(-test)", "Avg(+test)"]) {
            out.push_str(&format!("{t:>width$}"));
        }
        out.push('\n');
        for row in &self.rows {
            let mut top = format!("{:<14}", row.model);
            let mut bottom = format!(
                "{:<14}",
                row.comparison.as_ref().map_or(String::new(), |c| format!("p={}", short(c.p_value)))
            );
            let cells = targets.iter().map(|t| {
                self.cell(row.kind, &row.model, t)
                    .map(|c| (c.mean, c.std, c.class_f1))
            });
            let avgs = [&row.avg_minus_test, &row.avg_plus_test]
                .into_iter()
                .map(|a| Some((a.mean, a.std, a.class_f1)));
            for cell in cells.chain(avgs) {
                match cell {
                    Some((m, s, k)) => {
                        top.push_str(&format!("{:>width$}", format!("{}±{}", short(m), short(s))));
                        bottom.push_str(&format!(
                            "{:>width$}",
                            format!("{} {} {}", short(k[0]), short(k[1]), short(k[2]))
                        ));
                    }
                    None => {
                        top.push_str(&format!("{:>width$}", "-"));
                        bottom.push_str(&format!("{:>width$}", ""));
                    }
                }
            }
            out.push_str(&top);
            out.push('\n');
            out.push_str(&bottom);
            out.push('\n');
        }
        out
    }

    /// Writes `folds.csv`, `summary.csv`, `table.csv` and `report.json`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_fold_csv(File::create(dir.join("folds.csv"))?, &self.folds)?;
        self.write_summary_csv(File::create(dir.join("summary.csv"))?)?;
        self.write_table_csv(File::create(dir.join("table.csv"))?)?;
        let mut json = File::create(dir.join("report.json"))?;
        serde_json::to_writer_pretty(&mut json, self)?;
        json.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(kind: ModelKind, model: &str, target: &str, score: impl Fn(usize) -> f64) -> Vec<FoldRow> {
        (0..NUM_FOLDS)
            .map(|fold| FoldRow {
                kind,
                model: model.to_string(),
                target: target.to_string(),
                fold,
                micro_f1: score(fold),
                f1_background: 0.5,
                f1_analysis: 0.8,
                f1_outcome: 0.1 * (fold % 2) as f64,
                sentences: 100,
            })
            .collect()
    }

    #[test]
    fn cell_statistics() {
        let report = RunReport::from_folds(rows(ModelKind::Random, "random", "x", |f| f as f64 / 10.0)).unwrap();
        let c = &report.cells[0];
        assert!((c.mean - 0.45).abs() < 1e-12);
        // population std of 0.0..0.9
        assert!((c.std - (0.0825f64).sqrt()).abs() < 1e-12);
        assert_eq!(c.class_f1[2], 0.05);
    }

    #[test]
    fn missing_fold_is_rejected() {
        let mut r = rows(ModelKind::Random, "random", "x", |_| 0.5);
        r.pop();
        assert!(RunReport::from_folds(r).is_err());
        let mut r = rows(ModelKind::Random, "random", "x", |_| 0.5);
        r[3].fold = 4;
        assert!(RunReport::from_folds(r).is_err());
    }

    #[test]
    fn out_context_grid_with_random_comparison() {
        let contexts = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut all = Vec::new();
        for (i, t) in contexts.iter().enumerate() {
            all.extend(rows(ModelKind::Random, "random", t, |_| 0.5));
            for m in contexts {
                let base = if m == *t { 0.9 } else { 0.6 + 0.01 * i as f64 };
                all.extend(rows(ModelKind::OutContext, m, t, move |_| base));
            }
            all.extend(rows(ModelKind::PooledOut, "pooled_out", t, |_| 0.8));
            all.extend(rows(ModelKind::PooledIn, "pooled_in", t, |_| 0.95));
        }
        let report = RunReport::from_folds(all).unwrap();
        assert_eq!(report.cells.iter().filter(|c| c.kind == ModelKind::OutContext).count(), 64);
        let a = report.row(ModelKind::OutContext, "a").unwrap();
        let cmp = a.comparison.as_ref().unwrap();
        assert_eq!((cmp.pairs, cmp.w, cmp.p_value), (7, 0.0, 0.015625));
        assert_eq!(a.avg_minus_test.targets, 7);
        assert_eq!(a.avg_plus_test.targets, 8);
        assert!(a.avg_plus_test.mean > a.avg_minus_test.mean);
        let pooled = report.row(ModelKind::PooledOut, "pooled_out").unwrap();
        assert_eq!(pooled.comparison.as_ref().unwrap().pairs, 8);
        assert_eq!(pooled.comparison.as_ref().unwrap().baseline, "best_out_context");
        let plus = report.row(ModelKind::PooledIn, "pooled_in").unwrap();
        assert_eq!(plus.comparison.as_ref().unwrap().p_value, 2.0 / 256.0);

        let mut buf = Vec::new();
        report.write_table_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let header: Vec<&str> = lines[0].split(',').collect();
        assert_eq!(header.len(), 4 + 10 * 5);
        assert!(header.contains(&"Avg(-test) micro"));
        // random + 8 out-context + 2 pooled rows
        assert_eq!(lines.len(), 1 + 11);
        assert!(report.to_text_table().contains(".90±.00"));
    }

    #[test]
    fn fold_csv_roundtrip() {
        let r = rows(ModelKind::OutContext, "usa_i", "canada", |f| 0.1 * f as f64);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("folds.csv");
        write_fold_csv(File::create(&path).unwrap(), &r).unwrap();
        assert_eq!(read_fold_csv(&path).unwrap(), r);
    }
}
