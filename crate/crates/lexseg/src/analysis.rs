//! Document-level embedding projection and positional label layouts.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::{Label, LabeledDocument};
use crate::error::{Error, Result};

/// Convergence threshold for the power iteration.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Two orthonormal principal directions, largest variance first.
    pub components: [Vec<f64>; 2],
    /// Covariance eigenvalues of the two components (`1/(N−1)` scaling).
    pub explained_variance: [f64; 2],
    /// Trace of the covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn project(&self, v: &[f64]) -> [f64; 2] {
        std::array::from_fn(|k| {
            v.iter()
                .zip(&self.mean)
                .zip(&self.components[k])
                .map(|((x, m), c)| (x - m) * c)
                .sum()
        })
    }

    pub fn explained_ratio(&self) -> [f64; 2] {
        self.explained_variance.map(|v| v / self.total_variance)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn sym_mul(m: &[f64], dim: usize, v: &[f64]) -> Vec<f64> {
    m.chunks_exact(dim).map(|row| dot(row, v)).collect()
}

/// Largest-magnitude entry made positive.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .enumerate()
        .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let d = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
    }
}

/// Dominant eigenpair of a symmetric positive semi-definite matrix,
/// restricted to the complement of `found`. Returns a zero eigenvalue and an
/// arbitrary orthonormal direction when that complement carries no variance.
fn dominant_eigenpair(matrix: &[f64], dim: usize, found: &[Vec<f64>], scale: f64) -> (f64, Vec<f64>) {
    // start from the column of largest norm, which lies in the range
    let start = (0..dim)
        .max_by(|&a, &b| {
            let na = dot(&matrix[a * dim..(a + 1) * dim], &matrix[a * dim..(a + 1) * dim]);
            let nb = dot(&matrix[b * dim..(b + 1) * dim], &matrix[b * dim..(b + 1) * dim]);
            na.total_cmp(&nb)
        })
        .unwrap_or(0);
    let mut v = matrix[start * dim..(start + 1) * dim].to_vec();
    orthogonalize(&mut v, found);
    if normalize(&mut v) <= scale * 1e-14 {
        return (0.0, fallback_direction(dim, found));
    }
    for _ in 0..MAX_ITERATIONS {
        let mut next = sym_mul(matrix, dim, &v);
        orthogonalize(&mut next, found);
        if normalize(&mut next) <= scale * 1e-14 {
            return (0.0, fallback_direction(dim, found));
        }
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if delta < EIGEN_TOLERANCE {
            break;
        }
    }
    let lambda = dot(&v, &sym_mul(matrix, dim, &v));
    fix_sign(&mut v);
    (lambda.max(0.0), v)
}

fn fallback_direction(dim: usize, found: &[Vec<f64>]) -> Vec<f64> {
    for axis in 0..dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        orthogonalize(&mut v, found);
        if normalize(&mut v) > 1e-6 {
            orthogonalize(&mut v, found);
            normalize(&mut v);
            fix_sign(&mut v);
            return v;
        }
    }
    vec![0.0; dim]
}

/// Two-component PCA by power iteration with deflation on the sample
/// covariance. Returns the model and each input's projection.
pub fn pca_2d(vectors: &[Vec<f64>]) -> Result<(PcaModel, Vec<[f64; 2]>)> {
    if vectors.len() < 3 {
        return Err(Error::Invalid(format!("PCA needs at least 3 vectors, got {}", vectors.len())));
    }
    let dim = vectors[0].len();
    if dim < 2 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Shape("PCA inputs must share a dimension of at least 2".into()));
    }
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x / n);
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let mut cov = vec![0.0; dim * dim];
    for row in &centered {
        for i in 0..dim {
            if row[i] == 0.0 {
                continue;
            }
            let ri = row[i];
            for (c, x) in cov[i * dim..(i + 1) * dim].iter_mut().zip(row) {
                *c += ri * x;
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n - 1.0);
    let total_variance: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
    if total_variance <= 0.0 {
        return Err(Error::Invalid("all points are identical; nothing to project".into()));
    }

    let (l1, v1) = dominant_eigenpair(&cov, dim, &[], total_variance);
    let (l2, v2) = dominant_eigenpair(&cov, dim, std::slice::from_ref(&v1), total_variance);
    let model = PcaModel {
        mean,
        components: [v1, v2],
        explained_variance: [l1, l2],
        total_variance,
    };
    let points = centered
        .iter()
        .map(|c| [dot(c, &model.components[0]), dot(c, &model.components[1])])
        .collect();
    Ok((model, points))
}

pub fn write_pca_csv<W: Write>(out: W, docs: &[LabeledDocument], points: &[[f64; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "context", "x", "y"])?;
    for (doc, p) in docs.iter().zip(points) {
        w.write_record([doc.id.clone(), doc.context.clone(), format!("{:.8}", p[0]), format!("{:.8}", p[1])])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-context label sequences stretched onto a common length axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelDistributionGrid {
    pub resolution: usize,
    /// Rows ordered by document id.
    pub contexts: BTreeMap<String, Vec<(String, Vec<Label>)>>,
}

impl LabelDistributionGrid {
    pub fn write_context_csv<W: Write>(&self, context: &str, out: W) -> Result<()> {
        let rows = self
            .contexts
            .get(context)
            .ok_or_else(|| Error::UnknownContext(context.to_string()))?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend((0..self.resolution).map(|k| format!("bin{k}")));
        w.write_record(&header)?;
        for (id, labels) in rows {
            let mut record = vec![id.clone()];
            record.extend(labels.iter().map(|l| l.name().to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Nearest-neighbour resampling with both endpoints pinned: bin `k` reads
/// position `round(k·(n−1)/(bins−1))`.
pub fn resample_labels(labels: &[Label], bins: usize) -> Vec<Label> {
    let n = labels.len();
    if bins == 1 {
        return vec![labels[0]];
    }
    (0..bins)
        .map(|k| {
            let pos = (k as f64 * (n - 1) as f64 / (bins - 1) as f64).round() as usize;
            labels[pos.min(n - 1)]
        })
        .collect()
}

pub fn label_position_distribution(docs: &[LabeledDocument], resolution: usize) -> Result<LabelDistributionGrid> {
    if resolution == 0 {
        return Err(Error::Invalid("resolution must be at least 1".into()));
    }
    let mut contexts: BTreeMap<String, Vec<(String, Vec<Label>)>> = BTreeMap::new();
    for doc in docs {
        if doc.is_empty() {
            return Err(Error::Invalid(format!("document {} is empty", doc.id)));
        }
        contexts
            .entry(doc.context.clone())
            .or_default()
            .push((doc.id.clone(), resample_labels(&doc.labels(), resolution)));
    }
    for rows in contexts.values_mut() {
        rows.sort_by(|a, b| a.0.cmp(&b.0));
    }
    Ok(LabelDistributionGrid { resolution, contexts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::*;

    #[test]
    fn collinear_points() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let (model, proj) = pca_2d(&pts).unwrap();
        let ratio = model.explained_ratio();
        assert!((ratio[0] - 1.0).abs() < 1e-12);
        assert!(ratio[1].abs() < 1e-12);
        assert!(dot(&model.components[0], &model.components[1]).abs() < 1e-12);
        assert!((dot(&model.components[1], &model.components[1]) - 1.0).abs() < 1e-12);
        assert!(proj.iter().all(|p| p[1].abs() < 1e-10));
    }

    #[test]
    fn projections_are_centered() {
        let pts: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![(i * i) as f64, (i as f64).sin(), 3.0 - i as f64, (i % 3) as f64])
            .collect();
        let (model, proj) = pca_2d(&pts).unwrap();
        for k in 0..2 {
            let m: f64 = proj.iter().map(|p| p[k]).sum::<f64>() / proj.len() as f64;
            assert!(m.abs() < 1e-10);
        }
        let origin = model.project(&model.mean);
        assert_eq!(origin, [0.0, 0.0]);
        assert!(model.explained_variance[0] >= model.explained_variance[1]);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(pca_2d(&[vec![1.0, 2.0], vec![1.0, 2.0]]).is_err());
        assert!(pca_2d(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).is_err());
        assert!(pca_2d(&[vec![1.0, 2.0], vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn resampling_examples() {
        assert_eq!(
            resample_labels(&[Background, Background, Analysis, Outcome], 4),
            vec![Background, Background, Analysis, Outcome]
        );
        assert_eq!(resample_labels(&[Background, Analysis], 4), vec![Background, Background, Analysis, Analysis]);
        let german = [Outcome, Outcome, Background, Background, Analysis, Analysis, Analysis, Analysis];
        let bins = resample_labels(&german, 16);
        assert_eq!(&bins[..3], &[Outcome; 3]);
    }

    #[test]
    fn grid_rows_sorted_by_id() {
        let docs = vec![
            LabeledDocument::new("b", "x", [("s", Analysis)]),
            LabeledDocument::new("a", "x", [("s", Outcome), ("t", Analysis)]),
            LabeledDocument::new("c", "y", [("s", Background)]),
        ];
        let grid = label_position_distribution(&docs, 3).unwrap();
        let ids: Vec<&str> = grid.contexts["x"].iter().map(|r| r.0.as_str()).collect();
        assert_eq!(ids, vec!["a", "b"]);
        let mut buf = Vec::new();
        grid.write_context_csv("x", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "id,bin0,bin1,bin2\na,Outcome,Analysis,Analysis\nb,Analysis,Analysis,Analysis\n");
        assert!(label_position_distribution(&docs, 0).is_err());
    }

    proptest! {
        #[test]
        fn endpoints_preserved(labels in prop::collection::vec(0usize..3, 1..60), bins in 2usize..40) {
            let labels: Vec<Label> = labels.into_iter().map(|i| Label::ALL[i]).collect();
            let out = resample_labels(&labels, bins);
            prop_assert_eq!(out.len(), bins);
            prop_assert_eq!(out[0], labels[0]);
            prop_assert_eq!(*out.last().unwrap(), *labels.last().unwrap());
        }
    }
}
