//! Classification scores and the exact Wilcoxon signed-rank test.

use serde::Serialize;

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    /// Zero when precision and recall are both zero.
    pub f1: f64,
    /// Gold occurrences.
    pub support: usize,
    pub predicted: usize,
    pub true_positives: usize,
}

impl ClassScore {
    /// Neither gold nor prediction contains the class.
    pub fn is_absent(&self) -> bool {
        self.support == 0 && self.predicted == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    /// Indexed by [`Label::index`].
    pub classes: [ClassScore; 3],
}

impl ClassScores {
    pub fn get(&self, label: Label) -> &ClassScore {
        &self.classes[label.index()]
    }

    pub fn f1s(&self) -> [f64; 3] {
        self.classes.map(|c| c.f1)
    }
}

fn check_lengths(gold: &[Label], predicted: &[Label]) -> Result<()> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch(gold.len(), predicted.len()));
    }
    if gold.is_empty() {
        return Err(Error::Invalid("no labels to score".into()));
    }
    Ok(())
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One-vs-rest precision, recall and F1 for each of the three labels.
pub fn prf_per_class(gold: &[Label], predicted: &[Label]) -> Result<ClassScores> {
    check_lengths(gold, predicted)?;
    let mut tp = [0usize; 3];
    let mut support = [0usize; 3];
    let mut pred = [0usize; 3];
    for (&g, &p) in gold.iter().zip(predicted) {
        support[g.index()] += 1;
        pred[p.index()] += 1;
        if g == p {
            tp[g.index()] += 1;
        }
    }
    let classes = std::array::from_fn(|c| {
        let precision = ratio(tp[c], pred[c]);
        let recall = ratio(tp[c], support[c]);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassScore {
            precision,
            recall,
            f1,
            support: support[c],
            predicted: pred[c],
            true_positives: tp[c],
        }
    });
    Ok(ClassScores { classes })
}

/// Micro-averaged F1 from pooled counts, `2·TP / (2·TP + FP + FN)`.
pub fn micro_f1(gold: &[Label], predicted: &[Label]) -> Result<f64> {
    check_lengths(gold, predicted)?;
    let tp = gold.iter().zip(predicted).filter(|(g, p)| g == p).count();
    let errors = gold.len() - tp;
    // every error is one false positive and one false negative
    Ok((2 * tp) as f64 / (2 * tp + 2 * errors) as f64)
}

pub fn accuracy(gold: &[Label], predicted: &[Label]) -> Result<f64> {
    check_lengths(gold, predicted)?;
    let tp = gold.iter().zip(predicted).filter(|(g, p)| g == p).count();
    Ok(tp as f64 / gold.len() as f64)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    pub w: f64,
    /// Exact two-sided p-value.
    pub p_value: f64,
    /// Every difference was zero.
    pub degenerate: bool,
}

/// Largest sample the exact distribution is computed for.
pub const MAX_EXACT_N: usize = 100;

/// Average ranks (1-based) of `values`, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Number of sign assignments giving each positive rank sum, indexed by
/// twice the sum so tied half-ranks stay integral.
fn rank_sum_counts(doubled_ranks: &[usize]) -> Vec<u128> {
    let total: usize = doubled_ranks.iter().sum();
    let mut counts = vec![0u128; total + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in doubled_ranks {
        reach += r;
        for s in (r..=reach).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

/// `P(T ≤ w)` doubled and capped at one, where `T` is the positive rank sum
/// under random signs on the given ranks.
pub fn exact_two_sided_p(ranks: &[f64], w: f64) -> Result<f64> {
    if ranks.len() > MAX_EXACT_N {
        return Err(Error::Invalid(format!(
            "exact signed-rank distribution limited to n ≤ {MAX_EXACT_N}"
        )));
    }
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let counts = rank_sum_counts(&doubled);
    let limit = (2.0 * w).round() as usize;
    let hits: u128 = counts.iter().take(limit + 1).sum();
    let p = 2.0 * (hits as f64) / 2f64.powi(ranks.len() as i32);
    Ok(p.min(1.0))
}

/// Two-sided p-value for `n` untied pairs with statistic `w`.
pub fn signed_rank_p(n: usize, w: f64) -> Result<f64> {
    let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
    exact_two_sided_p(&ranks, w)
}

/// Paired comparison of `a` against `b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Invalid("no pairs to compare".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("paired scores".into()));
    }
    if diffs.is_empty() {
        return Ok(WilcoxonResult {
            n_effective: 0,
            w_plus: 0.0,
            w_minus: 0.0,
            w: 0.0,
            p_value: 1.0,
            degenerate: true,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let w = w_plus.min(w_minus);
    Ok(WilcoxonResult {
        n_effective: diffs.len(),
        w_plus,
        w_minus,
        w,
        p_value: exact_two_sided_p(&ranks, w)?,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::*;

    /// Brute force over all 2^n sign patterns.
    fn brute_force_p(ranks: &[f64], w: f64) -> f64 {
        let n = ranks.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let t: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if t <= w + 1e-9 {
                hits += 1;
            }
        }
        (2.0 * hits as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn hand_confusion_matrix() {
        let gold = [Background, Background, Analysis, Outcome];
        let pred = [Background, Analysis, Analysis, Outcome];
        let s = prf_per_class(&gold, &pred).unwrap();
        let b = s.get(Background);
        assert_eq!((b.precision, b.recall), (1.0, 0.5));
        assert!((b.f1 - 2.0 / 3.0).abs() < 1e-15);
        let a = s.get(Analysis);
        assert_eq!((a.precision, a.recall), (0.5, 1.0));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-15);
        let o = s.get(Outcome);
        assert_eq!((o.precision, o.recall, o.f1), (1.0, 1.0, 1.0));
        assert_eq!(micro_f1(&gold, &pred).unwrap(), 0.75);
    }

    #[test]
    fn perfect_and_all_wrong() {
        let gold = [Background, Analysis, Outcome, Analysis];
        let s = prf_per_class(&gold, &gold).unwrap();
        assert!(s.classes.iter().all(|c| c.f1 == 1.0));
        let wrong = [Analysis, Outcome, Background, Outcome];
        assert_eq!(micro_f1(&gold, &wrong).unwrap(), 0.0);
    }

    #[test]
    fn missing_predictions_score_zero() {
        let gold = [Outcome, Analysis];
        let pred = [Analysis, Analysis];
        let o = *prf_per_class(&gold, &pred).unwrap().get(Outcome);
        assert_eq!((o.precision, o.recall, o.f1), (0.0, 0.0, 0.0));
        let b = *prf_per_class(&gold, &pred).unwrap().get(Background);
        assert!(b.is_absent());
        assert_eq!(b.f1, 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            micro_f1(&[Outcome], &[Outcome, Analysis]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(prf_per_class(&[], &[]).is_err());
    }

    #[test]
    fn reported_p_values() {
        assert_eq!(signed_rank_p(7, 0.0).unwrap(), 0.015625);
        assert_eq!(signed_rank_p(7, 1.0).unwrap(), 0.03125);
        assert_eq!(signed_rank_p(7, 2.0).unwrap(), 0.046875);
        assert_eq!(signed_rank_p(8, 7.0).unwrap(), 0.1484375);
        assert_eq!(signed_rank_p(8, 8.0).unwrap(), 0.1953125);
    }

    #[test]
    fn all_positive_seven_pairs() {
        let a = [0.7, 0.6, 0.8, 0.9, 0.65, 0.75, 0.85];
        let b = [0.5; 7];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.n_effective, 7);
        assert_eq!(r.w, 0.0);
        assert_eq!(r.w_plus, 28.0);
        assert_eq!(r.p_value, 0.015625);
    }

    #[test]
    fn zero_differences_dropped() {
        let a = [1.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
        let base = wilcoxon_signed_rank(&[3.0, 1.0, 4.0], &[1.0, 2.0, 1.5]).unwrap();
        let extra = wilcoxon_signed_rank(&[3.0, 1.0, 4.0, 9.0], &[1.0, 2.0, 1.5, 9.0]).unwrap();
        assert_eq!(base, extra);
    }

    #[test]
    fn tied_ranks_average() {
        assert_eq!(average_ranks(&[0.2, 0.1, 0.2, 0.3]), vec![2.5, 1.0, 2.5, 4.0]);
        let r = wilcoxon_signed_rank(&[1.5, 0.75, 1.5, 2.0], &[1.25, 1.0, 1.25, 1.0]).unwrap();
        assert_eq!((r.w_plus, r.w_minus, r.w), (8.0, 2.0, 2.0));
        assert_eq!(r.p_value, brute_force_p(&[2.0, 2.0, 2.0, 4.0], 2.0));
        assert_eq!(r.p_value, 0.5);
    }

    #[test]
    fn recursion_matches_brute_force_for_small_n() {
        for n in 1..=12 {
            let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
            let max = (n * (n + 1) / 2) as i64;
            for w in 0..=max {
                assert_eq!(
                    exact_two_sided_p(&ranks, w as f64).unwrap(),
                    brute_force_p(&ranks, w as f64),
                    "n={n} w={w}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn micro_f1_is_accuracy(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..200)) {
            let gold: Vec<Label> = pairs.iter().map(|p| Label::ALL[p.0]).collect();
            let pred: Vec<Label> = pairs.iter().map(|p| Label::ALL[p.1]).collect();
            let f = micro_f1(&gold, &pred).unwrap();
            prop_assert_eq!(f, accuracy(&gold, &pred).unwrap());
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn wilcoxon_antisymmetric(pairs in prop::collection::vec((0u8..6, 0u8..6), 1..10)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 4.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 4.0).collect();
            let ab = wilcoxon_signed_rank(&a, &b).unwrap();
            let ba = wilcoxon_signed_rank(&b, &a).unwrap();
            prop_assert_eq!(ab.w, ba.w);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
            let n = ab.n_effective as f64;
            prop_assert!(ab.w <= n * (n + 1.0) / 2.0);
            if ab.n_effective > 0 {
                let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).filter(|d| *d != 0.0).collect();
                prop_assert_eq!(ab.p_value, brute_force_p(&average_ranks(&diffs), ab.w));
            }
        }
    }
}
