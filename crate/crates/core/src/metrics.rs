//! Forecast and classification metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root mean square error between two equal-length series.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::Contract(format!(
            "rmse: length mismatch ({} predicted vs {} actual)",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Contract("rmse: empty input".into()));
    }
    if predicted.iter().chain(actual).any(|v| !v.is_finite()) {
        return Err(Error::Contract("rmse: non-finite input".into()));
    }
    let sse: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / predicted.len() as f64).sqrt())
}

/// Precision, recall and F1 of a binary detector.
///
/// A metric whose denominator is zero is reported as 0 and `degenerate` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub degenerate: bool,
}

pub fn precision_recall_f1(flags_pred: &[bool], flags_true: &[bool]) -> Result<DetectionScore> {
    if flags_pred.len() != flags_true.len() {
        return Err(Error::Contract(format!(
            "precision/recall: length mismatch ({} vs {})",
            flags_pred.len(),
            flags_true.len()
        )));
    }
    if flags_pred.is_empty() {
        return Err(Error::Contract("precision/recall: empty input".into()));
    }
    let pairs = flags_pred.iter().zip(flags_true).map(|(&p, &t)| (p, Some(t)));
    Ok(score_counts(pairs))
}

/// Like [`precision_recall_f1`], but ground-truth entries of `None` are left
/// out of the scoring entirely.
pub fn precision_recall_f1_masked(
    flags_pred: &[bool],
    flags_true: &[Option<bool>],
) -> Result<DetectionScore> {
    if flags_pred.len() != flags_true.len() {
        return Err(Error::Contract(format!(
            "precision/recall: length mismatch ({} vs {})",
            flags_pred.len(),
            flags_true.len()
        )));
    }
    if flags_true.iter().all(Option::is_none) {
        return Err(Error::Contract(
            "precision/recall: no scorable ground-truth points".into(),
        ));
    }
    Ok(score_counts(
        flags_pred.iter().copied().zip(flags_true.iter().copied()),
    ))
}

fn score_counts(pairs: impl Iterator<Item = (bool, Option<bool>)>) -> DetectionScore {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (pred, truth) in pairs {
        match (pred, truth) {
            (true, Some(true)) => tp += 1,
            (true, Some(false)) => fp += 1,
            (false, Some(true)) => fn_ += 1,
            _ => {}
        }
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate = true;
        0.0
    };
    DetectionScore {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        degenerate,
    }
}

/// K×K confusion counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        ConfusionMatrix {
            class_names,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_predictions(
        class_names: Vec<String>,
        truth: &[usize],
        predicted: &[usize],
    ) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Contract(format!(
                "confusion matrix: {} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(class_names);
        let k = m.num_classes();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Contract(format!(
                    "class index out of range ({t} or {p} >= {k})"
                )));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    /// Each nonempty row scaled to sum to 1; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let sum: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if sum == 0 { 0.0 } else { c as f64 / sum as f64 })
                    .collect()
            })
            .collect()
    }

    /// Per-class support (row sums).
    pub fn support(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_hand_cases() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let r = rmse(&[1.0, 2.0], &[1.0, 4.0]).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!((r - 1.41421).abs() < 1e-5);
    }

    #[test]
    fn rmse_rejects_bad_input() {
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::Contract(_))));
        assert!(matches!(rmse(&[], &[]), Err(Error::Contract(_))));
        assert!(rmse(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn rmse_matches_two_pass_oracle() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(11);
        let a: Vec<f64> = (0..1000).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.random_range(-5.0..5.0)).collect();
        // Two passes: squared differences first, then mean and root.
        let mut sq = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let d = a[i] - b[i];
            sq.push(d * d);
        }
        let mut total = 0.0;
        for v in &sq {
            total += v;
        }
        let oracle = (total / sq.len() as f64).sqrt();
        let got = rmse(&a, &b).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-12);
    }

    #[test]
    fn prf_hand_case() {
        // TP=3, FP=1, FN=2, plus two true negatives.
        let pred = [true, true, true, true, false, false, false, false];
        let truth = [true, true, true, false, true, true, false, false];
        let s = precision_recall_f1(&pred, &truth).unwrap();
        assert_eq!((s.true_positives, s.false_positives, s.false_negatives), (3, 1, 2));
        assert!((s.precision - 0.75).abs() < 1e-12);
        assert!((s.recall - 0.6).abs() < 1e-12);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!(!s.degenerate);
    }

    #[test]
    fn prf_perfect_and_degenerate() {
        let s = precision_recall_f1(&[true, false, true], &[true, false, true]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));

        let s = precision_recall_f1(&[false, false, false], &[true, false, true]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        assert!(s.degenerate);
    }

    #[test]
    fn masked_scoring_skips_excluded_points() {
        let pred = [true, true, false];
        let truth = [Some(true), None, Some(false)];
        let s = precision_recall_f1_masked(&pred, &truth).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
        assert!(precision_recall_f1_masked(&[true], &[None]).is_err());
    }

    #[test]
    fn confusion_matrix_basics() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let m = ConfusionMatrix::from_predictions(names, &[0, 0, 1, 2, 2, 2], &[0, 1, 1, 2, 0, 2]).unwrap();
        assert_eq!(m.total(), 6);
        assert_eq!(m.trace(), 4);
        assert!((m.accuracy() - 4.0 / 6.0).abs() < 1e-12);
        for row in m.row_normalized() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.support(), vec![2, 1, 3]);
    }

    proptest! {
        #[test]
        fn rmse_identity_and_symmetry(a in prop::collection::vec(-1e6f64..1e6, 1..64),
                                      shift in -10.0f64..10.0) {
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
            prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
            prop_assert!(rmse(&a, &b).unwrap() >= 0.0);
        }

        #[test]
        fn f1_is_harmonic_mean(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
            let pred: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let s = precision_recall_f1(&pred, &truth).unwrap();
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if s.precision > 0.0 && s.recall > 0.0 {
                let h = 2.0 / (1.0 / s.precision + 1.0 / s.recall);
                prop_assert!((s.f1 - h).abs() < 1e-12);
            }
        }

        #[test]
        fn accuracy_is_one_minus_off_diagonal(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..300)) {
            let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
            let m = ConfusionMatrix::from_predictions(names, &truth, &pred).unwrap();
            let independent = truth.iter().zip(&pred).filter(|(t, p)| t == p).count() as f64
                / truth.len() as f64;
            prop_assert!((m.accuracy() - independent).abs() < 1e-12);
            let off: u64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j)))
                .filter(|(i, j)| i != j).map(|(i, j)| m.counts[i][j]).sum();
            prop_assert!((m.accuracy() - (1.0 - off as f64 / m.total() as f64)).abs() < 1e-12);
            prop_assert_eq!(m.total() as usize, truth.len());
        }
    }
}
