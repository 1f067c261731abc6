//! Threshold-free evaluation measures: AUROC, average precision, FPR at a
//! fixed TPR, calibration curves, error accumulation below an uncertainty
//! threshold, and exact discrete entropy.
//!
//! Scores follow the convention "higher = more positive" (more OOD).

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Scores with binary labels (`true` = positive).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBinarySet {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl ScoredBinarySet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimMismatch {
                expected: scores.len(),
                got: labels.len(),
            });
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidArgument("NaN score".into()));
        }
        Ok(Self { scores, labels })
    }

    /// Positives and negatives given as separate score lists.
    pub fn from_groups(positives: &[f64], negatives: &[f64]) -> Result<Self> {
        let scores = positives.iter().chain(negatives).copied().collect();
        let labels = std::iter::repeat(true)
            .take(positives.len())
            .chain(std::iter::repeat(false).take(negatives.len()))
            .collect();
        Self::new(scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn counts(&self) -> Result<(usize, usize)> {
        let pos = self.labels.iter().filter(|&&l| l).count();
        let neg = self.labels.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(Error::OneClassOnly);
        }
        Ok((pos, neg))
    }

    /// Cumulative (tp, fp) after admitting each group of tied scores, in
    /// order of decreasing score.
    fn threshold_steps(&self) -> Vec<(usize, usize)> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].partial_cmp(&self.scores[a]).unwrap_or(Ordering::Equal));
        let mut steps = Vec::new();
        let (mut tp, mut fp) = (0, 0);
        for (k, &i) in idx.iter().enumerate() {
            if self.labels[i] {
                tp += 1;
            } else {
                fp += 1;
            }
            let last_of_group = idx
                .get(k + 1)
                .is_none_or(|&j| self.scores[j] != self.scores[i]);
            if last_of_group {
                steps.push((tp, fp));
            }
        }
        steps
    }
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half (Mann-Whitney form via mid-ranks).
pub fn auroc(s: &ScoredBinarySet) -> Result<f64> {
    let (pos, neg) = s.counts()?;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s.scores[a].partial_cmp(&s.scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && s.scores[idx[end]] == s.scores[idx[start]] {
            end += 1;
        }
        // ranks are 1-based; a tie group shares the mean rank
        let mid_rank = (start + end + 1) as f64 / 2.0;
        let pos_in_group = idx[start..end].iter().filter(|&&i| s.labels[i]).count();
        rank_sum_pos += mid_rank * pos_in_group as f64;
        start = end;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Step-interpolated average precision `Σ (R_i − R_{i−1}) P_i` over the
/// distinct score thresholds. Tied scores are admitted together.
pub fn average_precision(s: &ScoredBinarySet) -> Result<f64> {
    let (pos, _) = s.counts()?;
    let mut ap = 0.0;
    let mut prev_tp = 0;
    for (tp, fp) in s.threshold_steps() {
        if tp > prev_tp {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += (tp - prev_tp) as f64 / pos as f64 * precision;
            prev_tp = tp;
        }
    }
    Ok(ap)
}

/// Smallest false positive rate among thresholds whose true positive rate
/// reaches `tpr_target`.
pub fn fpr_at_tpr(s: &ScoredBinarySet, tpr_target: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tpr_target) {
        return Err(Error::InvalidArgument(format!(
            "TPR target must lie in [0, 1], got {tpr_target}"
        )));
    }
    let (pos, neg) = s.counts()?;
    if tpr_target == 0.0 {
        return Ok(0.0);
    }
    for (tp, fp) in s.threshold_steps() {
        if tp as f64 / pos as f64 >= tpr_target {
            return Ok(fp as f64 / neg as f64);
        }
    }
    Ok(1.0)
}

/// ROC points `(fpr, tpr)` from `(0, 0)` through every distinct threshold to
/// `(1, 1)`.
pub fn roc_points(s: &ScoredBinarySet) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = s.counts()?;
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(
        s.threshold_steps()
            .into_iter()
            .map(|(tp, fp)| (fp as f64 / neg as f64, tp as f64 / pos as f64)),
    );
    Ok(pts)
}

/// Percentile of `sorted` with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Accuracy among samples whose uncertainty lies at or below increasing
/// percentiles of the uncertainty distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCurve {
    /// Percentiles in (0, 100], ascending.
    pub percentiles: Vec<f64>,
    /// Uncertainty value at each percentile.
    pub thresholds: Vec<f64>,
    pub accuracy: Vec<f64>,
    /// Number of samples at or below each threshold.
    pub counts: Vec<usize>,
}

pub fn calibration_curve(uncertainties: &[f64], correct: &[bool], step: f64) -> Result<CalibrationCurve> {
    if uncertainties.is_empty() {
        return Err(Error::EmptyInput);
    }
    if uncertainties.len() != correct.len() {
        return Err(Error::DimMismatch {
            expected: uncertainties.len(),
            got: correct.len(),
        });
    }
    if !(step > 0.0 && step <= 100.0) {
        return Err(Error::InvalidArgument(format!("percentile step must lie in (0, 100], got {step}")));
    }
    if uncertainties.iter().any(|u| u.is_nan()) {
        return Err(Error::InvalidArgument("NaN uncertainty".into()));
    }
    let mut order: Vec<usize> = (0..uncertainties.len()).collect();
    order.sort_by(|&a, &b| uncertainties[a].total_cmp(&uncertainties[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| uncertainties[i]).collect();
    let mut correct_prefix = Vec::with_capacity(order.len() + 1);
    correct_prefix.push(0usize);
    for &i in &order {
        correct_prefix.push(correct_prefix.last().unwrap() + correct[i] as usize);
    }

    let mut percentiles = Vec::new();
    let mut k = 1;
    loop {
        let q = step * k as f64;
        if q >= 100.0 - 1e-9 {
            percentiles.push(100.0);
            break;
        }
        percentiles.push(q);
        k += 1;
    }
    let mut curve = CalibrationCurve {
        percentiles: percentiles.clone(),
        thresholds: Vec::with_capacity(percentiles.len()),
        accuracy: Vec::with_capacity(percentiles.len()),
        counts: Vec::with_capacity(percentiles.len()),
    };
    for q in percentiles {
        let t = if q == 100.0 { sorted[sorted.len() - 1] } else { percentile(&sorted, q) };
        let count = sorted.partition_point(|&u| u <= t);
        curve.thresholds.push(t);
        curve.counts.push(count);
        curve.accuracy.push(correct_prefix[count] as f64 / count as f64);
    }
    Ok(curve)
}

/// RMSE over samples with uncertainty at or below each threshold; `None`
/// where no sample qualifies.
pub fn rmse_below_uncertainty(errors: &[f64], uncertainties: &[f64], thresholds: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != uncertainties.len() {
        return Err(Error::DimMismatch {
            expected: errors.len(),
            got: uncertainties.len(),
        });
    }
    Ok(thresholds
        .iter()
        .map(|&t| {
            let (sum, n) = errors
                .iter()
                .zip(uncertainties)
                .filter(|(_, &u)| u <= t)
                .fold((0.0, 0usize), |(s, n), (e, _)| (s + e * e, n + 1));
            (n > 0).then(|| (sum / n as f64).sqrt())
        })
        .collect())
}

/// `−Σ p log p` in nats with `0 log 0 = 0`.
pub fn discrete_entropy(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(pos: &[f64], neg: &[f64]) -> ScoredBinarySet {
        ScoredBinarySet::from_groups(pos, neg).unwrap()
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&set(&[0.9, 0.8], &[0.1, 0.2])).unwrap(), 1.0);
        assert_eq!(auroc(&set(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0])).unwrap(), 0.5);
        assert_eq!(auroc(&set(&[0.8, 0.4], &[0.6, 0.2])).unwrap(), 0.75);
        assert!(matches!(auroc(&set(&[1.0], &[])), Err(Error::OneClassOnly)));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&set(&[0.9, 0.8], &[0.1, 0.2])).unwrap(), 1.0);
        assert_eq!(average_precision(&set(&[0.0], &[1.0, 2.0, 3.0])).unwrap(), 0.25);
        let ties = set(&[0.5; 3], &[0.5; 4]);
        assert_abs_diff_eq!(average_precision(&ties).unwrap(), 3.0 / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn fpr_examples() {
        assert_eq!(fpr_at_tpr(&set(&[0.9, 0.8], &[0.1, 0.2]), 0.95).unwrap(), 0.0);
        assert_eq!(fpr_at_tpr(&set(&[3.0, 2.0, 1.0], &[2.5, 0.0]), 0.95).unwrap(), 0.5);
        let same: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let f = fpr_at_tpr(&set(&same, &same), 0.95).unwrap();
        assert!((f - 0.95).abs() < 2e-3);
    }

    #[test]
    fn roc_ends_at_corner() {
        let pts = roc_points(&set(&[0.8, 0.4], &[0.6, 0.2])).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        assert_eq!(pts.len(), 5);
    }

    #[test]
    fn calibration_examples() {
        let c = calibration_curve(&[1.0, 2.0, 3.0, 4.0], &[true, true, false, false], 50.0).unwrap();
        assert_eq!(c.percentiles, vec![50.0, 100.0]);
        assert_eq!(c.accuracy, vec![1.0, 0.5]);
        let c = calibration_curve(&[0.3, 0.1, 0.2], &[true; 3], 5.0).unwrap();
        assert_eq!(c.percentiles.len(), 20);
        assert!(c.accuracy.iter().all(|&a| a == 1.0));
        assert!(calibration_curve(&[], &[], 5.0).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse_below_uncertainty(&[0.0, 2.0], &[1.0, 10.0], &[5.0]).unwrap(), vec![Some(0.0)]);
        let all = rmse_below_uncertainty(&[3.0, 4.0], &[1.0, 2.0], &[2.0, 0.5]).unwrap();
        assert_abs_diff_eq!(all[0].unwrap(), (12.5_f64).sqrt(), epsilon = 1e-15);
        assert_eq!(all[1], None);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(discrete_entropy(&[0.5, 0.5]).unwrap(), 2.0_f64.ln(), epsilon = 1e-15);
        assert_eq!(discrete_entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(discrete_entropy(&[0.731059, 0.268941]).unwrap(), 0.582203, epsilon = 1e-6);
        assert!(matches!(discrete_entropy(&[0.5, 0.6]), Err(Error::NotNormalized { .. })));
    }
}
