use alloc::vec::Vec;

use super::{split_by_class, MetricsError, ScoredSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are predicted positive. The first point uses `+inf`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn trapezoid_auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// Checks endpoints and monotonicity.
    pub fn is_valid(&self) -> bool {
        let (Some(first), Some(last)) = (self.points.first(), self.points.last()) else {
            return false;
        };
        first.fpr == 0.0
            && first.tpr == 0.0
            && last.fpr == 1.0
            && last.tpr == 1.0
            && self.points.windows(2).all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr)
    }
}

/// One point per distinct score, thresholds descending, plus the `(0,0)`
/// origin at threshold `+inf`. The last point is always `(1,1)`.
pub fn roc_curve(samples: &[ScoredSample]) -> Result<RocCurve, MetricsError> {
    let (pos, neg) = split_by_class(samples)?;
    let (m, n) = (pos.len(), neg.len());
    let mut sorted: Vec<(f64, bool)> = samples.iter().map(|s| (s.score, s.is_positive())).collect();
    sorted.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push(RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / m as f64,
            threshold,
        });
    }
    Ok(RocCurve {
        points,
        n_pos: m,
        n_neg: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    /// Equal error rate: `fpr == 1 - tpr` at this point.
    pub rate: f64,
    pub fpr: f64,
    pub tpr: f64,
    /// Threshold of the curve point closing the crossing segment.
    pub threshold: f64,
}

/// Crossing of the curve with `fpr = 1 - tpr`, interpolated linearly
/// between adjacent points.
pub fn eer(curve: &RocCurve) -> EerPoint {
    let g = |p: &RocPoint| p.fpr + p.tpr - 1.0;
    let pts = &curve.points;
    let i = pts.iter().position(|p| g(p) >= 0.0).unwrap_or(pts.len() - 1);
    let b = pts[i];
    if g(&b) == 0.0 || i == 0 {
        return EerPoint {
            rate: b.fpr,
            fpr: b.fpr,
            tpr: b.tpr,
            threshold: b.threshold,
        };
    }
    let a = pts[i - 1];
    let (ga, gb) = (g(&a), g(&b));
    let t = -ga / (gb - ga);
    let fpr = a.fpr + t * (b.fpr - a.fpr);
    let tpr = a.tpr + t * (b.tpr - a.tpr);
    EerPoint {
        rate: (fpr + 1.0 - tpr) / 2.0,
        fpr,
        tpr,
        threshold: b.threshold,
    }
}

/// `(sensitivity, specificity)` with `score >= threshold` predicted positive.
pub fn sensitivity_specificity_at(samples: &[ScoredSample], threshold: f64) -> Result<(f64, f64), MetricsError> {
    let (pos, neg) = split_by_class(samples)?;
    let tp = pos.iter().filter(|s| **s >= threshold).count();
    let tn = neg.iter().filter(|s| **s < threshold).count();
    Ok((tp as f64 / pos.len() as f64, tn as f64 / neg.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::super::naive;
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn samples(pos: &[f64], neg: &[f64]) -> Vec<ScoredSample> {
        pos.iter()
            .map(|x| ScoredSample::new(*x, true))
            .chain(neg.iter().map(|x| ScoredSample::new(*x, false)))
            .collect()
    }

    #[test]
    fn perfect_separation_passes_top_left() {
        let c = roc_curve(&samples(&[0.9, 0.8], &[0.4, 0.3])).unwrap();
        assert!(c.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert!(c.is_valid());
        assert_eq!(c.trapezoid_auc(), 1.0);
        assert_eq!(eer(&c).rate, 0.0);
    }

    #[test]
    fn all_ties_collapse_to_endpoints() {
        let c = roc_curve(&samples(&[0.5, 0.5], &[0.5, 0.5, 0.5])).unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.trapezoid_auc(), 0.5);
        let e = eer(&c);
        assert_eq!(e.rate, 0.5);
        assert_eq!(e.fpr, 0.5);
    }

    #[test]
    fn mixed_four_sample_case() {
        let c = roc_curve(&samples(&[0.8, 0.3], &[0.9, 0.4])).unwrap();
        assert_eq!(c.trapezoid_auc(), 0.25);
        assert_eq!(c.points.len(), 5);
        assert_eq!(c.points[1].threshold, 0.9);
    }

    #[test]
    fn on_point_crossing() {
        // 5 positives, 5 negatives, one negative above the 4 top positives.
        let c = roc_curve(&samples(&[0.9, 0.8, 0.7, 0.6, 0.1], &[0.95, 0.5, 0.4, 0.3, 0.2])).unwrap();
        assert!(c.points.iter().any(|p| p.fpr == 0.2 && p.tpr == 0.8));
        let e = eer(&c);
        assert!((e.rate - 0.2).abs() < 1e-15);
        assert_eq!(e.threshold, 0.6);
    }

    #[test]
    fn single_class_rejected() {
        assert!(roc_curve(&samples(&[0.1], &[])).is_err());
        assert!(sensitivity_specificity_at(&samples(&[], &[0.1]), 0.0).is_err());
    }

    #[test]
    fn extreme_thresholds() {
        let v = samples(&[0.9, 0.2], &[0.4, 0.3]);
        assert_eq!(sensitivity_specificity_at(&v, -1.0).unwrap(), (1.0, 0.0));
        assert_eq!(sensitivity_specificity_at(&v, 2.0).unwrap(), (0.0, 1.0));
        assert_eq!(sensitivity_specificity_at(&v, 0.4).unwrap(), (0.5, 0.5));
    }

    fn random_tied(rng: &mut SplitMix64, n: usize) -> Vec<ScoredSample> {
        let mut v: Vec<ScoredSample> = (0..n)
            .map(|i| {
                let pos = i % 4 == 0 || i == 1;
                let x = rng.normal() + if pos { 0.7 } else { 0.0 };
                ScoredSample::new(x, pos)
            })
            .collect();
        // inject ties on roughly a fifth of the samples
        for i in 0..n {
            if rng.below(5) == 0 {
                let j = rng.below(n as u64) as usize;
                v[i].score = v[j].score;
            }
        }
        v
    }

    proptest! {
        #[test]
        fn trapezoid_equals_pairwise(seed in 0u64..100_000, n in 3usize..300) {
            let mut rng = SplitMix64::new(seed);
            let v = random_tied(&mut rng, n);
            let c = roc_curve(&v).unwrap();
            prop_assert!(c.is_valid());
            prop_assert!((c.trapezoid_auc() - naive::auc_pairwise(&v).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn eer_lies_on_the_diagonal(seed in 0u64..100_000, n in 3usize..300) {
            let mut rng = SplitMix64::new(seed);
            let v = random_tied(&mut rng, n);
            let c = roc_curve(&v).unwrap();
            let e = eer(&c);
            prop_assert!((e.fpr - (1.0 - e.tpr)).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&e.rate));
        }

        #[test]
        fn eer_threshold_balances_errors(seed in 0u64..100_000, n in 20usize..300) {
            let mut rng = SplitMix64::new(seed);
            let v: Vec<ScoredSample> = (0..n).map(|i| ScoredSample::new(rng.normal() + if i % 2 == 0 { 1.0 } else { 0.0 }, i % 2 == 0)).collect();
            let c = roc_curve(&v).unwrap();
            let e = eer(&c);
            let (sens, spec) = sensitivity_specificity_at(&v, e.threshold).unwrap();
            let step = 1.0 / c.n_pos.min(c.n_neg) as f64;
            prop_assert!((sens - spec).abs() <= step + 1e-12, "{} {} {}", sens, spec, step);
        }
    }
}
