//! Midrank-based AUC and DeLong variance/covariance in O(N log N).
//!
//! With `m` positives `X`, `n` negatives `Y`, and midranks taken over the
//! pooled scores (`tz`), within positives (`tx`) and within negatives (`ty`):
//!
//! ```text
//! V10[i] = (tz[i] - tx[i]) / n          placement of positive i
//! V01[j] = 1 - (tz[m + j] - ty[j]) / m  placement of negative j
//! AUC    = mean(V10) = mean(V01)
//! Var    = S10 / m + S01 / n
//! ```
//!
//! where `S10`, `S01` are sample (co)variances of the placements. The pooled
//! midrank of a positive minus its midrank among positives counts the
//! negatives below it, with ties counted half, so no pairwise loop is needed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{split_by_class, KeyedSample, MetricsError, ScoredSample};
use crate::math;

/// 1-based ranks where tied values share the mean of the positions they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1) + (j+1)) / 2
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Positive and negative placement values of one score set.
#[derive(Debug, Clone, PartialEq)]
pub struct Placements {
    pub v10: Vec<f64>,
    pub v01: Vec<f64>,
    pub auc: f64,
}

fn placements_of(pos: &[f64], neg: &[f64]) -> Placements {
    let (m, n) = (pos.len(), neg.len());
    let mut pooled = Vec::with_capacity(m + n);
    pooled.extend_from_slice(pos);
    pooled.extend_from_slice(neg);
    let tz = midranks(&pooled);
    let tx = midranks(pos);
    let ty = midranks(neg);
    let v10: Vec<f64> = (0..m).map(|i| (tz[i] - tx[i]) / n as f64).collect();
    let v01: Vec<f64> = (0..n).map(|j| 1.0 - (tz[m + j] - ty[j]) / m as f64).collect();
    let rank_sum: f64 = tz[..m].iter().sum();
    let auc = rank_sum / (m as f64 * n as f64) - (m as f64 + 1.0) / (2.0 * n as f64);
    Placements { v10, v01, auc }
}

pub fn placements(samples: &[ScoredSample]) -> Result<Placements, MetricsError> {
    let (pos, neg) = split_by_class(samples)?;
    Ok(placements_of(&pos, &neg))
}

/// `(V10, V01)` computed through midranks.
pub fn structural_components(samples: &[ScoredSample]) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let p = placements(samples)?;
    Ok((p.v10, p.v01))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucEstimate {
    pub auc: f64,
    /// DeLong variance; `None` when only the point estimate was requested.
    pub variance: Option<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl AucEstimate {
    pub fn std_error(&self) -> Option<f64> {
        self.variance.map(math::sqrt)
    }
}

/// Mann–Whitney AUC via midranks.
pub fn auc(samples: &[ScoredSample]) -> Result<AucEstimate, MetricsError> {
    let (pos, neg) = split_by_class(samples)?;
    let (m, n) = (pos.len(), neg.len());
    let mut pooled = pos;
    pooled.extend_from_slice(&neg);
    let tz = midranks(&pooled);
    let rank_sum: f64 = tz[..m].iter().sum();
    let auc = (rank_sum - (m as f64) * (m as f64 + 1.0) / 2.0) / (m as f64 * n as f64);
    Ok(AucEstimate {
        auc,
        variance: None,
        n_pos: m,
        n_neg: n,
    })
}

fn sample_cov(a: &[f64], mean_a: f64, b: &[f64], mean_b: f64) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - mean_a) * (y - mean_b)).sum();
    s / (a.len() - 1) as f64
}

fn require_two_per_class(m: usize, n: usize) -> Result<(), MetricsError> {
    if m < 2 || n < 2 {
        return Err(MetricsError::TooFewSamples { n_pos: m, n_neg: n });
    }
    Ok(())
}

fn variance_of(p: &Placements) -> f64 {
    let (m, n) = (p.v10.len(), p.v01.len());
    sample_cov(&p.v10, p.auc, &p.v10, p.auc) / m as f64
        + sample_cov(&p.v01, p.auc, &p.v01, p.auc) / n as f64
}

fn covariance_of(a: &Placements, b: &Placements) -> f64 {
    let (m, n) = (a.v10.len(), a.v01.len());
    sample_cov(&a.v10, a.auc, &b.v10, b.auc) / m as f64
        + sample_cov(&a.v01, a.auc, &b.v01, b.auc) / n as f64
}

/// AUC with its DeLong variance.
pub fn delong_variance(samples: &[ScoredSample]) -> Result<AucEstimate, MetricsError> {
    let p = placements(samples)?;
    require_two_per_class(p.v10.len(), p.v01.len())?;
    Ok(AucEstimate {
        auc: p.auc,
        variance: Some(variance_of(&p).max(0.0)),
        n_pos: p.v10.len(),
        n_neg: p.v01.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeLongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    /// Covariance of the two AUC estimates; 0 for unpaired tests.
    pub covariance: f64,
    pub z: f64,
    pub p_two_sided: f64,
    pub paired: bool,
}

fn finish(
    auc_a: f64,
    auc_b: f64,
    var_a: f64,
    var_b: f64,
    covariance: f64,
    paired: bool,
) -> Result<DeLongResult, MetricsError> {
    let var_diff = var_a + var_b - 2.0 * covariance;
    let diff = auc_a - auc_b;
    // Rounding can leave a tiny non-zero residue when the true variance is zero.
    let z = if var_diff <= 4.0 * f64::EPSILON * (var_a + var_b) {
        if diff.abs() <= 4.0 * f64::EPSILON {
            0.0
        } else {
            return Err(MetricsError::Degenerate { auc_a, auc_b });
        }
    } else {
        diff / math::sqrt(var_diff)
    };
    Ok(DeLongResult {
        auc_a,
        auc_b,
        var_a,
        var_b,
        covariance,
        z,
        p_two_sided: math::two_sided_p(z),
        paired,
    })
}

/// Paired test for two score sets over the same samples, aligned by index.
/// Labels must agree position by position.
pub fn delong_test_paired(a: &[ScoredSample], b: &[ScoredSample]) -> Result<DeLongResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if let Some(i) = a.iter().zip(b).position(|(x, y)| x.label != y.label) {
        return Err(MetricsError::LabelMismatch(i));
    }
    let pa = placements(a)?;
    let pb = placements(b)?;
    require_two_per_class(pa.v10.len(), pa.v01.len())?;
    finish(
        pa.auc,
        pb.auc,
        variance_of(&pa),
        variance_of(&pb),
        covariance_of(&pa, &pb),
        true,
    )
}

/// Unpaired test for two disjoint sample sets.
pub fn delong_test_unpaired(a: &[ScoredSample], b: &[ScoredSample]) -> Result<DeLongResult, MetricsError> {
    let ea = delong_variance(a)?;
    let eb = delong_variance(b)?;
    finish(
        ea.auc,
        eb.auc,
        ea.variance.unwrap_or(0.0),
        eb.variance.unwrap_or(0.0),
        0.0,
        false,
    )
}

fn index_by_session(samples: &[KeyedSample]) -> Result<BTreeMap<&str, &ScoredSample>, MetricsError> {
    let mut map = BTreeMap::new();
    for k in samples {
        if map.insert(k.session_id.as_str(), &k.sample).is_some() {
            return Err(MetricsError::DuplicateSession(k.session_id.clone()));
        }
    }
    Ok(map)
}

/// Paired test after aligning both score sets by session id. Both sets
/// must cover exactly the same sessions with the same labels.
pub fn paired_by_session(a: &[KeyedSample], b: &[KeyedSample]) -> Result<DeLongResult, MetricsError> {
    let ma = index_by_session(a)?;
    let mb = index_by_session(b)?;
    if let Some(id) = ma.keys().find(|k| !mb.contains_key(*k)) {
        return Err(MetricsError::SessionMismatch((*id).into()));
    }
    if let Some(id) = mb.keys().find(|k| !ma.contains_key(*k)) {
        return Err(MetricsError::SessionMismatch((*id).into()));
    }
    let xs: Vec<ScoredSample> = ma.values().map(|s| **s).collect();
    let ys: Vec<ScoredSample> = mb.values().map(|s| **s).collect();
    delong_test_paired(&xs, &ys)
}

/// Unpaired test that refuses overlapping session sets.
pub fn unpaired_by_session(a: &[KeyedSample], b: &[KeyedSample]) -> Result<DeLongResult, MetricsError> {
    let ma = index_by_session(a)?;
    let mb = index_by_session(b)?;
    if let Some(id) = ma.keys().find(|k| mb.contains_key(*k)) {
        return Err(MetricsError::OverlappingSessions((*id).into()));
    }
    let xs: Vec<ScoredSample> = a.iter().map(|k| k.sample).collect();
    let ys: Vec<ScoredSample> = b.iter().map(|k| k.sample).collect();
    delong_test_unpaired(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::super::naive;
    use super::*;
    use crate::rng::SplitMix64;
    use alloc::format;
    use proptest::prelude::*;

    fn s(score: f64, pos: bool) -> ScoredSample {
        ScoredSample::new(score, pos)
    }

    fn samples(pos: &[f64], neg: &[f64]) -> Vec<ScoredSample> {
        pos.iter().map(|x| s(*x, true)).chain(neg.iter().map(|x| s(*x, false))).collect()
    }

    fn random_instance(rng: &mut SplitMix64, n: usize, tie_levels: Option<u64>) -> Vec<ScoredSample> {
        let mut v: Vec<ScoredSample> = (0..n)
            .map(|i| {
                let pos = i % 3 == 0;
                let mut x = rng.normal() + if pos { 0.8 } else { 0.0 };
                if let Some(levels) = tie_levels {
                    x = (x * levels as f64).round() / levels as f64;
                }
                s(x, pos)
            })
            .collect();
        rng.shuffle(&mut v);
        v
    }

    #[test]
    fn midrank_examples() {
        assert_eq!(midranks(&[0.3, 0.5, 0.5, 0.9]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(midranks(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(midranks(&[7.0; 4]), vec![2.5; 4]);
        assert_eq!(midranks(&[0.9, 0.1, 0.5]), vec![3.0, 1.0, 2.0]);
        assert!(midranks(&[]).is_empty());
    }

    proptest! {
        #[test]
        fn midranks_sum_and_tie_structure(v in prop::collection::vec(0u8..10, 1..200)) {
            let xs: Vec<f64> = v.iter().map(|x| *x as f64).collect();
            let r = midranks(&xs);
            let n = xs.len() as f64;
            prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
            for i in 0..xs.len() {
                // rank = (#less) + (#equal + 1) / 2
                let less = xs.iter().filter(|y| **y < xs[i]).count() as f64;
                let eq = xs.iter().filter(|y| **y == xs[i]).count() as f64;
                prop_assert_eq!(r[i], less + (eq + 1.0) / 2.0);
            }
        }
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&samples(&[0.9, 0.8], &[0.4, 0.3])).unwrap().auc, 1.0);
        assert_eq!(auc(&samples(&[0.5], &[0.5])).unwrap().auc, 0.5);
        assert_eq!(auc(&samples(&[0.8, 0.3], &[0.9, 0.4])).unwrap().auc, 0.25);
        assert_eq!(
            auc(&samples(&[0.8, 0.3], &[])),
            Err(MetricsError::SingleClass { n_pos: 2, n_neg: 0 })
        );
        assert_eq!(
            auc(&[s(f64::NAN, true), s(0.1, false)]),
            Err(MetricsError::NonFiniteScore(0))
        );
    }

    #[test]
    fn auc_matches_pairwise_count() {
        let mut rng = SplitMix64::new(1);
        for trial in 0..200 {
            let v = random_instance(&mut rng, 5 + trial, Some(4));
            if let (Ok(fast), Ok(slow)) = (auc(&v), naive::auc_pairwise(&v)) {
                assert!((fast.auc - slow).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variance_edge_cases() {
        let perfect = delong_variance(&samples(&[0.9, 0.8, 0.7], &[0.3, 0.2])).unwrap();
        assert_eq!(perfect.auc, 1.0);
        assert_eq!(perfect.variance, Some(0.0));
        let ties = delong_variance(&samples(&[0.5, 0.5], &[0.5, 0.5, 0.5])).unwrap();
        assert_eq!(ties.auc, 0.5);
        assert_eq!(ties.variance, Some(0.0));
        assert_eq!(
            delong_variance(&samples(&[0.5], &[0.2, 0.1])),
            Err(MetricsError::TooFewSamples { n_pos: 1, n_neg: 2 })
        );
    }

    #[test]
    fn fast_variance_matches_naive() {
        let mut rng = SplitMix64::new(2);
        // 50 positives and 100 negatives
        let mut v: Vec<ScoredSample> = (0..150).map(|i| s(rng.normal() + if i < 50 { 1.0 } else { 0.0 }, i < 50)).collect();
        rng.shuffle(&mut v);
        let fast = delong_variance(&v).unwrap();
        let (auc_naive, var_naive) = naive::delong_variance(&v).unwrap();
        assert!((fast.auc - auc_naive).abs() < 1e-10);
        assert!((fast.variance.unwrap() - var_naive).abs() < 1e-10);
        let (p10, p01) = structural_components(&v).unwrap();
        let (n10, n01) = naive::structural_components(&v).unwrap();
        for (a, b) in p10.iter().zip(&n10).chain(p01.iter().zip(&n01)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_identical_and_monotone() {
        let mut rng = SplitMix64::new(3);
        let a = random_instance(&mut rng, 120, None);
        let r = delong_test_paired(&a, &a).unwrap();
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
        let b: Vec<ScoredSample> = a.iter().map(|x| s(math::exp(3.0 * x.score) - 7.0, x.is_positive())).collect();
        let r = delong_test_paired(&a, &b).unwrap();
        assert_eq!(r.auc_a, r.auc_b);
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn paired_matches_naive_oracle() {
        let mut rng = SplitMix64::new(4);
        let a = random_instance(&mut rng, 200, None);
        let b: Vec<ScoredSample> = a.iter().map(|x| s(x.score + rng.normal(), x.is_positive())).collect();
        let fast = delong_test_paired(&a, &b).unwrap();
        let (aa, ab, va, vb, cov, z) = naive::delong_paired(&a, &b).unwrap();
        assert!((fast.auc_a - aa).abs() < 1e-10);
        assert!((fast.auc_b - ab).abs() < 1e-10);
        assert!((fast.var_a - va).abs() < 1e-10);
        assert!((fast.var_b - vb).abs() < 1e-10);
        assert!((fast.covariance - cov).abs() < 1e-10);
        assert!((fast.z - z).abs() < 1e-10);
        assert!(fast.paired);
    }

    #[test]
    fn paired_input_checks() {
        let a = samples(&[0.9, 0.8], &[0.4, 0.3]);
        assert_eq!(delong_test_paired(&a, &a[..3]), Err(MetricsError::LengthMismatch(4, 3)));
        let mut b = a.clone();
        b[0].label = crate::corpus::DepressionLabel::DepMinus;
        assert_eq!(delong_test_paired(&a, &b), Err(MetricsError::LabelMismatch(0)));
    }

    #[test]
    fn degenerate_difference_is_flagged() {
        // Both perfectly separated: zero variance, equal AUCs.
        let a = samples(&[0.9, 0.8], &[0.4, 0.3]);
        let b = samples(&[0.7, 0.6], &[0.2, 0.1]);
        let r = delong_test_unpaired(&a, &b).unwrap();
        assert_eq!((r.z, r.p_two_sided), (0.0, 1.0));
        // Zero variance on both sides, different AUCs.
        let c = samples(&[0.5, 0.5], &[0.5, 0.5]);
        assert!(matches!(
            delong_test_unpaired(&a, &c),
            Err(MetricsError::Degenerate { .. })
        ));
    }

    /// z evaluated directly from the textbook definitions for a fixed
    /// 30 + 30 instance: placements by counting, variances by the n-1
    /// sample formula, z = (A - B) / sqrt(VA + VB).
    #[test]
    fn unpaired_matches_direct_formula() {
        let mut rng = SplitMix64::new(30);
        let mk = |rng: &mut SplitMix64, shift: f64| -> Vec<ScoredSample> {
            (0..30).map(|i| s(((rng.normal() + if i % 2 == 0 { shift } else { 0.0 }) * 100.0).round() / 100.0, i % 2 == 0)).collect()
        };
        let a = mk(&mut rng, 1.2);
        let b = mk(&mut rng, 0.4);
        let direct = |v: &[ScoredSample]| {
            let pos: Vec<f64> = v.iter().filter(|x| x.is_positive()).map(|x| x.score).collect();
            let neg: Vec<f64> = v.iter().filter(|x| !x.is_positive()).map(|x| x.score).collect();
            let count = |x: f64, y: f64| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 };
            let v10: Vec<f64> = pos.iter().map(|x| neg.iter().map(|y| count(*x, *y)).sum::<f64>() / neg.len() as f64).collect();
            let v01: Vec<f64> = neg.iter().map(|y| pos.iter().map(|x| count(*x, *y)).sum::<f64>() / pos.len() as f64).collect();
            let a = v10.iter().sum::<f64>() / v10.len() as f64;
            let s10 = v10.iter().map(|t| (t - a) * (t - a)).sum::<f64>() / (v10.len() - 1) as f64;
            let s01 = v01.iter().map(|t| (t - a) * (t - a)).sum::<f64>() / (v01.len() - 1) as f64;
            (a, s10 / v10.len() as f64 + s01 / v01.len() as f64)
        };
        let (aa, va) = direct(&a);
        let (ab, vb) = direct(&b);
        let z = (aa - ab) / (va + vb).sqrt();
        let r = delong_test_unpaired(&a, &b).unwrap();
        assert!((r.z - z).abs() < 1e-10, "{} vs {z}", r.z);
        assert!(!r.paired);
        assert_eq!(r.covariance, 0.0);
    }

    #[test]
    fn identical_multisets_give_z_zero() {
        let a = samples(&[0.9, 0.4, 0.7], &[0.3, 0.5, 0.1]);
        let mut b = a.clone();
        b.reverse();
        let r = delong_test_unpaired(&a, &b).unwrap();
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn swapping_arguments_negates_z() {
        let mut rng = SplitMix64::new(6);
        let a = random_instance(&mut rng, 90, None);
        let b = random_instance(&mut rng, 70, None);
        let ab = delong_test_unpaired(&a, &b).unwrap();
        let ba = delong_test_unpaired(&b, &a).unwrap();
        assert_eq!(ab.z, -ba.z);
        assert_eq!(ab.p_two_sided, ba.p_two_sided);
        assert!(ab.p_two_sided > 0.0 && ab.p_two_sided <= 1.0);
        assert_eq!(ab.z.signum(), (ab.auc_a - ab.auc_b).signum());
    }

    fn keyed(prefix: &str, v: &[ScoredSample]) -> Vec<KeyedSample> {
        v.iter()
            .enumerate()
            .map(|(i, x)| KeyedSample { session_id: format!("{prefix}{i}"), sample: *x })
            .collect()
    }

    #[test]
    fn keyed_variants_check_session_sets() {
        let a = samples(&[0.9, 0.4, 0.7], &[0.3, 0.5, 0.1]);
        let ka = keyed("s", &a);
        let kb = keyed("s", &a);
        assert!(matches!(unpaired_by_session(&ka, &kb), Err(MetricsError::OverlappingSessions(_))));
        assert!(unpaired_by_session(&ka, &keyed("t", &a)).is_ok());
        let mut shuffled = kb.clone();
        shuffled.reverse();
        let r = paired_by_session(&ka, &shuffled).unwrap();
        assert_eq!(r.z, 0.0);
        assert!(matches!(paired_by_session(&ka, &keyed("t", &a)), Err(MetricsError::SessionMismatch(_))));
        let mut dup = ka.clone();
        dup.push(ka[0].clone());
        assert!(matches!(paired_by_session(&dup, &kb), Err(MetricsError::DuplicateSession(_))));
    }

    proptest! {
        #[test]
        fn auc_is_rank_invariant(seed in 0u64..500, n in 4usize..200) {
            let mut rng = SplitMix64::new(seed);
            let v = random_instance(&mut rng, n, Some(3));
            prop_assume!(v.iter().any(|x| x.is_positive()) && v.iter().any(|x| !x.is_positive()));
            let w: Vec<ScoredSample> = v.iter().map(|x| s(2.0 * x.score * x.score * x.score + 5.0, x.is_positive())).collect();
            prop_assert_eq!(auc(&v).unwrap().auc, auc(&w).unwrap().auc);
        }

        #[test]
        fn fast_matches_naive_random(seed in 0u64..10_000, n in 4usize..300) {
            let mut rng = SplitMix64::new(seed);
            let v = random_instance(&mut rng, n, if seed % 2 == 0 { Some(5) } else { None });
            let fast = delong_variance(&v);
            let slow = naive::delong_variance(&v);
            match (fast, slow) {
                (Ok(f), Ok((a, var))) => {
                    prop_assert!((f.auc - a).abs() < 1e-10);
                    prop_assert!((f.variance.unwrap() - var).abs() < 1e-10);
                }
                (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
                (f, sl) => prop_assert!(false, "disagree: {:?} vs {:?}", f, sl),
            }
        }
    }
}
