//! Direct O(m·n) reference formulas.
//!
//! These evaluate every positive/negative pair explicitly and share no code
//! with the midrank path, so they serve as the oracle the fast
//! implementation is checked against. Use them only for small inputs.

use alloc::vec::Vec;

use super::{psi, split_by_class, MetricsError, ScoredSample};

/// Mann–Whitney AUC by counting all pairs.
pub fn auc_pairwise(samples: &[ScoredSample]) -> Result<f64, MetricsError> {
    let (pos, neg) = split_by_class(samples)?;
    let mut total = 0.0;
    for x in &pos {
        for y in &neg {
            total += psi(*x, *y);
        }
    }
    Ok(total / (pos.len() * neg.len()) as f64)
}

/// Structural components `(V10, V01)` by explicit pair sums.
pub fn structural_components(samples: &[ScoredSample]) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let (pos, neg) = split_by_class(samples)?;
    let v10 = pos
        .iter()
        .map(|x| neg.iter().map(|y| psi(*x, *y)).sum::<f64>() / neg.len() as f64)
        .collect();
    let v01 = neg
        .iter()
        .map(|y| pos.iter().map(|x| psi(*x, *y)).sum::<f64>() / pos.len() as f64)
        .collect();
    Ok((v10, v01))
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let ma = a.iter().sum::<f64>() / a.len() as f64;
    let mb = b.iter().sum::<f64>() / b.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

/// `(auc, variance)` with `variance = S10/m + S01/n`.
pub fn delong_variance(samples: &[ScoredSample]) -> Result<(f64, f64), MetricsError> {
    let (v10, v01) = structural_components(samples)?;
    let (m, n) = (v10.len(), v01.len());
    if m < 2 || n < 2 {
        return Err(MetricsError::TooFewSamples { n_pos: m, n_neg: n });
    }
    let auc = v10.iter().sum::<f64>() / m as f64;
    let var = covariance(&v10, &v10) / m as f64 + covariance(&v01, &v01) / n as f64;
    Ok((auc, var))
}

/// `(auc_a, auc_b, var_a, var_b, cov, z)` for two score sets on the same samples.
pub fn delong_paired(
    a: &[ScoredSample],
    b: &[ScoredSample],
) -> Result<(f64, f64, f64, f64, f64, f64), MetricsError> {
    let (a10, a01) = structural_components(a)?;
    let (b10, b01) = structural_components(b)?;
    let (m, n) = (a10.len(), a01.len());
    if m < 2 || n < 2 {
        return Err(MetricsError::TooFewSamples { n_pos: m, n_neg: n });
    }
    let auc_a = a10.iter().sum::<f64>() / m as f64;
    let auc_b = b10.iter().sum::<f64>() / m as f64;
    let var_a = covariance(&a10, &a10) / m as f64 + covariance(&a01, &a01) / n as f64;
    let var_b = covariance(&b10, &b10) / m as f64 + covariance(&b01, &b01) / n as f64;
    let cov = covariance(&a10, &b10) / m as f64 + covariance(&a01, &b01) / n as f64;
    let z = (auc_a - auc_b) / libm::sqrt(var_a + var_b - 2.0 * cov);
    Ok((auc_a, auc_b, var_a, var_b, cov, z))
}
