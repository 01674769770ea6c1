//! Recovery metrics for comparing estimated factors with ground truth.

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMatch {
    /// `permutation[j]` is the estimated column matched to true column `j`.
    pub permutation: Vec<usize>,
    /// ℓ2 distance per true column.
    pub errors: Vec<f64>,
    pub mean_error: f64,
}

/// Matches columns of `estimate` to columns of `truth` minimizing the mean ℓ2
/// distance, by exhaustive search (at most 8 columns).
pub fn match_columns(estimate: &Array2<f64>, truth: &Array2<f64>) -> Result<ColumnMatch> {
    if estimate.dim() != truth.dim() {
        return Err(Error::Dimension(format!(
            "estimate is {:?}, truth is {:?}",
            estimate.dim(),
            truth.dim()
        )));
    }
    let k = truth.ncols();
    if k > 8 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive matching supports at most 8 columns, got {k}"
        )));
    }
    let mut dist = vec![vec![0.0; k]; k];
    for (j, row) in dist.iter_mut().enumerate() {
        for (i, d) in row.iter_mut().enumerate() {
            *d = truth
                .column(j)
                .iter()
                .zip(estimate.column(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &dist, &mut best);
    let errors: Vec<f64> = best.1.iter().enumerate().map(|(j, &i)| dist[j][i]).collect();
    let mean_error = if k == 0 { 0.0 } else { errors.iter().sum::<f64>() / k as f64 };
    Ok(ColumnMatch {
        permutation: best.1,
        errors,
        mean_error,
    })
}

fn permute(perm: &mut Vec<usize>, at: usize, dist: &[Vec<f64>], best: &mut (f64, Vec<usize>)) {
    if at == perm.len() {
        let cost: f64 = perm.iter().enumerate().map(|(j, &i)| dist[j][i]).sum();
        if cost < best.0 {
            *best = (cost, perm.clone());
        }
        return;
    }
    for s in at..perm.len() {
        perm.swap(at, s);
        permute(perm, at + 1, dist, best);
        perm.swap(at, s);
    }
}
