use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Root-mean-square error divided by the range of `truth`.
pub fn nrmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::dim("predictions", truth.len(), predictions.len()));
    }
    if truth.len() < 2 {
        return Err(Error::DegenerateDataset {
            got: truth.len(),
            need: 2,
        });
    }
    let (lo, hi) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::ZeroRange);
    }
    let mse = predictions.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64;
    Ok(mse.sqrt() / range)
}

/// 1-based ranks with ties sharing their average rank.
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
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Spearman rank correlation; `None` when either column is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Pairwise `|rho|` between columns. A constant column gets an all-zero row
/// and column, diagonal included.
pub fn spearman_matrix(columns: &[Vec<f64>], names: &[String]) -> Result<DMatrix<f64>> {
    let k = columns.len();
    let rows = columns.first().map_or(0, Vec::len);
    if rows < 3 {
        return Err(Error::DegenerateDataset { got: rows, need: 3 });
    }
    if let Some(c) = columns.iter().position(|c| c.len() != rows) {
        return Err(Error::dim("column length", rows, columns[c].len()));
    }
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();
    let constant: Vec<bool> = columns
        .iter()
        .map(|c| c.iter().all(|v| *v == c[0]))
        .collect();
    for (i, &flat) in constant.iter().enumerate() {
        if flat {
            let name = names.get(i).map_or_else(|| format!("#{i}"), Clone::clone);
            log::warn!("column {name} is constant; its rank correlations are undefined and set to 0");
        }
    }
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        if constant[i] {
            continue;
        }
        m[(i, i)] = 1.0;
        for j in 0..i {
            if constant[j] {
                continue;
            }
            let v = pearson(&ranks[i], &ranks[j]).unwrap_or(0.0).abs();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_average_ranks() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn spearman_of_reversed_order_is_minus_one() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [9.0, 7.0, 3.0, -1.0];
        assert!((spearman(&a, &b).unwrap() + 1.0).abs() < 1e-15);
        assert!(spearman(&a, &[1.0; 4]).is_none());
    }
}
