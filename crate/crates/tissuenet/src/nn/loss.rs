//! Softmax cross-entropy with a numerically stable log-sum-exp and
//! the matching gradient with respect to the logits.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean cross-entropy over a batch of logits `[N, K]` with integer labels.
/// Returns `(loss, grad_logits)` where the gradient already carries the 1/N
/// factor, so it can be fed straight into `Model::backward`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    if logits.shape().len() != 2 {
        return Err(Error::Shape {
            op: "cross_entropy",
            detail: format!("expected rank-2 logits, got {:?}", logits.shape()),
        });
    }
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(Error::Shape {
            op: "cross_entropy",
            detail: format!("{} logit rows but {} labels", n, labels.len()),
        });
    }
    let mut grad = Tensor::zeros(&[n, k]);
    let mut loss = 0.0;
    for i in 0..n {
        let label = labels[i];
        if label >= k {
            return Err(Error::Domain(format!("label {} out of range for {} classes", label, k)));
        }
        let row = &logits.data()[i * k..(i + 1) * k];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        for &v in row {
            denom += (v - max).exp();
        }
        let log_denom = denom.ln();
        loss += log_denom - (row[label] - max);
        let grow = &mut grad.data_mut()[i * k..(i + 1) * k];
        for (j, &v) in row.iter().enumerate() {
            let p = (v - max).exp() / denom;
            grow[j] = (p - if j == label { 1.0 } else { 0.0 }) / n as f64;
        }
    }
    Ok((loss / n as f64, grad))
}

/// Index of the largest logit per row, ties broken toward the lower index.
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    let k = logits.shape()[1];
    logits
        .data()
        .chunks(k)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
