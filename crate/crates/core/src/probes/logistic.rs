//! L2-regularized logistic probes, binomial or multinomial, trained with
//! the L-BFGS minimizer.

use super::lbfgs::{minimize, LbfgsParams};
use super::ProbeError;

#[derive(Debug, Clone)]
pub struct LogisticParams {
    /// Inverse regularization strength; the penalty is ‖W‖²/(2C).
    pub c: f64,
    /// Gradient max-norm convergence threshold.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

/// A trained linear probe. Binary problems use a single weight row
/// (sigmoid); problems with three or more classes use one row per class
/// (softmax). The bias is never regularized.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub n_classes: usize,
    pub dim: usize,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn validate(
    inputs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
) -> Result<usize, ProbeError> {
    if inputs.is_empty() {
        return Err(ProbeError::EmptyInput);
    }
    if inputs.len() != labels.len() {
        return Err(ProbeError::LengthMismatch {
            inputs: inputs.len(),
            labels: labels.len(),
        });
    }
    if n_classes < 2 {
        return Err(ProbeError::TooFewClasses { n_classes });
    }
    let dim = inputs[0].len();
    for (index, row) in inputs.iter().enumerate() {
        if row.len() != dim {
            return Err(ProbeError::DimMismatch {
                index,
                expected: dim,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ProbeError::NonFiniteInput { index });
        }
    }
    for (index, &label) in labels.iter().enumerate() {
        if label >= n_classes {
            return Err(ProbeError::LabelOutOfRange {
                index,
                label,
                n_classes,
            });
        }
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(ProbeError::SingleClass);
    }
    Ok(dim)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn log1p_exp(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binomial negative log-likelihood plus ‖w‖²/(2C); parameters are laid
/// out as [w(dim), b].
fn binary_loss(
    params: &[f64],
    grad: &mut [f64],
    inputs: &[Vec<f64>],
    labels: &[usize],
    c: f64,
) -> f64 {
    let dim = params.len() - 1;
    let (w, b) = (&params[..dim], params[dim]);
    grad.fill(0.0);
    let mut loss = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        let z = w.iter().zip(x).map(|(&wi, &xi)| wi * xi).sum::<f64>() + b;
        loss += log1p_exp(z) - y as f64 * z;
        let r = sigmoid(z) - y as f64;
        for (g, &xi) in grad[..dim].iter_mut().zip(x) {
            *g += r * xi;
        }
        grad[dim] += r;
    }
    for (g, &wi) in grad[..dim].iter_mut().zip(w) {
        *g += wi / c;
        loss += wi * wi / (2.0 * c);
    }
    loss
}

/// Multinomial negative log-likelihood plus ‖W‖²/(2C); parameters are
/// laid out as [W row 0, …, W row K−1, b(K)].
fn multinomial_loss(
    params: &[f64],
    grad: &mut [f64],
    inputs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    c: f64,
) -> f64 {
    let dim = (params.len() - n_classes) / n_classes;
    grad.fill(0.0);
    let mut loss = 0.0;
    let mut z = vec![0.0; n_classes];
    for (x, &y) in inputs.iter().zip(labels) {
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &params[k * dim..(k + 1) * dim];
            *zk = w.iter().zip(x).map(|(&wi, &xi)| wi * xi).sum::<f64>()
                + params[n_classes * dim + k];
        }
        let z_max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = z_max + z.iter().map(|&v| (v - z_max).exp()).sum::<f64>().ln();
        loss += lse - z[y];
        for k in 0..n_classes {
            let p = (z[k] - lse).exp();
            let r = p - (k == y) as usize as f64;
            for (g, &xi) in grad[k * dim..(k + 1) * dim].iter_mut().zip(x) {
                *g += r * xi;
            }
            grad[n_classes * dim + k] += r;
        }
    }
    for k in 0..n_classes {
        for i in 0..dim {
            let wi = params[k * dim + i];
            grad[k * dim + i] += wi / c;
            loss += wi * wi / (2.0 * c);
        }
    }
    loss
}

/// Evaluate the probe objective (regularized negative log-likelihood)
/// and its gradient at an arbitrary parameter point.
///
/// Binary problems lay parameters out as `[w(dim), b]`; problems with
/// three or more classes as `[W row 0, …, W row K−1, b(K)]`. This is
/// the exact function the trainer minimizes, exposed for gradient
/// verification against finite differences.
pub fn logistic_loss_grad(
    params: &[f64],
    inputs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    c: f64,
) -> Result<(f64, Vec<f64>), ProbeError> {
    let dim = validate(inputs, labels, n_classes)?;
    let n_rows = if n_classes == 2 { 1 } else { n_classes };
    let expected = n_rows * dim + n_rows;
    if params.len() != expected {
        return Err(ProbeError::BadParameterLength {
            expected,
            found: params.len(),
        });
    }
    let mut grad = vec![0.0; expected];
    let loss = if n_classes == 2 {
        binary_loss(params, &mut grad, inputs, labels, c)
    } else {
        multinomial_loss(params, &mut grad, inputs, labels, n_classes, c)
    };
    Ok((loss, grad))
}

/// Train a logistic probe from zero initialization.
pub fn train_logistic_probe(
    inputs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: &LogisticParams,
) -> Result<ProbeModel, ProbeError> {
    let dim = validate(inputs, labels, n_classes)?;
    let n_rows = if n_classes == 2 { 1 } else { n_classes };
    let n_params = n_rows * dim + n_rows;
    let lbfgs = LbfgsParams {
        tol: params.tol,
        max_iter: params.max_iter,
        ..LbfgsParams::default()
    };
    let c = params.c;
    let outcome = if n_classes == 2 {
        minimize(
            |p, g| binary_loss(p, g, inputs, labels, c),
            vec![0.0; n_params],
            &lbfgs,
        )?
    } else {
        minimize(
            |p, g| multinomial_loss(p, g, inputs, labels, n_classes, c),
            vec![0.0; n_params],
            &lbfgs,
        )?
    };
    let weights = (0..n_rows)
        .map(|k| outcome.x[k * dim..(k + 1) * dim].to_vec())
        .collect();
    let bias = outcome.x[n_rows * dim..].to_vec();
    Ok(ProbeModel {
        weights,
        bias,
        n_classes,
        dim,
        c,
        converged: outcome.converged,
        iterations: outcome.iterations,
    })
}

/// Per-class probabilities; rows sum to one.
pub fn predict_scores(
    model: &ProbeModel,
    inputs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, ProbeError> {
    for (index, row) in inputs.iter().enumerate() {
        if row.len() != model.dim {
            return Err(ProbeError::DimMismatch {
                index,
                expected: model.dim,
                found: row.len(),
            });
        }
    }
    let scores = inputs
        .iter()
        .map(|x| {
            if model.n_classes == 2 {
                let z = model.weights[0]
                    .iter()
                    .zip(x)
                    .map(|(&wi, &xi)| wi * xi)
                    .sum::<f64>()
                    + model.bias[0];
                let p = sigmoid(z);
                vec![1.0 - p, p]
            } else {
                let mut z: Vec<f64> = model
                    .weights
                    .iter()
                    .zip(&model.bias)
                    .map(|(w, &b)| w.iter().zip(x).map(|(&wi, &xi)| wi * xi).sum::<f64>() + b)
                    .collect();
                let z_max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let lse = z_max + z.iter().map(|&v| (v - z_max).exp()).sum::<f64>().ln();
                for v in z.iter_mut() {
                    *v = (*v - lse).exp();
                }
                z
            }
        })
        .collect();
    Ok(scores)
}

/// Argmax class per sample, lowest class index on ties.
pub fn predict_classes(model: &ProbeModel, inputs: &[Vec<f64>]) -> Result<Vec<usize>, ProbeError> {
    let scores = predict_scores(model, inputs)?;
    Ok(scores
        .iter()
        .map(|row| {
            let mut best = 0;
            for (k, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}
