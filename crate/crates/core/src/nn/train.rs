//! Minibatch Adam training on mean-squared error, with projection onto the
//! non-negativity constraint after every step for convexified networks.
//!
//! All optimization happens in normalized space: `fit` sets the network's
//! min-max parameters from the dataset, maps the data through them once, and
//! trains on the result. Loss curves and the reported RMSEs are therefore in
//! normalized units.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::nn::dataset::Dataset;
use crate::nn::network::{NetError, NetKind, ReluNetwork};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of the data used for training; the rest is validation.
    pub split: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            epochs: 1000,
            batch_size: 1000,
            split: 0.8,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training MSE per epoch (normalized units).
    pub train_loss: Vec<f64>,
    /// Validation MSE per epoch (normalized units; NaN when the split
    /// leaves no validation rows).
    pub val_loss: Vec<f64>,
    pub final_train_rmse: f64,
    pub final_val_rmse: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("bad training config: {0}")]
    BadConfig(&'static str),
    #[error("feature {0} is constant across the dataset; min-max normalization undefined")]
    DegenerateFeature(usize),
    #[error("network expects {want} inputs, dataset has {got}")]
    ArityMismatch { want: usize, got: usize },
    #[error("training diverged (non-finite loss) at epoch {0}")]
    Diverged(usize),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Backpropagated gradients, shaped like the network parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &ReluNetwork) -> Gradients {
        Gradients {
            weights: net
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

/// Mean-squared error and exact gradients over a batch, all in normalized
/// space (inputs are rows of `batch`, one target per row). The network's
/// normalization parameters are not applied here.
pub fn loss_and_grad(
    net: &ReluNetwork,
    batch: &Matrix,
    targets: &[f64],
) -> Result<(f64, Gradients), NetError> {
    if batch.cols() != net.input_width() {
        return Err(NetError::InputArity {
            got: batch.cols(),
            want: net.input_width(),
        });
    }
    if net.output_width() != 1 {
        return Err(NetError::MultiOutput(net.output_width()));
    }
    assert_eq!(batch.rows(), targets.len(), "batch/target length mismatch");
    let n = batch.rows();
    if n == 0 {
        return Ok((0.0, Gradients::zeros_like(net)));
    }

    let k = net.weights.len();
    let mut grads = Gradients::zeros_like(net);
    let mut mse = 0.0;
    // activations[l] = h_l (activations[0] = input row)
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for (s, &t) in targets.iter().enumerate().take(n) {
        activations.clear();
        activations.push(batch.row(s).to_vec());
        for l in 0..k {
            let w = &net.weights[l];
            let mut next = net.biases[l].clone();
            let h = &activations[l];
            for i in 0..w.rows() {
                let hi = h[i];
                if hi != 0.0 {
                    let row = w.row(i);
                    for (j, nx) in next.iter_mut().enumerate() {
                        *nx += row[j] * hi;
                    }
                }
            }
            if l + 1 < k {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            activations.push(next);
        }
        let out = activations[k][0];
        let err = out - t;
        mse += err * err;

        // Backward. dL/d(out) for the mean over the batch.
        let mut delta = vec![2.0 * err / n as f64];
        for l in (0..k).rev() {
            let w = &net.weights[l];
            let h = &activations[l];
            let gw = &mut grads.weights[l];
            for i in 0..w.rows() {
                let hi = h[i];
                if hi != 0.0 {
                    for (j, &d) in delta.iter().enumerate() {
                        if d != 0.0 {
                            let cur = gw.get(i, j);
                            gw.set(i, j, cur + hi * d);
                        }
                    }
                }
            }
            for (j, &d) in delta.iter().enumerate() {
                grads.biases[l][j] += d;
            }
            if l > 0 {
                // δ_{l} = (W_l δ_{l+1}) ⊙ 1[h_l > 0]; h_l > 0 ⇔ pre > 0.
                let mut prev = vec![0.0; w.rows()];
                for (i, p) in prev.iter_mut().enumerate() {
                    if h[i] > 0.0 {
                        let row = w.row(i);
                        let mut acc = 0.0;
                        for (j, &d) in delta.iter().enumerate() {
                            acc += row[j] * d;
                        }
                        *p = acc;
                    }
                }
                delta = prev;
            }
        }
    }
    Ok((mse / n as f64, grads))
}

/// Plain forward MSE over normalized rows; no gradients.
fn mse_over(net: &ReluNetwork, rows: &[usize], inputs: &Matrix, targets: &[f64]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    let mut acc = 0.0;
    for &i in rows {
        let (_, out) = net.propagate(inputs.row(i));
        let err = out[0] - targets[i];
        acc += err * err;
    }
    acc / rows.len() as f64
}

/// Trains `net` in place. Sets normalization from the dataset, splits it
/// (seeded shuffle), and runs minibatch Adam for the configured epochs,
/// clamping constrained layers to ≥ 0 after every step.
pub fn fit(
    net: &mut ReluNetwork,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    let start = Instant::now();
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(TrainError::BadConfig("split must lie in (0, 1)"));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(TrainError::BadConfig("learning_rate must be positive"));
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::BadConfig("batch_size must be at least 1"));
    }
    if data.is_empty() {
        return Err(TrainError::BadConfig("dataset is empty"));
    }
    if data.inputs.cols() != net.input_width() {
        return Err(TrainError::ArityMismatch {
            want: net.input_width(),
            got: data.inputs.cols(),
        });
    }
    net.validate()?;

    // Normalization from the full dataset.
    let ranges = data.input_ranges();
    for (j, &(lo, hi)) in ranges.iter().enumerate() {
        if !(lo < hi) {
            return Err(TrainError::DegenerateFeature(j));
        }
    }
    net.input_norm = ranges;
    net.output_norm = data.output_range();

    let n = data.len();
    let mut norm_inputs = Matrix::zeros(n, net.input_width());
    let mut norm_targets = vec![0.0; n];
    for i in 0..n {
        let row = net.normalize_input(data.inputs.row(i));
        for (j, v) in row.iter().enumerate() {
            norm_inputs.set(i, j, *v);
        }
        norm_targets[i] = net.normalize_output(data.outputs[i]);
    }

    // Seeded shuffle-split.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train_n = ((n as f64) * cfg.split).round().clamp(1.0, n as f64) as usize;
    let (train_idx, val_idx) = order.split_at(train_n);
    let mut train_order: Vec<usize> = train_idx.to_vec();
    let val_order: Vec<usize> = val_idx.to_vec();

    // Adam state.
    let mut m = Gradients::zeros_like(net);
    let mut v = Gradients::zeros_like(net);
    let mut step: u64 = 0;
    let clamp_from = match net.kind {
        NetKind::Convexified { from_layer } => from_layer,
        NetKind::Unconstrained => usize::MAX,
    };

    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut val_loss = Vec::with_capacity(cfg.epochs);
    let mut batch = Matrix::zeros(cfg.batch_size.min(train_order.len()), net.input_width());
    let mut batch_targets = vec![0.0; cfg.batch_size.min(train_order.len())];

    for epoch in 0..cfg.epochs {
        train_order.shuffle(&mut rng);
        let mut epoch_sse = 0.0;
        let mut seen = 0usize;
        for chunk in train_order.chunks(cfg.batch_size) {
            if chunk.len() != batch.rows() {
                batch = Matrix::zeros(chunk.len(), net.input_width());
                batch_targets.resize(chunk.len(), 0.0);
            }
            for (bi, &i) in chunk.iter().enumerate() {
                let src = norm_inputs.row(i);
                for (j, &x) in src.iter().enumerate() {
                    batch.set(bi, j, x);
                }
                batch_targets[bi] = norm_targets[i];
            }
            let (loss, grads) = loss_and_grad(net, &batch, &batch_targets)?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged(epoch));
            }
            epoch_sse += loss * chunk.len() as f64;
            seen += chunk.len();

            // Adam update with bias correction.
            step += 1;
            let b1t = 1.0 - cfg.adam_beta1.powi(step as i32);
            let b2t = 1.0 - cfg.adam_beta2.powi(step as i32);
            for l in 0..net.weights.len() {
                adam_update(
                    net.weights[l].as_mut_slice(),
                    grads.weights[l].as_slice(),
                    m.weights[l].as_mut_slice(),
                    v.weights[l].as_mut_slice(),
                    cfg,
                    b1t,
                    b2t,
                );
                adam_update(
                    net.biases[l].as_mut_slice(),
                    &grads.biases[l],
                    &mut m.biases[l],
                    &mut v.biases[l],
                    cfg,
                    b1t,
                    b2t,
                );
                if l >= clamp_from {
                    for w in net.weights[l].as_mut_slice() {
                        if *w < 0.0 {
                            *w = 0.0;
                        }
                    }
                }
            }
        }
        train_loss.push(epoch_sse / seen.max(1) as f64);
        val_loss.push(mse_over(net, &val_order, &norm_inputs, &norm_targets));
    }

    let final_train = mse_over(net, &train_order, &norm_inputs, &norm_targets);
    let final_val = mse_over(net, &val_order, &norm_inputs, &norm_targets);
    Ok(TrainReport {
        train_loss,
        val_loss,
        final_train_rmse: final_train.sqrt(),
        final_val_rmse: final_val.sqrt(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    b1t: f64,
    b2t: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
        let mhat = m[i] / b1t;
        let vhat = v[i] / b2t;
        params[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
    }
}
