//! Dense ReLU network: representation, forward pass, normalization folding,
//! and versioned JSON serialization.
//!
//! Layer conventions: `layer_sizes = [n0, .., nK]` gives K weight layers;
//! `weights[l]` has `n_l` rows and `n_{l+1}` columns, so a forward step is
//! `pre[j] = Σ_i W[i][j]·h[i] + b[j]`. Hidden layers apply ReLU; the final
//! layer is linear. Inputs are min-max normalized on the way in and the
//! scalar output is denormalized on the way out.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

/// Whether (and from which layer) weights are constrained non-negative.
/// `Convexified { from_layer: k }` means every weight layer *after* the k-th
/// (1-based: layers k+1, k+2, …) is element-wise ≥ 0. With k = 1 only the
/// first layer may carry negative weights, which is what makes the network's
/// epigraph LP-representable under output minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Unconstrained,
    Convexified { from_layer: usize },
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("layer {layer}: weight shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        layer: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("layer {layer}: bias length {got}, expected {want}")]
    BiasMismatch { layer: usize, got: usize, want: usize },
    #[error("need at least one weight layer and layer_sizes to match")]
    BadArchitecture,
    #[error("input has {got} features, network expects {want}")]
    InputArity { got: usize, want: usize },
    #[error("non-finite input at feature {0}")]
    NonFiniteInput(usize),
    #[error("non-finite parameter in layer {0}")]
    NonFiniteParameter(usize),
    #[error("input feature {0} has min ≥ max in normalization")]
    BadInputNorm(usize),
    #[error("output normalization has max < min")]
    BadOutputNorm,
    #[error("layer {layer} must be non-negative but has entry {value}")]
    NegativeWeight { layer: usize, value: f64 },
    #[error("convexification boundary {0} outside 1..=weight layer count")]
    BadBoundary(usize),
    #[error("forward pass needs a single output, network has {0}")]
    MultiOutput(usize),
    #[error("unsupported network format '{0}'")]
    BadFormat(String),
    #[error("malformed network JSON: {0}")]
    BadJson(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub kind: NetKind,
    /// Per-feature (min, max) for input normalization.
    pub input_norm: Vec<(f64, f64)>,
    /// (min, max) for output denormalization.
    pub output_norm: (f64, f64),
}

/// On-disk envelope; the version tag is checked on load.
#[derive(Serialize, Deserialize)]
struct NetFile {
    format: String,
    #[serde(flatten)]
    net: ReluNetwork,
}

const FORMAT: &str = "relu-net-v1";

impl ReluNetwork {
    /// Randomly initialized network with identity normalization. Weights are
    /// uniform in [−s, s] with s = √(6/(fan_in+fan_out)); layers constrained
    /// non-negative initialize in [0, s] instead, so the projection in
    /// training does not start by zeroing half the entries.
    pub fn random(layer_sizes: &[usize], kind: NetKind, seed: u64) -> ReluNetwork {
        assert!(
            layer_sizes.len() >= 2 && layer_sizes.iter().all(|&n| n > 0),
            "need at least input and output layers of positive width"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = layer_sizes.len() - 1;
        let constrained_from = match kind {
            NetKind::Convexified { from_layer } => from_layer,
            NetKind::Unconstrained => usize::MAX,
        };
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut w = Matrix::zeros(fan_in, fan_out);
            let nonneg = l >= constrained_from;
            for v in w.as_mut_slice() {
                *v = if nonneg {
                    s * rng.gen::<f64>()
                } else {
                    s * (2.0 * rng.gen::<f64>() - 1.0)
                };
            }
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        ReluNetwork {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            kind,
            input_norm: vec![(0.0, 1.0); layer_sizes[0]],
            output_norm: (0.0, 1.0),
        }
    }

    /// Number of weight layers (hidden layers + output layer).
    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// The 1-based boundary k for Convexified(k), or None.
    pub fn convexified_from(&self) -> Option<usize> {
        match self.kind {
            NetKind::Convexified { from_layer } => Some(from_layer),
            NetKind::Unconstrained => None,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.layer_sizes.len() < 2
            || self.layer_sizes.len() != self.weights.len() + 1
            || self.weights.len() != self.biases.len()
            || self.layer_sizes.iter().any(|&n| n == 0)
        {
            return Err(NetError::BadArchitecture);
        }
        for l in 0..self.weights.len() {
            let w = &self.weights[l];
            let (want_rows, want_cols) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if !w.is_consistent() || w.rows() != want_rows || w.cols() != want_cols {
                return Err(NetError::ShapeMismatch {
                    layer: l + 1,
                    rows: w.rows(),
                    cols: w.cols(),
                    want_rows,
                    want_cols,
                });
            }
            if self.biases[l].len() != want_cols {
                return Err(NetError::BiasMismatch {
                    layer: l + 1,
                    got: self.biases[l].len(),
                    want: want_cols,
                });
            }
            if w.iter().any(|v| !v.is_finite())
                || self.biases[l].iter().any(|v| !v.is_finite())
            {
                return Err(NetError::NonFiniteParameter(l + 1));
            }
        }
        if let NetKind::Convexified { from_layer } = self.kind {
            if from_layer == 0 || from_layer > self.weights.len() {
                return Err(NetError::BadBoundary(from_layer));
            }
            for l in from_layer..self.weights.len() {
                if let Some(v) = self.weights[l].iter().find(|&v| v < 0.0) {
                    return Err(NetError::NegativeWeight { layer: l + 1, value: v });
                }
            }
        }
        if self.input_norm.len() != self.layer_sizes[0] {
            return Err(NetError::InputArity {
                got: self.input_norm.len(),
                want: self.layer_sizes[0],
            });
        }
        for (i, &(lo, hi)) in self.input_norm.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(NetError::BadInputNorm(i));
            }
        }
        let (olo, ohi) = self.output_norm;
        if !(ohi >= olo) || !olo.is_finite() || !ohi.is_finite() {
            return Err(NetError::BadOutputNorm);
        }
        Ok(())
    }

    pub fn normalize_input(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.input_norm)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Output normalization; a degenerate (min = max) range maps by shift
    /// only, which keeps the round trip exact for constant targets.
    pub fn normalize_output(&self, y: f64) -> f64 {
        let (lo, hi) = self.output_norm;
        (y - lo) / if hi > lo { hi - lo } else { 1.0 }
    }

    pub fn denormalize_output(&self, y: f64) -> f64 {
        let (lo, hi) = self.output_norm;
        y * if hi > lo { hi - lo } else { 1.0 } + lo
    }

    /// Pure layer propagation in normalized space: returns the hidden
    /// activations h_1..h_{K−1} and the linear outputs of the final layer.
    pub(crate) fn propagate(&self, x_norm: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let k = self.weights.len();
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
        let mut h: Vec<f64> = x_norm.to_vec();
        for l in 0..k {
            let w = &self.weights[l];
            let mut next = self.biases[l].clone();
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
                hidden.push(next.clone());
                h = next;
            } else {
                return (hidden, next);
            }
        }
        unreachable!("loop returns on the final layer")
    }

    /// Forward pass on a raw input: normalize, propagate, denormalize.
    /// Returns the raw scalar output and the hidden activations in
    /// normalized units.
    pub fn forward(&self, z: &[f64]) -> Result<(f64, Vec<Vec<f64>>), NetError> {
        if z.len() != self.input_width() {
            return Err(NetError::InputArity {
                got: z.len(),
                want: self.input_width(),
            });
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(NetError::NonFiniteInput(i));
        }
        if self.output_width() != 1 {
            return Err(NetError::MultiOutput(self.output_width()));
        }
        let x = self.normalize_input(z);
        let (hidden, out) = self.propagate(&x);
        Ok((self.denormalize_output(out[0]), hidden))
    }

    /// Equivalent raw-space network: the input affine map is absorbed into
    /// the first layer and the output scaling into the last, after which the
    /// normalization parameters are the identity. Exact in floating point
    /// whenever the normalization already is the identity; otherwise equal to
    /// the original composition up to reassociation of the same products.
    /// The output scale is ≥ 0, so a Convexified network stays Convexified
    /// (input folding only touches layer 1, which is unconstrained for k≥1).
    pub fn fold_normalization(&self) -> ReluNetwork {
        let mut net = self.clone();
        let identity_in = self.input_norm.iter().all(|&(lo, hi)| lo == 0.0 && hi == 1.0);
        if !identity_in {
            let w1 = &mut net.weights[0];
            let b1 = &mut net.biases[0];
            for i in 0..w1.rows() {
                let (lo, hi) = self.input_norm[i];
                let scale = hi - lo;
                for j in 0..w1.cols() {
                    let w = w1.get(i, j);
                    if w != 0.0 {
                        w1.set(i, j, w / scale);
                        b1[j] -= w * lo / scale;
                    }
                }
            }
        }
        let (olo, ohi) = self.output_norm;
        if !(olo == 0.0 && ohi == 1.0) {
            let scale = if ohi > olo { ohi - olo } else { 1.0 };
            let last = net.weights.len() - 1;
            for v in net.weights[last].as_mut_slice() {
                *v *= scale;
            }
            for v in net.biases[last].iter_mut() {
                *v = *v * scale + olo;
            }
        }
        net.input_norm = vec![(0.0, 1.0); self.input_width()];
        net.output_norm = (0.0, 1.0);
        net
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetFile {
            format: FORMAT.to_string(),
            net: self.clone(),
        })
        .expect("network serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ReluNetwork, NetError> {
        let file: NetFile =
            serde_json::from_str(text).map_err(|e| NetError::BadJson(e.to_string()))?;
        if file.format != FORMAT {
            return Err(NetError::BadFormat(file.format));
        }
        file.net.validate()?;
        Ok(file.net)
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ReluNetwork, NetError> {
        let text = std::fs::read_to_string(path)?;
        ReluNetwork::from_json(&text)
    }
}
