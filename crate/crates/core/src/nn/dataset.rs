//! Training-data generation for the purchase-cost surrogate and a small CSV
//! codec for moving datasets through the CLI.
//!
//! Samples are (x, x̃, q, r): procured flexibility, maximum flexibility, and
//! the two saturation-curve shape parameters. Rows are drawn uniformly
//! within per-feature bounds and kept only when x ≤ (1−ε)·x̃ — the target
//! function has a logarithmic singularity as x → x̃, and a hard margin keeps
//! labels bounded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matrix::Matrix;

/// Default sample count for surrogate training data.
pub const DEFAULT_DATASET_SIZE: usize = 300_000;
/// Default feasibility margin ε in x ≤ (1−ε)·x̃.
pub const FEASIBILITY_MARGIN: f64 = 0.01;
/// Default per-feature sampling bounds for (x, x̃, q, r).
pub const DEFAULT_BOUNDS: [(f64, f64); 4] = [(0.0, 10.0), (0.0, 10.0), (1.0, 8.0), (0.5, 5.0)];

const CSV_HEADER: &str = "x,xtilde,q,r,cost";
/// Give up on a sample after this many rejected draws; only reachable when
/// the margin-feasible region is a vanishing sliver of the box.
const MAX_DRAWS_PER_ROW: usize = 10_000;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("feature {0} has invalid bounds (need finite lo < hi)")]
    BadBounds(usize),
    #[error("expected 4 features (x, xtilde, q, r), got {0}")]
    BadArity(usize),
    #[error("margin must lie in [0, 1), got {0}")]
    BadMargin(f64),
    #[error("x bounds [{x_lo}, ..] cannot satisfy x <= (1-{margin})*xtilde with xtilde <= {xt_hi}")]
    InfeasibleBounds { x_lo: f64, xt_hi: f64, margin: f64 },
    #[error("row {0}: rejected {MAX_DRAWS_PER_ROW} consecutive draws; margin region too thin")]
    RejectionStalled(usize),
    #[error("target returned a non-finite value at row {0}")]
    NonFiniteTarget(usize),
    #[error("dataset must contain at least one row")]
    Empty,
    #[error("csv line {line}: {reason}")]
    BadCsv { line: usize, reason: String },
}

/// Raw (unnormalized) training data: one input row per output label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// N×4 raw inputs (x, x̃, q, r).
    pub inputs: Matrix,
    /// Length-N raw targets.
    pub outputs: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// CSV with header `x,xtilde,q,r,cost`; floats print shortest-round-trip.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 40 + 32);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let row = self.inputs.row(i);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row[0], row[1], row[2], row[3], self.outputs[i]
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Dataset, DataError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end() == CSV_HEADER => {}
            Some((_, header)) => {
                return Err(DataError::BadCsv {
                    line: 1,
                    reason: format!("header '{header}' != '{CSV_HEADER}'"),
                })
            }
            None => return Err(DataError::Empty),
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut outputs = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(DataError::BadCsv {
                    line: idx + 1,
                    reason: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let mut vals = [0.0; 5];
            for (k, f) in fields.iter().enumerate() {
                vals[k] = f.trim().parse::<f64>().map_err(|e| DataError::BadCsv {
                    line: idx + 1,
                    reason: format!("field {}: {e}", k + 1),
                })?;
            }
            rows.push(vals[..4].to_vec());
            outputs.push(vals[4]);
        }
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        Ok(Dataset {
            inputs: Matrix::from_rows(&rows),
            outputs,
        })
    }

    /// Per-feature (min, max) over the inputs.
    pub fn input_ranges(&self) -> Vec<(f64, f64)> {
        let d = self.inputs.cols();
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
        for i in 0..self.len() {
            for (j, r) in ranges.iter_mut().enumerate() {
                let v = self.inputs.get(i, j);
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        ranges
    }

    pub fn output_range(&self) -> (f64, f64) {
        self.outputs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &v| {
                (acc.0.min(v), acc.1.max(v))
            })
    }
}

/// Draws `n` uniform samples of (x, x̃, q, r) within `bounds`, rejecting rows
/// until x ≤ (1−margin)·x̃, and labels each with `target`. Deterministic for
/// a given seed.
pub fn make_dataset(
    target: impl Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    n: usize,
    margin: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if bounds.len() != 4 {
        return Err(DataError::BadArity(bounds.len()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(DataError::BadBounds(i));
        }
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(DataError::BadMargin(margin));
    }
    if n == 0 {
        return Err(DataError::Empty);
    }
    let (x_lo, _) = bounds[0];
    let (_, xt_hi) = bounds[1];
    if x_lo > (1.0 - margin) * xt_hi {
        return Err(DataError::InfeasibleBounds {
            x_lo,
            xt_hi,
            margin,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.gen::<f64>();
    let mut rows = Matrix::zeros(n, 4);
    let mut outputs = Vec::with_capacity(n);
    for i in 0..n {
        let (x, xt) = {
            let mut attempts = 0;
            loop {
                let x = draw(&mut rng, bounds[0]);
                let xt = draw(&mut rng, bounds[1]);
                if x <= (1.0 - margin) * xt {
                    break (x, xt);
                }
                attempts += 1;
                if attempts >= MAX_DRAWS_PER_ROW {
                    return Err(DataError::RejectionStalled(i));
                }
            }
        };
        let q = draw(&mut rng, bounds[2]);
        let r = draw(&mut rng, bounds[3]);
        let row = [x, xt, q, r];
        let y = target(&row);
        if !y.is_finite() {
            return Err(DataError::NonFiniteTarget(i));
        }
        for (j, v) in row.iter().enumerate() {
            rows.set(i, j, *v);
        }
        outputs.push(y);
    }
    Ok(Dataset {
        inputs: rows,
        outputs,
    })
}
