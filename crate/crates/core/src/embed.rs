//! Builders that splice a trained [`ReluNetwork`] — or a tabulated
//! piecewise-linear surrogate — into an [`OptModel`] as linear rows.
//!
//! Five network encodings:
//!
//! * [`embed_cvxd`] — pure-LP epigraph rows `h ≥ W·h_prev + b`, `h ≥ 0` per
//!   hidden neuron. Exact under output minimization when every weight layer
//!   past the first is non-negative (`Convexified {{ from_layer: 1 }}`).
//! * [`embed_pcar`] / [`embed_pctar`] — the same rows for an *arbitrary*
//!   network, made usable by per-neuron penalty terms that the caller adds
//!   to the objective; PCTAR additionally caps each neuron from above with a
//!   line through `(LB, 0)` and `(UB, UB)`.
//! * [`embed_bigm`] — exact mixed-integer encoding, one binary per neuron
//!   whose pre-activation interval straddles zero. Interval constants come
//!   from [`propagate_bounds`].
//! * [`embed_hybrid`] — big-M binaries for hidden layers `1..k−1`, epigraph
//!   rows from layer `k` on; needs weights non-negative from layer `k` on.
//!
//! [`build_pwl`] instead interpolates a tabulated bivariate cost over a
//! rectangular grid with convex-combination weights and one cell-selection
//! binary per grid cell.
//!
//! Every network builder folds input/output normalization into the weights
//! first (see [`ReluNetwork::fold_normalization`]), so the emitted rows live
//! entirely in raw input/output units. The builders never touch the
//! objective: exact encodings return `()`, penalty encodings return the
//! `(variable, coefficient)` list for the caller to add with the sign its
//! objective sense needs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::model::{ModelError, OptModel, Sense, VarId, VarKind};
use crate::nn::{NetError, NetKind, ReluNetwork};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("encoding needs weights non-negative from layer {need}; network is {found}")]
    WrongKind { need: usize, found: String },
    #[error("network expects {want} inputs, {got} input variables supplied")]
    InputArity { got: usize, want: usize },
    #[error("network has {0} outputs; embeddings need exactly one")]
    MultiOutput(usize),
    #[error("input box has {got} entries, network expects {want}")]
    BoxArity { got: usize, want: usize },
    #[error("input box entry {index} is [{lo}, {hi}]; need finite lo ≤ hi")]
    BadBox { index: usize, lo: f64, hi: f64 },
    #[error("penalties: expected {want} vectors (one per hidden layer), got {got}")]
    PenaltyLayers { got: usize, want: usize },
    #[error("penalties: layer {layer} has {got} entries, expected {want}")]
    PenaltyShape { layer: usize, got: usize, want: usize },
    #[error("penalties: layer {layer} entry {value} must be finite and ≥ 0")]
    BadPenalty { layer: usize, value: f64 },
    #[error("triangular cap needs finite LB < 0 < UB, got [{lb}, {ub}]")]
    BadTriangle { lb: f64, ub: f64 },
    #[error("boundary layer {k} outside 1..={max}")]
    BadBoundary { k: usize, max: usize },
    #[error("piecewise grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn kind_name(kind: NetKind) -> String {
    match kind {
        NetKind::Unconstrained => "unconstrained".to_string(),
        NetKind::Convexified { from_layer } => {
            format!("convexified from layer {from_layer}")
        }
    }
}

/// Validates the network against the supplied input variables and returns it
/// folded to raw space.
fn prepare(net: &ReluNetwork, inputs: &[VarId]) -> Result<ReluNetwork, EmbedError> {
    net.validate()?;
    if net.output_width() != 1 {
        return Err(EmbedError::MultiOutput(net.output_width()));
    }
    if inputs.len() != net.input_width() {
        return Err(EmbedError::InputArity {
            got: inputs.len(),
            want: net.input_width(),
        });
    }
    Ok(net.fold_normalization())
}

fn check_box(input_box: &[(f64, f64)], want: usize) -> Result<(), EmbedError> {
    if input_box.len() != want {
        return Err(EmbedError::BoxArity {
            got: input_box.len(),
            want,
        });
    }
    for (index, &(lo, hi)) in input_box.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(EmbedError::BadBox { index, lo, hi });
        }
    }
    Ok(())
}

fn check_alpha(alpha: &[Vec<f64>], net: &ReluNetwork) -> Result<(), EmbedError> {
    let hidden = &net.layer_sizes[1..net.layer_sizes.len() - 1];
    if alpha.len() != hidden.len() {
        return Err(EmbedError::PenaltyLayers {
            got: alpha.len(),
            want: hidden.len(),
        });
    }
    for (l, (a, &width)) in alpha.iter().zip(hidden).enumerate() {
        if a.len() != width {
            return Err(EmbedError::PenaltyShape {
                layer: l + 1,
                got: a.len(),
                want: width,
            });
        }
        for &v in a {
            if !v.is_finite() || v < 0.0 {
                return Err(EmbedError::BadPenalty {
                    layer: l + 1,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// `h − scale·(W·prev) ⟨sense⟩ …` term list for neuron `j` of a layer.
fn pre_terms(h: VarId, w: &Matrix, prev: &[VarId], j: usize, scale: f64) -> Vec<(VarId, f64)> {
    let mut terms = Vec::with_capacity(prev.len() + 2);
    terms.push((h, 1.0));
    for (i, &p) in prev.iter().enumerate() {
        terms.push((p, -scale * w.get(i, j)));
    }
    terms
}

/// One exactly-encoded neuron: provably inactive neurons are pinned to zero,
/// provably active ones become an equality, and sign-indefinite ones get a
/// binary with the four standard rows. `lo`/`hi` bound the pre-activation.
fn exact_neuron(
    model: &mut OptModel,
    prefix: &str,
    l: usize,
    j: usize,
    w: &Matrix,
    b: f64,
    prev: &[VarId],
    lo: f64,
    hi: f64,
) -> Result<VarId, ModelError> {
    if hi <= 0.0 {
        return model.add_variable(&format!("{prefix}h{l}_{j}"), 0.0, 0.0, VarKind::Continuous);
    }
    let h = model.add_variable(
        &format!("{prefix}h{l}_{j}"),
        0.0,
        f64::INFINITY,
        VarKind::Continuous,
    )?;
    if lo >= 0.0 {
        model.add_constraint(
            &format!("{prefix}eq{l}_{j}"),
            &pre_terms(h, w, prev, j, 1.0),
            Sense::Eq,
            b,
        )?;
        return Ok(h);
    }
    let d = model.add_variable(&format!("{prefix}d{l}_{j}"), 0.0, 1.0, VarKind::Binary)?;
    model.add_constraint(
        &format!("{prefix}relu{l}_{j}"),
        &pre_terms(h, w, prev, j, 1.0),
        Sense::Ge,
        b,
    )?;
    model.add_constraint(&format!("{prefix}pos{l}_{j}"), &[(h, 1.0)], Sense::Ge, 0.0)?;
    // h ≤ pre − lo·(1−δ)  ⇔  h − W·prev − lo·δ ≤ b − lo
    let mut up = pre_terms(h, w, prev, j, 1.0);
    up.push((d, -lo));
    model.add_constraint(&format!("{prefix}ub1_{l}_{j}"), &up, Sense::Le, b - lo)?;
    // h ≤ hi·δ
    model.add_constraint(
        &format!("{prefix}ub2_{l}_{j}"),
        &[(h, 1.0), (d, -hi)],
        Sense::Le,
        0.0,
    )?;
    Ok(h)
}

/// Walks the folded network adding one variable per hidden neuron plus the
/// output equality. Hidden layers below `exact_below` use the big-M neuron
/// encoding (and need `pre_bounds`); the rest get the epigraph pair
/// `h ≥ W·prev + b`, `h ≥ 0`, plus the triangular `cap` row when given.
/// Returns the hidden-layer variables in layer-major order.
fn build_network_rows(
    model: &mut OptModel,
    net: &ReluNetwork,
    prefix: &str,
    inputs: &[VarId],
    output: VarId,
    exact_below: usize,
    pre_bounds: Option<&[Vec<(f64, f64)>]>,
    cap: Option<(f64, f64)>,
) -> Result<Vec<Vec<VarId>>, EmbedError> {
    let hidden_layers = net.num_layers() - 1;
    let mut layers: Vec<Vec<VarId>> = Vec::with_capacity(hidden_layers);
    let mut prev: Vec<VarId> = inputs.to_vec();
    for l in 1..=hidden_layers {
        let w = &net.weights[l - 1];
        let b = &net.biases[l - 1];
        let mut hs = Vec::with_capacity(net.layer_sizes[l]);
        for j in 0..net.layer_sizes[l] {
            if l < exact_below {
                let (lo, hi) = pre_bounds.expect("exact layers need bounds")[l - 1][j];
                hs.push(exact_neuron(model, prefix, l, j, w, b[j], &prev, lo, hi)?);
            } else {
                let h = model.add_variable(
                    &format!("{prefix}h{l}_{j}"),
                    0.0,
                    f64::INFINITY,
                    VarKind::Continuous,
                )?;
                model.add_constraint(
                    &format!("{prefix}relu{l}_{j}"),
                    &pre_terms(h, w, &prev, j, 1.0),
                    Sense::Ge,
                    b[j],
                )?;
                // implied by the variable bound, but kept as a row so the
                // epigraph block always contributes two rows per neuron
                model.add_constraint(
                    &format!("{prefix}pos{l}_{j}"),
                    &[(h, 1.0)],
                    Sense::Ge,
                    0.0,
                )?;
                if let Some((k1, k2)) = cap {
                    model.add_constraint(
                        &format!("{prefix}cap{l}_{j}"),
                        &pre_terms(h, w, &prev, j, k1),
                        Sense::Le,
                        k1 * b[j] + k2,
                    )?;
                }
                hs.push(h);
            }
        }
        prev.clone_from(&hs);
        layers.push(hs);
    }
    let w_out = &net.weights[hidden_layers];
    let mut terms = Vec::with_capacity(prev.len() + 1);
    terms.push((output, 1.0));
    for (i, &p) in prev.iter().enumerate() {
        terms.push((p, -w_out.get(i, 0)));
    }
    model.add_constraint(
        &format!("{prefix}out"),
        &terms,
        Sense::Eq,
        net.biases[hidden_layers][0],
    )?;
    Ok(layers)
}

fn zip_penalties(layers: &[Vec<VarId>], alpha: &[Vec<f64>]) -> Vec<(VarId, f64)> {
    layers
        .iter()
        .zip(alpha)
        .flat_map(|(hs, a)| hs.iter().copied().zip(a.iter().copied()))
        .collect()
}

/// Epigraph encoding of a convexified network: per hidden neuron a variable
/// `h ≥ 0` with rows `h ≥ W·h_prev + b` and `h ≥ 0`, then the output
/// equality. No binaries. Exact only when the *caller's objective puts
/// minimization pressure on the output variable* — that is what pulls every
/// `h` down onto `max(W·h_prev + b, 0)`.
pub fn embed_cvxd(
    model: &mut OptModel,
    net: &ReluNetwork,
    prefix: &str,
    inputs: &[VarId],
    output: VarId,
) -> Result<(), EmbedError> {
    let folded = prepare(net, inputs)?;
    if folded.convexified_from() != Some(1) {
        return Err(EmbedError::WrongKind {
            need: 1,
            found: kind_name(folded.kind),
        });
    }
    build_network_rows(model, &folded, prefix, inputs, output, 1, None, None)?;
    Ok(())
}

/// Penalized epigraph relaxation for an arbitrary network. Adds the same
/// rows as [`embed_cvxd`] without any kind requirement and returns the
/// penalty terms `Σ_l α_lᵀ h_l` as `(variable, coefficient)` pairs; add them
/// to a minimization objective (or subtract from a maximization) to pull the
/// `h` variables toward the true activations.
pub fn embed_pcar(
    model: &mut OptModel,
    net: &ReluNetwork,
    alpha: &[Vec<f64>],
    prefix: &str,
    inputs: &[VarId],
    output: VarId,
) -> Result<Vec<(VarId, f64)>, EmbedError> {
    let folded = prepare(net, inputs)?;
    check_alpha(alpha, &folded)?;
    let layers = build_network_rows(model, &folded, prefix, inputs, output, 1, None, None)?;
    Ok(zip_penalties(&layers, alpha))
}

/// Slope and intercept `(k₁, k₂)` of the per-neuron cap line through
/// `(lb, 0)` and `(ub, ub)`: `k₁ = ub/(ub−lb)`, `k₂ = −ub·lb/(ub−lb)`.
pub fn triangle_cap(lb: f64, ub: f64) -> (f64, f64) {
    let k1 = ub / (ub - lb);
    (k1, -ub * lb / (ub - lb))
}

/// [`embed_pcar`] plus a triangular upper cap per neuron:
/// `h ≤ k₁·(W·h_prev + b) + k₂` with the cap line through `(lb, 0)` and
/// `(ub, ub)`, so a neuron whose pre-activation stays within `[lb, ub]` is
/// confined to the triangle between the ReLU graph and the cap.
pub fn embed_pctar(
    model: &mut OptModel,
    net: &ReluNetwork,
    alpha: &[Vec<f64>],
    lb: f64,
    ub: f64,
    prefix: &str,
    inputs: &[VarId],
    output: VarId,
) -> Result<Vec<(VarId, f64)>, EmbedError> {
    let folded = prepare(net, inputs)?;
    check_alpha(alpha, &folded)?;
    if !lb.is_finite() || !ub.is_finite() || lb >= 0.0 || ub <= 0.0 {
        return Err(EmbedError::BadTriangle { lb, ub });
    }
    let cap = triangle_cap(lb, ub);
    let layers = build_network_rows(model, &folded, prefix, inputs, output, 1, None, Some(cap))?;
    Ok(zip_penalties(&layers, alpha))
}

/// Pre-activation intervals per weight layer under interval arithmetic,
/// starting from a box on the raw inputs. Entry `[l][j]` bounds neuron `j`
/// of weight layer `l+1`; the last entry bounds the (linear) output. Sound:
/// every activation reachable from the box lies inside its interval.
///
/// Operates on the stored weights as-is; fold normalization away first if
/// the network carries one.
pub fn propagate_bounds(net: &ReluNetwork, input_box: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    assert_eq!(
        input_box.len(),
        net.input_width(),
        "input box arity must match the network input width"
    );
    let mut act: Vec<(f64, f64)> = input_box.to_vec();
    let mut out = Vec::with_capacity(net.num_layers());
    for l in 0..net.num_layers() {
        let w = &net.weights[l];
        let b = &net.biases[l];
        let mut pre = Vec::with_capacity(w.cols());
        for j in 0..w.cols() {
            let (mut lo, mut hi) = (b[j], b[j]);
            for (i, &(alo, ahi)) in act.iter().enumerate() {
                let c = w.get(i, j);
                if c >= 0.0 {
                    lo += c * alo;
                    hi += c * ahi;
                } else {
                    lo += c * ahi;
                    hi += c * alo;
                }
            }
            pre.push((lo, hi));
        }
        if l + 1 < net.num_layers() {
            act = pre.iter().map(|&(lo, hi)| (lo.max(0.0), hi.max(0.0))).collect();
        }
        out.push(pre);
    }
    out
}

/// Exact big-M encoding of an arbitrary network over a finite input box.
/// Neurons whose pre-activation interval is non-positive are pinned to zero,
/// non-negative ones become equalities, and the rest get one binary each
/// with rows `h ≥ pre`, `h ≥ 0`, `h ≤ pre − lo·(1−δ)`, `h ≤ hi·δ`. With the
/// inputs fixed, any feasible point reproduces the forward pass exactly.
pub fn embed_bigm(
    model: &mut OptModel,
    net: &ReluNetwork,
    input_box: &[(f64, f64)],
    prefix: &str,
    inputs: &[VarId],
    output: VarId,
) -> Result<(), EmbedError> {
    let folded = prepare(net, inputs)?;
    check_box(input_box, folded.input_width())?;
    let bounds = propagate_bounds(&folded, input_box);
    build_network_rows(
        model,
        &folded,
        prefix,
        inputs,
        output,
        folded.num_layers(),
        Some(&bounds),
        None,
    )?;
    Ok(())
}

/// Partially exact encoding: hidden layers `1..k−1` are big-M encoded,
/// layers `k..` get the epigraph pair. Needs weights non-negative from layer
/// `k` on (a network convexified from some layer ≤ k), which is what makes
/// the relaxed tail tight under output minimization. `k = 1` is exactly
/// [`embed_cvxd`]; `k = L+1` (all layers exact) is exactly [`embed_bigm`].
pub fn embed_hybrid(
    model: &mut OptModel,
    net: &ReluNetwork,
    k: usize,
    input_box: &[(f64, f64)],
    prefix: &str,
    inputs: &[VarId],
    output: VarId,
) -> Result<(), EmbedError> {
    let folded = prepare(net, inputs)?;
    let max = folded.num_layers();
    if k < 1 || k > max {
        return Err(EmbedError::BadBoundary { k, max });
    }
    match folded.convexified_from() {
        Some(from) if from <= k => {}
        _ => {
            return Err(EmbedError::WrongKind {
                need: k,
                found: kind_name(folded.kind),
            })
        }
    }
    check_box(input_box, folded.input_width())?;
    let bounds = if k > 1 {
        Some(propagate_bounds(&folded, input_box))
    } else {
        None
    };
    build_network_rows(
        model,
        &folded,
        prefix,
        inputs,
        output,
        k,
        bounds.as_deref(),
        None,
    )?;
    Ok(())
}

/// One penalty vector per hidden layer, every entry `c`.
pub fn alpha_constant(net: &ReluNetwork, c: f64) -> Vec<Vec<f64>> {
    net.layer_sizes[1..net.layer_sizes.len() - 1]
        .iter()
        .map(|&w| vec![c; w])
        .collect()
}

/// Layer-graded penalties: every neuron of hidden layer `l` (1-based) gets
/// `f(l)`.
pub fn alpha_by_layer(net: &ReluNetwork, f: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
    net.layer_sizes[1..net.layer_sizes.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, &w)| vec![f(i + 1); w])
        .collect()
}

/// A bivariate cost surface tabulated on a rectangular grid over
/// `(u = x/x̃, x̃)`, ready for the convex-combination encoding of
/// [`build_pwl`]. `values.get(i, j)` is the cost at `(u_grid[i], xt_grid[j])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PwlSpec {
    pub n_pieces: usize,
    /// The `u` axis stops at `1 − eps_u`, keeping the table away from the
    /// cost singularity at x = x̃.
    pub eps_u: f64,
    pub u_grid: Vec<f64>,
    pub xt_grid: Vec<f64>,
    pub values: Matrix,
    pub q: f64,
    pub r: f64,
}

impl PwlSpec {
    /// Uniform grid with `n_pieces` cells per axis over
    /// `u ∈ [0, 1−eps_u] × x̃ ∈ xt_range`, tabulating
    /// `cost(u·x̃, x̃, q, r)` at every vertex.
    pub fn tabulate(
        n_pieces: usize,
        eps_u: f64,
        xt_range: (f64, f64),
        q: f64,
        r: f64,
        cost: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> Result<PwlSpec, EmbedError> {
        if n_pieces < 1 {
            return Err(EmbedError::BadGrid("need at least one piece per axis".into()));
        }
        if !(eps_u > 0.0 && eps_u < 1.0) {
            return Err(EmbedError::BadGrid(format!(
                "ratio margin {eps_u} outside (0, 1)"
            )));
        }
        let (tlo, thi) = xt_range;
        if !tlo.is_finite() || !thi.is_finite() || tlo >= thi {
            return Err(EmbedError::BadGrid(format!(
                "degenerate x-tilde range [{tlo}, {thi}]"
            )));
        }
        let n = n_pieces + 1;
        let u_grid: Vec<f64> = (0..n)
            .map(|i| (1.0 - eps_u) * i as f64 / n_pieces as f64)
            .collect();
        let xt_grid: Vec<f64> = (0..n)
            .map(|j| tlo + (thi - tlo) * j as f64 / n_pieces as f64)
            .collect();
        let mut values = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = cost(u_grid[i] * xt_grid[j], xt_grid[j], q, r);
                if !v.is_finite() {
                    return Err(EmbedError::BadGrid(format!(
                        "non-finite cost {v} at grid vertex (u={}, xt={})",
                        u_grid[i], xt_grid[j]
                    )));
                }
                values.set(i, j, v);
            }
        }
        Ok(PwlSpec {
            n_pieces,
            eps_u,
            u_grid,
            xt_grid,
            values,
            q,
            r,
        })
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.n_pieces < 1 {
            return Err(EmbedError::BadGrid("need at least one piece per axis".into()));
        }
        let n = self.n_pieces + 1;
        if self.u_grid.len() != n || self.xt_grid.len() != n {
            return Err(EmbedError::BadGrid(format!(
                "grid lengths {}/{} do not match {} pieces",
                self.u_grid.len(),
                self.xt_grid.len(),
                self.n_pieces
            )));
        }
        for g in [&self.u_grid, &self.xt_grid] {
            if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(EmbedError::BadGrid(
                    "grid axes must be finite and strictly increasing".into(),
                ));
            }
        }
        if self.values.rows() != n || self.values.cols() != n || !self.values.is_consistent() {
            return Err(EmbedError::BadGrid(format!(
                "value table is {}x{}, expected {n}x{n}",
                self.values.rows(),
                self.values.cols()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::BadGrid("value table has non-finite entries".into()));
        }
        Ok(())
    }
}

/// Convex-combination encoding of a tabulated surface: one weight variable
/// per grid vertex, one binary per grid cell, weights supported only on the
/// four corners of the selected cell. `x`, `x̃`, and `cost` are tied to the
/// weighted vertex coordinates `u·x̃`, `x̃`, and tabulated values. Because
/// every vertex has `u ≤ 1 − eps_u`, the encoding implies
/// `x ≤ (1−eps_u)·x̃` without a dedicated row.
pub fn build_pwl(
    model: &mut OptModel,
    spec: &PwlSpec,
    prefix: &str,
    x: VarId,
    xt: VarId,
    cost: VarId,
) -> Result<(), EmbedError> {
    spec.validate()?;
    let n = spec.n_pieces + 1;
    let mut lam: Vec<Vec<VarId>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(model.add_variable(
                &format!("{prefix}w{i}_{j}"),
                0.0,
                1.0,
                VarKind::Continuous,
            )?);
        }
        lam.push(row);
    }
    let mut cells: Vec<Vec<VarId>> = Vec::with_capacity(spec.n_pieces);
    for i in 0..spec.n_pieces {
        let mut row = Vec::with_capacity(spec.n_pieces);
        for j in 0..spec.n_pieces {
            row.push(model.add_variable(
                &format!("{prefix}c{i}_{j}"),
                0.0,
                1.0,
                VarKind::Binary,
            )?);
        }
        cells.push(row);
    }

    let all_lam = |coef: &dyn Fn(usize, usize) -> f64| -> Vec<(VarId, f64)> {
        let mut terms = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                terms.push((lam[i][j], coef(i, j)));
            }
        }
        terms
    };

    model.add_constraint(
        &format!("{prefix}wsum"),
        &all_lam(&|_, _| 1.0),
        Sense::Eq,
        1.0,
    )?;
    let cell_terms: Vec<(VarId, f64)> = cells
        .iter()
        .flat_map(|row| row.iter().map(|&c| (c, 1.0)))
        .collect();
    model.add_constraint(&format!("{prefix}csum"), &cell_terms, Sense::Eq, 1.0)?;

    let mut xdef = vec![(x, 1.0)];
    xdef.extend(all_lam(&|i, j| -spec.u_grid[i] * spec.xt_grid[j]));
    model.add_constraint(&format!("{prefix}xdef"), &xdef, Sense::Eq, 0.0)?;

    let mut xtdef = vec![(xt, 1.0)];
    xtdef.extend(all_lam(&|_, j| -spec.xt_grid[j]));
    model.add_constraint(&format!("{prefix}xtdef"), &xtdef, Sense::Eq, 0.0)?;

    let mut costdef = vec![(cost, 1.0)];
    costdef.extend(all_lam(&|i, j| -spec.values.get(i, j)));
    model.add_constraint(&format!("{prefix}costdef"), &costdef, Sense::Eq, 0.0)?;

    // weight at a vertex only when one of the (up to four) adjacent cells is
    // selected
    for i in 0..n {
        for j in 0..n {
            let mut terms = vec![(lam[i][j], 1.0)];
            for ci in i.saturating_sub(1)..=i.min(spec.n_pieces - 1) {
                for cj in j.saturating_sub(1)..=j.min(spec.n_pieces - 1) {
                    terms.push((cells[ci][cj], -1.0));
                }
            }
            model.add_constraint(&format!("{prefix}sup{i}_{j}"), &terms, Sense::Le, 0.0)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch_bound::{solve_mip, BBOptions};
    use crate::model::{ObjSense, SolveStatus};
    use crate::simplex::{solve_lp, SimplexOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_net(w1: f64, b1: f64, w2: f64, b2: f64, kind: NetKind) -> ReluNetwork {
        ReluNetwork {
            layer_sizes: vec![1, 1, 1],
            weights: vec![
                Matrix::from_rows(&[vec![w1]]),
                Matrix::from_rows(&[vec![w2]]),
            ],
            biases: vec![vec![b1], vec![b2]],
            kind,
            input_norm: vec![(0.0, 1.0)],
            output_norm: (0.0, 1.0),
        }
    }

    /// Model with the network inputs fixed to `z` (via bounds) and the lone
    /// objective `minimize out`.
    fn fixed_input_model(z: &[f64]) -> (OptModel, Vec<VarId>, VarId) {
        let mut m = OptModel::new(ObjSense::Minimize);
        let inputs: Vec<VarId> = z
            .iter()
            .enumerate()
            .map(|(i, &v)| m.add_variable(&format!("z{i}"), v, v, VarKind::Continuous).unwrap())
            .collect();
        let out = m
            .add_variable("out", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        m.add_objective_term(out, 1.0).unwrap();
        (m, inputs, out)
    }

    #[test]
    fn cvxd_single_neuron_matches_forward() {
        let net = tiny_net(1.0, -1.0, 1.0, 0.0, NetKind::Convexified { from_layer: 1 });
        // fixed via an equality row rather than bounds, for variety
        let mut m = OptModel::new(ObjSense::Minimize);
        let z = m
            .add_variable("z", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        m.add_constraint("fix_z", &[(z, 1.0)], Sense::Eq, 2.0).unwrap();
        let out = m
            .add_variable("out", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        m.add_objective_term(out, 1.0).unwrap();
        embed_cvxd(&mut m, &net, "", &[z], out).unwrap();
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let (f, _) = net.forward(&[2.0]).unwrap();
        assert!((res.objective - 1.0).abs() < 1e-9);
        assert!((res.objective - f).abs() < 1e-9);
    }

    #[test]
    fn cvxd_baseline_architecture_counts() {
        let net = ReluNetwork::random(&[4, 10, 20, 10, 1], NetKind::Convexified { from_layer: 1 }, 3);
        let (mut m, inputs, out) = fixed_input_model(&[0.1, 0.2, 0.3, 0.4]);
        let (v0, c0) = (m.num_vars(), m.num_cons());
        embed_cvxd(&mut m, &net, "", &inputs, out).unwrap();
        assert_eq!(m.num_vars() - v0, 40);
        assert_eq!(m.num_cons() - c0, 81);
        assert!(m.binary_vars().is_empty());
    }

    #[test]
    fn cvxd_denormalizes_through_folding() {
        let mut net = ReluNetwork::random(&[3, 4, 1], NetKind::Convexified { from_layer: 1 }, 7);
        for b in &mut net.biases {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        net.input_norm = vec![(1.0, 3.0), (2.0, 5.0), (0.0, 10.0)];
        net.output_norm = (7.0, 19.0);
        let mins = [1.0, 2.0, 0.0];
        let (f, _) = net.forward(&mins).unwrap();
        assert!((f - 7.0).abs() < 1e-12); // all-zero activations ⇒ output min

        let (mut m, inputs, out) = fixed_input_model(&mins);
        embed_cvxd(&mut m, &net, "", &inputs, out).unwrap();
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective - 7.0).abs() < 1e-9, "got {}", res.objective);
    }

    #[test]
    fn cvxd_rejects_other_kinds() {
        let uc = ReluNetwork::random(&[2, 3, 1], NetKind::Unconstrained, 0);
        let deep = ReluNetwork::random(&[2, 3, 3, 1], NetKind::Convexified { from_layer: 2 }, 0);
        for net in [uc, deep] {
            let (mut m, inputs, out) = fixed_input_model(&[0.5, 0.5]);
            match embed_cvxd(&mut m, &net, "", &inputs, out) {
                Err(EmbedError::WrongKind { need: 1, .. }) => {}
                other => panic!("expected kind error, got {other:?}"),
            }
        }
    }

    #[test]
    fn cvxd_tightness_on_random_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xE1BED);
        for case in 0..20 {
            let net = ReluNetwork::random(&[3, 5, 4, 1], NetKind::Convexified { from_layer: 1 }, case);
            let z: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let (f, _) = net.forward(&z).unwrap();
            let (mut m, inputs, out) = fixed_input_model(&z);
            embed_cvxd(&mut m, &net, "", &inputs, out).unwrap();
            let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!(
                (res.objective - f).abs() <= 1e-6 * (1.0 + f.abs()),
                "case {case}: lp {} vs forward {f}",
                res.objective
            );
        }
    }

    #[test]
    fn pcar_zero_penalty_matches_cvxd_rows() {
        let net = ReluNetwork::random(&[3, 5, 4, 1], NetKind::Convexified { from_layer: 1 }, 11);
        let (mut m1, i1, o1) = fixed_input_model(&[0.1, 0.5, 0.9]);
        embed_cvxd(&mut m1, &net, "", &i1, o1).unwrap();
        let (mut m2, i2, o2) = fixed_input_model(&[0.1, 0.5, 0.9]);
        let terms = embed_pcar(&mut m2, &net, &alpha_constant(&net, 0.0), "", &i2, o2).unwrap();
        assert_eq!(terms.len(), 9); // 5 + 4 hidden neurons
        assert!(terms.iter().all(|&(_, a)| a == 0.0));
        assert_eq!(m1.write_lp_text(), m2.write_lp_text());
    }

    #[test]
    fn pcar_negative_output_weight_unbounded_without_penalty() {
        let net = tiny_net(1.0, -1.0, -1.0, 0.0, NetKind::Unconstrained);
        let (mut m, inputs, out) = fixed_input_model(&[2.0]);
        embed_pcar(&mut m, &net, &alpha_constant(&net, 0.0), "", &inputs, out).unwrap();
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Unbounded);
    }

    #[test]
    fn pcar_large_penalty_recovers_forward_value() {
        let net = tiny_net(1.0, -1.0, -1.0, 0.0, NetKind::Unconstrained);
        let (mut m, inputs, out) = fixed_input_model(&[2.0]);
        let terms = embed_pcar(&mut m, &net, &alpha_constant(&net, 1000.0), "", &inputs, out).unwrap();
        for (v, a) in terms {
            m.add_objective_term(v, a).unwrap();
        }
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        // h pinned to max(pre, 0) = 1, so the output variable carries −1 =
        // the true forward value
        assert!((res.value("h1_0").unwrap() - 1.0).abs() < 1e-9);
        assert!((res.value("out").unwrap() - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn pcar_relaxation_never_overestimates() {
        for seed in 0..10 {
            let net = ReluNetwork::random(&[3, 4, 1], NetKind::Unconstrained, seed);
            let z = [0.2, 0.7, 0.4];
            let (f, _) = net.forward(&z).unwrap();
            let (mut m, inputs, out) = fixed_input_model(&z);
            embed_pcar(&mut m, &net, &alpha_constant(&net, 0.0), "", &inputs, out).unwrap();
            let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
            match res.status {
                SolveStatus::Unbounded => {}
                SolveStatus::Optimal => assert!(res.objective <= f + 1e-7),
                other => panic!("seed {seed}: unexpected status {other:?}"),
            }
        }
    }

    #[test]
    fn pcar_rejects_bad_penalties() {
        let net = ReluNetwork::random(&[2, 3, 1], NetKind::Unconstrained, 1);
        let (mut m, inputs, out) = fixed_input_model(&[0.0, 0.0]);
        match embed_pcar(&mut m, &net, &[vec![1.0, 1.0]], "", &inputs, out) {
            Err(EmbedError::PenaltyShape { layer: 1, got: 2, want: 3 }) => {}
            other => panic!("got {other:?}"),
        }
        match embed_pcar(&mut m, &net, &[vec![1.0, -2.0, 1.0]], "x_", &inputs, out) {
            Err(EmbedError::BadPenalty { layer: 1, .. }) => {}
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn pctar_cap_line_coefficients() {
        let (k1, k2) = triangle_cap(-10.0, 10.0);
        assert_eq!(k1, 0.5);
        assert_eq!(k2, 5.0);
        // cap passes through (lb, 0) and (ub, ub)
        assert_eq!(k1 * -10.0 + k2, 0.0);
        assert_eq!(k1 * 10.0 + k2, 10.0);
    }

    #[test]
    fn pctar_rows_are_pcar_rows_plus_caps() {
        let net = ReluNetwork::random(&[3, 4, 2, 1], NetKind::Unconstrained, 5);
        let alpha = alpha_constant(&net, 1.0);
        let (mut m1, i1, o1) = fixed_input_model(&[0.1, 0.2, 0.3]);
        embed_pcar(&mut m1, &net, &alpha, "", &i1, o1).unwrap();
        let (mut m2, i2, o2) = fixed_input_model(&[0.1, 0.2, 0.3]);
        embed_pctar(&mut m2, &net, &alpha, -10.0, 10.0, "", &i2, o2).unwrap();
        let names1: Vec<&str> = m1.cons().map(|c| c.name.as_str()).collect();
        let names2: Vec<&str> = m2.cons().map(|c| c.name.as_str()).collect();
        assert_eq!(names2.len(), names1.len() + 6); // one cap per hidden neuron
        for n in names1 {
            assert!(names2.contains(&n), "{n} missing from the capped model");
        }
    }

    #[test]
    fn pctar_solution_stays_inside_triangle() {
        let net = ReluNetwork::random(&[2, 3, 1], NetKind::Unconstrained, 9);
        let z = [0.3, 0.8];
        let (lb, ub) = (-10.0, 10.0);
        let (mut m, inputs, out) = fixed_input_model(&z);
        let terms =
            embed_pctar(&mut m, &net, &alpha_constant(&net, 1000.0), lb, ub, "", &inputs, out)
                .unwrap();
        for (v, a) in terms {
            m.add_objective_term(v, a).unwrap();
        }
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let (k1, k2) = triangle_cap(lb, ub);
        let w = &net.weights[0];
        let b = &net.biases[0];
        for j in 0..3 {
            let pre = b[j] + w.get(0, j) * z[0] + w.get(1, j) * z[1];
            assert!(pre > lb && pre < ub, "test net must keep pre inside the box");
            let h = res.value(&format!("h1_{j}")).unwrap();
            assert!(h >= pre.max(0.0) - 1e-7);
            assert!(h <= k1 * pre + k2 + 1e-7);
        }
    }

    #[test]
    fn pctar_rejects_bad_interval() {
        let net = ReluNetwork::random(&[2, 3, 1], NetKind::Unconstrained, 1);
        let alpha = alpha_constant(&net, 1.0);
        for (lb, ub) in [(0.0, 10.0), (-10.0, 0.0), (1.0, 10.0), (f64::NEG_INFINITY, 10.0)] {
            let (mut m, inputs, out) = fixed_input_model(&[0.0, 0.0]);
            match embed_pctar(&mut m, &net, &alpha, lb, ub, "", &inputs, out) {
                Err(EmbedError::BadTriangle { .. }) => {}
                other => panic!("({lb}, {ub}): got {other:?}"),
            }
        }
    }

    #[test]
    fn interval_propagation_hand_cases() {
        let id = |w: f64, b: f64| ReluNetwork {
            layer_sizes: vec![1, 1],
            weights: vec![Matrix::from_rows(&[vec![w]])],
            biases: vec![vec![b]],
            kind: NetKind::Unconstrained,
            input_norm: vec![(0.0, 1.0)],
            output_norm: (0.0, 1.0),
        };
        assert_eq!(propagate_bounds(&id(1.0, 0.0), &[(0.0, 1.0)]), vec![vec![(0.0, 1.0)]]);
        assert_eq!(propagate_bounds(&id(-2.0, 1.0), &[(0.0, 1.0)]), vec![vec![(-1.0, 1.0)]]);
    }

    #[test]
    fn interval_propagation_is_sound_on_samples() {
        let net = ReluNetwork::random(&[3, 6, 5, 1], NetKind::Unconstrained, 31);
        let boxes = [(-1.0, 2.0), (0.0, 1.0), (-0.5, 0.5)];
        let bounds = propagate_bounds(&net, &boxes);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let z: Vec<f64> = boxes
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                .collect();
            let (pres, _) = net.propagate(&z);
            for (layer, pre) in pres.iter().enumerate() {
                for (j, &p) in pre.iter().enumerate() {
                    let (lo, hi) = bounds[layer][j];
                    assert!(
                        p >= lo - 1e-12 && p <= hi + 1e-12,
                        "layer {layer} neuron {j}: {p} outside [{lo}, {hi}]"
                    );
                }
            }
        }
    }

    #[test]
    fn bigm_neuron_with_positive_activation() {
        let net = tiny_net(1.0, 0.0, 1.0, 0.0, NetKind::Unconstrained);
        let (mut m, inputs, out) = fixed_input_model(&[0.5]);
        embed_bigm(&mut m, &net, &[(-1.0, 1.0)], "", &inputs, out).unwrap();
        assert_eq!(m.binary_vars().len(), 1);
        let res = solve_mip(&m, &BBOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.value("h1_0").unwrap() - 0.5).abs() < 1e-9);
        assert!((res.value("d1_0").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bigm_dead_neuron_needs_no_binary() {
        let net = tiny_net(1.0, -5.0, 1.0, 0.0, NetKind::Unconstrained);
        let (mut m, inputs, out) = fixed_input_model(&[0.5]);
        let c0 = m.num_cons();
        embed_bigm(&mut m, &net, &[(-1.0, 1.0)], "", &inputs, out).unwrap();
        assert!(m.binary_vars().is_empty());
        assert_eq!(m.num_cons() - c0, 1); // only the output equality
        let h = m.var_by_name("h1_0").unwrap();
        assert!(m.var(h).is_fixed());
    }

    #[test]
    fn bigm_always_active_neuron_becomes_equality() {
        let net = tiny_net(1.0, 2.0, 1.0, 0.0, NetKind::Unconstrained);
        let (mut m, inputs, out) = fixed_input_model(&[0.5]);
        embed_bigm(&mut m, &net, &[(0.0, 1.0)], "", &inputs, out).unwrap();
        assert!(m.binary_vars().is_empty());
        assert!(m.cons().any(|c| c.name == "eq1_0" && c.sense == Sense::Eq));
    }

    #[test]
    fn bigm_reproduces_forward_on_random_nets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB16);
        let boxes = [(0.0, 1.0); 4];
        for seed in 0..10 {
            let net = ReluNetwork::random(&[4, 6, 4, 1], NetKind::Unconstrained, seed);
            let z: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
            let (f, _) = net.forward(&z).unwrap();
            let (mut m, inputs, out) = fixed_input_model(&z);
            embed_bigm(&mut m, &net, &boxes, "", &inputs, out).unwrap();
            let opts = BBOptions { gap_tol: 1e-9, ..Default::default() };
            let res = solve_mip(&m, &opts).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!(
                (res.objective - f).abs() < 1e-6,
                "seed {seed}: mip {} vs forward {f}",
                res.objective
            );
        }
    }

    #[test]
    fn bigm_rejects_unbounded_box() {
        let net = ReluNetwork::random(&[2, 3, 1], NetKind::Unconstrained, 1);
        let (mut m, inputs, out) = fixed_input_model(&[0.0, 0.0]);
        match embed_bigm(&mut m, &net, &[(0.0, f64::INFINITY), (0.0, 1.0)], "", &inputs, out) {
            Err(EmbedError::BadBox { index: 0, .. }) => {}
            other => panic!("got {other:?}"),
        }
        match embed_bigm(&mut m, &net, &[(0.0, 1.0)], "", &inputs, out) {
            Err(EmbedError::BoxArity { got: 1, want: 2 }) => {}
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn hybrid_boundary_one_equals_cvxd() {
        let net = ReluNetwork::random(&[2, 3, 3, 1], NetKind::Convexified { from_layer: 1 }, 4);
        let (mut m1, i1, o1) = fixed_input_model(&[0.2, 0.9]);
        embed_cvxd(&mut m1, &net, "", &i1, o1).unwrap();
        let (mut m2, i2, o2) = fixed_input_model(&[0.2, 0.9]);
        embed_hybrid(&mut m2, &net, 1, &[(0.0, 1.0), (0.0, 1.0)], "", &i2, o2).unwrap();
        assert_eq!(m1.write_lp_text(), m2.write_lp_text());
    }

    #[test]
    fn hybrid_full_boundary_equals_bigm() {
        let net = ReluNetwork::random(&[2, 3, 3, 1], NetKind::Convexified { from_layer: 2 }, 4);
        let boxes = [(0.0, 1.0), (0.0, 1.0)];
        let (mut m1, i1, o1) = fixed_input_model(&[0.2, 0.9]);
        embed_bigm(&mut m1, &net, &boxes, "", &i1, o1).unwrap();
        let (mut m2, i2, o2) = fixed_input_model(&[0.2, 0.9]);
        embed_hybrid(&mut m2, &net, 3, &boxes, "", &i2, o2).unwrap();
        assert_eq!(m1.write_lp_text(), m2.write_lp_text());
    }

    #[test]
    fn hybrid_matches_forward_on_partially_convex_net() {
        let boxes = [(0.0, 1.0)];
        for seed in 0..5 {
            let net = ReluNetwork::random(&[1, 2, 2, 1], NetKind::Convexified { from_layer: 2 }, seed);
            let z = [0.3 + 0.1 * seed as f64];
            let (f, _) = net.forward(&z).unwrap();
            let (mut m, inputs, out) = fixed_input_model(&z);
            embed_hybrid(&mut m, &net, 2, &boxes, "", &inputs, out).unwrap();
            let opts = BBOptions { gap_tol: 1e-9, ..Default::default() };
            let res = solve_mip(&m, &opts).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!(
                (res.objective - f).abs() < 1e-6,
                "seed {seed}: {} vs {f}",
                res.objective
            );
        }
    }

    #[test]
    fn hybrid_rejects_bad_boundary_or_kind() {
        let net = ReluNetwork::random(&[2, 3, 3, 1], NetKind::Convexified { from_layer: 2 }, 0);
        let boxes = [(0.0, 1.0), (0.0, 1.0)];
        let (mut m, inputs, out) = fixed_input_model(&[0.0, 0.0]);
        match embed_hybrid(&mut m, &net, 0, &boxes, "a_", &inputs, out) {
            Err(EmbedError::BadBoundary { k: 0, max: 3 }) => {}
            other => panic!("got {other:?}"),
        }
        match embed_hybrid(&mut m, &net, 4, &boxes, "b_", &inputs, out) {
            Err(EmbedError::BadBoundary { k: 4, max: 3 }) => {}
            other => panic!("got {other:?}"),
        }
        // convexified from layer 2 cannot relax from layer 1
        match embed_hybrid(&mut m, &net, 1, &boxes, "c_", &inputs, out) {
            Err(EmbedError::WrongKind { need: 1, .. }) => {}
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn pwl_counts_for_four_pieces() {
        let spec = PwlSpec::tabulate(4, 0.01, (1.0, 8.0), 2.0, 1.0, |x, xt, q, _| {
            x * q + xt
        })
        .unwrap();
        assert_eq!(spec.u_grid.len(), 5);
        assert_eq!(spec.xt_grid.len(), 5);
        let mut m = OptModel::new(ObjSense::Minimize);
        let x = m.add_variable("x", 0.0, f64::INFINITY, VarKind::Continuous).unwrap();
        let xt = m.add_variable("xt", 0.0, f64::INFINITY, VarKind::Continuous).unwrap();
        let cost = m.add_variable("cost", 0.0, f64::INFINITY, VarKind::Continuous).unwrap();
        let v0 = m.num_vars();
        build_pwl(&mut m, &spec, "", x, xt, cost).unwrap();
        assert_eq!(m.num_vars() - v0, 25 + 16); // vertex weights + cell binaries
        assert_eq!(m.binary_vars().len(), 16);
    }

    #[test]
    fn pwl_exact_at_grid_vertices() {
        let f = |x: f64, xt: f64, q: f64, r: f64| x * x + q * xt + r;
        let spec = PwlSpec::tabulate(3, 0.01, (1.0, 4.0), 2.0, 0.5, f).unwrap();
        for &(i, j) in &[(0usize, 0usize), (1, 2), (3, 3), (2, 1)] {
            let (u, t) = (spec.u_grid[i], spec.xt_grid[j]);
            let mut m = OptModel::new(ObjSense::Minimize);
            let x = m.add_variable("x", u * t, u * t, VarKind::Continuous).unwrap();
            let xt = m.add_variable("xt", t, t, VarKind::Continuous).unwrap();
            let cost = m
                .add_variable("cost", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
                .unwrap();
            m.add_objective_term(cost, 1.0).unwrap();
            build_pwl(&mut m, &spec, "", x, xt, cost).unwrap();
            let res = solve_mip(&m, &BBOptions { gap_tol: 1e-9, ..Default::default() }).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            let want = spec.values.get(i, j);
            assert!(
                (res.objective - want).abs() < 1e-7,
                "vertex ({i},{j}): {} vs {want}",
                res.objective
            );
        }
    }

    #[test]
    fn pwl_cell_center_averages_bilinear_values() {
        // tabulating f = x reproduces the bilinear u·x̃ at the vertices
        let spec = PwlSpec::tabulate(1, 0.01, (2.0, 4.0), 0.0, 1.0, |x, _, _, _| x).unwrap();
        let uc = (spec.u_grid[0] + spec.u_grid[1]) / 2.0;
        let tc = (spec.xt_grid[0] + spec.xt_grid[1]) / 2.0;
        let avg = (spec.values.get(0, 0)
            + spec.values.get(0, 1)
            + spec.values.get(1, 0)
            + spec.values.get(1, 1))
            / 4.0;
        assert!((avg - uc * tc).abs() < 1e-12);
        let mut m = OptModel::new(ObjSense::Minimize);
        let x = m.add_variable("x", uc * tc, uc * tc, VarKind::Continuous).unwrap();
        let xt = m.add_variable("xt", tc, tc, VarKind::Continuous).unwrap();
        let cost = m
            .add_variable("cost", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        m.add_objective_term(cost, 1.0).unwrap();
        build_pwl(&mut m, &spec, "", x, xt, cost).unwrap();
        let res = solve_mip(&m, &BBOptions { gap_tol: 1e-9, ..Default::default() }).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective - avg).abs() < 1e-9);
    }

    #[test]
    fn pwl_rejects_degenerate_grids() {
        assert!(matches!(
            PwlSpec::tabulate(0, 0.01, (0.0, 1.0), 1.0, 1.0, |_, _, _, _| 0.0),
            Err(EmbedError::BadGrid(_))
        ));
        assert!(matches!(
            PwlSpec::tabulate(2, 0.01, (1.0, 1.0), 1.0, 1.0, |_, _, _, _| 0.0),
            Err(EmbedError::BadGrid(_))
        ));
        assert!(matches!(
            PwlSpec::tabulate(2, 1.5, (0.0, 1.0), 1.0, 1.0, |_, _, _, _| 0.0),
            Err(EmbedError::BadGrid(_))
        ));
        assert!(matches!(
            PwlSpec::tabulate(2, 0.01, (0.0, 1.0), 1.0, 1.0, |_, _, _, _| f64::NAN),
            Err(EmbedError::BadGrid(_))
        ));
    }

    #[test]
    fn alpha_helpers_shape() {
        let net = ReluNetwork::random(&[4, 10, 20, 10, 1], NetKind::Unconstrained, 0);
        let a = alpha_constant(&net, 2.5);
        assert_eq!(a.iter().map(Vec::len).collect::<Vec<_>>(), vec![10, 20, 10]);
        assert!(a.iter().flatten().all(|&v| v == 2.5));
        let g = alpha_by_layer(&net, |l| 5f64.powi(l as i32));
        assert_eq!(g[0][0], 5.0);
        assert_eq!(g[1][0], 25.0);
        assert_eq!(g[2][0], 125.0);
    }

    #[test]
    fn embeds_respect_normalized_networks() {
        // identical net, once with normalization carried and once pre-folded:
        // same optimum either way
        let mut net = ReluNetwork::random(&[2, 4, 1], NetKind::Convexified { from_layer: 1 }, 17);
        net.input_norm = vec![(-2.0, 6.0), (1.0, 9.0)];
        net.output_norm = (-3.0, 12.0);
        let z = [1.5, 4.0];
        let (f, _) = net.forward(&z).unwrap();
        let folded = net.fold_normalization();

        for candidate in [&net, &folded] {
            let (mut m, inputs, out) = fixed_input_model(&z);
            embed_cvxd(&mut m, candidate, "", &inputs, out).unwrap();
            let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            assert!(
                (res.objective - f).abs() <= 1e-6 * (1.0 + f.abs()),
                "{} vs {f}",
                res.objective
            );
        }
    }
}
