//! Day-ahead flexibility bidding for an aggregator of price-responsive
//! prosumers.
//!
//! An aggregator offers `x_t` MWh of demand flexibility in hour `t` at the
//! market price `λᴹ_t` and must pay prosumers an incentive to actually shift
//! that volume. The prosumer pool responds to an incentive price along a
//! saturation curve ([`responsiveness`]); inverting it gives the incentive
//! needed for a target volume ([`incentive`]) and hence the total purchase
//! cost ([`purchase_cost`]). Activating flexibility now reduces what is
//! available later (the rebound matrix `A`), so the bidding problem couples
//! hours:
//!
//! ```text
//! max Σ_t λᴹ_t·x_t − λᴾ_t
//! s.t. x̃_t = x̄_t − Σ_{j<t} A_{tj}·x_j      (rebound)
//!      x_t ≤ (1−ε)·x̃_t                      (margin)
//!      λᴾ_t = surrogate cost of (x_t, x̃_t)  (embedded network or PWL)
//! ```
//!
//! The exact cost is nonlinear, so [`build_bidding_model`] splices in one of
//! the surrogates from [`crate::embed`] per timestep. After solving,
//! [`evaluate_solution`] recomputes the exact cost at the chosen bids —
//! realised profit is judged against the true curve, not the surrogate.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{
    alpha_by_layer, alpha_constant, build_pwl, embed_bigm, embed_cvxd, embed_hybrid, embed_pcar,
    embed_pctar, EmbedError, PwlSpec,
};
use crate::matrix::Matrix;
use crate::model::{ModelError, ObjSense, OptModel, Sense, SolveResult, VarKind};
use crate::nn::{ReluNetwork, DEFAULT_BOUNDS, FEASIBILITY_MARGIN};

/// Bids this close to zero are treated as "no activation" when recomputing
/// the exact cost, which is continuous at 0 but not differentiable.
pub const NUMERICAL_ZERO: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("bid {x} outside (0, {xt}): the required incentive is undefined")]
    BidDomain { x: f64, xt: f64 },
    #[error("instance: {0}")]
    BadInstance(String),
    #[error("price CSV: {0}")]
    BadCsv(String),
    #[error("need one network per timestep ({want}), got {got}")]
    NetCount { got: usize, want: usize },
    #[error("the chosen surrogate method needs a trained network")]
    NetsRequired,
    #[error("solution has no value for '{0}'")]
    MissingValue(String),
    #[error("unsupported instance format '{0}'")]
    BadFormat(String),
    #[error("malformed instance JSON: {0}")]
    BadJson(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Volume the prosumer pool shifts when offered the incentive price `li`:
/// `x̃ / (1 + e^{q − r·li})`. Saturates at the available volume `x̃` for
/// large incentives and never quite reaches 0 or `x̃` for finite ones.
pub fn responsiveness(xt: f64, q: f64, r: f64, li: f64) -> f64 {
    debug_assert!(xt >= 0.0 && r > 0.0);
    xt / (1.0 + (q - r * li).exp())
}

/// Incentive price that makes the pool shift exactly `x` of the available
/// `x̃`: `(q − ln(x̃/x − 1)) / r`. Defined only for `0 < x < x̃`.
pub fn incentive(x: f64, xt: f64, q: f64, r: f64) -> Result<f64, MarketError> {
    debug_assert!(r > 0.0);
    if !(x > 0.0 && x < xt) {
        return Err(MarketError::BidDomain { x, xt });
    }
    Ok((q - (xt / x - 1.0).ln()) / r)
}

/// Total cost of procuring `x` from the pool: `x · incentive(x, x̃, q, r)`.
/// Continuously extended with `purchase_cost(0, ·) = 0`; errors for
/// `x < 0` or `x ≥ x̃`, where no finite incentive produces the volume.
pub fn purchase_cost(x: f64, xt: f64, q: f64, r: f64) -> Result<f64, MarketError> {
    if x == 0.0 {
        return Ok(0.0);
    }
    incentive(x, xt, q, r).map(|li| x * li)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceCategory {
    Low,
    Medium,
    High,
}

impl PriceCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            PriceCategory::Low => "low",
            PriceCategory::Medium => "medium",
            PriceCategory::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<PriceCategory> {
        match s {
            "low" => Some(PriceCategory::Low),
            "medium" => Some(PriceCategory::Medium),
            "high" => Some(PriceCategory::High),
            _ => None,
        }
    }
}

/// One bidding scenario: market prices, available flexibility, the rebound
/// coupling, and the prosumer-pool shape parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    /// Number of hours T.
    pub horizon: usize,
    pub category: PriceCategory,
    /// Market price λᴹ per hour, DKK/MWh.
    pub prices: Vec<f64>,
    /// Maximum flexibility x̄ per hour before rebound, MWh.
    pub max_flex: Vec<f64>,
    /// Strictly lower-triangular T×T rebound matrix A: activating one MWh in
    /// hour j removes A[t][j] MWh from hour t's availability.
    pub rebound: Matrix,
    /// Pool shape parameter q per hour.
    pub q: Vec<f64>,
    /// Pool shape parameter r per hour.
    pub r: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    #[serde(flatten)]
    instance: MarketInstance,
}

const INSTANCE_FORMAT: &str = "market-instance-v1";

impl MarketInstance {
    pub fn validate(&self) -> Result<(), MarketError> {
        let t_len = self.horizon;
        let bad = |msg: String| Err(MarketError::BadInstance(msg));
        if t_len == 0 {
            return bad("horizon must be at least 1".into());
        }
        for (name, v) in [
            ("prices", &self.prices),
            ("max_flex", &self.max_flex),
            ("q", &self.q),
            ("r", &self.r),
        ] {
            if v.len() != t_len {
                return bad(format!("{name} has {} entries, expected {t_len}", v.len()));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return bad(format!("{name}[{i}] is not finite"));
            }
        }
        if let Some(i) = self.max_flex.iter().position(|&x| x < 0.0) {
            return bad(format!("max_flex[{i}] is negative"));
        }
        if let Some(i) = self.q.iter().position(|&x| x < 0.0) {
            return bad(format!("q[{i}] is negative"));
        }
        if let Some(i) = self.r.iter().position(|&x| x <= 0.0) {
            return bad(format!("r[{i}] must be positive"));
        }
        if self.rebound.rows() != t_len || self.rebound.cols() != t_len
            || !self.rebound.is_consistent()
        {
            return bad(format!(
                "rebound matrix is {}x{}, expected {t_len}x{t_len}",
                self.rebound.rows(),
                self.rebound.cols()
            ));
        }
        for i in 0..t_len {
            for j in 0..t_len {
                let a = self.rebound.get(i, j);
                if j >= i && a != 0.0 {
                    return bad(format!(
                        "rebound[{i}][{j}] = {a}; only entries strictly below the diagonal may be nonzero"
                    ));
                }
                if !(0.0..=1.0).contains(&a) {
                    return bad(format!("rebound[{i}][{j}] = {a} outside [0, 1]"));
                }
            }
        }
        for j in 0..t_len {
            let sum: f64 = (0..t_len).map(|i| self.rebound.get(i, j)).sum();
            if sum > 1.0 + 1e-12 {
                return bad(format!("rebound column {j} sums to {sum} > 1"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            format: INSTANCE_FORMAT.to_string(),
            instance: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<MarketInstance, MarketError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| MarketError::BadJson(e.to_string()))?;
        if file.format != INSTANCE_FORMAT {
            return Err(MarketError::BadFormat(file.format));
        }
        file.instance.validate()?;
        Ok(file.instance)
    }

    pub fn save(&self, path: &Path) -> Result<(), MarketError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<MarketInstance, MarketError> {
        MarketInstance::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Knobs for synthetic price generation. The low-category pool is
/// log-normal; the other categories scale it so the three pools sit orders
/// of magnitude apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCalibration {
    pub low_mu: f64,
    pub low_sigma: f64,
    pub medium_scale: f64,
    pub high_scale: f64,
}

impl Default for InstanceCalibration {
    /// Defaults put ~97% of low-category prices below 10 DKK/MWh.
    fn default() -> InstanceCalibration {
        InstanceCalibration {
            low_mu: 1.2,
            low_sigma: 0.6,
            medium_scale: 20.0,
            high_scale: 400.0,
        }
    }
}

/// Deterministic synthetic instance. The same seed draws the same underlying
/// randomness for every category; categories differ only in the price scale,
/// so cross-category comparisons are paired. Availability follows a
/// sinusoidal daily profile `a + b·sin(2πt/T + φ)` with `a > b`, the rebound
/// matrix has random strictly-lower-triangular entries rescaled to column
/// sums in [0.2, 0.8], and the pool parameters q, r cover the same ranges
/// the surrogate training data uses.
pub fn generate_instance(
    category: PriceCategory,
    horizon: usize,
    seed: u64,
    calibration: &InstanceCalibration,
) -> MarketInstance {
    assert!(horizon >= 1, "need at least one hour");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = match category {
        PriceCategory::Low => 1.0,
        PriceCategory::Medium => calibration.medium_scale,
        PriceCategory::High => calibration.high_scale,
    };
    let lognorm = LogNormal::new(calibration.low_mu, calibration.low_sigma)
        .expect("calibration sigma must be finite and non-negative");
    let prices: Vec<f64> = (0..horizon).map(|_| lognorm.sample(&mut rng) * scale).collect();

    let a = 4.0 + 2.0 * rng.gen::<f64>();
    let b = 1.0 + (3.5f64.min(a - 0.5) - 1.0) * rng.gen::<f64>();
    let phase = std::f64::consts::TAU * rng.gen::<f64>();
    let max_flex: Vec<f64> = (1..=horizon)
        .map(|t| a + b * (std::f64::consts::TAU * t as f64 / horizon as f64 + phase).sin())
        .collect();

    let mut rebound = Matrix::zeros(horizon, horizon);
    for t in 1..horizon {
        for j in 0..t {
            rebound.set(t, j, rng.gen::<f64>());
        }
    }
    for j in 0..horizon.saturating_sub(1) {
        let target = 0.2 + 0.6 * rng.gen::<f64>();
        let sum: f64 = (j + 1..horizon).map(|t| rebound.get(t, j)).sum();
        if sum > 0.0 {
            let factor = target / sum;
            for t in j + 1..horizon {
                rebound.set(t, j, rebound.get(t, j) * factor);
            }
        }
    }

    let (qlo, qhi) = DEFAULT_BOUNDS[2];
    let q: Vec<f64> = (0..horizon).map(|_| qlo + (qhi - qlo) * rng.gen::<f64>()).collect();
    let (rlo, rhi) = DEFAULT_BOUNDS[3];
    let r: Vec<f64> = (0..horizon).map(|_| rlo + (rhi - rlo) * rng.gen::<f64>()).collect();

    let instance = MarketInstance {
        horizon,
        category,
        prices,
        max_flex,
        rebound,
        q,
        r,
    };
    instance
        .validate()
        .expect("generated instances satisfy the instance invariants");
    instance
}

/// Parses a price CSV with header `scenario,hour,price_dkk_per_mwh` into
/// `(scenario, prices)` pairs sorted by scenario label. Each scenario must
/// cover hours 1..=T contiguously with no duplicates.
pub fn ingest_prices(csv: &str) -> Result<Vec<(String, Vec<f64>)>, MarketError> {
    let bad = |msg: String| Err(MarketError::BadCsv(msg));
    let mut lines = csv.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim_end_matches('\r'),
        None => return bad("empty input".into()),
    };
    if header != "scenario,hour,price_dkk_per_mwh" {
        return bad(format!(
            "header must be 'scenario,hour,price_dkk_per_mwh', got '{header}'"
        ));
    }
    let mut by_scenario: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
    for (idx, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return bad(format!("line {lineno}: expected 3 fields, got {}", fields.len()));
        }
        let scenario = fields[0].to_string();
        let hour: u32 = match fields[1].parse() {
            Ok(h) if h >= 1 => h,
            _ => return bad(format!("line {lineno}: hour '{}' is not a positive integer", fields[1])),
        };
        let price: f64 = match fields[2].parse::<f64>() {
            Ok(p) if p.is_finite() => p,
            _ => return bad(format!("line {lineno}: price '{}' is not a finite number", fields[2])),
        };
        if by_scenario.entry(scenario.clone()).or_default().insert(hour, price).is_some() {
            return bad(format!("duplicate entry for scenario '{scenario}', hour {hour}"));
        }
    }
    let mut out = Vec::with_capacity(by_scenario.len());
    for (scenario, hours) in by_scenario {
        let t_len = *hours.keys().last().expect("scenario maps are never empty");
        for h in 1..=t_len {
            if !hours.contains_key(&h) {
                return bad(format!("scenario '{scenario}' is missing hour {h}"));
            }
        }
        out.push((scenario, hours.into_values().collect()));
    }
    Ok(out)
}

/// A penalty configuration for the relaxation-based surrogates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltySetting {
    /// The same coefficient on every hidden neuron.
    Constant { value: f64 },
    /// `base^l` on every neuron of hidden layer `l` (1-based); with
    /// `inverse` the exponent is `−l`.
    Layered { base: f64, inverse: bool },
}

impl PenaltySetting {
    pub fn expand(&self, net: &ReluNetwork) -> Vec<Vec<f64>> {
        match *self {
            PenaltySetting::Constant { value } => alpha_constant(net, value),
            PenaltySetting::Layered { base, inverse } => alpha_by_layer(net, |l| {
                let e = if inverse { -(l as i32) } else { l as i32 };
                base.powi(e)
            }),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            PenaltySetting::Constant { value } => format!("{value}"),
            PenaltySetting::Layered { base, inverse } => {
                if inverse {
                    format!("{base}^-l")
                } else {
                    format!("{base}^l")
                }
            }
        }
    }
}

/// Which surrogate stands in for the exact purchase cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SurrogateMethod {
    /// Epigraph LP of a convexified network; exact at the optimum.
    CvxdLp,
    /// Penalized epigraph relaxation of an arbitrary network.
    Pcar { alpha: PenaltySetting },
    /// PCAR plus a triangular cap per neuron.
    Pctar { alpha: PenaltySetting, lb: f64, ub: f64 },
    /// Exact big-M MIP encoding.
    BigM,
    /// Big-M below layer k, epigraph from layer k on.
    Hybrid { k: usize },
    /// Piecewise-linear interpolation of the exact cost; no network.
    Pwl { pieces: usize },
}

impl SurrogateMethod {
    /// Stable label used in report tables.
    pub fn label(&self) -> String {
        match self {
            SurrogateMethod::CvxdLp => "cvxd-lp".to_string(),
            SurrogateMethod::Pcar { alpha } => format!("pcar({})", alpha.label()),
            SurrogateMethod::Pctar { alpha, lb, ub } => {
                format!("pctar({},{lb},{ub})", alpha.label())
            }
            SurrogateMethod::BigM => "bigm".to_string(),
            SurrogateMethod::Hybrid { k } => format!("hybrid({k})"),
            SurrogateMethod::Pwl { pieces } => format!("pwl({pieces})"),
        }
    }

    /// Whether the built model will contain binary variables.
    pub fn needs_mip(&self) -> bool {
        matches!(
            self,
            SurrogateMethod::BigM | SurrogateMethod::Pwl { .. }
        ) || matches!(self, SurrogateMethod::Hybrid { k } if *k > 1)
    }

    pub fn needs_net(&self) -> bool {
        !matches!(self, SurrogateMethod::Pwl { .. })
    }
}

/// Trained networks for the model builder: one shared across all timesteps
/// or one per timestep.
#[derive(Clone, Copy)]
pub enum Nets<'a> {
    Shared(&'a ReluNetwork),
    PerStep(&'a [ReluNetwork]),
}

impl<'a> Nets<'a> {
    fn for_step(&self, t0: usize) -> &'a ReluNetwork {
        match self {
            Nets::Shared(net) => net,
            Nets::PerStep(nets) => &nets[t0],
        }
    }

    fn check(&self, horizon: usize) -> Result<(), MarketError> {
        if let Nets::PerStep(nets) = self {
            if nets.len() != horizon {
                return Err(MarketError::NetCount {
                    got: nets.len(),
                    want: horizon,
                });
            }
        }
        Ok(())
    }
}

/// Assembles the bidding model for one instance and surrogate method.
///
/// Per hour `t` (1-based names): variables `x{t}`, `xtilde{t}` ≥ 0 and
/// `lambdap{t}` ≥ 0; rows `rebound{t}` (availability equality) and
/// `margin{t}` (`x ≤ (1−ε)·x̃`); plus the surrogate block under prefix
/// `t{t}_`. Network surrogates see the inputs `(x_t, x̃_t, q_t, r_t)` with
/// `q{t}`, `r{t}` added as variables fixed to the instance values, so one
/// trained network serves every hour. Penalty terms from the relaxation
/// surrogates are subtracted from the (maximization) objective here.
///
/// The cost variable stays non-negative even where a network predicts a
/// negative cost: the exact encodings bind a free intermediate `yhat{t}`
/// and couple `lambdap{t} ≥ yhat{t}`, so the objective settles the cost at
/// `max(0, prediction)` instead of turning the model infeasible.
pub fn build_bidding_model(
    instance: &MarketInstance,
    method: &SurrogateMethod,
    nets: Option<Nets<'_>>,
) -> Result<OptModel, MarketError> {
    instance.validate()?;
    if let Some(n) = &nets {
        n.check(instance.horizon)?;
    }
    if method.needs_net() && nets.is_none() {
        return Err(MarketError::NetsRequired);
    }
    let mut m = OptModel::new(ObjSense::Maximize);
    let mut xs = Vec::with_capacity(instance.horizon);
    for t in 1..=instance.horizon {
        let i = t - 1;
        let x = m.add_variable(&format!("x{t}"), 0.0, f64::INFINITY, VarKind::Continuous)?;
        let xt = m.add_variable(&format!("xtilde{t}"), 0.0, f64::INFINITY, VarKind::Continuous)?;
        let lp = m.add_variable(&format!("lambdap{t}"), 0.0, f64::INFINITY, VarKind::Continuous)?;
        m.add_objective_term(x, instance.prices[i])?;
        m.add_objective_term(lp, -1.0)?;

        let mut reb = vec![(xt, 1.0)];
        for (j, &xj) in xs.iter().enumerate() {
            let a = instance.rebound.get(i, j);
            if a != 0.0 {
                reb.push((xj, a));
            }
        }
        m.add_constraint(&format!("rebound{t}"), &reb, Sense::Eq, instance.max_flex[i])?;
        m.add_constraint(
            &format!("margin{t}"),
            &[(x, 1.0), (xt, -(1.0 - FEASIBILITY_MARGIN))],
            Sense::Le,
            0.0,
        )?;

        let prefix = format!("t{t}_");
        if let SurrogateMethod::Pwl { pieces } = method {
            let spec = PwlSpec::tabulate(
                *pieces,
                FEASIBILITY_MARGIN,
                (0.0, instance.max_flex[i]),
                instance.q[i],
                instance.r[i],
                |x, xt, q, r| purchase_cost(x, xt, q, r).unwrap_or(f64::NAN),
            )?;
            build_pwl(&mut m, &spec, &prefix, x, xt, lp)?;
        } else {
            let net = nets.as_ref().expect("checked above").for_step(i);
            let qv = m.add_variable(
                &format!("q{t}"),
                instance.q[i],
                instance.q[i],
                VarKind::Continuous,
            )?;
            let rv = m.add_variable(
                &format!("r{t}"),
                instance.r[i],
                instance.r[i],
                VarKind::Continuous,
            )?;
            let inputs = [x, xt, qv, rv];
            let input_box = [
                (0.0, instance.max_flex[i]),
                (0.0, instance.max_flex[i]),
                (instance.q[i], instance.q[i]),
                (instance.r[i], instance.r[i]),
            ];
            let penalties = match method {
                SurrogateMethod::CvxdLp => {
                    embed_cvxd(&mut m, net, &prefix, &inputs, lp)?;
                    Vec::new()
                }
                SurrogateMethod::Pcar { alpha } => {
                    embed_pcar(&mut m, net, &alpha.expand(net), &prefix, &inputs, lp)?
                }
                SurrogateMethod::Pctar { alpha, lb, ub } => embed_pctar(
                    &mut m,
                    net,
                    &alpha.expand(net),
                    *lb,
                    *ub,
                    &prefix,
                    &inputs,
                    lp,
                )?,
                // The exact encodings pin their output variable by equality, and a
                // network may predict a negative cost on the whole feasible box.
                // Binding a free yhat and flooring lambdap at it keeps the model
                // feasible; maximization settles lambdap at max(0, yhat).
                SurrogateMethod::BigM => {
                    let yhat = m.add_variable(
                        &format!("yhat{t}"),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                        VarKind::Continuous,
                    )?;
                    embed_bigm(&mut m, net, &input_box, &prefix, &inputs, yhat)?;
                    m.add_constraint(
                        &format!("floor{t}"),
                        &[(lp, 1.0), (yhat, -1.0)],
                        Sense::Ge,
                        0.0,
                    )?;
                    Vec::new()
                }
                SurrogateMethod::Hybrid { k } => {
                    let yhat = m.add_variable(
                        &format!("yhat{t}"),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                        VarKind::Continuous,
                    )?;
                    embed_hybrid(&mut m, net, *k, &input_box, &prefix, &inputs, yhat)?;
                    m.add_constraint(
                        &format!("floor{t}"),
                        &[(lp, 1.0), (yhat, -1.0)],
                        Sense::Ge,
                        0.0,
                    )?;
                    Vec::new()
                }
                SurrogateMethod::Pwl { .. } => unreachable!("handled above"),
            };
            for (v, a) in penalties {
                m.add_objective_term(v, -a)?;
            }
        }
        xs.push(x);
    }
    Ok(m)
}

/// Post-solve scoring of one bidding solution against the exact cost curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    /// Bid x* per hour.
    pub bids: Vec<f64>,
    /// Updated availability x̃* per hour.
    pub avail: Vec<f64>,
    /// Surrogate cost λᴾ per hour as the model saw it.
    pub surrogate_cost: Vec<f64>,
    /// Exact cost recomputed at (x*, x̃*) per hour.
    pub actual_cost: Vec<f64>,
    /// Σ λᴹ·x* − actual cost.
    pub profit: f64,
    /// Root-mean-square surrogate-vs-actual cost error across hours.
    pub rmse: f64,
    pub wall_time_s: f64,
    pub gap: f64,
    pub status: String,
    /// Domain clamps applied during evaluation, if any.
    pub warnings: Vec<String>,
}

pub const DETAIL_HEADER: &str = "method,scenario,t,x,xtilde,lambdaP_surrogate,lambdaP_actual";
pub const SUMMARY_HEADER: &str = "method,scenario,profit,rmse,walltime,gap,status";

impl EvaluationReport {
    /// One detail CSV row per hour, newline-terminated, no header.
    pub fn detail_rows(&self, scenario: &str) -> String {
        let mut out = String::new();
        for t in 0..self.bids.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.method,
                scenario,
                t + 1,
                self.bids[t],
                self.avail[t],
                self.surrogate_cost[t],
                self.actual_cost[t]
            ));
        }
        out
    }

    /// One summary CSV row, newline-terminated. `walltime: None` leaves the
    /// column empty so reruns stay byte-identical.
    pub fn summary_row(&self, scenario: &str, walltime: Option<f64>) -> String {
        let wt = walltime.map(|w| w.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{wt},{},{}\n",
            self.method, scenario, self.profit, self.rmse, self.gap, self.status
        )
    }
}

/// Reads the solved bids back, recomputes the exact purchase cost at each
/// hour, and scores realised profit and surrogate error. Bids at or above
/// the available volume (possible only through solver tolerance) are clamped
/// to the margin with a recorded warning; bids below [`NUMERICAL_ZERO`]
/// cost nothing.
pub fn evaluate_solution(
    instance: &MarketInstance,
    result: &SolveResult,
    method: &str,
) -> Result<EvaluationReport, MarketError> {
    instance.validate()?;
    let t_len = instance.horizon;
    let mut bids = Vec::with_capacity(t_len);
    let mut avail = Vec::with_capacity(t_len);
    let mut surrogate_cost = Vec::with_capacity(t_len);
    let mut actual_cost = Vec::with_capacity(t_len);
    let mut warnings = Vec::new();
    let mut profit = 0.0;
    let mut sq_err = 0.0;
    for t in 1..=t_len {
        let value = |name: String| {
            result
                .value(&name)
                .ok_or(MarketError::MissingValue(name))
        };
        let x = value(format!("x{t}"))?;
        let xt = value(format!("xtilde{t}"))?;
        let lp = value(format!("lambdap{t}"))?;
        let i = t - 1;
        let mut xe = x;
        if xe >= xt {
            if xe > xt + NUMERICAL_ZERO {
                warnings.push(format!(
                    "hour {t}: bid {x} exceeds available {xt}; clamped to the margin for evaluation"
                ));
            }
            xe = (1.0 - FEASIBILITY_MARGIN) * xt;
        }
        let actual = if xe <= NUMERICAL_ZERO {
            0.0
        } else {
            purchase_cost(xe, xt, instance.q[i], instance.r[i])
                .expect("clamped bid lies inside the cost domain")
        };
        profit += instance.prices[i] * x - actual;
        sq_err += (lp - actual) * (lp - actual);
        bids.push(x);
        avail.push(xt);
        surrogate_cost.push(lp);
        actual_cost.push(actual);
    }
    Ok(EvaluationReport {
        method: method.to_string(),
        bids,
        avail,
        surrogate_cost,
        actual_cost,
        profit,
        rmse: (sq_err / t_len as f64).sqrt(),
        wall_time_s: result.wall_time_s,
        gap: result.gap,
        status: result.status.as_str().to_string(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branch_bound::{solve_mip, BBOptions};
    use crate::model::SolveStatus;
    use crate::nn::NetKind;
    use crate::simplex::{solve_lp, SimplexOptions};
    use std::collections::BTreeMap;

    #[test]
    fn responsiveness_hand_values() {
        let (xt, q, r) = (3.0, 2.0, 0.5);
        assert!((responsiveness(xt, q, r, q / r) - xt / 2.0).abs() < 1e-12);
        let near_sat = responsiveness(xt, q, r, q / r + 50.0 / r);
        assert!((near_sat - xt).abs() < 1e-9);
        assert_eq!(responsiveness(0.0, q, r, 1.0), 0.0);
    }

    #[test]
    fn incentive_hand_values() {
        assert!((incentive(1.0, 2.0, 3.0, 2.0).unwrap() - 1.5).abs() < 1e-12);
        let li = incentive(0.75, 1.0, 2.0, 1.0).unwrap();
        assert!((li - (2.0 + 3.0f64.ln())).abs() < 1e-12);
        assert!((li - 3.0986).abs() < 1e-4);
        assert!(matches!(
            incentive(1.0, 1.0, 2.0, 1.0),
            Err(MarketError::BidDomain { .. })
        ));
        assert!(matches!(
            incentive(0.0, 1.0, 2.0, 1.0),
            Err(MarketError::BidDomain { .. })
        ));
    }

    #[test]
    fn purchase_cost_hand_values() {
        assert!((purchase_cost(1.0, 2.0, 3.0, 2.0).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(purchase_cost(0.0, 2.0, 3.0, 2.0).unwrap(), 0.0);
        let c = purchase_cost(0.75, 1.0, 2.0, 1.0).unwrap();
        assert!((c - 0.75 * (2.0 + 3.0f64.ln())).abs() < 1e-12);
        assert!((c - 2.3240).abs() < 1e-4);
        assert!(matches!(
            purchase_cost(2.0, 2.0, 3.0, 2.0),
            Err(MarketError::BidDomain { .. })
        ));
        assert!(matches!(
            purchase_cost(-0.1, 2.0, 3.0, 2.0),
            Err(MarketError::BidDomain { .. })
        ));
    }

    #[test]
    fn half_volume_cost_identity() {
        for &(xt, q, r) in &[(1.0, 1.0, 0.5), (4.0, 8.0, 5.0), (9.5, 3.3, 1.7)] {
            let c = purchase_cost(xt / 2.0, xt, q, r).unwrap();
            assert!((c - xt * q / (2.0 * r)).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn incentive_responsiveness_round_trip() {
        let mut worst = 0.0f64;
        for xi in 1..20 {
            let x_frac = xi as f64 / 20.0;
            for &xt in &[0.5, 2.0, 9.5] {
                for &q in &[1.0, 4.5, 8.0] {
                    for &r in &[0.5, 2.0, 5.0] {
                        let x = x_frac * xt;
                        let li = incentive(x, xt, q, r).unwrap();
                        let back = responsiveness(xt, q, r, li);
                        worst = worst.max((back - x).abs());
                    }
                }
            }
        }
        assert!(worst <= 1e-9, "worst round-trip error {worst}");
    }

    #[test]
    fn cost_increases_beyond_the_free_response_volume() {
        // The exact cost is briefly negative and decreasing for bids below
        // the volume prosumers shift at zero incentive, so strict growth is
        // checked from 15% of availability upward.
        for &q in &[1.0, 2.0, 5.0, 8.0] {
            for &r in &[0.5, 2.0, 5.0] {
                for &xt in &[0.5, 3.0, 9.5] {
                    let mut prev = f64::NEG_INFINITY;
                    for i in 3..=19 {
                        let x = xt * i as f64 / 20.0;
                        let c = purchase_cost(x, xt, q, r).unwrap();
                        assert!(
                            c > prev,
                            "cost not increasing at x={x} (xt={xt}, q={q}, r={r})"
                        );
                        prev = c;
                    }
                }
            }
        }
    }

    #[test]
    fn generated_instances_are_deterministic_and_valid() {
        let cal = InstanceCalibration::default();
        let a = generate_instance(PriceCategory::Low, 24, 7, &cal);
        let b = generate_instance(PriceCategory::Low, 24, 7, &cal);
        assert_eq!(a, b);
        a.validate().unwrap();
        assert!(a.max_flex.iter().all(|&x| x > 0.0));
        assert!(a.q.iter().all(|&v| (1.0..=8.0).contains(&v)));
        assert!(a.r.iter().all(|&v| (0.5..=5.0).contains(&v)));
        // same seed, different category: identical draws, scaled prices
        let m = generate_instance(PriceCategory::Medium, 24, 7, &cal);
        for t in 0..24 {
            assert_eq!(m.prices[t], a.prices[t] * 20.0);
        }
        assert_eq!(m.rebound, a.rebound);
    }

    #[test]
    fn rebound_matrix_invariants() {
        let inst = generate_instance(PriceCategory::Low, 12, 3, &InstanceCalibration::default());
        for i in 0..12 {
            for j in i..12 {
                assert_eq!(inst.rebound.get(i, j), 0.0);
            }
        }
        for j in 0..12 {
            let sum: f64 = (0..12).map(|i| inst.rebound.get(i, j)).sum();
            assert!(sum <= 1.0);
            if j < 11 {
                assert!(sum >= 0.2 - 1e-12 && sum <= 0.8 + 1e-12);
            }
        }
    }

    #[test]
    fn low_prices_mostly_under_ten() {
        let inst = generate_instance(PriceCategory::Low, 2000, 11, &InstanceCalibration::default());
        let below = inst.prices.iter().filter(|&&p| p < 10.0).count();
        assert!(
            below as f64 >= 0.9 * 2000.0,
            "only {below}/2000 low prices under 10"
        );
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = generate_instance(PriceCategory::High, 6, 42, &InstanceCalibration::default());
        let back = MarketInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
        let mut doctored = inst.to_json().replace(INSTANCE_FORMAT, "market-instance-v9");
        assert!(matches!(
            MarketInstance::from_json(&doctored),
            Err(MarketError::BadFormat(_))
        ));
        doctored = inst.to_json().replace("\"horizon\": 6", "\"horizon\": 7");
        assert!(matches!(
            MarketInstance::from_json(&doctored),
            Err(MarketError::BadInstance(_))
        ));
    }

    #[test]
    fn price_csv_round_trip_and_errors() {
        let mut csv = String::from("scenario,hour,price_dkk_per_mwh\n");
        for s in ["a", "b"] {
            for h in 1..=24 {
                csv.push_str(&format!("{s},{h},{}.5\n", h));
            }
        }
        let parsed = ingest_prices(&csv).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0, "a");
        assert_eq!(parsed[0].1.len(), 24);
        assert_eq!(parsed[1].1[23], 24.5);

        let missing = "scenario,hour,price_dkk_per_mwh\ns1,1,5\ns1,3,5\n";
        match ingest_prices(missing) {
            Err(MarketError::BadCsv(msg)) => {
                assert!(msg.contains("s1") && msg.contains("hour 2"), "{msg}");
            }
            other => panic!("got {other:?}"),
        }
        let dup = "scenario,hour,price_dkk_per_mwh\ns1,1,5\ns1,1,6\n";
        assert!(matches!(ingest_prices(dup), Err(MarketError::BadCsv(_))));
        let bad_price = "scenario,hour,price_dkk_per_mwh\ns1,1,abc\n";
        assert!(matches!(ingest_prices(bad_price), Err(MarketError::BadCsv(_))));
        let bad_header = "scenario,hour,price\ns1,1,5\n";
        assert!(matches!(ingest_prices(bad_header), Err(MarketError::BadCsv(_))));
    }

    fn tiny_instance(horizon: usize, price: f64) -> MarketInstance {
        let mut rebound = Matrix::zeros(horizon, horizon);
        for t in 1..horizon {
            rebound.set(t, t - 1, 0.3);
        }
        MarketInstance {
            horizon,
            category: PriceCategory::Low,
            prices: vec![price; horizon],
            max_flex: vec![5.0; horizon],
            rebound,
            q: vec![3.0; horizon],
            r: vec![2.0; horizon],
        }
    }

    #[test]
    fn bidding_model_variable_counts() {
        let inst = generate_instance(PriceCategory::Low, 24, 5, &InstanceCalibration::default());
        let net = ReluNetwork::random(&[4, 10, 20, 10, 1], NetKind::Convexified { from_layer: 1 }, 1);
        let m = build_bidding_model(&inst, &SurrogateMethod::CvxdLp, Some(Nets::Shared(&net)))
            .unwrap();
        // per hour: x, xtilde, lambdap, the fixed q and r, and 40 neurons
        assert_eq!(m.num_vars(), 24 * 45);
        assert!(m.binary_vars().is_empty());

        let uc = ReluNetwork::random(&[4, 10, 20, 10, 1], NetKind::Unconstrained, 1);
        let mip = build_bidding_model(&inst, &SurrogateMethod::BigM, Some(Nets::Shared(&uc)))
            .unwrap();
        assert!(mip.binary_vars().len() <= 24 * 40);
        assert!(!mip.binary_vars().is_empty());
    }

    #[test]
    fn bidding_model_rejects_mismatches() {
        let inst = tiny_instance(3, 5.0);
        let uc = ReluNetwork::random(&[4, 6, 1], NetKind::Unconstrained, 2);
        match build_bidding_model(&inst, &SurrogateMethod::CvxdLp, Some(Nets::Shared(&uc))) {
            Err(MarketError::Embed(EmbedError::WrongKind { .. })) => {}
            other => panic!("got {other:?}"),
        }
        let cv = ReluNetwork::random(&[4, 6, 1], NetKind::Convexified { from_layer: 1 }, 2);
        match build_bidding_model(&inst, &SurrogateMethod::CvxdLp, Some(Nets::PerStep(&[cv]))) {
            Err(MarketError::NetCount { got: 1, want: 3 }) => {}
            other => panic!("got {other:?}"),
        }
        match build_bidding_model(&inst, &SurrogateMethod::CvxdLp, None) {
            Err(MarketError::NetsRequired) => {}
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn zero_prices_make_bidding_worthless() {
        let inst = tiny_instance(2, 0.0);
        let m = build_bidding_model(&inst, &SurrogateMethod::Pwl { pieces: 3 }, None).unwrap();
        let res = solve_mip(&m, &BBOptions { gap_tol: 1e-9, ..Default::default() }).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!(res.objective.abs() <= 1e-7, "profit {}", res.objective);
        let report = evaluate_solution(&inst, &res, "pwl(3)").unwrap();
        assert!(report.surrogate_cost.iter().all(|&c| c.abs() <= 1e-7));
    }

    #[test]
    fn exact_encodings_floor_negative_predictions_at_zero() {
        // A network that predicts a negative cost everywhere must not make
        // the model infeasible: the payment floors at zero instead.
        let inst = tiny_instance(2, 6.0);
        let mut net = ReluNetwork::random(&[4, 3, 1], NetKind::Unconstrained, 7);
        *net.weights.last_mut().unwrap() = Matrix::zeros(3, 1);
        net.biases.last_mut().unwrap()[0] = -50.0;
        let m = build_bidding_model(&inst, &SurrogateMethod::BigM, Some(Nets::Shared(&net)))
            .unwrap();
        let res = solve_mip(&m, &BBOptions { gap_tol: 1e-9, ..Default::default() }).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        for t in 1..=2 {
            let yhat = res.value(&format!("yhat{t}")).unwrap();
            assert!((yhat + 50.0).abs() <= 1e-6, "yhat{t} = {yhat}");
            let lp = res.value(&format!("lambdap{t}")).unwrap();
            assert!(lp.abs() <= 1e-7, "lambdap{t} = {lp}");
        }
        // with the surrogate cost floored at 0, revenue alone drives the bids
        assert!(res.objective > 0.0);
    }

    #[test]
    fn solved_bids_respect_rebound_feasibility() {
        let inst = tiny_instance(3, 8.0);
        let net = ReluNetwork::random(&[4, 5, 1], NetKind::Convexified { from_layer: 1 }, 3);
        let m = build_bidding_model(&inst, &SurrogateMethod::CvxdLp, Some(Nets::Shared(&net)))
            .unwrap();
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        for t in 1..=3 {
            let xt = res.value(&format!("xtilde{t}")).unwrap();
            let x = res.value(&format!("x{t}")).unwrap();
            assert!(xt <= 5.0 + 1e-9);
            assert!(x <= (1.0 - FEASIBILITY_MARGIN) * xt + 1e-9);
            assert!(x >= -1e-9);
        }
    }

    #[test]
    fn objective_matches_revenue_minus_costs_and_penalties() {
        let inst = tiny_instance(2, 6.0);
        let net = ReluNetwork::random(&[4, 5, 1], NetKind::Convexified { from_layer: 1 }, 4);
        let m = build_bidding_model(&inst, &SurrogateMethod::CvxdLp, Some(Nets::Shared(&net)))
            .unwrap();
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        let mut recomputed = 0.0;
        for t in 1..=2 {
            recomputed += inst.prices[t - 1] * res.value(&format!("x{t}")).unwrap()
                - res.value(&format!("lambdap{t}")).unwrap();
        }
        assert!((res.objective - recomputed).abs() <= 1e-7);

        let uc = ReluNetwork::random(&[4, 5, 1], NetKind::Unconstrained, 4);
        let alpha = PenaltySetting::Constant { value: 10.0 };
        let m2 = build_bidding_model(
            &inst,
            &SurrogateMethod::Pcar { alpha },
            Some(Nets::Shared(&uc)),
        )
        .unwrap();
        let res2 = solve_lp(&m2, &SimplexOptions::default()).unwrap();
        assert_eq!(res2.status, SolveStatus::Optimal);
        let mut recomputed2 = 0.0;
        for t in 1..=2 {
            recomputed2 += inst.prices[t - 1] * res2.value(&format!("x{t}")).unwrap()
                - res2.value(&format!("lambdap{t}")).unwrap();
            for j in 0..5 {
                recomputed2 -= 10.0 * res2.value(&format!("t{t}_h1_{j}")).unwrap();
            }
        }
        assert!((res2.objective - recomputed2).abs() <= 1e-7);
    }

    #[test]
    fn cvxd_model_cost_matches_network_forward_pass() {
        let inst = tiny_instance(2, 7.0);
        let net = ReluNetwork::random(&[4, 6, 4, 1], NetKind::Convexified { from_layer: 1 }, 6);
        let m = build_bidding_model(&inst, &SurrogateMethod::CvxdLp, Some(Nets::Shared(&net)))
            .unwrap();
        let res = solve_lp(&m, &SimplexOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        for t in 1..=2 {
            let z = [
                res.value(&format!("x{t}")).unwrap(),
                res.value(&format!("xtilde{t}")).unwrap(),
                inst.q[t - 1],
                inst.r[t - 1],
            ];
            let (f, _) = net.forward(&z).unwrap();
            let lp = res.value(&format!("lambdap{t}")).unwrap();
            assert!(
                (lp - f).abs() <= 1e-5 * (1.0 + f.abs()),
                "hour {t}: model {lp} vs forward {f}"
            );
        }
    }

    fn fabricated_result(values: &[(&str, f64)]) -> SolveResult {
        SolveResult {
            status: SolveStatus::Optimal,
            objective: 0.0,
            best_bound: 0.0,
            gap: 0.0,
            primal: values
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect::<BTreeMap<_, _>>(),
            simplex_iterations: 0,
            bb_nodes: 0,
            wall_time_s: 0.25,
            certificate: None,
            notes: Vec::new(),
        }
    }

    #[test]
    fn evaluation_hand_case() {
        let inst = MarketInstance {
            horizon: 1,
            category: PriceCategory::Low,
            prices: vec![5.0],
            max_flex: vec![2.0],
            rebound: Matrix::zeros(1, 1),
            q: vec![3.0],
            r: vec![2.0],
        };
        let res = fabricated_result(&[("x1", 1.0), ("xtilde1", 2.0), ("lambdap1", 1.2)]);
        let rep = evaluate_solution(&inst, &res, "test").unwrap();
        assert!((rep.actual_cost[0] - 1.5).abs() < 1e-12);
        assert!((rep.profit - 3.5).abs() < 1e-12);
        assert!((rep.rmse - 0.3).abs() < 1e-12);
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn evaluation_zero_bids_and_exact_surrogates() {
        let inst = tiny_instance(2, 5.0);
        let res = fabricated_result(&[
            ("x1", 0.0),
            ("xtilde1", 5.0),
            ("lambdap1", 0.4),
            ("x2", 0.0),
            ("xtilde2", 5.0),
            ("lambdap2", 0.3),
        ]);
        let rep = evaluate_solution(&inst, &res, "test").unwrap();
        assert_eq!(rep.profit, 0.0);
        let rms = ((0.4f64 * 0.4 + 0.3 * 0.3) / 2.0).sqrt();
        assert!((rep.rmse - rms).abs() < 1e-12);

        let exact = purchase_cost(1.0, 5.0, 3.0, 2.0).unwrap();
        let res2 = fabricated_result(&[
            ("x1", 1.0),
            ("xtilde1", 5.0),
            ("lambdap1", exact),
            ("x2", 1.0),
            ("xtilde2", 4.7),
            ("lambdap2", purchase_cost(1.0, 4.7, 3.0, 2.0).unwrap()),
        ]);
        let rep2 = evaluate_solution(&inst, &res2, "test").unwrap();
        assert_eq!(rep2.rmse, 0.0);
    }

    #[test]
    fn evaluation_clamps_out_of_domain_bids() {
        let inst = tiny_instance(1, 5.0);
        let res = fabricated_result(&[("x1", 5.2), ("xtilde1", 5.0), ("lambdap1", 9.0)]);
        let rep = evaluate_solution(&inst, &res, "test").unwrap();
        assert_eq!(rep.warnings.len(), 1);
        let clamped = purchase_cost((1.0 - FEASIBILITY_MARGIN) * 5.0, 5.0, 3.0, 2.0).unwrap();
        assert!((rep.actual_cost[0] - clamped).abs() < 1e-12);
    }

    #[test]
    fn evaluation_requires_all_values() {
        let inst = tiny_instance(1, 5.0);
        let res = fabricated_result(&[("x1", 1.0), ("xtilde1", 5.0)]);
        match evaluate_solution(&inst, &res, "test") {
            Err(MarketError::MissingValue(name)) => assert_eq!(name, "lambdap1"),
            other => panic!("got {other:?}"),
        }
    }

    #[test]
    fn report_csv_shapes() {
        let inst = tiny_instance(2, 5.0);
        let res = fabricated_result(&[
            ("x1", 1.0),
            ("xtilde1", 5.0),
            ("lambdap1", 1.0),
            ("x2", 0.0),
            ("xtilde2", 4.7),
            ("lambdap2", 0.0),
        ]);
        let rep = evaluate_solution(&inst, &res, "bigm").unwrap();
        let detail = rep.detail_rows("s1");
        assert_eq!(detail.lines().count(), 2);
        assert!(detail.starts_with("bigm,s1,1,1,5,"));
        let with_time = rep.summary_row("s1", Some(0.25));
        assert!(with_time.contains(",0.25,"));
        let without = rep.summary_row("s1", None);
        assert!(without.contains(",,"));
        assert!(without.ends_with("optimal\n"));
    }

    #[test]
    fn penalty_settings_expand_and_label() {
        let net = ReluNetwork::random(&[4, 3, 2, 1], NetKind::Unconstrained, 0);
        let c = PenaltySetting::Constant { value: 0.01 };
        assert_eq!(c.label(), "0.01");
        assert_eq!(c.expand(&net), vec![vec![0.01; 3], vec![0.01; 2]]);
        let l = PenaltySetting::Layered { base: 5.0, inverse: false };
        assert_eq!(l.label(), "5^l");
        assert_eq!(l.expand(&net), vec![vec![5.0; 3], vec![25.0; 2]]);
        let li = PenaltySetting::Layered { base: 2.0, inverse: true };
        assert_eq!(li.label(), "2^-l");
        assert_eq!(li.expand(&net), vec![vec![0.5; 3], vec![0.25; 2]]);
        assert_eq!(
            SurrogateMethod::Pctar { alpha: li, lb: -10.0, ub: 10.0 }.label(),
            "pctar(2^-l,-10,10)"
        );
        assert!(SurrogateMethod::Hybrid { k: 2 }.needs_mip());
        assert!(!SurrogateMethod::Hybrid { k: 1 }.needs_mip());
        assert!(!SurrogateMethod::Pwl { pieces: 4 }.needs_net());
    }
}
