//! Experiment harness: method comparison across price categories, penalty
//! sweeps, and architecture sweeps, with CSV/JSON reports.
//!
//! A JSON [`ExperimentPlan`] pins every input — scenarios, methods,
//! architectures, training and solver settings, and the master seed — so all
//! emitted tables are byte-stable across reruns. Wall times are measured but
//! only written to the reports when `record_walltime` is set, keeping the
//! default outputs diffable. Solver trouble in one cell is recorded in that
//! cell's row; the surrounding sweep always completes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branch_bound::{solve_mip, BBOptions};
use crate::market::{
    build_bidding_model, evaluate_solution, generate_instance, ingest_prices, purchase_cost,
    EvaluationReport, InstanceCalibration, MarketError, MarketInstance, Nets, PenaltySetting,
    PriceCategory, SurrogateMethod, DETAIL_HEADER,
};
use crate::nn::{
    fit, make_dataset, DataError, Dataset, NetError, NetKind, ReluNetwork, TrainConfig,
    TrainError, TrainReport, DEFAULT_BOUNDS, FEASIBILITY_MARGIN,
};

pub const PLAN_FORMAT: &str = "experiment-plan-v1";
pub const BENCH_FORMAT: &str = "bench-summary-v1";
pub const PENALTY_FORMAT: &str = "penalty-sweep-v1";
pub const ARCH_FORMAT: &str = "architecture-sweep-v1";

/// Hidden-layer sizes used throughout as the reference architecture.
pub const BASELINE_ARCH: [usize; 3] = [10, 20, 10];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Surrogate training protocol. One seed drives sampling, initialization,
/// and shuffling, so two networks trained with the same settings see
/// identical data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    pub n_data: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub split: f64,
    pub seed: u64,
}

impl TrainingSettings {
    /// The optimizer configuration these settings describe.
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            split: self.split,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

/// Desk-scale protocol: a tenth of the full-size dataset with enough epochs
/// for the surrogate error to flatten, sized to keep a whole sweep in the
/// minutes range.
pub fn desk_scale_training() -> TrainingSettings {
    TrainingSettings {
        n_data: 30_000,
        epochs: 300,
        learning_rate: 1e-4,
        batch_size: 1000,
        split: 0.8,
        seed: 7,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub time_limit_s: f64,
    pub gap_tol: f64,
}

impl SolverSettings {
    fn bb_options(&self) -> BBOptions {
        BBOptions {
            time_limit_s: self.time_limit_s,
            gap_tol: self.gap_tol,
            ..BBOptions::default()
        }
    }
}

/// Where the scenarios come from: synthesized per category, or market
/// prices ingested from a CSV with everything else synthesized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ScenarioSet {
    Generated {
        categories: Vec<PriceCategory>,
        per_category: usize,
        horizon: usize,
    },
    Ingested {
        prices_csv: String,
        category: PriceCategory,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub format: String,
    pub seed: u64,
    pub scenarios: ScenarioSet,
    pub methods: Vec<SurrogateMethod>,
    /// Hidden-layer size lists; the first entry is the architecture used by
    /// `run_benchmark` and `penalty_sweep`, `architecture_sweep` uses all.
    pub architectures: Vec<Vec<usize>>,
    #[serde(default = "default_penalty_grid")]
    pub penalty_grid: Vec<PenaltySetting>,
    pub training: TrainingSettings,
    pub solver: SolverSettings,
    #[serde(default)]
    pub record_walltime: bool,
    #[serde(default)]
    pub calibration: InstanceCalibration,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Plan(msg));
        if self.format != PLAN_FORMAT {
            return bad(format!("unsupported format '{}'", self.format));
        }
        match &self.scenarios {
            ScenarioSet::Generated { categories, per_category, horizon } => {
                if categories.is_empty() {
                    return bad("scenarios.categories must not be empty".into());
                }
                let mut seen = Vec::new();
                for c in categories {
                    if seen.contains(c) {
                        return bad(format!("scenarios.categories repeats '{}'", c.as_str()));
                    }
                    seen.push(*c);
                }
                if *per_category == 0 {
                    return bad("scenarios.per_category must be at least 1".into());
                }
                if *horizon == 0 {
                    return bad("scenarios.horizon must be at least 1".into());
                }
            }
            ScenarioSet::Ingested { prices_csv, .. } => {
                if prices_csv.is_empty() {
                    return bad("scenarios.prices_csv must name a file".into());
                }
            }
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.architectures.is_empty() {
            return bad("architectures must not be empty".into());
        }
        for arch in &self.architectures {
            if arch.is_empty() || arch.iter().any(|&w| w == 0) {
                return bad(format!("architecture {arch:?} has an empty or zero-width layer"));
            }
        }
        if self.training.n_data == 0 || self.training.epochs == 0 {
            return bad("training.n_data and training.epochs must be positive".into());
        }
        if !(self.training.split > 0.0 && self.training.split < 1.0) {
            return bad("training.split must lie in (0, 1)".into());
        }
        if !(self.solver.time_limit_s > 0.0) {
            return bad("solver.time_limit_s must be positive".into());
        }
        if !(self.solver.gap_tol >= 0.0) {
            return bad("solver.gap_tol must be non-negative".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ExperimentPlan, BenchError> {
        let plan: ExperimentPlan =
            serde_json::from_str(text).map_err(|e| BenchError::Plan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<ExperimentPlan, BenchError> {
        ExperimentPlan::from_json(&std::fs::read_to_string(path)?)
    }
}

/// The four constant penalties plus the five layer-indexed schedules.
pub fn default_penalty_grid() -> Vec<PenaltySetting> {
    vec![
        PenaltySetting::Constant { value: 0.01 },
        PenaltySetting::Constant { value: 1.0 },
        PenaltySetting::Constant { value: 10.0 },
        PenaltySetting::Constant { value: 1000.0 },
        PenaltySetting::Layered { base: 5.0, inverse: false },
        PenaltySetting::Layered { base: 2.0, inverse: false },
        PenaltySetting::Layered { base: 2.0, inverse: true },
        PenaltySetting::Layered { base: 5.0, inverse: true },
        PenaltySetting::Layered { base: 10.0, inverse: true },
    ]
}

/// One paired scenario per category, a four-hour horizon, a compact
/// architecture, and every surrogate method. Small enough that nothing
/// comes near the time limit, which keeps reruns byte-identical — the exact
/// MIP methods in particular must solve to the gap tolerance, which the
/// reference architecture's weak big-M relaxations cannot do quickly.
pub fn default_plan() -> ExperimentPlan {
    ExperimentPlan {
        format: PLAN_FORMAT.to_string(),
        seed: 42,
        scenarios: ScenarioSet::Generated {
            categories: vec![PriceCategory::Low, PriceCategory::Medium, PriceCategory::High],
            per_category: 1,
            horizon: 4,
        },
        methods: vec![
            SurrogateMethod::CvxdLp,
            SurrogateMethod::Pcar { alpha: PenaltySetting::Constant { value: 1000.0 } },
            SurrogateMethod::Pctar {
                alpha: PenaltySetting::Constant { value: 1000.0 },
                lb: -10.0,
                ub: 10.0,
            },
            SurrogateMethod::BigM,
            SurrogateMethod::Pwl { pieces: 4 },
        ],
        architectures: vec![vec![4, 6, 4]],
        penalty_grid: default_penalty_grid(),
        training: TrainingSettings {
            n_data: 10_000,
            epochs: 100,
            learning_rate: 1e-4,
            batch_size: 1000,
            split: 0.8,
            seed: 7,
        },
        solver: SolverSettings { time_limit_s: 600.0, gap_tol: 0.01 },
        record_walltime: false,
        calibration: InstanceCalibration::default(),
    }
}

/// Width ladder: each total is split across three hidden layers in the
/// baseline's 1:2:1 proportion.
pub fn width_architectures(totals: &[usize]) -> Vec<Vec<usize>> {
    totals
        .iter()
        .map(|&w| {
            let quarter = w / 4;
            vec![quarter, w - 2 * quarter, quarter]
        })
        .collect()
}

/// Depth ladder: one to five hidden layers at a total width near 40.
pub fn depth_architectures() -> Vec<Vec<usize>> {
    vec![
        vec![40],
        vec![20, 20],
        vec![5, 15, 15, 5],
        vec![2, 8, 20, 8, 2],
    ]
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub instance: MarketInstance,
}

/// Expands the plan's scenario set into concrete instances. Generated
/// scenarios reuse the same sub-seed across categories, so `low-1` and
/// `high-1` differ only in price scale; ingested scenarios take prices from
/// the CSV and synthesize the rest per scenario.
pub fn materialize_scenarios(plan: &ExperimentPlan) -> Result<Vec<Scenario>, BenchError> {
    match &plan.scenarios {
        ScenarioSet::Generated { categories, per_category, horizon } => {
            let mut out = Vec::with_capacity(categories.len() * per_category);
            for &cat in categories {
                for k in 0..*per_category {
                    out.push(Scenario {
                        name: format!("{}-{}", cat.as_str(), k + 1),
                        instance: generate_instance(
                            cat,
                            *horizon,
                            plan.seed.wrapping_add(k as u64),
                            &plan.calibration,
                        ),
                    });
                }
            }
            Ok(out)
        }
        ScenarioSet::Ingested { prices_csv, category } => {
            let text = std::fs::read_to_string(prices_csv)?;
            let mut out = Vec::new();
            for (k, (name, prices)) in ingest_prices(&text)?.into_iter().enumerate() {
                let mut instance = generate_instance(
                    *category,
                    prices.len(),
                    plan.seed.wrapping_add(k as u64),
                    &plan.calibration,
                );
                instance.prices = prices;
                out.push(Scenario { name, instance });
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedNet {
    pub net: ReluNetwork,
    pub report: TrainReport,
}

fn kind_tag(kind: NetKind) -> &'static str {
    match kind {
        NetKind::Unconstrained => "uc",
        NetKind::Convexified { .. } => "cvxd",
    }
}

fn net_kind_for(method: &SurrogateMethod) -> Option<NetKind> {
    match method {
        SurrogateMethod::CvxdLp | SurrogateMethod::Hybrid { .. } => {
            Some(NetKind::Convexified { from_layer: 1 })
        }
        SurrogateMethod::Pcar { .. } | SurrogateMethod::Pctar { .. } | SurrogateMethod::BigM => {
            Some(NetKind::Unconstrained)
        }
        SurrogateMethod::Pwl { .. } => None,
    }
}

/// In-memory store of trained surrogates, keyed by architecture and network
/// kind. The generated dataset is cached too, so every network trained under
/// one plan sees identical data.
#[derive(Default)]
pub struct NetCache {
    data: BTreeMap<(usize, u64), Dataset>,
    nets: BTreeMap<(Vec<usize>, &'static str), TrainedNet>,
}

impl NetCache {
    pub fn new() -> NetCache {
        NetCache::default()
    }

    fn dataset(&mut self, t: &TrainingSettings) -> Result<&Dataset, BenchError> {
        let key = (t.n_data, t.seed);
        if !self.data.contains_key(&key) {
            let ds = make_dataset(
                |z| {
                    purchase_cost(z[0], z[1], z[2], z[3])
                        .expect("the sampler keeps rows inside the cost domain")
                },
                &DEFAULT_BOUNDS,
                t.n_data,
                FEASIBILITY_MARGIN,
                t.seed,
            )?;
            self.data.insert(key, ds);
        }
        Ok(&self.data[&key])
    }

    /// Trains (architecture, kind) if absent.
    pub fn ensure(
        &mut self,
        arch: &[usize],
        kind: NetKind,
        t: &TrainingSettings,
    ) -> Result<(), BenchError> {
        let key = (arch.to_vec(), kind_tag(kind));
        if self.nets.contains_key(&key) {
            return Ok(());
        }
        let cfg = t.config();
        let mut layer_sizes = Vec::with_capacity(arch.len() + 2);
        layer_sizes.push(4);
        layer_sizes.extend_from_slice(arch);
        layer_sizes.push(1);
        let mut net = ReluNetwork::random(&layer_sizes, kind, t.seed);
        let data = self.dataset(t)?;
        let report = fit(&mut net, data, &cfg)?;
        self.nets.insert(key, TrainedNet { net, report });
        Ok(())
    }

    pub fn get(&self, arch: &[usize], kind: NetKind) -> Option<&TrainedNet> {
        self.nets.get(&(arch.to_vec(), kind_tag(kind)))
    }

    /// Writes every cached network as JSON under `dir`, named
    /// `{kind}-{arch}.json`.
    pub fn save_all(&self, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for ((arch, tag), trained) in &self.nets {
            let path = dir.join(format!("{tag}-{}.json", arch_label(arch)));
            trained.net.save(&path)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn arch_label(arch: &[usize]) -> String {
    arch.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")
}

/// One (method, scenario) cell. Wall times are `None` when the plan leaves
/// `record_walltime` off; profit/rmse/gap are `None` when the cell failed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub scenario: String,
    pub category: String,
    pub status: String,
    pub profit: Option<f64>,
    pub rmse: Option<f64>,
    pub gap: Option<f64>,
    /// Max per-hour |in-model cost − network forward pass at the solution|.
    /// `None` for the network-free PWL method or failed cells.
    pub witness: Option<f64>,
    pub solve_time_s: Option<f64>,
    pub build_time_s: Option<f64>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummaryRow {
    pub method: String,
    pub category: String,
    pub scenarios: usize,
    pub solved: usize,
    pub mean_profit: Option<f64>,
    pub mean_rmse: Option<f64>,
    pub mean_walltime: Option<f64>,
    /// Mean gap over every cell that produced a bound (time limits included).
    pub mean_gap_all: Option<f64>,
    /// Mean gap over cells solved to tolerance.
    pub mean_gap_solved: Option<f64>,
    pub witness_max_dev: Option<f64>,
}

pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchSummaryRow>,
    pub files: Vec<PathBuf>,
}

struct Cell {
    status: String,
    report: Option<EvaluationReport>,
    gap: Option<f64>,
    witness: Option<f64>,
    solve_time_s: f64,
    build_time_s: f64,
    error: Option<String>,
}

fn failed_cell(status: &str, build_time_s: f64, error: String) -> Cell {
    Cell {
        status: status.to_string(),
        report: None,
        gap: None,
        witness: None,
        solve_time_s: 0.0,
        build_time_s,
        error: Some(error),
    }
}

fn run_cell(
    instance: &MarketInstance,
    method: &SurrogateMethod,
    net: Option<&ReluNetwork>,
    solver: &SolverSettings,
) -> Cell {
    let label = method.label();
    let build_start = Instant::now();
    let model = match build_bidding_model(instance, method, net.map(Nets::Shared)) {
        Ok(m) => m,
        Err(e) => return failed_cell("error", build_start.elapsed().as_secs_f64(), e.to_string()),
    };
    let build_time_s = build_start.elapsed().as_secs_f64();
    let solve_start = Instant::now();
    let solved = solve_mip(&model, &solver.bb_options());
    let solve_time_s = solve_start.elapsed().as_secs_f64();
    let result = match solved {
        Ok(r) => r,
        Err(e) => return failed_cell("error", build_time_s, e.to_string()),
    };
    if result.primal.is_empty() {
        return failed_cell(
            result.status.as_str(),
            build_time_s,
            "solver finished without a usable solution".to_string(),
        );
    }
    let report = match evaluate_solution(instance, &result, &label) {
        Ok(r) => r,
        Err(e) => return failed_cell(result.status.as_str(), build_time_s, e.to_string()),
    };
    let witness = net.map(|n| {
        let mut worst = 0.0f64;
        for t in 0..instance.horizon {
            let z = [report.bids[t], report.avail[t], instance.q[t], instance.r[t]];
            if let Ok((f, _)) = n.forward(&z) {
                worst = worst.max((report.surrogate_cost[t] - f).abs());
            }
        }
        worst
    });
    Cell {
        status: result.status.as_str().to_string(),
        report: Some(report),
        gap: Some(result.gap),
        witness,
        solve_time_s,
        build_time_s,
        error: None,
    }
}

fn cell_is_solved(status: &str) -> bool {
    status == "optimal" || status == "gap_reached"
}

/// Runs `f` over `0..n` on up to `jobs` worker threads and returns results
/// in index order regardless of completion order.
fn run_pool<T, F>(jobs: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = jobs.max(1).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                *slots[i].lock().expect("no other holder of this slot") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("workers release their slots")
                .expect("every index is visited exactly once")
        })
        .collect()
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_safe(s: &str) -> String {
    s.replace(',', ";")
}

fn mean<I: Iterator<Item = f64>>(values: I) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(sum / n as f64)
    }
}

fn file_slug(label: &str) -> String {
    let mut out = String::new();
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() || ch == '-' || ch == '.' {
            out.push(ch);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn write_file(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<(), BenchError> {
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

fn scenario_status(row: &BenchRow) -> String {
    match &row.error {
        Some(e) => csv_safe(&format!("{}: {e}", row.status)),
        None => row.status.clone(),
    }
}

const SUMMARY_CSV_HEADER: &str = "method,category,scenarios,solved,mean_profit,mean_rmse,mean_walltime,mean_gap_all,mean_gap_solved,witness_max_dev";

fn summarize(rows: &[BenchRow], methods: &[String], categories: &[String]) -> Vec<BenchSummaryRow> {
    let mut out = Vec::new();
    for m in methods {
        for c in categories {
            let cell: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| &r.method == m && &r.category == c)
                .collect();
            if cell.is_empty() {
                continue;
            }
            let solved: Vec<&&BenchRow> =
                cell.iter().filter(|r| cell_is_solved(&r.status)).collect();
            out.push(BenchSummaryRow {
                method: m.clone(),
                category: c.clone(),
                scenarios: cell.len(),
                solved: solved.len(),
                mean_profit: mean(cell.iter().filter_map(|r| r.profit)),
                mean_rmse: mean(cell.iter().filter_map(|r| r.rmse)),
                mean_walltime: mean(cell.iter().filter_map(|r| r.solve_time_s)),
                mean_gap_all: mean(cell.iter().filter_map(|r| r.gap)),
                mean_gap_solved: mean(solved.iter().filter_map(|r| r.gap)),
                witness_max_dev: cell
                    .iter()
                    .filter_map(|r| r.witness)
                    .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.max(w)))),
            });
        }
    }
    out
}

fn summary_csv(seed: u64, summary: &[BenchSummaryRow]) -> String {
    let mut out = format!("# seed={seed}\n{SUMMARY_CSV_HEADER}\n");
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.method,
            s.category,
            s.scenarios,
            s.solved,
            opt_field(s.mean_profit),
            opt_field(s.mean_rmse),
            opt_field(s.mean_walltime),
            opt_field(s.mean_gap_all),
            opt_field(s.mean_gap_solved),
            opt_field(s.witness_max_dev),
        ));
    }
    out
}

#[derive(Serialize)]
struct BenchJson<'a> {
    format: &'static str,
    seed: u64,
    rows: &'a [BenchRow],
    summary: &'a [BenchSummaryRow],
}

/// Method × category comparison. Trains the plan's first architecture (one
/// network per kind the methods need), solves every method on every
/// scenario, and writes `scenarios.csv` (per-cell), `detail_{method}.csv`
/// (per-hour), `summary.csv` (per method × category means), `summary.json`,
/// and the trained networks under `nets/`.
pub fn run_benchmark(
    plan: &ExperimentPlan,
    out_dir: &Path,
    jobs: usize,
) -> Result<BenchOutput, BenchError> {
    plan.validate()?;
    let scenarios = materialize_scenarios(plan)?;
    let arch = &plan.architectures[0];
    let mut cache = NetCache::new();
    for m in &plan.methods {
        if let Some(kind) = net_kind_for(m) {
            cache.ensure(arch, kind, &plan.training)?;
        }
    }
    let nets: Vec<Option<&ReluNetwork>> = plan
        .methods
        .iter()
        .map(|m| net_kind_for(m).map(|k| &cache.get(arch, k).expect("ensured above").net))
        .collect();

    let n_cells = plan.methods.len() * scenarios.len();
    let cells = run_pool(jobs, n_cells, |i| {
        let (mi, si) = (i / scenarios.len(), i % scenarios.len());
        let sc = &scenarios[si];
        let cell = run_cell(&sc.instance, &plan.methods[mi], nets[mi], &plan.solver);
        eprintln!(
            "[bench] {} {}: {} ({:.2}s)",
            plan.methods[mi].label(),
            sc.name,
            cell.status,
            cell.solve_time_s
        );
        cell
    });

    let mut rows = Vec::with_capacity(n_cells);
    let mut reports: Vec<Option<EvaluationReport>> = Vec::with_capacity(n_cells);
    for (i, cell) in cells.into_iter().enumerate() {
        let (mi, si) = (i / scenarios.len(), i % scenarios.len());
        let sc = &scenarios[si];
        rows.push(BenchRow {
            method: plan.methods[mi].label(),
            scenario: sc.name.clone(),
            category: sc.instance.category.as_str().to_string(),
            status: cell.status,
            profit: cell.report.as_ref().map(|r| r.profit),
            rmse: cell.report.as_ref().map(|r| r.rmse),
            gap: cell.gap,
            witness: cell.witness,
            solve_time_s: plan.record_walltime.then_some(cell.solve_time_s),
            build_time_s: plan.record_walltime.then_some(cell.build_time_s),
            error: cell.error,
            warnings: cell.report.as_ref().map(|r| r.warnings.clone()).unwrap_or_default(),
        });
        reports.push(cell.report);
    }

    let method_labels: Vec<String> = plan.methods.iter().map(|m| m.label()).collect();
    let mut categories: Vec<String> = Vec::new();
    for sc in &scenarios {
        let c = sc.instance.category.as_str().to_string();
        if !categories.contains(&c) {
            categories.push(c);
        }
    }
    let summary = summarize(&rows, &method_labels, &categories);

    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    let mut scen_csv = format!("# seed={}\n{}\n", plan.seed, crate::market::SUMMARY_HEADER);
    for r in &rows {
        scen_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.scenario,
            opt_field(r.profit),
            opt_field(r.rmse),
            opt_field(r.solve_time_s),
            opt_field(r.gap),
            scenario_status(r)
        ));
    }
    write_file(out_dir, "scenarios.csv", &scen_csv, &mut files)?;

    for (mi, label) in method_labels.iter().enumerate() {
        let mut body = format!("# seed={}\n{DETAIL_HEADER}\n", plan.seed);
        for (si, sc) in scenarios.iter().enumerate() {
            if let Some(report) = &reports[mi * scenarios.len() + si] {
                body.push_str(&report.detail_rows(&sc.name));
            }
        }
        write_file(out_dir, &format!("detail_{}.csv", file_slug(label)), &body, &mut files)?;
    }

    write_file(out_dir, "summary.csv", &summary_csv(plan.seed, &summary), &mut files)?;
    let json = BenchJson { format: BENCH_FORMAT, seed: plan.seed, rows: &rows, summary: &summary };
    write_file(
        out_dir,
        "summary.json",
        &serde_json::to_string_pretty(&json).expect("report serialization cannot fail"),
        &mut files,
    )?;
    files.extend(cache.save_all(&out_dir.join("nets"))?);

    Ok(BenchOutput { rows, summary, files })
}

/// Per-penalty rerun of every PCAR/PCTAR method in the plan across the
/// penalty grid. Writes `penalties.csv` and `penalties.json`; the JSON
/// carries the best setting per method under the rule "max mean realised
/// profit, ties broken by lower mean runtime" (by grid order when runtimes
/// are not recorded).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PenaltyRow {
    pub method: String,
    pub penalty: String,
    pub scenario: String,
    pub status: String,
    pub profit: Option<f64>,
    pub rmse: Option<f64>,
    pub gap: Option<f64>,
    pub witness: Option<f64>,
    pub solve_time_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestPenalty {
    pub method: String,
    pub penalty: String,
    pub mean_profit: f64,
}

pub struct PenaltySweepOutput {
    pub rows: Vec<PenaltyRow>,
    pub best: Vec<BestPenalty>,
    pub files: Vec<PathBuf>,
}

pub const PENALTY_CSV_HEADER: &str =
    "method,penalty,scenario,profit,rmse,walltime,gap,status";

#[derive(Serialize)]
struct PenaltyJson<'a> {
    format: &'static str,
    seed: u64,
    rows: &'a [PenaltyRow],
    best: &'a [BestPenalty],
}

pub fn penalty_sweep(
    plan: &ExperimentPlan,
    out_dir: &Path,
    jobs: usize,
) -> Result<PenaltySweepOutput, BenchError> {
    plan.validate()?;
    if plan.penalty_grid.is_empty() {
        return Err(BenchError::Plan("penalty_grid must not be empty".into()));
    }
    // (base label, method with the grid setting substituted in)
    let mut variants: Vec<(String, String, SurrogateMethod)> = Vec::new();
    for m in &plan.methods {
        match m {
            SurrogateMethod::Pcar { .. } => {
                for p in &plan.penalty_grid {
                    variants.push((
                        "pcar".to_string(),
                        p.label(),
                        SurrogateMethod::Pcar { alpha: *p },
                    ));
                }
            }
            SurrogateMethod::Pctar { lb, ub, .. } => {
                for p in &plan.penalty_grid {
                    variants.push((
                        "pctar".to_string(),
                        p.label(),
                        SurrogateMethod::Pctar { alpha: *p, lb: *lb, ub: *ub },
                    ));
                }
            }
            _ => {}
        }
    }
    if variants.is_empty() {
        return Err(BenchError::Plan(
            "penalty sweep needs at least one pcar or pctar method".into(),
        ));
    }
    let scenarios = materialize_scenarios(plan)?;
    let arch = &plan.architectures[0];
    let mut cache = NetCache::new();
    cache.ensure(arch, NetKind::Unconstrained, &plan.training)?;
    let net = &cache.get(arch, NetKind::Unconstrained).expect("ensured above").net;

    let n_cells = variants.len() * scenarios.len();
    let cells = run_pool(jobs, n_cells, |i| {
        let (vi, si) = (i / scenarios.len(), i % scenarios.len());
        let sc = &scenarios[si];
        let cell = run_cell(&sc.instance, &variants[vi].2, Some(net), &plan.solver);
        eprintln!(
            "[sweep] {} α={} {}: {} ({:.2}s)",
            variants[vi].0, variants[vi].1, sc.name, cell.status, cell.solve_time_s
        );
        cell
    });

    let mut rows = Vec::with_capacity(n_cells);
    for (i, cell) in cells.into_iter().enumerate() {
        let (vi, si) = (i / scenarios.len(), i % scenarios.len());
        rows.push(PenaltyRow {
            method: variants[vi].0.clone(),
            penalty: variants[vi].1.clone(),
            scenario: scenarios[si].name.clone(),
            status: cell.status,
            profit: cell.report.as_ref().map(|r| r.profit),
            rmse: cell.report.as_ref().map(|r| r.rmse),
            gap: cell.gap,
            witness: cell.witness,
            solve_time_s: plan.record_walltime.then_some(cell.solve_time_s),
            error: cell.error,
        });
    }

    let mut bases: Vec<String> = Vec::new();
    for (base, _, _) in &variants {
        if !bases.contains(base) {
            bases.push(base.clone());
        }
    }
    let mut best: Vec<BestPenalty> = Vec::new();
    for base in &bases {
        let mut choice: Option<(String, f64, Option<f64>)> = None;
        for p in &plan.penalty_grid {
            let lbl = p.label();
            let subset: Vec<&PenaltyRow> = rows
                .iter()
                .filter(|r| &r.method == base && r.penalty == lbl)
                .collect();
            let profit = match mean(subset.iter().filter_map(|r| r.profit)) {
                Some(p) => p,
                None => continue,
            };
            let runtime = mean(subset.iter().filter_map(|r| r.solve_time_s));
            let better = match &choice {
                None => true,
                Some((_, bp, brt)) => {
                    profit > *bp
                        || (profit == *bp
                            && matches!((runtime, brt), (Some(rt), Some(b)) if rt < *b))
                }
            };
            if better {
                choice = Some((lbl, profit, runtime));
            }
        }
        if let Some((penalty, mean_profit, _)) = choice {
            best.push(BestPenalty { method: base.clone(), penalty, mean_profit });
        }
    }

    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut csv = format!("# seed={}\n{PENALTY_CSV_HEADER}\n", plan.seed);
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.method,
            r.penalty,
            r.scenario,
            opt_field(r.profit),
            opt_field(r.rmse),
            opt_field(r.solve_time_s),
            opt_field(r.gap),
            match &r.error {
                Some(e) => csv_safe(&format!("{}: {e}", r.status)),
                None => r.status.clone(),
            }
        ));
    }
    write_file(out_dir, "penalties.csv", &csv, &mut files)?;
    let json = PenaltyJson { format: PENALTY_FORMAT, seed: plan.seed, rows: &rows, best: &best };
    write_file(
        out_dir,
        "penalties.json",
        &serde_json::to_string_pretty(&json).expect("report serialization cannot fail"),
        &mut files,
    )?;
    files.extend(cache.save_all(&out_dir.join("nets"))?);

    Ok(PenaltySweepOutput { rows, best, files })
}

/// One row per (architecture, method, scenario); `training_rmse` is the
/// final training-set error of the network that method used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchRow {
    pub arch: String,
    pub method: String,
    pub scenario: String,
    pub status: String,
    pub profit: Option<f64>,
    pub rmse: Option<f64>,
    pub training_rmse: Option<f64>,
    pub gap: Option<f64>,
    pub witness: Option<f64>,
    pub solve_time_s: Option<f64>,
    pub error: Option<String>,
}

pub struct ArchSweepOutput {
    pub rows: Vec<ArchRow>,
    pub files: Vec<PathBuf>,
}

pub const ARCH_CSV_HEADER: &str =
    "arch,method,scenario,profit,rmse,training_rmse,walltime,gap,status";

#[derive(Serialize)]
struct ArchJson<'a> {
    format: &'static str,
    seed: u64,
    rows: &'a [ArchRow],
}

/// Re-runs every method over every architecture in the plan. Both network
/// kinds are trained per architecture on identical data and seed, so the
/// training-error comparison between them is paired.
pub fn architecture_sweep(
    plan: &ExperimentPlan,
    out_dir: &Path,
    jobs: usize,
) -> Result<ArchSweepOutput, BenchError> {
    plan.validate()?;
    let scenarios = materialize_scenarios(plan)?;
    let mut cache = NetCache::new();
    for arch in &plan.architectures {
        cache.ensure(arch, NetKind::Unconstrained, &plan.training)?;
        cache.ensure(arch, NetKind::Convexified { from_layer: 1 }, &plan.training)?;
    }
    // work items: arch-major, then method, then scenario
    struct Item<'a> {
        arch: &'a [usize],
        method: &'a SurrogateMethod,
        trained: Option<&'a TrainedNet>,
    }
    let mut items: Vec<Item<'_>> = Vec::new();
    for arch in &plan.architectures {
        for method in &plan.methods {
            let trained =
                net_kind_for(method).map(|k| cache.get(arch, k).expect("ensured above"));
            items.push(Item { arch, method, trained });
        }
    }

    let n_cells = items.len() * scenarios.len();
    let cells = run_pool(jobs, n_cells, |i| {
        let (ii, si) = (i / scenarios.len(), i % scenarios.len());
        let item = &items[ii];
        let sc = &scenarios[si];
        let cell = run_cell(
            &sc.instance,
            item.method,
            item.trained.map(|t| &t.net),
            &plan.solver,
        );
        eprintln!(
            "[arch] [{}] {} {}: {} ({:.2}s)",
            arch_label(item.arch),
            item.method.label(),
            sc.name,
            cell.status,
            cell.solve_time_s
        );
        cell
    });

    let mut rows = Vec::with_capacity(n_cells);
    for (i, cell) in cells.into_iter().enumerate() {
        let (ii, si) = (i / scenarios.len(), i % scenarios.len());
        let item = &items[ii];
        rows.push(ArchRow {
            arch: arch_label(item.arch),
            method: item.method.label(),
            scenario: scenarios[si].name.clone(),
            status: cell.status,
            profit: cell.report.as_ref().map(|r| r.profit),
            rmse: cell.report.as_ref().map(|r| r.rmse),
            training_rmse: item.trained.map(|t| t.report.final_train_rmse),
            gap: cell.gap,
            witness: cell.witness,
            solve_time_s: plan.record_walltime.then_some(cell.solve_time_s),
            error: cell.error,
        });
    }

    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut csv = format!("# seed={}\n{ARCH_CSV_HEADER}\n", plan.seed);
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.arch,
            r.method,
            r.scenario,
            opt_field(r.profit),
            opt_field(r.rmse),
            opt_field(r.training_rmse),
            opt_field(r.solve_time_s),
            opt_field(r.gap),
            match &r.error {
                Some(e) => csv_safe(&format!("{}: {e}", r.status)),
                None => r.status.clone(),
            }
        ));
    }
    write_file(out_dir, "architectures.csv", &csv, &mut files)?;
    let json = ArchJson { format: ARCH_FORMAT, seed: plan.seed, rows: &rows };
    write_file(
        out_dir,
        "architectures.json",
        &serde_json::to_string_pretty(&json).expect("report serialization cannot fail"),
        &mut files,
    )?;
    files.extend(cache.save_all(&out_dir.join("nets"))?);

    Ok(ArchSweepOutput { rows, files })
}
