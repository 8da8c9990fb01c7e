//! Command-line front end: dataset generation, surrogate training, bidding
//! model solves, and the benchmark/sweep harness.
//!
//! Exit codes are a stable contract: 0 success, 1 I/O or file-content
//! trouble (including plan validation), 2 usage errors, 3 numerical failures
//! (training divergence, solver breakdown), 4 semantic mismatches between
//! artifacts (e.g. a method handed the wrong kind of network).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netlift::bench::{
    architecture_sweep, default_plan, depth_architectures, desk_scale_training, penalty_sweep,
    run_benchmark, width_architectures, BenchError, ExperimentPlan, TrainingSettings,
};
use netlift::branch_bound::{solve_mip, BBOptions};
use netlift::embed::EmbedError;
use netlift::market::{
    build_bidding_model, evaluate_solution, generate_instance, purchase_cost,
    InstanceCalibration, MarketError, MarketInstance, Nets, PenaltySetting, PriceCategory,
    SurrogateMethod, DETAIL_HEADER, SUMMARY_HEADER,
};
use netlift::nn::{
    fit, make_dataset, Dataset, NetKind, ReluNetwork, TrainConfig, TrainError,
    DEFAULT_BOUNDS, DEFAULT_DATASET_SIZE, FEASIBILITY_MARGIN,
};

#[derive(Parser)]
#[command(
    name = "netlift",
    version,
    about = "Train ReLU cost surrogates, embed them in bidding LPs/MIPs, and run the experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the exact purchase-cost function into a training CSV.
    GenData(GenDataArgs),
    /// Fit a network to a dataset and write it as JSON.
    Train(TrainArgs),
    /// Build and solve one bidding model, writing evaluation CSVs.
    Solve(SolveArgs),
    /// Run the method × category benchmark from a plan.
    Bench(BenchArgs),
    /// Run the penalty or architecture sweep from a plan.
    Sweep(SweepArgs),
}

struct Failure {
    code: u8,
    msg: String,
}

type CmdResult = Result<(), Failure>;

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    Failure { code, msg: msg.to_string() }
}

fn io_fail(what: &str, e: impl std::fmt::Display) -> Failure {
    fail(1, format!("{what}: {e}"))
}

fn train_fail(e: TrainError) -> Failure {
    match &e {
        TrainError::BadConfig(_) => fail(2, e),
        TrainError::ArityMismatch { .. } => fail(4, e),
        _ => fail(3, e),
    }
}

fn market_fail(e: MarketError) -> Failure {
    let code = match &e {
        MarketError::Embed(em) => match em {
            EmbedError::Net(_) | EmbedError::Model(_) => 3,
            _ => 4,
        },
        MarketError::NetCount { .. } | MarketError::NetsRequired => 4,
        MarketError::Io(_)
        | MarketError::BadInstance(_)
        | MarketError::BadFormat(_)
        | MarketError::BadJson(_)
        | MarketError::BadCsv(_) => 1,
        MarketError::Model(_) | MarketError::MissingValue(_) | MarketError::BidDomain { .. } => 3,
    };
    fail(code, e)
}

fn bench_fail(e: BenchError) -> Failure {
    match e {
        BenchError::Train(t) => train_fail(t),
        BenchError::Market(m) => market_fail(m),
        BenchError::Plan(_) | BenchError::Io(_) => fail(1, e),
        BenchError::Data(_) | BenchError::Net(_) => fail(3, e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::GenData(a) => cmd_gen_data(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    /// Convexified network: LP-representable under minimization.
    Cvxd,
    /// Unconstrained network.
    Uc,
}

impl KindArg {
    fn to_kind(self) -> NetKind {
        match self {
            KindArg::Cvxd => NetKind::Convexified { from_layer: 1 },
            KindArg::Uc => NetKind::Unconstrained,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CategoryArg {
    Low,
    Medium,
    High,
}

impl CategoryArg {
    fn to_category(self) -> PriceCategory {
        match self {
            CategoryArg::Low => PriceCategory::Low,
            CategoryArg::Medium => PriceCategory::Medium,
            CategoryArg::High => PriceCategory::High,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "cvxd-lp")]
    CvxdLp,
    Pcar,
    Pctar,
    #[value(name = "bigm")]
    BigM,
    Hybrid,
    Pwl,
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, Failure> {
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.trim().parse::<usize>() {
            Ok(v) if v > 0 => out.push(v),
            _ => return Err(fail(2, format!("{what}: '{part}' is not a positive integer"))),
        }
    }
    if out.is_empty() {
        return Err(fail(2, format!("{what} must not be empty")));
    }
    Ok(out)
}

// ---------------------------------------------------------------- gen-data

#[derive(Args)]
struct GenDataArgs {
    /// Number of samples.
    #[arg(long, default_value_t = DEFAULT_DATASET_SIZE)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (columns x,xtilde,q,r,cost).
    #[arg(long)]
    out: PathBuf,
}

fn cmd_gen_data(a: GenDataArgs) -> CmdResult {
    if a.n == 0 {
        return Err(fail(2, "--n must be at least 1"));
    }
    let data = make_dataset(
        |z| purchase_cost(z[0], z[1], z[2], z[3]).expect("sampler keeps rows in the cost domain"),
        &DEFAULT_BOUNDS,
        a.n,
        FEASIBILITY_MARGIN,
        a.seed,
    )
    .map_err(|e| fail(3, e))?;
    std::fs::write(&a.out, data.to_csv())
        .map_err(|e| io_fail(&format!("writing {}", a.out.display()), e))?;
    println!("wrote {} samples to {} (seed {})", a.n, a.out.display(), a.seed);
    Ok(())
}

// ------------------------------------------------------------------- train

#[derive(Args)]
struct TrainArgs {
    /// Training dataset CSV (from gen-data).
    #[arg(long)]
    data: PathBuf,
    /// Hidden-layer widths, comma separated.
    #[arg(long, default_value = "10,20,10")]
    arch: String,
    #[arg(long, value_enum, default_value_t = KindArg::Cvxd)]
    kind: KindArg,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    batch: usize,
    /// Training fraction; the rest validates.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output network JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Optional training-report JSON path.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let arch = parse_usize_list(&a.arch, "--arch")?;
    let text = std::fs::read_to_string(&a.data)
        .map_err(|e| io_fail(&format!("reading {}", a.data.display()), e))?;
    let data = Dataset::from_csv(&text).map_err(|e| fail(1, e))?;
    let mut layer_sizes = Vec::with_capacity(arch.len() + 2);
    layer_sizes.push(4);
    layer_sizes.extend_from_slice(&arch);
    layer_sizes.push(1);
    let cfg = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        split: a.split,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let mut net = ReluNetwork::random(&layer_sizes, a.kind.to_kind(), a.seed);
    let report = fit(&mut net, &data, &cfg).map_err(train_fail)?;
    net.save(&a.out)
        .map_err(|e| io_fail(&format!("writing {}", a.out.display()), e))?;
    if let Some(path) = &a.report {
        let json = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
        std::fs::write(path, json).map_err(|e| io_fail(&format!("writing {}", path.display()), e))?;
    }
    println!(
        "trained [{}] ({}) on {} rows: train rmse {:.6}, val rmse {:.6} -> {}",
        a.arch,
        match a.kind {
            KindArg::Cvxd => "cvxd",
            KindArg::Uc => "uc",
        },
        data.len(),
        report.final_train_rmse,
        report.final_val_rmse,
        a.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- solve

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Trained network JSON (every method except pwl).
    #[arg(long)]
    net: Option<PathBuf>,
    /// Market instance JSON.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Generate an instance of this price category instead of loading one.
    #[arg(long, value_enum)]
    generate: Option<CategoryArg>,
    /// Seed for --generate.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Horizon for --generate.
    #[arg(long, default_value_t = 24)]
    horizon: usize,
    /// Constant relaxation penalty (pcar/pctar).
    #[arg(long, default_value_t = 1000.0)]
    alpha: f64,
    /// Pre-activation lower bound for the pctar cap.
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    lb: f64,
    /// Pre-activation upper bound for the pctar cap.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    ub: f64,
    /// First epigraph-relaxed hidden layer (hybrid).
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Interpolation pieces per axis (pwl).
    #[arg(long, default_value_t = 4)]
    np: usize,
    /// Solver wall-clock limit, seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Relative optimality gap tolerance.
    #[arg(long, default_value_t = 0.01)]
    gap: f64,
    /// Directory for summary.csv and detail.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write the model as LP text.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Record wall-clock solve time in the CSVs (leaving it off keeps
    /// reruns byte-identical).
    #[arg(long)]
    timing: bool,
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let method = match a.method {
        MethodArg::CvxdLp => SurrogateMethod::CvxdLp,
        MethodArg::Pcar => {
            SurrogateMethod::Pcar { alpha: PenaltySetting::Constant { value: a.alpha } }
        }
        MethodArg::Pctar => SurrogateMethod::Pctar {
            alpha: PenaltySetting::Constant { value: a.alpha },
            lb: a.lb,
            ub: a.ub,
        },
        MethodArg::BigM => SurrogateMethod::BigM,
        MethodArg::Hybrid => SurrogateMethod::Hybrid { k: a.k },
        MethodArg::Pwl => SurrogateMethod::Pwl { pieces: a.np },
    };
    let (instance, scenario, meta) = match (&a.instance, a.generate) {
        (Some(path), None) => {
            let inst = MarketInstance::load(path).map_err(market_fail)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".to_string());
            (inst, name.clone(), format!("# instance={name}"))
        }
        (None, Some(cat)) => {
            if a.horizon == 0 {
                return Err(fail(2, "--horizon must be at least 1"));
            }
            let cat = cat.to_category();
            let inst =
                generate_instance(cat, a.horizon, a.seed, &InstanceCalibration::default());
            let name = format!("{}-{}", cat.as_str(), a.seed);
            (
                inst,
                name,
                format!("# seed={} category={} horizon={}", a.seed, cat.as_str(), a.horizon),
            )
        }
        _ => return Err(fail(2, "pass exactly one of --instance or --generate")),
    };
    let net = match (&a.net, method.needs_net()) {
        (Some(path), true) => Some(ReluNetwork::load(path).map_err(|e| fail(1, e))?),
        (None, true) => return Err(fail(2, "this method needs --net")),
        (_, false) => None,
    };
    let model = build_bidding_model(&instance, &method, net.as_ref().map(Nets::Shared))
        .map_err(market_fail)?;
    if let Some(path) = &a.export_lp {
        std::fs::write(path, model.write_lp_text())
            .map_err(|e| io_fail(&format!("writing {}", path.display()), e))?;
    }
    let opts = BBOptions { time_limit_s: a.time_limit, gap_tol: a.gap, ..BBOptions::default() };
    let start = Instant::now();
    let result = solve_mip(&model, &opts).map_err(|e| fail(3, e))?;
    let wall = start.elapsed().as_secs_f64();
    if result.primal.is_empty() {
        return Err(fail(
            3,
            format!("solver finished with status {} and no usable solution", result.status.as_str()),
        ));
    }
    let report = evaluate_solution(&instance, &result, &method.label()).map_err(market_fail)?;

    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| io_fail(&format!("creating {}", a.out_dir.display()), e))?;
    let summary_path = a.out_dir.join("summary.csv");
    let detail_path = a.out_dir.join("detail.csv");
    let walltime = a.timing.then_some(wall);
    let summary = format!(
        "{meta}\n{SUMMARY_HEADER}\n{}",
        report.summary_row(&scenario, walltime)
    );
    std::fs::write(&summary_path, summary)
        .map_err(|e| io_fail(&format!("writing {}", summary_path.display()), e))?;
    let detail = format!("{meta}\n{DETAIL_HEADER}\n{}", report.detail_rows(&scenario));
    std::fs::write(&detail_path, detail)
        .map_err(|e| io_fail(&format!("writing {}", detail_path.display()), e))?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} on {}: status {}, profit {:.4}, rmse {:.6}, gap {:.2e}, {:.2}s",
        method.label(),
        scenario,
        report.status,
        report.profit,
        report.rmse,
        report.gap,
        wall
    );
    println!("wrote {} and {}", summary_path.display(), detail_path.display());
    Ok(())
}

// ------------------------------------------------------------- bench/sweep

fn load_plan(
    plan: &Option<PathBuf>,
    use_default: bool,
    desk_scale: bool,
    full_scale: bool,
) -> Result<ExperimentPlan, Failure> {
    let mut plan = match (plan, use_default) {
        (Some(path), false) => ExperimentPlan::load(path).map_err(bench_fail)?,
        (None, true) => default_plan(),
        _ => return Err(fail(2, "pass exactly one of --plan or --default-plan")),
    };
    match (desk_scale, full_scale) {
        (true, true) => return Err(fail(2, "--desk-scale and --full-scale conflict")),
        (true, false) => plan.training = desk_scale_training(),
        (false, true) => {
            plan.training = TrainingSettings {
                n_data: DEFAULT_DATASET_SIZE,
                epochs: 1000,
                ..desk_scale_training()
            }
        }
        (false, false) => {}
    }
    Ok(plan)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".to_string())
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment plan JSON.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Use the built-in default plan.
    #[arg(long)]
    default_plan: bool,
    /// Directory for all reports.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Desk-scale training (30k samples, 300 epochs).
    #[arg(long)]
    desk_scale: bool,
    /// Full-size training (300k samples, 1000 epochs).
    #[arg(long)]
    full_scale: bool,
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let plan = load_plan(&a.plan, a.default_plan, a.desk_scale, a.full_scale)?;
    let out = run_benchmark(&plan, &a.out_dir, a.jobs).map_err(bench_fail)?;
    println!(
        "{:<14} {:<8} {:>6} {:>12} {:>10} {:>10}",
        "method", "category", "solved", "mean_profit", "mean_rmse", "mean_gap"
    );
    for s in &out.summary {
        println!(
            "{:<14} {:<8} {:>3}/{:<2} {:>12} {:>10} {:>10}",
            s.method,
            s.category,
            s.solved,
            s.scenarios,
            fmt_opt(s.mean_profit),
            fmt_opt(s.mean_rmse),
            fmt_opt(s.mean_gap_all),
        );
    }
    println!("wrote {} files under {}", out.files.len(), a.out_dir.display());
    Ok(())
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep the relaxation penalty grid.
    #[arg(long)]
    penalties: bool,
    /// Sweep network architectures.
    #[arg(long)]
    architectures: bool,
    /// Experiment plan JSON.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Use the built-in default plan.
    #[arg(long)]
    default_plan: bool,
    /// Restrict the penalty sweep to one family: pcar or pctar.
    #[arg(long)]
    method: Option<String>,
    /// Width totals for the architecture sweep, e.g. 20,80,200,400.
    #[arg(long)]
    widths: Option<String>,
    /// Include the depth ladder in the architecture sweep.
    #[arg(long)]
    depths: bool,
    /// Directory for all reports.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Desk-scale training (30k samples, 300 epochs).
    #[arg(long)]
    desk_scale: bool,
    /// Full-size training (300k samples, 1000 epochs).
    #[arg(long)]
    full_scale: bool,
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    if a.penalties == a.architectures {
        return Err(fail(2, "pass exactly one of --penalties or --architectures"));
    }
    let mut plan = load_plan(&a.plan, a.default_plan, a.desk_scale, a.full_scale)?;
    if a.penalties {
        if let Some(name) = &a.method {
            let keep_pcar = name == "pcar";
            let keep_pctar = name == "pctar";
            if !keep_pcar && !keep_pctar {
                return Err(fail(2, format!("--method must be pcar or pctar, got '{name}'")));
            }
            plan.methods.retain(|m| match m {
                SurrogateMethod::Pcar { .. } => keep_pcar,
                SurrogateMethod::Pctar { .. } => keep_pctar,
                _ => false,
            });
            if plan.methods.is_empty() {
                // the grid supplies the penalty, so a bare selector works
                plan.methods = if keep_pcar {
                    vec![SurrogateMethod::Pcar {
                        alpha: PenaltySetting::Constant { value: 1000.0 },
                    }]
                } else {
                    vec![SurrogateMethod::Pctar {
                        alpha: PenaltySetting::Constant { value: 1000.0 },
                        lb: -10.0,
                        ub: 10.0,
                    }]
                };
            }
        }
        let out = penalty_sweep(&plan, &a.out_dir, a.jobs).map_err(bench_fail)?;
        for b in &out.best {
            println!(
                "best penalty for {}: {} (mean profit {:.4})",
                b.method, b.penalty, b.mean_profit
            );
        }
        println!("wrote {} files under {}", out.files.len(), a.out_dir.display());
    } else {
        let mut archs = Vec::new();
        if let Some(widths) = &a.widths {
            archs.extend(width_architectures(&parse_usize_list(widths, "--widths")?));
        }
        if a.depths {
            archs.extend(depth_architectures());
        }
        if !archs.is_empty() {
            plan.architectures = archs;
        }
        let out = architecture_sweep(&plan, &a.out_dir, a.jobs).map_err(bench_fail)?;
        println!(
            "{} rows across {} architectures",
            out.rows.len(),
            plan.architectures.len()
        );
        println!("wrote {} files under {}", out.files.len(), a.out_dir.display());
    }
    Ok(())
}
