//! Command-line entry points: parameter estimation, frontier computation,
//! simulation with plots, and the HTTP service.
//!
//! Exit codes: 0 success, 1 input error, 2 computational cap or
//! infeasibility.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use poolalloc::error::{EstimationError, FrontierError, ModelError, SimError};
use poolalloc::estimation::{
    estimate_exposure, estimate_prior, infer_categories, read_categories, read_interactions, read_tests,
    EstimatedParameters, PriorConfig,
};
use poolalloc::frontier::{
    pareto_frontier_with, target_count_from_exact, FrontierOptions, FrontierResult, TargetParams,
    DEFAULT_FEASIBLE_CAP,
};
use poolalloc::model::{violation, Scenario, Strategy};
use poolalloc::plot::quarantine_svg;
use poolalloc::service::{serve, ServiceConfig};
use poolalloc::sim::{compare_profiles, estimate_r0, SimConfig, CAMPUS_BETA, CAMPUS_GAMMA};

#[derive(Debug, Parser)]
#[command(name = "poolalloc", version, about = "Pooled-test allocation across population categories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate contact counts and priors from interaction and test records.
    Estimate(EstimateArgs),
    /// Compute the Pareto frontier of a scenario.
    Frontier(FrontierArgs),
    /// Simulate strategies on a contact network.
    Simulate(SimulateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CSV with columns person_id,category_id,event_id.
    #[arg(long)]
    interactions: PathBuf,
    /// CSV with columns category_id,tested,positive,period_label.
    #[arg(long)]
    tests: Option<PathBuf>,
    /// CSV with columns id,n[,v]; inferred from the records when absent.
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Scenario JSON supplying pi, budget, max_group and group_menu; the
    /// output is then a complete scenario instead of a fragment.
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    smoothing: f64,
    /// Number of most recent test periods to pool.
    #[arg(long, default_value_t = 1)]
    window: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FrontierArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Target number of solutions; the exact frontier when absent.
    #[arg(long)]
    desired: Option<usize>,
    #[arg(long)]
    tolerance: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of feasible strategies to enumerate.
    #[arg(long, default_value_t = DEFAULT_FEASIBLE_CAP)]
    cap: u64,
    #[arg(long)]
    out: PathBuf,
    /// Rows of the summary table; 0 prints all.
    #[arg(long, default_value_t = 25)]
    show: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// A strategy `{t, g}`, a list of them (optionally with `label`), or a
    /// frontier result.
    #[arg(long)]
    strategy_file: PathBuf,
    #[arg(long, default_value_t = 80)]
    days: u32,
    #[arg(long, default_value_t = 30)]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = CAMPUS_BETA)]
    beta: f64,
    #[arg(long, default_value_t = CAMPUS_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = 14)]
    quarantine_days: u32,
    #[arg(long, default_value_t = 7)]
    test_period: u32,
    /// Initially infected per category, comma separated; 5 in the first
    /// category when absent.
    #[arg(long, value_delimiter = ',')]
    initial_infected: Vec<u32>,
    /// Index-case trials for the R0 summary; 0 skips it.
    #[arg(long, default_value_t = 200)]
    r0_trials: u32,
    #[arg(long)]
    out: PathBuf,
    /// SVG file with mean quarantined curves.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Category ids to plot, comma separated; all when absent.
    #[arg(long, value_delimiter = ',')]
    plot_categories: Vec<String>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "POOLALLOC_ADDR", default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// JSON store file; in-memory when absent.
    #[arg(long, env = "POOLALLOC_STORE")]
    store: Option<PathBuf>,
    #[arg(long, env = "POOLALLOC_CAP", default_value_t = DEFAULT_FEASIBLE_CAP)]
    cap: u64,
    #[arg(long, env = "POOLALLOC_WORKERS", default_value_t = 2)]
    workers: usize,
    /// Allowed CORS origin; any when absent.
    #[arg(long, env = "POOLALLOC_CORS_ORIGIN")]
    cors_origin: Option<String>,
}

impl ServeArgs {
    fn config(&self) -> ServiceConfig {
        ServiceConfig {
            addr: self.addr,
            store_path: self.store.clone(),
            feasible_cap: self.cap,
            workers: self.workers,
            cors_origin: self.cors_origin.clone(),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Compute(m) => f.write_str(m),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FrontierError> for CliError {
    fn from(e: FrontierError) -> Self {
        match e {
            FrontierError::TooManyStrategies { .. } | FrontierError::Infeasible { .. } => {
                CliError::Compute(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Infeasible(_) => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(m) => m.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let records = read_interactions(open(&args.interactions)?)?;
    if records.is_empty() {
        eprintln!("warning: {} has no interaction records", args.interactions.display());
    }
    let tests = match &args.tests {
        Some(p) => read_tests(open(p)?)?,
        None => Vec::new(),
    };
    let decls = match &args.categories {
        Some(p) => read_categories(open(p)?)?,
        None => infer_categories(&records, &tests),
    };
    let exposure = estimate_exposure(&records, &decls)?;
    let config = PriorConfig { smoothing: args.smoothing, window: args.window, ..PriorConfig::default() };
    let prior = estimate_prior(&tests, &decls, &config)?;
    let params = EstimatedParameters::combine(&decls, exposure, prior);
    for w in &params.warnings {
        eprintln!("warning: {w}");
    }
    let json = match &args.base {
        None => serde_json::to_string_pretty(&params).expect("serializable"),
        Some(base) => {
            let base = read_scenario(base)?;
            let k = params.categories.len();
            let pi = base.exposure().pi.clone();
            if pi.len() != k {
                return Err(CliError::Input(format!(
                    "base scenario has {} categories, records have {k}",
                    pi.len()
                )));
            }
            let scenario =
                params.into_scenario(pi, base.budget(), base.max_group(), base.group_menu().to_vec())?;
            scenario.to_json()
        }
    };
    write_file(&args.out, &json)
}

fn frontier(args: &FrontierArgs) -> Result<()> {
    let scenario = read_scenario(&args.scenario)?;
    let options = FrontierOptions { cap: Some(args.cap), ..FrontierOptions::default() };
    let exact = pareto_frontier_with(&scenario, &options)?;
    let exact_len = exact.len();
    let result = match args.desired {
        None => FrontierResult { seed: args.seed, ..exact },
        Some(desired) => {
            let mut params = TargetParams::new(desired, args.seed);
            if let Some(t) = args.tolerance {
                params.tolerance = t;
            }
            target_count_from_exact(&exact, params)?.1
        }
    };
    write_file(&args.out, &result.to_json())?;
    print!("{}", summary(&scenario, &result, exact_len, args.show));
    Ok(())
}

fn summary(scenario: &Scenario, result: &FrontierResult, exact_len: usize, show: usize) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "feasible {} (enumerated {}), exact frontier {}, returned {}",
        result.total_feasible,
        result.total_enumerated,
        exact_len,
        result.len()
    );
    if let Some(t) = &result.target {
        let _ = writeln!(
            s,
            "target {} +/- {}: alpha {:.6}, {} iterations, {}",
            t.desired,
            t.tolerance,
            t.alpha,
            t.iterations,
            if t.reached { "reached" } else { "not reached" }
        );
    }
    let ids: Vec<&str> = scenario.categories().iter().map(|c| c.id.as_str()).collect();
    let _ = write!(s, "{:>8} {:>12}", "id", "health");
    for id in &ids {
        let _ = write!(s, " {:>12}", format!("q[{id}]"));
    }
    let _ = writeln!(s, "  t / g");
    let rows = if show == 0 { result.len() } else { show.min(result.len()) };
    for e in &result.solutions[..rows] {
        let _ = write!(s, "{:>8} {:>12.4}", e.id, e.objectives.health);
        for q in &e.objectives.quarantine {
            let _ = write!(s, " {q:>12.4}");
        }
        let _ = writeln!(s, "  {}", e.strategy);
    }
    if rows < result.len() {
        let _ = writeln!(s, "... {} more", result.len() - rows);
    }
    s
}

fn strategy_from(value: &Value, index: usize) -> Result<(String, Strategy)> {
    let strategy: Strategy = serde_json::from_value(value.clone())
        .map_err(|e| CliError::Input(format!("strategy {index}: {e}")))?;
    let label = match (value.get("label").and_then(Value::as_str), value.get("id").and_then(Value::as_u64)) {
        (Some(l), _) => l.to_string(),
        (None, Some(id)) => format!("id {id}"),
        (None, None) => format!("strategy {}", index + 1),
    };
    Ok((label, strategy))
}

fn read_strategies(path: &Path) -> Result<Vec<(String, Strategy)>> {
    let value: Value = serde_json::from_reader(open(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let items = match &value {
        Value::Array(items) => items.clone(),
        Value::Object(map) => match map.get("solutions") {
            Some(Value::Array(items)) => items.clone(),
            _ => vec![value.clone()],
        },
        _ => return Err(CliError::Input(format!("{}: expected an object or a list", path.display()))),
    };
    if items.is_empty() {
        return Err(CliError::Input(format!("{}: no strategies", path.display())));
    }
    items.iter().enumerate().map(|(i, v)| strategy_from(v, i)).collect()
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let scenario = read_scenario(&args.scenario)?;
    let strategies = read_strategies(&args.strategy_file)?;
    for (label, s) in &strategies {
        if let Some(v) = violation(&scenario, s)? {
            return Err(CliError::Compute(format!("strategy {label:?} is infeasible: {v}")));
        }
    }
    let k = scenario.k();
    let initial = if args.initial_infected.is_empty() {
        let mut v = vec![0; k];
        v[0] = 5.min(scenario.category(0).n);
        v
    } else {
        args.initial_infected.clone()
    };
    let plot_cats = args
        .plot_categories
        .iter()
        .map(|id| scenario.index_of(id).ok_or_else(|| CliError::Input(format!("unknown category {id:?}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut sim = SimConfig::new(scenario, args.days, initial, args.seed);
    sim.beta = args.beta;
    sim.gamma = args.gamma;
    sim.quarantine_days = args.quarantine_days;
    sim.test_period_days = args.test_period;
    let cmp = compare_profiles(&sim, &strategies, args.replicates)?;
    cmp.write_csv(create(&args.out)?).map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    if let Some(plot) = &args.plot {
        let title = format!("Mean quarantined, {} replicates", args.replicates);
        write_file(plot, &quarantine_svg(&cmp, &plot_cats, &title))?;
    }

    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{} strategies x {} replicates, {} days", strategies.len(), args.replicates, args.days);
    let from = 20.min(args.days);
    let _ = write!(out, "{:<24}", format!("mean Q days {from}-{}", args.days));
    for id in &cmp.category_ids {
        let _ = write!(out, " {id:>12}");
    }
    let _ = writeln!(out);
    for (p, label) in cmp.labels.iter().enumerate() {
        let _ = write!(out, "{label:<24}");
        for c in 0..k {
            let _ = write!(out, " {:>12.3}", cmp.window_mean(p, c, from, args.days));
        }
        let _ = writeln!(out);
    }
    if args.r0_trials > 0 {
        let r0 = estimate_r0(
            &sim.scenario,
            sim.contact_matrix(),
            sim.beta,
            sim.gamma,
            args.r0_trials,
            50,
            args.seed,
        )?;
        let _ = writeln!(
            out,
            "R0 (index-case secondary infections, {} trials): {:.3} +/- {:.3}",
            r0.trials, r0.mean, r0.std_error
        );
    }
    Ok(())
}

fn run_serve(args: &ServeArgs) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let config = args.config();
    eprintln!("listening on http://{}", config.addr);
    runtime.block_on(serve(config)).map_err(|e| CliError::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Frontier(a) => frontier(a),
        Command::Simulate(a) => simulate(a),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
