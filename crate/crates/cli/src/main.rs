use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use temporal_search::channel::{
    mc_channel_step, multi_step_errors, truncation_bound, ChannelSpec, ExactChannel, MeanFieldChannel,
};
use temporal_search::ensemble::{sweep_with_workers, SweepSpec};
use temporal_search::evolution::{trace_distance, DensityMatrix, QuantumState};
use temporal_search::io::{sweep_csv, trajectory_csv, DensityMatrixJson, SweepSidecar};
use temporal_search::search::{nominal_time, peak_running_time, run_temporal_search, running_time};
use temporal_search::theory::{classify_regime_with, error_bound, thresholds, TheoryConstants};
use temporal_search::{SearchConfig, StreamKey};

const WORKERS_ENV: &str = "TSEARCH_WORKERS";

#[derive(Parser)]
#[command(name = "tsearch", version, about = "Quantum spatial search on random temporal networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one realization and write its success-probability trajectory.
    Run(RunArgs),
    /// Ensemble averages over a grid of (tau, p).
    Sweep(SweepArgs),
    /// Compare the exact averaged channel against its mean-field limit.
    ChannelCheck(ChannelArgs),
    /// Print thresholds and the regime verdict.
    Theory(TheoryArgs),
    /// Complete-graph search for a list of sizes.
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON search configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    marked: Option<usize>,
    #[arg(long)]
    site_energy: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// negative | positive
    #[arg(long)]
    sign: Option<String>,
    /// auto | spectral | taylor
    #[arg(long)]
    propagation: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory CSV; the manifest goes next to it.
    #[arg(long, default_value = "trajectory.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep specification.
    spec: PathBuf,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Worker threads; defaults to $TSEARCH_WORKERS, then to every core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 20)]
    k_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the final exact and mean-field density matrices here.
    #[arg(long)]
    states: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    n: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    c_fast: f64,
    #[arg(long, default_value_t = 1.0)]
    c_slow: f64,
    #[arg(long, default_value_t = 1.0)]
    c_low: f64,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
    n: Vec<usize>,
    /// Directory for per-size trajectory CSVs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl From<temporal_search::Error> for Failure {
    fn from(e: temporal_search::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    version: &'static str,
    master_seed: u64,
    config: Value,
    duration_seconds: f64,
    outputs: Vec<String>,
    #[serde(flatten)]
    details: Map<String, Value>,
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Config file fields, then flags on top.
fn merged_config(args: &RunArgs) -> Result<SearchConfig, Failure> {
    let mut obj = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(Failure::Validation(format!("{}: expected a JSON object", path.display()))),
                Err(e) => return Err(Failure::Validation(format!("{}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            obj.insert(key.to_string(), v);
        }
    };
    set("n", args.n.map(Value::from));
    set("p", args.p.map(Value::from));
    set("tau", args.tau.map(Value::from));
    set("gamma", args.gamma.map(Value::from));
    set("marked", args.marked.map(Value::from));
    set("site_energy", args.site_energy.map(Value::from));
    set("t_max", args.t_max.map(Value::from));
    set("dt", args.dt.map(Value::from));
    set("success_threshold", args.threshold.map(Value::from));
    set("sign", args.sign.clone().map(Value::from));
    set("propagation", args.propagation.clone().map(Value::from));
    let cfg: SearchConfig =
        serde_json::from_value(Value::Object(obj)).map_err(|e| Failure::Validation(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let start = Instant::now();
    let cfg = merged_config(&args)?;
    let key = StreamKey::single(args.seed);
    let traj = run_temporal_search(&cfg, &key)?;
    std::fs::write(&args.out, trajectory_csv(&traj))?;

    let first = running_time(&traj, cfg.success_threshold);
    let peak = peak_running_time(&traj);
    let t = cfg.nominal_time();
    let mut details = Map::new();
    details.insert("first_crossing".into(), to_value(&first.value));
    details.insert("peak_time".into(), to_value(&peak.peak_time));
    details.insert("peak_probability".into(), to_value(&peak.peak_probability));
    details.insert("nominal_time".into(), to_value(&t));
    details.insert("error_at_nominal_time".into(), to_value(&traj.probability_at(t).map(|p| 1.0 - p)));
    details.insert("interval_count".into(), to_value(&traj.interval_count));

    let manifest_file = manifest_path(&args.out);
    let manifest = RunManifest {
        command: "run",
        version: temporal_search::VERSION,
        master_seed: args.seed,
        config: to_value(&cfg),
        duration_seconds: start.elapsed().as_secs_f64(),
        outputs: vec![args.out.display().to_string(), manifest_file.display().to_string()],
        details,
    };
    write_json(&manifest_file, &manifest)?;
    print_json(&manifest);
    Ok(())
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    let w = match flag {
        Some(w) => Some(w),
        None => match std::env::var(WORKERS_ENV) {
            Ok(s) if !s.trim().is_empty() => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::Validation(format!("{WORKERS_ENV}: expected a positive integer, got {s:?}")))?,
            ),
            _ => None,
        },
    };
    if w == Some(0) {
        return Err(Failure::Validation("invalid value for `workers`: must be at least 1".into()));
    }
    Ok(w)
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let start = Instant::now();
    let text = std::fs::read_to_string(&args.spec)?;
    let spec: SweepSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", args.spec.display())))?;
    let workers = worker_count(args.workers)?;
    eprintln!("sweeping {} points x {} realizations", spec.points().len(), spec.reps);
    let result = sweep_with_workers(&spec, workers)?;
    std::fs::write(&args.out, sweep_csv(&result))?;
    for f in result.failures() {
        eprintln!("point tau={} p={} failed: {}", f.tau, f.p, f.failure.as_deref().unwrap_or(""));
    }

    let sidecar = SweepSidecar::new(&spec, &result);
    let manifest_file = manifest_path(&args.out);
    let mut details = Map::new();
    details.insert("total_censored".into(), to_value(&sidecar.total_censored));
    details.insert("failures".into(), to_value(&sidecar.failures));
    details.insert("workers".into(), to_value(&workers));
    let manifest = RunManifest {
        command: "sweep",
        version: temporal_search::VERSION,
        master_seed: spec.master_seed,
        config: to_value(&spec),
        duration_seconds: start.elapsed().as_secs_f64(),
        outputs: vec![args.out.display().to_string(), manifest_file.display().to_string()],
        details,
    };
    write_json(&manifest_file, &manifest)?;
    eprintln!("wrote {} and {}", args.out.display(), manifest_file.display());
    Ok(())
}

fn cmd_channel_check(args: ChannelArgs) -> CmdResult {
    let spec = ChannelSpec { gamma: args.gamma, ..ChannelSpec::new(args.n, args.p, args.tau) };
    spec.validate()?;
    let rho0 = DensityMatrix::pure(&QuantumState::uniform(args.n));
    let bound = truncation_bound(&spec, args.k_max)?;
    let steps = multi_step_errors(&rho0, &spec, args.m.max(1), args.k_max)?;
    let last = *steps.last().expect("at least one step");

    let exact_one = ExactChannel::new(&spec)?.apply(&rho0)?;
    let mc_one = mc_channel_step(&rho0, &spec, args.samples.max(1), args.seed)?;
    let mc_distance = trace_distance(&exact_one, &mc_one)?;
    let all_dominated = steps.iter().all(|s| s.dominated);

    let report = json!({
        "spec": spec,
        "gamma": spec.gamma(),
        "m": args.m,
        "samples": args.samples,
        "seed": args.seed,
        "delta_hat": bound,
        "true_error": last.true_error,
        "bound": last.bound,
        "dominated": all_dominated,
        "mc_vs_exact_distance": mc_distance,
        "steps": steps,
    });
    if let Some(path) = &args.states {
        let exact = ExactChannel::new(&spec)?.apply_n(&rho0, args.m)?;
        let mean_field = MeanFieldChannel::new(args.n, args.tau, 0)?;
        let mut mf = rho0.clone();
        for _ in 0..args.m {
            mf = mean_field.apply(&mf)?;
        }
        write_json(
            path,
            &json!({"exact": DensityMatrixJson::from(&exact), "mean_field": DensityMatrixJson::from(&mf)}),
        )?;
    }
    print_json(&report);
    if !all_dominated {
        return Err(Failure::Numerical(format!(
            "true error {} exceeds the bound {} after {} steps",
            last.true_error, last.bound, last.steps
        )));
    }
    Ok(())
}

fn cmd_theory(args: TheoryArgs) -> CmdResult {
    let invalid = |field: &str, v: f64| Failure::Validation(format!("invalid value for `{field}`: got {v}"));
    if !(args.n >= 2.0 && args.n.is_finite()) {
        return Err(invalid("n", args.n));
    }
    if !(args.p > 0.0 && args.p <= 1.0) {
        return Err(invalid("p", args.p));
    }
    if !(args.tau > 0.0 && args.tau.is_finite()) {
        return Err(invalid("tau", args.tau));
    }
    let c = TheoryConstants { tau_fast: args.c_fast, tau_slow: args.c_slow, low_p: args.c_low };
    let report = json!({
        "n": args.n,
        "p": args.p,
        "tau": args.tau,
        "constants": c,
        "thresholds": thresholds(args.n, args.p, &c),
        "error_bound": error_bound(args.n, args.p, args.tau, 1.0),
        "verdict": classify_regime_with(args.n, args.p, args.tau, &c),
    });
    print_json(&report);
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> CmdResult {
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        let cfg = SearchConfig::new(n, 1.0, 1.0);
        let traj = run_temporal_search(&cfg, &StreamKey::single(0))?;
        let peak = peak_running_time(&traj);
        let t = nominal_time(n);
        let prob_ok = peak.peak_probability >= 1.0 - 5.0 / n as f64;
        let time_ok = (peak.peak_time - t).abs() <= 0.05 * t;
        if let Some(dir) = &args.out_dir {
            std::fs::write(dir.join(format!("baseline_n{n}.csv")), trajectory_csv(&traj))?;
        }
        rows.push(json!({
            "n": n,
            "nominal_time": t,
            "peak_time": peak.peak_time,
            "peak_probability": peak.peak_probability,
            "first_crossing": running_time(&traj, cfg.success_threshold).value,
            "error_at_nominal_time": traj.probability_at(t).map(|p| 1.0 - p),
            "within_tolerance": prob_ok && time_ok,
        }));
    }
    print_json(&rows);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ChannelCheck(a) => cmd_channel_check(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Baseline(a) => cmd_baseline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
