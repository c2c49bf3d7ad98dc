use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use mugscreen::datagen::DesignKind;
use mugscreen::experiment::{
    load_problem, preset, read_trials_csv, run_fixed_design, run_sweep, screen_problem, solve_single,
    write_fixed_design, write_summary_csv, write_supports_csv, write_sweep, ExperimentConfig, Protocol, SweepOutput,
    PRESET_NAMES,
};
use mugscreen::metrics::aggregate;
use mugscreen::screening::Method;
use mugscreen::MugError;

#[derive(Parser)]
#[command(name = "mugscreen", version, about = "Tuning-free variable screening with multiple groupings")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the number of groupings K (or run the fixed-design preset).
    Simulate(RunArgs),
    /// Sweep the group size m.
    Msweep(RunArgs),
    /// Sweep the magnitude of one coefficient.
    Bsweep(RunArgs),
    /// Screen a design/response pair read from CSV files.
    Screen(ScreenArgs),
    /// Fit one Lasso or group-Lasso problem and print diagnostics as JSON.
    Solve(SolveArgs),
    /// Recompute summary statistics from a trials.csv file.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; its keys override the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Design matrix CSV (rows are observations); replaces the simulated design.
    #[arg(long)]
    design: Option<PathBuf>,
    /// The design CSV has a header row.
    #[arg(long)]
    header: bool,
    /// Record wall-clock times in trials.csv.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct ScreenArgs {
    /// Design matrix CSV, rows are observations.
    #[arg(long)]
    x: PathBuf,
    /// Response CSV, one value per row.
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    header: bool,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "mug,sis,lcv,mug_plus_lcv")]
    methods: Vec<String>,
    /// JSON configuration (the `mug` and `lcv` sections are used).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of groupings.
    #[arg(long)]
    k: Option<usize>,
    /// Largest group size.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    header: bool,
    /// Group size; 1 fits the Lasso.
    #[arg(long, default_value_t = 1)]
    group_size: usize,
    /// Penalty as a fraction of lambda_max.
    #[arg(long, default_value_t = 0.1)]
    lambda_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// trials.csv to aggregate.
    #[arg(long)]
    trials: PathBuf,
    /// Output CSV (default: summary.csv next to the input).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// 2: configuration, 3: data, 4: solver.
fn exit_code(err: &MugError) -> u8 {
    match err {
        MugError::InvalidConfig { .. }
        | MugError::Json(_)
        | MugError::EmptyList
        | MugError::BadGroupIndex { .. }
        | MugError::InvalidGrouping(_)
        | MugError::IndexOutOfRange { .. } => 2,
        MugError::SolverFailure(_) => 4,
        _ => 3,
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

fn read_config(base: ExperimentConfig, path: Option<&Path>) -> Result<ExperimentConfig, MugError> {
    let Some(path) = path else { return Ok(base) };
    let text = fs::read_to_string(path)?;
    let patch: Value = serde_json::from_str(&text)?;
    let mut value = serde_json::to_value(&base)?;
    merge(&mut value, patch);
    serde_json::from_value(value).map_err(|e| MugError::InvalidConfig {
        field: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn experiment_config(args: &RunArgs, forced: Option<Protocol>) -> Result<ExperimentConfig, MugError> {
    let base = match &args.preset {
        Some(name) => preset(name)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = read_config(base, args.config.as_deref())?;
    if let Some(p) = forced {
        cfg.protocol = p;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(design) = &args.design {
        cfg.sim.design = DesignKind::Csv;
        cfg.sim.csv_path = Some(design.clone());
    }
    if args.header {
        cfg.sim.csv_header = true;
    }
    if args.timings {
        cfg.record_timings = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(out: &SweepOutput) {
    println!(
        "{:<13} {:>4} {:>3} {:>8} {:>9} {:>8} {:>9} {:>8} {:>6}",
        "method", "K", "m", "fpr", "fpr_std", "fnr", "fnr_std", "card", "trials"
    );
    for r in &out.summary {
        let b = r.beta_min.map_or_else(String::new, |b| format!("  beta_min={b}"));
        println!(
            "{:<13} {:>4} {:>3} {:>8.4} {:>9.4} {:>8.4} {:>9.4} {:>8.2} {:>6}{b}",
            r.method.to_string(),
            r.k_groupings,
            r.m,
            r.fpr_mean,
            r.fpr_std,
            r.fnr_mean,
            r.fnr_std,
            r.card_mean,
            r.trials
        );
    }
}

fn run_experiment(args: &RunArgs, forced: Option<Protocol>) -> Result<(), MugError> {
    let cfg = experiment_config(args, forced)?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
    if cfg.protocol == Protocol::FixedDesign {
        let out = run_fixed_design(&cfg)?;
        write_fixed_design(&cfg.output_dir, &out)?;
        println!("true support: {}  lasso stage: |S| = {}", out.truth.support, out.lasso_cardinality);
        for s in &out.summary {
            println!(
                "{:?}: mean |S| = {:.2} (sd {:.2}, range {}..{}), truth contained in {:.1}% of {} runs",
                s.strategy,
                s.card_mean,
                s.card_std,
                s.card_min,
                s.card_max,
                100.0 * s.containment_rate,
                s.repetitions
            );
        }
    } else {
        let out = run_sweep(&cfg)?;
        write_sweep(&cfg.output_dir, &out)?;
        for w in &out.warnings {
            log::warn!("{w}");
        }
        print_summary(&out);
    }
    eprintln!("wrote results to {}", cfg.output_dir.display());
    Ok(())
}

fn screen(args: &ScreenArgs) -> Result<(), MugError> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.trim().parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = read_config(ExperimentConfig::default(), args.config.as_deref())?;
    if let Some(k) = args.k {
        cfg.mug.big_k = k;
    }
    if let Some(m) = args.m {
        cfg.mug.m_max = m;
    }
    if let Some(seed) = args.seed {
        cfg.mug.seed = seed;
        cfg.lcv.seed = seed;
    }
    cfg.mug.validate()?;
    let problem = load_problem(&args.x, &args.y, args.header)?;
    log::info!("loaded n = {}, p = {}", problem.n(), problem.p());
    let results = screen_problem(&problem, &methods, &cfg.mug, &cfg.lcv)?;
    for r in &results {
        for w in &r.warnings {
            log::warn!("{}: {w}", r.method);
        }
    }
    match &args.out {
        Some(path) => write_supports_csv(fs::File::create(path)?, &results),
        None => write_supports_csv(io::stdout().lock(), &results),
    }
}

fn solve(args: &SolveArgs) -> Result<(), MugError> {
    let cfg = read_config(ExperimentConfig::default(), args.config.as_deref())?;
    let problem = load_problem(&args.x, &args.y, args.header)?;
    let report = solve_single(&problem, args.group_size, args.lambda_ratio, &cfg.mug.solver, args.seed)?;
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &report)?;
    writeln!(stdout)?;
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), MugError> {
    let rows = aggregate(&read_trials_csv(&args.trials)?)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.trials.with_file_name("summary.csv"));
    write_summary_csv(&out, &rows)?;
    println!("{} summary rows written to {}", rows.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => run_experiment(a, None),
        Command::Msweep(a) => run_experiment(a, Some(Protocol::MSweep)),
        Command::Bsweep(a) => run_experiment(a, Some(Protocol::BetaMinSweep)),
        Command::Screen(a) => screen(a),
        Command::Solve(a) => solve(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
