use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use influence_core::camera::{builtin_scenario, run_scenario, system_performance, ScenarioSpec};
use influence_core::detection::{influence_matrix, DetectionStrategy, InfluenceMatrix, MeasureChoice};
use influence_core::model::{read_log, write_log, LogFormat, LogIoError};
use influence_core::taxonomy::{builtin_descriptor, recommend_strategy, SystemDescriptor};

mod report;

#[derive(Parser)]
#[command(name = "influence-scope", version, about = "Detect hidden mutual influences between configurable agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a camera scenario and write its sample log (.csv or .json).
    Simulate(SimulateArgs),
    /// Build the influence matrix of a sample log.
    Detect(DetectArgs),
    /// Recommend a detection strategy for a system descriptor.
    Recommend(RecommendArgs),
    /// Render an influence matrix as a ranked text report plus CSV.
    Report(ReportArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(group = "source")]
    scenario: Option<PathBuf>,
    /// Built-in scenario name instead of a file.
    #[arg(long, group = "source")]
    builtin: Option<String>,
    /// Defaults to the scenario's `steps`.
    #[arg(long)]
    steps: Option<usize>,
    /// Defaults to the scenario's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Sample log (.csv with schema sidecar, or .json).
    log: PathBuf,
    /// Strategy JSON; flags below override its fields.
    #[arg(long)]
    strategy: Option<PathBuf>,
    #[arg(long)]
    measure: Option<MeasureChoice>,
    /// Comma-separated lags, e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    lags: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    own_part_bins: Option<usize>,
    #[arg(long)]
    min_partition_size: Option<usize>,
    /// Also score pairs of remote parts jointly.
    #[arg(long)]
    joint: bool,
    /// Score remote parts against the whole log only.
    #[arg(long)]
    no_conditioning: bool,
    /// Worker threads for entry evaluation.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix JSON; a CSV summary is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct RecommendArgs {
    /// Descriptor JSON file.
    #[arg(group = "source")]
    descriptor: Option<PathBuf>,
    #[arg(long, group = "source")]
    builtin: Option<String>,
    /// Also write the recommendation here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    matrix: PathBuf,
    /// Text report; the CSV goes next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input(m) | Self::Io(m) => f.write_str(m),
        }
    }
}

fn input(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl From<LogIoError> for CliError {
    fn from(e: LogIoError) -> Self {
        match e {
            LogIoError::Io { .. } => Self::Io(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| io_err(path, e))
}

/// Fails early when the directory an output goes into is missing.
fn check_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::Io(format!("{}: directory does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

/// `out.json` -> `out.csv`; refuses to let both outputs land on one file.
fn sibling_csv(path: &Path) -> Result<PathBuf, CliError> {
    let csv = path.with_extension("csv");
    if csv == path {
        return Err(input(format!("{}: --out must not end in .csv", path.display())));
    }
    Ok(csv)
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let spec = match (&args.scenario, &args.builtin) {
        (Some(path), _) => ScenarioSpec::from_json(&read_text(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => builtin_scenario(name).map_err(input)?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    if LogFormat::from_path(&args.out).is_none() {
        return Err(input(LogIoError::UnsupportedFormat(args.out.clone())));
    }
    check_parent(&args.out)?;
    let steps = args.steps.unwrap_or(spec.steps);
    let seed = args.seed.unwrap_or(spec.seed);
    info!("running {} for {steps} steps, seed {seed}", spec.name);
    let log = run_scenario(&spec, steps, &spec.policy, seed).map_err(input)?;
    write_log(&args.out, &log)?;

    let total: f64 = log
        .records
        .iter()
        .map(|r| system_performance(&r.performance.values().copied().collect::<Vec<_>>()))
        .sum();
    println!("records: {}", log.len());
    println!("mean system performance: {}", total / log.len() as f64);
    Ok(())
}

fn strategy_from(args: &DetectArgs) -> Result<DetectionStrategy, CliError> {
    let mut s = match &args.strategy {
        Some(path) => serde_json::from_str(&read_text(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?,
        None => DetectionStrategy::default(),
    };
    if let Some(m) = args.measure {
        s.measure = m;
    }
    if let Some(lags) = &args.lags {
        s.lag_set = lags.clone();
    }
    if let Some(a) = args.alpha {
        s.alpha = a;
    }
    if let Some(r) = args.permutations {
        s.permutations = r;
    }
    if let Some(b) = args.own_part_bins {
        s.own_part_bins = b;
    }
    if let Some(m) = args.min_partition_size {
        s.min_partition_size = m;
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    s.joint_pairs |= args.joint;
    if args.no_conditioning {
        s.conditioning = false;
    }
    s.validate().map_err(input)?;
    Ok(s)
}

fn detect(args: DetectArgs) -> Result<(), CliError> {
    let strategy = strategy_from(&args)?;
    let csv_path = sibling_csv(&args.out)?;
    check_parent(&args.out)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(input)?;
    }

    let log = read_log(&args.log)?;
    let issues = log.validate();
    if !issues.is_empty() {
        let list: Vec<String> = issues.iter().map(|i| format!("  {i}")).collect();
        return Err(input(format!(
            "{}: {} validation issue(s)\n{}",
            args.log.display(),
            issues.len(),
            list.join("\n")
        )));
    }
    info!("{} records, measure {}", log.len(), strategy.measure);
    let matrix = influence_matrix(&log, &strategy).map_err(input)?;

    let mut json = create(&args.out)?;
    let mut csv = create(&csv_path)?;
    json.write_all(matrix.to_json().as_bytes()).map_err(|e| io_err(&args.out, e))?;
    csv.write_all(report::summary_csv(&matrix, false).as_bytes())
        .map_err(|e| io_err(&csv_path, e))?;

    let flagged = report::flagged_lines(&matrix);
    if flagged.is_empty() {
        println!("no influences flagged ({} entries)", matrix.entries.len() + matrix.joint_entries.len());
    } else {
        println!("flagged influences:");
        for line in flagged {
            println!("  {line}");
        }
    }
    Ok(())
}

fn recommend(args: RecommendArgs) -> Result<(), CliError> {
    let descriptor: SystemDescriptor = match (&args.descriptor, &args.builtin) {
        (Some(path), _) => serde_json::from_str(&read_text(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => builtin_descriptor(name).map_err(input)?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    descriptor.validate().map_err(input)?;
    let mut text = serde_json::to_string_pretty(&recommend_strategy(&descriptor)).expect("recommendations serialize");
    text.push('\n');
    print!("{text}");
    if let Some(out) = &args.out {
        fs::write(out, &text).map_err(|e| io_err(out, e))?;
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<(), CliError> {
    let text = read_text(&args.matrix)?;
    let matrix: InfluenceMatrix =
        serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", args.matrix.display())))?;
    let csv_path = sibling_csv(&args.out)?;
    fs::write(&args.out, report::render(&matrix)).map_err(|e| io_err(&args.out, e))?;
    fs::write(&csv_path, report::summary_csv(&matrix, true)).map_err(|e| io_err(&csv_path, e))?;
    println!("wrote {} and {}", args.out.display(), csv_path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INFLUENCE_SCOPE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detect(a) => detect(a),
        Command::Recommend(a) => recommend(a),
        Command::Report(a) => report_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
