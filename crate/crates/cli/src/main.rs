use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastk_core::greedy_core::Mode;
use fastk_core::metricspace::cost_of_ids;
use fastk_core::reference_oracles::{brute_optimal, kmeanspp};
use fastk_core::Dataset;

use fastk_cli::bench::{self, BenchOptions};
use fastk_cli::cluster::{self, ClusterOptions, Projection};
use fastk_cli::gen::{self, GenOptions};
use fastk_cli::ingest::{self, Format};
use fastk_cli::report::RunReport;
use fastk_cli::CliError;

#[derive(Parser)]
#[command(name = "fastk", version, about = "Greedy ball-selection (k,z)-clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded Gaussian-mixture dataset.
    Gen(GenArgs),
    /// Cluster a dataset and report the center ordering and costs.
    Cluster(ClusterArgs),
    /// Recompute costs for a report's centers (or an explicit center list).
    Eval(EvalArgs),
    /// Run a baseline: k-means++ seeding or exhaustive optimum.
    Baseline(BaselineArgs),
    /// Time full runs over doubling n and fit the log-log slope.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Lsh,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Lsh => Mode::Lsh,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    F32le,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::F32le => Format::F32le,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Dataset file.
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        let format = self.format.map_or_else(|| Format::from_path(&self.input), Format::from);
        Ok(ingest::read(&self.input, format)?)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 0.1)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Output format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of centers.
    #[arg(long, required_unless_present = "incremental")]
    k: Option<usize>,
    /// Emit the full center ordering instead of stopping at k.
    #[arg(long, conflicts_with = "k")]
    incremental: bool,
    #[arg(long, default_value_t = 2.0)]
    z: f64,
    #[arg(long, default_value_t = 5.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lsh")]
    mode: ModeArg,
    /// Failure probability for the hashing guarantees (default 1/n²).
    #[arg(long)]
    delta_failure: Option<f64>,
    /// Project to this many dimensions before clustering.
    #[arg(long, conflicts_with = "no_project")]
    project_dim: Option<usize>,
    /// Never project, even in high dimension.
    #[arg(long)]
    no_project: bool,
    /// Prefix lengths to report costs for.
    #[arg(long, value_delimiter = ',')]
    cost_at: Vec<usize>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Report whose centers (and z, k values) are re-evaluated.
    #[arg(long, required_unless_present = "centers")]
    report: Option<PathBuf>,
    /// Explicit center ids, in order.
    #[arg(long, value_delimiter = ',', conflicts_with = "report")]
    centers: Vec<usize>,
    /// Overrides the report's z.
    #[arg(long)]
    z: Option<f64>,
    /// Prefix lengths; defaults to the report's, or all centers.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Kmeanspp,
    Optimal,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    z: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    min_log2: u32,
    #[arg(long, default_value_t = 14)]
    max_log2: u32,
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value_t = 5.0)]
    c: f64,
    #[arg(long, default_value_t = 2.0)]
    z: f64,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lsh")]
    mode: ModeArg,
    /// Write the JSON table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn warn_boundary_c(c: f64) {
    if c == 5.0 {
        eprintln!("warning: c = 5 is the boundary case; the runtime bound is stated for c > 5");
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let data = gen::mixture(&GenOptions {
        n: args.n,
        d: args.d,
        clusters: args.clusters,
        spread: args.spread,
        seed: args.seed,
    })?;
    let format = args.format.map_or_else(|| Format::from_path(&args.out), Format::from);
    ingest::write(&args.out, &data, format).map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    eprintln!("wrote {} points in {} dimensions to {} ({format})", data.n(), data.d(), args.out.display());
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), CliError> {
    warn_boundary_c(args.c);
    let data = args.input.load()?;
    let projection = match (args.no_project, args.project_dim) {
        (true, _) => Projection::Off,
        (false, Some(t)) => Projection::Dim(t),
        (false, None) => Projection::Auto,
    };
    let mut opts = ClusterOptions::new(args.k, args.z, args.c, args.seed, args.mode.into());
    opts.failure_prob = args.delta_failure;
    opts.projection = projection;
    opts.cost_at = args.cost_at;
    let report = cluster::run(&data, &opts)?;
    print!("{}", report.table());
    if let Some(path) = &args.out {
        write_file(path, &report.to_json())?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let data = args.input.load()?;
    let (centers, mut z, mut ks) = match &args.report {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let report = RunReport::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let ks = report.costs.iter().map(|c| c.k).collect();
            (report.centers, report.params.z, ks)
        }
        None => (args.centers.clone(), 2.0, Vec::new()),
    };
    if let Some(over) = args.z {
        z = over;
    }
    if !args.k.is_empty() {
        ks = args.k;
    }
    if ks.is_empty() {
        ks.push(centers.len());
    }
    let costs = cluster::evaluate(&data, &centers, &ks, z)?;
    println!("{:>8}  {:>24}", "k", "cost");
    for entry in &costs {
        println!("{:>8}  {:>24.17e}", entry.k, entry.cost);
    }
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<(), CliError> {
    let data = args.input.load()?;
    if args.k == 0 || args.k > data.n() {
        return Err(CliError::Usage(format!("k must lie in 1..={}, got {}", data.n(), args.k)));
    }
    let (centers, cost) = match args.method {
        Method::Kmeanspp => {
            let centers = kmeanspp(&data, args.k, args.z, args.seed);
            let cost = cost_of_ids(&data, &centers, args.z)?;
            (centers, cost)
        }
        Method::Optimal => {
            let opt = brute_optimal(&data, args.k, args.z)?;
            (opt.centers, opt.cost)
        }
    };
    let ids: Vec<String> = centers.iter().map(usize::to_string).collect();
    println!("centers {}", ids.join(","));
    println!("cost {cost:.17e}");
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    warn_boundary_c(args.c);
    if args.min_log2 > args.max_log2 || args.max_log2 > 30 {
        return Err(CliError::Usage("need --min-log2 <= --max-log2 <= 30".into()));
    }
    let opts = BenchOptions {
        sizes: (args.min_log2..=args.max_log2).map(|e| 1usize << e).collect(),
        d: args.d,
        c: args.c,
        z: args.z,
        clusters: args.clusters,
        spread: args.spread,
        seed: args.seed,
        mode: args.mode.into(),
    };
    let table = bench::run(&opts)?;
    print!("{}", table.table());
    if let Some(path) = &args.out {
        write_file(path, &table.to_json())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
