mod commands;
mod input;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Counting, random generation and weight fitting for combinatorial
/// specifications.
#[derive(Parser, Debug)]
#[command(name = "gramfreq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a grammar and print its standardization report.
    Validate(SpecArgs),
    /// Print the weighted number of structures of a given size.
    Count(CountArgs),
    /// Draw random structures of a given size under the weighted distribution.
    Sample(SampleArgs),
    /// Print the exact expected frequency of atoms at a given size.
    Freqs(FreqsArgs),
    /// Fit weights to the grammar's target frequencies at a given size.
    Fit(FitArgs),
    /// Dominant singularity and limiting frequencies of a right-linear grammar.
    Asympt(AsymptArgs),
    /// Weights whose limiting frequencies match the targets (right-linear grammars).
    Solve(SolveArgs),
    /// Draw structures uniformly among those with prescribed atom occurrences.
    ExactSample(ExactArgs),
}

#[derive(Args, Debug)]
struct SpecArgs {
    /// Grammar file.
    spec: PathBuf,
}

#[derive(Args, Debug)]
struct WeightArgs {
    /// File of `atom<TAB>weight` (or `atom=weight`) lines.
    #[arg(long, value_name = "FILE")]
    weights_file: Option<PathBuf>,
    /// Weight override, e.g. `-w a=3/2`; wins over the file and the grammar.
    #[arg(short = 'w', long = "weight", value_name = "ATOM=VALUE")]
    weights: Vec<String>,
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Target override, e.g. `-t a=0.25`; wins over the grammar.
    #[arg(short = 't', long = "target", value_name = "ATOM=VALUE")]
    targets: Vec<String>,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short = 'n', long)]
    size: usize,
    /// Print every size up to `--size` as a table.
    #[arg(long)]
    upto: bool,
    /// Class to count instead of the axiom.
    #[arg(long)]
    class: Option<String>,
    #[command(flatten)]
    weights: WeightArgs,
    /// Directory for cached count tables.
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Word,
    Tree,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short = 'n', long)]
    size: usize,
    /// Number of structures.
    #[arg(short = 'm', long, default_value_t = 1)]
    count: usize,
    /// Random seed; a fresh one is drawn and printed when absent.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Word)]
    format: Format,
    /// Generation threads, each with its own derived seed.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Dp,
    Pointing,
}

#[derive(Args, Debug)]
struct FreqsArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short = 'n', long)]
    size: usize,
    /// Route used for each atom; by default the marked grammar when the
    /// specification allows it.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Report every atom instead of the distinguished ones.
    #[arg(long, conflicts_with = "atoms")]
    all: bool,
    /// Comma-separated atoms to report.
    #[arg(long, value_delimiter = ',')]
    atoms: Vec<String>,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(short = 'n', long)]
    size: usize,
    #[command(flatten)]
    targets: TargetArgs,
    /// Starting and fixed weights.
    #[command(flatten)]
    weights: WeightArgs,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    #[arg(long, default_value_t = 5000)]
    max_evaluations: usize,
    /// Atom whose weight stays fixed (repeatable).
    #[arg(long = "pin", value_name = "ATOM")]
    pinned: Vec<String>,
    /// Randomize restarts of the simplex with this seed.
    #[arg(long)]
    restart_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct AsymptArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    targets: TargetArgs,
    /// Weights of the atoms without a target.
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Occurrences of each tracked atom, e.g. `a=2,b=2`.
    #[arg(long, value_name = "ATOM=COUNT,...")]
    occurrences: String,
    /// Total size; defaults to the sum of the occurrences.
    #[arg(short = 'n', long)]
    size: Option<usize>,
    #[arg(short = 'm', long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Word)]
    format: Format,
}

/// Failure of a command, mapped to an exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Lib(gramfreq::Error),
}

impl From<gramfreq::Error> for Failure {
    fn from(e: gramfreq::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn report(&self) -> (u8, String) {
        use gramfreq::ErrorKind;
        match self {
            Failure::Usage(m) => (2, format!("error[UsageError]: {m}")),
            Failure::Io(m) => (2, format!("error[IoError]: {m}")),
            Failure::Lib(e) => {
                let status = match e.kind() {
                    ErrorKind::Spec => 3,
                    ErrorKind::Numeric => 4,
                    ErrorKind::Resource => 5,
                };
                (status, format!("error[{}]: {e}", e.code()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a, &mut out),
        Command::Count(a) => commands::count(&a, &mut out),
        Command::Sample(a) => commands::sample(&a, &mut out),
        Command::Freqs(a) => commands::freqs(&a, &mut out),
        Command::Fit(a) => commands::fit(&a, &mut out),
        Command::Asympt(a) => commands::asympt(&a, &mut out),
        Command::Solve(a) => commands::solve(&a, &mut out),
        Command::ExactSample(a) => commands::exact_sample(&a, &mut out),
    };
    let flushed = out.flush();
    match result.and_then(|_| flushed.map_err(|e| Failure::Io(e.to_string()))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (status, line) = f.report();
            eprintln!("{line}");
            ExitCode::from(status)
        }
    }
}
