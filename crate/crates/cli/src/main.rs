use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_lab::dyson::solve_free_stieltjes;
use spectral_lab::ensembles::{sample_matrix, EnsembleSpec};
use spectral_lab::formats::{
    parse_complex, parse_matrix_csv, parse_measure, parse_points, parse_values, write_dyson_table,
    write_matrix_csv, write_spectrum_csv, Num,
};
use spectral_lab::lab::{run_experiment, summarize, summarize_dir, ExperimentConfig};
use spectral_lab::metrics::{
    angular_mean, delocalization_threshold, disk_law_distance, kolmogorov_distance, log_potential,
    log_window_bound_check, replacement_gap, theoretical_smin_floor, truncated_log_split, FloorParams,
};
use spectral_lab::spectra::SpectralSample;
use spectral_lab::{LabError, C64};

#[derive(Parser)]
#[command(name = "speclab", version, about = "Seeded spectral experiments on structured random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one matrix and print it as CSV.
    Sample(SampleArgs),
    /// Print eigenvalues, singular values and optional eigenvector inf-norms.
    Spectrum(SpectrumArgs),
    /// Tabulate the free Stieltjes transform over a (z, η) grid.
    Dyson(DysonArgs),
    /// Evaluate one metric on input files.
    #[command(subcommand)]
    Metric(MetricCommand),
    /// Run or summarize a batch experiment.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct DrawArgs {
    /// Ensemble as inline JSON or a path to a JSON file.
    #[arg(long)]
    ensemble: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    draw: DrawArgs,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    draw: Option<DrawArgs>,
    /// Read the matrix from a CSV file instead of sampling it.
    #[arg(long, conflicts_with = "ensemble")]
    matrix: Option<PathBuf>,
    /// Also compute eigenvector inf-norms.
    #[arg(long)]
    vectors: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DysonArgs {
    /// Shift, e.g. 0.5 or 0.3+0.2i; repeatable.
    #[arg(long = "z", required = true, allow_hyphen_values = true)]
    z: Vec<String>,
    /// Spectral parameter with Im > 0, e.g. 0.5i; repeatable.
    #[arg(long = "eta", required = true, allow_hyphen_values = true)]
    eta: Vec<String>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MetricCommand {
    /// Kolmogorov distance between two measures on [0, ∞).
    Kolmogorov {
        mu: PathBuf,
        nu: PathBuf,
    },
    /// (1/n) Σ log σ_i of a list of singular values.
    LogPotential {
        values: PathBuf,
        /// Also split at this threshold into head and tail sums.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// |log-potential difference| of two singular value lists.
    ReplacementGap {
        values: PathBuf,
        reference: PathBuf,
    },
    /// Both sides of the log-window bound on [a, b].
    WindowBound {
        mu: PathBuf,
        nu: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Radial distance of eigenvalues (re,im per line) to the uniform disk law.
    DiskLaw {
        points: PathBuf,
    },
    /// Theoretical log-floor for s_min, from JSON parameters.
    Floor {
        /// Inline JSON or a path, e.g. {"kind":"block-band","n":64,"b":16}.
        params: String,
    },
    /// Delocalization threshold b^(−1/10)·n^c, or b^(−1/16)·n^c with --general.
    Delocalization {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        general: bool,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Print the report of a finished run.
    Summarize { dir: PathBuf },
}

/// Exit status: 0 pass, 1 threshold failure, 2 configuration error, 3 runtime failure.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Config(_)
            | LabError::InvalidEnsemble(_)
            | LabError::InvalidArgument(_)
            | LabError::Parse { .. }
            | LabError::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn inline_or_file(arg: &str) -> CliResult<String> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        read_text(Path::new(arg))
    }
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn draw(args: &DrawArgs) -> CliResult<spectral_lab::CMat> {
    let spec = EnsembleSpec::from_json(&inline_or_file(&args.ensemble)?)?;
    Ok(sample_matrix(&spec, args.seed, args.trial)?.values)
}

fn complex_list(items: &[String]) -> CliResult<Vec<C64>> {
    items.iter().map(|s| parse_complex(s).map_err(Failure::from)).collect()
}

fn run_metric(cmd: MetricCommand) -> CliResult<bool> {
    match cmd {
        MetricCommand::Kolmogorov { mu, nu } => {
            let mu = parse_measure(&read_text(&mu)?)?;
            let nu = parse_measure(&read_text(&nu)?)?;
            if mu.points()[0] < 0.0 || nu.points()[0] < 0.0 {
                return Err(Failure::Config("kolmogorov needs measures on [0, ∞)".into()));
            }
            println!("{}", kolmogorov_distance(&mu, &nu));
        }
        MetricCommand::LogPotential { values, threshold } => {
            let mut sv = parse_values(&read_text(&values)?)?;
            sv.sort_by(|a, b| b.total_cmp(a));
            match threshold {
                None => println!("{}", log_potential(&sv)?),
                Some(t) => {
                    let split = truncated_log_split(&sv, t)?;
                    println!("head,tail,tail_count");
                    println!("{},{},{}", split.head, split.tail, split.tail_count);
                }
            }
        }
        MetricCommand::ReplacementGap { values, reference } => {
            let x = parse_values(&read_text(&values)?)?;
            let g = parse_values(&read_text(&reference)?)?;
            println!("{}", replacement_gap(&x, &g)?);
        }
        MetricCommand::WindowBound { mu, nu, a, b } => {
            let mu = parse_measure(&read_text(&mu)?)?;
            let nu = parse_measure(&read_text(&nu)?)?;
            let w = log_window_bound_check(&mu, &nu, a, b)?;
            println!("lhs,rhs,holds");
            println!("{},{},{}", w.lhs, w.rhs, w.holds);
            return Ok(w.holds);
        }
        MetricCommand::DiskLaw { points } => {
            let eigs = parse_points(&read_text(&points)?)?;
            println!("disk_law_distance,angular_mean");
            println!("{},{}", disk_law_distance(&eigs)?, angular_mean(&eigs).norm());
        }
        MetricCommand::Floor { params } => {
            let p: FloorParams = serde_json::from_str(&inline_or_file(&params)?)
                .map_err(|e| Failure::Config(format!("floor parameters: {e}")))?;
            let f = theoretical_smin_floor(p)?;
            println!("log_value,value");
            match f.value {
                Some(v) => println!("{},{}", Num(f.log_value), Num(v)),
                None => println!("{},", Num(f.log_value)),
            }
        }
        MetricCommand::Delocalization { b, n, c, general } => {
            println!("{}", delocalization_threshold(b, n, c, !general)?);
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Sample(args) => {
            let x = draw(&args.draw)?;
            emit(&write_matrix_csv(&x), args.output.as_deref())?;
        }
        Command::Spectrum(args) => {
            let x = match (&args.matrix, &args.draw) {
                (Some(path), _) => parse_matrix_csv(&read_text(path)?)?,
                (None, Some(d)) => draw(d)?,
                (None, None) => return Err(Failure::Config("give --ensemble or --matrix".into())),
            };
            let mut s = SpectralSample::of_matrix(&x, args.vectors)?;
            if let (None, Some(d)) = (&args.matrix, &args.draw) {
                s.seed = Some(d.seed);
                s.trial = Some(d.trial);
            }
            emit(&write_spectrum_csv(&s), args.output.as_deref())?;
        }
        Command::Dyson(args) => {
            let zs = complex_list(&args.z)?;
            let etas = complex_list(&args.eta)?;
            let mut rows = Vec::with_capacity(zs.len() * etas.len());
            for &z in &zs {
                for &eta in &etas {
                    rows.push(solve_free_stieltjes(z, eta, args.tol)?);
                }
            }
            emit(&write_dyson_table(&rows), args.output.as_deref())?;
        }
        Command::Metric(cmd) => return run_metric(cmd),
        Command::Experiment(ExperimentCommand::Run { config }) => {
            let cfg = ExperimentConfig::from_json(&read_text(&config)?)?;
            let record = run_experiment(&cfg)?;
            let report = summarize(&record);
            print!("{report}");
            println!("results: {}", cfg.output_directory.display());
            return Ok(report.pass);
        }
        Command::Experiment(ExperimentCommand::Summarize { dir }) => {
            let report = summarize_dir(&dir)?;
            print!("{report}");
            return Ok(report.pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
