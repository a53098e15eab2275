use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delaylab::delaymat::{build_delay_matrix, build_gram, build_signed_delay_matrix, DelaySpec};
use delaylab::experiments::{region_curves, run_sweep, write_region_csv, Experiment, SweepConfig};
use delaylab::lrnn::{
    assemble_delay_vectors, generate_signal, reconstruction_report, run_recurrence, RecurrenceConfig, SignalKind,
    SignalParams, Trace,
};
use delaylab::matio::{parse_complex, read_matrix_csv, write_matrix_csv};
use delaylab::{Complex64, ComplexMatrix, Error};

mod report;
mod verify;

#[derive(Parser)]
#[command(name = "delaylab", version, about = "Delay matrices of linear recurrent networks")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the delay matrix (or its Gram matrix) as a matrix CSV.
    Build {
        #[command(flatten)]
        spec: SpecArgs,
        /// Which matrix to emit.
        #[arg(long, value_parser = ["delay", "signed", "gram"], default_value = "delay")]
        matrix: String,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form and numerical singular values side by side.
    Spectrum {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Bounds for a spec, or for given extreme singular values of W.
    Bounds {
        #[command(flatten)]
        spec: OptSpecArgs,
        #[arg(long, requires = "sigma_max")]
        sigma_min: Option<f64>,
        #[arg(long, requires = "sigma_min")]
        sigma_max: Option<f64>,
    },
    /// Check every applicable identity and bound on one spec.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        /// Seed for the random right-hand sides and traces.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the recurrence and check the delay relation at every step.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_parser = parse_signal, default_value = "sine")]
        signal: SignalKind,
        /// Number of input steps T.
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Bias added to every channel, RE[+IMj].
        #[arg(long, default_value = "0")]
        bias: String,
        /// Read inputs from a trace CSV instead of generating them.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Write the resulting trace CSV here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Run a named experiment and write its CSV and metadata.
    Sweep {
        #[arg(long, value_parser = parse_experiment)]
        experiment: Option<Experiment>,
        /// JSON file with SweepConfig fields; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        /// Comma-separated lag counts.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Comma-separated state dimensions.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        /// Comma-separated sigma_max(W) targets.
        #[arg(long, value_delimiter = ',')]
        sigma_max: Option<Vec<f64>>,
    },
    /// Tabulate the boundaries of the admissible (sigma_min, sigma_max) region.
    Region {
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Number of lags.
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    weight: WeightArgs,
}

#[derive(Args, Clone)]
struct OptSpecArgs {
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    weight: WeightArgs,
}

#[derive(Args, Clone)]
struct WeightArgs {
    /// Weight matrix: a matrix CSV file, or a scalar RE[+IMj] meaning that multiple of the identity.
    #[arg(long, conflicts_with = "omega")]
    w: Option<String>,
    /// Scalar weight RE[+IMj] (m = 1).
    #[arg(long)]
    omega: Option<String>,
    /// State dimension when W is given as a scalar.
    #[arg(long)]
    m: Option<usize>,
    /// Require a scalar (m = 1) spec.
    #[arg(long)]
    scalar: bool,
}

fn parse_signal(s: &str) -> Result<SignalKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::InvalidParams(_) | Error::InvalidSpec(_) | Error::InvalidRange { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(format!("I/O error: {e}"))
    }
}

type CliResult<T = ()> = Result<T, Failure>;

impl WeightArgs {
    fn matrix(&self) -> CliResult<ComplexMatrix> {
        let m = self.m.unwrap_or(1);
        if m == 0 {
            return Err(Failure::Usage("--m must be positive".into()));
        }
        let w = match (&self.w, &self.omega) {
            (_, Some(o)) => {
                if self.m.is_some_and(|m| m != 1) {
                    return Err(Failure::Usage("--omega describes a scalar weight; use --w with --m".into()));
                }
                ComplexMatrix::scalar(parse_complex(o)?)
            }
            (Some(w), None) if Path::new(w).is_file() => {
                let w = read_matrix_csv(BufReader::new(File::open(w)?))?;
                if self.m.is_some_and(|m| m != w.rows()) {
                    return Err(Failure::Usage(format!("--m {m} does not match the {}x{} matrix file", w.rows(), w.cols())));
                }
                w
            }
            (Some(w), None) => match parse_complex(w) {
                Ok(z) => ComplexMatrix::identity(m).scale(z),
                Err(_) => return Err(Failure::Usage(format!("--w '{w}' is neither a readable file nor a scalar"))),
            },
            (None, None) => return Err(Failure::Usage("give the weight with --w or --omega".into())),
        };
        if self.scalar && w.shape() != (1, 1) {
            return Err(Failure::Usage("--scalar needs a 1x1 weight".into()));
        }
        Ok(w)
    }

    fn given(&self) -> bool {
        self.w.is_some() || self.omega.is_some()
    }
}

impl SpecArgs {
    fn spec(&self) -> CliResult<DelaySpec> {
        Ok(DelaySpec::infer(self.n, self.weight.matrix()?)?)
    }
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var("DELAYLAB_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("DELAYLAB_SEED='{s}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

fn cmd_build(spec: &SpecArgs, matrix: &str, out: Option<&Path>) -> CliResult {
    let spec = spec.spec()?;
    let m = match matrix {
        "signed" => build_signed_delay_matrix(&spec),
        "gram" => build_gram(&spec),
        _ => build_delay_matrix(&spec),
    };
    let mut w = open_out(out)?;
    write_matrix_csv(&m, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_simulate(
    spec: &SpecArgs,
    signal: SignalKind,
    steps: usize,
    seed: Option<u64>,
    bias: &str,
    input: Option<&Path>,
    trace_out: Option<&Path>,
) -> CliResult {
    let spec = spec.spec()?;
    let (n, m) = (spec.n(), spec.m());
    let b = vec![parse_complex(bias)?; m];
    let cfg = RecurrenceConfig::new(spec.w().clone(), b, vec![Complex64::new(0.0, 0.0); m])?;
    let inputs = match input {
        Some(p) => Trace::read_csv(BufReader::new(File::open(p)?))?.inputs,
        None => generate_signal(signal, m, steps, resolve_seed(seed)?, &SignalParams::default())?,
    };
    if inputs.len() < n {
        return Err(Failure::Usage(format!("need at least n = {n} input steps, got {}", inputs.len())));
    }
    let trace = run_recurrence(&cfg, &inputs)?;
    if let Some(p) = trace_out {
        let mut w = open_out(Some(p))?;
        trace.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut worst_rel = 0.0f64;
    let mut worst_solve = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut ok = true;
    for k in n..=trace.len() {
        let dv = assemble_delay_vectors(&trace, k, n)?;
        let r = reconstruction_report(&spec, &cfg, &dv)?;
        let scale = dv.psi.iter().map(|z| z.norm()).fold(1.0, f64::max);
        ok &= r.relation_residual <= 1e-10 * scale;
        worst_rel = worst_rel.max(r.relation_residual / scale);
        worst_solve = worst_solve.max(r.solve_residual / scale);
        worst_gap = worst_gap.max(r.null_space_gap);
    }
    println!("steps: {}", trace.len());
    println!("windows: {}", trace.len() + 1 - n);
    println!("max_relation_residual: {worst_rel:e}");
    println!("max_min_norm_solve_residual: {worst_solve:e}");
    println!("max_null_space_gap: {worst_gap:e}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Validation("delay relation residual exceeds 1e-10".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    experiment: Option<Experiment>,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<String>,
    samples: Option<usize>,
    n: Option<Vec<usize>>,
    m: Option<Vec<usize>>,
    sigma_max: Option<Vec<f64>>,
) -> CliResult {
    let mut cfg: SweepConfig = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", p.display())))?
        }
        None => {
            let e = experiment.ok_or_else(|| Failure::Usage("give --experiment or --config".into()))?;
            SweepConfig::new(e, 0, "")
        }
    };
    if let Some(e) = experiment {
        if e != cfg.experiment {
            cfg.experiment = e;
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    } else if config.is_none() {
        cfg.seed = resolve_seed(None)?;
    }
    if let Some(o) = out {
        cfg.out_path = o;
    }
    if let Some(s) = samples {
        cfg.samples_per_cell = s;
    }
    if let Some(v) = n {
        cfg.grids.n = v;
    }
    if let Some(v) = m {
        cfg.grids.m = v;
    }
    if let Some(v) = sigma_max {
        cfg.grids.sigma_max = v;
    }
    cfg.fill_defaults();
    if cfg.out_path.is_empty() {
        return Err(Failure::Usage("give the output path with --out".into()));
    }
    let out = run_sweep(&cfg)?;
    eprintln!(
        "{}: {} records, {} aggregate rows -> {}",
        cfg.experiment,
        out.records.len(),
        out.aggregates.len(),
        cfg.out_path
    );
    Ok(())
}

fn cmd_region(resolution: usize, out: Option<&Path>) -> CliResult {
    let rows = region_curves(resolution)?;
    let mut w = open_out(out)?;
    write_region_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Validation(e.to_string()))?;
    }
    match cli.command {
        Command::Build { spec, matrix, out } => cmd_build(&spec, &matrix, out.as_deref()),
        Command::Spectrum { spec } => report::spectrum(&spec.spec()?),
        Command::Bounds { spec, sigma_min, sigma_max } => match (sigma_min, sigma_max, spec.weight.given()) {
            (Some(lo), Some(hi), false) => report::bounds_extremes(lo, hi),
            (None, None, true) => {
                let n = spec.n.ok_or_else(|| Failure::Usage("--n is required with a weight".into()))?;
                report::bounds_spec(&DelaySpec::infer(n, spec.weight.matrix()?)?)
            }
            _ => Err(Failure::Usage("give either a weight (--w/--omega with --n) or --sigma-min/--sigma-max".into())),
        },
        Command::Verify { spec, seed } => verify::run(&spec.spec()?, resolve_seed(seed)?),
        Command::Simulate { spec, signal, steps, seed, bias, input, trace_out } => {
            cmd_simulate(&spec, signal, steps, seed, &bias, input.as_deref(), trace_out.as_deref())
        }
        Command::Sweep { experiment, config, seed, out, samples, n, m, sigma_max } => {
            cmd_sweep(experiment, config.as_deref(), seed, out, samples, n, m, sigma_max)
        }
        Command::Region { resolution, out } => cmd_region(resolution, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
