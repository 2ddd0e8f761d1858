use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use convsparse::dictgen::{gen_signal, low_coherence_local, random_local};
use convsparse::harness::{
    self, BpConfig, DictionarySource, ExperimentConfig, OutputFormat, SolverKind,
};
use convsparse::measures::{measure_report, mutual_coherence, profile_or_zero};
use convsparse::pursuit::{basis_pursuit, omp, AdmmParams, BpParams, OmpParams};
use convsparse::spark::{
    spark_bruteforce, spark_bruteforce_unguarded, stripe_spark_bruteforce,
    stripe_spark_bruteforce_unguarded, stripe_spark_lower_bound, SparkKind,
};
use convsparse::{io, ConvDictionary, CscError};

#[derive(Parser)]
#[command(name = "convsparse", version, about = "Convolutional sparse coding experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a local dictionary.
    GenDict {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Run the coherence reducer instead of returning a Gaussian dictionary.
        #[arg(long)]
        low_coherence: bool,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
    },
    /// Draw a random sparse code and its signal.
    GenSignal {
        /// Dictionary file; a Gaussian dictionary from --n/--m/--seed is used otherwise.
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Signal length N.
        #[arg(long = "len")]
        len: usize,
        #[arg(long)]
        cardinality: usize,
        #[arg(long)]
        code_out: PathBuf,
        #[arg(long)]
        signal_out: PathBuf,
    },
    /// Sparsity and coherence measures of a code.
    Measure {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        code: PathBuf,
        /// Also write the shifted-coherence profile as CSV.
        #[arg(long)]
        profile_csv: Option<PathBuf>,
    },
    /// Exhaustive spark or stripe-spark of a small global dictionary.
    Spark {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long = "len")]
        len: usize,
        #[arg(long, value_enum, default_value = "stripe-spark")]
        kind: KindArg,
        /// Largest cardinality (spark) or `ℓ0,∞` (stripe-spark) searched.
        #[arg(long)]
        max: Option<usize>,
        /// Lift the column guard. Cost is exponential in the number of columns.
        #[arg(long)]
        force: bool,
    },
    /// Recover a code from a signal.
    Pursue {
        #[arg(long, value_enum)]
        solver: SolverArg,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        json_out: Option<PathBuf>,
        #[command(flatten)]
        admm: AdmmArgs,
        /// OMP residual tolerance.
        #[arg(long, default_value_t = 1e-10)]
        res_tol: f64,
        /// OMP iteration cap (default: min(N, mN)).
        #[arg(long)]
        omp_max_iters: Option<usize>,
    },
    /// Success rates of OMP and BP binned by `ℓ0,∞`.
    PhaseTransition(SweepArgs),
    /// `(ℓ0,∞, max stripe coherence)` pairs of random codes.
    CoherenceScatter(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Spark,
    StripeSpark,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Omp,
    Bp,
}

#[derive(Args)]
struct AdmmArgs {
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps_abs: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_rel: f64,
    #[arg(long, default_value_t = 1e-5)]
    support_threshold: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment config; the flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long = "len", default_value_t = 640)]
    len: usize,
    #[arg(long, default_value_t = 1)]
    card_lo: usize,
    #[arg(long, default_value_t = 300)]
    card_hi: usize,
    #[arg(long, default_value_t = 1)]
    card_step: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "omp,bp")]
    solvers: Vec<SolverArg>,
    /// Dictionary file; otherwise a designed (or, with --random-dict, Gaussian) dictionary.
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    random_dict: bool,
    /// Coherence-reducer sweeps.
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    /// Per-trial timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[command(flatten)]
    admm: AdmmArgs,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<CscError> for Failure {
    fn from(e: CscError) -> Self {
        match e {
            CscError::Dimension(_)
            | CscError::Index { .. }
            | CscError::Capacity(_)
            | CscError::Invalid(_)
            | CscError::Parse { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn config_err<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Config(format!("{what}: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    match cli.command {
        Command::GenDict { n, m, low_coherence, iters } => {
            let seed = g.seed.unwrap_or(0);
            let (local, mu) = if low_coherence {
                let d = low_coherence_local(n, m, seed, iters)?;
                (d.dict, d.mu)
            } else {
                let d = random_local(n, m, seed)?;
                let mu = convsparse::dictgen::shifted_max_coherence(&d);
                (d, mu)
            };
            eprintln!("mu = {mu}");
            write_out(g.out.as_deref(), &io::format_dictionary(&local))
        }
        Command::GenSignal { dict, n, m, len, cardinality, code_out, signal_out } => {
            let seed = g.seed.unwrap_or(0);
            let local = match (dict, n, m) {
                (Some(path), _, _) => read_input(&path, io::read_dictionary)?,
                (None, Some(n), Some(m)) => random_local(n, m, seed)?,
                _ => return Err(Failure::Config("give --dict or both --n and --m".into())),
            };
            let d = ConvDictionary::new(local, len)?;
            let (code, signal) = gen_signal(&d, cardinality, seed)?;
            write_out(Some(&code_out), &io::format_code(&code))?;
            write_out(Some(&signal_out), &io::format_signal(&signal))
        }
        Command::Measure { dict, code, profile_csv } => {
            let local = read_input(&dict, io::read_dictionary)?;
            let code = read_input(&code, io::read_code)?;
            if code.m() != local.m() {
                return Err(Failure::Config(format!(
                    "code has {} filters, dictionary has {}",
                    code.m(),
                    local.m()
                )));
            }
            if let Some(path) = profile_csv {
                write_out(Some(&path), &profile_or_zero(&local).to_csv())?;
            }
            let d = ConvDictionary::new(local, code.signal_len())?;
            write_json(g.out.as_deref(), &measure_report(&d, &code)?)
        }
        Command::Spark { dict, len, kind, max, force } => {
            let local = read_input(&dict, io::read_dictionary)?;
            let d = ConvDictionary::new(local, len)?;
            let mu = mutual_coherence(&d);
            let cert = match (kind, force) {
                (KindArg::Spark, false) => {
                    let dense = d.materialize_dense()?;
                    spark_bruteforce(&dense, max.unwrap_or(dense.ncols()))?
                }
                (KindArg::Spark, true) => {
                    let dense = d.materialize_dense()?;
                    spark_bruteforce_unguarded(&dense, max.unwrap_or(dense.ncols()))?
                }
                (KindArg::StripeSpark, false) => {
                    stripe_spark_bruteforce(&d, max.unwrap_or(d.num_atoms()))?
                }
                (KindArg::StripeSpark, true) => {
                    stripe_spark_bruteforce_unguarded(&d, max.unwrap_or(d.num_atoms()))?
                }
            };
            let witness: Vec<_> = cert
                .witness
                .iter()
                .map(|&j| {
                    let (chunk, filter) = d.chunk_filter(j);
                    json!({ "chunk": chunk, "filter": filter })
                })
                .collect();
            let kind = match cert.kind {
                SparkKind::Spark => "spark",
                SparkKind::StripeSpark => "stripe_spark",
            };
            let mut out = json!({
                "kind": kind,
                "witness": witness,
                "null_vector": cert.null_vector,
                "mu": mu,
                "theorem2_lower_bound": stripe_spark_lower_bound(mu),
            });
            match cert.value {
                Some(v) => out["value"] = json!(v),
                // Nothing dependent up to `searched_up_to`, so the value exceeds it.
                None => out["bound"] = json!(cert.searched_up_to + 1),
            }
            write_json(g.out.as_deref(), &out)
        }
        Command::Pursue { solver, dict, signal, json_out, admm, res_tol, omp_max_iters } => {
            let local = read_input(&dict, io::read_dictionary)?;
            let x = read_input(&signal, io::read_signal)?;
            let d = ConvDictionary::new(local, x.len())?;
            let outcome = match solver {
                SolverArg::Omp => {
                    let max_iters =
                        omp_max_iters.unwrap_or(d.signal_len().min(d.num_atoms()));
                    omp(&d, &x, OmpParams { max_iters, res_tol })
                }
                SolverArg::Bp => basis_pursuit(&d, &x, &bp_params(&admm)),
            };
            let target = json_out.as_deref().or(g.out.as_deref());
            match outcome {
                Ok(r) => write_json(target, &r),
                Err(CscError::NonConvergence(r)) => {
                    write_json(target, &*r)?;
                    Err(Failure::Runtime(format!(
                        "no convergence after {} iterations",
                        r.iterations
                    )))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::PhaseTransition(args) => {
            let cfg = sweep_config(&args, g.seed)?;
            let table = harness::run_phase_transition(&cfg, g.threads)?;
            eprintln!("mu = {}, bound = {}", table.metadata.mu, table.metadata.bound);
            let format = match g.format.unwrap_or(Format::Csv) {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            match &g.out {
                Some(path) => harness::emit(&table, format, path)
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
                None => match format {
                    OutputFormat::Csv => write_out(None, &table.to_csv()),
                    OutputFormat::Json => write_out(None, &table.to_json()?),
                },
            }
        }
        Command::CoherenceScatter(args) => {
            let cfg = sweep_config(&args, g.seed)?;
            let scatter = harness::run_coherence_scatter(&cfg, g.threads)?;
            eprintln!("pearson = {}", scatter.pearson);
            match g.format.unwrap_or(Format::Csv) {
                Format::Csv => write_out(g.out.as_deref(), &scatter.to_csv()),
                Format::Json => write_json(g.out.as_deref(), &scatter),
            }
        }
    }
}

fn bp_params(a: &AdmmArgs) -> BpParams {
    BpParams {
        admm: AdmmParams {
            rho: a.rho,
            max_iters: a.max_iters,
            eps_abs: a.eps_abs,
            eps_rel: a.eps_rel,
            ..AdmmParams::default()
        },
        support_threshold: a.support_threshold,
        ..BpParams::default()
    }
}

fn sweep_config(a: &SweepArgs, seed: Option<u64>) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(config_err("reading config"))?;
            serde_json::from_str(&text).map_err(config_err("parsing config"))?
        }
        None => ExperimentConfig {
            n: a.n,
            m: a.m,
            signal_len: a.len,
            card_lo: a.card_lo,
            card_hi: a.card_hi,
            card_step: a.card_step,
            trials_per_cardinality: a.trials,
            extra_blocks: Vec::new(),
            seed: 0,
            solvers: a
                .solvers
                .iter()
                .map(|s| match s {
                    SolverArg::Omp => SolverKind::Omp,
                    SolverArg::Bp => SolverKind::Bp,
                })
                .collect(),
            omp_res_tol: 1e-9,
            bp: BpConfig {
                rho: a.admm.rho,
                max_iters: a.admm.max_iters,
                eps_abs: a.admm.eps_abs,
                eps_rel: a.admm.eps_rel,
                support_threshold: a.admm.support_threshold,
            },
            dictionary: match (&a.dict, a.random_dict) {
                (Some(p), _) => DictionarySource::File { path: p.clone() },
                (None, true) => DictionarySource::Random,
                (None, false) => DictionarySource::LowCoherence { iters: a.iters },
            },
            timeout_secs: a.timeout,
        },
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_input<T>(
    path: &Path,
    read: impl FnOnce(&Path) -> convsparse::Result<T>,
) -> std::result::Result<T, Failure> {
    read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    write_out(path, &text)
}
