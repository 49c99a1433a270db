//! Command-line front end: corpus ingestion, defense optimization, value
//! sweeps, a login simulation, and session-cost CDFs.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cash::curves::{
    generate_curves, write_curves_csv, BelievedValuePolicy, DEFAULT_VALUE_MULTIPLES,
};
use cash::distribution::PasswordDistribution;
use cash::mechanism::{AuthOutcome, RecordStore};
use cash::optimizer::{
    find_cash_distribution, read_defense_file, write_defense_file, OptimizerConfig,
};

#[derive(Parser)]
#[command(
    name = "cash",
    version,
    about = "Randomized key-stretching toolkit: optimize, evaluate, and run hidden-runtime password hashing"
)]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a password-distribution cache from a corpus.
    Ingest(IngestArgs),
    /// Optimize a runtime distribution and write it as a defense file.
    Optimize(OptimizeArgs),
    /// Sweep attacker values and write cracked-fraction curves as CSV.
    Curves(CurvesArgs),
    /// Register seeded accounts under a defense and measure login costs.
    Simulate(SimulateArgs),
    /// Emit the per-session hashing-cost CDF of a defense as CSV.
    Costcdf(CostCdfArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus of `frequency count` histogram lines.
    #[arg(long, conflicts_with = "plaintext")]
    freq: Option<PathBuf>,
    /// Corpus of one plaintext password per line.
    #[arg(long)]
    plaintext: Option<PathBuf>,
    /// Cache file to write (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepParams {
    /// Password-distribution cache produced by `ingest`.
    #[arg(long)]
    dist: PathBuf,
    /// Fraction of sessions that are correct logins.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Amortized per-session cost budget.
    #[arg(long, default_value_t = 1.0)]
    cmax: f64,
    /// Number of runtime levels.
    #[arg(long, default_value_t = 50)]
    m: u32,
    /// Residual-violation tolerance of the cutting-plane loop.
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    /// Hash costs to sweep (absolute units; default: 20 evenly spaced).
    #[arg(long, value_delimiter = ',')]
    kset: Option<Vec<f64>>,
    /// Attacker budgets to optimize against (absolute guesses).
    #[arg(long, value_delimiter = ',')]
    bset: Option<Vec<u64>>,
}

impl SweepParams {
    fn load_distribution(&self) -> Result<PasswordDistribution> {
        let file = File::open(&self.dist)
            .with_context(|| format!("opening distribution cache {}", self.dist.display()))?;
        PasswordDistribution::read_cache(BufReader::new(file))
            .with_context(|| format!("parsing distribution cache {}", self.dist.display()))
    }

    fn config(&self) -> OptimizerConfig {
        let mut config = OptimizerConfig::recommended(self.cmax, self.alpha, self.m);
        config.epsilon = self.eps;
        if let Some(kset) = &self.kset {
            config.k_set = kset.clone();
        }
        if let Some(bset) = &self.bset {
            config.threshold_set = bset.clone();
        }
        config
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    params: SweepParams,
    /// Believed attacker value, as a multiple of cmax.
    #[arg(long)]
    vhat: f64,
    /// Defense file to write (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    params: SweepParams,
    /// Attacker values to sweep, as multiples of cmax.
    #[arg(long, value_delimiter = ',')]
    vgrid: Option<Vec<f64>>,
    /// Hold the defense fixed at this believed value (multiple of cmax)
    /// instead of re-deriving it per grid point.
    #[arg(long)]
    vhat: Option<f64>,
    /// CSV file to write (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Defense file produced by `optimize`.
    #[arg(long)]
    defense: PathBuf,
    /// Number of accounts to register.
    #[arg(long, default_value_t = 1000)]
    accounts: u32,
    /// RNG seed; reruns with the same seed are byte-identical.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hash-chain iterations per runtime level (default: the defense's
    /// hash cost rounded to at least 1).
    #[arg(long)]
    kiter: Option<u32>,
    /// Also save the credential store to this file.
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct CostCdfArgs {
    /// Defense file produced by `optimize`.
    #[arg(long)]
    defense: PathBuf,
    /// Override the correct-login fraction recorded in the defense file.
    #[arg(long)]
    alpha: Option<f64>,
    /// CSV file to write (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Optimize(args) => optimize(args),
        Command::Curves(args) => curves(args),
        Command::Simulate(args) => simulate(args),
        Command::Costcdf(args) => costcdf(args),
    }
}

/// Opens `--out`, or stdout when omitted.
fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating output file {}", path.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    let file =
        File::open(path).with_context(|| format!("opening input file {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let dist = match (&args.freq, &args.plaintext) {
        (Some(path), None) => PasswordDistribution::ingest_frequency_corpus(open_input(path)?)
            .with_context(|| format!("parsing frequency corpus {}", path.display()))?,
        (None, Some(path)) => PasswordDistribution::ingest_plaintext(open_input(path)?)
            .with_context(|| format!("parsing plaintext corpus {}", path.display()))?,
        _ => bail!("pass exactly one of --freq or --plaintext"),
    };
    let mut out = open_output(args.out.as_deref())?;
    dist.write_cache(&mut out)?;
    out.flush()?;
    eprintln!(
        "ingested {} users, {} distinct passwords, {} popularity classes",
        dist.total_users(),
        dist.total_passwords(),
        dist.num_classes()
    );
    Ok(())
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let dist = args.params.load_distribution()?;
    let config = args.params.config();
    let v_hat = args.vhat * args.params.cmax;
    let outcome =
        find_cash_distribution(&dist, v_hat, args.params.cmax, args.params.alpha, &config)
            .context("defense search failed")?;
    for failure in &outcome.failures {
        eprintln!(
            "warning: attacker budget {} skipped: {}",
            failure.threshold, failure.error
        );
    }
    let mut out = open_output(args.out.as_deref())?;
    write_defense_file(
        &mut out,
        &outcome.solution,
        args.params.alpha,
        args.params.cmax,
        config.epsilon,
    )?;
    out.flush()?;
    eprintln!(
        "defense: source {}, hash cost {:.6e}, predicted cracked fraction {:.6e}",
        outcome.solution.source_threshold, outcome.solution.k, outcome.solution.predicted_cracked
    );
    Ok(())
}

fn curves(args: CurvesArgs) -> Result<()> {
    let dist = args.params.load_distribution()?;
    let config = args.params.config();
    let grid: Vec<f64> = args
        .vgrid
        .unwrap_or_else(|| DEFAULT_VALUE_MULTIPLES.to_vec())
        .iter()
        .map(|multiple| multiple * args.params.cmax)
        .collect();
    let policy = match args.vhat {
        Some(v_hat) => BelievedValuePolicy::Fixed(v_hat * args.params.cmax),
        None => BelievedValuePolicy::Match,
    };
    let rows = generate_curves(
        &dist,
        args.params.alpha,
        args.params.cmax,
        &grid,
        policy,
        &config,
    )
    .context("curve sweep failed")?;
    for row in rows.iter().filter(|row| !row.note.is_empty()) {
        eprintln!("note at v/cmax {:.6e}: {}", row.v_over_cmax, row.note);
    }
    let mut out = open_output(args.out.as_deref())?;
    write_curves_csv(&mut out, &rows)?;
    out.flush()?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (cash, header) = read_defense_file(open_input(&args.defense)?)
        .with_context(|| format!("parsing defense file {}", args.defense.display()))?;
    let k_iter = args.kiter.unwrap_or_else(|| (header.k.round() as u32).max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut store = RecordStore::new(header.m);
    for i in 0..args.accounts {
        store
            .create_account(&format!("user{i}"), &format!("pw{i}"), &cash, k_iter, &mut rng)
            .context("registering simulated account")?;
    }

    let mut histogram = vec![0u64; header.m as usize];
    let mut total_evaluations = 0u64;
    for i in 0..args.accounts {
        match store.authenticate(&format!("user{i}"), &format!("pw{i}")) {
            AuthOutcome::Success {
                runtime,
                evaluations,
            } => {
                histogram[(runtime - 1) as usize] += 1;
                total_evaluations += u64::from(evaluations);
            }
            other => bail!("correct login for user{i} did not succeed: {other:?}"),
        }
        match store.authenticate(&format!("user{i}"), "wrong-password") {
            AuthOutcome::Failure { evaluations } if evaluations == header.m => {}
            other => bail!("wrong password for user{i} did not fail cleanly: {other:?}"),
        }
    }

    if let Some(path) = &args.store {
        let mut out = open_output(Some(path))?;
        store.save(&mut out)?;
        out.flush()?;
    }

    let mean_evaluations = total_evaluations as f64 / f64::from(args.accounts);
    println!("accounts {}", args.accounts);
    println!("k_iter {k_iter}");
    println!("mean_correct_evaluations {mean_evaluations:.6}");
    println!(
        "mean_correct_blocks {:.6}",
        mean_evaluations * f64::from(k_iter)
    );
    println!("failed_login_evaluations {}", header.m);
    println!(
        "failed_login_blocks {}",
        u64::from(header.m) * u64::from(k_iter)
    );
    let histogram_text: Vec<String> = histogram
        .iter()
        .enumerate()
        .map(|(j, count)| format!("{}:{}", j + 1, count))
        .collect();
    println!("runtime_histogram {}", histogram_text.join(" "));
    Ok(())
}

fn costcdf(args: CostCdfArgs) -> Result<()> {
    let (cash, header) = read_defense_file(open_input(&args.defense)?)
        .with_context(|| format!("parsing defense file {}", args.defense.display()))?;
    let alpha = args.alpha.unwrap_or(header.alpha);
    if !(0.0..=1.0).contains(&alpha) {
        bail!("alpha must lie in [0, 1], got {alpha}");
    }

    // Session cost under the defense: a correct login (probability alpha)
    // stops at the sampled level t and costs k·t; any other session probes
    // all m levels and costs k·m. Deterministic hashing at the full budget
    // costs exactly c_max every session.
    let mut support: Vec<(f64, f64)> = Vec::new();
    for (j, w) in cash.weights().iter().enumerate() {
        support.push((header.k * (j + 1) as f64, alpha * w));
    }
    support.push((header.k * f64::from(header.m), 1.0 - alpha));
    support.push((header.c_max, 0.0));
    support.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut out = open_output(args.out.as_deref())?;
    writeln!(out, "cost_over_cmax,p_cash_le,p_det_le")?;
    let mut cumulative = 0.0;
    let mut index = 0;
    while index < support.len() {
        let cost = support[index].0;
        while index < support.len() && support[index].0 == cost {
            cumulative += support[index].1;
            index += 1;
        }
        let det = if cost >= header.c_max { 1.0 } else { 0.0 };
        writeln!(
            out,
            "{:.8e},{:.8e},{:.8e}",
            cost / header.c_max,
            cumulative,
            det
        )?;
    }
    out.flush()?;
    Ok(())
}
