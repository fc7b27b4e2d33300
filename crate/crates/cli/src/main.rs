//! `make-attack`: parameter generation, key exchange, key recovery and the
//! benchmark harness.
//!
//! Exit codes: 0 success, 1 usage or selftest failure, 2 attack failure,
//! 3 malformed input.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use make_core::attack::{attack, AttackInput, DEFAULT_MAX_RETRIES};
use make_core::bench::{run_bench, seeded_rng, summarize, write_csv, RunConfig};
use make_core::field::gen_prime;
use make_core::io::{self as files, ParamsFile, ResultFile, TranscriptFile};
use make_core::protocol::run_exchange;
use make_core::{selftest, Error, FieldSpec, PrivateExponent, ProtocolParams};

#[derive(Parser)]
#[command(name = "make-attack", version, about = "Semidirect-product matrix key exchange and its key-recovery attack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a prime and random invertible M, H.
    GenParams(GenParamsArgs),
    /// Run the exchange and write the public transcript.
    Exchange(ExchangeArgs),
    /// Recover the shared key from parameters and a transcript.
    Attack(AttackArgs),
    /// Repeated exchange + attack trials, one CSV row per trial.
    Bench(BenchArgs),
    /// Built-in fixed-value and invariant checks.
    Selftest,
}

#[derive(Args)]
struct GenParamsArgs {
    /// Bit length of a prime to generate.
    #[arg(long, conflicts_with = "prime", required_unless_present = "prime")]
    bits: Option<u64>,
    /// Explicit prime, in decimal.
    #[arg(long)]
    prime: Option<String>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExchangeArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write m, n and the shared key K.
    #[arg(long)]
    include_secrets: bool,
    /// Private exponents are drawn from [2, 2^bits); defaults to the bit length of p.
    #[arg(long)]
    exponent_bits: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    max_retries: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated explicit primes.
    #[arg(long, value_delimiter = ',')]
    primes: Vec<String>,
    /// Comma-separated bit sizes of primes to generate.
    #[arg(long, value_delimiter = ',')]
    gen_bits: Vec<u64>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    exponent_bits: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    max_retries: usize,
    /// CSV output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Attack(String),
    Malformed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Attack(_) => 2,
            Failure::Malformed(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Attack(m) | Failure::Malformed(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyKernel | Error::RetriesExceeded(_) | Error::KeyMismatch => Failure::Attack(e.to_string()),
            _ => Failure::Malformed(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn load_params(path: &Path) -> Result<ProtocolParams, Failure> {
    let file: ParamsFile = files::read_json(path)?;
    Ok(file.to_params()?)
}

fn gen_params(args: GenParamsArgs) -> CmdResult {
    if args.k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let mut rng = seeded_rng(args.seed);
    let p = match (&args.prime, args.bits) {
        (Some(p), _) => files::parse_int(p)?,
        (None, Some(bits)) => gen_prime(bits, &mut rng).map_err(|e| Failure::Usage(e.to_string()))?,
        (None, None) => return Err(Failure::Usage("one of --bits or --prime is required".into())),
    };
    let spec = FieldSpec::new(p)?;
    let params = ProtocolParams::random(&spec, args.k, &mut rng);
    emit(args.out.as_deref(), &files::to_json(&ParamsFile::from_params(&params)))
}

fn exchange(args: ExchangeArgs) -> CmdResult {
    let params = load_params(&args.params)?;
    let mut rng = seeded_rng(args.seed);
    let bits = args.exponent_bits.unwrap_or_else(|| params.spec().bits());
    let m = PrivateExponent::random(bits, &mut rng).map_err(|e| Failure::Usage(e.to_string()))?;
    let n = PrivateExponent::random(bits, &mut rng).map_err(|e| Failure::Usage(e.to_string()))?;
    let (alice, bob, key) = run_exchange(&params, m, n)?;
    let transcript = TranscriptFile::new(&alice, &bob, &key, args.include_secrets);
    emit(args.out.as_deref(), &files::to_json(&transcript))
}

fn run_attack(args: AttackArgs) -> CmdResult {
    let params = load_params(&args.params)?;
    let transcript: TranscriptFile = files::read_json(&args.transcript)?;
    let (a, b, true_key) = transcript.decode(params.spec(), params.k())?;
    let input = AttackInput::from_transcript(&params, a, b)?;
    let (key, stats) = attack(&input, &mut seeded_rng(args.seed), args.max_retries)?;
    let matches = true_key.map(|k| k == *key.matrix());
    emit(args.out.as_deref(), &files::to_json(&ResultFile::new(&key, &stats, matches)))?;
    if matches == Some(false) {
        return Err(Failure::Attack("recovered key differs from the transcript key".into()));
    }
    Ok(())
}

fn bench(args: BenchArgs) -> CmdResult {
    let primes = args
        .primes
        .iter()
        .map(|p| files::parse_int(p.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let config = RunConfig {
        primes,
        gen_bits: args.gen_bits,
        k: args.k,
        trials: args.trials,
        seed: args.seed,
        exponent_bits: args.exponent_bits,
        max_retries: args.max_retries,
    };
    let records = run_bench(&config)?;
    let mut csv = Vec::new();
    write_csv(&records, &mut csv).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(args.out.as_deref(), &String::from_utf8(csv).expect("csv is utf-8"))?;

    let summaries = summarize(&records);
    for s in &summaries {
        eprintln!(
            "prime #{} ({} bits): success {}/{} ({:.1}%), max t = {}, attack mean {:.3} ms, median {:.3} ms",
            s.p_index,
            s.prime_bits,
            s.successes,
            s.trials,
            100.0 * s.success_rate(),
            s.max_retries,
            s.mean_ms,
            s.median_ms,
        );
    }
    let failed = records.iter().filter(|r| !r.success).count();
    if failed > 0 {
        return Err(Failure::Attack(format!("{failed} trials did not recover the key")));
    }
    Ok(())
}

fn run_selftest() -> CmdResult {
    let mut first_failure = None;
    for check in selftest::run_all() {
        match &check.result {
            Ok(()) => println!("ok    {}", check.name),
            Err(msg) => {
                println!("FAIL  {}: {msg}", check.name);
                first_failure.get_or_insert_with(|| format!("selftest failed: {}: {msg}", check.name));
            }
        }
    }
    match first_failure {
        Some(msg) => Err(Failure::Usage(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenParams(args) => gen_params(args),
        Command::Exchange(args) => exchange(args),
        Command::Attack(args) => run_attack(args),
        Command::Bench(args) => bench(args),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
