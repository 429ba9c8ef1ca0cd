use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use gcdsynth::bench::{self, SweepConfig};
use gcdsynth::circuit::{parse, serialize};
use gcdsynth::modexp::{build_modexp_with, ModExpOptions};
use gcdsynth::numtheory::{enumerate_semiprimes, nth_largest_prime};
use gcdsynth::optimal::{OptimalConfig, OptimalSearch};
use gcdsynth::synthesis::{synthesize_auto, synthesize_with, Method};
use gcdsynth::{
    circuit_cost, verify, AdderRegime, CostModel, ModelFile, Modulus, Multiplier, SynthesisConfig,
    VerifyMode,
};

#[derive(Parser)]
#[command(name = "gcdsynth", version, about = "Modular multiplication and exponentiation circuits from GCD traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the R-th largest prime with exactly K bits.
    Primes {
        #[arg(long)]
        bits: u32,
        #[arg(long, default_value_t = 1)]
        rank: usize,
    },
    /// Print every odd N-bit semiprime with distinct prime factors.
    Semiprimes {
        #[arg(long)]
        bits: u32,
    },
    /// Synthesize a circuit for x -> C·x mod M.
    Synth(SynthArgs),
    /// Least-cost circuits by exhaustive search (small moduli only).
    Optimal(OptimalArgs),
    /// Build a modular exponentiation circuit.
    Modexp(ModexpArgs),
    /// Check a circuit file by simulation.
    Verify(VerifyArgs),
    /// Sweep moduli and multipliers and write CSV reports.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// JSON cost/depth model file.
    #[arg(long = "cost-model")]
    cost_model: Option<PathBuf>,
}

impl ModelArgs {
    fn load(&self) -> Result<ModelFile> {
        match &self.cost_model {
            Some(path) => ModelFile::load(path).with_context(|| format!("loading {}", path.display())),
            None => Ok(ModelFile::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthMethod {
    Heuristic,
    Baseline,
    Euclid,
    Auto,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    modulus: BigUint,
    #[arg(long)]
    multiplier: BigUint,
    #[arg(long, value_enum, default_value = "heuristic")]
    method: SynthMethod,
    #[arg(long, default_value_t = 3)]
    lookahead: usize,
    #[arg(long = "no-special")]
    no_special: bool,
    #[command(flatten)]
    model: ModelArgs,
    /// Output file; stdout when absent.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimalArgs {
    #[arg(long)]
    modulus: u64,
    #[arg(long)]
    multiplier: Option<u64>,
    /// Stream `C,cost` lines for every coprime multiplier.
    #[arg(long)]
    all: bool,
    /// Largest modulus width searched.
    #[arg(long = "max-bits", default_value_t = gcdsynth::optimal::DEFAULT_MAX_BITS)]
    max_bits: u32,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModexpArgs {
    #[arg(long)]
    modulus: BigUint,
    #[arg(long, default_value = "2")]
    base: BigUint,
    /// Adder regime for depth and ancillae; defaults to the model file's.
    #[arg(long)]
    adder: Option<AdderRegime>,
    /// Print the totals summary to stdout.
    #[arg(long)]
    stats: bool,
    /// Cost C = 1 positions like a C = 2 block.
    #[arg(long = "keep-identity-gates")]
    keep_identity_gates: bool,
    #[arg(long, default_value_t = 3)]
    lookahead: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Directory for one circuit file per distinct multiplier and summary.json.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, conflicts_with_all = ["samples", "seed"])]
    exhaustive: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Width range such as `7..12`, a single width, or a comma list.
    #[arg(long, default_value = "7")]
    bits: String,
    /// File with one modulus per line; replaces `--bits`.
    #[arg(long)]
    moduli: Option<PathBuf>,
    #[arg(long = "multiplier-cap")]
    multiplier_cap: Option<usize>,
    #[arg(long = "first-multiplier", default_value_t = 2)]
    first_multiplier: u64,
    #[arg(long, value_delimiter = ',', default_value = "heuristic,baseline")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = 3)]
    lookahead: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Write zero in the seconds column so repeated runs match byte for byte.
    #[arg(long = "no-timing")]
    no_timing: bool,
}

fn parse_bits(spec: &str) -> Result<Vec<u32>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: u32 = lo.trim().parse().context("bad range start")?;
        let hi: u32 = hi.trim().trim_start_matches('=').parse().context("bad range end")?;
        if lo > hi {
            bail!("empty width range {spec}");
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',').map(|s| s.trim().parse().with_context(|| format!("bad width {s:?}"))).collect()
}

fn read_moduli(path: &Path) -> Result<Vec<Modulus>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: BigUint = l.parse().with_context(|| format!("bad modulus {l:?}"))?;
            Ok(Modulus::new(v)?)
        })
        .collect()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn synthesis_config(lookahead: usize, cost_model: CostModel, special: bool) -> SynthesisConfig {
    SynthesisConfig { lookahead_depth: lookahead, cost_model, use_special_cases: special, ..Default::default() }
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let m = Modulus::new(args.modulus)?;
    let c = Multiplier::new(args.multiplier, &m)?;
    let cfg = synthesis_config(args.lookahead, args.model.load()?.cost_model(), !args.no_special);
    let circuit = match args.method {
        SynthMethod::Heuristic => synthesize_with(Method::Heuristic, &c, &m, &cfg)?,
        SynthMethod::Baseline => synthesize_with(Method::Baseline, &c, &m, &cfg)?,
        SynthMethod::Euclid => synthesize_with(Method::Euclid, &c, &m, &cfg)?,
        SynthMethod::Auto => synthesize_auto(&c, &m, &cfg)?,
    };
    let cost = circuit_cost(&circuit, &cfg.cost_model)?;
    log::info!("{} blocks, {} Toffoli, {} CNOT", circuit.ops().len(), cost.toffoli, cost.cnot);
    emit(args.out.as_deref(), &serialize(&circuit))
}

fn run_optimal(args: OptimalArgs) -> Result<()> {
    let m = Modulus::from_u64(args.modulus)?;
    let model = args.model.load()?.cost_model();
    let cfg = OptimalConfig { max_bits: args.max_bits, ..Default::default() };
    let search = OptimalSearch::run(&m, &model, &cfg)?;
    if args.all {
        let mut text = String::new();
        for (c, cost) in search.costs() {
            text.push_str(&format!("{c},{cost}\n"));
        }
        return emit(args.out.as_deref(), &text);
    }
    let Some(c) = args.multiplier else { bail!("give --multiplier C or --all") };
    let circuit = search.circuit(&Multiplier::from_u64(c, &m)?)?;
    emit(args.out.as_deref(), &serialize(&circuit))
}

fn run_modexp(args: ModexpArgs) -> Result<()> {
    let m = Modulus::new(args.modulus)?;
    let file = args.model.load()?;
    let depth_model = match args.adder {
        Some(regime) => file.depth_model().with_regime(regime),
        None => file.depth_model(),
    };
    let cfg = synthesis_config(args.lookahead, file.cost_model(), true);
    let options = ModExpOptions { keep_identity_gates: args.keep_identity_gates, ..Default::default() };
    let circuit = build_modexp_with(&m, &args.base, &cfg, &depth_model, options)?;
    let summary = serde_json::to_string_pretty(&circuit.summary_json()?)? + "\n";
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        for block in circuit.distinct_circuits() {
            let path = dir.join(format!("mult_{}.circuit", block.multiplier()));
            fs::write(&path, serialize(block)).with_context(|| format!("writing {}", path.display()))?;
        }
        fs::write(dir.join("summary.json"), &summary)?;
    }
    if args.stats || args.out.is_none() {
        io::stdout().write_all(summary.as_bytes())?;
    }
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.circuit).with_context(|| format!("reading {}", args.circuit.display()))?;
    let circuit = parse(&text)?;
    let mode = match args.samples {
        Some(count) => VerifyMode::Sampled { count, seed: args.seed },
        None if args.exhaustive || circuit.width() <= gcdsynth::simulator::EXHAUSTIVE_LIMIT_BITS => {
            VerifyMode::Exhaustive
        }
        None => VerifyMode::Sampled { count: 1000, seed: args.seed },
    };
    let report = verify(&circuit, mode)?;
    println!("{report}");
    Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let file = args.model.load()?;
    let methods = args.methods.iter().map(|s| s.trim().parse::<Method>()).collect::<gcdsynth::Result<Vec<_>>>()?;
    let cfg = SweepConfig {
        bits: parse_bits(&args.bits)?,
        moduli: args.moduli.as_deref().map(read_moduli).transpose()?,
        multiplier_cap: args.multiplier_cap,
        first_multiplier: args.first_multiplier,
        methods,
        jobs: args.jobs,
        synthesis: synthesis_config(args.lookahead, file.cost_model(), true),
        depth_model: file.depth_model(),
        cache_dir: args.cache,
        record_timing: !args.no_timing,
        ..Default::default()
    };
    let records = bench::bench_sweep(&cfg)?;
    bench::write_csv(&args.out, &records)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        let path = args.out.with_extension("errors.csv");
        bench::write_errors(&path, &records)?;
        log::warn!("{failed} records failed; see {}", path.display());
    }
    let summary = bench::aggregate(&records)?;
    if let Some(path) = &args.summary {
        bench::write_summary_csv(path, &summary)?;
    }
    let dir = args.summary.as_deref().unwrap_or(&args.out).parent().unwrap_or(Path::new(""));
    bench::write_ratio_csv(&dir.join("ratio_vs_bits.csv"), &summary.ratios)?;
    eprintln!("{} records ({failed} failed) written to {}", records.len(), args.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Primes { bits, rank } => println!("{}", nth_largest_prime(bits, rank)?),
        Command::Semiprimes { bits } => {
            let mut out = io::stdout().lock();
            for m in enumerate_semiprimes(bits)? {
                writeln!(out, "{m}")?;
            }
        }
        Command::Synth(args) => run_synth(args)?,
        Command::Optimal(args) => run_optimal(args)?,
        Command::Modexp(args) => run_modexp(args)?,
        Command::Verify(args) => return run_verify(args),
        Command::Bench(args) => run_bench(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e)
            if e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            }) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
