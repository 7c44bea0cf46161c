use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lehmer_agg::bench::{run_benchmark, run_method, ExperimentConfig, Method, MethodOptions};
use lehmer_agg::distance::{distance, Metric};
use lehmer_agg::io::{self, DatasetKind, Format, ImportOptions, JesterMode};
use lehmer_agg::lca::Bucketing;
use lehmer_agg::lehmer::{decode, decode_partial, encode_ranking, LehmerCode, LehmerPair};
use lehmer_agg::models::{
    exact_mallows_pmf, sample_complexity_bound, sample_gmm_batch, sample_mallows_batch, sweep_bounds, CheckStatus,
    GmmParams, Guarantee, MallowsParams, MetropolisConfig,
};
use lehmer_agg::ranking::{PartialRanking, Permutation, Ranking, RankingSample};

#[derive(Parser)]
#[command(name = "lehmer-agg", version, about = "Rank aggregation through Lehmer codes")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Lehmer code of each ranking; partial rankings print `c | c'`.
    Encode(EncodeArgs),
    /// Turn codes (`c`, or `c | c'`) back into rankings.
    Decode(DecodeArgs),
    /// Aggregate the rankings of a file into one ranking.
    Aggregate(AggregateArgs),
    /// Draw rankings from a Mallows model or its generalization to ties.
    Sample(SampleArgs),
    /// Distances from each ranking to a reference ranking.
    Distance(DistanceArgs),
    /// Convert a published dataset into ranking text.
    Import(ImportArgs),
    /// Run a benchmark described by a TOML file and print the CSV report.
    Bench(BenchArgs),
    /// Exact checks of the model properties the aggregators rely on.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Ranks,
    Order,
    Buckets,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Ranks => Format::Ranks,
            FormatArg::Order => Format::Order,
            FormatArg::Buckets => Format::Buckets,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Ranking file, `-` for standard input.
    #[arg(default_value = "-")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "ranks")]
    format: FormatArg,
    /// Number of elements (needed for `|*` lines that list no high ids).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Also print the interval widths `IN` for partial rankings.
    #[arg(long)]
    in_count: bool,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Output format; defaults to ranks for codes and buckets for pairs.
    #[arg(long, value_enum)]
    output_format: Option<FormatArg>,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_method, default_value = "lc-median")]
    method: Method,
    #[arg(long, value_parser = parse_bucketing, default_value = "none")]
    bucketize: Bucketing,
    /// Metric for the reported objective.
    #[arg(long, value_parser = parse_metric)]
    metric: Option<Metric>,
    /// Required by the randomized methods.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = lehmer_agg::baselines::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, value_enum)]
    output_format: Option<FormatArg>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(subcommand)]
    model: ModelCommand,
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Permutations from `MM(sigma0, phi)`.
    Mallows {
        #[arg(long)]
        n: Option<usize>,
        /// Centroid ranks, e.g. "2 1 3"; identity by default.
        #[arg(long)]
        centroid: Option<String>,
        #[arg(long, conflicts_with = "lambda")]
        phi: Option<f64>,
        /// Sets `phi = exp(-lambda)`.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "ranks")]
        format: FormatArg,
    },
    /// Weak orders around a partial centroid under the Kemeny distance.
    Gmm {
        /// Centroid buckets, e.g. "1 3 | 2 4".
        #[arg(long)]
        centroid: String,
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        /// Chain steps discarded before the first draw when `n` is too large
        /// for exact sampling.
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 10)]
        thinning: usize,
        #[arg(long, value_enum, default_value = "buckets")]
        format: FormatArg,
    },
}

#[derive(Args)]
struct DistanceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_metric, default_value = "kendall")]
    metric: Metric,
    /// File whose first ranking is the reference.
    #[arg(long, conflicts_with = "identity")]
    to: Option<PathBuf>,
    /// Compare against `1 2 ... n`.
    #[arg(long)]
    identity: bool,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: DatasetKind,
    path: PathBuf,
    #[arg(long, value_enum, default_value = "permutations")]
    jester_mode: JesterModeArg,
    #[arg(long, default_value_t = 50)]
    top_movies: usize,
    #[arg(long, default_value_t = 500)]
    top_users: usize,
    #[arg(long, value_enum, default_value = "buckets")]
    output_format: FormatArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum JesterModeArg {
    Permutations,
    Partial,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    /// Write the CSV here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Record wall time per row.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(subcommand)]
    check: VerifyCommand,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Compare empirical position frequencies of one element with the exact
    /// Mallows marginals around the identity.
    Remark {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.9)]
        phi: f64,
        #[arg(long, default_value_t = 3)]
        element: usize,
        #[arg(long, default_value_t = 0.005)]
        tolerance: f64,
        /// Print the exact marginals only.
        #[arg(long)]
        exact: bool,
        /// Number of elements when `--exact` is given.
        #[arg(long, default_value_t = 4)]
        size: usize,
    },
    /// Position ratio, tail and vote bounds over every element and subset.
    Lemmas {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
        phi: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 5, 6])]
        n: Vec<usize>,
    },
    /// Sample size for a recovery guarantee.
    SampleComplexity {
        #[arg(long, value_parser = parse_guarantee)]
        guarantee: Guarantee,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method `{s}`"))
}

fn parse_bucketing(s: &str) -> Result<Bucketing, String> {
    Bucketing::parse(s).ok_or_else(|| format!("unknown bucketing `{s}` (none, greedy, optimal)"))
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    Metric::parse(s).ok_or_else(|| format!("unknown metric `{s}` (kendall, kemeny, kemeny-unrated, footrule)"))
}

fn parse_kind(s: &str) -> Result<DatasetKind, String> {
    DatasetKind::parse(s).ok_or_else(|| format!("unknown dataset `{s}` (sushi, jester, movielens)"))
}

fn parse_guarantee(s: &str) -> Result<Guarantee, String> {
    Guarantee::parse(s).ok_or_else(|| format!("unknown guarantee `{s}` (mode, median, partial-median)"))
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<lehmer_agg::Error> for Failure {
    fn from(e: lehmer_agg::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let mut out = String::new();
    let result = run(cli.command, &mut out);
    let _ = std::io::stdout().write_all(out.as_bytes());
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, out: &mut String) -> CliResult<ExitCode> {
    match command {
        Command::Encode(args) => encode_cmd(args, out),
        Command::Decode(args) => decode_cmd(args, out),
        Command::Aggregate(args) => aggregate_cmd(args, out),
        Command::Sample(args) => sample_cmd(args.model, out),
        Command::Distance(args) => distance_cmd(args, out),
        Command::Import(args) => import_cmd(args, out),
        Command::Bench(args) => bench_cmd(args, out),
        Command::Verify(args) => return verify_cmd(args.check, out),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn read_text(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Data)
}

fn read_sample(input: &InputArgs) -> CliResult<RankingSample> {
    let text = read_text(&input.input)?;
    io::parse_str(&text, input.format.into(), input.n)
        .with_context(|| format!("parsing {}", input.input.display()))
        .map_err(Failure::Data)
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn encode_cmd(args: EncodeArgs, out: &mut String) -> CliResult<()> {
    let sample = read_sample(&args.input)?;
    for r in sample.rankings() {
        let pair = encode_ranking(r);
        match r {
            Ranking::Full(_) => writeln!(out, "{}", join(pair.c.values())),
            Ranking::Partial(_) if args.in_count => {
                writeln!(out, "{} | {} | {}", join(pair.c.values()), join(&pair.c_prime), join(&pair.in_count))
            }
            Ranking::Partial(_) => writeln!(out, "{} | {}", join(pair.c.values()), join(&pair.c_prime)),
        }
        .expect("writing to a String");
    }
    Ok(())
}

fn decode_cmd(args: DecodeArgs, out: &mut String) -> CliResult<()> {
    let text = read_text(&args.input)?;
    let mut rankings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |e: lehmer_agg::Error| anyhow!("line {}: {e}", i + 1);
        let parts: Vec<Vec<usize>> = line
            .split('|')
            .map(|p| p.split_whitespace().map(str::parse).collect::<Result<Vec<usize>, _>>())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow!("line {}: {e}", i + 1))?;
        let code = LehmerCode::new(parts[0].clone()).map_err(at)?;
        let ranking = match parts.len() {
            1 => Ranking::Full(decode(&code)),
            2 | 3 => {
                let pair = LehmerPair::new(code, parts[1].clone()).map_err(at)?;
                if parts.len() == 3 && parts[2] != pair.in_count {
                    return Err(anyhow!("line {}: interval widths do not match c and c'", i + 1).into());
                }
                Ranking::Partial(decode_partial(&pair).map_err(at)?)
            }
            _ => return Err(anyhow!("line {}: expected `c`, `c | c'` or `c | c' | IN`", i + 1).into()),
        };
        rankings.push(ranking);
    }
    for r in &rankings {
        let format = args.output_format.map(Format::from).unwrap_or(match r {
            Ranking::Full(_) => Format::Ranks,
            Ranking::Partial(_) => Format::Buckets,
        });
        writeln!(out, "{}", io::format_ranking(r, format)?).expect("writing to a String");
    }
    Ok(())
}

fn aggregate_cmd(args: AggregateArgs, out: &mut String) -> CliResult<()> {
    let randomized = matches!(args.method, Method::FasPivot | Method::InsertionComp);
    if randomized && args.seed.is_none() {
        return usage(format!("--seed is required for {}", args.method.name()));
    }
    if matches!(args.method, Method::MostProb | Method::FaslpPivot) {
        return usage(format!("{} is only available inside benchmarks", args.method.name()));
    }
    if args.restarts == 0 {
        return usage("--restarts must be at least 1");
    }
    let sample = read_sample(&args.input)?;
    let options = MethodOptions { seed: args.seed.unwrap_or(0), restarts: args.restarts, bucketing: args.bucketize };
    let ranking = run_method(args.method, &sample, &options, None)?.expect("method is available");
    let metric = args.metric.unwrap_or(if sample.all_full() && ranking.as_permutation().is_some() {
        Metric::Kendall
    } else {
        Metric::KemenyUnrated
    });
    let objective = lehmer_agg::distance::cumulative(&sample, &ranking, metric)?;
    let format = args.output_format.map(Format::from).unwrap_or(match ranking {
        Ranking::Full(_) => Format::Ranks,
        Ranking::Partial(_) => Format::Buckets,
    });
    writeln!(out, "{}", io::format_ranking(&ranking, format)?).expect("writing to a String");
    eprintln!("objective {} total={} average={}", metric.name(), objective.total, objective.average);
    Ok(())
}

fn sample_cmd(model: ModelCommand, out: &mut String) -> CliResult<()> {
    let (sample, format) = match model {
        ModelCommand::Mallows { n, centroid, phi, lambda, m, seed, format } => {
            let sigma0 = match (centroid, n) {
                (Some(c), _) => {
                    let ranks = c
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<Result<Vec<usize>, _>>()
                        .map_err(|e| Failure::Usage(format!("--centroid: {e}")))?;
                    let p = Permutation::from_ranks(ranks).map_err(|e| Failure::Usage(format!("--centroid: {e}")))?;
                    if n.is_some_and(|n| n != p.n()) {
                        return usage("--n disagrees with --centroid");
                    }
                    p
                }
                (None, Some(n)) if n > 0 => Permutation::identity(n),
                _ => return usage("give --n or --centroid"),
            };
            let params = match (phi, lambda) {
                (Some(phi), None) => MallowsParams::new(sigma0, phi),
                (None, Some(lambda)) => MallowsParams::from_lambda(sigma0, lambda),
                _ => return usage("give --phi or --lambda"),
            }
            .map_err(|e| Failure::Usage(e.to_string()))?;
            (sample_mallows_batch(&params, m, seed)?, format)
        }
        ModelCommand::Gmm { centroid, phi, m, seed, burn_in, thinning, format } => {
            let parsed = io::parse_str(&centroid, Format::Buckets, None).map_err(|e| Failure::Usage(format!("--centroid: {e}")))?;
            let sigma0: PartialRanking = parsed.rankings()[0].as_partial().into_owned();
            let params = GmmParams::new(sigma0, phi).map_err(|e| Failure::Usage(e.to_string()))?;
            let chain = MetropolisConfig { burn_in, thinning };
            (sample_gmm_batch(&params, m, seed, chain)?, format)
        }
    };
    out.push_str(&io::write_str(&sample, format.into())?);
    Ok(())
}

fn distance_cmd(args: DistanceArgs, out: &mut String) -> CliResult<()> {
    let sample = read_sample(&args.input)?;
    let reference = match (&args.to, args.identity) {
        (Some(path), _) => {
            let text = read_text(path)?;
            let other = io::parse_str(&text, args.input.format.into(), args.input.n)
                .with_context(|| format!("parsing {}", path.display()))?;
            other.rankings()[0].clone()
        }
        (None, true) => Ranking::Full(Permutation::identity(sample.n())),
        (None, false) => return usage("give --to FILE or --identity"),
    };
    let mut total = lehmer_agg::HalfInt::ZERO;
    for r in sample.rankings() {
        let d = distance(args.metric, r, &reference)?;
        total = total + d;
        writeln!(out, "{d}").expect("writing to a String");
    }
    if sample.m() > 1 {
        writeln!(out, "# total {total} average {}", total.to_f64() / sample.m() as f64).expect("writing to a String");
    }
    Ok(())
}

fn import_cmd(args: ImportArgs, out: &mut String) -> CliResult<()> {
    let options = ImportOptions {
        jester_mode: match args.jester_mode {
            JesterModeArg::Permutations => JesterMode::Permutations,
            JesterModeArg::Partial => JesterMode::Partial,
        },
        top_movies: args.top_movies,
        top_users: args.top_users,
    };
    let sample = io::import_dataset(args.kind, &args.path, &options)
        .with_context(|| format!("importing {}", args.path.display()))?;
    let text = io::write_str(&sample, args.output_format.into())?;
    match args.output {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => out.push_str(&text),
    }
    eprintln!("{} rankings over {} items", sample.m(), sample.n());
    Ok(())
}

fn bench_cmd(args: BenchArgs, out: &mut String) -> CliResult<()> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| Failure::Usage(e.to_string()))?;
    config.timing |= args.timing;
    if args.output.is_some() {
        config.output = args.output;
    }
    let report = run_benchmark(&config)?;
    if config.output.is_none() {
        out.push_str(&report.to_csv()?);
    }
    Ok(())
}

fn verify_cmd(check: VerifyCommand, out: &mut String) -> CliResult<ExitCode> {
    let mut ok = true;
    match check {
        VerifyCommand::Remark { input, phi, element, tolerance, exact, size } => {
            let (n, empirical) = if exact {
                (size, None)
            } else {
                let sample = read_sample(&input)?;
                let perms = sample.permutations()?;
                let n = sample.n();
                if element == 0 || element > n {
                    return usage(format!("--element must be in 1..={n}"));
                }
                let mut counts = vec![0usize; n];
                for p in &perms {
                    counts[p.rank(element) - 1] += 1;
                }
                (n, Some((counts, perms.len())))
            };
            if element == 0 || element > n {
                return usage(format!("--element must be in 1..={n}"));
            }
            let params = MallowsParams::new(Permutation::identity(n), phi).map_err(|e| Failure::Usage(e.to_string()))?;
            let pmf = exact_mallows_pmf(&params)?;
            let all: Vec<usize> = (1..=n).collect();
            let dist = pmf.position_distribution(element, &all);
            for (j, p) in dist.iter().enumerate() {
                match &empirical {
                    Some((counts, m)) => {
                        let freq = counts[j] as f64 / *m as f64;
                        let within = (freq - p).abs() <= tolerance;
                        ok &= within;
                        writeln!(
                            out,
                            "P[sigma({element})={}] exact {p:.4} empirical {freq:.4} {}",
                            j + 1,
                            if within { "PASS" } else { "FAIL" }
                        )
                    }
                    None => writeln!(out, "P[sigma({element})={}] exact {p:.4}", j + 1),
                }
                .expect("writing to a String");
            }
        }
        VerifyCommand::Lemmas { phi, n } => {
            for &phi in &phi {
                for &n in &n {
                    let sweep = sweep_bounds(phi, n)?;
                    let statuses = [
                        ("position-ratios", sweep.position_status()),
                        ("tail-bounds", sweep.tail_status()),
                        ("partial-vote", sweep.vote_status()),
                    ];
                    for (name, status) in statuses {
                        ok &= status != CheckStatus::Fail;
                        writeln!(out, "{name} phi={phi} n={n} {status}").expect("writing to a String");
                    }
                }
            }
        }
        VerifyCommand::SampleComplexity { guarantee, n, phi, delta } => {
            let bound = sample_complexity_bound(guarantee, n, phi, delta)?;
            writeln!(out, "q={:.6} c={:.6} m={}", bound.q, bound.c, bound.m).expect("writing to a String");
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
