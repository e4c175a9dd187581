use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use bisidon::energy::{additive_energy, multiplicative_energy, sidon_witness, Operation};
use bisidon::exactnum::FpPoint;
use bisidon::extractor::{extract, BranchChoice, ExtractorConfig};
use bisidon::lab::{
    energy_by_enumeration, fit_exponent, format_numbers, gen_dataset, geometric_sizes,
    max_bi_sidon_exact, read_numbers, scaling_experiment, write_rows, DatasetKind, DatasetParams,
    ORACLE_LIMIT,
};
use bisidon::parabola::{estimate_containment_probability, triple_containment_probability_exact};
use bisidon::stream::rng_from_seed;
use bisidon::{Error, RationalNumber, Result};

#[derive(Parser)]
#[command(
    name = "bisidon",
    version,
    about = "Bi-Sidon subsets of finite sets of rationals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dataset, one value per line.
    Gen(GenArgs),
    /// Additive and multiplicative energy of a set.
    Energy {
        #[arg(long)]
        input: PathBuf,
        /// Count quadruples directly (at most 30 elements).
        #[arg(long)]
        oracle: bool,
    },
    /// Sidon predicates, with a witness relation when one fails.
    Verify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Extract a bi-Sidon subset.
    Extract(ExtractArgs),
    /// Exact largest bi-Sidon subset of a small set.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = ORACLE_LIMIT)]
        limit: usize,
    },
    /// Probability that a random parabola contains given points.
    Parabola(ParabolaArgs),
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Interval,
    Geometric,
    Random,
    Pds,
}

impl From<Kind> for DatasetKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Interval => DatasetKind::Interval,
            Kind::Geometric => DatasetKind::Geometric,
            Kind::Random => DatasetKind::Random,
            Kind::Pds => DatasetKind::Pds,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<RationalNumber>,
    #[arg(long)]
    max: Option<u64>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Auto,
    AddFirst,
    MulFirst,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 32)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    c: Option<RationalNumber>,
    #[arg(long)]
    q: Option<RationalNumber>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_enum, default_value_t = BranchArg::Auto)]
    branch: BranchArg,
    #[arg(long)]
    no_adaptive: bool,
    /// Record wall-clock time in the trace.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ParabolaArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, conflicts_with = "mc", required_unless_present = "mc")]
    exact: bool,
    #[arg(long, requires = "points")]
    mc: bool,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// `x,y;x,y;...`
    #[arg(long)]
    points: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Experiment {
    /// Extraction sizes over a geometric range of N.
    Scaling {
        #[arg(long)]
        kind: Kind,
        #[arg(long)]
        nmin: usize,
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = 2)]
        factor: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        timing: bool,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_points(text: &str, p: u64) -> Result<Vec<FpPoint>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let coords: Vec<u64> = pair
                .split(',')
                .map(|c| c.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("point {pair:?}: {e}")))?;
            match coords[..] {
                [x, y] => Ok(FpPoint::new(x % p, y % p, p)),
                _ => Err(Error::InvalidInput(format!(
                    "point {pair:?} needs two coordinates"
                ))),
            }
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let params = DatasetParams {
                n: a.n,
                gamma: a.gamma,
                max: a.max,
                p: a.p,
                seed: a.seed,
            };
            let data = gen_dataset(a.kind.into(), &params)?;
            let mut out = create(&a.output)?;
            out.write_all(format_numbers(&data.elements).as_bytes())?;
            out.flush()?;
        }
        Command::Energy { input, oracle } => {
            let set = read_numbers(&input)?;
            let (add, mul) = if oracle {
                (
                    energy_by_enumeration(&set, Operation::Sum)?,
                    energy_by_enumeration(&set, Operation::Product)?,
                )
            } else {
                (additive_energy(&set), multiplicative_energy(&set)?)
            };
            print_json(
                &json!({ "n": set.len(), "additive_energy": add, "multiplicative_energy": mul }),
            )?;
        }
        Command::Verify { input } => {
            let set = read_numbers(&input)?;
            let additive = sidon_witness(&set, Operation::Sum)?;
            let multiplicative = sidon_witness(&set, Operation::Product)?;
            print_json(&json!({
                "additive_sidon": additive.is_none(),
                "multiplicative_sidon": multiplicative.is_none(),
                "bi_sidon": additive.is_none() && multiplicative.is_none(),
                "witness": additive.or(multiplicative),
            }))?;
        }
        Command::Extract(a) => {
            let set = read_numbers(&a.input)?;
            let defaults = ExtractorConfig::default();
            let cfg = ExtractorConfig {
                c: a.c.unwrap_or(defaults.c.clone()),
                q_override: a.q,
                p_override: a.p,
                d: a.d,
                trials: a.trials,
                branch: match a.branch {
                    BranchArg::Auto => BranchChoice::Auto,
                    BranchArg::AddFirst => BranchChoice::AdditiveFirst,
                    BranchArg::MulFirst => BranchChoice::MultiplicativeFirst,
                },
                adaptive_c: !a.no_adaptive,
                seed: a.seed,
                record_timing: a.timing,
                ..defaults
            };
            let result = extract(&set, &cfg)?;
            if a.json {
                print_json(&json!({ "subset": result.subset, "trace": result.trace }))?;
            } else {
                print!("{}", format_numbers(&result.subset));
            }
        }
        Command::Oracle { input, limit } => {
            let best = max_bi_sidon_exact(&read_numbers(&input)?, limit)?;
            print_json(&json!({ "max_size": best.len(), "subset": best }))?;
        }
        Command::Parabola(a) => {
            if a.exact {
                let prob = triple_containment_probability_exact(a.p)?;
                print_json(&json!({ "p": a.p, "probability": prob, "stderr": 0.0 }))?;
            } else {
                let points = parse_points(a.points.as_deref().unwrap_or_default(), a.p)?;
                let est = estimate_containment_probability(
                    &points,
                    a.trials,
                    &mut rng_from_seed(a.seed),
                )?;
                print_json(&json!({
                    "p": a.p,
                    "hits": est.hits,
                    "trials": est.trials,
                    "estimate": est.estimate(),
                    "stderr": est.stderr(),
                }))?;
            }
        }
        Command::Experiment(Experiment::Scaling {
            kind,
            nmin,
            nmax,
            factor,
            trials,
            seed,
            timing,
            output,
        }) => {
            let sizes = geometric_sizes(nmin, nmax, factor)?;
            let cfg = ExtractorConfig {
                seed,
                record_timing: timing,
                ..ExtractorConfig::default()
            };
            let rows = scaling_experiment(&[kind.into()], &sizes, trials, &cfg)?;
            let mut out = create(&output)?;
            write_rows(&rows, &mut out)?;
            out.flush()?;
            match fit_exponent(&rows) {
                Ok(slope) => eprintln!("fitted exponent {slope:.4}"),
                Err(e) => eprintln!("no exponent fit: {e}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
