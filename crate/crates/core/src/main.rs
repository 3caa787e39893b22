use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ctxtree::experiments::{
    consistency_curve, coverage_experiment, deviation_check, CoverageConfig, CurveConfig, DeviationConfig,
};
use ctxtree::files::{model_from_json, pattern_from_json, tree_to_json};
use ctxtree::{
    estimate, one_sided_test, Alphabet, Decision, EstimateF64, EstimatorConfigF64, IngestMode, Sample, Simulator,
    VlmcModelF64, WeightFunctionF64,
};

#[derive(Parser)]
#[command(name = "ctxtree", version, about = "Lower confidence bounds and one-sided tests for context trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Chars,
    Tokens,
}

impl From<Mode> for IngestMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Chars => IngestMode::Chars,
            Mode::Tokens => IngestMode::Tokens,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the lower-bound tree of a sample.
    Estimate(EstimateArgs),
    /// One-sided test of H0: the context tree precedes a hypothesis tree.
    Test(TestArgs),
    /// Simulate a path from a model file.
    Simulate(SimulateArgs),
    /// Monte Carlo coverage of the lower bound.
    Coverage(CoverageArgs),
    /// Distance to the true tree along a grid of sample sizes.
    Curve(CurveArgs),
    /// Empirical check of the discrepancy deviation bound.
    Deviation(DeviationArgs),
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "chars")]
    mode: Mode,
    /// Comma-separated symbol labels.
    #[arg(long)]
    alphabet: String,
    /// Significance level; c is calibrated from it.
    #[arg(long, required_unless_present = "c", conflicts_with = "c")]
    alpha: Option<f64>,
    /// Tolerance constant used directly.
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "chars")]
    mode: Mode,
    /// Pattern tree file describing the hypothesis.
    #[arg(long)]
    tau0: PathBuf,
    #[arg(long)]
    alpha: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short = 'n')]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output mode; defaults to chars for single-character alphabets.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short = 'n')]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(short = 'M', long = "reps")]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight function for reported distances (`exp:<base>` or `trunc:<depth>`).
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    #[arg(long = "c")]
    c: f64,
    #[arg(long, default_value = "exp:0.25")]
    phi: String,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DeviationArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short = 'n')]
    n: usize,
    #[arg(long = "c-list", value_delimiter = ',')]
    c_list: Vec<f64>,
    #[arg(short = 'M', long = "reps")]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_model(path: &Path) -> Result<VlmcModelF64> {
    let text = String::from_utf8(read(path)?).context("model file is not UTF-8")?;
    model_from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

fn parse_phi(spec: &str) -> Result<WeightFunctionF64> {
    WeightFunctionF64::parse(spec).with_context(|| format!("bad weight function {spec:?} (use exp:<base> or trunc:<depth>)"))
}

fn render(alphabet: &Alphabet, w: &[u8]) -> String {
    if w.is_empty() {
        "λ".to_owned()
    } else {
        alphabet.render_word(w)
    }
}

fn bound_text(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "+inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.6}")
    }
}

fn estimate_report(sample: &Sample, config: &EstimatorConfigF64, est: &EstimateF64) -> String {
    let a = sample.alphabet();
    let mut out = String::new();
    let _ = writeln!(out, "n = {}", sample.len());
    let _ = writeln!(out, "alphabet = {a}");
    let _ = writeln!(out, "c = {}", config.c);
    if let Some(cal) = config.calibration {
        let _ = writeln!(out, "alpha = {}", cal.alpha);
        let _ = writeln!(out, "window = [{}, {}]", cal.window_lower, cal.window_upper);
        let _ = writeln!(out, "window_ok = {}", cal.window_ok);
    }
    let _ = writeln!(out, "threshold = {}", config.threshold(sample.len()));
    let _ = writeln!(out, "nodes = {}", est.tree.node_set().len());
    let _ = writeln!(out, "leaves = {}", est.tree.leaves().len());
    let _ = writeln!(out, "examined = {}", est.verdicts.len());
    out.push_str("\nleaf brackets (symbol: [lower from, upper from])\n");
    for leaf in est.tree.leaves() {
        let Some(v) = est.verdict(leaf) else { continue };
        let _ = writeln!(out, "{} count={} extensions={}", render(a, leaf), v.count, v.brackets.extensions);
        for (i, label) in a.labels().iter().enumerate() {
            let from = |w: &Option<ctxtree::Word>| w.as_ref().map(|w| render(a, w)).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "  {label}: [{} from {}, {} from {}]",
                bound_text(v.brackets.lower[i]),
                from(&v.brackets.lower_from[i]),
                bound_text(v.brackets.upper[i]),
                from(&v.brackets.upper_from[i]),
            );
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => {
            let alphabet = Alphabet::parse(&args.alphabet)?;
            let sample = Sample::ingest(&read(&args.input)?, args.mode.into(), &alphabet)?;
            let config = match (args.alpha, args.c) {
                (Some(alpha), None) => EstimatorConfigF64::from_alpha(alphabet.size(), sample.len(), alpha)?,
                (None, Some(c)) => EstimatorConfigF64::with_c(c)?,
                _ => bail!("give exactly one of --alpha or --c"),
            };
            if config.window_ok() == Some(false) {
                eprintln!("warning: c = {} lies outside the certified window for n = {}", config.c, sample.len());
            }
            let est = estimate(&sample, &config)?;
            write(&args.output, &tree_to_json(&est.tree))?;
            if let Some(dot) = &args.dot {
                write(dot, &est.tree.to_dot())?;
            }
            if let Some(report) = &args.report {
                write(report, &estimate_report(&sample, &config, &est))?;
            }
            println!(
                "n={} c={} leaves={} depth={}",
                sample.len(),
                config.c,
                est.tree.leaves().len(),
                est.tree.depth()
            );
        }
        Command::Test(args) => {
            let text = String::from_utf8(read(&args.tau0)?).context("pattern file is not UTF-8")?;
            let tau0 = pattern_from_json(&text)?;
            let sample = Sample::ingest(&read(&args.input)?, args.mode.into(), tau0.alphabet())?;
            let outcome = one_sided_test(&sample, &tau0, args.alpha)?;
            let decision = match outcome.decision {
                Decision::Reject => "reject",
                Decision::NotReject => "not-reject",
            };
            println!("decision = {decision}");
            println!("c = {}", outcome.c);
            println!("window_ok = {}", outcome.window_ok);
            if !outcome.window_ok {
                eprintln!("warning: c lies outside the certified window; the level is not guaranteed");
            }
            if let Some(w) = &outcome.witness {
                println!("witness = {}", render(sample.alphabet(), w));
            }
        }
        Command::Simulate(args) => {
            let model = load_model(&args.model)?;
            let sample = Simulator::new(&model)?.sample(args.n, args.seed, 0);
            let mode = match args.mode {
                Some(m) => m.into(),
                None if model.alphabet().is_single_char() => IngestMode::Chars,
                None => IngestMode::Tokens,
            };
            if mode == IngestMode::Chars && !model.alphabet().is_single_char() {
                bail!("chars output needs single-character labels");
            }
            write(&args.output, &sample.render(mode))?;
        }
        Command::Coverage(args) => {
            let model = load_model(&args.model)?;
            let phi = match &args.phi {
                Some(spec) => parse_phi(spec)?,
                None => WeightFunctionF64::exponential(1.0 / (2.0 * model.alphabet().size() as f64))?,
            };
            let config = CoverageConfig {
                model_label: args.model.display().to_string(),
                n: args.n,
                alpha: args.alpha,
                reps: args.reps,
                seed: args.seed,
                phi,
            };
            let report = coverage_experiment(&model, &config)?;
            write(&args.out, &report.to_csv()?)?;
            println!(
                "coverage = {} (floor {}) c = {} window_ok = {}",
                report.coverage(),
                report.coverage_floor(),
                report.c,
                report.window_ok
            );
        }
        Command::Curve(args) => {
            let model = load_model(&args.model)?;
            let config = CurveConfig {
                model_label: args.model.display().to_string(),
                grid: args.grid,
                c: args.c,
                phi: parse_phi(&args.phi)?,
                reps: args.reps,
                seed: args.seed,
            };
            let report = consistency_curve(&model, &config)?;
            write(&args.out, &report.to_csv()?)?;
            for &n in &config.grid {
                println!("n = {n} median distance = {}", report.median_at(n));
            }
        }
        Command::Deviation(args) => {
            let model = load_model(&args.model)?;
            let config = DeviationConfig {
                model_label: args.model.display().to_string(),
                n: args.n,
                c_list: args.c_list,
                reps: args.reps,
                seed: args.seed,
            };
            let report = deviation_check(&model, &config)?;
            write(&args.out, &report.to_csv()?)?;
            for r in &report.records {
                println!("c = {} frequency = {} bound = {}", r.c, r.frequency, r.bound);
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
