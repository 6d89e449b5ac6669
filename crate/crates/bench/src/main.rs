use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hemilearn::instances::{gen_synthetic_restaurants, save_items_csv};
use hemilearn::learner::{predicted_bounds, BoundSetting, NoiseBudget, Precision, RESULT_HEADER};
use hemilearn::metric::write_instance;
use hemilearn_bench::config::{parse_policy, parse_projection};
use hemilearn_bench::{
    build_instance, run_trial, sweep, verify_with_fault, write_sweep_csv, Algorithm, BenchError, ExperimentConfig,
    InstanceKind, NoiseSetting, TrialParams, RestaurantModel,
};

#[derive(Parser)]
#[command(name = "hemilearn", version, about = "Learn hidden hemimetrics from threshold queries")]
struct Cli {
    /// Seed for instance generation and simulated users.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress and summary messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file, or an item file with `--kind items`.
    Gen(GenArgs),
    /// Run one algorithm once and print its result row.
    Run(RunArgs),
    /// Run an experiment grid described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the projections against exhaustive enumeration.
    Verify {
        /// Largest item count (at most 6).
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Leave this pivot out of every projection.
        #[arg(long, hide = true)]
        skip_pivot: Option<usize>,
    },
    /// Print the predicted worst-case query count.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Clustered,
    Quantized,
    #[value(name = "restaurants-cuisine")]
    RestaurantsCuisine,
    #[value(name = "restaurants-mixed")]
    RestaurantsMixed,
    Uniform,
    Items,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, value_enum, default_value = "clustered")]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 0.1)]
    r_in: f64,
    /// Grid step of quantized instances.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    step: f64,
    /// Off-diagonal value of uniform instances.
    #[arg(long, default_value_t = 0.5)]
    value: f64,
}

impl InstanceArgs {
    fn instance_kind(&self) -> Result<InstanceKind, BenchError> {
        Ok(match self.kind {
            Kind::Clustered => InstanceKind::Clustered { k: self.k, r_in: self.r_in },
            Kind::Quantized => InstanceKind::Quantized { k: self.k, step: self.step },
            Kind::RestaurantsCuisine => InstanceKind::Restaurants(RestaurantModel::Cuisine),
            Kind::RestaurantsMixed => InstanceKind::Restaurants(RestaurantModel::Mixed),
            Kind::Uniform => InstanceKind::Uniform { value: self.value },
            Kind::Items => return Err(BenchError::Trial("`items` is not a distance instance".into())),
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "learnhm")]
    algo: Algorithm,
    /// Instance file; generator flags are used when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    generate: InstanceArgs,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value = "none")]
    noise: NoiseSetting,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    eta_bn: f64,
    #[arg(long, default_value = "fast", value_parser = parse_projection)]
    projection: hemilearn::learner::ProjectionMode,
    #[arg(long, default_value = "qclique", value_parser = parse_policy)]
    policy: hemilearn::learner::PolicyKind,
    /// Record wall-clock time.
    #[arg(long)]
    timing: bool,
    /// Print the column header before the row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 0.1)]
    r_in: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Use the quantized setting with this grid step.
    #[arg(long)]
    step: Option<f64>,
    /// Add the noisy overhead for this largest noise scale.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
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
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>, BenchError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn dispatch(cli: &Cli) -> Result<ExitCode, BenchError> {
    match &cli.command {
        Command::Gen(args) => generate(cli, &args.instance)?,
        Command::Run(args) => run(cli, args)?,
        Command::Sweep { config } => {
            let config = ExperimentConfig::load(config)?;
            let result = sweep(&config);
            let target = cli.out.as_deref().or(config.output.as_deref());
            write_sweep_csv(output(target)?, &result)?;
            if !cli.quiet {
                if let Some(path) = target {
                    eprintln!("wrote {} points to {}", result.groups.len(), path.display());
                }
            }
        }
        Command::Verify { n, trials, skip_pivot } => {
            let report = verify_with_fault(*n, *trials, cli.seed, *skip_pivot)?;
            let mut out = output(cli.out.as_deref())?;
            if !cli.quiet || !report.ok() {
                writeln!(out, "{} of {} trials passed", report.passed, report.trials)?;
            }
            for f in &report.failures {
                writeln!(out, "FAIL {f}")?;
            }
            out.flush()?;
            if !report.ok() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bounds(args) => {
            let precision = match args.step {
                Some(step) => Precision::Quantized { step },
                None => Precision::Clustered { r_in: args.r_in, epsilon: args.eps },
            };
            let noise = args.sigma.map(|sigma_max| NoiseBudget { delta: args.delta, sigma_max });
            let value = predicted_bounds(&BoundSetting { n: args.n, k: args.k, r: args.r, precision, noise })?;
            let mut out = output(cli.out.as_deref())?;
            writeln!(out, "{}", hemilearn::metric::format_decimal(value))?;
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(cli: &Cli, args: &InstanceArgs) -> Result<(), BenchError> {
    if let Kind::Items = args.kind {
        let mut items = gen_synthetic_restaurants(cli.seed);
        if let Some(n) = args.n {
            items.truncate(n);
        }
        let path = cli
            .out
            .as_deref()
            .ok_or_else(|| BenchError::Trial("`gen --kind items` needs --out".into()))?;
        save_items_csv(path, &items)?;
        return Ok(());
    }
    let n = args.n.ok_or_else(|| BenchError::Trial("--n is required".into()))?;
    let mut params = TrialParams::new(args.instance_kind()?, n, 0.01);
    params.r = args.r;
    let d = build_instance(&params, cli.seed)?;
    let mut out = output(cli.out.as_deref())?;
    write_instance(&mut out, &d)?;
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli, args: &RunArgs) -> Result<(), BenchError> {
    let (kind, n, r) = match &args.instance {
        Some(path) => {
            let d = hemilearn::metric::load_instance(path)?;
            (InstanceKind::File(path.clone()), args.generate.n.unwrap_or(d.n()), d.r())
        }
        None => (
            args.generate.instance_kind()?,
            args.generate.n.ok_or_else(|| BenchError::Trial("--n or --instance is required".into()))?,
            args.generate.r,
        ),
    };
    let mut params = TrialParams::new(kind, n, args.eps);
    params.r = r;
    params.delta = args.delta;
    params.noise = args.noise;
    params.sigma = args.sigma;
    params.eta_bn = args.eta_bn;
    params.projection = args.projection;
    params.policy = args.policy;
    params.timing = args.timing;
    let row = run_trial(&params, args.algo, cli.seed)?;
    let mut w = csv::Writer::from_writer(output(cli.out.as_deref())?);
    if args.header {
        w.write_record(RESULT_HEADER)?;
    }
    w.write_record(row.fields())?;
    w.flush()?;
    Ok(())
}
