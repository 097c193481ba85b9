use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ellipsar::estimate::{self, ConstrainedSolver, DEFAULT_TOL};
use ellipsar::harness::{self, ConfigOverrides, Design, OutputFormat};
use ellipsar::simulate::{self, ArfimaSpec, SeriesSample, ShortMemorySpec};
use ellipsar::{Error, WeightSequence};

#[derive(Parser)]
#[command(name = "ellipsar", version, about = "Ellipsoid-constrained long autoregressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo comparison against the AIC benchmark.
    Run(RunArgs),
    /// Simulate one series and write it as `t,value` CSV.
    Simulate(SimulateArgs),
    /// Fit a constrained long AR to a `t,value` CSV series.
    Fit(FitArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated: short_memory, long_memory or all.
    #[arg(long)]
    design: Option<String>,
    #[arg(long)]
    phi_bar: Option<String>,
    #[arg(long)]
    k0: Option<String>,
    #[arg(long)]
    sample_size: Option<String>,
    #[arg(long)]
    warmup: Option<String>,
    #[arg(long)]
    test_size: Option<String>,
    #[arg(long)]
    replications: Option<String>,
    #[arg(long)]
    multipliers: Option<String>,
    #[arg(long)]
    weight_exponent: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    parallelism: Option<String>,
    #[arg(long)]
    p_max: Option<String>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replication K_AIC / B / ratio records.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Exit with status 2 when any cell is incomplete.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        let mut o = ConfigOverrides::default();
        let pairs = [
            ("design", &self.design),
            ("phi_bar", &self.phi_bar),
            ("k0", &self.k0),
            ("sample_size", &self.sample_size),
            ("warmup", &self.warmup),
            ("test_size", &self.test_size),
            ("replications", &self.replications),
            ("multipliers", &self.multipliers),
            ("weight_exponent", &self.weight_exponent),
            ("seed", &self.seed),
            ("parallelism", &self.parallelism),
            ("p_max", &self.p_max),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                o.push(key, v.clone());
            }
        }
        o
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "short_memory")]
    design: String,
    #[arg(long, default_value_t = 0.75)]
    phi_bar: f64,
    #[arg(long, default_value_t = 100)]
    k0: usize,
    /// Effective sample size n.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Lag budget K (presample length).
    #[arg(long, default_value_t = 1)]
    lags: usize,
    #[arg(long, default_value_t = 1000)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = simulate::DEFAULT_FRAC_D)]
    frac_d: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with header `t,value`.
    input: PathBuf,
    /// Lag budget K; defaults to the presample length of the file.
    #[arg(long)]
    lags: Option<usize>,
    #[arg(long, default_value_t = 0.501)]
    weight_exponent: f64,
    /// Fixed radius B; without it B is selected over the default grid.
    #[arg(long)]
    radius: Option<f64>,
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let cfg = harness::parse_config(&args.overrides(), args.config.as_deref())?;
    eprint!("# resolved configuration\n{}", cfg.echo());
    let result = harness::run_experiment(&cfg)?;
    eprintln!("# wall time {:.1}s", result.wall_time.as_secs_f64());
    write_output(args.out.as_ref(), &harness::emit(&result, args.format))?;
    if let Some(path) = &args.diagnostics {
        std::fs::write(path, harness::emit_diagnostics(&result))?;
    }
    if args.strict && !result.complete() {
        eprintln!("incomplete cells present");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate_cmd(args: SimulateArgs) -> Result<ExitCode, Error> {
    let ar = ShortMemorySpec::new(args.phi_bar, args.k0, 1.0)?;
    let sample = match Design::parse(&args.design) {
        Some(Design::ShortMemory) => {
            simulate::simulate_short_memory(&ar, args.n, args.lags, args.warmup, args.seed)?
        }
        Some(Design::LongMemory) => {
            let spec = ArfimaSpec::new(
                ar,
                simulate::default_ma_coeffs(),
                args.frac_d,
                simulate::DEFAULT_FRAC_TRUNCATION,
            )?;
            simulate::simulate_arfima(&spec, args.n, args.lags, args.warmup, args.seed)?
        }
        None => {
            return Err(Error::Usage { key: "design".into(), reason: format!("unknown design {:?}", args.design) })
        }
    };
    write_output(args.out.as_ref(), &sample.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn fit_cmd(args: FitArgs) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&args.input)?;
    let mut sample = SeriesSample::from_csv(&text)?;
    if let Some(k) = args.lags {
        sample = sample.relagged(k)?;
    }
    let data = estimate::build_design(&sample)?;
    let w = WeightSequence::with_exponent(args.weight_exponent, sample.lags())?;
    let mut out = String::new();
    let fit = match args.radius {
        Some(radius) => ConstrainedSolver::new(&data, &w)?.solve(radius, DEFAULT_TOL)?,
        None => {
            let sel = estimate::select_b_default(&data, &w)?;
            out.push_str("# B grid: B,criterion\n");
            for (b, crit) in &sel.grid {
                out.push_str(&format!("{b},{crit}\n"));
            }
            out.push_str(&format!("B = {}\n", sel.chosen_parameter()));
            sel.chosen
        }
    };
    out.push_str(&format!(
        "n = {}\nK = {}\ntau = {}\nbinding = {}\ndf = {}\nresid_var = {}\nrkhs_norm = {}\n",
        fit.n,
        fit.order(),
        fit.tau,
        fit.binding,
        fit.df,
        fit.resid_var,
        fit.rkhs_norm_value
    ));
    out.push_str("# coefficients: k,b_k\n");
    for (k, b) in fit.coeffs.as_slice().iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, b));
    }
    write_output(None, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Fit(a) => fit_cmd(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
