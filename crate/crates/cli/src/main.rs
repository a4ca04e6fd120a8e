//! `mvfactor` command-line tool.
//!
//! Every subcommand accepts `--config file.json`; keys are the field names of
//! the corresponding configuration and any flag given on the command line
//! overrides the file. Failures print a single `error[<kind>]: <message>` line
//! on stderr and exit with status 1 (2 for usage errors).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use mvfactor::dgp::{simulate, DgpConfig};
use mvfactor::error::Error;
use mvfactor::estimation::{estimate, Estimate, LagParams, Method, Mode};
use mvfactor::evaluation::{cv_grid, run_grid, Estimator, Execution, RssNorm};
use mvfactor::io;

#[derive(Parser)]
#[command(
    name = "mvfactor",
    version,
    about = "Factor-number estimation for matrix time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a matrix factor series and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the numbers of row and column factors of a series.
    Estimate(EstimateArgs),
    /// Run Monte Carlo cells and write the hit-rate tallies as CSV.
    Montecarlo(MonteCarloArgs),
    /// Cross-validated residual criterion over candidate (r, c) pairs.
    Cv(CvArgs),
    /// Write the whiteness and ratio curves of both sides into a directory.
    Curves(EstimateArgs),
}

#[derive(Args, Default)]
struct DgpFlags {
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// AR(1) coefficient of the factors.
    #[arg(long)]
    a: Option<f64>,
    /// Row loading strength (0 strong, 1 weakest).
    #[arg(long)]
    delta: Option<f64>,
    /// Column loading strength.
    #[arg(long)]
    omega: Option<f64>,
    /// none | identity | equicorrelated[:rho]
    #[arg(long = "noise-case")]
    noise_case: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct LagFlags {
    /// Lags summed into the M-matrices.
    #[arg(long)]
    h0: Option<usize>,
    /// Lags in the whiteness statistics.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Upper end of the ratio search.
    #[arg(long = "i-max")]
    i_max: Option<usize>,
    /// Projection width of the two-step estimator.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args, Default)]
struct InputFlags {
    /// Series CSV, one row per time point with p·q values.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    dgp: DgpFlags,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    lags: LagFlags,
    #[arg(long, value_parser = ["one-step", "two-step"])]
    mode: Option<String>,
    /// Directory for curve files.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    dgp: DgpFlags,
    #[command(flatten)]
    lags: LagFlags,
    /// Restrict the estimators to one mode.
    #[arg(long, value_parser = ["one-step", "two-step"])]
    mode: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// Run replications on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputFlags,
    #[arg(long)]
    h0: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Candidate pairs as "r:c,r:c,...".
    #[arg(long)]
    candidates: Option<String>,
    /// Accumulate squared Frobenius norms.
    #[arg(long)]
    squared: bool,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Builds the JSON overlay of explicitly given flags.
#[derive(Default)]
struct Overlay(Map<String, Value>);

impl Overlay {
    fn set<T: Into<Value>>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(key.to_owned(), v.into());
        }
        self
    }

    fn path(&mut self, key: &str, value: &Option<PathBuf>) -> &mut Self {
        self.set(
            key,
            value.as_ref().map(|p| p.to_string_lossy().into_owned()),
        )
    }

    fn dgp(&mut self, f: &DgpFlags) -> &mut Self {
        self.set("p", f.p)
            .set("q", f.q)
            .set("r", f.r)
            .set("c", f.c)
            .set("n", f.n)
            .set("a", f.a)
            .set("delta", f.delta)
            .set("omega", f.omega)
            .set("noise_case", f.noise_case.clone())
            .set("seed", f.seed)
    }

    fn lags(&mut self, f: &LagFlags) -> &mut Self {
        self.set("h0", f.h0)
            .set("K", f.k)
            .set("i_max", f.i_max)
            .set("m", f.m)
    }

    fn input(&mut self, f: &InputFlags) -> &mut Self {
        self.path("input", &f.input).set("p", f.p).set("q", f.q)
    }

    fn value(&self) -> Value {
        Value::Object(self.0.clone())
    }
}

fn config_error(message: impl Into<String>) -> Error {
    Error::Config {
        field: "config",
        message: message.into(),
    }
}

fn load_base(path: &Option<PathBuf>) -> Result<Value, Error> {
    match path {
        Some(p) => io::read_json(p),
        None => Ok(Value::Object(Map::new())),
    }
}

fn resolve<T: DeserializeOwned>(base: Value, overlay: &Overlay) -> Result<T, Error> {
    let merged = io::merge_objects(base, overlay.value())?;
    serde_json::from_value(merged).map_err(|e| config_error(e.to_string()))
}

fn default_mode() -> Mode {
    Mode::TwoStep
}

fn default_folds() -> usize {
    5
}

#[derive(Deserialize)]
struct SimulateConfig {
    #[serde(flatten)]
    dgp: DgpConfig,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct EstimateConfig {
    input: PathBuf,
    p: usize,
    q: usize,
    #[serde(flatten)]
    params: LagParams,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default = "default_mode")]
    mode: Mode,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Candidates {
    Text(String),
    Pairs(Vec<(usize, usize)>),
}

impl Candidates {
    fn pairs(self) -> Result<Vec<(usize, usize)>, Error> {
        match self {
            Candidates::Pairs(p) => Ok(p),
            Candidates::Text(s) => parse_candidates(&s),
        }
    }
}

fn parse_candidates(text: &str) -> Result<Vec<(usize, usize)>, Error> {
    let bad = |item: &str| Error::Config {
        field: "candidates",
        message: format!("expected r:c pairs separated by commas, got `{item}`"),
    };
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (r, c) = item.split_once(':').ok_or_else(|| bad(item))?;
            Ok((
                r.trim().parse().map_err(|_| bad(item))?,
                c.trim().parse().map_err(|_| bad(item))?,
            ))
        })
        .collect()
}

#[derive(Deserialize)]
struct CvConfig {
    input: PathBuf,
    p: usize,
    q: usize,
    #[serde(flatten)]
    params: LagParams,
    #[serde(default = "default_folds")]
    folds: usize,
    candidates: Candidates,
    #[serde(default)]
    norm: RssNorm,
    #[serde(default)]
    output: Option<PathBuf>,
}

/// Writes to the file if given, else to stdout.
fn with_output<F>(path: &Option<PathBuf>, write: F) -> Result<(), Error>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Error>,
{
    match path {
        Some(p) => {
            let mut file = std::fs::File::create(p)?;
            write(&mut file)
        }
        None => write(&mut std::io::stdout().lock()),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut overlay = Overlay::default();
    overlay.dgp(&args.dgp).path("output", &args.output);
    let cfg: SimulateConfig = resolve(load_base(&args.config)?, &overlay)?;
    let sim = simulate(&cfg.dgp)?;
    with_output(&cfg.output, |w| io::write_series(w, &sim.series))
}

fn estimate_from(args: &EstimateArgs) -> Result<(EstimateConfig, Estimate), Error> {
    let mut overlay = Overlay::default();
    overlay
        .input(&args.input)
        .lags(&args.lags)
        .set("mode", args.mode.clone())
        .path("output", &args.output);
    let cfg: EstimateConfig = resolve(load_base(&args.config)?, &overlay)?;
    let series = io::read_series_csv(&cfg.input, cfg.p, cfg.q)?;
    let est = estimate(&series, &cfg.params, cfg.mode, cfg.m)?;
    Ok((cfg, est))
}

fn print_estimate(out: &mut dyn Write, est: &Estimate) -> Result<(), Error> {
    writeln!(
        out,
        "{:<8} {:<9} {:>5} {:>5}",
        "method", "mode", "r_hat", "c_hat"
    )?;
    for method in Method::ALL {
        let (r, c) = est.counts(method);
        writeln!(
            out,
            "{:<8} {:<9} {:>5} {:>5}",
            method.to_string(),
            est.mode.to_string(),
            r,
            c
        )?;
    }
    Ok(())
}

fn run_estimate(args: EstimateArgs) -> Result<(), Error> {
    let (cfg, est) = estimate_from(&args)?;
    print_estimate(&mut std::io::stdout().lock(), &est)?;
    if let Some(dir) = &cfg.output {
        io::write_curve_files(dir, &est)?;
    }
    Ok(())
}

fn run_curves(args: EstimateArgs) -> Result<(), Error> {
    let (cfg, est) = estimate_from(&args)?;
    let dir = cfg.output.ok_or(Error::Config {
        field: "output",
        message: "curves needs an output directory".into(),
    })?;
    let mut out = std::io::stdout().lock();
    for path in io::write_curve_files(&dir, &est)? {
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}

fn run_montecarlo(args: MonteCarloArgs) -> Result<(), Error> {
    let mut overlay = Overlay::default();
    overlay
        .dgp(&args.dgp)
        .lags(&args.lags)
        .set("replications", args.reps);
    if let Some(mode) = &args.mode {
        let mode: Mode = mode.parse()?;
        let methods: Vec<Estimator> = Method::ALL
            .iter()
            .map(|&m| Estimator::new(m, mode))
            .collect();
        overlay.set("methods", Some(serde_json::to_value(methods)?));
    }
    let cells = io::expand_cells(load_base(&args.config)?)?
        .into_iter()
        .map(|cell| io::merge_objects(cell, overlay.value()).and_then(io::mc_cell_from_value))
        .collect::<Result<Vec<_>, _>>()?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let reports = run_grid(&cells, execution)?;
    with_output(&args.output, |w| io::write_mc(w, &reports))
}

fn run_cv(args: CvArgs) -> Result<(), Error> {
    let mut overlay = Overlay::default();
    overlay
        .input(&args.input)
        .set("h0", args.h0)
        .set("folds", args.folds)
        .set("candidates", args.candidates.clone())
        .path("output", &args.output);
    if args.squared {
        overlay.set("norm", Some("squared"));
    }
    let cfg: CvConfig = resolve(load_base(&args.config)?, &overlay)?;
    let series = io::read_series_csv(&cfg.input, cfg.p, cfg.q)?;
    let candidates = cfg.candidates.pairs()?;
    let report = cv_grid(&series, &candidates, cfg.folds, &cfg.params, cfg.norm)?;
    with_output(&cfg.output, |w| io::write_cv(w, &report))
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("error[{kind}]: {}", one_line(message));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default();
            return fail("usage", first.trim_start_matches("error: "), 2);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Montecarlo(a) => run_montecarlo(a),
        Command::Cv(a) => run_cv(a),
        Command::Curves(a) => run_curves(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string(), 1),
    }
}
