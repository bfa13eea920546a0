//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trc_core::rates;
use trc_core::sim::{Phase, Simulation, SweepRow};
use trc_core::ChannelParams;

use crate::config::{AlphaSpec, ChainSource, RunConfig, DEFAULT_MOMENT_SAMPLES};
use crate::error::{CliError, CliResult};
use crate::harness::Harness;
use crate::output::{self, EnvelopeReport, ExponentRow, LatticeReport, RatesReport};

#[derive(Debug, Parser)]
#[command(name = "trc", version, about = "Nested lattice coding for the Gaussian two-way relay channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a lattice chain and report volumes, coset counts, rates and second moments.
    Lattice(LatticeArgs),
    /// Cut-set and achievable rate regions with their gap.
    Rates(RatesArgs),
    /// Poltyrev exponent table and the uplink error envelope.
    Exponent(ExponentArgs),
    /// Run one Monte Carlo campaign and write a CSV row.
    Simulate(SimArgs),
    /// Run a grid of campaigns and write one CSV row per point.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    UplinkOnly,
    EndToEnd,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChainArgs {
    /// Chain description JSON file (alternative to --base and friends).
    #[arg(long, value_name = "PATH")]
    pub chain: Option<PathBuf>,
    /// Base lattice: z, a2, d4 or e8.
    #[arg(long)]
    pub base: Option<String>,
    /// Dimension (defaults to the base lattice's own dimension, 1 for z).
    #[arg(long)]
    pub n: Option<usize>,
    /// Coarse-over-mid nesting ratio.
    #[arg(long)]
    pub k1: Option<u32>,
    /// Mid-over-fine nesting ratio.
    #[arg(long)]
    pub k2: Option<u32>,
    /// Fine lattice scale factor.
    #[arg(long)]
    pub scale: Option<f64>,
}

impl ChainArgs {
    fn layer(&self) -> RunConfig {
        RunConfig {
            chain: self.chain.clone().map(ChainSource::Path),
            base: self.base.clone(),
            n: self.n,
            k1: self.k1,
            k2: self.k2,
            scale: self.scale,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChannelArgs {
    /// Node 1 transmit power.
    #[arg(long)]
    pub p1: Option<f64>,
    /// Node 2 transmit power.
    #[arg(long)]
    pub p2: Option<f64>,
    /// Relay transmit power.
    #[arg(long)]
    pub pr: Option<f64>,
    /// Relay noise variance.
    #[arg(long, conflicts_with = "nr_db")]
    pub nr: Option<f64>,
    /// Relay noise variance in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub nr_db: Option<f64>,
    /// Node 1 noise variance.
    #[arg(long, conflicts_with = "n1_db")]
    pub n1: Option<f64>,
    /// Node 1 noise variance in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub n1_db: Option<f64>,
    /// Node 2 noise variance.
    #[arg(long, conflicts_with = "n2_db")]
    pub n2: Option<f64>,
    /// Node 2 noise variance in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub n2_db: Option<f64>,
}

impl ChannelArgs {
    fn layer(&self) -> RunConfig {
        RunConfig {
            p1: self.p1,
            p2: self.p2,
            pr: self.pr,
            nr: self.nr,
            nr_db: self.nr_db,
            n1: self.n1,
            n1_db: self.n1_db,
            n2: self.n2,
            n2_db: self.n2_db,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LatticeArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Monte Carlo samples for second moments without a closed form.
    #[arg(long, default_value_t = DEFAULT_MOMENT_SAMPLES)]
    pub moment_samples: u64,
    /// Seed for the second-moment estimate.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the chain description JSON here.
    #[arg(long, value_name = "PATH")]
    pub save: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Shorthand for --format json.
    #[arg(long, conflicts_with = "format")]
    pub json: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Sweep the relay noise variance over a comma-separated list (CSV rows).
    #[arg(long, value_delimiter = ',', conflicts_with = "nr_db_list", allow_hyphen_values = true)]
    pub nr_list: Option<Vec<f64>>,
    /// Sweep the relay noise variance in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nr_db_list: Option<Vec<f64>>,
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExponentArgs {
    #[arg(long, default_value_t = 1.0)]
    pub mu_min: f64,
    #[arg(long, default_value_t = 8.0)]
    pub mu_max: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 29)]
    pub points: usize,
    /// Block length; adds the envelope exp(-n E_P(mu)) to the table.
    #[arg(long)]
    pub n: Option<usize>,
    /// Target rate of node 1 in bits/dim; reports the envelope at this rate instead of a table.
    #[arg(long, requires = "n")]
    pub rate: Option<f64>,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Master seed (required here or in the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// `mmse` or a fixed scaling in [0, 1].
    #[arg(long)]
    pub alpha: Option<String>,
    /// Relay codebook power backoff.
    #[arg(long)]
    pub backoff: Option<f64>,
    /// Largest coset set that may be enumerated.
    #[arg(long)]
    pub enumeration_cap: Option<u64>,
    /// Monte Carlo samples used for power matching of non-cubic bases.
    #[arg(long)]
    pub moment_samples: Option<u64>,
    /// Worker threads (0 = all cores). Never changes the results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV (standard output if omitted).
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write a gnuplot script next to the CSV (needs --out).
    #[arg(long, requires = "out")]
    pub plot: bool,
    /// Record wall-clock time in the wallMs column (otherwise 0).
    #[arg(long)]
    pub timing: bool,
    /// Write per-trial records to this CSV file.
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
}

impl SimArgs {
    fn config(&self) -> CliResult<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let alpha = self.alpha.as_deref().map(AlphaSpec::parse).transpose()?;
        let flags = RunConfig {
            seed: self.seed,
            trials: self.trials,
            mode: self.mode.map(|m| match m {
                Mode::UplinkOnly => Phase::UplinkOnly,
                Mode::EndToEnd => Phase::EndToEnd,
            }),
            alpha,
            backoff: self.backoff,
            enumeration_cap: self.enumeration_cap,
            moment_samples: self.moment_samples,
            ..Default::default()
        };
        Ok(file.merge(self.chain.layer()).merge(self.channel.layer()).merge(flags))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Grid over the relay noise variance (overrides any config grid).
    #[arg(long, value_delimiter = ',', conflicts_with = "nr_db_list", allow_hyphen_values = true)]
    pub nr_list: Option<Vec<f64>>,
    /// Grid over the relay noise variance in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nr_db_list: Option<Vec<f64>>,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Lattice(a) => lattice(a),
        Command::Rates(a) => rates_cmd(a),
        Command::Exponent(a) => exponent(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::runtime(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn lattice(a: LatticeArgs) -> CliResult<()> {
    let chain = a.chain.layer().explicit_chain()?;
    let report = LatticeReport::compute(&chain, a.moment_samples, a.seed)?;
    if let Some(p) = &a.save {
        write_json(Some(p), chain.description())?;
    }
    write_json(a.out.as_deref(), &report)
}

fn rates_cmd(a: RatesArgs) -> CliResult<()> {
    let base = a.channel.layer();
    let list: Option<Vec<RunConfig>> = match (&a.nr_list, &a.nr_db_list) {
        (Some(v), _) => Some(v.iter().map(|&x| RunConfig { nr: Some(x), ..Default::default() }).collect()),
        (_, Some(v)) => Some(v.iter().map(|&x| RunConfig { nr_db: Some(x), ..Default::default() }).collect()),
        _ => None,
    };
    let format = if a.json { Format::Json } else { a.format.unwrap_or(if list.is_some() { Format::Csv } else { Format::Json }) };
    match list {
        None => {
            let p = base.params()?;
            let r = RatesReport::compute(&p)?;
            match format {
                Format::Json => write_json(a.out.as_deref(), &r),
                Format::Csv => output::write_rates_csv(sink(a.out.as_deref())?, &[(p, r)]),
            }
        }
        Some(points) => {
            let mut rows = Vec::with_capacity(points.len());
            for pt in points {
                let p = base.clone().merge(pt).params()?;
                rows.push((p, RatesReport::compute(&p)?));
            }
            match format {
                Format::Csv => output::write_rates_csv(sink(a.out.as_deref())?, &rows),
                Format::Json => {
                    let v: Vec<&RatesReport> = rows.iter().map(|(_, r)| r).collect();
                    write_json(a.out.as_deref(), &v)
                }
            }
        }
    }
}

fn exponent(a: ExponentArgs) -> CliResult<()> {
    if let (Some(rate), Some(n)) = (a.rate, a.n) {
        let p = a.channel.layer().params()?;
        let env = EnvelopeReport::from(rates::uplink_error_bound(n, rate, &p)?);
        return match a.format {
            Format::Json => write_json(a.out.as_deref(), &env),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
                let rec = [
                    env.n.to_string(),
                    env.rate_target.to_string(),
                    env.threshold.to_string(),
                    env.mu.to_string(),
                    env.exponent.to_string(),
                    env.bound.to_string(),
                ];
                w.write_record(["n", "rateTarget", "threshold", "mu", "exponent", "bound"])
                    .and_then(|_| w.write_record(rec))
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                w.flush()?;
                Ok(())
            }
        };
    }
    if !(a.mu_min >= 1.0) || !(a.mu_max >= a.mu_min) || a.points < 2 && a.mu_max != a.mu_min || a.points == 0 {
        return Err(CliError::validation("need 1 <= --mu-min <= --mu-max and --points >= 2"));
    }
    let step = if a.points > 1 { (a.mu_max - a.mu_min) / (a.points - 1) as f64 } else { 0.0 };
    let rows = (0..a.points)
        .map(|i| {
            let mu = if i + 1 == a.points { a.mu_max } else { a.mu_min + step * i as f64 };
            let e = rates::poltyrev_exponent(mu)?;
            Ok(ExponentRow { mu, exponent: e, bound: a.n.map(|n| (-(n as f64) * e).exp()) })
        })
        .collect::<trc_core::Result<Vec<_>>>()?;
    match a.format {
        Format::Csv => output::write_exponent_csv(sink(a.out.as_deref())?, &rows),
        Format::Json => write_json(a.out.as_deref(), &rows),
    }
}

fn plot_sidecar(out: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let csv_name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trc".into());
    let script = output::gnuplot_script(&csv_name, &stem, rows);
    std::fs::write(out.with_extension("gp"), script)?;
    Ok(())
}

fn simulate(a: SimArgs) -> CliResult<()> {
    let cfg = a.config()?;
    if cfg.grid.as_ref().is_some_and(|g| !g.is_empty()) {
        return Err(CliError::validation("config has a grid; use `trc sweep` for multi-point runs"));
    }
    let start = Instant::now();
    let sim = Simulation::new(cfg.sim_config()?)?;
    let harness = Harness::new(a.workers, a.timing)?;
    let counts = harness
        .run_trials(&sim)
        .map_err(|e| CliError::runtime(format!("simulation failed: {e}")))?;
    let wall_ms = if a.timing { start.elapsed().as_millis() as u64 } else { 0 };
    let rows = [sim.row(&counts, wall_ms)];
    if let Some(t) = &a.transcript {
        let recs = harness
            .transcript(&sim)
            .map_err(|e| CliError::runtime(format!("simulation failed: {e}")))?;
        output::write_transcript(sink(Some(t))?, &recs)?;
    }
    output::write_sweep(sink(a.out.as_deref())?, &rows)?;
    if a.plot {
        if let Some(out) = &a.out {
            plot_sidecar(out, &rows)?;
        }
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    if a.sim.transcript.is_some() {
        return Err(CliError::validation("--transcript is only available for `trc simulate`"));
    }
    let mut cfg = a.sim.config()?;
    let list: Option<Vec<RunConfig>> = match (&a.nr_list, &a.nr_db_list) {
        (Some(v), _) => Some(v.iter().map(|&x| RunConfig { nr: Some(x), ..Default::default() }).collect()),
        (_, Some(v)) => Some(v.iter().map(|&x| RunConfig { nr_db: Some(x), ..Default::default() }).collect()),
        _ => None,
    };
    if let Some(l) = list {
        cfg.grid = Some(l);
    }
    let points = cfg.grid_points();
    if points.is_empty() {
        return Err(CliError::validation("sweep grid is empty"));
    }
    let harness = Harness::new(a.sim.workers, a.sim.timing)?;
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        // Seed and other validation failures abort; per-row failures are recorded.
        let sc = match p.sim_config() {
            Ok(sc) => sc,
            Err(e) if p.seed.is_none() => return Err(e),
            Err(e) => {
                eprintln!("warning: sweep point skipped: {e}");
                rows.push(failed_row(p, &e));
                continue;
            }
        };
        rows.push(harness.run_point(&sc));
    }
    output::write_sweep(sink(a.sim.out.as_deref())?, &rows)?;
    if a.sim.plot {
        if let Some(out) = &a.sim.out {
            plot_sidecar(out, &rows)?;
        }
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::runtime(format!("{failed} of {} sweep points failed; see the error column", rows.len())));
    }
    Ok(())
}

fn failed_row(p: &RunConfig, e: &CliError) -> SweepRow {
    let nan = f64::NAN;
    let params = p.params().unwrap_or(ChannelParams {
        p1: nan,
        p2: nan,
        pr: nan,
        sigma_r2: nan,
        sigma1_2: nan,
        sigma2_2: nan,
    });
    SweepRow::failure(p.mode.unwrap_or(Phase::UplinkOnly), &params, p.seed.unwrap_or(0), e.message.clone())
}
