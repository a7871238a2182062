//! The `polarq` command-line front end.
//!
//! Every command renders its whole output in memory before touching the
//! output file, so a failed run leaves no partial file behind.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, curve_csv, CurveFamily};
use crate::channels::{self, ChannelModel};
use crate::codec::PolarCode;
use crate::density::{self, DEFAULT_WORK_CEILING};
use crate::format::{csv_field, sig10};
use crate::quantizer::{Quantizer, QuantizerSpec};
use crate::sim::{self, DecoderKind};

#[derive(Debug, Parser)]
#[command(name = "polarq", version, about = "Polar codes under quantized SC decoding")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound sequences L_n, U_n of the three-level decoder's rate.
    Bounds(BoundsArgs),
    /// Smallest n with U_n - L_n <= tol, and its bracket.
    Estimate(EstimateArgs),
    /// Rate bracket against capacity for a channel family.
    Curve(CurveArgs),
    /// Density-evolution code construction.
    Construct(ConstructArgs),
    /// Block error rate of a constructed code; appends one row.
    Simulate(SimulateArgs),
    /// Achievable rate against quantizer size.
    SweepQ(SweepArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub channel: ChannelModel,
    /// Largest exponent.
    #[arg(long)]
    pub n: u32,
    /// Estimate L_n, U_n at this n from sampled paths instead.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub channel: ChannelModel,
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    /// Largest exponent tried.
    #[arg(long, default_value_t = 20)]
    pub n: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// bec, bsc, bawgn or universal.
    #[arg(long)]
    pub family: CurveFamily,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, default_value_t = 20)]
    pub n: u32,
    /// Erasure grid size of the universal bound.
    #[arg(long, default_value_t = 200)]
    pub e_grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub channel: ChannelModel,
    #[arg(long)]
    pub quantizer: Quantizer,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = DEFAULT_WORK_CEILING)]
    pub work_ceiling: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Code file written by `construct`.
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long)]
    pub channel: ChannelModel,
    /// exact, erasure, or a quantizer spec.
    #[arg(long)]
    pub decoder: DecoderKind,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub channel: ChannelModel,
    #[arg(long)]
    pub n: u32,
    /// Largest allowed sum of the chosen indices' error probabilities.
    #[arg(long, default_value_t = 1e-3)]
    pub target_sum: f64,
    /// Quantizer sizes |Q|, each with Δ = 2M/(|Q| − 1).
    #[arg(long, value_delimiter = ',', default_value = "3,5,9,17,33")]
    pub sizes: Vec<usize>,
    /// Saturation level M of the swept quantizers.
    #[arg(long, default_value_t = 8.0)]
    pub m_sat: f64,
    /// Size of the fine reference quantizer.
    #[arg(long, default_value_t = 2001)]
    pub reference_levels: usize,
    /// Saturation level of the reference quantizer.
    #[arg(long, default_value_t = 30.0)]
    pub reference_m: f64,
    #[arg(long, default_value_t = DEFAULT_WORK_CEILING)]
    pub work_ceiling: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parsed code file.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeFile {
    pub n: u32,
    pub channel: String,
    pub quantizer: String,
    pub info_set: Vec<usize>,
}

const CODE_MAGIC: &str = "polarq-code v1";

impl CodeFile {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{CODE_MAGIC} n={} k={} channel={} quantizer={}\n",
            self.n,
            self.info_set.len(),
            self.channel,
            self.quantizer
        );
        for i in &self.info_set {
            out.push_str(&format!("{i}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| anyhow!("empty code file"))?;
        let fields = header
            .strip_prefix(CODE_MAGIC)
            .ok_or_else(|| anyhow!("code file must start with '{CODE_MAGIC}'"))?;
        let (mut n, mut k, mut channel, mut quantizer) = (None, None, None, None);
        for field in fields.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| anyhow!("malformed header field '{field}'"))?;
            match key {
                "n" => n = Some(value.parse::<u32>().context("header n")?),
                "k" => k = Some(value.parse::<usize>().context("header k")?),
                "channel" => channel = Some(value.to_string()),
                "quantizer" => quantizer = Some(value.to_string()),
                other => bail!("unknown header field '{other}'"),
            }
        }
        let (n, k) = (n.ok_or_else(|| anyhow!("header lacks n"))?, k.ok_or_else(|| anyhow!("header lacks k"))?);
        let info_set = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<usize>().with_context(|| format!("bad index '{l}'")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        if info_set.len() != k {
            bail!("header says k={k} but {} indices follow", info_set.len());
        }
        if info_set.windows(2).any(|w| w[0] >= w[1]) {
            bail!("information indices must be strictly ascending");
        }
        Ok(CodeFile {
            n,
            channel: channel.unwrap_or_default(),
            quantizer: quantizer.unwrap_or_default(),
            info_set,
        })
    }

    pub fn code(&self) -> anyhow::Result<PolarCode> {
        Ok(PolarCode::new(self.n, self.info_set.iter().copied())?)
    }
}

pub fn cmd_bounds(args: &BoundsArgs) -> anyhow::Result<String> {
    let d0 = channels::triple_of(&args.channel)?;
    match args.samples {
        None => Ok(bounds::bounds_series(&d0, args.n)
            .map_err(|e| anyhow!("{e}; use --samples for a Monte Carlo estimate"))?
            .to_csv()),
        Some(samples) => {
            let mc = bounds::bounds_series_mc(&d0, args.n, samples, args.seed)?;
            Ok(format!(
                "n,L_n,U_n,L_radius,U_radius,samples,seed\n{},{},{},{},{},{},{}\n",
                args.n,
                sig10(mc.lower),
                sig10(mc.upper),
                sig10(mc.lower_radius),
                sig10(mc.upper_radius),
                samples,
                args.seed
            ))
        }
    }
}

pub fn cmd_estimate(args: &EstimateArgs) -> anyhow::Result<String> {
    let d0 = channels::triple_of(&args.channel)?;
    let est = bounds::estimate_capacity_q(&d0, args.tol, args.n)?;
    Ok(format!(
        "lower,upper,n_used,converged\n{},{},{},{}\n",
        sig10(est.lower),
        sig10(est.upper),
        est.n_used,
        est.converged
    ))
}

pub fn cmd_curve(args: &CurveArgs) -> anyhow::Result<String> {
    Ok(curve_csv(&bounds::curve(args.family, args.points, args.n, args.e_grid)?))
}

fn dimension(n: u32, rate: f64) -> anyhow::Result<usize> {
    let len = 2f64.powi(n as i32);
    let k = rate * len;
    if !(0.0..=1.0).contains(&rate) || (k - k.round()).abs() > 1e-9 {
        bail!("rate {rate} times 2^{n} is not an integer in [0, 2^{n}]");
    }
    Ok(k.round() as usize)
}

pub fn cmd_construct(args: &ConstructArgs) -> anyhow::Result<String> {
    if args.n > crate::codec::MAX_EXPONENT {
        bail!("exponent {} exceeds {}", args.n, crate::codec::MAX_EXPONENT);
    }
    let k = dimension(args.n, args.rate)?;
    let d0 = density::leaf_density(&args.channel, &args.quantizer)?;
    let family = density::synthesize(&d0, args.n, &args.quantizer, args.work_ceiling)?;
    let info_set = density::choose_info_set(&family.error_probs(), k)?;
    Ok(CodeFile {
        n: args.n,
        channel: args.channel.to_string(),
        quantizer: args.quantizer.to_string(),
        info_set,
    }
    .to_text())
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<String> {
    let text = fs::read_to_string(&args.code)
        .with_context(|| format!("reading {}", args.code.display()))?;
    let code = CodeFile::parse(&text)?.code()?;
    let report = sim::simulate_block_error(&code, &args.channel, args.decoder, args.trials, args.seed)?;
    Ok(report.csv_row() + "\n")
}

/// One row of the alphabet-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub levels: usize,
    pub delta: f64,
    pub m_sat: f64,
    pub k: usize,
    pub rate: f64,
    pub union_bound: f64,
}

/// Largest `k` whose `k` smallest error probabilities sum to at most
/// `target`, and that sum.
pub fn largest_dimension(error_probs: &[f64], target: f64) -> (usize, f64) {
    let mut sorted = error_probs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut k, mut sum) = (0, 0.0);
    for p in sorted {
        if sum + p > target {
            break;
        }
        sum += p;
        k += 1;
    }
    (k, sum)
}

fn sweep_row(args: &SweepArgs, spec: QuantizerSpec) -> anyhow::Result<SweepRow> {
    let q = Quantizer::Uniform(spec);
    let d0 = density::leaf_density(&args.channel, &q)?;
    let family = density::synthesize(&d0, args.n, &q, args.work_ceiling)?;
    let (k, union_bound) = largest_dimension(&family.error_probs(), args.target_sum);
    Ok(SweepRow {
        levels: spec.size(),
        delta: spec.delta(),
        m_sat: spec.m_sat(),
        k,
        rate: k as f64 / family.len() as f64,
        union_bound,
    })
}

/// Sweep rows for `args.sizes`, followed by the reference quantizer's row.
pub fn sweep_rows(args: &SweepArgs) -> anyhow::Result<Vec<SweepRow>> {
    if args.sizes.is_empty() {
        bail!("no quantizer sizes given");
    }
    let mut rows = Vec::with_capacity(args.sizes.len() + 1);
    for &size in &args.sizes {
        rows.push(sweep_row(args, QuantizerSpec::with_size(size, args.m_sat)?)?);
    }
    rows.push(sweep_row(args, QuantizerSpec::with_size(args.reference_levels, args.reference_m)?)?);
    Ok(rows)
}

pub fn cmd_sweep_q(args: &SweepArgs) -> anyhow::Result<String> {
    let rows = sweep_rows(args)?;
    let capacity = channels::capacity(&args.channel)?;
    let channel = csv_field(&args.channel.to_string());
    let mut out = String::from("kind,levels,delta,m_sat,n,target_sum,k,rate,union_bound,gap_to_capacity,log2_levels,channel\n");
    let last = rows.len() - 1;
    for (j, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            if j == last { "reference" } else { "sweep" },
            r.levels,
            sig10(r.delta),
            sig10(r.m_sat),
            args.n,
            sig10(args.target_sum),
            r.k,
            sig10(r.rate),
            sig10(r.union_bound),
            sig10(capacity - r.rate),
            sig10((r.levels as f64).log2()),
            channel
        ));
    }
    Ok(out)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// Appends a row, writing the header first when the file is new or empty.
fn append_row(out: Option<&Path>, row: &str) -> anyhow::Result<()> {
    let Some(path) = out else {
        print!("{}\n{row}", sim::CSV_HEADER);
        return Ok(());
    };
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let text = if fresh { format!("{}\n{row}", sim::CSV_HEADER) } else { row.to_string() };
    file.write_all(text.as_bytes())
        .with_context(|| format!("writing {}", path.display()))
}

fn dispatch(command: &Command) -> anyhow::Result<()> {
    match command {
        Command::Bounds(a) => emit(a.out.as_deref(), &cmd_bounds(a)?),
        Command::Estimate(a) => emit(a.out.as_deref(), &cmd_estimate(a)?),
        Command::Curve(a) => emit(a.out.as_deref(), &cmd_curve(a)?),
        Command::Construct(a) => emit(a.out.as_deref(), &cmd_construct(a)?),
        Command::Simulate(a) => append_row(a.out.as_deref(), &cmd_simulate(a)?),
        Command::SweepQ(a) => emit(a.out.as_deref(), &cmd_sweep_q(a)?),
    }
}

/// Runs a parsed command line, inside a pool of `--threads` workers if set.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .context("building the worker pool")?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("polarq: {}", text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("polarq: {}", format!("{e:#}").replace('\n', " "));
            1
        }
    }
}
