//! The `spectra` command line: run, compare, sweep and list.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mechanisms::{run_with, ActivityPhase, IncrementSchedule, MechanismConfig, OrderingPolicy};
use crate::metrics::{collusion_viability, score, MetricsReport, Verdict};
use crate::model::{AuctionOutcome, MechanismKind, Money, MINOR_PER_MAJOR};
use crate::scenarios::{build_scenario, catalog, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LOAD: i32 = 3;
pub const EXIT_ENGINE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spectra", version, about = "Deterministic spectrum auction simulation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write outcome, metrics, summary and trace.
    Run(RunArgs),
    /// Run one scenario under several mechanisms with the same seed.
    Compare(CompareArgs),
    /// Run one scenario over a grid of one parameter.
    Sweep(SweepArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Increment,
    Tsf,
    ActivityFraction,
    CreditFraction,
}

/// Settings shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Catalog name or path to a scenario JSON document.
    #[arg(long)]
    pub scenario: String,
    /// Seed for tie-breaks and orderings; defaults to the scenario's seed.
    #[arg(long, env = "SPECTRA_SEED")]
    pub seed: Option<u64>,
    /// Absolute bid increment in major money units.
    #[arg(long)]
    pub inc: Option<f64>,
    /// Threshold saturation factor for every license (HAMR).
    #[arg(long)]
    pub tsf: Option<u32>,
    /// Single-phase activity requirement in (0, 1].
    #[arg(long)]
    pub activity: Option<f64>,
    /// Bidder credit applied to designated bidders, in [0, 1).
    #[arg(long)]
    pub credit: Option<f64>,
    /// Print progress to stderr.
    #[arg(short, long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Mechanism override (FPSB, VICKREY, SEQ_AMR, SAMR, HAMR).
    #[arg(long)]
    pub mechanism: Option<MechanismKind>,
    /// Output directory.
    #[arg(long, default_value = "spectra-out")]
    pub out: PathBuf,
    /// Artifact formats to write.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Json, Format::Csv])]
    pub format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Mechanisms to compare, comma separated.
    #[arg(long = "mechanism", value_delimiter = ',', num_args = 0..)]
    pub mechanisms: Vec<MechanismKind>,
    /// Also write compare.csv into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub mechanism: Option<MechanismKind>,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Grid values, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<f64>,
    /// Also write sweep.csv into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = String::new();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, &mut stdout),
        Command::Compare(a) => cmd_compare(&a, &mut stdout),
        Command::Sweep(a) => cmd_sweep(&a, &mut stdout),
        Command::List => {
            for e in catalog() {
                let _ = writeln!(stdout, "{:<30} {}", e.name, e.summary);
            }
            Ok(())
        }
    };
    print!("{stdout}");
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Load(e)) => {
            eprintln!("error: {e}");
            EXIT_LOAD
        }
        Err(CliError::Engine(e)) => {
            eprintln!("error: {e}");
            EXIT_ENGINE
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Load(Error),
    Engine(Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn engine<T>(r: Result<T>) -> CliResult<T> {
    r.map_err(CliError::Engine)
}

/// Loads a scenario by catalog name, or from a file when the argument names one.
pub fn load_scenario_arg(source: &str) -> Result<Scenario> {
    let path = Path::new(source);
    if path.is_file() {
        return Scenario::load(path);
    }
    build_scenario(source)
}

fn prepare(common: &Common, mechanism: Option<MechanismKind>) -> CliResult<Scenario> {
    let mut s = load_scenario_arg(&common.scenario).map_err(CliError::Load)?;
    if let Some(kind) = mechanism {
        set_mechanism(&mut s, kind);
    }
    if let Some(seed) = common.seed {
        s.seed = seed;
        s.mechanism.tie_break_seed = None;
    }
    if let Some(inc) = common.inc {
        set_increment(&mut s, inc)?;
    }
    if let Some(tsf) = common.tsf {
        set_tsf(&mut s, tsf as f64)?;
    }
    if let Some(f) = common.activity {
        set_activity(&mut s, f)?;
    }
    if let Some(c) = common.credit {
        set_credit(&mut s, c)?;
    }
    if s.mechanism.kind == MechanismKind::Hamr {
        let index = s.license_index();
        s.mechanism.fill_default_tsf(&index);
    }
    s.validate().map_err(CliError::Load)?;
    if common.verbose {
        eprintln!(
            "scenario {} ({} licenses, {} bidders), mechanism {}, seed {}",
            s.name,
            s.licenses.len(),
            s.bidders.len(),
            s.mechanism.kind,
            s.mechanism.tie_break_seed.unwrap_or(s.seed)
        );
    }
    Ok(s)
}

fn set_mechanism(s: &mut Scenario, kind: MechanismKind) {
    s.mechanism.kind = kind;
    if kind == MechanismKind::SeqAmr && s.mechanism.ordering_policy == Some(OrderingPolicy::RandomPerCycle) {
        s.mechanism.ordering_policy = None;
    }
}

fn set_increment(s: &mut Scenario, major: f64) -> CliResult<()> {
    if !(major > 0.0 && major.is_finite()) {
        return Err(CliError::Usage(format!("increment must be positive, got {major}")));
    }
    let minor = (major * MINOR_PER_MAJOR as f64).round() as i64;
    s.mechanism.increment_schedule = IncrementSchedule::Absolute {
        amount: Money::from_minor(minor.max(1)),
    };
    Ok(())
}

fn set_tsf(s: &mut Scenario, value: f64) -> CliResult<()> {
    if !(value >= 1.0 && value.fract() == 0.0) {
        return Err(CliError::Usage(format!("tsf must be a positive integer, got {value}")));
    }
    for l in &s.licenses {
        s.mechanism.tsf.insert(l.id.clone(), value as u32);
    }
    Ok(())
}

fn set_activity(s: &mut Scenario, fraction: f64) -> CliResult<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::Usage(format!("activity fraction must lie in (0, 1], got {fraction}")));
    }
    s.mechanism.activity_phases = vec![ActivityPhase {
        round_threshold: 1,
        required_fraction: fraction,
    }];
    Ok(())
}

fn set_credit(s: &mut Scenario, credit: f64) -> CliResult<()> {
    if !(0.0..1.0).contains(&credit) {
        return Err(CliError::Usage(format!("credit must lie in [0, 1), got {credit}")));
    }
    let mut any = false;
    for b in s.bidders.iter_mut().filter(|b| b.designated) {
        b.credit_fraction = credit;
        any = true;
    }
    if !any {
        eprintln!("warning: scenario {} has no designated bidders; --credit has no effect", s.name);
    }
    Ok(())
}

/// One line per license: winner, gross price, rounds open, final saturation.
pub fn summary_csv(outcome: &AuctionOutcome) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["license", "winner", "gross_price", "rounds_open", "final_sf"])?;
    let final_record = outcome.history.last();
    for (l, winner) in &outcome.allocation {
        let sf = final_record
            .and_then(|r| r.licenses.get(l))
            .and_then(|r| r.saturation_factor)
            .map(|v| v.to_string())
            .unwrap_or_default();
        w.write_record([
            l.to_string(),
            winner.as_ref().map(|w| w.to_string()).unwrap_or_default(),
            outcome.gross_prices[l].map(|p| p.to_string()).unwrap_or_default(),
            outcome.rounds_open.get(l).copied().unwrap_or(0).to_string(),
            sf,
        ])?;
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Round-by-round human-readable trace.
pub fn trace_text(scenario: &Scenario, outcome: &AuctionOutcome) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "scenario {}  mechanism {}  seed {}",
        scenario.name, outcome.mechanism, outcome.seed
    );
    let hamr = outcome.mechanism == MechanismKind::Hamr;
    for r in &outcome.history {
        let head = if hamr {
            format!("cycle {}", r.cycle_index)
        } else if let Some(f) = &r.focus_license {
            format!("round {} [{}]", r.round_index, f)
        } else {
            format!("round {}", r.round_index)
        };
        let mut parts = Vec::new();
        for (l, lr) in &r.licenses {
            let mut p = format!("{l}=");
            match lr.standing_high_bid {
                Some(b) => p.push_str(&b.to_string()),
                None => p.push('-'),
            }
            if let Some(who) = &lr.standing_high_bidder {
                let _ = write!(p, " ({who}{})", if lr.tied { ", tied" } else { "" });
            } else if lr.tied {
                p.push_str(" (tied)");
            }
            let _ = write!(p, " new {}", lr.new_bid_count);
            if let Some(sf) = lr.saturation_factor {
                let tsf = scenario.mechanism.tsf_for(l);
                let _ = write!(p, " sf {sf}/{tsf}");
            }
            if !lr.open {
                p.push_str(" closed");
            }
            parts.push(p);
        }
        let _ = writeln!(t, "{head}: {}", parts.join(" | "));
        for (b, br) in &r.bidders {
            let _ = writeln!(
                t,
                "    {b}: eligibility {:.2} active {:.2}{}",
                br.eligibility_units,
                br.active_units,
                if br.activity_satisfied { "" } else { " (below requirement)" }
            );
        }
    }
    for tb in &outcome.tie_breaks {
        let names: Vec<&str> = tb.candidates.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(
            t,
            "tie on {} at {} in round {} among [{}] -> {}",
            tb.license_id,
            tb.amount,
            tb.round_index,
            names.join(", "),
            tb.winner
        );
    }
    for rb in &outcome.rejected_bids {
        let _ = writeln!(
            t,
            "rejected: round {} {} bid {} on {}: {}",
            rb.round_index, rb.bidder_id, rb.amount, rb.license_id, rb.reason
        );
    }
    for c in &outcome.closings {
        let _ = writeln!(
            t,
            "closed {} at cycle {} position {} -> {} {}",
            c.license_id,
            c.cycle_index,
            c.position,
            c.winner.as_ref().map_or("unsold", |w| w.as_str()),
            c.price.map_or(String::new(), |p| p.to_string())
        );
    }
    for (l, w) in &outcome.allocation {
        let _ = writeln!(
            t,
            "result {l}: {} {}",
            w.as_ref().map_or("unsold", |w| w.as_str()),
            outcome.gross_prices[l].map_or(String::new(), |p| p.to_string())
        );
    }
    t
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Write via a temporary file and rename, so readers never see half a file.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs, stdout: &mut String) -> CliResult<()> {
    let scenario = prepare(&args.common, args.mechanism)?;
    let outcome = engine(run_with(&scenario, &scenario.mechanism))?;
    let metrics = score(&outcome, &scenario);
    engine(std::fs::create_dir_all(&args.out).map_err(Error::from))?;
    if args.format.contains(&Format::Json) {
        engine(write_atomic(&args.out, "outcome.json", &engine(json(&outcome))?))?;
        engine(write_atomic(&args.out, "metrics.json", &engine(json(&metrics))?))?;
    }
    if args.format.contains(&Format::Csv) {
        engine(write_atomic(&args.out, "summary.csv", &engine(summary_csv(&outcome))?))?;
    }
    engine(write_atomic(&args.out, "trace.txt", &trace_text(&scenario, &outcome)))?;

    let _ = writeln!(stdout, "scenario {}  mechanism {}  seed {}", scenario.name, outcome.mechanism, outcome.seed);
    for (l, w) in &outcome.allocation {
        let _ = writeln!(
            stdout,
            "  {l}: {} {}",
            w.as_ref().map_or("unsold", |w| w.as_str()),
            outcome.gross_prices[l].map_or(String::new(), |p| p.to_string())
        );
    }
    let _ = writeln!(
        stdout,
        "  revenue {}  efficiency {}  rounds {}  raise rounds {}",
        metrics.revenue,
        fmt_efficiency(&metrics),
        metrics.rounds,
        metrics.raise_rounds
    );
    if let Some(tb) = outcome.tie_breaks.last() {
        let _ = writeln!(stdout, "  last tie-break: {} at {} -> {}", tb.license_id, tb.amount, tb.winner);
    }
    Ok(())
}

fn fmt_efficiency(m: &MetricsReport) -> String {
    m.efficiency.map_or("n/a".to_owned(), |e| format!("{e:.4}"))
}

fn verdict_for(scenario: &Scenario, config: &MechanismConfig) -> CliResult<Option<Verdict>> {
    match scenario.cartel() {
        Some(cartel) => Ok(Some(engine(collusion_viability(scenario, cartel, config))?.verdict)),
        None => Ok(None),
    }
}

pub fn cmd_compare(args: &CompareArgs, stdout: &mut String) -> CliResult<()> {
    if args.mechanisms.is_empty() {
        return Err(CliError::Usage("compare needs at least one --mechanism".into()));
    }
    let base = prepare(&args.common, None)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["mechanism", "revenue", "efficiency", "rounds", "collusion"];
    engine(w.write_record(header).map_err(Error::from))?;
    let _ = writeln!(stdout, "{:<10} {:>12} {:>10} {:>8} {:>12}", header[0], header[1], header[2], header[3], header[4]);
    for &kind in &args.mechanisms {
        let mut s = base.clone();
        set_mechanism(&mut s, kind);
        if kind == MechanismKind::Hamr {
            let index = s.license_index();
            s.mechanism.fill_default_tsf(&index);
        }
        s.validate().map_err(CliError::Load)?;
        let outcome = engine(run_with(&s, &s.mechanism))?;
        let m = score(&outcome, &s);
        let verdict = verdict_for(&s, &s.mechanism)?.map_or("n/a".to_owned(), |v| v.to_string());
        let row = [
            kind.to_string(),
            m.revenue.to_string(),
            fmt_efficiency(&m),
            m.rounds.to_string(),
            verdict,
        ];
        let _ = writeln!(stdout, "{:<10} {:>12} {:>10} {:>8} {:>12}", row[0], row[1], row[2], row[3], row[4]);
        engine(w.write_record(&row).map_err(Error::from))?;
        if args.common.verbose {
            for (l, win) in &outcome.allocation {
                eprintln!(
                    "  {kind} {l}: {} {}",
                    win.as_ref().map_or("unsold", |x| x.as_str()),
                    outcome.gross_prices[l].map_or(String::new(), |p| p.to_string())
                );
            }
        }
    }
    if let Some(out) = &args.out {
        engine(std::fs::create_dir_all(out).map_err(Error::from))?;
        engine(write_atomic(out, "compare.csv", &engine(csv_string(w))?))?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, stdout: &mut String) -> CliResult<()> {
    if args.values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value in --values".into()));
    }
    let base = prepare(&args.common, args.mechanism)?;
    let with_verdict = base.cartel().is_some();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["parameter", "revenue", "rounds", "efficiency"];
    if with_verdict {
        header.push("collusion");
    }
    engine(w.write_record(&header).map_err(Error::from))?;
    for &v in &args.values {
        let mut s = base.clone();
        match args.axis {
            Axis::Increment => set_increment(&mut s, v)?,
            Axis::Tsf => set_tsf(&mut s, v)?,
            Axis::ActivityFraction => set_activity(&mut s, v)?,
            Axis::CreditFraction => set_credit(&mut s, v)?,
        }
        s.validate().map_err(CliError::Load)?;
        let outcome = engine(run_with(&s, &s.mechanism))?;
        let m = score(&outcome, &s);
        let mut row = vec![v.to_string(), m.revenue.to_string(), m.rounds.to_string(), fmt_efficiency(&m)];
        if with_verdict {
            row.push(verdict_for(&s, &s.mechanism)?.map_or("n/a".to_owned(), |v| v.to_string()));
        }
        engine(w.write_record(&row).map_err(Error::from))?;
        if args.common.verbose {
            eprintln!("{:?} = {v}: rounds {}", args.axis, m.rounds);
        }
    }
    let text = engine(csv_string(w))?;
    stdout.push_str(&text);
    if let Some(out) = &args.out {
        engine(std::fs::create_dir_all(out).map_err(Error::from))?;
        engine(write_atomic(out, "sweep.csv", &text))?;
    }
    Ok(())
}
