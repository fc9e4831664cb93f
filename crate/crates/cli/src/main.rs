//! `aoaq`: batch analysis of redundant AOA sensor architectures.
//!
//! Subcommands: `rates` (exact / published / Monte Carlo rates for one
//! query), `sweep` (cross-product grid to CSV), `simulate` (one flight
//! or a fleet from a scenario file), `fleet` (alias for
//! `simulate --fleet`), and `reason` (consistency and odds report for a
//! case file).
//!
//! Exit codes: 0 success or consistent case, 1 consistency violations,
//! 2 usage or parse error, 3 I/O error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aoaq_core::analytics::{
    exact_rates, monte_carlo_rates, paper_formula, AoaSampler, NeutralPolicy, RateQuery,
    RateReport, RateSource,
};
use aoaq_core::flight::{load_scenario, run_fleet, run_flight};
use aoaq_core::forensic::{check_consistency, decide_threshold, CaseFile};
use aoaq_core::protocol::ProtocolSpec;
use aoaq_core::{Error, FaultModel, ThresholdConfig};

const CSV_HEADER: &str =
    "protocol,f,a,d,n,source,fp,fn,p_neutral,se_fp,se_fn,se_neutral,trials,seed,note";

#[derive(Parser)]
#[command(name = "aoaq", version, about = "Reliability analysis of redundant AOA sensor architectures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print exact, published, and/or Monte Carlo rates for one query
    Rates(RatesArgs),
    /// Write the full protocol x f x a grid as CSV
    Sweep(SweepArgs),
    /// Run one flight (or a fleet) from a scenario file
    Simulate(SimulateArgs),
    /// Alias for `simulate --fleet`
    Fleet(FleetArgs),
    /// Check a forensic case file: implications, odds, threshold decision
    Reason(ReasonArgs),
}

#[derive(Args)]
struct RatesArgs {
    /// Protocol token: single|alternating|conj2|disj2|guarded2|majbool<n>|majgate<n>
    #[arg(long)]
    protocol: String,
    /// Defect probability
    #[arg(long)]
    f: f64,
    /// Trigger threshold
    #[arg(long)]
    a: f64,
    /// Disagreement threshold (switches guarded2 to threshold mode)
    #[arg(long)]
    d: Option<f64>,
    /// Also print the published closed-form row
    #[arg(long)]
    paper: bool,
    /// Also print a Monte Carlo row with this many trials
    #[arg(long)]
    mc: Option<u64>,
    #[arg(long, env = "AOAQ_SEED", default_value_t = 0)]
    seed: u64,
    /// neutral-counts-negative or neutral-excluded
    #[arg(long, default_value = "neutral-counts-negative")]
    neutral_policy: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated protocol tokens
    #[arg(long, value_delimiter = ',', required = true)]
    protocols: Vec<String>,
    /// Comma-separated defect probabilities
    #[arg(long, value_delimiter = ',', required = true)]
    f_values: Vec<f64>,
    /// Comma-separated trigger thresholds
    #[arg(long, value_delimiter = ',', required = true)]
    a_values: Vec<f64>,
    /// Add a Monte Carlo row per grid point with this many trials
    #[arg(long)]
    mc: Option<u64>,
    #[arg(long, env = "AOAQ_SEED", default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Run this many flights and report fleet statistics
    #[arg(long)]
    fleet: Option<u64>,
    /// Override the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FleetArgs {
    /// Scenario JSON file
    scenario: PathBuf,
    /// Number of flights
    flights: u64,
    /// Override the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReasonArgs {
    /// Case JSON file
    case: PathBuf,
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }
    fn io(msg: impl Into<String>) -> Self {
        CliError { code: 3, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::usage(err.to_string())
    }
}

/// 17 significant digits, round-trip exact for f64.
fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn report_row(report: &RateReport, d: Option<f64>, note: &str) -> String {
    let q = &report.query;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        q.protocol,
        fmt_num(q.fault.defect_probability),
        fmt_num(q.thresholds.trigger_threshold),
        opt_num(d),
        q.protocol.arity(),
        report.source.as_str(),
        fmt_num(report.fp),
        fmt_num(report.fn_rate),
        fmt_num(report.p_neutral),
        opt_num(report.se_fp),
        opt_num(report.se_fn),
        opt_num(report.se_neutral),
        report.trials.map(|t| t.to_string()).unwrap_or_default(),
        report.seed.map(|s| s.to_string()).unwrap_or_default(),
        note,
    )
}

/// The published result lines applicable to a protocol, as
/// (fp, fn, p_neutral) formula names.
fn paper_names(protocol: ProtocolSpec) -> Option<(Option<&'static str>, Option<&'static str>, Option<&'static str>)> {
    match protocol {
        ProtocolSpec::SingleSensor { .. } | ProtocolSpec::Alternating { .. } => {
            Some((Some("single-fp"), Some("single-fn"), None))
        }
        ProtocolSpec::Conjunctive => Some((Some("conj-fp"), Some("conj-fn"), None)),
        ProtocolSpec::Disjunctive => Some((Some("disj-fp"), Some("disj-fn"), None)),
        ProtocolSpec::GuardedSingle { .. } => {
            Some((None, Some("guarded-fn"), Some("p-disagree")))
        }
        ProtocolSpec::MajorityAgreementGated { n: 3 } => {
            Some((None, None, Some("maj3-no-agreement")))
        }
        _ => None,
    }
}

fn parse_neutral_policy(token: &str) -> Result<NeutralPolicy, CliError> {
    match token {
        "neutral-counts-negative" => Ok(NeutralPolicy::NeutralCountsNegative),
        "neutral-excluded" => Ok(NeutralPolicy::NeutralExcluded),
        other => Err(CliError::usage(format!("unknown neutral policy '{other}'"))),
    }
}

fn build_query(
    protocol_token: &str,
    f: f64,
    a: f64,
    d: Option<f64>,
    policy: NeutralPolicy,
) -> Result<RateQuery, CliError> {
    let mut protocol: ProtocolSpec = protocol_token.parse()?;
    if let ProtocolSpec::GuardedSingle { ref mut mode, .. } = protocol {
        if d.is_some() {
            *mode = aoaq_core::DisagreementMode::Threshold;
        }
    }
    Ok(RateQuery {
        protocol,
        fault: FaultModel::new(f)?,
        thresholds: ThresholdConfig::new(a, d)?,
        neutral_policy: policy,
    })
}

/// Rows for one grid point: exact, optional published, optional Monte
/// Carlo, in that order.
fn rate_rows(
    query: &RateQuery,
    d: Option<f64>,
    paper: bool,
    mc: Option<u64>,
    seed: u64,
) -> Result<Vec<String>, CliError> {
    let mut rows = Vec::new();
    let exact = match exact_rates(query) {
        Ok(report) => {
            rows.push(report_row(&report, d, ""));
            Some(report)
        }
        Err(Error::Unsupported(msg)) => {
            if mc.is_none() {
                return Err(CliError::usage(msg));
            }
            None
        }
        Err(err) => return Err(err.into()),
    };

    if paper {
        let f = query.fault.defect_probability;
        let a = query.thresholds.trigger_threshold;
        let (fp_name, fn_name, neu_name) = paper_names(query.protocol)
            .ok_or_else(|| {
                CliError::usage(format!("no published closed form for {}", query.protocol))
            })?;
        let eval = |name: Option<&str>| -> Result<Option<f64>, CliError> {
            name.map(|n| paper_formula(n, f, a)).transpose().map_err(CliError::from)
        };
        let (fp, fnr, neu) = (eval(fp_name)?, eval(fn_name)?, eval(neu_name)?);
        let mut note = String::new();
        if let Some(exact) = &exact {
            let mut flag = |name: Option<&str>, printed: Option<f64>, enumerated: f64| {
                if let (Some(name), Some(p)) = (name, printed) {
                    let scale = p.abs().max(enumerated.abs()).max(f64::MIN_POSITIVE);
                    if (p - enumerated).abs() > 1e-9 * scale {
                        if !note.is_empty() {
                            note.push_str("; ");
                        }
                        let _ = write!(
                            note,
                            "printed {name} {} differs from enumeration {}",
                            fmt_num(p),
                            fmt_num(enumerated)
                        );
                    }
                }
            };
            flag(fp_name, fp, exact.fp);
            flag(fn_name, fnr, exact.fn_rate);
            flag(neu_name, neu, exact.p_neutral);
        }
        let q = query;
        rows.push(format!(
            "{},{},{},{},{},{},{},{},{},,,,,,{}",
            q.protocol,
            fmt_num(f),
            fmt_num(a),
            opt_num(d),
            q.protocol.arity(),
            RateSource::PaperClosedForm.as_str(),
            opt_num(fp),
            opt_num(fnr),
            opt_num(neu),
            note,
        ));
    }

    if let Some(trials) = mc {
        let report = monte_carlo_rates(query, AoaSampler::UniformConditional, trials, seed)?;
        rows.push(report_row(&report, d, ""));
    }
    Ok(rows)
}

fn cmd_rates(args: &RatesArgs) -> Result<u8, CliError> {
    let policy = parse_neutral_policy(&args.neutral_policy)?;
    let query = build_query(&args.protocol, args.f, args.a, args.d, policy)?;
    let rows = rate_rows(&query, args.d, args.paper, args.mc, args.seed)?;
    println!("{CSV_HEADER}");
    for row in rows {
        println!("{row}");
    }
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, CliError> {
    if args.protocols.is_empty() || args.f_values.is_empty() || args.a_values.is_empty() {
        return Err(CliError::usage("sweep needs non-empty protocol, f, and a lists"));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for token in &args.protocols {
        for &f in &args.f_values {
            for &a in &args.a_values {
                let query =
                    build_query(token, f, a, None, NeutralPolicy::NeutralCountsNegative)?;
                for row in rate_rows(&query, None, false, args.mc, args.seed)? {
                    out.push_str(&row);
                    out.push('\n');
                }
            }
        }
    }
    std::fs::write(&args.out, out)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(0)
}

fn run_simulation(
    scenario: &PathBuf,
    fleet: Option<u64>,
    seed_override: Option<u64>,
) -> Result<u8, CliError> {
    let json = std::fs::read_to_string(scenario)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", scenario.display())))?;
    let (mut config, policy) = load_scenario(&json)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let rendered = match fleet {
        Some(n) => {
            let stats = run_fleet(&config, &policy, n, config.seed)?;
            serde_json::to_string_pretty(&stats)
        }
        None => {
            let outcome = run_flight(&config, &policy)?;
            serde_json::to_string_pretty(&outcome)
        }
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    println!("{rendered}");
    Ok(0)
}

fn cmd_reason(args: &ReasonArgs) -> Result<u8, CliError> {
    let json = std::fs::read_to_string(&args.case)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", args.case.display())))?;
    let case = CaseFile::from_json(&json)?;
    let violations = check_consistency(&case.graph(), &case.propositions)?;

    println!("propositions: {}", case.propositions.len());
    println!("implications: {}", case.implications.len());
    println!("violations: {}", violations.len());
    for v in &violations {
        println!(
            "  {} ({}) -> {} ({})",
            v.from,
            serde_json::to_string(&v.from_level).unwrap().trim_matches('"'),
            v.to,
            serde_json::to_string(&v.to_level).unwrap().trim_matches('"'),
        );
    }
    if let Some(odds) = case.resolve_odds()? {
        println!("prior_odds: {}", fmt_num(odds.prior_odds));
        for (lr, label) in &odds.likelihood_ratios {
            println!("  x {} ({label})", fmt_num(*lr));
        }
        println!("posterior_odds: {}", fmt_num(odds.posterior_odds));
        println!("threshold: {}", fmt_num(odds.threshold));
        println!("decision: {}", decide_threshold(&odds));
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Rates(args) => cmd_rates(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Simulate(args) => run_simulation(&args.scenario, args.fleet, args.seed),
        Command::Fleet(args) => run_simulation(&args.scenario, Some(args.flights), args.seed),
        Command::Reason(args) => cmd_reason(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.msg);
            ExitCode::from(err.code)
        }
    }
}
