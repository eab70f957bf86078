//! Command-line front end.
//!
//! Three subcommands cover the library's surface:
//!
//! - `grid` runs the Monte Carlo treatment grid and emits one row per
//!   treatment (CSV by default).
//! - `counterexample` prints the dependent coin-toss scenario report:
//!   stage-one table, exact FWER per convention, the maximally-powerful
//!   bound, and an optional Monte Carlo estimate.
//! - `step` drives the sequential tester from standard input, one
//!   whitespace-separated subfamily of p-values per line.
//!
//! Exit codes: 0 on success, 1 on I/O failure, 2 on usage or validation
//! errors. Every file written is accompanied by a `<file>.manifest.json`
//! recording the full parameter set, seed, tool version and timestamps;
//! with output on stdout the manifest goes to stderr. Floating-point
//! columns in CSV carry 17 significant digits so values round-trip
//! bit-exactly.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::counterexample::{scenario_report, ATableRow, CConvention, CoinScenario, ScenarioReport};
use crate::error::Error;
use crate::sim::{run_grid, GridConfig, TreatmentResult};
use crate::tester::{Decision, TesterState, Variant};

/// Parse arguments from the process environment and run. Returns the exit
/// code for `main`.
pub fn run() -> ExitCode {
    // clap exits with code 2 on usage errors and 0 for --help/--version.
    let cli = Cli::parse();
    match cli.command {
        Command::Grid(args) => report(cmd_grid(args)),
        Command::Counterexample(args) => report(cmd_counterexample(args)),
        Command::Step(args) => report(cmd_step(args)),
    }
}

fn report(outcome: Result<(), CliError>) -> ExitCode {
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(err)) => {
            eprintln!("I/O error: {err}");
            ExitCode::from(1)
        }
    }
}

enum CliError {
    Usage(String),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Usage(err.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(err: io::Error) -> Self {
        CliError::Io(err)
    }
}

#[derive(Parser)]
#[command(
    name = "seqmt",
    version,
    about = "Sequential multiple testing with familywise error rate control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo FWER and true-discovery estimates over a treatment grid.
    Grid(GridArgs),
    /// The dependent coin-toss scenario: exact, analytic and Monte Carlo FWER.
    Counterexample(CounterexampleArgs),
    /// Stream subfamilies of p-values from stdin, one per line.
    Step(StepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantChoice {
    Refined,
    Wp,
    Both,
}

impl VariantChoice {
    fn expand(self) -> Vec<Variant> {
        match self {
            VariantChoice::Refined => vec![Variant::Refined],
            VariantChoice::Wp => vec![Variant::WebbPetitjean],
            VariantChoice::Both => vec![Variant::Refined, Variant::WebbPetitjean],
        }
    }

    fn label(self) -> &'static str {
        match self {
            VariantChoice::Refined => "refined",
            VariantChoice::Wp => "wp",
            VariantChoice::Both => "both",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SingleVariantChoice {
    Refined,
    Wp,
}

impl From<SingleVariantChoice> for Variant {
    fn from(choice: SingleVariantChoice) -> Self {
        match choice {
            SingleVariantChoice::Refined => Variant::Refined,
            SingleVariantChoice::Wp => Variant::WebbPetitjean,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatChoice {
    Csv,
    Json,
    Text,
}

impl FormatChoice {
    fn label(self) -> &'static str {
        match self {
            FormatChoice::Csv => "csv",
            FormatChoice::Json => "json",
            FormatChoice::Text => "text",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionChoice {
    Doubled,
    Mintail,
    Lowertail,
    All,
}

impl ConventionChoice {
    fn expand(self) -> Vec<CConvention> {
        match self {
            ConventionChoice::Doubled => vec![CConvention::TwoSidedDoubled],
            ConventionChoice::Mintail => vec![CConvention::MinTail],
            ConventionChoice::Lowertail => vec![CConvention::LowerTailOnly],
            ConventionChoice::All => CConvention::ALL.to_vec(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            ConventionChoice::Doubled => "doubled",
            ConventionChoice::Mintail => "mintail",
            ConventionChoice::Lowertail => "lowertail",
            ConventionChoice::All => "all",
        }
    }
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

#[derive(Args)]
struct GridArgs {
    /// Global significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Budget update rule, or `both` for one block of rows per rule.
    #[arg(long, value_enum, default_value_t = VariantChoice::Refined)]
    variant: VariantChoice,
    /// Subfamily sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
    sizes: Vec<usize>,
    /// True-null fractions, comma separated.
    #[arg(
        long = "ptrue",
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    )]
    ptrue: Vec<f64>,
    /// Upper bound of the uniform p-value range for false nulls.
    #[arg(long, default_value_t = 0.1)]
    max_false_pval: f64,
    /// Monte Carlo repetitions per treatment.
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    /// Base RNG seed; trial i of every treatment draws from stream (seed, i).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatChoice::Csv)]
    format: FormatChoice,
}

/// One output row of the grid, in CSV column order.
#[derive(Serialize)]
struct GridRow {
    subfamily_size: usize,
    p_true: f64,
    max_false_pval: f64,
    variant: &'static str,
    n_reps: u64,
    fwer_hat: f64,
    fwer_se: f64,
    mean_true_discoveries: f64,
}

impl From<&TreatmentResult> for GridRow {
    fn from(result: &TreatmentResult) -> Self {
        GridRow {
            subfamily_size: result.config.subfamily_size,
            p_true: result.config.p_true,
            max_false_pval: result.config.max_false_pval,
            variant: result.config.variant.label(),
            n_reps: result.config.n_reps,
            fwer_hat: result.fwer_hat,
            fwer_se: result.fwer_se,
            mean_true_discoveries: result.mean_true_discoveries,
        }
    }
}

const GRID_CSV_HEADER: &str =
    "subfamily_size,p_true,max_false_pval,variant,n_reps,fwer_hat,fwer_se,mean_true_discoveries";

fn cmd_grid(args: GridArgs) -> Result<(), CliError> {
    let started = timestamp();
    let mut rows: Vec<GridRow> = Vec::new();
    for variant in args.variant.expand() {
        let grid = GridConfig {
            alpha: args.alpha,
            sizes: args.sizes.clone(),
            p_trues: args.ptrue.clone(),
            max_false_pval: args.max_false_pval,
            n_reps: args.reps,
            seed: args.seed,
            variant,
        };
        grid.validate()?;
        rows.extend(run_grid(&grid)?.iter().map(GridRow::from));
    }

    let body = match args.format {
        FormatChoice::Csv => render_grid_csv(&rows),
        FormatChoice::Json => to_json(&rows)?,
        FormatChoice::Text => render_grid_text(&rows),
    };
    let manifest = RunManifest::new(
        "grid",
        serde_json::json!({
            "alpha": args.alpha,
            "variant": args.variant.label(),
            "sizes": args.sizes,
            "ptrue": args.ptrue,
            "max_false_pval": args.max_false_pval,
            "reps": args.reps,
            "seed": args.seed,
            "format": args.format.label(),
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        }),
        args.seed,
        started,
    );
    write_output(args.out.as_deref(), &body, &manifest)
}

fn render_grid_csv(rows: &[GridRow]) -> String {
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.subfamily_size,
            f17(r.p_true),
            f17(r.max_false_pval),
            r.variant,
            r.n_reps,
            f17(r.fwer_hat),
            f17(r.fwer_se),
            f17(r.mean_true_discoveries)
        );
    }
    out
}

fn render_grid_text(rows: &[GridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>7} {:>9} {:>8} {:>9} {:>10} {:>10} {:>12}",
        "size", "p_true", "max_f_p", "variant", "reps", "fwer", "se", "discoveries"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>5} {:>7.2} {:>9.3} {:>8} {:>9} {:>10.6} {:>10.6} {:>12.4}",
            r.subfamily_size,
            r.p_true,
            r.max_false_pval,
            r.variant,
            r.n_reps,
            r.fwer_hat,
            r.fwer_se,
            r.mean_true_discoveries
        );
    }
    out
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

#[derive(Args)]
struct CounterexampleArgs {
    /// Global significance level; A and B are each tested at alpha/2.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Tosses in the experiment shared by A and B.
    #[arg(long, default_value_t = 17)]
    n1: u32,
    /// Tosses in the experiment behind C.
    #[arg(long, default_value_t = 13)]
    n2: u32,
    /// Convention for C's two-sided p-value, or `all` to report every one.
    #[arg(long = "c-convention", value_enum, default_value_t = ConventionChoice::All)]
    c_convention: ConventionChoice,
    /// Add a Monte Carlo estimate with this many repetitions.
    #[arg(long = "mc-reps")]
    mc_reps: Option<u64>,
    /// RNG seed for the Monte Carlo estimate.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatChoice::Text)]
    format: FormatChoice,
}

/// The assembled report: convention-independent parts once, then one entry
/// per requested convention.
#[derive(Serialize)]
struct CounterexampleDoc {
    n1: u32,
    n2: u32,
    alpha: f64,
    p_b_region: f64,
    a_table: Vec<ATableRow>,
    analytic_stage2: f64,
    fwer_analytic_maxpower: f64,
    conventions: Vec<ConventionEntry>,
}

#[derive(Serialize)]
struct ConventionEntry {
    convention: &'static str,
    fwer_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fwer_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fwer_mc_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_seed: Option<u64>,
}

impl CounterexampleDoc {
    fn from_reports(reports: &[ScenarioReport]) -> Self {
        let first = &reports[0];
        CounterexampleDoc {
            n1: first.scenario.n1,
            n2: first.scenario.n2,
            alpha: first.scenario.alpha,
            p_b_region: first.p_b_region,
            a_table: first.a_table.clone(),
            analytic_stage2: first.analytic_stage2,
            fwer_analytic_maxpower: first.fwer_analytic_maxpower,
            conventions: reports
                .iter()
                .map(|r| ConventionEntry {
                    convention: r.scenario.c_convention.label(),
                    fwer_exact: r.fwer_exact,
                    fwer_mc: r.fwer_mc,
                    fwer_mc_se: r.fwer_mc_se,
                    mc_reps: r.mc_reps,
                    mc_seed: r.mc_seed,
                })
                .collect(),
        }
    }
}

fn cmd_counterexample(args: CounterexampleArgs) -> Result<(), CliError> {
    let started = timestamp();
    let mc = args.mc_reps.map(|n| (n, args.seed));
    let mut reports = Vec::new();
    for convention in args.c_convention.expand() {
        let scenario = CoinScenario::new(args.n1, args.n2, args.alpha, convention)?;
        reports.push(scenario_report(&scenario, mc)?);
    }
    let doc = CounterexampleDoc::from_reports(&reports);

    let body = match args.format {
        FormatChoice::Text => render_counterexample_text(&doc),
        FormatChoice::Json => to_json(&doc)?,
        FormatChoice::Csv => render_counterexample_csv(&doc),
    };
    let manifest = RunManifest::new(
        "counterexample",
        serde_json::json!({
            "alpha": args.alpha,
            "n1": args.n1,
            "n2": args.n2,
            "c_convention": args.c_convention.label(),
            "mc_reps": args.mc_reps,
            "seed": args.seed,
            "format": args.format.label(),
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        }),
        args.seed,
        started,
    );
    write_output(args.out.as_deref(), &body, &manifest)
}

fn render_counterexample_text(doc: &CounterexampleDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Dependent coin-toss scenario: alpha = {}, n1 = {} (A: Pr(heads) <= 0.1, false; \
         B: Pr(heads) >= 0.5, true), n2 = {} (C: Pr(heads) != 0.5, true)",
        doc.alpha, doc.n1, doc.n2
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Pr(stage one rejects B)            {:>12.6}",
        doc.p_b_region
    );
    let _ = writeln!(
        out,
        "max-power stage-two term           {:>12.6}",
        doc.analytic_stage2
    );
    let _ = writeln!(
        out,
        "max-power FWER bound               {:>12.6}",
        doc.fwer_analytic_maxpower
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "Stage-one rejection region for A:");
    let _ = writeln!(out, "{:>7} {:>14} {:>14}", "heads", "p(A)", "alpha for C");
    for row in &doc.a_table {
        let _ = writeln!(
            out,
            "{:>7} {:>14.4e} {:>14.6}",
            row.heads, row.p_value, row.adjusted_alpha
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "FWER by convention for C's p-value:");
    let _ = writeln!(
        out,
        "{:>11} {:>12} {:>12} {:>12} {:>12}",
        "convention", "exact", "mc", "mc_se", "mc_reps"
    );
    for entry in &doc.conventions {
        match (entry.fwer_mc, entry.fwer_mc_se, entry.mc_reps) {
            (Some(mc), Some(se), Some(reps)) => {
                let _ = writeln!(
                    out,
                    "{:>11} {:>12.6} {:>12.6} {:>12.6} {:>12}",
                    entry.convention, entry.fwer_exact, mc, se, reps
                );
            }
            _ => {
                let _ = writeln!(
                    out,
                    "{:>11} {:>12.6} {:>12} {:>12} {:>12}",
                    entry.convention, entry.fwer_exact, "-", "-", "-"
                );
            }
        }
    }
    out
}

fn render_counterexample_csv(doc: &CounterexampleDoc) -> String {
    let mut out = String::from("section,convention,k,value\n");
    let mut scalar = |section: &str, value: f64| {
        let _ = writeln!(out, "{section},,,{}", f17(value));
    };
    scalar("b_region_probability", doc.p_b_region);
    scalar("analytic_stage2_bound", doc.analytic_stage2);
    scalar("analytic_fwer_maxpower", doc.fwer_analytic_maxpower);
    for row in &doc.a_table {
        let _ = writeln!(out, "a_pvalue,,{},{}", row.heads, f17(row.p_value));
        let _ = writeln!(
            out,
            "a_adjusted_alpha,,{},{}",
            row.heads,
            f17(row.adjusted_alpha)
        );
    }
    for entry in &doc.conventions {
        let _ = writeln!(
            out,
            "exact_fwer,{},,{}",
            entry.convention,
            f17(entry.fwer_exact)
        );
        if let (Some(mc), Some(se), Some(reps), Some(seed)) =
            (entry.fwer_mc, entry.fwer_mc_se, entry.mc_reps, entry.mc_seed)
        {
            let _ = writeln!(out, "mc_fwer,{},,{}", entry.convention, f17(mc));
            let _ = writeln!(out, "mc_fwer_se,{},,{}", entry.convention, f17(se));
            let _ = writeln!(out, "mc_reps,{},,{reps}", entry.convention);
            let _ = writeln!(out, "mc_seed,{},,{seed}", entry.convention);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// step
// ---------------------------------------------------------------------------

#[derive(Args)]
struct StepArgs {
    /// Global significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Budget update rule.
    #[arg(long, value_enum, default_value_t = SingleVariantChoice::Refined)]
    variant: SingleVariantChoice,
}

fn cmd_step(args: StepArgs) -> Result<(), CliError> {
    let mut tester = TesterState::new(args.alpha, args.variant.into())?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for (index, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        let line_number = index + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue; // blank lines are ignored
        }
        let mut pvalues = Vec::with_capacity(tokens.len());
        for token in tokens {
            let p: f64 = token.parse().map_err(|_| {
                CliError::Usage(format!("line {line_number}: '{token}' is not a number"))
            })?;
            pvalues.push(p);
        }
        match tester.step(&pvalues) {
            Ok(Decision::Rejected { record, new_budget }) => {
                writeln!(
                    out,
                    "REJECT index={} p={} budget={}",
                    record.index, record.p_min, new_budget
                )?;
            }
            Ok(Decision::Stopped(_)) => {
                writeln!(out, "STOP")?;
                return Ok(());
            }
            Err(err) => {
                return Err(CliError::Usage(format!("line {line_number}: {err}")));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

/// Provenance record written next to every output so any number in it can
/// be regenerated from the recorded parameters.
#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    config: serde_json::Value,
    seed: u64,
    tool_version: &'static str,
    started: String,
    finished: String,
}

impl RunManifest {
    fn new(command: &'static str, config: serde_json::Value, seed: u64, started: String) -> Self {
        RunManifest {
            command,
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            started,
            finished: timestamp(),
        }
    }
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// 17 significant digits: enough to reconstruct the exact f64 bits.
fn f17(value: f64) -> String {
    format!("{value:.16e}")
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|err| CliError::Usage(format!("serialization failed: {err}")))?;
    body.push('\n');
    Ok(body)
}

fn write_output(out: Option<&Path>, body: &str, manifest: &RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            let manifest_path = PathBuf::from(format!("{}.manifest.json", path.display()));
            let mut text = serde_json::to_string_pretty(manifest)
                .map_err(|err| CliError::Usage(format!("serialization failed: {err}")))?;
            text.push('\n');
            std::fs::write(manifest_path, text)?;
        }
        None => {
            let stdout = io::stdout();
            stdout.lock().write_all(body.as_bytes())?;
            let text = serde_json::to_string(manifest)
                .map_err(|err| CliError::Usage(format!("serialization failed: {err}")))?;
            eprintln!("{text}");
        }
    }
    Ok(())
}
