//! `kerr-purify`: command-line front end for the purification simulator.
//!
//! Exit codes: 0 success, 1 branch-equation mismatch, 2 usage or
//! configuration error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kerr_purify::equations::{catalogue, run_all, Phases};
use kerr_purify::protocol::{pbs_baseline, stage1_fidelity_closed_form, stage1_run, stage2_closed_form, stage2_run, Mode, RunReport};
use kerr_purify::qnd::{QndConfig, QndVariant};
use kerr_purify::sources::{NoiseParams, PdcSourceParams};
use kerr_purify::PhaseTag;
use serde::Serialize;

use config::FileConfig;
use output::{emit_json, mode_name, write_csv, CsvRow, Prob, Stats};

const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Parser)]
#[command(name = "kerr-purify", version, about = "Cross-Kerr QND entanglement purification simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` config file (flags take precedence).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kerr phase θ as a multiple of π, e.g. `pi/4` [default: pi/4].
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<PhaseTag>,
    /// Second Kerr phase θ′ [default: 3pi/4].
    #[arg(long, allow_hyphen_values = true)]
    theta_prime: Option<PhaseTag>,
    /// Monte Carlo seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// Evaluation mode [default: exact].
    #[arg(long)]
    mode: Option<ModeArg>,
    /// Monte Carlo trials [default: 100000].
    #[arg(long)]
    trials: Option<u64>,
    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append CSV rows to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the QND gadgets against the catalogue of displayed branch states.
    VerifyBranches {
        /// Run a single check by id (see `--list`).
        #[arg(long)]
        only: Option<String>,
        /// List check ids and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        common: Common,
    },
    /// First-stage purification of down-converted pairs.
    Stage1 {
        #[arg(long)]
        p1: Option<f64>,
        #[arg(long)]
        p2: Option<f64>,
        /// Probability that a pair survives the channel without a bit flip.
        #[arg(long)]
        f0: Option<f64>,
        /// QND gadget [default: qnd1].
        #[arg(long)]
        variant: Option<VariantArg>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Second-stage purification of ideal mixed pairs, optionally iterated.
    Stage2 {
        /// Input fidelity, ½ < F ≤ 1.
        #[arg(long = "F", alias = "fidelity")]
        f: Option<f64>,
        /// Number of rounds [default: 1].
        #[arg(long)]
        rounds: Option<u32>,
        /// Also run the polarizing-beam-splitter protocol and report the yield ratio.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Cartesian parameter grid, one CSV row per point.
    Sweep {
        target: SweepTarget,
        #[arg(long, value_delimiter = ',')]
        p1: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        p2: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        f0: Vec<f64>,
        #[arg(long = "F", alias = "fidelity", value_delimiter = ',')]
        f: Vec<f64>,
        #[arg(long)]
        variant: Option<VariantArg>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<ModeArg>,
        #[arg(long)]
        trials: Option<u64>,
        /// Append rows to this file instead of writing to stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum VariantArg {
    Qnd1,
    Qnd3,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Exact,
    #[value(alias = "monte-carlo")]
    Mc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SweepTarget {
    Stage1,
    Stage2,
    Pbs,
}

macro_rules! value_enum_from_str {
    ($t:ty) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    };
}
value_enum_from_str!(VariantArg);
value_enum_from_str!(ModeArg);

impl VariantArg {
    fn qnd(self) -> QndVariant {
        match self {
            VariantArg::Qnd1 => QndVariant::Qnd1,
            VariantArg::Qnd3 => QndVariant::Qnd3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            VariantArg::Qnd1 => "qnd1",
            VariantArg::Qnd3 => "qnd3",
        }
    }
}

/// Options shared by every subcommand, after resolution.
#[derive(Serialize)]
struct Base {
    config_file: Option<PathBuf>,
    theta: PhaseTag,
    theta_prime: PhaseTag,
    seed: u64,
}

impl Base {
    fn resolve(c: &Common) -> Result<(Self, FileConfig)> {
        let file = FileConfig::load(c.config.as_deref())?;
        let base = Base {
            config_file: c.config.clone(),
            theta: file.resolve("theta", c.theta, Some(QndConfig::default_theta()))?,
            theta_prime: file.resolve("theta_prime", c.theta_prime, Some(QndConfig::default_theta_prime()))?,
            seed: file.resolve("seed", c.seed, Some(0))?,
        };
        Ok((base, file))
    }

    fn phases(&self) -> Phases {
        Phases { theta: self.theta, theta_prime: self.theta_prime }
    }
}

#[derive(Serialize)]
struct RunSettings {
    mode: ModeArg,
    trials: u64,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
}

impl RunSettings {
    fn resolve(r: &RunOpts, file: &FileConfig) -> Result<Self> {
        Ok(RunSettings {
            mode: file.resolve("mode", r.mode, Some(ModeArg::Exact))?,
            trials: file.resolve("trials", r.trials, Some(DEFAULT_TRIALS))?,
            out: r.out.clone(),
            csv: r.csv.clone(),
        })
    }
}

fn mode_of(mode: ModeArg, trials: u64, seed: u64) -> Result<Mode> {
    match mode {
        ModeArg::Exact => Ok(Mode::Exact),
        ModeArg::Mc if trials == 0 => bail!("--trials must be at least 1"),
        ModeArg::Mc => Ok(Mode::MonteCarlo { trials, seed }),
    }
}

fn trials_of(mode: Mode) -> Option<u64> {
    match mode {
        Mode::Exact => None,
        Mode::MonteCarlo { trials, .. } => Some(trials),
    }
}

/// Human-readable lines go to stdout when the JSON document goes to a file.
fn say(to_stdout: bool, line: String) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.12}"))
}

fn verify_branches(only: Option<String>, list: bool, common: &Common) -> Result<ExitCode> {
    let (base, _) = Base::resolve(common)?;
    let checks = catalogue();
    if list {
        for c in &checks {
            println!("{:<22} {}", c.id, c.summary);
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(id) = &only {
        if !checks.iter().any(|c| c.id == id) {
            bail!("unknown check `{id}` (see `verify-branches --list`)");
        }
    }
    let results = run_all(&base.phases(), only.as_deref()).context("invalid phase configuration")?;
    println!("theta = {}, theta' = {}", base.theta, base.theta_prime);
    println!("{:<22} {:<6} result", "check", "gadget");
    let mut failed = 0;
    for r in &results {
        let gadget = checks.iter().find(|c| c.id == r.id).map(|c| format!("{:?}", c.variant)).unwrap_or_default();
        println!("{:<22} {:<6} {}", r.id, gadget.to_uppercase(), if r.passed { "PASS" } else { "FAIL" });
        if let Some(d) = &r.detail {
            println!("    first differing term: {d}");
            failed += 1;
        }
    }
    println!("{}/{} checks passed", results.len() - failed, results.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct Stage1Config {
    #[serde(flatten)]
    base: Base,
    p1: Prob,
    p2: Prob,
    f0: Prob,
    variant: VariantArg,
    #[serde(flatten)]
    run: RunSettings,
}

#[derive(Serialize)]
struct Stage1Params {
    p1: Prob,
    p2: Prob,
    f0: Prob,
    variant: VariantArg,
    theta: PhaseTag,
    theta_prime: PhaseTag,
}

#[derive(Serialize)]
struct Stage1Doc {
    command: &'static str,
    config: Stage1Config,
    params: Stage1Params,
    #[serde(flatten)]
    stats: Stats,
    mode: &'static str,
    trials: Option<u64>,
    seed: u64,
}

struct Stage1Point {
    p1: f64,
    p2: f64,
    f0: f64,
    variant: VariantArg,
}

fn run_stage1(pt: &Stage1Point, base: &Base, mode: Mode) -> Result<(RunReport, f64)> {
    let source = PdcSourceParams::new(pt.p1, pt.p2)?;
    let noise = NoiseParams::new(pt.f0)?;
    let qnd = QndConfig::with_phases(pt.variant.qnd(), base.theta, base.theta_prime)?;
    let report = stage1_run(source, noise, &qnd, mode)?;
    let closed = stage1_fidelity_closed_form(pt.p1, pt.p2, pt.f0)?;
    Ok((report, closed))
}

fn stage1_row(pt: &Stage1Point, base: &Base, report: &RunReport, closed: f64) -> CsvRow {
    CsvRow {
        pipeline: "stage1",
        variant: Some(pt.variant.name()),
        p1: Some(pt.p1),
        p2: Some(pt.p2),
        f0: Some(pt.f0),
        theta: Some(base.theta.to_string()),
        theta_prime: Some(base.theta_prime.to_string()),
        ..Default::default()
    }
    .with_report(report, closed)
}

fn stage1(
    p1: Option<f64>,
    p2: Option<f64>,
    f0: Option<f64>,
    variant: Option<VariantArg>,
    common: &Common,
    run: &RunOpts,
) -> Result<ExitCode> {
    let (base, file) = Base::resolve(common)?;
    let pt = Stage1Point {
        p1: file.resolve("p1", p1, None)?,
        p2: file.resolve("p2", p2, None)?,
        f0: file.resolve("f0", f0, None)?,
        variant: file.resolve("variant", variant, Some(VariantArg::Qnd1))?,
    };
    let settings = RunSettings::resolve(run, &file)?;
    let mode = mode_of(settings.mode, settings.trials, base.seed)?;
    let (report, closed) = run_stage1(&pt, &base, mode)?;

    let to_file = settings.out.is_some();
    say(
        to_file,
        format!(
            "stage1 [{}] {} p1={} p2={} f0={}: fidelity {} (closed form {:.12}), yield {:.12}",
            mode_name(mode),
            pt.variant.name(),
            pt.p1,
            pt.p2,
            pt.f0,
            fmt_opt(report.fidelity),
            closed,
            report.yield_
        ),
    );
    if let Some(csv) = &settings.csv {
        write_csv(&[stage1_row(&pt, &base, &report, closed)], Some(csv))?;
    }
    let doc = Stage1Doc {
        command: "stage1",
        params: Stage1Params {
            p1: Prob(pt.p1),
            p2: Prob(pt.p2),
            f0: Prob(pt.f0),
            variant: pt.variant,
            theta: base.theta,
            theta_prime: base.theta_prime,
        },
        stats: Stats::new(&report, closed),
        mode: mode_name(mode),
        trials: trials_of(mode),
        seed: base.seed,
        config: Stage1Config { p1: Prob(pt.p1), p2: Prob(pt.p2), f0: Prob(pt.f0), variant: pt.variant, base, run: settings },
    };
    emit_json(&doc, doc.config.run.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn check_stage2_fidelity(f: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.5 && f <= 1.0) {
        bail!("F must satisfy 1/2 < F <= 1 (got {f}); at or below 1/2 the second stage cannot improve fidelity");
    }
    Ok(())
}

#[derive(Serialize)]
struct BaselineRow {
    fidelity: Option<Prob>,
    #[serde(rename = "yield")]
    yield_: Prob,
    fidelity_se: Option<Prob>,
    yield_se: Option<Prob>,
    counts: Option<kerr_purify::protocol::Tally<u64>>,
    yield_ratio: Prob,
}

#[derive(Serialize)]
struct RoundRow {
    round: u32,
    input_fidelity: Prob,
    #[serde(flatten)]
    stats: Stats,
    cumulative_yield: Prob,
    baseline: Option<BaselineRow>,
}

#[derive(Serialize)]
struct Stage2Config {
    #[serde(flatten)]
    base: Base,
    #[serde(rename = "F")]
    f: Prob,
    rounds: u32,
    baseline: bool,
    #[serde(flatten)]
    run: RunSettings,
}

#[derive(Serialize)]
struct Stage2Params {
    #[serde(rename = "F")]
    f: Prob,
    rounds: u32,
    baseline: bool,
}

#[derive(Serialize)]
struct Stage2Doc {
    command: &'static str,
    config: Stage2Config,
    params: Stage2Params,
    /// Statistics of the last round.
    #[serde(flatten)]
    stats: Stats,
    cumulative_yield: Prob,
    rounds: Vec<RoundRow>,
    mode: &'static str,
    trials: Option<u64>,
    seed: u64,
}

fn stage2_row(pipeline: &'static str, f: f64, round: u32, report: &RunReport, closed: f64) -> CsvRow {
    CsvRow { pipeline, f: Some(f), round: Some(round), ..Default::default() }.with_report(report, closed)
}

fn stage2(f: Option<f64>, rounds: Option<u32>, baseline: bool, common: &Common, run: &RunOpts) -> Result<ExitCode> {
    let (base, file) = Base::resolve(common)?;
    let f0: f64 = file.resolve("f", f, None)?;
    check_stage2_fidelity(f0)?;
    let rounds: u32 = file.resolve("rounds", rounds, Some(1))?;
    if rounds == 0 {
        bail!("--rounds must be at least 1");
    }
    let baseline = baseline || file.resolve("baseline", None, Some(false))?;
    let settings = RunSettings::resolve(run, &file)?;
    let mode = mode_of(settings.mode, settings.trials, base.seed)?;
    let to_file = settings.out.is_some();

    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    let (mut input, mut cumulative) = (f0, 1.0);
    let mut last = None;
    for round in 1..=rounds {
        let report = stage2_run(input, mode)?;
        let (closed, _) = stage2_closed_form(input);
        cumulative *= 0.5 * report.yield_;
        let base_row = if baseline {
            let b = pbs_baseline(input, mode)?;
            let ratio = report.yield_ / b.yield_;
            say(
                to_file,
                format!("  pbs round {round}: fidelity {}, yield {:.12}, ratio {ratio:.12}", fmt_opt(b.fidelity), b.yield_),
            );
            let mut row = stage2_row("pbs", input, round, &b, closed);
            row.yield_ratio = Some(output::prob_text(ratio));
            csv_rows.push(row);
            Some(BaselineRow {
                fidelity: b.fidelity.map(Prob),
                yield_: Prob(b.yield_),
                fidelity_se: b.fidelity_se.map(Prob),
                yield_se: b.yield_se.map(Prob),
                counts: b.counts,
                yield_ratio: Prob(ratio),
            })
        } else {
            None
        };
        say(
            to_file,
            format!(
                "stage2 [{}] round {round}: F {input:.12} -> {} (closed form {closed:.12}), yield {:.12}, cumulative {cumulative:.12}",
                mode_name(mode),
                fmt_opt(report.fidelity),
                report.yield_
            ),
        );
        let mut row = stage2_row("stage2", input, round, &report, closed);
        row.cumulative_yield = Some(output::prob_text(cumulative));
        csv_rows.push(row);
        rows.push(RoundRow {
            round,
            input_fidelity: Prob(input),
            stats: Stats::new(&report, closed),
            cumulative_yield: Prob(cumulative),
            baseline: base_row,
        });
        // the next round starts from the exactly propagated fidelity
        input = stage2_run(input, Mode::Exact)?.fidelity.context("no pairs kept")?;
        last = Some((report, closed));
    }
    if let Some(csv) = &settings.csv {
        write_csv(&csv_rows, Some(csv))?;
    }
    let (report, closed) = last.expect("at least one round");
    let doc = Stage2Doc {
        command: "stage2",
        params: Stage2Params { f: Prob(f0), rounds, baseline },
        stats: Stats::new(&report, closed),
        cumulative_yield: Prob(cumulative),
        rounds: rows,
        mode: mode_name(mode),
        trials: trials_of(mode),
        seed: base.seed,
        config: Stage2Config { f: Prob(f0), rounds, baseline, base, run: settings },
    };
    emit_json(&doc, doc.config.run.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn list_or_file(flag: Vec<f64>, file: &FileConfig, key: &str) -> Result<Vec<f64>> {
    if !flag.is_empty() {
        return Ok(flag);
    }
    let raw: String = file.resolve(key, None, None)?;
    raw.split(',').map(|v| v.trim().parse().with_context(|| format!("config key `{key}`: bad value `{v}`"))).collect()
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    target: SweepTarget,
    p1: Vec<f64>,
    p2: Vec<f64>,
    f0: Vec<f64>,
    f: Vec<f64>,
    variant: Option<VariantArg>,
    common: &Common,
    mode: Option<ModeArg>,
    trials: Option<u64>,
    csv: Option<PathBuf>,
) -> Result<ExitCode> {
    let (base, file) = Base::resolve(common)?;
    let mode_arg = file.resolve("mode", mode, Some(ModeArg::Exact))?;
    let trials = file.resolve("trials", trials, Some(DEFAULT_TRIALS))?;
    let mode = mode_of(mode_arg, trials, base.seed)?;
    let mut rows = Vec::new();
    match target {
        SweepTarget::Stage1 => {
            let variant = file.resolve("variant", variant, Some(VariantArg::Qnd1))?;
            let (p1s, p2s, f0s) = (list_or_file(p1, &file, "p1")?, list_or_file(p2, &file, "p2")?, list_or_file(f0, &file, "f0")?);
            for &p1 in &p1s {
                for &p2 in &p2s {
                    for &f0 in &f0s {
                        let pt = Stage1Point { p1, p2, f0, variant };
                        let (report, closed) = run_stage1(&pt, &base, mode)?;
                        rows.push(stage1_row(&pt, &base, &report, closed));
                    }
                }
            }
        }
        SweepTarget::Stage2 | SweepTarget::Pbs => {
            for &fid in &list_or_file(f, &file, "f")? {
                check_stage2_fidelity(fid)?;
                let (closed, _) = stage2_closed_form(fid);
                let (name, report) = match target {
                    SweepTarget::Stage2 => ("stage2", stage2_run(fid, mode)?),
                    _ => ("pbs", pbs_baseline(fid, mode)?),
                };
                rows.push(stage2_row(name, fid, 1, &report, closed));
            }
        }
    }
    write_csv(&rows, csv.as_deref())?;
    eprintln!("sweep: {} rows ({})", rows.len(), mode_name(mode));
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::VerifyBranches { only, list, common } => verify_branches(only, list, &common),
        Command::Stage1 { p1, p2, f0, variant, common, run } => stage1(p1, p2, f0, variant, &common, &run),
        Command::Stage2 { f, rounds, baseline, common, run } => stage2(f, rounds, baseline, &common, &run),
        Command::Sweep { target, p1, p2, f0, f, variant, common, mode, trials, csv } => {
            sweep(target, p1, p2, f0, f, variant, &common, mode, trials, csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
