//! JSON documents and CSV rows.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use kerr_purify::protocol::{Mode, RunReport, Tally};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A probability written with 17 significant digits (round-trips exactly).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Prob(pub f64);

pub fn prob_text(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(prob_text(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

fn opt(x: Option<f64>) -> Option<Prob> {
    x.map(Prob)
}

#[derive(Serialize)]
pub struct ProbTally {
    pub kept_correct: Prob,
    pub kept_erroneous: Prob,
    pub discarded: Prob,
    pub kept_pairs: Prob,
    pub same_mode_double: Prob,
}

impl From<Tally<f64>> for ProbTally {
    fn from(t: Tally<f64>) -> Self {
        ProbTally {
            kept_correct: Prob(t.kept_correct),
            kept_erroneous: Prob(t.kept_erroneous),
            discarded: Prob(t.discarded),
            kept_pairs: Prob(t.kept_pairs),
            same_mode_double: Prob(t.same_mode_double),
        }
    }
}

/// Statistics of one run, as embedded in the JSON documents.
#[derive(Serialize)]
pub struct Stats {
    pub fidelity: Option<Prob>,
    pub closed_form_fidelity: Prob,
    #[serde(rename = "yield")]
    pub yield_: Prob,
    pub fidelity_se: Option<Prob>,
    pub yield_se: Option<Prob>,
    /// Raw counts (Monte Carlo); null in exact mode.
    pub counts: Option<Tally<u64>>,
    pub probabilities: ProbTally,
}

impl Stats {
    pub fn new(report: &RunReport, closed_form_fidelity: f64) -> Self {
        Stats {
            fidelity: opt(report.fidelity),
            closed_form_fidelity: Prob(closed_form_fidelity),
            yield_: Prob(report.yield_),
            fidelity_se: opt(report.fidelity_se),
            yield_se: opt(report.yield_se),
            counts: report.counts,
            probabilities: report.probabilities.into(),
        }
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Exact => "exact",
        Mode::MonteCarlo { .. } => "mc",
    }
}

/// Writes `doc` to `out`, or to stdout when `out` is `None`.
pub fn emit_json<T: Serialize>(doc: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// One CSV line; the same columns for every pipeline so rows can share a file.
#[derive(Serialize, Default)]
pub struct CsvRow {
    pub pipeline: &'static str,
    pub variant: Option<&'static str>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub f0: Option<f64>,
    #[serde(rename = "F")]
    pub f: Option<f64>,
    pub round: Option<u32>,
    pub theta: Option<String>,
    pub theta_prime: Option<String>,
    pub mode: &'static str,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub fidelity: Option<String>,
    pub closed_form_fidelity: Option<String>,
    #[serde(rename = "yield")]
    pub yield_: Option<String>,
    pub cumulative_yield: Option<String>,
    pub yield_ratio: Option<String>,
    pub fidelity_se: Option<String>,
    pub yield_se: Option<String>,
    pub kept_correct: Option<String>,
    pub kept_erroneous: Option<String>,
    pub discarded: Option<String>,
    pub kept_pairs: Option<String>,
    pub same_mode_double: Option<String>,
}

impl CsvRow {
    /// Fills the statistics columns; tallies are counts (sampled) or
    /// probabilities (exact).
    pub fn with_report(mut self, report: &RunReport, closed_form_fidelity: f64) -> Self {
        let p = |x: f64| Some(prob_text(x));
        self.mode = mode_name(report.mode);
        if let Mode::MonteCarlo { trials, seed } = report.mode {
            self.trials = Some(trials);
            self.seed = Some(seed);
        }
        self.fidelity = report.fidelity.map(prob_text);
        self.closed_form_fidelity = p(closed_form_fidelity);
        self.yield_ = p(report.yield_);
        self.fidelity_se = report.fidelity_se.map(prob_text);
        self.yield_se = report.yield_se.map(prob_text);
        let (kc, ke, d, kp, sm) = match report.counts {
            Some(c) => (
                c.kept_correct.to_string(),
                c.kept_erroneous.to_string(),
                c.discarded.to_string(),
                c.kept_pairs.to_string(),
                c.same_mode_double.to_string(),
            ),
            None => {
                let t = report.probabilities;
                (
                    prob_text(t.kept_correct),
                    prob_text(t.kept_erroneous),
                    prob_text(t.discarded),
                    prob_text(t.kept_pairs),
                    prob_text(t.same_mode_double),
                )
            }
        };
        self.kept_correct = Some(kc);
        self.kept_erroneous = Some(ke);
        self.discarded = Some(d);
        self.kept_pairs = Some(kp);
        self.same_mode_double = Some(sm);
        self
    }
}

/// Appends rows to `path` (header only when the file is new or empty), or
/// writes them with a header to stdout when `path` is `None`.
pub fn write_csv(rows: &[CsvRow], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let fresh = std::fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true);
            let file = OpenOptions::new().create(true).append(true).open(p).with_context(|| format!("opening {}", p.display()))?;
            let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
