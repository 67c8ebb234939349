//! Purification pipelines and their evaluation.
//!
//! Every pipeline is first unfolded into a probability tree whose edges are
//! emission, noise, and measurement outcomes and whose leaves carry the keep
//! decision and the fidelity of the kept pairs. [`enumerate_exact`] flattens
//! the tree; [`monte_carlo`] walks one random path per trial.

mod montecarlo;
mod stage1;
mod stage2;
mod tree;

use serde::Serialize;

use crate::error::{Result, SimError};
use crate::fock::{Party, PureState};
use crate::phase::PhaseTag;
use crate::qnd::QndConfig;
use crate::sources::{NoiseParams, PdcSourceParams};

pub use montecarlo::{monte_carlo, Execution};
pub use stage1::{stage1_fidelity_closed_form, stage1_run};
pub use stage2::{pbs_baseline, stage2_closed_form, stage2_iterate, stage2_run, IterationRow};
pub use tree::Step;

use tree::{Leaf, Node};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    KeptCorrect,
    KeptErroneous,
    Discarded,
}

/// One fully resolved branch of a pipeline.
#[derive(Clone, Debug)]
pub struct OutcomeRecord {
    /// Random choices along the branch, in order.
    pub steps: Vec<Step>,
    pub verdict: Verdict,
    /// Pairs delivered by the event (0 if discarded).
    pub pairs: u32,
    /// Discarded two-pair event with equal 2θ or 2θ′ readouts.
    pub same_mode_double: bool,
    /// State after all corrections and couplers (before any discard).
    pub final_state: PureState,
    pub weight: f64,
}

impl OutcomeRecord {
    /// Probe readouts `(Alice, Bob)`, if the branch has them.
    pub fn probe_phases(&self) -> Option<(PhaseTag, PhaseTag)> {
        let read = |who: Party| {
            self.steps.iter().find_map(|s| match s {
                Step::Readout { party, phase } if *party == who => Some(*phase),
                _ => None,
            })
        };
        Some((read(Party::Alice)?, read(Party::Bob)?))
    }
}

/// Per-verdict tallies. `kept_pairs` sums delivered pairs over kept events.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize)]
pub struct Tally<T> {
    pub kept_correct: T,
    pub kept_erroneous: T,
    pub discarded: T,
    pub kept_pairs: T,
    pub same_mode_double: T,
}

impl Tally<u64> {
    pub fn trials(&self) -> u64 {
        self.kept_correct + self.kept_erroneous + self.discarded
    }

    pub(crate) fn add(mut self, o: Tally<u64>) -> Tally<u64> {
        self.kept_correct += o.kept_correct;
        self.kept_erroneous += o.kept_erroneous;
        self.discarded += o.discarded;
        self.kept_pairs += o.kept_pairs;
        self.same_mode_double += o.same_mode_double;
        self
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    /// Fidelity of kept events with the target; `None` if nothing is kept.
    pub fidelity: Option<f64>,
    /// Probability that an event is kept.
    #[serde(rename = "yield")]
    pub yield_: f64,
    /// Standard errors (Monte Carlo only; `None` when undefined).
    pub fidelity_se: Option<f64>,
    pub yield_se: Option<f64>,
    /// Probability mass (exact) or relative frequency (sampled) per verdict.
    pub probabilities: Tally<f64>,
    /// Raw counts (Monte Carlo only).
    pub counts: Option<Tally<u64>>,
    pub mode: Mode,
}

/// A pipeline with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Pipeline {
    /// Down-conversion source, bit-flip channel, QND₁ or QND₃ comparison.
    Stage1 { source: PdcSourceParams, noise: NoiseParams, qnd: QndConfig },
    /// Two ideal mixed pairs, QND₂ comparison, diagonal-basis measurement.
    Stage2 { fidelity: f64 },
    /// Same input, parity check by polarizing beam splitters.
    PbsBaseline { fidelity: f64 },
}

impl Pipeline {
    pub(crate) fn tree(&self) -> Result<Node> {
        match self {
            Pipeline::Stage1 { source, noise, qnd } => stage1::tree(source, *noise, qnd),
            Pipeline::Stage2 { fidelity } => stage2::qnd_tree(*fidelity),
            Pipeline::PbsBaseline { fidelity } => stage2::pbs_tree(*fidelity),
        }
    }

    /// Evaluates the pipeline exactly or by sampling (in parallel).
    pub fn run(&self, mode: Mode) -> Result<RunReport> {
        match mode {
            Mode::Exact => Ok(report_from_records(&enumerate_exact(self)?)),
            Mode::MonteCarlo { trials, seed } => monte_carlo(self, trials, seed, Execution::Parallel),
        }
    }
}

/// Every branch of the pipeline with its probability; weights sum to 1.
/// A kept leaf whose fidelity lies strictly between 0 and 1 is split into a
/// correct and an erroneous record weighted by the fidelity.
pub fn enumerate_exact(pipeline: &Pipeline) -> Result<Vec<OutcomeRecord>> {
    let tree = pipeline.tree()?;
    let mut out = Vec::new();
    tree.for_each_leaf(1.0, &mut Vec::new(), &mut |w, path, leaf: &Leaf| {
        let record = |verdict, weight| OutcomeRecord {
            steps: path.iter().map(|s| (*s).clone()).collect(),
            verdict,
            pairs: leaf.kept.unwrap_or(0),
            same_mode_double: leaf.same_mode_double,
            final_state: leaf.state.clone(),
            weight,
        };
        match leaf.kept {
            None => out.push(record(Verdict::Discarded, w)),
            Some(_) => {
                if leaf.fidelity > 0.0 {
                    out.push(record(Verdict::KeptCorrect, w * leaf.fidelity));
                }
                if leaf.fidelity < 1.0 {
                    out.push(record(Verdict::KeptErroneous, w * (1.0 - leaf.fidelity)));
                }
            }
        }
    });
    Ok(out)
}

/// Exact statistics from a full enumeration.
pub fn report_from_records(records: &[OutcomeRecord]) -> RunReport {
    let mut p = Tally::<f64>::default();
    for r in records {
        match r.verdict {
            Verdict::KeptCorrect => p.kept_correct += r.weight,
            Verdict::KeptErroneous => p.kept_erroneous += r.weight,
            Verdict::Discarded => p.discarded += r.weight,
        }
        if r.verdict != Verdict::Discarded {
            p.kept_pairs += r.weight * r.pairs as f64;
        }
        if r.same_mode_double {
            p.same_mode_double += r.weight;
        }
    }
    let kept = p.kept_correct + p.kept_erroneous;
    RunReport {
        fidelity: (kept > 0.0).then(|| p.kept_correct / kept),
        yield_: kept,
        fidelity_se: None,
        yield_se: None,
        probabilities: p,
        counts: None,
        mode: Mode::Exact,
    }
}

pub(crate) fn require_fidelity(f: f64) -> Result<()> {
    if f.is_finite() && f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(SimError::InvalidParameter(format!("fidelity must lie in (0, 1], got {f}")))
    }
}
