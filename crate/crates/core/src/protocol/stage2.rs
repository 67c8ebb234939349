use serde::Serialize;

use super::stage1::readouts;
use super::tree::{Leaf, Node, Step};
use super::{require_fidelity, Mode, Pipeline, RunReport};
use crate::error::{Result, SimError};
use crate::fock::{Party, Port, PureState, Spatial};
use crate::optics::{measure_diagonal, pbs, sigma_x, sigma_z, Selector};
use crate::phase::PhaseTag;
use crate::qnd::{apply_qnd, QndConfig, QndVariant};
use crate::sources::{ideal_mixed_pairs_labeled, BellState};

/// Closed form `(F′, yield)` with `F′ = F²/(F²+(1−F)²)` and yield `F²+(1−F)²`.
pub fn stage2_closed_form(f: f64) -> (f64, f64) {
    let y = f * f + (1.0 - f) * (1.0 - f);
    (f * f / y, y)
}

/// Second-stage purification of two mixed pairs with QND₂. Defined for
/// `0 < F ≤ 1`; it only improves pairs with `F > ½`.
pub fn stage2_run(fidelity: f64, mode: Mode) -> Result<RunReport> {
    Pipeline::Stage2 { fidelity }.run(mode)
}

/// The same input purified with polarizing beam splitters and four-mode
/// coincidences.
pub fn pbs_baseline(fidelity: f64, mode: Mode) -> Result<RunReport> {
    Pipeline::PbsBaseline { fidelity }.run(mode)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct IterationRow {
    pub round: u32,
    /// Fidelity after this round.
    pub fidelity: f64,
    /// Probability that this round keeps its pair.
    #[serde(rename = "yield")]
    pub yield_: f64,
    /// Pairs out per input pair after all rounds so far (two pairs in, one out).
    pub cumulative_yield: f64,
}

/// Repeats the second stage, feeding each round's output fidelity into the
/// next. Each round is evaluated exactly.
pub fn stage2_iterate(f0: f64, rounds: u32) -> Result<Vec<IterationRow>> {
    if rounds == 0 {
        return Err(SimError::InvalidParameter("rounds must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(rounds as usize);
    let (mut f, mut cumulative) = (f0, 1.0);
    for round in 1..=rounds {
        let report = stage2_run(f, Mode::Exact)?;
        f = report.fidelity.ok_or(SimError::ZeroNorm)?;
        cumulative *= 0.5 * report.yield_;
        rows.push(IterationRow { round, fidelity: f, yield_: report.yield_, cumulative_yield: cumulative });
    }
    Ok(rows)
}

fn components(f: f64) -> Result<impl Iterator<Item = (f64, Step, PureState)>> {
    require_fidelity(f)?;
    Ok(ideal_mixed_pairs_labeled(f, 2)?
        .into_iter()
        .map(|(w, pairs, s)| (w, Step::Components { pairs }, s)))
}

fn port(party: Party, spatial: Spatial) -> Port {
    Port::new(party, spatial)
}

/// Measures both lower photons in the diagonal basis, corrects the upper pair
/// with `σz` on Alice when the outcomes differ, and scores it against Φ⁺.
fn diagonal_step(state: &PureState) -> Result<Node> {
    let target = BellState::PhiPlus.on_path(Spatial::Upper);
    let alice = measure_diagonal(state, port(Party::Alice, Spatial::Lower))?
        .into_iter()
        .map(|(o, p, s)| (p, Step::Diagonal { party: Party::Alice, outcome: o }, (o, s)));
    Node::chance(alice, |(oa, sa)| {
        let bob = measure_diagonal(&sa, port(Party::Bob, Spatial::Lower))?
            .into_iter()
            .map(|(o, p, s)| (p, Step::Diagonal { party: Party::Bob, outcome: o }, (o, s)));
        Node::chance(bob, |(ob, sb)| {
            let out = if oa != ob { sigma_z(&sb, Selector::party(Party::Alice).spatial(Spatial::Upper)) } else { sb };
            let f = out.overlap(&target);
            Ok(Node::Leaf(Leaf::kept(1, f, out)))
        })
    })
}

pub(crate) fn qnd_tree(f: f64) -> Result<Node> {
    let cfg = QndConfig::new(QndVariant::Qnd2);
    Node::chance(components(f)?, |state| {
        let measured = apply_qnd(&state, &cfg)?;
        readouts(&measured, |a, b, s| {
            if a != b {
                return Ok(Node::Leaf(Leaf::discarded(s)));
            }
            let s = if a == PhaseTag::ZERO {
                let upper = |p| Selector::party(p).spatial(Spatial::Upper);
                sigma_x(&sigma_x(&s, upper(Party::Alice)), upper(Party::Bob))
            } else {
                s
            };
            diagonal_step(&s)
        })
    })
}

pub(crate) fn pbs_tree(f: f64) -> Result<Node> {
    Node::chance(components(f)?, |state| {
        let mixed = pbs(&pbs(&state, Party::Alice, Spatial::Upper, Spatial::Lower)?, Party::Bob, Spatial::Upper, Spatial::Lower)?;
        let ports = [Party::Alice, Party::Bob].into_iter().flat_map(|p| [port(p, Spatial::Upper), port(p, Spatial::Lower)]);
        let ports: Vec<Port> = ports.collect();
        let fourfold = |occ: &crate::fock::Occupation| ports.iter().all(|p| occ.at_port(*p) == 1);
        let split = [true, false].into_iter().filter_map(|keep| {
            match mixed.postselect(|o| fourfold(o) == keep) {
                Ok((p, s)) => Some(Ok((p, Step::Coincidence { fourfold: keep }, (keep, s)))),
                Err(SimError::ZeroNorm) => None,
                Err(e) => Some(Err(e)),
            }
        });
        let split: Vec<_> = split.collect::<Result<_>>()?;
        Node::chance(split, |(keep, s)| if keep { diagonal_step(&s) } else { Ok(Node::Leaf(Leaf::discarded(s))) })
    })
}
