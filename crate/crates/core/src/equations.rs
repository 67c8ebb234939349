//! Catalogue of displayed branch transformations for the four QND gadgets.
//!
//! Each entry pairs an input state with the output written out by hand as an
//! operator polynomial on the vacuum, tagged with the probe phases of both
//! parties. A check runs the gadget on the input and compares the normalized
//! result with the normalized hand-written state term by term.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::Result;
use crate::fock::{Party, Probes, PureState};
use crate::phase::PhaseTag;
use crate::qnd::{apply_qnd, QndConfig, QndVariant};
use crate::sources::{emission, pdc_emit, product, BellState, EmissionModel};
use crate::testkit::modes;
use crate::Spatial;

/// Amplitude tolerance for term-by-term comparison (round-off only).
pub const TERM_TOLERANCE: f64 = 1e-10;

/// The two Kerr phases used by the QND₁/QND₃ checks; QND₄ uses `theta`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Phases {
    pub theta: PhaseTag,
    pub theta_prime: PhaseTag,
}

impl Default for Phases {
    fn default() -> Self {
        Phases { theta: QndConfig::default_theta(), theta_prime: QndConfig::default_theta_prime() }
    }
}

impl Phases {
    pub fn config(&self, variant: QndVariant) -> Result<QndConfig> {
        match variant {
            QndVariant::Qnd2 => QndConfig::with_phases(variant, PhaseTag::pi(), PhaseTag::ZERO),
            QndVariant::Qnd4 => QndConfig::with_phases(variant, self.theta, PhaseTag::ZERO),
            _ => QndConfig::with_phases(variant, self.theta, self.theta_prime),
        }
    }
}

enum Expectation {
    /// Exact output state.
    State(fn(&Phases) -> PureState),
    /// No branch may carry this pair of probe phases.
    Excludes(fn(&Phases) -> (PhaseTag, PhaseTag)),
}

pub struct BranchCheck {
    pub id: &'static str,
    pub variant: QndVariant,
    pub summary: &'static str,
    input: fn() -> PureState,
    expected: Expectation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub passed: bool,
    /// First differing term on failure.
    pub detail: Option<String>,
}

/// Product of operator polynomials (`"a1H b1H + a2V b2V"`) applied to vacuum.
fn ops(factors: &[&str]) -> PureState {
    let mut state = PureState::vacuum();
    for factor in factors {
        state = factor
            .split('+')
            .map(|term| state.create_photons(&modes(term)))
            .fold(PureState::empty(), |acc, s| acc.plus(&s));
    }
    state
}

fn at(state: PureState, alice: PhaseTag, bob: PhaseTag) -> PureState {
    state.map_probes(|_, _| Probes::new(alice, bob))
}

fn times(state: PureState, c: f64) -> PureState {
    state.scaled(Complex64::new(c, 0.0))
}

fn sum(states: impl IntoIterator<Item = PureState>) -> PureState {
    states.into_iter().fold(PureState::empty(), |acc, s| acc.plus(&s))
}

fn single_pair() -> PureState {
    pdc_emit(1).expect("single pair")
}
fn single_pair_flipped() -> PureState {
    emission(EmissionModel::SingleMode, &[true]).expect("flipped pair")
}
fn double_pair() -> PureState {
    pdc_emit(2).expect("double pair")
}
fn double_pair_one_flip() -> PureState {
    emission(EmissionModel::SingleMode, &[false, true]).expect("double pair")
}
fn double_pair_two_flips() -> PureState {
    emission(EmissionModel::SingleMode, &[true, true]).expect("double pair")
}

fn bell_product(first: BellState, second: BellState) -> PureState {
    product(&first.on_path(Spatial::Upper), &second.on_path(Spatial::Lower))
}

/// Four-photon ket with polarizations listed in the order a₁ b₁ a₂ b₂.
fn k4(pols: &str) -> PureState {
    let p: Vec<char> = pols.chars().collect();
    ops(&[&format!("a1{} b1{} a2{} b2{}", p[0], p[1], p[2], p[3])])
}

const X1: &str = "a1H b1H + a2V b2V";
const Y1: &str = "a1V b1V + a2H b2H";
const X1_FLIP: &str = "a1V b1H + a2H b2V";
const Y1_FLIP: &str = "a1H b1V + a2V b2H";

pub fn catalogue() -> Vec<BranchCheck> {
    vec![
        BranchCheck {
            id: "qnd1-pair",
            variant: QndVariant::Qnd1,
            summary: "QND1, one uncorrupted pair: equal phases (t,t) / (t',t')",
            input: single_pair,
            expected: Expectation::State(|p| {
                sum([at(ops(&[X1]), p.theta, p.theta), at(ops(&[Y1]), p.theta_prime, p.theta_prime)])
            }),
        },
        BranchCheck {
            id: "qnd1-pair-flip",
            variant: QndVariant::Qnd1,
            summary: "QND1, one bit-flipped pair: unequal phases (t',t) / (t,t')",
            input: single_pair_flipped,
            expected: Expectation::State(|p| {
                sum([at(ops(&[X1_FLIP]), p.theta_prime, p.theta), at(ops(&[Y1_FLIP]), p.theta, p.theta_prime)])
            }),
        },
        BranchCheck {
            id: "qnd1-double",
            variant: QndVariant::Qnd1,
            summary: "QND1, two uncorrupted pairs: 2t, 2t', and t+t' with coefficient 2",
            input: double_pair,
            expected: Expectation::State(|p| {
                let (t, tp) = (p.theta, p.theta_prime);
                sum([
                    at(ops(&[X1, X1]), t * 2, t * 2),
                    at(ops(&[Y1, Y1]), tp * 2, tp * 2),
                    at(times(ops(&[X1, Y1]), 2.0), t + tp, t + tp),
                ])
            }),
        },
        BranchCheck {
            id: "qnd1-double-one-flip",
            variant: QndVariant::Qnd1,
            summary: "QND1, two pairs with one bit flip: never equal phases",
            input: double_pair_one_flip,
            expected: Expectation::State(|p| {
                let (t, tp) = (p.theta, p.theta_prime);
                sum([
                    at(ops(&[X1, X1_FLIP]), t + tp, t * 2),
                    at(ops(&[X1, Y1_FLIP]), t * 2, t + tp),
                    at(ops(&[Y1, X1_FLIP]), tp * 2, t + tp),
                    at(ops(&[Y1, Y1_FLIP]), t + tp, tp * 2),
                ])
            }),
        },
        BranchCheck {
            id: "qnd1-double-two-flip",
            variant: QndVariant::Qnd1,
            summary: "QND1, two pairs both bit-flipped: (2t,2t'), (2t',2t), and t+t' kept",
            input: double_pair_two_flips,
            expected: Expectation::State(|p| {
                let (t, tp) = (p.theta, p.theta_prime);
                sum([
                    at(ops(&[Y1_FLIP, Y1_FLIP]), t * 2, tp * 2),
                    at(ops(&[X1_FLIP, X1_FLIP]), tp * 2, t * 2),
                    at(times(ops(&[X1_FLIP, Y1_FLIP]), 2.0), t + tp, t + tp),
                ])
            }),
        },
        BranchCheck {
            id: "qnd2-phi-phi",
            variant: QndVariant::Qnd2,
            summary: "QND2 on Phi+ Phi+: HHHH+VVVV at (pi,pi), HHVV at (2pi,2pi), VVHH at (0,0)",
            input: || bell_product(BellState::PhiPlus, BellState::PhiPlus),
            expected: Expectation::State(|_| {
                let pi = PhaseTag::pi();
                sum([
                    at(sum([k4("HHHH"), k4("VVVV")]), pi, pi),
                    at(k4("HHVV"), pi * 2, pi * 2),
                    at(k4("VVHH"), PhaseTag::ZERO, PhaseTag::ZERO),
                ])
            }),
        },
        BranchCheck {
            id: "qnd2-phi-psi",
            variant: QndVariant::Qnd2,
            summary: "QND2 on Phi+ Psi+: only unequal phases",
            input: || bell_product(BellState::PhiPlus, BellState::PsiPlus),
            expected: Expectation::State(|_| {
                let pi = PhaseTag::pi();
                sum([
                    at(sum([k4("HHVH"), k4("VVHV")]), PhaseTag::ZERO, pi),
                    at(k4("HHHV"), pi, pi * 2),
                    at(k4("VVVH"), pi, PhaseTag::ZERO),
                ])
            }),
        },
        BranchCheck {
            id: "qnd2-psi-phi",
            variant: QndVariant::Qnd2,
            summary: "QND2 on Psi+ Phi+: only unequal phases",
            input: || bell_product(BellState::PsiPlus, BellState::PhiPlus),
            expected: Expectation::State(|_| {
                let pi = PhaseTag::pi();
                sum([
                    at(sum([k4("VHHH"), k4("HVVV")]), PhaseTag::ZERO, pi),
                    at(k4("VHVV"), pi, pi * 2),
                    at(k4("HVHH"), pi, PhaseTag::ZERO),
                ])
            }),
        },
        BranchCheck {
            id: "qnd2-psi-psi",
            variant: QndVariant::Qnd2,
            summary: "QND2 on Psi+ Psi+: VHVH+HVHV at (pi,pi), VHHV+HVVH at (0,0)",
            input: || bell_product(BellState::PsiPlus, BellState::PsiPlus),
            expected: Expectation::State(|_| {
                let pi = PhaseTag::pi();
                sum([
                    at(sum([k4("VHVH"), k4("HVHV")]), pi, pi),
                    at(sum([k4("VHHV"), k4("HVVH")]), PhaseTag::ZERO, PhaseTag::ZERO),
                ])
            }),
        },
        BranchCheck {
            id: "qnd3-pair",
            variant: QndVariant::Qnd3,
            summary: "QND3, one uncorrupted pair: path 1 at (t,t), path 2 at (t',t')",
            input: single_pair,
            expected: Expectation::State(|p| {
                sum([
                    at(ops(&["a1H b1H + a1V b1V"]), p.theta, p.theta),
                    at(ops(&["a2V b2V + a2H b2H"]), p.theta_prime, p.theta_prime),
                ])
            }),
        },
        BranchCheck {
            id: "qnd3-pair-flip",
            variant: QndVariant::Qnd3,
            summary: "QND3, one bit-flipped pair: (t,t') / (t',t) with crossed paths",
            input: single_pair_flipped,
            expected: Expectation::State(|p| {
                sum([
                    at(ops(&["a1V b2H + a1H b2V"]), p.theta, p.theta_prime),
                    at(ops(&["a2V b1H + a2H b1V"]), p.theta_prime, p.theta),
                ])
            }),
        },
        BranchCheck {
            id: "qnd3-double",
            variant: QndVariant::Qnd3,
            summary: "QND3, two uncorrupted pairs: four-mode events at t+t'",
            input: double_pair,
            expected: Expectation::State(|p| {
                let (t, tp) = (p.theta, p.theta_prime);
                let upper = "a1V b1V + a1H b1H";
                let lower = "a2H b2H + a2V b2V";
                sum([
                    at(ops(&[upper, upper]), t * 2, t * 2),
                    at(ops(&[lower, lower]), tp * 2, tp * 2),
                    at(times(ops(&[upper, lower]), 2.0), t + tp, t + tp),
                ])
            }),
        },
        BranchCheck {
            id: "qnd3-double-one-flip",
            variant: QndVariant::Qnd3,
            summary: "QND3, two pairs with one bit flip: no (t+t', t+t') readout",
            input: double_pair_one_flip,
            expected: Expectation::Excludes(|p| (p.theta + p.theta_prime, p.theta + p.theta_prime)),
        },
        BranchCheck {
            id: "qnd3-double-two-flip",
            variant: QndVariant::Qnd3,
            summary: "QND3, two pairs both bit-flipped: t+t' branch survives",
            input: double_pair_two_flips,
            expected: Expectation::State(|p| {
                let (t, tp) = (p.theta, p.theta_prime);
                let alice_lower = "a2H b1V + a2V b1H";
                let alice_upper = "a1V b2H + a1H b2V";
                sum([
                    at(ops(&[alice_lower, alice_lower]), tp * 2, t * 2),
                    at(ops(&[alice_upper, alice_upper]), t * 2, tp * 2),
                    at(times(ops(&[alice_upper, alice_lower]), 2.0), t + tp, t + tp),
                ])
            }),
        },
        BranchCheck {
            id: "qnd4-parity",
            variant: QndVariant::Qnd4,
            summary: "QND4 parity check: even parity at 0, odd parity at +t / -t",
            input: || sum([k4("HHHH"), k4("VVVV"), k4("HHVV"), k4("VVHH")]).normalize().expect("non-zero"),
            expected: Expectation::State(|p| {
                let t = p.theta;
                sum([
                    at(sum([k4("HHHH"), k4("VVVV")]), PhaseTag::ZERO, PhaseTag::ZERO),
                    at(k4("HHVV"), t, t),
                    at(k4("VVHH"), -t, -t),
                ])
            }),
        },
    ]
}

impl BranchCheck {
    pub fn input(&self) -> PureState {
        (self.input)()
    }

    /// The hand-written output, normalized (None for exclusion checks).
    pub fn expected(&self, phases: &Phases) -> Option<PureState> {
        match &self.expected {
            Expectation::State(f) => Some(f(phases).normalize().expect("display is non-zero")),
            Expectation::Excludes(_) => None,
        }
    }

    pub fn run(&self, phases: &Phases) -> Result<CheckOutcome> {
        let cfg = phases.config(self.variant)?;
        let output = apply_qnd(&self.input(), &cfg)?.normalize()?;
        let detail = match &self.expected {
            Expectation::State(_) => {
                let expected = self.expected(phases).expect("state expectation");
                first_difference(&output, &expected)
            }
            Expectation::Excludes(f) => {
                let (a, b) = f(phases);
                output
                    .iter()
                    .find(|(k, _)| k.probes.get(Party::Alice) == a && k.probes.get(Party::Bob) == b)
                    .map(|(k, amp)| format!("unexpected branch |{}> at ({a}, {b}) with amplitude {amp}", k.occupation))
            }
        };
        Ok(CheckOutcome { id: self.id, passed: detail.is_none(), detail })
    }
}

fn first_difference(got: &PureState, expected: &PureState) -> Option<String> {
    let keys: BTreeSet<_> = got.iter().chain(expected.iter()).map(|(k, _)| k.clone()).collect();
    keys.into_iter().find_map(|k| {
        let (g, e) = (got.amplitude(&k), expected.amplitude(&k));
        ((g - e).norm() > TERM_TOLERANCE).then(|| {
            format!(
                "|{}> [A:{} B:{}]: simulated {:.12} vs displayed {:.12}",
                k.occupation,
                k.probes.get(Party::Alice),
                k.probes.get(Party::Bob),
                g,
                e
            )
        })
    })
}

/// Runs every check (or those whose id is in `only`).
pub fn run_all(phases: &Phases, only: Option<&str>) -> Result<Vec<CheckOutcome>> {
    catalogue()
        .iter()
        .filter(|c| only.is_none_or(|id| c.id == id))
        .map(|c| c.run(phases))
        .collect()
}
