use super::tree::{Leaf, Node, Step};
use super::{Mode, Pipeline, RunReport};
use crate::error::{Result, SimError};
use crate::fock::{Party, Port, PureState, Spatial};
use crate::optics::{coupler, sigma_x};
use crate::phase::PhaseTag;
use crate::qnd::{apply_qnd, QndConfig, QndVariant};
use crate::sources::{noisy_emission, product, BellState, EmissionModel, NoiseParams, PdcSourceParams};

/// Fidelity of kept pairs after the first stage:
/// `(p1 + ½p2·f0²) / (p1 + ½p2·(f0² + (1−f0)²))`.
pub fn stage1_fidelity_closed_form(p1: f64, p2: f64, f0: f64) -> Result<f64> {
    let num = p1 + 0.5 * p2 * f0 * f0;
    let den = p1 + 0.5 * p2 * (f0 * f0 + (1.0 - f0) * (1.0 - f0));
    if den == 0.0 {
        return Err(SimError::DivisionByZero("p1 + p2/2 (f0^2 + (1-f0)^2) = 0"));
    }
    Ok(num / den)
}

/// First-stage purification of down-converted pairs with QND₁ or QND₃.
pub fn stage1_run(source: PdcSourceParams, noise: NoiseParams, qnd: &QndConfig, mode: Mode) -> Result<RunReport> {
    Pipeline::Stage1 { source, noise, qnd: *qnd }.run(mode)
}

/// Φ⁺ on the merged outputs of each listed time bin.
fn merged_target(bins: &[u8]) -> PureState {
    bins.iter()
        .map(|&bin| {
            let port = |party| Port { party, spatial: Spatial::Merged, bin };
            BellState::PhiPlus.on(port(Party::Alice), port(Party::Bob))
        })
        .fold(PureState::vacuum(), |acc, s| product(&acc, &s))
}

fn merge(state: &PureState) -> Result<PureState> {
    coupler(&coupler(state, Party::Alice)?, Party::Bob)
}

/// Readout-only keep rule.
fn decide(qnd: &QndConfig, alice: PhaseTag, bob: PhaseTag, state: PureState) -> Result<Leaf> {
    let (t, tp) = (qnd.theta, qnd.theta_prime);
    let single = |p: PhaseTag| p == t || p == tp;
    if single(alice) && single(bob) {
        let corrected = if alice != bob { sigma_x(&state, Party::Alice) } else { state };
        let out = merge(&corrected)?;
        let f = out.overlap(&merged_target(&[0]));
        return Ok(Leaf::kept(1, f, out));
    }
    if alice == t + tp && bob == t + tp {
        let out = merge(&state)?;
        let f = out.overlap(&merged_target(&[0, 1]));
        return Ok(Leaf::kept(2, f, out));
    }
    let mut leaf = Leaf::discarded(state);
    leaf.same_mode_double = alice == bob && (alice == t * 2 || alice == tp * 2);
    Ok(leaf)
}

/// Alice reads her probe, then Bob reads his; `then` builds the subtree for
/// each pair of readouts from the post-measurement state.
pub(crate) fn readouts(
    state: &PureState,
    mut then: impl FnMut(PhaseTag, PhaseTag, PureState) -> Result<Node>,
) -> Result<Node> {
    let alice = state.probe_distribution(Party::Alice).into_iter().map(|(phase, p)| {
        (p, Step::Readout { party: Party::Alice, phase }, phase)
    });
    Node::chance(alice, |a| {
        let (_, after_a) = state.project_probe(Party::Alice, a)?;
        let bob = after_a.probe_distribution(Party::Bob).into_iter().map(|(phase, p)| {
            (p, Step::Readout { party: Party::Bob, phase }, phase)
        });
        Node::chance(bob, |b| {
            let (_, after_b) = after_a.project_probe(Party::Bob, b)?;
            then(a, b, after_b)
        })
    })
}

pub(crate) fn tree(source: &PdcSourceParams, noise: NoiseParams, qnd: &QndConfig) -> Result<Node> {
    source.validate()?;
    NoiseParams::new(noise.f0)?;
    qnd.validate()?;
    if !matches!(qnd.variant, QndVariant::Qnd1 | QndVariant::Qnd3) {
        return Err(SimError::Config(format!("first stage needs QND1 or QND3, got {:?}", qnd.variant)));
    }
    let (w1, w2) = source.event_weights()?;
    let orders = [(w1, Step::Emission { order: 1 }, 1u8), (w2, Step::Emission { order: 2 }, 2u8)];
    Node::chance(orders, |order| {
        let patterns = noisy_emission(EmissionModel::IndependentPairs, order, noise)?
            .into_iter()
            .map(|(w, flips, state)| (w, Step::Noise { flips }, state));
        Node::chance(patterns, |state| {
            let measured = apply_qnd(&state, qnd)?;
            readouts(&measured, |a, b, s| Ok(Node::Leaf(decide(qnd, a, b, s)?)))
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{enumerate_exact, Verdict};

    fn run(p1: f64, p2: f64, f0: f64, variant: QndVariant) -> RunReport {
        stage1_run(
            PdcSourceParams::new(p1, p2).unwrap(),
            NoiseParams::new(f0).unwrap(),
            &QndConfig::new(variant),
            Mode::Exact,
        )
        .unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let expected = (0.1 + 0.005 * 0.64) / (0.1 + 0.005 * 0.68);
        assert!((stage1_fidelity_closed_form(0.1, 0.01, 0.8).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.998066).abs() < 1e-6);
        assert_eq!(stage1_fidelity_closed_form(0.3, 0.2, 1.0).unwrap(), 1.0);
        let f: f64 = 0.7;
        let map = f * f / (f * f + (1.0 - f) * (1.0 - f));
        assert!((stage1_fidelity_closed_form(0.0, 0.1, f).unwrap() - map).abs() < 1e-15);
        assert!(matches!(stage1_fidelity_closed_form(0.0, 0.0, 0.8), Err(SimError::DivisionByZero(_))));
    }

    #[test]
    fn exact_run_matches_closed_form() {
        for variant in [QndVariant::Qnd1, QndVariant::Qnd3] {
            let r = run(0.1, 0.01, 0.8, variant);
            let cf = stage1_fidelity_closed_form(0.1, 0.01, 0.8).unwrap();
            assert!((r.fidelity.unwrap() - cf).abs() < 1e-12, "{variant:?}");
        }
    }

    #[test]
    fn single_pairs_are_always_kept_and_correct() {
        for f0 in [0.0, 0.3, 0.8, 1.0] {
            let recs = enumerate_exact(&Pipeline::Stage1 {
                source: PdcSourceParams::new(0.2, 0.0).unwrap(),
                noise: NoiseParams::new(f0).unwrap(),
                qnd: QndConfig::new(QndVariant::Qnd1),
            })
            .unwrap();
            assert!(recs.iter().all(|r| r.verdict == Verdict::KeptCorrect));
            assert!(recs.iter().all(|r| (r.final_state.overlap(&merged_target(&[0])) - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn clean_double_emission_kept_half_the_time() {
        let r = run(0.0, 0.1, 1.0, QndVariant::Qnd1);
        assert!((r.yield_ - 0.5).abs() < 1e-12);
        assert_eq!(r.fidelity, Some(1.0));
        assert!((r.probabilities.kept_pairs - 1.0).abs() < 1e-12);
        // 2θ/2θ and 2θ′/2θ′ readouts, a quarter each
        assert!((r.probabilities.same_mode_double - 0.5).abs() < 1e-12);
    }

    #[test]
    fn doubly_flipped_emission_is_kept_erroneous() {
        let r = run(0.0, 0.1, 0.0, QndVariant::Qnd3);
        assert!((r.probabilities.kept_erroneous - 0.5).abs() < 1e-12);
        assert_eq!(r.fidelity, Some(0.0));
    }

    #[test]
    fn weights_sum_to_one() {
        let recs = enumerate_exact(&Pipeline::Stage1 {
            source: PdcSourceParams::new(0.1, 0.02).unwrap(),
            noise: NoiseParams::new(0.7).unwrap(),
            qnd: QndConfig::new(QndVariant::Qnd3),
        })
        .unwrap();
        let total: f64 = recs.iter().map(|r| r.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_other_gadgets() {
        let err = stage1_run(
            PdcSourceParams::new(0.1, 0.01).unwrap(),
            NoiseParams::new(0.8).unwrap(),
            &QndConfig::new(QndVariant::Qnd2),
            Mode::Exact,
        );
        assert!(matches!(err, Err(SimError::Config(_))));
    }
}
