use kerr_purify::protocol::{
    enumerate_exact, pbs_baseline, stage1_fidelity_closed_form, stage1_run, stage2_iterate, stage2_run, Mode, Pipeline,
    Step, Verdict,
};
use kerr_purify::qnd::{QndConfig, QndVariant};
use kerr_purify::sources::{NoiseParams, PdcSourceParams};
use proptest::prelude::*;

fn exact_stage1(p1: f64, p2: f64, f0: f64, variant: QndVariant) -> kerr_purify::protocol::RunReport {
    stage1_run(PdcSourceParams::new(p1, p2).unwrap(), NoiseParams::new(f0).unwrap(), &QndConfig::new(variant), Mode::Exact)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stage1_matches_closed_form(p1 in 0.0..0.5f64, p2 in 0.001..0.3f64, f0 in 0.0..=1.0f64) {
        let cf = stage1_fidelity_closed_form(p1, p2, f0).unwrap();
        for variant in [QndVariant::Qnd1, QndVariant::Qnd3] {
            let r = exact_stage1(p1, p2, f0, variant);
            prop_assert!((r.fidelity.unwrap() - cf).abs() < 1e-12);
        }
    }

    #[test]
    fn qnd1_and_qnd3_agree(p1 in 0.0..0.5f64, p2 in 0.001..0.3f64, f0 in 0.0..=1.0f64) {
        let (a, b) = (exact_stage1(p1, p2, f0, QndVariant::Qnd1), exact_stage1(p1, p2, f0, QndVariant::Qnd3));
        prop_assert!((a.yield_ - b.yield_).abs() < 1e-12);
        prop_assert!((a.probabilities.kept_pairs - b.probabilities.kept_pairs).abs() < 1e-12);
        prop_assert!((a.probabilities.same_mode_double - b.probabilities.same_mode_double).abs() < 1e-12);
    }

    #[test]
    fn stage2_map_and_pbs_doubling(f in 0.501..=1.0f64) {
        let y = f * f + (1.0 - f) * (1.0 - f);
        let q = stage2_run(f, Mode::Exact).unwrap();
        let b = pbs_baseline(f, Mode::Exact).unwrap();
        prop_assert!((q.fidelity.unwrap() - f * f / y).abs() < 1e-12);
        prop_assert!((q.yield_ - y).abs() < 1e-12);
        prop_assert!((q.yield_ / b.yield_ - 2.0).abs() < 1e-12);
        prop_assert!((q.fidelity.unwrap() - b.fidelity.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn iteration_is_monotone(f in 0.51..0.99f64) {
        let rows = stage2_iterate(f, 3).unwrap();
        let mut prev = f;
        for r in rows {
            prop_assert!(r.fidelity > prev);
            prev = r.fidelity;
        }
    }
}

#[test]
fn enumerated_weights_sum_to_one() {
    let pipelines = [
        Pipeline::Stage1 {
            source: PdcSourceParams::new(0.2, 0.05).unwrap(),
            noise: NoiseParams::new(0.6).unwrap(),
            qnd: QndConfig::new(QndVariant::Qnd1),
        },
        Pipeline::Stage2 { fidelity: 0.8 },
        Pipeline::PbsBaseline { fidelity: 0.65 },
    ];
    for p in pipelines {
        let total: f64 = enumerate_exact(&p).unwrap().iter().map(|r| r.weight).sum();
        assert!((total - 1.0).abs() < 1e-12, "{p:?}: {total}");
    }
}

#[test]
fn kept_single_pairs_are_phi_plus_branch_by_branch() {
    let recs = enumerate_exact(&Pipeline::Stage1 {
        source: PdcSourceParams::new(0.1, 0.01).unwrap(),
        noise: NoiseParams::new(0.7).unwrap(),
        qnd: QndConfig::new(QndVariant::Qnd3),
    })
    .unwrap();
    let singles: Vec<_> = recs.iter().filter(|r| r.steps[0] == Step::Emission { order: 1 }).collect();
    assert!(!singles.is_empty());
    for r in singles {
        assert_eq!(r.verdict, Verdict::KeptCorrect);
        let (a, b) = r.probe_phases().unwrap();
        assert!(a != b || r.steps.contains(&Step::Noise { flips: vec![false] }));
    }
}

#[test]
fn stage2_enumeration_has_four_components() {
    let recs = enumerate_exact(&Pipeline::Stage2 { fidelity: 0.8 }).unwrap();
    let mut comps: Vec<_> = recs.iter().map(|r| format!("{:?}", r.steps[0])).collect();
    comps.sort();
    comps.dedup();
    assert_eq!(comps.len(), 4);
}
