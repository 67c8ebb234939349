//! Pair sources and bit-flip noise.
//!
//! A down-conversion source with equal path weights and zero relative phase
//! emits the pair operator `P = a₁H†b₁H† + a₁V†b₁V† + a₂H†b₂H† + a₂V†b₂V†`.
//! Double emissions are modeled two ways:
//!
//! * [`EmissionModel::SingleMode`]: `P²|0⟩` in one time bin, with bosonic
//!   enhancement of doubly occupied modes.
//! * [`EmissionModel::IndependentPairs`]: one `P` per time bin. The two pairs
//!   are distinguishable, which is what per-pair noise presumes; the
//!   purification pipeline uses this model.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::fock::{EnsembleState, ModeLabel, Party, Polarization, Port, PureState, Spatial};
use crate::optics::{sigma_x, Selector};

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct PdcSourceParams {
    /// Probability of a one-pair emission.
    pub p1: f64,
    /// Probability of a two-pair emission.
    pub p2: f64,
}

impl PdcSourceParams {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        let params = PdcSourceParams { p1, p2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !ok(self.p1) || !ok(self.p2) || self.p1 + self.p2 > 1.0 + 1e-15 {
            return Err(SimError::InvalidParameter(format!(
                "need p1, p2 >= 0 and p1 + p2 <= 1 (got p1 = {}, p2 = {})",
                self.p1, self.p2
            )));
        }
        Ok(())
    }

    /// Relative weights of one- and two-pair events among non-vacuum events.
    pub fn event_weights(&self) -> Result<(f64, f64)> {
        let total = self.p1 + self.p2;
        if total <= 0.0 {
            return Err(SimError::DivisionByZero("p1 + p2 = 0: no non-vacuum emissions"));
        }
        Ok((self.p1 / total, self.p2 / total))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct NoiseParams {
    /// Probability that a pair arrives without a bit flip.
    pub f0: f64,
}

impl NoiseParams {
    pub fn new(f0: f64) -> Result<Self> {
        if !f0.is_finite() || !(0.0..=1.0).contains(&f0) {
            return Err(SimError::InvalidParameter(format!("f0 must lie in [0, 1], got {f0}")));
        }
        Ok(NoiseParams { f0 })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EmissionModel {
    SingleMode,
    IndependentPairs,
}

/// The four terms `(Alice mode, Bob mode)` of one pair operator in time bin
/// `bin`; `flipped` applies a bit flip to Bob's photon.
pub fn pair_terms(flipped: bool, bin: u8) -> [(ModeLabel, ModeLabel); 4] {
    let term = |s: Spatial, p: Polarization| {
        let bob_pol = if flipped { p.flipped() } else { p };
        (
            ModeLabel::new(Party::Alice, s, p).in_bin(bin),
            ModeLabel::new(Party::Bob, s, bob_pol).in_bin(bin),
        )
    };
    [
        term(Spatial::Upper, Polarization::H),
        term(Spatial::Upper, Polarization::V),
        term(Spatial::Lower, Polarization::H),
        term(Spatial::Lower, Polarization::V),
    ]
}

/// Applies `Σ_terms a†b†` to `state` (unnormalized).
pub fn apply_pair_operator(state: &PureState, terms: &[(ModeLabel, ModeLabel)]) -> PureState {
    terms
        .iter()
        .map(|(a, b)| state.create_photon(*a).create_photon(*b))
        .fold(PureState::empty(), |acc, s| acc.plus(&s))
}

/// Normalized emission of `flips.len()` pairs; pair `k` is bit-flipped iff
/// `flips[k]`.
pub fn emission(model: EmissionModel, flips: &[bool]) -> Result<PureState> {
    if flips.is_empty() {
        return Ok(PureState::vacuum());
    }
    let mut state = PureState::vacuum();
    for (k, flipped) in flips.iter().enumerate() {
        let bin = match model {
            EmissionModel::SingleMode => 0,
            EmissionModel::IndependentPairs => k as u8,
        };
        state = apply_pair_operator(&state, &pair_terms(*flipped, bin));
    }
    state.normalize()
}

/// Single-mode down-conversion output of the given order (1 or 2 pairs).
pub fn pdc_emit(order: u8) -> Result<PureState> {
    match order {
        1 | 2 => emission(EmissionModel::SingleMode, &vec![false; order as usize]),
        _ => Err(SimError::InvalidParameter(format!("emission order must be 1 or 2, got {order}"))),
    }
}

/// Identifies one pair for channel noise: a time bin (down-conversion
/// emissions) or a path (two-source ensembles, pair 1 on path 1).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PairSlot {
    Bin(u8),
    Path(Spatial),
}

impl PairSlot {
    fn bob(self) -> Selector {
        let s = Selector::party(Party::Bob);
        match self {
            PairSlot::Bin(b) => s.bin(b),
            PairSlot::Path(p) => s.spatial(p),
        }
    }
}

/// Channel bit flip on Bob's photon of one pair: `{(f0, ψ), (1−f0, σx ψ)}`.
pub fn apply_bitflip_noise(state: &PureState, noise: NoiseParams, pair: PairSlot) -> EnsembleState {
    apply_bitflip_noise_ensemble(&EnsembleState::pure(state.clone()), noise, pair)
}

pub fn apply_bitflip_noise_ensemble(ens: &EnsembleState, noise: NoiseParams, pair: PairSlot) -> EnsembleState {
    let bob = pair.bob();
    ens.flat_map(|s| {
        let mut comps = Vec::with_capacity(2);
        if noise.f0 > 0.0 {
            comps.push((noise.f0, s.clone()));
        }
        if noise.f0 < 1.0 {
            comps.push((1.0 - noise.f0, sigma_x(s, bob)));
        }
        EnsembleState::new(comps).expect("two-outcome channel weights sum to one")
    })
}

/// A noisy emission as a mixture over flip patterns, with independent flips
/// per pair. Components are ordered by flip pattern (no flips first).
pub fn noisy_emission(model: EmissionModel, order: u8, noise: NoiseParams) -> Result<Vec<(f64, Vec<bool>, PureState)>> {
    if !(1..=2).contains(&order) {
        return Err(SimError::InvalidParameter(format!("emission order must be 1 or 2, got {order}")));
    }
    let n = order as usize;
    let mut out = Vec::with_capacity(1 << n);
    for pattern in 0..(1u32 << n) {
        let flips: Vec<bool> = (0..n).map(|k| pattern >> (n - 1 - k) & 1 == 1).collect();
        let weight: f64 = flips.iter().map(|f| if *f { 1.0 - noise.f0 } else { noise.f0 }).product();
        if weight > 0.0 {
            out.push((weight, flips.clone(), emission(model, &flips)?));
        }
    }
    Ok(out)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    /// The Bell state between `alice` and `bob`.
    pub fn on(self, alice: Port, bob: Port) -> PureState {
        use Polarization::{H, V};
        let pair = |pa, pb| PureState::vacuum().create_photon(alice.mode(pa)).create_photon(bob.mode(pb));
        let (first, second, sign) = match self {
            BellState::PhiPlus => (pair(H, H), pair(V, V), 1.0),
            BellState::PhiMinus => (pair(H, H), pair(V, V), -1.0),
            BellState::PsiPlus => (pair(H, V), pair(V, H), 1.0),
            BellState::PsiMinus => (pair(H, V), pair(V, H), -1.0),
        };
        first.plus(&second.scaled(Complex64::new(sign, 0.0))).normalize().expect("Bell state is non-zero")
    }

    /// The Bell state on path `spatial` of both parties (bin 0).
    pub fn on_path(self, spatial: Spatial) -> PureState {
        self.on(Port::new(Party::Alice, spatial), Port::new(Party::Bob, spatial))
    }
}

/// Tensor product of states on disjoint modes.
pub fn product(a: &PureState, b: &PureState) -> PureState {
    let mut branches = Vec::new();
    for x in a.branches() {
        for y in b.branches() {
            let mut occ: Vec<_> = x.occupation.iter().collect();
            occ.extend(y.occupation.iter());
            branches.push(crate::fock::BranchState {
                occupation: occ.into_iter().collect(),
                probes: crate::fock::Probes::new(
                    x.probes.get(Party::Alice) + y.probes.get(Party::Alice),
                    x.probes.get(Party::Bob) + y.probes.get(Party::Bob),
                ),
                amplitude: x.amplitude * y.amplitude,
            });
        }
    }
    PureState::from_branches(branches)
}

/// `ρ = F|Φ⁺⟩⟨Φ⁺| + (1−F)|Ψ⁺⟩⟨Ψ⁺|` per pair, for one pair (path 1) or two
/// pairs (paths 1 and 2). Two-pair components are ordered ΦΦ, ΦΨ, ΨΦ, ΨΨ.
pub fn ideal_mixed_pairs(fidelity: f64, pairs: u8) -> Result<EnsembleState> {
    EnsembleState::new(ideal_mixed_pairs_labeled(fidelity, pairs)?.into_iter().map(|(w, _, s)| (w, s)).collect())
}

/// Same as [`ideal_mixed_pairs`], with each component's Bell labels.
pub fn ideal_mixed_pairs_labeled(fidelity: f64, pairs: u8) -> Result<Vec<(f64, Vec<BellState>, PureState)>> {
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(SimError::InvalidParameter(format!("fidelity must lie in (0, 1], got {fidelity}")));
    }
    let options = [(fidelity, BellState::PhiPlus), (1.0 - fidelity, BellState::PsiPlus)];
    match pairs {
        1 => Ok(options
            .iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, b)| (*w, vec![*b], b.on_path(Spatial::Upper)))
            .collect()),
        2 => {
            let mut out = Vec::with_capacity(4);
            for (w1, b1) in options {
                for (w2, b2) in options {
                    if w1 * w2 > 0.0 {
                        out.push((w1 * w2, vec![b1, b2], product(&b1.on_path(Spatial::Upper), &b2.on_path(Spatial::Lower))));
                    }
                }
            }
            Ok(out)
        }
        _ => Err(SimError::InvalidParameter(format!("pair count must be 1 or 2, got {pairs}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::modes;
    use std::collections::BTreeMap;

    fn ket(names: &str) -> PureState {
        PureState::vacuum().create_photons(&modes(names))
    }

    #[test]
    fn single_pair_is_uniform() {
        let s = pdc_emit(1).unwrap();
        assert_eq!(s.len(), 4);
        for b in s.branches() {
            assert!((b.amplitude.re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_pair_factorizes_into_path_and_polarization() {
        // (|a1 b1⟩ + |a2 b2⟩)(|HH⟩ + |VV⟩)/2
        let mut expected = PureState::empty();
        for path in ["1", "2"] {
            for pol in ["H", "V"] {
                expected = expected.plus(&ket(&format!("a{path}{pol} b{path}{pol}")));
            }
        }
        let expected = expected.scaled(Complex64::new(0.5, 0.0));
        assert_eq!(pdc_emit(1).unwrap(), expected);
    }

    /// Brute-force oracle: multiply out (Σ_i x_i)² as a polynomial in commuting
    /// creation operators, then apply to vacuum with √(n!) per mode.
    fn squared_operator_oracle() -> BTreeMap<Vec<(String, u32)>, f64> {
        let terms = [["a1H", "b1H"], ["a1V", "b1V"], ["a2H", "b2H"], ["a2V", "b2V"]];
        let mut poly: BTreeMap<BTreeMap<String, u32>, f64> = BTreeMap::new();
        for t1 in &terms {
            for t2 in &terms {
                let mut mono = BTreeMap::new();
                for m in t1.iter().chain(t2.iter()) {
                    *mono.entry(m.to_string()).or_insert(0) += 1;
                }
                *poly.entry(mono).or_insert(0.0) += 1.0;
            }
        }
        let norm: f64 = poly
            .iter()
            .map(|(mono, c)| {
                let f: f64 = mono.values().map(|n| (1..=*n).product::<u32>() as f64).product();
                c * c * f
            })
            .sum();
        poly.into_iter()
            .map(|(mono, c)| {
                let f: f64 = mono.values().map(|n| (1..=*n).product::<u32>() as f64).product();
                (mono.into_iter().collect(), c * c * f / norm)
            })
            .collect()
    }

    #[test]
    fn double_pair_matches_polynomial_oracle() {
        let oracle = squared_operator_oracle();
        assert_eq!(oracle.len(), 10);
        let s = pdc_emit(2).unwrap();
        assert_eq!(s.len(), 10);
        for b in s.branches() {
            let key: Vec<(String, u32)> = b.occupation.iter().map(|(m, n)| (m.to_string(), n)).collect();
            let p = oracle[&key];
            assert!((b.amplitude.norm_sqr() - p).abs() < 1e-12, "{key:?}");
        }
        // every pattern, doubled or cross, carries probability 1/10
        for p in oracle.values() {
            assert!((p - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_pairs_occupy_two_bins() {
        let s = emission(EmissionModel::IndependentPairs, &[false, false]).unwrap();
        assert_eq!(s.len(), 16);
        for b in s.branches() {
            assert!((b.amplitude.norm_sqr() - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_limits() {
        let s = pdc_emit(1).unwrap();
        let clean = apply_bitflip_noise(&s, NoiseParams::new(1.0).unwrap(), PairSlot::Bin(0));
        assert_eq!(clean.components(), &[(1.0, s.clone())]);
        let flipped = apply_bitflip_noise(&s, NoiseParams::new(0.0).unwrap(), PairSlot::Bin(0));
        assert_eq!(flipped.len(), 1);
        assert_eq!(flipped.components()[0].1, emission(EmissionModel::SingleMode, &[true]).unwrap());
    }

    #[test]
    fn independent_noise_on_two_pairs() {
        let f0 = 0.8;
        let noise = NoiseParams::new(f0).unwrap();
        let s = emission(EmissionModel::IndependentPairs, &[false, false]).unwrap();
        let ens = apply_bitflip_noise_ensemble(&apply_bitflip_noise(&s, noise, PairSlot::Bin(0)), noise, PairSlot::Bin(1));
        let weights: Vec<f64> = ens.components().iter().map(|(w, _)| *w).collect();
        let expected = [f0 * f0, f0 * (1.0 - f0), (1.0 - f0) * f0, (1.0 - f0) * (1.0 - f0)];
        for (w, e) in weights.iter().zip(expected) {
            assert!((w - e).abs() < 1e-15);
        }
        // channel noise equals building the emission from flipped pair operators
        let direct = noisy_emission(EmissionModel::IndependentPairs, 2, noise).unwrap();
        for ((w, s), (v, _, t)) in ens.components().iter().zip(&direct) {
            assert!((w - v).abs() < 1e-15);
            assert!((s.overlap(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_pair_weights() {
        let e = ideal_mixed_pairs(1.0, 1).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e.components()[0].1.overlap(&BellState::PhiPlus.on_path(Spatial::Upper)) - 1.0).abs() < 1e-12);

        let e = ideal_mixed_pairs(0.8, 2).unwrap();
        let w: Vec<f64> = e.components().iter().map(|(w, _)| *w).collect();
        for (a, b) in w.iter().zip([0.64, 0.16, 0.16, 0.04]) {
            assert!((a - b).abs() < 1e-12);
        }
        let e = ideal_mixed_pairs(0.5, 2).unwrap();
        assert!(e.components().iter().all(|(w, _)| (w - 0.25).abs() < 1e-15));
        assert!(ideal_mixed_pairs(0.0, 2).is_err());
        assert!(ideal_mixed_pairs(1.2, 1).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(PdcSourceParams::new(0.6, 0.5).is_err());
        assert!(PdcSourceParams::new(-0.1, 0.0).is_err());
        assert!(PdcSourceParams::new(0.0, 0.0).unwrap().event_weights().is_err());
        assert!(NoiseParams::new(1.2).is_err());
        assert!(pdc_emit(3).is_err());
    }
}
