//! Sparse multi-mode Fock states with per-party probe phase registers.
//!
//! A [`PureState`] is a map from basis keys (photon occupations plus the
//! accumulated probe phase of each party) to complex amplitudes. Keys are kept
//! in a `BTreeMap`, so two states built in different orders compare equal.
//! Coherent probe beams are not expanded; each party's probe is a single
//! exact [`PhaseTag`] accumulator.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::phase::PhaseTag;

/// Amplitudes below this magnitude are treated as round-off and dropped.
pub const PRUNE_EPS: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub const BOTH: [Party; 2] = [Party::Alice, Party::Bob];

    fn index(self) -> usize {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Spatial {
    /// Path 1 (`a₁`, `b₁`).
    Upper,
    /// Path 2 (`a₂`, `b₂`).
    Lower,
    /// Coupler output.
    Merged,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

/// A spatial port irrespective of polarization.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Port {
    pub party: Party,
    pub spatial: Spatial,
    pub bin: u8,
}

impl Port {
    pub fn new(party: Party, spatial: Spatial) -> Self {
        Port { party, spatial, bin: 0 }
    }

    pub fn mode(self, polarization: Polarization) -> ModeLabel {
        ModeLabel { party: self.party, spatial: self.spatial, polarization, bin: self.bin }
    }
}

/// One optical mode. `bin` separates temporally distinguishable emissions;
/// single-emission states live entirely in bin 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModeLabel {
    pub party: Party,
    pub spatial: Spatial,
    pub polarization: Polarization,
    pub bin: u8,
}

impl ModeLabel {
    pub fn new(party: Party, spatial: Spatial, polarization: Polarization) -> Self {
        ModeLabel { party, spatial, polarization, bin: 0 }
    }

    pub fn in_bin(self, bin: u8) -> Self {
        ModeLabel { bin, ..self }
    }

    pub fn port(self) -> Port {
        Port { party: self.party, spatial: self.spatial, bin: self.bin }
    }

    pub fn with_polarization(self, polarization: Polarization) -> Self {
        ModeLabel { polarization, ..self }
    }

    pub fn with_spatial(self, spatial: Spatial) -> Self {
        ModeLabel { spatial, ..self }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.party {
            Party::Alice => 'a',
            Party::Bob => 'b',
        };
        let s = match self.spatial {
            Spatial::Upper => "1",
            Spatial::Lower => "2",
            Spatial::Merged => "",
        };
        write!(f, "{p}{s}{:?}", self.polarization)?;
        if self.bin != 0 {
            write!(f, "#{}", self.bin)?;
        }
        Ok(())
    }
}

/// Photon numbers of the occupied modes (zero entries are never stored).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(BTreeMap<ModeLabel, u32>);

impl Occupation {
    pub fn get(&self, mode: ModeLabel) -> u32 {
        self.0.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeLabel, u32)> + '_ {
        self.0.iter().map(|(m, n)| (*m, *n))
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeLabel> + '_ {
        self.0.keys().copied()
    }

    pub fn at_port(&self, port: Port) -> u32 {
        self.get(port.mode(Polarization::H)) + self.get(port.mode(Polarization::V))
    }

    /// Photons held by `party`, optionally restricted to one spatial path.
    pub fn count_where(&self, pred: impl Fn(ModeLabel) -> bool) -> u32 {
        self.iter().filter(|(m, _)| pred(*m)).map(|(_, n)| n).sum()
    }

    fn add(&mut self, mode: ModeLabel, n: u32) {
        if n > 0 {
            *self.0.entry(mode).or_insert(0) += n;
        }
    }

    fn remove_one(&mut self, mode: ModeLabel) {
        if let Some(n) = self.0.get_mut(&mode) {
            *n -= 1;
            if *n == 0 {
                self.0.remove(&mode);
            }
        }
    }

    fn factorial_product(&self) -> f64 {
        self.0.values().map(|&n| factorial(n)).product()
    }
}

impl FromIterator<(ModeLabel, u32)> for Occupation {
    fn from_iter<I: IntoIterator<Item = (ModeLabel, u32)>>(iter: I) -> Self {
        let mut occ = Occupation::default();
        for (m, n) in iter {
            occ.add(m, n);
        }
        occ
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "vac");
        }
        let mut first = true;
        for (m, n) in self.iter() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if n == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{m}^{n}")?;
            }
        }
        Ok(())
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Accumulated probe phase of each party.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Probes([PhaseTag; 2]);

impl Probes {
    pub fn new(alice: PhaseTag, bob: PhaseTag) -> Self {
        Probes([alice, bob])
    }

    pub fn get(&self, party: Party) -> PhaseTag {
        self.0[party.index()]
    }

    pub fn shifted(mut self, party: Party, by: PhaseTag) -> Self {
        self.0[party.index()] = self.0[party.index()] + by;
        self
    }

    pub fn reset(mut self, party: Party) -> Self {
        self.0[party.index()] = PhaseTag::ZERO;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchKey {
    pub occupation: Occupation,
    pub probes: Probes,
}

/// One coherent branch: a Fock basis vector, probe phases, and an amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchState {
    pub occupation: Occupation,
    pub probes: Probes,
    pub amplitude: Complex64,
}

/// A superposition of branches. Branches with equal keys are merged on insert.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PureState {
    branches: BTreeMap<BranchKey, Complex64>,
}

impl PureState {
    pub fn vacuum() -> Self {
        let mut branches = BTreeMap::new();
        branches.insert(
            BranchKey { occupation: Occupation::default(), probes: Probes::default() },
            Complex64::new(1.0, 0.0),
        );
        PureState { branches }
    }

    /// The zero vector (no branches).
    pub fn empty() -> Self {
        PureState::default()
    }

    pub fn from_branches(branches: impl IntoIterator<Item = BranchState>) -> Self {
        let mut out = BTreeMap::new();
        for b in branches {
            accumulate(&mut out, BranchKey { occupation: b.occupation, probes: b.probes }, b.amplitude);
        }
        PureState::pruned(out)
    }

    fn pruned(mut branches: BTreeMap<BranchKey, Complex64>) -> Self {
        branches.retain(|_, a| a.norm() >= PRUNE_EPS);
        PureState { branches }
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BranchKey, Complex64)> + '_ {
        self.branches.iter().map(|(k, a)| (k, *a))
    }

    pub fn branches(&self) -> impl Iterator<Item = BranchState> + '_ {
        self.branches.iter().map(|(k, a)| BranchState {
            occupation: k.occupation.clone(),
            probes: k.probes,
            amplitude: *a,
        })
    }

    pub fn amplitude(&self, key: &BranchKey) -> Complex64 {
        self.branches.get(key).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-10
    }

    /// Total photon number per branch, if all branches agree.
    pub fn photon_number(&self) -> Option<u32> {
        let mut it = self.branches.keys().map(|k| k.occupation.total());
        let first = it.next()?;
        it.all(|n| n == first).then_some(first)
    }

    /// Applies the creation operator of `mode` to every branch (bosonic
    /// `√(n+1)` factor). The result is not renormalized.
    pub fn create_photon(&self, mode: ModeLabel) -> PureState {
        let mut out = BTreeMap::new();
        for (k, a) in &self.branches {
            let n = k.occupation.get(mode);
            let mut occ = k.occupation.clone();
            occ.add(mode, 1);
            accumulate(&mut out, BranchKey { occupation: occ, probes: k.probes }, a * f64::from(n + 1).sqrt());
        }
        PureState::pruned(out)
    }

    /// Applies a product of creation operators (left to right).
    pub fn create_photons(&self, modes: &[ModeLabel]) -> PureState {
        modes.iter().fold(self.clone(), |s, m| s.create_photon(*m))
    }

    pub fn normalize(&self) -> Result<PureState> {
        let n = self.norm_sqr();
        if self.branches.is_empty() || n <= PRUNE_EPS * PRUNE_EPS {
            return Err(SimError::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> PureState {
        PureState::pruned(self.branches.iter().map(|(k, a)| (k.clone(), a * c)).collect())
    }

    /// Vector sum of two states.
    pub fn plus(&self, other: &PureState) -> PureState {
        let mut out = self.branches.clone();
        for (k, a) in &other.branches {
            accumulate(&mut out, k.clone(), *a);
        }
        PureState::pruned(out)
    }

    /// `⟨self|other⟩`, including the probe registers in the basis.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.branches
            .iter()
            .filter_map(|(k, a)| other.branches.get(k).map(|b| a.conj() * b))
            .sum()
    }

    /// `|⟨target|self⟩|²`.
    pub fn overlap(&self, target: &PureState) -> f64 {
        target.inner(self).norm_sqr()
    }

    /// Distinct phases of `party`'s probe, with their probabilities.
    pub fn probe_distribution(&self, party: Party) -> BTreeMap<PhaseTag, f64> {
        let mut dist = BTreeMap::new();
        for (k, a) in &self.branches {
            *dist.entry(k.probes.get(party)).or_insert(0.0) += a.norm_sqr();
        }
        dist
    }

    /// Projects `party`'s probe onto the exact phase `outcome`, resetting that
    /// probe register to zero. Returns the outcome probability and the
    /// renormalized post-measurement state.
    pub fn project_probe(&self, party: Party, outcome: PhaseTag) -> Result<(f64, PureState)> {
        self.project_probe_where(party, |p| p == outcome)
    }

    pub(crate) fn project_probe_where(
        &self,
        party: Party,
        keep: impl Fn(PhaseTag) -> bool,
    ) -> Result<(f64, PureState)> {
        let mut out = BTreeMap::new();
        for (k, a) in &self.branches {
            if keep(k.probes.get(party)) {
                let key = BranchKey { occupation: k.occupation.clone(), probes: k.probes.reset(party) };
                accumulate(&mut out, key, *a);
            }
        }
        let kept = PureState::pruned(out);
        let p = kept.norm_sqr() / self.norm_sqr();
        let state = kept.normalize()?;
        Ok((p, state))
    }

    /// Keeps branches whose occupation satisfies `keep`; returns the
    /// probability of that event and the renormalized state.
    pub fn postselect(&self, keep: impl Fn(&Occupation) -> bool) -> Result<(f64, PureState)> {
        let kept = PureState::pruned(
            self.branches.iter().filter(|(k, _)| keep(&k.occupation)).map(|(k, a)| (k.clone(), *a)).collect(),
        );
        let p = kept.norm_sqr() / self.norm_sqr();
        Ok((p, kept.normalize()?))
    }

    /// Multiplies each branch amplitude by `factor(key)`.
    pub fn map_amplitudes(&self, factor: impl Fn(&BranchKey) -> Complex64) -> PureState {
        PureState::pruned(self.branches.iter().map(|(k, a)| (k.clone(), a * factor(k))).collect())
    }

    /// Rewrites the probe registers of each branch.
    pub fn map_probes(&self, f: impl Fn(&Occupation, Probes) -> Probes) -> PureState {
        let mut out = BTreeMap::new();
        for (k, a) in &self.branches {
            let key = BranchKey { occupation: k.occupation.clone(), probes: f(&k.occupation, k.probes) };
            accumulate(&mut out, key, *a);
        }
        PureState::pruned(out)
    }

    /// Applies a linear transformation of creation operators,
    /// `a†_m → Σ_j u_{mj} a†_j`, to every branch. Any passive linear optical
    /// element (or mode relabeling) is an instance.
    pub fn transform_modes(&self, map: impl Fn(ModeLabel) -> Vec<(ModeLabel, Complex64)>) -> PureState {
        let mut cache: BTreeMap<ModeLabel, Vec<(ModeLabel, Complex64)>> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for (k, a) in &self.branches {
            let mut poly: BTreeMap<Occupation, Complex64> = BTreeMap::new();
            poly.insert(Occupation::default(), a / k.occupation.factorial_product().sqrt());
            for (mode, n) in k.occupation.iter() {
                let image = cache.entry(mode).or_insert_with(|| map(mode)).clone();
                for _ in 0..n {
                    let mut next = BTreeMap::new();
                    for (occ, c) in &poly {
                        for (target, u) in &image {
                            let mut o = occ.clone();
                            o.add(*target, 1);
                            *next.entry(o).or_insert(Complex64::new(0.0, 0.0)) += c * u;
                        }
                    }
                    poly = next;
                }
            }
            for (occ, c) in poly {
                let amp = c * occ.factorial_product().sqrt();
                accumulate(&mut out, BranchKey { occupation: occ, probes: k.probes }, amp);
            }
        }
        PureState::pruned(out)
    }

    /// Permutes modes according to `f` (a one-to-one relabeling).
    pub fn relabel(&self, f: impl Fn(ModeLabel) -> ModeLabel) -> PureState {
        self.transform_modes(|m| vec![(f(m), Complex64::new(1.0, 0.0))])
    }

    /// Removes one photon from `mode` in every branch, weighting by
    /// `coefficient(branch)`. Branches without a photon there are dropped.
    pub(crate) fn absorb_photon(
        &self,
        port: Port,
        coefficient: impl Fn(Polarization) -> Complex64,
    ) -> PureState {
        let mut out = BTreeMap::new();
        for (k, a) in &self.branches {
            for pol in [Polarization::H, Polarization::V] {
                let mode = port.mode(pol);
                if k.occupation.get(mode) == 1 {
                    let mut occ = k.occupation.clone();
                    occ.remove_one(mode);
                    accumulate(&mut out, BranchKey { occupation: occ, probes: k.probes }, a * coefficient(pol));
                }
            }
        }
        PureState::pruned(out)
    }
}

fn accumulate(map: &mut BTreeMap<BranchKey, Complex64>, key: BranchKey, amp: Complex64) {
    *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += amp;
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.branches.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, a)) in self.branches.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "({:+.6}{:+.6}i) |{}> [A:{} B:{}]",
                a.re,
                a.im,
                k.occupation,
                k.probes.get(Party::Alice),
                k.probes.get(Party::Bob)
            )?;
        }
        Ok(())
    }
}

/// A weighted mixture of pure states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnsembleState {
    components: Vec<(f64, PureState)>,
}

impl EnsembleState {
    pub fn pure(state: PureState) -> Self {
        EnsembleState { components: vec![(1.0, state)] }
    }

    /// Builds a mixture; zero-weight components are dropped. Weights must be
    /// non-negative and sum to one within `1e-10`.
    pub fn new(components: Vec<(f64, PureState)>) -> Result<Self> {
        if components.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(SimError::InvalidParameter("ensemble weights must be non-negative".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(SimError::InvalidParameter(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(EnsembleState { components: components.into_iter().filter(|(w, _)| *w > 0.0).collect() })
    }

    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }

    /// `⟨target|ρ|target⟩`.
    pub fn overlap(&self, target: &PureState) -> f64 {
        self.components.iter().map(|(w, s)| w * s.overlap(target)).sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        let mut p = 0.0;
        for (wi, si) in &self.components {
            for (wj, sj) in &self.components {
                p += wi * wj * si.inner(sj).norm_sqr();
            }
        }
        p
    }

    /// Applies `op` to every component, keeping weights.
    pub fn map(&self, op: impl Fn(&PureState) -> PureState) -> EnsembleState {
        EnsembleState { components: self.components.iter().map(|(w, s)| (*w, op(s))).collect() }
    }

    /// Replaces each component by a sub-ensemble, multiplying weights.
    pub fn flat_map(&self, op: impl Fn(&PureState) -> EnsembleState) -> EnsembleState {
        let mut components = Vec::new();
        for (w, s) in &self.components {
            for (v, t) in op(s).components {
                components.push((w * v, t));
            }
        }
        EnsembleState { components }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{mode, random_state};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_creation_on_vacuum() {
        let s = PureState::vacuum().create_photon(mode("a1H"));
        assert_eq!(s.len(), 1);
        let b = s.branches().next().unwrap();
        assert_eq!(b.occupation.get(mode("a1H")), 1);
        assert!((b.amplitude - c(1.0)).norm() < EPS);
    }

    #[test]
    fn second_creation_carries_sqrt_two() {
        let s = PureState::vacuum().create_photon(mode("a1H")).create_photon(mode("a1H"));
        let b = s.branches().next().unwrap();
        assert_eq!(b.occupation.get(mode("a1H")), 2);
        assert!((b.amplitude - c(2f64.sqrt())).norm() < EPS);
    }

    #[test]
    fn normalize_examples() {
        let s = PureState::vacuum().scaled(c(3.0)).normalize().unwrap();
        assert!((s.branches().next().unwrap().amplitude - c(1.0)).norm() < EPS);

        let two = PureState::vacuum().create_photon(mode("a1H")).plus(&PureState::vacuum().create_photon(mode("a1V")));
        let n = two.normalize().unwrap();
        for b in n.branches() {
            assert!((b.amplitude - c(0.5f64.sqrt())).norm() < EPS);
        }

        let cancel = PureState::vacuum().plus(&PureState::vacuum().scaled(c(-1.0)));
        assert_eq!(cancel.normalize(), Err(SimError::ZeroNorm));
    }

    #[test]
    fn uniform_probe_projection_is_certain() {
        let s = PureState::vacuum().create_photon(mode("a1H"));
        let (p, t) = s.project_probe(Party::Alice, PhaseTag::ZERO).unwrap();
        assert!((p - 1.0).abs() < EPS);
        assert_eq!(t, s);
        assert_eq!(s.project_probe(Party::Alice, PhaseTag::pi()).unwrap_err(), SimError::ZeroNorm);
    }

    #[test]
    fn relabel_merges_colliding_branches() {
        let s = PureState::vacuum()
            .create_photon(mode("a1H"))
            .plus(&PureState::vacuum().create_photon(mode("a2H")))
            .normalize()
            .unwrap();
        let merged = s.relabel(|m| m.with_spatial(Spatial::Merged));
        assert_eq!(merged.len(), 1);
        assert!((merged.norm_sqr() - 2.0).abs() < EPS);
    }

    #[test]
    fn transform_is_linear_on_two_photons() {
        // a† → (a† + b†)/√2 on |2⟩ gives (|2,0⟩ + √2|1,1⟩ + |0,2⟩)/2
        let h = mode("a1H");
        let v = mode("a1V");
        let s = PureState::vacuum().create_photons(&[h, h]).normalize().unwrap();
        let r = 0.5f64.sqrt();
        let t = s.transform_modes(|m| if m == h { vec![(h, c(r)), (v, c(r))] } else { vec![(m, c(1.0))] });
        assert!((t.norm_sqr() - 1.0).abs() < EPS);
        let amp = |occ: Occupation| t.amplitude(&BranchKey { occupation: occ, probes: Probes::default() });
        assert!((amp([(h, 2)].into_iter().collect()) - c(0.5)).norm() < EPS);
        assert!((amp([(h, 1), (v, 1)].into_iter().collect()) - c(r)).norm() < EPS);
        assert!((amp([(v, 2)].into_iter().collect()) - c(0.5)).norm() < EPS);
    }

    #[test]
    fn ensemble_weights_validated() {
        assert!(EnsembleState::new(vec![(0.5, PureState::vacuum())]).is_err());
        assert!(EnsembleState::new(vec![(-0.5, PureState::vacuum()), (1.5, PureState::vacuum())]).is_err());
        let e = EnsembleState::new(vec![(0.25, PureState::vacuum()), (0.75, PureState::vacuum())]).unwrap();
        assert!((e.purity() - 1.0).abs() < EPS);
    }

    proptest! {
        #[test]
        fn creation_adds_exactly_one_photon(seed in any::<u64>(), m in 0usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(&mut rng, 4);
            let target = crate::testkit::bin0_modes()[m];
            let t = s.create_photon(target);
            for (k, _) in t.iter() {
                prop_assert!(k.occupation.get(target) >= 1);
            }
            if let (Some(a), Some(b)) = (s.photon_number(), t.photon_number()) {
                prop_assert_eq!(a + 1, b);
            }
        }

        #[test]
        fn normalize_is_idempotent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(&mut rng, 4).scaled(c(2.5));
            let n1 = s.normalize().unwrap();
            let n2 = n1.normalize().unwrap();
            prop_assert!((n1.norm_sqr() - 1.0).abs() < 1e-10);
            for (k, a) in n1.iter() {
                prop_assert!((a - n2.amplitude(k)).norm() < 1e-12);
            }
        }

        #[test]
        fn probe_outcomes_sum_to_one(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(&mut rng, 4);
            for party in Party::BOTH {
                let mut total = 0.0;
                for phase in s.probe_distribution(party).keys() {
                    let (p, post) = s.project_probe(party, *phase).unwrap();
                    prop_assert!(post.is_normalized());
                    total += p;
                }
                prop_assert!((total - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn branch_order_does_not_matter(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(&mut rng, 4);
            let mut branches: Vec<_> = s.branches().collect();
            branches.reverse();
            prop_assert_eq!(PureState::from_branches(branches), s);
        }
    }
}
