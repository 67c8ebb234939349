//! Cross-Kerr QND gadgets.
//!
//! A Kerr medium adds `n·θ` to one party's probe phase, where `n` is the
//! photon number in the signal mode; the signal photons are untouched. Each
//! gadget is a fixed arrangement of Kerr media (and, for QND₃, a polarizing
//! beam splitter in front of them), applied to both parties.
//!
//! | gadget | per-party layout |
//! |--------|------------------|
//! | QND₁ | θ on (1,H) and (2,V); θ′ on (1,V) and (2,H) |
//! | QND₂ | π on (1,H) and (2,V) |
//! | QND₃ | PBS(1,2), then θ on path 1 and θ′ on path 2 |
//! | QND₄ | +θ on (1,H), −θ on (2,H) |

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Result, SimError};
use crate::fock::{EnsembleState, ModeLabel, Party, Polarization, Port, PureState, Spatial};
use crate::optics::pbs;
use crate::phase::PhaseTag;

/// A cross-Kerr coupling between a signal location and one party's probe.
/// The signal is matched on party, path, and polarization in every time bin.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct KerrMedium {
    pub signal: ModeLabel,
    pub phase_per_photon: PhaseTag,
}

impl KerrMedium {
    pub fn new(party: Party, spatial: Spatial, polarization: Polarization, phase_per_photon: PhaseTag) -> Self {
        KerrMedium { signal: ModeLabel::new(party, spatial, polarization), phase_per_photon }
    }

    pub fn probe(&self) -> Party {
        self.signal.party
    }

    fn couples(&self, m: ModeLabel) -> bool {
        m.party == self.signal.party && m.spatial == self.signal.spatial && m.polarization == self.signal.polarization
    }
}

pub fn apply_kerr(state: &PureState, medium: &KerrMedium) -> PureState {
    state.map_probes(|occ, probes| {
        let n = occ.count_where(|m| medium.couples(m));
        probes.shifted(medium.probe(), medium.phase_per_photon * n)
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum QndVariant {
    Qnd1,
    Qnd2,
    Qnd3,
    Qnd4,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QndConfig {
    pub variant: QndVariant,
    pub theta: PhaseTag,
    /// Second Kerr phase; only QND₁ and QND₃ use it.
    pub theta_prime: PhaseTag,
}

impl QndConfig {
    pub fn default_theta() -> PhaseTag {
        PhaseTag::new(1, 4)
    }

    pub fn default_theta_prime() -> PhaseTag {
        PhaseTag::new(3, 4)
    }

    /// Defaults: θ = π/4, θ′ = 3π/4 (QND₁, QND₃); θ = π (QND₂); θ = π/4 (QND₄).
    pub fn new(variant: QndVariant) -> Self {
        let theta = match variant {
            QndVariant::Qnd2 => PhaseTag::pi(),
            _ => Self::default_theta(),
        };
        let theta_prime = match variant {
            QndVariant::Qnd1 | QndVariant::Qnd3 => Self::default_theta_prime(),
            _ => PhaseTag::ZERO,
        };
        QndConfig { variant, theta, theta_prime }
    }

    pub fn with_phases(variant: QndVariant, theta: PhaseTag, theta_prime: PhaseTag) -> Result<Self> {
        let cfg = QndConfig { variant, theta, theta_prime };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The phase classes a readout can land on for up to two photons per party.
    pub fn phase_classes(&self) -> Vec<PhaseTag> {
        let (t, tp) = (self.theta, self.theta_prime);
        vec![PhaseTag::ZERO, t, tp, t * 2, tp * 2, t + tp]
    }

    pub fn validate(&self) -> Result<()> {
        let (t, tp) = (self.theta, self.theta_prime);
        match self.variant {
            QndVariant::Qnd1 | QndVariant::Qnd3 => {
                if t == tp {
                    return Err(SimError::Config(format!("theta and theta' must differ mod 2pi (both {t})")));
                }
                let classes = self.phase_classes();
                let distinct: BTreeSet<_> = classes.iter().collect();
                if distinct.len() != classes.len() {
                    return Err(SimError::Config(format!(
                        "phase classes 0, {t}, {tp}, {}, {}, {} are not pairwise distinct",
                        t * 2,
                        tp * 2,
                        t + tp
                    )));
                }
            }
            QndVariant::Qnd2 => {
                if t != PhaseTag::pi() {
                    return Err(SimError::Config(format!("QND2 requires theta = pi, got {t}")));
                }
            }
            QndVariant::Qnd4 => {
                if t == -t {
                    return Err(SimError::Config(format!("QND4 requires theta != -theta mod 2pi, got {t}")));
                }
            }
        }
        Ok(())
    }

    /// Kerr media of one party for this gadget.
    pub fn kerr_layout(&self, party: Party) -> Vec<KerrMedium> {
        use Polarization::{H, V};
        use Spatial::{Lower, Upper};
        let k = |s, p, phase| KerrMedium::new(party, s, p, phase);
        let (t, tp) = (self.theta, self.theta_prime);
        match self.variant {
            QndVariant::Qnd1 => vec![k(Upper, H, t), k(Lower, V, t), k(Upper, V, tp), k(Lower, H, tp)],
            QndVariant::Qnd2 => vec![k(Upper, H, t), k(Lower, V, t)],
            QndVariant::Qnd3 => vec![k(Upper, H, t), k(Upper, V, t), k(Lower, H, tp), k(Lower, V, tp)],
            QndVariant::Qnd4 => vec![k(Upper, H, t), k(Lower, H, -t)],
        }
    }

    fn expect(&self, variant: QndVariant) -> Result<()> {
        if self.variant != variant {
            return Err(SimError::Config(format!("expected {variant:?} configuration, got {:?}", self.variant)));
        }
        self.validate()
    }
}

fn apply_layout(state: &PureState, cfg: &QndConfig) -> PureState {
    Party::BOTH
        .iter()
        .flat_map(|p| cfg.kerr_layout(*p))
        .fold(state.clone(), |s, m| apply_kerr(&s, &m))
}

/// QND₁: spatial-to-polarization CNOT and photon-number detector.
pub fn qnd1(state: &PureState, cfg: &QndConfig) -> Result<PureState> {
    cfg.expect(QndVariant::Qnd1)?;
    Ok(apply_layout(state, cfg))
}

/// QND₂: π-phase parity detector for two pairs (pair 1 on path 1, pair 2 on path 2).
pub fn qnd2(state: &PureState, cfg: &QndConfig) -> Result<PureState> {
    cfg.expect(QndVariant::Qnd2)?;
    Ok(apply_layout(state, cfg))
}

/// QND₃: a PBS per party followed by θ on path 1 and θ′ on path 2.
pub fn qnd3(state: &PureState, cfg: &QndConfig) -> Result<PureState> {
    cfg.expect(QndVariant::Qnd3)?;
    let mut s = state.clone();
    for party in Party::BOTH {
        s = pbs(&s, party, Spatial::Upper, Spatial::Lower)?;
    }
    Ok(apply_layout(&s, cfg))
}

/// QND₄: ±θ parity check. Each non-vacuum branch must hold exactly one photon
/// per party on each of paths 1 and 2.
pub fn qnd4(state: &PureState, cfg: &QndConfig) -> Result<PureState> {
    cfg.expect(QndVariant::Qnd4)?;
    for (key, _) in state.iter() {
        if key.occupation.total() == 0 {
            continue;
        }
        for party in Party::BOTH {
            for spatial in [Spatial::Upper, Spatial::Lower] {
                let port = Port::new(party, spatial);
                let found = key.occupation.count_where(|m| m.party == party && m.spatial == spatial);
                if found != 1 {
                    return Err(SimError::OccupancyViolation { port, found });
                }
            }
        }
    }
    Ok(apply_layout(state, cfg))
}

/// Applies whichever gadget `cfg` names.
pub fn apply_qnd(state: &PureState, cfg: &QndConfig) -> Result<PureState> {
    match cfg.variant {
        QndVariant::Qnd1 => qnd1(state, cfg),
        QndVariant::Qnd2 => qnd2(state, cfg),
        QndVariant::Qnd3 => qnd3(state, cfg),
        QndVariant::Qnd4 => qnd4(state, cfg),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum HomodyneModel {
    /// Resolves the exact probe phase.
    Ideal,
    /// X-quadrature readout: `+φ` and `−φ` give the same outcome.
    MagnitudeOnly,
}

/// Possible outcomes of a probe readout and their probabilities. Under
/// `MagnitudeOnly` the outcome is the class representative in `[0, π]`.
pub fn homodyne_outcomes(state: &EnsembleState, party: Party, model: HomodyneModel) -> Vec<(PhaseTag, f64)> {
    let mut dist = std::collections::BTreeMap::new();
    for (w, s) in state.components() {
        for (phase, p) in s.probe_distribution(party) {
            let key = match model {
                HomodyneModel::Ideal => phase,
                HomodyneModel::MagnitudeOnly => phase.magnitude_class(),
            };
            *dist.entry(key).or_insert(0.0) += w * p;
        }
    }
    dist.into_iter().collect()
}

/// Reads `party`'s probe and conditions on `outcome`. Returns the outcome
/// probability and the post-measurement ensemble. Under `MagnitudeOnly`, the
/// `+φ` and `−φ` sub-branches become separate mixture components.
pub fn homodyne_x(
    state: &EnsembleState,
    party: Party,
    model: HomodyneModel,
    outcome: PhaseTag,
) -> Result<(f64, EnsembleState)> {
    let members: Vec<PhaseTag> = match model {
        HomodyneModel::Ideal => vec![outcome],
        HomodyneModel::MagnitudeOnly => {
            let rep = outcome.magnitude_class();
            if rep == -rep {
                vec![rep]
            } else {
                vec![rep, -rep]
            }
        }
    };
    let mut components = Vec::new();
    let mut total = 0.0;
    for (w, s) in state.components() {
        for phase in &members {
            match s.project_probe(party, *phase) {
                Ok((p, post)) => {
                    total += w * p;
                    components.push((w * p, post));
                }
                Err(SimError::ZeroNorm) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if total <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let components = components.into_iter().map(|(w, s)| (w / total, s)).collect();
    Ok((total, EnsembleState::new(components)?))
}
