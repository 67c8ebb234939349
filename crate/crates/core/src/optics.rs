//! Passive linear elements and local polarization operations.
//!
//! Beam-splitter convention: H is transmitted (keeps its spatial path), V is
//! reflected (swaps paths).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::fock::{ModeLabel, Party, Polarization, Port, PureState, Spatial};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Which photons a local operation acts on.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    pub party: Party,
    pub spatial: Option<Spatial>,
    pub bin: Option<u8>,
}

impl Selector {
    pub fn party(party: Party) -> Self {
        Selector { party, spatial: None, bin: None }
    }

    pub fn spatial(mut self, spatial: Spatial) -> Self {
        self.spatial = Some(spatial);
        self
    }

    pub fn bin(mut self, bin: u8) -> Self {
        self.bin = Some(bin);
        self
    }

    pub fn matches(&self, m: ModeLabel) -> bool {
        m.party == self.party
            && self.spatial.is_none_or(|s| s == m.spatial)
            && self.bin.is_none_or(|b| b == m.bin)
    }
}

impl From<Party> for Selector {
    fn from(party: Party) -> Self {
        Selector::party(party)
    }
}

/// Polarizing beam splitter between two paths of one party (all time bins).
pub fn pbs(state: &PureState, party: Party, port_a: Spatial, port_b: Spatial) -> Result<PureState> {
    if port_a == port_b || port_a == Spatial::Merged || port_b == Spatial::Merged {
        return Err(SimError::InvalidPorts(format!("{port_a:?} / {port_b:?}")));
    }
    Ok(state.relabel(|m| {
        if m.party != party || m.polarization == Polarization::H {
            return m;
        }
        if m.spatial == port_a {
            m.with_spatial(port_b)
        } else if m.spatial == port_b {
            m.with_spatial(port_a)
        } else {
            m
        }
    }))
}

/// Merges `party`'s Upper and Lower paths into the Merged path, per time bin,
/// keeping polarization.
///
/// Fails with [`SimError::AmbiguousRouting`] if a branch has photons of the
/// same polarization on both paths of the same bin. Branches that coincide
/// after merging add coherently; the result is rescaled to the input norm.
pub fn coupler(state: &PureState, party: Party) -> Result<PureState> {
    for (key, _) in state.iter() {
        for (m, _) in key.occupation.iter() {
            if m.party == party && m.spatial == Spatial::Upper && key.occupation.get(m.with_spatial(Spatial::Lower)) > 0 {
                return Err(SimError::AmbiguousRouting { party, polarization: m.polarization, bin: m.bin });
            }
        }
    }
    let merged = state.relabel(|m| {
        if m.party == party && m.spatial != Spatial::Merged {
            m.with_spatial(Spatial::Merged)
        } else {
            m
        }
    });
    let (before, after) = (state.norm_sqr(), merged.norm_sqr());
    if after == 0.0 {
        return Ok(merged);
    }
    Ok(merged.scaled(Complex64::new((before / after).sqrt(), 0.0)))
}

/// Bit flip `σx`: swaps H and V on the selected photons.
pub fn sigma_x(state: &PureState, target: impl Into<Selector>) -> PureState {
    let sel = target.into();
    state.relabel(|m| if sel.matches(m) { m.with_polarization(m.polarization.flipped()) } else { m })
}

/// Phase flip `σz`: sign `(−1)^(number of selected V photons)`.
pub fn sigma_z(state: &PureState, target: impl Into<Selector>) -> PureState {
    let sel = target.into();
    state.map_amplitudes(|k| {
        let v = k.occupation.count_where(|m| sel.matches(m) && m.polarization == Polarization::V);
        Complex64::new(if v % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DiagonalOutcome {
    Plus,
    Minus,
}

impl DiagonalOutcome {
    pub const BOTH: [DiagonalOutcome; 2] = [DiagonalOutcome::Plus, DiagonalOutcome::Minus];

    fn bra(self, pol: Polarization) -> Complex64 {
        match (self, pol) {
            (DiagonalOutcome::Minus, Polarization::V) => Complex64::new(-FRAC_1_SQRT_2, 0.0),
            _ => Complex64::new(FRAC_1_SQRT_2, 0.0),
        }
    }
}

fn check_single_photon(state: &PureState, port: Port) -> Result<()> {
    for (key, _) in state.iter() {
        let found = key.occupation.at_port(port);
        if found != 1 {
            return Err(SimError::OccupancyViolation { port, found });
        }
    }
    Ok(())
}

/// Projects the photon at `port` onto `|±⟩ = (|H⟩ ± |V⟩)/√2` and removes it.
/// Returns the outcome probability and the renormalized remaining state.
pub fn project_diagonal(state: &PureState, port: Port, outcome: DiagonalOutcome) -> Result<(f64, PureState)> {
    check_single_photon(state, port)?;
    let post = state.absorb_photon(port, |pol| outcome.bra(pol));
    let p = post.norm_sqr() / state.norm_sqr();
    Ok((p, post.normalize()?))
}

/// Both diagonal-basis outcomes with non-zero probability.
pub fn measure_diagonal(state: &PureState, port: Port) -> Result<Vec<(DiagonalOutcome, f64, PureState)>> {
    check_single_photon(state, port)?;
    let mut out = Vec::with_capacity(2);
    for outcome in DiagonalOutcome::BOTH {
        match project_diagonal(state, port, outcome) {
            Ok((p, s)) => out.push((outcome, p, s)),
            Err(SimError::ZeroNorm) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// 45° rotation `|H⟩→|+⟩, |V⟩→|−⟩` on every photon of both parties.
pub fn bilateral_rotation(state: &PureState) -> PureState {
    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
    state.transform_modes(|m| match m.polarization {
        Polarization::H => vec![(m.with_polarization(Polarization::H), r), (m.with_polarization(Polarization::V), r)],
        Polarization::V => vec![(m.with_polarization(Polarization::H), r), (m.with_polarization(Polarization::V), -r)],
    })
}
