//! Helpers for tests and property checks: compact mode names and random states.

use num_complex::Complex64;
use rand::Rng;

use crate::fock::{BranchState, ModeLabel, Occupation, Party, Polarization, Probes, PureState, Spatial};
use crate::phase::PhaseTag;

/// Parses compact mode names such as `a1H`, `b2V`, `aH` (merged), `b1V#1`
/// (time bin 1).
///
/// Panics on malformed names; intended for tests and fixed tables.
pub fn mode(name: &str) -> ModeLabel {
    let (body, bin) = match name.split_once('#') {
        Some((b, n)) => (b, n.parse().expect("bad bin")),
        None => (name, 0),
    };
    let chars: Vec<char> = body.chars().collect();
    let party = match chars.first() {
        Some('a') => Party::Alice,
        Some('b') => Party::Bob,
        _ => panic!("bad mode name {name}"),
    };
    let (spatial, pol) = match chars.len() {
        2 => (Spatial::Merged, chars[1]),
        3 => (
            match chars[1] {
                '1' => Spatial::Upper,
                '2' => Spatial::Lower,
                _ => panic!("bad mode name {name}"),
            },
            chars[2],
        ),
        _ => panic!("bad mode name {name}"),
    };
    let polarization = match pol {
        'H' => Polarization::H,
        'V' => Polarization::V,
        _ => panic!("bad mode name {name}"),
    };
    ModeLabel { party, spatial, polarization, bin }
}

/// Parses a space-separated list of mode names.
pub fn modes(names: &str) -> Vec<ModeLabel> {
    names.split_whitespace().map(mode).collect()
}

/// All twelve modes of time bin 0.
pub fn bin0_modes() -> Vec<ModeLabel> {
    let mut out = Vec::with_capacity(12);
    for party in Party::BOTH {
        for spatial in [Spatial::Upper, Spatial::Lower, Spatial::Merged] {
            for polarization in [Polarization::H, Polarization::V] {
                out.push(ModeLabel::new(party, spatial, polarization));
            }
        }
    }
    out
}

/// A random normalized state on the twelve bin-0 modes. Every branch holds the
/// same number of photons (between 0 and `max_photons`), so photon-number
/// conservation can be checked per state; probes carry multiples of π/4.
pub fn random_state(rng: &mut impl Rng, max_photons: u32) -> PureState {
    let all = bin0_modes();
    let photons = rng.gen_range(0..=max_photons);
    let n_branches = rng.gen_range(1..=6);
    let mut branches = Vec::with_capacity(n_branches);
    for _ in 0..n_branches {
        let occupation: Occupation = (0..photons).map(|_| (all[rng.gen_range(0..all.len())], 1)).collect();
        let probes = Probes::new(PhaseTag::new(rng.gen_range(0..8), 4), PhaseTag::new(rng.gen_range(0..8), 4));
        let amplitude = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        branches.push(BranchState { occupation, probes, amplitude });
    }
    let s = PureState::from_branches(branches);
    match s.normalize() {
        Ok(n) => n,
        Err(_) => PureState::vacuum(),
    }
}

/// A random normalized state restricted to the Upper/Lower modes (inputs of
/// beam splitters and QND gadgets).
pub fn random_input_state(rng: &mut impl Rng, max_photons: u32) -> PureState {
    random_state(rng, max_photons).relabel(|m| {
        if m.spatial == Spatial::Merged {
            m.with_spatial(Spatial::Upper)
        } else {
            m
        }
    })
    .normalize()
    .unwrap_or_else(|_| PureState::vacuum())
}
