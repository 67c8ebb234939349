//! Probability tree shared by the exact enumerator and the sampler.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{Party, PureState};
use crate::optics::DiagonalOutcome;
use crate::phase::PhaseTag;
use crate::sources::BellState;

/// Fidelities this close to 0 or 1 are treated as exact.
pub(crate) const FIDELITY_SNAP: f64 = 1e-12;

/// One random choice on the way to an outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Step {
    Emission { order: u8 },
    Noise { flips: Vec<bool> },
    Components { pairs: Vec<BellState> },
    Readout { party: Party, phase: PhaseTag },
    Coincidence { fourfold: bool },
    Diagonal { party: Party, outcome: DiagonalOutcome },
}

#[derive(Clone, Debug)]
pub(crate) struct Leaf {
    /// Number of kept pairs, `None` if the event is discarded.
    pub kept: Option<u32>,
    pub same_mode_double: bool,
    pub fidelity: f64,
    pub state: PureState,
}

impl Leaf {
    pub fn discarded(state: PureState) -> Self {
        Leaf { kept: None, same_mode_double: false, fidelity: 0.0, state }
    }

    pub fn kept(pairs: u32, fidelity: f64, state: PureState) -> Self {
        let fidelity = if fidelity > 1.0 - FIDELITY_SNAP {
            1.0
        } else if fidelity < FIDELITY_SNAP {
            0.0
        } else {
            fidelity
        };
        Leaf { kept: Some(pairs), same_mode_double: false, fidelity, state }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Edge {
    pub prob: f64,
    pub step: Step,
    pub node: Node,
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Chance(Vec<Edge>),
    Leaf(Leaf),
}

impl Node {
    /// Chance node over `(prob, step, payload)` triples; zero-weight choices are
    /// dropped before the subtree is built.
    pub fn chance<T>(
        choices: impl IntoIterator<Item = (f64, Step, T)>,
        mut build: impl FnMut(T) -> Result<Node>,
    ) -> Result<Node> {
        let mut edges = Vec::new();
        for (prob, step, payload) in choices {
            if prob > 0.0 {
                edges.push(Edge { prob, step, node: build(payload)? });
            }
        }
        Ok(Node::Chance(edges))
    }

    /// Depth-first walk over every leaf with its path probability.
    pub fn for_each_leaf<'a>(&'a self, weight: f64, path: &mut Vec<&'a Step>, f: &mut impl FnMut(f64, &[&'a Step], &'a Leaf)) {
        match self {
            Node::Leaf(leaf) => f(weight, path, leaf),
            Node::Chance(edges) => {
                for e in edges {
                    path.push(&e.step);
                    e.node.for_each_leaf(weight * e.prob, path, f);
                    path.pop();
                }
            }
        }
    }

    /// Follows one random path, choosing each edge with its conditional
    /// probability.
    pub fn sample(&self, rng: &mut impl Rng) -> &Leaf {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(leaf) => return leaf,
                Node::Chance(edges) => {
                    let total: f64 = edges.iter().map(|e| e.prob).sum();
                    let mut u = rng.gen::<f64>() * total;
                    let mut chosen = &edges[edges.len() - 1];
                    for e in edges {
                        if u < e.prob {
                            chosen = e;
                            break;
                        }
                        u -= e.prob;
                    }
                    node = &chosen.node;
                }
            }
        }
    }
}
