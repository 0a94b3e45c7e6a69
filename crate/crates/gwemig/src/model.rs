//! The joint law of one generation's input: an offspring stream and one
//! emigration variable, with or without independence between the two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{DiscreteLaw, LawSpec};
use crate::rng::Stream;

/// How the emigration variable is coupled to the offspring stream.
///
/// `Independent` realizes the usual independence hypothesis. `Comonotone`
/// draws the emigration variable from the same uniform variate as the first
/// offspring draw: a legal joint law with the declared marginals that
/// deliberately violates independence, used to probe which results survive
/// without it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Independent,
    Comonotone,
}

/// Wire descriptor for a [`GenerationModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub offspring: LawSpec,
    pub emigration: LawSpec,
    #[serde(default = "default_coupling")]
    pub coupling: Coupling,
}

fn default_coupling() -> Coupling {
    Coupling::Independent
}

/// Offspring law, emigration law, and their coupling.
///
/// Immutable after construction and safe to share across workers. Offspring
/// laws with infinite mean are rejected: every result downstream assumes a
/// finite reproduction mean.
#[derive(Debug, Clone)]
pub struct GenerationModel {
    offspring: DiscreteLaw,
    emigration: DiscreteLaw,
    coupling: Coupling,
}

impl GenerationModel {
    pub fn new(offspring: DiscreteLaw, emigration: DiscreteLaw, coupling: Coupling) -> Result<Self> {
        if !offspring.mean().is_finite() {
            return Err(Error::InvalidParam(
                "offspring law must have a finite mean".into(),
            ));
        }
        Ok(GenerationModel {
            offspring,
            emigration,
            coupling,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(
            DiscreteLaw::from_spec(&spec.offspring)?,
            DiscreteLaw::from_spec(&spec.emigration)?,
            spec.coupling,
        )
    }

    pub fn offspring(&self) -> &DiscreteLaw {
        &self.offspring
    }

    pub fn emigration(&self) -> &DiscreteLaw {
        &self.emigration
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// Mean number of offspring per individual.
    pub fn lambda(&self) -> f64 {
        self.offspring.mean()
    }

    /// Exact joint atoms of (first offspring draw, emigration draw).
    ///
    /// Offspring atoms above `xi_cap` are folded into `xi_cap` (the folded
    /// mass is returned so callers can bracket event probabilities);
    /// emigration values above `y_cap` appear as [`YDraw::Above`] lumps.
    pub fn joint_atoms(&self, xi_cap: u64, y_cap: u64) -> (Vec<JointAtom>, f64) {
        let (mut xi_atoms, xi_rest) = self.offspring.atoms_up_to(xi_cap);
        if xi_rest > 0.0 {
            if let Some(last) = xi_atoms.last_mut().filter(|a| a.0 == xi_cap) {
                last.1 += xi_rest;
            } else {
                xi_atoms.push((xi_cap, xi_rest));
            }
        }
        let (y_atoms, y_rest) = self.emigration.atoms_up_to(y_cap);
        let atoms = match self.coupling {
            Coupling::Independent => {
                let mut out = Vec::with_capacity(xi_atoms.len() * (y_atoms.len() + 1));
                for &(x, px) in &xi_atoms {
                    for &(y, py) in &y_atoms {
                        out.push(JointAtom { xi1: x, y: YDraw::Value(y), prob: px * py });
                    }
                    if y_rest > 0.0 {
                        out.push(JointAtom { xi1: x, y: YDraw::Above(y_cap), prob: px * y_rest });
                    }
                }
                out
            }
            Coupling::Comonotone => comonotone_segments(&xi_atoms, &y_atoms, y_rest, y_cap),
        };
        (atoms, xi_rest)
    }
}

/// An emigration value in a joint atom: either exact or "above the cap".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YDraw {
    Value(u64),
    Above(u64),
}

/// One atom of the joint law of (first offspring draw, emigration draw).
#[derive(Debug, Clone, Copy)]
pub struct JointAtom {
    pub xi1: u64,
    pub y: YDraw,
    pub prob: f64,
}

/// Segments of [0,1) under the quantile coupling: both coordinates are read
/// off the same uniform, so the joint atoms are the intervals between merged
/// cdf breakpoints.
fn comonotone_segments(
    xi_atoms: &[(u64, f64)],
    y_atoms: &[(u64, f64)],
    y_rest: f64,
    y_cap: u64,
) -> Vec<JointAtom> {
    let mut xi_cum = Vec::with_capacity(xi_atoms.len());
    let mut acc = 0.0;
    for &(x, p) in xi_atoms {
        acc += p;
        xi_cum.push((x, acc));
    }
    if let Some(last) = xi_cum.last_mut() {
        last.1 = 1.0;
    }
    let mut y_cum = Vec::with_capacity(y_atoms.len() + 1);
    acc = 0.0;
    for &(y, p) in y_atoms {
        acc += p;
        y_cum.push((YDraw::Value(y), acc));
    }
    if y_rest > 0.0 {
        y_cum.push((YDraw::Above(y_cap), 1.0));
    } else if let Some(last) = y_cum.last_mut() {
        last.1 = 1.0;
    }

    let mut out = Vec::new();
    let mut pos = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xi_cum.len() && j < y_cum.len() {
        let next = xi_cum[i].1.min(y_cum[j].1);
        if next > pos {
            out.push(JointAtom { xi1: xi_cum[i].0, y: y_cum[j].0, prob: next - pos });
        }
        if xi_cum[i].1 == next {
            i += 1;
        }
        if y_cum[j].1 == next {
            j += 1;
        }
        pos = next;
    }
    out
}

/// Per-generation view of the random input, indexed without mutation.
///
/// Index 0 of the generation stream is reserved for the emigration draw;
/// indices `1, 2, ...` are the per-individual offspring draws. Under the
/// comonotone coupling the emigration value is read from index 1 instead,
/// sharing its uniform with the first offspring draw.
#[derive(Clone, Copy)]
pub struct Generation<'a> {
    model: &'a GenerationModel,
    stream: Stream,
}

impl<'a> Generation<'a> {
    pub fn new(model: &'a GenerationModel, stream: Stream) -> Self {
        Generation { model, stream }
    }

    pub fn stream(&self) -> Stream {
        self.stream
    }

    /// Offspring count of individual `j >= 1` in this generation.
    #[inline]
    pub fn offspring_at(&self, j: u64) -> u64 {
        debug_assert!(j >= 1);
        self.model.offspring().quantile(self.stream.index_unit(j))
    }

    /// The generation's emigration draw.
    #[inline]
    pub fn emigration(&self) -> u64 {
        let idx = match self.model.coupling() {
            Coupling::Independent => 0,
            Coupling::Comonotone => 1,
        };
        self.model.emigration().quantile(self.stream.index_unit(idx))
    }

    /// Sum of the offspring draws of individuals `from..from+count`, one
    /// indexed variate each. Exact under every coupling and replayable.
    pub fn offspring_sum_exact(&self, from: u64, count: u64) -> u64 {
        let mut sum = 0u64;
        for j in from..from + count {
            sum = sum.saturating_add(self.offspring_at(j));
        }
        sum
    }
}
