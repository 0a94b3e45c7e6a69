//! Offspring and emigration laws on the nonnegative integers.
//!
//! A [`DiscreteLaw`] is a finite list of atoms plus an optional analytic tail.
//! Two tail families are built in:
//!
//! * `Pareto { alpha, t0 }` — `P[X > j] = (j/t0)^(-alpha)` at every integer
//!   threshold `j >= t0`. Atoms sit on the integers above `t0`; whatever mass
//!   the tail does not carry is placed at 0.
//! * `LogReciprocal { c, n0 }` — `P[X > e^n] = c/n` for every integer
//!   `n >= n0` (wire tag `example1`). The tail is discretized into atoms at
//!   `ceil(e^n)` carrying `c/n - c/(n+1)`, and the leftover mass `1 - c/n0`
//!   sits at 0. This law has `E[log_+ X] = infinite` while every tail
//!   probability is an exact rational in `c` and `n`.
//!
//! Moments of analytic-tail laws are computed from the tail formula, not from
//! samples, because the lifetime criteria need exact finite/infinite verdicts.
//! Infinite moments are reported as `f64::INFINITY`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeqRng;

/// Mass-balance tolerance for constructed laws.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Largest atom kept when an analytic-tail law must be truncated to finite
/// support (generating-function work). Mass above is folded into this atom.
pub const PGF_TRUNCATION: u64 = 1_000_000;

/// Wire format for law descriptors.
///
/// ```json
/// {"type":"pmf","values":[0,2],"probs":[0.25,0.75]}
/// {"type":"const","value":2}
/// {"type":"pareto","alpha":1.0,"t0":1.0}
/// {"type":"example1","c":1.0,"n0":2}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LawSpec {
    Pmf { values: Vec<u64>, probs: Vec<f64> },
    Const { value: u64 },
    Pareto { alpha: f64, t0: f64 },
    Example1 { c: f64, n0: u32 },
}

/// Analytic tail descriptor attached to a [`DiscreteLaw`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tail {
    /// `P[X > j] = (j/t0)^(-alpha)` for integer `j >= t0`.
    Pareto { alpha: f64, t0: f64 },
    /// `P[X > e^n] = c/n` for integer `n >= n0`.
    LogReciprocal { c: f64, n0: u32 },
}

/// Smallest integer strictly above `e^m`; saturates on `u64` overflow.
pub(crate) fn ceil_exp(m: u32) -> u64 {
    if m >= 44 {
        // e^44 > 2^63; anything this large exceeds every reachable state.
        return u64::MAX;
    }
    (m as f64).exp().ceil() as u64
}

/// A probability law on the nonnegative integers.
#[derive(Debug, Clone)]
pub struct DiscreteLaw {
    /// Finite atoms, sorted by value, all masses strictly positive.
    core: Vec<(u64, f64)>,
    /// Total mass of `core`.
    core_mass: f64,
    tail: Option<Tail>,
    /// Total analytic-tail mass (`0` when `tail` is `None`).
    tail_mass: f64,
    /// Pareto only: largest integer threshold whose tail mass is 1 at
    /// construction; atoms start at `pareto_start + 1`.
    pareto_start: u64,
    mean: f64,
    variance: f64,
}

impl DiscreteLaw {
    /// Build a law from a wire descriptor.
    pub fn from_spec(spec: &LawSpec) -> Result<Self> {
        match spec {
            LawSpec::Pmf { values, probs } => Self::from_pmf(values, probs),
            LawSpec::Const { value } => Ok(Self::constant(*value)),
            LawSpec::Pareto { alpha, t0 } => Self::pareto(*alpha, *t0),
            LawSpec::Example1 { c, n0 } => Self::log_reciprocal(*c, *n0),
        }
    }

    /// Finite law from parallel value/probability lists. Probabilities are
    /// normalized; duplicate values are merged.
    pub fn from_pmf(values: &[u64], probs: &[f64]) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::InvalidParam(format!(
                "pmf has {} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::NonNormalizable("empty pmf".into()));
        }
        let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
        for (&v, &p) in values.iter().zip(probs) {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidParam(format!("probability {p} for value {v}")));
            }
            if p > 0.0 {
                *merged.entry(v).or_insert(0.0) += p;
            }
        }
        let total: f64 = merged.values().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NonNormalizable(format!("pmf mass sums to {total}")));
        }
        let core: Vec<(u64, f64)> = merged.into_iter().map(|(v, p)| (v, p / total)).collect();
        Ok(Self::from_parts(core, None))
    }

    /// Point mass at `value`.
    pub fn constant(value: u64) -> Self {
        Self::from_parts(vec![(value, 1.0)], None)
    }

    /// Law with Pareto tail `P[X > j] = (j/t0)^(-alpha)` at integer `j >= t0`.
    ///
    /// When `t0` is not an integer the tail carries less than full mass and
    /// the remainder is placed at 0.
    pub fn pareto(alpha: f64, t0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParam(format!("pareto alpha {alpha} must be > 0")));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParam(format!("pareto t0 {t0} must be > 0")));
        }
        let start = t0.ceil() as u64;
        let tail_mass = (start as f64 / t0).powf(-alpha);
        let mut core = Vec::new();
        if 1.0 - tail_mass > 0.0 {
            core.push((0, 1.0 - tail_mass));
        }
        Ok(Self::from_parts_with_tail(
            core,
            Tail::Pareto { alpha, t0 },
            tail_mass,
            start,
        ))
    }

    /// Law with `P[X > e^n] = c/n` for integer `n >= n0` and the leftover
    /// mass `1 - c/n0` at 0 (wire tag `example1`).
    pub fn log_reciprocal(c: f64, n0: u32) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParam(format!("log-reciprocal c {c} must be > 0")));
        }
        if n0 == 0 {
            return Err(Error::InvalidParam("log-reciprocal n0 must be >= 1".into()));
        }
        let tail_mass = c / n0 as f64;
        if tail_mass > 1.0 {
            return Err(Error::InvalidParam(format!(
                "log-reciprocal tail mass c/n0 = {tail_mass} exceeds 1"
            )));
        }
        let mut core = Vec::new();
        if 1.0 - tail_mass > 0.0 {
            core.push((0, 1.0 - tail_mass));
        }
        Ok(Self::from_parts_with_tail(
            core,
            Tail::LogReciprocal { c, n0 },
            tail_mass,
            0,
        ))
    }

    fn from_parts(core: Vec<(u64, f64)>, tail: Option<Tail>) -> Self {
        debug_assert!(tail.is_none());
        let core_mass: f64 = core.iter().map(|&(_, p)| p).sum();
        let mut law = DiscreteLaw {
            core,
            core_mass,
            tail,
            tail_mass: 0.0,
            pareto_start: 0,
            mean: 0.0,
            variance: 0.0,
        };
        let (m, v) = law.compute_moments();
        law.mean = m;
        law.variance = v;
        debug_assert!((law.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
        law
    }

    fn from_parts_with_tail(core: Vec<(u64, f64)>, tail: Tail, tail_mass: f64, start: u64) -> Self {
        let core_mass: f64 = core.iter().map(|&(_, p)| p).sum();
        let mut law = DiscreteLaw {
            core,
            core_mass,
            tail: Some(tail),
            tail_mass,
            pareto_start: start,
            mean: 0.0,
            variance: 0.0,
        };
        let (m, v) = law.compute_moments();
        law.mean = m;
        law.variance = v;
        debug_assert!((law.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
        law
    }

    /// Core plus analytic tail mass; equals 1 within [`MASS_TOLERANCE`] for
    /// every constructible law.
    pub fn total_mass(&self) -> f64 {
        self.core_mass + self.tail_mass
    }

    pub fn tail_kind(&self) -> Option<Tail> {
        self.tail
    }

    /// Mass carried by the finite atoms.
    pub fn core_mass(&self) -> f64 {
        self.core_mass
    }

    /// Mass carried by the analytic tail (0 for finite laws).
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn is_finite_support(&self) -> bool {
        self.tail.is_none()
    }

    /// Largest atom of a finite-support law.
    pub fn max_value(&self) -> Option<u64> {
        if self.tail.is_some() {
            None
        } else {
            self.core.last().map(|&(v, _)| v)
        }
    }

    /// `true` if the law is a point mass, returning its value.
    pub fn constant_value(&self) -> Option<u64> {
        if self.tail.is_none() && self.core.len() == 1 {
            Some(self.core[0].0)
        } else {
            None
        }
    }

    /// Finite atoms (for finite-support laws this is the whole law).
    pub fn core_atoms(&self) -> &[(u64, f64)] {
        &self.core
    }

    /// Probability mass at `x`, including analytic-tail atoms.
    pub fn pmf(&self, x: u64) -> f64 {
        let core = self
            .core
            .binary_search_by_key(&x, |&(v, _)| v)
            .map(|i| self.core[i].1)
            .unwrap_or(0.0);
        let tail = match self.tail {
            None => 0.0,
            Some(Tail::Pareto { .. }) => {
                if x > self.pareto_start {
                    self.analytic_tail_at_int(x - 1) - self.analytic_tail_at_int(x)
                } else {
                    0.0
                }
            }
            Some(Tail::LogReciprocal { c, n0 }) => {
                // x is an atom iff x = ceil(e^m) for some m >= n0
                if x <= 1 {
                    0.0
                } else {
                    let guess = ((x - 1) as f64).ln().ceil() as u32;
                    let lo = guess.saturating_sub(2).max(n0);
                    (lo..=guess + 2)
                        .find(|&m| ceil_exp(m) == x)
                        .map(|m| c / m as f64 - c / (m + 1) as f64)
                        .unwrap_or(0.0)
                }
            }
        };
        core + tail
    }

    /// Exact `P[X > t]`, combining core atoms and the analytic tail.
    pub fn tail(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let core_above: f64 = self
            .core
            .iter()
            .rev()
            .take_while(|&&(v, _)| v as f64 > t)
            .map(|&(_, p)| p)
            .sum();
        let tail_above = match self.tail {
            None => 0.0,
            Some(Tail::Pareto { .. }) => {
                let j = t.floor() as u64;
                self.analytic_tail_at_int(j.max(self.pareto_start))
            }
            Some(Tail::LogReciprocal { c, n0 }) => {
                // mass of atoms ceil(e^m) strictly above t is c/m* at the
                // smallest m* >= n0 whose atom exceeds t
                let mut m = n0;
                if t > 1.0 {
                    m = m.max((t.ln().floor() as u32).saturating_sub(1));
                }
                loop {
                    let above = if m >= 44 {
                        (m as f64).exp() > t
                    } else {
                        ceil_exp(m) as f64 > t
                    };
                    if above {
                        break c / m as f64;
                    }
                    m += 1;
                }
            }
        };
        core_above + tail_above
    }

    /// Analytic tail value at an integer threshold `j >= pareto_start`.
    fn analytic_tail_at_int(&self, j: u64) -> f64 {
        match self.tail {
            Some(Tail::Pareto { alpha, t0 }) => (j as f64 / t0).powf(-alpha),
            _ => unreachable!("pareto tail only"),
        }
    }

    /// Inverse cdf: the unique `x` with `P[X < x] <= u < P[X <= x]`.
    ///
    /// One uniform variate in, one value out; this is the primitive every
    /// sampler and every coupling in the crate is built on. Values beyond
    /// `u64::MAX` (possible for tiny tail coordinates) saturate.
    pub fn quantile(&self, u: f64) -> u64 {
        debug_assert!((0.0..1.0).contains(&u));
        let mut cum = 0.0;
        for &(v, p) in &self.core {
            cum += p;
            if u < cum {
                return v;
            }
        }
        // Tail coordinate s in (0, tail_mass].
        let s = (1.0 - u).max(f64::MIN_POSITIVE);
        match self.tail {
            None => self.core.last().map(|&(v, _)| v).unwrap_or(0),
            Some(Tail::Pareto { alpha, t0 }) => {
                // smallest j with P[X > j] < s
                let x = t0 * s.powf(-1.0 / alpha);
                if x >= (1u64 << 63) as f64 {
                    u64::MAX
                } else {
                    (x.floor() as u64 + 1).max(self.pareto_start + 1)
                }
            }
            Some(Tail::LogReciprocal { c, n0 }) => {
                // atom m has downward-cumulative mass c/m
                let m = (c / s).floor();
                let m = if m >= u32::MAX as f64 { u32::MAX } else { (m as u32).max(n0) };
                ceil_exp(m)
            }
        }
    }

    /// Draw one value using the next uniform of `rng`.
    pub fn sample(&self, rng: &mut SeqRng) -> u64 {
        self.quantile(rng.next_unit())
    }

    /// `E[X]` (`INFINITY` when the tail is too heavy).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `Var[X]` (`INFINITY` when the second moment diverges).
    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn compute_moments(&self) -> (f64, f64) {
        let core_m1: f64 = self.core.iter().map(|&(v, p)| v as f64 * p).sum();
        let core_m2: f64 = self.core.iter().map(|&(v, p)| (v as f64) * (v as f64) * p).sum();
        match self.tail {
            None => (core_m1, (core_m2 - core_m1 * core_m1).max(0.0)),
            Some(Tail::LogReciprocal { .. }) => (f64::INFINITY, f64::INFINITY),
            Some(Tail::Pareto { alpha, t0 }) => {
                if alpha <= 1.0 {
                    return (f64::INFINITY, f64::INFINITY);
                }
                let j = self.pareto_start;
                let scale = t0.powf(alpha);
                // sum_{i>j} i (T(i-1)-T(i)) = (j+1) T(j) + sum_{i>j} T(i)
                let (z1, _) = zeta_tail(alpha, j + 1);
                let m1 = core_m1 + (j + 1) as f64 * self.analytic_tail_at_int(j) + scale * z1;
                if alpha <= 2.0 {
                    return (m1, f64::INFINITY);
                }
                // sum_{i>j} i^2 (T(i-1)-T(i)) = (j+1)^2 T(j) + sum_{i>j} (2i+1) T(i)
                let (z0, _) = zeta_tail(alpha - 1.0, j + 1);
                let m2 = core_m2
                    + ((j + 1) as f64).powi(2) * self.analytic_tail_at_int(j)
                    + scale * (2.0 * z0 + z1);
                (m1, (m2 - m1 * m1).max(0.0))
            }
        }
    }

    /// `E[log_+ X]`, exact for finite support, `INFINITY` for log-reciprocal
    /// tails, and bracket-certified summation for Pareto tails.
    pub fn log_plus_moment(&self) -> f64 {
        let core: f64 = self
            .core
            .iter()
            .filter(|&&(v, _)| v >= 2)
            .map(|&(v, p)| (v as f64).ln() * p)
            .sum();
        match self.tail {
            None => core,
            Some(Tail::LogReciprocal { .. }) => f64::INFINITY,
            Some(Tail::Pareto { alpha, t0 }) => {
                // sum_{j>J} ln(j) (T(j-1)-T(j)), direct to M with an Abel
                // remainder bracket [ln(M+1) T(M), ln(M+1) T(M) + t0^a M^-a / a].
                let j0 = self.pareto_start + 1;
                let m_stop = (j0 + 1_000_000).max(16);
                let mut sum = 0.0;
                let mut prev = self.analytic_tail_at_int(j0 - 1);
                for j in j0..=m_stop {
                    let cur = self.analytic_tail_at_int(j);
                    sum += (j as f64).ln() * (prev - cur);
                    prev = cur;
                }
                let t_m = prev;
                let lo = ((m_stop + 1) as f64).ln() * t_m;
                let hi = lo + t0.powf(alpha) * (m_stop as f64).powf(-alpha) / alpha;
                core + sum + 0.5 * (lo + hi)
            }
        }
    }

    /// `E[X log_+ X]`; diverges whenever `E[X]` does.
    pub fn x_log_x_moment(&self) -> f64 {
        let core: f64 = self
            .core
            .iter()
            .filter(|&&(v, _)| v >= 2)
            .map(|&(v, p)| v as f64 * (v as f64).ln() * p)
            .sum();
        match self.tail {
            None => core,
            Some(Tail::LogReciprocal { .. }) => f64::INFINITY,
            Some(Tail::Pareto { alpha, t0 }) => {
                if alpha <= 1.0 {
                    return f64::INFINITY;
                }
                let j0 = self.pareto_start + 1;
                let m_stop = (j0 + 1_000_000).max(16);
                let mut sum = 0.0;
                let mut prev = self.analytic_tail_at_int(j0 - 1);
                for j in j0..=m_stop {
                    let cur = self.analytic_tail_at_int(j);
                    sum += j as f64 * (j as f64).ln() * (prev - cur);
                    prev = cur;
                }
                // remainder in [phi(M+1) T(M), phi(M+1) T(M) + t0^a I(M)] with
                // I(M) = int_M^inf x^-a (ln(x+1)+1) dx
                let m = m_stop as f64;
                let phi = (m + 1.0) * (m + 1.0).ln();
                let lo = phi * prev;
                let integral = m.powf(1.0 - alpha)
                    * (((m + 1.0).ln() + 1.0) / (alpha - 1.0) + 1.0 / ((alpha - 1.0) * (alpha - 1.0)));
                let hi = lo + t0.powf(alpha) * integral;
                core + sum + 0.5 * (lo + hi)
            }
        }
    }

    /// `E[X^p]` for `p >= 1`.
    pub fn power_moment(&self, p: f64) -> f64 {
        let core: f64 = self.core.iter().map(|&(v, q)| (v as f64).powf(p) * q).sum();
        match self.tail {
            None => core,
            Some(Tail::LogReciprocal { .. }) => f64::INFINITY,
            Some(Tail::Pareto { alpha, t0 }) => {
                if alpha <= p {
                    return f64::INFINITY;
                }
                let j0 = self.pareto_start + 1;
                let m_stop = (j0 + 1_000_000).max(16);
                let mut sum = 0.0;
                let mut prev = self.analytic_tail_at_int(j0 - 1);
                for j in j0..=m_stop {
                    let cur = self.analytic_tail_at_int(j);
                    sum += (j as f64).powf(p) * (prev - cur);
                    prev = cur;
                }
                // Abel remainder: (M+1)^p T(M) + sum_{j>M} T(j) ((j+1)^p - j^p),
                // with (j+1)^p - j^p <= p 2^(p-1) j^(p-1)
                let m = m_stop as f64;
                let lo = (m + 1.0).powf(p) * prev;
                let hi = lo + p * 2f64.powf(p - 1.0) * t0.powf(alpha) * m.powf(p - alpha) / (alpha - p);
                core + sum + 0.5 * (lo + hi)
            }
        }
    }

    /// All atoms with value `<= cap` (ascending) plus the exact mass above.
    pub fn atoms_up_to(&self, cap: u64) -> (Vec<(u64, f64)>, f64) {
        let mut atoms: Vec<(u64, f64)> =
            self.core.iter().copied().filter(|&(v, _)| v <= cap).collect();
        match self.tail {
            None => {}
            Some(Tail::Pareto { .. }) => {
                let mut prev = self.analytic_tail_at_int(self.pareto_start);
                for j in self.pareto_start + 1..=cap {
                    let cur = self.analytic_tail_at_int(j);
                    if prev - cur > 0.0 {
                        atoms.push((j, prev - cur));
                    }
                    prev = cur;
                }
            }
            Some(Tail::LogReciprocal { c, n0 }) => {
                let mut m = n0;
                while ceil_exp(m) <= cap {
                    atoms.push((ceil_exp(m), c / m as f64 - c / (m + 1) as f64));
                    m += 1;
                }
            }
        }
        atoms.sort_by_key(|&(v, _)| v);
        let rest = self.tail(cap as f64);
        (atoms, rest)
    }
}

/// Tail sum `sum_{i >= from} i^(-s)` with an error estimate, via direct
/// summation plus Euler-Maclaurin.
fn zeta_tail(s: f64, from: u64) -> (f64, f64) {
    debug_assert!(s > 1.0);
    let cut = from + 10_000;
    let mut sum = 0.0;
    for i in from..cut {
        sum += (i as f64).powf(-s);
    }
    let n = cut as f64;
    let em = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0;
    let err = s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    (sum + em, err)
}

/// Extinction probability of the pure branching process with one ancestor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GwExtinction {
    /// Smallest fixed point of the offspring generating function in `[0, 1]`.
    pub q: f64,
    /// Bound on the bias introduced by folding analytic-tail mass beyond
    /// [`PGF_TRUNCATION`] into the top atom (zero for finite laws).
    pub truncation_error: f64,
}

/// Smallest fixed point `q` of the probability generating function of
/// `offspring`, computed by Newton iteration from 0 with a fixed-point polish.
///
/// Analytic-tail offspring laws are truncated at [`PGF_TRUNCATION`] with the
/// folded mass reported as `truncation_error`.
pub fn gw_extinction_probability(offspring: &DiscreteLaw) -> Result<GwExtinction> {
    let mean = offspring.mean();
    if !(mean > 1.0) {
        return Err(Error::NotSupercritical { mean });
    }
    let (mut atoms, rest) = offspring.atoms_up_to(PGF_TRUNCATION);
    let truncated = rest > 0.0;
    if truncated {
        // fold the tail into the top atom: stochastically smaller, so the
        // computed q is an upper bound on the true one
        if let Some(last) = atoms.last_mut().filter(|a| a.0 == PGF_TRUNCATION) {
            last.1 += rest;
        } else {
            atoms.push((PGF_TRUNCATION, rest));
        }
    }
    let f = |q: f64| -> (f64, f64) {
        let mut value = 0.0;
        let mut deriv = 0.0;
        for &(v, p) in &atoms {
            let x = v as f64;
            if v == 0 {
                value += p;
            } else {
                let pw = q.powf(x - 1.0);
                value += p * pw * q;
                deriv += p * x * pw;
            }
        }
        (value, deriv)
    };
    let mut q = 0.0;
    for _ in 0..200 {
        let (fq, dq) = f(q);
        let g = fq - q;
        let gp = dq - 1.0;
        if gp >= 0.0 {
            break;
        }
        let next = (q - g / gp).clamp(0.0, 1.0);
        if (next - q).abs() < 1e-14 {
            q = next;
            break;
        }
        q = next;
    }
    // polish by fixed-point iteration until the residual settles
    for _ in 0..200 {
        let (fq, _) = f(q);
        if (fq - q).abs() < 1e-14 {
            break;
        }
        q = fq;
    }
    let truncation_error = if truncated {
        let (_, dq) = f(q);
        let denom = (1.0 - dq).max(1e-6);
        rest / denom
    } else {
        0.0
    };
    Ok(GwExtinction { q, truncation_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_abs_diff_eq;

    fn two_point() -> DiscreteLaw {
        DiscreteLaw::from_pmf(&[0, 2], &[0.25, 0.75]).unwrap()
    }

    #[test]
    fn constant_law_moments() {
        let law = DiscreteLaw::constant(2);
        assert_eq!(law.mean(), 2.0);
        assert_eq!(law.variance(), 0.0);
        assert_abs_diff_eq!(law.x_log_x_moment(), 2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_point_moments() {
        let law = two_point();
        assert_abs_diff_eq!(law.mean(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(law.variance(), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(law.x_log_x_moment(), 0.75 * 2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn normalization_within_tolerance() {
        for law in [
            DiscreteLaw::constant(5),
            two_point(),
            DiscreteLaw::pareto(1.0, 1.0).unwrap(),
            DiscreteLaw::pareto(1.7, 2.5).unwrap(),
            DiscreteLaw::log_reciprocal(1.0, 2).unwrap(),
            DiscreteLaw::log_reciprocal(0.4, 3).unwrap(),
        ] {
            assert!((law.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
        }
    }

    #[test]
    fn tail_of_constant_law() {
        let law = DiscreteLaw::constant(2);
        assert_eq!(law.tail(1.5), 1.0);
        assert_eq!(law.tail(2.0), 0.0);
    }

    #[test]
    fn pareto_tail_at_integer_thresholds() {
        let law = DiscreteLaw::pareto(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(law.tail(8.0), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(law.tail(1.0), 1.0, epsilon = 1e-15);
        // step function between thresholds
        assert_eq!(law.tail(8.5), law.tail(8.0));
    }

    #[test]
    fn log_reciprocal_tail_formula() {
        let law = DiscreteLaw::log_reciprocal(1.0, 2).unwrap();
        // P[Y > e^n] = 1/n at every threshold n >= 2
        for n in 2u32..=40 {
            let t = (n as f64).exp();
            assert_abs_diff_eq!(law.tail(t), 1.0 / n as f64, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(law.pmf(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.tail((3.0f64).exp()), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn log_reciprocal_rejects_excess_tail_mass() {
        assert!(DiscreteLaw::log_reciprocal(3.0, 2).is_err());
        assert!(DiscreteLaw::pareto(-1.0, 1.0).is_err());
    }

    #[test]
    fn tail_consistency_on_finite_support() {
        let law = DiscreteLaw::from_pmf(&[0, 1, 3, 7], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        for t in [0.0, 0.5, 1.0, 2.9, 3.0, 6.99, 7.0, 10.0] {
            let direct: f64 = law
                .core_atoms()
                .iter()
                .filter(|&&(v, _)| v as f64 > t)
                .map(|&(_, p)| p)
                .sum();
            assert_abs_diff_eq!(law.tail(t), direct, epsilon = 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf_on_finite_law() {
        let law = two_point();
        assert_eq!(law.quantile(0.1), 0);
        assert_eq!(law.quantile(0.2499), 0);
        assert_eq!(law.quantile(0.25), 2);
        assert_eq!(law.quantile(0.999), 2);
    }

    #[test]
    fn sampling_constant_law() {
        let law = DiscreteLaw::constant(2);
        let mut rng = Stream::root(3).sequence();
        for _ in 0..100 {
            assert_eq!(law.sample(&mut rng), 2);
        }
    }

    #[test]
    fn sampling_two_point_frequency() {
        let law = two_point();
        let n = 1_000_000u64;
        let stream = Stream::root(2024);
        let zeros = (0..n).filter(|&i| law.quantile(stream.index_unit(i)) == 0).count();
        let freq = zeros as f64 / n as f64;
        let se = (0.25 * 0.75 / n as f64).sqrt();
        assert!((freq - 0.25).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn sampling_log_reciprocal_tail_frequency() {
        // empirical P[Y > e^4] should match the exact value 1/4
        let law = DiscreteLaw::log_reciprocal(1.0, 2).unwrap();
        let n = 1_000_000u64;
        let threshold = (4.0f64).exp();
        let stream = Stream::root(99);
        let hits = (0..n)
            .filter(|&i| law.quantile(stream.index_unit(i)) as f64 > threshold)
            .count();
        let freq = hits as f64 / n as f64;
        let se = (0.25 * 0.75 / n as f64).sqrt();
        assert!((freq - 0.25).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn pmf_matches_tail_increments_for_pareto() {
        let law = DiscreteLaw::pareto(1.5, 1.0).unwrap();
        let mut total = 0.0;
        for j in 0..=2000u64 {
            total += law.pmf(j);
        }
        assert_abs_diff_eq!(total, 1.0 - law.tail(2000.0), epsilon = 1e-12);
    }

    #[test]
    fn log_plus_moment_verdicts() {
        assert_eq!(DiscreteLaw::constant(0).log_plus_moment(), 0.0);
        assert!(DiscreteLaw::log_reciprocal(1.0, 2).unwrap().log_plus_moment().is_infinite());
        assert!(DiscreteLaw::pareto(1.0, 1.0).unwrap().log_plus_moment().is_finite());
    }

    #[test]
    fn log_plus_moment_matches_layered_quadrature() {
        // independent oracle: E[log_+ X] = sum_{j>=1} P[X > j] (ln(j+1) - ln j)
        let law = DiscreteLaw::pareto(1.0, 1.0).unwrap();
        let mut oracle = 0.0;
        for j in 1..10_000_000u64 {
            oracle += law.tail(j as f64) * (((j + 1) as f64).ln() - (j as f64).ln());
        }
        // remainder of the oracle sum is below tail(1e7)*small
        let got = law.log_plus_moment();
        assert!((got - oracle).abs() < 1e-4, "got {got} oracle {oracle}");
    }

    #[test]
    fn x_log_x_divergence_for_heavy_tails() {
        assert!(DiscreteLaw::pareto(1.0, 1.0).unwrap().x_log_x_moment().is_infinite());
        assert!(DiscreteLaw::log_reciprocal(0.5, 2).unwrap().x_log_x_moment().is_infinite());
        assert!(DiscreteLaw::pareto(2.5, 1.0).unwrap().x_log_x_moment().is_finite());
    }

    #[test]
    fn extinction_probability_two_point() {
        // f(q) = 0.25 + 0.75 q^2 has smallest fixed point 1/3
        let q = gw_extinction_probability(&two_point()).unwrap();
        assert_abs_diff_eq!(q.q, 1.0 / 3.0, epsilon = 1e-10);
        assert_eq!(q.truncation_error, 0.0);
    }

    #[test]
    fn extinction_probability_three_halves() {
        // f(q) = 0.5 + 0.5 q^3: smallest positive root of q^3 - 2q + 1,
        // i.e. (sqrt(5) - 1) / 2
        let law = DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap();
        let q = gw_extinction_probability(&law).unwrap().q;
        let expected = (5f64.sqrt() - 1.0) / 2.0;
        assert_abs_diff_eq!(q, expected, epsilon = 1e-10);
    }

    #[test]
    fn extinction_probability_no_death() {
        let law = DiscreteLaw::constant(2);
        assert_eq!(gw_extinction_probability(&law).unwrap().q, 0.0);
    }

    #[test]
    fn extinction_probability_requires_supercritical() {
        let law = DiscreteLaw::from_pmf(&[0, 1], &[0.5, 0.5]).unwrap();
        assert!(matches!(
            gw_extinction_probability(&law),
            Err(Error::NotSupercritical { .. })
        ));
    }

    #[test]
    fn extinction_fixed_point_residual() {
        for law in [
            two_point(),
            DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap(),
            DiscreteLaw::from_pmf(&[0, 1, 2, 4], &[0.2, 0.2, 0.3, 0.3]).unwrap(),
        ] {
            let q = gw_extinction_probability(&law).unwrap().q;
            assert!((0.0..1.0).contains(&q));
            let f: f64 = law
                .core_atoms()
                .iter()
                .map(|&(v, p)| p * q.powf(v as f64))
                .sum();
            assert!((f - q).abs() < 1e-10, "residual {}", f - q);
        }
    }

    #[test]
    fn law_spec_round_trip() {
        let specs = [
            LawSpec::Pmf { values: vec![0, 2], probs: vec![0.25, 0.75] },
            LawSpec::Const { value: 2 },
            LawSpec::Pareto { alpha: 1.0, t0: 1.0 },
            LawSpec::Example1 { c: 1.0, n0: 2 },
        ];
        for spec in specs {
            let json = serde_json::to_string(&spec).unwrap();
            let back: LawSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(spec, back);
            DiscreteLaw::from_spec(&back).unwrap();
        }
        // wire tags are pinned
        assert!(serde_json::to_string(&LawSpec::Example1 { c: 1.0, n0: 2 })
            .unwrap()
            .contains("\"example1\""));
    }

    #[test]
    fn atoms_up_to_accounts_for_all_mass() {
        let law = DiscreteLaw::log_reciprocal(1.0, 2).unwrap();
        let (atoms, rest) = law.atoms_up_to(10_000);
        let listed: f64 = atoms.iter().map(|&(_, p)| p).sum();
        assert_abs_diff_eq!(listed + rest, 1.0, epsilon = 1e-12);
    }
}
