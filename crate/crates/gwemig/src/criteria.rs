//! Analytic classification of a model: hypothesis checks, the recurrence
//! dichotomy, expected-lifetime series criteria, closed-form limit constants,
//! a von Bahr-Esseen concentration bound, and self-verifying certificates for
//! two deterministic recursions.
//!
//! The lifetime criteria revolve around series of the form
//!
//! ```text
//! sum_{n>=1}  prod_{m=1..n}  P[ Y <= g(m) ]
//! ```
//!
//! with geometric or geometric-times-polynomial growth `g`. Convergence is
//! decided analytically per law family: bounded laws make the factors reach
//! one (divergence), Pareto tails make the factor deficits summable
//! (divergence), and log-reciprocal tails put the term ratio in exactly the
//! regime of the classical Raabe and Gauss ratio tests. A partial-sum
//! diagnostic is available as an independent, assumption-free cross-check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{DiscreteLaw, Tail};
use crate::model::{Coupling, GenerationModel, YDraw};

/// Tuning knobs for the series criteria. The existential parameters are
/// scanned over geometric grids scaled by these values: `epsilon * 2^-i` and
/// `delta = 2^-i` for `i = 0..=20`, `r * 2^j` for `j = 0..=20`.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionParams {
    /// Scale of the prefactor grid in `g(m) = r * base^m ...`.
    pub r: f64,
    /// Scale of the epsilon grid for geometric growth `(lambda + epsilon)^m`.
    pub epsilon: f64,
    /// Polynomial exponent in `g(m) = r * lambda^m * m^(-theta)`; must be > 1.
    pub theta: f64,
    /// Scale of the prefactor grid for the autoregressive lifetime criterion.
    pub b: f64,
    /// Term budget for partial-sum diagnostics.
    pub max_terms: u64,
}

impl Default for CriterionParams {
    fn default() -> Self {
        CriterionParams { r: 1.0, epsilon: 1.0, theta: 1.5, b: 1.0, max_terms: 1_000_000 }
    }
}

impl CriterionParams {
    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.epsilon > 0.0 && self.b > 0.0) {
            return Err(Error::InvalidParam("r, epsilon, b must be positive".into()));
        }
        if !(self.theta > 1.0) {
            return Err(Error::InvalidParam(format!("theta {} must exceed 1", self.theta)));
        }
        Ok(())
    }
}

/// Growth schedule `g(m)` inside the factor `P[Y <= g(m)]`.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum Growth {
    /// `g(m) = r * base^m`
    Geometric { base: f64 },
    /// `g(m) = r * base^m * m^(-theta)`
    GeometricPoly { base: f64, theta: f64 },
}

impl Growth {
    pub fn base(&self) -> f64 {
        match *self {
            Growth::Geometric { base } | Growth::GeometricPoly { base, .. } => base,
        }
    }

    fn value(&self, r: f64, m: u64) -> f64 {
        match *self {
            Growth::Geometric { base } => r * base.powi(m as i32),
            Growth::GeometricPoly { base, theta } => {
                r * base.powi(m as i32) * (m as f64).powf(-theta)
            }
        }
    }

    /// Index from which `g` is nondecreasing.
    fn monotone_from(&self) -> u64 {
        match *self {
            Growth::Geometric { .. } => 1,
            Growth::GeometricPoly { base, theta } => (theta / base.ln()).ceil().max(1.0) as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
    Undetermined,
}

/// How a series verdict was reached.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SeriesMethod {
    /// All factors equal 1 beyond `from`; the terms stop decreasing.
    FactorsReachOne { from: u64 },
    /// A factor vanishes at `at >= 2`; every later term is zero and the
    /// series is a finite sum.
    TruncatedByZeroFactor { at: u64 },
    /// Raabe's test on the analytic term ratio, with the limit
    /// `rho = lim n (a_n / a_{n+1} - 1)`.
    Raabe { limit: f64 },
    /// Gauss refinement at the Raabe boundary `rho = 1`.
    Gauss { limit: f64 },
    /// Factor deficits are summable, so the terms have a positive limit.
    SummableDeficits { deficit_sum: f64 },
    /// Partial sums only; no analytic form was recognized.
    PartialSums,
}

/// Outcome of a series criterion evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport {
    pub verdict: SeriesVerdict,
    #[serde(flatten)]
    pub method: SeriesMethod,
    pub r: f64,
    pub first_factor: f64,
}

/// Partial sums of the factor-product series, as an independent diagnostic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartialSumDiagnostic {
    pub terms: u64,
    pub sum: f64,
    pub last_term: f64,
    /// Fraction of the sum contributed by the last tenth of the terms;
    /// near zero for convergent series, macroscopic for divergent ones.
    pub tail_block_fraction: f64,
}

impl PartialSumDiagnostic {
    /// The partial sums look settled (a bounded-series diagnostic).
    pub fn looks_bounded(&self) -> bool {
        self.tail_block_fraction < 1e-3
    }

    /// The partial sums are still visibly growing.
    pub fn still_growing(&self) -> bool {
        self.tail_block_fraction > 0.05
    }
}

/// Evaluate `sum_n prod_{m<=n} P[Y <= g(m)]` analytically.
///
/// Errors with [`Error::ZeroFactor`] when `P[Y <= g(1)] = 0`, in which case
/// every term vanishes and the series is identically zero.
pub fn series_criterion(
    emigration: &DiscreteLaw,
    growth: Growth,
    r: f64,
    max_terms: u64,
) -> Result<SeriesReport> {
    if !(growth.base() > 1.0) {
        return Err(Error::InvalidParam(format!("growth base {} must exceed 1", growth.base())));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("prefactor r {r} must be positive")));
    }
    let factor = |m: u64| 1.0 - emigration.tail(growth.value(r, m));
    let first_factor = factor(1);
    if first_factor == 0.0 {
        return Err(Error::ZeroFactor);
    }
    // an exactly-zero factor after the first truncates the series
    let scan_to = growth.monotone_from().max(1_000).min(max_terms.max(2));
    for m in 2..=scan_to {
        if factor(m) == 0.0 {
            return Ok(SeriesReport {
                verdict: SeriesVerdict::Converges,
                method: SeriesMethod::TruncatedByZeroFactor { at: m },
                r,
                first_factor,
            });
        }
    }

    match emigration.tail_kind() {
        None => {
            // bounded emigration: factors reach exactly 1 once g(m) clears the
            // top atom, so the terms stop decreasing
            let top = emigration.max_value().unwrap_or(0) as f64;
            let mut m = growth.monotone_from();
            while growth.value(r, m) < top {
                m += 1;
            }
            debug_assert_eq!(emigration.tail(growth.value(r, m)), 0.0);
            Ok(SeriesReport {
                verdict: SeriesVerdict::Diverges,
                method: SeriesMethod::FactorsReachOne { from: m },
                r,
                first_factor,
            })
        }
        Some(Tail::Pareto { alpha, t0 }) => {
            // sum_m P[Y > g(m)] is dominated by a geometric series, so the
            // infinite product of the factors stays positive
            let base = growth.base();
            let m0 = growth.monotone_from();
            let mut deficit_sum = 0.0;
            for m in 1..m0 + 64 {
                deficit_sum += emigration.tail(growth.value(r, m));
            }
            let g_last = growth.value(r, m0 + 63);
            let geo = (g_last.max(t0) / t0).powf(-alpha) / (1.0 - base.powf(-alpha));
            Ok(SeriesReport {
                verdict: SeriesVerdict::Diverges,
                method: SeriesMethod::SummableDeficits { deficit_sum: deficit_sum + geo },
                r,
                first_factor,
            })
        }
        Some(Tail::LogReciprocal { c, .. }) => {
            // the term ratio is a_{n+1}/a_n = 1 - c/h(n+1) with
            // h(m) = log g(m) + O(1), so Raabe's limit is c / log(base)
            let rho = c / growth.base().ln();
            let verdict = if rho > 1.0 + 1e-9 {
                (SeriesVerdict::Converges, SeriesMethod::Raabe { limit: rho })
            } else if rho < 1.0 - 1e-9 {
                (SeriesVerdict::Diverges, SeriesMethod::Raabe { limit: rho })
            } else {
                // ratio 1 - 1/(n + O(log n)): Gauss's test with h = 1
                (SeriesVerdict::Diverges, SeriesMethod::Gauss { limit: rho })
            };
            Ok(SeriesReport { verdict: verdict.0, method: verdict.1, r, first_factor })
        }
    }
}

/// Partial sums of the same series, computed termwise with no analytic input.
pub fn series_partial_sums(
    emigration: &DiscreteLaw,
    growth: Growth,
    r: f64,
    max_terms: u64,
) -> PartialSumDiagnostic {
    let mut term = 1.0f64;
    let mut sum = 0.0f64;
    let checkpoint = max_terms - max_terms / 10;
    let mut sum_at_checkpoint = 0.0;
    let mut terms = 0;
    for n in 1..=max_terms {
        term *= 1.0 - emigration.tail(growth.value(r, n));
        sum += term;
        terms = n;
        if n == checkpoint {
            sum_at_checkpoint = sum;
        }
        if term < 1e-300 {
            if n < checkpoint {
                sum_at_checkpoint = sum;
            }
            break;
        }
    }
    PartialSumDiagnostic {
        terms,
        sum,
        last_term: term,
        tail_block_fraction: if sum > 0.0 { (sum - sum_at_checkpoint) / sum } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisVerdict {
    Holds,
    Fails,
    Undetermined,
}

/// Outcome of the initial-state hypothesis check.
#[derive(Debug, Clone, Serialize)]
pub struct H1Finding {
    pub verdict: HypothesisVerdict,
    pub evidence: H1Evidence,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct H1Evidence {
    pub k: u64,
    /// `P[ sum_{j<=k} xi_j - Y >= k+1 ]`.
    pub probability: f64,
    /// Bracket width from offspring-law truncation (0 for finite laws).
    pub truncation: f64,
}

const CONV_SUPPORT_LIMIT: u64 = 1 << 22;
const XI_TRUNCATION: u64 = 1 << 20;

/// Convolve `law` atoms `count` times (distribution of a sum of i.i.d.
/// draws), dense over `0..=limit`.
fn self_convolution(atoms: &[(u64, f64)], count: u64, limit: u64) -> Result<Vec<f64>> {
    let max_atom = atoms.last().map(|&(v, _)| v).unwrap_or(0);
    let width = count.saturating_mul(max_atom) + 1;
    if width > limit {
        return Err(Error::StateSpaceTooLarge(format!(
            "convolution support {width} exceeds limit {limit}"
        )));
    }
    let mut dist = vec![0.0f64; 1];
    dist[0] = 1.0;
    for _ in 0..count {
        let mut next = vec![0.0f64; dist.len() + max_atom as usize];
        for (s, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(v, q) in atoms {
                next[s + v as usize] += p * q;
            }
        }
        dist = next;
    }
    Ok(dist)
}

fn folded_offspring_atoms(model: &GenerationModel) -> (Vec<(u64, f64)>, f64) {
    let (mut atoms, rest) = model.offspring().atoms_up_to(XI_TRUNCATION);
    if rest > 0.0 {
        if let Some(last) = atoms.last_mut().filter(|a| a.0 == XI_TRUNCATION) {
            last.1 += rest;
        } else {
            atoms.push((XI_TRUNCATION, rest));
        }
    }
    (atoms, rest)
}

/// Exact `P[ sum_{j<=k} xi_j - Y >= k+1 ] > 0`? (Joint enumeration honors the
/// model's coupling for the first offspring draw.)
pub fn check_h1(model: &GenerationModel, k: u64) -> Result<H1Finding> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    let (xi_atoms, xi_rest) = folded_offspring_atoms(model);
    let max_atom = xi_atoms.last().map(|&(v, _)| v).unwrap_or(0);
    // emigration beyond k * max(xi) - (k+1) cannot satisfy the event
    let y_cap = k.saturating_mul(max_atom);
    let rest_dist = self_convolution(&xi_atoms, k - 1, CONV_SUPPORT_LIMIT)?;
    let (joint, _) = model.joint_atoms(XI_TRUNCATION, y_cap);
    let threshold = k + 1;
    let mut probability = 0.0;
    for atom in &joint {
        let y = match atom.y {
            YDraw::Value(y) => y,
            // above the cap the deficit already exceeds any possible sum
            YDraw::Above(_) => continue,
        };
        let need = threshold + y; // x1 + s >= k + 1 + y
        for (s, &p) in rest_dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if atom.xi1 + s as u64 >= need {
                probability += atom.prob * p;
            }
        }
    }
    let truncation = (k as f64) * xi_rest;
    let verdict = if probability > truncation {
        HypothesisVerdict::Holds
    } else if probability == 0.0 && truncation == 0.0 {
        HypothesisVerdict::Fails
    } else if probability == 0.0 {
        HypothesisVerdict::Fails
    } else {
        HypothesisVerdict::Undetermined
    };
    Ok(H1Finding {
        verdict,
        evidence: H1Evidence { k, probability, truncation },
        method: "exact convolution with coupled first draw".into(),
    })
}

/// Outcome of the large-population hypothesis check.
#[derive(Debug, Clone, Serialize)]
pub struct H2Finding {
    pub verdict: HypothesisVerdict,
    pub evidence: H2Evidence,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct H2Evidence {
    /// Largest n checked exactly (0 when a structural shortcut applied).
    pub checked_to: u64,
    /// Established for every n, not just the checked range.
    pub holds_for_all_n: bool,
    /// First n at which the probability vanishes, if any.
    pub fails_at: Option<u64>,
    /// Smallest probability seen over the checked range.
    pub min_probability: f64,
}

/// Verify `P[ sum_{j<=n} xi_j - Y <= n-1 ] > 0` for `n = 1..=n_max`.
///
/// Two structural shortcuts settle all `n` at once: an offspring atom at 0,
/// or unbounded emigration under the independent coupling.
pub fn check_h2(model: &GenerationModel, n_max: u64) -> Result<H2Finding> {
    if model.offspring().pmf(0) > 0.0 {
        return Ok(H2Finding {
            verdict: HypothesisVerdict::Holds,
            evidence: H2Evidence {
                checked_to: 0,
                holds_for_all_n: true,
                fails_at: None,
                min_probability: model.offspring().pmf(0),
            },
            method: "offspring atom at 0: all individuals may fail to reproduce".into(),
        });
    }
    if model.emigration().tail_kind().is_some() && model.coupling() == Coupling::Independent {
        return Ok(H2Finding {
            verdict: HypothesisVerdict::Holds,
            evidence: H2Evidence {
                checked_to: 0,
                holds_for_all_n: true,
                fails_at: None,
                min_probability: f64::NAN,
            },
            method: "unbounded emigration under independence".into(),
        });
    }
    let (xi_atoms, _) = folded_offspring_atoms(model);
    let max_atom = xi_atoms.last().map(|&(v, _)| v).unwrap_or(0);
    let mut min_probability = f64::INFINITY;
    for n in 1..=n_max {
        let y_cap = n.saturating_mul(max_atom);
        let rest_dist = self_convolution(&xi_atoms, n - 1, CONV_SUPPORT_LIMIT)?;
        let (joint, _) = model.joint_atoms(XI_TRUNCATION, y_cap);
        let mut probability = 0.0;
        for atom in &joint {
            match atom.y {
                YDraw::Value(y) => {
                    for (s, &p) in rest_dist.iter().enumerate() {
                        if p > 0.0 && atom.xi1 + s as u64 <= n - 1 + y {
                            probability += atom.prob * p;
                        }
                    }
                }
                // y above n * max(xi) wipes out any possible sum
                YDraw::Above(_) => probability += atom.prob,
            }
        }
        min_probability = min_probability.min(probability);
        if probability == 0.0 {
            return Ok(H2Finding {
                verdict: HypothesisVerdict::Fails,
                evidence: H2Evidence {
                    checked_to: n,
                    holds_for_all_n: false,
                    fails_at: Some(n),
                    min_probability: 0.0,
                },
                method: "exact convolution".into(),
            });
        }
    }
    Ok(H2Finding {
        verdict: HypothesisVerdict::Holds,
        evidence: H2Evidence {
            checked_to: n_max,
            holds_for_all_n: false,
            fails_at: None,
            min_probability,
        },
        method: "exact convolution".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceVerdict {
    /// The lifetime is almost surely finite.
    Recurrent,
    /// Survival has positive probability.
    Transient,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceFinding {
    pub verdict: RecurrenceVerdict,
    pub evidence: RecurrenceEvidence,
    pub method: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceEvidence {
    pub lambda: f64,
    /// `E[log_+ Y]`; infinite iff recurrent.
    pub log_plus_moment: f64,
}

/// The recurrence dichotomy: the chain dies almost surely iff
/// `E[log_+ Y] = infinity`.
pub fn classify_recurrence(model: &GenerationModel) -> Result<RecurrenceFinding> {
    let lambda = model.lambda();
    if !(lambda > 1.0) {
        return Err(Error::NotSupercritical { mean: lambda });
    }
    let log_plus = model.emigration().log_plus_moment();
    let verdict = if log_plus.is_infinite() {
        RecurrenceVerdict::Recurrent
    } else {
        RecurrenceVerdict::Transient
    };
    Ok(RecurrenceFinding {
        verdict,
        evidence: RecurrenceEvidence { lambda, log_plus_moment: log_plus },
        method: "log-moment dichotomy".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeVerdict {
    /// Positive recurrent: `E[tau] < infinity`.
    Finite,
    /// Null recurrent: `tau < infinity` a.s. but `E[tau] = infinity`.
    InfiniteNullRecurrent,
    /// Transient: survival has positive probability, so `E[tau] = infinity`.
    InfiniteTransient,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct LifetimeFinding {
    pub verdict: LifetimeVerdict,
    pub evidence: LifetimeEvidence,
    pub method: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct LifetimeEvidence {
    /// Witness for the positive-recurrence series condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergent: Option<SeriesWitness>,
    /// Witness for the null-recurrence series condition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergent: Option<SeriesWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesWitness {
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub report: SeriesReport,
}

fn geometric_grid(scale: f64) -> impl Iterator<Item = f64> {
    (0..=20).map(move |i| scale * 0.5f64.powi(i))
}

fn first_nonzero_r(
    emigration: &DiscreteLaw,
    growth: Growth,
    r_scale: f64,
    max_terms: u64,
) -> Option<(f64, SeriesReport)> {
    for j in 0..=20 {
        let r = r_scale * 2f64.powi(j);
        match series_criterion(emigration, growth, r, max_terms) {
            Ok(report) => return Some((r, report)),
            Err(Error::ZeroFactor) => continue,
            Err(_) => return None,
        }
    }
    None
}

/// Classify the expected lifetime of a recurrent model.
///
/// Finite expectation is certified by a convergent geometric-growth series
/// for some grid epsilon; infinite expectation by a divergent
/// geometric-polynomial series plus the side conditions (a finite
/// `E[xi^(1+delta)]` moment and independent coupling). Inside the gap the
/// verdict is honestly undetermined.
pub fn classify_lifetime(model: &GenerationModel, params: &CriterionParams) -> Result<LifetimeFinding> {
    params.validate()?;
    let recurrence = classify_recurrence(model)?;
    if recurrence.verdict == RecurrenceVerdict::Transient {
        return Ok(LifetimeFinding {
            verdict: LifetimeVerdict::InfiniteTransient,
            evidence: LifetimeEvidence {
                note: Some(format!(
                    "E[log_+ Y] = {} is finite, so survival has positive probability",
                    recurrence.evidence.log_plus_moment
                )),
                ..Default::default()
            },
            method: "recurrence precondition".into(),
        });
    }
    let lambda = model.lambda();
    let y = model.emigration();

    // positive recurrence: exists epsilon with a convergent series
    for epsilon in geometric_grid(params.epsilon) {
        if let Some((_, report)) =
            first_nonzero_r(y, Growth::Geometric { base: lambda + epsilon }, params.r, params.max_terms)
        {
            if report.verdict == SeriesVerdict::Converges {
                return Ok(LifetimeFinding {
                    verdict: LifetimeVerdict::Finite,
                    evidence: LifetimeEvidence {
                        convergent: Some(SeriesWitness {
                            epsilon: Some(epsilon),
                            theta: None,
                            report,
                        }),
                        ..Default::default()
                    },
                    method: "convergent geometric series".into(),
                });
            }
        }
    }

    // null recurrence: divergent polynomial-corrected series + side conditions
    let growth = Growth::GeometricPoly { base: lambda, theta: params.theta };
    if let Some((_, report)) = first_nonzero_r(y, growth, params.r, params.max_terms) {
        if report.verdict == SeriesVerdict::Diverges {
            let delta = geometric_grid(1.0).find(|&d| model.offspring().power_moment(1.0 + d).is_finite());
            match (delta, model.coupling()) {
                (Some(delta), Coupling::Independent) => {
                    return Ok(LifetimeFinding {
                        verdict: LifetimeVerdict::InfiniteNullRecurrent,
                        evidence: LifetimeEvidence {
                            divergent: Some(SeriesWitness {
                                epsilon: None,
                                theta: Some(params.theta),
                                report,
                            }),
                            moment_delta: Some(delta),
                            ..Default::default()
                        },
                        method: "divergent geometric-polynomial series".into(),
                    });
                }
                (delta, coupling) => {
                    let mut notes = Vec::new();
                    if delta.is_none() {
                        notes.push("no grid delta with finite E[xi^(1+delta)]".to_string());
                    }
                    if coupling != Coupling::Independent {
                        notes.push("coupling is not independent".to_string());
                    }
                    return Ok(LifetimeFinding {
                        verdict: LifetimeVerdict::Undetermined,
                        evidence: LifetimeEvidence {
                            divergent: Some(SeriesWitness {
                                epsilon: None,
                                theta: Some(params.theta),
                                report,
                            }),
                            note: Some(notes.join("; ")),
                            ..Default::default()
                        },
                        method: "divergent series without side conditions".into(),
                    });
                }
            }
        }
    }

    Ok(LifetimeFinding {
        verdict: LifetimeVerdict::Undetermined,
        evidence: LifetimeEvidence {
            note: Some("neither series condition certified on the tested grids".into()),
            ..Default::default()
        },
        method: "criteria gap".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZernerVerdict {
    ExpectationInfinite,
    ExpectationFinite,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZernerFinding {
    pub verdict: ZernerVerdict,
    pub evidence: ZernerEvidence,
    pub method: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct ZernerEvidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SeriesReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Zerner's recurrence criterion for the autoregressive reduction
/// (constant offspring `xi = lambda`): `E[tau] = infinity` iff
/// `sum_n prod_{m<=n} P[Y <= b lambda^m] = infinity` for some `b > 0`.
pub fn zerner_lifetime(model: &GenerationModel, params: &CriterionParams) -> Result<ZernerFinding> {
    params.validate()?;
    let Some(lambda) = model.offspring().constant_value() else {
        return Ok(ZernerFinding {
            verdict: ZernerVerdict::Undetermined,
            evidence: ZernerEvidence {
                note: Some("criterion applies to constant offspring laws only".into()),
                ..Default::default()
            },
            method: "not applicable".into(),
        });
    };
    if lambda < 2 {
        return Err(Error::NotSupercritical { mean: lambda as f64 });
    }
    let growth = Growth::Geometric { base: lambda as f64 };
    match first_nonzero_r(model.emigration(), growth, params.b, params.max_terms) {
        Some((b, report)) => {
            let verdict = match report.verdict {
                SeriesVerdict::Diverges => ZernerVerdict::ExpectationInfinite,
                SeriesVerdict::Converges => ZernerVerdict::ExpectationFinite,
                SeriesVerdict::Undetermined => ZernerVerdict::Undetermined,
            };
            Ok(ZernerFinding {
                verdict,
                evidence: ZernerEvidence { b: Some(b), report: Some(report), ..Default::default() },
                method: "autoregressive recurrence series".into(),
            })
        }
        None => Ok(ZernerFinding {
            verdict: ZernerVerdict::Undetermined,
            evidence: ZernerEvidence {
                note: Some("every tested prefactor b gave a zero first factor".into()),
                ..Default::default()
            },
            method: "autoregressive recurrence series".into(),
        }),
    }
}

/// Full classification report; serializes with one object per verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub h1: H1Finding,
    pub h2: H2Finding,
    pub recurrence: RecurrenceFinding,
    pub lifetime: LifetimeFinding,
    pub zerner: ZernerFinding,
}

impl ClassificationReport {
    pub fn all_undetermined(&self) -> bool {
        self.h1.verdict == HypothesisVerdict::Undetermined
            && self.h2.verdict == HypothesisVerdict::Undetermined
            && self.lifetime.verdict == LifetimeVerdict::Undetermined
            && self.zerner.verdict == ZernerVerdict::Undetermined
    }
}

/// Run every check against one model.
pub fn classify(
    model: &GenerationModel,
    k: u64,
    h2_n_max: u64,
    params: &CriterionParams,
) -> Result<ClassificationReport> {
    Ok(ClassificationReport {
        h1: check_h1(model, k)?,
        h2: check_h2(model, h2_n_max)?,
        recurrence: classify_recurrence(model)?,
        lifetime: classify_lifetime(model, params)?,
        zerner: zerner_lifetime(model, params)?,
    })
}

/// Upper summation range for [`extinction_tail_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SumRange {
    /// Horizon `N >= 2`: sum over `l = 1..=N-1`.
    UpTo(u32),
    Infinite,
}

/// The limiting ratio of `P[tau < N | Z_0 = k]` to `P[Y > k]` under a
/// regularly varying emigration tail: `sum_{l=1}^{N-1} lambda^(-alpha l)`.
pub fn extinction_tail_ratio(lambda: f64, alpha: f64, range: SumRange) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::NotSupercritical { mean: lambda });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam(format!("alpha {alpha} must be positive")));
    }
    let x = lambda.powf(-alpha);
    debug_assert!(x < 1.0);
    match range {
        SumRange::Infinite => Ok(x / (1.0 - x)),
        SumRange::UpTo(n) => {
            if n < 2 {
                return Err(Error::InvalidParam(format!("horizon N = {n} must be >= 2")));
            }
            Ok(x * (1.0 - x.powi(n as i32 - 1)) / (1.0 - x))
        }
    }
}

/// The limiting ratio of `P[X_inf > k]` to `P[Y > k]` for the perpetuity
/// `X_inf = sum A^n Y_{n+1}` (Grincevicius): `1 / (1 - E[A^alpha])`.
pub fn perpetuity_tail_ratio(ea: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&ea) {
        return Err(Error::OutOfRange(format!("E[A^alpha] = {ea} must lie in [0, 1)")));
    }
    Ok(1.0 / (1.0 - ea))
}

/// von Bahr-Esseen tail bound for a centered i.i.d. sum with
/// `c = E[|V|^(1+delta)] < infinity`:
/// `P[|S_n| > t] <= min(1, 2 c n t^(-1-delta))`.
pub fn von_bahr_esseen_bound(c_moment: f64, delta: f64, n: u64, t: f64) -> Result<f64> {
    if !(c_moment > 0.0 && t > 0.0 && n >= 1) {
        return Err(Error::InvalidParam("c, t must be positive and n >= 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::OutOfRange(format!("delta {delta} must lie in (0, 1]")));
    }
    Ok((2.0 * c_moment * n as f64 * t.powf(-1.0 - delta)).min(1.0))
}

pub mod recursion {
    //! Certificates for the drained linear recursion `x_{n+1} = a x_n - b_n`.
    //!
    //! Both certificates are self-verifying: replaying the returned schedule
    //! reproduces the claimed inequalities with plain float comparisons and
    //! no tolerance, because construction and replay share one code path.

    use serde::Serialize;

    use crate::error::{Error, Result};

    /// Certificate that the two-phase drained recursion grows geometrically.
    ///
    /// Phase one (steps `1..=switch_n`) drains `head_drains[m-1] =
    /// delta_used * (a - epsilon)^m`; afterwards step `n+1` drains
    /// `(a - epsilon)^n`. The certificate asserts `x_n >= growth_rate^n`
    /// for `1 <= n <= horizon`.
    #[derive(Debug, Clone, Serialize)]
    pub struct GrowthCertificate {
        pub a: f64,
        pub epsilon: f64,
        pub switch_n: usize,
        pub head_drains: Vec<f64>,
        pub delta_used: f64,
        pub growth_rate: f64,
        pub horizon: usize,
    }

    /// Scaled path `u_n = x_n / a^n`; keeps a 1000-step horizon inside f64.
    fn scaled_path(a: f64, epsilon: f64, delta: f64, switch_n: usize, horizon: usize) -> Vec<f64> {
        let q = (a - epsilon) / a;
        let mut u = Vec::with_capacity(horizon + 1);
        u.push(1.0f64);
        for n in 0..horizon {
            let m = n + 1;
            let drain = if m <= switch_n {
                delta * q.powi(m as i32)
            } else {
                q.powi(n as i32) / a
            };
            u.push(u[n] - drain);
        }
        u
    }

    /// Search for a switch point (shrinking the drain scale if needed) such
    /// that the recursion certifies geometric growth over the horizon.
    pub fn certify_growth(a: f64, epsilon: f64, delta: f64, horizon: usize) -> Result<GrowthCertificate> {
        if !(a > 1.0) {
            return Err(Error::InvalidParam(format!("a = {a} must exceed 1")));
        }
        if !(epsilon > 0.0 && a - epsilon > 1.0) {
            return Err(Error::InvalidParam(format!(
                "epsilon = {epsilon} must satisfy 0 < epsilon < a - 1"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParam(format!("delta = {delta} must lie in (0, 1)")));
        }
        if horizon == 0 {
            return Err(Error::InvalidParam("horizon must be >= 1".into()));
        }
        let mut delta_try = delta;
        for _ in 0..64 {
            for switch_n in 1..=64usize.min(horizon) {
                let u = scaled_path(a, epsilon, delta_try, switch_n, horizon);
                if u[1..].iter().any(|&v| v <= 0.0) {
                    continue;
                }
                // candidate rate: a * min_n u_n^(1/n)
                let log_rate = u[1..]
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v.ln() / (i + 1) as f64)
                    .fold(f64::INFINITY, f64::min);
                let mut rate = a * log_rate.exp();
                if rate <= 1.0 + 1e-9 {
                    continue;
                }
                // tighten against float rounding until the replay is exact
                for _ in 0..8 {
                    let ratio = rate / a;
                    let ok = u[1..]
                        .iter()
                        .enumerate()
                        .all(|(i, &v)| v >= ratio.powi((i + 1) as i32));
                    if ok {
                        let head_drains =
                            (1..=switch_n).map(|m| delta_try * (a - epsilon).powi(m as i32)).collect();
                        return Ok(GrowthCertificate {
                            a,
                            epsilon,
                            switch_n,
                            head_drains,
                            delta_used: delta_try,
                            growth_rate: rate,
                            horizon,
                        });
                    }
                    rate *= 1.0 - 1e-12;
                }
            }
            delta_try *= 0.5;
        }
        Err(Error::SearchExhausted(
            "no switch point certifies geometric growth for any tested drain scale".into(),
        ))
    }

    /// Replay a [`GrowthCertificate`]; true iff `x_n >= growth_rate^n` holds
    /// at every step up to its horizon.
    pub fn replay_growth(cert: &GrowthCertificate) -> bool {
        let u = scaled_path(cert.a, cert.epsilon, cert.delta_used, cert.switch_n, cert.horizon);
        let ratio = cert.growth_rate / cert.a;
        cert.growth_rate > 1.0
            && u[1..]
                .iter()
                .enumerate()
                .all(|(i, &v)| v >= ratio.powi((i + 1) as i32))
    }

    /// Certificate that the recursion survives one large drain spike.
    ///
    /// For every spike position `l = 1..=n-1`, the recursion
    /// `x_{j+1} = a x_j - b_j` with `b_l = (a - epsilon1)^l` and
    /// `b_j = epsilon2 (a - epsilon1)^j` elsewhere keeps `x_j >= epsilon1`
    /// for `j = 1..=n`.
    #[derive(Debug, Clone, Copy, Serialize)]
    pub struct SpikeCertificate {
        pub a: f64,
        pub epsilon1: f64,
        pub n: usize,
        pub epsilon2: f64,
    }

    fn spike_feasible(a: f64, epsilon1: f64, n: usize, epsilon2: f64) -> bool {
        for l in 1..n {
            let mut x = 1.0f64;
            for j in 0..n {
                let b = if j == l {
                    (a - epsilon1).powi(l as i32)
                } else {
                    epsilon2 * (a - epsilon1).powi(j as i32)
                };
                x = a * x - b;
                if x < epsilon1 {
                    return false;
                }
            }
        }
        true
    }

    /// Bisect for a drain scale `epsilon2` surviving every spike position.
    pub fn certify_spike_tolerance(a: f64, epsilon1: f64, n: usize) -> Result<SpikeCertificate> {
        if !(a > 1.0 && epsilon1 > 0.0 && a - epsilon1 > 1.0) {
            return Err(Error::InvalidParam(format!(
                "need a > 1 and 0 < epsilon1 < a - 1, got a = {a}, epsilon1 = {epsilon1}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParam(format!("n = {n} must be >= 2")));
        }
        let mut hi = a - epsilon1; // drains x_1 below epsilon1 already
        let mut lo = hi;
        let mut found = false;
        for _ in 0..80 {
            lo /= 2.0;
            if spike_feasible(a, epsilon1, n, lo) {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::SearchExhausted(format!(
                "no feasible epsilon2 found for a = {a}, epsilon1 = {epsilon1}, n = {n}"
            )));
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if spike_feasible(a, epsilon1, n, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        debug_assert!(spike_feasible(a, epsilon1, n, lo));
        Ok(SpikeCertificate { a, epsilon1, n, epsilon2: lo })
    }

    /// Replay a [`SpikeCertificate`] by direct iteration over all spike
    /// positions.
    pub fn replay_spike(cert: &SpikeCertificate) -> bool {
        spike_feasible(cert.a, cert.epsilon1, cert.n, cert.epsilon2)
    }
}
