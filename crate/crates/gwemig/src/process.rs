//! Step-and-simulate engines for the process family.
//!
//! All variants share one generation mechanism: generation `n` of a trial
//! reads its randomness from `trial_stream.derive(n)`, individual `j`'s
//! offspring count from indexed variate `j`, and the emigration draw from
//! index 0 (index 1 under the comonotone coupling). Because every variate is
//! addressed rather than consumed, two runs that should share randomness
//! (domination couplings, the decomposition pair, the renewal/absorbed pair)
//! replay exactly the same values by construction.
//!
//! Offspring sums over large populations are aggregated (constant laws
//! multiply; finite laws use a multinomial split via sequential binomials;
//! analytic tails split core/tail) from a reserved region of the generation
//! stream. Aggregation is exact in distribution. `simulate_exact` forces
//! per-individual draws instead, for pathwise coupling work.
//!
//! States saturate at [`STATE_CAP`]; a trajectory that touches the cap is
//! frozen there and flagged `overflow`. Downstream estimators count flagged
//! trajectories as survivors, which monotonicity justifies up to the
//! (astronomically small) chance of an emigration draw above the cap.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Coupling, Generation, GenerationModel};
use crate::rng::{SeedSpec, Stream};

/// States are capped here; reaching the cap sets the trajectory's
/// `overflow` flag and freezes the state.
pub const STATE_CAP: u64 = 1 << 62;

/// Populations up to this size are summed draw by draw even in fast mode.
const EXACT_SUM_LIMIT: u64 = 1024;

/// Fast-mode limit on individually drawn analytic-tail offspring per
/// generation; beyond it the state is treated as capped.
const TAIL_DRAW_LIMIT: u64 = 10_000_000;

/// Reserved derivation label space for decomposition rejection attempts.
const ATTEMPT_BASE: u64 = 1 << 32;

/// Which chain to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// The emigration chain: `Z_{n+1} = (sum_{j<=Z_n} xi_j - Y)_+`, absorbing at 0.
    Emigration,
    /// The renewal chain: as `Emigration` but restarted at `k` from 0.
    Renewal,
    /// Pure branching, no emigration, absorbing at 0.
    Pure,
    /// The coupled pair of Lemma-style decomposition runs, conditioned on the
    /// first generation landing exactly on `k0`.
    Decomposition { k0: u64 },
    /// Constant-offspring reduction; requires a constant offspring law.
    DeterministicAr,
}

/// A process variant with its model and initial population.
#[derive(Debug, Clone)]
pub struct ProcessConfig {
    pub model: GenerationModel,
    pub initial_k: u64,
    pub variant: Variant,
}

impl ProcessConfig {
    pub fn new(model: GenerationModel, initial_k: u64, variant: Variant) -> Result<Self> {
        if initial_k == 0 {
            return Err(Error::InvalidParam("initial population must be >= 1".into()));
        }
        match variant {
            Variant::DeterministicAr => {
                if model.offspring().constant_value().is_none() {
                    return Err(Error::NotDeterministic);
                }
            }
            Variant::Decomposition { k0 } => {
                if k0 <= initial_k {
                    return Err(Error::InvalidParam(format!(
                        "decomposition requires k0 > k, got k0 = {k0}, k = {initial_k}"
                    )));
                }
            }
            _ => {}
        }
        Ok(ProcessConfig { model, initial_k, variant })
    }
}

/// Provenance of one trial's randomness; enough to replay it bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub master_seed: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        TrialSeed { master_seed, trial }
    }

    pub fn stream(&self) -> Stream {
        SeedSpec::new(self.master_seed).trial_stream(self.trial)
    }
}

/// One realized path.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    /// `Z_0..Z_H` (shorter if absorbed earlier).
    pub states: Vec<u64>,
    /// First `n >= 1` with `Z_n = 0`; `None` if censored at the horizon.
    /// For the renewal variant this is the first return time to 0.
    pub tau: Option<usize>,
    /// `states[n] / lambda^n`.
    pub martingale: Vec<f64>,
    pub seed: TrialSeed,
    /// The path touched [`STATE_CAP`] (or exceeded an aggregation limit).
    pub overflow: bool,
}

impl Trajectory {
    /// Final state of the path.
    pub fn last_state(&self) -> u64 {
        *self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn extinct(&self) -> bool {
        self.tau.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SumMode {
    Fast,
    Exact,
}

fn offspring_sum(model: &GenerationModel, gen: &Generation, count: u64, mode: SumMode) -> (u64, bool) {
    if count == 0 {
        return (0, false);
    }
    if let Some(c) = model.offspring().constant_value() {
        let s = count as u128 * c as u128;
        return cap128(s);
    }
    if mode == SumMode::Exact || count <= EXACT_SUM_LIMIT {
        let s = gen.offspring_sum_exact(1, count);
        return (s.min(STATE_CAP), s >= STATE_CAP);
    }
    // aggregated draw: first individual stays indexed (the comonotone
    // coupling reads its uniform), the rest are split by counts
    let x1 = gen.offspring_at(1);
    let mut rng = gen.stream().sequence();
    let rest = count - 1;
    let law = model.offspring();
    let mut sum = x1 as u128;
    let mut overflow = false;

    let tail_mass = law.tail_mass();
    let (tail_count, core_count) = if tail_mass > 0.0 {
        let t = Binomial::new(rest, tail_mass.min(1.0)).expect("valid p").sample(&mut rng);
        (t, rest - t)
    } else {
        (0, rest)
    };

    // core atoms by a multinomial split
    let atoms = law.core_atoms();
    let mut remaining = core_count;
    let mut rem_mass = law.core_mass();
    for (i, &(v, p)) in atoms.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let n_i = if i + 1 == atoms.len() {
            remaining
        } else {
            let cond = (p / rem_mass).clamp(0.0, 1.0);
            Binomial::new(remaining, cond).expect("valid p").sample(&mut rng)
        };
        sum += v as u128 * n_i as u128;
        remaining -= n_i;
        rem_mass -= p;
    }

    if tail_count > TAIL_DRAW_LIMIT {
        // populations this size are already beyond any horizon of interest
        return (STATE_CAP, true);
    }
    let core_mass = law.core_mass();
    for _ in 0..tail_count {
        let u = core_mass + rng.next_unit() * tail_mass;
        sum += law.quantile(u.min(1.0 - f64::EPSILON)) as u128;
        if sum >= STATE_CAP as u128 {
            overflow = true;
            break;
        }
    }
    let (s, ovf) = cap128(sum);
    (s, ovf || overflow)
}

fn cap128(s: u128) -> (u64, bool) {
    if s >= STATE_CAP as u128 {
        (STATE_CAP, true)
    } else {
        (s as u64, false)
    }
}

fn step_with(model: &GenerationModel, gen: &Generation, state: u64, mode: SumMode) -> (u64, bool) {
    if state == 0 {
        return (0, false);
    }
    let y = gen.emigration();
    let (s, overflow) = offspring_sum(model, gen, state, mode);
    if overflow {
        (STATE_CAP, true)
    } else {
        (s.saturating_sub(y), false)
    }
}

fn pure_step_with(model: &GenerationModel, gen: &Generation, state: u64, mode: SumMode) -> (u64, bool) {
    if state == 0 {
        return (0, false);
    }
    offspring_sum(model, gen, state, mode)
}

/// One transition of the emigration chain: `(sum_{j<=state} xi_j - Y)_+`,
/// absorbing at 0. Per-individual draws, exact under any coupling.
pub fn step(state: u64, model: &GenerationModel, gen: &Generation) -> u64 {
    step_with(model, gen, state, SumMode::Exact).0
}

/// One transition of the renewal chain: state 0 maps to `initial_k`,
/// otherwise as [`step`].
pub fn renewal_step(state: u64, model: &GenerationModel, gen: &Generation, initial_k: u64) -> u64 {
    if state == 0 {
        initial_k
    } else {
        step_with(model, gen, state, SumMode::Exact).0
    }
}

/// One coupled transition of the decomposition pair. The first component
/// steps like the emigration chain on offspring draws `1..=z1` plus the
/// emigration draw; the second steps as pure branching on draws
/// `z1+1..=z1+z2` of the same generation.
pub fn decompose_step(pair: (u64, u64), model: &GenerationModel, gen: &Generation) -> (u64, u64) {
    let (z1, z2) = pair;
    let z1_next = if z1 == 0 {
        0
    } else {
        let s = gen.offspring_sum_exact(1, z1);
        s.saturating_sub(gen.emigration())
    };
    let z2_next = gen.offspring_sum_exact(z1 + 1, z2);
    (z1_next, z2_next)
}

/// Simulate one trajectory with aggregated offspring sums.
pub fn simulate(config: &ProcessConfig, horizon: usize, seed: TrialSeed) -> Trajectory {
    simulate_mode(config, horizon, seed, SumMode::Fast)
}

/// Simulate with per-individual offspring draws throughout, so that coupled
/// replays share every variate. Only usable while states stay moderate.
pub fn simulate_exact(config: &ProcessConfig, horizon: usize, seed: TrialSeed) -> Trajectory {
    simulate_mode(config, horizon, seed, SumMode::Exact)
}

fn simulate_mode(config: &ProcessConfig, horizon: usize, seed: TrialSeed, mode: SumMode) -> Trajectory {
    debug_assert!(horizon >= 1);
    if let Variant::Decomposition { k0 } = config.variant {
        return decomposition_as_trajectory(config, k0, horizon, seed);
    }
    let model = &config.model;
    let k = config.initial_k;
    let stream = seed.stream();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(k);
    let mut z = k;
    let mut tau = None;
    let mut overflow = false;
    for n in 1..=horizon {
        let gen = Generation::new(model, stream.derive(n as u64));
        let (next, ovf) = match config.variant {
            Variant::Renewal => {
                if z == 0 {
                    (k, false)
                } else {
                    step_with(model, &gen, z, mode)
                }
            }
            Variant::Pure => pure_step_with(model, &gen, z, mode),
            _ => step_with(model, &gen, z, mode),
        };
        overflow |= ovf;
        z = if ovf { STATE_CAP } else { next };
        states.push(z);
        if z == 0 {
            if tau.is_none() {
                tau = Some(n);
            }
            if config.variant != Variant::Renewal {
                break;
            }
        }
    }
    finish_trajectory(states, tau, seed, overflow, config.model.lambda())
}

fn finish_trajectory(
    states: Vec<u64>,
    tau: Option<usize>,
    seed: TrialSeed,
    overflow: bool,
    lambda: f64,
) -> Trajectory {
    let martingale = states
        .iter()
        .enumerate()
        .map(|(n, &z)| z as f64 / lambda.powi(n as i32))
        .collect();
    Trajectory { states, tau, martingale, seed, overflow }
}

/// The emigration draws `Y_1..Y_H` a trial would see, replayed without
/// running the chain (they are indexed, not consumed).
pub fn emigration_draws(model: &GenerationModel, horizon: usize, seed: TrialSeed) -> Vec<u64> {
    let stream = seed.stream();
    (1..=horizon)
        .map(|n| Generation::new(model, stream.derive(n as u64)).emigration())
        .collect()
}

/// A coupled decomposition run, conditioned on `Z_1 = k0` by rejection.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionRun {
    /// `Z_1..Z_H` of the full chain (so `z[0] = k0`).
    pub z: Vec<u64>,
    /// First component, starting at `k`.
    pub z1: Vec<u64>,
    /// Second component, starting at `k0 - k`.
    pub z2: Vec<u64>,
    /// Rejected first generations before acceptance.
    pub rejected: u64,
}

/// Run the decomposition pair with `Z_0 = k`, conditioning on `Z_1 = k0` by
/// rejection sampling of the first generation. All draws are per-individual,
/// so the pathwise identity `Z_n = Z1_n + Z2_n` (while `Z1_n > 0`) holds
/// exactly on the coupled path.
pub fn simulate_decomposition(
    model: &GenerationModel,
    k: u64,
    k0: u64,
    horizon: usize,
    seed: TrialSeed,
    max_attempts: u64,
) -> Result<DecompositionRun> {
    if k0 <= k {
        return Err(Error::InvalidParam(format!("k0 = {k0} must exceed k = {k}")));
    }
    let trial_stream = seed.stream();
    for attempt in 0..max_attempts {
        let attempt_stream = trial_stream.derive(ATTEMPT_BASE + attempt);
        let gen1 = Generation::new(model, attempt_stream.derive(1));
        let first = {
            let s = gen1.offspring_sum_exact(1, k);
            s.saturating_sub(gen1.emigration())
        };
        if first != k0 {
            continue;
        }
        let mut z = vec![k0];
        let mut z1 = vec![k];
        let mut z2 = vec![k0 - k];
        let (mut cur_z, mut cur_z1, mut cur_z2) = (k0, k, k0 - k);
        for n in 2..=horizon {
            let gen = Generation::new(model, attempt_stream.derive(n as u64));
            let (n1, n2) = decompose_step((cur_z1, cur_z2), model, &gen);
            let nz = if cur_z == 0 {
                0
            } else {
                let s = gen.offspring_sum_exact(1, cur_z);
                s.saturating_sub(gen.emigration())
            };
            cur_z = nz;
            cur_z1 = n1;
            cur_z2 = n2;
            z.push(nz);
            z1.push(n1);
            z2.push(n2);
        }
        return Ok(DecompositionRun { z, z1, z2, rejected: attempt });
    }
    Err(Error::SearchExhausted(format!(
        "no first generation hit k0 = {k0} in {max_attempts} attempts"
    )))
}

fn decomposition_as_trajectory(
    config: &ProcessConfig,
    k0: u64,
    horizon: usize,
    seed: TrialSeed,
) -> Trajectory {
    let run = simulate_decomposition(&config.model, config.initial_k, k0, horizon, seed, u64::MAX)
        .expect("rejection sampling with unbounded attempts");
    let mut states = Vec::with_capacity(run.z.len() + 1);
    states.push(config.initial_k);
    states.extend_from_slice(&run.z);
    let tau = states.iter().position(|&z| z == 0);
    finish_trajectory(states, tau, seed, false, config.model.lambda())
}

/// Closed-form path of the constant-offspring reduction.
#[derive(Debug, Clone, Serialize)]
pub struct ArPath {
    /// `hat_Z_n = lambda^n k - sum_{j<=n} Y_j lambda^(n-j)`; the process
    /// state is `(hat_Z_n)_+` as long as arithmetic stays exact.
    pub hat_z: Vec<f64>,
    /// The autoregressive companion `hat_X_0 = 0`,
    /// `hat_X_{n+1} = hat_X_n / lambda + Y_{n+1}`.
    pub hat_x: Vec<f64>,
}

/// Evaluate the closed form for given emigration draws.
pub fn ar_closed_form(lambda: f64, k: u64, y_draws: &[u64]) -> ArPath {
    let n = y_draws.len();
    let mut hat_z = Vec::with_capacity(n + 1);
    let mut hat_x = Vec::with_capacity(n + 1);
    hat_z.push(k as f64);
    hat_x.push(0.0);
    for (i, &y) in y_draws.iter().enumerate() {
        let m = i + 1;
        let mut z = lambda.powi(m as i32) * k as f64;
        for (j, &yj) in y_draws[..m].iter().enumerate() {
            z -= yj as f64 * lambda.powi((m - (j + 1)) as i32);
        }
        hat_z.push(z);
        hat_x.push(hat_x[i] / lambda + y as f64);
    }
    ArPath { hat_z, hat_x }
}

/// Simulate the constant-offspring chain and return it with the closed-form
/// path driven by the same emigration draws.
pub fn ar_reduction(config: &ProcessConfig, horizon: usize, seed: TrialSeed) -> Result<(Trajectory, ArPath)> {
    let lambda = config
        .model
        .offspring()
        .constant_value()
        .ok_or(Error::NotDeterministic)? as f64;
    let traj = simulate(config, horizon, seed);
    let y = emigration_draws(&config.model, traj.states.len() - 1, seed);
    Ok((traj, ar_closed_form(lambda, config.initial_k, &y)))
}

/// `true` if the independence hypothesis holds for this model's coupling.
pub fn coupling_is_independent(model: &GenerationModel) -> bool {
    model.coupling() == Coupling::Independent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::DiscreteLaw;
    use crate::model::Coupling;

    fn model(xi: DiscreteLaw, y: DiscreteLaw) -> GenerationModel {
        GenerationModel::new(xi, y, Coupling::Independent).unwrap()
    }

    fn seed(t: u64) -> TrialSeed {
        TrialSeed::new(1234, t)
    }

    #[test]
    fn absorbing_state_stays_zero() {
        let m = model(DiscreteLaw::constant(2), DiscreteLaw::constant(1));
        let gen = Generation::new(&m, Stream::root(1));
        assert_eq!(step(0, &m, &gen), 0);
    }

    #[test]
    fn deterministic_step_values() {
        let m = model(DiscreteLaw::constant(2), DiscreteLaw::constant(1));
        let gen = Generation::new(&m, Stream::root(1));
        // 3 individuals: (6 - 1)_+ = 5
        assert_eq!(step(3, &m, &gen), 5);
    }

    #[test]
    fn step_clamps_at_zero() {
        let m = model(DiscreteLaw::constant(1), DiscreteLaw::constant(7));
        let gen = Generation::new(&m, Stream::root(1));
        // 2 individuals: (2 - 7)_+ = 0
        assert_eq!(step(2, &m, &gen), 0);
    }

    #[test]
    fn renewal_restarts_at_k() {
        let m = model(DiscreteLaw::constant(2), DiscreteLaw::constant(1));
        let gen = Generation::new(&m, Stream::root(1));
        assert_eq!(renewal_step(0, &m, &gen, 5), 5);
        assert_eq!(renewal_step(3, &m, &gen, 5), 5);
    }

    #[test]
    fn immediate_extinction_trajectory() {
        // xi = 2, y = 2, k = 1: (2 - 2)_+ = 0 at the first step
        let m = model(DiscreteLaw::constant(2), DiscreteLaw::constant(2));
        let cfg = ProcessConfig::new(m, 1, Variant::Emigration).unwrap();
        let t = simulate(&cfg, 10, seed(0));
        assert_eq!(t.states, vec![1, 0]);
        assert_eq!(t.tau, Some(1));
    }

    #[test]
    fn deterministic_growth_never_dies() {
        // xi = 2, y = 1, k = 2: z -> 2z - 1, so 2, 3, 5, 9, 17...
        let m = model(DiscreteLaw::constant(2), DiscreteLaw::constant(1));
        let cfg = ProcessConfig::new(m, 2, Variant::Emigration).unwrap();
        let t = simulate(&cfg, 6, seed(0));
        assert_eq!(t.states, vec![2, 3, 5, 9, 17, 33, 65]);
        assert_eq!(t.tau, None);
    }

    #[test]
    fn single_generation_extinction_frequency() {
        // xi in {0,3} each w.p. 1/2, y = 1, k = 1: P[tau = 1] = 1/2
        let m = model(
            DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap(),
            DiscreteLaw::constant(1),
        );
        let cfg = ProcessConfig::new(m, 1, Variant::Emigration).unwrap();
        let trials = 40_000u64;
        let hits = (0..trials)
            .filter(|&i| simulate(&cfg, 1, seed(i)).tau == Some(1))
            .count();
        let freq = hits as f64 / trials as f64;
        let se = (0.25 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn martingale_path_is_state_over_lambda_power() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap(),
            DiscreteLaw::constant(1),
        );
        let lambda = m.lambda();
        let cfg = ProcessConfig::new(m, 3, Variant::Emigration).unwrap();
        let t = simulate(&cfg, 20, seed(7));
        for (n, &z) in t.states.iter().enumerate() {
            assert_eq!(t.martingale[n], z as f64 / lambda.powi(n as i32));
        }
    }

    #[test]
    fn renewal_continues_past_returns() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap(),
            DiscreteLaw::constant(1),
        );
        let k = 1;
        let cfg = ProcessConfig::new(m, k, Variant::Renewal).unwrap();
        let t = simulate(&cfg, 50, seed(3));
        assert_eq!(t.states.len(), 51);
        if let Some(tau) = t.tau {
            assert_eq!(t.states[tau], 0);
            if tau < 50 {
                assert_eq!(t.states[tau + 1], k);
            }
        }
    }

    #[test]
    fn renewal_agrees_with_emigration_before_first_return() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 1, 3], &[0.25, 0.25, 0.5]).unwrap(),
            DiscreteLaw::from_pmf(&[0, 2], &[0.5, 0.5]).unwrap(),
        );
        for trial in 0..200 {
            let cfg_e = ProcessConfig::new(m.clone(), 2, Variant::Emigration).unwrap();
            let cfg_r = ProcessConfig::new(m.clone(), 2, Variant::Renewal).unwrap();
            let te = simulate_exact(&cfg_e, 30, seed(trial));
            let tr = simulate_exact(&cfg_r, 30, seed(trial));
            let upto = te.tau.unwrap_or(30.min(te.states.len() - 1));
            for n in 0..=upto {
                assert_eq!(te.states[n], tr.states[n], "trial {trial} n {n}");
            }
        }
    }

    #[test]
    fn pure_chain_dominates_emigration_chain_pathwise() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 1, 3], &[0.3, 0.3, 0.4]).unwrap(),
            DiscreteLaw::from_pmf(&[0, 2], &[0.5, 0.5]).unwrap(),
        );
        for trial in 0..300 {
            let ce = ProcessConfig::new(m.clone(), 2, Variant::Emigration).unwrap();
            let cp = ProcessConfig::new(m.clone(), 2, Variant::Pure).unwrap();
            let te = simulate_exact(&ce, 14, seed(trial));
            let tp = simulate_exact(&cp, 14, seed(trial));
            for n in 0..te.states.len().min(tp.states.len()) {
                assert!(
                    te.states[n] <= tp.states[n],
                    "trial {trial} n {n}: {} > {}",
                    te.states[n],
                    tp.states[n]
                );
            }
            if let (Some(tau), Some(tau_p)) = (te.tau, tp.tau) {
                assert!(tau <= tau_p);
            }
        }
    }

    #[test]
    fn monotone_in_initial_state_pathwise() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 1, 3], &[0.3, 0.3, 0.4]).unwrap(),
            DiscreteLaw::from_pmf(&[0, 2], &[0.5, 0.5]).unwrap(),
        );
        for trial in 0..300 {
            let small = ProcessConfig::new(m.clone(), 2, Variant::Emigration).unwrap();
            let large = ProcessConfig::new(m.clone(), 5, Variant::Emigration).unwrap();
            let ts = simulate_exact(&small, 14, seed(trial));
            let tl = simulate_exact(&large, 14, seed(trial));
            for n in 0..ts.states.len().min(tl.states.len()) {
                assert!(ts.states[n] <= tl.states[n], "trial {trial} n {n}");
            }
        }
    }

    #[test]
    fn fast_and_exact_agree_for_constant_offspring() {
        // constant laws take the multiplication shortcut in fast mode, which
        // must coincide with per-individual summation
        let m = model(DiscreteLaw::constant(3), DiscreteLaw::from_pmf(&[0, 2], &[0.5, 0.5]).unwrap());
        let cfg = ProcessConfig::new(m, 2, Variant::Emigration).unwrap();
        for trial in 0..100 {
            let a = simulate(&cfg, 12, seed(trial));
            let b = simulate_exact(&cfg, 12, seed(trial));
            assert_eq!(a.states, b.states);
        }
    }

    #[test]
    fn decompose_step_examples() {
        let m = model(DiscreteLaw::constant(2), DiscreteLaw::constant(1));
        let gen = Generation::new(&m, Stream::root(5));
        // (3, 4): z1' = (6-1)_+ = 5, z2' = 2*4 = 8
        assert_eq!(decompose_step((3, 4), &m, &gen), (5, 8));
        // absorbed first component stays absorbed
        let (z1, z2) = decompose_step((0, 4), &m, &gen);
        assert_eq!(z1, 0);
        assert_eq!(z2, 8);
    }

    #[test]
    fn decomposition_pathwise_identity() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap(),
            DiscreteLaw::constant(1),
        );
        let mut accepted = 0;
        for trial in 0..200 {
            let run = match simulate_decomposition(&m, 2, 5, 12, seed(trial), 200) {
                Ok(run) => run,
                Err(_) => continue,
            };
            accepted += 1;
            assert_eq!(run.z[0], 5);
            assert_eq!(run.z1[0], 2);
            assert_eq!(run.z2[0], 3);
            for n in 0..run.z.len() {
                if run.z1[n] > 0 {
                    assert_eq!(run.z[n], run.z1[n] + run.z2[n], "trial {trial} n {n}");
                }
            }
        }
        assert!(accepted > 150, "only {accepted} acceptances");
    }

    #[test]
    fn ar_closed_form_constant_emigration() {
        // lambda = 2, k = 1, y = 1: hat_Z_n = 2^n - (2^n - 1) = 1
        let path = ar_closed_form(2.0, 1, &[1; 12]);
        for &z in &path.hat_z {
            assert_eq!(z, 1.0);
        }
        // no emigration: hat_Z_n = 3 * 2^n
        let path = ar_closed_form(2.0, 3, &[0; 8]);
        for (n, &z) in path.hat_z.iter().enumerate() {
            assert_eq!(z, 3.0 * 2f64.powi(n as i32));
        }
        // a single draw of 2 kills k = 1 immediately
        let path = ar_closed_form(2.0, 1, &[2]);
        assert_eq!(path.hat_z[1], 0.0);
    }

    #[test]
    fn ar_recursions_match_each_other() {
        let y = [3u64, 0, 1, 5, 2, 0, 0, 4];
        let lambda = 3.0;
        let path = ar_closed_form(lambda, 2, &y);
        // hat_Z satisfies hat_Z_{n+1} = lambda hat_Z_n - Y_{n+1}
        for n in 0..y.len() {
            assert_eq!(path.hat_z[n + 1], lambda * path.hat_z[n] - y[n] as f64);
        }
        // hat_X_n = sum_j lambda^{-(n-j)} Y_j
        for n in 1..=y.len() {
            let direct: f64 = (1..=n)
                .map(|j| y[j - 1] as f64 * lambda.powi(-((n - j) as i32)))
                .sum();
            assert!((path.hat_x[n] - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn ar_reduction_matches_simulation() {
        let m = model(
            DiscreteLaw::constant(2),
            DiscreteLaw::from_pmf(&[0, 1, 2], &[0.4, 0.3, 0.3]).unwrap(),
        );
        let cfg = ProcessConfig::new(m, 1, Variant::DeterministicAr).unwrap();
        for trial in 0..200 {
            let (traj, path) = ar_reduction(&cfg, 24, seed(trial)).unwrap();
            for (n, &z) in traj.states.iter().enumerate() {
                let clamped = path.hat_z[n].max(0.0);
                assert_eq!(z as f64, clamped, "trial {trial} n {n}");
            }
        }
    }

    #[test]
    fn ar_variant_requires_constant_offspring() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 3], &[0.5, 0.5]).unwrap(),
            DiscreteLaw::constant(1),
        );
        assert!(matches!(
            ProcessConfig::new(m, 1, Variant::DeterministicAr),
            Err(Error::NotDeterministic)
        ));
    }

    #[test]
    fn trajectories_replay_bit_identically() {
        let m = model(
            DiscreteLaw::from_pmf(&[0, 1, 3], &[0.3, 0.3, 0.4]).unwrap(),
            DiscreteLaw::from_pmf(&[0, 2], &[0.5, 0.5]).unwrap(),
        );
        let cfg = ProcessConfig::new(m, 2, Variant::Emigration).unwrap();
        for trial in 0..50 {
            let a = simulate(&cfg, 40, seed(trial));
            let b = simulate(&cfg, 40, seed(trial));
            assert_eq!(a.states, b.states);
            assert_eq!(a.martingale, b.martingale);
        }
    }

    #[test]
    fn emigration_draw_replay_matches_simulation() {
        let m = model(
            DiscreteLaw::constant(2),
            DiscreteLaw::from_pmf(&[0, 1, 2], &[0.4, 0.3, 0.3]).unwrap(),
        );
        let y = emigration_draws(&m, 10, seed(9));
        let cfg = ProcessConfig::new(m.clone(), 4, Variant::Emigration).unwrap();
        let t = simulate(&cfg, 10, seed(9));
        // reconstruct: z_{n+1} = (2 z_n - y_{n+1})_+ while alive
        let mut z = 4u64;
        for n in 0..t.states.len() - 1 {
            z = (2 * z).saturating_sub(y[n]);
            assert_eq!(t.states[n + 1], z);
            if z == 0 {
                break;
            }
        }
    }
}
