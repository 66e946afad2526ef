//! Monte-Carlo experiment harness.
//!
//! Trials are independent; each gets seeds derived from the master seed and
//! its trial index, results are collected per trial and aggregated in trial
//! order, so aggregates are identical for any worker count.

use rand::Rng;
use rayon::prelude::*;

use crate::criteria::{calibrate, tau_tilde, Family};
use crate::engine::{
    derive_seed, run_trial, simulate_path, trial_rng, EvidenceModel, QueryScheme, TrialConfig,
    TrialOutcome,
};
use crate::error::{Error, Result};
use crate::simplex::{oplus, LikelihoodVector, SimplexPoint};

/// Substream used for evidence when all methods share random numbers.
const SHARED_EVIDENCE_STREAM: u64 = 0;
/// Substream used to draw random-remainder priors.
const PRIOR_STREAM: u64 = 0xF00D;

/// How each trial's prior is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Explicit(SimplexPoint),
    /// The true class gets `true_mass`; the other classes get independent
    /// uniform(0, 1] weights rescaled to `1 − true_mass`, redrawn per trial.
    RandomRemainder { n: usize, true_mass: f64 },
}

impl PriorSpec {
    pub fn n(&self) -> usize {
        match self {
            PriorSpec::Explicit(p) => p.len(),
            PriorSpec::RandomRemainder { n, .. } => *n,
        }
    }

    fn validate(&self) -> Result<()> {
        if let PriorSpec::RandomRemainder { n, true_mass } = *self {
            if n < 2 {
                return Err(Error::TooFewCategories(n));
            }
            if !(true_mass > 0.0 && true_mass < 1.0) {
                return Err(Error::Domain(format!("true mass {true_mass} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// Prior for trial `trial`.
    pub fn draw(&self, true_index: usize, master_seed: u64, trial: u64) -> Result<SimplexPoint> {
        match self {
            PriorSpec::Explicit(p) => Ok(p.clone()),
            PriorSpec::RandomRemainder { n, true_mass } => {
                let mut rng = trial_rng(derive_seed(master_seed, trial, PRIOR_STREAM));
                let mut w: Vec<f64> = (0..*n).map(|_| 1.0 - rng.random::<f64>()).collect();
                let rest: f64 = w
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != true_index)
                    .map(|(_, v)| v)
                    .sum();
                for (i, v) in w.iter_mut().enumerate() {
                    *v = if i == true_index { *true_mass } else { *v / rest * (1.0 - true_mass) };
                }
                SimplexPoint::from_weights(&w)
            }
        }
    }
}

/// A full experiment: every listed method over `n_trials` trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub prior: PriorSpec,
    pub true_index: usize,
    pub methods: Vec<Family>,
    pub tau: f64,
    pub model: EvidenceModel,
    pub scheme: QueryScheme,
    pub n_trials: usize,
    pub max_sequences: u32,
    pub master_seed: u64,
    /// Give every method the same evidence stream for a given trial index.
    pub common_random_numbers: bool,
    pub check_prior: bool,
    /// Keep the full posterior trajectories of the first this-many trials.
    pub store_trajectories: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        let n = self.prior.n();
        if self.true_index >= n {
            return Err(Error::Index { index: self.true_index, n });
        }
        if self.n_trials == 0 {
            return Err(Error::Domain("n_trials must be >= 1".into()));
        }
        if self.max_sequences == 0 {
            return Err(Error::Domain("max_sequences must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Domain("at least one method is required".into()));
        }
        self.scheme.validate(n)?;
        self.model.validate()
    }
}

/// Aggregates for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub family: Family,
    /// `p_stop[s-1]`: fraction of trials stopped by sequence `s` (prior
    /// stops count in `s = 1`).
    pub p_stop: Vec<f64>,
    /// Fraction of correct decisions among trials stopped by sequence `s`;
    /// 0 where nothing has stopped.
    pub p_true_given_stop: Vec<f64>,
    /// Mean stopping sequence, censored trials counted at the horizon.
    pub mean_sequences: f64,
    /// Accuracy among trials that stopped.
    pub accuracy: f64,
    pub stop_times: Vec<Option<u32>>,
    pub trajectories: Vec<Vec<SimplexPoint>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub max_sequences: u32,
    pub n_trials: usize,
    pub methods: Vec<MethodResult>,
}

impl ExperimentResult {
    pub fn method(&self, family: Family) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.family == family)
    }
}

fn aggregate(
    family: Family,
    outcomes: Vec<TrialOutcome>,
    max_sequences: u32,
) -> MethodResult {
    let horizon = max_sequences as usize;
    let mut stops_at = vec![0usize; horizon + 1];
    let mut correct_at = vec![0usize; horizon + 1];
    let mut seq_total = 0.0;
    let mut stopped = 0usize;
    let mut correct = 0usize;
    let mut stop_times = Vec::with_capacity(outcomes.len());
    let mut trajectories = Vec::new();
    for o in &outcomes {
        stop_times.push(o.stopped_at);
        match o.stopped_at {
            Some(s) => {
                let col = (s as usize).max(1);
                stops_at[col] += 1;
                stopped += 1;
                seq_total += s as f64;
                if o.correct == Some(true) {
                    correct_at[col] += 1;
                    correct += 1;
                }
            }
            None => seq_total += max_sequences as f64,
        }
        if !o.trajectory.is_empty() {
            trajectories.push(o.trajectory.clone());
        }
    }
    let total = outcomes.len() as f64;
    let mut p_stop = Vec::with_capacity(horizon);
    let mut p_true = Vec::with_capacity(horizon);
    let (mut cum_stop, mut cum_correct) = (0usize, 0usize);
    for s in 1..=horizon {
        cum_stop += stops_at[s];
        cum_correct += correct_at[s];
        p_stop.push(cum_stop as f64 / total);
        p_true.push(if cum_stop > 0 { cum_correct as f64 / cum_stop as f64 } else { 0.0 });
    }
    MethodResult {
        family,
        p_stop,
        p_true_given_stop: p_true,
        mean_sequences: seq_total / total,
        accuracy: if stopped > 0 { correct as f64 / stopped as f64 } else { 0.0 },
        stop_times,
        trajectories,
    }
}

/// Runs every method of `cfg` and aggregates per-sequence matrices.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let n = cfg.prior.n();
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (m_idx, &family) in cfg.methods.iter().enumerate() {
        let rule = calibrate(family, cfg.tau, n)?;
        let stream = if cfg.common_random_numbers {
            SHARED_EVIDENCE_STREAM
        } else {
            1 + m_idx as u64
        };
        let outcomes: Vec<TrialOutcome> = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| {
                let prior = cfg.prior.draw(cfg.true_index, cfg.master_seed, t as u64)?;
                let trial = TrialConfig {
                    prior,
                    true_index: cfg.true_index,
                    rule,
                    scheme: cfg.scheme,
                    model: cfg.model,
                    max_sequences: cfg.max_sequences,
                    seed: derive_seed(cfg.master_seed, t as u64, stream),
                    check_prior: cfg.check_prior,
                    record_trajectory: t < cfg.store_trajectories,
                };
                run_trial(&trial)
            })
            .collect::<Result<_>>()?;
        methods.push(aggregate(family, outcomes, cfg.max_sequences));
    }
    Ok(ExperimentResult { max_sequences: cfg.max_sequences, n_trials: cfg.n_trials, methods })
}

/// Trials where the first method stopped strictly before the second.
/// With shared evidence, M1 should never beat MP.
pub fn earlier_stops(first: &MethodResult, second: &MethodResult) -> Vec<usize> {
    first
        .stop_times
        .iter()
        .zip(&second.stop_times)
        .enumerate()
        .filter(|(_, (a, b))| match (a, b) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            _ => false,
        })
        .map(|(i, _)| i)
        .collect()
}

/// One point of a speed–accuracy curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub family: Family,
    pub tau: f64,
    pub mean_sequences: f64,
    pub accuracy: f64,
}

/// Methods plotted by default in sweeps; consecutive-KL is left out because
/// it needs far more sequences than the rest.
pub fn default_sweep_methods() -> Vec<Family> {
    Family::ALL.into_iter().filter(|f| *f != Family::M5).collect()
}

/// Runs `cfg` once per confidence level; points come out grouped by method
/// and ordered by `τ` within each method.
pub fn speed_accuracy_sweep(cfg: &ExperimentConfig, taus: &[f64]) -> Result<Vec<SweepPoint>> {
    let n = cfg.prior.n();
    for &t in taus {
        if !(t > 1.0 / n as f64 && t < 1.0) {
            return Err(Error::Domain(format!("sweep tau {t} must lie in (1/{n}, 1)")));
        }
    }
    let mut by_tau = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut c = cfg.clone();
        c.tau = tau;
        c.store_trajectories = 0;
        by_tau.push((tau, run_experiment(&c)?));
    }
    let mut out = Vec::new();
    for &family in &cfg.methods {
        for (tau, res) in &by_tau {
            let m = res.method(family).expect("method was run");
            out.push(SweepPoint {
                family,
                tau: *tau,
                mean_sequences: m.mean_sequences,
                accuracy: m.accuracy,
            });
        }
    }
    Ok(out)
}

/// Settings for [`trajectory_ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub true_index: usize,
    pub model: EvidenceModel,
    pub scheme: QueryScheme,
    /// Trajectories per prior.
    pub count: usize,
    pub sequences: u32,
    pub master_seed: u64,
}

impl EnsembleConfig {
    pub const DEFAULT_COUNT: usize = 100;
}

/// Simulated trajectories from one prior and their componentwise mean.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub prior: SimplexPoint,
    pub trajectories: Vec<Vec<SimplexPoint>>,
    pub mean: Vec<SimplexPoint>,
}

pub fn trajectory_ensemble(priors: &[SimplexPoint], cfg: &EnsembleConfig) -> Result<Vec<Ensemble>> {
    if cfg.count == 0 {
        return Err(Error::Domain("ensemble count must be >= 1".into()));
    }
    priors
        .iter()
        .enumerate()
        .map(|(k, prior)| {
            let trajectories: Vec<Vec<SimplexPoint>> = (0..cfg.count)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(cfg.master_seed, t as u64, 0x7A11 + k as u64);
                    simulate_path(prior, cfg.true_index, cfg.scheme, &cfg.model, cfg.sequences, seed)
                })
                .collect::<Result<_>>()?;
            let n = prior.len();
            let mut mean = Vec::with_capacity(cfg.sequences as usize + 1);
            for s in 0..=cfg.sequences as usize {
                let mut acc = vec![0.0; n];
                for path in &trajectories {
                    for (a, p) in acc.iter_mut().zip(path[s].probs()) {
                        *a += p;
                    }
                }
                mean.push(SimplexPoint::from_weights(&acc)?);
            }
            Ok(Ensemble { prior: prior.clone(), trajectories, mean })
        })
        .collect()
}

/// Expected number of sequences to finish `total_letters` letters when each
/// letter costs `e_seq` sequences and a round of attempts succeeds with
/// probability `acc`; failed letters are retyped in the next round.
///
/// The default counts the attempts made in a round before removing the
/// successes. `literal` instead counts the letters remaining after the
/// round, which charges nothing for the final round.
pub fn letters_projection(acc: f64, e_seq: f64, total_letters: u32, literal: bool) -> Result<f64> {
    if !(acc > 0.0 && acc <= 1.0) {
        return Err(Error::Domain(format!(
            "accuracy {acc} must lie in (0, 1]; the projection never terminates otherwise"
        )));
    }
    if !(e_seq > 0.0) || !e_seq.is_finite() {
        return Err(Error::Domain(format!("sequences per letter {e_seq} must be > 0")));
    }
    let mut rem = total_letters as u64;
    let mut sequences = 0.0;
    while rem > 0 {
        let attempts = rem;
        // Guard against products like 100 × 0.85 = 85.00000000000001.
        let done = ((rem as f64 * acc) - 1e-9).ceil().max(1.0) as u64;
        rem -= done.min(rem);
        let charged = if literal { rem } else { attempts };
        sequences += charged as f64 * e_seq;
    }
    Ok(sequences)
}

/// Monte-Carlo estimates for the single-channel model `[ε, 1, ..., 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleChannelRow {
    pub s: u32,
    pub tp_m1: f64,
    pub tp_mp: f64,
    pub fa_m1: f64,
    pub fa_mp: f64,
    pub fa_m1bar: f64,
}

/// Simulates `trials` posterior paths under positive-only evidence on the
/// true class and reports, for each `s`, the fraction of paths whose
/// posterior at `s` lies in each event region:
///
/// - `tp_m1`: `p_true > τ`; `tp_mp`: `p_true − max_{i≠true} p_i > 2τ − 1`
/// - `fa_m1`: `p_comp > τ`; `fa_mp`: `p_comp − p_true > 2τ − 1`;
///   `fa_m1bar`: `p_comp > τ̃`
pub fn single_channel_mc(
    prior: &SimplexPoint,
    true_index: usize,
    competitor_index: usize,
    tau: f64,
    mu: f64,
    c: f64,
    s_max: u32,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SingleChannelRow>> {
    let n = prior.len();
    for i in [true_index, competitor_index] {
        if i >= n {
            return Err(Error::Index { index: i, n });
        }
    }
    let gap = 2.0 * tau - 1.0;
    let lower = tau_tilde(tau, n);
    let counts: Vec<Vec<[u32; 5]>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(derive_seed(master_seed, t as u64, 0x51C));
            let mut p = prior.clone();
            let mut rows = Vec::with_capacity(s_max as usize);
            for _ in 0..s_max {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                let e = LikelihoodVector::single_class(n, true_index, (mu + c * z).exp())?;
                p = oplus(&p, &e)?;
                let pt = p.prob(true_index);
                let pc = p.prob(competitor_index);
                let best_other = (0..n)
                    .filter(|&i| i != true_index)
                    .map(|i| p.prob(i))
                    .fold(0.0, f64::max);
                rows.push([
                    (pt > tau) as u32,
                    (pt - best_other > gap) as u32,
                    (pc > tau) as u32,
                    (pc - pt > gap) as u32,
                    (pc > lower) as u32,
                ]);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let total = trials as f64;
    Ok((0..s_max as usize)
        .map(|k| {
            let mut sum = [0u64; 5];
            for trial in &counts {
                for (acc, v) in sum.iter_mut().zip(trial[k]) {
                    *acc += v as u64;
                }
            }
            SingleChannelRow {
                s: k as u32 + 1,
                tp_m1: sum[0] as f64 / total,
                tp_mp: sum[1] as f64 / total,
                fa_m1: sum[2] as f64 / total,
                fa_mp: sum[3] as f64 / total,
                fa_m1bar: sum[4] as f64 / total,
            }
        })
        .collect())
}
