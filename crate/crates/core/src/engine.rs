//! The recursive classification loop: query, collect evidence, update the
//! posterior with `⊕`, and test the stopping rule.
//!
//! # Randomness
//!
//! Every trial owns a [`ChaCha8Rng`] seeded from a 64-bit value. Harnesses
//! derive per-trial seeds with [`derive_seed`] (SplitMix64 mixing of the
//! master seed, trial index and stream id), so results do not depend on
//! which worker runs which trial.
//!
//! Each sequence draws exactly one standard normal per class, in class
//! order, with [`rand_distr::StandardNormal`] (ziggurat). A queried class
//! turns its draw into `exp(μ + c z)`; an unqueried class discards it and
//! receives likelihood 1. Drawing for every class keeps the stream aligned
//! across rules and query schemes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::criteria::{CriterionState, StoppingRule};
use crate::error::{Error, Result};
use crate::simplex::{oplus, LikelihoodVector, SimplexPoint};

/// Default censoring horizon.
pub const DEFAULT_MAX_SEQUENCES: u32 = 100;

/// Two lognormal evidence channels: the queried true class draws from the
/// positive one, every other queried class from the negative one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceModel {
    pub mu_pos: f64,
    pub c_pos: f64,
    pub mu_neg: f64,
    pub c_neg: f64,
}

impl EvidenceModel {
    /// A zero log-std gives a deterministic channel.
    pub fn new(mu_pos: f64, c_pos: f64, mu_neg: f64, c_neg: f64) -> Result<Self> {
        let m = Self { mu_pos, c_pos, mu_neg, c_neg };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu_pos", self.mu_pos), ("mu_neg", self.mu_neg)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("c_pos", self.c_pos), ("c_neg", self.c_neg)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Which classes are queried in a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryScheme {
    /// Every class receives a channel draw.
    Broadcast,
    /// Only the `N` currently most probable classes are queried.
    TopN(usize),
}

impl QueryScheme {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let QueryScheme::TopN(k) = *self {
            if k == 0 || k > n {
                return Err(Error::Domain(format!("topN needs 1 <= N <= {n}, got {k}")));
            }
        }
        Ok(())
    }

    /// Query mask for the next sequence given the latest posterior.
    pub fn queried(&self, posterior: &SimplexPoint) -> Vec<bool> {
        let n = posterior.len();
        match *self {
            QueryScheme::Broadcast => vec![true; n],
            QueryScheme::TopN(k) => {
                let mut idx: Vec<usize> = (0..n).collect();
                let p = posterior.probs();
                // Stable sort keeps the lowest index first among ties.
                idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
                let mut mask = vec![false; n];
                for &i in idx.iter().take(k) {
                    mask[i] = true;
                }
                mask
            }
        }
    }
}

/// One trial of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub prior: SimplexPoint,
    pub true_index: usize,
    pub rule: StoppingRule,
    pub scheme: QueryScheme,
    pub model: EvidenceModel,
    pub max_sequences: u32,
    pub seed: u64,
    /// Evaluate the rule on the prior before collecting any evidence.
    pub check_prior: bool,
    /// Keep every posterior in the outcome.
    pub record_trajectory: bool,
}

impl TrialConfig {
    pub fn new(
        prior: SimplexPoint,
        true_index: usize,
        rule: StoppingRule,
        scheme: QueryScheme,
        model: EvidenceModel,
        seed: u64,
    ) -> Self {
        Self {
            prior,
            true_index,
            rule,
            scheme,
            model,
            max_sequences: DEFAULT_MAX_SEQUENCES,
            seed,
            check_prior: true,
            record_trajectory: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.prior.len();
        if self.true_index >= n {
            return Err(Error::Index { index: self.true_index, n });
        }
        if self.rule.n != n {
            return Err(Error::Dimension { expected: n, found: self.rule.n });
        }
        if self.max_sequences == 0 {
            return Err(Error::Domain("max_sequences must be >= 1".into()));
        }
        self.scheme.validate(n)?;
        self.model.validate()
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Sequence at which the rule fired; `Some(0)` for the prior, `None`
    /// when censored.
    pub stopped_at: Option<u32>,
    /// MAP class of the posterior the rule fired on.
    pub decision: Option<usize>,
    pub correct: Option<bool>,
    pub sequences_run: u32,
    /// Prior followed by each posterior; empty unless recording was asked.
    pub trajectory: Vec<SimplexPoint>,
}

/// Seeds a per-trial generator.
pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic substream seed for `(master, trial, stream)`.
pub fn derive_seed(master: u64, trial: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Draws one likelihood vector.
pub fn sample_evidence<R: Rng + ?Sized>(
    model: &EvidenceModel,
    queried: &[bool],
    true_index: usize,
    rng: &mut R,
) -> LikelihoodVector {
    let values = queried
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let z: f64 = rng.sample(StandardNormal);
            if !q {
                1.0
            } else if i == true_index {
                (model.mu_pos + model.c_pos * z).exp()
            } else {
                (model.mu_neg + model.c_neg * z).exp()
            }
        })
        .collect();
    // exp() of a finite argument is positive; overflow to inf is the only
    // failure and requires |μ + c z| > 709.
    LikelihoodVector::new(values).expect("lognormal draws are finite and positive")
}

/// Runs one trial to its first stop or to `max_sequences`.
pub fn run_trial(config: &TrialConfig) -> Result<TrialOutcome> {
    config.validate()?;
    let mut rng = trial_rng(config.seed);
    let mut posterior = config.prior.clone();
    let mut trajectory = Vec::new();
    if config.record_trajectory {
        trajectory.push(posterior.clone());
    }
    let finish = |posterior: &SimplexPoint, s: u32, trajectory: Vec<SimplexPoint>| {
        let decision = posterior.argmax();
        TrialOutcome {
            stopped_at: Some(s),
            decision: Some(decision),
            correct: Some(decision == config.true_index),
            sequences_run: s,
            trajectory,
        }
    };

    // The prior check gets its own throwaway state so that consecutive-KL
    // only ever compares two evidence-driven posteriors.
    if config.check_prior
        && config.rule.should_stop(&mut CriterionState::default(), &posterior)?
    {
        return Ok(finish(&posterior, 0, trajectory));
    }

    let mut state = CriterionState::default();
    for s in 1..=config.max_sequences {
        let queried = config.scheme.queried(&posterior);
        let evidence = sample_evidence(&config.model, &queried, config.true_index, &mut rng);
        posterior = oplus(&posterior, &evidence)?;
        if config.record_trajectory {
            trajectory.push(posterior.clone());
        }
        if config.rule.should_stop(&mut state, &posterior)? {
            return Ok(finish(&posterior, s, trajectory));
        }
    }
    Ok(TrialOutcome {
        stopped_at: None,
        decision: None,
        correct: None,
        sequences_run: config.max_sequences,
        trajectory,
    })
}

/// Posterior path over a fixed number of sequences with no stopping.
pub fn simulate_path(
    prior: &SimplexPoint,
    true_index: usize,
    scheme: QueryScheme,
    model: &EvidenceModel,
    sequences: u32,
    seed: u64,
) -> Result<Vec<SimplexPoint>> {
    let n = prior.len();
    if true_index >= n {
        return Err(Error::Index { index: true_index, n });
    }
    scheme.validate(n)?;
    model.validate()?;
    let mut rng = trial_rng(seed);
    let mut path = Vec::with_capacity(sequences as usize + 1);
    let mut p = prior.clone();
    path.push(p.clone());
    for _ in 0..sequences {
        let queried = scheme.queried(&p);
        let e = sample_evidence(model, &queried, true_index, &mut rng);
        p = oplus(&p, &e)?;
        path.push(p.clone());
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::{calibrate, Family};
    use crate::simplex::{uniform, v_point};

    fn model() -> EvidenceModel {
        EvidenceModel::new(0.6, 0.5, 0.0, 0.5).unwrap()
    }

    #[test]
    fn broadcast_evidence_is_positive_everywhere() {
        let mut rng = trial_rng(7);
        for _ in 0..100 {
            let e = sample_evidence(&model(), &[true, true, true], 1, &mut rng);
            assert!(e.values().iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn top1_queries_only_the_leader() {
        let p = SimplexPoint::new(vec![0.2, 0.5, 0.3]).unwrap();
        let mask = QueryScheme::TopN(1).queried(&p);
        assert_eq!(mask, vec![false, true, false]);
        let mut rng = trial_rng(3);
        let e = sample_evidence(&model(), &mask, 0, &mut rng);
        assert_eq!(e.values()[0], 1.0);
        assert_eq!(e.values()[2], 1.0);
        assert_ne!(e.values()[1], 1.0);
        let tie = uniform(4).unwrap();
        assert_eq!(QueryScheme::TopN(2).queried(&tie), vec![true, true, false, false]);
    }

    #[test]
    fn zero_variance_is_deterministic() {
        let m = EvidenceModel::new(0.7, 0.0, -0.2, 0.0).unwrap();
        let mut rng = trial_rng(11);
        let e = sample_evidence(&m, &[true, true, true], 0, &mut rng);
        assert_eq!(e.values(), &[0.7f64.exp(), (-0.2f64).exp(), (-0.2f64).exp()]);
    }

    #[test]
    fn m1_constant_evidence_stops_at_three() {
        let m = EvidenceModel::new(2f64.ln(), 0.0, 0.0, 0.0).unwrap();
        let rule = calibrate(Family::M1, 0.8, 2).unwrap();
        let prior = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let cfg = TrialConfig::new(prior, 0, rule, QueryScheme::Broadcast, m, 1);
        let out = run_trial(&cfg).unwrap();
        assert_eq!(out.stopped_at, Some(3));
        assert_eq!(out.decision, Some(0));
        assert_eq!(out.correct, Some(true));
        assert_eq!(out.trajectory.len(), 4);
    }

    #[test]
    fn censoring_after_one_sequence() {
        let rule = calibrate(Family::M3, 0.999, 3).unwrap();
        let mut cfg =
            TrialConfig::new(uniform(3).unwrap(), 0, rule, QueryScheme::Broadcast, model(), 5);
        cfg.max_sequences = 1;
        let out = run_trial(&cfg).unwrap();
        assert_eq!(out.stopped_at, None);
        assert_eq!(out.decision, None);
        assert_eq!(out.trajectory.len(), 2);
        cfg.max_sequences = 0;
        assert!(run_trial(&cfg).is_err());
    }

    #[test]
    fn prior_inside_region_stops_immediately() {
        let rule = calibrate(Family::M1, 0.8, 3).unwrap();
        let prior = v_point(3, 0.81, 2).unwrap();
        let cfg = TrialConfig::new(prior.clone(), 0, rule, QueryScheme::Broadcast, model(), 9);
        let out = run_trial(&cfg).unwrap();
        assert_eq!(out.stopped_at, Some(0));
        assert_eq!(out.decision, Some(2));
        assert_eq!(out.correct, Some(false));
        assert_eq!(out.trajectory, vec![prior.clone()]);

        let mut deferred = cfg.clone();
        deferred.check_prior = false;
        assert_ne!(run_trial(&deferred).unwrap().stopped_at, Some(0));
    }

    #[test]
    fn m5_cannot_stop_on_first_sequence() {
        let rule = calibrate(Family::M5, 0.8, 3).unwrap();
        let m = EvidenceModel::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let cfg = TrialConfig::new(uniform(3).unwrap(), 0, rule, QueryScheme::Broadcast, m, 2);
        // Flat evidence: the posterior never moves, so KL is 0 from s = 2 on.
        assert_eq!(run_trial(&cfg).unwrap().stopped_at, Some(2));
    }

    #[test]
    fn same_seed_same_outcome() {
        let rule = calibrate(Family::MP, 0.8, 3).unwrap();
        let prior = SimplexPoint::new(vec![0.42, 0.55, 0.03]).unwrap();
        let cfg = TrialConfig::new(prior, 0, rule, QueryScheme::TopN(2), model(), 1234);
        assert_eq!(run_trial(&cfg).unwrap(), run_trial(&cfg).unwrap());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(2, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0));
    }
}
