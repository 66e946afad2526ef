//! Categorical distributions on the probability simplex and their
//! Aitchison-style algebra.
//!
//! A [`SimplexPoint`] stores its coordinates in the log domain so that long
//! chains of Bayesian updates do not underflow. Perturbation ([`oplus`]) is
//! Bayes' rule: multiply by a likelihood and renormalize. Powering
//! ([`otimes`]) raises every coordinate to a scalar power and renormalizes.
//!
//! Entries that are exactly zero are allowed (edges and corners of the
//! simplex) and are absorbing under perturbation.
//!
//! All entropies and divergences are reported in bits.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance accepted on the sum of raw probabilities handed to
/// [`SimplexPoint::new`]. The stored vector is renormalized exactly.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A categorical distribution with `n >= 2` categories.
#[derive(Clone, PartialEq)]
pub struct SimplexPoint {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl fmt::Debug for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SimplexPoint").field(&self.probs).finish()
    }
}

impl SimplexPoint {
    /// Builds a point from probabilities that already sum to one (within
    /// [`SUM_TOLERANCE`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_weights(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self::from_linear(probs, sum))
    }

    /// Closure of non-negative weights: divides by their sum.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        check_weights(weights)?;
        let sum: f64 = weights.iter().sum();
        if sum == 0.0 {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        if !sum.is_finite() || sum < f64::MIN_POSITIVE {
            return Self::from_log_weights(weights.iter().map(|w| w.ln()).collect());
        }
        Ok(Self::from_linear(weights.to_vec(), sum))
    }

    fn from_linear(mut probs: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            for p in &mut probs {
                *p /= sum;
            }
        }
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Self { probs, log_probs }
    }

    /// Closure of log-weights; `-inf` marks a zero coordinate.
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() < 2 {
            return Err(Error::TooFewCategories(log_weights.len()));
        }
        if log_weights
            .iter()
            .any(|l| l.is_nan() || *l == f64::INFINITY)
        {
            return Err(Error::InvalidDistribution(
                "log-weights must be finite or -inf".into(),
            ));
        }
        if log_weights.iter().all(|l| *l == f64::NEG_INFINITY) {
            return Err(Error::InvalidDistribution("all weights are zero".into()));
        }
        Ok(Self::from_log_weights_unchecked(log_weights))
    }

    fn from_log_weights_unchecked(mut log_probs: Vec<f64>) -> Self {
        let max = log_probs
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_probs.iter().map(|l| (l - max).exp()).sum();
        let log_norm = max + sum.ln();
        for l in &mut log_probs {
            *l -= log_norm;
        }
        let mut probs: Vec<f64> = log_probs.iter().map(|l| l.exp()).collect();
        // exp() rounding leaves the sum off by a few ulps; fold the residue
        // into the largest coordinate.
        let total: f64 = probs.iter().sum();
        let top = argmax(&probs);
        probs[top] += 1.0 - total;
        Self { probs, log_probs }
    }

    /// Number of categories.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// Always false; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Largest coordinate.
    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }

    /// Index of the largest coordinate; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    /// True when every coordinate is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn oplus(&self, e: &LikelihoodVector) -> Result<Self> {
        oplus(self, e)
    }

    pub fn otimes(&self, lambda: f64) -> Result<Self> {
        otimes(self, lambda)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::Index { index: i, n: self.len() });
        }
        Ok(())
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.len() < 2 {
        return Err(Error::TooFewCategories(w.len()));
    }
    if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {bad} is negative or not finite"
        )));
    }
    Ok(())
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Unnormalized per-class evidence `p(e | class)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodVector {
    values: Vec<f64>,
}

impl LikelihoodVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidLikelihood("empty likelihood".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidLikelihood(format!(
                "entry {bad} is not a finite positive number"
            )));
        }
        Ok(Self { values })
    }

    /// The neutral likelihood `[1, ..., 1]`.
    pub fn uniform(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    /// `[k, 1, ..., 1]` with `k` at `index`.
    pub fn single_class(n: usize, index: usize, k: f64) -> Result<Self> {
        if index >= n {
            return Err(Error::Index { index, n });
        }
        let mut v = vec![1.0; n];
        v[index] = k;
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Perturbation: `p ⊕ e = C(p_1 e_1, ..., p_n e_n)`, i.e. one Bayes update.
pub fn oplus(p: &SimplexPoint, e: &LikelihoodVector) -> Result<SimplexPoint> {
    if p.len() != e.len() {
        return Err(Error::Dimension { expected: p.len(), found: e.len() });
    }
    let logs = p
        .log_probs
        .iter()
        .zip(&e.values)
        .map(|(lp, v)| lp + v.ln())
        .collect();
    Ok(SimplexPoint::from_log_weights_unchecked(logs))
}

/// Powering: `p ⊗ λ = C(p_1^λ, ..., p_n^λ)`.
pub fn otimes(p: &SimplexPoint, lambda: f64) -> Result<SimplexPoint> {
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("scalar {lambda} is not finite")));
    }
    if lambda <= 0.0 && !p.is_interior() {
        return Err(Error::Domain(
            "non-positive power of a point with zero coordinates".into(),
        ));
    }
    let logs = p
        .log_probs
        .iter()
        .map(|&l| if l == f64::NEG_INFINITY { l } else { lambda * l })
        .collect();
    Ok(SimplexPoint::from_log_weights_unchecked(logs))
}

/// The distinguished points used throughout the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialPoint {
    /// `u_n`, the centre of the simplex.
    Uniform,
    /// `v_n(τ)`: `τ` at `index`, the rest shared evenly.
    V { tau: f64, index: usize },
    /// `w_n(τ)`: `τ` at `index`, `1 − τ` at `runner_up`, zeros elsewhere.
    W { tau: f64, index: usize, runner_up: usize },
    /// The corner `c^index`.
    Corner { index: usize },
}

pub fn special_point(kind: SpecialPoint, n: usize) -> Result<SimplexPoint> {
    if n < 2 {
        return Err(Error::TooFewCategories(n));
    }
    let check_index = |i: usize| {
        if i >= n {
            Err(Error::Index { index: i, n })
        } else {
            Ok(())
        }
    };
    let check_tau = |tau: f64| {
        let lo = 1.0 / n as f64;
        if !(tau >= lo - 1e-15 && tau <= 1.0) {
            Err(Error::Domain(format!("tau = {tau} outside [1/{n}, 1]")))
        } else {
            Ok(())
        }
    };
    let probs = match kind {
        SpecialPoint::Uniform => vec![1.0 / n as f64; n],
        SpecialPoint::V { tau, index } => {
            check_tau(tau)?;
            check_index(index)?;
            let mut v = vec![(1.0 - tau) / (n - 1) as f64; n];
            v[index] = tau;
            v
        }
        SpecialPoint::W { tau, index, runner_up } => {
            check_tau(tau)?;
            check_index(index)?;
            check_index(runner_up)?;
            if index == runner_up {
                return Err(Error::Domain("w-point needs two distinct indices".into()));
            }
            let mut v = vec![0.0; n];
            v[index] = tau;
            v[runner_up] = 1.0 - tau;
            v
        }
        SpecialPoint::Corner { index } => {
            check_index(index)?;
            let mut v = vec![0.0; n];
            v[index] = 1.0;
            v
        }
    };
    SimplexPoint::new(probs)
}

pub fn uniform(n: usize) -> Result<SimplexPoint> {
    special_point(SpecialPoint::Uniform, n)
}

pub fn v_point(n: usize, tau: f64, index: usize) -> Result<SimplexPoint> {
    special_point(SpecialPoint::V { tau, index }, n)
}

/// `w_n(τ)` with the runner-up mass on the next index (cyclically).
pub fn w_point(n: usize, tau: f64, index: usize) -> Result<SimplexPoint> {
    special_point(
        SpecialPoint::W { tau, index, runner_up: (index + 1) % n.max(1) },
        n,
    )
}

pub fn corner(n: usize, index: usize) -> Result<SimplexPoint> {
    special_point(SpecialPoint::Corner { index }, n)
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &SimplexPoint) -> f64 {
    p.probs
        .iter()
        .zip(&p.log_probs)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &l)| -x * l)
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Rényi entropy of order `alpha` in bits. `alpha = 1` is rejected; use
/// [`shannon_entropy`].
pub fn renyi_entropy(p: &SimplexPoint, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("Renyi order {alpha} must be >= 0")));
    }
    if alpha == 1.0 {
        return Err(Error::Domain(
            "Renyi order 1 is Shannon entropy; call shannon_entropy".into(),
        ));
    }
    // log Σ p_i^α computed as a log-sum-exp over the support.
    let terms: Vec<f64> = p
        .log_probs
        .iter()
        .filter(|l| **l > f64::NEG_INFINITY)
        .map(|l| alpha * l)
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    let h = lse / (1.0 - alpha) / std::f64::consts::LN_2;
    Ok(h.max(0.0))
}

/// Kullback–Leibler divergence `KL(p ‖ q)` in bits.
pub fn kl_divergence(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), found: q.len() });
    }
    let mut acc = 0.0;
    for i in 0..p.len() {
        let pi = p.probs[i];
        if pi == 0.0 {
            continue;
        }
        if q.probs[i] == 0.0 {
            return Err(Error::Domain(format!(
                "KL undefined: q[{i}] = 0 while p[{i}] = {pi}"
            )));
        }
        acc += pi * (p.log_probs[i] - q.log_probs[i]);
    }
    Ok((acc / std::f64::consts::LN_2).max(0.0))
}

/// ℓ₂ projection onto the centre line through `u_n` and corner `i`.
pub fn project_to_center_line(p: &SimplexPoint, i: usize) -> Result<SimplexPoint> {
    p.check_index(i)?;
    let n = p.len();
    let rest = (1.0 - p.probs[i]) / (n - 1) as f64;
    let mut v = vec![rest; n];
    v[i] = p.probs[i];
    SimplexPoint::new(v)
}

/// Euclidean distance from `p` to the centre line of corner `i`.
pub fn center_line_distance(p: &SimplexPoint, i: usize) -> Result<f64> {
    let proj = project_to_center_line(p, i)?;
    Ok(euclidean(p.probs(), proj.probs()))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Largest and second-largest coordinates of a distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopTwo {
    pub j1: usize,
    pub j2: usize,
    pub gap: f64,
}

/// Top-two indices; ties go to the lowest index.
pub fn top_two(p: &SimplexPoint) -> TopTwo {
    top_two_preferring(p.probs(), &[])
}

/// Top-two selection where ties are broken first in favour of indices in
/// `preferred`, then by lowest index.
fn top_two_preferring(x: &[f64], preferred: &[usize]) -> TopTwo {
    let better = |a: usize, b: usize| -> bool {
        if x[a] != x[b] {
            return x[a] > x[b];
        }
        let pa = preferred.contains(&a);
        let pb = preferred.contains(&b);
        if pa != pb {
            return pa;
        }
        a < b
    };
    let mut j1 = 0;
    for i in 1..x.len() {
        if better(i, j1) {
            j1 = i;
        }
    }
    let mut j2 = if j1 == 0 { 1 } else { 0 };
    for i in 0..x.len() {
        if i != j1 && better(i, j2) {
            j2 = i;
        }
    }
    TopTwo { j1, j2, gap: (x[j1] - x[j2]).max(0.0) }
}

/// Interest set `{j1, j2, k1, k2}` for the delta-type divergences.
///
/// Each argument's top two are picked with ties resolved toward the other
/// argument's top two, so that a corner (whose runner-up is an arbitrary
/// zero) pairs with the other point's runner-up.
fn interest_set(p: &SimplexPoint, q: &SimplexPoint) -> Vec<usize> {
    let tp = top_two(p);
    let tq = top_two(q);
    let a = top_two_preferring(p.probs(), &[tq.j1, tq.j2]);
    let b = top_two_preferring(q.probs(), &[tp.j1, tp.j2]);
    let mut set = vec![a.j1, a.j2, b.j1, b.j2];
    set.sort_unstable();
    set.dedup();
    set
}

/// Top-two ℓ₁ distance: `Σ_{i∈I} |p_i − q_i|` over the interest set.
pub fn delta_mp(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), found: q.len() });
    }
    Ok(interest_set(p, q)
        .into_iter()
        .map(|i| (p.probs[i] - q.probs[i]).abs())
        .sum())
}

/// Delta divergence with the remainder-mass term:
/// `½ [Σ_{i∈I} |p_i − q_i| + |p' − q'|]`, where `p'`, `q'` are the masses
/// outside the interest set.
pub fn delta2_divergence(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), found: q.len() });
    }
    let set = interest_set(p, q);
    let mut inside = 0.0;
    let mut p_rest = 0.0;
    let mut q_rest = 0.0;
    for i in 0..p.len() {
        if set.contains(&i) {
            inside += (p.probs[i] - q.probs[i]).abs();
        } else {
            p_rest += p.probs[i];
            q_rest += q.probs[i];
        }
    }
    Ok(0.5 * (inside + (p_rest - q_rest).abs()))
}
