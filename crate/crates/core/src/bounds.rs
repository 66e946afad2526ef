//! Closed-form stopping thresholds and stopping probabilities for the
//! single-class evidence model `e = [ε, 1, ..., 1]` (true class first).
//!
//! With constant evidence the posterior of the true class after `s`
//! sequences is `p_1 ε^s / (p_1 ε^s + 1 − p_1)`, so each rule stops once
//! `ε^s` exceeds a rule-specific constant `k`. With lognormal evidence
//! `ε ~ lognormal(μ, c²)` the product over `s` sequences is
//! `lognormal(sμ, s c²)` and the stopping probability is a lognormal tail.
//!
//! Logarithms in this module are natural; the threshold on `s` is a
//! logarithm in base `ε`.

use crate::criteria::tau_tilde;
use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Error function, accurate to about 1.2e-7 absolute everywhere.
///
/// Maclaurin series below 0.5, Chebyshev fit of `erfc` (Numerical Recipes
/// `erfcc`) above; odd symmetry is enforced exactly.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let z = x.abs();
    if z < 0.5 {
        return erf_series(x);
    }
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87
                                    + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let erfc = t * poly.exp();
    let v = 1.0 - erfc;
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/√π Σ (−1)^k x^(2k+1) / (k! (2k+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..30 {
        term *= -x2 / k as f64;
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * std::f64::consts::FRAC_2_SQRT_PI
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// CDF of `lognormal(mu, sigma²)` at `x`; zero for `x ≤ 0`.
pub fn lognormal_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if sigma == 0.0 {
        let l = x.ln();
        return if l > mu {
            1.0
        } else if l < mu {
            0.0
        } else {
            0.5
        };
    }
    normal_cdf((x.ln() - mu) / sigma)
}

/// Rule families with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRule {
    /// Confidence on the true class.
    M1,
    /// Top-two gap.
    MP,
    /// Squared ℓ₂ norm of the posterior (monotone in Rényi-2 entropy).
    M2Norm,
    /// Lower confidence level `τ̃`.
    M1Bar,
}

/// Inputs of the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    pub prior: SimplexPoint,
    pub true_index: usize,
    pub competitor_index: usize,
    pub tau: f64,
    /// Log-mean of the positive evidence.
    pub mu: f64,
    /// Log-standard-deviation of the positive evidence.
    pub c: f64,
    pub s: u32,
    pub rule: BoundRule,
}

impl BoundQuery {
    /// Query with the strongest non-true class as competitor.
    pub fn new(prior: SimplexPoint, true_index: usize, tau: f64, mu: f64, c: f64) -> Result<Self> {
        let competitor_index = (0..prior.len())
            .filter(|&i| i != true_index)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if prior.prob(b) >= prior.prob(i) => Some(b),
                _ => Some(i),
            })
            .ok_or(Error::TooFewCategories(prior.len()))?;
        let q = Self { prior, true_index, competitor_index, tau, mu, c, s: 1, rule: BoundRule::M1 };
        q.validate()?;
        Ok(q)
    }

    pub fn with_rule(mut self, rule: BoundRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_s(mut self, s: u32) -> Self {
        self.s = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.prior.len();
        for i in [self.true_index, self.competitor_index] {
            if i >= n {
                return Err(Error::Index { index: i, n });
            }
        }
        if self.true_index == self.competitor_index {
            return Err(Error::Domain("true and competitor index must differ".into()));
        }
        if !(self.tau > 1.0 / n as f64 && self.tau <= 1.0) {
            return Err(Error::Domain(format!("tau = {} outside (1/{n}, 1]", self.tau)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Domain(format!("log-std c = {} must be > 0", self.c)));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain("log-mean must be finite".into()));
        }
        if self.s == 0 {
            return Err(Error::Domain("sequence count s must be >= 1".into()));
        }
        Ok(())
    }

    fn p1(&self) -> f64 {
        self.prior.prob(self.true_index)
    }

    fn p2(&self) -> f64 {
        self.prior.prob(self.competitor_index)
    }
}

/// The constant `k` such that the rule stops once the accumulated evidence
/// `ε^s` exceeds it.
pub fn stop_constant(prior_true: f64, competitor: f64, tau: f64, rule: BoundRule) -> Result<f64> {
    let p1 = prior_true;
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::Domain(format!("true-class prior {p1} must lie in (0, 1)")));
    }
    match rule {
        BoundRule::M1 => Ok((1.0 - p1) * tau / ((1.0 - tau) * p1)),
        BoundRule::MP => {
            let gap = 2.0 * tau - 1.0;
            Ok(((1.0 - p1) * gap + competitor) / ((1.0 - gap) * p1))
        }
        BoundRule::M2Norm => {
            if tau <= 0.5 {
                return Err(Error::Domain(format!(
                    "norm bound needs tau > 0.5 for a real discriminant, got {tau}"
                )));
            }
            Ok((1.0 - p1) * (tau + (2.0 * tau - 1.0).sqrt()) / ((1.0 - tau).powi(2) * p1))
        }
        BoundRule::M1Bar => {
            Err(Error::Domain("no true-positive closed form for the lower confidence rule".into()))
        }
    }
}

/// Real threshold `ŝ`: with constant single-class evidence `ε > 1` the rule
/// first stops at the smallest integer `s > ŝ`.
pub fn min_sequences_constant_evidence(q: &BoundQuery, epsilon: f64) -> Result<f64> {
    if !(epsilon > 1.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("evidence ratio {epsilon} must be > 1")));
    }
    let k = stop_constant(q.p1(), q.p2(), q.tau, q.rule)?;
    Ok(k.ln() / epsilon.ln())
}

/// First stopping sequence implied by [`min_sequences_constant_evidence`];
/// `0` means the prior itself already stops.
pub fn first_stop_sequence(s_hat: f64) -> u32 {
    if s_hat < 0.0 {
        0
    } else {
        s_hat.floor() as u32 + 1
    }
}

/// `P(posterior after s sequences is in the rule's correct stopping region)`
/// `= ½ − ½ erf((ln k − sμ) / (√(2s) c))`.
pub fn stop_probability_lognormal(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let k = stop_constant(q.p1(), q.p2(), q.tau, q.rule)?;
    let s = q.s as f64;
    if k <= 0.0 {
        return Ok(1.0);
    }
    Ok(0.5 - 0.5 * erf((k.ln() - s * q.mu) / ((2.0 * s).sqrt() * q.c)))
}

/// The constant `k'` below which the accumulated evidence puts the
/// competitor into the rule's stopping region.
pub fn false_stop_constant(q: &BoundQuery, rule: BoundRule) -> Result<f64> {
    let (p1, p2, tau) = (q.p1(), q.p2(), q.tau);
    if !(p1 > 0.0) {
        return Err(Error::Domain("true-class prior must be positive".into()));
    }
    let n = q.prior.len();
    Ok(match rule {
        BoundRule::M1 => (p2 - (1.0 - p1) * tau) / (tau * p1),
        BoundRule::MP => (p2 - (1.0 - p1) * (2.0 * tau - 1.0)) / (2.0 * tau * p1),
        BoundRule::M1Bar => {
            let m = (n - 1) as f64 * (2.0 * tau - 1.0) + 1.0;
            (n as f64 * p2 - (1.0 - p1) * m) / (m * p1)
        }
        BoundRule::M2Norm => {
            return Err(Error::Domain("no false-alarm closed form for the norm rule".into()))
        }
    })
}

/// Probability that the competitor enters the stopping region after `s`
/// sequences, treating the accumulated evidence as one
/// `lognormal(sμ, s c²)` draw. Zero when `k' ≤ 0`.
pub fn false_stop_probability(q: &BoundQuery, rule: BoundRule) -> Result<f64> {
    q.validate()?;
    let k = false_stop_constant(q, rule)?;
    let s = q.s as f64;
    Ok(lognormal_cdf(k, s * q.mu, s.sqrt() * q.c))
}

/// True-positive and false-alarm probabilities at one sequence count.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingRow {
    pub s: u32,
    pub tp_m1: f64,
    pub tp_mp: f64,
    pub fa_m1: f64,
    pub fa_mp: f64,
    pub fa_m1bar: f64,
}

/// Outcome of checking `TP(MP) ≥ TP(M1)` and `FA(M1) ≤ FA(MP) ≤ FA(M1bar)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrderingReport {
    pub rows: Vec<OrderingRow>,
    pub violations: Vec<String>,
}

impl OrderingReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the closed forms for every `s` and lists ordering violations.
pub fn verify_prop5_ordering(q: &BoundQuery, s_range: &[u32]) -> Result<OrderingReport> {
    let mut report = OrderingReport::default();
    for &s in s_range {
        let qs = q.clone().with_s(s);
        let row = OrderingRow {
            s,
            tp_m1: stop_probability_lognormal(&qs.clone().with_rule(BoundRule::M1))?,
            tp_mp: stop_probability_lognormal(&qs.clone().with_rule(BoundRule::MP))?,
            fa_m1: false_stop_probability(&qs, BoundRule::M1)?,
            fa_mp: false_stop_probability(&qs, BoundRule::MP)?,
            fa_m1bar: false_stop_probability(&qs, BoundRule::M1Bar)?,
        };
        if row.tp_mp < row.tp_m1 {
            report.violations.push(format!(
                "s={s}: TP(MP)={} < TP(M1)={}",
                row.tp_mp, row.tp_m1
            ));
        }
        if row.fa_m1 > row.fa_mp {
            report.violations.push(format!(
                "s={s}: FA(M1)={} > FA(MP)={}",
                row.fa_m1, row.fa_mp
            ));
        }
        if row.fa_mp > row.fa_m1bar {
            report.violations.push(format!(
                "s={s}: FA(MP)={} > FA(M1bar)={}",
                row.fa_mp, row.fa_m1bar
            ));
        }
        report.rows.push(row);
    }
    Ok(report)
}

/// `τ̃` used by the lower-confidence false-alarm bound.
pub fn lower_confidence(q: &BoundQuery) -> f64 {
    tau_tilde(q.tau, q.prior.len())
}
