//! Stopping criteria evaluated on the latest posterior.
//!
//! Every family is calibrated from one confidence level `τ` so that the
//! confidence and entropy rules share the same boundary point `v_n(τ)`:
//!
//! | family | stops when |
//! |--------|------------|
//! | `M1`    | `max_i p_i > τ` |
//! | `M2`    | `H_2(p) < H_2(v_n(τ))` |
//! | `M3`    | `H(p) < H(v_n(τ))` |
//! | `M4`    | `H_0.2(p) < H_0.2(v_n(τ))` |
//! | `M5`    | `KL(p_s ‖ p_{s-1}) < 0.01` |
//! | `MP`    | `p_{j1} − p_{j2} > 1 − τ̄`, `τ̄ = 2 − 2τ` |
//! | `M1bar` | `max_i p_i > τ̃`, `τ̃ = ((2τ−1)(n−1)+1)/n` |
//!
//! All comparisons are strict.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simplex::{
    self, corner, delta_mp, kl_divergence, renyi_entropy, shannon_entropy, top_two, v_point,
    SimplexPoint,
};

pub use crate::simplex::delta2_divergence;

/// Rényi order used by `M2`.
pub const M2_ORDER: f64 = 2.0;
/// Rényi order used by `M4`.
pub const M4_ORDER: f64 = 0.2;
/// Consecutive-posterior KL threshold used by `M5`, in bits.
pub const KL_THRESHOLD: f64 = 1e-2;

/// Identifier of a stopping-criterion family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    M1,
    M2,
    M3,
    M4,
    M5,
    MP,
    M1Bar,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::MP,
        Family::M1,
        Family::M2,
        Family::M3,
        Family::M4,
        Family::M5,
        Family::M1Bar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::M1 => "M1",
            Family::M2 => "M2",
            Family::M3 => "M3",
            Family::M4 => "M4",
            Family::M5 => "M5",
            Family::MP => "MP",
            Family::M1Bar => "M1bar",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "M1" => Ok(Family::M1),
            "M2" => Ok(Family::M2),
            "M3" => Ok(Family::M3),
            "M4" => Ok(Family::M4),
            "M5" => Ok(Family::M5),
            "MP" => Ok(Family::MP),
            "M1bar" | "M1L" => Ok(Family::M1Bar),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// The calibrated predicate of a rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Confidence { tau: f64 },
    RenyiEntropy { alpha: f64, threshold: f64 },
    ShannonEntropy { threshold: f64 },
    KlConsecutive { threshold: f64 },
    GapMp { tau_bar: f64 },
    ConfidenceLower { tau_tilde: f64 },
}

/// A calibrated stopping rule. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub family: Family,
    pub n: usize,
    pub source_tau: f64,
    pub criterion: Criterion,
}

/// Per-trial memory of a rule; only `M5` uses it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriterionState {
    pub previous_posterior: Option<SimplexPoint>,
}

/// MP radius matched to confidence level `τ`.
pub fn tau_bar(tau: f64) -> f64 {
    2.0 - 2.0 * tau
}

/// Lower confidence level with the same worst-case accuracy as MP.
pub fn tau_tilde(tau: f64, n: usize) -> f64 {
    ((2.0 * tau - 1.0) * (n - 1) as f64 + 1.0) / n as f64
}

/// Confidence of the MP boundary point closest to `u_n`.
pub fn psi(tau_bar: f64, n: usize) -> f64 {
    (1.0 + (n - 1) as f64 * (1.0 - tau_bar)) / n as f64
}

fn check_tau(tau: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewCategories(n));
    }
    if !(tau > 1.0 / n as f64 && tau <= 1.0) {
        return Err(Error::Domain(format!(
            "confidence level {tau} must lie in (1/{n}, 1]"
        )));
    }
    Ok(())
}

/// Builds the rule of `family` anchored at `v_n(τ)`.
pub fn calibrate(family: Family, tau: f64, n: usize) -> Result<StoppingRule> {
    calibrate_with_order(family, tau, n, None)
}

/// Like [`calibrate`] but lets the Rényi families use a custom order.
pub fn calibrate_with_order(
    family: Family,
    tau: f64,
    n: usize,
    alpha: Option<f64>,
) -> Result<StoppingRule> {
    check_tau(tau, n)?;
    let anchor = v_point(n, tau, 0)?;
    let renyi = |default: f64| -> Result<Criterion> {
        let alpha = alpha.unwrap_or(default);
        let threshold = if alpha == 1.0 {
            shannon_entropy(&anchor)
        } else {
            renyi_entropy(&anchor, alpha)?
        };
        Ok(Criterion::RenyiEntropy { alpha, threshold })
    };
    let criterion = match family {
        Family::M1 => Criterion::Confidence { tau },
        Family::M2 => renyi(M2_ORDER)?,
        Family::M3 => Criterion::ShannonEntropy { threshold: shannon_entropy(&anchor) },
        Family::M4 => renyi(M4_ORDER)?,
        Family::M5 => Criterion::KlConsecutive { threshold: KL_THRESHOLD },
        Family::MP => Criterion::GapMp { tau_bar: tau_bar(tau) },
        Family::M1Bar => Criterion::ConfidenceLower { tau_tilde: tau_tilde(tau, n) },
    };
    Ok(StoppingRule { family, n, source_tau: tau, criterion })
}

/// Whether a statistic must exceed or stay below its threshold to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Above,
    Below,
}

impl StoppingRule {
    /// Evaluates the rule on `p` and advances `state`.
    pub fn should_stop(&self, state: &mut CriterionState, p: &SimplexPoint) -> Result<bool> {
        if p.len() != self.n {
            return Err(Error::Dimension { expected: self.n, found: p.len() });
        }
        if let Criterion::KlConsecutive { threshold } = self.criterion {
            let stop = match &state.previous_posterior {
                Some(prev) => kl_divergence(p, prev)? < threshold,
                None => false,
            };
            state.previous_posterior = Some(p.clone());
            return Ok(stop);
        }
        self.in_region(p)
    }

    /// Membership in the stopping region for memoryless rules. `M5` has no
    /// region of its own and always reports `false` here.
    pub fn in_region(&self, p: &SimplexPoint) -> Result<bool> {
        if p.len() != self.n {
            return Err(Error::Dimension { expected: self.n, found: p.len() });
        }
        let Some((value, threshold, dir)) = self.statistic(p)? else {
            return Ok(false);
        };
        Ok(match dir {
            Direction::Above => value > threshold,
            Direction::Below => value < threshold,
        })
    }

    /// The rule's defining statistic on `p`, its threshold, and the side of
    /// the threshold that stops. `None` for `M5`.
    pub fn statistic(&self, p: &SimplexPoint) -> Result<Option<(f64, f64, Direction)>> {
        Ok(Some(match self.criterion {
            Criterion::Confidence { tau } => (p.max_prob(), tau, Direction::Above),
            Criterion::ConfidenceLower { tau_tilde } => {
                (p.max_prob(), tau_tilde, Direction::Above)
            }
            Criterion::GapMp { tau_bar } => (top_two(p).gap, 1.0 - tau_bar, Direction::Above),
            Criterion::ShannonEntropy { threshold } => {
                (shannon_entropy(p), threshold, Direction::Below)
            }
            Criterion::RenyiEntropy { alpha, threshold } => {
                let h = if alpha == 1.0 { shannon_entropy(p) } else { renyi_entropy(p, alpha)? };
                (h, threshold, Direction::Below)
            }
            Criterion::KlConsecutive { .. } => return Ok(None),
        }))
    }
}

/// Smallest max-probability reachable on the Shannon contour through
/// `v_n(τ)`, found on the simplex edge: solves `h_b(t) = H(v_n(τ))` for
/// `t ∈ (0.5, 1)` by bisection. `None` when the contour does not reach an
/// edge (`H(v_n(τ)) ≥ 1` bit).
pub fn min_confidence_on_entropy_contour(tau: f64, n: usize) -> Result<Option<f64>> {
    check_tau(tau, n)?;
    let target = shannon_entropy(&v_point(n, tau, 0)?);
    if target >= 1.0 {
        return Ok(None);
    }
    let binary = |t: f64| -> f64 {
        let mut h = 0.0;
        for x in [t, 1.0 - t] {
            if x > 0.0 {
                h -= x * x.log2();
            }
        }
        h
    };
    let (mut lo, mut hi) = (0.5, 1.0 - 1e-15);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Membership in the union of corner balls `∪_k {x : δ(c^k, x) < τ̄}`
/// computed directly from the divergence.
pub fn in_corner_ball_union<F>(p: &SimplexPoint, tau_bar: f64, divergence: F) -> Result<bool>
where
    F: Fn(&SimplexPoint, &SimplexPoint) -> Result<f64>,
{
    for k in 0..p.len() {
        if divergence(&corner(p.len(), k)?, p)? < tau_bar {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Union of `δ_MP` balls of radius `τ̄` around the corners.
pub fn in_mp_ball_union(p: &SimplexPoint, tau_bar: f64) -> Result<bool> {
    in_corner_ball_union(p, tau_bar, delta_mp)
}

/// Points on the boundary of `rule` in `Δ_3`, ordered by angle around the
/// centre for polyline plotting.
///
/// Rays are cast from `u_3` at `resolution` evenly spaced angles; each ray
/// that enters the stopping region is bisected to the crossing. Rays that
/// never enter the region (e.g. when an entropy contour does not reach the
/// edge in that direction) are skipped.
pub fn boundary_sample(rule: &StoppingRule, resolution: usize) -> Result<Vec<SimplexPoint>> {
    if rule.n != 3 {
        return Err(Error::Domain(format!(
            "boundary sampling is only defined on the 3-class simplex, got n = {}",
            rule.n
        )));
    }
    if rule.family == Family::M5 {
        return Err(Error::Domain("M5 has no static stopping boundary".into()));
    }
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    let s2 = std::f64::consts::SQRT_2;
    let s6 = 6f64.sqrt();
    let e1 = [1.0 / s2, -1.0 / s2, 0.0];
    let e2 = [1.0 / s6, 1.0 / s6, -2.0 / s6];
    let third = 1.0 / 3.0;

    let point_at = |d: &[f64; 3], t: f64| -> Result<SimplexPoint> {
        let w: Vec<f64> = d.iter().map(|di| (third + t * di).max(0.0)).collect();
        SimplexPoint::from_weights(&w)
    };
    let margin = |p: &SimplexPoint| -> Result<f64> {
        let (value, threshold, dir) = rule
            .statistic(p)?
            .expect("memoryless rule has a statistic");
        Ok(match dir {
            Direction::Above => value - threshold,
            Direction::Below => threshold - value,
        })
    };

    let mut out = Vec::with_capacity(resolution);
    for k in 0..resolution {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / resolution as f64;
        let (c, s) = (theta.cos(), theta.sin());
        let d = [
            c * e1[0] + s * e2[0],
            c * e1[1] + s * e2[1],
            c * e1[2] + s * e2[2],
        ];
        let t_max = d
            .iter()
            .filter(|di| **di < 0.0)
            .map(|di| third / -di)
            .fold(f64::INFINITY, f64::min);
        if margin(&point_at(&d, 0.0)?)? > 0.0 || margin(&point_at(&d, t_max)?)? <= 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if margin(&point_at(&d, mid)?)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(point_at(&d, 0.5 * (lo + hi))?);
    }
    Ok(out)
}

/// Convenience: the `v_n(τ)` anchor every calibrated rule passes through.
pub fn anchor(rule: &StoppingRule) -> Result<SimplexPoint> {
    simplex::v_point(rule.n, rule.source_tau, 0)
}
