//! Normal utilities, confidence intervals and the analysis decision flow.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::estimands::{PersuasionInterval, PersuasionPoint};
use crate::sample::{DataScenario, DesignKind};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile; `p` must lie strictly inside (0, 1).
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(p));
    }
    Ok(-std::f64::consts::SQRT_2 * erfc_inv(2.0 * p))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    TwoSided,
    OneSidedLower,
    Stoye,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub kind: CiKind,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `[theta - z_{1-alpha/2} se, theta + z_{1-alpha/2} se]`.
pub fn two_sided_ci(theta: f64, se: f64, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let z = norm_quantile(1.0 - alpha / 2.0)?;
    Ok(ConfidenceInterval {
        lo: theta - z * se,
        hi: theta + z * se,
        level: 1.0 - alpha,
        kind: CiKind::TwoSided,
    })
}

/// `[theta - z_{1-alpha} se, 1]`.
pub fn one_sided_lower_ci(theta: f64, se: f64, alpha: f64) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let z = norm_quantile(1.0 - alpha)?;
    let lo = theta - z * se;
    Ok(ConfidenceInterval {
        lo: lo.min(1.0),
        hi: 1.0,
        level: 1.0 - alpha,
        kind: CiKind::OneSidedLower,
    })
}

/// Solves `Phi(c + delta / max(se_lower, se_upper)) - Phi(-c) = 1 - alpha` for `c`.
///
/// Negative `delta_hat` (crossed estimates) is truncated to zero. The left
/// side is increasing in `c`, so plain bisection on `[0, z_{1-alpha/2} + 1]`
/// converges; it runs until the bracket stops shrinking.
pub fn stoye_critical_value(
    se_lower: f64,
    se_upper: f64,
    delta_hat: f64,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::DomainError(alpha));
    }
    if se_lower < 0.0 || se_upper < 0.0 {
        return Err(Error::InvalidArgument("standard errors must be nonnegative".into()));
    }
    let s = se_lower.max(se_upper);
    if s == 0.0 {
        return Err(Error::NoVariance);
    }
    let shift = delta_hat.max(0.0) / s;
    let target = 1.0 - alpha;
    let f = |c: f64| norm_cdf(c + shift) - norm_cdf(-c) - target;

    let mut lo = 0.0;
    let mut hi = norm_quantile(1.0 - alpha / 2.0)? + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Confidence interval for a partially identified parameter.
///
/// Falls back to [`one_sided_lower_ci`] when the upper bound is the logical
/// constant 1. If heavily crossed estimates make the expanded interval empty,
/// it degenerates to the midpoint of the two endpoints.
pub fn stoye_ci(interval: &PersuasionInterval, alpha: f64) -> Result<ConfidenceInterval> {
    let PersuasionInterval {
        lower,
        upper,
        upper_is_logical_one,
    } = *interval;
    if upper_is_logical_one {
        return one_sided_lower_ci(lower.theta, lower.se, alpha);
    }
    check_alpha(alpha)?;
    let (lo, hi) = if lower.se == 0.0 && upper.se == 0.0 {
        (lower.theta, upper.theta)
    } else {
        let c = stoye_critical_value(lower.se, upper.se, upper.theta - lower.theta, alpha)?;
        (lower.theta - c * lower.se, upper.theta + c * upper.se)
    };
    let (lo, hi) = if lo > hi {
        let mid = 0.5 * (lo + hi);
        (mid, mid)
    } else {
        (lo, hi)
    };
    Ok(ConfidenceInterval {
        lo,
        hi,
        level: 1.0 - alpha,
        kind: CiKind::Stoye,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Population,
    LocalCompliers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    /// Outcome jump rescaled by one minus the left limit.
    ThetaRd,
    /// Upper bound from the joint (Y, D) limits.
    ThetaRdUpper,
    /// Upper bound from outcome limits plus known exposure limits.
    ThetaRdUpperE,
    /// Wald ratio with pseudo-treatment `Y + D - YD`.
    ThetaClStar,
    /// Complier lower bound with known exposure limits.
    ThetaClStarStar,
}

impl Estimand {
    pub fn name(&self) -> &'static str {
        match self {
            Estimand::ThetaRd => "theta_rd",
            Estimand::ThetaRdUpper => "theta_rd_upper",
            Estimand::ThetaRdUpperE => "theta_rd_upper_e",
            Estimand::ThetaClStar => "theta_cl_star",
            Estimand::ThetaClStarStar => "theta_cl_star_star",
        }
    }
}

/// What the data identify about the target parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum IdentifiedSet {
    Point { estimand: Estimand },
    /// `[lower, 1]`.
    LowerBound { lower: Estimand },
    Interval { lower: Estimand, upper: Estimand },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisPlan {
    pub design: DesignKind,
    pub mtr: bool,
    pub scenario: DataScenario,
    pub target: Target,
    pub identified: IdentifiedSet,
    pub ci_kind: CiKind,
}

impl AnalysisPlan {
    pub fn estimand_set(&self) -> Vec<Estimand> {
        match self.identified {
            IdentifiedSet::Point { estimand } => vec![estimand],
            IdentifiedSet::LowerBound { lower } => vec![lower],
            IdentifiedSet::Interval { lower, upper } => vec![lower, upper],
        }
    }
}

/// Maps design, monotonicity, data availability and target to the estimands
/// and confidence-interval type that apply.
pub fn decision_flow(
    design: DesignKind,
    mtr: bool,
    scenario: DataScenario,
    target: Target,
) -> Result<AnalysisPlan> {
    use DataScenario::*;
    use Estimand::*;

    if design == DesignKind::Sharp {
        if target == Target::LocalCompliers {
            return Err(Error::IncoherentPlan(
                "local compliers are not a distinct target in a sharp design".into(),
            ));
        }
        if scenario != FullTriplet {
            return Err(Error::IncoherentPlan(
                "a sharp design determines D from W, so the data are a full triplet".into(),
            ));
        }
    }

    let (identified, ci_kind) = match (mtr, design, target, scenario) {
        (false, ..) => (IdentifiedSet::LowerBound { lower: ThetaRd }, CiKind::OneSidedLower),
        (true, DesignKind::Sharp, ..) => {
            (IdentifiedSet::Point { estimand: ThetaRd }, CiKind::TwoSided)
        }
        (true, DesignKind::Fuzzy, Target::Population, FullTriplet) => (
            IdentifiedSet::Interval {
                lower: ThetaRd,
                upper: ThetaRdUpper,
            },
            CiKind::Stoye,
        ),
        (true, DesignKind::Fuzzy, Target::Population, AggregateWithExposure) => (
            IdentifiedSet::Interval {
                lower: ThetaRd,
                upper: ThetaRdUpperE,
            },
            CiKind::Stoye,
        ),
        (true, DesignKind::Fuzzy, Target::LocalCompliers, FullTriplet) => {
            (IdentifiedSet::Point { estimand: ThetaClStar }, CiKind::TwoSided)
        }
        (true, DesignKind::Fuzzy, Target::LocalCompliers, AggregateWithExposure) => (
            IdentifiedSet::LowerBound {
                lower: ThetaClStarStar,
            },
            CiKind::OneSidedLower,
        ),
        (true, DesignKind::Fuzzy, _, OutcomeOnly) => {
            (IdentifiedSet::LowerBound { lower: ThetaRd }, CiKind::OneSidedLower)
        }
    };

    Ok(AnalysisPlan {
        design,
        mtr,
        scenario,
        target,
        identified,
        ci_kind,
    })
}

/// Builds the confidence interval the plan calls for from estimated bounds.
pub fn plan_ci(
    plan: &AnalysisPlan,
    interval: &PersuasionInterval,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    let PersuasionPoint { theta, se } = interval.lower;
    match plan.ci_kind {
        CiKind::TwoSided => two_sided_ci(theta, se, alpha),
        CiKind::OneSidedLower => one_sided_lower_ci(theta, se, alpha),
        CiKind::Stoye => stoye_ci(interval, alpha),
    }
}
