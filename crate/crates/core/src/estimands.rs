//! Persuasion estimands as maps from boundary limits (and exposure limits).
//!
//! Notation used throughout: `p_plus`/`p_minus` (or `mu_plus`/`mu_minus`) are
//! the outcome probabilities just right and just left of the cutoff. Every
//! ratio guards its denominator against `epsilon_den`; estimators that fit
//! data return the underlying [`BoundaryEstimate`]s alongside the point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::locpoly::{fit, BoundaryEstimate, FitSpec, Variant};
use crate::sample::{DataScenario, ExposureLimits, Sample, Side};
use crate::wls::wls;

pub const DEFAULT_EPSILON_DEN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersuasionPoint {
    pub theta: f64,
    pub se: f64,
}

impl PersuasionPoint {
    pub fn new(theta: f64, se: f64) -> Self {
        debug_assert!(se >= 0.0);
        PersuasionPoint { theta, se }
    }

    /// The logical upper bound 1, known without sampling error.
    pub fn logical_one() -> Self {
        PersuasionPoint { theta: 1.0, se: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersuasionInterval {
    pub lower: PersuasionPoint,
    pub upper: PersuasionPoint,
    pub upper_is_logical_one: bool,
}

impl PersuasionInterval {
    pub fn new(lower: PersuasionPoint, upper: PersuasionPoint) -> Self {
        PersuasionInterval {
            lower,
            upper,
            upper_is_logical_one: false,
        }
    }

    pub fn up_to_one(lower: PersuasionPoint) -> Self {
        PersuasionInterval {
            lower,
            upper: PersuasionPoint::logical_one(),
            upper_is_logical_one: true,
        }
    }

    /// Estimated lower bound exceeds estimated upper bound. Never clamped.
    pub fn crossed(&self) -> bool {
        self.lower.theta > self.upper.theta
    }
}

fn guard(value: f64, epsilon: f64) -> Result<f64> {
    if value <= epsilon {
        Err(Error::WeakDenominator { value, epsilon })
    } else {
        Ok(value)
    }
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::DomainError(p))
    }
}

/// `(mu_plus - mu_minus) / (1 - mu_minus)`.
pub fn theta_rd(mu_plus: f64, mu_minus: f64, epsilon_den: f64) -> Result<f64> {
    let den = guard(1.0 - mu_minus, epsilon_den)?;
    Ok((mu_plus - mu_minus) / den)
}

/// Delta-method standard error of [`theta_rd`] for independent side estimates.
pub fn theta_rd_se(
    mu_plus: f64,
    mu_minus: f64,
    se_plus: f64,
    se_minus: f64,
    epsilon_den: f64,
) -> Result<f64> {
    let den = guard(1.0 - mu_minus, epsilon_den)?;
    let g_plus = 1.0 / den;
    let g_minus = (mu_plus - 1.0) / (den * den);
    Ok(((g_plus * se_plus).powi(2) + (g_minus * se_minus).powi(2)).sqrt())
}

/// Upper bound with (Y, D, W) observed, from population joint limits:
/// `(P(Y=1,D=1|0+) + 1 - e(0+) - P(Y=1,D=0|0-)) / (1 - P(Y=1,D=0|0-))`.
pub fn theta_rd_upper(
    p_y1d1_plus: f64,
    e_plus: f64,
    p_y1d0_minus: f64,
    epsilon_den: f64,
) -> Result<f64> {
    let den = guard(1.0 - p_y1d0_minus, epsilon_den)?;
    Ok((p_y1d1_plus + 1.0 - e_plus - p_y1d0_minus) / den)
}

/// A ratio estimand together with the two boundary fits it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioFit {
    pub point: PersuasionPoint,
    pub plus: BoundaryEstimate,
    pub minus: BoundaryEstimate,
}

/// Local polynomial estimate of the lower bound `theta_RD` from the outcome alone.
pub fn theta_rd_fit(
    sample: &Sample,
    spec: &FitSpec,
    variant: Variant,
    epsilon_den: f64,
) -> Result<RatioFit> {
    let y = sample.outcome();
    ratio_from_outcomes(sample, &y, &y, spec, variant, epsilon_den)
}

fn ratio_from_outcomes(
    sample: &Sample,
    right: &[f64],
    left: &[f64],
    spec: &FitSpec,
    variant: Variant,
    epsilon_den: f64,
) -> Result<RatioFit> {
    let plus = fit(sample, right, Side::Right, spec, variant)?;
    let minus = fit(sample, left, Side::Left, spec, variant)?;
    let theta = theta_rd(plus.mu_hat, minus.mu_hat, epsilon_den)?;
    let se = theta_rd_se(plus.mu_hat, minus.mu_hat, plus.se, minus.se, epsilon_den)?;
    Ok(RatioFit {
        point: PersuasionPoint::new(theta, se),
        plus,
        minus,
    })
}

fn require_full(sample: &Sample) -> Result<()> {
    if sample.scenario() != DataScenario::FullTriplet || !sample.has_treatment() {
        return Err(Error::ScenarioMismatch(
            "estimator requires (Y, D, W) observed jointly".into(),
        ));
    }
    Ok(())
}

/// Upper bound `theta_RD,U` via transformed outcomes: `YD + 1 - D` fitted from
/// the right, `Y(1 - D)` from the left, then the `theta_rd` map and its delta SE.
pub fn theta_rd_upper_full(
    sample: &Sample,
    spec: &FitSpec,
    variant: Variant,
    epsilon_den: f64,
) -> Result<RatioFit> {
    require_full(sample)?;
    let right = sample.transformed(|y, d| y * d + 1.0 - d);
    let left = sample.transformed(|y, d| y * (1.0 - d));
    ratio_from_outcomes(sample, &right, &left, spec, variant, epsilon_den)
}

/// The same upper bound evaluated from separate boundary fits of the joint
/// cells `YD` and `D` (right) and `Y(1 - D)` (left). Point value only.
pub fn theta_rd_upper_from_joint_fits(
    sample: &Sample,
    spec: &FitSpec,
    variant: Variant,
    epsilon_den: f64,
) -> Result<f64> {
    require_full(sample)?;
    let y1d1 = fit(sample, &sample.transformed(|y, d| y * d), Side::Right, spec, variant)?;
    let d_plus = fit(sample, &sample.transformed(|_, d| d), Side::Right, spec, variant)?;
    let y1d0 = fit(sample, &sample.transformed(|y, d| y * (1.0 - d)), Side::Left, spec, variant)?;
    theta_rd_upper(y1d1.mu_hat, d_plus.mu_hat, y1d0.mu_hat, epsilon_den)
}

fn upper_e_parts(p_plus: f64, p_minus: f64, exposure: &ExposureLimits) -> Result<(f64, f64)> {
    check_prob(p_plus)?;
    check_prob(p_minus)?;
    let a = (p_plus + 1.0 - exposure.e_plus()).min(1.0);
    let b = (p_minus - exposure.e_minus()).max(0.0);
    Ok((a, b))
}

/// Upper bound with only (Y, W) observed and exposure limits known externally.
pub fn theta_rd_upper_e(
    p_plus: f64,
    p_minus: f64,
    exposure: &ExposureLimits,
    epsilon_den: f64,
) -> Result<f64> {
    let (a, b) = upper_e_parts(p_plus, p_minus, exposure)?;
    let den = guard(1.0 - b, epsilon_den)?;
    Ok((a - b) / den)
}

/// Delta-method SE of [`theta_rd_upper_e`] with the exposure limits treated as
/// known constants. At a kink of `min`/`max` the inactive (zero) derivative is used.
pub fn theta_rd_upper_e_se(
    p_plus: f64,
    p_minus: f64,
    se_plus: f64,
    se_minus: f64,
    exposure: &ExposureLimits,
    epsilon_den: f64,
) -> Result<f64> {
    let (a, b) = upper_e_parts(p_plus, p_minus, exposure)?;
    let den = guard(1.0 - b, epsilon_den)?;
    let da = if p_plus + 1.0 - exposure.e_plus() < 1.0 { 1.0 } else { 0.0 };
    let db = if p_minus - exposure.e_minus() > 0.0 { 1.0 } else { 0.0 };
    let g_plus = da / den;
    let g_minus = db * (a - 1.0) / (den * den);
    Ok(((g_plus * se_plus).powi(2) + (g_minus * se_minus).powi(2)).sqrt())
}

/// Wald-type estimate of the complier persuasion rate with (Y, D, W) observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldFit {
    pub point: PersuasionPoint,
    pub numerator: f64,
    pub denominator: f64,
    pub outcome_plus: BoundaryEstimate,
    pub outcome_minus: BoundaryEstimate,
    pub pseudo_plus: BoundaryEstimate,
    pub pseudo_minus: BoundaryEstimate,
}

/// Outcome jump over the jump in the pseudo-treatment `Y + D - YD`.
///
/// The standard error treats all four boundary fits as independent, including
/// the numerator and denominator fits that share a side.
pub fn theta_cl_star(
    sample: &Sample,
    spec: &FitSpec,
    variant: Variant,
    epsilon_den: f64,
) -> Result<WaldFit> {
    require_full(sample)?;
    let y = sample.outcome();
    let pseudo = sample.transformed(|y, d| y + d - y * d);
    let outcome_plus = fit(sample, &y, Side::Right, spec, variant)?;
    let outcome_minus = fit(sample, &y, Side::Left, spec, variant)?;
    let pseudo_plus = fit(sample, &pseudo, Side::Right, spec, variant)?;
    let pseudo_minus = fit(sample, &pseudo, Side::Left, spec, variant)?;

    let numerator = outcome_plus.mu_hat - outcome_minus.mu_hat;
    let denominator = pseudo_plus.mu_hat - pseudo_minus.mu_hat;
    if denominator.abs() <= epsilon_den {
        return Err(Error::WeakFirstStage {
            value: denominator,
            epsilon: epsilon_den,
        });
    }
    let var_num = outcome_plus.se.powi(2) + outcome_minus.se.powi(2);
    let var_den = pseudo_plus.se.powi(2) + pseudo_minus.se.powi(2);
    let se = (var_num / denominator.powi(2) + numerator.powi(2) * var_den / denominator.powi(4))
        .sqrt();
    Ok(WaldFit {
        point: PersuasionPoint::new(numerator / denominator, se),
        numerator,
        denominator,
        outcome_plus,
        outcome_minus,
        pseudo_plus,
        pseudo_minus,
    })
}

/// Lower bound for local compliers with (Y, W) observed and exposure known:
/// `max{theta_rd, (p_plus - p_minus) / (e_plus - e_minus)}`.
pub fn theta_cl_star_star(
    p_plus: f64,
    p_minus: f64,
    exposure: &ExposureLimits,
    epsilon_den: f64,
) -> Result<f64> {
    check_prob(p_plus)?;
    check_prob(p_minus)?;
    let rd = theta_rd(p_plus, p_minus, epsilon_den)?;
    let jump_e = guard(exposure.jump(), epsilon_den)?;
    Ok(rd.max((p_plus - p_minus) / jump_e))
}

/// Delta-method SE of the active branch of [`theta_cl_star_star`].
pub fn theta_cl_star_star_se(
    p_plus: f64,
    p_minus: f64,
    se_plus: f64,
    se_minus: f64,
    exposure: &ExposureLimits,
    epsilon_den: f64,
) -> Result<f64> {
    check_prob(p_plus)?;
    check_prob(p_minus)?;
    let rd = theta_rd(p_plus, p_minus, epsilon_den)?;
    let jump_e = guard(exposure.jump(), epsilon_den)?;
    if rd >= (p_plus - p_minus) / jump_e {
        theta_rd_se(p_plus, p_minus, se_plus, se_minus, epsilon_den)
    } else {
        Ok((se_plus.powi(2) + se_minus.powi(2)).sqrt() / jump_e)
    }
}

/// The ratio `(p_plus - p_minus) / (e_plus - e_minus) / (1 - p_minus)`.
///
/// Mixes a complier-only first factor with a population normaliser, so it is
/// not a persuasion rate for any well-defined subpopulation. Reported only for
/// comparison with published figures.
pub fn dk_rate(
    p_plus: f64,
    p_minus: f64,
    exposure: &ExposureLimits,
    epsilon_den: f64,
) -> Result<f64> {
    let jump_e = guard(exposure.jump(), epsilon_den)?;
    let den = guard(1.0 - p_minus, epsilon_den)?;
    Ok((p_plus - p_minus) / jump_e / den)
}

pub fn dk_rate_se(
    p_plus: f64,
    p_minus: f64,
    se_plus: f64,
    se_minus: f64,
    exposure: &ExposureLimits,
    epsilon_den: f64,
) -> Result<f64> {
    let jump_e = guard(exposure.jump(), epsilon_den)?;
    let den = guard(1.0 - p_minus, epsilon_den)?;
    let g_plus = 1.0 / (jump_e * den);
    let g_minus = (p_plus - 1.0) / (jump_e * den * den);
    Ok(((g_plus * se_plus).powi(2) + (g_minus * se_minus).powi(2)).sqrt())
}

/// Global polynomial route for the sharp design: OLS of `Y` on
/// `{1, D, W..W^J, D*W..D*W^J}` with `D = 1(W >= cutoff)`, then
/// `coef(D) / (1 - intercept)` with an HC0 delta-method SE.
pub fn global_poly_theta(sample: &Sample, degree: usize, epsilon_den: f64) -> Result<PersuasionPoint> {
    global_poly_theta_with_outcome(sample, &sample.outcome(), degree, epsilon_den)
}

/// [`global_poly_theta`] with an explicit per-record outcome (e.g. a conditional mean).
pub fn global_poly_theta_with_outcome(
    sample: &Sample,
    outcome: &[f64],
    degree: usize,
    epsilon_den: f64,
) -> Result<PersuasionPoint> {
    let n = sample.len();
    let k = 2 * (degree + 1);
    if n <= k {
        return Err(Error::InvalidArgument(format!(
            "global polynomial of degree {degree} needs more than {k} records, got {n}"
        )));
    }
    if outcome.len() != n {
        return Err(Error::InvalidArgument("outcome length mismatch".into()));
    }
    let c = sample.cutoff();
    let scale = sample
        .records()
        .iter()
        .map(|r| (r.w - c).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut design = Vec::with_capacity(n * k);
    for r in sample.records() {
        let d = if sample.side_of(r.w) == Side::Right { 1.0 } else { 0.0 };
        let u = (r.w - c) / scale;
        design.push(1.0);
        design.push(d);
        let mut pow = u;
        let mut powers = Vec::with_capacity(degree);
        for _ in 0..degree {
            powers.push(pow);
            pow *= u;
        }
        design.extend(powers.iter().copied());
        design.extend(powers.iter().map(|p| d * p));
    }
    let fit = wls(&design, k, outcome, &vec![1.0; n], None).ok_or(Error::SingularDesign {
        side: Side::Right,
    })?;

    let intercept = fit.coef[0];
    let jump = fit.coef[1];
    let den = guard(1.0 - intercept, epsilon_den)?;
    let g0 = jump / (den * den);
    let g1 = 1.0 / den;
    let var = g0 * g0 * fit.cov[(0, 0)] + 2.0 * g0 * g1 * fit.cov[(0, 1)] + g1 * g1 * fit.cov[(1, 1)];
    Ok(PersuasionPoint::new(jump / den, var.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{validate_sample, Observation};

    const EPS: f64 = DEFAULT_EPSILON_DEN;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn theta_rd_published_values() {
        assert!(close(theta_rd(0.516, 0.46, EPS).unwrap(), 0.1037, 5e-5));
        assert!(close(theta_rd(0.2956, 0.1779, EPS).unwrap(), 0.1432, 5e-5));
        assert_eq!(theta_rd(0.3, 0.3, EPS).unwrap(), 0.0);
        assert!(matches!(theta_rd(0.999, 0.995, EPS), Err(Error::WeakDenominator { .. })));
    }

    #[test]
    fn theta_rd_se_published_values() {
        let conv = theta_rd_se(0.2352, 0.1837, 0.0348, 0.0259, EPS).unwrap();
        let rbc = theta_rd_se(0.2956, 0.1779, 0.0464, 0.0371, EPS).unwrap();
        assert!(close(conv, 0.0519, 1e-4), "{conv}");
        assert!(close(rbc, 0.0684, 1e-4), "{rbc}");
        assert_eq!(theta_rd_se(0.7, 0.2, 0.0, 0.0, EPS).unwrap(), 0.0);
    }

    #[test]
    fn upper_e_values() {
        let barone = ExposureLimits::new(1.0, 0.4).unwrap();
        assert!(close(theta_rd_upper_e(0.516, 0.46, &barone, EPS).unwrap(), 0.456 / 0.94, 1e-12));
        assert!(close(theta_rd_upper_e(0.516, 0.46, &barone, EPS).unwrap(), 0.4851, 5e-5));
        let sharp = ExposureLimits::sharp();
        assert!(close(
            theta_rd_upper_e(0.61, 0.33, &sharp, EPS).unwrap(),
            theta_rd(0.61, 0.33, EPS).unwrap(),
            1e-15
        ));
        let e = ExposureLimits::new(0.6, 0.4).unwrap();
        assert!(close(theta_rd_upper_e(0.5, 0.2, &e, EPS).unwrap(), 0.9, 1e-15));
        assert!(matches!(theta_rd_upper_e(1.2, 0.2, &e, EPS), Err(Error::DomainError(_))));
    }

    #[test]
    fn complier_lower_bound_values() {
        let barone = ExposureLimits::new(1.0, 0.4).unwrap();
        assert!(close(theta_cl_star_star(0.516, 0.46, &barone, EPS).unwrap(), 0.1037, 5e-5));
        assert!(close(0.056 / 0.6, 0.0933, 5e-5));
        let sharp = ExposureLimits::sharp();
        assert_eq!(
            theta_cl_star_star(0.7, 0.4, &sharp, EPS).unwrap(),
            theta_rd(0.7, 0.4, EPS).unwrap()
        );
        let e = ExposureLimits::new(0.7, 0.5).unwrap();
        assert!(close(theta_cl_star_star(0.5, 0.4, &e, EPS).unwrap(), 0.5, 1e-12));
    }

    #[test]
    fn dk_rate_values() {
        let barone = ExposureLimits::new(1.0, 0.4).unwrap();
        assert!(close(dk_rate(0.516, 0.46, &barone, EPS).unwrap(), 0.1728, 5e-5));
        let sharp = ExposureLimits::sharp();
        assert!(close(dk_rate(0.6, 0.2, &sharp, EPS).unwrap(), theta_rd(0.6, 0.2, EPS).unwrap(), 1e-15));
        assert_eq!(dk_rate(0.5, 0.5, &barone, EPS).unwrap(), 0.0);
    }

    #[test]
    fn se_functions_match_finite_differences() {
        let e = ExposureLimits::new(0.85, 0.3).unwrap();
        let (pp, pm, sp, sm) = (0.62, 0.41, 0.03, 0.02);
        let h = 1e-6;
        let check = |f: &dyn Fn(f64, f64) -> f64, se: f64| {
            let gp = (f(pp + h, pm) - f(pp - h, pm)) / (2.0 * h);
            let gm = (f(pp, pm + h) - f(pp, pm - h)) / (2.0 * h);
            let fd = ((gp * sp).powi(2) + (gm * sm).powi(2)).sqrt();
            assert!(close(fd, se, 1e-7), "{fd} vs {se}");
        };
        check(&|a, b| theta_rd(a, b, EPS).unwrap(), theta_rd_se(pp, pm, sp, sm, EPS).unwrap());
        check(&|a, b| theta_rd_upper_e(a, b, &e, EPS).unwrap(), theta_rd_upper_e_se(pp, pm, sp, sm, &e, EPS).unwrap());
        check(&|a, b| dk_rate(a, b, &e, EPS).unwrap(), dk_rate_se(pp, pm, sp, sm, &e, EPS).unwrap());
        check(&|a, b| theta_cl_star_star(a, b, &e, EPS).unwrap(), theta_cl_star_star_se(pp, pm, sp, sm, &e, EPS).unwrap());
    }

    fn rows_from(f: impl Fn(f64) -> (f64, f64)) -> Vec<Observation> {
        (0..200)
            .map(|i| {
                let w = -1.0 + 2.0 * (i as f64 + 0.5) / 200.0;
                let (y, d) = f(w);
                Observation::new(y, Some(d), w)
            })
            .collect()
    }

    #[test]
    fn upper_full_collapses_in_sharp_sample() {
        let rows = rows_from(|w| {
            let y = if (w * 37.0).sin() > 0.2 - w { 1.0 } else { 0.0 };
            (y, if w >= 0.0 { 1.0 } else { 0.0 })
        });
        let s = validate_sample(rows, 0.0, DataScenario::FullTriplet).unwrap();
        let spec = FitSpec::local_linear(0.7).unwrap();
        let upper = theta_rd_upper_full(&s, &spec, Variant::Conventional, EPS).unwrap();
        let rd = theta_rd_fit(&s, &spec, Variant::Conventional, EPS).unwrap();
        assert!(close(upper.point.theta, rd.point.theta, 1e-12));
        let star = theta_cl_star(&s, &spec, Variant::Conventional, EPS).unwrap();
        assert!(close(star.point.theta, rd.point.theta, 1e-12));
    }

    #[test]
    fn upper_full_with_zero_left_cell() {
        // Left side: every Y = 1 record is treated, so Y(1 - D) = 0 there.
        let rows = rows_from(|w| {
            let y = if (w * 11.0).cos() > 0.0 { 1.0 } else { 0.0 };
            let d = if w >= 0.0 { if (w * 5.0).sin() > -0.5 { 1.0 } else { 0.0 } } else { y };
            (y, d)
        });
        let s = validate_sample(rows, 0.0, DataScenario::FullTriplet).unwrap();
        let spec = FitSpec::local_linear(0.8).unwrap();
        let upper = theta_rd_upper_full(&s, &spec, Variant::Conventional, EPS).unwrap();
        assert!(upper.minus.mu_hat.abs() < 1e-12);
        assert!(close(upper.point.theta, upper.plus.mu_hat, 1e-12));
    }

    #[test]
    fn full_persuasion_of_compliers() {
        let rows = rows_from(|w| {
            let d = if (w * 13.0).sin() + if w >= 0.0 { 0.8 } else { -0.8 } > 0.0 { 1.0 } else { 0.0 };
            (d, d)
        });
        let s = validate_sample(rows, 0.0, DataScenario::FullTriplet).unwrap();
        let star = theta_cl_star(&s, &FitSpec::local_linear(0.9).unwrap(), Variant::Conventional, EPS).unwrap();
        assert!(close(star.point.theta, 1.0, 1e-12));
    }

    #[test]
    fn full_triplet_required() {
        let rows: Vec<_> = (0..10).map(|i| Observation::new(0.0, None, i as f64 - 4.5)).collect();
        let s = validate_sample(rows, 0.0, DataScenario::OutcomeOnly).unwrap();
        let spec = FitSpec::local_linear(10.0).unwrap();
        assert!(matches!(theta_cl_star(&s, &spec, Variant::Conventional, EPS), Err(Error::ScenarioMismatch(_))));
        assert!(matches!(theta_rd_upper_full(&s, &spec, Variant::Conventional, EPS), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn global_poly_exact_linear_model() {
        // Outcome is the conditional mean alpha_0d + alpha_1d w.
        let rows: Vec<_> = (0..101).map(|i| Observation::new(0.0, None, -1.0 + 0.02 * i as f64)).collect();
        let s = validate_sample(rows, 0.0, DataScenario::OutcomeOnly).unwrap();
        let y: Vec<f64> = s
            .records()
            .iter()
            .map(|r| if r.w >= 0.0 { 0.4 + 0.05 * r.w } else { 0.2 + 0.1 * r.w })
            .collect();
        let p = global_poly_theta_with_outcome(&s, &y, 1, EPS).unwrap();
        assert!(close(p.theta, 0.25, 1e-10));
        assert!(p.se < 1e-10);
    }

    #[test]
    fn global_poly_step_function() {
        let rows: Vec<_> = (0..20)
            .map(|i| {
                let w = -1.0 + 0.1 * i as f64 + 0.05;
                Observation::new(if w >= 0.0 { 1.0 } else { 0.0 }, None, w)
            })
            .collect();
        let s = validate_sample(rows, 0.0, DataScenario::OutcomeOnly).unwrap();
        let p = global_poly_theta(&s, 0, EPS).unwrap();
        assert!(close(p.theta, 1.0, 1e-12));
        assert!(global_poly_theta(&s, 9, EPS).is_err());
    }

    #[test]
    fn crossing_is_reported_not_clamped() {
        let i = PersuasionInterval::new(PersuasionPoint::new(0.4, 0.1), PersuasionPoint::new(0.3, 0.1));
        assert!(i.crossed());
        assert_eq!(i.lower.theta, 0.4);
        let one = PersuasionInterval::up_to_one(PersuasionPoint::new(0.2, 0.05));
        assert!(one.upper_is_logical_one && one.upper.theta == 1.0 && one.upper.se == 0.0);
    }
}
