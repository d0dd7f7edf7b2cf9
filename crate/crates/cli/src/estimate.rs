//! The `estimate` and `bounds` commands.

use std::fmt::Write as _;

use rdpersuasion::estimands::{
    dk_rate, dk_rate_se, theta_cl_star, theta_cl_star_star, theta_cl_star_star_se, theta_rd_fit,
    theta_rd_upper_e, theta_rd_upper_e_se, theta_rd_upper_full, PersuasionInterval,
    PersuasionPoint,
};
use rdpersuasion::inference::{
    decision_flow, plan_ci, AnalysisPlan, ConfidenceInterval, Estimand, IdentifiedSet,
};
use rdpersuasion::locpoly::{fit, rot_bandwidth, FitSpec, VarianceKind};
use rdpersuasion::sample::{classify_scenario, validate_sample};
use rdpersuasion::{DataScenario, DesignKind, Error, ExposureLimits, Observation, Sample, Side};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, Result};

/// A denominator within this multiple of `epsilon_den` draws a warning.
pub const NEAR_EPSILON_FACTOR: f64 = 5.0;
/// Fewer records than this with nonzero kernel weight on a side draws a warning.
pub const MIN_N_EFF: usize = 20;

pub const DK_RATE_NOTE: &str = "not a valid persuasion rate for any meaningful subpopulation";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateEntry {
    pub name: String,
    pub value: f64,
    pub se: f64,
    /// False for figures reported only for comparison.
    pub causal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub lower: f64,
    pub upper: f64,
    pub crossed_flag: bool,
    pub upper_is_logical_one: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n_eff_left: usize,
    pub n_eff_right: usize,
    pub bandwidth_used: f64,
    /// `"config"` or `"rule_of_thumb"`.
    pub bandwidth_source: String,
    pub variance: VarianceKind,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub plan: AnalysisPlan,
    pub estimates: Vec<EstimateEntry>,
    pub interval: Option<IntervalReport>,
    pub ci: ConfidenceInterval,
    /// Exposure limits used by exposure-based formulas, supplied or estimated.
    pub exposure: Option<ExposureLimits>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub fn has_warning(&self, code: &str) -> bool {
        self.diagnostics.warnings.iter().any(|w| w.code == code)
    }
}

fn sharp_treatment(w: f64, cutoff: f64) -> f64 {
    if w >= cutoff {
        1.0
    } else {
        0.0
    }
}

/// Design named in the config, or inferred: with a treatment column the
/// design is sharp iff `d = 1(w >= cutoff)` on every record; without one it
/// is fuzzy iff exposure limits are configured.
pub fn resolve_design(cfg: &RunConfig, records: &[Observation]) -> DesignKind {
    if let Some(d) = cfg.design {
        return d;
    }
    let has_d = records.first().is_some_and(|r| r.d.is_some());
    let sharp = if has_d {
        records.iter().all(|r| r.d == Some(sharp_treatment(r.w, cfg.cutoff)))
    } else {
        cfg.exposure.is_none()
    };
    if sharp {
        DesignKind::Sharp
    } else {
        DesignKind::Fuzzy
    }
}

/// Validates records into a [`Sample`]. In a sharp design a missing treatment
/// column is filled with `1(w >= cutoff)` and a present one must equal it.
pub fn prepare_sample(cfg: &RunConfig, mut records: Vec<Observation>) -> Result<Sample> {
    let design = resolve_design(cfg, &records);
    let has_d = records.first().is_some_and(|r| r.d.is_some());
    let scenario = match design {
        DesignKind::Sharp => {
            if has_d {
                if let Some(i) = records
                    .iter()
                    .position(|r| r.d.is_some_and(|d| d != sharp_treatment(r.w, cfg.cutoff)))
                {
                    return Err(Error::ScenarioMismatch(format!(
                        "sharp design, but d differs from 1(w >= cutoff) at record {}",
                        i + 1
                    ))
                    .into());
                }
            } else {
                for r in &mut records {
                    r.d = Some(sharp_treatment(r.w, cfg.cutoff));
                }
            }
            DataScenario::FullTriplet
        }
        DesignKind::Fuzzy => classify_scenario(has_d, cfg.exposure.as_ref()),
    };
    Ok(validate_sample(records, cfg.cutoff, scenario)?)
}

struct Run<'a> {
    cfg: &'a RunConfig,
    sample: &'a Sample,
    spec: FitSpec,
    warnings: Vec<Warning>,
    n_eff: Option<(usize, usize)>,
}

impl Run<'_> {
    fn warn(&mut self, code: &str, message: String) {
        if !self.warnings.iter().any(|w| w.code == code && w.message == message) {
            self.warnings.push(Warning {
                code: code.into(),
                message,
            });
        }
    }

    fn check_denominator(&mut self, what: &str, value: f64) {
        let eps = self.cfg.epsilon_den;
        if value.abs() <= NEAR_EPSILON_FACTOR * eps {
            self.warn(
                "WEAK_DENOMINATOR",
                format!("{what} = {value:.6} is within {NEAR_EPSILON_FACTOR} x epsilon_den = {eps} of zero"),
            );
        }
    }

    fn note_n_eff(&mut self, left: usize, right: usize) {
        self.n_eff.get_or_insert((left, right));
    }

    /// Boundary fits of the outcome, clamped to `[0, 1]` for probability formulas.
    fn outcome_limits(&mut self) -> Result<(PersuasionPoint, PersuasionPoint)> {
        let y = self.sample.outcome();
        let plus = fit(self.sample, &y, Side::Right, &self.spec, self.cfg.variant)?;
        let minus = fit(self.sample, &y, Side::Left, &self.spec, self.cfg.variant)?;
        self.note_n_eff(minus.n_eff, plus.n_eff);
        let mut clamp = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                v
            } else {
                let c = v.clamp(0.0, 1.0);
                self.warn(
                    "CLAMPED_LIMIT",
                    format!("estimated {name} = {v:.6} clamped to {c} for exposure-based formulas"),
                );
                c
            }
        };
        Ok((
            PersuasionPoint::new(clamp("p_plus", plus.mu_hat), plus.se),
            PersuasionPoint::new(clamp("p_minus", minus.mu_hat), minus.se),
        ))
    }

    fn exposure(&mut self) -> Result<ExposureLimits> {
        self.cfg.exposure.ok_or_else(|| {
            CliError::Core(Error::ScenarioMismatch(
                "this estimand needs exposure limits".into(),
            ))
        })
    }

    fn estimate(&mut self, estimand: Estimand) -> Result<PersuasionPoint> {
        let (sample, spec, variant, eps) = (self.sample, self.spec, self.cfg.variant, self.cfg.epsilon_den);
        Ok(match estimand {
            Estimand::ThetaRd => {
                let f = theta_rd_fit(sample, &spec, variant, eps)?;
                self.note_n_eff(f.minus.n_eff, f.plus.n_eff);
                self.check_denominator("1 - mu_minus", 1.0 - f.minus.mu_hat);
                f.point
            }
            Estimand::ThetaRdUpper => {
                let f = theta_rd_upper_full(sample, &spec, variant, eps)?;
                self.note_n_eff(f.minus.n_eff, f.plus.n_eff);
                self.check_denominator("1 - P(Y=1,D=0|0-)", 1.0 - f.minus.mu_hat);
                f.point
            }
            Estimand::ThetaRdUpperE => {
                let e = self.exposure()?;
                let (p, m) = self.outcome_limits()?;
                self.check_denominator("1 - max(0, p_minus - e_minus)", 1.0 - (m.theta - e.e_minus()).max(0.0));
                PersuasionPoint::new(
                    theta_rd_upper_e(p.theta, m.theta, &e, eps)?,
                    theta_rd_upper_e_se(p.theta, m.theta, p.se, m.se, &e, eps)?,
                )
            }
            Estimand::ThetaClStar => {
                let f = theta_cl_star(sample, &spec, variant, eps)?;
                self.note_n_eff(f.outcome_minus.n_eff, f.outcome_plus.n_eff);
                self.check_denominator("pseudo-treatment jump", f.denominator);
                f.point
            }
            Estimand::ThetaClStarStar => {
                let e = self.exposure()?;
                let (p, m) = self.outcome_limits()?;
                self.check_denominator("1 - p_minus", 1.0 - m.theta);
                PersuasionPoint::new(
                    theta_cl_star_star(p.theta, m.theta, &e, eps)?,
                    theta_cl_star_star_se(p.theta, m.theta, p.se, m.se, &e, eps)?,
                )
            }
        })
    }

    /// Supplied exposure limits, or in a fuzzy full-triplet sample the
    /// boundary fits of `d`.
    fn exposure_for_comparison(&mut self, design: DesignKind) -> Result<Option<ExposureLimits>> {
        if design == DesignKind::Sharp {
            return Ok(None);
        }
        if let Some(e) = self.cfg.exposure {
            return Ok(Some(e));
        }
        if self.sample.scenario() != DataScenario::FullTriplet {
            return Ok(None);
        }
        let d = self.sample.transformed(|_, d| d);
        let plus = fit(self.sample, &d, Side::Right, &self.spec, self.cfg.variant)?;
        let minus = fit(self.sample, &d, Side::Left, &self.spec, self.cfg.variant)?;
        match ExposureLimits::new(plus.mu_hat.clamp(0.0, 1.0), minus.mu_hat.clamp(0.0, 1.0)) {
            Ok(e) => Ok(Some(e)),
            Err(_) => {
                self.warn(
                    "NO_EXPOSURE_JUMP",
                    format!(
                        "estimated exposure limits ({:.6}, {:.6}) do not increase across the cutoff",
                        plus.mu_hat, minus.mu_hat
                    ),
                );
                Ok(None)
            }
        }
    }
}

/// Runs the analysis the decision flow prescribes for `cfg` and `sample`.
pub fn run_estimate(cfg: &RunConfig, sample: &Sample) -> Result<Report> {
    run(cfg, sample, false)
}

/// As [`run_estimate`], but always reports an interval: `[theta, theta]` for
/// point-identified plans and `[lower, 1]` for lower-bound plans.
pub fn run_bounds(cfg: &RunConfig, sample: &Sample) -> Result<Report> {
    run(cfg, sample, true)
}

fn run(cfg: &RunConfig, sample: &Sample, force_interval: bool) -> Result<Report> {
    cfg.validate()?;
    let design = resolve_design(cfg, sample.records());
    let plan = decision_flow(design, cfg.mtr, sample.scenario(), cfg.target)?;

    let (bandwidth, source) = match cfg.bandwidth {
        Some(h) => (h, "config"),
        None => (rot_bandwidth(sample)?, "rule_of_thumb"),
    };
    let variance = if sample.has_clusters() {
        VarianceKind::ClusterRobust
    } else {
        VarianceKind::HeteroskedasticityRobust
    };
    let spec = FitSpec::new(cfg.order, bandwidth, cfg.kernel, variance)?;
    let mut run = Run {
        cfg,
        sample,
        spec,
        warnings: Vec::new(),
        n_eff: None,
    };
    if design == DesignKind::Sharp && cfg.exposure.is_some() {
        run.warn(
            "EXPOSURE_IGNORED",
            "exposure limits are fixed at (1, 0) in a sharp design".into(),
        );
    }

    let set = plan.estimand_set();
    let points = set
        .iter()
        .map(|&e| run.estimate(e))
        .collect::<Result<Vec<_>>>()?;
    let mut estimates: Vec<EstimateEntry> = set
        .iter()
        .zip(&points)
        .map(|(e, p)| EstimateEntry {
            name: e.name().into(),
            value: p.theta,
            se: p.se,
            causal: true,
            note: None,
        })
        .collect();

    let interval = match plan.identified {
        IdentifiedSet::Interval { .. } => PersuasionInterval::new(points[0], points[1]),
        IdentifiedSet::LowerBound { .. } => PersuasionInterval::up_to_one(points[0]),
        IdentifiedSet::Point { .. } => PersuasionInterval::new(points[0], points[0]),
    };
    if interval.crossed() {
        run.warn(
            "CROSSED_BOUNDS",
            format!(
                "estimated lower bound {:.6} exceeds estimated upper bound {:.6}",
                interval.lower.theta, interval.upper.theta
            ),
        );
    }
    let ci = plan_ci(&plan, &interval, cfg.alpha)?;
    let show_interval = force_interval || !matches!(plan.identified, IdentifiedSet::Point { .. });
    let interval_report = show_interval.then_some(IntervalReport {
        lower: interval.lower.theta,
        upper: interval.upper.theta,
        crossed_flag: interval.crossed(),
        upper_is_logical_one: interval.upper_is_logical_one,
    });

    let exposure = run.exposure_for_comparison(design)?;
    if let Some(e) = exposure {
        let (p, m) = run.outcome_limits()?;
        let eps = cfg.epsilon_den;
        match (
            dk_rate(p.theta, m.theta, &e, eps),
            dk_rate_se(p.theta, m.theta, p.se, m.se, &e, eps),
        ) {
            (Ok(value), Ok(se)) => estimates.push(EstimateEntry {
                name: "dk_rate".into(),
                value,
                se,
                causal: false,
                note: Some(DK_RATE_NOTE.into()),
            }),
            (Err(err), _) | (_, Err(err)) => run.warn("DK_RATE_UNAVAILABLE", err.to_string()),
        }
    }

    let (n_eff_left, n_eff_right) = run.n_eff.unwrap_or((0, 0));
    for (side, n) in [("left", n_eff_left), ("right", n_eff_right)] {
        if n < MIN_N_EFF {
            run.warn(
                "LOW_N_EFF",
                format!("only {n} records with nonzero kernel weight on the {side} side"),
            );
        }
    }

    Ok(Report {
        plan,
        estimates,
        interval: interval_report,
        ci,
        exposure,
        diagnostics: Diagnostics {
            n_eff_left,
            n_eff_right,
            bandwidth_used: bandwidth,
            bandwidth_source: source.into(),
            variance,
            warnings: run.warnings,
        },
    })
}

/// Plain-text summary for the terminal.
pub fn render_table(report: &Report) -> String {
    let mut s = String::new();
    let p = &report.plan;
    let _ = writeln!(
        s,
        "design {:?}, MTR {}, data {:?}, target {:?}",
        p.design, p.mtr, p.scenario, p.target
    );
    let _ = writeln!(s, "{:<22} {:>12} {:>12}", "estimate", "value", "se");
    for e in &report.estimates {
        let mark = if e.causal { "" } else { " *" };
        let _ = writeln!(s, "{:<22} {:>12.6} {:>12.6}{mark}", e.name, e.value, e.se);
    }
    if let Some(i) = &report.interval {
        let upper = if i.upper_is_logical_one {
            "1 (logical)".to_string()
        } else {
            format!("{:.6}", i.upper)
        };
        let crossed = if i.crossed_flag { " [crossed]" } else { "" };
        let _ = writeln!(s, "identified set estimate [{:.6}, {upper}]{crossed}", i.lower);
    }
    let _ = writeln!(
        s,
        "{:.0}% CI ({:?}) [{:.6}, {:.6}]",
        100.0 * report.ci.level,
        report.ci.kind,
        report.ci.lo,
        report.ci.hi
    );
    let d = &report.diagnostics;
    let _ = writeln!(
        s,
        "bandwidth {:.6} ({}), n_eff left {} right {}",
        d.bandwidth_used, d.bandwidth_source, d.n_eff_left, d.n_eff_right
    );
    if report.estimates.iter().any(|e| !e.causal) {
        let _ = writeln!(s, "* {DK_RATE_NOTE}");
    }
    for w in &d.warnings {
        let _ = writeln!(s, "warning {}: {}", w.code, w.message);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdpersuasion::inference::CiKind;
    use rdpersuasion::sim::{gen_fuzzy, gen_sharp, FuzzyDgp, Polynomial, SharpDgp};

    fn sharp_records(n: usize, seed: u64) -> Vec<Observation> {
        let dgp = SharpDgp::new(Polynomial::constant(0.3), Polynomial::constant(0.25)).unwrap();
        gen_sharp(&dgp, n, seed).unwrap().records().to_vec()
    }

    fn fuzzy_records(n: usize, seed: u64) -> Vec<Observation> {
        let dgp = FuzzyDgp::new(
            Polynomial::constant(0.3),
            Polynomial::constant(0.25),
            Polynomial::constant(0.85),
            Polynomial::constant(0.25),
        )
        .unwrap();
        gen_fuzzy(&dgp, n, seed).unwrap().records().to_vec()
    }

    #[test]
    fn design_inference() {
        let cfg = RunConfig::default();
        assert_eq!(resolve_design(&cfg, &sharp_records(200, 1)), DesignKind::Sharp);
        assert_eq!(resolve_design(&cfg, &fuzzy_records(200, 1)), DesignKind::Fuzzy);
        let mut no_d = fuzzy_records(200, 1);
        no_d.iter_mut().for_each(|r| r.d = None);
        assert_eq!(resolve_design(&cfg, &no_d), DesignKind::Sharp);
        let with_e = RunConfig {
            exposure: Some(ExposureLimits::new(0.85, 0.25).unwrap()),
            ..RunConfig::default()
        };
        assert_eq!(resolve_design(&with_e, &no_d), DesignKind::Fuzzy);
    }

    #[test]
    fn sharp_without_d_is_filled() {
        let mut recs = sharp_records(300, 2);
        recs.iter_mut().for_each(|r| r.d = None);
        let s = prepare_sample(&RunConfig::default(), recs).unwrap();
        assert!(s.has_treatment());
        assert!(s.records().iter().all(|r| r.d == Some(sharp_treatment(r.w, 0.0))));
    }

    #[test]
    fn declared_sharp_with_fuzzy_d_is_rejected() {
        let cfg = RunConfig {
            design: Some(DesignKind::Sharp),
            ..RunConfig::default()
        };
        let err = prepare_sample(&cfg, fuzzy_records(300, 3)).unwrap_err();
        assert_eq!(err.code(), "SCENARIO_MISMATCH");
    }

    #[test]
    fn sharp_report_is_point_identified() {
        let cfg = RunConfig::default();
        let s = prepare_sample(&cfg, sharp_records(4000, 4)).unwrap();
        let r = run_estimate(&cfg, &s).unwrap();
        assert_eq!(r.ci.kind, CiKind::TwoSided);
        assert!(r.interval.is_none());
        assert_eq!(r.estimates.len(), 1);
        let e = &r.estimates[0];
        assert_eq!(e.name, "theta_rd");
        assert!((e.value - 0.25).abs() < 4.0 * e.se);
        assert_eq!(r.diagnostics.bandwidth_source, "rule_of_thumb");
        assert!(r.diagnostics.n_eff_left > 100 && r.diagnostics.n_eff_right > 100);

        let b = run_bounds(&cfg, &s).unwrap();
        let i = b.interval.unwrap();
        assert_eq!(i.lower, i.upper);
    }

    #[test]
    fn fuzzy_report_has_interval_and_comparison_rate() {
        let cfg = RunConfig::default();
        let s = prepare_sample(&cfg, fuzzy_records(4000, 5)).unwrap();
        let r = run_estimate(&cfg, &s).unwrap();
        assert_eq!(r.ci.kind, CiKind::Stoye);
        let i = r.interval.unwrap();
        assert!(i.lower <= i.upper);
        assert!(r.ci.lo <= i.lower && r.ci.hi >= i.upper);
        let dk = r.estimates.iter().find(|e| e.name == "dk_rate").unwrap();
        assert!(!dk.causal);
        assert!(r.exposure.is_some());
        assert!(r.estimates.iter().filter(|e| e.causal).count() == 2);
    }

    #[test]
    fn no_mtr_gives_logical_one() {
        let cfg = RunConfig {
            mtr: false,
            ..RunConfig::default()
        };
        let s = prepare_sample(&cfg, fuzzy_records(2000, 6)).unwrap();
        let r = run_estimate(&cfg, &s).unwrap();
        let i = r.interval.unwrap();
        assert!(i.upper_is_logical_one);
        assert_eq!(i.upper, 1.0);
        assert_eq!(r.ci.hi, 1.0);
    }

    #[test]
    fn tiny_bandwidth_warns_low_n_eff() {
        let cfg = RunConfig {
            bandwidth: Some(0.03),
            ..RunConfig::default()
        };
        let s = prepare_sample(&cfg, sharp_records(600, 7)).unwrap();
        let r = run_estimate(&cfg, &s).unwrap();
        assert!(r.has_warning("LOW_N_EFF"));
        assert_eq!(r.diagnostics.bandwidth_source, "config");
    }

    #[test]
    fn exposure_in_sharp_design_is_ignored_with_warning() {
        let cfg = RunConfig {
            exposure: Some(ExposureLimits::new(0.9, 0.1).unwrap()),
            design: Some(DesignKind::Sharp),
            ..RunConfig::default()
        };
        let s = prepare_sample(&cfg, sharp_records(1000, 8)).unwrap();
        let r = run_estimate(&cfg, &s).unwrap();
        assert!(r.has_warning("EXPOSURE_IGNORED"));
        assert!(r.estimates.iter().all(|e| e.causal));
    }

    #[test]
    fn table_mentions_estimates() {
        let cfg = RunConfig::default();
        let s = prepare_sample(&cfg, fuzzy_records(2000, 9)).unwrap();
        let t = render_table(&run_estimate(&cfg, &s).unwrap());
        assert!(t.contains("theta_rd") && t.contains("Stoye"));
        let dk = t.lines().find(|l| l.starts_with("dk_rate")).unwrap();
        assert!(dk.ends_with(" *"));
    }
}
