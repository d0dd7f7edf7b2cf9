//! Simulated regression-discontinuity data with known persuasion parameters.
//!
//! Every draw uses `W ~ Uniform(-1, 1)` and a single `U ~ Uniform(0, 1)` that
//! drives both potential outcomes through nested thresholds:
//! `Y(0) = 1{U <= q0(W)}` and `Y(1) = 1{U <= q0(W) + (1 - q0(W)) theta(W)}`, so
//! `Y(1) >= Y(0)` holds record by record and `theta(w)` is the persuasion rate
//! at `w`. Fuzzy designs draw an independent `V ~ Uniform(0, 1)` and set
//! `D = 1{V <= e(W)}` with `e = e_p` right of zero and `e_n` left of it.
//!
//! Independence of `(Y(1), Y(0), V)` from `W` only holds when `q0` and `theta`
//! are constant; polynomial arms are meant for bias studies.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)`.
//! [`gen_sharp`] and [`gen_fuzzy`] use stream 0; replication `r` of
//! [`mc_study`] uses stream `r`, so replication 0 reproduces the single-sample
//! generators exactly. Within a record the draw order is `w`, `u`, then `v`
//! (fuzzy only).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimands::{
    theta_cl_star, theta_cl_star_star, theta_rd, theta_rd_fit, theta_rd_se, theta_rd_upper,
    theta_rd_upper_e, theta_rd_upper_full, PersuasionInterval, PersuasionPoint,
};
use crate::exec::Exec;
use crate::inference::{decision_flow, plan_ci, AnalysisPlan, Estimand, IdentifiedSet, Target};
use crate::locpoly::{fit, FitSpec, Variant};
use crate::sample::{validate_sample, DataScenario, DesignKind, ExposureLimits, Observation, Sample, Side};

/// Polynomial in `w` with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Polynomial(coefficients)
    }

    pub fn constant(c: f64) -> Self {
        Polynomial(vec![c])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, w: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * w + c)
    }

    /// Checks `0 <= p(w) <= 1` on a fine grid over `[lo, hi]`, endpoints included.
    fn check_unit(&self, name: &str, lo: f64, hi: f64) -> Result<()> {
        if self.0.is_empty() || self.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidDgp(format!("{name} needs finite coefficients")));
        }
        const POINTS: usize = 4000;
        for i in 0..=POINTS {
            let w = lo + (hi - lo) * i as f64 / POINTS as f64;
            let v = self.eval(w);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidDgp(format!(
                    "{name}({w}) = {v} lies outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpDgp {
    q0: Polynomial,
    theta_fn: Polynomial,
}

impl SharpDgp {
    /// `q0` and `theta_fn` must map `[-1, 1]` into `[0, 1]`, and `q0(0) < 1`.
    pub fn new(q0: Polynomial, theta_fn: Polynomial) -> Result<Self> {
        check_arms(&q0, &theta_fn)?;
        Ok(SharpDgp { q0, theta_fn })
    }

    pub fn q0(&self) -> &Polynomial {
        &self.q0
    }

    pub fn theta_fn(&self) -> &Polynomial {
        &self.theta_fn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyDgp {
    q0: Polynomial,
    theta_fn: Polynomial,
    e_p: Polynomial,
    e_n: Polynomial,
}

impl FuzzyDgp {
    /// As [`SharpDgp::new`], plus exposure arms in `[0, 1]` on their half of
    /// the domain with `e_p(0) > e_n(0)`.
    pub fn new(q0: Polynomial, theta_fn: Polynomial, e_p: Polynomial, e_n: Polynomial) -> Result<Self> {
        check_arms(&q0, &theta_fn)?;
        e_p.check_unit("e_p", 0.0, 1.0)?;
        e_n.check_unit("e_n", -1.0, 0.0)?;
        if e_p.eval(0.0) <= e_n.eval(0.0) {
            return Err(Error::InvalidDgp(format!(
                "exposure must jump up at the cutoff: e_p(0) = {}, e_n(0) = {}",
                e_p.eval(0.0),
                e_n.eval(0.0)
            )));
        }
        Ok(FuzzyDgp { q0, theta_fn, e_p, e_n })
    }

    pub fn q0(&self) -> &Polynomial {
        &self.q0
    }

    pub fn theta_fn(&self) -> &Polynomial {
        &self.theta_fn
    }

    pub fn e_p(&self) -> &Polynomial {
        &self.e_p
    }

    pub fn e_n(&self) -> &Polynomial {
        &self.e_n
    }
}

fn check_arms(q0: &Polynomial, theta_fn: &Polynomial) -> Result<()> {
    q0.check_unit("q0", -1.0, 1.0)?;
    theta_fn.check_unit("theta_fn", -1.0, 1.0)?;
    if q0.eval(0.0) >= 1.0 {
        return Err(Error::InvalidDgp(
            "q0(0) = 1 leaves nobody to persuade at the cutoff".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "design")]
pub enum Dgp {
    Sharp(SharpDgp),
    Fuzzy(FuzzyDgp),
}

impl Dgp {
    pub fn design(&self) -> DesignKind {
        match self {
            Dgp::Sharp(_) => DesignKind::Sharp,
            Dgp::Fuzzy(_) => DesignKind::Fuzzy,
        }
    }

    fn arms(&self) -> (&Polynomial, &Polynomial) {
        match self {
            Dgp::Sharp(d) => (&d.q0, &d.theta_fn),
            Dgp::Fuzzy(d) => (&d.q0, &d.theta_fn),
        }
    }

    fn exposure_at(&self, w: f64) -> f64 {
        match self {
            Dgp::Sharp(_) => f64::from(u8::from(w >= 0.0)),
            Dgp::Fuzzy(d) if w >= 0.0 => d.e_p.eval(w),
            Dgp::Fuzzy(d) => d.e_n.eval(w),
        }
    }

    /// `E[Y | W = w]`.
    pub fn mean_outcome(&self, w: f64) -> f64 {
        let (q0, theta) = self.arms();
        let q = q0.eval(w);
        q + (1.0 - q) * theta.eval(w) * self.exposure_at(w)
    }
}

impl From<SharpDgp> for Dgp {
    fn from(d: SharpDgp) -> Self {
        Dgp::Sharp(d)
    }
}

impl From<FuzzyDgp> for Dgp {
    fn from(d: FuzzyDgp) -> Self {
        Dgp::Fuzzy(d)
    }
}

/// One simulated record with both potential outcomes exposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    pub w: f64,
    pub y0: u8,
    pub y1: u8,
    pub d: u8,
}

impl PotentialRecord {
    pub fn y(&self) -> u8 {
        if self.d == 1 {
            self.y1
        } else {
            self.y0
        }
    }
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_with(dgp: &Dgp, n: usize, rng: &mut ChaCha8Rng) -> Vec<PotentialRecord> {
    let (q0, theta) = dgp.arms();
    (0..n)
        .map(|_| {
            let w = 2.0 * rng.random::<f64>() - 1.0;
            let u: f64 = rng.random();
            let q = q0.eval(w);
            let y0 = u <= q;
            let y1 = u <= q + (1.0 - q) * theta.eval(w);
            let d = match dgp {
                Dgp::Sharp(_) => w >= 0.0,
                Dgp::Fuzzy(_) => rng.random::<f64>() <= dgp.exposure_at(w),
            };
            PotentialRecord {
                w,
                y0: y0.into(),
                y1: y1.into(),
                d: d.into(),
            }
        })
        .collect()
}

/// Draws `n` records with potential outcomes visible.
pub fn draw_potential(dgp: &Dgp, n: usize, seed: u64) -> Result<Vec<PotentialRecord>> {
    check_n(n)?;
    Ok(draw_with(dgp, n, &mut seeded(seed, 0)))
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("need n >= 4, got {n}")));
    }
    Ok(())
}

fn to_sample(records: &[PotentialRecord]) -> Result<Sample> {
    let obs = records
        .iter()
        .map(|r| Observation::new(r.y().into(), Some(r.d.into()), r.w))
        .collect();
    validate_sample(obs, 0.0, DataScenario::FullTriplet)
}

fn generate(dgp: &Dgp, n: usize, rng: &mut ChaCha8Rng) -> Result<Sample> {
    check_n(n)?;
    to_sample(&draw_with(dgp, n, rng))
}

/// Sharp-design sample with cutoff 0 and `d = 1{w >= 0}`.
pub fn gen_sharp(dgp: &SharpDgp, n: usize, seed: u64) -> Result<Sample> {
    generate(&Dgp::Sharp(dgp.clone()), n, &mut seeded(seed, 0))
}

/// Fuzzy-design sample with cutoff 0.
pub fn gen_fuzzy(dgp: &FuzzyDgp, n: usize, seed: u64) -> Result<Sample> {
    generate(&Dgp::Fuzzy(dgp.clone()), n, &mut seeded(seed, 0))
}

/// Population quantities at the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `Pr{Y(1)=1 | Y(0)=0, W=0}`.
    pub theta_at_cutoff: f64,
    /// The same rate among units with `e(0-) < V <= e(0+)`.
    pub theta_compliers: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    /// `Pr(Y=1, D=1 | W=0+)`.
    pub p_y1d1_plus: f64,
    /// `Pr(Y=1, D=0 | W=0-)`.
    pub p_y1d0_minus: f64,
    /// Population value of the outcome-only lower bound.
    pub theta_rd: f64,
    /// Population value of the upper bound from joint (Y, D) limits.
    pub upper_bound_full: f64,
}

impl GroundTruth {
    /// Population value of an estimand.
    pub fn value_of(&self, estimand: Estimand) -> f64 {
        let exposure = ExposureLimits::new(self.e_plus, self.e_minus)
            .expect("ground-truth exposure limits are ordered");
        match estimand {
            Estimand::ThetaRd => self.theta_rd,
            Estimand::ThetaRdUpper => self.upper_bound_full,
            Estimand::ThetaRdUpperE => {
                theta_rd_upper_e(self.p_plus, self.p_minus, &exposure, 0.0).unwrap_or(f64::NAN)
            }
            Estimand::ThetaClStar => self.theta_compliers,
            Estimand::ThetaClStarStar => {
                theta_cl_star_star(self.p_plus, self.p_minus, &exposure, 0.0).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn target_value(&self, target: Target) -> f64 {
        match target {
            Target::Population => self.theta_at_cutoff,
            Target::LocalCompliers => self.theta_compliers,
        }
    }
}

/// Analytic limits at `w = 0` for either design.
pub fn true_params(dgp: &Dgp) -> GroundTruth {
    let (q0, theta) = dgp.arms();
    let q = q0.eval(0.0);
    let t = theta.eval(0.0);
    let p1 = q + (1.0 - q) * t;
    let (e_plus, e_minus) = match dgp {
        Dgp::Sharp(_) => (1.0, 0.0),
        Dgp::Fuzzy(d) => (d.e_p.eval(0.0), d.e_n.eval(0.0)),
    };
    let p_plus = q + (1.0 - q) * t * e_plus;
    let p_minus = q + (1.0 - q) * t * e_minus;
    let p_y1d1_plus = e_plus * p1;
    let p_y1d0_minus = (1.0 - e_minus) * q;
    GroundTruth {
        theta_at_cutoff: t,
        theta_compliers: t,
        p_plus,
        p_minus,
        e_plus,
        e_minus,
        p_y1d1_plus,
        p_y1d0_minus,
        theta_rd: theta_rd(p_plus, p_minus, 0.0).expect("q0(0) < 1 is validated"),
        upper_bound_full: theta_rd_upper(p_y1d1_plus, e_plus, p_y1d0_minus, 0.0)
            .expect("q0(0) < 1 is validated"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub reps: usize,
    pub spec: FitSpec,
    pub variant: Variant,
    pub alpha: f64,
    pub seed: u64,
    pub target: Target,
    pub epsilon_den: f64,
    /// Replace each binary outcome by `E[Y | W = w]`. Sharp designs only.
    pub pseudo_outcome: bool,
}

impl McConfig {
    pub fn new(n: usize, reps: usize, spec: FitSpec, alpha: f64, seed: u64) -> Self {
        McConfig {
            n,
            reps,
            spec,
            variant: Variant::Conventional,
            alpha,
            seed,
            target: Target::Population,
            epsilon_den: crate::estimands::DEFAULT_EPSILON_DEN,
            pseudo_outcome: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimandSummary {
    pub estimand: Estimand,
    /// Population value of this estimand under the DGP.
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    pub mean_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub plan: AnalysisPlan,
    pub truth: GroundTruth,
    /// Value of the plan's target parameter that coverage is measured against.
    pub target_value: f64,
    pub n: usize,
    pub reps: usize,
    /// Bias of the first planned estimand against its own population value.
    pub bias: f64,
    /// RMSE of the first planned estimand against its own population value.
    pub rmse: f64,
    /// Share of confidence intervals containing `target_value`.
    pub coverage: f64,
    pub mean_ci_width: f64,
    /// Share of estimated intervals `[lower, upper]` containing `target_value`,
    /// before any confidence margin. Only for two-sided bound plans.
    pub containment: Option<f64>,
    pub estimands: Vec<EstimandSummary>,
}

struct RepOutcome {
    points: Vec<PersuasionPoint>,
    covered: bool,
    width: f64,
    contained: bool,
}

fn estimate(
    sample: &Sample,
    estimand: Estimand,
    cfg: &McConfig,
) -> Result<PersuasionPoint> {
    let (spec, variant, eps) = (&cfg.spec, cfg.variant, cfg.epsilon_den);
    Ok(match estimand {
        Estimand::ThetaRd => theta_rd_fit(sample, spec, variant, eps)?.point,
        Estimand::ThetaRdUpper => theta_rd_upper_full(sample, spec, variant, eps)?.point,
        Estimand::ThetaClStar => theta_cl_star(sample, spec, variant, eps)?.point,
        Estimand::ThetaRdUpperE | Estimand::ThetaClStarStar => {
            return Err(Error::InvalidArgument(format!(
                "{} is not estimable from simulated full-triplet data",
                estimand.name()
            )))
        }
    })
}

fn pseudo_theta_rd(dgp: &Dgp, sample: &Sample, cfg: &McConfig) -> Result<PersuasionPoint> {
    let mean: Vec<f64> = sample.records().iter().map(|r| dgp.mean_outcome(r.w)).collect();
    let plus = fit(sample, &mean, Side::Right, &cfg.spec, cfg.variant)?;
    let minus = fit(sample, &mean, Side::Left, &cfg.spec, cfg.variant)?;
    Ok(PersuasionPoint::new(
        theta_rd(plus.mu_hat, minus.mu_hat, cfg.epsilon_den)?,
        theta_rd_se(plus.mu_hat, minus.mu_hat, plus.se, minus.se, cfg.epsilon_den)?,
    ))
}

fn replicate(
    dgp: &Dgp,
    cfg: &McConfig,
    plan: &AnalysisPlan,
    target: f64,
    rep: usize,
) -> Result<RepOutcome> {
    let sample = generate(dgp, cfg.n, &mut seeded(cfg.seed, rep as u64))?;
    let points = if cfg.pseudo_outcome {
        vec![pseudo_theta_rd(dgp, &sample, cfg)?]
    } else {
        plan.estimand_set()
            .into_iter()
            .map(|e| estimate(&sample, e, cfg))
            .collect::<Result<Vec<_>>>()?
    };
    let interval = match plan.identified {
        IdentifiedSet::Interval { .. } => PersuasionInterval::new(points[0], points[1]),
        IdentifiedSet::LowerBound { .. } => PersuasionInterval::up_to_one(points[0]),
        IdentifiedSet::Point { .. } => PersuasionInterval::new(points[0], points[0]),
    };
    let ci = plan_ci(plan, &interval, cfg.alpha)?;
    let contained = interval.lower.theta <= target && target <= interval.upper.theta;
    Ok(RepOutcome {
        points,
        covered: ci.contains(target),
        width: ci.width(),
        contained,
    })
}

/// Monte Carlo study of the estimator the decision flow selects for `dgp`
/// with MTR and full-triplet data.
pub fn mc_study(dgp: &Dgp, cfg: &McConfig) -> Result<McReport> {
    mc_study_with(dgp, cfg, Exec::default())
}

pub fn mc_study_with(dgp: &Dgp, cfg: &McConfig, exec: Exec) -> Result<McReport> {
    if cfg.reps < 50 {
        return Err(Error::InvalidArgument(format!("need reps >= 50, got {}", cfg.reps)));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {} outside (0, 1)", cfg.alpha)));
    }
    check_n(cfg.n)?;
    let plan = decision_flow(dgp.design(), true, DataScenario::FullTriplet, cfg.target)?;
    if cfg.pseudo_outcome && dgp.design() != DesignKind::Sharp {
        return Err(Error::InvalidArgument(
            "pseudo-outcome mode applies to sharp designs only".into(),
        ));
    }
    let truth = true_params(dgp);
    let target = truth.target_value(cfg.target);

    let outcomes = exec
        .map_range(cfg.reps, |rep| replicate(dgp, cfg, &plan, target, rep))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let reps = cfg.reps as f64;
    let share = |f: &dyn Fn(&RepOutcome) -> bool| {
        outcomes.iter().filter(|o| f(o)).count() as f64 / reps
    };
    let estimands: Vec<EstimandSummary> = plan
        .estimand_set()
        .into_iter()
        .enumerate()
        .map(|(k, estimand)| {
            let value = truth.value_of(estimand);
            let mean = outcomes.iter().map(|o| o.points[k].theta).sum::<f64>() / reps;
            let mse = outcomes
                .iter()
                .map(|o| (o.points[k].theta - value).powi(2))
                .sum::<f64>()
                / reps;
            EstimandSummary {
                estimand,
                truth: value,
                mean,
                bias: mean - value,
                rmse: mse.sqrt(),
                mean_se: outcomes.iter().map(|o| o.points[k].se).sum::<f64>() / reps,
            }
        })
        .collect();

    Ok(McReport {
        bias: estimands[0].bias,
        rmse: estimands[0].rmse,
        coverage: share(&|o| o.covered),
        mean_ci_width: outcomes.iter().map(|o| o.width).sum::<f64>() / reps,
        containment: matches!(plan.identified, IdentifiedSet::Interval { .. })
            .then(|| share(&|o| o.contained)),
        plan,
        truth,
        target_value: target,
        n: cfg.n,
        reps: cfg.reps,
        estimands,
    })
}
