//! One-sided local polynomial regression at the cutoff.
//!
//! [`fit_boundary`] regresses an arbitrary per-record outcome on powers of the
//! centred running variable, using only the records on one side of the cutoff
//! weighted by `K((w - c) / h)`. The fitted intercept is the boundary value and
//! its standard error is read off the intercept entry of a sandwich covariance
//! (HC0, or cluster-robust when labels are available). Regressors are scaled
//! by `1 / h` internally; this does not change the intercept or its variance.
//!
//! [`fit_boundary_bc`] is a simple bias-corrected variant: the order `p + 1`
//! fit at the same bandwidth, with that fit's own variance. It is an
//! approximation to the usual robust bias-corrected procedure with pilot
//! bandwidth equal to the main bandwidth, not a replication of any package.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Sample, Side};
use crate::wls::wls;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Triangular,
    Uniform,
    Epanechnikov,
}

/// Kernel weight on the normalised distance `u`; zero outside `|u| <= 1`.
pub fn kernel_weight(kind: KernelKind, u: f64) -> f64 {
    let a = u.abs();
    if a > 1.0 {
        return 0.0;
    }
    match kind {
        KernelKind::Triangular => 1.0 - a,
        KernelKind::Uniform => 1.0,
        KernelKind::Epanechnikov => 0.75 * (1.0 - u * u),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceKind {
    #[default]
    HeteroskedasticityRobust,
    ClusterRobust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Conventional,
    BiasCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    order: usize,
    bandwidth: f64,
    kernel: KernelKind,
    variance: VarianceKind,
}

impl FitSpec {
    pub fn new(
        order: usize,
        bandwidth: f64,
        kernel: KernelKind,
        variance: VarianceKind,
    ) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidSpec(format!(
                "order {order} exceeds the maximum of {MAX_ORDER}"
            )));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(FitSpec {
            order,
            bandwidth,
            kernel,
            variance,
        })
    }

    /// Local linear, triangular kernel, heteroskedasticity-robust variance.
    pub fn local_linear(bandwidth: f64) -> Result<Self> {
        FitSpec::new(
            1,
            bandwidth,
            KernelKind::Triangular,
            VarianceKind::HeteroskedasticityRobust,
        )
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn variance(&self) -> VarianceKind {
        self.variance
    }

    pub fn with_variance(mut self, variance: VarianceKind) -> Self {
        self.variance = variance;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    pub mu_hat: f64,
    pub se: f64,
    pub side: Side,
    /// Records with nonzero kernel weight on `side`.
    pub n_eff: usize,
    pub spec: FitSpec,
    pub variant: Variant,
}

/// Conventional local polynomial estimate of the boundary value on `side`.
pub fn fit_boundary(
    sample: &Sample,
    outcome: &[f64],
    side: Side,
    spec: &FitSpec,
) -> Result<BoundaryEstimate> {
    fit_at_order(sample, outcome, side, spec, spec.order, Variant::Conventional)
}

/// Order `p + 1` refit at the same bandwidth, reported as the bias-corrected estimate.
pub fn fit_boundary_bc(
    sample: &Sample,
    outcome: &[f64],
    side: Side,
    spec: &FitSpec,
) -> Result<BoundaryEstimate> {
    fit_at_order(
        sample,
        outcome,
        side,
        spec,
        spec.order + 1,
        Variant::BiasCorrected,
    )
}

/// Dispatches on `variant`.
pub fn fit(
    sample: &Sample,
    outcome: &[f64],
    side: Side,
    spec: &FitSpec,
    variant: Variant,
) -> Result<BoundaryEstimate> {
    match variant {
        Variant::Conventional => fit_boundary(sample, outcome, side, spec),
        Variant::BiasCorrected => fit_boundary_bc(sample, outcome, side, spec),
    }
}

fn fit_at_order(
    sample: &Sample,
    outcome: &[f64],
    side: Side,
    spec: &FitSpec,
    order: usize,
    variant: Variant,
) -> Result<BoundaryEstimate> {
    if outcome.len() != sample.len() {
        return Err(Error::InvalidArgument(format!(
            "outcome has {} values for {} records",
            outcome.len(),
            sample.len()
        )));
    }
    let clustered = spec.variance == VarianceKind::ClusterRobust;
    if clustered && !sample.has_clusters() {
        return Err(Error::InvalidSpec(
            "cluster-robust variance requires a cluster label on every record".into(),
        ));
    }

    let k = order + 1;
    let cutoff = sample.cutoff();
    let h = spec.bandwidth;
    let mut design = Vec::new();
    let mut ys = Vec::new();
    let mut weights = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for (i, (r, &y)) in sample.records().iter().zip(outcome).enumerate() {
        if sample.side_of(r.w) != side {
            continue;
        }
        let u = (r.w - cutoff) / h;
        let wt = kernel_weight(spec.kernel, u);
        if wt == 0.0 {
            continue;
        }
        if !y.is_finite() {
            return Err(Error::NonFinite {
                field: "outcome",
                index: i,
            });
        }
        let mut pow = 1.0;
        for _ in 0..k {
            design.push(pow);
            pow *= u;
        }
        ys.push(y);
        weights.push(wt);
        if clustered {
            labels.push(r.cluster.as_deref().unwrap_or_default());
        }
    }

    let n_eff = ys.len();
    if n_eff < k {
        return Err(Error::InsufficientSideData {
            side,
            found: n_eff,
            needed: k,
        });
    }
    let fit = wls(
        &design,
        k,
        &ys,
        &weights,
        clustered.then_some(labels.as_slice()),
    )
    .ok_or(Error::SingularDesign { side })?;

    Ok(BoundaryEstimate {
        mu_hat: fit.coef[0],
        se: fit.cov[(0, 0)].max(0.0).sqrt(),
        side,
        n_eff,
        spec: *spec,
        variant,
    })
}

/// Rule-of-thumb bandwidth `1.84 * sd(w) * n^(-1/5)` over the whole sample.
///
/// `sd` uses the population (divide-by-n) convention. This is a smoothing
/// default, not an MSE- or coverage-optimal RD bandwidth.
pub fn rot_bandwidth(sample: &Sample) -> Result<f64> {
    let ws: Vec<f64> = sample.records().iter().map(|r| r.w).collect();
    rot_bandwidth_values(&ws)
}

/// [`rot_bandwidth`] on raw running-variable values.
pub fn rot_bandwidth_values(ws: &[f64]) -> Result<f64> {
    let n = ws.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "rule-of-thumb bandwidth needs at least 10 records, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = ws.iter().sum::<f64>() / nf;
    let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / nf;
    let sd = var.sqrt();
    if !(sd > f64::EPSILON * mean.abs().max(1.0)) {
        return Err(Error::DegenerateRunning);
    }
    Ok(1.84 * sd * nf.powf(-0.2))
}
