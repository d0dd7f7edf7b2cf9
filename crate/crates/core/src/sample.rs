//! Observations, validated samples and the data-observability scenario.
//!
//! A [`Sample`] is the only way data enters the estimators. Construction goes
//! through [`validate_sample`], after which every record is known to carry a
//! binary outcome, a consistently present (or absent) binary treatment and a
//! finite running variable, with at least two records on each side of the
//! cutoff. Records sitting exactly on the cutoff belong to the right side.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One data row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub d: Option<f64>,
    pub w: f64,
    pub cluster: Option<String>,
}

impl Observation {
    pub fn new(y: f64, d: Option<f64>, w: f64) -> Self {
        Observation {
            y,
            d,
            w,
            cluster: None,
        }
    }

    pub fn with_cluster(mut self, cluster: impl Into<String>) -> Self {
        self.cluster = Some(cluster.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

/// Which parts of (Y, D, W) are available to the analyst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataScenario {
    /// (Y, D, W) observed jointly.
    FullTriplet,
    /// Only (Y, W), with the exposure limits known from elsewhere.
    AggregateWithExposure,
    /// Only (Y, W); nothing is known about exposure.
    OutcomeOnly,
}

impl DataScenario {
    pub const ALL: [DataScenario; 3] = [
        DataScenario::FullTriplet,
        DataScenario::AggregateWithExposure,
        DataScenario::OutcomeOnly,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Sharp,
    Fuzzy,
}

/// Exposure rates just right (`e_plus`) and just left (`e_minus`) of the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExposure")]
pub struct ExposureLimits {
    e_plus: f64,
    e_minus: f64,
}

#[derive(Deserialize)]
struct RawExposure {
    e_plus: f64,
    e_minus: f64,
}

impl TryFrom<RawExposure> for ExposureLimits {
    type Error = Error;

    fn try_from(raw: RawExposure) -> Result<Self> {
        ExposureLimits::new(raw.e_plus, raw.e_minus)
    }
}

impl ExposureLimits {
    pub fn new(e_plus: f64, e_minus: f64) -> Result<Self> {
        let ok = e_plus.is_finite()
            && e_minus.is_finite()
            && 0.0 <= e_minus
            && e_minus < e_plus
            && e_plus <= 1.0;
        if !ok {
            return Err(Error::InvalidExposure { e_minus, e_plus });
        }
        Ok(ExposureLimits { e_plus, e_minus })
    }

    /// Sharp-design limits: everyone treated on the right, nobody on the left.
    pub fn sharp() -> Self {
        ExposureLimits {
            e_plus: 1.0,
            e_minus: 0.0,
        }
    }

    pub fn e_plus(&self) -> f64 {
        self.e_plus
    }

    pub fn e_minus(&self) -> f64 {
        self.e_minus
    }

    /// Mass of local compliers, `e_plus - e_minus` (always positive).
    pub fn jump(&self) -> f64 {
        self.e_plus - self.e_minus
    }
}

/// A validated collection of observations around a cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    records: Vec<Observation>,
    cutoff: f64,
    scenario: DataScenario,
}

impl Sample {
    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn scenario(&self) -> DataScenario {
        self.scenario
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_treatment(&self) -> bool {
        self.records.first().is_some_and(|r| r.d.is_some())
    }

    pub fn has_clusters(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.cluster.is_some())
    }

    pub fn side_of(&self, w: f64) -> Side {
        side_of(w, self.cutoff)
    }

    pub fn count_on(&self, side: Side) -> usize {
        self.records
            .iter()
            .filter(|r| side_of(r.w, self.cutoff) == side)
            .count()
    }

    /// Per-record outcome vector, the usual first argument to the boundary fits.
    pub fn outcome(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    /// Applies `f(y, d)` to every record; panics if the sample has no treatment column.
    pub fn transformed(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| f(r.y, r.d.expect("transformed outcome requires d")))
            .collect()
    }

    pub fn into_records(self) -> Vec<Observation> {
        self.records
    }
}

fn side_of(w: f64, cutoff: f64) -> Side {
    if w >= cutoff {
        Side::Right
    } else {
        Side::Left
    }
}

fn check_binary(field: &'static str, index: usize, value: f64) -> Result<()> {
    if value == 0.0 || value == 1.0 {
        Ok(())
    } else {
        Err(Error::NonBinaryValue {
            field,
            index,
            value,
        })
    }
}

/// Checks every [`Sample`] invariant and wraps the records.
pub fn validate_sample(
    records: Vec<Observation>,
    cutoff: f64,
    scenario: DataScenario,
) -> Result<Sample> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    if !cutoff.is_finite() {
        return Err(Error::InvalidArgument(format!("cutoff {cutoff} is not finite")));
    }
    let has_d = records[0].d.is_some();
    for (i, r) in records.iter().enumerate() {
        if r.d.is_some() != has_d {
            return Err(Error::MixedTreatmentPresence);
        }
        check_binary("y", i, r.y)?;
        if let Some(d) = r.d {
            check_binary("d", i, d)?;
        }
        if !r.w.is_finite() {
            return Err(Error::NonFinite { field: "w", index: i });
        }
    }
    if scenario == DataScenario::FullTriplet && !has_d {
        return Err(Error::ScenarioMismatch(
            "full-triplet scenario requires a treatment column".into(),
        ));
    }
    let right = records.iter().filter(|r| r.w >= cutoff).count();
    let left = records.len() - right;
    for (side, found) in [(Side::Left, left), (Side::Right, right)] {
        if found < 2 {
            return Err(Error::InsufficientSideData {
                side,
                found,
                needed: 2,
            });
        }
    }
    Ok(Sample {
        records,
        cutoff,
        scenario,
    })
}

pub fn classify_scenario(sample_has_d: bool, exposure: Option<&ExposureLimits>) -> DataScenario {
    match (sample_has_d, exposure) {
        (true, _) => DataScenario::FullTriplet,
        (false, Some(_)) => DataScenario::AggregateWithExposure,
        (false, None) => DataScenario::OutcomeOnly,
    }
}
