//! The `simulate` command: Monte Carlo studies from a key=value DGP file.
//!
//! ```text
//! design = fuzzy
//! q0 = 0.3            # polynomial coefficients in w, constant first
//! theta = 0.25
//! e_plus = 0.85       # fuzzy only
//! e_minus = 0.25      # fuzzy only
//! n = 2000
//! reps = 200
//! seed = 7
//! ```
//!
//! Optional keys: `bandwidth`, `kernel`, `order`, `alpha`, `target`,
//! `variant`, `epsilon_den`, `pseudo_outcome`.

use std::path::{Path, PathBuf};

use rdpersuasion::locpoly::{FitSpec, KernelKind, VarianceKind};
use rdpersuasion::sim::{
    gen_fuzzy, gen_sharp, mc_study, true_params, Dgp, FuzzyDgp, GroundTruth, McConfig, McReport,
    Polynomial, SharpDgp,
};
use rdpersuasion::DesignKind;
use serde::{Deserialize, Serialize};

use crate::config::{parse_bool, parse_enum, parse_f64, parse_list, parse_u64, parse_usize, KeyValues};
use crate::{CliError, Result};

/// Smallest replication count a study accepts.
pub const MIN_REPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub dgp: Dgp,
    pub config: McConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub dgp: Dgp,
    pub n: usize,
    pub seed: u64,
    pub truth: GroundTruth,
}

/// Rule-of-thumb bandwidth for a running variable uniform on `[-1, 1]`.
pub fn default_bandwidth(n: usize) -> f64 {
    1.84 * (1.0 / 3.0f64).sqrt() * (n as f64).powf(-0.2)
}

fn required<T>(kv: &mut KeyValues, key: &str, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
    kv.take_parsed(key, parse)?
        .ok_or_else(|| CliError::Usage(format!("simulation file needs `{key}`")))
}

fn polynomial(kv: &mut KeyValues, key: &str) -> Result<Polynomial> {
    let c = required(kv, key, parse_list)?;
    if c.is_empty() {
        return Err(CliError::Usage(format!("`{key}` needs at least one coefficient")));
    }
    Ok(Polynomial::new(c))
}

impl SimulationSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let design: DesignKind = required(&mut kv, "design", parse_enum)?;
        let q0 = polynomial(&mut kv, "q0")?;
        let theta = polynomial(&mut kv, "theta")?;
        let dgp = match design {
            DesignKind::Sharp => Dgp::Sharp(SharpDgp::new(q0, theta)?),
            DesignKind::Fuzzy => {
                let e_p = polynomial(&mut kv, "e_plus")?;
                let e_n = polynomial(&mut kv, "e_minus")?;
                Dgp::Fuzzy(FuzzyDgp::new(q0, theta, e_p, e_n)?)
            }
        };
        let n = required(&mut kv, "n", parse_usize)?;
        let reps = required(&mut kv, "reps", parse_usize)?;
        let seed = required(&mut kv, "seed", parse_u64)?;
        let bandwidth = kv.take_parsed("bandwidth", parse_f64)?.unwrap_or(default_bandwidth(n));
        let kernel = kv.take_parsed("kernel", parse_enum)?.unwrap_or(KernelKind::Triangular);
        let order = kv.take_parsed("order", parse_usize)?.unwrap_or(1);
        let alpha = kv.take_parsed("alpha", parse_f64)?.unwrap_or(0.05);
        let spec = FitSpec::new(order, bandwidth, kernel, VarianceKind::HeteroskedasticityRobust)?;
        let mut config = McConfig::new(n, reps, spec, alpha, seed);
        if let Some(t) = kv.take_parsed("target", parse_enum)? {
            config.target = t;
        }
        if let Some(v) = kv.take_parsed("variant", parse_enum)? {
            config.variant = v;
        }
        if let Some(e) = kv.take_parsed("epsilon_den", parse_f64)? {
            config.epsilon_den = e;
        }
        if let Some(p) = kv.take_parsed("pseudo_outcome", parse_bool)? {
            config.pseudo_outcome = p;
        }
        kv.finish()?;
        let spec = SimulationSpec { dgp, config };
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.config.reps < MIN_REPS {
            return Err(CliError::Usage(format!(
                "reps must be at least {MIN_REPS}, got {}",
                self.config.reps
            )));
        }
        Ok(())
    }
}

pub fn run_simulate(spec: &SimulationSpec) -> Result<McReport> {
    spec.validate()?;
    Ok(mc_study(&spec.dgp, &spec.config)?)
}

/// Path of the truth file written next to an emitted sample.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("truth.json")
}

/// Writes one sample of size `n` drawn with the study seed, plus its truth sidecar.
pub fn emit_sample(spec: &SimulationSpec, path: &Path) -> Result<TruthSidecar> {
    let McConfig { n, seed, .. } = spec.config;
    let sample = match &spec.dgp {
        Dgp::Sharp(d) => gen_sharp(d, n, seed)?,
        Dgp::Fuzzy(d) => gen_fuzzy(d, n, seed)?,
    };
    crate::data::write_csv(path, sample.records())?;
    let sidecar = TruthSidecar {
        dgp: spec.dgp.clone(),
        n,
        seed,
        truth: true_params(&spec.dgp),
    };
    let side = sidecar_path(path);
    std::fs::write(&side, crate::json::to_json(&sidecar)?).map_err(|e| CliError::io(&side, e))?;
    Ok(sidecar)
}

pub fn render_table(r: &McReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "n {} reps {}  target {:?} = {:.6}",
        r.n, r.reps, r.plan.target, r.target_value
    );
    let _ = writeln!(s, "{:<22} {:>10} {:>10} {:>10} {:>10} {:>10}", "estimand", "truth", "mean", "bias", "rmse", "mean se");
    for e in &r.estimands {
        let _ = writeln!(
            s,
            "{:<22} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            e.estimand.name(),
            e.truth,
            e.mean,
            e.bias,
            e.rmse,
            e.mean_se
        );
    }
    let _ = writeln!(
        s,
        "{:?} coverage {:.3}, mean width {:.6}",
        r.plan.ci_kind, r.coverage, r.mean_ci_width
    );
    if let Some(c) = r.containment {
        let _ = writeln!(s, "estimated interval contains target in {:.3} of replications", c);
    }
    s
}
