//! The `oracle` command: the closed-form range of `a2 + b2` set against a
//! grid enumeration of every joint table consistent with the limits.

use std::fmt::Write as _;

use rdpersuasion::oracle::{
    attainable_range_a2b2, closed_form_a2b2, sharp_range_a2b2, Interval, PopulationLimits,
};
use serde::{Deserialize, Serialize};

use crate::Result;

pub const DEFAULT_GRID_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub population: PopulationLimits,
    pub closed_form: Interval,
    pub enumerated: Interval,
    /// Range once every cell of the table is kept nonnegative.
    pub sharp_range: Interval,
    pub grid_step: f64,
    /// Largest endpoint distance between `enumerated` and `closed_form`.
    pub max_gap: f64,
    /// PASS when the closed form matches the enumeration within `grid_step`.
    pub verdict: Verdict,
}

pub fn run_oracle(pop: &PopulationLimits, grid_step: f64) -> Result<OracleReport> {
    let closed_form = closed_form_a2b2(pop)?;
    let enumerated = attainable_range_a2b2(pop, grid_step)?;
    let sharp_range = sharp_range_a2b2(pop)?;
    let max_gap = (enumerated.lo - closed_form.lo)
        .abs()
        .max((enumerated.hi - closed_form.hi).abs());
    let verdict = if enumerated.approx_eq(&closed_form, grid_step) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(OracleReport {
        population: *pop,
        closed_form,
        enumerated,
        sharp_range,
        grid_step,
        max_gap,
        verdict,
    })
}

pub fn render_table(r: &OracleReport) -> String {
    let mut s = String::new();
    let p = &r.population;
    let _ = writeln!(
        s,
        "p+ {:.6}  p- {:.6}  e+ {:.6}  e- {:.6}",
        p.p_plus, p.p_minus, p.e_plus, p.e_minus
    );
    for (name, i) in [
        ("closed form", &r.closed_form),
        ("enumerated", &r.enumerated),
        ("sharp (c3 >= 0)", &r.sharp_range),
    ] {
        let _ = writeln!(s, "{name:<16} [{:.6}, {:.6}]", i.lo, i.hi);
    }
    let _ = writeln!(
        s,
        "{:?}: max gap {:.6} against grid step {}",
        r.verdict, r.max_gap, r.grid_step
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_when_closed_form_is_sharp() {
        let pop = PopulationLimits::new(0.7, 0.5, 0.6, 0.2).unwrap();
        let r = run_oracle(&pop, 0.02).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.sharp_range.approx_eq(&r.closed_form, 1e-12));
    }

    #[test]
    fn fail_reports_gap_on_the_lower_endpoint() {
        let pop = PopulationLimits::new(0.516, 0.46, 1.0, 0.4).unwrap();
        let r = run_oracle(&pop, 0.02).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.closed_form.lo - 0.056).abs() < 1e-12);
        assert!((r.enumerated.lo - 0.14).abs() < 0.02);
        assert!((r.max_gap - 0.084).abs() < 0.02);
        assert!(render_table(&r).contains("Fail"));
    }

    #[test]
    fn verdict_serializes_uppercase() {
        assert_eq!(serde_json::to_string(&Verdict::Pass).unwrap(), "\"PASS\"");
    }
}
