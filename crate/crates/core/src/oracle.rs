//! Brute-force checks of the identification results.
//!
//! Two families of checks live here:
//!
//! * Fréchet–Hoeffding bounds on `Pr{Y(1)=1 | Y(0)=0}` given the two
//!   potential-outcome marginals, in closed form and by enumerating joint
//!   tables.
//! * The nine-cell table of `(Y(0), Y(1))` types by latent exposure stratum
//!   under monotone treatment response. Each cell is a probability:
//!
//!   | stratum           | (0,0) | (0,1) | (1,1) |
//!   |-------------------|-------|-------|-------|
//!   | `V <= e-`         | a1    | b1    | c1    |
//!   | `e- < V <= e+`    | a2    | b2    | c2    |
//!   | `e+ < V <= 1`     | a3    | b3    | c3    |
//!
//!   The observable limits pin down `a1+b1+c1 = e-`, `a2+b2+c2 = e+ - e-`,
//!   `a1+a2+a3+b3 = 1 - p+` and `a1+a2+a3+b2+b3 = 1 - p-`. The quantity of
//!   interest is the untreated-outcome mass of local compliers, `a2 + b2`.
//!
//! [`attainable_range_a2b2`] enumerates genuine tables (every cell
//! nonnegative, including `c3`) and reports the range of `a2 + b2` they
//! attain. [`closed_form_a2b2`] is the textbook interval
//! `[p+ - p-, min{e+ - e-, 1 - p-}]`. The two agree except when
//! `p+ < e+ - e-`: there `c3 >= 0` forces `a2 + b2 >= e+ - e- - p-`, which
//! [`sharp_range_a2b2`] accounts for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Equality tolerance for the table constraints.
pub const CONSTRAINT_TOL: f64 = 1e-9;
const CELL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// Both endpoints within `tol`.
    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }
}

fn prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {p} is not a probability")))
    }
}

/// Sharp interval for `Pr{Y(1)=1 | Y(0)=0}` from the marginals
/// `p1 = Pr{Y(1)=1}` and `p0 = Pr{Y(0)=1}`, without monotonicity.
pub fn frechet_theta_bounds(p1: f64, p0: f64) -> Result<Interval> {
    prob("p1", p1)?;
    prob("p0", p0)?;
    let den = 1.0 - p0;
    if den <= 0.0 {
        return Err(Error::WeakDenominator {
            value: den,
            epsilon: 0.0,
        });
    }
    Ok(Interval::new(
        ((p1 - p0) / den).max(0.0),
        (p1 / den).min(1.0),
    ))
}

/// Enumerates joint distributions of `(Y(0), Y(1))` with the given marginals.
///
/// Tables are parameterised by `t = Pr{Y(1)=1 | Y(0)=0}`, which fixes all four
/// cells given the marginals. `[0, 1]` is cut into equal pieces of width at
/// most `grid_step`; within each piece the cells are affine in `t`, so the
/// feasible part of the piece is found exactly and its ends are materialised
/// as tables. Returns the range of `t` over the tables that pass the cell and
/// marginal checks. Working per piece keeps single-point feasible sets
/// (e.g. `p0 = 0`) visible to the grid.
pub fn frechet_theta_bounds_bruteforce(p1: f64, p0: f64, grid_step: f64) -> Result<Interval> {
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::InvalidArgument(format!(
            "grid_step must lie in (0, 0.01], got {grid_step}"
        )));
    }
    prob("p1", p1)?;
    prob("p0", p0)?;
    if p0 >= 1.0 {
        return Err(Error::WeakDenominator {
            value: 1.0 - p0,
            epsilon: 0.0,
        });
    }
    let q = 1.0 - p0;
    // Cells (p00, p01, p11, p10) as constant + slope * t.
    let cells = [
        Affine(q, -q),
        Affine(0.0, q),
        Affine(p1, -q),
        Affine(p0 - p1, q),
    ];
    let table = |t: f64| cells.map(|Affine(k, s)| k + s * t);
    let valid = |c: [f64; 4]| {
        c.iter().all(|&v| v >= -CELL_TOL)
            && (c[1] + c[2] - p1).abs() <= CONSTRAINT_TOL
            && (c[2] + c[3] - p0).abs() <= CONSTRAINT_TOL
    };

    let n = (1.0 / grid_step).ceil() as usize;
    let mut range: Option<Interval> = None;
    for k in 0..n {
        let mut piece = cells.to_vec();
        piece.push(Affine(-(k as f64) / n as f64, 1.0));
        piece.push(Affine((k + 1) as f64 / n as f64, -1.0));
        let Some((lo, hi)) = feasible_segment(&piece) else {
            continue;
        };
        for t in [lo, hi] {
            if valid(table(t)) {
                let r = range.get_or_insert(Interval::new(t, t));
                r.lo = r.lo.min(t);
                r.hi = r.hi.max(t);
            }
        }
    }
    range.ok_or_else(|| Error::Infeasible(format!("no joint table has marginals ({p1}, {p0})")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationLimits {
    pub p_plus: f64,
    pub p_minus: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

impl PopulationLimits {
    pub fn new(p_plus: f64, p_minus: f64, e_plus: f64, e_minus: f64) -> Result<Self> {
        prob("p_plus", p_plus)?;
        prob("p_minus", p_minus)?;
        prob("e_plus", e_plus)?;
        prob("e_minus", e_minus)?;
        if e_plus <= e_minus {
            return Err(Error::InvalidExposure { e_minus, e_plus });
        }
        Ok(PopulationLimits {
            p_plus,
            p_minus,
            e_plus,
            e_minus,
        })
    }

    /// Conditions under which some monotone table reproduces these limits.
    pub fn check_feasible(&self) -> Result<()> {
        let jump = self.p_plus - self.p_minus;
        if jump < 0.0 {
            return Err(Error::Infeasible(format!(
                "outcome limits decrease across the cutoff (p+ = {} < p- = {}), impossible under monotone response",
                self.p_plus, self.p_minus
            )));
        }
        if jump > self.e_plus - self.e_minus + CONSTRAINT_TOL {
            return Err(Error::Infeasible(format!(
                "outcome jump {jump} exceeds the complier mass e+ - e- = {}",
                self.e_plus - self.e_minus
            )));
        }
        if jump > 1.0 - self.p_minus + CONSTRAINT_TOL {
            return Err(Error::Infeasible(format!(
                "outcome jump {jump} exceeds 1 - p- = {}",
                1.0 - self.p_minus
            )));
        }
        Ok(())
    }
}

/// Joint probabilities of `(Y(0), Y(1))` type by exposure stratum; index 0, 1,
/// 2 is the stratum. `a` is type (0,0), `b` is (0,1), `c` is (1,1). The (1,0)
/// type does not exist under monotone response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbTable {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

impl JointProbTable {
    pub fn new(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> Result<Self> {
        let t = JointProbTable { a, b, c };
        if t.cells().any(|v| v < 0.0 || !v.is_finite()) {
            return Err(Error::IncoherentInputs("negative table cell".into()));
        }
        let total: f64 = t.cells().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::IncoherentInputs(format!("cells sum to {total}")));
        }
        Ok(t)
    }

    pub fn cells(&self) -> impl Iterator<Item = f64> + '_ {
        self.a.iter().chain(&self.b).chain(&self.c).copied()
    }

    /// `Pr{Y(0) = 0, e- < V <= e+}`.
    pub fn complier_untreated_zero(&self) -> f64 {
        self.a[1] + self.b[1]
    }
}

/// True iff the table reproduces the four observable limits.
pub fn joint_table_constraints(table: &JointProbTable, pop: &PopulationLimits) -> bool {
    let [a1, a2, a3] = table.a;
    let [b1, b2, b3] = table.b;
    let [c1, c2, _] = table.c;
    let close = |lhs: f64, rhs: f64| (lhs - rhs).abs() <= CONSTRAINT_TOL;
    close(a1 + b1 + c1, pop.e_minus)
        && close(a2 + b2 + c2, pop.e_plus - pop.e_minus)
        && close(a1 + a2 + a3 + b3, 1.0 - pop.p_plus)
        && close(a1 + a2 + a3 + b2 + b3, 1.0 - pop.p_minus)
}

/// Closed-form interval `[p+ - p-, min{e+ - e-, 1 - p-}]` for `a2 + b2`.
pub fn closed_form_a2b2(pop: &PopulationLimits) -> Result<Interval> {
    pop.check_feasible()?;
    Ok(Interval::new(
        pop.p_plus - pop.p_minus,
        (pop.e_plus - pop.e_minus).min(1.0 - pop.p_minus),
    ))
}

/// Interval for `a2 + b2` over genuine tables, including the constraint
/// `c3 >= 0`: `[max{p+ - p-, e+ - e- - p-}, min{e+ - e-, 1 - p-}]`.
pub fn sharp_range_a2b2(pop: &PopulationLimits) -> Result<Interval> {
    pop.check_feasible()?;
    let jump = pop.p_plus - pop.p_minus;
    let compliers = pop.e_plus - pop.e_minus;
    Ok(Interval::new(
        jump.max(compliers - pop.p_minus),
        compliers.min(1.0 - pop.p_minus),
    ))
}

/// Cell written as `constant + slope * a2`.
#[derive(Clone, Copy)]
struct Affine(f64, f64);

/// Values of `a2` keeping every cell nonnegative, or `None` if there are none.
fn feasible_segment(cells: &[Affine]) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &Affine(k, s) in cells {
        if s > 0.0 {
            lo = lo.max(-k / s);
        } else if s < 0.0 {
            hi = hi.min(k / -s);
        } else if k < -CELL_TOL {
            return None;
        }
    }
    (lo <= hi + CELL_TOL).then_some((lo, hi.max(lo)))
}

fn table_at(cells: &[Affine; 9], a2: f64) -> [f64; 9] {
    let mut out = [0.0; 9];
    for (o, &Affine(k, s)) in out.iter_mut().zip(cells) {
        // Snap float dust produced by the affine evaluation.
        *o = (k + s * a2).max(0.0);
    }
    out
}

fn validated(cells: [f64; 9], pop: &PopulationLimits) -> Option<JointProbTable> {
    let [a1, b1, c1, a2, b2, c2, a3, b3, c3] = cells;
    let total: f64 = cells.iter().sum();
    // Re-normalise the residual cell so the sum is exactly one after snapping.
    let c3 = c3 + (1.0 - total);
    let t = JointProbTable::new([a1, a2, a3], [b1, b2, b3], [c1, c2, c3]).ok()?;
    joint_table_constraints(&t, pop).then_some(t)
}

/// Range of `a2 + b2` attained by tables consistent with `pop`.
///
/// Free cells are `a1`, `c1`, `b3` and `a2`. `a1` runs over an equally spaced
/// grid on `[0, e-]` with spacing at most `grid_step`; `c1` and `b3` run over
/// eleven evenly spaced fractions of their remaining stratum mass. For each
/// grid point the set of admissible `a2` is a segment, found exactly from the
/// nine cell constraints; both segment ends are materialised as tables and
/// re-validated before they count.
pub fn attainable_range_a2b2(pop: &PopulationLimits, grid_step: f64) -> Result<Interval> {
    attainable_range_a2b2_with(pop, grid_step, Exec::default())
}

pub fn attainable_range_a2b2_with(
    pop: &PopulationLimits,
    grid_step: f64,
    exec: Exec,
) -> Result<Interval> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "grid_step must lie in (0, 0.1], got {grid_step}"
        )));
    }
    pop.check_feasible()?;

    const FRACTIONS: usize = 10;
    let &PopulationLimits {
        p_plus,
        p_minus,
        e_plus,
        e_minus,
    } = pop;
    let b2 = p_plus - p_minus;
    let n = (1.0 / grid_step).ceil() as usize;

    let per_a1 = |j: usize| -> Option<(f64, f64)> {
        let a1 = e_minus * j as f64 / n as f64;
        let mut best: Option<(f64, f64)> = None;
        for m in 0..=FRACTIONS {
            let c1 = (e_minus - a1) * m as f64 / FRACTIONS as f64;
            for l in 0..=FRACTIONS {
                let b3 = (1.0 - e_plus) * l as f64 / FRACTIONS as f64;
                let b1 = Affine(e_minus - a1 - c1, 0.0);
                let c2 = Affine(e_plus - e_minus - b2, -1.0);
                let a3 = Affine(1.0 - p_plus - a1 - b3, -1.0);
                let partial = [
                    Affine(a1, 0.0),
                    b1,
                    Affine(c1, 0.0),
                    Affine(0.0, 1.0),
                    Affine(b2, 0.0),
                    c2,
                    a3,
                    Affine(b3, 0.0),
                ];
                let k_sum: f64 = partial.iter().map(|c| c.0).sum();
                let s_sum: f64 = partial.iter().map(|c| c.1).sum();
                let c3 = Affine(1.0 - k_sum, -s_sum);
                let cells = [
                    partial[0], partial[1], partial[2], partial[3], partial[4], partial[5],
                    partial[6], partial[7], c3,
                ];
                let Some((lo, hi)) = feasible_segment(&cells) else {
                    continue;
                };
                for a2 in [lo, hi] {
                    if let Some(t) = validated(table_at(&cells, a2), pop) {
                        let v = t.complier_untreated_zero();
                        let r = best.get_or_insert((v, v));
                        r.0 = r.0.min(v);
                        r.1 = r.1.max(v);
                    }
                }
            }
        }
        best
    };

    exec.map_range(n + 1, per_a1)
        .into_iter()
        .flatten()
        .reduce(|x, y| (x.0.min(y.0), x.1.max(y.1)))
        .map(|(lo, hi)| Interval::new(lo, hi))
        .ok_or_else(|| Error::Infeasible("no admissible table found".into()))
}

/// Pair of joint limits observed when (Y, D, W) is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    /// `Pr(Y = 1, D = 1 | W = 0+)`
    pub p_y1d1_plus: f64,
    /// `Pr(Y = 1, D = 0 | W = 0-)`
    pub p_y1d0_minus: f64,
}

/// Sharp intervals for `Pr{Y(1)=1 | W=0}` and `Pr{Y(0)=1 | W=0}` with the
/// triplet observed: `[p+, P(Y=1,D=1|0+) + 1 - e+]` and `[P(Y=1,D=0|0-), p-]`.
pub fn lemma_full_bounds(joint: &JointLimits, pop: &PopulationLimits) -> Result<(Interval, Interval)> {
    let JointLimits {
        p_y1d1_plus,
        p_y1d0_minus,
    } = *joint;
    prob("p_y1d1_plus", p_y1d1_plus)?;
    prob("p_y1d0_minus", p_y1d0_minus)?;
    let tol = CONSTRAINT_TOL;
    let checks = [
        (p_y1d1_plus <= pop.p_plus + tol, "P(Y=1,D=1|0+) exceeds P(Y=1|0+)"),
        (p_y1d1_plus <= pop.e_plus + tol, "P(Y=1,D=1|0+) exceeds e+"),
        (pop.p_plus - p_y1d1_plus <= 1.0 - pop.e_plus + tol, "P(Y=1,D=0|0+) exceeds 1 - e+"),
        (p_y1d0_minus <= pop.p_minus + tol, "P(Y=1,D=0|0-) exceeds P(Y=1|0-)"),
        (p_y1d0_minus <= 1.0 - pop.e_minus + tol, "P(Y=1,D=0|0-) exceeds 1 - e-"),
        (pop.p_minus - p_y1d0_minus <= pop.e_minus + tol, "P(Y=1,D=1|0-) exceeds e-"),
    ];
    if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
        return Err(Error::IncoherentInputs((*msg).into()));
    }
    Ok((
        Interval::new(pop.p_plus, p_y1d1_plus + 1.0 - pop.e_plus),
        Interval::new(p_y1d0_minus, pop.p_minus),
    ))
}
