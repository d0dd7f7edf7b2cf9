//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdpersuasion::estimands::{
    dk_rate, theta_cl_star, theta_cl_star_star, theta_rd, theta_rd_fit, theta_rd_se,
    theta_rd_upper_e, theta_rd_upper_from_joint_fits, theta_rd_upper_full,
};
use rdpersuasion::inference::{
    decision_flow, norm_quantile, stoye_critical_value, CiKind, Estimand, IdentifiedSet, Target,
};
use rdpersuasion::locpoly::{fit_boundary, FitSpec, KernelKind, Variant, VarianceKind};
use rdpersuasion::oracle::{
    attainable_range_a2b2, closed_form_a2b2, frechet_theta_bounds,
    frechet_theta_bounds_bruteforce, sharp_range_a2b2, PopulationLimits,
};
use rdpersuasion::sample::validate_sample;
use rdpersuasion::sim::{gen_fuzzy, gen_sharp, mc_study, Dgp, FuzzyDgp, McConfig, Polynomial, SharpDgp};
use rdpersuasion::{DataScenario, DesignKind, Error, ExposureLimits, Observation, Side};

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn criterion_1() -> Outcome {
    let rows = [
        ((0.2352, 0.1837, 0.0348, 0.0259), (0.0631, 0.0519)),
        ((0.2956, 0.1779, 0.0464, 0.0371), (0.1432, 0.0684)),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for ((mp, mm, sp, sm), (t, s)) in rows {
        let th = theta_rd(mp, mm, 0.01).unwrap();
        let se = theta_rd_se(mp, mm, sp, sm, 0.01).unwrap();
        pass &= within(th, t, 1e-4) && within(se, s, 1e-4);
        detail.push(format!("theta {th:.4} se {se:.4}"));
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_2() -> Outcome {
    let e = ExposureLimits::new(1.0, 0.4).unwrap();
    let (pp, pm) = (0.516, 0.46);
    let got = [
        theta_rd(pp, pm, 0.01).unwrap(),
        theta_rd_upper_e(pp, pm, &e, 0.01).unwrap(),
        theta_cl_star_star(pp, pm, &e, 0.01).unwrap(),
        dk_rate(pp, pm, &e, 0.01).unwrap(),
    ];
    let want = [0.1037, 0.4851, 0.1037, 0.1728];
    Outcome {
        pass: got.iter().zip(want).all(|(g, w)| within(*g, w, 1e-4)),
        detail: format!(
            "theta_rd {:.4}, theta_rd_upper_e {:.4}, theta_cl_star_star {:.4}, dk_rate {:.4}",
            got[0], got[1], got[2], got[3]
        ),
    }
}

fn random_pop(rng: &mut ChaCha8Rng) -> PopulationLimits {
    let p_minus: f64 = rng.random_range(0.0..0.95);
    let e_minus: f64 = rng.random_range(0.0..0.9);
    let e_plus = e_minus + rng.random_range(0.05..=1.0) * (1.0 - e_minus);
    let jump = rng.random_range(0.0..=1.0) * (e_plus - e_minus).min(1.0 - p_minus);
    PopulationLimits::new(p_minus + jump, p_minus, e_plus, e_minus).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pops: Vec<_> = (0..200).map(|_| random_pop(&mut rng)).collect();
    let mut agree_closed = 0;
    let mut agree_sharp = 0;
    let mut top_cell_binds = 0;
    let mut worst: Option<(PopulationLimits, f64)> = None;
    for pop in &pops {
        let got = attainable_range_a2b2(pop, 1e-3).unwrap();
        let closed = closed_form_a2b2(pop).unwrap();
        if got.approx_eq(&closed, 1e-3) {
            agree_closed += 1;
        } else {
            let gap = (got.lo - closed.lo).abs().max((got.hi - closed.hi).abs());
            if worst.is_none_or(|(_, g)| gap > g) {
                worst = Some((*pop, gap));
            }
        }
        if got.approx_eq(&sharp_range_a2b2(pop).unwrap(), 1e-3) {
            agree_sharp += 1;
        }
        if pop.p_plus < pop.e_plus - pop.e_minus {
            top_cell_binds += 1;
        }
    }
    let mut detail = format!(
        "enumeration matches [p+ - p-, min(e+ - e-, 1 - p-)] for {agree_closed}/200 draws; \
         matches the range with c3 >= 0 imposed for {agree_sharp}/200; \
         {top_cell_binds}/200 draws have p+ < e+ - e-"
    );
    if let Some((p, gap)) = worst {
        detail += &format!(
            "; largest gap {gap:.4} at (p+, p-, e+, e-) = ({:.4}, {:.4}, {:.4}, {:.4})",
            p.p_plus, p.p_minus, p.e_plus, p.e_minus
        );
    }
    Outcome {
        pass: agree_closed == 200,
        detail,
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = 0;
    for _ in 0..200 {
        let p1 = rng.random_range(0.0..=1.0);
        let p0 = rng.random_range(0.0..0.99);
        let brute = frechet_theta_bounds_bruteforce(p1, p0, 1e-3).unwrap();
        if brute.approx_eq(&frechet_theta_bounds(p1, p0).unwrap(), 1e-3) {
            ok += 1;
        }
    }
    Outcome {
        pass: ok == 200,
        detail: format!("{ok}/200 pairs agree within 1e-3"),
    }
}

fn criterion_5() -> Outcome {
    let spec = FitSpec::local_linear(0.2).unwrap();
    let c = Polynomial::constant;

    let sharp: Dgp = SharpDgp::new(c(0.4), c(0.25)).unwrap().into();
    let r = mc_study(&sharp, &McConfig::new(50_000, 200, spec, 0.05, 55)).unwrap();
    let mean_sharp = r.estimands[0].mean;
    let sharp_ok = within(mean_sharp, 0.25, 0.01) && (0.90..=0.99).contains(&r.coverage);

    let fuzzy: Dgp = FuzzyDgp::new(c(0.4), c(0.25), c(0.9), c(0.3)).unwrap().into();
    let mut cfg = McConfig::new(50_000, 200, spec, 0.05, 56);
    cfg.target = Target::LocalCompliers;
    let rc = mc_study(&fuzzy, &cfg).unwrap();
    let mean_cl = rc.estimands[0].mean;
    let cl_ok = within(mean_cl, 0.25, 0.01);

    cfg.target = Target::Population;
    let rp = mc_study(&fuzzy, &cfg).unwrap();
    let containment = rp.containment.unwrap_or(0.0);
    let contain_ok = containment >= 0.90;

    Outcome {
        pass: sharp_ok && cl_ok && contain_ok,
        detail: format!(
            "sharp mean {mean_sharp:.4}, coverage {:.3}; fuzzy complier mean {mean_cl:.4}; \
             [theta_rd, theta_rd_upper] contains 0.25 in {:.1}% of replications",
            r.coverage,
            100.0 * containment
        ),
    }
}

fn criterion_6() -> Outcome {
    let alpha = 0.05;
    let z2 = norm_quantile(1.0 - alpha / 2.0).unwrap();
    let z1 = norm_quantile(1.0 - alpha).unwrap();
    let s = 0.04;
    let c0 = stoye_critical_value(s, s, 0.0, alpha).unwrap();
    let cinf = stoye_critical_value(s, s, 1e6 * s, alpha).unwrap();
    let grid: Vec<f64> = (0..100)
        .map(|i| stoye_critical_value(s, 0.7 * s, 5.0 * s * i as f64 / 99.0, alpha).unwrap())
        .collect();
    let monotone = grid.windows(2).all(|w| w[1] <= w[0] + 1e-8);
    Outcome {
        pass: within(c0, z2, 1e-5) && within(cinf, z1, 1e-4) && monotone,
        detail: format!("c(0) = {c0:.6}, c(huge) = {cinf:.6}, nonincreasing on grid: {monotone}"),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut exact = true;
    let mut local = true;
    let mut affine = true;
    for trial in 0..30 {
        let n = 400;
        let ws: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let obs = ws.iter().map(|&w| Observation::new(0.0, None, w)).collect();
        let Ok(sample) = validate_sample(obs, 0.0, DataScenario::OutcomeOnly) else {
            continue;
        };
        let order = trial % 4;
        let kernel = [KernelKind::Triangular, KernelKind::Uniform, KernelKind::Epanechnikov][trial % 3];
        let h = rng.random_range(0.3..1.2);
        let spec = FitSpec::new(order, h, kernel, VarianceKind::HeteroskedasticityRobust).unwrap();
        let coefs: Vec<f64> = (0..=order).map(|_| rng.random_range(-2.0..2.0)).collect();
        let poly: Vec<f64> = ws.iter().map(|&w| coefs.iter().rev().fold(0.0, |a, &c| a * w + c)).collect();
        let noisy: Vec<f64> = poly.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
        let mut moved = noisy.clone();
        for (m, w) in moved.iter_mut().zip(&ws) {
            if w.abs() > h {
                *m += rng.random_range(-10.0..10.0);
            }
        }
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mapped: Vec<f64> = noisy.iter().map(|v| a + b * v).collect();
        for side in [Side::Left, Side::Right] {
            let e = fit_boundary(&sample, &poly, side, &spec).unwrap();
            exact &= within(e.mu_hat, coefs[0], 1e-8) && e.se <= 1e-8;
            let base = fit_boundary(&sample, &noisy, side, &spec).unwrap();
            let far = fit_boundary(&sample, &moved, side, &spec).unwrap();
            local &= base.mu_hat.to_bits() == far.mu_hat.to_bits() && base.se.to_bits() == far.se.to_bits();
            let t = fit_boundary(&sample, &mapped, side, &spec).unwrap();
            affine &= within(t.mu_hat, a + b * base.mu_hat, 1e-12 * 10.0 * (1.0 + a.abs() + b.abs()))
                && within(t.se, b.abs() * base.se, 1e-12 * 10.0 * (1.0 + b.abs()));
        }
    }
    Outcome {
        pass: exact && local && affine,
        detail: format!("exact reproduction {exact}, weight locality {local}, affine equivariance {affine}"),
    }
}

fn criterion_8() -> Outcome {
    let c = Polynomial::constant;
    let fz = FuzzyDgp::new(Polynomial::new(vec![0.35, 0.1]), c(0.3), c(0.8), c(0.2)).unwrap();
    let fuzzy = gen_fuzzy(&fz, 20_000, 8).unwrap();
    let sharp = gen_sharp(&SharpDgp::new(Polynomial::new(vec![0.35, 0.1]), c(0.3)).unwrap(), 20_000, 8).unwrap();
    let mut worst_transform = 0.0f64;
    let mut worst_wald = 0.0f64;
    for (order, h, variant) in [
        (1, 0.2, Variant::Conventional),
        (1, 0.35, Variant::BiasCorrected),
        (2, 0.5, Variant::Conventional),
    ] {
        let spec = FitSpec::new(order, h, KernelKind::Triangular, VarianceKind::HeteroskedasticityRobust).unwrap();
        let via_transform = theta_rd_upper_full(&fuzzy, &spec, variant, 0.01).unwrap().point.theta;
        let via_joint = theta_rd_upper_from_joint_fits(&fuzzy, &spec, variant, 0.01).unwrap();
        worst_transform = worst_transform.max((via_transform - via_joint).abs());
        let wald = theta_cl_star(&sharp, &spec, variant, 0.01).unwrap().point.theta;
        let rd = theta_rd_fit(&sharp, &spec, variant, 0.01).unwrap().point.theta;
        worst_wald = worst_wald.max((wald - rd).abs());
    }
    Outcome {
        pass: worst_transform <= 1e-12 && worst_wald <= 1e-12,
        detail: format!(
            "max |transformed - joint-cell| = {worst_transform:.2e}; max |Wald - theta_rd| on sharp data = {worst_wald:.2e}"
        ),
    }
}

type Expected = Option<(IdentifiedSet, CiKind)>;

fn flow_truth(design: DesignKind, mtr: bool, scenario: DataScenario, target: Target) -> Expected {
    use DataScenario::*;
    use Estimand::*;
    let lower = |e| IdentifiedSet::LowerBound { lower: e };
    let point = |e| IdentifiedSet::Point { estimand: e };
    let interval = |l, u| IdentifiedSet::Interval { lower: l, upper: u };
    let one = CiKind::OneSidedLower;
    match (design, mtr, scenario, target) {
        (DesignKind::Sharp, _, _, Target::LocalCompliers) => None,
        (DesignKind::Sharp, _, AggregateWithExposure | OutcomeOnly, _) => None,
        (DesignKind::Sharp, false, FullTriplet, Target::Population) => Some((lower(ThetaRd), one)),
        (DesignKind::Sharp, true, FullTriplet, Target::Population) => Some((point(ThetaRd), CiKind::TwoSided)),
        (DesignKind::Fuzzy, false, _, _) => Some((lower(ThetaRd), one)),
        (DesignKind::Fuzzy, true, FullTriplet, Target::Population) => {
            Some((interval(ThetaRd, ThetaRdUpper), CiKind::Stoye))
        }
        (DesignKind::Fuzzy, true, AggregateWithExposure, Target::Population) => {
            Some((interval(ThetaRd, ThetaRdUpperE), CiKind::Stoye))
        }
        (DesignKind::Fuzzy, true, OutcomeOnly, _) => Some((lower(ThetaRd), one)),
        (DesignKind::Fuzzy, true, FullTriplet, Target::LocalCompliers) => {
            Some((point(ThetaClStar), CiKind::TwoSided))
        }
        (DesignKind::Fuzzy, true, AggregateWithExposure, Target::LocalCompliers) => {
            Some((lower(ThetaClStarStar), one))
        }
    }
}

fn criterion_9() -> Outcome {
    let mut checked = 0;
    let mut matched = 0;
    for design in [DesignKind::Sharp, DesignKind::Fuzzy] {
        for mtr in [false, true] {
            for scenario in DataScenario::ALL {
                for target in [Target::Population, Target::LocalCompliers] {
                    checked += 1;
                    let got = decision_flow(design, mtr, scenario, target);
                    let ok = match (flow_truth(design, mtr, scenario, target), got) {
                        (None, Err(Error::IncoherentPlan(_))) => true,
                        (Some((set, kind)), Ok(plan)) => plan.identified == set && plan.ci_kind == kind,
                        _ => false,
                    };
                    matched += usize::from(ok);
                }
            }
        }
    }
    Outcome {
        pass: checked == 24 && matched == 24,
        detail: format!("{matched}/{checked} combinations match the truth table"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("published estimate arithmetic replication", criterion_1),
        ("worked example with exposure limits", criterion_2),
        ("sharpness of the closed-form a2 + b2 interval", criterion_3),
        ("Frechet oracle equivalence", criterion_4),
        ("estimator consistency and coverage", criterion_5),
        ("Stoye critical value properties", criterion_6),
        ("local polynomial exactness, locality, equivariance", criterion_7),
        ("transformed-outcome and pseudo-treatment identities", criterion_8),
        ("decision flow totality", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!out.pass);
        println!(
            "criterion {} {verdict}: {name} ({:.1}s) - {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
