//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! The criteria pin the library's headline behaviors: the dyadic-shell
//! containment split, the planar counterexample (per-subsystem decay, union
//! failure, escaping selection), the adaptive-loop monitors, the subsystem
//! containment property on random families, the union-hull derivative
//! identity, the Carathéodory guarantee, and the derivative calculus
//! cross-checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use inclusion_lab::fields::{
    assemble_switched, containment_check, filippov_estimate, krasovskii_estimate, FieldFamily,
    IndexUniverse, PiecewiseField, Regularization, SmoothField, SwitchingSignal,
};
use inclusion_lab::hull::{self, hausdorff, Polytope};
use inclusion_lab::lyap::{
    self, certify, gen_deriv_lower, gen_deriv_reduced, gen_deriv_upper, grid_points, Mode,
    ReducedDerivative,
};
use inclusion_lab::nonsmooth::{max_abs_candidate, LyapunovCandidate};
use inclusion_lab::rng::Rng;
use inclusion_lab::sim::{integrate, monitor, scenario, Method, ScenarioParams};

fn quadratic_candidate(dim: usize) -> LyapunovCandidate {
    LyapunovCandidate::smooth(
        dim,
        |x: &[f64], _| 0.5 * x.iter().map(|c| c * c).sum::<f64>(),
        |x: &[f64], _| {
            let mut g = x.to_vec();
            g.push(0.0);
            g
        },
        |x: &[f64]| 0.5 * x.iter().map(|c| c * c).sum::<f64>(),
        |x: &[f64]| 0.5 * x.iter().map(|c| c * c).sum::<f64>(),
        |_: &[f64]| 0.0,
    )
    .unwrap()
}

#[test]
fn criterion_1_dyadic_regularization_split() {
    let s = scenario("sec4_example", &ScenarioParams::new()).unwrap();
    let assembled = assemble_switched(&s.family, &s.rho).unwrap();

    let k = krasovskii_estimate(&assembled, &[0.0], 0.0, 1e-3, 500, 0).unwrap();
    let unit = Polytope::new(1, vec![vec![0.0], vec![1.0]]).unwrap();
    let h = hausdorff(&k, &unit).unwrap();
    assert!(h <= 0.05, "Krasovskii hull off [0,1] by {h}");

    let f = filippov_estimate(&assembled, &[0.0], 0.0, 1e-3, 500, 0).unwrap();
    assert!(
        f.vertices().iter().all(|v| v[0] == 1.0),
        "Filippov hull is not exactly the unit singleton: {:?}",
        f.vertices()
    );

    // Subsystems whose inner shell is wider than the sampling radius
    // evaluate to zero on the whole ball.
    for sigma in 1..=9 {
        let sub = s.family.subfield(sigma).unwrap();
        let est = krasovskii_estimate(&sub, &[0.0], 0.0, 1e-3, 500, 0).unwrap();
        assert_eq!(
            est.diameter(),
            0.0,
            "subsystem {sigma} estimate not a point"
        );
        assert_eq!(
            est.vertices()[0],
            vec![0.0],
            "subsystem {sigma} estimate not zero"
        );
    }

    let report = containment_check(
        &s.family,
        &s.rho,
        &[0.0],
        0.0,
        1e-3,
        500,
        1e-6,
        0,
        Regularization::Krasovskii,
    )
    .unwrap();
    assert!(
        !report.holds,
        "containment unexpectedly holds at the origin"
    );
    assert!(
        (0.9..=1.1).contains(&report.inflation_needed),
        "inflation {} outside [0.9, 1.1]",
        report.inflation_needed
    );

    println!(
        "criterion 1: dyadic split (Krasovskii [0,1], Filippov {{1}}, subsystems {{0}}, \
         containment fails with inflation {:.3}) .. pass",
        report.inflation_needed
    );
}

#[test]
fn criterion_2_planar_counterexample() {
    let s = scenario("sec7_counterexample", &ScenarioParams::new()).unwrap();
    let grid = grid_points(&[(-2.0, 2.0, 21), (-2.0, 2.0, 21)], 0.0);

    // (a) Per-subsystem certification in the min-max sense with zero decay.
    let report = certify(&s.candidate, &s.inclusion_maps, &grid, Mode::Lower, 1e-9, 0).unwrap();
    for sub in &report.subsystems {
        assert!(
            sub.passed(),
            "{} failed with worst margin {} at {:?}",
            sub.name,
            sub.worst_margin,
            sub.worst_x
        );
        assert!(
            sub.worst_margin >= -1e-9,
            "{} margin {}",
            sub.name,
            sub.worst_margin
        );
    }

    // (b) The union hull fails exactly on the punctured diagonals, with
    // violation value half the candidate value.
    let diagonal: Vec<&(Vec<f64>, f64)> = grid
        .iter()
        .filter(|(x, _)| (x[0].abs() - x[1].abs()).abs() <= 1e-12 && x[0].abs() > 0.0)
        .collect();
    assert_eq!(report.union.failures, diagonal.len(), "union failure count");
    for failure in report.failures.iter().filter(|f| f.subsystem == "union") {
        let expected = 0.5 * failure.x[0].abs();
        assert!(
            (failure.value - expected).abs() <= 1e-9,
            "violation value {} vs 0.5 V = {expected} at {:?}",
            failure.value,
            failure.x
        );
    }

    // (c) The escaping selection q = x / 2 from the diagonal corner.
    let traj = integrate(
        &s.sim_field,
        &s.rule,
        &[1.0, 1.0],
        0.0,
        1.0,
        1e-3,
        Method::Rk4,
    )
    .unwrap();
    let x_end = traj.states.last().unwrap();
    let scale = 0.5f64.exp();
    let err = ((x_end[0] - scale).powi(2) + (x_end[1] - scale).powi(2)).sqrt();
    assert!(err <= 1e-3 * scale, "endpoint error {err}");

    println!(
        "criterion 2: planar counterexample (subsystems pass, union fails on {} diagonal \
         points at 0.5 V, escaping run endpoint error {:.2e}) .. pass",
        diagonal.len(),
        err
    );
}

/// Shared monitor checks for the adaptive-loop criteria.
fn adaptive_loop_checks(name: &str) -> (f64, f64) {
    let s = scenario(name, &ScenarioParams::new()).unwrap();

    let mut traj = integrate(&s.sim_field, &s.rule, &s.x0, s.t0, 20.0, 1e-3, Method::Rk4).unwrap();
    let report = monitor(&mut traj, &s.candidate).unwrap();
    assert!(
        report.max_uptick <= 1e-4,
        "{name}: candidate uptick {} exceeds 1e-4",
        report.max_uptick
    );
    assert!(
        report.w_integral <= report.v_initial + 1e-3,
        "{name}: decay integral {} exceeds V(0) = {}",
        report.w_integral,
        report.v_initial
    );
    let x_end = traj.states.last().unwrap()[0].abs();
    assert!(x_end <= 1e-2, "{name}: |x(20)| = {x_end}");

    // Tail decay across growing horizons.
    let mut tails = Vec::new();
    for t_final in [10.0, 20.0, 40.0] {
        let mut tr = integrate(
            &s.sim_field,
            &s.rule,
            &s.x0,
            s.t0,
            t_final,
            1e-3,
            Method::Rk4,
        )
        .unwrap();
        let rep = monitor(&mut tr, &s.candidate).unwrap();
        tails.push(rep.w_tail);
    }
    assert!(
        tails[0] >= tails[1] && tails[1] >= tails[2],
        "{name}: tails not decreasing {tails:?}"
    );
    assert!(
        tails[2] <= 0.25 * tails[0],
        "{name}: tail at T=40 ({}) exceeds a quarter of tail at T=10 ({})",
        tails[2],
        tails[0]
    );

    // Cross-validation: halving the step leaves shared samples within 1e-3.
    let fine = integrate(&s.sim_field, &s.rule, &s.x0, s.t0, 20.0, 5e-4, Method::Rk4).unwrap();
    let mut worst = 0.0f64;
    for k in 0..traj.states.len() {
        let fk = 2 * k;
        if fk >= fine.states.len() {
            break;
        }
        let d: f64 = traj.states[k]
            .iter()
            .zip(&fine.states[fk])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(d);
    }
    assert!(worst <= 1e-3, "{name}: dt-halving disagreement {worst}");

    (x_end, worst)
}

#[test]
fn criterion_3_adaptive_regulation_monitors() {
    let (x_end, cross) = adaptive_loop_checks("sec8_example1");
    println!(
        "criterion 3: adaptive loop (|x(20)| = {x_end:.2e}, dt-halving agreement {cross:.2e}) .. pass"
    );
}

#[test]
fn criterion_4_switched_adaptive_monitors() {
    let (x_end, cross) = adaptive_loop_checks("sec8_example2");
    println!(
        "criterion 4: switched adaptive loop (|x(20)| = {x_end:.2e}, dt-halving agreement \
         {cross:.2e}) .. pass"
    );
}

/// Random planar family: up to four polynomial subsystems switched by
/// angular (polygonal) sectors, which are locally finite by construction.
fn random_family(rng: &mut Rng) -> (FieldFamily, SwitchingSignal) {
    let n_subs = 1 + (rng.next_u64() % 4) as usize;
    let mut map = BTreeMap::new();
    for sigma in 1..=n_subs {
        let c: Vec<f64> = (0..12).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let field = SmoothField::new(2, move |x: &[f64], _| {
            vec![
                c[0] + c[1] * x[0]
                    + c[2] * x[1]
                    + c[3] * x[0] * x[0]
                    + c[4] * x[0] * x[1]
                    + c[5] * x[1] * x[1],
                c[6] + c[7] * x[0]
                    + c[8] * x[1]
                    + c[9] * x[0] * x[0]
                    + c[10] * x[0] * x[1]
                    + c[11] * x[1] * x[1],
            ]
        });
        map.insert(sigma, Arc::new(PiecewiseField::single(field)));
    }
    let family = FieldFamily::finite(map).unwrap();

    let mut cuts: Vec<f64> = (0..n_subs)
        .map(|_| rng.uniform() * std::f64::consts::TAU)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rho = SwitchingSignal::new(
        move |x: &[f64], _| {
            let mut a = x[1].atan2(x[0]);
            if a < 0.0 {
                a += std::f64::consts::TAU;
            }
            let idx = cuts.iter().filter(|&&c| c <= a).count() % n_subs;
            idx + 1
        },
        IndexUniverse::Finite((1..=n_subs).collect()),
    );
    (family, rho)
}

#[test]
fn criterion_5_containment_on_random_families() {
    let mut rng = Rng::new(2024);
    let mut passes = 0usize;
    let mut total = 0usize;
    for family_idx in 0..20 {
        let (family, rho) = random_family(&mut rng);
        for point_idx in 0..100 {
            let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
            let report = containment_check(
                &family,
                &rho,
                &x,
                0.0,
                1e-3,
                500,
                1e-4,
                family_idx * 100 + point_idx,
                Regularization::Krasovskii,
            )
            .unwrap();
            total += 1;
            if report.holds && report.inflation_needed <= 1e-4 {
                passes += 1;
            }
        }
    }
    let rate = passes as f64 / total as f64;
    assert!(
        rate >= 0.99,
        "containment pass rate {rate} below 99% ({passes}/{total})"
    );

    // Spot checks with heavy sampling must all pass.
    let (family, rho) = random_family(&mut rng);
    for i in 0..10 {
        let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
        let report = containment_check(
            &family,
            &rho,
            &x,
            0.0,
            1e-3,
            10_000,
            1e-4,
            9000 + i,
            Regularization::Krasovskii,
        )
        .unwrap();
        assert!(
            report.holds && report.inflation_needed <= 1e-4,
            "spot check failed at {x:?}: inflation {}",
            report.inflation_needed
        );
    }

    println!(
        "criterion 5: subsystem containment on random families ({passes}/{total} within 1e-4, \
         10/10 spot checks) .. pass"
    );
}

#[test]
fn criterion_6_union_hull_derivative_identity() {
    let mut rng = Rng::new(606);
    let vmax = max_abs_candidate();
    let vquad = quadratic_candidate(2);
    for case in 0..200 {
        let candidate = if case % 2 == 0 { &vmax } else { &vquad };
        let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
        let n_subs = 1 + (rng.next_u64() % 4) as usize;
        let mut parts = Vec::new();
        for _ in 0..n_subs {
            let nq = 1 + (rng.next_u64() % 4) as usize;
            let verts: Vec<Vec<f64>> = (0..nq)
                .map(|_| vec![4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0])
                .collect();
            parts.push(Polytope::new(2, verts).unwrap());
        }
        let union = hull::union_hull(&parts).unwrap();
        let union_upper = gen_deriv_upper(candidate, &union, &x, 0.0).unwrap().upper;
        let max_upper = parts
            .iter()
            .map(|p| gen_deriv_upper(candidate, p, &x, 0.0).unwrap().upper)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            (union_upper - max_upper).abs() <= 1e-9,
            "case {case}: union {union_upper} vs max {max_upper}"
        );
        // A common decay bound on the subsystems is preserved by the union.
        let bound = max_upper;
        assert!(union_upper <= bound + 1e-9);
    }
    println!("criterion 6: union-hull upper derivative equals the subsystem maximum .. pass");
}

#[test]
fn criterion_7_caratheodory_reduction() {
    let mut rng = Rng::new(707);
    for case in 0..200 {
        let dim = 1 + (rng.next_u64() % 5) as usize;
        let n = dim + 2 + (rng.next_u64() % 10) as usize;
        let vertices: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| 4.0 * rng.uniform() - 2.0).collect())
            .collect();
        let mut w: Vec<f64> = (0..n).map(|_| rng.uniform() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        for wi in w.iter_mut() {
            *wi /= total;
        }
        let mut q = vec![0.0; dim];
        for (i, wi) in w.iter().enumerate() {
            for (qc, vc) in q.iter_mut().zip(&vertices[i]) {
                *qc += wi * vc;
            }
        }
        let p = Polytope::new(dim, vertices).unwrap();
        let cw = hull::caratheodory_reduce(&p, &q).unwrap();
        assert!(
            cw.len() <= dim + 1,
            "case {case}: {} weights for dim {dim}",
            cw.len()
        );
        assert!(cw.weights.iter().all(|x| *x >= -1e-12));
        let sum: f64 = cw.weights.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        let rec = cw.reconstruct(p.vertices());
        let err: f64 = rec
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-9, "case {case}: reconstruction error {err}");
    }
    println!("criterion 7: Caratheodory reduction (200 random instances, dim <= 5) .. pass");
}

#[test]
fn criterion_8_derivative_calculus() {
    // Smooth candidate against singleton inclusions: both bounds match the
    // finite difference of tau -> V(x + tau q, t + tau).
    let v3 = quadratic_candidate(3);
    let mut rng = Rng::new(808);
    for _ in 0..100 {
        let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let q: Vec<f64> = (0..3).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let t = rng.uniform();
        let f = Polytope::singleton(q.clone()).unwrap();
        let s = gen_deriv_upper(&v3, &f, &x, t).unwrap();
        let h = 1e-6;
        let shift = |tau: f64| {
            let xs: Vec<f64> = x.iter().zip(&q).map(|(a, b)| a + tau * b).collect();
            v3.value(&xs, t + tau).unwrap()
        };
        let fd = (shift(h) - shift(-h)) / (2.0 * h);
        assert!(
            (fd - s.upper).abs() <= 1e-5 * fd.abs().max(1.0),
            "finite difference {fd} vs upper {}",
            s.upper
        );
        assert!((s.upper - s.lower).abs() <= 1e-9);
    }

    // lower <= upper and reduced <= lower across random planar inclusions.
    let vmax = max_abs_candidate();
    for _ in 0..200 {
        let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
        let nq = 1 + (rng.next_u64() % 5) as usize;
        let verts: Vec<Vec<f64>> = (0..nq)
            .map(|_| vec![4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0])
            .collect();
        let f = Polytope::new(2, verts).unwrap();
        let s = gen_deriv_lower(&vmax, &f, &x, 0.0).unwrap();
        assert!(s.lower <= s.upper + 1e-12);
        if let ReducedDerivative::Value(val) =
            gen_deriv_reduced(&vmax, &[&vmax], &f, &x, 0.0, 1e-9).unwrap()
        {
            assert!(val <= s.lower + 1e-9, "reduced {val} vs lower {}", s.lower);
        }
    }

    // The planar counterexample's reduced derivative on the diagonal is the
    // pure contraction -V(x).
    let f1 = Polytope::new(2, vec![vec![1.0, 0.0], vec![-1.0, -1.0]]).unwrap();
    match gen_deriv_reduced(&vmax, &[&vmax], &f1, &[1.0, 1.0], 0.0, 1e-9).unwrap() {
        ReducedDerivative::Value(val) => {
            assert!((val - (-1.0)).abs() <= 1e-9, "reduced value {val}")
        }
        other => panic!("expected a value, got {other:?}"),
    }

    // Certify wiring: reduced mode accepts the subsystems on a small grid.
    let s7 = scenario("sec7_counterexample", &ScenarioParams::new()).unwrap();
    let grid = lyap::grid_points(&[(-2.0, 2.0, 5), (-2.0, 2.0, 5)], 0.0);
    let report = certify(
        &s7.candidate,
        &s7.inclusion_maps,
        &grid,
        Mode::Reduced,
        1e-9,
        0,
    )
    .unwrap();
    for sub in &report.subsystems {
        assert!(sub.passed(), "{} fails in reduced mode", sub.name);
    }

    println!("criterion 8: derivative calculus cross-checks .. pass");
}
