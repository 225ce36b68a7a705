//! The five subcommands: simulate, certify, contain, probe, repro.
//!
//! Exit-code convention: 0 when the run succeeds and the analysis passes,
//! 1 when the analysis itself says no (failed certification, failed
//! containment, finite escape, flagged switching signal), 2 when the tool
//! or its configuration is broken.

use std::io::Write;
use std::time::Instant;

use inclusion_lab::fields::{
    assemble_switched, assumption_probe, containment_check, filippov_estimate, krasovskii_estimate,
    regularization_diagnostic, Regularization, DEFAULT_INDEX_CAP,
};
use inclusion_lab::hull::{hausdorff, Polytope};
use inclusion_lab::lyap::{certify, grid_points, CertificationReport, Mode};
use inclusion_lab::parallel;
use inclusion_lab::sim::{integrate, monitor, scenario, Method, Scenario, SimError, Trajectory};

use crate::config::{threads_from_env, RunConfig};
use crate::output::{summary_json, write_csv, write_summary, Verdict};

pub enum CommandError {
    Usage(String),
    Tool(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        2
    }

    pub fn message(&self) -> &str {
        match self {
            CommandError::Usage(m) | CommandError::Tool(m) => m,
        }
    }
}

fn tool<E: std::fmt::Display>(e: E) -> CommandError {
    CommandError::Tool(e.to_string())
}

fn build_scenario(cfg: &RunConfig) -> Result<Scenario, CommandError> {
    let name = cfg
        .scenario
        .as_deref()
        .ok_or_else(|| CommandError::Usage("missing --scenario NAME".into()))?;
    scenario(name, &cfg.params).map_err(|e| match e {
        SimError::UnknownScenario { .. } | SimError::InvalidParameter(_) => {
            CommandError::Usage(e.to_string())
        }
        other => CommandError::Tool(other.to_string()),
    })
}

fn print_notes(s: &Scenario) {
    for note in &s.notes {
        eprintln!("note: {note}");
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<i32, CommandError> {
    let start = Instant::now();
    let s = build_scenario(cfg)?;
    print_notes(&s);
    let dt = cfg.dt.unwrap_or(s.dt);
    let t_final = cfg.tfinal.unwrap_or(s.t_final);

    let outcome = integrate(&s.sim_field, &s.rule, &s.x0, s.t0, t_final, dt, Method::Rk4);
    let (mut traj, failure): (Trajectory, Option<String>) = match outcome {
        Ok(t) => (t, None),
        Err(SimError::FiniteEscape { t, partial }) => (
            *partial,
            Some(format!("finite escape suspected at t = {t}")),
        ),
        Err(
            e @ (SimError::DegenerateSliding { .. } | SimError::SelectionOutsideInclusion { .. }),
        ) => {
            eprintln!("analysis failure: {e}");
            return Ok(1);
        }
        Err(e @ (SimError::InvalidParameter(_) | SimError::UnknownScenario { .. })) => {
            return Err(CommandError::Usage(e.to_string()));
        }
        Err(e) => return Err(tool(e)),
    };

    let report = if traj.states.is_empty() {
        None
    } else {
        Some(monitor(&mut traj, &s.candidate).map_err(tool)?)
    };

    match &cfg.out {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(tool)?;
            write_csv(&mut file, &traj).map_err(tool)?;
            file.flush().map_err(tool)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, &traj).map_err(tool)?;
        }
    }

    let mut verdicts = Vec::new();
    if let Some(msg) = &failure {
        verdicts.push(Verdict::new("integration", false, msg.clone()));
    } else {
        verdicts.push(Verdict::new(
            "integration",
            true,
            format!("{} samples, {} events", traj.times.len(), traj.events.len()),
        ));
    }
    let mut worst_margin = None;
    if let Some(r) = &report {
        verdicts.push(Verdict::new(
            "candidate_nonincreasing",
            r.nonincreasing,
            format!(
                "max uptick {:.3e} (tolerance {:.3e})",
                r.max_uptick, r.tol_up
            ),
        ));
        verdicts.push(Verdict::new(
            "decay_tail",
            true,
            format!("integral {:.6e}, tail {:.3e}", r.w_integral, r.w_tail),
        ));
        worst_margin = Some(r.tol_up - r.max_uptick);
    }
    let summary = summary_json(
        s.name,
        &s.resolved,
        &verdicts,
        worst_margin,
        start.elapsed().as_secs_f64(),
    );
    if cfg.out.is_some() {
        write_summary(None, &summary).map_err(tool)?;
    } else {
        eprintln!("{summary}");
    }

    if let Some(msg) = failure {
        eprintln!("analysis failure: {msg}");
        return Ok(1);
    }
    Ok(0)
}

fn print_certification(report: &CertificationReport) {
    println!(
        "certification ({} mode, tolerance {:.1e}, {} grid points) — {}",
        report.mode,
        report.tol,
        report.grid_len,
        CertificationReport::EMPIRICAL_NOTE
    );
    if report.regular_warning {
        eprintln!(
            "warning: lower mode with a non-regular candidate; the relaxation is not justified"
        );
    }
    for v in report
        .subsystems
        .iter()
        .chain(std::iter::once(&report.union))
    {
        println!(
            "  {:<10} {}  ({} pass / {} fail, worst margin {:.3e} at x = {:?})",
            v.name,
            if v.passed() { "pass" } else { "FAIL" },
            v.passes,
            v.failures,
            v.worst_margin,
            v.worst_x,
        );
    }
}

pub fn run_certify(cfg: &RunConfig) -> Result<i32, CommandError> {
    let start = Instant::now();
    let s = build_scenario(cfg)?;
    print_notes(&s);
    let mode = cfg.certify_mode().map_err(|e| CommandError::Usage(e.0))?;
    let tol = cfg.tol.unwrap_or(1e-9);
    let axes = cfg.grid.clone().unwrap_or_else(|| s.grid_axes.clone());
    let grid = grid_points(&axes, s.t0);

    let report = certify(
        &s.candidate,
        &s.inclusion_maps,
        &grid,
        mode,
        tol,
        threads_from_env(),
    )
    .map_err(tool)?;
    print_certification(&report);

    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut worst = f64::INFINITY;
    for v in report
        .subsystems
        .iter()
        .chain(std::iter::once(&report.union))
    {
        worst = worst.min(v.worst_margin);
        verdicts.push(Verdict::new(
            v.name.clone(),
            v.passed(),
            format!(
                "{} pass / {} fail, worst margin {:.6e}",
                v.passes, v.failures, v.worst_margin
            ),
        ));
    }
    let summary = summary_json(
        s.name,
        &s.resolved,
        &verdicts,
        worst.is_finite().then_some(worst),
        start.elapsed().as_secs_f64(),
    );
    write_summary(cfg.out.as_deref(), &summary).map_err(tool)?;

    Ok(if report.all_passed() { 0 } else { 1 })
}

pub fn run_contain(cfg: &RunConfig) -> Result<i32, CommandError> {
    let start = Instant::now();
    let s = build_scenario(cfg)?;
    print_notes(&s);
    let delta = cfg.delta.unwrap_or(s.delta);
    let samples = cfg.samples.unwrap_or(s.n_samples);
    let tol = cfg.tol.unwrap_or(1e-6);
    let kind = match cfg.mode.as_deref() {
        None | Some("krasovskii") => Regularization::Krasovskii,
        Some("filippov") => Regularization::Filippov,
        Some(other) => {
            return Err(CommandError::Usage(format!(
                "unknown regularization {other:?}; expected krasovskii or filippov"
            )))
        }
    };

    let points: Vec<Vec<f64>> = match &cfg.grid {
        Some(axes) => grid_points(axes, s.t0)
            .into_iter()
            .map(|(x, _)| x)
            .collect(),
        None => s.probe_points.clone(),
    };
    if points.is_empty() {
        return Err(CommandError::Usage(
            "no containment points (give --grid)".into(),
        ));
    }

    let results = parallel::map_indexed(points.len(), threads_from_env(), |i| {
        containment_check(
            &s.family, &s.rho, &points[i], s.t0, delta, samples, tol, cfg.seed, kind,
        )
    });

    // Convergence diagnostic at the first point: hull diameter against the
    // sampling radius.
    let assembled = assemble_switched(&s.family, &s.rho).map_err(tool)?;
    let schedule = [delta, delta * 1e-1, delta * 1e-2];
    if let Ok(diag) = regularization_diagnostic(
        &assembled, &points[0], s.t0, &schedule, samples, cfg.seed, kind,
    ) {
        println!("hull diameter vs radius at x = {:?}:", points[0]);
        for (d, diam) in diag {
            println!("  delta {d:.3e} -> diameter {diam:.6e}");
        }
    }

    let mut verdicts = Vec::new();
    let mut all_hold = true;
    let mut worst_inflation = 0.0f64;
    for (i, result) in results.into_iter().enumerate() {
        let report = result.map_err(tool)?;
        all_hold &= report.holds;
        worst_inflation = worst_inflation.max(report.inflation_needed);
        println!(
            "x = {:?}: {} (inflation {:.3e}, {} attained indices)",
            points[i],
            if report.holds {
                "contained"
            } else {
                "NOT contained"
            },
            report.inflation_needed,
            report.attained.len(),
        );
        verdicts.push(Verdict::new(
            format!("point{i}"),
            report.holds,
            format!(
                "inflation {:.6e}, attained {:?}, estimated at delta {:.3e}",
                report.inflation_needed, report.attained, report.estimation_delta
            ),
        ));
    }

    let summary = summary_json(
        s.name,
        &s.resolved,
        &verdicts,
        Some(tol - worst_inflation),
        start.elapsed().as_secs_f64(),
    );
    write_summary(cfg.out.as_deref(), &summary).map_err(tool)?;
    Ok(if all_hold { 0 } else { 1 })
}

pub fn run_probe(cfg: &RunConfig) -> Result<i32, CommandError> {
    let start = Instant::now();
    let s = build_scenario(cfg)?;
    print_notes(&s);
    let samples = cfg.samples.unwrap_or(s.n_samples);
    let deltas: Vec<f64> = match cfg.delta {
        Some(d) => vec![d, d * 1e-1, d * 1e-2, d * 1e-3],
        None => s.probe_deltas.clone(),
    };

    let mut verdicts = Vec::new();
    let mut any_violation = false;
    for (i, point) in s.probe_points.iter().enumerate() {
        let report = assumption_probe(
            &s.rho,
            point,
            s.t0,
            &deltas,
            samples,
            DEFAULT_INDEX_CAP,
            cfg.seed,
        )
        .map_err(tool)?;
        println!(
            "switching-signal probe at x = {point:?} (cap {}, {} samples per radius; \
             empirical, not a proof):",
            report.cap, samples
        );
        for (d, count) in &report.per_delta {
            println!("  delta {d:.3e} -> {count} distinct indices");
        }
        match report.finite_at {
            Some(d) => println!("  bounded index count observed at delta {d:.3e}"),
            None => println!("  no probed radius had a bounded index count: likely violation"),
        }
        any_violation |= report.likely_violation();
        verdicts.push(Verdict::new(
            format!("point{i}"),
            !report.likely_violation(),
            format!("counts {:?}", report.per_delta),
        ));
    }

    let summary = summary_json(
        s.name,
        &s.resolved,
        &verdicts,
        None,
        start.elapsed().as_secs_f64(),
    );
    write_summary(cfg.out.as_deref(), &summary).map_err(tool)?;
    Ok(if any_violation { 1 } else { 0 })
}

fn expectation(verdicts: &mut Vec<Verdict>, name: &str, observed: bool, detail: String) {
    println!(
        "  [{}] {name}: {detail}",
        if observed { "ok" } else { "UNEXPECTED" }
    );
    verdicts.push(Verdict::new(name, observed, detail));
}

fn repro_sec4(cfg: &RunConfig, verdicts: &mut Vec<Verdict>) -> Result<(), CommandError> {
    let s = scenario("sec4_example", &cfg.params).map_err(tool)?;
    println!("scenario sec4_example: dyadic-shell switching around the origin");
    let assembled = assemble_switched(&s.family, &s.rho).map_err(tool)?;

    let k = krasovskii_estimate(&assembled, &[0.0], 0.0, 1e-3, 500, cfg.seed).map_err(tool)?;
    let unit = Polytope::new(1, vec![vec![0.0], vec![1.0]]).map_err(tool)?;
    let h = hausdorff(&k, &unit).map_err(tool)?;
    expectation(
        verdicts,
        "krasovskii_hull_is_unit_interval",
        h <= 0.05,
        format!("Hausdorff distance to [0, 1] is {h:.3e}"),
    );

    let f = filippov_estimate(&assembled, &[0.0], 0.0, 1e-3, 500, cfg.seed).map_err(tool)?;
    let all_one = f.vertices().iter().all(|v| v[0] == 1.0);
    expectation(
        verdicts,
        "filippov_hull_is_unit_singleton",
        all_one,
        format!("{} vertices, all exactly 1: {all_one}", f.vertices().len()),
    );

    let sub = s.family.subfield(3).expect("sigma 3 exists");
    let est = krasovskii_estimate(&sub, &[0.0], 0.0, 1e-3, 500, cfg.seed).map_err(tool)?;
    expectation(
        verdicts,
        "subsystem_hull_is_zero",
        est.diameter() == 0.0 && est.vertices()[0][0] == 0.0,
        format!("subsystem 3 hull diameter {:.3e}", est.diameter()),
    );

    let report = containment_check(
        &s.family,
        &s.rho,
        &[0.0],
        0.0,
        1e-3,
        500,
        1e-6,
        cfg.seed,
        Regularization::Krasovskii,
    )
    .map_err(tool)?;
    expectation(
        verdicts,
        "containment_fails_at_origin",
        !report.holds && (0.9..=1.1).contains(&report.inflation_needed),
        format!(
            "holds = {}, inflation needed {:.3}",
            report.holds, report.inflation_needed
        ),
    );

    let probe = assumption_probe(
        &s.rho,
        &[0.0],
        0.0,
        &s.probe_deltas,
        s.n_samples,
        DEFAULT_INDEX_CAP,
        cfg.seed,
    )
    .map_err(tool)?;
    expectation(
        verdicts,
        "signal_probe_flags_violation",
        probe.likely_violation(),
        format!("per-radius index counts {:?}", probe.per_delta),
    );
    Ok(())
}

fn repro_sec7(cfg: &RunConfig, verdicts: &mut Vec<Verdict>) -> Result<(), CommandError> {
    let s = scenario("sec7_counterexample", &cfg.params).map_err(tool)?;
    println!("scenario sec7_counterexample: common candidate for the parts, not for the union");
    let grid = grid_points(&[(-2.0, 2.0, 21), (-2.0, 2.0, 21)], 0.0);
    let report = certify(
        &s.candidate,
        &s.inclusion_maps,
        &grid,
        Mode::Lower,
        1e-9,
        threads_from_env(),
    )
    .map_err(tool)?;

    let subs_pass = report.subsystems.iter().all(|v| v.passed());
    expectation(
        verdicts,
        "subsystems_certify_in_lower_mode",
        subs_pass,
        format!(
            "worst margins {:?}",
            report
                .subsystems
                .iter()
                .map(|v| v.worst_margin)
                .collect::<Vec<_>>()
        ),
    );

    let diagonal = grid
        .iter()
        .filter(|(x, _)| (x[0].abs() - x[1].abs()).abs() <= 1e-12 && x[0].abs() > 0.0)
        .count();
    let values_match = report
        .failures
        .iter()
        .filter(|f| f.subsystem == "union")
        .all(|f| (f.value - 0.5 * f.x[0].abs()).abs() <= 1e-9);
    expectation(
        verdicts,
        "union_fails_exactly_on_diagonals",
        report.union.failures == diagonal && values_match,
        format!(
            "{} union failures over {} diagonal points, violation value 0.5 V: {values_match}",
            report.union.failures, diagonal
        ),
    );

    let traj = integrate(
        &s.sim_field,
        &s.rule,
        &[1.0, 1.0],
        0.0,
        1.0,
        1e-3,
        Method::Rk4,
    )
    .map_err(tool)?;
    let x_end = traj.states.last().expect("nonempty run");
    let scale = 0.5f64.exp();
    let err = ((x_end[0] - scale).powi(2) + (x_end[1] - scale).powi(2)).sqrt();
    expectation(
        verdicts,
        "selection_escapes_exponentially",
        err <= 1e-3 * scale,
        format!("endpoint error {err:.3e} against the exponential reference"),
    );

    let mut traj = traj;
    let mon = monitor(&mut traj, &s.candidate).map_err(tool)?;
    expectation(
        verdicts,
        "candidate_grows_along_escape",
        !mon.nonincreasing && mon.v_final > mon.v_initial,
        format!("candidate {} -> {}", mon.v_initial, mon.v_final),
    );
    Ok(())
}

fn repro_adaptive(
    name: &str,
    cfg: &RunConfig,
    verdicts: &mut Vec<Verdict>,
) -> Result<(), CommandError> {
    let s = scenario(name, &cfg.params).map_err(tool)?;
    println!("scenario {name}: adaptive loop with signum robustifier");
    let mut traj =
        integrate(&s.sim_field, &s.rule, &s.x0, s.t0, 20.0, s.dt, Method::Rk4).map_err(tool)?;
    let report = monitor(&mut traj, &s.candidate).map_err(tool)?;

    expectation(
        verdicts,
        "candidate_nonincreasing",
        report.max_uptick <= 1e-4,
        format!("max uptick {:.3e}", report.max_uptick),
    );
    expectation(
        verdicts,
        "decay_integral_bounded_by_initial_value",
        report.w_integral <= report.v_initial + 1e-3,
        format!(
            "integral {:.6} vs initial value {:.6}",
            report.w_integral, report.v_initial
        ),
    );
    let x_end = traj.states.last().expect("nonempty")[0].abs();
    expectation(
        verdicts,
        "state_regulated",
        x_end <= 1e-2,
        format!("|x(20)| = {x_end:.3e}"),
    );

    let mut tails = Vec::new();
    for t_final in [10.0, 40.0] {
        let mut tr = integrate(
            &s.sim_field,
            &s.rule,
            &s.x0,
            s.t0,
            t_final,
            s.dt,
            Method::Rk4,
        )
        .map_err(tool)?;
        tails.push(monitor(&mut tr, &s.candidate).map_err(tool)?.w_tail);
    }
    expectation(
        verdicts,
        "decay_tail_vanishes",
        tails[1] <= 0.25 * tails[0],
        format!("tail {:.3e} at T=10 vs {:.3e} at T=40", tails[0], tails[1]),
    );

    let grid = grid_points(&s.grid_axes, s.t0);
    let cert = certify(
        &s.candidate,
        &s.inclusion_maps,
        &grid,
        Mode::Upper,
        1e-9,
        threads_from_env(),
    )
    .map_err(tool)?;
    expectation(
        verdicts,
        "upper_mode_certifies",
        cert.all_passed(),
        format!("union worst margin {:.3e}", cert.union.worst_margin),
    );
    Ok(())
}

pub fn run_repro(target: &str, cfg: &RunConfig) -> Result<i32, CommandError> {
    let start = Instant::now();
    let runs: Vec<&str> = match target {
        "sec4" | "sec4_example" => vec!["sec4"],
        "sec7" | "sec7_counterexample" => vec!["sec7"],
        "sec8ex1" | "sec8_example1" => vec!["sec8ex1"],
        "sec8ex2" | "sec8_example2" => vec!["sec8ex2"],
        "all" => vec!["sec4", "sec7", "sec8ex1", "sec8ex2"],
        other => {
            return Err(CommandError::Usage(format!(
                "unknown repro target {other:?}; expected sec4, sec7, sec8ex1, sec8ex2, or all"
            )))
        }
    };

    let mut verdicts = Vec::new();
    for run in &runs {
        match *run {
            "sec4" => repro_sec4(cfg, &mut verdicts)?,
            "sec7" => repro_sec7(cfg, &mut verdicts)?,
            "sec8ex1" => repro_adaptive("sec8_example1", cfg, &mut verdicts)?,
            "sec8ex2" => repro_adaptive("sec8_example2", cfg, &mut verdicts)?,
            _ => unreachable!(),
        }
    }

    let all_observed = verdicts.iter().all(|v| v.pass);
    println!(
        "{}: {} of {} expected outcomes observed",
        if all_observed { "ok" } else { "FAILED" },
        verdicts.iter().filter(|v| v.pass).count(),
        verdicts.len()
    );
    let summary = summary_json(target, &[], &verdicts, None, start.elapsed().as_secs_f64());
    write_summary(cfg.out.as_deref(), &summary).map_err(tool)?;
    Ok(if all_observed { 0 } else { 1 })
}
