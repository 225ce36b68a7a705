//! Built-in demonstration scenarios, fully wired: fields, switching signal,
//! candidate, selection rule, certification inclusions, and defaults.
//!
//! * `sec4_example` — scalar system with countably many dyadic-shell
//!   subsystems whose switching signal attains infinitely many indices near
//!   the origin; the subsystem containment check fails there by design.
//! * `sec7_counterexample` — two planar subsystems sharing a contraction on
//!   the diagonal, each admitting the max-norm candidate in the min-max
//!   sense, while the union hull admits an escaping selection `q = x / 2`.
//! * `sec8_example1` — scalar adaptive regulation loop with a signum
//!   robustifying term and a matched disturbance; single subsystem.
//! * `sec8_example2` — arbitrary switching between two adaptive loops with
//!   different parameters, gains, and disturbances over a stacked estimate.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::fields::{
    analytic_regularization, assemble_switched, FieldFamily, IndexUniverse, Piece, PiecewiseField,
    SmoothField, SwitchingSignal,
};
use crate::hull::Polytope;
use crate::lyap::InclusionMap;
use crate::nonsmooth::{max_abs_candidate, LyapunovCandidate};
use crate::sim::{SelectionRule, SimError, SlidingSurface};

pub const SCENARIO_NAMES: [&str; 4] = [
    "sec4_example",
    "sec7_counterexample",
    "sec8_example1",
    "sec8_example2",
];

/// Numeric overrides for scenario constants; unknown keys are reported in
/// the scenario notes rather than silently dropped.
#[derive(Debug, Clone, Default)]
pub struct ScenarioParams {
    values: BTreeMap<String, f64>,
}

impl ScenarioParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).copied().unwrap_or(default)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(|s| s.as_str())
    }
}

/// A fully wired scenario plus its defaults.
pub struct Scenario {
    pub name: &'static str,
    pub dim_state: usize,
    pub family: FieldFamily,
    pub rho: SwitchingSignal,
    /// The field the simulator integrates (assembled or union field).
    pub sim_field: PiecewiseField,
    pub rule: SelectionRule,
    pub candidate: LyapunovCandidate,
    /// Per-subsystem inclusion maps for certification.
    pub inclusion_maps: Vec<(String, InclusionMap)>,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
    pub t_final: f64,
    pub delta: f64,
    pub n_samples: usize,
    /// Default certification grid axes `(min, max, count)`.
    pub grid_axes: Vec<(f64, f64, usize)>,
    /// Default points for containment checks and signal probes.
    pub probe_points: Vec<Vec<f64>>,
    pub probe_deltas: Vec<f64>,
    pub notes: Vec<String>,
    /// Effective numeric constants, for run summaries.
    pub resolved: Vec<(String, f64)>,
}

/// Builds a scenario by name. Unknown names list the known scenarios.
pub fn scenario(name: &str, params: &ScenarioParams) -> Result<Scenario, SimError> {
    match name {
        "sec4_example" => sec4_example(params),
        "sec7_counterexample" => sec7_counterexample(params),
        "sec8_example1" => sec8_example1(params),
        "sec8_example2" => sec8_example2(params),
        other => Err(SimError::UnknownScenario {
            name: other.to_string(),
            known: SCENARIO_NAMES.to_vec(),
        }),
    }
}

fn note_ignored(params: &ScenarioParams, known: &[&str], notes: &mut Vec<String>) {
    for key in params.keys() {
        if !known.contains(&key) {
            notes.push(format!(
                "ignored parameter {key:?} (not used by this scenario)"
            ));
        }
    }
}

fn analytic_map(field: Arc<PiecewiseField>, delta: f64) -> InclusionMap {
    Arc::new(move |x: &[f64], t: f64| Ok(analytic_regularization(&field, x, t, delta)?))
}

/// Dyadic-shell subsystem: 0 inside `|x| < 2^-sigma`, 1 outside.
fn dyadic_subfield(sigma: usize) -> Option<Arc<PiecewiseField>> {
    if sigma == 0 {
        return None;
    }
    let threshold = 2.0_f64.powi(-(sigma.min(1022) as i32));
    let field = PiecewiseField::new(
        1,
        vec![
            Piece::new(
                move |x: &[f64], _| x[0].abs() < threshold,
                SmoothField::constant(vec![0.0]),
            ),
            Piece::new(
                move |x: &[f64], _| x[0].abs() >= threshold,
                SmoothField::constant(vec![1.0]),
            ),
        ],
    )
    .expect("static pieces are valid")
    .with_null_set(move |x: &[f64], _| x[0].abs() == threshold);
    Some(Arc::new(field))
}

fn sec4_example(params: &ScenarioParams) -> Result<Scenario, SimError> {
    let x0 = params.get_or("x0", 0.5);
    let mut notes = vec![
        "the switching signal activates subsystem sigma exactly on the dyadic shell \
         2^-sigma <= |x| < 2^-sigma+1, so every neighborhood of 0 meets infinitely many indices"
            .to_string(),
        "expected findings: containment fails at x = 0 with inflation about 1; the signal probe \
         reports no radius with a bounded index count"
            .to_string(),
    ];
    note_ignored(params, &["x0"], &mut notes);

    let family = FieldFamily::generated(1, dyadic_subfield);
    let rho = SwitchingSignal::new(
        |x: &[f64], _| {
            let a = x[0].abs();
            if a == 0.0 || a >= 1.0 {
                1
            } else {
                (-a.log2()).ceil().max(1.0) as usize
            }
        },
        IndexUniverse::Countable("all positive integers".into()),
    )
    .with_boundary(|x: &[f64], _| {
        x[0] == 0.0 || (x[0].abs() < 1.0 && x[0].abs().log2().fract() == 0.0)
    });
    let sim_field = assemble_switched(&family, &rho)?;

    let candidate = LyapunovCandidate::smooth(
        1,
        |x: &[f64], _| 0.5 * x[0] * x[0],
        |x: &[f64], _| vec![x[0], 0.0],
        |x: &[f64]| 0.5 * x[0] * x[0],
        |x: &[f64]| 0.5 * x[0] * x[0],
        |_: &[f64]| 0.0,
    )?;

    let delta = 1e-3;
    let inclusion_maps = (1..=4)
        .map(|sigma| {
            let field = dyadic_subfield(sigma).expect("sigma >= 1");
            (format!("sigma{sigma}"), analytic_map(field, delta))
        })
        .collect();

    Ok(Scenario {
        name: "sec4_example",
        dim_state: 1,
        family,
        rho,
        sim_field,
        rule: SelectionRule::Direct,
        candidate,
        inclusion_maps,
        x0: vec![x0],
        t0: 0.0,
        dt: 1e-3,
        t_final: 1.0,
        delta,
        n_samples: 500,
        grid_axes: vec![(-1.0, 1.0, 21)],
        probe_points: vec![vec![0.0]],
        probe_deltas: vec![1e-1, 1e-2, 1e-3, 1e-4],
        notes,
        resolved: vec![("x0".into(), x0)],
    })
}

/// The two planar subsystems of the counterexample. Both contract along
/// `-x` where the max-norm candidate is differentiable against them, and
/// each runs its tangential field where the candidate cannot see it.
fn planar_subsystems() -> (Arc<PiecewiseField>, Arc<PiecewiseField>) {
    let g1 = SmoothField::new(2, |x: &[f64], _| vec![x[0], 0.0]);
    let g2 = SmoothField::new(2, |x: &[f64], _| vec![0.0, x[1]]);
    let g3 = SmoothField::new(2, |x: &[f64], _| vec![-x[0], -x[1]]);
    let f1 = PiecewiseField::new(
        2,
        vec![
            Piece::new(|x: &[f64], _| x[0].abs() < x[1].abs(), g1),
            Piece::new(|x: &[f64], _| x[0].abs() >= x[1].abs(), g3.clone()),
        ],
    )
    .expect("static pieces are valid")
    .with_null_set(|x: &[f64], _| x[0].abs() == x[1].abs());
    let f2 = PiecewiseField::new(
        2,
        vec![
            Piece::new(|x: &[f64], _| x[0].abs() > x[1].abs(), g2),
            Piece::new(|x: &[f64], _| x[0].abs() <= x[1].abs(), g3),
        ],
    )
    .expect("static pieces are valid")
    .with_null_set(|x: &[f64], _| x[0].abs() == x[1].abs());
    (Arc::new(f1), Arc::new(f2))
}

fn sec7_counterexample(params: &ScenarioParams) -> Result<Scenario, SimError> {
    let x01 = params.get_or("x01", 1.0);
    let x02 = params.get_or("x02", 1.0);
    let mut notes = vec![
        "each subsystem satisfies the min-max decay condition with zero decay bound, but the \
         union hull admits the selection q = x / 2 on the diagonal, which escapes exponentially"
            .to_string(),
        "the custom selection q = x / 2 is an inclusion element only on |x1| = |x2|; start on \
         the diagonal"
            .to_string(),
    ];
    note_ignored(params, &["x01", "x02"], &mut notes);

    let (f1, f2) = planar_subsystems();
    let mut map = BTreeMap::new();
    map.insert(1usize, f1.clone());
    map.insert(2usize, f2.clone());
    let family = FieldFamily::finite(map)?;
    let rho = SwitchingSignal::new(
        |x: &[f64], _| if x[0] + x[1] >= 0.0 { 1 } else { 2 },
        IndexUniverse::Finite(vec![1, 2]),
    )
    .with_boundary(|x: &[f64], _| x[0] + x[1] == 0.0);

    // Union field: the tangential fields on their own sides of the diagonal
    // plus the shared contraction everywhere, so the exact-mode
    // regularization matches the union hull of the subsystem inclusions.
    let g1 = SmoothField::new(2, |x: &[f64], _| vec![x[0], 0.0]);
    let g2 = SmoothField::new(2, |x: &[f64], _| vec![0.0, x[1]]);
    let g3 = SmoothField::new(2, |x: &[f64], _| vec![-x[0], -x[1]]);
    let union_field = PiecewiseField::new(
        2,
        vec![
            Piece::new(|x: &[f64], _| x[0].abs() < x[1].abs(), g1),
            Piece::new(|x: &[f64], _| x[0].abs() > x[1].abs(), g2),
            Piece::new(|_: &[f64], _| true, g3),
        ],
    )?
    .with_null_set(|x: &[f64], _| x[0].abs() == x[1].abs());

    let delta = 1e-3;
    let inclusion_maps = vec![
        ("F1".to_string(), analytic_map(f1, delta)),
        ("F2".to_string(), analytic_map(f2, delta)),
    ];

    Ok(Scenario {
        name: "sec7_counterexample",
        dim_state: 2,
        family,
        rho,
        sim_field: union_field,
        rule: SelectionRule::custom(
            |x: &[f64], _, _: &Polytope| vec![0.5 * x[0], 0.5 * x[1]],
            delta,
        ),
        candidate: max_abs_candidate(),
        inclusion_maps,
        x0: vec![x01, x02],
        t0: 0.0,
        dt: 1e-3,
        t_final: 1.0,
        delta,
        n_samples: 500,
        grid_axes: vec![(-2.0, 2.0, 21), (-2.0, 2.0, 21)],
        probe_points: vec![vec![1.0, 1.0]],
        probe_deltas: vec![1e-1, 1e-2, 1e-3],
        notes,
        resolved: vec![("x01".into(), x01), ("x02".into(), x02)],
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Signum branch values near a coordinate: both signs within the tolerance
/// of the surface, the strict sign elsewhere.
fn sgn_branches(v: f64, tol: f64) -> Vec<f64> {
    if v.abs() <= tol {
        vec![-1.0, 1.0]
    } else {
        vec![sign(v)]
    }
}

fn sec8_example1(params: &ScenarioParams) -> Result<Scenario, SimError> {
    let k = params.get_or("k", 1.0);
    let beta = params.get_or("beta", 1.0);
    let dbar = params.get_or("dbar", 0.5);
    let theta = params.get_or("theta", 2.0);
    let x0 = params.get_or("x0", 1.0);
    let thetahat0 = params.get_or("thetahat0", 0.0);

    if k <= 0.0 || beta <= 0.0 {
        return Err(SimError::InvalidParameter(format!(
            "gains must be positive (k = {k}, beta = {beta})"
        )));
    }
    let mut notes = vec![
        "scalar adaptive regulation: state' = -k x + x theta~ + d(t) - beta sgn(x), \
         theta~' = -x^2, with d(t) = dbar sin t"
            .to_string(),
    ];
    if beta <= dbar {
        notes.push(format!(
            "warning: beta = {beta} does not exceed the disturbance bound dbar = {dbar}; \
             the decay bound is not guaranteed"
        ));
    }
    note_ignored(
        params,
        &["k", "beta", "dbar", "theta", "x0", "thetahat0"],
        &mut notes,
    );

    // State z = [x; theta~].
    let loop_field = move |s: f64| {
        SmoothField::new(2, move |z: &[f64], t: f64| {
            let d = dbar * t.sin();
            vec![-k * z[0] + z[0] * z[1] + d - beta * s, -z[0] * z[0]]
        })
    };
    let field = PiecewiseField::new(
        2,
        vec![
            Piece::new(|z: &[f64], _| z[0] >= 0.0, loop_field(1.0)),
            Piece::new(|z: &[f64], _| z[0] < 0.0, loop_field(-1.0)),
        ],
    )?
    .with_null_set(|z: &[f64], _| z[0] == 0.0);

    let mut map = BTreeMap::new();
    map.insert(1usize, Arc::new(field.clone()));
    let family = FieldFamily::finite(map)?;
    let rho = SwitchingSignal::constant(1);

    let candidate = LyapunovCandidate::smooth(
        2,
        |z: &[f64], _| 0.5 * (z[0] * z[0] + z[1] * z[1]),
        |z: &[f64], _| vec![z[0], z[1], 0.0],
        |z: &[f64]| 0.5 * (z[0] * z[0] + z[1] * z[1]),
        |z: &[f64]| 0.5 * (z[0] * z[0] + z[1] * z[1]),
        move |z: &[f64]| k * z[0] * z[0],
    )?;

    // Certification inclusion: disturbance replaced by its interval corners
    // and the signum by its filled branches, so one polytope covers all t.
    let inclusion: InclusionMap = Arc::new(move |z: &[f64], _| {
        let mut verts = Vec::new();
        for s in sgn_branches(z[0], 1e-9) {
            for d in [-dbar, dbar] {
                verts.push(vec![-k * z[0] + z[0] * z[1] + d - beta * s, -z[0] * z[0]]);
            }
        }
        Ok(Polytope::new(2, verts)?)
    });

    Ok(Scenario {
        name: "sec8_example1",
        dim_state: 2,
        family,
        rho,
        sim_field: field,
        rule: SelectionRule::Sliding(vec![SlidingSurface::coordinate(0, 2)]),
        candidate,
        inclusion_maps: vec![("sigma1".to_string(), inclusion)],
        x0: vec![x0, theta - thetahat0],
        t0: 0.0,
        dt: 1e-3,
        t_final: 20.0,
        delta: 1e-3,
        n_samples: 500,
        grid_axes: vec![(-2.0, 2.0, 9), (-2.0, 2.0, 9)],
        probe_points: vec![vec![x0, theta - thetahat0]],
        probe_deltas: vec![1e-1, 1e-2, 1e-3],
        notes,
        resolved: vec![
            ("k".into(), k),
            ("beta".into(), beta),
            ("dbar".into(), dbar),
            ("theta".into(), theta),
            ("x0".into(), x0),
            ("thetahat0".into(), thetahat0),
        ],
    })
}

fn sec8_example2(params: &ScenarioParams) -> Result<Scenario, SimError> {
    let k1 = params.get_or("k1", 1.0);
    let k2 = params.get_or("k2", 1.0);
    let dbar1 = params.get_or("dbar1", 0.3);
    let dbar2 = params.get_or("dbar2", 0.6);
    let beta1 = params.get_or("beta1", dbar1 + 0.5);
    let beta2 = params.get_or("beta2", dbar2 + 0.5);
    let theta1 = params.get_or("theta1", 2.0);
    let theta2 = params.get_or("theta2", -1.0);
    let x0 = params.get_or("x0", 1.0);

    if k1 <= 0.0 || k2 <= 0.0 || beta1 <= 0.0 || beta2 <= 0.0 {
        return Err(SimError::InvalidParameter("gains must be positive".into()));
    }
    let mut notes = vec![
        "two adaptive loops over the stacked estimate [theta1~; theta2~] with regressors x and \
         2x, disturbances 0.3 sin 2t and 0.6 cos t, switched by a time-periodic state-dependent \
         signal"
            .to_string(),
    ];
    if beta1 <= dbar1 || beta2 <= dbar2 {
        notes
            .push("warning: a robustifying gain does not exceed its disturbance bound".to_string());
    }
    note_ignored(
        params,
        &[
            "k1", "k2", "dbar1", "dbar2", "beta1", "beta2", "theta1", "theta2", "x0",
        ],
        &mut notes,
    );

    // State z = [x; theta1~; theta2~]. Regressors: Y1 = [x, 0], Y2 = [0, 2x].
    let sub = move |kk: f64, bb: f64, which: usize| {
        let d = move |x_: f64, t: f64| {
            let _ = x_;
            if which == 1 {
                dbar1 * (2.0 * t).sin()
            } else {
                dbar2 * t.cos()
            }
        };
        let loop_field = move |s: f64| {
            SmoothField::new(3, move |z: &[f64], t: f64| {
                let coupling = if which == 1 {
                    z[0] * z[1]
                } else {
                    2.0 * z[0] * z[2]
                };
                let xdot = -kk * z[0] + coupling + d(z[0], t) - bb * s;
                if which == 1 {
                    vec![xdot, -z[0] * z[0], 0.0]
                } else {
                    vec![xdot, 0.0, -2.0 * z[0] * z[0]]
                }
            })
        };
        PiecewiseField::new(
            3,
            vec![
                Piece::new(|z: &[f64], _| z[0] >= 0.0, loop_field(1.0)),
                Piece::new(|z: &[f64], _| z[0] < 0.0, loop_field(-1.0)),
            ],
        )
        .expect("static pieces are valid")
        .with_null_set(|z: &[f64], _| z[0] == 0.0)
    };

    let mut map = BTreeMap::new();
    map.insert(1usize, Arc::new(sub(k1, beta1, 1)));
    map.insert(2usize, Arc::new(sub(k2, beta2, 2)));
    let family = FieldFamily::finite(map)?;
    let rho = SwitchingSignal::new(
        |z: &[f64], t: f64| {
            if (2.0 * t).sin() + 0.25 * z[0].tanh() >= 0.0 {
                1
            } else {
                2
            }
        },
        IndexUniverse::Finite(vec![1, 2]),
    )
    .with_boundary(|z: &[f64], t: f64| (2.0 * t).sin() + 0.25 * z[0].tanh() == 0.0);
    let sim_field = assemble_switched(&family, &rho)?;

    let k_min = k1.min(k2);
    let candidate = LyapunovCandidate::smooth(
        3,
        |z: &[f64], _| 0.5 * z.iter().map(|c| c * c).sum::<f64>(),
        |z: &[f64], _| vec![z[0], z[1], z[2], 0.0],
        |z: &[f64]| 0.5 * z.iter().map(|c| c * c).sum::<f64>(),
        |z: &[f64]| 0.5 * z.iter().map(|c| c * c).sum::<f64>(),
        move |z: &[f64]| k_min * z[0] * z[0],
    )?;

    let make_inclusion = move |kk: f64, bb: f64, db: f64, which: usize| -> InclusionMap {
        Arc::new(move |z: &[f64], _| {
            let mut verts = Vec::new();
            for s in sgn_branches(z[0], 1e-9) {
                for d in [-db, db] {
                    let coupling = if which == 1 {
                        z[0] * z[1]
                    } else {
                        2.0 * z[0] * z[2]
                    };
                    let xdot = -kk * z[0] + coupling + d - bb * s;
                    if which == 1 {
                        verts.push(vec![xdot, -z[0] * z[0], 0.0]);
                    } else {
                        verts.push(vec![xdot, 0.0, -2.0 * z[0] * z[0]]);
                    }
                }
            }
            Ok(Polytope::new(3, verts)?)
        })
    };

    Ok(Scenario {
        name: "sec8_example2",
        dim_state: 3,
        family,
        rho,
        sim_field,
        rule: SelectionRule::Sliding(vec![SlidingSurface::coordinate(0, 3)]),
        candidate,
        inclusion_maps: vec![
            ("sigma1".to_string(), make_inclusion(k1, beta1, dbar1, 1)),
            ("sigma2".to_string(), make_inclusion(k2, beta2, dbar2, 2)),
        ],
        x0: vec![x0, theta1, theta2],
        t0: 0.0,
        dt: 1e-3,
        t_final: 20.0,
        delta: 1e-3,
        n_samples: 500,
        grid_axes: vec![(-2.0, 2.0, 5), (-2.0, 2.0, 5), (-2.0, 2.0, 5)],
        probe_points: vec![vec![x0, theta1, theta2]],
        probe_deltas: vec![1e-1, 1e-2, 1e-3],
        notes,
        resolved: vec![
            ("k1".into(), k1),
            ("k2".into(), k2),
            ("dbar1".into(), dbar1),
            ("dbar2".into(), dbar2),
            ("beta1".into(), beta1),
            ("beta2".into(), beta2),
            ("theta1".into(), theta1),
            ("theta2".into(), theta2),
            ("x0".into(), x0),
        ],
    })
}
