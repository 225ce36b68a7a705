//! Fixed-step integration of switched fields and inclusion selections.
//!
//! The integrator advances with Euler or classic Runge-Kutta steps and
//! localizes region-boundary crossings by bisection (time tolerance
//! `dt * 1e-3`), logging them as events. On declared sliding surfaces it
//! switches to the equivalent control: the convex combination of the two
//! adjacent field values that zeroes the normal velocity component, entered
//! when the combination coefficient lies in `[0, 1]` and left when it
//! escapes that interval. Componentwise signum discontinuities are handled
//! per coordinate surface.
//!
//! [`monitor`] fills a trajectory's candidate/decay readouts and reports the
//! quantities a non-strict Lyapunov analysis promises: no upticks beyond
//! integration tolerance, a finite decay integral, and a vanishing tail.

mod scenario;

pub use scenario::{scenario, Scenario, ScenarioParams, SCENARIO_NAMES};

use std::sync::Arc;

use thiserror::Error;

use crate::fields::{analytic_regularization, FieldError, PiecewiseField};
use crate::hull::{self, HullError, Polytope};
use crate::nonsmooth::{LyapunovCandidate, NonsmoothError};

/// State-norm cap past which a run is reported as a suspected finite escape.
pub const BLOWUP_CAP: f64 = 1e9;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("finite escape suspected at t = {t} (state norm exceeded {BLOWUP_CAP:e})")]
    FiniteEscape { t: f64, partial: Box<Trajectory> },
    #[error("degenerate sliding at t = {t}: adjacent fields have equal normal components")]
    DegenerateSliding { t: f64 },
    #[error("custom selection left the inclusion at t = {t} (distance {distance:.3e})")]
    SelectionOutsideInclusion { t: f64, distance: f64 },
    #[error("unknown scenario {name:?}; known: {known:?}")]
    UnknownScenario {
        name: String,
        known: Vec<&'static str>,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Nonsmooth(#[from] NonsmoothError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Switch,
    SlideEnter,
    SlideExit,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventKind::Switch => write!(f, "switch"),
            EventKind::SlideEnter => write!(f, "slide_enter"),
            EventKind::SlideExit => write!(f, "slide_exit"),
        }
    }
}

/// Sampled solution of an integration run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// The selected right-hand side at each sample.
    pub velocities: Vec<Vec<f64>>,
    /// Candidate values per sample; filled by [`monitor`].
    pub v_values: Vec<f64>,
    /// Decay-bound values per sample; filled by [`monitor`].
    pub w_values: Vec<f64>,
    pub events: Vec<(f64, EventKind)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SurfaceKind {
    General,
    Coordinate(usize),
}

/// Codimension-one surface `s(x) = 0` with its gradient, eligible for
/// equivalent-control sliding.
#[derive(Clone)]
pub struct SlidingSurface {
    s: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    kind: SurfaceKind,
}

impl SlidingSurface {
    pub fn new<S, G>(s: S, grad: G) -> Self
    where
        S: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        SlidingSurface {
            s: Arc::new(s),
            grad: Arc::new(grad),
            kind: SurfaceKind::General,
        }
    }

    /// The coordinate plane `x_i = 0`. Blending on a coordinate surface only
    /// replaces component `i`, so componentwise signum terms are handled
    /// independently.
    pub fn coordinate(i: usize, dim: usize) -> Self {
        let grad = move |_: &[f64]| {
            let mut g = vec![0.0; dim];
            g[i] = 1.0;
            g
        };
        SlidingSurface {
            s: Arc::new(move |x: &[f64]| x[i]),
            grad: Arc::new(grad),
            kind: SurfaceKind::Coordinate(i),
        }
    }
}

/// How the integrator selects a velocity from the inclusion.
#[derive(Clone)]
pub enum SelectionRule {
    /// Evaluate the field directly.
    Direct,
    /// Direct evaluation plus equivalent-control sliding on the declared
    /// surfaces.
    Sliding(Vec<SlidingSurface>),
    /// User-selected velocity `q(x, t, F)`; `F` is the exact-mode
    /// regularization at radius `inclusion_delta`, and the selection must
    /// stay inside it (tolerance 1e-6).
    Custom {
        select: Arc<dyn Fn(&[f64], f64, &Polytope) -> Vec<f64> + Send + Sync>,
        inclusion_delta: f64,
    },
}

impl SelectionRule {
    pub fn custom<F>(select: F, inclusion_delta: f64) -> Self
    where
        F: Fn(&[f64], f64, &Polytope) -> Vec<f64> + Send + Sync + 'static,
    {
        SelectionRule::Custom {
            select: Arc::new(select),
            inclusion_delta,
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

struct Integrator<'a> {
    field: &'a PiecewiseField,
    rule: &'a SelectionRule,
    method: Method,
    dt: f64,
    active: Vec<bool>,
    events: Vec<(f64, EventKind)>,
}

impl Integrator<'_> {
    fn surfaces(&self) -> &[SlidingSurface] {
        match self.rule {
            SelectionRule::Sliding(s) => s,
            _ => &[],
        }
    }

    /// Projects the active sliding surfaces back onto `s = 0`.
    fn project(&self, x: &mut [f64]) {
        for (j, surf) in self.surfaces().iter().enumerate() {
            if !self.active[j] {
                continue;
            }
            match surf.kind {
                SurfaceKind::Coordinate(i) => x[i] = 0.0,
                SurfaceKind::General => {
                    for _ in 0..2 {
                        let s = (surf.s)(x);
                        let g = (surf.grad)(x);
                        let gg: f64 = g.iter().map(|c| c * c).sum();
                        if gg < 1e-300 {
                            break;
                        }
                        for (xc, gc) in x.iter_mut().zip(&g) {
                            *xc -= s * gc / gg;
                        }
                    }
                }
            }
        }
    }

    /// Equivalent-control coefficient on one surface at a point assumed to
    /// lie on it: `lambda = g.f_minus / g.(f_minus - f_plus)`, unclamped,
    /// plus the two adjacent field values.
    fn sliding_lambda(
        &self,
        surf: &SlidingSurface,
        x: &[f64],
        t: f64,
    ) -> Result<(f64, Vec<f64>, Vec<f64>), SimError> {
        let g = (surf.grad)(x);
        let gn = norm2(&g);
        if gn < 1e-300 {
            return Err(SimError::DegenerateSliding { t });
        }
        let eps = 1e-8 * (1.0 + norm2(x));
        let minus: Vec<f64> = x.iter().zip(&g).map(|(c, gc)| c - eps * gc / gn).collect();
        let plus: Vec<f64> = x.iter().zip(&g).map(|(c, gc)| c + eps * gc / gn).collect();
        let f_minus = self.field.eval(&minus, t)?;
        let f_plus = self.field.eval(&plus, t)?;
        let num: f64 = g.iter().zip(&f_minus).map(|(a, b)| a * b).sum();
        let plus_dot: f64 = g.iter().zip(&f_plus).map(|(a, b)| a * b).sum();
        let denom = num - plus_dot;
        if denom.abs() < 1e-12 * (1.0 + num.abs().max(plus_dot.abs())) {
            return Err(SimError::DegenerateSliding { t });
        }
        Ok((num / denom, f_minus, f_plus))
    }

    /// Selected right-hand side under the current sliding state.
    fn rhs(&self, x: &[f64], t: f64) -> Result<Vec<f64>, SimError> {
        match self.rule {
            SelectionRule::Direct => Ok(self.field.eval(x, t)?),
            SelectionRule::Custom {
                select,
                inclusion_delta,
            } => {
                let f = analytic_regularization(self.field, x, t, *inclusion_delta)?;
                let q = select(x, t, &f);
                if q.len() != self.field.dim_state() || q.iter().any(|c| !c.is_finite()) {
                    return Err(SimError::InvalidParameter(
                        "custom selection returned a bad velocity".into(),
                    ));
                }
                let d = hull::distance_to_hull(&f, &q)?;
                if d > 1e-6 {
                    return Err(SimError::SelectionOutsideInclusion { t, distance: d });
                }
                Ok(q)
            }
            SelectionRule::Sliding(surfaces) => {
                if !self.active.iter().any(|a| *a) {
                    return Ok(self.field.eval(x, t)?);
                }
                let mut point = x.to_vec();
                self.project(&mut point);
                let mut v = self.field.eval(&point, t)?;
                for (j, surf) in surfaces.iter().enumerate() {
                    if !self.active[j] {
                        continue;
                    }
                    let (lambda, f_minus, f_plus) = self.sliding_lambda(surf, &point, t)?;
                    let lambda = lambda.clamp(0.0, 1.0);
                    match surf.kind {
                        SurfaceKind::Coordinate(i) => {
                            v[i] = lambda * f_plus[i] + (1.0 - lambda) * f_minus[i];
                        }
                        SurfaceKind::General => {
                            v = f_plus
                                .iter()
                                .zip(&f_minus)
                                .map(|(p, m)| lambda * p + (1.0 - lambda) * m)
                                .collect();
                        }
                    }
                }
                Ok(v)
            }
        }
    }

    fn step(&self, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SimError> {
        let out = match self.method {
            Method::Euler => {
                let k1 = self.rhs(x, t)?;
                x.iter()
                    .zip(&k1)
                    .map(|(a, b)| a + h * b)
                    .collect::<Vec<f64>>()
            }
            Method::Rk4 => {
                let k1 = self.rhs(x, t)?;
                let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
                let k2 = self.rhs(&x2, t + 0.5 * h)?;
                let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
                let k3 = self.rhs(&x3, t + 0.5 * h)?;
                let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
                let k4 = self.rhs(&x4, t + h)?;
                x.iter()
                    .enumerate()
                    .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        Ok(out)
    }

    /// Bisects the earliest sign change of `s` along the one-step map from
    /// `(x, t)`, to time tolerance `dt * 1e-3`.
    fn bisect_crossing(
        &self,
        surf: &SlidingSurface,
        x: &[f64],
        t: f64,
        h: f64,
    ) -> Result<f64, SimError> {
        let s0 = (surf.s)(x).signum();
        let mut lo = 0.0f64;
        let mut hi = h;
        while hi - lo > self.dt * 1e-3 {
            let mid = 0.5 * (lo + hi);
            let xm = self.step(x, t, mid)?;
            if ((surf.s)(&xm)).signum() == s0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// One full time step with sliding entry/exit handling.
    fn advance(&mut self, x: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SimError> {
        let mut cur_x = x.to_vec();
        let mut cur_t = t;
        let mut remaining = h;
        let mut budget = 8;

        let x_end = loop {
            let x_next = self.step(&cur_x, cur_t, remaining)?;

            // Earliest sliding entry among inactive surfaces. A sign change
            // across the step is bisected; a monotone approach that will
            // reach the surface within the step is entered at the linearly
            // predicted reach time. The prediction matters because near an
            // attractive surface the stage evaluations straddle the
            // discontinuity and can hold the end state on one side without
            // ever producing a sign change at the samples.
            let mut entry: Option<(usize, f64)> = None;
            if budget > 0 && !self.surfaces().is_empty() {
                let q0 = self.rhs(&cur_x, cur_t)?;
                for (j, surf) in self.surfaces().iter().enumerate() {
                    if self.active[j] {
                        continue;
                    }
                    let s0 = (surf.s)(&cur_x);
                    let s1 = (surf.s)(&x_next);
                    let g = (surf.grad)(&cur_x);
                    let sdot: f64 = g.iter().zip(&q0).map(|(a, b)| a * b).sum();
                    let tau = if s0 * s1 < 0.0 {
                        Some(self.bisect_crossing(surf, &cur_x, cur_t, remaining)?)
                    } else if s0 * sdot < 0.0 && s0.abs() <= 1.05 * remaining * sdot.abs() {
                        Some((s0.abs() / sdot.abs()).min(remaining))
                    } else {
                        None
                    };
                    if let Some(tau) = tau {
                        if entry.map(|(_, best)| tau < best).unwrap_or(true) {
                            entry = Some((j, tau));
                        }
                    }
                }
            }

            let Some((j, tau)) = entry else {
                break x_next;
            };
            let mut x_c = self.step(&cur_x, cur_t, tau)?;
            // Land exactly on the surface before testing attractivity.
            let was_active = self.active[j];
            self.active[j] = true;
            self.project(&mut x_c);
            self.active[j] = was_active;
            let surf = self.surfaces()[j].clone();
            let (lambda, _, _) = self.sliding_lambda(&surf, &x_c, cur_t + tau)?;

            if (0.0..=1.0).contains(&lambda) {
                self.active[j] = true;
                cur_t += tau;
                self.events.push((cur_t, EventKind::SlideEnter));
                self.project(&mut x_c);
                cur_x = x_c;
                remaining -= tau;
                budget -= 1;
                if remaining <= self.dt * 1e-6 {
                    break cur_x;
                }
            } else {
                // Transversal crossing; the plain step is already correct.
                break x_next;
            }
        };

        let mut x_end = x_end;
        let t_end = t + h;

        // Exit test and re-projection for active surfaces.
        for j in 0..self.active.len() {
            if !self.active[j] {
                continue;
            }
            let surf = self.surfaces()[j].clone();
            let mut probe = x_end.clone();
            self.project(&mut probe);
            let (lambda, _, _) = self.sliding_lambda(&surf, &probe, t_end)?;
            if !(0.0..=1.0).contains(&lambda) {
                self.active[j] = false;
                self.events.push((t_end, EventKind::SlideExit));
            }
        }
        self.project(&mut x_end);
        Ok(x_end)
    }
}

/// Fixed-step integration of the field under the given selection rule.
///
/// Region-boundary crossings are localized by bisection and logged; the
/// sliding rule additionally enters/leaves equivalent control on the
/// declared surfaces. A state norm above [`BLOWUP_CAP`] aborts with the
/// partial trajectory attached.
pub fn integrate(
    field: &PiecewiseField,
    rule: &SelectionRule,
    x0: &[f64],
    t0: f64,
    t_final: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(t_final > t0) {
        return Err(SimError::InvalidParameter("t_final must exceed t0".into()));
    }
    if x0.len() != field.dim_state() || x0.iter().any(|c| !c.is_finite()) {
        return Err(SimError::InvalidParameter("bad initial state".into()));
    }

    let n_surfaces = match rule {
        SelectionRule::Sliding(s) => s.len(),
        _ => 0,
    };
    let mut integ = Integrator {
        field,
        rule,
        method,
        dt,
        active: vec![false; n_surfaces],
        events: Vec::new(),
    };

    let mut traj = Trajectory::default();
    let mut x = x0.to_vec();
    let mut t = t0;
    let mut label = field.discrete_state(&x, t)?;

    let n_steps = ((t_final - t0) / dt).ceil() as usize;
    for k in 0..n_steps {
        let q = integ.rhs(&x, t)?;
        traj.times.push(t);
        traj.states.push(x.clone());
        traj.velocities.push(q);

        let h = dt.min(t_final - t);
        if h <= 0.0 {
            break;
        }
        let x_next = integ.advance(&x, t, h)?;
        let t_next = if k + 1 == n_steps { t_final } else { t + h };

        if x_next.iter().any(|c| !c.is_finite()) || norm2(&x_next) > BLOWUP_CAP {
            traj.events = integ.events;
            return Err(SimError::FiniteEscape {
                t: t_next,
                partial: Box::new(traj),
            });
        }

        // Region-change events, localized on the one-step map.
        let next_label = field.discrete_state(&x_next, t_next)?;
        if next_label != label {
            let mut lo = 0.0f64;
            let mut hi = h;
            while hi - lo > dt * 1e-3 {
                let mid = 0.5 * (lo + hi);
                let xm = integ.step(&x, t, mid)?;
                if field.discrete_state(&xm, t + mid)? == label {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            integ.events.push((t + hi, EventKind::Switch));
            label = next_label;
        }

        x = x_next;
        t = t_next;
    }

    let q = integ.rhs(&x, t)?;
    traj.times.push(t);
    traj.states.push(x.clone());
    traj.velocities.push(q);
    traj.events = integ.events;
    Ok(traj)
}

/// Monitor readouts for one trajectory against a candidate.
#[derive(Debug, Clone)]
pub struct MonitorReport {
    /// True when no step increased the candidate beyond `tol_up`.
    pub nonincreasing: bool,
    /// Largest single-step candidate increase.
    pub max_uptick: f64,
    /// Uptick tolerance used: `1e-6 + 10 * dt^2`.
    pub tol_up: f64,
    /// Trapezoidal integral of the decay bound along the run.
    pub w_integral: f64,
    /// Maximum of the decay bound over the last tenth of the horizon.
    pub w_tail: f64,
    pub v_initial: f64,
    pub v_final: f64,
}

/// Fills the trajectory's candidate/decay readouts and summarizes them.
pub fn monitor(
    traj: &mut Trajectory,
    candidate: &LyapunovCandidate,
) -> Result<MonitorReport, SimError> {
    if traj.states.is_empty() {
        return Err(SimError::InvalidParameter("empty trajectory".into()));
    }
    if traj.states[0].len() != candidate.dim_state() {
        return Err(SimError::InvalidParameter(format!(
            "trajectory dimension {} does not match candidate dimension {}",
            traj.states[0].len(),
            candidate.dim_state()
        )));
    }

    traj.v_values.clear();
    traj.w_values.clear();
    for (x, t) in traj.states.iter().zip(&traj.times) {
        traj.v_values.push(candidate.value(x, *t)?);
        traj.w_values.push(candidate.w_decay(x));
    }

    let mut max_uptick = 0.0f64;
    let mut max_step = 0.0f64;
    let mut w_integral = 0.0f64;
    for k in 1..traj.times.len() {
        let h = traj.times[k] - traj.times[k - 1];
        max_step = max_step.max(h);
        max_uptick = max_uptick.max(traj.v_values[k] - traj.v_values[k - 1]);
        w_integral += 0.5 * h * (traj.w_values[k] + traj.w_values[k - 1]);
    }
    let tol_up = 1e-6 + 10.0 * max_step * max_step;

    let t0 = traj.times[0];
    let t_end = *traj.times.last().expect("nonempty");
    let tail_start = t0 + 0.9 * (t_end - t0);
    let w_tail = traj
        .times
        .iter()
        .zip(&traj.w_values)
        .filter(|(t, _)| **t >= tail_start)
        .map(|(_, w)| *w)
        .fold(0.0f64, f64::max);

    Ok(MonitorReport {
        nonincreasing: max_uptick <= tol_up,
        max_uptick,
        tol_up,
        w_integral,
        w_tail,
        v_initial: traj.v_values[0],
        v_final: *traj.v_values.last().expect("nonempty"),
    })
}
