//! Generalized time derivatives and grid certification of non-strict common
//! Lyapunov conditions.
//!
//! For a candidate `V` and a compact inclusion value `F` (a polytope in the
//! state space), the derivative pairs each Clarke-gradient element `p` with
//! a lifted direction `[q; 1]`:
//!
//! * upper: `max_p max_q p . [q; 1]` — bilinear, so it is attained at a
//!   vertex pair and computed by a scan;
//! * lower: `min_p max_q p . [q; 1]` — the inner maximum is piecewise-linear
//!   convex, solved as a small linear program over the gradient weights;
//! * reduced: the same min-max over `F` cut down by the equality system that
//!   makes `p . [q; 1]` constant over each reducing candidate's gradient,
//!   with an explicit negative-infinity sentinel when the cut is empty.
//!
//! [`certify`] sweeps a grid and checks the selected derivative against
//! `-W(x)` for every subsystem and for the union hull of the family. Grid
//! certification is empirical evidence, not a proof.

use std::sync::Arc;

use thiserror::Error;

use crate::fields::FieldError;
use crate::hull::{
    self, Constraint, ConstraintKind, ConvexWeights, HullError, LpOutcome, Polytope,
};
use crate::nonsmooth::{
    clarke_gradient, LyapunovCandidate, NonsmoothError, DEFAULT_ACTIVATION_TOL,
};
use crate::parallel;

#[derive(Debug, Clone, Error)]
pub enum LyapError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("at grid point {index} (x = {x:?}, t = {t}): {source}")]
    AtGridPoint {
        index: usize,
        x: Vec<f64>,
        t: f64,
        source: Box<LyapError>,
    },
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Nonsmooth(#[from] NonsmoothError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Derivative semantics selected for certification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `max_p max_q` — the default certification semantics.
    Upper,
    /// `min_p max_q` — sound for regular candidates.
    Lower,
    /// Min-max over the inclusion reduced by the candidate itself.
    Reduced,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Upper => write!(f, "upper"),
            Mode::Lower => write!(f, "lower"),
            Mode::Reduced => write!(f, "reduced"),
        }
    }
}

/// Both derivative bounds at a point, with reproducible witnesses.
#[derive(Debug, Clone)]
pub struct DerivativeSample {
    pub x: Vec<f64>,
    pub t: f64,
    /// `max_p max_q p . [q; 1]`.
    pub upper: f64,
    /// `min_p max_q p . [q; 1]`.
    pub lower: f64,
    /// Gradient vertex attaining the upper value (lowest index on ties).
    pub witness_p: usize,
    /// Inclusion vertex attaining the upper value (lowest index on ties).
    pub witness_q: usize,
    /// Optimal gradient weights for the lower value.
    pub lower_weights: ConvexWeights,
    /// Inclusion vertex attaining the inner maximum at the lower optimum.
    pub lower_witness_q: usize,
    /// `-W(x) - upper`; negative when the decay condition is violated.
    pub margin: f64,
}

/// Lifts an inclusion value into pairing coordinates: `q -> [q; 1]`.
fn lift(f: &Polytope) -> Polytope {
    let vertices = f
        .vertices()
        .iter()
        .map(|q| {
            let mut v = q.clone();
            v.push(1.0);
            v
        })
        .collect();
    Polytope::new(f.dim() + 1, vertices).expect("lift preserves validity")
}

fn check_dims(candidate: &LyapunovCandidate, f: &Polytope) -> Result<(), LyapError> {
    if f.dim() != candidate.dim_state() {
        return Err(LyapError::DimensionMismatch {
            expected: candidate.dim_state(),
            got: f.dim(),
        });
    }
    Ok(())
}

/// Evaluates both generalized derivative bounds of `candidate` with respect
/// to the inclusion value `f` at `(x, t)`.
pub fn evaluate_derivative(
    candidate: &LyapunovCandidate,
    f: &Polytope,
    x: &[f64],
    t: f64,
    activation_tol: f64,
) -> Result<DerivativeSample, LyapError> {
    check_dims(candidate, f)?;
    let gradient = clarke_gradient(candidate, x, t, activation_tol)?;
    let lifted = lift(f);

    let mut upper = f64::NEG_INFINITY;
    let mut witness_p = 0;
    let mut witness_q = 0;
    for (i, p) in gradient.vertices().iter().enumerate() {
        for (j, q) in lifted.vertices().iter().enumerate() {
            let v = p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
            if v > upper {
                upper = v;
                witness_p = i;
                witness_q = j;
            }
        }
    }

    let (lower, lower_weights, lower_witness_q) =
        hull::min_of_convex_max_with_witness(&gradient, &lifted)?;

    let margin = -candidate.w_decay(x) - upper;
    Ok(DerivativeSample {
        x: x.to_vec(),
        t,
        upper,
        lower,
        witness_p,
        witness_q,
        lower_weights,
        lower_witness_q,
        margin,
    })
}

/// Upper generalized derivative `max_p max_q p . [q; 1]`.
pub fn gen_deriv_upper(
    candidate: &LyapunovCandidate,
    f: &Polytope,
    x: &[f64],
    t: f64,
) -> Result<DerivativeSample, LyapError> {
    evaluate_derivative(candidate, f, x, t, DEFAULT_ACTIVATION_TOL)
}

/// Lower generalized derivative `min_p max_q p . [q; 1]`.
///
/// The stability semantics of this relaxation require a regular candidate;
/// [`CertificationReport`] carries a warning flag when it is used anyway.
pub fn gen_deriv_lower(
    candidate: &LyapunovCandidate,
    f: &Polytope,
    x: &[f64],
    t: f64,
) -> Result<DerivativeSample, LyapError> {
    evaluate_derivative(candidate, f, x, t, DEFAULT_ACTIVATION_TOL)
}

/// The inclusion `F` constrained by the affine equalities that make the
/// pairing constant over each reducing candidate's gradient: for every
/// gradient vertex pair `(p_j, p_1)` the direction must satisfy
/// `(p_j - p_1) . [q; 1] = 0`.
#[derive(Debug, Clone)]
pub struct ReducedInclusion {
    pub base: Polytope,
    /// Equalities `a . q = b` in state coordinates.
    pub equalities: Vec<(Vec<f64>, f64)>,
}

impl ReducedInclusion {
    fn lambda_constraints(&self) -> Vec<Constraint> {
        let nv = self.base.vertices().len();
        let mut constraints = Vec::with_capacity(self.equalities.len() + 1);
        constraints.push(Constraint {
            coeffs: vec![1.0; nv],
            kind: ConstraintKind::Eq,
            rhs: 1.0,
        });
        for (a, b) in &self.equalities {
            let coeffs = self
                .base
                .vertices()
                .iter()
                .map(|v| a.iter().zip(v).map(|(ac, vc)| ac * vc).sum::<f64>())
                .collect();
            constraints.push(Constraint {
                coeffs,
                kind: ConstraintKind::Eq,
                rhs: *b,
            });
        }
        constraints
    }

    /// True if no point of the base hull satisfies the equalities.
    pub fn is_empty(&self) -> bool {
        let nv = self.base.vertices().len();
        matches!(
            hull::simplex_minimize(&vec![0.0; nv], &self.lambda_constraints()),
            LpOutcome::Infeasible
        )
    }

    /// Maximum of `l . q` over the reduced set; `None` when empty.
    pub fn max_linear(&self, l: &[f64]) -> Result<Option<f64>, LyapError> {
        if l.len() != self.base.dim() {
            return Err(LyapError::DimensionMismatch {
                expected: self.base.dim(),
                got: l.len(),
            });
        }
        let objective: Vec<f64> = self
            .base
            .vertices()
            .iter()
            .map(|v| -l.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        match hull::simplex_minimize(&objective, &self.lambda_constraints()) {
            LpOutcome::Optimal { value, .. } => Ok(Some(-value)),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(LyapError::Hull(HullError::Unbounded)),
        }
    }

    /// Minimum of `l . q` over the reduced set; `None` when empty.
    pub fn min_linear(&self, l: &[f64]) -> Result<Option<f64>, LyapError> {
        let neg: Vec<f64> = l.iter().map(|c| -c).collect();
        Ok(self.max_linear(&neg)?.map(|v| -v))
    }
}

/// Builds the reduced inclusion from a family of reducing candidates.
pub fn reduce_inclusion(
    family: &[&LyapunovCandidate],
    f: &Polytope,
    x: &[f64],
    t: f64,
    activation_tol: f64,
) -> Result<ReducedInclusion, LyapError> {
    let mut equalities = Vec::new();
    for candidate in family {
        check_dims(candidate, f)?;
        let gradient = clarke_gradient(candidate, x, t, activation_tol)?;
        let verts = gradient.vertices();
        let first = &verts[0];
        for p in &verts[1..] {
            // (p - first) . [q; 1] = 0  <=>  a . q = b with the time
            // component moved to the right-hand side.
            let n = f.dim();
            let a: Vec<f64> = (0..n).map(|i| p[i] - first[i]).collect();
            let b = -(p[n] - first[n]);
            if a.iter().all(|c| c.abs() <= 1e-15) && b.abs() <= 1e-15 {
                continue;
            }
            equalities.push((a, b));
        }
    }
    Ok(ReducedInclusion {
        base: f.clone(),
        equalities,
    })
}

/// Reduced generalized derivative value; the sentinel is an explicit tagged
/// state, never a float encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReducedDerivative {
    Value(f64),
    /// The reduced inclusion is empty at this point.
    NegInfinity,
}

impl ReducedDerivative {
    pub fn satisfies(&self, bound: f64, tol: f64) -> bool {
        match self {
            ReducedDerivative::Value(v) => *v <= bound + tol,
            ReducedDerivative::NegInfinity => true,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            ReducedDerivative::Value(v) => *v,
            ReducedDerivative::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

/// Min-max derivative over the reduced inclusion.
///
/// The bilinear game `min_p max_{q in F~}` equals `max_{q in F~} min_j` over
/// the gradient vertices, which is one linear program in the hull weights of
/// `F` with the reduction equalities attached: maximize `w` subject to
/// `w <= sum_i lambda_i p_j . [v_i; 1]` for every gradient vertex `p_j`.
pub fn gen_deriv_reduced(
    candidate: &LyapunovCandidate,
    family: &[&LyapunovCandidate],
    f: &Polytope,
    x: &[f64],
    t: f64,
    activation_tol: f64,
) -> Result<ReducedDerivative, LyapError> {
    check_dims(candidate, f)?;
    let reduced = reduce_inclusion(family, f, x, t, activation_tol)?;
    let gradient = clarke_gradient(candidate, x, t, activation_tol)?;
    let lifted = lift(f);

    let nv = f.vertices().len();
    // Variables: lambda_1..lambda_nv, w_plus, w_minus.
    let mut constraints: Vec<Constraint> = reduced
        .lambda_constraints()
        .into_iter()
        .map(|mut c| {
            c.coeffs.extend_from_slice(&[0.0, 0.0]);
            c
        })
        .collect();
    for p in gradient.vertices() {
        let mut coeffs: Vec<f64> = lifted
            .vertices()
            .iter()
            .map(|v| -p.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        coeffs.extend_from_slice(&[1.0, -1.0]);
        constraints.push(Constraint {
            coeffs,
            kind: ConstraintKind::Le,
            rhs: 0.0,
        });
    }
    let mut objective = vec![0.0; nv];
    objective.extend_from_slice(&[-1.0, 1.0]);

    match hull::simplex_minimize(&objective, &constraints) {
        LpOutcome::Optimal { value, .. } => Ok(ReducedDerivative::Value(-value)),
        LpOutcome::Infeasible => Ok(ReducedDerivative::NegInfinity),
        LpOutcome::Unbounded => Err(LyapError::Hull(HullError::Unbounded)),
    }
}

/// Polytope-valued inclusion map `(x, t) -> F(x, t)`.
pub type InclusionMap = Arc<dyn Fn(&[f64], f64) -> Result<Polytope, LyapError> + Send + Sync>;

#[derive(Debug, Clone)]
pub struct PointFailure {
    pub subsystem: String,
    pub grid_index: usize,
    pub x: Vec<f64>,
    pub t: f64,
    /// Derivative value in the selected mode.
    pub value: f64,
    /// The decay bound `-W(x)` the value was checked against.
    pub bound: f64,
    /// `bound - value`; negative on failures.
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct SubsystemVerdict {
    pub name: String,
    pub passes: usize,
    pub failures: usize,
    /// Most negative margin over the grid (first grid point on ties).
    pub worst_margin: f64,
    pub worst_index: usize,
    pub worst_x: Vec<f64>,
    pub worst_t: f64,
}

impl SubsystemVerdict {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct CertificationReport {
    pub mode: Mode,
    pub tol: f64,
    pub grid_len: usize,
    pub subsystems: Vec<SubsystemVerdict>,
    /// Verdict for the union hull of all subsystem inclusions.
    pub union: SubsystemVerdict,
    /// Every failing (point, subsystem) pair, in grid order.
    pub failures: Vec<PointFailure>,
    /// Set when the lower mode is used with a non-regular candidate.
    pub regular_warning: bool,
}

impl CertificationReport {
    /// Grid certification samples finitely many points; it is evidence, not
    /// a proof, and this note travels with every report.
    pub const EMPIRICAL_NOTE: &'static str =
        "grid-empirical certification: checks sampled points only, not a proof";

    pub fn all_passed(&self) -> bool {
        self.union.passed() && self.subsystems.iter().all(|s| s.passed())
    }
}

struct PointOutcome {
    /// Value per subsystem, then the union value last.
    values: Vec<f64>,
    bound: f64,
}

/// Certifies the non-strict decay condition `derivative <= -W(x) + tol` at
/// every grid point, per subsystem and for the union hull of the family.
///
/// Grid points are evaluated concurrently (`threads == 0` uses all cores);
/// aggregation is deterministic in grid order.
pub fn certify(
    candidate: &LyapunovCandidate,
    subfamilies: &[(String, InclusionMap)],
    grid: &[(Vec<f64>, f64)],
    mode: Mode,
    tol: f64,
    threads: usize,
) -> Result<CertificationReport, LyapError> {
    if subfamilies.is_empty() {
        return Err(LyapError::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let regular_warning = mode == Mode::Lower && !candidate.regular();

    let outcomes: Vec<Result<PointOutcome, LyapError>> =
        parallel::map_indexed(grid.len(), threads, |idx| {
            let (x, t) = &grid[idx];
            let run = || -> Result<PointOutcome, LyapError> {
                let bound = -candidate.w_decay(x);
                let mut parts = Vec::with_capacity(subfamilies.len());
                for (_, map) in subfamilies {
                    parts.push(map(x, *t)?);
                }
                let union = hull::union_hull(&parts)?;
                let mut values = Vec::with_capacity(parts.len() + 1);
                for f in parts.iter().chain(std::iter::once(&union)) {
                    let value = match mode {
                        Mode::Upper => {
                            evaluate_derivative(candidate, f, x, *t, DEFAULT_ACTIVATION_TOL)?.upper
                        }
                        Mode::Lower => {
                            evaluate_derivative(candidate, f, x, *t, DEFAULT_ACTIVATION_TOL)?.lower
                        }
                        Mode::Reduced => gen_deriv_reduced(
                            candidate,
                            &[candidate],
                            f,
                            x,
                            *t,
                            DEFAULT_ACTIVATION_TOL,
                        )?
                        .as_f64(),
                    };
                    values.push(value);
                }
                Ok(PointOutcome { values, bound })
            };
            run().map_err(|e| LyapError::AtGridPoint {
                index: idx,
                x: x.clone(),
                t: *t,
                source: Box::new(e),
            })
        });

    let names: Vec<String> = subfamilies
        .iter()
        .map(|(n, _)| n.clone())
        .chain(std::iter::once("union".to_string()))
        .collect();
    let mut verdicts: Vec<SubsystemVerdict> = names
        .iter()
        .map(|n| SubsystemVerdict {
            name: n.clone(),
            passes: 0,
            failures: 0,
            worst_margin: f64::INFINITY,
            worst_index: 0,
            worst_x: Vec::new(),
            worst_t: 0.0,
        })
        .collect();
    let mut failures = Vec::new();

    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        let (x, t) = &grid[idx];
        for (k, &value) in outcome.values.iter().enumerate() {
            let margin = outcome.bound - value;
            let verdict = &mut verdicts[k];
            if margin < verdict.worst_margin {
                verdict.worst_margin = margin;
                verdict.worst_index = idx;
                verdict.worst_x = x.clone();
                verdict.worst_t = *t;
            }
            if value <= outcome.bound + tol {
                verdict.passes += 1;
            } else {
                verdict.failures += 1;
                failures.push(PointFailure {
                    subsystem: names[k].clone(),
                    grid_index: idx,
                    x: x.clone(),
                    t: *t,
                    value,
                    bound: outcome.bound,
                    margin,
                });
            }
        }
    }

    let union = verdicts.pop().expect("union verdict present");
    Ok(CertificationReport {
        mode,
        tol,
        grid_len: grid.len(),
        subsystems: verdicts,
        union,
        failures,
        regular_warning,
    })
}

/// Cartesian grid over state axes at a fixed time. Each axis is
/// `(min, max, count)`; a single-count axis collapses to its minimum.
pub fn grid_points(axes: &[(f64, f64, usize)], t: f64) -> Vec<(Vec<f64>, f64)> {
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for &(lo, hi, count) in axes {
        let mut next = Vec::with_capacity(points.len() * count.max(1));
        for base in &points {
            for k in 0..count.max(1) {
                let coord = if count <= 1 {
                    lo
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                };
                let mut p = base.clone();
                p.push(coord);
                next.push(p);
            }
        }
        points = next;
    }
    points.into_iter().map(|p| (p, t)).collect()
}
