//! Vector fields, switching signals, switched assembly, and numerical
//! regularization of discontinuous right-hand sides.
//!
//! A [`PiecewiseField`] is a finite list of smooth pieces with region
//! predicates plus user-declared measure-zero discontinuity loci. Switched
//! systems are assembled from an indexed [`FieldFamily`] and a
//! [`SwitchingSignal`]; the assembled field dispatches through the signal at
//! evaluation time, so countably infinite families work too.
//!
//! Two sampling estimators approximate the regularized inclusions at a point:
//! [`krasovskii_estimate`] hulls field values over a sampled ball (center
//! always included), while [`filippov_estimate`] excludes the declared null
//! sets and never adds the center on its own. The outer intersection over
//! shrinking balls is approximated by evaluating at the smallest radius of a
//! schedule; the hulls are nested in the radius, so the smallest radius is
//! the tightest available surrogate. [`regularization_diagnostic`] reports
//! hull diameter against the radius so convergence is visible.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::hull::{self, HullError, Polytope};
use crate::rng::{weyl_ball_points, Rng};

pub type RegionFn = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;
pub type NullSetFn = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;
pub type ActiveTestFn = Arc<dyn Fn(&[f64], f64, f64) -> bool + Send + Sync>;

#[derive(Debug, Clone, Error)]
pub enum FieldError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coverage violated: no piece active at x = {x:?}, t = {t}")]
    Coverage { x: Vec<f64>, t: f64 },
    #[error("switching signal returned unknown index {index} at x = {x:?}, t = {t}")]
    UnknownIndex { x: Vec<f64>, t: f64, index: usize },
    #[error("null-set predicate not measure-zero ({hit_fraction:.1}% of draws rejected)")]
    NullSetNotNull { hit_fraction: f64 },
    #[error("field value non-finite or wrong length at x = {x:?}, t = {t}")]
    BadFieldValue { x: Vec<f64>, t: f64 },
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// A field that is continuous in the state and measurable in time.
#[derive(Clone)]
pub struct SmoothField {
    dim_state: usize,
    eval: Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>,
}

impl SmoothField {
    pub fn new<F>(dim_state: usize, eval: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        SmoothField {
            dim_state,
            eval: Arc::new(eval),
        }
    }

    pub fn constant(value: Vec<f64>) -> Self {
        let dim = value.len();
        SmoothField::new(dim, move |_, _| value.clone())
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.eval)(x, t)
    }
}

#[derive(Clone)]
enum PieceBody {
    Smooth(SmoothField),
    /// Evaluates `subfields[rho(x, t)]`; installed by [`assemble_switched`].
    Dispatch {
        family: FieldFamily,
        rho: SwitchingSignal,
    },
}

/// One region of a piecewise field.
#[derive(Clone)]
pub struct Piece {
    region: RegionFn,
    body: PieceBody,
    active_test: Option<ActiveTestFn>,
}

impl Piece {
    pub fn new<R>(region: R, field: SmoothField) -> Self
    where
        R: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        Piece {
            region: Arc::new(region),
            body: PieceBody::Smooth(field),
            active_test: None,
        }
    }

    /// Overrides the default "essentially active" probe used by the analytic
    /// regularization.
    pub fn with_active_test<F>(mut self, test: F) -> Self
    where
        F: Fn(&[f64], f64, f64) -> bool + Send + Sync + 'static,
    {
        self.active_test = Some(Arc::new(test));
        self
    }
}

/// A finite family of smooth pieces with declared discontinuity loci.
#[derive(Clone)]
pub struct PiecewiseField {
    dim_state: usize,
    pieces: Vec<Piece>,
    null_sets: Vec<NullSetFn>,
    local_bound: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl PiecewiseField {
    pub fn new(dim_state: usize, pieces: Vec<Piece>) -> Result<Self, FieldError> {
        if dim_state == 0 {
            return Err(FieldError::InvalidParameter(
                "dim_state must be positive".into(),
            ));
        }
        if pieces.is_empty() {
            return Err(FieldError::InvalidParameter(
                "at least one piece required".into(),
            ));
        }
        Ok(PiecewiseField {
            dim_state,
            pieces,
            null_sets: Vec::new(),
            local_bound: None,
        })
    }

    /// A field with a single piece active everywhere.
    pub fn single(field: SmoothField) -> Self {
        let dim = field.dim_state();
        PiecewiseField {
            dim_state: dim,
            pieces: vec![Piece {
                region: Arc::new(|_, _| true),
                body: PieceBody::Smooth(field),
                active_test: None,
            }],
            null_sets: Vec::new(),
            local_bound: None,
        }
    }

    pub fn with_null_set<F>(mut self, predicate: F) -> Self
    where
        F: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        self.null_sets.push(Arc::new(predicate));
        self
    }

    pub fn with_null_sets(mut self, predicates: Vec<NullSetFn>) -> Self {
        self.null_sets.extend(predicates);
        self
    }

    /// Declares `M(K)` bounding the field norm over the closed ball of the
    /// given radius.
    pub fn with_local_bound<F>(mut self, bound: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.local_bound = Some(Arc::new(bound));
        self
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn null_sets(&self) -> &[NullSetFn] {
        &self.null_sets
    }

    pub fn local_bound(&self, radius: f64) -> Option<f64> {
        self.local_bound.as_ref().map(|b| b(radius))
    }

    fn hits_null_set(&self, x: &[f64], t: f64) -> bool {
        self.null_sets.iter().any(|p| p(x, t))
    }

    /// Field value at `(x, t)`: the first piece whose region holds.
    pub fn eval(&self, x: &[f64], t: f64) -> Result<Vec<f64>, FieldError> {
        for piece in &self.pieces {
            if (piece.region)(x, t) {
                let value = match &piece.body {
                    PieceBody::Smooth(f) => f.eval(x, t),
                    PieceBody::Dispatch { family, rho } => {
                        let sigma = rho.eval(x, t);
                        let sub = family.subfield(sigma).ok_or(FieldError::UnknownIndex {
                            x: x.to_vec(),
                            t,
                            index: sigma,
                        })?;
                        sub.eval(x, t)?
                    }
                };
                if value.len() != self.dim_state || value.iter().any(|c| !c.is_finite()) {
                    return Err(FieldError::BadFieldValue { x: x.to_vec(), t });
                }
                return Ok(value);
            }
        }
        Err(FieldError::Coverage { x: x.to_vec(), t })
    }

    /// Discrete label for event detection: the active piece index, or the
    /// switching index for assembled fields.
    pub fn discrete_state(&self, x: &[f64], t: f64) -> Result<u64, FieldError> {
        for (i, piece) in self.pieces.iter().enumerate() {
            if (piece.region)(x, t) {
                return Ok(match &piece.body {
                    PieceBody::Smooth(_) => i as u64,
                    PieceBody::Dispatch { rho, .. } => (1 << 32) + rho.eval(x, t) as u64,
                });
            }
        }
        Err(FieldError::Coverage { x: x.to_vec(), t })
    }
}

/// Descriptor of the possible switching indices.
#[derive(Clone, Debug)]
pub enum IndexUniverse {
    Finite(Vec<usize>),
    Countable(String),
}

/// State- and time-dependent switching signal.
#[derive(Clone)]
pub struct SwitchingSignal {
    eval: Arc<dyn Fn(&[f64], f64) -> usize + Send + Sync>,
    pub index_universe: IndexUniverse,
    boundaries: Vec<NullSetFn>,
}

impl SwitchingSignal {
    pub fn new<F>(eval: F, index_universe: IndexUniverse) -> Self
    where
        F: Fn(&[f64], f64) -> usize + Send + Sync + 'static,
    {
        SwitchingSignal {
            eval: Arc::new(eval),
            index_universe,
            boundaries: Vec::new(),
        }
    }

    pub fn constant(sigma: usize) -> Self {
        SwitchingSignal::new(move |_, _| sigma, IndexUniverse::Finite(vec![sigma]))
    }

    /// Declares a switching surface as a measure-zero set; the assembled
    /// field inherits it as a null set.
    pub fn with_boundary<F>(mut self, predicate: F) -> Self
    where
        F: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
    {
        self.boundaries.push(Arc::new(predicate));
        self
    }

    pub fn eval(&self, x: &[f64], t: f64) -> usize {
        (self.eval)(x, t)
    }
}

/// Indexed family of subsystem fields; finite or generated on demand.
#[derive(Clone)]
pub enum FieldFamily {
    Finite(BTreeMap<usize, Arc<PiecewiseField>>),
    Generated {
        dim_state: usize,
        generator: Arc<dyn Fn(usize) -> Option<Arc<PiecewiseField>> + Send + Sync>,
    },
}

impl FieldFamily {
    pub fn finite(map: BTreeMap<usize, Arc<PiecewiseField>>) -> Result<Self, FieldError> {
        let Some(first) = map.values().next() else {
            return Err(FieldError::InvalidParameter(
                "family must be nonempty".into(),
            ));
        };
        let dim = first.dim_state();
        if map.values().any(|f| f.dim_state() != dim) {
            return Err(FieldError::InvalidParameter(
                "family members must share dim_state".into(),
            ));
        }
        Ok(FieldFamily::Finite(map))
    }

    pub fn generated<F>(dim_state: usize, generator: F) -> Self
    where
        F: Fn(usize) -> Option<Arc<PiecewiseField>> + Send + Sync + 'static,
    {
        FieldFamily::Generated {
            dim_state,
            generator: Arc::new(generator),
        }
    }

    pub fn dim_state(&self) -> usize {
        match self {
            FieldFamily::Finite(map) => map.values().next().map(|f| f.dim_state()).unwrap_or(0),
            FieldFamily::Generated { dim_state, .. } => *dim_state,
        }
    }

    pub fn subfield(&self, index: usize) -> Option<Arc<PiecewiseField>> {
        match self {
            FieldFamily::Finite(map) => map.get(&index).cloned(),
            FieldFamily::Generated { generator, .. } => generator(index),
        }
    }

    /// Index list for finite families; `None` for generated ones.
    pub fn known_indices(&self) -> Option<Vec<usize>> {
        match self {
            FieldFamily::Finite(map) => Some(map.keys().copied().collect()),
            FieldFamily::Generated { .. } => None,
        }
    }
}

/// The switched field `f(x, t) = f_{rho(x, t)}(x, t)`.
///
/// The result dispatches through `rho` at evaluation time. Its null sets are
/// the union of the subfields' null sets (for finite families) plus the
/// declared switching boundaries of `rho`.
pub fn assemble_switched(
    family: &FieldFamily,
    rho: &SwitchingSignal,
) -> Result<PiecewiseField, FieldError> {
    let dim = family.dim_state();
    if dim == 0 {
        return Err(FieldError::InvalidParameter(
            "family must be nonempty".into(),
        ));
    }
    let mut null_sets: Vec<NullSetFn> = Vec::new();
    if let FieldFamily::Finite(map) = family {
        for sub in map.values() {
            null_sets.extend(sub.null_sets.iter().cloned());
        }
    }
    null_sets.extend(rho.boundaries.iter().cloned());

    Ok(PiecewiseField {
        dim_state: dim,
        pieces: vec![Piece {
            region: Arc::new(|_, _| true),
            body: PieceBody::Dispatch {
                family: family.clone(),
                rho: rho.clone(),
            },
            active_test: None,
        }],
        null_sets,
        local_bound: None,
    })
}

fn validate_sampling(x: &[f64], delta: f64, n_samples: usize) -> Result<(), FieldError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(FieldError::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if n_samples == 0 {
        return Err(FieldError::InvalidParameter(
            "n_samples must be at least 1".into(),
        ));
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(FieldError::InvalidParameter(
            "non-finite evaluation point".into(),
        ));
    }
    Ok(())
}

fn dedup_bitwise(vertices: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    vertices
        .into_iter()
        .filter(|v| seen.insert(v.iter().map(|c| c.to_bits()).collect::<Vec<u64>>()))
        .collect()
}

/// Sampled Krasovskii hull at `(x, t)`: the convex hull of field values over
/// a uniformly sampled ball of radius `delta`, with the center value always
/// included.
pub fn krasovskii_estimate(
    field: &PiecewiseField,
    x: &[f64],
    t: f64,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Polytope, FieldError> {
    validate_sampling(x, delta, n_samples)?;
    let mut rng = Rng::new(seed);
    let mut vertices = Vec::with_capacity(n_samples + 1);
    for _ in 0..n_samples {
        let y = rng.ball_point(x, delta);
        vertices.push(field.eval(&y, t)?);
    }
    vertices.push(field.eval(x, t)?);
    Ok(Polytope::new(field.dim_state, dedup_bitwise(vertices))?)
}

/// Sampled Filippov hull at `(x, t)`: like [`krasovskii_estimate`] but the
/// center is not automatically included, and samples landing on a declared
/// null set are rejected and redrawn (up to 100 redraws each). Rejection of
/// more than half of all draws means the declared set cannot be measure-zero
/// and is reported as an error.
pub fn filippov_estimate(
    field: &PiecewiseField,
    x: &[f64],
    t: f64,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Polytope, FieldError> {
    validate_sampling(x, delta, n_samples)?;
    let mut rng = Rng::new(seed);
    let mut vertices = Vec::with_capacity(n_samples);
    let mut hits = 0usize;
    let mut draws = 0usize;
    for _ in 0..n_samples {
        let mut accepted = None;
        for _ in 0..100 {
            let y = rng.ball_point(x, delta);
            draws += 1;
            if field.hits_null_set(&y, t) {
                hits += 1;
            } else {
                accepted = Some(y);
                break;
            }
        }
        let Some(y) = accepted else {
            return Err(FieldError::NullSetNotNull {
                hit_fraction: 100.0,
            });
        };
        vertices.push(field.eval(&y, t)?);
    }
    if 2 * hits > draws {
        return Err(FieldError::NullSetNotNull {
            hit_fraction: 100.0 * hits as f64 / draws as f64,
        });
    }
    Ok(Polytope::new(field.dim_state, dedup_bitwise(vertices))?)
}

/// Number of probe points for the default "essentially active" test.
const ACTIVITY_PROBES: usize = 64;

fn essentially_active(
    field: &PiecewiseField,
    piece: &Piece,
    x: &[f64],
    t: f64,
    delta: f64,
    probes: &[Vec<f64>],
) -> bool {
    if let Some(test) = &piece.active_test {
        return test(x, t, delta);
    }
    probes
        .iter()
        .any(|p| !field.hits_null_set(p, t) && (piece.region)(p, t))
}

/// Exact-mode regularization: the hull of active-piece values at the point.
///
/// A piece counts as essentially active when its region contains points of
/// `B(x, delta/2)` off all declared null sets, probed with 64 deterministic
/// low-discrepancy samples (pieces may supply their own test). For fields
/// whose pieces are continuous this matches both regularizations where they
/// coincide; for assembled switched fields the dispatch piece expands into
/// the union hull over the switching indices attained on the probe set,
/// which upper-bounds the regularization of the assembled field.
pub fn analytic_regularization(
    field: &PiecewiseField,
    x: &[f64],
    t: f64,
    delta: f64,
) -> Result<Polytope, FieldError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(FieldError::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let probes = weyl_ball_points(x, delta / 2.0, ACTIVITY_PROBES);
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for piece in &field.pieces {
        if !essentially_active(field, piece, x, t, delta, &probes) {
            continue;
        }
        match &piece.body {
            PieceBody::Smooth(f) => {
                let v = f.eval(x, t);
                if v.len() != field.dim_state || v.iter().any(|c| !c.is_finite()) {
                    return Err(FieldError::BadFieldValue { x: x.to_vec(), t });
                }
                vertices.push(v);
            }
            PieceBody::Dispatch { family, rho } => {
                let mut attained = BTreeSet::new();
                attained.insert(rho.eval(x, t));
                for p in &probes {
                    if !field.hits_null_set(p, t) {
                        attained.insert(rho.eval(p, t));
                    }
                }
                for sigma in attained {
                    let sub = family.subfield(sigma).ok_or(FieldError::UnknownIndex {
                        x: x.to_vec(),
                        t,
                        index: sigma,
                    })?;
                    let hull = analytic_regularization(&sub, x, t, delta)?;
                    vertices.extend(hull.into_vertices());
                }
            }
        }
    }
    if vertices.is_empty() {
        return Err(FieldError::Coverage { x: x.to_vec(), t });
    }
    Ok(Polytope::new(field.dim_state, dedup_bitwise(vertices))?)
}

/// Which regularization the containment check runs with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularization {
    Krasovskii,
    Filippov,
}

/// Ratio between the attained-index probe radius and the radius at which the
/// hulls themselves are estimated. The regularized sets are intersections
/// over shrinking balls, so both sides of the containment are evaluated at
/// this much smaller surrogate radius while the switching indices are
/// collected on the full ball.
pub const CONTAINMENT_DELTA_RATIO: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ContainmentReport {
    /// Whether the assembled hull fits inside the union hull within `tol`.
    pub holds: bool,
    /// Smallest inflation of the union hull that covers the assembled hull.
    pub inflation_needed: f64,
    /// Switching indices attained on the sampled ball `B(x, delta)`.
    pub attained: Vec<usize>,
    /// Radius at which both hulls were estimated.
    pub estimation_delta: f64,
    /// Hull estimate for the assembled switched field.
    pub assembled: Polytope,
    /// Union hull of the attained subsystem estimates.
    pub union: Polytope,
}

/// Checks whether the regularization of the assembled switched field is
/// contained in the closed convex hull of the attained subsystems'
/// regularizations at `(x, t)`.
///
/// Attained indices are collected from `n_samples` draws on `B(x, delta)`
/// plus the center. Both the assembled hull and each subsystem hull are then
/// estimated at the surrogate radius `delta * CONTAINMENT_DELTA_RATIO` with
/// the same seed, so all estimates share their sample points. The check is
/// empirical; with a switching signal that attains infinitely many indices
/// near `x` it can legitimately fail.
#[allow(clippy::too_many_arguments)]
pub fn containment_check(
    family: &FieldFamily,
    rho: &SwitchingSignal,
    x: &[f64],
    t: f64,
    delta: f64,
    n_samples: usize,
    tol: f64,
    seed: u64,
    kind: Regularization,
) -> Result<ContainmentReport, FieldError> {
    validate_sampling(x, delta, n_samples)?;
    if tol < 0.0 {
        return Err(FieldError::InvalidParameter(format!(
            "tol must be nonnegative, got {tol}"
        )));
    }
    let assembled_field = assemble_switched(family, rho)?;

    let mut attained = BTreeSet::new();
    attained.insert(rho.eval(x, t));
    let mut rng = Rng::new(seed);
    for _ in 0..n_samples {
        let y = rng.ball_point(x, delta);
        attained.insert(rho.eval(&y, t));
    }

    let est_delta = delta * CONTAINMENT_DELTA_RATIO;
    let estimate = |f: &PiecewiseField| -> Result<Polytope, FieldError> {
        match kind {
            Regularization::Krasovskii => krasovskii_estimate(f, x, t, est_delta, n_samples, seed),
            Regularization::Filippov => filippov_estimate(f, x, t, est_delta, n_samples, seed),
        }
    };

    let assembled = estimate(&assembled_field)?;
    let mut parts = Vec::with_capacity(attained.len());
    for &sigma in &attained {
        let sub = family.subfield(sigma).ok_or(FieldError::UnknownIndex {
            x: x.to_vec(),
            t,
            index: sigma,
        })?;
        parts.push(estimate(&sub)?);
    }
    let union = hull::union_hull(&parts)?;

    // Shared sample points make most assembled vertices bitwise equal to a
    // union vertex; those have distance zero without a projection solve.
    let union_bits: std::collections::HashSet<Vec<u64>> = union
        .vertices()
        .iter()
        .map(|v| v.iter().map(|c| c.to_bits()).collect())
        .collect();
    let mut inflation = 0.0f64;
    for v in assembled.vertices() {
        let bits: Vec<u64> = v.iter().map(|c| c.to_bits()).collect();
        if union_bits.contains(&bits) {
            continue;
        }
        inflation = inflation.max(hull::distance_to_hull(&union, v)?);
    }
    let holds = inflation <= tol;

    Ok(ContainmentReport {
        holds,
        inflation_needed: inflation,
        attained: attained.into_iter().collect(),
        estimation_delta: est_delta,
        assembled,
        union,
    })
}

/// Hull diameter of the estimate at each radius of a decreasing schedule.
/// Shrinking diameters indicate convergence of the regularization estimate.
pub fn regularization_diagnostic(
    field: &PiecewiseField,
    x: &[f64],
    t: f64,
    deltas: &[f64],
    n_samples: usize,
    seed: u64,
    kind: Regularization,
) -> Result<Vec<(f64, f64)>, FieldError> {
    let mut out = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let p = match kind {
            Regularization::Krasovskii => krasovskii_estimate(field, x, t, d, n_samples, seed)?,
            Regularization::Filippov => filippov_estimate(field, x, t, d, n_samples, seed)?,
        };
        out.push((d, p.diameter()));
    }
    Ok(out)
}

/// Default cap on the distinct-index count before a radius is flagged.
pub const DEFAULT_INDEX_CAP: usize = 64;

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// `(delta, distinct index count)` per probed radius.
    pub per_delta: Vec<(f64, usize)>,
    /// Largest radius whose count stayed below the cap, if any.
    pub finite_at: Option<f64>,
    pub cap: usize,
}

impl AssumptionReport {
    /// True when no probed radius had a bounded index count. Empirical
    /// evidence of a local-finiteness violation, not a proof.
    pub fn likely_violation(&self) -> bool {
        self.finite_at.is_none()
    }
}

/// Probes local finiteness of the switching signal around `x`.
///
/// For each radius the signal is sampled over the ball; half the samples are
/// drawn uniformly and half with logarithmically spread radii so that
/// signals whose index count diverges at small scales (a new index on every
/// dyadic shell, say) visibly exceed the cap. The verdict is empirical, not
/// a proof: `n_samples` should comfortably exceed `cap` for the count to be
/// meaningful.
pub fn assumption_probe(
    rho: &SwitchingSignal,
    x: &[f64],
    t: f64,
    deltas: &[f64],
    n_samples: usize,
    cap: usize,
    seed: u64,
) -> Result<AssumptionReport, FieldError> {
    if deltas.is_empty() {
        return Err(FieldError::InvalidParameter(
            "delta schedule must be nonempty".into(),
        ));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(FieldError::InvalidParameter(
            "deltas must be positive".into(),
        ));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FieldError::InvalidParameter(
            "deltas must be strictly decreasing".into(),
        ));
    }

    let n = x.len();
    let mut per_delta = Vec::with_capacity(deltas.len());
    let mut finite_at = None;
    for &delta in deltas {
        let mut rng = Rng::new(seed);
        let mut indices = BTreeSet::new();
        indices.insert(rho.eval(x, t));
        for k in 0..n_samples {
            let y = if k % 2 == 0 {
                rng.ball_point(x, delta)
            } else {
                // Log-spread radius over ~120 octaves to expose scale
                // cascades that uniform sampling cannot resolve.
                let r = delta * 2.0_f64.powf(-120.0 * rng.uniform());
                let mut dir = vec![0.0; n];
                let mut norm_sq = 0.0;
                for d in dir.iter_mut() {
                    *d = rng.normal();
                    norm_sq += *d * *d;
                }
                let norm = norm_sq.sqrt().max(1e-300);
                x.iter().zip(&dir).map(|(c, d)| c + r * d / norm).collect()
            };
            indices.insert(rho.eval(&y, t));
        }
        per_delta.push((delta, indices.len()));
        if indices.len() < cap && finite_at.is_none() {
            finite_at = Some(delta);
        }
    }
    Ok(AssumptionReport {
        per_delta,
        finite_at,
        cap,
    })
}
