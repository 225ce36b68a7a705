//! Piecewise-C¹ Lyapunov candidates and their Clarke gradients.
//!
//! A candidate carries its pieces as (margin, value, gradient) triples: the
//! margin function is nonpositive where the piece is active and grows with
//! the distance to the piece's region, so "active within a tolerance" is a
//! plain comparison. Gradients live in `R^{n+1}` — state gradient with the
//! time partial appended — matching the lifted pairing used by the
//! generalized derivatives.
//!
//! The Clarke gradient is computed as the hull of active-piece gradients.
//! This is exact for max-type candidates and candidates with piecewise
//! affine boundaries; for general Lipschitz functions it is an upper
//! approximation.

use std::sync::Arc;

use thiserror::Error;

use crate::hull::{HullError, Polytope};

pub type MarginFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
pub type StateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Default activation tolerance, in region-margin units.
pub const DEFAULT_ACTIVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum NonsmoothError {
    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),
    #[error("coverage violated: no piece active at x = {x:?}, t = {t}")]
    Coverage { x: Vec<f64>, t: f64 },
    #[error("gradient has wrong length at x = {x:?}, t = {t} (expected {expected})")]
    BadGradient {
        x: Vec<f64>,
        t: f64,
        expected: usize,
    },
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// One C¹ piece of a candidate.
#[derive(Clone)]
pub struct CandidatePiece {
    /// Nonpositive where the piece is active; compared against the
    /// activation tolerance.
    pub margin: MarginFn,
    pub value: ValueFn,
    /// Gradient in `R^{n+1}`: state gradient followed by the time partial.
    pub gradient: GradientFn,
}

impl CandidatePiece {
    pub fn new<M, V, G>(margin: M, value: V, gradient: G) -> Self
    where
        M: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        V: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        CandidatePiece {
            margin: Arc::new(margin),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

/// Piecewise-C¹ candidate Lyapunov function with comparison bounds.
///
/// `w_lower` and `w_upper` are the continuous positive definite functions
/// sandwiching the candidate; `w_decay` is the continuous positive
/// semidefinite decay bound checked by the certification routines.
#[derive(Clone)]
pub struct LyapunovCandidate {
    dim_state: usize,
    pieces: Vec<CandidatePiece>,
    regular: bool,
    w_lower: StateFn,
    w_upper: StateFn,
    w_decay: StateFn,
}

impl LyapunovCandidate {
    pub fn new<WL, WU, WD>(
        dim_state: usize,
        pieces: Vec<CandidatePiece>,
        regular: bool,
        w_lower: WL,
        w_upper: WU,
        w_decay: WD,
    ) -> Result<Self, NonsmoothError>
    where
        WL: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        WU: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        WD: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim_state == 0 {
            return Err(NonsmoothError::InvalidCandidate(
                "dim_state must be positive".into(),
            ));
        }
        if pieces.is_empty() {
            return Err(NonsmoothError::InvalidCandidate(
                "at least one piece required".into(),
            ));
        }
        Ok(LyapunovCandidate {
            dim_state,
            pieces,
            regular,
            w_lower: Arc::new(w_lower),
            w_upper: Arc::new(w_upper),
            w_decay: Arc::new(w_decay),
        })
    }

    /// A single-piece C¹ candidate; smooth functions are regular.
    pub fn smooth<V, G, WL, WU, WD>(
        dim_state: usize,
        value: V,
        gradient: G,
        w_lower: WL,
        w_upper: WU,
        w_decay: WD,
    ) -> Result<Self, NonsmoothError>
    where
        V: Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        WL: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        WU: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        WD: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        LyapunovCandidate::new(
            dim_state,
            vec![CandidatePiece::new(|_, _| -1.0, value, gradient)],
            true,
            w_lower,
            w_upper,
            w_decay,
        )
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn regular(&self) -> bool {
        self.regular
    }

    pub fn w_lower(&self, x: &[f64]) -> f64 {
        (self.w_lower)(x)
    }

    pub fn w_upper(&self, x: &[f64]) -> f64 {
        (self.w_upper)(x)
    }

    pub fn w_decay(&self, x: &[f64]) -> f64 {
        (self.w_decay)(x)
    }

    /// Indices of pieces whose margin is within `tol` of active.
    pub fn active_pieces(&self, x: &[f64], t: f64, tol: f64) -> Vec<usize> {
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.margin)(x, t) <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Candidate value at `(x, t)`, taken from the most interior piece.
    pub fn value(&self, x: &[f64], t: f64) -> Result<f64, NonsmoothError> {
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in self.pieces.iter().enumerate() {
            let m = (p.margin)(x, t);
            if best.map(|(bm, _)| m < bm).unwrap_or(true) {
                best = Some((m, i));
            }
        }
        match best {
            Some((m, i)) if m <= DEFAULT_ACTIVATION_TOL => Ok((self.pieces[i].value)(x, t)),
            _ => Err(NonsmoothError::Coverage { x: x.to_vec(), t }),
        }
    }
}

/// Clarke gradient at `(x, t)` as the hull of active-piece gradients, a
/// polytope in `R^{n+1}`.
pub fn clarke_gradient(
    candidate: &LyapunovCandidate,
    x: &[f64],
    t: f64,
    activation_tol: f64,
) -> Result<Polytope, NonsmoothError> {
    if activation_tol < 0.0 {
        return Err(NonsmoothError::InvalidCandidate(format!(
            "activation_tol must be nonnegative, got {activation_tol}"
        )));
    }
    let lifted = candidate.dim_state + 1;
    let mut gradients = Vec::new();
    for piece in &candidate.pieces {
        if (piece.margin)(x, t) <= activation_tol {
            let g = (piece.gradient)(x, t);
            if g.len() != lifted || g.iter().any(|c| !c.is_finite()) {
                return Err(NonsmoothError::BadGradient {
                    x: x.to_vec(),
                    t,
                    expected: lifted,
                });
            }
            gradients.push(g);
        }
    }
    if gradients.is_empty() {
        return Err(NonsmoothError::Coverage { x: x.to_vec(), t });
    }
    Ok(Polytope::new(lifted, gradients)?)
}

#[derive(Debug, Clone)]
pub struct BoundsViolation {
    pub x: Vec<f64>,
    pub t: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub checked: usize,
    pub violations: Vec<BoundsViolation>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies `w_lower(x) <= V(x, t) <= w_upper(x)` at every grid point
/// (tolerance 1e-12); violations are report content, not errors.
pub fn check_bounds(
    candidate: &LyapunovCandidate,
    grid: &[(Vec<f64>, f64)],
) -> Result<BoundsReport, NonsmoothError> {
    if grid.is_empty() {
        return Err(NonsmoothError::InvalidCandidate(
            "grid must be nonempty".into(),
        ));
    }
    let mut violations = Vec::new();
    for (x, t) in grid {
        let v = candidate.value(x, *t)?;
        let lo = candidate.w_lower(x);
        let hi = candidate.w_upper(x);
        if v < lo - 1e-12 || v > hi + 1e-12 {
            violations.push(BoundsViolation {
                x: x.clone(),
                t: *t,
                value: v,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(BoundsReport {
        checked: grid.len(),
        violations,
    })
}

/// The planar max-of-coordinates candidate used across the examples:
/// `V(x) = max(|x1|, |x2|)` with bounds `|x|_inf / 2` and `2 |x|_inf`, and
/// zero decay.
pub fn max_abs_candidate() -> LyapunovCandidate {
    let inf_norm = |x: &[f64]| x[0].abs().max(x[1].abs());
    LyapunovCandidate::new(
        2,
        vec![
            // Piece V = |x1|, active where |x1| >= |x2|.
            CandidatePiece::new(
                |x: &[f64], _| x[1].abs() - x[0].abs(),
                |x: &[f64], _| x[0].abs(),
                |x: &[f64], _| vec![sign(x[0]), 0.0, 0.0],
            ),
            // Piece V = |x2|, active where |x2| >= |x1|.
            CandidatePiece::new(
                |x: &[f64], _| x[0].abs() - x[1].abs(),
                |x: &[f64], _| x[1].abs(),
                |x: &[f64], _| vec![0.0, sign(x[1]), 0.0],
            ),
        ],
        true,
        move |x: &[f64]| 0.5 * inf_norm(x),
        move |x: &[f64]| 2.0 * inf_norm(x),
        |_: &[f64]| 0.0,
    )
    .expect("static candidate is valid")
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::{contains, hausdorff};
    use crate::rng::Rng;

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
    fn max_candidate_gradient_on_diagonal() {
        let v = max_abs_candidate();
        let g = clarke_gradient(&v, &[1.0, 1.0], 0.0, DEFAULT_ACTIVATION_TOL).unwrap();
        let expected = Polytope::new(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(hausdorff(&g, &expected).unwrap() <= 1e-12);
        // Hull property: the midpoint of the two piece gradients is inside.
        assert!(contains(&g, &[0.5, 0.5, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn max_candidate_gradient_off_diagonal() {
        let v = max_abs_candidate();
        let g = clarke_gradient(&v, &[2.0, 1.0], 0.0, DEFAULT_ACTIVATION_TOL).unwrap();
        assert_eq!(g.vertices(), &[vec![1.0, 0.0, 0.0]]);
        let g = clarke_gradient(&v, &[-0.5, 2.0], 0.0, DEFAULT_ACTIVATION_TOL).unwrap();
        assert_eq!(g.vertices(), &[vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn smooth_candidate_gradient_is_singleton_state_vector() {
        let v = quadratic_candidate(3);
        let z = [0.3, -1.2, 0.8];
        let g = clarke_gradient(&v, &z, 5.0, DEFAULT_ACTIVATION_TOL).unwrap();
        assert_eq!(g.vertices().len(), 1);
        assert_eq!(g.vertices()[0], vec![0.3, -1.2, 0.8, 0.0]);
    }

    #[test]
    fn smooth_gradient_matches_finite_differences() {
        let v = quadratic_candidate(4);
        let mut rng = Rng::new(9);
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).map(|_| 4.0 * rng.uniform() - 2.0).collect();
            let t = rng.uniform();
            let g = clarke_gradient(&v, &x, t, DEFAULT_ACTIVATION_TOL).unwrap();
            let grad = &g.vertices()[0];
            let h = 1e-6;
            for i in 0..4 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (v.value(&xp, t).unwrap() - v.value(&xm, t).unwrap()) / (2.0 * h);
                let denom = grad[i].abs().max(1e-3);
                assert!(
                    (fd - grad[i]).abs() / denom <= 1e-5,
                    "coord {i}: fd {fd} vs grad {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn time_invariant_candidates_have_zero_time_partial() {
        let v = max_abs_candidate();
        let mut rng = Rng::new(13);
        for _ in 0..50 {
            let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
            let g = clarke_gradient(&v, &x, rng.uniform(), DEFAULT_ACTIVATION_TOL).unwrap();
            for vert in g.vertices() {
                assert_eq!(vert[2], 0.0);
            }
        }
    }

    #[test]
    fn coverage_violation_reported() {
        let v = LyapunovCandidate::new(
            1,
            vec![CandidatePiece::new(
                |x: &[f64], _| 1.0 - x[0],
                |x: &[f64], _| x[0],
                |_: &[f64], _| vec![1.0, 0.0],
            )],
            true,
            |_: &[f64]| 0.0,
            |_: &[f64]| 1.0,
            |_: &[f64]| 0.0,
        )
        .unwrap();
        // Margin is positive below x = 1, so nothing is active at 0.
        assert!(matches!(
            clarke_gradient(&v, &[0.0], 0.0, DEFAULT_ACTIVATION_TOL),
            Err(NonsmoothError::Coverage { .. })
        ));
    }

    #[test]
    fn bounds_check_passes_for_exact_sandwich() {
        let v = quadratic_candidate(2);
        let grid: Vec<(Vec<f64>, f64)> = (0..20)
            .map(|i| (vec![i as f64 * 0.1 - 1.0, 0.3], 0.0))
            .collect();
        let report = check_bounds(&v, &grid).unwrap();
        assert!(report.passed());
        assert_eq!(report.checked, 20);
    }

    #[test]
    fn bounds_check_passes_for_max_candidate_sandwich() {
        let v = max_abs_candidate();
        let mut grid = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                grid.push((vec![i as f64 * 0.4 - 2.0, j as f64 * 0.4 - 2.0], 0.0));
            }
        }
        assert!(check_bounds(&v, &grid).unwrap().passed());
    }

    #[test]
    fn bounds_check_reports_wrong_lower_bound() {
        // A deliberately wrong lower bound |x|_2 for V = |x|_inf fails at
        // (1, 1) where sqrt(2) > 1.
        let v = LyapunovCandidate::new(
            2,
            vec![
                CandidatePiece::new(
                    |x: &[f64], _| x[1].abs() - x[0].abs(),
                    |x: &[f64], _| x[0].abs(),
                    |x: &[f64], _| vec![sign(x[0]), 0.0, 0.0],
                ),
                CandidatePiece::new(
                    |x: &[f64], _| x[0].abs() - x[1].abs(),
                    |x: &[f64], _| x[1].abs(),
                    |x: &[f64], _| vec![0.0, sign(x[1]), 0.0],
                ),
            ],
            true,
            |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt(),
            |x: &[f64]| 2.0 * x[0].abs().max(x[1].abs()),
            |_: &[f64]| 0.0,
        )
        .unwrap();
        let report = check_bounds(&v, &[(vec![1.0, 1.0], 0.0)]).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!((report.violations[0].lower - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn comparison_bounds_vanish_only_at_origin() {
        let v = max_abs_candidate();
        assert_eq!(v.w_lower(&[0.0, 0.0]), 0.0);
        assert_eq!(v.w_upper(&[0.0, 0.0]), 0.0);
        let mut rng = Rng::new(33);
        for _ in 0..50 {
            let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
            if x[0] == 0.0 && x[1] == 0.0 {
                continue;
            }
            assert!(v.w_lower(&x) > 0.0);
            assert!(v.w_upper(&x) > 0.0);
        }
    }

    #[test]
    fn piece_gradients_match_finite_differences_inside_regions() {
        // Spot-check of the candidate invariant on the max candidate, away
        // from the diagonal where pieces are C^1.
        let v = max_abs_candidate();
        let mut rng = Rng::new(21);
        let mut checked = 0;
        while checked < 50 {
            let x = [4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0];
            if (x[0].abs() - x[1].abs()).abs() < 0.1 || x[0].abs().min(x[1].abs()) < 0.1 {
                continue;
            }
            checked += 1;
            let g = clarke_gradient(&v, &x, 0.0, DEFAULT_ACTIVATION_TOL).unwrap();
            assert_eq!(g.vertices().len(), 1);
            let grad = &g.vertices()[0];
            let h = 1e-6;
            for i in 0..2 {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                let fd = (v.value(&xp, 0.0).unwrap() - v.value(&xm, 0.0).unwrap()) / (2.0 * h);
                assert!((fd - grad[i]).abs() <= 1e-5 * grad[i].abs().max(1.0));
            }
        }
    }
}
