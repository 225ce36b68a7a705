//! Vertex-represented convex sets and the convex-geometry kernel used by the
//! rest of the crate: support functions, hull membership, Carathéodory
//! reduction, union hulls, and the min-max linear program behind the
//! relaxed generalized derivative.
//!
//! Only the V-representation is used. Every construction in this domain is
//! the hull of finitely many generator points, and every query reduces to a
//! support evaluation, a least-distance problem over the weight simplex, or
//! a small linear program, so facet enumeration is never needed.

mod simplex;

pub(crate) use simplex::minimize as simplex_minimize;
pub(crate) use simplex::{Constraint, ConstraintKind, LpOutcome};
use thiserror::Error;

/// Default geometric tolerance wherever a tolerance is optional.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HullError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("polytope needs at least one vertex")]
    EmptyVertexList,
    #[error("union of an empty polytope list")]
    EmptyUnion,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("negative tolerance {0}")]
    NegativeTolerance(f64),
    #[error("point not in hull (distance {distance:.3e})")]
    NotInHull { distance: f64 },
    #[error("internal linear program infeasible")]
    Infeasible,
    #[error("internal linear program unbounded")]
    Unbounded,
}

/// Convex hull of a finite vertex list in `R^dim`.
///
/// Duplicate or redundant vertices are permitted and do not change the
/// result of any query operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>) -> Result<Self, HullError> {
        if dim == 0 {
            return Err(HullError::ZeroDimension);
        }
        if vertices.is_empty() {
            return Err(HullError::EmptyVertexList);
        }
        for v in &vertices {
            if v.len() != dim {
                return Err(HullError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(HullError::NonFinite);
            }
        }
        Ok(Polytope { dim, vertices })
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self, HullError> {
        let dim = point.len();
        Polytope::new(dim, vec![point])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Vec<f64>> {
        self.vertices
    }

    /// Largest pairwise vertex distance; a cheap convergence diagnostic for
    /// hull estimates.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(dist(a, b));
            }
        }
        best
    }
}

/// Convex coefficients over a subset of a polytope's vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexWeights {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl ConvexWeights {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<Self, HullError> {
        if indices.len() != weights.len() {
            return Err(HullError::DimensionMismatch {
                expected: indices.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < -1e-12) {
            return Err(HullError::NonFinite);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(HullError::NonFinite);
        }
        Ok(ConvexWeights { indices, weights })
    }

    /// The point `sum_i w_i v_{idx_i}` over the given vertex list.
    pub fn reconstruct(&self, vertices: &[Vec<f64>]) -> Vec<f64> {
        let dim = vertices[0].len();
        let mut out = vec![0.0; dim];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            for (o, c) in out.iter_mut().zip(&vertices[i]) {
                *o += w * c;
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_point(p: &Polytope, q: &[f64]) -> Result<(), HullError> {
    if q.len() != p.dim {
        return Err(HullError::DimensionMismatch {
            expected: p.dim,
            got: q.len(),
        });
    }
    if q.iter().any(|c| !c.is_finite()) {
        return Err(HullError::NonFinite);
    }
    Ok(())
}

/// Support function: `max_{v in vertices} c . v` with the attaining vertex.
/// Ties break toward the lowest index, making witnesses reproducible.
pub fn support(p: &Polytope, direction: &[f64]) -> Result<(f64, usize), HullError> {
    check_point(p, direction)?;
    let mut best = f64::NEG_INFINITY;
    let mut witness = 0;
    for (i, v) in p.vertices.iter().enumerate() {
        let val = dot(direction, v);
        if val > best {
            best = val;
            witness = i;
        }
    }
    Ok((best, witness))
}

/// Least-distance projection onto the hull over the weight simplex, via
/// Wolfe's min-norm-point active-set method applied to the shifted vertex
/// set `{v_i - q}`. Returns the distance and the full weight vector.
///
/// Each major cycle adds the most violating vertex and then solves the
/// affine least-norm problem over the active set exactly, so the projection
/// comes out at solver precision and membership decisions at 1e-9 stay
/// sharp. The iteration cap keeps the kernel convention of
/// `10 * dim * vertices`; the active-set method terminates far earlier.
fn least_distance(vertices: &[Vec<f64>], q: &[f64], cap: usize) -> (f64, Vec<f64>) {
    let n = vertices.len();
    let shifted: Vec<Vec<f64>> = vertices
        .iter()
        .map(|v| v.iter().zip(q).map(|(a, b)| a - b).collect())
        .collect();
    let scale_sq = 1.0 + shifted.iter().map(|w| dot(w, w)).fold(0.0, f64::max);

    let mut start = 0;
    let mut best = f64::INFINITY;
    for (i, w) in shifted.iter().enumerate() {
        let d = dot(w, w);
        if d < best {
            best = d;
            start = i;
        }
    }
    let mut active: Vec<usize> = vec![start];
    let mut weights: Vec<f64> = vec![1.0];
    let mut x = shifted[start].clone();

    let mut iters = 0usize;
    'major: while iters < cap {
        iters += 1;
        let xx = dot(&x, &x);
        if xx <= 1e-30 * scale_sq {
            break;
        }
        let mut s = 0;
        let mut s_val = f64::INFINITY;
        for (i, w) in shifted.iter().enumerate() {
            let v = dot(&x, w);
            if v < s_val {
                s_val = v;
                s = i;
            }
        }
        if s_val >= xx - 1e-16 * scale_sq || active.contains(&s) {
            break;
        }
        active.push(s);
        weights.push(0.0);

        loop {
            iters += 1;
            let Some(alpha) = affine_min_norm(&shifted, &active) else {
                break 'major;
            };
            if alpha.iter().all(|a| *a > 1e-12) {
                weights = alpha;
                break;
            }
            // Move toward the affine minimizer until the first weight hits
            // zero, then drop that vertex and re-solve.
            let mut theta = 1.0f64;
            for (l, a) in weights.iter().zip(&alpha) {
                if *a <= 1e-12 {
                    let denom = l - a;
                    if denom > 1e-300 {
                        theta = theta.min(l / denom);
                    }
                }
            }
            for (l, a) in weights.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let keep: Vec<usize> = (0..active.len()).filter(|&j| weights[j] > 1e-12).collect();
            if keep.len() == active.len() || keep.is_empty() {
                break 'major;
            }
            active = keep.iter().map(|&j| active[j]).collect();
            weights = keep.iter().map(|&j| weights[j]).collect();
            if iters >= cap {
                break 'major;
            }
        }
        normalize(&mut weights);
        x = vec![0.0; q.len()];
        for (j, &i) in active.iter().enumerate() {
            for (xc, wc) in x.iter_mut().zip(&shifted[i]) {
                *xc += weights[j] * wc;
            }
        }
    }

    let mut lambda = vec![0.0; n];
    for (j, &i) in active.iter().enumerate() {
        lambda[i] += weights[j];
    }
    let mut proj = vec![0.0; q.len()];
    for (i, l) in lambda.iter().enumerate() {
        if *l > 0.0 {
            for (pc, vc) in proj.iter_mut().zip(&vertices[i]) {
                *pc += *l * vc;
            }
        }
    }
    (dist(&proj, q), lambda)
}

/// Minimizer of `|| sum_j alpha_j w_{active_j} ||` subject to
/// `sum alpha = 1` with free signs, via the KKT system
/// `[G 1; 1' 0][alpha; mu] = [0; 1]` where `G` is the Gram matrix.
/// Zero pivots (affinely dependent active sets) are skipped, which picks a
/// particular solution of the still-consistent system.
fn affine_min_norm(shifted: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let m = active.len();
    let size = m + 1;
    let mut a = vec![vec![0.0; size + 1]; size];
    for j in 0..m {
        for k in 0..m {
            a[j][k] = dot(&shifted[active[j]], &shifted[active[k]]);
        }
        a[j][m] = 1.0;
        a[j][size] = 0.0;
    }
    for v in a[m].iter_mut().take(m) {
        *v = 1.0;
    }
    a[m][size] = 1.0;

    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(1.0, f64::max);

    // Gauss-Jordan with partial pivoting; near-zero pivot columns are
    // treated as free (variable set to zero).
    let mut pivot_row_of_col = vec![usize::MAX; size];
    let mut r = 0;
    for c in 0..size {
        if r >= size {
            break;
        }
        let mut bestrow = r;
        for i in r + 1..size {
            if a[i][c].abs() > a[bestrow][c].abs() {
                bestrow = i;
            }
        }
        if a[bestrow][c].abs() < 1e-13 * scale {
            continue;
        }
        a.swap(r, bestrow);
        let p = a[r][c];
        for v in a[r].iter_mut() {
            *v /= p;
        }
        for i in 0..size {
            if i != r && a[i][c] != 0.0 {
                let f = a[i][c];
                let row = a[r].clone();
                for (v, rv) in a[i].iter_mut().zip(&row) {
                    *v -= f * rv;
                }
            }
        }
        pivot_row_of_col[c] = r;
        r += 1;
    }

    let mut alpha = vec![0.0; m];
    let mut assigned = false;
    for c in 0..m {
        if pivot_row_of_col[c] != usize::MAX {
            alpha[c] = a[pivot_row_of_col[c]][size];
            assigned = true;
        }
    }
    if !assigned {
        return None;
    }
    let total: f64 = alpha.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > 1e-6 {
        return None;
    }
    Some(alpha)
}

/// Distance from `q` to the hull of `p`.
pub fn distance_to_hull(p: &Polytope, q: &[f64]) -> Result<f64, HullError> {
    check_point(p, q)?;
    let cap = 10 * p.dim * p.vertices.len();
    Ok(least_distance(&p.vertices, q, cap.max(32)).0)
}

/// Hull membership: true iff the distance from `q` to the hull is at most
/// `tol`.
pub fn contains(p: &Polytope, q: &[f64], tol: f64) -> Result<bool, HullError> {
    if tol < 0.0 {
        return Err(HullError::NegativeTolerance(tol));
    }
    Ok(distance_to_hull(p, q)? <= tol)
}

/// Carathéodory reduction: weights over at most `dim + 1` vertices that
/// reconstruct `q`, obtained by iteratively eliminating affinely dependent
/// support points.
pub fn caratheodory_reduce(p: &Polytope, q: &[f64]) -> Result<ConvexWeights, HullError> {
    check_point(p, q)?;
    let cap = (10 * p.dim * p.vertices.len()).max(64);
    let (d, lambda) = least_distance(&p.vertices, q, cap);
    if d > DEFAULT_TOL {
        return Err(HullError::NotInHull { distance: d });
    }

    let mut support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 1e-15).collect();
    let mut weights: Vec<f64> = support.iter().map(|&i| lambda[i]).collect();
    normalize(&mut weights);

    while support.len() > p.dim + 1 {
        let cols: Vec<&Vec<f64>> = support.iter().map(|&i| &p.vertices[i]).collect();
        let Some(mut mu) = affine_null_vector(&cols) else {
            break;
        };
        if mu.iter().all(|m| *m <= 0.0) {
            for m in mu.iter_mut() {
                *m = -*m;
            }
        }
        let mut theta = f64::INFINITY;
        let mut drop_at = None;
        for (j, &m) in mu.iter().enumerate() {
            if m > 1e-14 {
                let ratio = weights[j] / m;
                if ratio < theta {
                    theta = ratio;
                    drop_at = Some(j);
                }
            }
        }
        let Some(drop_at) = drop_at else {
            break;
        };
        for (w, &m) in weights.iter_mut().zip(&mu) {
            *w -= theta * m;
        }
        weights[drop_at] = 0.0;
        let keep: Vec<usize> = (0..support.len())
            .filter(|&j| j != drop_at && weights[j] > 1e-15)
            .collect();
        support = keep.iter().map(|&j| support[j]).collect();
        weights = keep.iter().map(|&j| weights[j]).collect();
        normalize(&mut weights);
    }

    // Polish over the reduced support so the reconstruction error stays at
    // solver precision after the eliminations.
    let sub: Vec<Vec<f64>> = support.iter().map(|&i| p.vertices[i].clone()).collect();
    let (_, lam) = least_distance(&sub, q, (10 * p.dim * sub.len()).max(64));
    let mut indices = Vec::new();
    let mut final_weights = Vec::new();
    for (j, &l) in lam.iter().enumerate() {
        if l > 1e-15 {
            indices.push(support[j]);
            final_weights.push(l);
        }
    }
    normalize(&mut final_weights);
    ConvexWeights::new(indices, final_weights)
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
    }
}

/// A nonzero vector `mu` with `sum_j mu_j v_j = 0` and `sum_j mu_j = 0`,
/// i.e. a certificate of affine dependence among the columns. Returns `None`
/// when the columns are affinely independent.
fn affine_null_vector(cols: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let dim = cols[0].len();
    let rows = dim + 1;
    let n = cols.len();
    // Row-reduce the (dim+1) x n system [v_j; 1].
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..n)
                .map(|j| if r < dim { cols[j][r] } else { 1.0 })
                .collect()
        })
        .collect();

    let mut pivot_col_of_row = vec![usize::MAX; rows];
    let mut is_pivot_col = vec![false; n];
    let mut r = 0;
    for c in 0..n {
        if r >= rows {
            break;
        }
        let mut best = r;
        for i in r + 1..rows {
            if a[i][c].abs() > a[best][c].abs() {
                best = i;
            }
        }
        if a[best][c].abs() < 1e-12 {
            continue;
        }
        a.swap(r, best);
        let p = a[r][c];
        for v in a[r].iter_mut() {
            *v /= p;
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0.0 {
                let factor = a[i][c];
                let row_r = a[r].clone();
                for (v, rv) in a[i].iter_mut().zip(&row_r) {
                    *v -= factor * rv;
                }
            }
        }
        pivot_col_of_row[r] = c;
        is_pivot_col[c] = true;
        r += 1;
    }

    let free = (0..n).find(|&c| !is_pivot_col[c])?;
    let mut mu = vec![0.0; n];
    mu[free] = 1.0;
    for (row, &pc) in pivot_col_of_row.iter().enumerate() {
        if pc != usize::MAX {
            mu[pc] = -a[row][free];
        }
    }
    Some(mu)
}

/// Hull of the union: the concatenation of every input's vertex list.
pub fn union_hull(polytopes: &[Polytope]) -> Result<Polytope, HullError> {
    let Some(first) = polytopes.first() else {
        return Err(HullError::EmptyUnion);
    };
    let dim = first.dim;
    let mut vertices = Vec::new();
    for p in polytopes {
        if p.dim != dim {
            return Err(HullError::DimensionMismatch {
                expected: dim,
                got: p.dim,
            });
        }
        vertices.extend(p.vertices.iter().cloned());
    }
    Polytope::new(dim, vertices)
}

/// True iff every vertex of `a` lies within `tol` of the hull of `b`.
pub fn hull_subset(a: &Polytope, b: &Polytope, tol: f64) -> Result<bool, HullError> {
    if a.dim != b.dim {
        return Err(HullError::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    for v in &a.vertices {
        if !contains(b, v, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Hausdorff distance between two hulls.
///
/// The supremum of the distance function over a hull is attained at a
/// vertex, so both directed distances reduce to vertex scans.
pub fn hausdorff(a: &Polytope, b: &Polytope) -> Result<f64, HullError> {
    if a.dim != b.dim {
        return Err(HullError::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    let mut h = 0.0f64;
    for v in &a.vertices {
        h = h.max(distance_to_hull(b, v)?);
    }
    for v in &b.vertices {
        h = h.max(distance_to_hull(a, v)?);
    }
    Ok(h)
}

/// `min_{p in P} max_{q in Q} p . q` together with the optimal weights over
/// `P`'s vertices and the `Q`-vertex attaining the inner maximum.
///
/// The inner maximum is piecewise-linear convex in `p`, so the problem is
/// the linear program: minimize gamma subject to
/// `(sum_i lambda_i p_i) . q_j <= gamma` for every vertex `q_j` and `lambda`
/// in the simplex.
pub fn min_of_convex_max_with_witness(
    pp: &Polytope,
    qq: &Polytope,
) -> Result<(f64, ConvexWeights, usize), HullError> {
    if pp.dim != qq.dim {
        return Err(HullError::DimensionMismatch {
            expected: pp.dim,
            got: qq.dim,
        });
    }
    let np = pp.vertices.len();
    // Variables: lambda_1..lambda_np, gamma_plus, gamma_minus.
    let mut constraints = Vec::with_capacity(qq.vertices.len() + 1);
    for qv in &qq.vertices {
        let mut coeffs = Vec::with_capacity(np + 2);
        for pv in &pp.vertices {
            coeffs.push(dot(pv, qv));
        }
        coeffs.push(-1.0);
        coeffs.push(1.0);
        constraints.push(Constraint {
            coeffs,
            kind: ConstraintKind::Le,
            rhs: 0.0,
        });
    }
    let mut simplex_row = vec![1.0; np];
    simplex_row.extend_from_slice(&[0.0, 0.0]);
    constraints.push(Constraint {
        coeffs: simplex_row,
        kind: ConstraintKind::Eq,
        rhs: 1.0,
    });

    let mut objective = vec![0.0; np];
    objective.extend_from_slice(&[1.0, -1.0]);

    match simplex::minimize(&objective, &constraints) {
        LpOutcome::Optimal { x, value } => {
            let mut indices = Vec::new();
            let mut weights = Vec::new();
            for (i, &l) in x[..np].iter().enumerate() {
                if l > 1e-12 {
                    indices.push(i);
                    weights.push(l);
                }
            }
            normalize(&mut weights);
            let w = ConvexWeights::new(indices, weights)?;
            let p_star = w.reconstruct(&pp.vertices);
            let (_, q_witness) = support(qq, &p_star)?;
            Ok((value, w, q_witness))
        }
        LpOutcome::Infeasible => Err(HullError::Infeasible),
        LpOutcome::Unbounded => Err(HullError::Unbounded),
    }
}

/// `min_{p in P} max_{q in Q} p . q`.
pub fn min_of_convex_max(pp: &Polytope, qq: &Polytope) -> Result<f64, HullError> {
    min_of_convex_max_with_witness(pp, qq).map(|(v, _, _)| v)
}
