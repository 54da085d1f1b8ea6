//! Minimum-norm point of a polytope given by its generators.
//!
//! The Clarke subdifferential of the testbed functions is a convex hull of
//! finitely many vectors, so the stationarity measure dist(0, ∂f(x)) and the
//! subgradient-flow velocity (the minimal-norm subgradient) both reduce to
//! the min-norm-point problem
//!
//!   min ||v||  over  v in conv{v_1, ..., v_m}.
//!
//! Solved with Wolfe's vertex method: maintain a corral of generators, solve
//! the affine min-norm subproblem over it, and walk toward the affine
//! minimizer while keeping barycentric weights nonnegative. Terminates with
//! the first-order certificate <p, v_i - p> >= -tol for every generator.

use crate::error::{Error, Result};
use crate::point::Point;

const DEDUP_TOL: f64 = 1e-12;
const WEIGHT_DROP_TOL: f64 = 1e-12;

/// A polytope conv{generators}; nonempty, all generators of equal dimension.
#[derive(Clone, Debug)]
pub struct Hull {
    generators: Vec<Point>,
}

impl Hull {
    pub fn new(generators: Vec<Point>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::NonFinite("hull with no generators".into()));
        }
        let dim = generators[0].dim();
        for g in &generators {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: g.dim(),
                });
            }
            if !g.is_finite() {
                return Err(Error::NonFinite("hull generator".into()));
            }
        }
        Ok(Hull { generators })
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Hull translated by -q, i.e. conv{v_i - q}.
    pub fn translated(&self, q: &Point) -> Result<Hull> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: q.dim(),
            });
        }
        Hull::new(self.generators.iter().map(|g| g.sub(q)).collect())
    }
}

/// Result of the min-norm-point computation.
#[derive(Clone, Debug)]
pub struct MinNormResult {
    /// The nearest point to the origin in the hull.
    pub point: Point,
    /// Its Euclidean norm, i.e. dist(0, hull).
    pub norm: f64,
    /// Barycentric weights over the *original* generator list (duplicates get 0).
    pub weights: Vec<f64>,
}

/// Minimum-norm point of conv{generators} to ~1e-9, with the optimality
/// certificate <p, v_i - p> >= -tol checked by the caller's tests.
pub fn min_norm_point(hull: &Hull) -> Result<MinNormResult> {
    // Deduplicate within tolerance; keep a map back to original indices.
    let (unique, rep_of) = dedup(hull.generators());
    let m = unique.len();

    if m == 1 {
        let mut weights = vec![0.0; hull.len()];
        weights[first_rep(&rep_of, 0)] = 1.0;
        return Ok(MinNormResult {
            norm: unique[0].norm(),
            point: unique[0].clone(),
            weights,
        });
    }

    let scale = unique.iter().map(|g| g.norm()).fold(0.0_f64, f64::max);
    let stop_tol = 1e-12 * scale.max(1.0).powi(2);

    // Corral: indices into `unique`, with barycentric weights `lam`.
    let start = (0..m)
        .min_by(|&a, &b| unique[a].norm_sq().total_cmp(&unique[b].norm_sq()))
        .unwrap();
    let mut corral: Vec<usize> = vec![start];
    let mut lam: Vec<f64> = vec![1.0];
    let mut x = unique[start].clone();

    let cap = 10 * hull.len() * hull.len() + 20;
    let mut converged = false;
    'major: for _ in 0..cap {
        // Linear minimization oracle over the generators.
        let (jmin, ip_min) = (0..m)
            .map(|j| (j, x.dot(&unique[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if ip_min >= x.norm_sq() - stop_tol {
            converged = true;
            break;
        }
        if corral.contains(&jmin) {
            // No progress possible within tolerance.
            converged = true;
            break;
        }
        corral.push(jmin);
        lam.push(0.0);

        // Minor cycle: move toward the affine minimizer of the corral.
        loop {
            let mu = match affine_min_norm_weights(&unique, &corral) {
                Some(mu) => mu,
                None => {
                    // Affinely dependent corral; drop the new vertex and stop.
                    corral.pop();
                    lam.pop();
                    break 'major;
                }
            };
            if mu.iter().all(|&w| w >= -WEIGHT_DROP_TOL) {
                lam = mu.iter().map(|&w| w.max(0.0)).collect();
                normalize(&mut lam);
                break;
            }
            // Largest step toward mu keeping weights nonnegative.
            let mut theta = 1.0_f64;
            for i in 0..lam.len() {
                if mu[i] < WEIGHT_DROP_TOL {
                    let denom = lam[i] - mu[i];
                    if denom > 0.0 {
                        theta = theta.min(lam[i] / denom);
                    }
                }
            }
            for i in 0..lam.len() {
                lam[i] = (1.0 - theta) * lam[i] + theta * mu[i];
            }
            // Drop vanished vertices (keep at least one).
            let mut kept_c = Vec::with_capacity(corral.len());
            let mut kept_l = Vec::with_capacity(lam.len());
            for (i, &ci) in corral.iter().enumerate() {
                if lam[i] > WEIGHT_DROP_TOL {
                    kept_c.push(ci);
                    kept_l.push(lam[i]);
                }
            }
            if kept_c.is_empty() {
                kept_c.push(corral[0]);
                kept_l.push(1.0);
            }
            corral = kept_c;
            lam = kept_l;
            normalize(&mut lam);
        }
        x = combine(&unique, &corral, &lam);
    }

    let mut full = vec![0.0; m];
    for (i, &ci) in corral.iter().enumerate() {
        full[ci] = lam[i];
    }
    if !converged {
        // Iteration cap or degenerate corral: polish with projected gradient
        // over the full simplex.
        full = projected_gradient_simplex(&unique, full, scale);
    }

    // Map weights back to the original generator list and rebuild the point,
    // so membership is reconstructable from the reported weights.
    let mut weights = vec![0.0; hull.len()];
    for (orig, &rep) in rep_of.iter().enumerate() {
        if first_rep(&rep_of, rep) == orig {
            weights[orig] = full[rep];
        }
    }
    let mut point = Point::zeros(hull.dim());
    for (w, g) in weights.iter().zip(hull.generators()) {
        point.axpy(*w, g);
    }
    Ok(MinNormResult {
        norm: point.norm(),
        point,
        weights,
    })
}

/// dist(q, conv{generators}) = min-norm of the translated hull {v_i - q}.
pub fn dist_to_hull(hull: &Hull, q: &Point) -> Result<f64> {
    Ok(min_norm_point(&hull.translated(q)?)?.norm)
}

fn normalize(lam: &mut [f64]) {
    let s: f64 = lam.iter().sum();
    if s > 0.0 {
        for w in lam.iter_mut() {
            *w /= s;
        }
    }
}

fn combine(pts: &[Point], idx: &[usize], lam: &[f64]) -> Point {
    let mut x = Point::zeros(pts[0].dim());
    for (i, &ci) in idx.iter().enumerate() {
        x.axpy(lam[i], &pts[ci]);
    }
    x
}

fn dedup(generators: &[Point]) -> (Vec<Point>, Vec<usize>) {
    let mut unique: Vec<Point> = Vec::new();
    let mut rep_of = Vec::with_capacity(generators.len());
    for g in generators {
        let found = unique.iter().position(|u| u.dist(g) <= DEDUP_TOL);
        match found {
            Some(i) => rep_of.push(i),
            None => {
                unique.push(g.clone());
                rep_of.push(unique.len() - 1);
            }
        }
    }
    (unique, rep_of)
}

/// First original index represented by unique index `rep`.
fn first_rep(rep_of: &[usize], rep: usize) -> usize {
    rep_of.iter().position(|&r| r == rep).unwrap()
}

/// Weights of the min-norm point over the affine hull of the corral:
/// minimize ||sum mu_i s_i||^2 subject to sum mu_i = 1. Solved via
/// (G + 11^T) w = 1, mu = w / sum(w). Returns None when the system is
/// numerically singular (affinely dependent corral).
fn affine_min_norm_weights(pts: &[Point], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let mut a = vec![vec![0.0_f64; k]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = pts[corral[i]].dot(&pts[corral[j]]) + 1.0;
        }
    }
    let w = solve_dense(&mut a, vec![1.0; k])?;
    let s: f64 = w.iter().sum();
    if !s.is_finite() || s.abs() < 1e-300 {
        return None;
    }
    Some(w.iter().map(|&wi| wi / s).collect())
}

/// Gaussian elimination with partial pivoting on small dense systems.
fn solve_dense(a: &mut [Vec<f64>], mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let diag_scale: f64 = a
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0, f64::max)
        .max(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() < 1e-13 * diag_scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Fallback: projected gradient on the simplex for min ||V w||^2.
fn projected_gradient_simplex(pts: &[Point], mut w: Vec<f64>, scale: f64) -> Vec<f64> {
    let m = pts.len();
    normalize(&mut w);
    if w.iter().sum::<f64>() == 0.0 {
        w = vec![1.0 / m as f64; m];
    }
    let lip = 2.0 * m as f64 * scale.max(1e-12).powi(2);
    let step = 1.0 / lip;
    for _ in 0..10_000 {
        let x = combine(pts, &(0..m).collect::<Vec<_>>(), &w);
        let mut grad = vec![0.0; m];
        for j in 0..m {
            grad[j] = 2.0 * x.dot(&pts[j]);
        }
        for j in 0..m {
            w[j] -= step * grad[j];
        }
        w = project_simplex(&w);
    }
    w
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    #[test]
    fn interval_contains_zero() {
        let h = Hull::new(vec![p(&[-1.0]), p(&[1.0])]).unwrap();
        let r = min_norm_point(&h).unwrap();
        assert!(r.norm <= 1e-9, "norm {}", r.norm);
        assert!(r.point[0].abs() <= 1e-9);
    }

    #[test]
    fn segment_midpoint() {
        let h = Hull::new(vec![p(&[1.0, 0.0]), p(&[0.0, 1.0])]).unwrap();
        let r = min_norm_point(&h).unwrap();
        assert!((r.norm - 0.7071067811865476).abs() <= 1e-9);
        assert!((r.point[0] - 0.5).abs() <= 1e-9);
        assert!((r.point[1] - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn collinear_nearest_vertex() {
        let h = Hull::new(vec![p(&[2.0, 0.0]), p(&[3.0, 0.0])]).unwrap();
        let r = min_norm_point(&h).unwrap();
        assert!((r.norm - 2.0).abs() <= 1e-9);
        assert!((r.point[0] - 2.0).abs() <= 1e-9);
        assert!(r.point[1].abs() <= 1e-9);
    }

    #[test]
    fn dist_examples() {
        let h = Hull::new(vec![p(&[1.0, 0.0]), p(&[0.0, 1.0])]).unwrap();
        let d = dist_to_hull(&h, &p(&[0.0, 0.0])).unwrap();
        assert!((d - 0.7071067811865476).abs() <= 1e-9);

        let single = Hull::new(vec![p(&[1.0, 1.0])]).unwrap();
        let d = dist_to_hull(&single, &p(&[1.0, 1.0])).unwrap();
        assert!(d <= 1e-12);
    }

    #[test]
    fn duplicates_deduplicated() {
        let h = Hull::new(vec![p(&[2.0, 0.0]), p(&[2.0, 0.0]), p(&[0.0, 2.0])]).unwrap();
        let r = min_norm_point(&h).unwrap();
        assert!((r.norm - 2.0_f64.sqrt()).abs() <= 1e-9);
        // Duplicate carries zero weight; total weight still 1.
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert_eq!(r.weights[1], 0.0);
    }

    #[test]
    fn weights_reconstruct_point() {
        let gens = vec![p(&[1.0, 2.0, -1.0]), p(&[0.5, -1.0, 0.3]), p(&[-2.0, 0.1, 1.0]), p(&[0.2, 0.2, 0.2])];
        let h = Hull::new(gens.clone()).unwrap();
        let r = min_norm_point(&h).unwrap();
        let mut rebuilt = Point::zeros(3);
        for (w, g) in r.weights.iter().zip(&gens) {
            rebuilt.axpy(*w, g);
        }
        assert!(rebuilt.dist(&r.point) <= 1e-9);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(r.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn certificate_holds() {
        let gens = vec![p(&[3.0, 1.0]), p(&[1.0, 3.0]), p(&[2.0, 2.5]), p(&[4.0, 4.0])];
        let h = Hull::new(gens.clone()).unwrap();
        let r = min_norm_point(&h).unwrap();
        for g in &gens {
            let slack = r.point.dot(&g.sub(&r.point));
            assert!(slack >= -1e-8, "certificate violated: {}", slack);
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Hull::new(vec![p(&[f64::NAN])]).is_err());
        assert!(Hull::new(vec![]).is_err());
    }

    #[test]
    fn mixed_dims_rejected() {
        assert!(Hull::new(vec![p(&[1.0]), p(&[1.0, 2.0])]).is_err());
    }
}
