//! Constraint sets with proximal/projection selections, and the regularizer
//! classes whose prox has a usable closed form.
//!
//! prox_step computes a global minimizer of g(x) + (1/2a)||x - z||^2 over X
//! for the supported (X, g) pairs. Nonconvex sets (sphere, union of boxes)
//! are handled by enumerating candidate minimizers per piece and breaking
//! ties lexicographically, so every run is reproducible.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{min_norm_point, Hull};
use crate::point::Point;
use rand::Rng;
use rand_distr::StandardNormal;

/// Membership tolerance for `contains`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Objective ties below this slack are broken lexicographically.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum ConstraintKind {
    FullSpace,
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    Sphere {
        center: Point,
        radius: f64,
    },
    UnionOfBoxes {
        boxes: Vec<(Vec<f64>, Vec<f64>)>,
    },
    /// V-representation: the convex hull of finitely many vertices.
    ConvexPolytope {
        vertices: Vec<Point>,
    },
}

impl ConstraintKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ConstraintKind::FullSpace => "full-space",
            ConstraintKind::Box { .. } => "box",
            ConstraintKind::Ball { .. } => "ball",
            ConstraintKind::Sphere { .. } => "sphere",
            ConstraintKind::UnionOfBoxes { .. } => "union-of-boxes",
            ConstraintKind::ConvexPolytope { .. } => "convex-polytope",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSet {
    dim: usize,
    kind: ConstraintKind,
}

impl ConstraintSet {
    pub fn new(dim: usize, kind: ConstraintKind) -> Self {
        ConstraintSet { dim, kind }
    }

    pub fn full_space(dim: usize) -> Self {
        Self::new(dim, ConstraintKind::FullSpace)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        let dim = lower.len();
        Self::new(dim, ConstraintKind::Box { lower, upper })
    }

    pub fn sphere(center: Point, radius: f64) -> Self {
        let dim = center.dim();
        Self::new(dim, ConstraintKind::Sphere { center, radius })
    }

    pub fn ball(center: Point, radius: f64) -> Self {
        let dim = center.dim();
        Self::new(dim, ConstraintKind::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    pub fn contains(&self, x: &Point) -> bool {
        if x.dim() != self.dim || !x.is_finite() {
            return false;
        }
        match &self.kind {
            ConstraintKind::FullSpace => true,
            ConstraintKind::Box { lower, upper } => in_box(x, lower, upper),
            ConstraintKind::Ball { center, radius } => x.dist(center) <= radius + FEASIBILITY_TOL,
            ConstraintKind::Sphere { center, radius } => {
                (x.dist(center) - radius).abs() <= FEASIBILITY_TOL
            }
            ConstraintKind::UnionOfBoxes { boxes } => {
                boxes.iter().any(|(lo, hi)| in_box(x, lo, hi))
            }
            ConstraintKind::ConvexPolytope { vertices } => {
                let hull = Hull::new(vertices.clone()).expect("polytope vertices");
                crate::geometry::dist_to_hull(&hull, x).map(|d| d <= FEASIBILITY_TOL).unwrap_or(false)
            }
        }
    }

    /// A random feasible point; used by optimality spot checks.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            ConstraintKind::FullSpace => Point::new(
                (0..self.dim)
                    .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            ),
            ConstraintKind::Box { lower, upper } => Point::new(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(&lo, &hi)| rng.random_range(lo..=hi))
                    .collect(),
            ),
            ConstraintKind::Ball { center, radius } => loop {
                let v = Point::new(
                    (0..self.dim)
                        .map(|_| rng.random_range(-radius..=*radius))
                        .collect(),
                );
                if v.norm() <= *radius {
                    break center.add(&v);
                }
            },
            ConstraintKind::Sphere { center, radius } => {
                let mut v = Point::new(
                    (0..self.dim)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect(),
                );
                if v.norm() == 0.0 {
                    v = Point::basis(self.dim, 0);
                }
                center.add(&v.scale(radius / v.norm()))
            }
            ConstraintKind::UnionOfBoxes { boxes } => {
                let i = rng.random_range(0..boxes.len());
                let (lo, hi) = &boxes[i];
                Point::new(
                    lo.iter()
                        .zip(hi)
                        .map(|(&l, &h)| rng.random_range(l..=h))
                        .collect(),
                )
            }
            ConstraintKind::ConvexPolytope { vertices } => {
                let mut w: Vec<f64> = (0..vertices.len())
                    .map(|_| -rng.random::<f64>().max(1e-12).ln())
                    .collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|wi| *wi /= s);
                let mut x = Point::zeros(self.dim);
                for (wi, v) in w.iter().zip(vertices) {
                    x.axpy(*wi, v);
                }
                x
            }
        }
    }
}

fn in_box(x: &Point, lower: &[f64], upper: &[f64]) -> bool {
    x.coords()
        .iter()
        .zip(lower.iter().zip(upper))
        .all(|(&xi, (&lo, &hi))| xi >= lo - FEASIBILITY_TOL && xi <= hi + FEASIBILITY_TOL)
}

pub type ProxFn = dyn Fn(f64, &Point) -> Point + Send + Sync;
pub type ScalarFn = dyn Fn(&Point) -> f64 + Send + Sync;
pub type VectorFn = dyn Fn(&Point) -> Point + Send + Sync;

/// Regularizer g, bounded below on the constraint set, together with the
/// descent modulus L(x) >= sup_{z: g(z)<=g(x)} (g(x)-g(z))/||x-z||.
#[derive(Clone)]
pub enum Regularizer {
    Zero,
    L1 {
        weight: f64,
    },
    /// g(x) = weight * ||x||^exponent, exponent > 1. Convex and coercive.
    PowerNorm {
        weight: f64,
        exponent: f64,
    },
    Custom {
        name: String,
        value: Arc<ScalarFn>,
        subgrad: Arc<VectorFn>,
        descent_modulus: Arc<ScalarFn>,
        /// Full-space prox: argmin g(x) + (1/2a)||x - z||^2.
        prox: Arc<ProxFn>,
        lower_bound: f64,
    },
}

impl std::fmt::Debug for Regularizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Regularizer({})", self.tag())
    }
}

impl Regularizer {
    pub fn tag(&self) -> String {
        match self {
            Regularizer::Zero => "zero".into(),
            Regularizer::L1 { weight } => format!("l1({})", weight),
            Regularizer::PowerNorm { weight, exponent } => {
                format!("power-norm({},{})", weight, exponent)
            }
            Regularizer::Custom { name, .. } => format!("custom({})", name),
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * x.norm_l1(),
            Regularizer::PowerNorm { weight, exponent } => weight * x.norm().powf(*exponent),
            Regularizer::Custom { value, .. } => value(x),
        }
    }

    /// One element of ∂g(x) (the minimal-norm one for the built-in classes).
    pub fn subgrad_select(&self, x: &Point) -> Point {
        match self {
            Regularizer::Zero => Point::zeros(x.dim()),
            Regularizer::L1 { weight } => Point::new(
                x.coords()
                    .iter()
                    .map(|&c| if c == 0.0 { 0.0 } else { weight * c.signum() })
                    .collect(),
            ),
            Regularizer::PowerNorm { weight, exponent } => {
                let r = x.norm();
                if r == 0.0 {
                    Point::zeros(x.dim())
                } else {
                    x.scale(weight * exponent * r.powf(exponent - 2.0))
                }
            }
            Regularizer::Custom { subgrad, .. } => subgrad(x),
        }
    }

    /// L(x) of the standing assumptions: for the convex built-ins this is the
    /// minimal subgradient norm, which realizes the required inequality.
    pub fn descent_modulus(&self, x: &Point) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => {
                let nnz = x.coords().iter().filter(|&&c| c != 0.0).count();
                weight * (nnz as f64).sqrt()
            }
            Regularizer::PowerNorm { weight, exponent } => {
                weight * exponent * x.norm().powf(exponent - 1.0)
            }
            Regularizer::Custom { descent_modulus, .. } => descent_modulus(x),
        }
    }

    pub fn lower_bound(&self) -> f64 {
        match self {
            Regularizer::Custom { lower_bound, .. } => *lower_bound,
            _ => 0.0,
        }
    }
}

/// T_a(z): a global minimizer of g(x) + (1/2a)||x - z||^2 over X, for the
/// supported (X.kind, g.tag) combinations. Deterministic via the documented
/// tie-break rules.
pub fn prox_step(set: &ConstraintSet, g: &Regularizer, alpha: f64, z: &Point) -> Result<Point> {
    if z.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: z.dim(),
        });
    }
    if !(alpha > 0.0) || !z.is_finite() {
        return Err(Error::NonFinite("prox step input".into()));
    }
    let unsupported = || Error::UnsupportedProx {
        set: set.kind().tag().into(),
        reg: g.tag(),
    };
    match (&set.kind, g) {
        (ConstraintKind::FullSpace, Regularizer::Zero) => Ok(z.clone()),
        (ConstraintKind::FullSpace, Regularizer::L1 { weight }) => {
            Ok(soft_threshold(z, alpha * weight))
        }
        (ConstraintKind::FullSpace, Regularizer::PowerNorm { weight, exponent }) => {
            Ok(power_norm_prox(z, alpha * weight, *exponent))
        }
        (ConstraintKind::FullSpace, Regularizer::Custom { prox, .. }) => Ok(prox(alpha, z)),
        (ConstraintKind::Box { lower, upper }, Regularizer::Zero) => Ok(clamp(z, lower, upper)),
        (ConstraintKind::Box { lower, upper }, Regularizer::L1 { weight }) => {
            // Separable convex scalar problems: soft-threshold then clamp.
            Ok(clamp(&soft_threshold(z, alpha * weight), lower, upper))
        }
        (ConstraintKind::Ball { center, radius }, Regularizer::Zero) => {
            let v = z.sub(center);
            let n = v.norm();
            if n <= *radius {
                Ok(z.clone())
            } else {
                Ok(center.add(&v.scale(radius / n)))
            }
        }
        (ConstraintKind::Sphere { center, radius }, Regularizer::Zero) => {
            let v = z.sub(center);
            let n = v.norm();
            if n == 0.0 {
                // All points of the sphere are optimal; pick center + r*e_0.
                Ok(center.add(&Point::basis(set.dim(), 0).scale(*radius)))
            } else {
                Ok(center.add(&v.scale(radius / n)))
            }
        }
        (ConstraintKind::UnionOfBoxes { boxes }, Regularizer::Zero)
        | (ConstraintKind::UnionOfBoxes { boxes }, Regularizer::L1 { .. }) => {
            let mut best: Option<(f64, Point)> = None;
            for (lo, hi) in boxes {
                let cand = match g {
                    Regularizer::Zero => clamp(z, lo, hi),
                    Regularizer::L1 { weight } => clamp(&soft_threshold(z, alpha * weight), lo, hi),
                    _ => unreachable!(),
                };
                let obj = g.value(&cand) + cand.dist(z).powi(2) / (2.0 * alpha);
                best = Some(match best {
                    None => (obj, cand),
                    Some((bo, bp)) => {
                        if obj < bo - TIE_TOL || ((obj - bo).abs() <= TIE_TOL && cand.lex_less(&bp))
                        {
                            (obj, cand)
                        } else {
                            (bo, bp)
                        }
                    }
                });
            }
            Ok(best.ok_or_else(unsupported)?.1)
        }
        (ConstraintKind::ConvexPolytope { vertices }, Regularizer::Zero) => {
            let hull = Hull::new(vertices.clone())?.translated(z)?;
            let mn = min_norm_point(&hull)?;
            Ok(z.add(&mn.point))
        }
        _ => Err(unsupported()),
    }
}

/// Componentwise soft threshold: argmin t|x| + (x-z)^2/2 with t = threshold.
pub fn soft_threshold(z: &Point, threshold: f64) -> Point {
    Point::new(
        z.coords()
            .iter()
            .map(|&c| c.signum() * (c.abs() - threshold).max(0.0))
            .collect(),
    )
}

fn clamp(z: &Point, lower: &[f64], upper: &[f64]) -> Point {
    Point::new(
        z.coords()
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&c, (&lo, &hi))| c.clamp(lo, hi))
            .collect(),
    )
}

/// Prox of w*||x||^p over R^d: radial, with the scalar optimality condition
/// r + p*w*a*r^(p-1) = s (s = ||z||) solved by bisection on [0, s] to relative
/// tolerance 1e-12 (at most 200 iterations; no closed form for general p).
fn power_norm_prox(z: &Point, weight_alpha: f64, p: f64) -> Point {
    let s = z.norm();
    if s == 0.0 {
        return Point::zeros(z.dim());
    }
    let residual = |r: f64| r + p * weight_alpha * r.powf(p - 1.0) - s;
    let (mut lo, mut hi) = (0.0_f64, s);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-12 * s {
            break;
        }
    }
    let r = 0.5 * (lo + hi);
    z.scale(r / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_example() {
        // X = R, g = l1 with alpha*lambda = 0.5, z = 2 -> 1.5.
        let set = ConstraintSet::full_space(1);
        let g = Regularizer::L1 { weight: 1.0 };
        let p = prox_step(&set, &g, 0.5, &Point::new(vec![2.0])).unwrap();
        assert_eq!(p[0], 1.5);
    }

    #[test]
    fn sphere_radial_projection() {
        let set = ConstraintSet::sphere(Point::zeros(2), 1.0);
        let p = prox_step(&set, &Regularizer::Zero, 1.0, &Point::new(vec![2.0, 0.0])).unwrap();
        assert!((p[0] - 1.0).abs() <= 1e-12 && p[1] == 0.0);
    }

    #[test]
    fn sphere_center_tie_break() {
        let set = ConstraintSet::sphere(Point::zeros(2), 1.0);
        let p = prox_step(&set, &Regularizer::Zero, 1.0, &Point::zeros(2)).unwrap();
        assert_eq!(p.coords(), &[1.0, 0.0]);
    }

    #[test]
    fn projection_idempotent_on_feasible() {
        let set = ConstraintSet::boxed(vec![0.0, 0.0], vec![1.0, 2.0]);
        let x = Point::new(vec![0.5, 1.5]);
        let p = prox_step(&set, &Regularizer::Zero, 0.3, &x).unwrap();
        assert_eq!(p, x);
    }

    #[test]
    fn power_norm_prox_matches_quartic_optimality() {
        // g = ||x||^4 in 1-D: r + 4*a*r^3 = |z|.
        let set = ConstraintSet::full_space(1);
        let g = Regularizer::PowerNorm { weight: 1.0, exponent: 4.0 };
        let z = Point::new(vec![3.0]);
        let p = prox_step(&set, &g, 0.5, &z).unwrap();
        let r = p[0];
        assert!((r + 2.0 * r.powi(3) - 3.0).abs() <= 1e-10, "r = {}", r);
    }

    #[test]
    fn union_of_boxes_lexicographic_tie() {
        // Two symmetric boxes equidistant from z = 0: lexicographically
        // smaller candidate wins.
        let set = ConstraintSet::new(
            1,
            ConstraintKind::UnionOfBoxes {
                boxes: vec![(vec![1.0], vec![2.0]), (vec![-2.0], vec![-1.0])],
            },
        );
        let p = prox_step(&set, &Regularizer::Zero, 1.0, &Point::zeros(1)).unwrap();
        assert_eq!(p[0], -1.0);
        assert!(set.contains(&p));
    }

    #[test]
    fn polytope_projection_via_min_norm() {
        let set = ConstraintSet::new(
            2,
            ConstraintKind::ConvexPolytope {
                vertices: vec![
                    Point::new(vec![0.0, 0.0]),
                    Point::new(vec![1.0, 0.0]),
                    Point::new(vec![0.0, 1.0]),
                ],
            },
        );
        // Projection of (1,1) onto the simplex-triangle is (0.5, 0.5).
        let p = prox_step(&set, &Regularizer::Zero, 1.0, &Point::new(vec![1.0, 1.0])).unwrap();
        assert!((p[0] - 0.5).abs() <= 1e-8 && (p[1] - 0.5).abs() <= 1e-8);
        assert!(set.contains(&p));
    }

    #[test]
    fn unsupported_combination_errors() {
        let set = ConstraintSet::sphere(Point::zeros(2), 1.0);
        let g = Regularizer::L1 { weight: 1.0 };
        assert!(matches!(
            prox_step(&set, &g, 0.5, &Point::new(vec![2.0, 0.0])),
            Err(Error::UnsupportedProx { .. })
        ));
    }

    #[test]
    fn l1_descent_modulus_counts_support() {
        let g = Regularizer::L1 { weight: 2.0 };
        assert_eq!(g.descent_modulus(&Point::new(vec![1.0, 0.0, -3.0])), 2.0 * 2.0_f64.sqrt());
        assert_eq!(g.descent_modulus(&Point::zeros(3)), 0.0);
    }
}
