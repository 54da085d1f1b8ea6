//! The named test problems, each carrying analytic ground truth: hull
//! oracles, known critical sets with samplers, critical values, and class
//! tags. The harness treats this metadata as the reference the solvers and
//! flow verifiers are judged against.
//!
//! Kink membership in the hull oracles uses a 1e-9 band so that integrator
//! nodes landing on a kink up to float roundoff see the full subdifferential
//! there; random points never sit inside the band.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::composite::CompositeProblem;
use crate::constraint::{ConstraintSet, Regularizer};
use crate::error::{Error, Result};
use crate::function::{PiecewiseLipschitzFunction, StochasticOracle};
use crate::geometry::{min_norm_point, Hull};
use crate::noise::NoiseModel;
use crate::point::Point;
use crate::rng::sampling_stream;

/// Width of the kink band in the hull oracles.
pub const KINK_TOL: f64 = 1e-9;
/// Tolerance of the critical-set membership oracles.
pub const CRITICAL_SET_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemTag {
    /// Every subgradient is a first-order affine minorant.
    SubdiffRegular,
    /// Stratifiable but not subdifferentially regular (downward kinks).
    StratifiableOnly,
    Smooth,
    Composite,
}

#[derive(Clone, Debug)]
pub enum ProblemKind {
    Plain(PiecewiseLipschitzFunction),
    Composite(CompositeProblem),
}

type PointSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Point + Send + Sync>;
type Membership = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct TestProblem {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub tags: Vec<ProblemTag>,
    /// Known critical values (composite critical values for composites).
    /// Empty when no analytic description is available (the network).
    pub critical_values: Vec<f64>,
    critical_member: Option<Membership>,
    critical_sampler: Option<PointSampler>,
    x0_sampler: PointSampler,
    pub default_x0: Point,
    pub flow_horizon: f64,
}

impl std::fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("tags", &self.tags)
            .finish()
    }
}

impl TestProblem {
    /// The locally Lipschitz f (the smooth-plus-kinks part for composites).
    pub fn function(&self) -> &PiecewiseLipschitzFunction {
        match &self.kind {
            ProblemKind::Plain(f) => f,
            ProblemKind::Composite(p) => p.smooth_part(),
        }
    }

    pub fn composite(&self) -> Option<&CompositeProblem> {
        match &self.kind {
            ProblemKind::Plain(_) => None,
            ProblemKind::Composite(p) => Some(p),
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self.kind, ProblemKind::Composite(_))
    }

    pub fn dim(&self) -> usize {
        self.function().dim()
    }

    pub fn has_hull(&self) -> bool {
        self.function().has_hull()
    }

    /// The problem's stationarity measure: dist(0, ∂f(x)) for plain problems,
    /// the prox residual for composites.
    pub fn criticality_residual(&self, x: &Point) -> Result<f64> {
        match &self.kind {
            ProblemKind::Plain(f) => f.criticality_residual(x),
            ProblemKind::Composite(p) => p.criticality_residual(x),
        }
    }

    pub fn in_critical_set(&self, x: &Point) -> Option<bool> {
        self.critical_member.as_ref().map(|m| m(x))
    }

    pub fn sample_critical(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        self.critical_sampler.as_ref().map(|s| s(rng))
    }

    pub fn sample_x0(&self, rng: &mut ChaCha8Rng) -> Point {
        (self.x0_sampler)(rng)
    }
}

/// Look up a catalog problem by its CLI name.
pub fn by_name(name: &str) -> Result<TestProblem> {
    catalog()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem(name.into()))
}

pub fn problem_names() -> Vec<&'static str> {
    catalog().iter().map(|p| p.name).collect()
}

/// The full problem catalog.
pub fn catalog() -> Vec<TestProblem> {
    vec![
        abs_problem(),
        quad_problem(),
        xy_abs_square_problem(),
        cusp_quad_problem(),
        neg_abs_problem(),
        l1_quadratic_problem(),
        box_quad_problem(),
        sphere_quad_problem(),
        coercive_l4_problem(),
        relu_net_problem(),
    ]
}

fn point1(v: f64) -> Point {
    Point::new(vec![v])
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..=hi)
}

// ---------------------------------------------------------------------------
// |x|
// ---------------------------------------------------------------------------

pub fn abs_function() -> PiecewiseLipschitzFunction {
    PiecewiseLipschitzFunction::with_hull(
        "abs",
        1,
        Arc::new(|x: &Point| x[0].abs()),
        Arc::new(|x: &Point| {
            if x[0].abs() <= KINK_TOL {
                vec![point1(-1.0), point1(1.0)]
            } else {
                vec![point1(x[0].signum())]
            }
        }),
        Arc::new(|_: &Point, _: f64| 1.0),
    )
}

fn abs_problem() -> TestProblem {
    TestProblem {
        name: "abs",
        kind: ProblemKind::Plain(abs_function()),
        tags: vec![ProblemTag::SubdiffRegular],
        critical_values: vec![0.0],
        critical_member: Some(Arc::new(|x: &Point| x[0].abs() <= CRITICAL_SET_TOL)),
        critical_sampler: Some(Arc::new(|_rng| point1(0.0))),
        x0_sampler: Arc::new(|rng| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            point1(sign * uniform(rng, 0.1, 2.0))
        }),
        default_x0: point1(1.0),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// (1/2)||x||^2 in R^2
// ---------------------------------------------------------------------------

pub fn quad_function() -> PiecewiseLipschitzFunction {
    PiecewiseLipschitzFunction::with_hull(
        "quad",
        2,
        Arc::new(|x: &Point| 0.5 * x.norm_sq()),
        Arc::new(|x: &Point| vec![x.clone()]),
        Arc::new(|c: &Point, r: f64| c.norm() + r),
    )
}

fn quad_problem() -> TestProblem {
    TestProblem {
        name: "quad",
        kind: ProblemKind::Plain(quad_function()),
        tags: vec![ProblemTag::Smooth, ProblemTag::SubdiffRegular],
        critical_values: vec![0.0],
        critical_member: Some(Arc::new(|x: &Point| x.norm() <= CRITICAL_SET_TOL)),
        critical_sampler: Some(Arc::new(|_rng| Point::zeros(2))),
        x0_sampler: Arc::new(|rng| {
            Point::new(vec![uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)])
        }),
        default_x0: Point::new(vec![1.0, 0.0]),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// (|x| - |y|)^2
// ---------------------------------------------------------------------------

/// One-sided gradient limits of (|x|-|y|)^2 around the axes. Off the axes the
/// gradient is 2u*(sgn x, -sgn y) with u = |x|-|y|; on an axis the limits
/// across the kink keep the smooth coordinate and flip the kinked one. At the
/// origin every limit vanishes. The axis analysis is confirmed numerically by
/// the one-sided-limit cross-validation test rather than hand-asserted.
pub fn xy_abs_square_function() -> PiecewiseLipschitzFunction {
    PiecewiseLipschitzFunction::with_hull(
        "xy-abs-square",
        2,
        Arc::new(|p: &Point| {
            let u = p[0].abs() - p[1].abs();
            u * u
        }),
        Arc::new(|p: &Point| {
            let (x, y) = (p[0], p[1]);
            let on_x = x.abs() <= KINK_TOL;
            let on_y = y.abs() <= KINK_TOL;
            match (on_x, on_y) {
                (false, false) => {
                    let u = x.abs() - y.abs();
                    vec![Point::new(vec![2.0 * u * x.signum(), -2.0 * u * y.signum()])]
                }
                (true, false) => {
                    // u -> -|y| from both sides of the x-kink.
                    let a = 2.0 * y.abs();
                    vec![
                        Point::new(vec![a, a * y.signum()]),
                        Point::new(vec![-a, a * y.signum()]),
                    ]
                }
                (false, true) => {
                    let a = 2.0 * x.abs();
                    vec![
                        Point::new(vec![a * x.signum(), -a]),
                        Point::new(vec![a * x.signum(), a]),
                    ]
                }
                // All gradient limits vanish at the origin.
                (true, true) => vec![Point::zeros(2)],
            }
        }),
        Arc::new(|c: &Point, r: f64| {
            let m = c.norm() + r;
            4.0 * m
        }),
    )
}

fn xy_abs_square_problem() -> TestProblem {
    TestProblem {
        name: "xy-abs-square",
        kind: ProblemKind::Plain(xy_abs_square_function()),
        tags: vec![ProblemTag::StratifiableOnly],
        critical_values: vec![0.0],
        critical_member: Some(Arc::new(|p: &Point| {
            (p[0].abs() - p[1].abs()).abs() <= CRITICAL_SET_TOL
        })),
        critical_sampler: Some(Arc::new(|rng| {
            let t = uniform(rng, 0.0, 3.0);
            let sx = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let sy = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Point::new(vec![sx * t, sy * t])
        })),
        x0_sampler: Arc::new(|rng| {
            Point::new(vec![uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)])
        }),
        default_x0: Point::new(vec![2.0, 1.0]),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// (1 - max(x, 0))^2
// ---------------------------------------------------------------------------

/// The downward kink at 0 (one-sided limits {0, -2}) makes 0 Clarke critical
/// with value 1 even though the function is not subdifferentially regular
/// there; the global minimizer is x = 1 with value 0.
pub fn cusp_quad_function() -> PiecewiseLipschitzFunction {
    PiecewiseLipschitzFunction::with_hull(
        "cusp-quad",
        1,
        Arc::new(|p: &Point| {
            let m = p[0].max(0.0);
            (1.0 - m) * (1.0 - m)
        }),
        Arc::new(|p: &Point| {
            let x = p[0];
            if x.abs() <= KINK_TOL {
                vec![point1(0.0), point1(-2.0)]
            } else if x < 0.0 {
                vec![point1(0.0)]
            } else {
                vec![point1(-2.0 * (1.0 - x))]
            }
        }),
        Arc::new(|c: &Point, r: f64| 2.0 * (1.0 + c[0].abs() + r)),
    )
}

fn cusp_quad_problem() -> TestProblem {
    TestProblem {
        name: "cusp-quad",
        kind: ProblemKind::Plain(cusp_quad_function()),
        tags: vec![ProblemTag::StratifiableOnly],
        critical_values: vec![0.0, 1.0],
        critical_member: Some(Arc::new(|p: &Point| {
            p[0] <= CRITICAL_SET_TOL || (p[0] - 1.0).abs() <= CRITICAL_SET_TOL
        })),
        critical_sampler: Some(Arc::new(|rng| match rng.random_range(0..3) {
            0 => point1(1.0),
            1 => point1(0.0),
            _ => point1(uniform(rng, -3.0, -0.01)),
        })),
        x0_sampler: Arc::new(|rng| point1(uniform(rng, -1.0, 4.0))),
        default_x0: point1(3.0),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// -|x| on [-1, 1] (composite; not subdifferentially regular)
// ---------------------------------------------------------------------------

pub fn neg_abs_function() -> PiecewiseLipschitzFunction {
    PiecewiseLipschitzFunction::with_hull(
        "neg-abs",
        1,
        Arc::new(|p: &Point| -p[0].abs()),
        Arc::new(|p: &Point| {
            if p[0].abs() <= KINK_TOL {
                vec![point1(-1.0), point1(1.0)]
            } else {
                vec![point1(-p[0].signum())]
            }
        }),
        Arc::new(|_: &Point, _: f64| 1.0),
    )
}

fn neg_abs_problem() -> TestProblem {
    let composite = CompositeProblem::new(
        StochasticOracle::new(neg_abs_function(), NoiseModel::Zero),
        Regularizer::Zero,
        ConstraintSet::boxed(vec![-1.0], vec![1.0]),
    )
    .expect("dims agree");
    TestProblem {
        name: "neg-abs",
        kind: ProblemKind::Composite(composite),
        tags: vec![ProblemTag::StratifiableOnly, ProblemTag::Composite],
        critical_values: vec![-1.0, 0.0],
        critical_member: Some(Arc::new(|p: &Point| {
            [(p[0] + 1.0).abs(), p[0].abs(), (p[0] - 1.0).abs()]
                .iter()
                .any(|d| *d <= CRITICAL_SET_TOL)
        })),
        critical_sampler: Some(Arc::new(|rng| {
            point1([-1.0, 0.0, 1.0][rng.random_range(0..3)])
        })),
        x0_sampler: Arc::new(|rng| point1(uniform(rng, -1.0, 1.0))),
        default_x0: point1(0.3),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// L1-regularized 1-D quadratic: f = (1/2)(x-2)^2, g = 0.5|x|, X = R
// ---------------------------------------------------------------------------

/// Composite critical point: 0 in (x-2) + 0.5 ∂|x|(x), i.e. the
/// soft-threshold fixed point x* = 2 - 0.5 = 1.5 with phi(x*) = 0.875.
pub const L1_QUADRATIC_FIXED_POINT: f64 = 1.5;

fn l1_quadratic_problem() -> TestProblem {
    let f = PiecewiseLipschitzFunction::with_hull(
        "l1-quadratic",
        1,
        Arc::new(|p: &Point| 0.5 * (p[0] - 2.0) * (p[0] - 2.0)),
        Arc::new(|p: &Point| vec![point1(p[0] - 2.0)]),
        Arc::new(|c: &Point, r: f64| (c[0] - 2.0).abs() + r),
    );
    let composite = CompositeProblem::new(
        StochasticOracle::new(f, NoiseModel::Zero),
        Regularizer::L1 { weight: 0.5 },
        ConstraintSet::full_space(1),
    )
    .expect("dims agree");
    let phi_star = 0.5 * 0.25 + 0.5 * 1.5;
    TestProblem {
        name: "l1-quadratic",
        kind: ProblemKind::Composite(composite),
        tags: vec![ProblemTag::SubdiffRegular, ProblemTag::Composite],
        critical_values: vec![phi_star],
        critical_member: Some(Arc::new(|p: &Point| {
            (p[0] - L1_QUADRATIC_FIXED_POINT).abs() <= CRITICAL_SET_TOL
        })),
        critical_sampler: Some(Arc::new(|_rng| point1(L1_QUADRATIC_FIXED_POINT))),
        x0_sampler: Arc::new(|rng| point1(uniform(rng, -1.0, 5.0))),
        default_x0: point1(5.0),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// Box-constrained quadratic: f = (1/2)(x-3)^2, X = [0, 1]
// ---------------------------------------------------------------------------

fn box_quad_problem() -> TestProblem {
    let f = PiecewiseLipschitzFunction::with_hull(
        "box-quad",
        1,
        Arc::new(|p: &Point| 0.5 * (p[0] - 3.0) * (p[0] - 3.0)),
        Arc::new(|p: &Point| vec![point1(p[0] - 3.0)]),
        Arc::new(|c: &Point, r: f64| (c[0] - 3.0).abs() + r),
    );
    let composite = CompositeProblem::new(
        StochasticOracle::new(f, NoiseModel::Zero),
        Regularizer::Zero,
        ConstraintSet::boxed(vec![0.0], vec![1.0]),
    )
    .expect("dims agree");
    TestProblem {
        name: "box-quad",
        kind: ProblemKind::Composite(composite),
        tags: vec![ProblemTag::SubdiffRegular, ProblemTag::Composite],
        // The active bound x = 1 is the unique composite critical point.
        critical_values: vec![2.0],
        critical_member: Some(Arc::new(|p: &Point| {
            (p[0] - 1.0).abs() <= CRITICAL_SET_TOL
        })),
        critical_sampler: Some(Arc::new(|_rng| point1(1.0))),
        x0_sampler: Arc::new(|rng| point1(uniform(rng, -1.0, 5.0))),
        default_x0: point1(0.25),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// Sphere-constrained quadratic: f = (1/2)||x - (2,0)||^2, X = unit sphere
// ---------------------------------------------------------------------------

fn sphere_quad_problem() -> TestProblem {
    let f = PiecewiseLipschitzFunction::with_hull(
        "sphere-quad",
        2,
        Arc::new(|p: &Point| {
            let dx = p[0] - 2.0;
            0.5 * (dx * dx + p[1] * p[1])
        }),
        Arc::new(|p: &Point| vec![Point::new(vec![p[0] - 2.0, p[1]])]),
        Arc::new(|c: &Point, r: f64| c.dist(&Point::new(vec![2.0, 0.0])) + r),
    );
    let composite = CompositeProblem::new(
        StochasticOracle::new(f, NoiseModel::Zero),
        Regularizer::Zero,
        ConstraintSet::sphere(Point::zeros(2), 1.0),
    )
    .expect("dims agree");
    TestProblem {
        name: "sphere-quad",
        kind: ProblemKind::Composite(composite),
        tags: vec![ProblemTag::Composite],
        // (x - c) must lie in the normal space span{x}: x = (1,0) or (-1,0).
        critical_values: vec![0.5, 4.5],
        critical_member: Some(Arc::new(|p: &Point| {
            let plus = Point::new(vec![1.0, 0.0]);
            let minus = Point::new(vec![-1.0, 0.0]);
            p.dist(&plus) <= CRITICAL_SET_TOL || p.dist(&minus) <= CRITICAL_SET_TOL
        })),
        critical_sampler: Some(Arc::new(|rng| {
            if rng.random::<bool>() {
                Point::new(vec![1.0, 0.0])
            } else {
                Point::new(vec![-1.0, 0.0])
            }
        })),
        x0_sampler: Arc::new(|rng| {
            Point::new(vec![uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)])
        }),
        default_x0: Point::new(vec![0.0, 1.0]),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// Coercively regularized polyhedral objective:
// f = <c, x> + ||x||_1, g = ||x||^4, X = R^3
// ---------------------------------------------------------------------------

/// Linear coefficient; every |c_i| > 1 so the subgradient flow of f crosses
/// the kink hyperplanes transversally instead of sliding along them, and no
/// coordinate hyperplane carries critical points.
pub const COERCIVE_C: [f64; 3] = [1.5, -2.0, 1.25];
/// A sure bound ||zeta|| <= L(1 + ||x||) holds with L = ||c|| + sqrt(3) + r
/// for the bounded-uniform noise of radius r, matching the boundedness
/// theorem's growth hypothesis with nu = 1 against the 4-coercive g.
pub fn coercive_growth_bound(noise_radius: f64) -> f64 {
    let c = Point::new(COERCIVE_C.to_vec());
    c.norm() + 3.0_f64.sqrt() + noise_radius
}

pub fn coercive_l4_function() -> PiecewiseLipschitzFunction {
    let c = COERCIVE_C;
    PiecewiseLipschitzFunction::with_hull(
        "coercive-l4",
        3,
        Arc::new(move |p: &Point| {
            c.iter().zip(p.coords()).map(|(ci, xi)| ci * xi).sum::<f64>() + p.norm_l1()
        }),
        Arc::new(move |p: &Point| {
            // Product of {c_i + sgn(x_i)} over smooth coordinates and
            // {c_i - 1, c_i + 1} over kink coordinates.
            let mut gens = vec![Vec::with_capacity(3)];
            for i in 0..3 {
                let xi = p[i];
                if xi.abs() <= KINK_TOL {
                    let mut doubled = Vec::with_capacity(gens.len() * 2);
                    for g in &gens {
                        let mut lo = g.clone();
                        lo.push(c[i] - 1.0);
                        let mut hi = g.clone();
                        hi.push(c[i] + 1.0);
                        doubled.push(lo);
                        doubled.push(hi);
                    }
                    gens = doubled;
                } else {
                    for g in &mut gens {
                        g.push(c[i] + xi.signum());
                    }
                }
            }
            gens.into_iter().map(Point::new).collect()
        }),
        Arc::new(move |_: &Point, _: f64| {
            Point::new(c.to_vec()).norm() + 3.0_f64.sqrt()
        }),
    )
}

fn coercive_critical_point() -> Point {
    // 0 = c_i + s_i + 4||x||^2 x_i with s_i = -sgn(c_i) forces
    // x = -w / (4 r^2), w_i = sgn(c_i)(|c_i| - 1), and 16 r^6 = ||w||^2.
    let w = Point::new(
        COERCIVE_C
            .iter()
            .map(|ci| ci.signum() * (ci.abs() - 1.0))
            .collect(),
    );
    let r = (w.norm_sq() / 16.0).powf(1.0 / 6.0);
    w.scale(-1.0 / (4.0 * r * r))
}

fn coercive_l4_problem() -> TestProblem {
    let composite = CompositeProblem::new(
        StochasticOracle::new(coercive_l4_function(), NoiseModel::Zero),
        Regularizer::PowerNorm { weight: 1.0, exponent: 4.0 },
        ConstraintSet::full_space(3),
    )
    .expect("dims agree");
    let x_star = coercive_critical_point();
    let phi_star = composite.phi(&x_star).expect("phi at the critical point");
    let member_star = x_star.clone();
    let sampler_star = x_star.clone();
    TestProblem {
        name: "coercive-l4",
        kind: ProblemKind::Composite(composite),
        tags: vec![ProblemTag::SubdiffRegular, ProblemTag::Composite],
        critical_values: vec![phi_star],
        critical_member: Some(Arc::new(move |p: &Point| {
            p.dist(&member_star) <= 1e-4
        })),
        critical_sampler: Some(Arc::new(move |_rng| sampler_star.clone())),
        x0_sampler: Arc::new(|rng| {
            Point::new((0..3).map(|_| uniform(rng, 1.0, 3.0)).collect())
        }),
        default_x0: Point::new(vec![5.0, 5.0, 5.0]),
        flow_horizon: 1.0,
    }
}

// ---------------------------------------------------------------------------
// 2-4-1 ReLU network with square loss on 8 fixed data points
// ---------------------------------------------------------------------------

pub const NET_INPUT: usize = 2;
pub const NET_HIDDEN: usize = 4;
/// W1 (4x2) + b1 (4) + w2 (4) + b2 (1).
pub const NET_PARAMS: usize = NET_HIDDEN * NET_INPUT + NET_HIDDEN + NET_HIDDEN + 1;

/// Fixed training pairs ((x1, x2), y).
pub const NET_DATA: [([f64; 2], f64); 8] = [
    ([0.5, -1.0], 0.9),
    ([-0.3, 0.8], -0.9),
    ([1.2, 0.4], 0.9),
    ([-0.9, -0.7], 0.9),
    ([0.1, 1.1], -0.9),
    ([-1.4, 0.2], -0.9),
    ([0.8, -0.6], 0.9),
    ([-0.2, -1.3], 0.9),
];

struct NetView<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: f64,
}

fn net_view(w: &Point) -> NetView<'_> {
    let c = w.coords();
    let (w1, rest) = c.split_at(NET_HIDDEN * NET_INPUT);
    let (b1, rest) = rest.split_at(NET_HIDDEN);
    let (w2, b2) = rest.split_at(NET_HIDDEN);
    NetView { w1, b1, w2, b2: b2[0] }
}

fn net_forward(v: &NetView, x: &[f64; 2]) -> ([f64; NET_HIDDEN], [f64; NET_HIDDEN], f64) {
    let mut pre = [0.0; NET_HIDDEN];
    let mut act = [0.0; NET_HIDDEN];
    for h in 0..NET_HIDDEN {
        pre[h] = v.w1[h * NET_INPUT] * x[0] + v.w1[h * NET_INPUT + 1] * x[1] + v.b1[h];
        act[h] = pre[h].max(0.0);
    }
    let out = v.w2.iter().zip(&act).map(|(a, b)| a * b).sum::<f64>() + v.b2;
    (pre, act, out)
}

/// Total square loss sum_j (1/2)(out(w; x_j) - y_j)^2.
pub fn network_loss(w: &Point) -> f64 {
    let v = net_view(w);
    NET_DATA
        .iter()
        .map(|(x, y)| {
            let (_, _, out) = net_forward(&v, x);
            0.5 * (out - y) * (out - y)
        })
        .sum()
}

/// Backprop selection with the documented kink convention: the derivative of
/// max(0, t) at t = 0 is taken to be 0. The result is a Clarke subgradient at
/// differentiable points; at kinks it is one limiting element, which is all a
/// composition guarantees.
pub fn network_subgrad_select(w: &Point) -> Point {
    let v = net_view(w);
    let mut grad = vec![0.0; NET_PARAMS];
    let (g_w1, rest) = grad.split_at_mut(NET_HIDDEN * NET_INPUT);
    let (g_b1, rest) = rest.split_at_mut(NET_HIDDEN);
    let (g_w2, g_b2) = rest.split_at_mut(NET_HIDDEN);
    for (x, y) in &NET_DATA {
        let (pre, act, out) = net_forward(&v, x);
        let d_out = out - y;
        for h in 0..NET_HIDDEN {
            g_w2[h] += d_out * act[h];
            // relu'(0) := 0.
            let d_pre = if pre[h] > 0.0 { d_out * v.w2[h] } else { 0.0 };
            g_w1[h * NET_INPUT] += d_pre * x[0];
            g_w1[h * NET_INPUT + 1] += d_pre * x[1];
            g_b1[h] += d_pre;
        }
        g_b2[0] += d_out;
    }
    Point::new(grad)
}

pub fn relu_net_function() -> PiecewiseLipschitzFunction {
    PiecewiseLipschitzFunction::selection_only(
        "relu-net",
        NET_PARAMS,
        Arc::new(network_loss),
        Arc::new(network_subgrad_select),
        // Crude but valid on bounded balls: loss is piecewise polynomial.
        Arc::new(|c: &Point, r: f64| {
            let m = c.norm() + r + 1.0;
            16.0 * m * m * m
        }),
    )
}

/// Deterministic small init for the network weights.
pub fn network_default_init() -> Point {
    let mut rng = sampling_stream(1234);
    Point::new((0..NET_PARAMS).map(|_| uniform(&mut rng, -0.5, 0.5)).collect())
}

fn relu_net_problem() -> TestProblem {
    TestProblem {
        name: "relu-net",
        kind: ProblemKind::Plain(relu_net_function()),
        tags: vec![ProblemTag::StratifiableOnly],
        critical_values: vec![],
        critical_member: None,
        critical_sampler: None,
        x0_sampler: Arc::new(|rng| {
            let mut w = network_default_init();
            for c in w.coords_mut() {
                *c += 0.1 * uniform(rng, -1.0, 1.0);
            }
            w
        }),
        default_x0: network_default_init(),
        flow_horizon: 1.0,
    }
}

/// Sampled-gradient stationarity surrogate: the min-norm point of subgradient
/// selections sampled uniformly in a ball around x. Conservative and
/// computable for functions exposing only selections (the network); matches
/// the convexified-gradient-limits construction of the subdifferential.
pub fn sampled_gradient_residual(
    f: &PiecewiseLipschitzFunction,
    x: &Point,
    radius: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut gens = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut probe = x.clone();
        for c in probe.coords_mut() {
            *c += uniform(rng, -radius, radius);
        }
        gens.push(f.subgrad_select(&probe)?);
    }
    Ok(min_norm_point(&Hull::new(gens)?)?.norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numdiff::central_gradient;

    #[test]
    fn catalog_is_stable() {
        let names = problem_names();
        assert_eq!(
            names,
            vec![
                "abs",
                "quad",
                "xy-abs-square",
                "cusp-quad",
                "neg-abs",
                "l1-quadratic",
                "box-quad",
                "sphere-quad",
                "coercive-l4",
                "relu-net"
            ]
        );
        assert!(by_name("abs").is_ok());
        assert!(matches!(by_name("nope"), Err(Error::UnknownProblem(_))));
    }

    #[test]
    fn xy_examples() {
        let f = xy_abs_square_function();
        assert_eq!(f.evaluate(&Point::new(vec![1.0, 1.0])).unwrap(), 0.0);
        let h = f.hull_at(&Point::new(vec![1.0, 0.0])).unwrap();
        let mut gens: Vec<Vec<f64>> =
            h.generators().iter().map(|g| g.coords().to_vec()).collect();
        gens.sort_by(|a, b| a[1].total_cmp(&b[1]));
        assert_eq!(gens, vec![vec![2.0, -2.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn cusp_is_critical_at_zero_with_value_one() {
        let p = cusp_quad_problem();
        let origin = Point::zeros(1);
        assert!(p.in_critical_set(&origin).unwrap());
        assert_eq!(p.function().evaluate(&origin).unwrap(), 1.0);
        assert!(p.criticality_residual(&origin).unwrap() <= 1e-12);
        let sel = p.function().subgrad_select(&origin).unwrap();
        assert!(sel[0].abs() <= 1e-12, "selection from conv{{0,-2}} is 0");
        let minimum = Point::new(vec![1.0]);
        assert!(p.in_critical_set(&minimum).unwrap());
        assert_eq!(p.function().evaluate(&minimum).unwrap(), 0.0);
    }

    #[test]
    fn coercive_critical_point_is_stationary() {
        let p = coercive_l4_problem();
        let mut rng = sampling_stream(0);
        let x_star = p.sample_critical(&mut rng).unwrap();
        let r = p.criticality_residual(&x_star).unwrap();
        assert!(r <= 1e-6, "residual at derived critical point: {}", r);
    }

    #[test]
    fn coercive_hull_counts() {
        let f = coercive_l4_function();
        assert_eq!(f.hull_at(&Point::new(vec![1.0, 1.0, 1.0])).unwrap().len(), 1);
        assert_eq!(f.hull_at(&Point::new(vec![0.0, 1.0, 1.0])).unwrap().len(), 2);
        assert_eq!(f.hull_at(&Point::zeros(3)).unwrap().len(), 8);
    }

    #[test]
    fn network_zero_weights_loss() {
        let w = Point::zeros(NET_PARAMS);
        let expected: f64 = NET_DATA.iter().map(|(_, y)| 0.5 * y * y).sum();
        assert_eq!(network_loss(&w), expected);
    }

    #[test]
    fn network_backprop_matches_finite_differences() {
        let w = network_default_init();
        let g = network_subgrad_select(&w);
        let fd = central_gradient(&network_loss, &w, None);
        assert!(
            g.dist(&fd) <= 1e-5 * w.norm().max(1.0),
            "backprop vs FD: {}",
            g.dist(&fd)
        );
    }

    #[test]
    fn network_has_no_hull() {
        let p = by_name("relu-net").unwrap();
        assert!(!p.has_hull());
        assert!(p.criticality_residual(&p.default_x0).is_err());
        assert!(p.in_critical_set(&p.default_x0).is_none());
    }

    #[test]
    fn critical_values_attained_by_critical_samples() {
        let mut rng = sampling_stream(11);
        for p in catalog() {
            let Some(_) = p.critical_sampler.as_ref() else { continue };
            // Every listed critical value must be attained by some point
            // passing the membership oracle. The samplers cover the sets, so
            // scan a batch of samples for each value.
            let samples: Vec<Point> =
                (0..200).map(|_| p.sample_critical(&mut rng).unwrap()).collect();
            for &cv in &p.critical_values {
                let attained = samples.iter().any(|s| {
                    let v = match &p.kind {
                        ProblemKind::Plain(f) => f.evaluate(s).unwrap(),
                        ProblemKind::Composite(c) => c.phi(s).unwrap(),
                    };
                    p.in_critical_set(s).unwrap() && (v - cv).abs() <= 1e-9
                });
                assert!(attained, "{}: critical value {} not attained", p.name, cv);
            }
        }
    }
}
