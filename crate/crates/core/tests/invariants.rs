//! Cross-module invariants: subgradient selections against the hull oracles
//! and finite differences, prox optimality and displacement bounds, noise
//! partial sums, flow descent monotonicity, and testbed metadata soundness.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use nsopt_core::constraint::{prox_step, ConstraintKind, ConstraintSet, Regularizer};
use nsopt_core::flow::{integrate_composite_flow, integrate_flow, FlowOptions};
use nsopt_core::geometry::{dist_to_hull, min_norm_point, Hull};
use nsopt_core::harness::{run_problem, tail_statistics};
use nsopt_core::noise::NoiseModel;
use nsopt_core::numdiff::{central_gradient, one_sided_gradients, ONE_SIDED_OFFSET};
use nsopt_core::rng::{noise_stream, sampling_stream};
use nsopt_core::schedule::StepSchedule;
use nsopt_core::testbed::{self, by_name, sampled_gradient_residual, ProblemKind};
use nsopt_core::Point;

fn hull_problems() -> Vec<testbed::TestProblem> {
    testbed::catalog().into_iter().filter(|p| p.has_hull()).collect()
}

/// Representative points that avoid the coordinate kink bands, where finite
/// differences would straddle a nondifferentiability.
fn differentiable_point(p: &testbed::TestProblem, rng: &mut ChaCha8Rng) -> Point {
    loop {
        let x = p.sample_x0(rng);
        let clear = x.coords().iter().all(|c| c.abs() > 1e-4);
        let xy_clear = p.name != "xy-abs-square"
            || (x[0].abs() - x[1].abs()).abs() > 1e-4;
        if clear && xy_clear {
            return x;
        }
    }
}

// --- function model ---------------------------------------------------------

#[test]
fn selection_lies_in_hull_everywhere() {
    let mut rng = sampling_stream(21);
    for p in hull_problems() {
        let f = p.function();
        for _ in 0..200 {
            let x = p.sample_x0(&mut rng);
            let sel = f.subgrad_select(&x).unwrap();
            let d = dist_to_hull(&f.hull_at(&x).unwrap(), &sel).unwrap();
            assert!(d <= 1e-9, "{} at {:?}: selection {} outside hull", p.name, x.coords(), d);
        }
        // Including the kink points themselves.
        let kink = Point::zeros(f.dim());
        let sel = f.subgrad_select(&kink).unwrap();
        let d = dist_to_hull(&f.hull_at(&kink).unwrap(), &sel).unwrap();
        assert!(d <= 1e-9, "{} at origin: {}", p.name, d);
    }
}

#[test]
fn selection_matches_finite_differences_at_differentiable_points() {
    let mut rng = sampling_stream(22);
    for p in hull_problems() {
        let f = p.function();
        for _ in 0..1000 {
            let x = differentiable_point(&p, &mut rng);
            let hull = f.hull_at(&x).unwrap();
            if hull.len() != 1 {
                continue;
            }
            let sel = f.subgrad_select(&x).unwrap();
            let fd = central_gradient(&|y: &Point| f.evaluate(y).unwrap(), &x, None);
            let tol = 1e-5 * f.lipschitz_bound_on(&x, 1e-3).max(1.0);
            assert!(
                sel.dist(&fd) <= tol,
                "{} at {:?}: selection vs FD {} > {}",
                p.name,
                x.coords(),
                sel.dist(&fd),
                tol
            );
        }
    }
}

#[test]
fn hull_generators_match_one_sided_limits_across_kinks() {
    // The kink metadata is derived, not hand-asserted: one-sided gradient
    // limits across each kink must reproduce the hull generators.
    let close = |gens: &Hull, probe: &Point| {
        gens.generators().iter().any(|g| g.dist(probe) <= 1e-4)
    };

    let abs = by_name("abs").unwrap();
    let h = abs.function().hull_at(&Point::zeros(1)).unwrap();
    let (l, r) = one_sided_gradients(
        &|y: &Point| abs.function().evaluate(y).unwrap(),
        &Point::zeros(1),
        0,
        ONE_SIDED_OFFSET,
    );
    assert!(close(&h, &l) && close(&h, &r));

    let cusp = by_name("cusp-quad").unwrap();
    let h = cusp.function().hull_at(&Point::zeros(1)).unwrap();
    let (l, r) = one_sided_gradients(
        &|y: &Point| cusp.function().evaluate(y).unwrap(),
        &Point::zeros(1),
        0,
        ONE_SIDED_OFFSET,
    );
    assert!(close(&h, &l) && close(&h, &r), "cusp limits {:?} {:?}", l, r);

    // (|x|-|y|)^2 on the axes: the derived two-generator hulls.
    let xy = by_name("xy-abs-square").unwrap();
    let mut rng = sampling_stream(23);
    for _ in 0..50 {
        let y: f64 = rng.random_range(0.2..2.0);
        let at = Point::new(vec![0.0, y]);
        let h = xy.function().hull_at(&at).unwrap();
        assert_eq!(h.len(), 2);
        let (l, r) = one_sided_gradients(
            &|p: &Point| xy.function().evaluate(p).unwrap(),
            &at,
            0,
            ONE_SIDED_OFFSET,
        );
        assert!(close(&h, &l) && close(&h, &r), "xy axis limits at y={}", y);

        let x: f64 = rng.random_range(0.2..2.0);
        let at = Point::new(vec![x, 0.0]);
        let h = xy.function().hull_at(&at).unwrap();
        let (l, r) = one_sided_gradients(
            &|p: &Point| xy.function().evaluate(p).unwrap(),
            &at,
            1,
            ONE_SIDED_OFFSET,
        );
        assert!(close(&h, &l) && close(&h, &r), "xy axis limits at x={}", x);
    }

    // <c,x> + ||x||_1 across a coordinate hyperplane.
    let co = by_name("coercive-l4").unwrap();
    let at = Point::new(vec![0.0, 1.0, -1.0]);
    let h = co.function().hull_at(&at).unwrap();
    assert_eq!(h.len(), 2);
    let (l, r) = one_sided_gradients(
        &|p: &Point| co.function().evaluate(p).unwrap(),
        &at,
        0,
        ONE_SIDED_OFFSET,
    );
    assert!(close(&h, &l) && close(&h, &r));
}

// --- prox --------------------------------------------------------------------

fn supported_pairs() -> Vec<(ConstraintSet, Regularizer)> {
    vec![
        (ConstraintSet::full_space(2), Regularizer::L1 { weight: 0.7 }),
        (
            ConstraintSet::full_space(3),
            Regularizer::PowerNorm { weight: 0.5, exponent: 4.0 },
        ),
        (
            ConstraintSet::full_space(2),
            Regularizer::PowerNorm { weight: 1.0, exponent: 1.5 },
        ),
        (ConstraintSet::boxed(vec![-1.0, 0.0], vec![1.0, 2.0]), Regularizer::Zero),
        (
            ConstraintSet::boxed(vec![-1.0, 0.0], vec![1.0, 2.0]),
            Regularizer::L1 { weight: 0.3 },
        ),
        (ConstraintSet::ball(Point::zeros(2), 1.5), Regularizer::Zero),
        (ConstraintSet::sphere(Point::zeros(2), 1.0), Regularizer::Zero),
        (
            ConstraintSet::new(
                1,
                ConstraintKind::UnionOfBoxes {
                    boxes: vec![(vec![-2.0], vec![-0.5]), (vec![0.5], vec![2.0])],
                },
            ),
            Regularizer::Zero,
        ),
        (
            ConstraintSet::new(
                1,
                ConstraintKind::UnionOfBoxes {
                    boxes: vec![(vec![-2.0], vec![-0.5]), (vec![0.5], vec![2.0])],
                },
            ),
            Regularizer::L1 { weight: 0.4 },
        ),
        (
            ConstraintSet::new(
                2,
                ConstraintKind::ConvexPolytope {
                    vertices: vec![
                        Point::new(vec![0.0, 0.0]),
                        Point::new(vec![2.0, 0.0]),
                        Point::new(vec![0.0, 2.0]),
                        Point::new(vec![1.5, 1.5]),
                    ],
                },
            ),
            Regularizer::Zero,
        ),
    ]
}

#[test]
fn prox_output_feasible_and_idempotent() {
    let mut rng = sampling_stream(31);
    for (set, g) in supported_pairs() {
        for _ in 0..300 {
            let z = Point::new(
                (0..set.dim()).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>(),
            );
            let alpha = rng.random_range(0.01..2.0);
            let p = prox_step(&set, &g, alpha, &z).unwrap();
            assert!(set.contains(&p), "{} + {}: infeasible prox output", set.kind().tag(), g.tag());
        }
        // Euclidean projection (g = 0) fixes feasible points of convex sets.
        if matches!(g, Regularizer::Zero)
            && matches!(
                set.kind(),
                ConstraintKind::FullSpace
                    | ConstraintKind::Box { .. }
                    | ConstraintKind::Ball { .. }
                    | ConstraintKind::ConvexPolytope { .. }
            )
        {
            for _ in 0..100 {
                let x = set.sample(&mut rng);
                let p = prox_step(&set, &g, 0.5, &x).unwrap();
                assert!(p.dist(&x) <= 1e-7, "{}: projection moved a feasible point by {}", set.kind().tag(), p.dist(&x));
            }
        }
    }
}

#[test]
fn prox_optimality_against_random_candidates() {
    let mut rng = sampling_stream(32);
    for (set, g) in supported_pairs() {
        for _ in 0..10 {
            let z = Point::new(
                (0..set.dim()).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>(),
            );
            let alpha = rng.random_range(0.05..1.5);
            let p = prox_step(&set, &g, alpha, &z).unwrap();
            let obj = |x: &Point| g.value(x) + x.dist(&z).powi(2) / (2.0 * alpha);
            let best = obj(&p);
            for _ in 0..1000 {
                let w = set.sample(&mut rng);
                assert!(
                    obj(&w) >= best - 1e-9,
                    "{} + {}: candidate beats prox by {:.3e}",
                    set.kind().tag(),
                    g.tag(),
                    best - obj(&w)
                );
            }
        }
    }
}

#[test]
fn prox_displacement_bound_on_random_triples() {
    // a^-1 ||x - T_a(x - a v)|| <= 2 L(x) + 2 ||v|| for feasible x.
    let mut rng = sampling_stream(33);
    for (set, g) in supported_pairs() {
        for _ in 0..2000 {
            let x = set.sample(&mut rng);
            let v = Point::new(
                (0..set.dim()).map(|_| rng.random_range(-4.0..4.0)).collect::<Vec<_>>(),
            );
            let alpha = rng.random_range(0.01..2.0);
            let mut probe = x.clone();
            probe.axpy(-alpha, &v);
            let plus = prox_step(&set, &g, alpha, &probe).unwrap();
            let lhs = x.dist(&plus) / alpha;
            let rhs = 2.0 * g.descent_modulus(&x) + 2.0 * v.norm();
            assert!(
                lhs <= rhs + 1e-9,
                "{} + {}: displacement {} > bound {}",
                set.kind().tag(),
                g.tag(),
                lhs,
                rhs
            );
        }
    }
}

#[test]
fn descent_modulus_inequality_for_regularizer_classes() {
    // Convex / globally Lipschitz / coercive classes all admit the modulus
    // L(x) >= (g(x) - g(z)) / ||x - z|| whenever g(z) <= g(x).
    let classes = vec![
        Regularizer::L1 { weight: 0.8 },
        Regularizer::PowerNorm { weight: 1.0, exponent: 4.0 },
        Regularizer::PowerNorm { weight: 0.3, exponent: 1.5 },
    ];
    let mut rng = sampling_stream(34);
    for g in classes {
        for _ in 0..10_000 {
            let a = Point::new((0..3).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
            let b = Point::new((0..3).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
            let (x, z) = if g.value(&a) >= g.value(&b) { (a, b) } else { (b, a) };
            if x.dist(&z) < 1e-12 {
                continue;
            }
            let ratio = (g.value(&x) - g.value(&z)) / x.dist(&z);
            assert!(
                ratio <= g.descent_modulus(&x) + 1e-9,
                "{}: ratio {} > modulus {}",
                g.tag(),
                ratio,
                g.descent_modulus(&x)
            );
        }
    }
}

// --- schedules & noise -------------------------------------------------------

#[test]
fn weighted_noise_partial_sums_settle() {
    // Statistical surrogate for almost-sure convergence of sum a_k xi_k:
    // past k = 1e5 the partial sums oscillate within a band of ten times the
    // remaining standard deviation, across 10 independent seeds.
    let schedule = StepSchedule::polynomial(0.5, 0.75).unwrap();
    let sigma = 0.1;
    let model = NoiseModel::GaussianIsotropic { sigma };
    let x = Point::zeros(1);
    let tail_var: f64 = (100_001..200_001)
        .map(|k| {
            let a = schedule.step(k);
            sigma * sigma * a * a
        })
        .sum();
    let band = 10.0 * tail_var.sqrt();
    for seed in 0..10u64 {
        let mut rng = noise_stream(seed);
        let mut s = 0.0;
        let mut s_ref = 0.0;
        let mut osc = 0.0_f64;
        for k in 0..200_001usize {
            s += schedule.step(k) * model.draw(&x, &mut rng)[0];
            if k == 100_000 {
                s_ref = s;
            }
            if k > 100_000 {
                osc = osc.max((s - s_ref).abs());
            }
        }
        assert!(osc <= band, "seed {}: oscillation {} > band {}", seed, osc, band);
    }
}

// --- solvers -----------------------------------------------------------------

#[test]
fn step_displacements_vanish_across_budgets() {
    let schedule = StepSchedule::polynomial(0.5, 0.75).unwrap();
    let noise = NoiseModel::GaussianIsotropic { sigma: 0.1 };
    for name in ["abs", "xy-abs-square"] {
        let p = by_name(name).unwrap();
        let mut prev = f64::INFINITY;
        for k in [1_000usize, 10_000, 100_000] {
            let log = run_problem(&p, &schedule, &noise, k, 5).unwrap();
            let tail = log.tail(0.1);
            let mut max_step = 0.0_f64;
            for w in tail.windows(2) {
                if w[1].k == w[0].k + 1 {
                    max_step = max_step.max(w[1].x.dist(&w[0].x));
                }
            }
            assert!(max_step < prev, "{}: tail step {} did not shrink (prev {})", name, max_step, prev);
            prev = max_step;
        }
    }
}

#[test]
fn prox_bound_holds_along_all_composite_runs() {
    let schedule = StepSchedule::polynomial(0.5, 0.75).unwrap();
    let noise = NoiseModel::GaussianIsotropic { sigma: 0.1 };
    for p in testbed::catalog() {
        if !p.is_composite() {
            continue;
        }
        let log = run_problem(&p, &schedule, &noise, 10_000, 3).unwrap();
        assert_eq!(log.prox_bound_violations, 0, "{}", p.name);
        for r in &log.records {
            assert!(
                p.composite().unwrap().constraint().contains(&r.x),
                "{}: logged iterate infeasible",
                p.name
            );
        }
    }
}

#[test]
fn generic_recursion_tracks_min_norm_field() {
    // Driving the generic recursion with the minimal-norm velocity of
    // (|x|-|y|)^2 lands on the valley |x| = |y|.
    let xy = by_name("xy-abs-square").unwrap();
    let f = xy.function().clone();
    let velocity = move |x: &Point| {
        min_norm_point(&f.hull_at(x).unwrap()).unwrap().point.scale(-1.0)
    };
    let cfg = nsopt_core::RunConfig::new(
        StepSchedule::polynomial(0.5, 0.75).unwrap(),
        NoiseModel::Zero,
        100_000,
        0,
        Point::new(vec![2.0, 1.0]),
    )
    .unwrap();
    let log = nsopt_core::run_generic(&velocity, Some(xy.function()), &cfg).unwrap();
    let end = log.last();
    assert!(end.f <= 1e-3, "final value {}", end.f);
}

// --- flows -------------------------------------------------------------------

#[test]
fn flow_velocity_is_min_norm_at_every_node() {
    let mut rng = sampling_stream(41);
    for p in hull_problems() {
        let x0 = p.sample_x0(&mut rng);
        let traj = integrate_flow(p.function(), &x0, FlowOptions::new(0.2)).unwrap();
        for (z, v) in traj.points.iter().zip(&traj.velocities) {
            let mn = min_norm_point(&p.function().hull_at(z).unwrap()).unwrap();
            assert!(
                v.add(&mn.point).norm() <= 1e-9,
                "{}: velocity differs from min-norm selection",
                p.name
            );
            assert!((v.norm() - mn.norm).abs() <= 1e-9);
        }
    }
}

#[test]
fn flows_descend_monotonically() {
    let mut rng = sampling_stream(42);
    for p in hull_problems() {
        for _ in 0..3 {
            let x0 = p.sample_x0(&mut rng);
            let traj = integrate_flow(p.function(), &x0, FlowOptions::new(p.flow_horizon)).unwrap();
            let slack = 1e-12 * (1.0 + traj.values[0].abs());
            for w in traj.values.windows(2) {
                assert!(w[1] <= w[0] + slack, "{}: f rose {} -> {}", p.name, w[0], w[1]);
            }
        }
    }
}

#[test]
fn composite_flows_descend_monotonically() {
    for p in testbed::catalog() {
        let Some(c) = p.composite() else { continue };
        let traj = integrate_composite_flow(c, &p.default_x0, FlowOptions::new(1.0)).unwrap();
        let slack = 1e-12 * (1.0 + traj.values[0].abs());
        for w in traj.values.windows(2) {
            assert!(w[1] <= w[0] + slack, "{}: phi rose {} -> {}", p.name, w[0], w[1]);
        }
        for z in &traj.points {
            assert!(c.constraint().contains(z), "{}: flow left the set", p.name);
        }
    }
}

#[test]
fn chain_rule_holds_along_rays_of_negative_norm() {
    // -||x|| restricted to rays from the origin: f(z(t)) = -t exactly, and
    // the generator inner product is -1 along the ray even though the
    // function has a downward cusp at the origin (not subdifferentially
    // regular there).
    use std::sync::Arc;
    let neg_norm = nsopt_core::PiecewiseLipschitzFunction::with_hull(
        "neg-norm",
        2,
        Arc::new(|x: &Point| -x.norm()),
        Arc::new(|x: &Point| {
            // Hull oracle away from the origin (the subdifferential at 0 is
            // the whole unit ball, not a polytope).
            vec![x.scale(-1.0 / x.norm())]
        }),
        Arc::new(|_: &Point, _: f64| 1.0),
    );
    let mut rng = sampling_stream(43);
    for _ in 0..20 {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = Point::new(vec![theta.cos(), theta.sin()]);
        let d = dir.clone();
        let traj = nsopt_core::Trajectory::from_arc(
            &neg_norm,
            &|t| d.scale(t),
            &|_| dir.clone(),
            0.1,
            1.0,
            500,
        )
        .unwrap();
        let report = nsopt_core::check_chain_rule(&neg_norm, &traj, 500).unwrap();
        assert!(report.max_violation <= 1e-6, "violation {}", report.max_violation);
        assert_eq!(report.skipped, 0);
        // Analytic directional derivative along the ray.
        for i in 0..traj.len() {
            assert!((traj.velocities[i].dot(&neg_norm.hull_at(&traj.points[i]).unwrap().generators()[0]) + 1.0).abs() <= 1e-12);
        }
    }
}

// --- testbed metadata ---------------------------------------------------------

#[test]
fn critical_sets_are_sound() {
    let mut rng = sampling_stream(44);
    for p in testbed::catalog() {
        let Some(_) = p.in_critical_set(&p.default_x0) else { continue };
        for _ in 0..100 {
            let x = p.sample_critical(&mut rng).unwrap();
            assert!(p.in_critical_set(&x).unwrap(), "{}: sampler left the oracle set", p.name);
            let residual = p.criticality_residual(&x).unwrap();
            let tol = match p.kind {
                ProblemKind::Plain(_) => 1e-8,
                ProblemKind::Composite(_) => 1e-6,
            };
            assert!(residual <= tol, "{} at {:?}: residual {}", p.name, x.coords(), residual);
        }
    }
}

#[test]
fn critical_value_lists_are_finite_metadata() {
    for p in testbed::catalog() {
        if p.name == "relu-net" {
            assert!(p.critical_values.is_empty());
        } else {
            assert!(!p.critical_values.is_empty());
            assert!(p.critical_values.iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn network_surrogate_residual_small_at_trained_point() {
    let p = by_name("relu-net").unwrap();
    let schedule = StepSchedule::polynomial(0.5, 0.75).unwrap();
    let log = run_problem(&p, &schedule, &NoiseModel::Zero, 30_000, 1).unwrap();
    let mut rng = sampling_stream(45);
    let trained = sampled_gradient_residual(p.function(), &log.last().x, 1e-4, 50, &mut rng).unwrap();
    let at_init =
        sampled_gradient_residual(p.function(), &p.default_x0, 1e-4, 50, &mut rng).unwrap();
    assert!(trained <= 1e-3, "surrogate residual at trained point: {}", trained);
    assert!(at_init > 1.0, "surrogate residual at init should be large: {}", at_init);
}

#[test]
fn criticality_residual_decreases_with_budget_deterministically() {
    // Zero-noise sanity companion to the seeded campaign: more budget, no
    // larger tail statistics.
    let schedule = StepSchedule::polynomial(0.5, 0.75).unwrap();
    for name in ["quad", "xy-abs-square", "l1-quadratic"] {
        let p = by_name(name).unwrap();
        let lo = run_problem(&p, &schedule, &NoiseModel::Zero, 1_000, 0).unwrap();
        let hi = run_problem(&p, &schedule, &NoiseModel::Zero, 100_000, 0).unwrap();
        let slo = tail_statistics(&lo, 0.1).unwrap();
        let shi = tail_statistics(&hi, 0.1).unwrap();
        assert!(
            shi.min_crit_residual.unwrap() <= slo.min_crit_residual.unwrap() + 1e-12,
            "{}",
            name
        );
    }
}

// --- property tests -----------------------------------------------------------

mod props {
    use super::*;
    use proptest::prelude::*;

    fn gen_points(dim: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(
            proptest::collection::vec(-5.0..5.0f64, dim),
            1..=n,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn min_norm_certificate_and_membership(gens in gen_points(3, 6)) {
            let hull = Hull::new(gens.iter().cloned().map(Point::new).collect()).unwrap();
            let r = min_norm_point(&hull).unwrap();
            // Certificate: first-order optimality over the hull.
            for g in hull.generators() {
                prop_assert!(r.point.dot(&g.sub(&r.point)) >= -1e-8);
            }
            // Barycentric weights reconstruct the point.
            prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(r.weights.iter().all(|&w| w >= 0.0));
            let mut rebuilt = Point::zeros(3);
            for (w, g) in r.weights.iter().zip(hull.generators()) {
                rebuilt.axpy(*w, g);
            }
            prop_assert!(rebuilt.dist(&r.point) <= 1e-9);
        }

        #[test]
        fn min_norm_scaling_equivariance(gens in gen_points(2, 5), c in 0.1..10.0f64) {
            let hull = Hull::new(gens.iter().cloned().map(Point::new).collect()).unwrap();
            let scaled = Hull::new(
                gens.iter().map(|g| Point::new(g.clone()).scale(c)).collect(),
            )
            .unwrap();
            let a = min_norm_point(&hull).unwrap();
            let b = min_norm_point(&scaled).unwrap();
            prop_assert!(a.point.scale(c).dist(&b.point) <= 1e-9 * (1.0 + c * 10.0));
        }

        #[test]
        fn interpolation_anchors_and_shift_composition(
            steps in proptest::collection::vec(0.01..1.0f64, 2..20),
            xs in proptest::collection::vec(-5.0..5.0f64, 20),
            a in 0.0..2.0f64,
            b in 0.0..2.0f64,
        ) {
            use nsopt_core::solver::{RunLog, RunRecord, RunStatus};
            let mut t = 0.0;
            let mut records = Vec::new();
            for (k, dt) in steps.iter().enumerate() {
                records.push(RunRecord {
                    k,
                    t,
                    x: Point::new(vec![xs[k % xs.len()]]),
                    y: Point::zeros(1),
                    f: 0.0,
                    phi: None,
                    crit_residual: None,
                });
                t += dt;
            }
            let log = RunLog {
                problem: "prop".into(),
                seed: 0,
                config_hash: "0".into(),
                dim: 1,
                status: RunStatus::Completed,
                records,
                prox_bound_violations: 0,
                sup_norm: 0.0,
            };
            let path = nsopt_core::interpolate(&log).unwrap();
            // Exact anchor reproduction.
            for (tk, xk) in path.breakpoints().iter().zip(path.anchors()) {
                let at = path.eval(*tk);
                prop_assert_eq!(at.coords(), xk.coords());
            }
            // shift(shift(p, a), b) = shift(p, a + b) pointwise.
            let s1 = nsopt_core::shift(&path, a).shifted(b);
            let s2 = nsopt_core::shift(&path, a + b);
            for i in 0..=20 {
                let t = i as f64 * 0.1;
                let (u, v) = (s1.eval(t), s2.eval(t));
                prop_assert_eq!(u.coords(), v.coords());
            }
        }

        #[test]
        fn schedule_steps_nonnegative_and_validity_matches_pseries(
            c in 0.01..5.0f64,
            gamma in -0.5..2.0f64,
        ) {
            let s = StepSchedule::Polynomial { c, gamma };
            let v = s.validate();
            prop_assert_eq!(v.valid, gamma > 0.5 && gamma <= 1.0);
            if v.valid {
                for k in [0usize, 1, 10, 1000] {
                    prop_assert!(s.step(k) >= 0.0);
                }
            }
        }
    }
}
