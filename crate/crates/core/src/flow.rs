//! Subgradient-flow integration and the verifiers built on it.
//!
//! The flow dz/dt in -∂f(z) is integrated by explicit Euler with the
//! minimal-norm velocity selection v = -argmin_{w in ∂f(z)} ||w||; along any
//! trajectory of the inclusion the speed equals dist(0, ∂f(z)), and the
//! function drop equals the integral of the squared distance. The velocity
//! field is discontinuous across strata, so higher-order schemes buy nothing;
//! fixed-step Euler also mirrors the discrete processes being verified.

use serde::Serialize;

use crate::composite::CompositeProblem;
use crate::error::{Error, Result};
use crate::function::PiecewiseLipschitzFunction;
use crate::geometry::{min_norm_point, Hull};
use crate::point::Point;

/// Default integrator step for verification runs.
pub const DEFAULT_FLOW_STEP: f64 = 1e-4;
/// Stationarity tolerance at which the integrator halts with `ReachedCritical`.
pub const FLOW_CRIT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowStatus {
    CompletedHorizon,
    ReachedCritical,
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub step: f64,
    pub horizon: f64,
    /// Halt once dist(0, ∂f(z)) (or the composite prox residual) falls below
    /// this; set negative to integrate the full horizon unconditionally.
    pub crit_tol: f64,
}

impl FlowOptions {
    pub fn new(horizon: f64) -> Self {
        FlowOptions {
            step: DEFAULT_FLOW_STEP,
            horizon,
            crit_tol: FLOW_CRIT_TOL,
        }
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.step = h;
        self
    }

    pub fn without_halt(mut self) -> Self {
        self.crit_tol = -1.0;
        self
    }
}

/// An arc sampled at integrator nodes: times, points, selected velocities,
/// objective values, and the stationarity residual at each node.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub velocities: Vec<Point>,
    /// f(z_i) for plain flows, phi(z_i) for composite flows.
    pub values: Vec<f64>,
    /// dist(0, ∂f(z_i)) for plain flows; the prox displacement ratio for
    /// composite flows.
    pub residuals: Vec<f64>,
    pub step: f64,
    pub status: FlowStatus,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> &Point {
        self.points.last().expect("trajectories are nonempty")
    }

    pub fn terminal_time(&self) -> f64 {
        *self.times.last().expect("trajectories are nonempty")
    }

    /// Sample an arbitrary arc (z, dz/dt) on n+1 uniform nodes of [t0, t1];
    /// used to run the verifiers on arcs that are not subgradient flows.
    pub fn from_arc(
        f: &PiecewiseLipschitzFunction,
        z: &dyn Fn(f64) -> Point,
        z_dot: &dyn Fn(f64) -> Point,
        t0: f64,
        t1: f64,
        n: usize,
    ) -> Result<Self> {
        let h = (t1 - t0) / n as f64;
        let mut traj = Trajectory {
            times: Vec::with_capacity(n + 1),
            points: Vec::with_capacity(n + 1),
            velocities: Vec::with_capacity(n + 1),
            values: Vec::with_capacity(n + 1),
            residuals: Vec::with_capacity(n + 1),
            step: h,
            status: FlowStatus::CompletedHorizon,
        };
        for i in 0..=n {
            let t = t0 + i as f64 * h;
            let p = z(t);
            traj.values.push(f.evaluate(&p)?);
            traj.residuals.push(f.criticality_residual(&p)?);
            traj.velocities.push(z_dot(t));
            traj.points.push(p);
            traj.times.push(t);
        }
        Ok(traj)
    }

    /// Same CSV schema as run logs, with the velocity in the y columns and
    /// the stationarity residual in the crit_residual column.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let d = self.points[0].dim();
        let mut header = String::from("k,t");
        for i in 0..d {
            header.push_str(&format!(",x{}", i));
        }
        for i in 0..d {
            header.push_str(&format!(",y{}", i));
        }
        header.push_str(",f,phi,crit_residual");
        writeln!(w, "{}", header)?;
        for i in 0..self.len() {
            let mut line = format!("{},{}", i, self.times[i]);
            for c in self.points[i].coords() {
                line.push_str(&format!(",{}", c));
            }
            for c in self.velocities[i].coords() {
                line.push_str(&format!(",{}", c));
            }
            line.push_str(&format!(",{},,{}", self.values[i], self.residuals[i]));
            writeln!(w, "{}", line)?;
        }
        Ok(())
    }
}

/// Explicit Euler for dz/dt = -argmin{||w|| : w in ∂f(z)}. Requires the hull
/// oracle. Halts early (flagging `ReachedCritical`) at the first node where
/// dist(0, ∂f(z)) <= crit_tol.
///
/// A fixed-step Euler step across a kink at the bottom of a valley would
/// chatter forever at amplitude ~h (the minimal-norm field flips sign across
/// the kink), so a step whose velocity reverses direction is shortened by
/// bisection to land on the kink itself; the full subdifferential there then
/// decides between halting (0 in the hull) and sliding along the stratum.
/// Transversal crossings (velocity keeps its direction) step straight
/// through, as the a.e. statements expect.
pub fn integrate_flow(
    f: &PiecewiseLipschitzFunction,
    z0: &Point,
    opts: FlowOptions,
) -> Result<Trajectory> {
    if opts.step <= 0.0 || opts.horizon < 0.0 {
        return Err(Error::NonFinite("flow step/horizon".into()));
    }
    let h = opts.step;
    let n_max = (opts.horizon / h).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_max + 1),
        points: Vec::with_capacity(n_max + 1),
        velocities: Vec::with_capacity(n_max + 1),
        values: Vec::with_capacity(n_max + 1),
        residuals: Vec::with_capacity(n_max + 1),
        step: h,
        status: FlowStatus::CompletedHorizon,
    };
    let mut z = z0.clone();
    let mut t = 0.0_f64;
    let t_end = n_max as f64 * h;
    let node_cap = 2 * n_max + 16;
    loop {
        if traj.len() >= node_cap {
            break;
        }
        let hull = f.hull_at(&z)?;
        let mn = min_norm_point(&hull)?;
        let velocity = mn.point.scale(-1.0);
        traj.times.push(t);
        traj.values.push(f.evaluate(&z)?);
        traj.residuals.push(mn.norm);
        traj.velocities.push(velocity.clone());
        traj.points.push(z.clone());
        if mn.norm <= opts.crit_tol {
            traj.status = FlowStatus::ReachedCritical;
            break;
        }
        if t >= t_end - 0.5 * h {
            break;
        }
        let mut z_next = z.clone();
        z_next.axpy(h, &velocity);
        let mut dt = h;
        let v_next = min_norm_point(&f.hull_at(&z_next)?)?.point.scale(-1.0);
        if velocity.dot(&v_next) < 0.0 {
            // Reversal: locate the first subdifferential change along the
            // segment and land there.
            let mut lo = 0.0_f64;
            let mut hi = 1.0_f64;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let mut probe = z.clone();
                probe.axpy(mid * h, &velocity);
                if hulls_equal(&hull, &f.hull_at(&probe)?) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            z_next = z.clone();
            z_next.axpy(hi * h, &velocity);
            dt = hi * h;
        }
        z = z_next;
        t += dt;
    }
    Ok(traj)
}

/// Generator sets considered "the same stratum": equal counts and only the
/// smooth drift a partial Euler step can produce (kink jumps are O(1)).
fn hulls_equal(a: &Hull, b: &Hull) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let scale = scale_of(a).max(scale_of(b));
    hausdorff(a, b) <= 1e-3 * (1.0 + scale)
}

fn scale_of(h: &Hull) -> f64 {
    h.generators().iter().map(Point::norm).fold(0.0, f64::max)
}

/// Composite flow dz/dt in -(∂f + ∂g + N_X)(z), approximated by small-step
/// proximal iterations z <- T_h(z - h * subgrad_f(z)), each advancing time by
/// h. Every node is feasible. The inclusion itself has no canonical
/// discretization; this prox-point surrogate is assessed by h-refinement.
pub fn integrate_composite_flow(
    problem: &CompositeProblem,
    z0: &Point,
    opts: FlowOptions,
) -> Result<Trajectory> {
    if opts.step <= 0.0 || opts.horizon < 0.0 {
        return Err(Error::NonFinite("flow step/horizon".into()));
    }
    if !problem.constraint().contains(z0) {
        return Err(Error::InfeasibleStart);
    }
    let h = opts.step;
    let n_max = (opts.horizon / h).round() as usize;
    let f = problem.smooth_part();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_max + 1),
        points: Vec::with_capacity(n_max + 1),
        velocities: Vec::with_capacity(n_max + 1),
        values: Vec::with_capacity(n_max + 1),
        residuals: Vec::with_capacity(n_max + 1),
        step: h,
        status: FlowStatus::CompletedHorizon,
    };
    let mut z = z0.clone();
    for i in 0..=n_max {
        let v_f = f.subgrad_select(&z)?;
        let mut probe = z.clone();
        probe.axpy(-h, &v_f);
        let z_next = problem.prox(h, &probe)?;
        let velocity = z_next.sub(&z).scale(1.0 / h);
        let residual = velocity.norm();
        traj.times.push(i as f64 * h);
        traj.values.push(problem.phi(&z)?);
        traj.residuals.push(residual);
        traj.velocities.push(velocity);
        traj.points.push(z.clone());
        if residual <= opts.crit_tol {
            traj.status = FlowStatus::ReachedCritical;
            break;
        }
        if i == n_max {
            break;
        }
        z = z_next;
    }
    Ok(traj)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRuleReport {
    /// max over checked nodes and hull generators v of
    /// |(f∘z)'(t) - <v, dz/dt>|, with (f∘z)' from centered differences.
    pub max_violation: f64,
    pub checked: usize,
    pub skipped: usize,
    pub sampled: usize,
}

impl ChainRuleReport {
    pub fn skipped_fraction(&self) -> f64 {
        if self.sampled == 0 {
            0.0
        } else {
            self.skipped as f64 / self.sampled as f64
        }
    }
}

/// The chain rule asserts that <v, dz/dt> is single-valued across all of
/// ∂f(z(t)) and equals (f∘z)'(t) for a.e. t. At each sampled interior node
/// the centered difference of f∘z is compared against the inner product with
/// *every* hull generator. Nodes straddling a kink crossing are skipped and
/// reported, never hidden: the crossing times form a measure-zero set the
/// a.e. statement says nothing about. A crossing is detected when the
/// generator count changes between t-h and t+h or the generator sets jump by
/// more than `jump_tol` (smooth drift over 2h is orders of magnitude lower).
pub fn check_chain_rule(
    f: &PiecewiseLipschitzFunction,
    traj: &Trajectory,
    samples: usize,
) -> Result<ChainRuleReport> {
    if traj.len() < 3 {
        return Ok(ChainRuleReport {
            max_violation: 0.0,
            checked: 0,
            skipped: 0,
            sampled: 0,
        });
    }
    let interior = traj.len() - 2;
    let n = samples.min(interior).max(1);
    let mut report = ChainRuleReport {
        max_violation: 0.0,
        checked: 0,
        skipped: 0,
        sampled: n,
    };
    for s in 0..n {
        let i = 1 + s * interior / n;
        let before = f.hull_at(&traj.points[i - 1])?;
        let here = f.hull_at(&traj.points[i])?;
        let after = f.hull_at(&traj.points[i + 1])?;
        if crossing_between(&before, &here, &after) {
            report.skipped += 1;
            continue;
        }
        let dt = traj.times[i + 1] - traj.times[i - 1];
        let d = (traj.values[i + 1] - traj.values[i - 1]) / dt;
        let zdot = &traj.velocities[i];
        for v in here.generators() {
            report.max_violation = report.max_violation.max((d - v.dot(zdot)).abs());
        }
        report.checked += 1;
    }
    Ok(report)
}

fn crossing_between(before: &Hull, here: &Hull, after: &Hull) -> bool {
    if before.len() != here.len() || here.len() != after.len() {
        return true;
    }
    let scale = before
        .generators()
        .iter()
        .chain(after.generators())
        .map(Point::norm)
        .fold(0.0_f64, f64::max);
    let jump_tol = 0.05 * (1.0 + scale);
    hausdorff(before, after) > jump_tol
}

fn hausdorff(a: &Hull, b: &Hull) -> f64 {
    let one_way = |from: &Hull, to: &Hull| {
        from.generators()
            .iter()
            .map(|g| {
                to.generators()
                    .iter()
                    .map(|h| g.dist(h))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0_f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[derive(Clone, Debug, Serialize)]
pub struct DescentReport {
    /// f(z(0)) - f(z(T)).
    pub drop: f64,
    /// Trapezoidal quadrature of dist^2(0, ∂f(z(t))) over the nodes.
    pub integral: f64,
    pub residual: f64,
}

/// Checks the descent identity f(z(0)) - f(z(T)) = ∫ dist^2(0, ∂f(z)) dt
/// along a subgradient-flow trajectory.
pub fn check_descent_identity(traj: &Trajectory) -> DescentReport {
    let drop = traj.values[0] - traj.values[traj.len() - 1];
    let mut integral = 0.0;
    for i in 0..traj.len() - 1 {
        let dt = traj.times[i + 1] - traj.times[i];
        let a = traj.residuals[i] * traj.residuals[i];
        let b = traj.residuals[i + 1] * traj.residuals[i + 1];
        integral += 0.5 * (a + b) * dt;
    }
    DescentReport {
        drop,
        integral,
        residual: (drop - integral).abs(),
    }
}
