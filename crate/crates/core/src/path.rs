//! Piecewise-linear interpolation of a discrete run over its cumulative step
//! times, time shifts of that path, and the sup-distance between shifted
//! paths and integrated flow trajectories (the computable shadow of the
//! functional approximation property: shifted interpolants converge to
//! trajectories of the inclusion).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{integrate_flow, FlowOptions, DEFAULT_FLOW_STEP};
use crate::function::PiecewiseLipschitzFunction;
use crate::point::Point;
use crate::solver::RunLog;

/// The linear interpolation x(t) of a discrete path over its breakpoints
/// t_k = sum_{j<k} a_j: x(t_k) = x_k exactly, linear in between.
#[derive(Clone, Debug)]
pub struct InterpolatedPath {
    times: Vec<f64>,
    points: Vec<Point>,
}

impl InterpolatedPath {
    pub fn from_log(log: &RunLog) -> Result<Self> {
        if log.records.is_empty() {
            return Err(Error::EmptyLog);
        }
        Ok(InterpolatedPath {
            times: log.records.iter().map(|r| r.t).collect(),
            points: log.records.iter().map(|r| r.x.clone()).collect(),
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.times
    }

    pub fn anchors(&self) -> &[Point] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Evaluation: exact at breakpoints, linear between them, clamped to the
    /// logged horizon outside it.
    pub fn eval(&self, t: f64) -> Point {
        let times = &self.times;
        if t <= times[0] {
            return self.points[0].clone();
        }
        if t >= *times.last().unwrap() {
            return self.points.last().unwrap().clone();
        }
        // First index with times[idx] > t; the segment is [idx-1, idx].
        let idx = times.partition_point(|&tk| tk <= t);
        let (t0, t1) = (times[idx - 1], times[idx]);
        if t == t0 {
            return self.points[idx - 1].clone();
        }
        let w = (t - t0) / (t1 - t0);
        let mut x = self.points[idx - 1].scale(1.0 - w);
        x.axpy(w, &self.points[idx]);
        x
    }
}

/// The time-shifted curve: eval(t) = base(shift + t).
#[derive(Clone, Debug)]
pub struct ShiftedPath<'a> {
    base: &'a InterpolatedPath,
    shift: f64,
}

impl<'a> ShiftedPath<'a> {
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn eval(&self, t: f64) -> Point {
        self.base.eval(self.shift + t)
    }

    /// Shifting a shifted path adds the shifts.
    pub fn shifted(&self, tau: f64) -> ShiftedPath<'a> {
        ShiftedPath {
            base: self.base,
            shift: self.shift + tau,
        }
    }

    /// Remaining horizon after the shift.
    pub fn horizon(&self) -> f64 {
        self.base.horizon() - self.shift
    }
}

pub fn interpolate(log: &RunLog) -> Result<InterpolatedPath> {
    InterpolatedPath::from_log(log)
}

pub fn shift(path: &InterpolatedPath, tau: f64) -> ShiftedPath<'_> {
    ShiftedPath { base: path, shift: tau }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftGap {
    pub shift: f64,
    /// Iteration index of the last logged record at or before the shift.
    pub shift_k: usize,
    /// Local step size a_k at the shift (from neighboring breakpoints).
    pub local_step: f64,
    /// sup over [0, window] of ||x^tau(t) - z(t)||.
    pub sup_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub window: f64,
    pub shifts: Vec<ShiftGap>,
}

/// For each shift tau, integrates the subgradient flow from x^tau(0) over
/// [0, window] and reports the sup-distance to the shifted interpolated path.
/// The flow runs without the early critical halt so the comparison covers the
/// whole window.
pub fn functional_approximation_gap(
    log: &RunLog,
    f: &PiecewiseLipschitzFunction,
    window: f64,
    shifts: &[f64],
    flow_step: Option<f64>,
) -> Result<GapReport> {
    let path = interpolate(log)?;
    let h = flow_step.unwrap_or(DEFAULT_FLOW_STEP);
    let mut out = Vec::with_capacity(shifts.len());
    for &tau in shifts {
        if tau < 0.0 || tau + window > path.horizon() + 1e-12 {
            return Err(Error::WindowExceedsHorizon {
                start: tau,
                end: tau + window,
                horizon: path.horizon(),
            });
        }
        let shifted = shift(&path, tau);
        let z0 = shifted.eval(0.0);
        let traj = integrate_flow(f, &z0, FlowOptions::new(window).with_step(h).without_halt())?;
        let mut sup = 0.0_f64;
        for (t, z) in traj.times.iter().zip(&traj.points) {
            sup = sup.max(shifted.eval(*t).dist(z));
        }
        let idx = log
            .records
            .partition_point(|r| r.t <= tau + 1e-15)
            .saturating_sub(1);
        let local_step = if idx + 1 < log.records.len() {
            (log.records[idx + 1].t - log.records[idx].t)
                / (log.records[idx + 1].k - log.records[idx].k) as f64
        } else if idx > 0 {
            (log.records[idx].t - log.records[idx - 1].t)
                / (log.records[idx].k - log.records[idx - 1].k) as f64
        } else {
            0.0
        };
        out.push(ShiftGap {
            shift: tau,
            shift_k: log.records[idx].k,
            local_step,
            sup_gap: sup,
        });
    }
    Ok(GapReport {
        window,
        shifts: out,
    })
}
