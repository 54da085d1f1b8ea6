//! The discrete processes: the stochastic subgradient method
//! x_{k+1} = x_k - a_k (y_k + xi_k) with y_k in ∂f(x_k), its proximal
//! extension x_{k+1} = T_{a_k}(x_k - a_k zeta_k), and the generic noisy Euler
//! recursion x_{k+1} = x_k + a_k (y_k + xi_k) for arbitrary velocity oracles.
//!
//! Every run is owned: one config, one RNG stream, one log. Runs with the
//! same config are bit-identical.

use std::io::Write;

use serde::Serialize;

use crate::composite::CompositeProblem;
use crate::error::{Error, Result};
use crate::function::PiecewiseLipschitzFunction;
use crate::noise::NoiseModel;
use crate::point::Point;
use crate::rng::noise_stream;
use crate::schedule::StepSchedule;

/// Default boundedness guard radius. Iterate boundedness is an assumption of
/// the method, not a theorem; a breach is surfaced as a run status instead of
/// silently producing garbage.
pub const DEFAULT_GUARD_RADIUS: f64 = 1e6;
pub const DEFAULT_LOG_STRIDE: usize = 100;
/// The last this-many iterations are always logged densely; limit-point
/// diagnostics need the tail.
pub const DENSE_TAIL: usize = 1000;
/// Slack for the prox-step bound check (pure float headroom).
const PROX_BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub schedule: StepSchedule,
    pub noise: NoiseModel,
    /// Iteration budget K.
    pub budget: usize,
    pub seed: u64,
    pub x0: Point,
    pub log_stride: usize,
    pub guard_radius: f64,
}

impl RunConfig {
    pub fn new(schedule: StepSchedule, noise: NoiseModel, budget: usize, seed: u64, x0: Point) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidSchedule("iteration budget must be >= 1".into()));
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("x0".into()));
        }
        Ok(RunConfig {
            schedule,
            noise,
            budget,
            seed,
            x0,
            log_stride: DEFAULT_LOG_STRIDE,
            guard_radius: DEFAULT_GUARD_RADIUS,
        })
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.log_stride = stride.max(1);
        self
    }

    pub fn with_guard(mut self, radius: f64) -> Self {
        self.guard_radius = radius;
        self
    }

    /// FNV-1a 64 over the canonical JSON of the config; embedded in every
    /// artifact so a run can be reproduced exactly.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }

    fn should_log(&self, k: usize) -> bool {
        k % self.log_stride == 0 || k + DENSE_TAIL >= self.budget
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// The boundedness guard tripped: ||x_k|| exceeded the guard radius (or
    /// went non-finite). The log up to the breach is retained.
    UnboundedIterates,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub k: usize,
    /// t_k = sum_{j<k} a_j.
    pub t: f64,
    pub x: Point,
    /// The velocity/subgradient used at step k (for the final record, the
    /// selection at the final iterate).
    pub y: Point,
    pub f: f64,
    pub phi: Option<f64>,
    pub crit_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunLog {
    pub problem: String,
    pub seed: u64,
    pub config_hash: String,
    pub dim: usize,
    pub status: RunStatus,
    pub records: Vec<RunRecord>,
    /// Count of steps violating the prox displacement bound
    /// a^-1 ||x_k - x_{k+1}|| <= 2 L(x_k) + 2 ||zeta_k|| (checked at *every*
    /// step of a proximal run, not just logged ones).
    pub prox_bound_violations: usize,
    /// sup_k ||x_k|| over all iterates (not just logged ones).
    pub sup_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub seed: u64,
    pub config_hash: String,
    pub status: RunStatus,
    pub k_final: usize,
    pub t_final: f64,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub phi_final: Option<f64>,
    pub tail_oscillation: Option<f64>,
    pub min_tail_residual: Option<f64>,
    pub sup_norm: f64,
    pub prox_bound_violations: usize,
}

impl RunLog {
    pub fn last(&self) -> &RunRecord {
        self.records.last().expect("run logs are never empty")
    }

    /// Final iteration index (the budget K for completed runs).
    pub fn final_k(&self) -> usize {
        self.last().k
    }

    /// Records with k >= K - ceil(fraction*K) (the dense tail).
    pub fn tail(&self, fraction: f64) -> Vec<&RunRecord> {
        let k_final = self.final_k();
        let cut = k_final.saturating_sub((fraction * k_final as f64).ceil() as usize);
        self.records.iter().filter(|r| r.k >= cut).collect()
    }

    /// CSV body: `k,t,x0..,y0..,f,phi,crit_residual`. Byte-stable across
    /// executions of the same run.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim;
        let mut header = String::from("k,t");
        for i in 0..d {
            header.push_str(&format!(",x{}", i));
        }
        for i in 0..d {
            header.push_str(&format!(",y{}", i));
        }
        header.push_str(",f,phi,crit_residual");
        writeln!(w, "{}", header)?;
        for r in &self.records {
            let mut line = format!("{},{}", r.k, r.t);
            for c in r.x.coords() {
                line.push_str(&format!(",{}", c));
            }
            for c in r.y.coords() {
                line.push_str(&format!(",{}", c));
            }
            line.push_str(&format!(",{}", r.f));
            match r.phi {
                Some(p) => line.push_str(&format!(",{}", p)),
                None => line.push(','),
            }
            match r.crit_residual {
                Some(c) => line.push_str(&format!(",{}", c)),
                None => line.push(','),
            }
            writeln!(w, "{}", line)?;
        }
        Ok(())
    }

    pub fn csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        buf
    }

    pub fn summary(&self) -> RunSummary {
        let last = self.last();
        let tail = self.tail(0.1);
        let tail_osc = oscillation(tail.iter().map(|r| r.phi.unwrap_or(r.f)));
        let min_res = tail
            .iter()
            .filter_map(|r| r.crit_residual)
            .min_by(f64::total_cmp);
        RunSummary {
            problem: self.problem.clone(),
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            status: self.status,
            k_final: last.k,
            t_final: last.t,
            x_final: last.x.coords().to_vec(),
            f_final: last.f,
            phi_final: last.phi,
            tail_oscillation: tail_osc,
            min_tail_residual: min_res,
            sup_norm: self.sup_norm,
            prox_bound_violations: self.prox_bound_violations,
        }
    }
}

fn oscillation(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for v in values {
        any = true;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    any.then_some(hi - lo)
}

/// The stochastic subgradient method: x_{k+1} = x_k - a_k (y_k + xi_k),
/// y_k = subgrad_select(x_k). Logs every stride-th iterate plus the dense
/// tail and the final iterate. A guard breach halts the run with the
/// `UnboundedIterates` status and the log retained.
pub fn run_sgm(f: &PiecewiseLipschitzFunction, cfg: &RunConfig) -> Result<RunLog> {
    check_start(f, cfg)?;
    let mut rng = noise_stream(cfg.seed);
    let mut x = cfg.x0.clone();
    let mut t = 0.0;
    let mut log = new_log(f.name(), cfg, f.dim());

    for k in 0..cfg.budget {
        let y = f.subgrad_select(&x)?;
        let xi = cfg.noise.draw(&x, &mut rng);
        if cfg.should_log(k) {
            log.records.push(plain_record(f, k, t, &x, &y)?);
        }
        let alpha = cfg.schedule.step(k);
        let mut step = y.clone();
        step.axpy(1.0, &xi);
        x.axpy(-alpha, &step);
        t += alpha;
        log.sup_norm = log.sup_norm.max(x.norm());
        if guard_breached(&x, cfg) {
            let y_end = safe_subgrad(f, &x);
            log.records.push(plain_record(f, k + 1, t, &x, &y_end)?);
            log.status = RunStatus::UnboundedIterates;
            return Ok(log);
        }
    }
    let y_end = f.subgrad_select(&x)?;
    log.records.push(plain_record(f, cfg.budget, t, &x, &y_end)?);
    Ok(log)
}

/// The proximal stochastic subgradient method:
/// x_{k+1} = T_{a_k}(x_k - a_k zeta(x_k, w_k)). Requires a feasible x0 and a
/// supported (X, g) pair; every iterate is feasible by the prox contract.
pub fn run_prox_sgm(problem: &CompositeProblem, cfg: &RunConfig) -> Result<RunLog> {
    if cfg.x0.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: cfg.x0.dim(),
        });
    }
    if !problem.constraint().contains(&cfg.x0) {
        return Err(Error::InfeasibleStart);
    }
    // Fail fast on unsupported (X, g) combinations.
    problem.prox(1.0, &cfg.x0)?;

    let oracle = problem.oracle().with_noise(cfg.noise.clone());
    let f = problem.smooth_part();
    let mut rng = noise_stream(cfg.seed);
    let mut x = cfg.x0.clone();
    let mut t = 0.0;
    let mut log = new_log(f.name(), cfg, problem.dim());

    for k in 0..cfg.budget {
        let zeta = oracle.sample(&x, &mut rng)?;
        if cfg.should_log(k) {
            log.records.push(composite_record(problem, k, t, &x, &zeta)?);
        }
        let alpha = cfg.schedule.step(k);
        let mut probe = x.clone();
        probe.axpy(-alpha, &zeta);
        let x_next = problem.prox(alpha, &probe)?;

        // Prox displacement bound, checked at every step.
        let lhs = x.dist(&x_next) / alpha;
        let rhs = 2.0 * problem.regularizer().descent_modulus(&x) + 2.0 * zeta.norm();
        if lhs > rhs + PROX_BOUND_SLACK {
            log.prox_bound_violations += 1;
        }

        x = x_next;
        t += alpha;
        log.sup_norm = log.sup_norm.max(x.norm());
        if guard_breached(&x, cfg) {
            let zeta_end = safe_subgrad(f, &x);
            log.records.push(composite_record(problem, k + 1, t, &x, &zeta_end)?);
            log.status = RunStatus::UnboundedIterates;
            return Ok(log);
        }
    }
    let zeta_end = f.subgrad_select(&x)?;
    log.records.push(composite_record(problem, cfg.budget, t, &x, &zeta_end)?);
    Ok(log)
}

/// Generic stochastic approximation: x_{k+1} = x_k + a_k (y_k + xi_k) with
/// y_k from an arbitrary velocity oracle (the set-valued map's selection).
/// `objective` is used for logging only.
pub fn run_generic(
    velocity: &dyn Fn(&Point) -> Point,
    objective: Option<&PiecewiseLipschitzFunction>,
    cfg: &RunConfig,
) -> Result<RunLog> {
    let name = objective.map(|f| f.name()).unwrap_or("generic");
    let mut rng = noise_stream(cfg.seed);
    let mut x = cfg.x0.clone();
    let mut t = 0.0;
    let mut log = new_log(name, cfg, cfg.x0.dim());

    let record = |k: usize, t: f64, x: &Point, y: &Point| -> Result<RunRecord> {
        let (f_val, crit) = match objective {
            Some(f) => (
                f.evaluate(x)?,
                f.has_hull().then(|| f.criticality_residual(x)).transpose()?,
            ),
            None => (f64::NAN, None),
        };
        Ok(RunRecord {
            k,
            t,
            x: x.clone(),
            y: y.clone(),
            f: f_val,
            phi: None,
            crit_residual: crit,
        })
    };

    for k in 0..cfg.budget {
        let y = velocity(&x);
        let xi = cfg.noise.draw(&x, &mut rng);
        if cfg.should_log(k) {
            log.records.push(record(k, t, &x, &y)?);
        }
        let alpha = cfg.schedule.step(k);
        let mut step = y.clone();
        step.axpy(1.0, &xi);
        x.axpy(alpha, &step);
        t += alpha;
        log.sup_norm = log.sup_norm.max(x.norm());
        if guard_breached(&x, cfg) {
            let y_end = velocity(&x);
            log.records.push(record(k + 1, t, &x, &y_end)?);
            log.status = RunStatus::UnboundedIterates;
            return Ok(log);
        }
    }
    let y_end = velocity(&x);
    log.records.push(record(cfg.budget, t, &x, &y_end)?);
    Ok(log)
}

fn check_start(f: &PiecewiseLipschitzFunction, cfg: &RunConfig) -> Result<()> {
    if cfg.x0.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: cfg.x0.dim(),
        });
    }
    Ok(())
}

fn new_log(problem: &str, cfg: &RunConfig, dim: usize) -> RunLog {
    RunLog {
        problem: problem.to_string(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        dim,
        status: RunStatus::Completed,
        records: Vec::new(),
        prox_bound_violations: 0,
        sup_norm: cfg.x0.norm(),
    }
}

fn guard_breached(x: &Point, cfg: &RunConfig) -> bool {
    !x.is_finite() || x.norm() > cfg.guard_radius
}

fn safe_subgrad(f: &PiecewiseLipschitzFunction, x: &Point) -> Point {
    if x.is_finite() {
        f.subgrad_select(x).unwrap_or_else(|_| Point::zeros(x.dim()))
    } else {
        Point::zeros(x.dim())
    }
}

fn plain_record(
    f: &PiecewiseLipschitzFunction,
    k: usize,
    t: f64,
    x: &Point,
    y: &Point,
) -> Result<RunRecord> {
    let crit = f.has_hull().then(|| f.criticality_residual(x)).transpose()?;
    Ok(RunRecord {
        k,
        t,
        x: x.clone(),
        y: y.clone(),
        f: f.evaluate(x)?,
        phi: None,
        crit_residual: crit,
    })
}

fn composite_record(
    p: &CompositeProblem,
    k: usize,
    t: f64,
    x: &Point,
    zeta: &Point,
) -> Result<RunRecord> {
    let f_val = p.smooth_part().evaluate(x)?;
    Ok(RunRecord {
        k,
        t,
        x: x.clone(),
        y: zeta.clone(),
        f: f_val,
        phi: Some(f_val + p.regularizer().value(x)),
        crit_residual: Some(p.criticality_residual(x)?),
    })
}
