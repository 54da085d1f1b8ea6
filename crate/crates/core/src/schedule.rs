//! Step-size sequences with square-summable-but-not-summable validity checks.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A step-size sequence {alpha_k}.
///
/// The polynomial form alpha_k = c*(k+1)^(-gamma) is valid (sum alpha = inf,
/// sum alpha^2 < inf) exactly when 1/2 < gamma <= 1; the checked constructors
/// reject anything else. `ConstantThenDecay` holds alpha_k = c for k < switch_k
/// and then decays polynomially. `Table` schedules are finite user data whose
/// validity can only be certified heuristically up to the table horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum StepSchedule {
    Polynomial { c: f64, gamma: f64 },
    ConstantThenDecay { c: f64, switch_k: usize, gamma: f64 },
    Table { steps: Vec<f64> },
}

/// Outcome of the validity predicate, with a human-readable reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleValidity {
    pub valid: bool,
    /// "ok", "summable", "not square-summable", "nonpositive coefficient",
    /// or "heuristic: ..." for table schedules.
    pub reason: String,
}

impl StepSchedule {
    /// Checked polynomial schedule alpha_k = c*(k+1)^(-gamma).
    pub fn polynomial(c: f64, gamma: f64) -> Result<Self> {
        let s = StepSchedule::Polynomial { c, gamma };
        let v = s.validate();
        if v.valid {
            Ok(s)
        } else {
            Err(Error::InvalidSchedule(v.reason))
        }
    }

    pub fn constant_then_decay(c: f64, switch_k: usize, gamma: f64) -> Result<Self> {
        let s = StepSchedule::ConstantThenDecay { c, switch_k, gamma };
        let v = s.validate();
        if v.valid {
            Ok(s)
        } else {
            Err(Error::InvalidSchedule(v.reason))
        }
    }

    /// Table schedules are accepted as long as entries are finite and
    /// nonnegative; their validity remains heuristic (see `validate`).
    pub fn table(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidSchedule("empty step table".into()));
        }
        if steps.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidSchedule(
                "step table entries must be finite and nonnegative".into(),
            ));
        }
        Ok(StepSchedule::Table { steps })
    }

    /// alpha_k. Table schedules return their last entry past the horizon.
    pub fn step(&self, k: usize) -> f64 {
        match self {
            StepSchedule::Polynomial { c, gamma } => c * ((k + 1) as f64).powf(-gamma),
            StepSchedule::ConstantThenDecay { c, switch_k, gamma } => {
                if k < *switch_k {
                    *c
                } else {
                    c * ((k - switch_k + 1) as f64).powf(-gamma)
                }
            }
            StepSchedule::Table { steps } => {
                steps.get(k).copied().unwrap_or_else(|| *steps.last().unwrap())
            }
        }
    }

    /// Cumulative time t_k = sum_{j<k} alpha_j.
    pub fn time(&self, k: usize) -> f64 {
        (0..k).map(|j| self.step(j)).sum()
    }

    /// Tests sum alpha = inf and sum alpha^2 < inf. Analytic (p-series) for
    /// the polynomial forms; for tables only a finite-horizon heuristic is
    /// possible and the reason is flagged accordingly.
    pub fn validate(&self) -> ScheduleValidity {
        match self {
            StepSchedule::Polynomial { c, gamma }
            | StepSchedule::ConstantThenDecay { c, gamma, .. } => {
                if !c.is_finite() || *c <= 0.0 || !gamma.is_finite() {
                    return ScheduleValidity {
                        valid: false,
                        reason: "nonpositive coefficient".into(),
                    };
                }
                if *gamma > 1.0 {
                    ScheduleValidity {
                        valid: false,
                        reason: "summable".into(),
                    }
                } else if *gamma <= 0.5 {
                    ScheduleValidity {
                        valid: false,
                        reason: "not square-summable".into(),
                    }
                } else {
                    ScheduleValidity {
                        valid: true,
                        reason: "ok".into(),
                    }
                }
            }
            StepSchedule::Table { steps } => {
                let sum: f64 = steps.iter().sum();
                let sum_sq: f64 = steps.iter().map(|a| a * a).sum();
                ScheduleValidity {
                    valid: true,
                    reason: format!(
                        "heuristic: certified only up to table horizon {} (partial sums {:.3e} / {:.3e})",
                        steps.len(),
                        sum,
                        sum_sq
                    ),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_values() {
        let s = StepSchedule::polynomial(0.5, 0.75).unwrap();
        assert_eq!(s.step(0), 0.5);
        let s = StepSchedule::polynomial(1.0, 1.0).unwrap();
        assert_eq!(s.step(3), 0.25);
    }

    #[test]
    fn construction_rejects_invalid() {
        assert!(StepSchedule::polynomial(1.0, 0.4).is_err());
        assert!(StepSchedule::polynomial(-1.0, 0.75).is_err());
        assert!(StepSchedule::table(vec![]).is_err());
        assert!(StepSchedule::table(vec![0.1, -0.2]).is_err());
    }

    #[test]
    fn validity_reasons() {
        let v = StepSchedule::Polynomial { c: 1.0, gamma: 0.75 }.validate();
        assert!(v.valid);
        let v = StepSchedule::Polynomial { c: 1.0, gamma: 1.2 }.validate();
        assert!(!v.valid);
        assert_eq!(v.reason, "summable");
        let v = StepSchedule::Polynomial { c: 1.0, gamma: 0.5 }.validate();
        assert!(!v.valid);
        assert_eq!(v.reason, "not square-summable");
        let v = StepSchedule::table(vec![0.1; 8]).unwrap().validate();
        assert!(v.reason.starts_with("heuristic"));
    }

    #[test]
    fn constant_then_decay_values() {
        let s = StepSchedule::constant_then_decay(0.2, 10, 1.0).unwrap();
        assert_eq!(s.step(0), 0.2);
        assert_eq!(s.step(9), 0.2);
        assert_eq!(s.step(10), 0.2);
        assert_eq!(s.step(11), 0.1);
    }

    #[test]
    fn partial_sums_diverge_squares_cauchy() {
        let s = StepSchedule::polynomial(0.5, 0.75).unwrap();
        // Partial sums grow without bound across decades.
        let mut prev = 0.0;
        for n in [1_000usize, 10_000, 100_000, 1_000_000] {
            let sum = s.time(n);
            assert!(sum > prev + 1.0, "sum at {} is {}", n, sum);
            prev = sum;
        }
        // Tail of the squared series below 1e-3 past a computable index:
        // sum_{k>=N} c^2 (k+1)^(-1.5) <= c^2 * 2/sqrt(N) = 1e-3 at N = 250_000.
        let n0 = 250_000usize;
        let tail_bound = 0.25 * 2.0 / (n0 as f64).sqrt();
        assert!(tail_bound <= 1.001e-3);
        let numeric: f64 = (n0..n0 + 200_000).map(|k| s.step(k) * s.step(k)).sum();
        assert!(numeric < tail_bound);
    }
}
