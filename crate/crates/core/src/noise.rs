//! Martingale-difference noise models: conditionally zero-mean draws with a
//! second-moment bound p(x) that is bounded on bounded sets.

use crate::point::Point;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Deterministic runs; draws are the zero vector.
    Zero,
    /// xi ~ N(0, sigma^2 I).
    GaussianIsotropic { sigma: f64 },
    /// xi uniform in the centered Euclidean ball of the given radius.
    BoundedUniform { radius: f64 },
    /// xi ~ N(0, (sigma*(1+||x||))^2 I); second moment grows with the state
    /// but stays bounded on bounded sets.
    StateScaledGaussian { sigma: f64 },
}

impl NoiseModel {
    /// One zero-mean draw at the state x. Reproducible given the rng stream.
    pub fn draw<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Point {
        let d = x.dim();
        match self {
            NoiseModel::Zero => Point::zeros(d),
            NoiseModel::GaussianIsotropic { sigma } => gaussian(d, *sigma, rng),
            NoiseModel::BoundedUniform { radius } => uniform_ball(d, *radius, rng),
            NoiseModel::StateScaledGaussian { sigma } => {
                gaussian(d, sigma * (1.0 + x.norm()), rng)
            }
        }
    }

    /// The bound p(x) >= E[||xi||^2 | x].
    pub fn second_moment_bound(&self, x: &Point) -> f64 {
        let d = x.dim() as f64;
        match self {
            NoiseModel::Zero => 0.0,
            NoiseModel::GaussianIsotropic { sigma } => sigma * sigma * d,
            NoiseModel::BoundedUniform { radius } => radius * radius,
            NoiseModel::StateScaledGaussian { sigma } => {
                let s = sigma * (1.0 + x.norm());
                s * s * d
            }
        }
    }

    /// A sure bound on ||xi|| when one exists (zero and bounded-uniform models).
    pub fn sure_bound(&self) -> Option<f64> {
        match self {
            NoiseModel::Zero => Some(0.0),
            NoiseModel::BoundedUniform { radius } => Some(*radius),
            _ => None,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(d: usize, sigma: f64, rng: &mut R) -> Point {
    Point::new((0..d).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect())
}

fn uniform_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Point {
    if radius == 0.0 {
        return Point::zeros(d);
    }
    // Polar method (rejection from the cube collapses in high dimension):
    // gaussian direction, radius r * U^(1/d).
    let mut v = gaussian(d, 1.0, rng);
    let n = v.norm();
    if n == 0.0 {
        return Point::zeros(d);
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    v = v.scale(r / n);
    v
}
