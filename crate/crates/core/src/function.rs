//! Locally Lipschitz functions with Clarke subdifferential access.
//!
//! A function exposes a value oracle, a subgradient *selection* (one element
//! of ∂f(x)), and — when the subdifferential is a polytope the author can
//! write down — a hull oracle returning finitely many generators whose convex
//! hull is ∂f(x). ReLU-network losses expose only the backprop selection; the
//! selection is guaranteed to be a Clarke subgradient at differentiable
//! points only, and hull-requiring consumers must handle `HullUnavailable`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{min_norm_point, Hull};
use crate::noise::NoiseModel;
use crate::point::Point;
use rand::Rng;

pub type ValueFn = dyn Fn(&Point) -> f64 + Send + Sync;
pub type SelectFn = dyn Fn(&Point) -> Point + Send + Sync;
pub type HullFn = dyn Fn(&Point) -> Vec<Point> + Send + Sync;
/// Local Lipschitz bound on the closed ball B(center, radius).
pub type LipschitzFn = dyn Fn(&Point, f64) -> f64 + Send + Sync;

/// A locally Lipschitz f: R^d -> R with subgradient access.
#[derive(Clone)]
pub struct PiecewiseLipschitzFunction {
    name: String,
    dim: usize,
    value: Arc<ValueFn>,
    subgrad: Arc<SelectFn>,
    hull: Option<Arc<HullFn>>,
    lipschitz: Arc<LipschitzFn>,
}

impl std::fmt::Debug for PiecewiseLipschitzFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PiecewiseLipschitzFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("hull", &self.hull.is_some())
            .finish()
    }
}

impl PiecewiseLipschitzFunction {
    /// Function with a hull oracle. The subgradient selection is the
    /// minimal-norm element of the generator hull — the same canonical
    /// selection the subgradient flow uses, so runs and flows agree at kinks.
    pub fn with_hull(
        name: impl Into<String>,
        dim: usize,
        value: Arc<ValueFn>,
        hull: Arc<HullFn>,
        lipschitz: Arc<LipschitzFn>,
    ) -> Self {
        let hull_for_select = hull.clone();
        let subgrad: Arc<SelectFn> = Arc::new(move |x: &Point| {
            let gens = hull_for_select(x);
            min_norm_point(&Hull::new(gens).expect("hull oracle returned invalid generators"))
                .expect("min-norm solve failed")
                .point
        });
        PiecewiseLipschitzFunction {
            name: name.into(),
            dim,
            value,
            subgrad,
            hull: Some(hull),
            lipschitz,
        }
    }

    /// Function exposing only a subgradient selection (no hull oracle).
    pub fn selection_only(
        name: impl Into<String>,
        dim: usize,
        value: Arc<ValueFn>,
        subgrad: Arc<SelectFn>,
        lipschitz: Arc<LipschitzFn>,
    ) -> Self {
        PiecewiseLipschitzFunction {
            name: name.into(),
            dim,
            value,
            subgrad,
            hull: None,
            lipschitz,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_hull(&self) -> bool {
        self.hull.is_some()
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// f(x); deterministic.
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok((self.value)(x))
    }

    /// One element of ∂f(x): the gradient at differentiable points, the
    /// canonical (minimal-norm) selection at kinks.
    pub fn subgrad_select(&self, x: &Point) -> Result<Point> {
        self.check_dim(x)?;
        Ok((self.subgrad)(x))
    }

    /// Finite generator list whose convex hull equals ∂f(x); a singleton at
    /// differentiable points.
    pub fn hull_at(&self, x: &Point) -> Result<Hull> {
        self.check_dim(x)?;
        match &self.hull {
            Some(h) => Hull::new(h(x)),
            None => Err(Error::HullUnavailable(self.name.clone())),
        }
    }

    /// dist(0, ∂f(x)) — the stationarity measure. Requires the hull oracle.
    pub fn criticality_residual(&self, x: &Point) -> Result<f64> {
        Ok(min_norm_point(&self.hull_at(x)?)?.norm)
    }

    /// Lipschitz bound of f on the ball B(center, radius).
    pub fn lipschitz_bound_on(&self, center: &Point, radius: f64) -> f64 {
        (self.lipschitz)(center, radius)
    }
}

/// Stochastic subgradient oracle: sample(x) = subgrad_select(x) + xi, with xi
/// drawn from the noise model. The conditional mean is the selection (an
/// element of ∂f(x)) and the second moment is bounded by
/// ||selection||^2 + p_noise(x).
#[derive(Clone, Debug)]
pub struct StochasticOracle {
    base: PiecewiseLipschitzFunction,
    noise: NoiseModel,
}

impl StochasticOracle {
    pub fn new(base: PiecewiseLipschitzFunction, noise: NoiseModel) -> Self {
        StochasticOracle { base, noise }
    }

    pub fn base(&self) -> &PiecewiseLipschitzFunction {
        &self.base
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Same oracle with the noise model replaced (harness grids swap noise).
    pub fn with_noise(&self, noise: NoiseModel) -> Self {
        StochasticOracle {
            base: self.base.clone(),
            noise,
        }
    }

    /// zeta(x, omega); reproducible given the rng stream.
    pub fn sample<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Result<Point> {
        let mut y = self.base.subgrad_select(x)?;
        let xi = self.noise.draw(x, rng);
        y.axpy(1.0, &xi);
        Ok(y)
    }

    /// p(x) >= E||zeta(x,.)||^2.
    pub fn second_moment_bound(&self, x: &Point) -> Result<f64> {
        let y = self.base.subgrad_select(x)?;
        Ok(y.norm_sq() + self.noise.second_moment_bound(x))
    }
}
