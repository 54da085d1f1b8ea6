//! Finite differences: central-difference gradients for cross-validating
//! subgradient selections at differentiable points, and one-sided gradient
//! limits for resolving kink structure numerically.
//!
//! Step defaults: central differences with h = 1e-6 * max(1, ||x||), the
//! usual truncation/roundoff balance at double precision.

use crate::point::Point;

pub const FD_STEP_SCALE: f64 = 1e-6;
/// Offset used when probing one-sided gradient limits across a kink.
pub const ONE_SIDED_OFFSET: f64 = 1e-6;

pub fn default_step(x: &Point) -> f64 {
    FD_STEP_SCALE * x.norm().max(1.0)
}

/// Central-difference gradient of f at x.
pub fn central_gradient(f: &dyn Fn(&Point) -> f64, x: &Point, step: Option<f64>) -> Point {
    let h = step.unwrap_or_else(|| default_step(x));
    let mut g = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let mut plus = x.clone();
        plus.coords_mut()[i] += h;
        let mut minus = x.clone();
        minus.coords_mut()[i] -= h;
        g.push((f(&plus) - f(&minus)) / (2.0 * h));
    }
    Point::new(g)
}

/// Gradients at x -/+ offset*e_axis: the one-sided limits across the
/// hyperplane {x_axis = const} when f is smooth on each side.
pub fn one_sided_gradients(
    f: &dyn Fn(&Point) -> f64,
    x: &Point,
    axis: usize,
    offset: f64,
) -> (Point, Point) {
    let mut left = x.clone();
    left.coords_mut()[axis] -= offset;
    let mut right = x.clone();
    right.coords_mut()[axis] += offset;
    let h = Some(offset / 100.0);
    (central_gradient(f, &left, h), central_gradient(f, &right, h))
}
