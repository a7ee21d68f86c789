//! A smooth compactly supported test function and a direct quadrature of its
//! fractional Laplacian.

use crate::quadrature::integrate;
use std::f64::consts::PI;

/// `u(x) = height * cos^4(π (x - center) / (2 half_width))` on
/// `|x - center| < half_width`, zero outside. `C^3` across the support edge.
#[derive(Debug, Clone, Copy)]
pub struct CosFourBump {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
}

impl CosFourBump {
    pub fn new(center: f64, half_width: f64, height: f64) -> Self {
        Self { center, half_width, height }
    }

    fn phase(&self, x: f64) -> f64 {
        PI * (x - self.center) / (2.0 * self.half_width)
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() < self.half_width
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.contains(x) {
            self.height * self.phase(x).cos().powi(4)
        } else {
            0.0
        }
    }

    /// `2u(x) - u(x+y) - u(x-y)` when both shifts stay inside the support,
    /// written through `cos^4 θ = (3 + 4 cos 2θ + cos 4θ) / 8` so that no
    /// cancellation occurs for small `y`.
    fn symmetric_difference_inside(&self, x: f64, y: f64) -> f64 {
        let th = self.phase(x);
        let d = PI * y / (2.0 * self.half_width);
        let term = |k: f64, b: f64| b * 4.0 * (k * th).cos() * (0.5 * k * d).sin().powi(2);
        self.height * (term(2.0, 0.5) + term(4.0, 0.125))
    }

    fn symmetric_difference(&self, x: f64, y: f64) -> f64 {
        if self.contains(x + y) && self.contains(x - y) {
            self.symmetric_difference_inside(x, y)
        } else {
            2.0 * self.eval(x) - self.eval(x + y) - self.eval(x - y)
        }
    }

    /// `c ∫_0^∞ (2u(x) - u(x+y) - u(x-y)) y^{-1-2s} dy` by adaptive quadrature,
    /// split at the support kinks, with the constant far field in closed form.
    pub fn fractional_laplacian(&self, x: f64, s: f64, cns: f64, tol: f64) -> f64 {
        let lo = self.center - self.half_width;
        let hi = self.center + self.half_width;
        let mut breaks = [(x - lo).abs(), (hi - x).abs()];
        breaks.sort_by(f64::total_cmp);
        let [b1, b2] = breaks;
        let integrand = |y: f64| {
            if y == 0.0 {
                0.0
            } else {
                self.symmetric_difference(x, y) * y.powf(-1.0 - 2.0 * s)
            }
        };
        let mut total = 0.0;
        if b1 > 0.0 {
            if self.contains(x) {
                // y = b1 t^m removes the y^{1-2s} endpoint behaviour.
                let m = 1.0 / (1.0 - s);
                let sub = |t: f64| {
                    if t == 0.0 {
                        0.0
                    } else {
                        let y = b1 * t.powf(m);
                        integrand(y) * b1 * m * t.powf(m - 1.0)
                    }
                };
                total += integrate(sub, 0.0, 1.0, tol).0;
            } else {
                total += integrate(integrand, 0.0, b1, tol).0;
            }
        }
        total += integrate(integrand, b1, b2, tol).0;
        total += 2.0 * self.eval(x) * b2.powf(-2.0 * s) / (2.0 * s);
        cns * total
    }
}
