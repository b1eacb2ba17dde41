//! Strongly convex point problems `s(z) + h(z)` in deviatoric coordinates,
//! with `s` smooth and `h` a sum of norm terms and a ball constraint.

use crate::dissipation::shrink;
use crate::energy::{ExtReal, RegularizedInelastic};
use crate::error::{Error, Result};
use crate::tensor::DevTensor3;

/// Smooth convex part of a point problem.
pub trait SmoothObjective {
    fn value(&self, z: &DevTensor3) -> f64;
    fn gradient(&self, z: &DevTensor3) -> DevTensor3;
    /// Global Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
    /// Strong convexity modulus.
    fn modulus(&self) -> f64;
}

/// `curvature |z|^2 / 2 - linear . z + g(z)` with `g` an optional
/// regularized inelastic potential.
#[derive(Clone, Copy, Debug)]
pub struct RadialQuadratic {
    pub curvature: f64,
    pub linear: DevTensor3,
    pub regularized: Option<RegularizedInelastic>,
}

impl SmoothObjective for RadialQuadratic {
    fn value(&self, z: &DevTensor3) -> f64 {
        let mut v = 0.5 * self.curvature * z.norm_sq() - self.linear.dot(z);
        if let Some(g) = &self.regularized {
            v += g.value(z);
        }
        v
    }

    fn gradient(&self, z: &DevTensor3) -> DevTensor3 {
        let mut g = *z * self.curvature - self.linear;
        if let Some(r) = &self.regularized {
            g += r.gradient(z);
        }
        g
    }

    fn lipschitz(&self) -> f64 {
        self.curvature + self.regularized.map_or(0.0, |g| g.lipschitz())
    }

    fn modulus(&self) -> f64 {
        self.curvature
    }
}

/// `origin_weight |z| + anchor_weight |z - anchor| + indicator(|z| <= ball)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonsmoothPart {
    pub origin_weight: f64,
    pub anchor: DevTensor3,
    pub anchor_weight: f64,
    pub ball: Option<f64>,
}

const INNER_TOL: f64 = 1e-15;
const INNER_MAX: usize = 100_000;

impl NonsmoothPart {
    pub fn value(&self, z: &DevTensor3) -> ExtReal {
        let r = z.norm();
        if let Some(c) = self.ball {
            if r > c * (1.0 + 1e-12) {
                return ExtReal::Infinite;
            }
        }
        ExtReal::Finite(self.origin_weight * r + self.anchor_weight * (*z - self.anchor).norm())
    }

    fn prox_radial(&self, x: &DevTensor3, t: f64) -> DevTensor3 {
        self.clip(&shrink(x, t * self.origin_weight))
    }

    fn prox_anchor(&self, x: &DevTensor3, t: f64) -> DevTensor3 {
        self.anchor + shrink(&(*x - self.anchor), t * self.anchor_weight)
    }

    pub fn clip(&self, x: &DevTensor3) -> DevTensor3 {
        match self.ball {
            Some(c) => {
                let n = x.norm();
                if n > c {
                    let mut y = *x * (c / n);
                    while y.norm() > c {
                        y = y * (1.0 - f64::EPSILON);
                    }
                    y
                } else {
                    *x
                }
            }
            None => *x,
        }
    }

    /// `argmin_y t h(y) + |y - x|^2 / 2`.
    pub fn prox(&self, x: &DevTensor3, t: f64) -> DevTensor3 {
        let radial = self.origin_weight > 0.0 || self.ball.is_some();
        if self.anchor_weight == 0.0 {
            return self.prox_radial(x, t);
        }
        if !radial {
            return self.prox_anchor(x, t);
        }
        if self.anchor.norm() == 0.0 {
            return self.clip(&shrink(x, t * (self.origin_weight + self.anchor_weight)));
        }
        // Dykstra-like splitting for the sum of the two proximable parts.
        let mut cur = *x;
        let (mut p, mut q) = (DevTensor3::zero(), DevTensor3::zero());
        for _ in 0..INNER_MAX {
            let y = self.prox_anchor(&(cur + p), t);
            p = cur + p - y;
            let next = self.prox_radial(&(y + q), t);
            q = y + q - next;
            let gap = (next - cur).norm() + (y - next).norm();
            cur = next;
            if gap <= INNER_TOL * (1.0 + x.norm()) {
                break;
            }
        }
        cur
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PointProblem<S> {
    pub smooth: S,
    pub nonsmooth: NonsmoothPart,
    pub start: DevTensor3,
    pub options: SolverOptions,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSolution {
    pub z: DevTensor3,
    pub objective: f64,
    /// Norm of an element of the subdifferential at `z`.
    pub residual: f64,
    pub iterations: usize,
}

/// Accelerated-step proximal gradient with monotone backtracking.
pub fn solve_point<S: SmoothObjective>(problem: &PointProblem<S>) -> Result<PointSolution> {
    let s = &problem.smooth;
    let h = &problem.nonsmooth;
    let opts = problem.options;
    let lip = s.lipschitz();
    let mu = s.modulus();
    if !(lip.is_finite() && lip > 0.0 && mu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smooth part needs 0 < modulus <= lipschitz, got {mu}, {lip}"
        )));
    }
    let t_min = 1.0 / lip;
    let t_max = 1.0 / mu;
    let mut z = h.clip(&problem.start);
    let mut g = s.gradient(&z);
    let mut sz = s.value(&z);
    let mut t = t_min;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let (zn, szn, d) = loop {
            let zn = h.prox(&(z - g * t), t);
            let d = zn - z;
            let szn = s.value(&zn);
            let bound = sz + g.dot(&d) + d.norm_sq() / (2.0 * t);
            if szn <= bound + 1e-15 * (1.0 + sz.abs()) || t <= t_min {
                break (zn, szn, d);
            }
            t = (0.5 * t).max(t_min);
        };
        let gn = s.gradient(&zn);
        let y = gn - g;
        residual = (y - d * (1.0 / t)).norm();
        z = zn;
        g = gn;
        sz = szn;
        if residual <= opts.tolerance {
            let objective = (h.value(&z) + sz).to_f64();
            return Ok(PointSolution {
                z,
                objective,
                residual,
                iterations: it,
            });
        }
        let dy = d.dot(&y);
        t = if dy > 0.0 {
            (d.norm_sq() / dy).clamp(t_min, t_max)
        } else {
            t_max.min(16.0 * t)
        };
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Residual of one proximal-gradient step with step `1/L` taken at `z`;
/// zero exactly at minimizers.
pub fn stationarity_residual<S: SmoothObjective>(s: &S, h: &NonsmoothPart, z: &DevTensor3) -> f64 {
    let t = 1.0 / s.lipschitz();
    let g = s.gradient(z);
    let zn = h.prox(&(*z - g * t), t);
    let d = zn - *z;
    (s.gradient(&zn) - g - d * (1.0 / t)).norm()
}
