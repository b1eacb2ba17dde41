//! Stored-energy densities: the constrained inelastic potential, its
//! regularization and the full elastic plus inelastic density.

use std::cmp::Ordering;
use std::ops::Add;

use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};

use crate::dissipation::DissipationSpec;
use crate::error::{Error, Result};
use crate::tensor::{DevTensor3, Elasticity, SymTensor3};

/// A value in `R ∪ {+∞}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Infinite => None,
        }
    }

    /// Maps `+∞` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Infinite, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::Finite(rhs)
    }
}

/// Smooth penalty `phi` that vanishes on `[0, c3]`, is C2, convex, and grows
/// with slope 6 beyond `c3 + 2 width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyProfile {
    pub c3: f64,
    pub width: f64,
}

impl PenaltyProfile {
    pub fn value(&self, r: f64) -> f64 {
        let (s, d) = (r - self.c3, self.width);
        if s <= 0.0 {
            0.0
        } else if s <= d {
            s * s * s / (d * d)
        } else if s <= 2.0 * d {
            let w = s - d;
            d + 3.0 * w + 3.0 * w * w / d - w * w * w / (d * d)
        } else {
            6.0 * d + 6.0 * (s - 2.0 * d)
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        let (s, d) = (r - self.c3, self.width);
        if s <= 0.0 {
            0.0
        } else if s <= d {
            3.0 * s * s / (d * d)
        } else if s <= 2.0 * d {
            let w = s - d;
            3.0 + 6.0 * w / d - 3.0 * w * w / (d * d)
        } else {
            6.0
        }
    }

    pub fn d2(&self, r: f64) -> f64 {
        let (s, d) = (r - self.c3, self.width);
        if s <= 0.0 || s >= 2.0 * d {
            0.0
        } else if s <= d {
            6.0 * s / (d * d)
        } else {
            6.0 * (2.0 * d - s) / (d * d)
        }
    }

    /// Upper bound of `phi''` and of `phi'(r)/r`.
    pub fn curvature_bound(&self) -> f64 {
        (6.0 / self.width).max(6.0 / self.c3)
    }
}

/// The part of the regularized inelastic potential without the quadratic
/// hardening term: `c1 (sqrt(rho^2 + r^2) - rho) + phi(r) / rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizedInelastic {
    pub c1: f64,
    pub rho: f64,
    pub profile: PenaltyProfile,
}

impl RegularizedInelastic {
    pub fn value(&self, a: &DevTensor3) -> f64 {
        let r = a.norm();
        let rho = self.rho;
        // rewritten to avoid cancellation for r << rho
        let smooth = self.c1 * r * r / ((rho * rho + r * r).sqrt() + rho);
        smooth + self.profile.value(r) / rho
    }

    /// `f'(r) / r` for the radial profile, finite at `r = 0`.
    fn slope_over_r(&self, r: f64) -> f64 {
        let rho = self.rho;
        let mut v = self.c1 / (rho * rho + r * r).sqrt();
        if r > self.profile.c3 {
            v += self.profile.d1(r) / (rho * r);
        }
        v
    }

    pub fn gradient(&self, a: &DevTensor3) -> DevTensor3 {
        *a * self.slope_over_r(a.norm())
    }

    pub fn hessian(&self, a: &DevTensor3) -> Matrix5<f64> {
        let r = a.norm();
        let rho = self.rho;
        let tangential = self.slope_over_r(r);
        let mut h = Matrix5::identity() * tangential;
        if r > 0.0 {
            let q = rho * rho + r * r;
            let radial = self.c1 * rho * rho / (q * q.sqrt()) + self.profile.d2(r) / rho;
            let n = nalgebra::Vector5::from_column_slice(&a.0) / r;
            h += n * n.transpose() * (radial - tangential);
        }
        h
    }

    /// Global Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> f64 {
        (self.c1 + self.profile.curvature_bound()) / self.rho
    }
}

/// Material and model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialParams {
    pub shear_modulus: f64,
    pub bulk_modulus: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub dissipation_radius: f64,
    /// Width of the transition zone of the penalty; `None` means `c3 / 10`.
    pub penalty_width: Option<f64>,
    pub rho: f64,
    pub nu: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            shear_modulus: 1.0,
            bulk_modulus: 1.0,
            c1: 1.0,
            c2: 0.5,
            c3: 1.0,
            dissipation_radius: 0.5,
            penalty_width: None,
            rho: 0.0,
            nu: 0.0,
        }
    }
}

impl MaterialParams {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name} must be > 0, got {x}"));
            }
        };
        positive("shear_modulus", self.shear_modulus);
        positive("bulk_modulus", self.bulk_modulus);
        positive("c1", self.c1);
        positive("c2", self.c2);
        positive("c3", self.c3);
        positive("dissipation_radius", self.dissipation_radius);
        if let Some(w) = self.penalty_width {
            positive("penalty_width", w);
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            v.push(format!("rho must be >= 0, got {}", self.rho));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            v.push(format!("nu must be >= 0, got {}", self.nu));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    pub fn elasticity(&self) -> Elasticity {
        Elasticity {
            shear: self.shear_modulus,
            bulk: self.bulk_modulus,
        }
    }

    pub fn dissipation(&self) -> DissipationSpec {
        DissipationSpec {
            radius: self.dissipation_radius,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn profile(&self) -> PenaltyProfile {
        PenaltyProfile {
            c3: self.c3,
            width: self.penalty_width.unwrap_or(0.1 * self.c3),
        }
    }

    /// `None` when `rho = 0`.
    pub fn regularized(&self) -> Option<RegularizedInelastic> {
        (self.rho > 0.0).then(|| RegularizedInelastic {
            c1: self.c1,
            rho: self.rho,
            profile: self.profile(),
        })
    }

    /// Largest `alpha` with `C(e - z):(e - z)/2 + c2 |z|^2 >= alpha (|e|^2 + |z|^2)`.
    ///
    /// On the spherical part only `e` enters, giving `3K/2`. On each
    /// deviatoric direction the form is `[[G, -G], [-G, G + c2]]`.
    pub fn alpha(&self) -> f64 {
        let (g, c2) = (self.shear_modulus, self.c2);
        let tr = 2.0 * g + c2;
        let dev = 0.5 * (tr - (tr * tr - 4.0 * g * c2).sqrt());
        dev.min(1.5 * self.bulk_modulus)
    }
}

/// The unregularized inelastic potential: `c1|a| + c2|a|^2` on the ball of
/// radius `c3`, `+∞` outside.
pub fn f0(p: &MaterialParams, a: &DevTensor3) -> ExtReal {
    let r = a.norm();
    if r <= p.c3 {
        ExtReal::Finite(p.c1 * r + p.c2 * r * r)
    } else {
        ExtReal::Infinite
    }
}

/// Regularized inelastic potential; requires `rho > 0`.
pub fn f_rho(p: &MaterialParams, a: &DevTensor3) -> Result<f64> {
    let g = require_reg(p)?;
    Ok(g.value(a) + p.c2 * a.norm_sq())
}

pub fn grad_f_rho(p: &MaterialParams, a: &DevTensor3) -> Result<DevTensor3> {
    let g = require_reg(p)?;
    Ok(g.gradient(a) + *a * (2.0 * p.c2))
}

pub fn hess_f_rho(p: &MaterialParams, a: &DevTensor3) -> Result<Matrix5<f64>> {
    let g = require_reg(p)?;
    Ok(g.hessian(a) + Matrix5::identity() * (2.0 * p.c2))
}

/// Inelastic potential for the current `rho`: `F0` when `rho = 0`.
pub fn inelastic(p: &MaterialParams, a: &DevTensor3) -> ExtReal {
    match p.regularized() {
        Some(g) => ExtReal::Finite(g.value(a) + p.c2 * a.norm_sq()),
        None => f0(p, a),
    }
}

/// Full stored-energy density `C(e - z):(e - z)/2 + F(z)`.
pub fn w_rho(p: &MaterialParams, eps: &SymTensor3, z: &DevTensor3) -> ExtReal {
    let e = *eps - z.to_sym();
    inelastic(p, z) + p.elasticity().energy(&e)
}

fn require_reg(p: &MaterialParams) -> Result<RegularizedInelastic> {
    p.regularized()
        .ok_or_else(|| Error::InvalidParameter("regularized potential requires rho > 0".into()))
}
