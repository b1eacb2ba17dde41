//! Dissipation potentials and the accumulated dissipation along a path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DevTensor3;

/// A convex, positively 1-homogeneous dissipation density with a
/// computable proximal map.
pub trait DissipationPotential {
    fn eval(&self, a: &DevTensor3) -> f64;
    /// `argmin_y D(y) lambda + |y - x|^2 / 2`.
    fn prox(&self, lambda: f64, x: &DevTensor3) -> DevTensor3;
    /// Constants `(r, R)` with `r|a| <= D(a) <= R|a|`.
    fn bounds(&self) -> (f64, f64);
}

/// Isotropic dissipation `R |a|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationSpec {
    pub radius: f64,
}

impl DissipationSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dissipation radius must be positive, got {radius}"
            )));
        }
        Ok(DissipationSpec { radius })
    }
}

impl Default for DissipationSpec {
    fn default() -> Self {
        DissipationSpec { radius: 0.5 }
    }
}

impl DissipationPotential for DissipationSpec {
    fn eval(&self, a: &DevTensor3) -> f64 {
        self.radius * a.norm()
    }

    fn prox(&self, lambda: f64, x: &DevTensor3) -> DevTensor3 {
        shrink(x, lambda * self.radius)
    }

    fn bounds(&self) -> (f64, f64) {
        (self.radius, self.radius)
    }
}

/// Block soft-thresholding: `max(0, 1 - t/|x|) x`.
pub fn shrink(x: &DevTensor3, t: f64) -> DevTensor3 {
    let n = x.norm();
    if n <= t {
        DevTensor3::zero()
    } else {
        *x * (1.0 - t / n)
    }
}

/// Total dissipation `sum D(z_i - z_{i-1})` of a sampled path.
pub fn diss_over_path<D: DissipationPotential>(d: &D, samples: &[DevTensor3]) -> f64 {
    samples.windows(2).map(|w| d.eval(&(w[1] - w[0]))).sum()
}
