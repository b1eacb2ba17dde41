//! Symmetric 3x3 tensors, their deviatoric parts and isotropic elasticity.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT6: f64 = 2.449_489_742_783_178;

/// Symmetric tensor stored as `[a11, a22, a33, a23, a13, a12]`.
///
/// Off-diagonal entries are tensor components, so the double contraction
/// counts each of them twice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymTensor3(pub [f64; 6]);

impl SymTensor3 {
    pub const fn zero() -> Self {
        SymTensor3([0.0; 6])
    }

    pub const fn identity() -> Self {
        SymTensor3([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor3([a, b, c, 0.0, 0.0, 0.0])
    }

    /// Symmetric part of a full matrix.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Self {
        SymTensor3([
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[1][2] + m[2][1]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[0][1] + m[1][0]),
        ])
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let a = &self.0;
        [[a[0], a[5], a[4]], [a[5], a[1], a[3]], [a[4], a[3], a[2]]]
    }

    /// Builds `dev + (s / sqrt 3) I`, so that `s` is the coordinate along
    /// the unit spherical direction.
    pub fn from_parts(dev: DevTensor3, spherical: f64) -> Self {
        dev.to_sym() + SymTensor3::identity() * (spherical / 3f64.sqrt())
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    pub fn ddot(&self, other: &SymTensor3) -> f64 {
        let (a, b) = (&self.0, &other.0);
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Deviatoric coordinates and trace.
    pub fn dev_split(&self) -> (DevTensor3, f64) {
        (DevTensor3::from_sym(self), self.trace())
    }

    pub fn dev(&self) -> DevTensor3 {
        DevTensor3::from_sym(self)
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(mut self, rhs: SymTensor3) -> SymTensor3 {
        self += rhs;
        self
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, rhs: SymTensor3) -> SymTensor3 {
        self + (-rhs)
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        self * -1.0
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = SymTensor3;
    fn mul(mut self, s: f64) -> SymTensor3 {
        for a in self.0.iter_mut() {
            *a *= s;
        }
        self
    }
}

/// Trace-free symmetric tensor in an orthonormal basis of the deviatoric
/// subspace, so the Euclidean norm of the coordinates is the Frobenius norm.
///
/// Basis: `diag(1,-1,0)/sqrt2`, `diag(1,1,-2)/sqrt6`, then the normalized
/// symmetric shears in the 23, 13 and 12 planes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DevTensor3(pub [f64; 5]);

impl DevTensor3 {
    pub const fn zero() -> Self {
        DevTensor3([0.0; 5])
    }

    /// Orthogonal projection onto the deviatoric subspace.
    pub fn from_sym(a: &SymTensor3) -> Self {
        let a = &a.0;
        DevTensor3([
            (a[0] - a[1]) / SQRT2,
            (a[0] + a[1] - 2.0 * a[2]) / SQRT6,
            SQRT2 * a[3],
            SQRT2 * a[4],
            SQRT2 * a[5],
        ])
    }

    pub fn to_sym(&self) -> SymTensor3 {
        let c = &self.0;
        SymTensor3([
            c[0] / SQRT2 + c[1] / SQRT6,
            -c[0] / SQRT2 + c[1] / SQRT6,
            -2.0 * c[1] / SQRT6,
            c[2] / SQRT2,
            c[3] / SQRT2,
            c[4] / SQRT2,
        ])
    }

    /// The `k`-th basis tensor.
    pub fn basis(k: usize) -> Self {
        let mut c = [0.0; 5];
        c[k] = 1.0;
        DevTensor3(c)
    }

    pub fn dot(&self, other: &DevTensor3) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut c = [0.0; 5];
        c.copy_from_slice(&s[..5]);
        DevTensor3(c)
    }
}

impl Index<usize> for DevTensor3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for DevTensor3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for DevTensor3 {
    type Output = DevTensor3;
    fn add(mut self, rhs: DevTensor3) -> DevTensor3 {
        self += rhs;
        self
    }
}

impl AddAssign for DevTensor3 {
    fn add_assign(&mut self, rhs: DevTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for DevTensor3 {
    type Output = DevTensor3;
    fn sub(mut self, rhs: DevTensor3) -> DevTensor3 {
        self -= rhs;
        self
    }
}

impl SubAssign for DevTensor3 {
    fn sub_assign(&mut self, rhs: DevTensor3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Neg for DevTensor3 {
    type Output = DevTensor3;
    fn neg(self) -> DevTensor3 {
        self * -1.0
    }
}

impl Mul<f64> for DevTensor3 {
    type Output = DevTensor3;
    fn mul(mut self, s: f64) -> DevTensor3 {
        for a in self.0.iter_mut() {
            *a *= s;
        }
        self
    }
}

/// Isotropic elasticity `C a = 2G dev(a) + K tr(a) I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elasticity {
    pub shear: f64,
    pub bulk: f64,
}

impl Elasticity {
    pub fn new(shear: f64, bulk: f64) -> Result<Self> {
        if !(shear > 0.0 && shear.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "shear modulus must be positive, got {shear}"
            )));
        }
        if !(bulk > 0.0 && bulk.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bulk modulus must be positive, got {bulk}"
            )));
        }
        Ok(Elasticity { shear, bulk })
    }

    pub fn apply(&self, a: &SymTensor3) -> SymTensor3 {
        let (d, tr) = a.dev_split();
        d.to_sym() * (2.0 * self.shear) + SymTensor3::identity() * (self.bulk * tr)
    }

    pub fn apply_inverse(&self, s: &SymTensor3) -> SymTensor3 {
        let (d, tr) = s.dev_split();
        d.to_sym() * (0.5 / self.shear) + SymTensor3::identity() * (tr / (9.0 * self.bulk))
    }

    /// `C a : a / 2`.
    pub fn energy(&self, a: &SymTensor3) -> f64 {
        let (d, tr) = a.dev_split();
        self.shear * d.norm_sq() + 0.5 * self.bulk * tr * tr
    }

    /// Smallest eigenvalue of `C` on symmetric tensors.
    pub fn min_eigenvalue(&self) -> f64 {
        (2.0 * self.shear).min(3.0 * self.bulk)
    }
}

impl Default for Elasticity {
    fn default() -> Self {
        Elasticity {
            shear: 1.0,
            bulk: 1.0,
        }
    }
}
