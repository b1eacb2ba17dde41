use nalgebra::{Matrix3, Vector3};

use super::mesh::BoxMesh;
use super::space::{norm, DofVector, FeSpace, QuadraticForm};
use crate::error::{Error, Result};

/// Exact embedding of P1 fields on a mesh into a nested refinement.
#[derive(Clone, Debug)]
pub struct Prolongation {
    /// Per fine node: coarse nodes and barycentric weights.
    weights: Vec<Vec<(usize, f64)>>,
    n_coarse: usize,
}

fn nested(coarse: &BoxMesh, fine: &BoxMesh) -> bool {
    coarse.extents == fine.extents
        && (0..3).all(|a| {
            fine.divisions[a].is_multiple_of(coarse.divisions[a])
                && fine.divisions[a] / coarse.divisions[a]
                    == fine.divisions[0] / coarse.divisions[0]
        })
}

fn barycentric(mesh: &BoxMesh, tet: [usize; 4], x: [f64; 3]) -> [f64; 4] {
    let p = tet.map(|n| mesh.nodes[n]);
    let j = Matrix3::from_fn(|r, c| p[c + 1][r] - p[0][r]);
    let rhs = Vector3::from_fn(|r, _| x[r] - p[0][r]);
    let l = j.try_inverse().expect("degenerate tetrahedron") * rhs;
    [1.0 - l.sum(), l[0], l[1], l[2]]
}

impl Prolongation {
    pub fn new(coarse: &BoxMesh, fine: &BoxMesh) -> Result<Self> {
        if !nested(coarse, fine) {
            return Err(Error::InvalidInput(
                "meshes are not nested uniform refinements of each other".into(),
            ));
        }
        let weights = fine
            .nodes
            .iter()
            .map(|&x| {
                let tet = coarse.locate(x);
                let l = barycentric(coarse, tet, x);
                tet.iter()
                    .zip(l)
                    .filter(|(_, w)| w.abs() > 1e-12)
                    .map(|(&n, w)| (n, if (w - 1.0).abs() < 1e-12 { 1.0 } else { w }))
                    .collect()
            })
            .collect();
        Ok(Prolongation {
            weights,
            n_coarse: coarse.nodes.len(),
        })
    }

    fn apply_components(&self, v: &[f64], k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k * self.weights.len()];
        for (f, ws) in self.weights.iter().enumerate() {
            for &(c, w) in ws {
                for j in 0..k {
                    out[k * f + j] += w * v[k * c + j];
                }
            }
        }
        out
    }

    fn transpose_components(&self, v: &[f64], k: usize) -> Vec<f64> {
        let mut out = vec![0.0; k * self.n_coarse];
        for (f, ws) in self.weights.iter().enumerate() {
            for &(c, w) in ws {
                for j in 0..k {
                    out[k * c + j] += w * v[k * f + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, y: &DofVector) -> DofVector {
        DofVector {
            u: self.apply_components(&y.u, 3),
            z: self.apply_components(&y.z, 5),
        }
    }

    pub fn transpose(&self, y: &DofVector) -> DofVector {
        DofVector {
            u: self.transpose_components(&y.u, 3),
            z: self.transpose_components(&y.z, 5),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub coarse: DofVector,
    /// `|B(y - p y, w)|` over coarse `w`, relative to `|B(y, w)|`.
    pub orthogonality_residual: f64,
}

/// Galerkin projection onto the clamped coarse space in the inner product
/// of the quadratic form.
pub fn galerkin_project(
    coarse: (&FeSpace, &QuadraticForm),
    fine: (&FeSpace, &QuadraticForm),
    y: &DofVector,
) -> Result<Projection> {
    let (cs, cf) = coarse;
    let (fs, ff) = fine;
    let p = Prolongation::new(&cs.mesh, &fs.mesh)?;
    let rhs = cs.restrict(&p.transpose(&ff.apply(y)));
    let x = cf.solve_constrained(cs, &rhs, 1e-14)?;
    let py = cs.extend(&x);
    let diff = y.sub(&p.apply(&py));
    let res = cs.restrict(&p.transpose(&ff.apply(&diff)));
    let scale = norm(&rhs);
    let orthogonality_residual = if scale > 0.0 {
        norm(&res) / scale
    } else {
        norm(&res)
    };
    Ok(Projection {
        coarse: py,
        orthogonality_residual,
    })
}

/// Patch averages `int_{omega_n} z / |omega_n|` of a fine deviatoric field
/// over the coarse node patches.
pub fn interp_constrained(coarse: &FeSpace, fine: &FeSpace, z: &[f64]) -> Result<Vec<f64>> {
    if !nested(&coarse.mesh, &fine.mesh) {
        return Err(Error::InvalidInput("meshes are not nested".into()));
    }
    let nc = coarse.n_nodes();
    let mut acc = vec![0.0; 5 * nc];
    let mut meas = vec![0.0; nc];
    for (t, tet) in fine.mesh.tets.iter().enumerate() {
        let pts = fine.mesh.tet_points(t);
        let centroid = std::array::from_fn(|i| 0.25 * pts.iter().map(|p| p[i]).sum::<f64>());
        let v = fine.volume(t);
        let mut mean = [0.0; 5];
        for &n in tet {
            for k in 0..5 {
                mean[k] += 0.25 * z[5 * n + k];
            }
        }
        for c in coarse.mesh.locate(centroid) {
            meas[c] += v;
            for k in 0..5 {
                acc[5 * c + k] += v * mean[k];
            }
        }
    }
    for c in 0..nc {
        for k in 0..5 {
            acc[5 * c + k] /= meas[c];
        }
    }
    Ok(acc)
}
