use nalgebra::{DMatrix, Matrix3};
use nalgebra_sparse::{coo::CooMatrix, csr::CsrMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{BoxMesh, Side};
use crate::energy::MaterialParams;
use crate::error::{Error, Result};
use crate::tensor::{DevTensor3, Elasticity, SymTensor3};

/// P1 displacement and deviatoric inelastic-strain fields on a box mesh,
/// with the displacement clamped on the Dirichlet sides.
#[derive(Clone, Debug)]
pub struct FeSpace {
    pub mesh: BoxMesh,
    pub dirichlet_sides: Vec<Side>,
    dirichlet: Vec<bool>,
    /// Index among free displacement DOFs, per displacement DOF.
    free_u: Vec<Option<usize>>,
    n_free_u: usize,
    /// Lumped nodal masses.
    pub lumped: Vec<f64>,
    /// Consistent scalar mass matrix.
    pub mass: CsrMatrix<f64>,
    /// Scalar stiffness `int grad phi_a . grad phi_b`.
    pub lap: CsrMatrix<f64>,
    grads: Vec<[[f64; 3]; 4]>,
    volumes: Vec<f64>,
}

/// Coefficients of `(u, z)`: three displacement components per node and
/// five deviatoric coordinates per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofVector {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

impl DofVector {
    pub fn zeros(n_nodes: usize) -> Self {
        DofVector {
            u: vec![0.0; 3 * n_nodes],
            z: vec![0.0; 5 * n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.u.len() / 3
    }

    pub fn z_node(&self, n: usize) -> DevTensor3 {
        DevTensor3::from_slice(&self.z[5 * n..5 * n + 5])
    }

    pub fn set_z_node(&mut self, n: usize, v: &DevTensor3) {
        self.z[5 * n..5 * n + 5].copy_from_slice(&v.0);
    }

    pub fn u_node(&self, n: usize) -> [f64; 3] {
        [self.u[3 * n], self.u[3 * n + 1], self.u[3 * n + 2]]
    }

    pub fn dot(&self, other: &DofVector) -> f64 {
        dot(&self.u, &other.u) + dot(&self.z, &other.z)
    }

    pub fn axpy(&mut self, a: f64, x: &DofVector) {
        axpy(&mut self.u, a, &x.u);
        axpy(&mut self.z, a, &x.z);
    }

    pub fn scaled(&self, a: f64) -> DofVector {
        DofVector {
            u: self.u.iter().map(|v| a * v).collect(),
            z: self.z.iter().map(|v| a * v).collect(),
        }
    }

    pub fn sub(&self, other: &DofVector) -> DofVector {
        let mut d = self.clone();
        d.axpy(-1.0, other);
        d
    }

    pub fn max_z_norm(&self) -> f64 {
        (0..self.z.len() / 5)
            .map(|n| self.z_node(n).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (v, w) in y.iter_mut().zip(x) {
        *v += a * w;
    }
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `out = m x`.
pub fn spmv(m: &CsrMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let (off, cols, vals) = (m.row_offsets(), m.col_indices(), m.values());
    out.par_iter_mut().enumerate().for_each(|(r, o)| {
        *o = (off[r]..off[r + 1]).map(|k| vals[k] * x[cols[k]]).sum();
    });
}

/// `out = m^T x`.
pub fn spmv_t(m: &CsrMatrix<f64>, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let (off, cols, vals) = (m.row_offsets(), m.col_indices(), m.values());
    for r in 0..m.nrows() {
        for k in off[r]..off[r + 1] {
            out[cols[k]] += vals[k] * x[r];
        }
    }
}

/// Applies a scalar nodal matrix to each of the five deviatoric components.
pub fn spmv_blocks5(m: &CsrMatrix<f64>, z: &[f64], out: &mut [f64]) {
    let (off, cols, vals) = (m.row_offsets(), m.col_indices(), m.values());
    out.par_chunks_mut(5).enumerate().for_each(|(r, o)| {
        o.iter_mut().for_each(|v| *v = 0.0);
        for k in off[r]..off[r + 1] {
            let c = cols[k];
            for j in 0..5 {
                o[j] += vals[k] * z[5 * c + j];
            }
        }
    });
}

impl FeSpace {
    pub fn new(mesh: BoxMesh, dirichlet_sides: Vec<Side>) -> Result<Self> {
        if dirichlet_sides.is_empty() {
            return Err(Error::InvalidInput(
                "at least one clamped side is required".into(),
            ));
        }
        let nn = mesh.nodes.len();
        let mut dirichlet = vec![false; nn];
        for s in &dirichlet_sides {
            for n in mesh.nodes_on(*s) {
                dirichlet[n] = true;
            }
        }
        let mut free_u = vec![None; 3 * nn];
        let mut n_free_u = 0;
        for n in 0..nn {
            if !dirichlet[n] {
                for i in 0..3 {
                    free_u[3 * n + i] = Some(n_free_u);
                    n_free_u += 1;
                }
            }
        }
        let (grads, volumes): (Vec<_>, Vec<_>) = (0..mesh.tets.len())
            .into_par_iter()
            .map(|t| {
                let p = mesh.tet_points(t);
                let j = Matrix3::from_fn(|r, c| p[c + 1][r] - p[0][r]);
                let inv = j.try_inverse().expect("degenerate tetrahedron");
                let mut g = [[0.0; 3]; 4];
                for a in 1..4 {
                    for i in 0..3 {
                        g[a][i] = inv[(a - 1, i)];
                        g[0][i] -= inv[(a - 1, i)];
                    }
                }
                (g, j.determinant().abs() / 6.0)
            })
            .unzip();
        let mut lumped = vec![0.0; nn];
        let mut mass = CooMatrix::new(nn, nn);
        let mut lap = CooMatrix::new(nn, nn);
        for (t, tet) in mesh.tets.iter().enumerate() {
            let v = volumes[t];
            for a in 0..4 {
                lumped[tet[a]] += v / 4.0;
                for b in 0..4 {
                    let m = if a == b { v / 10.0 } else { v / 20.0 };
                    mass.push(tet[a], tet[b], m);
                    let g: f64 = (0..3).map(|i| grads[t][a][i] * grads[t][b][i]).sum();
                    lap.push(tet[a], tet[b], v * g);
                }
            }
        }
        Ok(FeSpace {
            mesh,
            dirichlet_sides,
            dirichlet,
            free_u,
            n_free_u,
            lumped,
            mass: CsrMatrix::from(&mass),
            lap: CsrMatrix::from(&lap),
            grads,
            volumes,
        })
    }

    /// Unit cube with `n` divisions, clamped on `x = 0`.
    pub fn unit_cube(n: usize) -> Result<Self> {
        FeSpace::new(BoxMesh::unit_cube(n)?, vec![Side::XMin])
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.nodes.len()
    }

    pub fn is_dirichlet(&self, n: usize) -> bool {
        self.dirichlet[n]
    }

    pub fn free_u(&self) -> &[Option<usize>] {
        &self.free_u
    }

    pub fn n_free_u(&self) -> usize {
        self.n_free_u
    }

    /// Number of unknowns once the displacement is clamped.
    pub fn n_constrained(&self) -> usize {
        self.n_free_u + 5 * self.n_nodes()
    }

    pub fn zeros(&self) -> DofVector {
        DofVector::zeros(self.n_nodes())
    }

    /// Restriction to `[free u, z]`.
    pub fn restrict(&self, y: &DofVector) -> Vec<f64> {
        let mut out = vec![0.0; self.n_constrained()];
        for (d, f) in self.free_u.iter().enumerate() {
            if let Some(f) = f {
                out[*f] = y.u[d];
            }
        }
        out[self.n_free_u..].copy_from_slice(&y.z);
        out
    }

    /// Inverse of [`FeSpace::restrict`] with zero clamped values.
    pub fn extend(&self, x: &[f64]) -> DofVector {
        let mut y = self.zeros();
        for (d, f) in self.free_u.iter().enumerate() {
            if let Some(f) = f {
                y.u[d] = x[*f];
            }
        }
        y.z.copy_from_slice(&x[self.n_free_u..]);
        y
    }

    /// Interpolates closed-form fields at the nodes.
    pub fn interpolate(
        &self,
        u: impl Fn([f64; 3]) -> [f64; 3],
        z: impl Fn([f64; 3]) -> DevTensor3,
    ) -> DofVector {
        let mut y = self.zeros();
        for (n, x) in self.mesh.nodes.iter().enumerate() {
            y.u[3 * n..3 * n + 3].copy_from_slice(&u(*x));
            y.set_z_node(n, &z(*x));
        }
        y
    }

    /// Discrete `H^1` norm of a displacement.
    pub fn h1_norm_u(&self, u: &[f64]) -> f64 {
        let mut s = 0.0;
        let mut buf = vec![0.0; self.n_nodes()];
        let mut out = vec![0.0; self.n_nodes()];
        for i in 0..3 {
            for (n, b) in buf.iter_mut().enumerate() {
                *b = u[3 * n + i];
            }
            spmv(&self.mass, &buf, &mut out);
            s += dot(&buf, &out);
            spmv(&self.lap, &buf, &mut out);
            s += dot(&buf, &out);
        }
        s.max(0.0).sqrt()
    }

    /// `L^2` norm of a deviatoric field.
    pub fn l2_norm_z(&self, z: &[f64]) -> f64 {
        let mut out = vec![0.0; z.len()];
        spmv_blocks5(&self.mass, z, &mut out);
        dot(z, &out).max(0.0).sqrt()
    }

    /// Strain of a displacement on element `t`.
    pub fn strain(&self, u: &[f64], t: usize) -> SymTensor3 {
        let mut m = [[0.0; 3]; 3];
        for (a, &n) in self.mesh.tets[t].iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += u[3 * n + i] * self.grads[t][a][j];
                }
            }
        }
        SymTensor3::from_matrix(m)
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.volumes[t]
    }
}

/// `A(y) = y^T H y / 2`, assembled per block:
/// `H = [[K, -C], [-C^T, (2G + 2 c2) M + nu L]]` with `M`, `L` acting on
/// each deviatoric component.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    pub k_uu: CsrMatrix<f64>,
    pub c_uz: CsrMatrix<f64>,
    pub zz_mass: f64,
    pub zz_lap: f64,
    mass: CsrMatrix<f64>,
    lap: CsrMatrix<f64>,
}

pub fn assemble_a_nu(space: &FeSpace, params: &MaterialParams) -> QuadraticForm {
    let el: Elasticity = params.elasticity();
    let mesh = &space.mesh;
    let nn = space.n_nodes();
    let blocks: Vec<([[f64; 12]; 12], [[f64; 5]; 12])> = (0..mesh.tets.len())
        .into_par_iter()
        .map(|t| {
            let v = space.volumes[t];
            let g = &space.grads[t];
            let strains: [SymTensor3; 12] = std::array::from_fn(|p| {
                let (a, i) = (p / 3, p % 3);
                let mut m = [[0.0; 3]; 3];
                m[i] = g[a];
                SymTensor3::from_matrix(m)
            });
            let stresses = strains.map(|e| el.apply(&e));
            let k =
                std::array::from_fn(|p| std::array::from_fn(|q| v * stresses[p].ddot(&strains[q])));
            let c = std::array::from_fn(|p| {
                std::array::from_fn(|k| 0.25 * v * stresses[p].ddot(&DevTensor3::basis(k).to_sym()))
            });
            (k, c)
        })
        .collect();
    let mut k_uu = CooMatrix::new(3 * nn, 3 * nn);
    let mut c_uz = CooMatrix::new(3 * nn, 5 * nn);
    for (tet, (k, c)) in mesh.tets.iter().zip(&blocks) {
        for p in 0..12 {
            let row = 3 * tet[p / 3] + p % 3;
            for q in 0..12 {
                k_uu.push(row, 3 * tet[q / 3] + q % 3, k[p][q]);
            }
            for &b in tet {
                for kk in 0..5 {
                    c_uz.push(row, 5 * b + kk, c[p][kk]);
                }
            }
        }
    }
    QuadraticForm {
        k_uu: CsrMatrix::from(&k_uu),
        c_uz: CsrMatrix::from(&c_uz),
        zz_mass: 2.0 * params.shear_modulus + 2.0 * params.c2,
        zz_lap: params.nu,
        mass: space.mass.clone(),
        lap: space.lap.clone(),
    }
}

impl QuadraticForm {
    /// `H_zz z`.
    pub fn apply_zz(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        spmv_blocks5(&self.mass, z, &mut out);
        out.iter_mut().for_each(|v| *v *= self.zz_mass);
        if self.zz_lap != 0.0 {
            let mut l = vec![0.0; z.len()];
            spmv_blocks5(&self.lap, z, &mut l);
            axpy(&mut out, self.zz_lap, &l);
        }
        out
    }

    /// `H y`.
    pub fn apply(&self, y: &DofVector) -> DofVector {
        let mut hu = vec![0.0; y.u.len()];
        spmv(&self.k_uu, &y.u, &mut hu);
        let mut cz = vec![0.0; y.u.len()];
        spmv(&self.c_uz, &y.z, &mut cz);
        axpy(&mut hu, -1.0, &cz);
        let mut hz = self.apply_zz(&y.z);
        let mut ctu = vec![0.0; y.z.len()];
        spmv_t(&self.c_uz, &y.u, &mut ctu);
        axpy(&mut hz, -1.0, &ctu);
        DofVector { u: hu, z: hz }
    }

    /// `B(a, b) = a^T H b / 2`.
    pub fn bilinear(&self, a: &DofVector, b: &DofVector) -> f64 {
        0.5 * a.dot(&self.apply(b))
    }

    pub fn energy(&self, y: &DofVector) -> f64 {
        self.bilinear(y, y)
    }

    /// Row sums of `|H_zz|` per node.
    pub fn zz_row_bound(&self) -> Vec<f64> {
        let abs_rows = |m: &CsrMatrix<f64>| -> Vec<f64> {
            (0..m.nrows())
                .map(|r| m.row(r).values().iter().map(|v| v.abs()).sum())
                .collect()
        };
        let (m, l) = (abs_rows(&self.mass), abs_rows(&self.lap));
        m.iter()
            .zip(&l)
            .map(|(a, b)| self.zz_mass * a + self.zz_lap * b)
            .collect()
    }

    /// Dense matrix of `H` on the clamped unknowns `[free u, z]`.
    pub fn constrained_dense(&self, space: &FeSpace) -> DMatrix<f64> {
        let n = space.n_constrained();
        let nf = space.n_free_u();
        let mut h = DMatrix::zeros(n, n);
        let fu = space.free_u();
        for (r, c, v) in self.k_uu.triplet_iter() {
            if let (Some(a), Some(b)) = (fu[r], fu[c]) {
                h[(a, b)] += v;
            }
        }
        for (r, c, v) in self.c_uz.triplet_iter() {
            if let Some(a) = fu[r] {
                h[(a, nf + c)] -= v;
                h[(nf + c, a)] -= v;
            }
        }
        for (r, c, v) in self.mass.triplet_iter() {
            for k in 0..5 {
                h[(nf + 5 * r + k, nf + 5 * c + k)] += self.zz_mass * v;
            }
        }
        for (r, c, v) in self.lap.triplet_iter() {
            for k in 0..5 {
                h[(nf + 5 * r + k, nf + 5 * c + k)] += self.zz_lap * v;
            }
        }
        h
    }

    /// `H` applied on the clamped unknowns.
    pub fn apply_constrained(&self, space: &FeSpace, x: &[f64]) -> Vec<f64> {
        space.restrict(&self.apply(&space.extend(x)))
    }

    /// Diagonal of `H` on the clamped unknowns.
    pub fn constrained_diagonal(&self, space: &FeSpace) -> Vec<f64> {
        let diag = |m: &CsrMatrix<f64>, r: usize| m.get_entry(r, r).map_or(0.0, |e| e.into_value());
        let mut d = vec![0.0; space.n_constrained()];
        for (r, f) in space.free_u().iter().enumerate() {
            if let Some(f) = f {
                d[*f] = diag(&self.k_uu, r);
            }
        }
        for n in 0..space.n_nodes() {
            let v = self.zz_mass * diag(&self.mass, n) + self.zz_lap * diag(&self.lap, n);
            for k in 0..5 {
                d[space.n_free_u() + 5 * n + k] = v;
            }
        }
        d
    }

    /// Solves `H x = b` on the clamped unknowns by Jacobi-preconditioned CG.
    pub fn solve_constrained(&self, space: &FeSpace, b: &[f64], rtol: f64) -> Result<Vec<f64>> {
        let diag = self.constrained_diagonal(space);
        cg(
            |x| self.apply_constrained(space, x),
            &diag,
            b,
            rtol,
            20 * b.len().max(100),
        )
    }
}

/// Preconditioned conjugate gradients for a symmetric positive-definite
/// operator.
pub fn cg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    diag: &[f64],
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let prec = |r: &[f64]| -> Vec<f64> {
        r.iter()
            .zip(diag)
            .map(|(v, d)| if *d > 0.0 { v / d } else { *v })
            .collect()
    };
    let mut zv = prec(&r);
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularSystem(format!(
                "operator not positive definite (p^T A p = {pap:e})"
            )));
        }
        let a = rz / pap;
        axpy(&mut x, a, &p);
        axpy(&mut r, -a, &ap);
        if norm(&r) <= rtol * bn {
            return Ok(x);
        }
        zv = prec(&r);
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&zv) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: norm(&r) / bn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::load::{assemble_load, BodyLoad, LoadProgram, TimeProgram, VectorField};
    use rand::{Rng, SeedableRng};

    fn random(space: &FeSpace, seed: u64) -> DofVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut y = space.zeros();
        y.u.iter_mut()
            .chain(y.z.iter_mut())
            .for_each(|v| *v = rng.gen_range(-1.0..1.0));
        y
    }

    #[test]
    fn rigid_translation_has_zero_energy() {
        let space = FeSpace::unit_cube(2).unwrap();
        let a = assemble_a_nu(
            &space,
            &MaterialParams {
                nu: 0.3,
                ..Default::default()
            },
        );
        let y = space.interpolate(|_| [0.3, -1.0, 2.0], |_| DevTensor3::zero());
        assert!(a.energy(&y).abs() < 1e-12);
        // infinitesimal rotation too
        let y = space.interpolate(|x| [-x[1], x[0], 0.0], |_| DevTensor3::zero());
        assert!(a.energy(&y).abs() < 1e-12);
    }

    #[test]
    fn nodal_bump_has_positive_energy() {
        let space = FeSpace::unit_cube(2).unwrap();
        let a = assemble_a_nu(&space, &MaterialParams::default());
        let mut y = space.zeros();
        y.set_z_node(13, &DevTensor3::basis(3));
        assert!(a.energy(&y) > 0.0);
    }

    #[test]
    fn bilinear_form_is_symmetric() {
        let space = FeSpace::unit_cube(2).unwrap();
        let a = assemble_a_nu(
            &space,
            &MaterialParams {
                nu: 0.1,
                ..Default::default()
            },
        );
        for s in 0..5 {
            let (x, y) = (random(&space, s), random(&space, 100 + s));
            let (bxy, byx) = (a.bilinear(&x, &y), a.bilinear(&y, &x));
            assert!((bxy - byx).abs() < 1e-12 * (1.0 + bxy.abs()));
        }
    }

    #[test]
    fn affine_displacement_and_constant_z_are_exact() {
        // A = |Omega| (C(e - z):(e - z)/2 + c2 |z|^2) for constant e and z
        let p = MaterialParams {
            nu: 0.7,
            ..Default::default()
        };
        let space = FeSpace::new(
            BoxMesh::new([1.0, 2.0, 0.5], [2, 3, 2]).unwrap(),
            vec![Side::XMin],
        )
        .unwrap();
        let a = assemble_a_nu(&space, &p);
        let g = [[0.1, 0.3, -0.2], [0.0, 0.25, 0.4], [0.5, -0.1, -0.3]];
        let z = DevTensor3([0.1, -0.2, 0.05, 0.3, -0.15]);
        let y = space.interpolate(
            |x| std::array::from_fn(|i| (0..3).map(|j| g[i][j] * x[j]).sum()),
            |_| z,
        );
        let e = SymTensor3::from_matrix(g);
        let exact = 1.0 * (p.elasticity().energy(&(e - z.to_sym())) + p.c2 * z.norm_sq());
        assert!((a.energy(&y) - exact).abs() < 1e-12);
    }

    #[test]
    fn constant_body_force_on_unit_box() {
        let space = FeSpace::unit_cube(3).unwrap();
        let prog = LoadProgram {
            body: vec![BodyLoad {
                field: VectorField::Constant {
                    value: [0.0, 0.0, 1.0],
                },
                program: TimeProgram::constant(1.0),
            }],
            ..Default::default()
        };
        let l = assemble_load(&space, &prog, 0.3);
        let y = space.interpolate(|_| [0.0, 0.0, 1.0], |_| DevTensor3::zero());
        assert!((dot(&l, &y.u) - 1.0).abs() < 1e-13);
        assert!(assemble_load(&space, &LoadProgram::default(), 0.0)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn traction_is_linear_in_time_between_breakpoints() {
        let space = FeSpace::unit_cube(2).unwrap();
        let prog = LoadProgram::traction(
            vec![Side::XMax],
            [1.0, 0.5, 0.0],
            TimeProgram::ramp_unload(2.0, 1.0),
        );
        let (l1, l2, lm) = (
            assemble_load(&space, &prog, 0.1),
            assemble_load(&space, &prog, 0.4),
            assemble_load(&space, &prog, 0.25),
        );
        for k in 0..l1.len() {
            assert!((lm[k] - 0.5 * (l1[k] + l2[k])).abs() < 1e-14);
        }
        // total force = area * traction * program
        let y = space.interpolate(|_| [1.0, 0.0, 0.0], |_| DevTensor3::zero());
        assert!((dot(&lm, &y.u) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn korn_coercivity_on_small_meshes() {
        for n in [1, 2] {
            let space = FeSpace::unit_cube(n).unwrap();
            let a = assemble_a_nu(&space, &MaterialParams::default());
            let h = a.constrained_dense(&space);
            let min = h.symmetric_eigenvalues().min();
            assert!(min > 0.0, "n = {n}: {min}");
        }
    }

    #[test]
    fn cg_solves_constrained_system() {
        let space = FeSpace::unit_cube(2).unwrap();
        let a = assemble_a_nu(
            &space,
            &MaterialParams {
                nu: 0.01,
                ..Default::default()
            },
        );
        let x0 = space.restrict(&random(&space, 7));
        let b = a.apply_constrained(&space, &x0);
        let x = a.solve_constrained(&space, &b, 1e-13).unwrap();
        let err: f64 = x
            .iter()
            .zip(&x0)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9);
    }
}
