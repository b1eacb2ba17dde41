//! Quasi-static evolution of the body: incremental minimization in the
//! shifted displacement `v = u - u_Dir`, the time-stepping ledger and
//! a-posteriori checks of the energetic formulation.

use nalgebra::DMatrix;
use nalgebra_sparse::{coo::CooMatrix, csc::CscMatrix, factorization::CscCholesky};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::TimeGrid;
use crate::dissipation::DissipationSpec;
use crate::energy::{ExtReal, MaterialParams};
use crate::error::{Error, Result};
use crate::fem::load::{assemble_load, dirichlet_lift, LoadProgram};
use crate::fem::mesh::{BoxMesh, Side};
use crate::fem::space::{
    assemble_a_nu, axpy, dot, norm, spmv, spmv_t, DofVector, FeSpace, QuadraticForm,
};
use crate::fem::transfer::{galerkin_project, Prolongation};
use crate::solver::{solve_point, NonsmoothPart, PointProblem, RadialQuadratic, SolverOptions};
use crate::tensor::DevTensor3;

/// Data of one incremental problem.
#[derive(Clone, Debug, PartialEq)]
pub struct BvpStep {
    /// Nodal Dirichlet displacement, zero off the clamped nodes.
    pub dirichlet_lift: Vec<f64>,
    /// Load vector over displacement DOFs.
    pub load: Vec<f64>,
    /// Previous inelastic strain.
    pub anchor: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvpOptions {
    /// Relative tolerance of the joint first-order residual.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub nodal: SolverOptions,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            tolerance: 1e-9,
            max_sweeps: 20_000,
            nodal: SolverOptions {
                tolerance: 1e-12,
                max_iterations: 10_000,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub sweeps: usize,
    /// Norm of a subgradient of the step functional at the returned state.
    pub residual: f64,
    pub objective: f64,
}

/// Assembled operators for fixed mesh and material.
pub struct QuasistaticModel {
    pub space: FeSpace,
    pub params: MaterialParams,
    pub dissipation: DissipationSpec,
    pub form: QuadraticForm,
    k_free: CscCholesky<f64>,
    row_bound: Vec<f64>,
    pub options: BvpOptions,
}

impl std::fmt::Debug for QuasistaticModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuasistaticModel")
            .field("nodes", &self.space.n_nodes())
            .field("params", &self.params)
            .field("options", &self.options)
            .finish()
    }
}

impl QuasistaticModel {
    pub fn new(
        space: FeSpace,
        params: MaterialParams,
        dissipation: DissipationSpec,
    ) -> Result<Self> {
        params.validate()?;
        let form = assemble_a_nu(&space, &params);
        let nf = space.n_free_u();
        let fu = space.free_u();
        let mut coo = CooMatrix::new(nf, nf);
        for (r, c, v) in form.k_uu.triplet_iter() {
            if let (Some(a), Some(b)) = (fu[r], fu[c]) {
                coo.push(a, b, *v);
            }
        }
        let k_free = CscCholesky::factor(&CscMatrix::from(&coo))
            .map_err(|e| Error::SingularSystem(format!("elasticity block: {e:?}")))?;
        let row_bound = form.zz_row_bound();
        Ok(QuasistaticModel {
            space,
            params,
            dissipation,
            form,
            k_free,
            row_bound,
            options: BvpOptions::default(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.space.n_nodes()
    }

    /// `sum m_n G(z_n)`, where `G` is the inelastic potential without the
    /// quadratic hardening term (that term lives in the quadratic form).
    pub fn inelastic_energy(&self, z: &[f64]) -> ExtReal {
        let p = &self.params;
        let mut s = 0.0;
        for (n, m) in self.space.lumped.iter().enumerate() {
            let w = DevTensor3::from_slice(&z[5 * n..]);
            match p.regularized() {
                Some(g) => s += m * g.value(&w),
                None => {
                    let r = w.norm();
                    if r > p.c3 {
                        return ExtReal::Infinite;
                    }
                    s += m * p.c1 * r;
                }
            }
        }
        ExtReal::Finite(s)
    }

    /// Discrete stored energy.
    pub fn stored_energy(&self, y: &DofVector) -> ExtReal {
        self.inelastic_energy(&y.z) + self.form.energy(y)
    }

    /// `sum m_n R |dz_n|`.
    pub fn dissipation_distance(&self, dz: &[f64]) -> f64 {
        self.space
            .lumped
            .iter()
            .enumerate()
            .map(|(n, m)| m * self.dissipation.radius * DevTensor3::from_slice(&dz[5 * n..]).norm())
            .sum()
    }

    /// `W(u, z) - <l, u> + D(z - zbar)`.
    pub fn step_objective(&self, step: &BvpStep, y: &DofVector) -> ExtReal {
        let dz: Vec<f64> = y.z.iter().zip(&step.anchor).map(|(a, b)| a - b).collect();
        self.stored_energy(y) + (self.dissipation_distance(&dz) - dot(&step.load, &y.u))
    }

    /// `K u_Dir`.
    fn k_times(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        spmv(&self.form.k_uu, u, &mut out);
        out
    }

    fn c_times(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.n_free_u().max(3 * self.n_nodes())];
        spmv(&self.form.c_uz, z, &mut out);
        out
    }

    fn free_part(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.n_free_u()];
        for (d, f) in self.space.free_u().iter().enumerate() {
            if let Some(f) = f {
                out[*f] = full[d];
            }
        }
        out
    }

    /// Exact minimization in `u` with `u = u_Dir` on the clamped nodes.
    fn u_step(&self, step: &BvpStep, k_lift: &[f64], z: &[f64]) -> Vec<f64> {
        let cz = self.c_times(z);
        let rhs: Vec<f64> = (0..cz.len())
            .map(|d| step.load[d] + cz[d] - k_lift[d])
            .collect();
        let b = DMatrix::from_column_slice(self.space.n_free_u(), 1, &self.free_part(&rhs));
        let x = self.k_free.solve(&b);
        let mut u = step.dirichlet_lift.clone();
        for (d, f) in self.space.free_u().iter().enumerate() {
            if let Some(f) = f {
                u[d] += x[(*f, 0)];
            }
        }
        u
    }

    /// One majorize-minimize update of all nodal inelastic strains.
    fn z_step(&self, step: &BvpStep, u: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.form.apply_zz(z);
        let mut ctu = vec![0.0; z.len()];
        spmv_t(&self.form.c_uz, u, &mut ctu);
        axpy(&mut g, -1.0, &ctu);
        let p = &self.params;
        let reg = p.regularized();
        let nodal = self.options.nodal;
        let out: Result<Vec<[f64; 5]>> = (0..self.n_nodes())
            .into_par_iter()
            .map(|n| {
                let m = self.space.lumped[n];
                let d = self.row_bound[n];
                let zn = DevTensor3::from_slice(&z[5 * n..]);
                let gn = DevTensor3::from_slice(&g[5 * n..]);
                let pb = PointProblem {
                    smooth: RadialQuadratic {
                        curvature: d / m,
                        linear: (zn * d - gn) * (1.0 / m),
                        regularized: reg,
                    },
                    nonsmooth: NonsmoothPart {
                        origin_weight: if reg.is_some() { 0.0 } else { p.c1 },
                        anchor: DevTensor3::from_slice(&step.anchor[5 * n..]),
                        anchor_weight: self.dissipation.radius,
                        ball: if reg.is_some() { None } else { Some(p.c3) },
                    },
                    start: zn,
                    options: nodal,
                };
                Ok(solve_point(&pb)?.z.0)
            })
            .collect();
        Ok(out?.concat())
    }

    /// Certified residual after a z-update `dz`, with `u` exact for the old z.
    fn sweep_residual(&self, dz: &[f64]) -> (f64, f64) {
        let cdz = self.free_part(&self.c_times(dz));
        let mut rz = self.form.apply_zz(dz);
        for n in 0..self.n_nodes() {
            for k in 0..5 {
                rz[5 * n + k] -= self.row_bound[n] * dz[5 * n + k];
            }
        }
        (norm(&cdz), norm(&rz))
    }

    /// Minimizes the step functional by alternating minimization.
    pub fn solve_step(&self, step: &BvpStep, start: &DofVector) -> Result<(DofVector, StepStats)> {
        let k_lift = self.k_times(&step.dirichlet_lift);
        let mut z = start.z.clone();
        if self.params.rho == 0.0 {
            for n in 0..self.n_nodes() {
                let w = DevTensor3::from_slice(&z[5 * n..]);
                let r = w.norm();
                if r > self.params.c3 {
                    z[5 * n..5 * n + 5].copy_from_slice(&(w * (self.params.c3 / r)).0);
                }
            }
        }
        let scale = norm(&self.free_part(&step.load)) + norm(&self.free_part(&k_lift)) + 1e-300;
        let mut residual = f64::INFINITY;
        for sweep in 1..=self.options.max_sweeps {
            let u = self.u_step(step, &k_lift, &z);
            let zn = self.z_step(step, &u, &z)?;
            let dz: Vec<f64> = zn.iter().zip(&z).map(|(a, b)| a - b).collect();
            let (ru, rz) = self.sweep_residual(&dz);
            z = zn;
            let mut ctu = vec![0.0; z.len()];
            spmv_t(&self.form.c_uz, &u, &mut ctu);
            let s = scale + norm(&ctu);
            residual = (ru * ru + rz * rz).sqrt() / s;
            if residual <= self.options.tolerance {
                let u = self.u_step(step, &k_lift, &z);
                let y = DofVector { u, z };
                let objective = self.step_objective(step, &y).to_f64();
                return Ok((
                    y,
                    StepStats {
                        sweeps: sweep,
                        residual,
                        objective,
                    },
                ));
            }
        }
        Err(Error::NonConvergence {
            iterations: self.options.max_sweeps,
            residual,
        })
    }

    /// Step data at time `t`.
    pub fn step_data(&self, load: &LoadProgram, t: f64, anchor: &[f64]) -> BvpStep {
        BvpStep {
            dirichlet_lift: dirichlet_lift(&self.space, load, t),
            load: assemble_load(&self.space, load, t),
            anchor: anchor.to_vec(),
        }
    }

    /// `<L, (v, z)> = <l, v> - y^T H (u_Dir, 0)`, as a vector on
    /// `[free u, z]`.
    pub fn shifted_load(&self, step: &BvpStep) -> Vec<f64> {
        let lift = DofVector {
            u: step.dirichlet_lift.clone(),
            z: vec![0.0; 5 * self.n_nodes()],
        };
        let h = self.form.apply(&lift);
        let mut full = DofVector {
            u: step.load.clone(),
            z: vec![0.0; 5 * self.n_nodes()],
        };
        full.axpy(-1.0, &h);
        self.space.restrict(&full)
    }

    /// `A(u_Dir, 0) - <l, u_Dir>`.
    pub fn shift_constant(&self, step: &BvpStep) -> f64 {
        let lift = DofVector {
            u: step.dirichlet_lift.clone(),
            z: vec![0.0; 5 * self.n_nodes()],
        };
        self.form.energy(&lift) - dot(&step.load, &step.dirichlet_lift)
    }

    /// Shifted state `(u - u_Dir, z)`.
    pub fn shifted(&self, step: &BvpStep, y: &DofVector) -> DofVector {
        let mut v = y.clone();
        axpy(&mut v.u, -1.0, &step.dirichlet_lift);
        v
    }

    /// `sqrt(2 L^T H^-1 L)`, the dual norm of `L` against `sqrt(A)`.
    pub fn dual_norm(&self, l: &[f64]) -> Result<f64> {
        let x = self.form.solve_constrained(&self.space, l, 1e-11)?;
        Ok((2.0 * dot(l, &x)).max(0.0).sqrt())
    }

    /// Residual of one sweep anchored at the state itself; zero exactly for
    /// stable states.
    pub fn stability_residual(&self, step: &BvpStep, y: &DofVector) -> Result<f64> {
        let anchored = BvpStep {
            anchor: y.z.clone(),
            ..step.clone()
        };
        let k_lift = self.k_times(&anchored.dirichlet_lift);
        let u = self.u_step(&anchored, &k_lift, &y.z);
        let zn = self.z_step(&anchored, &u, &y.z)?;
        let du: f64 = u
            .iter()
            .zip(&y.u)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let dz: f64 = zn
            .iter()
            .zip(&y.z)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + norm(&y.u) + norm(&y.z);
        Ok((du + dz) / scale)
    }
}

/// Per-node energy bookkeeping of an evolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeLedger {
    pub t: f64,
    /// Stored energy of `(u, z)`.
    pub stored: f64,
    /// `<l(t), u(t)>`.
    pub load_pairing: f64,
    /// Stored energy of the shifted state `(v, z)`.
    pub stored_shifted: f64,
    /// `<L(t), (v, z)>`.
    pub shifted_pairing: f64,
    /// `A(u_Dir, 0) - <l, u_Dir>`.
    pub shift_constant: f64,
    pub dissipation: f64,
    /// `sum (l_i - l_{i-1}) . u_{i-1}`.
    pub load_work: f64,
    /// `sum <L_i - L_{i-1}, y_{i-1}>`.
    pub shifted_work: f64,
    /// `stored_shifted - shifted_pairing + dissipation` minus its value at
    /// the start plus `shifted_work`; non-positive up to solver accuracy.
    pub residual: f64,
    pub dual_norm: f64,
    pub sweeps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AprioriBound {
    /// `W(y_0) - <L_0, y_0>`.
    pub initial: f64,
    /// `max ||L_i|| + sum ||L_i - L_{i-1}||`.
    pub load_size: f64,
    /// Bound on `sqrt(W)` along the evolution.
    pub root_bound: f64,
    /// Bound on `W + Diss`.
    pub constant: f64,
    pub max_observed: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct EvolutionRecord {
    pub grid: TimeGrid,
    pub states: Vec<DofVector>,
    pub steps: Vec<BvpStep>,
    pub ledger: Vec<NodeLedger>,
    pub bound: AprioriBound,
}

impl EvolutionRecord {
    pub fn total_dissipation(&self) -> f64 {
        self.ledger.last().map_or(0.0, |l| l.dissipation)
    }

    pub fn state_at(&self, t: f64) -> &DofVector {
        &self.states[self.grid.index_at(t)]
    }

    /// Largest one-sided energy residual.
    pub fn max_residual(&self) -> f64 {
        self.ledger
            .iter()
            .map(|l| l.residual)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute energy residual.
    pub fn balance_gap(&self) -> f64 {
        self.ledger
            .iter()
            .map(|l| l.residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Runs the incremental problem on `grid`. Without an initial state, the
/// state at `t_0` is the minimizer anchored at zero inelastic strain.
pub fn run_incremental_bvp(
    model: &QuasistaticModel,
    load: &LoadProgram,
    grid: &TimeGrid,
    init: Option<&DofVector>,
) -> Result<EvolutionRecord> {
    let nodes = grid.nodes();
    let zeros = model.space.zeros();
    let step0 = model.step_data(load, nodes[0], &zeros.z);
    let (y0, stats0) = match init {
        None => model.solve_step(&step0, &zeros)?,
        Some(y) => {
            let mut y = y.clone();
            for (d, v) in step0.dirichlet_lift.iter().enumerate() {
                if model.space.free_u()[d].is_none() {
                    y.u[d] = *v;
                }
            }
            let st = BvpStep {
                anchor: y.z.clone(),
                ..step0.clone()
            };
            let violation = model.stability_residual(&st, &y)?;
            if violation > 1e-7 {
                return Err(Error::UnstableInitialState { violation });
            }
            (y, StepStats::default())
        }
    };
    let step0 = BvpStep {
        anchor: y0.z.clone(),
        ..step0
    };
    let mut states = vec![y0];
    let mut steps = vec![step0];
    let mut sweeps = vec![stats0.sweeps];
    for &t in &nodes[1..] {
        let prev = states.last().unwrap();
        let step = model.step_data(load, t, &prev.z);
        let (y, st) = model.solve_step(&step, prev)?;
        states.push(y);
        steps.push(step);
        sweeps.push(st.sweeps);
    }
    let (ledger, bound) = build_ledger(model, nodes, &states, &steps, &sweeps)?;
    Ok(EvolutionRecord {
        grid: grid.clone(),
        states,
        steps,
        ledger,
        bound,
    })
}

fn build_ledger(
    model: &QuasistaticModel,
    nodes: &[f64],
    states: &[DofVector],
    steps: &[BvpStep],
    sweeps: &[usize],
) -> Result<(Vec<NodeLedger>, AprioriBound)> {
    let loads: Vec<Vec<f64>> = steps.iter().map(|s| model.shifted_load(s)).collect();
    let duals: Vec<f64> = loads
        .iter()
        .map(|l| model.dual_norm(l))
        .collect::<Result<_>>()?;
    let mut ledger = Vec::with_capacity(states.len());
    let (mut diss, mut load_work, mut shifted_work, mut jumps) = (0.0, 0.0, 0.0, 0.0);
    let mut e0 = 0.0;
    for i in 0..states.len() {
        let y = &states[i];
        let v = model.shifted(&steps[i], y);
        let vr = model.space.restrict(&v);
        if i > 0 {
            let dz: Vec<f64> =
                y.z.iter()
                    .zip(&states[i - 1].z)
                    .map(|(a, b)| a - b)
                    .collect();
            diss += model.dissipation_distance(&dz);
            let dl: Vec<f64> = steps[i]
                .load
                .iter()
                .zip(&steps[i - 1].load)
                .map(|(a, b)| a - b)
                .collect();
            load_work += dot(&dl, &states[i - 1].u);
            let dlv: Vec<f64> = loads[i]
                .iter()
                .zip(&loads[i - 1])
                .map(|(a, b)| a - b)
                .collect();
            let vp = model
                .space
                .restrict(&model.shifted(&steps[i - 1], &states[i - 1]));
            shifted_work += dot(&dlv, &vp);
            jumps += model.dual_norm(&dlv)?;
        }
        let stored_shifted = model.stored_energy(&v).to_f64();
        let shifted_pairing = dot(&loads[i], &vr);
        let e = stored_shifted - shifted_pairing;
        if i == 0 {
            e0 = e;
        }
        ledger.push(NodeLedger {
            t: nodes[i],
            stored: model.stored_energy(y).to_f64(),
            load_pairing: dot(&steps[i].load, &y.u),
            stored_shifted,
            shifted_pairing,
            shift_constant: model.shift_constant(&steps[i]),
            dissipation: diss,
            load_work,
            shifted_work,
            residual: e + diss - (e0 - shifted_work),
            dual_norm: duals[i],
            sweeps: sweeps[i],
        });
    }
    let load_size = duals.iter().cloned().fold(0.0, f64::max) + jumps;
    let c0 = e0;
    let root_bound = 0.5 * (load_size + (load_size * load_size + 4.0 * c0.max(0.0)).sqrt());
    let constant = c0 + load_size * root_bound;
    let max_observed = ledger
        .iter()
        .map(|l| l.stored_shifted + l.dissipation)
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-9 * (1.0 + constant.abs());
    let holds = max_observed <= constant + slack
        && ledger
            .iter()
            .all(|l| l.stored_shifted <= root_bound * root_bound + slack);
    Ok((
        ledger,
        AprioriBound {
            initial: c0,
            load_size,
            root_bound,
            constant,
            max_observed,
            holds,
        },
    ))
}

/// Boundary-value problem on a box: clamped sides, loads and material.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvpProblem {
    pub extents: [f64; 3],
    pub dirichlet_sides: Vec<Side>,
    pub load: LoadProgram,
    pub final_time: f64,
    pub params: MaterialParams,
}

impl BvpProblem {
    /// Unit cube clamped at `x = 0`, pulled on `x = 1` by a traction that
    /// rises to `peak` at `T/2` and is released at `T`.
    pub fn tension_cube(peak: f64) -> Self {
        BvpProblem {
            extents: [1.0; 3],
            dirichlet_sides: vec![Side::XMin],
            load: LoadProgram::traction(
                vec![Side::XMax],
                [1.0, 0.0, 0.0],
                crate::fem::TimeProgram::ramp_unload(peak, 1.0),
            ),
            final_time: 1.0,
            params: MaterialParams::default(),
        }
    }

    pub fn space(&self, divisions: usize) -> Result<FeSpace> {
        FeSpace::new(
            BoxMesh::new(self.extents, [divisions; 3])?,
            self.dirichlet_sides.clone(),
        )
    }

    pub fn model(&self, rho: f64, nu: f64, divisions: usize) -> Result<QuasistaticModel> {
        let p = self.params.with_rho(rho).with_nu(nu);
        QuasistaticModel::new(self.space(divisions)?, p, p.dissipation())
    }
}

#[derive(Clone, Debug)]
pub struct SpacetimeRun {
    pub rho: f64,
    pub nu: f64,
    pub tau: f64,
    pub divisions: usize,
    pub h: f64,
    pub record: EvolutionRecord,
    pub model: std::sync::Arc<QuasistaticModel>,
    pub flags: Vec<String>,
}

/// The discrete solution indexed by `(rho, nu, tau, h)`.
pub fn spacetime_run(
    problem: &BvpProblem,
    rho: f64,
    nu: f64,
    tau: f64,
    divisions: usize,
) -> Result<SpacetimeRun> {
    let model = problem.model(rho, nu, divisions)?;
    let grid = TimeGrid::with_step(problem.final_time, tau)?;
    let record = run_incremental_bvp(&model, &problem.load, &grid, None)?;
    let mut flags = Vec::new();
    if nu == 0.0 {
        flags.push("nu = 0: outside the hypotheses of the joint-limit theorem".to_string());
    }
    if !record.bound.holds {
        flags.push("a priori energy bound violated".to_string());
    }
    let h = model.space.mesh.h();
    Ok(SpacetimeRun {
        rho,
        nu,
        tau,
        divisions,
        h,
        record,
        model: std::sync::Arc::new(model),
        flags,
    })
}

/// Distance between two states on nested meshes: `H^1` of the displacement
/// plus `L^2` of the inelastic strain, measured on the finer mesh.
pub fn state_distance(a: (&FeSpace, &DofVector), b: (&FeSpace, &DofVector)) -> Result<f64> {
    let (coarse, fine) = if a.0.n_nodes() <= b.0.n_nodes() {
        (a, b)
    } else {
        (b, a)
    };
    let ya = if coarse.0.n_nodes() == fine.0.n_nodes() {
        coarse.1.clone()
    } else {
        Prolongation::new(&coarse.0.mesh, &fine.0.mesh)?.apply(coarse.1)
    };
    let d = ya.sub(fine.1);
    Ok(fine.0.h1_norm_u(&d.u) + fine.0.l2_norm_z(&d.z))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HConvergenceRow {
    pub coarse_divisions: usize,
    pub fine_divisions: usize,
    /// Per time node.
    pub differences: Vec<f64>,
    pub max_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HConvergenceTable {
    pub rows: Vec<HConvergenceRow>,
    /// `None` when fewer than two rows exist.
    pub decreasing: Option<bool>,
}

/// Inter-level differences of N-step solutions on nested meshes.
pub fn nstep_h_convergence(
    problem: &BvpProblem,
    divisions: &[usize],
    steps: usize,
    rho: f64,
    nu: f64,
) -> Result<HConvergenceTable> {
    let tau = problem.final_time / steps as f64;
    let runs: Vec<SpacetimeRun> = divisions
        .par_iter()
        .map(|&n| spacetime_run(problem, rho, nu, tau, n))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for w in runs.windows(2) {
        let differences = (0..=steps)
            .map(|i| {
                state_distance(
                    (&w[0].model.space, &w[0].record.states[i]),
                    (&w[1].model.space, &w[1].record.states[i]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let max_difference = differences.iter().cloned().fold(0.0, f64::max);
        rows.push(HConvergenceRow {
            coarse_divisions: w[0].divisions,
            fine_divisions: w[1].divisions,
            differences,
            max_difference,
        });
    }
    let decreasing = (rows.len() >= 2).then(|| {
        rows.windows(2)
            .all(|r| r[1].max_difference <= r[0].max_difference)
    });
    Ok(HConvergenceTable { rows, decreasing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergeticReport {
    pub probes_per_node: usize,
    pub seed: u64,
    /// Largest `[W - <L,y>](y) - [W - <L,y>](y') - D(z' - z)` over competitors.
    pub worst_probe_violation: f64,
    /// Largest self-anchored sweep residual.
    pub worst_first_order: f64,
    /// Nodes failing either check.
    pub flagged_nodes: Vec<usize>,
    pub max_one_sided_residual: f64,
    pub two_sided_gap: f64,
    pub passed: bool,
}

/// Smooth fields projected onto `model`'s space from its uniform refinement.
fn smooth_competitors(model: &QuasistaticModel) -> Result<Vec<DofVector>> {
    let space = &model.space;
    let fine = FeSpace::new(
        BoxMesh::new(space.mesh.extents, space.mesh.divisions.map(|d| 2 * d))?,
        space.dirichlet_sides.clone(),
    )?;
    let fine_form = assemble_a_nu(&fine, &model.params);
    let fields: [(fn([f64; 3]) -> [f64; 3], fn([f64; 3]) -> DevTensor3); 2] = [
        (
            |x| {
                [
                    x[0] * (1.0 - 0.5 * x[0]),
                    0.1 * (3.0 * x[1]).sin() * x[0],
                    0.0,
                ]
            },
            |x| {
                DevTensor3([
                    (2.0 * x[0]).sin(),
                    0.5 * x[1] * x[2],
                    0.0,
                    0.2,
                    (x[0] + x[2]).cos(),
                ]) * 0.3
            },
        ),
        (
            |x| [0.0, x[0] * x[2], -x[0] * x[1]],
            |x| DevTensor3([x[0], -x[1], x[2] - 0.5, 0.0, x[0] * x[1]]) * 0.5,
        ),
    ];
    fields
        .iter()
        .map(|(u, z)| {
            let mut y = fine.interpolate(u, z);
            let r = y.max_z_norm();
            if model.params.rho == 0.0 && r > model.params.c3 {
                y.z.iter_mut().for_each(|v| *v *= model.params.c3 / r);
            }
            Ok(galerkin_project((space, &model.form), (&fine, &fine_form), &y)?.coarse)
        })
        .collect()
}

/// Spot-checks stability and the energy inequality of a record.
pub fn verify_energetic(
    model: &QuasistaticModel,
    record: &EvolutionRecord,
    probes: usize,
    seed: u64,
) -> Result<EnergeticReport> {
    let smooth = if probes > 0 {
        smooth_competitors(model)?
    } else {
        Vec::new()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_probe, mut worst_fo) = (f64::NEG_INFINITY, 0.0f64);
    let mut flagged = Vec::new();
    for (i, (y, step)) in record.states.iter().zip(&record.steps).enumerate() {
        let l = model.shifted_load(step);
        let shifted_energy = |w: &DofVector| -> ExtReal {
            let v = model.shifted(step, w);
            model.stored_energy(&v) + (-dot(&l, &model.space.restrict(&v)))
        };
        let e = shifted_energy(y).to_f64();
        let tol = 1e-8 * (1.0 + e.abs());
        let mut node_worst = f64::NEG_INFINITY;
        let scale = 1.0 + y.max_z_norm();
        for k in 0..probes {
            let mut c = y.clone();
            if k % 2 == 0 || smooth.is_empty() {
                let s = scale * [1e-3, 1e-2, 1e-1][k % 3];
                for (d, f) in model.space.free_u().iter().enumerate() {
                    if f.is_some() {
                        c.u[d] += s * rng.gen_range(-1.0..1.0);
                    }
                }
                c.z.iter_mut()
                    .for_each(|v| *v += s * rng.gen_range(-1.0..1.0));
            } else {
                let s = rng.gen_range(-0.5..0.5) * scale;
                c.axpy(s, &smooth[(k / 2) % smooth.len()]);
            }
            let dz: Vec<f64> = c.z.iter().zip(&y.z).map(|(a, b)| a - b).collect();
            let rhs = shifted_energy(&c) + model.dissipation_distance(&dz);
            if let ExtReal::Finite(r) = rhs {
                node_worst = node_worst.max(e - r);
            }
        }
        let fo = model.stability_residual(step, y)?;
        worst_probe = worst_probe.max(node_worst);
        worst_fo = worst_fo.max(fo);
        if node_worst > tol || fo > 1e-7 {
            flagged.push(i);
        }
    }
    let max_one_sided_residual = record.max_residual();
    let two_sided_gap = record.balance_gap();
    Ok(EnergeticReport {
        probes_per_node: probes,
        seed,
        worst_probe_violation: worst_probe,
        worst_first_order: worst_fo,
        passed: flagged.is_empty() && max_one_sided_residual <= 1e-9,
        flagged_nodes: flagged,
        max_one_sided_residual,
        two_sided_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elastic_problem() -> BvpProblem {
        BvpProblem::tension_cube(0.5)
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let model = BvpProblem::tension_cube(0.0).model(0.1, 0.01, 2).unwrap();
        let step = model.step_data(
            &LoadProgram::default(),
            0.0,
            &vec![0.0; 5 * model.n_nodes()],
        );
        let (y, _) = model.solve_step(&step, &model.space.zeros()).unwrap();
        assert!(y.u.iter().chain(&y.z).all(|&v| v == 0.0));
    }

    #[test]
    fn elastic_regime_matches_linear_solve() {
        let pb = elastic_problem();
        let model = pb.model(0.0, 0.01, 2).unwrap();
        let step = model.step_data(&pb.load, 0.5, &vec![0.0; 5 * model.n_nodes()]);
        let (y, _) = model.solve_step(&step, &model.space.zeros()).unwrap();
        assert_eq!(y.max_z_norm(), 0.0);
        let fu = model.space.free_u();
        let nf = model.space.n_free_u();
        let mut k = DMatrix::zeros(nf, nf);
        for (r, c, v) in model.form.k_uu.triplet_iter() {
            if let (Some(a), Some(b)) = (fu[r], fu[c]) {
                k[(a, b)] += v;
            }
        }
        let rhs = nalgebra::DVector::from_vec(model.free_part(&step.load));
        let x = k.lu().solve(&rhs).unwrap();
        let got = model.free_part(&y.u);
        for i in 0..nf {
            assert!((x[i] - got[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn alternating_minimization_converges_to_long_run() {
        let pb = BvpProblem::tension_cube(2.8);
        let mut model = pb.model(0.1, 0.01, 2).unwrap();
        let step = model.step_data(&pb.load, 0.5, &vec![0.0; 5 * model.n_nodes()]);
        let (y, st) = model.solve_step(&step, &model.space.zeros()).unwrap();
        assert!(y.max_z_norm() > 0.0);
        model.options.tolerance = 1e-13;
        let (y2, st2) = model.solve_step(&step, &model.space.zeros()).unwrap();
        assert!(st2.sweeps >= st.sweeps);
        assert!((st.objective - st2.objective).abs() <= 1e-9 * (1.0 + st2.objective.abs()));
        assert!(state_distance((&model.space, &y), (&model.space, &y2)).unwrap() < 1e-6);
    }

    #[test]
    fn shift_identity() {
        let pb = BvpProblem::tension_cube(1.0);
        let mut pb2 = pb.clone();
        pb2.load.dirichlet = crate::fem::DirichletProgram {
            field: crate::fem::VectorField::Constant {
                value: [0.0, 0.1, -0.05],
            },
            program: crate::fem::TimeProgram::constant(1.0),
        };
        let model = pb2.model(0.1, 0.0, 2).unwrap();
        let step = model.step_data(&pb2.load, 0.3, &vec![0.0; 5 * model.n_nodes()]);
        let (y, _) = model.solve_step(&step, &model.space.zeros()).unwrap();
        let lhs = model.stored_energy(&y).to_f64() - dot(&step.load, &y.u);
        let v = model.shifted(&step, &y);
        let rhs = model.stored_energy(&v).to_f64()
            - dot(&model.shifted_load(&step), &model.space.restrict(&v))
            + model.shift_constant(&step);
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}
