//! Incremental evolution of a single material point under a prescribed
//! stress history.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dissipation::{DissipationPotential, DissipationSpec};
use crate::energy::{w_rho, ExtReal, MaterialParams};
use crate::error::{Error, Result};
use crate::solver::{
    solve_point, stationarity_residual, NonsmoothPart, PointProblem, RadialQuadratic, SolverOptions,
};
use crate::tensor::{DevTensor3, SymTensor3};

/// Strictly increasing time nodes `0 = t_0 < ... < t_N = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput(
                "a time grid needs at least two nodes".into(),
            ));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "time nodes must be finite and strictly increasing".into(),
            ));
        }
        Ok(TimeGrid { nodes })
    }

    pub fn uniform(final_time: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(final_time > 0.0) {
            return Err(Error::InvalidInput(format!(
                "uniform grid needs steps > 0 and T > 0, got {steps}, {final_time}"
            )));
        }
        TimeGrid::new(
            (0..=steps)
                .map(|i| final_time * i as f64 / steps as f64)
                .collect(),
        )
    }

    /// Uniform grid whose step is `tau`, which must divide `T`.
    pub fn with_step(final_time: f64, tau: f64) -> Result<Self> {
        let n = (final_time / tau).round();
        if !(n >= 1.0) || ((n * tau - final_time).abs() > 1e-9 * final_time) {
            return Err(Error::InvalidInput(format!(
                "step {tau} does not divide final time {final_time}"
            )));
        }
        TimeGrid::uniform(final_time, n as usize)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn max_step(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the last node not after `t`, the right-continuous
    /// piecewise-constant lookup.
    pub fn index_at(&self, t: f64) -> usize {
        let tol = 1e-12 * self.final_time().abs().max(1.0);
        self.nodes
            .partition_point(|&s| s <= t + tol)
            .saturating_sub(1)
    }
}

/// Piecewise-linear stress history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressPath {
    breakpoints: Vec<(f64, SymTensor3)>,
}

impl StressPath {
    pub fn new(breakpoints: Vec<(f64, SymTensor3)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidInput("stress path needs a breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(
                "stress breakpoints must be strictly increasing in time".into(),
            ));
        }
        Ok(StressPath { breakpoints })
    }

    /// `sigma(t) = s(t) direction` with `s` piecewise linear through `scales`.
    pub fn proportional(direction: SymTensor3, scales: &[(f64, f64)]) -> Result<Self> {
        StressPath::new(scales.iter().map(|&(t, s)| (t, direction * s)).collect())
    }

    /// Rises linearly from zero to `peak` at `T/2`, then returns to zero.
    pub fn ramp_unload(direction: SymTensor3, peak: f64, final_time: f64) -> Result<Self> {
        StressPath::proportional(
            direction,
            &[(0.0, 0.0), (0.5 * final_time, peak), (final_time, 0.0)],
        )
    }

    pub fn eval(&self, t: f64) -> SymTensor3 {
        let b = &self.breakpoints;
        if t <= b[0].0 {
            return b[0].1;
        }
        let k = b.partition_point(|(s, _)| *s <= t);
        if k == b.len() {
            return b[k - 1].1;
        }
        let ((t0, s0), (t1, s1)) = (b[k - 1], b[k]);
        let w = (t - t0) / (t1 - t0);
        s0 * (1.0 - w) + s1 * w
    }

    /// Time-reparametrized copy `t -> map(t)` of the breakpoints.
    pub fn reparametrize(&self, map: impl Fn(f64) -> f64) -> Result<Self> {
        StressPath::new(self.breakpoints.iter().map(|&(t, s)| (map(t), s)).collect())
    }

    /// `||sigma_1 - sigma_2||` in `W^{1,1}(0, t)`, both paths sampled on `grid`.
    pub fn w11_distance(&self, other: &StressPath, grid: &TimeGrid, upto: usize) -> f64 {
        let n = grid.nodes();
        let mut l1 = 0.0;
        let mut var = 0.0;
        for i in 1..=upto {
            let d0 = self.eval(n[i - 1]) - other.eval(n[i - 1]);
            let d1 = self.eval(n[i]) - other.eval(n[i]);
            l1 += 0.5 * (d0.norm() + d1.norm()) * (n[i] - n[i - 1]);
            var += (d1 - d0).norm();
        }
        let d = self.eval(n[0]) - other.eval(n[0]);
        l1 + var + d.norm()
    }
}

/// Strain and inelastic strain at one time node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub eps: SymTensor3,
    pub z: DevTensor3,
}

impl PointState {
    /// `|eps_1 - eps_2| + |z_1 - z_2|`.
    pub fn distance(&self, other: &PointState) -> f64 {
        (self.eps - other.eps).norm() + (self.z - other.z).norm()
    }

    /// The state with `z` and the elastic response `eps = C^-1 sigma + z`.
    pub fn relaxed(p: &MaterialParams, sigma: &SymTensor3, z: DevTensor3) -> Self {
        PointState {
            eps: p.elasticity().apply_inverse(sigma) + z.to_sym(),
            z,
        }
    }
}

/// Per-node energy bookkeeping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub t: f64,
    /// `W(eps, z) - sigma : eps`.
    pub energy: f64,
    pub dissipation: f64,
    /// `sum (sigma_i - sigma_{i-1}) : eps_{i-1}`, the exact work of the
    /// piecewise-constant interpolant.
    pub work: f64,
    /// `energy + dissipation - (energy_0 - work)`; non-positive up to
    /// solver accuracy.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTrajectory {
    pub grid: TimeGrid,
    pub stresses: Vec<SymTensor3>,
    pub states: Vec<PointState>,
    pub ledger: Vec<LedgerEntry>,
}

impl PointTrajectory {
    pub fn total_dissipation(&self) -> f64 {
        self.ledger.last().map_or(0.0, |e| e.dissipation)
    }

    /// State of the piecewise-constant right-continuous interpolant.
    pub fn state_at(&self, t: f64) -> PointState {
        self.states[self.grid.index_at(t)]
    }

    /// Piecewise-linear interpolant of the states in time.
    pub fn interpolate(&self, t: f64) -> PointState {
        let nodes = self.grid.nodes();
        let i = self.grid.index_at(t);
        if i + 1 >= nodes.len() {
            return self.states[i];
        }
        let w = ((t - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
        let (a, b) = (&self.states[i], &self.states[i + 1]);
        PointState {
            eps: a.eps + (b.eps - a.eps) * w,
            z: a.z + (b.z - a.z) * w,
        }
    }

    pub fn ledger_at(&self, t: f64) -> LedgerEntry {
        self.ledger[self.grid.index_at(t)]
    }
}

fn point_problem(
    p: &MaterialParams,
    d: &DissipationSpec,
    sigma: &SymTensor3,
    z_prev: &DevTensor3,
    options: SolverOptions,
) -> PointProblem<RadialQuadratic> {
    let reg = p.regularized();
    PointProblem {
        smooth: RadialQuadratic {
            curvature: 2.0 * p.c2,
            linear: sigma.dev(),
            regularized: reg,
        },
        nonsmooth: NonsmoothPart {
            origin_weight: if reg.is_some() { 0.0 } else { p.c1 },
            anchor: *z_prev,
            anchor_weight: d.radius,
            ball: if reg.is_some() { None } else { Some(p.c3) },
        },
        start: *z_prev,
        options,
    }
}

/// Minimizes `W(eps, z) - sigma : eps + D(z - z_prev)`.
pub fn incremental_step(
    p: &MaterialParams,
    d: &DissipationSpec,
    sigma: &SymTensor3,
    z_prev: &DevTensor3,
) -> Result<PointState> {
    incremental_step_with(p, d, sigma, z_prev, SolverOptions::default())
}

pub fn incremental_step_with(
    p: &MaterialParams,
    d: &DissipationSpec,
    sigma: &SymTensor3,
    z_prev: &DevTensor3,
    options: SolverOptions,
) -> Result<PointState> {
    p.validate()?;
    let sol = solve_point(&point_problem(p, d, sigma, z_prev, options))?;
    Ok(PointState::relaxed(p, sigma, sol.z))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub probes: usize,
    pub seed: u64,
    /// Largest `[W - sigma:eps] - [W' - sigma:eps' + D(z' - z)]` over probes.
    pub worst_probe_violation: f64,
    /// Subgradient residual of the reduced problem anchored at `z`.
    pub first_order_residual: f64,
    /// `|C(eps - z) - sigma|`.
    pub equilibrium_residual: f64,
    pub worst_violation: f64,
    pub passed: bool,
}

/// Checks global stability of `state` under `sigma` against random
/// competitors in the ball of radius `2 c3` around it.
pub fn verify_stability(
    p: &MaterialParams,
    d: &DissipationSpec,
    sigma: &SymTensor3,
    state: &PointState,
    probes: usize,
    tol: f64,
    seed: u64,
) -> StabilityReport {
    let lhs = w_rho(p, &state.eps, &state.z) + (-sigma.ddot(&state.eps));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = 2.0 * p.c3;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..probes {
        let mut v = [0.0; 11];
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = radius * rng.gen::<f64>().powf(1.0 / 11.0) / n;
        let de = SymTensor3::from_parts(DevTensor3::from_slice(&v[..5]), v[5]) * r;
        let dz = DevTensor3::from_slice(&v[6..]) * r;
        let (eb, zb) = (state.eps + de, state.z + dz);
        let rhs = w_rho(p, &eb, &zb) + (d.eval(&dz) - sigma.ddot(&eb));
        let viol = match (lhs, rhs) {
            (_, ExtReal::Infinite) => continue,
            (ExtReal::Infinite, _) => f64::INFINITY,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a - b,
        };
        worst = worst.max(viol);
    }
    if lhs == ExtReal::Infinite {
        worst = f64::INFINITY;
    }
    let pb = point_problem(p, d, sigma, &state.z, SolverOptions::default());
    let first_order_residual = stationarity_residual(&pb.smooth, &pb.nonsmooth, &state.z);
    let equilibrium_residual =
        (p.elasticity().apply(&(state.eps - state.z.to_sym())) - *sigma).norm();
    let worst_violation = worst.max(first_order_residual).max(equilibrium_residual);
    StabilityReport {
        probes,
        seed,
        worst_probe_violation: worst,
        first_order_residual,
        equilibrium_residual,
        worst_violation,
        passed: worst_violation <= tol,
    }
}

/// Runs the incremental problem over `grid` from the stable initial state.
pub fn run_constitutive(
    p: &MaterialParams,
    d: &DissipationSpec,
    path: &StressPath,
    grid: &TimeGrid,
    init: &PointState,
) -> Result<PointTrajectory> {
    p.validate()?;
    let nodes = grid.nodes();
    let sigma0 = path.eval(nodes[0]);
    let e0 = (w_rho(p, &init.eps, &init.z) + (-sigma0.ddot(&init.eps))).to_f64();
    let tol = 1e-8 * (1.0 + e0.abs());
    let report = verify_stability(p, d, &sigma0, init, 64, tol, 0);
    if !report.passed {
        return Err(Error::UnstableInitialState {
            violation: report.worst_violation,
        });
    }
    let mut stresses = vec![sigma0];
    let mut states = vec![*init];
    for &t in &nodes[1..] {
        let sigma = path.eval(t);
        let prev = states.last().unwrap().z;
        states.push(incremental_step(p, d, &sigma, &prev)?);
        stresses.push(sigma);
    }
    let ledger = build_ledger(p, d, nodes, &stresses, &states);
    Ok(PointTrajectory {
        grid: grid.clone(),
        stresses,
        states,
        ledger,
    })
}

fn build_ledger(
    p: &MaterialParams,
    d: &DissipationSpec,
    nodes: &[f64],
    stresses: &[SymTensor3],
    states: &[PointState],
) -> Vec<LedgerEntry> {
    let energy = |i: usize| {
        (w_rho(p, &states[i].eps, &states[i].z) + (-stresses[i].ddot(&states[i].eps))).to_f64()
    };
    let e0 = energy(0);
    let mut out = vec![LedgerEntry {
        t: nodes[0],
        energy: e0,
        ..Default::default()
    }];
    let (mut diss, mut work) = (0.0, 0.0);
    for i in 1..states.len() {
        diss += d.eval(&(states[i].z - states[i - 1].z));
        work += (stresses[i] - stresses[i - 1]).ddot(&states[i - 1].eps);
        let e = energy(i);
        out.push(LedgerEntry {
            t: nodes[i],
            energy: e,
            dissipation: diss,
            work,
            residual: e + diss - (e0 - work),
        });
    }
    out
}

/// Energy-balance residuals recomputed from the stored states.
pub fn energy_balance_residual(
    p: &MaterialParams,
    d: &DissipationSpec,
    traj: &PointTrajectory,
) -> Vec<f64> {
    build_ledger(p, d, traj.grid.nodes(), &traj.stresses, &traj.states)
        .iter()
        .map(|e| e.residual)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    /// `(tau, sup-norm error)` per grid.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of log error against log tau.
    pub order: Option<f64>,
    /// All errors are at round-off level, so no order is meaningful.
    pub degenerate: bool,
    pub reference_tau: f64,
}

/// Errors below this are treated as exact.
pub const DEGENERATE_ERROR: f64 = 1e-12;

/// Sup-in-time error of the piecewise-linear interpolants of uniform-grid
/// solutions against a fine reference, sampled at the reference nodes.
pub fn temporal_error_study(
    p: &MaterialParams,
    d: &DissipationSpec,
    path: &StressPath,
    final_time: f64,
    taus: &[f64],
    reference_tau: f64,
) -> Result<RateStudy> {
    if !(p.rho > 0.0) {
        return Err(Error::InvalidParameter(
            "temporal study requires rho > 0".into(),
        ));
    }
    if taus.is_empty() {
        return Err(Error::InvalidInput("no step sizes given".into()));
    }
    let tmin = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    if reference_tau > tmin / 8.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "reference step {reference_tau} must be at most {}",
            tmin / 8.0
        )));
    }
    let sigma0 = path.eval(0.0);
    let init = PointState::relaxed(
        p,
        &sigma0,
        incremental_step(p, d, &sigma0, &DevTensor3::zero())?.z,
    );
    let reference = run_constitutive(
        p,
        d,
        path,
        &TimeGrid::with_step(final_time, reference_tau)?,
        &init,
    )?;
    let mut rows = Vec::new();
    for &tau in taus {
        let traj = run_constitutive(p, d, path, &TimeGrid::with_step(final_time, tau)?, &init)?;
        let err = reference
            .grid
            .nodes()
            .iter()
            .zip(&reference.states)
            .map(|(&t, s)| traj.interpolate(t).distance(s))
            .fold(0.0, f64::max);
        rows.push((tau, err));
    }
    let degenerate = rows.iter().all(|r| r.1 < DEGENERATE_ERROR);
    let order = if degenerate {
        None
    } else {
        loglog_slope(&rows)
    };
    Ok(RateStudy {
        rows,
        order,
        degenerate,
        reference_tau,
    })
}

/// Least-squares slope through `(ln x, ln y)`, skipping non-positive values.
pub fn loglog_slope(rows: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.0 > 0.0 && r.1 > 0.0)
        .map(|r| (r.0.ln(), r.1.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Data of one incremental step: stress and previous inelastic strain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepData {
    pub sigma: SymTensor3,
    pub z_prev: DevTensor3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceRow {
    /// `|eps_1 - eps_2|^2 + |z_1 - z_2|^2`.
    pub lhs: f64,
    /// `|sigma_1 - sigma_2|^2 / alpha^2 + 4 D(zbar_1 - zbar_2) / alpha`.
    pub rhs: f64,
    pub holds: bool,
}

/// Step-level continuous-dependence estimate for each pair of step data.
pub fn continuous_dependence_check(
    p: &MaterialParams,
    d: &DissipationSpec,
    pairs: &[(StepData, StepData)],
) -> Result<Vec<DependenceRow>> {
    let alpha = p.alpha();
    let mut rows = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let sa = incremental_step(p, d, &a.sigma, &a.z_prev)?;
        let sb = incremental_step(p, d, &b.sigma, &b.z_prev)?;
        let lhs = (sa.eps - sb.eps).norm_sq() + (sa.z - sb.z).norm_sq();
        let rhs = (a.sigma - b.sigma).norm_sq() / (alpha * alpha)
            + 4.0 * d.eval(&(a.z_prev - b.z_prev)) / alpha;
        rows.push(DependenceRow {
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-8,
        });
    }
    Ok(rows)
}

/// Largest observed ratio of `|eps_1 - eps_2|^2 + |z_1 - z_2|^2` at each
/// node to the squared data distance (initial states plus `W^{1,1}` norm of
/// the stress difference up to that node).
pub fn trajectory_dependence_constant(
    p: &MaterialParams,
    d: &DissipationSpec,
    paths: (&StressPath, &StressPath),
    grid: &TimeGrid,
    inits: (&PointState, &PointState),
) -> Result<f64> {
    let ta = run_constitutive(p, d, paths.0, grid, inits.0)?;
    let tb = run_constitutive(p, d, paths.1, grid, inits.1)?;
    let base = (inits.0.eps - inits.1.eps).norm_sq() + (inits.0.z - inits.1.z).norm_sq();
    let mut worst: f64 = 0.0;
    for i in 0..=grid.steps() {
        let (a, b) = (ta.states[i], tb.states[i]);
        let lhs = (a.eps - b.eps).norm_sq() + (a.z - b.z).norm_sq();
        let data = base + paths.0.w11_distance(paths.1, grid, i).powi(2);
        if data > 0.0 {
            worst = worst.max(lhs / data);
        }
    }
    Ok(worst)
}
