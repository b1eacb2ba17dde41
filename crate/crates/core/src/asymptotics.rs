//! Parameter-limit studies: the monotone family of regularized potentials
//! and convergence tables along schedules in `(rho, nu, tau, h)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvp::{spacetime_run, state_distance, BvpProblem, SpacetimeRun};
use crate::constitutive::{
    incremental_step, run_constitutive, PointState, PointTrajectory, StressPath, TimeGrid,
};
use crate::dissipation::DissipationSpec;
use crate::energy::{f0, f_rho, ExtReal, MaterialParams};
use crate::error::{Error, Result};
use crate::tensor::{DevTensor3, SymTensor3};

/// Which refinement path of the parameter diagrams a schedule follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arrow {
    /// Constitutive: `tau -> 0` at fixed `rho > 0`.
    PointTau,
    /// Constitutive: `rho -> 0` at fixed `tau`.
    PointRho,
    /// Constitutive: `(rho, tau) -> 0` jointly.
    PointJoint,
    /// Constitutive: `rho -> 0` against a fine-step reference.
    PointRhoFine,
    /// Minimum problem: `h -> 0`.
    MinH,
    /// Minimum problem: `rho -> 0`.
    MinRho,
    /// Minimum problem: `(rho, h) -> 0`.
    MinJoint,
    /// Evolution: `h -> 0` at fixed `(rho, tau)`.
    EvoH,
    /// Evolution: `tau -> 0`.
    EvoTau,
    /// Evolution: `(tau, h) -> 0`.
    EvoTauH,
    /// Evolution: `rho -> 0`.
    EvoRho,
    /// Evolution: `(rho, tau, h) -> 0`.
    EvoJoint,
    /// Evolution: `(rho, h) -> 0` at fine `tau`.
    EvoRhoH,
}

/// One discretization in a schedule; `divisions` is ignored for the
/// constitutive studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub rho: f64,
    pub nu: f64,
    pub tau: f64,
    pub divisions: usize,
}

/// Monotone parameter sequences; sequences of length one are held constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSchedule {
    pub arrow: Arrow,
    pub rho: Vec<f64>,
    #[serde(default = "zero_vec")]
    pub nu: Vec<f64>,
    pub tau: Vec<f64>,
    #[serde(default = "one_vec")]
    pub divisions: Vec<usize>,
    /// Reference discretization; the last member when absent.
    #[serde(default)]
    pub target: Option<Member>,
}

fn zero_vec() -> Vec<f64> {
    vec![0.0]
}

fn one_vec() -> Vec<usize> {
    vec![1]
}

impl LimitSchedule {
    pub fn len(&self) -> usize {
        [
            self.rho.len(),
            self.nu.len(),
            self.tau.len(),
            self.divisions.len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.len();
        let lens = [
            ("rho", self.rho.len()),
            ("nu", self.nu.len()),
            ("tau", self.tau.len()),
            ("divisions", self.divisions.len()),
        ];
        for (name, l) in lens {
            if l == 0 {
                v.push(format!("schedule {name} is empty"));
            } else if l != 1 && l != n {
                v.push(format!("schedule {name} has length {l}, expected 1 or {n}"));
            }
        }
        let nonincreasing = |name: &str, s: &[f64], v: &mut Vec<String>| {
            if s.windows(2).any(|w| w[1] > w[0]) {
                v.push(format!("schedule {name} must be non-increasing"));
            }
        };
        nonincreasing("rho", &self.rho, &mut v);
        nonincreasing("nu", &self.nu, &mut v);
        nonincreasing("tau", &self.tau, &mut v);
        if self.divisions.windows(2).any(|w| w[1] < w[0]) {
            v.push("schedule divisions must be non-decreasing".into());
        }
        if self
            .rho
            .iter()
            .chain(&self.nu)
            .any(|&x| !(x >= 0.0 && x.is_finite()))
        {
            v.push("schedule rho and nu must be non-negative".into());
        }
        if self.tau.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            v.push("schedule tau must be positive".into());
        }
        if self.divisions.contains(&0) {
            v.push("schedule divisions must be positive".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(v.join("; ")))
        }
    }

    pub fn members(&self) -> Vec<Member> {
        let pick = |s: &[f64], k: usize| if s.len() == 1 { s[0] } else { s[k] };
        (0..self.len())
            .map(|k| Member {
                rho: pick(&self.rho, k),
                nu: pick(&self.nu, k),
                tau: pick(&self.tau, k),
                divisions: if self.divisions.len() == 1 {
                    self.divisions[0]
                } else {
                    self.divisions[k]
                },
            })
            .collect()
    }

    pub fn reference(&self) -> Member {
        self.target
            .unwrap_or_else(|| *self.members().last().unwrap())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: usize,
    pub rho: f64,
    pub nu: f64,
    pub tau: f64,
    pub h: f64,
    pub state_diff: f64,
    pub energy_diff: f64,
    pub diss_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub arrow: Arrow,
    pub reference: Member,
    /// Differences of each member to the reference.
    pub rows: Vec<ConvergenceRow>,
    /// State differences between consecutive members.
    pub inter_level: Vec<f64>,
    /// Largest `|energy_diff| / state_diff` over rows with a nonzero state
    /// difference.
    pub energy_state_ratio: f64,
}

impl ConvergenceTable {
    /// Differences to the reference are non-increasing along the schedule.
    pub fn decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].state_diff <= w[0].state_diff * (1.0 + 1e-12) + 1e-14)
    }

    pub fn inter_level_decreasing(&self) -> bool {
        self.inter_level
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-14)
    }

    pub fn diss_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].diss_diff <= w[0].diss_diff * (1.0 + 1e-12) + 1e-12)
    }

    fn finish(
        arrow: Arrow,
        reference: Member,
        rows: Vec<ConvergenceRow>,
        inter_level: Vec<f64>,
    ) -> Self {
        let energy_state_ratio = rows
            .iter()
            .filter(|r| r.state_diff > 0.0)
            .map(|r| r.energy_diff / r.state_diff)
            .fold(0.0, f64::max);
        ConvergenceTable {
            arrow,
            reference,
            rows,
            inter_level,
            energy_state_ratio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    /// The sufficient condition verified.
    pub condition: String,
    pub rhos: Vec<f64>,
    pub radii: Vec<f64>,
    /// `values[k][j] = F_{rho_k}(radii[j] e)`.
    pub values: Vec<Vec<f64>>,
    /// Smallest `F_{rho_{k+1}} - F_{rho_k}` over the grid.
    pub min_increment: f64,
    pub monotone: bool,
    /// Largest `F0 - F_{rho_last}` where `F0` is finite.
    pub final_gap_inside: f64,
    /// Smallest `F_{rho_last}` where `F0` is infinite.
    pub final_min_outside: f64,
    pub zero_at_origin: bool,
}

/// Pointwise checks of the regularized potentials along a decreasing
/// `rho` sequence, on points `r e` for a fixed unit deviator `e`.
pub fn gamma_check_f(p: &MaterialParams, rhos: &[f64], radii: &[f64]) -> Result<GammaReport> {
    if rhos.is_empty() || rhos.windows(2).any(|w| w[1] >= w[0]) || rhos.iter().any(|&r| !(r > 0.0))
    {
        return Err(Error::InvalidInput(
            "rho sequence must be positive and strictly decreasing".into(),
        ));
    }
    let e = DevTensor3([0.6, 0.0, 0.0, 0.8, 0.0]);
    let mut values = Vec::new();
    for &rho in rhos {
        let q = p.with_rho(rho);
        values.push(
            radii
                .iter()
                .map(|&r| f_rho(&q, &(e * r)))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut min_increment = f64::INFINITY;
    for w in values.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            min_increment = min_increment.min(b - a);
        }
    }
    let last = values.last().unwrap();
    let (mut gap, mut outside) = (0.0f64, f64::INFINITY);
    for (&r, &v) in radii.iter().zip(last) {
        match f0(p, &(e * r)) {
            ExtReal::Finite(x) => gap = gap.max(x - v),
            ExtReal::Infinite => outside = outside.min(v),
        }
    }
    let zero_at_origin = values
        .iter()
        .all(|row| row.iter().zip(radii).all(|(&v, &r)| r != 0.0 || v == 0.0));
    Ok(GammaReport {
        condition: "pointwise monotone non-decreasing convergence of convex functions".into(),
        rhos: rhos.to_vec(),
        radii: radii.to_vec(),
        monotone: rhos.len() < 2 || min_increment >= 0.0,
        min_increment: if rhos.len() < 2 { 0.0 } else { min_increment },
        values,
        final_gap_inside: gap,
        final_min_outside: outside,
        zero_at_origin,
    })
}

/// Stable state at the initial stress, reached from zero inelastic strain.
pub fn stable_initial_state(
    p: &MaterialParams,
    d: &DissipationSpec,
    sigma0: &SymTensor3,
) -> Result<PointState> {
    let z = incremental_step(p, d, sigma0, &DevTensor3::zero())?.z;
    Ok(PointState::relaxed(p, sigma0, z))
}

fn point_run(
    p: &MaterialParams,
    d: &DissipationSpec,
    path: &StressPath,
    final_time: f64,
    m: &Member,
) -> Result<PointTrajectory> {
    let q = p.with_rho(m.rho);
    let init = stable_initial_state(&q, d, &path.eval(0.0))?;
    run_constitutive(&q, d, path, &TimeGrid::with_step(final_time, m.tau)?, &init)
}

fn point_compare(a: &PointTrajectory, b: &PointTrajectory) -> (f64, f64, f64) {
    let fine = if a.grid.steps() >= b.grid.steps() {
        &a.grid
    } else {
        &b.grid
    };
    let (mut ds, mut de) = (0.0f64, 0.0f64);
    for &t in fine.nodes() {
        ds = ds.max(a.state_at(t).distance(&b.state_at(t)));
        de = de.max((a.ledger_at(t).energy - b.ledger_at(t).energy).abs());
    }
    (
        ds,
        de,
        (a.total_dissipation() - b.total_dissipation()).abs(),
    )
}

/// Constitutive trajectories along the schedule against its reference.
pub fn limit_constitutive(
    p: &MaterialParams,
    d: &DissipationSpec,
    path: &StressPath,
    final_time: f64,
    schedule: &LimitSchedule,
) -> Result<ConvergenceTable> {
    schedule.validate()?;
    let members = schedule.members();
    let reference = schedule.reference();
    let runs: Vec<PointTrajectory> = members
        .par_iter()
        .map(|m| point_run(p, d, path, final_time, m))
        .collect::<Result<_>>()?;
    let refrun = point_run(p, d, path, final_time, &reference)?;
    let rows = members
        .iter()
        .zip(&runs)
        .enumerate()
        .map(|(k, (m, r))| {
            let (s, e, di) = point_compare(r, &refrun);
            ConvergenceRow {
                k,
                rho: m.rho,
                nu: m.nu,
                tau: m.tau,
                h: 0.0,
                state_diff: s,
                energy_diff: e,
                diss_diff: di,
            }
        })
        .collect();
    let inter = runs
        .windows(2)
        .map(|w| point_compare(&w[0], &w[1]).0)
        .collect();
    Ok(ConvergenceTable::finish(
        schedule.arrow,
        reference,
        rows,
        inter,
    ))
}

fn bvp_compare(a: &SpacetimeRun, b: &SpacetimeRun) -> Result<(f64, f64, f64)> {
    let fine = if a.record.grid.steps() >= b.record.grid.steps() {
        &a.record.grid
    } else {
        &b.record.grid
    };
    let (mut ds, mut de) = (0.0f64, 0.0f64);
    for &t in fine.nodes() {
        let (ia, ib) = (a.record.grid.index_at(t), b.record.grid.index_at(t));
        ds = ds.max(state_distance(
            (&a.model.space, &a.record.states[ia]),
            (&b.model.space, &b.record.states[ib]),
        )?);
        de = de.max((a.record.ledger[ia].stored - b.record.ledger[ib].stored).abs());
    }
    Ok((
        ds,
        de,
        (a.record.total_dissipation() - b.record.total_dissipation()).abs(),
    ))
}

fn bvp_table(
    schedule: &LimitSchedule,
    runs: &[SpacetimeRun],
    refrun: &SpacetimeRun,
) -> Result<ConvergenceTable> {
    let mut rows = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        let (s, e, d) = bvp_compare(r, refrun)?;
        rows.push(ConvergenceRow {
            k,
            rho: r.rho,
            nu: r.nu,
            tau: r.tau,
            h: r.h,
            state_diff: s,
            energy_diff: e,
            diss_diff: d,
        });
    }
    let inter = runs
        .windows(2)
        .map(|w| bvp_compare(&w[0], &w[1]).map(|x| x.0))
        .collect::<Result<_>>()?;
    Ok(ConvergenceTable::finish(
        schedule.arrow,
        schedule.reference(),
        rows,
        inter,
    ))
}

fn run_member(problem: &BvpProblem, m: &Member) -> Result<SpacetimeRun> {
    spacetime_run(problem, m.rho, m.nu, m.tau, m.divisions)
}

/// Single incremental problem at `problem.final_time / 2` along the
/// schedule; `tau` is ignored.
pub fn limit_minproblem(
    problem: &BvpProblem,
    schedule: &LimitSchedule,
) -> Result<ConvergenceTable> {
    schedule.validate()?;
    let half = |m: &Member| {
        let mut p = problem.clone();
        p.final_time = 0.5 * problem.final_time;
        run_member(
            &p,
            &Member {
                tau: p.final_time,
                ..*m
            },
        )
    };
    let runs: Vec<SpacetimeRun> = schedule
        .members()
        .par_iter()
        .map(half)
        .collect::<Result<_>>()?;
    let refrun = half(&schedule.reference())?;
    bvp_table(schedule, &runs, &refrun)
}

/// Space-time discrete evolutions along the schedule.
pub fn limit_evolution(problem: &BvpProblem, schedule: &LimitSchedule) -> Result<ConvergenceTable> {
    Ok(limit_evolution_runs(problem, schedule)?.0)
}

/// As [`limit_evolution`], also returning the member runs.
pub fn limit_evolution_runs(
    problem: &BvpProblem,
    schedule: &LimitSchedule,
) -> Result<(ConvergenceTable, Vec<SpacetimeRun>)> {
    schedule.validate()?;
    let members = schedule.members();
    let runs: Vec<SpacetimeRun> = members
        .par_iter()
        .map(|m| run_member(problem, m))
        .collect::<Result<_>>()?;
    let reference = schedule.reference();
    let refrun = match members.iter().position(|m| *m == reference) {
        Some(k) => runs[k].clone(),
        None => run_member(problem, &reference)?,
    };
    Ok((bvp_table(schedule, &runs, &refrun)?, runs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direction() -> SymTensor3 {
        SymTensor3::diag(2.0, -1.0, -1.0) * (1.0 / 6f64.sqrt())
    }

    #[test]
    fn schedule_validation() {
        let s = LimitSchedule {
            arrow: Arrow::PointRho,
            rho: vec![0.1, 0.2],
            nu: vec![0.0],
            tau: vec![0.1, 0.1, 0.1],
            divisions: vec![1],
            target: None,
        };
        assert_eq!(s.violations().len(), 2);
    }

    #[test]
    fn gamma_family_at_origin_and_outside() {
        let p = MaterialParams::default();
        let rhos: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
        let r = gamma_check_f(&p, &rhos, &[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert!(r.monotone);
        assert!(r.zero_at_origin);
        assert!(r.final_min_outside > 1e6);
        assert!(r.final_gap_inside <= 1e-7);
    }

    #[test]
    fn constant_schedule_gives_zero_differences() {
        let p = MaterialParams::default();
        let path = StressPath::ramp_unload(direction(), 3.0, 1.0).unwrap();
        let s = LimitSchedule {
            arrow: Arrow::PointTau,
            rho: vec![0.1],
            nu: vec![0.0],
            tau: vec![0.125, 0.125, 0.125],
            divisions: vec![1],
            target: None,
        };
        let t = limit_constitutive(&p, &p.dissipation(), &path, 1.0, &s).unwrap();
        assert!(t
            .rows
            .iter()
            .all(|r| r.state_diff == 0.0 && r.energy_diff == 0.0 && r.diss_diff == 0.0));
    }
}
