//! Dispatch of validated scenarios to the core studies and artifact output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use shapemem_core::asymptotics::{
    gamma_check_f, limit_constitutive, limit_evolution_runs, limit_minproblem,
    stable_initial_state, Arrow,
};
use shapemem_core::bvp::{spacetime_run, verify_energetic, SpacetimeRun};
use shapemem_core::constitutive::{run_constitutive, temporal_error_study, verify_stability};
use shapemem_core::io;

use crate::error::{CliError, CliResult};
use crate::scenario::{Kind, Scenario};

/// Probes per node when a scenario does not set `study.probes`.
pub const DEFAULT_POINT_PROBES: usize = 200;
pub const DEFAULT_BVP_PROBES: usize = 8;

/// Seed of the `stream`-th independent consumer of the scenario seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

#[derive(Debug)]
pub struct RunSummary {
    pub kind: Kind,
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    /// Main pass/fail verdict of the study's own checks.
    pub passed: bool,
}

struct Artifacts<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Artifacts<'_> {
    fn path(&mut self, name: &str) -> CliResult<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)
                .map_err(CliError::io(format!("creating {}", parent.display())))?;
        }
        self.written.push(name.to_string());
        Ok(p)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let p = self.path(name)?;
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&p, text).map_err(CliError::io(format!("writing {}", p.display())))
    }
}

/// Runs a validated scenario as `kind`, writing into `out_dir`.
pub fn run_scenario(
    scenario: &Scenario,
    kind: Kind,
    out_dir: &Path,
    threads: Option<usize>,
) -> CliResult<RunSummary> {
    scenario.validate(kind)?;
    fs::create_dir_all(out_dir).map_err(CliError::io(format!("creating {}", out_dir.display())))?;
    let start = Instant::now();
    let mut art = Artifacts {
        dir: out_dir,
        written: Vec::new(),
    };
    let passed = match kind {
        Kind::PointTest => point_test(scenario, &mut art)?,
        Kind::ConvTau => conv_tau(scenario, &mut art)?,
        Kind::ConvRho => conv_rho(scenario, &mut art)?,
        Kind::BvpRun => bvp_run(scenario, &mut art)?,
        Kind::BvpConv => bvp_conv(scenario, &mut art)?,
        Kind::GammaTable => gamma_table(scenario, &mut art)?,
    };
    let manifest = json!({
        "kind": kind.to_string(),
        "seed": scenario.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "scenario": scenario,
        "passed": passed,
        "outputs": art.written,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    let outputs = art.written.clone();
    art.json("manifest.json", &manifest)?;
    Ok(RunSummary {
        kind,
        out_dir: out_dir.to_path_buf(),
        outputs,
        passed,
    })
}

fn point_test(s: &Scenario, art: &mut Artifacts) -> CliResult<bool> {
    let p = s.material;
    let d = p.dissipation();
    let path = s.stress.as_ref().expect("validated").path()?;
    let grid = s.time.grid()?;
    let init = stable_initial_state(&p, &d, &path.eval(0.0))?;
    let traj = run_constitutive(&p, &d, &path, &grid, &init)?;
    io::write_point_trajectory(&art.path("trajectory.csv")?, &traj)?;
    let probes = s.study.probes.unwrap_or(DEFAULT_POINT_PROBES);
    let reports: Vec<_> = traj
        .states
        .iter()
        .zip(&traj.stresses)
        .enumerate()
        .map(|(i, (st, sig))| {
            verify_stability(&p, &d, sig, st, probes, 1e-8, derive_seed(s.seed, i as u64))
        })
        .collect();
    let max_residual = traj
        .ledger
        .iter()
        .map(|l| l.residual)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = traj
        .ledger
        .iter()
        .map(|l| l.residual.abs())
        .fold(0.0, f64::max);
    let last = traj.states.last().expect("grid has nodes");
    let stable = reports.iter().all(|r| r.passed);
    let passed = stable && max_residual <= 1e-10;
    art.json(
        "report.json",
        &json!({
            "steps": grid.steps(),
            "total_dissipation": traj.total_dissipation(),
            "final_z_norm": last.z.norm(),
            "final_eps_norm": last.eps.norm(),
            "max_one_sided_residual": max_residual,
            "two_sided_gap": gap,
            "stability_probes": probes,
            "worst_stability_violation": reports.iter().map(|r| r.worst_violation).fold(f64::NEG_INFINITY, f64::max),
            "all_states_stable": stable,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn conv_tau(s: &Scenario, art: &mut Artifacts) -> CliResult<bool> {
    let p = s.material;
    let path = s.stress.as_ref().expect("validated").path()?;
    let taus = &s.study.taus;
    let tmin = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference = s.study.reference_tau.unwrap_or(tmin / 8.0);
    let study = temporal_error_study(
        &p,
        &p.dissipation(),
        &path,
        s.time.final_time,
        taus,
        reference,
    )?;
    io::write_rate_study(&art.path("rate.csv")?, &study)?;
    let passed = study.degenerate || study.order.is_some_and(|o| o >= 0.45);
    art.json(
        "report.json",
        &json!({
            "order": study.order,
            "degenerate": study.degenerate,
            "reference_tau": study.reference_tau,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn conv_rho(s: &Scenario, art: &mut Artifacts) -> CliResult<bool> {
    let p = s.material;
    let path = s.stress.as_ref().expect("validated").path()?;
    let schedule = s.schedule.as_ref().expect("validated");
    let table = limit_constitutive(&p, &p.dissipation(), &path, s.time.final_time, schedule)?;
    io::write_convergence_table(&art.path("convergence.csv")?, &table)?;
    table_report(art, &table, true)
}

fn table_report(
    art: &mut Artifacts,
    table: &shapemem_core::asymptotics::ConvergenceTable,
    extra_ok: bool,
) -> CliResult<bool> {
    let passed = table.inter_level_decreasing() && extra_ok;
    art.json(
        "report.json",
        &json!({
            "arrow": table.arrow,
            "reference": table.reference,
            "inter_level": table.inter_level,
            "decreasing_to_reference": table.decreasing(),
            "inter_level_decreasing": table.inter_level_decreasing(),
            "dissipation_decreasing": table.diss_decreasing(),
            "energy_state_ratio": table.energy_state_ratio,
            "passed": passed,
        }),
    )?;
    Ok(passed)
}

fn write_run(art: &mut Artifacts, prefix: &str, run: &SpacetimeRun, dumps: bool) -> CliResult<()> {
    io::write_bvp_ledger(&art.path(&format!("{prefix}ledger.csv"))?, &run.record)?;
    if dumps {
        for (i, (y, &t)) in run
            .record
            .states
            .iter()
            .zip(run.record.grid.nodes())
            .enumerate()
        {
            io::write_field_dump(
                &art.path(&format!("{prefix}fields/node_{i:04}.txt"))?,
                &run.model.space,
                y,
                t,
            )?;
        }
    }
    Ok(())
}

fn bound_json(run: &SpacetimeRun) -> Value {
    json!({
        "rho": run.rho,
        "nu": run.nu,
        "tau": run.tau,
        "divisions": run.divisions,
        "h": run.h,
        "total_dissipation": run.record.total_dissipation(),
        "max_one_sided_residual": run.record.max_residual(),
        "two_sided_gap": run.record.balance_gap(),
        "bound": run.record.bound,
        "flags": run.flags,
    })
}

fn bvp_run(s: &Scenario, art: &mut Artifacts) -> CliResult<bool> {
    let problem = s.bvp_problem().expect("validated");
    let setup = s.problem.as_ref().expect("validated");
    let run = spacetime_run(
        &problem,
        s.material.rho,
        s.material.nu,
        s.time.tau(),
        setup.divisions,
    )?;
    write_run(art, "", &run, s.study.field_dumps.unwrap_or(true))?;
    let probes = s.study.probes.unwrap_or(DEFAULT_BVP_PROBES);
    let energetic = verify_energetic(&run.model, &run.record, probes, derive_seed(s.seed, 0))?;
    let passed = energetic.passed && run.record.bound.holds;
    let mut report = bound_json(&run);
    report["energetic"] = serde_json::to_value(&energetic)?;
    report["passed"] = json!(passed);
    art.json("report.json", &report)?;
    Ok(passed)
}

fn bvp_conv(s: &Scenario, art: &mut Artifacts) -> CliResult<bool> {
    let problem = s.bvp_problem().expect("validated");
    let schedule = s.schedule.as_ref().expect("validated");
    if matches!(
        schedule.arrow,
        Arrow::MinH | Arrow::MinRho | Arrow::MinJoint
    ) {
        let table = limit_minproblem(&problem, schedule)?;
        io::write_convergence_table(&art.path("convergence.csv")?, &table)?;
        return table_report(art, &table, true);
    }
    let (table, runs) = limit_evolution_runs(&problem, schedule)?;
    io::write_convergence_table(&art.path("convergence.csv")?, &table)?;
    let dumps = s.study.field_dumps.unwrap_or(false);
    for (k, run) in runs.iter().enumerate() {
        write_run(art, &format!("members/{k:02}/"), run, dumps)?;
        art.json(&format!("members/{k:02}/report.json"), &bound_json(run))?;
    }
    table_report(art, &table, runs.iter().all(|r| r.record.bound.holds))
}

fn gamma_table(s: &Scenario, art: &mut Artifacts) -> CliResult<bool> {
    let p = s.material;
    let radii: Vec<f64> = if s.study.radii.is_empty() {
        (0..50).map(|j| 1.5 * p.c3 * j as f64 / 49.0).collect()
    } else {
        s.study.radii.clone()
    };
    let report = gamma_check_f(&p, &s.study.rhos, &radii)?;
    io::write_gamma_table(&art.path("gamma.csv")?, &report)?;
    art.json(
        "report.json",
        &json!({
            "condition": report.condition,
            "monotone": report.monotone,
            "min_increment": report.min_increment,
            "final_gap_inside": report.final_gap_inside,
            "final_min_outside": report.final_min_outside,
            "zero_at_origin": report.zero_at_origin,
            "passed": report.monotone && report.zero_at_origin,
        }),
    )?;
    Ok(report.monotone && report.zero_at_origin)
}
