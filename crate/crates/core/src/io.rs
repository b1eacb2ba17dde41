//! CSV tables and plain-text field dumps.
//!
//! Numbers are written as `{:.16e}`, 17 significant digits, so every
//! `f64` round-trips exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::asymptotics::{ConvergenceTable, GammaReport};
use crate::bvp::EvolutionRecord;
use crate::constitutive::{PointTrajectory, RateStudy};
use crate::error::{Error, Result};
use crate::fem::{DofVector, FeSpace};

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Header and numeric rows of a CSV file written by this module.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub const TRAJECTORY_HEADER: [&str; 22] = [
    "t",
    "sigma_11",
    "sigma_22",
    "sigma_33",
    "sigma_23",
    "sigma_13",
    "sigma_12",
    "eps_11",
    "eps_22",
    "eps_33",
    "eps_23",
    "eps_13",
    "eps_12",
    "z_1",
    "z_2",
    "z_3",
    "z_4",
    "z_5",
    "energy",
    "dissipation",
    "work",
    "residual",
];

pub fn write_point_trajectory(path: &Path, traj: &PointTrajectory) -> Result<()> {
    let rows = (0..traj.states.len()).map(|i| {
        let l = &traj.ledger[i];
        let mut row = vec![l.t];
        row.extend(traj.stresses[i].0);
        row.extend(traj.states[i].eps.0);
        row.extend(traj.states[i].z.0);
        row.extend([l.energy, l.dissipation, l.work, l.residual]);
        row
    });
    write_table(path, &TRAJECTORY_HEADER, rows)
}

pub fn write_rate_study(path: &Path, study: &RateStudy) -> Result<()> {
    write_table(
        path,
        &["tau", "error"],
        study.rows.iter().map(|r| vec![r.0, r.1]),
    )
}

pub const CONVERGENCE_HEADER: [&str; 8] = [
    "k",
    "rho",
    "nu",
    "tau",
    "h",
    "state_diff",
    "energy_diff",
    "diss_diff",
];

pub fn write_convergence_table(path: &Path, table: &ConvergenceTable) -> Result<()> {
    write_table(
        path,
        &CONVERGENCE_HEADER,
        table.rows.iter().map(|r| {
            vec![
                r.k as f64,
                r.rho,
                r.nu,
                r.tau,
                r.h,
                r.state_diff,
                r.energy_diff,
                r.diss_diff,
            ]
        }),
    )
}

pub const LEDGER_HEADER: [&str; 12] = [
    "t",
    "stored",
    "load_pairing",
    "stored_shifted",
    "shifted_pairing",
    "shift_constant",
    "dissipation",
    "load_work",
    "shifted_work",
    "residual",
    "dual_norm",
    "sweeps",
];

pub fn write_bvp_ledger(path: &Path, record: &EvolutionRecord) -> Result<()> {
    write_table(
        path,
        &LEDGER_HEADER,
        record.ledger.iter().map(|l| {
            vec![
                l.t,
                l.stored,
                l.load_pairing,
                l.stored_shifted,
                l.shifted_pairing,
                l.shift_constant,
                l.dissipation,
                l.load_work,
                l.shifted_work,
                l.residual,
                l.dual_norm,
                l.sweeps as f64,
            ]
        }),
    )
}

pub fn write_gamma_table(path: &Path, report: &GammaReport) -> Result<()> {
    let mut header = vec!["radius".to_string()];
    header.extend(report.rhos.iter().map(|r| format!("rho={}", fmt(*r))));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for (j, r) in report.radii.iter().enumerate() {
        let mut row = vec![fmt(*r)];
        row.extend(report.values.iter().map(|v| fmt(v[j])));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Field dump: `#`-prefixed header, then one line per node
/// (`x y z u1 u2 u3 z1 .. z5 |z|`), then one line per tetrahedron
/// (`tet a b c d`, zero-based node indices).
pub fn write_field_dump(path: &Path, space: &FeSpace, y: &DofVector, time: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mesh = &space.mesh;
    writeln!(w, "# shapemem field dump")?;
    writeln!(w, "# time {}", fmt(time))?;
    writeln!(w, "# nodes {} tets {}", mesh.nodes.len(), mesh.tets.len())?;
    writeln!(w, "# columns x y z u1 u2 u3 z1 z2 z3 z4 z5 znorm")?;
    for (n, x) in mesh.nodes.iter().enumerate() {
        let zn = y.z_node(n);
        let vals: Vec<String> = x
            .iter()
            .chain(&y.u_node(n))
            .chain(&zn.0)
            .chain(std::iter::once(&zn.norm()))
            .map(|v| fmt(*v))
            .collect();
        writeln!(w, "{}", vals.join(" "))?;
    }
    for t in &mesh.tets {
        writeln!(w, "tet {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    w.flush()?;
    Ok(())
}
