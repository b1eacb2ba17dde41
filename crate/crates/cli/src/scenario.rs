//! Scenario files: TOML documents describing one study.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use shapemem_core::asymptotics::{Arrow, LimitSchedule};
use shapemem_core::bvp::BvpProblem;
use shapemem_core::fem::{LoadProgram, Side};
use shapemem_core::{MaterialParams, StressPath, SymTensor3, TimeGrid};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    PointTest,
    ConvTau,
    ConvRho,
    BvpRun,
    BvpConv,
    GammaTable,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::PointTest => "point-test",
            Kind::ConvTau => "conv-tau",
            Kind::ConvRho => "conv-rho",
            Kind::BvpRun => "bvp-run",
            Kind::BvpConv => "bvp-conv",
            Kind::GammaTable => "gamma-table",
        };
        f.write_str(s)
    }
}

/// Time grid: `steps` uniform steps or a step size `tau`, never both.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub final_time: f64,
    pub steps: Option<usize>,
    pub tau: Option<f64>,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec {
            final_time: 1.0,
            steps: None,
            tau: None,
        }
    }
}

impl TimeSpec {
    pub const DEFAULT_STEPS: usize = 32;

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            v.push(format!(
                "time.final_time must be > 0, got {}",
                self.final_time
            ));
        }
        match (self.steps, self.tau) {
            (Some(_), Some(_)) => v.push("time.steps and time.tau are mutually exclusive".into()),
            (Some(0), None) => v.push("time.steps must be >= 1".into()),
            (None, Some(t)) if !(t > 0.0 && t.is_finite()) => {
                v.push(format!("time.tau must be > 0, got {t}"))
            }
            (None, Some(t))
                if self.final_time > 0.0 && TimeGrid::with_step(self.final_time, t).is_err() =>
            {
                v.push(format!(
                    "time.tau = {t} does not divide time.final_time = {}",
                    self.final_time
                ))
            }
            _ => {}
        }
        v
    }

    pub fn grid(&self) -> CliResult<TimeGrid> {
        Ok(match self.tau {
            Some(t) => TimeGrid::with_step(self.final_time, t)?,
            None => TimeGrid::uniform(self.final_time, self.steps.unwrap_or(Self::DEFAULT_STEPS))?,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
            .unwrap_or(self.final_time / self.steps.unwrap_or(Self::DEFAULT_STEPS) as f64)
    }
}

/// Stress history, either proportional (`direction` times piecewise-linear
/// `scales`) or given by full tensor `breakpoints`. Tensors are listed as
/// `[s11, s22, s33, s23, s13, s12]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressSpec {
    pub direction: Option<[f64; 6]>,
    pub scales: Option<Vec<(f64, f64)>>,
    pub breakpoints: Option<Vec<(f64, [f64; 6])>>,
}

impl StressSpec {
    fn violations(&self, final_time: f64) -> Vec<String> {
        let mut v = Vec::new();
        let times: Vec<f64> = match (&self.direction, &self.scales, &self.breakpoints) {
            (Some(_), Some(s), None) => s.iter().map(|p| p.0).collect(),
            (None, None, Some(b)) => b.iter().map(|p| p.0).collect(),
            _ => {
                v.push("stress needs either direction with scales, or breakpoints".into());
                return v;
            }
        };
        if times.is_empty() {
            v.push("stress history has no breakpoints".into());
        } else if let Err(e) = self.path() {
            v.push(format!("stress: {e}"));
        } else if times[0] > 0.0 || *times.last().unwrap() < final_time {
            v.push(format!("stress breakpoints must cover [0, {final_time}]"));
        }
        v
    }

    pub fn path(&self) -> CliResult<StressPath> {
        let path = match (&self.direction, &self.scales, &self.breakpoints) {
            (Some(d), Some(s), None) => StressPath::proportional(SymTensor3(*d), s)?,
            (None, None, Some(b)) => {
                StressPath::new(b.iter().map(|&(t, s)| (t, SymTensor3(s))).collect())?
            }
            _ => {
                return Err(CliError::Validation(vec![
                    "stress needs either direction with scales, or breakpoints".into(),
                ]))
            }
        };
        Ok(path)
    }
}

/// Box domain, clamped sides, loads and mesh resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub extents: [f64; 3],
    pub dirichlet_sides: Vec<Side>,
    pub divisions: usize,
    pub load: LoadProgram,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            extents: [1.0; 3],
            dirichlet_sides: vec![Side::XMin],
            divisions: 4,
            load: LoadProgram::default(),
        }
    }
}

impl ProblemSpec {
    fn violations(&self, final_time: f64) -> Vec<String> {
        let mut v = Vec::new();
        if self.extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            v.push("problem.extents must all be > 0".into());
        }
        if self.dirichlet_sides.is_empty() {
            v.push("problem.dirichlet_sides must name at least one side".into());
        }
        if self.divisions == 0 {
            v.push("problem.divisions must be >= 1".into());
        }
        v.extend(
            self.load
                .violations(final_time)
                .into_iter()
                .map(|e| format!("problem.{e}")),
        );
        v
    }
}

/// Study-specific settings; each kind reads the fields it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySpec {
    /// Step sizes of a temporal study.
    pub taus: Vec<f64>,
    /// Reference step of a temporal study; `min(taus) / 8` when absent.
    pub reference_tau: Option<f64>,
    /// Stability probes per node.
    pub probes: Option<usize>,
    /// Regularization parameters of a gamma table.
    pub rhos: Vec<f64>,
    /// Radii of a gamma table; 50 points on `[0, 1.5 c3]` when empty.
    pub radii: Vec<f64>,
    /// Write a field dump per time node (BVP kinds).
    pub field_dumps: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub material: MaterialParams,
    #[serde(default)]
    pub time: TimeSpec,
    pub stress: Option<StressSpec>,
    pub problem: Option<ProblemSpec>,
    pub schedule: Option<LimitSchedule>,
    #[serde(default)]
    pub study: StudySpec,
}

/// Parses a scenario; unknown keys and malformed values are reported with
/// their location.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn is_point_arrow(a: Arrow) -> bool {
    matches!(
        a,
        Arrow::PointTau | Arrow::PointRho | Arrow::PointJoint | Arrow::PointRhoFine
    )
}

impl Scenario {
    /// The kind this scenario runs as when invoked through `requested`.
    pub fn resolve_kind(&self, requested: Option<Kind>) -> CliResult<Kind> {
        match (self.kind, requested) {
            (Some(a), Some(b)) if a != b => Err(CliError::Validation(vec![format!(
                "scenario kind is {a} but the {b} command was invoked"
            )])),
            (Some(k), _) | (None, Some(k)) => Ok(k),
            (None, None) => Err(CliError::Validation(vec!["scenario has no kind".into()])),
        }
    }

    /// Every violated constraint for running as `kind`.
    pub fn violations(&self, kind: Kind) -> Vec<String> {
        let mut v: Vec<String> = self
            .material
            .violations()
            .into_iter()
            .map(|e| format!("material.{e}"))
            .collect();
        v.extend(self.time.violations());
        let t = self.time.final_time;
        let needs_stress = matches!(kind, Kind::PointTest | Kind::ConvTau | Kind::ConvRho);
        let needs_problem = matches!(kind, Kind::BvpRun | Kind::BvpConv);
        match (&self.stress, needs_stress) {
            (Some(s), true) => v.extend(s.violations(t)),
            (None, true) => v.push(format!("{kind} needs a [stress] table")),
            (Some(_), false) => v.push(format!("{kind} does not use a [stress] table")),
            (None, false) => {}
        }
        match (&self.problem, needs_problem) {
            (Some(p), true) => v.extend(p.violations(t)),
            (None, true) => v.push(format!("{kind} needs a [problem] table")),
            (Some(_), false) => v.push(format!("{kind} does not use a [problem] table")),
            (None, false) => {}
        }
        let needs_schedule = matches!(kind, Kind::ConvRho | Kind::BvpConv);
        match (&self.schedule, needs_schedule) {
            (Some(s), true) => {
                v.extend(s.violations().into_iter().map(|e| format!("schedule: {e}")));
                if kind == Kind::ConvRho && !is_point_arrow(s.arrow) {
                    v.push(format!(
                        "{kind} needs a constitutive arrow, got {:?}",
                        s.arrow
                    ));
                }
                if kind == Kind::BvpConv && is_point_arrow(s.arrow) {
                    v.push(format!(
                        "{kind} needs a minimum-problem or evolution arrow, got {:?}",
                        s.arrow
                    ));
                }
            }
            (None, true) => v.push(format!("{kind} needs a [schedule] table")),
            (Some(_), false) => v.push(format!("{kind} does not use a [schedule] table")),
            (None, false) => {}
        }
        let st = &self.study;
        match kind {
            Kind::ConvTau => {
                if !(self.material.rho > 0.0) {
                    v.push("conv-tau needs material.rho > 0".into());
                }
                if st.taus.is_empty() {
                    v.push("conv-tau needs study.taus".into());
                }
                if st
                    .taus
                    .iter()
                    .any(|&x| !(x > 0.0) || (t > 0.0 && TimeGrid::with_step(t, x).is_err()))
                {
                    v.push("study.taus must be > 0 and divide time.final_time".into());
                }
                if let (Some(r), false) = (st.reference_tau, st.taus.is_empty()) {
                    let tmin = st.taus.iter().cloned().fold(f64::INFINITY, f64::min);
                    if !(r > 0.0) || r > tmin / 8.0 * (1.0 + 1e-12) {
                        v.push(format!(
                            "study.reference_tau must be in (0, min(taus)/8], got {r}"
                        ));
                    }
                }
            }
            Kind::GammaTable => {
                if st.rhos.is_empty() {
                    v.push("gamma-table needs study.rhos".into());
                }
                if st.rhos.iter().any(|&r| !(r > 0.0)) || st.rhos.windows(2).any(|w| w[1] >= w[0]) {
                    v.push("study.rhos must be > 0 and strictly decreasing".into());
                }
                if st.radii.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
                    v.push("study.radii must be >= 0".into());
                }
            }
            _ => {}
        }
        if st.probes == Some(0) && kind == Kind::PointTest {
            v.push("study.probes must be >= 1 for point-test".into());
        }
        v
    }

    pub fn validate(&self, kind: Kind) -> CliResult<()> {
        let v = self.violations(kind);
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v))
        }
    }

    /// The boundary-value problem of a BVP scenario.
    pub fn bvp_problem(&self) -> Option<BvpProblem> {
        self.problem.as_ref().map(|p| BvpProblem {
            extents: p.extents,
            dirichlet_sides: p.dirichlet_sides.clone(),
            load: p.load.clone(),
            final_time: self.time.final_time,
            params: self.material,
        })
    }
}
