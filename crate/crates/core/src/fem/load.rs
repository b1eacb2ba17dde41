use serde::{Deserialize, Serialize};

use super::mesh::{tri_area, Side};
use super::space::FeSpace;
use crate::error::{Error, Result};

/// Scalar piecewise-linear time profile through `(t, value)` breakpoints,
/// constant outside them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeProgram {
    pub breakpoints: Vec<(f64, f64)>,
}

impl TimeProgram {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let p = TimeProgram { breakpoints };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(v: f64) -> Self {
        TimeProgram {
            breakpoints: vec![(0.0, v)],
        }
    }

    /// Zero at `0`, `peak` at `T/2`, zero at `T`.
    pub fn ramp_unload(peak: f64, final_time: f64) -> Self {
        TimeProgram {
            breakpoints: vec![(0.0, 0.0), (0.5 * final_time, peak), (final_time, 0.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.breakpoints;
        if b.is_empty() {
            return Err(Error::InvalidInput(
                "time program needs a breakpoint".into(),
            ));
        }
        if b.iter().any(|(t, v)| !t.is_finite() || !v.is_finite())
            || b.windows(2).any(|w| w[1].0 <= w[0].0)
        {
            return Err(Error::InvalidInput(
                "time program breakpoints must be finite and increasing".into(),
            ));
        }
        Ok(())
    }

    /// Whether the breakpoints span `[0, T]`.
    pub fn covers(&self, final_time: f64) -> bool {
        let b = &self.breakpoints;
        b.len() == 1 || (b[0].0 <= 0.0 && b[b.len() - 1].0 >= final_time)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if t <= b[0].0 {
            return b[0].1;
        }
        let k = b.partition_point(|p| p.0 <= t);
        if k == b.len() {
            return b[k - 1].1;
        }
        let w = (t - b[k - 1].0) / (b[k].0 - b[k - 1].0);
        b[k - 1].1 * (1.0 - w) + b[k].1 * w
    }

    pub fn reparametrize(&self, map: impl Fn(f64) -> f64) -> Self {
        TimeProgram {
            breakpoints: self.breakpoints.iter().map(|&(t, v)| (map(t), v)).collect(),
        }
    }
}

/// Closed-form spatial vector field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum VectorField {
    Zero,
    Constant {
        value: [f64; 3],
    },
    /// `matrix x + offset`.
    Affine {
        matrix: [[f64; 3]; 3],
        offset: [f64; 3],
    },
}

impl VectorField {
    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            VectorField::Zero => [0.0; 3],
            VectorField::Constant { value } => *value,
            VectorField::Affine { matrix, offset } => std::array::from_fn(|i| {
                offset[i] + (0..3).map(|j| matrix[i][j] * x[j]).sum::<f64>()
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyLoad {
    pub field: VectorField,
    pub program: TimeProgram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionLoad {
    pub sides: Vec<Side>,
    pub field: VectorField,
    pub program: TimeProgram,
}

/// `u_Dir(x, t) = program(t) field(x)` on the clamped part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletProgram {
    pub field: VectorField,
    pub program: TimeProgram,
}

impl Default for DirichletProgram {
    fn default() -> Self {
        DirichletProgram {
            field: VectorField::Zero,
            program: TimeProgram::constant(0.0),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadProgram {
    pub body: Vec<BodyLoad>,
    pub traction: Vec<TractionLoad>,
    pub dirichlet: DirichletProgram,
}

impl LoadProgram {
    /// Uniform traction `program(t) value` on the given sides.
    pub fn traction(sides: Vec<Side>, value: [f64; 3], program: TimeProgram) -> Self {
        LoadProgram {
            traction: vec![TractionLoad {
                sides,
                field: VectorField::Constant { value },
                program,
            }],
            ..Default::default()
        }
    }

    pub fn violations(&self, final_time: f64) -> Vec<String> {
        let mut v = Vec::new();
        let programs = self
            .body
            .iter()
            .map(|b| &b.program)
            .chain(self.traction.iter().map(|t| &t.program))
            .chain(std::iter::once(&self.dirichlet.program));
        for (k, p) in programs.enumerate() {
            if let Err(e) = p.validate() {
                v.push(format!("load program {k}: {e}"));
            } else if !p.covers(final_time) {
                v.push(format!(
                    "load program {k}: breakpoints do not cover [0, {final_time}]"
                ));
            }
        }
        v
    }

    pub fn reparametrize(&self, map: impl Fn(f64) -> f64 + Copy) -> Self {
        LoadProgram {
            body: self
                .body
                .iter()
                .map(|b| BodyLoad {
                    field: b.field.clone(),
                    program: b.program.reparametrize(map),
                })
                .collect(),
            traction: self
                .traction
                .iter()
                .map(|t| TractionLoad {
                    sides: t.sides.clone(),
                    field: t.field.clone(),
                    program: t.program.reparametrize(map),
                })
                .collect(),
            dirichlet: DirichletProgram {
                field: self.dirichlet.field.clone(),
                program: self.dirichlet.program.reparametrize(map),
            },
        }
    }
}

const TET_A: f64 = 0.585_410_196_624_968_5;
const TET_B: f64 = 0.138_196_601_125_010_5;

/// Load vector `<l(t), phi_(n,i)>` over the displacement DOFs.
pub fn assemble_load(space: &FeSpace, program: &LoadProgram, t: f64) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; 3 * mesh.nodes.len()];
    for b in &program.body {
        let s = b.program.eval(t);
        if s == 0.0 || b.field == VectorField::Zero {
            continue;
        }
        for (ti, tet) in mesh.tets.iter().enumerate() {
            let p = mesh.tet_points(ti);
            let w = mesh.tet_volume(ti) / 4.0;
            for q in 0..4 {
                let lam: [f64; 4] = std::array::from_fn(|a| if a == q { TET_A } else { TET_B });
                let x = std::array::from_fn(|i| (0..4).map(|a| lam[a] * p[a][i]).sum::<f64>());
                let f = b.field.eval(x);
                for a in 0..4 {
                    for i in 0..3 {
                        out[3 * tet[a] + i] += s * w * lam[a] * f[i];
                    }
                }
            }
        }
    }
    for tr in &program.traction {
        let s = tr.program.eval(t);
        if s == 0.0 || tr.field == VectorField::Zero {
            continue;
        }
        for face in mesh.boundary.iter().filter(|f| tr.sides.contains(&f.side)) {
            let p = face.nodes.map(|n| mesh.nodes[n]);
            let w = tri_area(p) / 3.0;
            // edge-midpoint rule, exact for quadratics
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let x = std::array::from_fn(|i| 0.5 * (p[a][i] + p[b][i]));
                let g = tr.field.eval(x);
                for (c, &n) in face.nodes.iter().enumerate() {
                    let lam = if c == a || c == b { 0.5 } else { 0.0 };
                    for i in 0..3 {
                        out[3 * n + i] += s * w * lam * g[i];
                    }
                }
            }
        }
    }
    out
}

/// Nodal interpolant of `u_Dir(t)` on the constrained nodes, zero elsewhere.
pub fn dirichlet_lift(space: &FeSpace, program: &LoadProgram, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; 3 * space.mesh.nodes.len()];
    let s = program.dirichlet.program.eval(t);
    if s == 0.0 {
        return out;
    }
    for (n, x) in space.mesh.nodes.iter().enumerate() {
        if space.is_dirichlet(n) {
            let v = program.dirichlet.field.eval(*x);
            for i in 0..3 {
                out[3 * n + i] = s * v[i];
            }
        }
    }
    out
}
