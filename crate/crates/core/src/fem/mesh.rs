use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Side {
    pub const ALL: [Side; 6] = [
        Side::XMin,
        Side::XMax,
        Side::YMin,
        Side::YMax,
        Side::ZMin,
        Side::ZMax,
    ];

    pub fn axis(self) -> usize {
        match self {
            Side::XMin | Side::XMax => 0,
            Side::YMin | Side::YMax => 1,
            Side::ZMin | Side::ZMax => 2,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Side::XMax | Side::YMax | Side::ZMax)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFace {
    pub nodes: [usize; 3],
    pub side: Side,
}

/// Structured tetrahedral mesh of `[0, Lx] x [0, Ly] x [0, Lz]`.
///
/// Every cube is split into the six tetrahedra along its main diagonal with
/// the same orientation everywhere, so halving the spacing yields a nested
/// mesh.
#[derive(Clone, Debug)]
pub struct BoxMesh {
    pub extents: [f64; 3],
    pub divisions: [usize; 3],
    pub nodes: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub boundary: Vec<BoundaryFace>,
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl BoxMesh {
    pub fn new(extents: [f64; 3], divisions: [usize; 3]) -> Result<Self> {
        if extents.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "box extents must be positive, got {extents:?}"
            )));
        }
        if divisions.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "divisions must be positive, got {divisions:?}"
            )));
        }
        let [nx, ny, nz] = divisions;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    nodes.push([
                        extents[0] * i as f64 / nx as f64,
                        extents[1] * j as f64 / ny as f64,
                        extents[2] * k as f64 / nz as f64,
                    ]);
                }
            }
        }
        let mut mesh = BoxMesh {
            extents,
            divisions,
            nodes,
            tets: Vec::new(),
            boundary: Vec::new(),
        };
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    for perm in PERMUTATIONS {
                        mesh.tets.push(mesh.kuhn_tet([i, j, k], perm));
                    }
                }
            }
        }
        mesh.boundary = mesh.find_boundary();
        Ok(mesh)
    }

    /// Cube mesh `[0,1]^3` with `n` divisions per axis.
    pub fn unit_cube(n: usize) -> Result<Self> {
        BoxMesh::new([1.0; 3], [n; 3])
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        let [nx, ny, _] = self.divisions;
        ijk[0] + (nx + 1) * (ijk[1] + (ny + 1) * ijk[2])
    }

    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        let [nx, ny, _] = self.divisions;
        [
            n % (nx + 1),
            (n / (nx + 1)) % (ny + 1),
            n / ((nx + 1) * (ny + 1)),
        ]
    }

    /// Simplex `{x_p0 >= x_p1 >= x_p2}` of the cube at `corner`.
    pub fn kuhn_tet(&self, corner: [usize; 3], perm: [usize; 3]) -> [usize; 4] {
        let mut v = corner;
        let mut tet = [self.node_index(v); 4];
        for (slot, &axis) in perm.iter().enumerate() {
            v[axis] += 1;
            tet[slot + 1] = self.node_index(v);
        }
        tet
    }

    /// The tetrahedron containing `x` (ties broken towards lower indices).
    pub fn locate(&self, x: [f64; 3]) -> [usize; 4] {
        let mut corner = [0; 3];
        let mut local = [0.0; 3];
        for a in 0..3 {
            let h = self.extents[a] / self.divisions[a] as f64;
            let s = (x[a] / h)
                .floor()
                .clamp(0.0, (self.divisions[a] - 1) as f64);
            corner[a] = s as usize;
            local[a] = x[a] / h - s;
        }
        let mut perm = [0, 1, 2];
        perm.sort_by(|&a, &b| local[b].total_cmp(&local[a]));
        self.kuhn_tet(corner, perm)
    }

    fn on_side(&self, n: usize, side: Side) -> bool {
        let ijk = self.node_ijk(n);
        let a = side.axis();
        if side.is_max() {
            ijk[a] == self.divisions[a]
        } else {
            ijk[a] == 0
        }
    }

    fn find_boundary(&self) -> Vec<BoundaryFace> {
        let mut out = Vec::new();
        for tet in &self.tets {
            for skip in 0..4 {
                let mut f = [0; 3];
                let mut m = 0;
                for (q, &n) in tet.iter().enumerate() {
                    if q != skip {
                        f[m] = n;
                        m += 1;
                    }
                }
                for side in Side::ALL {
                    if f.iter().all(|&n| self.on_side(n, side)) {
                        out.push(BoundaryFace { nodes: f, side });
                    }
                }
            }
        }
        out
    }

    pub fn nodes_on(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&n| self.on_side(n, side))
    }

    pub fn tet_points(&self, t: usize) -> [[f64; 3]; 4] {
        self.tets[t].map(|n| self.nodes[n])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let p = self.tet_points(t);
        let d = |a: usize| [p[a][0] - p[0][0], p[a][1] - p[0][1], p[a][2] - p[0][2]];
        det3([d(1), d(2), d(3)]).abs() / 6.0
    }

    /// Maximal edge length.
    pub fn h(&self) -> f64 {
        let [a, b, c] = self.divisions;
        let s = [
            self.extents[0] / a as f64,
            self.extents[1] / b as f64,
            self.extents[2] / c as f64,
        ];
        (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }
}

pub(crate) fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn tri_area(p: [[f64; 3]; 3]) -> f64 {
    let u = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
    let v = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
    let c = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}
