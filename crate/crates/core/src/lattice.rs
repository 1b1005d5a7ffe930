//! Lattice velocity sets, the structured grid and the streaming step.
//!
//! Direction ordering is rest first, then axis directions, then diagonals:
//!
//! ```text
//! D1Q3:  2 - 0 - 1
//!
//! D2Q5:      3          D2Q9:  6   2   5
//!            |                  \  |  /
//!        2 - 0 - 1             3 - 0 - 1
//!            |                  /  |  \
//!            4                 7   4   8
//! ```
//!
//! Velocities are stored as integer node offsets; the physical velocity of
//! direction `i` is `e_i * c` with `c = dx / dt`.

use rayon::prelude::*;

use crate::error::{LbmError, Result};

/// Velocity sets supported by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    D1Q3,
    D2Q5,
    D2Q9,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::D1Q3 => "D1Q3",
            LatticeKind::D2Q5 => "D2Q5",
            LatticeKind::D2Q9 => "D2Q9",
        }
    }
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "D1Q3" => Ok(LatticeKind::D1Q3),
            "D2Q5" => Ok(LatticeKind::D2Q5),
            "D2Q9" => Ok(LatticeKind::D2Q9),
            other => Err(LbmError::InvalidParameter(format!("unknown lattice {other}"))),
        }
    }
}

/// A DnQm velocity set with weights and the opposite-direction map.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    pub kind: LatticeKind,
    /// Node offsets of each direction.
    pub velocities: Vec<[i32; 2]>,
    pub weights: Vec<f64>,
    pub opposite: Vec<usize>,
    /// `k` in `c_s^2 = k c^2`.
    pub cs_sq_factor: f64,
}

/// Builds one of the supported lattice models.
pub fn build_lattice(kind: LatticeKind) -> LatticeModel {
    let (velocities, weights): (Vec<[i32; 2]>, Vec<f64>) = match kind {
        LatticeKind::D1Q3 => (vec![[0, 0], [1, 0], [-1, 0]], vec![0.5, 0.25, 0.25]),
        LatticeKind::D2Q5 => (
            vec![[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]],
            vec![1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
        ),
        LatticeKind::D2Q9 => (
            vec![
                [0, 0],
                [1, 0],
                [0, 1],
                [-1, 0],
                [0, -1],
                [1, 1],
                [-1, 1],
                [-1, -1],
                [1, -1],
            ],
            vec![
                4.0 / 9.0,
                1.0 / 9.0,
                1.0 / 9.0,
                1.0 / 9.0,
                1.0 / 9.0,
                1.0 / 36.0,
                1.0 / 36.0,
                1.0 / 36.0,
                1.0 / 36.0,
            ],
        ),
    };
    let opposite = velocities
        .iter()
        .map(|e| {
            velocities
                .iter()
                .position(|o| o[0] == -e[0] && o[1] == -e[1])
                .expect("velocity sets are symmetric")
        })
        .collect();
    LatticeModel {
        kind,
        velocities,
        weights,
        opposite,
        cs_sq_factor: 1.0 / 3.0,
    }
}

impl LatticeModel {
    pub fn new(kind: LatticeKind) -> Self {
        build_lattice(kind)
    }

    /// Number of directions `m`.
    pub fn q(&self) -> usize {
        self.velocities.len()
    }

    /// `sum_i w_i e_ix^2` in units of `c^2`: 1/2 for D1Q3, 1/3 otherwise.
    /// Dividing the advective part of the equilibrium by this makes its
    /// first moment exactly `u v` on every lattice.
    pub fn second_moment(&self) -> f64 {
        self.velocities.iter().zip(&self.weights).map(|(e, w)| w * (e[0] * e[0]) as f64).sum()
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            LatticeKind::D1Q3 => 1,
            _ => 2,
        }
    }

    /// Index `b` with `e_b = -e_i`; the rest direction maps to itself.
    pub fn opposite_direction(&self, i: usize) -> Result<usize> {
        self.opposite
            .get(i)
            .copied()
            .ok_or(LbmError::DirectionOutOfRange { index: i, q: self.q() })
    }

    /// Unit-free velocity components of direction `i` as floats.
    pub fn e(&self, i: usize) -> [f64; 2] {
        let v = self.velocities[i];
        [v[0] as f64, v[1] as f64]
    }

    /// Human-readable direction table, e.g. `0:(0,0) 1:(1,0) ...`.
    pub fn ordering(&self) -> String {
        self.velocities
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{i}:({},{})", e[0], e[1]))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Lattice speed `c = dx/dt` and `c_s^2` for a model on a given grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeScale {
    pub c: f64,
    pub cs_sq: f64,
}

impl LatticeScale {
    pub fn new(model: &LatticeModel, dx: f64, dt: f64) -> Self {
        let c = dx / dt;
        LatticeScale {
            c,
            cs_sq: model.cs_sq_factor * c * c,
        }
    }

    pub fn cs(&self) -> f64 {
        self.cs_sq.sqrt()
    }
}

/// Node classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeTag {
    Interior,
    Dirichlet,
    Neumann,
    Solid,
}

/// Uniform structured lattice; 1D grids have `ny == 1`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dt: f64,
    pub origin: [f64; 2],
    pub periodic: [bool; 2],
    tags: Vec<NodeTag>,
    normals: Vec<Option<[f64; 2]>>,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, dt: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(LbmError::InvalidParameter("grid must have at least one node per axis".into()));
        }
        if !(dx > 0.0 && dx.is_finite()) || !(dt > 0.0 && dt.is_finite()) {
            return Err(LbmError::InvalidParameter(format!("dx = {dx} and dt = {dt} must be positive")));
        }
        let n = nx * ny;
        Ok(Grid {
            nx,
            ny,
            dx,
            dt,
            origin: [0.0, 0.0],
            periodic: [false, false],
            tags: vec![NodeTag::Interior; n],
            normals: vec![None; n],
        })
    }

    /// Grid covering `[0, lx] x [0, ly]` with nodes on both ends of each axis.
    pub fn rectangle(lx: f64, ly: f64, dx: f64, dt: f64) -> Result<Self> {
        let nx = cells_along(lx, dx)? + 1;
        let ny = cells_along(ly, dx)? + 1;
        Grid::new(nx, ny, dx, dt)
    }

    /// 1D grid covering `[0, length]`.
    pub fn line(length: f64, dx: f64, dt: f64) -> Result<Self> {
        Grid::new(cells_along(length, dx)? + 1, 1, dx, dt)
    }

    pub fn with_periodic(mut self, x: bool, y: bool) -> Self {
        self.periodic = [x, y];
        self
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.coords(node);
        [
            self.origin[0] + i as f64 * self.dx,
            self.origin[1] + j as f64 * self.dx,
        ]
    }

    pub fn tag(&self, node: usize) -> NodeTag {
        self.tags[node]
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    pub fn normal(&self, node: usize) -> Option<[f64; 2]> {
        self.normals[node]
    }

    pub fn set_tag(&mut self, node: usize, tag: NodeTag) {
        self.tags[node] = tag;
        if matches!(tag, NodeTag::Interior | NodeTag::Solid) {
            self.normals[node] = None;
        }
    }

    /// Tags a boundary node and records its unit outward normal.
    pub fn set_boundary(&mut self, node: usize, tag: NodeTag, normal: [f64; 2]) -> Result<()> {
        let norm = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
        if !(norm > 0.0) {
            return Err(LbmError::Geometry(format!("zero normal at node {node}")));
        }
        self.tags[node] = tag;
        self.normals[node] = Some([normal[0] / norm, normal[1] / norm]);
        Ok(())
    }

    pub fn is_solid(&self, node: usize) -> bool {
        self.tags[node] == NodeTag::Solid
    }

    /// Mask of non-solid nodes.
    pub fn fluid_mask(&self) -> Vec<bool> {
        self.tags.iter().map(|t| *t != NodeTag::Solid).collect()
    }

    /// Neighbour of `node` along offset `e`, honouring periodic axes.
    pub fn neighbor(&self, node: usize, e: [i32; 2]) -> Option<usize> {
        let (i, j) = self.coords(node);
        let x = wrap(i as i64 + e[0] as i64, self.nx, self.periodic[0])?;
        let y = wrap(j as i64 + e[1] as i64, self.ny, self.periodic[1])?;
        Some(self.index(x, y))
    }

    /// Checks the tag/normal invariants.
    pub fn validate(&self) -> Result<()> {
        for (node, tag) in self.tags.iter().enumerate() {
            if matches!(tag, NodeTag::Dirichlet | NodeTag::Neumann) {
                let n = self.normals[node]
                    .ok_or_else(|| LbmError::Geometry(format!("boundary node {node} has no normal")))?;
                let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(LbmError::Geometry(format!("normal at node {node} is not unit length")));
                }
            }
        }
        Ok(())
    }
}

fn wrap(k: i64, n: usize, periodic: bool) -> Option<usize> {
    let n = n as i64;
    if (0..n).contains(&k) {
        Some(k as usize)
    } else if periodic {
        Some(k.rem_euclid(n) as usize)
    } else {
        None
    }
}

/// Number of cells of size `dx` spanning `length`, requiring an integer ratio.
pub fn cells_along(length: f64, dx: f64) -> Result<usize> {
    let ratio = length / dx;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(LbmError::InvalidParameter(format!(
            "dx = {dx} does not divide length {length}"
        )));
    }
    Ok(n as usize)
}

/// Per-node distribution storage with a second buffer for streaming.
///
/// Layout is node-major: `f[node * q + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    q: usize,
    nodes: usize,
    current: Vec<f64>,
    next: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(q: usize, nodes: usize) -> Self {
        DistributionField {
            q,
            nodes,
            current: vec![0.0; q * nodes],
            next: vec![0.0; q * nodes],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn node(&self, n: usize) -> &[f64] {
        &self.current[n * self.q..(n + 1) * self.q]
    }

    pub fn node_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.current[n * self.q..(n + 1) * self.q]
    }

    /// Values held in the back buffer. Right after [`stream`] these are the
    /// post-collision populations of the previous time level.
    pub fn previous(&self, n: usize) -> &[f64] {
        &self.next[n * self.q..(n + 1) * self.q]
    }

    /// Current node values together with the back buffer of the same node.
    pub fn node_and_previous_mut(&mut self, n: usize) -> (&mut [f64], &[f64]) {
        let r = n * self.q..(n + 1) * self.q;
        (&mut self.current[r.clone()], &self.next[r])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.current
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.current
    }

    pub fn swap(&mut self) {
        std::mem::swap(&mut self.current, &mut self.next);
    }

    /// Zeroth moment at every node.
    pub fn concentration_into(&self, out: &mut [f64]) {
        for (u, f) in out.iter_mut().zip(self.current.chunks_exact(self.q)) {
            *u = f.iter().sum();
        }
    }

    pub fn concentration(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.nodes];
        self.concentration_into(&mut u);
        u
    }

    pub fn total(&self) -> f64 {
        self.current.iter().sum()
    }
}

/// Marker for a link whose streaming source is outside the domain or solid.
pub const NO_SOURCE: u32 = u32::MAX;

/// Precomputed pull-streaming table: for every node and direction, the node
/// the population arrives from.
#[derive(Debug, Clone)]
pub struct Topology {
    q: usize,
    sources: Vec<u32>,
    solid: Vec<bool>,
}

impl Topology {
    pub fn new(grid: &Grid, model: &LatticeModel) -> Self {
        let q = model.q();
        let solid: Vec<bool> = (0..grid.len()).map(|n| grid.is_solid(n)).collect();
        let mut sources = vec![NO_SOURCE; q * grid.len()];
        for node in 0..grid.len() {
            if solid[node] {
                continue;
            }
            for (i, e) in model.velocities.iter().enumerate() {
                let src = grid.neighbor(node, [-e[0], -e[1]]);
                if let Some(s) = src.filter(|&s| !solid[s]) {
                    sources[node * q + i] = s as u32;
                }
            }
        }
        Topology { q, sources, solid }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn source(&self, node: usize, i: usize) -> Option<usize> {
        let s = self.sources[node * self.q + i];
        (s != NO_SOURCE).then_some(s as usize)
    }

    pub fn is_solid(&self, node: usize) -> bool {
        self.solid[node]
    }

    /// Directions at `node` that streaming leaves unfilled.
    pub fn unfilled(&self, node: usize) -> Vec<usize> {
        if self.solid[node] {
            return Vec::new();
        }
        (0..self.q).filter(|&i| self.source(node, i).is_none()).collect()
    }
}

/// Translation step: moves every post-collision population one link along
/// its velocity and swaps the buffers.
///
/// Links without a valid source are written as NaN; the boundary module must
/// fill them before the next collision.
pub fn stream(field: &mut DistributionField, topology: &Topology) {
    let q = field.q;
    debug_assert_eq!(q, topology.q);
    let current = &field.current;
    field
        .next
        .par_chunks_mut(q)
        .with_min_len(512)
        .enumerate()
        .for_each(|(node, dst)| {
            if topology.solid[node] {
                dst.fill(0.0);
                return;
            }
            let src = &topology.sources[node * q..(node + 1) * q];
            for i in 0..q {
                dst[i] = match src[i] {
                    NO_SOURCE => f64::NAN,
                    s => current[s as usize * q + i],
                };
            }
        });
    field.swap();
}
