//! D2Q9 BGK flow solver for the steady velocity field of a channel with
//! obstacles, plus the raster mask used to describe the obstacles.
//!
//! The channel runs along x: column 0 is the velocity inlet, column `nx - 1`
//! a fixed-density outlet, and every other open link (walls at the y edges, solid
//! nodes) is closed with halfway bounce-back.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{LbmError, Result};
use crate::lattice::{build_lattice, stream, DistributionField, Grid, LatticeKind, LatticeModel, LatticeScale, NodeTag, Topology};

/// Largest `|v| / c_s` for which the low-Mach approximation is trusted.
pub const MACH_LIMIT: f64 = 0.3;

/// Second-order equilibrium
/// `w_i rho [1 + e.v/c_s^2 + (e.v)^2/(2 c_s^4) - v.v/(2 c_s^2)]`.
pub fn ns_equilibrium(rho: f64, v: [f64; 2], model: &LatticeModel, scale: &LatticeScale) -> Vec<f64> {
    let mut out = vec![0.0; model.q()];
    ns_equilibrium_into(rho, [v[0] / scale.c, v[1] / scale.c], model, &mut out);
    out
}

/// Same as [`ns_equilibrium`] with the lattice velocity `v / c`.
fn ns_equilibrium_into(rho: f64, vl: [f64; 2], model: &LatticeModel, out: &mut [f64]) {
    let k = model.cs_sq_factor;
    let vv = vl[0] * vl[0] + vl[1] * vl[1];
    for (i, o) in out.iter_mut().enumerate() {
        let e = &model.velocities[i];
        let ev = e[0] as f64 * vl[0] + e[1] as f64 * vl[1];
        *o = model.weights[i] * rho * (1.0 + ev / k + ev * ev / (2.0 * k * k) - vv / (2.0 * k));
    }
}

fn moments(f: &[f64], model: &LatticeModel) -> (f64, [f64; 2]) {
    let mut rho = 0.0;
    let mut j = [0.0, 0.0];
    for (fi, e) in f.iter().zip(&model.velocities) {
        rho += fi;
        j[0] += fi * e[0] as f64;
        j[1] += fi * e[1] as f64;
    }
    (rho, [j[0] / rho, j[1] / rho])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    /// Dynamic viscosity.
    pub mu: f64,
    pub rho0: f64,
    pub inlet: [f64; 2],
    /// Steady when `max |dv| / max |v|` between checks drops below this.
    pub tol: f64,
    pub max_steps: usize,
    pub check_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            mu: 1e-2,
            rho0: 1.0,
            inlet: [1.0, 0.0],
            tol: 1e-6,
            max_steps: 200_000,
            check_every: 50,
        }
    }
}

/// Frozen flow field in physical units.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub velocity: Vec<[f64; 2]>,
    pub density: Vec<f64>,
    pub steps: usize,
    pub max_mach: f64,
}

impl FlowField {
    pub fn mach_warning(&self) -> bool {
        self.max_mach >= MACH_LIMIT
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Closure {
    Stream,
    BounceBack,
    /// Copy from the node one column upstream.
    Outflow,
}

pub struct FlowSolver {
    grid: Grid,
    model: LatticeModel,
    scale: LatticeScale,
    topology: Topology,
    cfg: FlowConfig,
    omega: f64,
    /// Inlet velocity divided by `c`.
    inlet_vl: [f64; 2],
    /// Per node and direction, how the population is obtained after streaming.
    closure: Vec<Closure>,
    field: DistributionField,
    steps: usize,
}

impl FlowSolver {
    /// Starts from fluid at rest with density `rho0`.
    pub fn new(grid: &Grid, cfg: FlowConfig) -> Result<Self> {
        let model = build_lattice(LatticeKind::D2Q9);
        if !(cfg.mu > 0.0 && cfg.rho0 > 0.0) {
            return Err(LbmError::InvalidParameter("viscosity and density must be positive".into()));
        }
        if grid.nx < 3 {
            return Err(LbmError::Geometry("channel needs at least three columns".into()));
        }
        check_connected(grid)?;
        let scale = LatticeScale::new(&model, grid.dx, grid.dt);
        let tau = cfg.mu / (cfg.rho0 * scale.cs_sq * grid.dt) + 0.5;
        if !(tau > 0.5) {
            return Err(LbmError::RelaxationTooSmall(tau));
        }
        let mut plain = grid.clone();
        plain.periodic = [false, false];
        let topology = Topology::new(&plain, &model);
        let q = model.q();
        let mut closure = vec![Closure::Stream; q * grid.len()];
        for node in 0..grid.len() {
            let (i, _) = grid.coords(node);
            for k in topology.unfilled(node) {
                let ex = model.velocities[k][0];
                let from_right = i == grid.nx - 1 && ex < 0;
                let src = plain.neighbor(node, [-model.velocities[k][0], -model.velocities[k][1]]);
                let src_solid = src.is_some_and(|s| grid.is_solid(s));
                closure[node * q + k] = if from_right && !src_solid && src.is_none() {
                    Closure::Outflow
                } else {
                    Closure::BounceBack
                };
            }
        }
        let mut field = DistributionField::zeros(q, grid.len());
        let rest = ns_equilibrium(cfg.rho0, [0.0, 0.0], &model, &scale);
        for node in 0..grid.len() {
            if !grid.is_solid(node) {
                field.node_mut(node).copy_from_slice(&rest);
            }
        }
        let inlet_vl = [cfg.inlet[0] / scale.c, cfg.inlet[1] / scale.c];
        Ok(FlowSolver {
            grid: plain,
            model,
            scale,
            topology,
            cfg,
            omega: 1.0 / tau,
            inlet_vl,
            closure,
            field,
            steps: 0,
        })
    }

    pub fn relaxation_time(&self) -> f64 {
        1.0 / self.omega
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self) {
        let q = self.model.q();
        let omega = self.omega;
        let model = &self.model;
        let grid = &self.grid;
        self.field
            .as_mut_slice()
            .par_chunks_mut(q)
            .with_min_len(256)
            .enumerate()
            .for_each(|(node, f)| {
                if grid.is_solid(node) {
                    return;
                }
                let (rho, vl) = moments(f, model);
                let mut feq = [0.0; 9];
                ns_equilibrium_into(rho, vl, model, &mut feq);
                for i in 0..q {
                    f[i] -= omega * (f[i] - feq[i]);
                }
            });
        stream(&mut self.field, &self.topology);

        let nx = self.grid.nx;
        for node in 0..self.grid.len() {
            if self.grid.is_solid(node) {
                continue;
            }
            let base = node * q;
            if self.closure[base..base + q].iter().all(|c| *c == Closure::Stream) {
                continue;
            }
            let (f, prev) = self.field.node_and_previous_mut(node);
            for k in 0..q {
                if self.closure[base + k] == Closure::BounceBack {
                    f[k] = prev[self.model.opposite[k]];
                }
            }
        }
        // pressure outlet: density rho0, velocity and non-equilibrium part
        // taken from the upstream column
        let rho0 = self.cfg.rho0;
        for j in 0..self.grid.ny {
            let node = self.grid.index(nx - 1, j);
            if self.grid.is_solid(node) {
                continue;
            }
            let up = self.grid.index(nx - 2, j);
            let mut fill = [0.0; 9];
            if self.grid.is_solid(up) {
                let prev = self.field.previous(node);
                for k in 0..q {
                    fill[k] = prev[self.model.opposite[k]];
                }
            } else {
                let fu = self.field.node(up);
                let (rho_u, vl) = moments(fu, &self.model);
                let mut eq_u = [0.0; 9];
                let mut eq_0 = [0.0; 9];
                ns_equilibrium_into(rho_u, vl, &self.model, &mut eq_u[..q]);
                ns_equilibrium_into(rho0, vl, &self.model, &mut eq_0[..q]);
                for k in 0..q {
                    fill[k] = eq_0[k] + fu[k] - eq_u[k];
                }
            }
            let f = self.field.node_mut(node);
            for k in 0..q {
                if self.closure[node * q + k] == Closure::Outflow {
                    f[k] = fill[k];
                }
            }
        }
        // velocity inlet: equilibrium at the prescribed velocity with the
        // density of the next column
        for j in 0..self.grid.ny {
            let node = self.grid.index(0, j);
            if self.grid.is_solid(node) {
                continue;
            }
            let next = self.grid.index(1, j);
            let rho = if self.grid.is_solid(next) {
                self.cfg.rho0
            } else {
                self.field.node(next).iter().sum()
            };
            let mut eq = [0.0; 9];
            ns_equilibrium_into(rho, self.inlet_vl, &self.model, &mut eq[..q]);
            self.field.node_mut(node).copy_from_slice(&eq[..q]);
        }
        self.steps += 1;
    }

    /// Current physical velocity; zero at solid nodes.
    pub fn velocity(&self) -> Vec<[f64; 2]> {
        let c = self.scale.c;
        (0..self.grid.len())
            .map(|n| {
                if self.grid.is_solid(n) {
                    [0.0, 0.0]
                } else {
                    let (_, vl) = moments(self.field.node(n), &self.model);
                    [vl[0] * c, vl[1] * c]
                }
            })
            .collect()
    }

    pub fn density(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|n| if self.grid.is_solid(n) { 0.0 } else { self.field.node(n).iter().sum() })
            .collect()
    }

    pub fn snapshot(&self) -> FlowField {
        let velocity = self.velocity();
        let cs = self.scale.cs();
        let max_mach = velocity
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt() / cs)
            .fold(0.0, f64::max);
        FlowField {
            velocity,
            density: self.density(),
            steps: self.steps,
            max_mach,
        }
    }

    /// Steps until the velocity change between checks falls below `tol`.
    pub fn run_to_steady(&mut self) -> Result<FlowField> {
        let every = self.cfg.check_every.max(1);
        let mut last = self.velocity();
        while self.steps < self.cfg.max_steps {
            for _ in 0..every {
                self.step();
            }
            let now = self.velocity();
            let mut dv: f64 = 0.0;
            let mut vmax: f64 = 0.0;
            for (a, b) in now.iter().zip(&last) {
                dv = dv.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
                vmax = vmax.max((a[0] * a[0] + a[1] * a[1]).sqrt());
            }
            if !dv.is_finite() || !vmax.is_finite() {
                return Err(LbmError::NonFinite { step: self.steps, node: 0 });
            }
            // velocities at round-off level count as a fluid at rest
            let floor = 1e-12 * self.scale.c;
            if dv <= self.cfg.tol * vmax || vmax <= floor {
                return Ok(self.snapshot());
            }
            last = now;
        }
        Err(LbmError::FlowNotConverged(self.cfg.max_steps))
    }
}

/// Solves the channel flow to steady state.
pub fn run_flow_to_steady(grid: &Grid, cfg: FlowConfig) -> Result<FlowField> {
    FlowSolver::new(grid, cfg)?.run_to_steady()
}

/// Requires a fluid path from the inlet column to the outlet column.
fn check_connected(grid: &Grid) -> Result<()> {
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::new();
    for j in 0..grid.ny {
        let n = grid.index(0, j);
        if !grid.is_solid(n) {
            seen[n] = true;
            queue.push_back(n);
        }
    }
    if queue.is_empty() {
        return Err(LbmError::Geometry("inlet column is entirely solid".into()));
    }
    while let Some(n) = queue.pop_front() {
        if grid.coords(n).0 == grid.nx - 1 {
            return Ok(());
        }
        for e in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            if let Some(m) = grid.neighbor(n, e) {
                if !seen[m] && !grid.is_solid(m) {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
    }
    Err(LbmError::Geometry("no fluid path from inlet to outlet".into()))
}

/// Mass flux `sum rho v_x dy` through column `i`.
pub fn column_mass_flux(grid: &Grid, flow: &FlowField, i: usize) -> f64 {
    (0..grid.ny)
        .map(|j| grid.index(i, j))
        .filter(|&n| !grid.is_solid(n))
        .map(|n| flow.density[n] * flow.velocity[n][0] * grid.dx)
        .sum()
}

/// L2 norm (root mean square) of the central-difference divergence over
/// interior fluid nodes whose four neighbours are fluid.
pub fn divergence_rms(grid: &Grid, velocity: &[[f64; 2]]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for j in 1..grid.ny.saturating_sub(1) {
        for i in 1..grid.nx.saturating_sub(1) {
            let n = grid.index(i, j);
            let nb = [grid.index(i + 1, j), grid.index(i - 1, j), grid.index(i, j + 1), grid.index(i, j - 1)];
            if grid.is_solid(n) || nb.iter().any(|&m| grid.is_solid(m)) {
                continue;
            }
            let div = (velocity[nb[0]][0] - velocity[nb[1]][0] + velocity[nb[2]][1] - velocity[nb[3]][1]) / (2.0 * grid.dx);
            sum += div * div;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Raster obstacle map, 1 = solid. Row 0 lies at `y = origin[1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub origin: [f64; 2],
    cells: Vec<bool>,
}

impl Mask {
    pub fn new(nx: usize, ny: usize, dx: f64, origin: [f64; 2], cells: Vec<bool>) -> Result<Self> {
        if nx == 0 || ny == 0 || cells.len() != nx * ny {
            return Err(LbmError::ShapeMismatch(format!("mask {nx}x{ny} with {} cells", cells.len())));
        }
        if !(dx > 0.0) {
            return Err(LbmError::InvalidParameter("mask dx must be positive".into()));
        }
        Ok(Mask { nx, ny, dx, origin, cells })
    }

    pub fn is_solid(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.nx + i]
    }

    /// Solid flag of the raster cell nearest to `pos`; outside the raster is fluid.
    pub fn sample(&self, pos: [f64; 2]) -> bool {
        let fi = ((pos[0] - self.origin[0]) / self.dx).round();
        let fj = ((pos[1] - self.origin[1]) / self.dx).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return false;
        }
        self.is_solid(fi as usize, fj as usize)
    }

    /// Marks grid nodes solid where the mask is solid.
    pub fn apply(&self, grid: &mut Grid) {
        for n in 0..grid.len() {
            if self.sample(grid.position(n)) {
                grid.set_tag(n, NodeTag::Solid);
            }
        }
    }

    pub fn solid_fraction(&self) -> f64 {
        self.cells.iter().filter(|&&c| c).count() as f64 / self.cells.len() as f64
    }

    /// Text format: `key value` header lines (`nx`, `ny`, `dx`, optional
    /// `origin x y`), then `ny` rows of `0`/`1`, top row last-in-y first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut nx = None;
        let mut ny = None;
        let mut dx = None;
        let mut origin = [0.0, 0.0];
        let mut rows: Vec<Vec<bool>> = Vec::new();
        let bad = |msg: String| LbmError::Geometry(format!("mask: {msg}"));
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with(|c: char| c.is_ascii_alphabetic()) {
                let mut parts = line.split_whitespace();
                let key = parts.next().unwrap_or_default();
                let vals: Vec<&str> = parts.collect();
                let num = |k: usize| -> Result<f64> {
                    vals.get(k)
                        .ok_or_else(|| bad(format!("missing value for {key}")))?
                        .parse::<f64>()
                        .map_err(|e| bad(format!("{key}: {e}")))
                };
                match key {
                    "nx" => nx = Some(num(0)? as usize),
                    "ny" => ny = Some(num(0)? as usize),
                    "dx" => dx = Some(num(0)?),
                    "origin" => origin = [num(0)?, num(1)?],
                    other => return Err(bad(format!("unknown header key {other}"))),
                }
                continue;
            }
            let row = line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(bad(format!("unexpected character {other:?}"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            rows.push(row);
        }
        let nx = nx.ok_or_else(|| bad("missing nx".into()))?;
        let ny = ny.ok_or_else(|| bad("missing ny".into()))?;
        let dx = dx.ok_or_else(|| bad("missing dx".into()))?;
        if rows.len() != ny || rows.iter().any(|r| r.len() != nx) {
            return Err(bad(format!("expected {ny} rows of {nx} cells")));
        }
        // file lists the top row first
        let mut cells = Vec::with_capacity(nx * ny);
        for row in rows.iter().rev() {
            cells.extend_from_slice(row);
        }
        Mask::new(nx, ny, dx, origin, cells)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nx {}", self.nx);
        let _ = writeln!(s, "ny {}", self.ny);
        let _ = writeln!(s, "dx {:?}", self.dx);
        let _ = writeln!(s, "origin {:?} {:?}", self.origin[0], self.origin[1]);
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                s.push(if self.is_solid(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Mask::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Staggered array of circular obstacles inside `[x0, x1] x [0, ly]`.
    /// Columns are `pitch` apart; every other column is shifted by half a
    /// pitch in y. Cylinders closer than one radius to `y = 0` or `y = ly`
    /// are dropped.
    pub fn staggered_cylinders(lx: f64, ly: f64, dx: f64, x0: f64, x1: f64, pitch: f64, radius: f64) -> Result<Self> {
        let nx = (lx / dx).round() as usize + 1;
        let ny = (ly / dx).round() as usize + 1;
        let mut centres = Vec::new();
        let mut col = 0;
        let mut x = x0;
        while x <= x1 + 1e-12 {
            let shift = if col % 2 == 1 { 0.5 * pitch } else { 0.0 };
            let mut y = pitch * 0.5 + shift;
            while y < ly - radius * 2.0 {
                if y > radius * 2.0 {
                    centres.push([x, y]);
                }
                y += pitch;
            }
            x += pitch;
            col += 1;
        }
        let mut cells = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = [i as f64 * dx, j as f64 * dx];
                cells[j * nx + i] = centres
                    .iter()
                    .any(|c| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= radius * radius);
            }
        }
        Mask::new(nx, ny, dx, [0.0, 0.0], cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equilibrium_examples() {
        let m = build_lattice(LatticeKind::D2Q9);
        let s = LatticeScale::new(&m, 1.0, 1.0);
        let f = ns_equilibrium(1.0, [0.0, 0.0], &m, &s);
        for (a, b) in f.iter().zip(&m.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-16);
        }
        let f = ns_equilibrium(1.0, [0.1, 0.0], &m, &s);
        let jx: f64 = f.iter().zip(&m.velocities).map(|(fi, e)| fi * e[0] as f64).sum();
        assert_abs_diff_eq!(jx, 0.1, epsilon = 1e-15);
        let s2 = LatticeScale::new(&m, 0.01, 0.002);
        let f = ns_equilibrium(1.3, [0.4, -0.7], &m, &s2);
        let (rho, vl) = moments(&f, &m);
        assert_abs_diff_eq!(rho, 1.3, epsilon = 1e-13);
        assert_abs_diff_eq!(vl[0] * s2.c, 0.4, epsilon = 1e-13);
        assert_abs_diff_eq!(vl[1] * s2.c, -0.7, epsilon = 1e-13);
    }

    #[test]
    fn fluid_at_rest_is_stationary() {
        let mut grid = Grid::new(12, 8, 1.0, 1.0).unwrap();
        grid.set_tag(grid.index(5, 4), NodeTag::Solid);
        let cfg = FlowConfig {
            mu: 0.1,
            inlet: [0.0, 0.0],
            ..FlowConfig::default()
        };
        let mut solver = FlowSolver::new(&grid, cfg).unwrap();
        for _ in 0..50 {
            solver.step();
        }
        assert!(solver.velocity().iter().all(|v| v[0].abs() < 1e-14 && v[1].abs() < 1e-14));
        let flow = run_flow_to_steady(&grid, cfg).unwrap();
        assert!(flow.velocity.iter().all(|v| v[0].abs() < 1e-14 && v[1].abs() < 1e-14));
    }

    #[test]
    fn blocked_channel_is_rejected() {
        let mut grid = Grid::new(6, 4, 1.0, 1.0).unwrap();
        for j in 0..4 {
            grid.set_tag(grid.index(3, j), NodeTag::Solid);
        }
        assert!(matches!(FlowSolver::new(&grid, FlowConfig::default()), Err(LbmError::Geometry(_))));
        let mut solid = Grid::new(6, 4, 1.0, 1.0).unwrap();
        for n in 0..solid.len() {
            solid.set_tag(n, NodeTag::Solid);
        }
        assert!(FlowSolver::new(&solid, FlowConfig::default()).is_err());
    }

    #[test]
    fn mask_roundtrip_and_sampling() {
        let cells = vec![false, true, false, false, false, true];
        let mask = Mask::new(3, 2, 0.5, [0.0, 0.0], cells).unwrap();
        let text = mask.to_text();
        assert_eq!(Mask::parse(&text).unwrap(), mask);
        assert!(mask.sample([0.5, 0.0]));
        assert!(mask.sample([1.0, 0.5]));
        assert!(!mask.sample([0.0, 0.5]));
        assert!(!mask.sample([5.0, 5.0]));
        assert!(Mask::parse("nx 2\nny 1\ndx 1\n012\n").is_err());
    }

    #[test]
    fn staggered_layout_leaves_margins() {
        let m = Mask::staggered_cylinders(0.5, 2.0, 1.0 / 200.0, 0.15, 0.35, 0.15, 0.02).unwrap();
        assert_eq!((m.nx, m.ny), (101, 401));
        let f = m.solid_fraction();
        assert!(f > 0.02 && f < 0.4, "solid fraction {f}");
        for j in 0..m.ny {
            assert!(!m.is_solid(0, j) && !m.is_solid(m.nx - 1, j));
        }
    }
}
