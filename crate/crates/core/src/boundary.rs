//! Boundary closures applied right after streaming.
//!
//! A node's unknown set `{j}` holds the directions whose streaming source is
//! outside the domain or solid. Every closure writes only its own node.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{LbmError, Result};
use crate::lattice::{DistributionField, Grid, LatticeModel, NodeTag, Topology};

/// Prescribed boundary data as a function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn constant(value: f64) -> TimeFn {
    Arc::new(move |_| value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    DirichletStandard,
    DirichletWeightedSplit,
    NeumannFlux,
    BounceBack,
    /// First-order extrapolation of the unknown populations from the
    /// upstream neighbour.
    Outflow,
}

impl BoundaryKind {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryKind::DirichletStandard | BoundaryKind::DirichletWeightedSplit)
    }
}

/// Which Dirichlet discretization to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirichletMethod {
    Standard,
    WeightedSplit,
}

impl DirichletMethod {
    pub fn kind(self) -> BoundaryKind {
        match self {
            DirichletMethod::Standard => BoundaryKind::DirichletStandard,
            DirichletMethod::WeightedSplit => BoundaryKind::DirichletWeightedSplit,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DirichletMethod::Standard => "standard",
            DirichletMethod::WeightedSplit => "weighted_split",
        }
    }
}

impl std::str::FromStr for DirichletMethod {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(DirichletMethod::Standard),
            "weighted_split" | "weighted-split" => Ok(DirichletMethod::WeightedSplit),
            other => Err(LbmError::InvalidParameter(format!("unknown Dirichlet method {other}"))),
        }
    }
}

/// Resolved closure for one boundary node.
#[derive(Clone)]
pub struct BoundaryAssignment {
    pub node: usize,
    pub kind: BoundaryKind,
    /// `u^p` for Dirichlet, `q^p` for Neumann, unused otherwise.
    pub value: TimeFn,
    pub unknown: Vec<usize>,
    pub normal: [f64; 2],
    /// Source node for [`BoundaryKind::Outflow`].
    pub upstream: Option<usize>,
}

impl fmt::Debug for BoundaryAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryAssignment")
            .field("node", &self.node)
            .field("kind", &self.kind)
            .field("unknown", &self.unknown)
            .field("normal", &self.normal)
            .field("upstream", &self.upstream)
            .finish()
    }
}

/// Unresolved list of boundary segments. Where segments overlap, Dirichlet
/// wins over everything else; otherwise the first segment wins.
#[derive(Clone, Default)]
pub struct BoundarySpec {
    segments: Vec<(Vec<usize>, BoundaryKind, TimeFn)>,
}

impl BoundarySpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(mut self, nodes: Vec<usize>, kind: BoundaryKind, value: TimeFn) -> Self {
        self.segments.push((nodes, kind, value));
        self
    }

    pub fn dirichlet(self, nodes: Vec<usize>, method: DirichletMethod, value: TimeFn) -> Self {
        self.add(nodes, method.kind(), value)
    }

    pub fn neumann(self, nodes: Vec<usize>, flux: TimeFn) -> Self {
        self.add(nodes, BoundaryKind::NeumannFlux, flux)
    }

    pub fn outflow(self, nodes: Vec<usize>) -> Self {
        self.add(nodes, BoundaryKind::Outflow, constant(0.0))
    }

    /// Appends the segments of `other` after these.
    pub fn append(mut self, other: BoundarySpec) -> Self {
        self.segments.extend(other.segments);
        self
    }
}

/// All boundary closures of a problem, one per node.
#[derive(Clone, Debug, Default)]
pub struct BoundarySet {
    assignments: Vec<BoundaryAssignment>,
}

impl BoundarySet {
    /// Resolves segment overlaps, tags the grid, derives unknown sets and
    /// outward normals, and closes every remaining open link with bounce-back.
    pub fn resolve(grid: &mut Grid, model: &LatticeModel, spec: BoundarySpec) -> Result<Self> {
        let mut chosen: BTreeMap<usize, (BoundaryKind, TimeFn)> = BTreeMap::new();
        for (nodes, kind, value) in spec.segments {
            for node in nodes {
                if node >= grid.len() {
                    return Err(LbmError::Geometry(format!("boundary node {node} outside grid")));
                }
                if grid.is_solid(node) {
                    return Err(LbmError::Geometry(format!("boundary node {node} is solid")));
                }
                match chosen.get(&node) {
                    Some((old, _)) if old.is_dirichlet() || !kind.is_dirichlet() => {}
                    _ => {
                        chosen.insert(node, (kind, value.clone()));
                    }
                }
            }
        }
        for (&node, (kind, _)) in &chosen {
            let tag = if kind.is_dirichlet() {
                NodeTag::Dirichlet
            } else {
                NodeTag::Neumann
            };
            grid.set_tag(node, tag);
        }
        let topo = Topology::new(grid, model);
        for node in 0..grid.len() {
            if !grid.is_solid(node) && !chosen.contains_key(&node) && !topo.unfilled(node).is_empty() {
                chosen.insert(node, (BoundaryKind::BounceBack, constant(0.0)));
                grid.set_tag(node, NodeTag::Neumann);
            }
        }

        let mut assignments = Vec::with_capacity(chosen.len());
        for (node, (kind, value)) in chosen {
            let mut unknown = topo.unfilled(node);
            if unknown.is_empty() && kind == BoundaryKind::DirichletStandard {
                // no open link: treat populations arriving from neighbouring
                // Dirichlet nodes as unknown (e.g. convex corners on D2Q5)
                unknown = (1..model.q())
                    .filter(|&i| {
                        topo.source(node, i)
                            .is_some_and(|s| grid.tag(s) == NodeTag::Dirichlet)
                    })
                    .collect();
            }
            if unknown.is_empty() && kind != BoundaryKind::DirichletWeightedSplit {
                return Err(LbmError::EmptyUnknownSet(node));
            }
            let normal = infer_normal(model, &unknown);
            let normal = match normal {
                Some(n) => n,
                None if kind == BoundaryKind::DirichletWeightedSplit => [1.0, 0.0],
                None => return Err(LbmError::DegenerateNeumann(node)),
            };
            if kind == BoundaryKind::NeumannFlux {
                let sum: f64 = unknown.iter().map(|&k| dot(model.e(k), normal)).sum();
                if !(sum < 0.0) {
                    return Err(LbmError::DegenerateNeumann(node));
                }
            }
            let upstream = if kind == BoundaryKind::Outflow {
                let step = [-normal[0].round() as i32, -normal[1].round() as i32];
                let up = grid
                    .neighbor(node, step)
                    .filter(|&u| !grid.is_solid(u) && u != node)
                    .ok_or_else(|| LbmError::Geometry(format!("outflow node {node} has no upstream neighbour")))?;
                Some(up)
            } else {
                None
            };
            let tag = grid.tag(node);
            grid.set_boundary(node, tag, normal)?;
            assignments.push(BoundaryAssignment {
                node,
                kind,
                value,
                unknown,
                normal,
                upstream,
            });
        }
        Ok(BoundarySet { assignments })
    }

    /// Builds a set from explicit assignments, rejecting duplicated nodes.
    pub fn from_assignments(mut assignments: Vec<BoundaryAssignment>) -> Result<Self> {
        assignments.sort_by_key(|a| a.node);
        let mut seen = std::collections::HashSet::new();
        for a in &assignments {
            if !seen.insert(a.node) {
                return Err(LbmError::DuplicateBoundary(a.node));
            }
        }
        Ok(BoundarySet { assignments })
    }

    pub fn assignments(&self) -> &[BoundaryAssignment] {
        &self.assignments
    }

    pub fn get(&self, node: usize) -> Option<&BoundaryAssignment> {
        self.assignments
            .binary_search_by_key(&node, |a| a.node)
            .ok()
            .map(|k| &self.assignments[k])
    }

    /// Dirichlet values at time `t`, by node.
    pub fn dirichlet_values(&self, t: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.assignments
            .iter()
            .filter(|a| a.kind.is_dirichlet())
            .map(move |a| (a.node, (a.value)(t)))
    }

    /// Fills the unknown populations for the time level `t_new`.
    pub fn apply(&self, field: &mut DistributionField, model: &LatticeModel, t_new: f64, cs: f64) -> Result<()> {
        // each node, corners included, is filled once per step
        debug_assert!(
            self.assignments.windows(2).all(|w| w[0].node < w[1].node),
            "boundary nodes must be unique and sorted"
        );
        for a in self.assignments.iter().filter(|a| a.kind != BoundaryKind::Outflow) {
            let (f, prev) = field.node_and_previous_mut(a.node);
            match a.kind {
                BoundaryKind::DirichletStandard => {
                    apply_dirichlet_standard(a.node, f, &a.unknown, (a.value)(t_new), model)?
                }
                BoundaryKind::DirichletWeightedSplit => {
                    apply_dirichlet_weighted_split(f, (a.value)(t_new), model)
                }
                BoundaryKind::NeumannFlux => {
                    apply_neumann(a.node, f, prev, &a.unknown, (a.value)(t_new), model, cs, a.normal)?
                }
                BoundaryKind::BounceBack => bounce_back(f, prev, &a.unknown, model),
                BoundaryKind::Outflow => unreachable!(),
            }
        }
        for a in self.assignments.iter().filter(|a| a.kind == BoundaryKind::Outflow) {
            let up = a.upstream.expect("outflow has upstream");
            let q = model.q();
            let src: Vec<f64> = field.node(up)[..q].to_vec();
            let f = field.node_mut(a.node);
            for &k in &a.unknown {
                f[k] = src[k];
            }
        }
        Ok(())
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Outward normal estimated as `-sum e_j` over the unknown directions.
fn infer_normal(model: &LatticeModel, unknown: &[usize]) -> Option<[f64; 2]> {
    let mut n = [0.0, 0.0];
    for &k in unknown {
        let e = model.e(k);
        n[0] -= e[0];
        n[1] -= e[1];
    }
    let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
    (norm > 0.0).then(|| [n[0] / norm, n[1] / norm])
}

/// Standard Dirichlet closure: distributes `u^p - sum_known f` over the
/// unknown directions in proportion to their weights.
pub fn apply_dirichlet_standard(
    node: usize,
    f: &mut [f64],
    unknown: &[usize],
    u_p: f64,
    model: &LatticeModel,
) -> Result<()> {
    if unknown.is_empty() {
        return Err(LbmError::EmptyUnknownSet(node));
    }
    let q = model.q();
    let is_unknown = |i: usize| unknown.contains(&i);
    let known: f64 = (0..q).filter(|&i| !is_unknown(i)).map(|i| f[i]).sum();
    let w_unknown: f64 = unknown.iter().map(|&p| model.weights[p]).sum();
    let deficit = u_p - known;
    for &a in unknown {
        f[a] = model.weights[a] / w_unknown * deficit;
    }
    Ok(())
}

/// Weighted-splitting Dirichlet closure: `f_a = w_a u^p` in every direction.
pub fn apply_dirichlet_weighted_split(f: &mut [f64], u_p: f64, model: &LatticeModel) {
    for (fa, w) in f.iter_mut().zip(&model.weights) {
        *fa = w * u_p;
    }
}

/// Neumann closure: bounce-back of the post-collision opposite population
/// plus the prescribed flux split over the unknown directions.
#[allow(clippy::too_many_arguments)]
pub fn apply_neumann(
    node: usize,
    f: &mut [f64],
    f_hat_prev: &[f64],
    unknown: &[usize],
    q_p: f64,
    model: &LatticeModel,
    cs: f64,
    normal: [f64; 2],
) -> Result<()> {
    let denom: f64 = unknown.iter().map(|&k| dot(model.e(k), normal)).sum();
    if unknown.is_empty() || denom == 0.0 {
        return Err(LbmError::DegenerateNeumann(node));
    }
    for &a in unknown {
        let b = model.opposite[a];
        f[a] = f_hat_prev[b] + q_p / cs * dot(model.e(a), normal) / denom;
    }
    Ok(())
}

/// Wall closure: `f_a(t + dt) = f_hat_opp(a)(t)` for every open link.
pub fn bounce_back(f: &mut [f64], f_hat_prev: &[f64], unknown: &[usize], model: &LatticeModel) {
    for &a in unknown {
        f[a] = f_hat_prev[model.opposite[a]];
    }
}
