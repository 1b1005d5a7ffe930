//! Advection-diffusion solver: collision, streaming and boundary update.

use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary::{BoundarySet, BoundarySpec};
use crate::error::{LbmError, Result};
use crate::lattice::{stream, DistributionField, Grid, LatticeModel, LatticeScale, Topology};
use crate::mrt::{kernel_for_tensor, CollisionKernel, HwParams, YnParams};
use crate::tensor::Tensor2;

/// Source term `g(x, t)`.
pub type SourceFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// `tau = D / (dt c_s^2) + 1/2`.
pub fn relaxation_time(d: f64, dt: f64, cs_sq: f64) -> Result<f64> {
    if !(d > 0.0 && dt > 0.0 && cs_sq > 0.0) || !(d.is_finite() && dt.is_finite() && cs_sq.is_finite()) {
        return Err(LbmError::InvalidParameter(format!(
            "relaxation time needs positive inputs, got D={d}, dt={dt}, c_s^2={cs_sq}"
        )));
    }
    Ok(d / (dt * cs_sq) + 0.5)
}

/// `f_i^eq = w_i u (1 + v.e_i / (k c^2))` with `e_i` scaled by `c` and
/// `k` the lattice second moment (the `c_s^2 / c^2` of D2Q5 and D2Q9).
pub fn equilibrium(u: f64, v: [f64; 2], model: &LatticeModel, scale: &LatticeScale) -> Vec<f64> {
    (0..model.q())
        .map(|i| {
            let e = model.e(i);
            let ev = (e[0] * v[0] + e[1] * v[1]) / scale.c;
            model.weights[i] * u * (1.0 + ev / model.second_moment())
        })
        .collect()
}

/// `f_hat = f - (f - f_eq)/tau + w dt g`.
pub fn collide_srt(f: &[f64], f_eq: &[f64], tau: f64, g: f64, dt: f64, model: &LatticeModel) -> Result<Vec<f64>> {
    if !(tau > 0.5) {
        return Err(LbmError::RelaxationTooSmall(tau));
    }
    if f.len() != model.q() || f_eq.len() != model.q() {
        return Err(LbmError::ShapeMismatch(format!("collide_srt expects {} directions", model.q())));
    }
    Ok(f.iter()
        .zip(f_eq)
        .zip(&model.weights)
        .map(|((fi, ei), w)| fi - (fi - ei) / tau + w * dt * g)
        .collect())
}

pub fn concentration(f: &[f64]) -> f64 {
    f.iter().sum()
}

/// `f_i(x, 0) = w_i u0(x)`.
pub fn initialize(u0: &[f64], model: &LatticeModel) -> DistributionField {
    let q = model.q();
    let mut field = DistributionField::zeros(q, u0.len());
    for (n, &u) in u0.iter().enumerate() {
        for (fi, w) in field.node_mut(n).iter_mut().zip(&model.weights) {
            *fi = w * u;
        }
    }
    field
}

/// Number of steps covering `end_time`, which must be a whole multiple of `dt`.
pub fn step_count(end_time: f64, dt: f64) -> Result<usize> {
    if !(end_time > 0.0 && dt > 0.0) {
        return Err(LbmError::InvalidParameter("end time and dt must be positive".into()));
    }
    let ratio = end_time / dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
        return Err(LbmError::NonIntegralSteps { end_time, dt });
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionScheme {
    Srt,
    YoshidaNagaoka(YnParams),
    HuangWu(HwParams),
}

impl CollisionScheme {
    pub fn name(&self) -> &'static str {
        match self {
            CollisionScheme::Srt => "SRT",
            CollisionScheme::YoshidaNagaoka(_) => "YN",
            CollisionScheme::HuangWu(_) => "HW",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DiffusionSpec {
    Scalar(f64),
    /// Uniform tensor.
    Tensor(Tensor2),
    /// One tensor per node.
    Field(Vec<Tensor2>),
}

impl DiffusionSpec {
    pub fn at(&self, node: usize) -> Tensor2 {
        match self {
            DiffusionSpec::Scalar(d) => Tensor2::isotropic(*d),
            DiffusionSpec::Tensor(t) => *t,
            DiffusionSpec::Field(v) => v[node],
        }
    }

    pub fn validate(&self, nodes: usize) -> Result<()> {
        match self {
            DiffusionSpec::Scalar(d) => {
                if !(*d > 0.0 && d.is_finite()) {
                    return Err(LbmError::InvalidParameter(format!("diffusivity {d} must be positive")));
                }
            }
            DiffusionSpec::Tensor(t) => t.ensure_spd(|| "uniform tensor".into())?,
            DiffusionSpec::Field(v) => {
                if v.len() != nodes {
                    return Err(LbmError::ShapeMismatch(format!(
                        "{} tensors for {nodes} nodes",
                        v.len()
                    )));
                }
                for (n, t) in v.iter().enumerate() {
                    t.ensure_spd(|| format!("at node {n}"))?;
                }
            }
        }
        Ok(())
    }

    fn is_uniform(&self) -> bool {
        !matches!(self, DiffusionSpec::Field(_))
    }
}

/// Everything needed to march one scalar field.
#[derive(Clone)]
pub struct TransportProblem {
    pub grid: Grid,
    pub model: LatticeModel,
    pub diffusion: DiffusionSpec,
    pub scheme: CollisionScheme,
    /// Physical advection velocity per node.
    pub velocity: Option<Vec<[f64; 2]>>,
    pub source: Option<SourceFn>,
    pub boundary: BoundarySpec,
    /// Initial concentration per node.
    pub initial: Vec<f64>,
    pub end_time: f64,
}

/// Read-only view handed to observers.
pub struct Sample<'a> {
    pub step: usize,
    pub time: f64,
    pub u: &'a [f64],
    pub field: &'a DistributionField,
    pub grid: &'a Grid,
}

pub trait Observer {
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()>;
}

impl<F: FnMut(&Sample<'_>) -> Result<()>> Observer for F {
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()> {
        self(sample)
    }
}

pub struct TransportSolver {
    grid: Grid,
    model: LatticeModel,
    scale: LatticeScale,
    topology: Topology,
    boundary: BoundarySet,
    kernels: Vec<CollisionKernel>,
    /// `v / c` per node, empty when there is no advection.
    lattice_velocity: Vec<[f64; 2]>,
    source: Option<SourceFn>,
    field: DistributionField,
    u: Vec<f64>,
    steps: usize,
    step: usize,
}

impl TransportSolver {
    pub fn new(problem: TransportProblem) -> Result<Self> {
        let TransportProblem {
            mut grid,
            model,
            diffusion,
            scheme,
            velocity,
            source,
            boundary,
            initial,
            end_time,
        } = problem;
        grid.validate()?;
        let n = grid.len();
        if initial.len() != n {
            return Err(LbmError::ShapeMismatch(format!("initial field has {} of {n} nodes", initial.len())));
        }
        diffusion.validate(n)?;
        let steps = step_count(end_time, grid.dt)?;
        let scale = LatticeScale::new(&model, grid.dx, grid.dt);
        let boundary = BoundarySet::resolve(&mut grid, &model, boundary)?;
        let topology = Topology::new(&grid, &model);

        let kernels = if diffusion.is_uniform() {
            vec![kernel_for_tensor(&model, &scheme, &diffusion.at(0), grid.dt, scale.c)?]
        } else {
            (0..n)
                .map(|node| kernel_for_tensor(&model, &scheme, &diffusion.at(node), grid.dt, scale.c))
                .collect::<Result<Vec<_>>>()?
        };

        let lattice_velocity = match velocity {
            Some(v) => {
                if v.len() != n {
                    return Err(LbmError::ShapeMismatch(format!("velocity has {} of {n} nodes", v.len())));
                }
                v.iter().map(|w| [w[0] / scale.c, w[1] / scale.c]).collect()
            }
            None => Vec::new(),
        };

        let mut u0 = initial;
        for (node, up) in boundary.dirichlet_values(0.0) {
            u0[node] = up;
        }
        for (node, u) in u0.iter_mut().enumerate() {
            if grid.is_solid(node) {
                *u = 0.0;
            }
        }
        let field = initialize(&u0, &model);
        Ok(TransportSolver {
            grid,
            model,
            scale,
            topology,
            boundary,
            kernels,
            lattice_velocity,
            source,
            field,
            u: u0,
            steps,
            step: 0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn model(&self) -> &LatticeModel {
        &self.model
    }

    pub fn scale(&self) -> &LatticeScale {
        &self.scale
    }

    pub fn boundary(&self) -> &BoundarySet {
        &self.boundary
    }

    pub fn field(&self) -> &DistributionField {
        &self.field
    }

    pub fn concentration(&self) -> &[f64] {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.grid.dt
    }

    /// Replaces the advection velocity (physical units, one per node).
    pub fn set_velocity(&mut self, velocity: &[[f64; 2]]) -> Result<()> {
        if velocity.len() != self.grid.len() {
            return Err(LbmError::ShapeMismatch(format!(
                "velocity has {} of {} nodes",
                velocity.len(),
                self.grid.len()
            )));
        }
        let c = self.scale.c;
        self.lattice_velocity = velocity.iter().map(|w| [w[0] / c, w[1] / c]).collect();
        Ok(())
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn total_steps(&self) -> usize {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.steps
    }

    /// One collide, stream, boundary cycle.
    pub fn step(&mut self) -> Result<()> {
        let q = self.model.q();
        let dt = self.grid.dt;
        let t = self.time();
        let grid = &self.grid;
        let kernels = &self.kernels;
        let vel = &self.lattice_velocity;
        let source = self.source.as_ref();
        let weights = &self.model.weights;
        self.field
            .as_mut_slice()
            .par_chunks_mut(q)
            .with_min_len(256)
            .enumerate()
            .for_each(|(node, f)| {
                if grid.is_solid(node) {
                    return;
                }
                let kernel = if kernels.len() == 1 { &kernels[0] } else { &kernels[node] };
                let vl = vel.get(node).copied().unwrap_or([0.0, 0.0]);
                match source {
                    Some(g) => {
                        let gv = g(grid.position(node), t);
                        let mut src = [0.0; 9];
                        for i in 0..q {
                            src[i] = weights[i] * dt * gv;
                        }
                        kernel.collide(f, vl, Some(&src[..q]));
                    }
                    None => kernel.collide(f, vl, None),
                }
            });
        stream(&mut self.field, &self.topology);
        self.step += 1;
        let t_new = self.time();
        self.boundary.apply(&mut self.field, &self.model, t_new, self.scale.cs())?;
        self.field.concentration_into(&mut self.u);
        for (node, &u) in self.u.iter().enumerate() {
            if !u.is_finite() && !self.grid.is_solid(node) {
                return Err(LbmError::NonFinite { step: self.step, node });
            }
        }
        Ok(())
    }

    fn notify(&self, observers: &mut [&mut dyn Observer]) -> Result<()> {
        let sample = Sample {
            step: self.step,
            time: self.time(),
            u: &self.u,
            field: &self.field,
            grid: &self.grid,
        };
        for o in observers.iter_mut() {
            o.observe(&sample)?;
        }
        Ok(())
    }

    /// Marches to the end time. Observers see step 0, every `every`-th
    /// step, and the final step.
    pub fn run(&mut self, observers: &mut [&mut dyn Observer], every: usize) -> Result<()> {
        let every = every.max(1);
        if self.step == 0 {
            self.notify(observers)?;
        }
        while !self.is_finished() {
            self.step()?;
            if self.step.is_multiple_of(every) || self.is_finished() {
                self.notify(observers)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{constant, BoundaryKind, DirichletMethod};
    use crate::lattice::{build_lattice, LatticeKind};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn relaxation_time_examples() {
        let tau = relaxation_time(1.0 / 3.0, 1e-3, 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!(tau, 1000.5, epsilon = 1e-9);
        assert_abs_diff_eq!(1.0 / tau, 9.995e-4, epsilon = 1e-7);
        assert_abs_diff_eq!(relaxation_time(1.0, 1.0, 1.0).unwrap(), 1.5);
        let cs_sq = 1.0 / 3.0;
        assert_abs_diff_eq!(relaxation_time(cs_sq * 0.1 / 2.0, 0.1, cs_sq).unwrap(), 1.0, epsilon = 1e-15);
        assert!(relaxation_time(0.0, 1.0, 1.0).is_err());
        assert!(relaxation_time(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn equilibrium_examples() {
        let m = build_lattice(LatticeKind::D1Q3);
        let s = LatticeScale::new(&m, 1.0, 1.0);
        assert_eq!(equilibrium(1.0, [0.0, 0.0], &m, &s), vec![0.5, 0.25, 0.25]);
        assert!(equilibrium(0.0, [0.3, 0.0], &m, &s).iter().all(|&v| v == 0.0));
        let m9 = build_lattice(LatticeKind::D2Q9);
        let s9 = LatticeScale::new(&m9, 1.0, 1.0);
        assert_abs_diff_eq!(concentration(&equilibrium(2.0, [0.0, 0.0], &m9, &s9)), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn collide_srt_examples() {
        let m = build_lattice(LatticeKind::D1Q3);
        let f = [0.5, 0.3, 0.2];
        let feq = [0.5, 0.25, 0.25];
        let out = collide_srt(&f, &feq, 2.0, 0.0, 1.0, &m).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.275, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], 0.225, epsilon = 1e-15);
        assert_eq!(collide_srt(&f, &feq, 1.0, 0.0, 1.0, &m).unwrap(), feq.to_vec());
        assert!(matches!(collide_srt(&f, &feq, 0.5, 0.0, 1.0, &m), Err(LbmError::RelaxationTooSmall(_))));
    }

    #[test]
    fn concentration_and_initialize() {
        assert_eq!(concentration(&[0.5, 0.25, 0.25]), 1.0);
        assert_eq!(concentration(&[0.0; 3]), 0.0);
        assert_abs_diff_eq!(concentration(&[0.2, -0.05, 0.1]), 0.25, epsilon = 1e-15);
        let m = build_lattice(LatticeKind::D1Q3);
        let field = initialize(&[1.0, 1.0], &m);
        assert_eq!(field.node(1), &[0.5, 0.25, 0.25]);
        let band: Vec<f64> = (0..11).map(|i| if (4..=6).contains(&i) { 1.0 } else { 0.0 }).collect();
        let field = initialize(&band, &m);
        for n in 0..11 {
            assert_eq!(field.node(n).iter().any(|&v| v != 0.0), (4..=6).contains(&n));
        }
    }

    #[test]
    fn step_count_requires_whole_steps() {
        assert_eq!(step_count(1e-2, 1e-3).unwrap(), 10);
        assert_eq!(step_count(0.025, 1e-3).unwrap(), 25);
        assert!(matches!(step_count(0.5, 9.75e-4), Err(LbmError::NonIntegralSteps { .. })));
    }

    fn zero_flux_line(n: usize, d: f64, dx: f64, dt: f64) -> TransportProblem {
        let grid = Grid::new(n, 1, dx, dt).unwrap();
        let left = vec![0];
        let right = vec![n - 1];
        TransportProblem {
            grid,
            model: build_lattice(LatticeKind::D1Q3),
            diffusion: DiffusionSpec::Scalar(d),
            scheme: CollisionScheme::Srt,
            velocity: None,
            source: None,
            boundary: BoundarySpec::new()
                .neumann(left, constant(0.0))
                .neumann(right, constant(0.0)),
            initial: vec![1.0; n],
            end_time: 50.0 * dt,
        }
    }

    #[test]
    fn uniform_state_is_fixed_point() {
        let mut s = TransportSolver::new(zero_flux_line(11, 1.0 / 3.0, 0.1, 1e-3)).unwrap();
        s.run(&mut [], 1).unwrap();
        for &u in s.concentration() {
            assert_abs_diff_eq!(u, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn periodic_mass_is_conserved() {
        let model = build_lattice(LatticeKind::D2Q9);
        let grid = Grid::new(16, 12, 0.1, 0.01).unwrap().with_periodic(true, true);
        let n = grid.len();
        let initial: Vec<f64> = (0..n).map(|k| ((k * 37 % 11) as f64) / 11.0).collect();
        let velocity = vec![[0.5, -0.3]; n];
        let problem = TransportProblem {
            grid,
            model,
            diffusion: DiffusionSpec::Scalar(0.05),
            scheme: CollisionScheme::Srt,
            velocity: Some(velocity),
            source: None,
            boundary: BoundarySpec::new(),
            initial: initial.clone(),
            end_time: 10.0,
        };
        let mut s = TransportSolver::new(problem).unwrap();
        let before: f64 = initial.iter().sum();
        s.run(&mut [], 1000).unwrap();
        assert_eq!(s.step_index(), 1000);
        let after: f64 = s.concentration().iter().sum();
        assert!(((after - before) / before).abs() <= 1e-12);
    }

    #[test]
    fn nan_aborts_with_location() {
        let mut p = zero_flux_line(5, 1.0 / 3.0, 0.1, 1e-3);
        p.initial[2] = f64::NAN;
        let mut s = TransportSolver::new(p).unwrap();
        assert!(matches!(s.step(), Err(LbmError::NonFinite { step: 1, .. })));
    }

    #[test]
    fn observers_see_requested_cadence() {
        let mut s = TransportSolver::new(zero_flux_line(5, 1.0 / 3.0, 0.1, 1e-3)).unwrap();
        let mut steps = Vec::new();
        let mut obs = |smp: &Sample<'_>| {
            steps.push(smp.step);
            Ok(())
        };
        s.run(&mut [&mut obs], 20).unwrap();
        assert_eq!(steps, vec![0, 20, 40, 50]);
    }

    /// Weighted-split 1D run; returns the smallest population seen.
    fn min_population(d: f64, dx: f64, dt: f64, u0: Vec<f64>, ul: f64, ur: f64, g: f64, steps: usize) -> f64 {
        let n = u0.len();
        let grid = Grid::new(n, 1, dx, dt).unwrap();
        let problem = TransportProblem {
            grid,
            model: build_lattice(LatticeKind::D1Q3),
            diffusion: DiffusionSpec::Scalar(d),
            scheme: CollisionScheme::Srt,
            velocity: None,
            source: Some(Arc::new(move |_, _| g)),
            boundary: BoundarySpec::new()
                .dirichlet(vec![0], DirichletMethod::WeightedSplit, constant(ul))
                .dirichlet(vec![n - 1], DirichletMethod::WeightedSplit, constant(ur)),
            initial: u0,
            end_time: steps as f64 * dt,
        };
        let mut s = TransportSolver::new(problem).unwrap();
        assert_eq!(s.boundary().get(0).unwrap().kind, BoundaryKind::DirichletWeightedSplit);
        let mut lowest = f64::INFINITY;
        let mut obs = |smp: &Sample<'_>| {
            lowest = lowest.min(smp.field.as_slice().iter().copied().fold(f64::INFINITY, f64::min));
            Ok(())
        };
        s.run(&mut [&mut obs], 1).unwrap();
        lowest
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn equilibrium_moments(u in -10.0..10.0f64, vx in -0.5..0.5f64, vy in -0.5..0.5f64) {
            for kind in [LatticeKind::D2Q5, LatticeKind::D2Q9] {
                let m = build_lattice(kind);
                let s = LatticeScale::new(&m, 0.1, 0.1);
                let v = [vx * s.cs(), vy * s.cs()];
                let feq = equilibrium(u, v, &m, &s);
                let scale = 1e-13 * (1.0 + u.abs());
                prop_assert!((concentration(&feq) - u).abs() <= scale);
                for axis in 0..2 {
                    let flux: f64 = (0..m.q()).map(|i| s.c * m.e(i)[axis] * feq[i]).sum();
                    prop_assert!((flux - u * v[axis]).abs() <= scale);
                }
            }
        }

        #[test]
        fn collision_mass_balance(
            f in proptest::collection::vec(-1.0..1.0f64, 9),
            tau in 0.51..50.0f64, g in -5.0..5.0f64, dt in 1e-5..1.0f64,
        ) {
            let m = build_lattice(LatticeKind::D2Q9);
            let s = LatticeScale::new(&m, 1.0, 1.0);
            let feq = equilibrium(concentration(&f), [0.0, 0.0], &m, &s);
            let out = collide_srt(&f, &feq, tau, g, dt, &m).unwrap();
            let lhs = concentration(&out) - concentration(&f);
            let mag = 1.0 + f.iter().map(|v| v.abs()).sum::<f64>();
            prop_assert!((lhs - dt * g).abs() <= 1e-14 * mag);
        }

        #[test]
        fn full_relaxation_keeps_sign(
            f in proptest::collection::vec(0.0..1.0f64, 3),
            tau in 1.0..100.0f64, g in 0.0..5.0f64,
        ) {
            let m = build_lattice(LatticeKind::D1Q3);
            let s = LatticeScale::new(&m, 1.0, 1.0);
            let feq = equilibrium(concentration(&f), [0.0, 0.0], &m, &s);
            let out = collide_srt(&f, &feq, tau, g, 0.1, &m).unwrap();
            prop_assert!(out.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn critical_step_keeps_populations_nonnegative(
            d in 0.01..2.0f64,
            cells in 5usize..30,
            factor in 1.0..20.0f64,
            u0 in proptest::collection::vec(0.0..2.0f64, 30),
            ul in 0.0..3.0f64, ur in 0.0..3.0f64, g in 0.0..4.0f64,
        ) {
            let dx = 1.0 / cells as f64;
            let dt = factor * dx * dx / (6.0 * d);
            let init = u0[..cells + 1].to_vec();
            let lowest = min_population(d, dx, dt, init, ul, ur, g, 40);
            prop_assert!(lowest >= 0.0, "min f = {lowest}");
        }
    }
}
