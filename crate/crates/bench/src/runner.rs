//! Builds solver problems from the catalog and marches them to the end time.

use std::sync::Arc;

use lbm_core::boundary::{constant, BoundarySpec, DirichletMethod};
use lbm_core::diagnostics::{
    attribute_product_negativity, check_comparison, critical_dt_check, CriticalDt, FieldSeries, Monitor,
    ProductAttribution, PropertyReport, Verdict, DEFAULT_TOL,
};
use lbm_core::flow::{column_mass_flux, divergence_rms, FlowConfig, FlowField, FlowSolver, Mask};
use lbm_core::mrt::{HwParams, YnParams};
use lbm_core::reaction::{species_from_fields, to_invariants, Stoichiometry};
use lbm_core::transport::{CollisionScheme, DiffusionSpec, SourceFn, TransportProblem, TransportSolver};
use lbm_core::{build_lattice, Grid, NodeTag, Tensor2};

use crate::catalog::{scenario, Case, End1d, Initial1d, Method, Physics, Scenario, ScenarioId};
use crate::error::BenchError;
use crate::oracle::{
    dispersion_tensor, exact_solution_s3, heterogeneous_tensor, s3_terms_needed, StreamFunction, SERIES_TOL,
};

/// Obstacle layout shipped with the crate for the porous scenario.
pub const DEFAULT_POROUS_MASK: &str = include_str!("../data/porous_mask.txt");

/// Target number of samples when no cadence is given.
const DEFAULT_SAMPLES: usize = 200;
/// Target number of oracle evaluations per run.
const ERROR_SAMPLES: usize = 100;

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub scenario: ScenarioId,
    /// 1-based case index; ignored when `case` is set.
    pub case_index: Option<usize>,
    /// Explicit `(dx, dt)`.
    pub case: Option<Case>,
    pub bc: DirichletMethod,
    pub sample_every: Option<usize>,
    /// Obstacle override for the porous scenario.
    pub mask: Option<Mask>,
    /// Advance the flow together with the species instead of freezing it.
    pub coevolve: bool,
}

impl RunRequest {
    pub fn case(scenario: ScenarioId, k: usize) -> Self {
        RunRequest {
            scenario,
            case_index: Some(k),
            case: None,
            bc: DirichletMethod::Standard,
            sample_every: None,
            mask: None,
            coevolve: false,
        }
    }

    pub fn explicit(scenario: ScenarioId, dx: f64, dt: f64) -> Self {
        RunRequest {
            case_index: None,
            case: Some(Case { dx, dt }),
            ..RunRequest::case(scenario, 1)
        }
    }

    pub fn with_bc(mut self, bc: DirichletMethod) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = Some(every);
        self
    }

    fn resolve_case(&self, sc: &Scenario) -> Result<(Case, Option<usize>), BenchError> {
        if let Some(c) = self.case {
            if !(c.dx > 0.0 && c.dt > 0.0 && c.dx.is_finite() && c.dt.is_finite()) {
                return Err(BenchError::Config(format!("dx = {} and dt = {} must be positive", c.dx, c.dt)));
            }
            for l in sc.domain.iter().filter(|&&l| l > 0.0) {
                let r = l / c.dx;
                if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                    return Err(BenchError::Config(format!("dx = {} does not divide the length {l}", c.dx)));
                }
            }
            return Ok((c, None));
        }
        let k = self.case_index.unwrap_or(1);
        Ok((sc.case(k)?, Some(k)))
    }
}

/// Property time series of one field.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub report: PropertyReport,
}

#[derive(Debug, Clone)]
pub struct FinalField {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub lower: String,
    pub upper: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSummary {
    pub steps: usize,
    pub max_mach: f64,
    pub inlet_flux: f64,
    pub outlet_flux: f64,
    pub divergence_rms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: ScenarioId,
    pub title: String,
    pub method: &'static str,
    pub lattice: &'static str,
    pub case: Case,
    pub case_index: Option<usize>,
    pub bc: DirichletMethod,
    pub steps: usize,
    /// `steps * dt`, which differs from the catalog time when that is not a
    /// whole number of steps.
    pub end_time: f64,
    pub requested_end_time: f64,
    pub sample_every: usize,
    pub grid: Grid,
    /// The first entry is the headline field.
    pub series: Vec<Series>,
    pub fields: Vec<FinalField>,
    pub comparisons: Vec<Comparison>,
    pub attribution: Option<ProductAttribution>,
    /// Smallest distribution value seen at a sample.
    pub min_population: Option<f64>,
    pub critical_dt: Option<CriticalDt>,
    pub flow: Option<FlowSummary>,
    pub notes: Vec<String>,
}

impl RunOutput {
    pub fn primary(&self) -> &Series {
        &self.series[0]
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FinalField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn violated(&self) -> bool {
        self.series.iter().any(|s| s.report.verdicts.any_violated())
            || self.comparisons.iter().any(|c| c.verdict.is_violated())
    }
}

/// Rounds `end / dt` to a whole number of steps.
pub fn effective_steps(end: f64, dt: f64) -> (usize, f64) {
    let steps = ((end / dt).round() as usize).max(1);
    (steps, steps as f64 * dt)
}

fn default_every(steps: usize) -> usize {
    steps.div_ceil(DEFAULT_SAMPLES).max(1)
}

fn scheme_for(method: Method) -> CollisionScheme {
    match method {
        Method::Srt => CollisionScheme::Srt,
        Method::YoshidaNagaoka => CollisionScheme::YoshidaNagaoka(YnParams::default()),
        Method::HuangWu => CollisionScheme::HuangWu(HwParams::default()),
    }
}

pub fn run(req: &RunRequest) -> Result<RunOutput, BenchError> {
    let sc = scenario(req.scenario);
    let (case, case_index) = req.resolve_case(&sc)?;
    let (steps, end_time) = effective_steps(sc.end_time, case.dt);
    let every = req.sample_every.unwrap_or_else(|| default_every(steps)).max(1);
    let mut out = RunOutput {
        scenario: sc.id,
        title: sc.title.clone(),
        method: scheme_for(sc.method).name(),
        lattice: sc.lattice.kind().name(),
        case,
        case_index,
        bc: req.bc,
        steps,
        end_time,
        requested_end_time: sc.end_time,
        sample_every: every,
        grid: Grid::new(1, 1, case.dx, case.dt)?,
        series: Vec::new(),
        fields: Vec::new(),
        comparisons: Vec::new(),
        attribution: None,
        min_population: None,
        critical_dt: None,
        flow: None,
        notes: Vec::new(),
    };
    let ratio = sc.end_time / case.dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        out.notes.push(format!(
            "end time {} is not a whole number of steps of {}; ran {steps} steps to t = {end_time}",
            sc.end_time, case.dt
        ));
    }
    match &sc.physics {
        Physics::Line { .. } => run_line(&sc, req, &mut out)?,
        Physics::NonConvex { .. } => run_non_convex(&sc, req, &mut out)?,
        Physics::Heterogeneous { .. } => run_heterogeneous(&sc, req, &mut out)?,
        Physics::Porous { .. } => run_porous(&sc, req, &mut out)?,
        Physics::StreamFunction { .. } => run_stream_function(&sc, req, &mut out)?,
    }
    Ok(out)
}

struct LineSetup {
    problem: TransportProblem,
    /// Bounds from the data, or `None` when a source breaks the principle.
    bounds: Option<(f64, f64)>,
}

fn line_problem(
    sc: &Scenario,
    case: Case,
    bc: DirichletMethod,
    end_time: f64,
    left_value: Option<f64>,
) -> Result<LineSetup, BenchError> {
    let Physics::Line {
        diffusivity,
        initial,
        left,
        right,
        source,
        ..
    } = &sc.physics
    else {
        unreachable!("line scenario")
    };
    let grid = Grid::line(sc.domain[0], case.dx, case.dt)?;
    let n = grid.len();
    let initial: Vec<f64> = (0..n)
        .map(|node| {
            let x = grid.position(node)[0];
            match *initial {
                Initial1d::Uniform { value } => value,
                Initial1d::Band { lo, hi, value } => {
                    if x >= lo - 1e-9 && x <= hi + 1e-9 {
                        value
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    let mut lo = initial.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = initial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut boundary = BoundarySpec::new();
    let left = match (left, left_value) {
        (End1d::Value { .. }, Some(u)) => End1d::Value { u },
        (l, _) => *l,
    };
    for (node, end) in [(0, left), (n - 1, *right)] {
        boundary = match end {
            End1d::Flux { q } => boundary.neumann(vec![node], constant(q)),
            End1d::Value { u } => {
                lo = lo.min(u);
                hi = hi.max(u);
                boundary.dirichlet(vec![node], bc, constant(u))
            }
        };
    }
    let source: Option<SourceFn> = if *source != 0.0 {
        let g = *source;
        Some(Arc::new(move |_, _| g))
    } else {
        None
    };
    let bounds = source.is_none().then_some((lo, hi));
    Ok(LineSetup {
        problem: TransportProblem {
            grid,
            model: build_lattice(sc.lattice.kind()),
            diffusion: DiffusionSpec::Scalar(*diffusivity),
            scheme: scheme_for(sc.method),
            velocity: None,
            source,
            boundary,
            initial,
            end_time,
        },
        bounds,
    })
}

fn run_line(sc: &Scenario, req: &RunRequest, out: &mut RunOutput) -> Result<(), BenchError> {
    let Physics::Line {
        diffusivity,
        left,
        right,
        left_values,
        ..
    } = &sc.physics
    else {
        unreachable!()
    };
    out.critical_dt = Some(critical_dt_check(out.case.dx, out.case.dt, *diffusivity)?);
    if matches!(left, End1d::Flux { .. }) || matches!(right, End1d::Flux { .. }) {
        out.notes.push(
            "boundary mixes flux and value data; the maximum principle is stated for value data only, \
             bounds are checked against the data range anyway"
                .into(),
        );
    }
    let sweeps: Vec<Option<f64>> = if left_values.is_empty() {
        vec![None]
    } else {
        left_values.iter().map(|&v| Some(v)).collect()
    };
    let mut histories = Vec::new();
    let mut min_pop = f64::INFINITY;
    for left_value in sweeps {
        let setup = line_problem(sc, out.case, req.bc, out.end_time, left_value)?;
        let mut solver = TransportSolver::new(setup.problem)?;
        let mut monitor = Monitor::new(solver.grid(), 1);
        if sc.id == ScenarioId::S3 {
            let d = *diffusivity;
            let samples = out.steps / out.sample_every + 2;
            monitor = monitor
                .with_oracle(Box::new(move |p, t| {
                    let terms = s3_terms_needed(t, d, SERIES_TOL);
                    exact_solution_s3(p[0].clamp(0.0, 1.0), t, d, terms).unwrap_or(f64::NAN)
                }))
                .with_error_stride(samples.div_ceil(ERROR_SAMPLES));
        }
        let mut history = FieldSeries::default();
        if left_value.is_some() {
            solver.run(&mut [&mut monitor, &mut history], out.sample_every)?;
        } else {
            solver.run(&mut [&mut monitor], out.sample_every)?;
        }
        monitor.complete_error(solver.concentration(), solver.grid());
        min_pop = min_pop.min(monitor.min_population());
        let name = match left_value {
            Some(v) => format!("u_L={v}"),
            None => "u".to_string(),
        };
        let mut report = monitor.into_report();
        match setup.bounds {
            Some((lo, hi)) => report.check_bounds(lo, hi, DEFAULT_TOL),
            None => report.check_non_negativity(DEFAULT_TOL),
        }
        out.fields.push(FinalField {
            name: name.clone(),
            values: solver.concentration().to_vec(),
        });
        out.series.push(Series { name: name.clone(), report });
        out.grid = solver.grid().clone();
        histories.push((name, history));
    }
    let mask = out.grid.fluid_mask();
    for i in 0..histories.len() {
        for j in i + 1..histories.len() {
            // sweep values are increasing, so run i has the smaller data
            let verdict = check_comparison(&histories[i].1, &histories[j].1, &mask, DEFAULT_TOL)?;
            out.comparisons.push(Comparison {
                lower: histories[i].0.clone(),
                upper: histories[j].0.clone(),
                verdict,
            });
        }
    }
    out.min_population = Some(min_pop);
    Ok(())
}

fn boundary_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.len())
        .filter(|&n| {
            let (i, j) = grid.coords(n);
            i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1
        })
        .collect()
}

fn column(grid: &Grid, i: usize) -> impl Iterator<Item = usize> + '_ {
    (0..grid.ny).map(move |j| grid.index(i, j)).filter(|&n| !grid.is_solid(n))
}

fn row(grid: &Grid, j: usize) -> impl Iterator<Item = usize> + '_ {
    (0..grid.nx).map(move |i| grid.index(i, j)).filter(|&n| !grid.is_solid(n))
}

fn run_single(
    problem: TransportProblem,
    out: &mut RunOutput,
    name: &str,
    bounds: (f64, f64),
) -> Result<PropertyReport, BenchError> {
    let mut solver = TransportSolver::new(problem)?;
    let mut monitor = Monitor::new(solver.grid(), 2);
    solver.run(&mut [&mut monitor], out.sample_every)?;
    out.min_population = Some(monitor.min_population());
    out.grid = solver.grid().clone();
    out.fields.push(FinalField {
        name: name.into(),
        values: solver.concentration().to_vec(),
    });
    let mut report = monitor.into_report();
    report.check_bounds(bounds.0, bounds.1, DEFAULT_TOL);
    Ok(report)
}

/// Index range `[lo, hi]` of the centred hole.
fn hole_range(n: usize, fraction: f64) -> (usize, usize) {
    let cells = (n - 1) as f64;
    let lo = (cells * (1.0 - fraction) / 2.0).round() as usize;
    let hi = (cells * (1.0 + fraction) / 2.0).round() as usize;
    (lo, hi)
}

fn run_non_convex(sc: &Scenario, req: &RunRequest, out: &mut RunOutput) -> Result<(), BenchError> {
    let Physics::NonConvex {
        principal,
        theta,
        hole_fraction,
        inner_value,
        outer_flux,
    } = &sc.physics
    else {
        unreachable!()
    };
    let mut grid = Grid::rectangle(sc.domain[0], sc.domain[1], out.case.dx, out.case.dt)?;
    let (lo, hi) = hole_range(grid.nx, *hole_fraction);
    if hi <= lo + 1 {
        return Err(BenchError::Config(format!("dx = {} cannot resolve the hole", out.case.dx)));
    }
    let mut perimeter = Vec::new();
    for j in lo..=hi {
        for i in lo..=hi {
            let node = grid.index(i, j);
            if i == lo || i == hi || j == lo || j == hi {
                perimeter.push(node);
            } else {
                grid.set_tag(node, NodeTag::Solid);
            }
        }
    }
    let outer = boundary_nodes(&grid);
    let n = grid.len();
    let tensor = Tensor2::diag(principal[0], principal[1]).rotated(*theta);
    let problem = TransportProblem {
        grid,
        model: build_lattice(sc.lattice.kind()),
        diffusion: DiffusionSpec::Tensor(tensor),
        scheme: scheme_for(sc.method),
        velocity: None,
        source: None,
        boundary: BoundarySpec::new()
            .dirichlet(perimeter, req.bc, constant(*inner_value))
            .neumann(outer, constant(*outer_flux)),
        initial: vec![0.0; n],
        end_time: out.end_time,
    };
    let report = run_single(problem, out, "u", (0.0f64.min(*inner_value), inner_value.max(0.0)))?;
    out.series.push(Series { name: "u".into(), report });
    Ok(())
}

fn run_heterogeneous(sc: &Scenario, req: &RunRequest, out: &mut RunOutput) -> Result<(), BenchError> {
    let Physics::Heterogeneous {
        eps,
        eps_prime,
        band,
        boundary_value,
    } = &sc.physics
    else {
        unreachable!()
    };
    let grid = Grid::rectangle(sc.domain[0], sc.domain[1], out.case.dx, out.case.dt)?;
    let inside = |v: f64| v >= band[0] - 1e-9 && v <= band[1] + 1e-9;
    let initial: Vec<f64> = (0..grid.len())
        .map(|n| {
            let p = grid.position(n);
            if inside(p[0]) && inside(p[1]) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let tensors = (0..grid.len())
        .map(|n| {
            let p = grid.position(n);
            heterogeneous_tensor(p[0], p[1], *eps, *eps_prime)
        })
        .collect();
    let walls = boundary_nodes(&grid);
    let problem = TransportProblem {
        grid,
        model: build_lattice(sc.lattice.kind()),
        diffusion: DiffusionSpec::Field(tensors),
        scheme: scheme_for(sc.method),
        velocity: None,
        source: None,
        boundary: BoundarySpec::new().dirichlet(walls, req.bc, constant(*boundary_value)),
        initial,
        end_time: out.end_time,
    };
    let mut report = run_single(problem, out, "u", (boundary_value.min(0.0), boundary_value.max(1.0)))?;
    report.check_decay(None);
    out.series.push(Series { name: "u".into(), report });
    Ok(())
}

/// Lockstep march of the two invariant fields with species monitors.
struct ReactiveRun {
    psi_f: TransportSolver,
    psi_g: TransportSolver,
    stoich: Stoichiometry,
    monitors: [Monitor; 3],
}

impl ReactiveRun {
    fn new(f: TransportProblem, g: TransportProblem, stoich: Stoichiometry) -> Result<Self, BenchError> {
        let psi_f = TransportSolver::new(f)?;
        let psi_g = TransportSolver::new(g)?;
        let monitors = [
            Monitor::new(psi_f.grid(), 2),
            Monitor::new(psi_f.grid(), 2),
            Monitor::new(psi_f.grid(), 2),
        ];
        Ok(ReactiveRun {
            psi_f,
            psi_g,
            stoich,
            monitors,
        })
    }

    fn sample(&mut self) -> Result<(), BenchError> {
        let s = species_from_fields(self.psi_f.concentration(), self.psi_g.concentration(), self.stoich)?;
        let (step, t) = (self.psi_f.step_index(), self.psi_f.time());
        let grid = self.psi_f.grid();
        for (m, u) in self.monitors.iter_mut().zip([&s.c, &s.a, &s.b]) {
            m.record(step, t, u, grid)?;
        }
        Ok(())
    }

    fn run(&mut self, every: usize, mut flow: Option<&mut FlowSolver>) -> Result<(), BenchError> {
        self.sample()?;
        while !self.psi_f.is_finished() {
            if let Some(fl) = flow.as_deref_mut() {
                fl.step();
                let v = fl.velocity();
                self.psi_f.set_velocity(&v)?;
                self.psi_g.set_velocity(&v)?;
            }
            self.psi_f.step()?;
            self.psi_g.step()?;
            if self.psi_f.step_index().is_multiple_of(every) || self.psi_f.is_finished() {
                self.sample()?;
            }
        }
        Ok(())
    }

    fn finish(self, out: &mut RunOutput) -> Result<(), BenchError> {
        let grid = self.psi_f.grid().clone();
        let mask = grid.fluid_mask();
        let (pf, pg) = (self.psi_f.concentration(), self.psi_g.concentration());
        let s = species_from_fields(pf, pg, self.stoich)?;
        out.attribution = Some(attribute_product_negativity(pf, pg, &s.c, &mask, self.stoich, DEFAULT_TOL));
        for (name, values) in [("C", s.c), ("A", s.a), ("B", s.b), ("psi_F", pf.to_vec()), ("psi_G", pg.to_vec())] {
            out.fields.push(FinalField {
                name: name.into(),
                values,
            });
        }
        for (name, m) in ["C", "A", "B"].into_iter().zip(self.monitors) {
            let mut report = m.into_report();
            report.check_non_negativity(DEFAULT_TOL);
            out.series.push(Series {
                name: name.into(),
                report,
            });
        }
        out.grid = grid;
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn invariant_problems(
    grid: &Grid,
    sc: &Scenario,
    diffusion: DiffusionSpec,
    velocity: Vec<[f64; 2]>,
    stoich: Stoichiometry,
    inlet: (Vec<usize>, Vec<usize>),
    rest: BoundarySpec,
    bc: DirichletMethod,
    end_time: f64,
    u_a: f64,
    u_b: f64,
) -> (TransportProblem, TransportProblem) {
    let (upper, lower) = inlet;
    let top = to_invariants(u_a, 0.0, 0.0, stoich);
    let bottom = to_invariants(0.0, u_b, 0.0, stoich);
    let make = |a: f64, b: f64| {
        let mut spec = BoundarySpec::new()
            .dirichlet(upper.clone(), bc, constant(a))
            .dirichlet(lower.clone(), bc, constant(b));
        spec = spec.append(rest.clone());
        TransportProblem {
            grid: grid.clone(),
            model: build_lattice(sc.lattice.kind()),
            diffusion: diffusion.clone(),
            scheme: scheme_for(sc.method),
            velocity: Some(velocity.clone()),
            source: None,
            boundary: spec,
            initial: vec![0.0; grid.len()],
            end_time,
        }
    };
    (make(top.0, bottom.0), make(top.1, bottom.1))
}

fn split_inlet(grid: &Grid, y_mid: f64) -> (Vec<usize>, Vec<usize>) {
    column(grid, 0).partition(|&n| grid.position(n)[1] >= y_mid - 1e-9)
}

fn run_porous(sc: &Scenario, req: &RunRequest, out: &mut RunOutput) -> Result<(), BenchError> {
    let Physics::Porous {
        rho,
        mu,
        inlet,
        diffusivity,
        u_a,
        u_b,
        stoich,
    } = &sc.physics
    else {
        unreachable!()
    };
    let stoich = Stoichiometry::new(stoich[0], stoich[1], stoich[2])?;
    let mut grid = Grid::rectangle(sc.domain[0], sc.domain[1], out.case.dx, out.case.dt)?;
    let mask = match &req.mask {
        Some(m) => m.clone(),
        None => Mask::parse(DEFAULT_POROUS_MASK)?,
    };
    mask.apply(&mut grid);
    let cfg = FlowConfig {
        mu: *mu,
        rho0: *rho,
        inlet: *inlet,
        ..FlowConfig::default()
    };
    let mut flow = FlowSolver::new(&grid, cfg)?;
    let velocity = if req.coevolve {
        out.notes.push("flow advanced together with the species from rest".into());
        vec![[0.0, 0.0]; grid.len()]
    } else {
        let steady = flow.run_to_steady()?;
        out.flow = Some(flow_summary(&grid, &steady));
        if steady.mach_warning() {
            out.notes.push(format!("flow Mach number reached {:.3}", steady.max_mach));
        }
        steady.velocity
    };
    out.notes.push("species leave through a zero-gradient outflow on the right".into());
    let (nx, ny) = (grid.nx, grid.ny);
    let rest = BoundarySpec::new()
        .outflow(column(&grid, nx - 1).collect())
        .neumann(row(&grid, 0).chain(row(&grid, ny - 1)).collect(), constant(0.0));
    let inlet_nodes = split_inlet(&grid, sc.domain[1] / 2.0);
    let (f, g) = invariant_problems(
        &grid,
        sc,
        DiffusionSpec::Scalar(*diffusivity),
        velocity,
        stoich,
        inlet_nodes,
        rest,
        req.bc,
        out.end_time,
        *u_a,
        *u_b,
    );
    let mut run = ReactiveRun::new(f, g, stoich)?;
    run.run(out.sample_every, req.coevolve.then_some(&mut flow))?;
    if req.coevolve {
        let snap = flow.snapshot();
        out.flow = Some(flow_summary(&grid, &snap));
    }
    run.finish(out)
}

fn flow_summary(grid: &Grid, flow: &FlowField) -> FlowSummary {
    FlowSummary {
        steps: flow.steps,
        max_mach: flow.max_mach,
        inlet_flux: column_mass_flux(grid, flow, 0),
        outlet_flux: column_mass_flux(grid, flow, grid.nx - 1),
        divergence_rms: divergence_rms(grid, &flow.velocity),
    }
}

fn run_stream_function(sc: &Scenario, req: &RunRequest, out: &mut RunOutput) -> Result<(), BenchError> {
    let Physics::StreamFunction {
        p,
        q,
        alpha,
        base,
        beta_t,
        beta_l,
        u_a,
        u_b,
        stoich,
    } = &sc.physics
    else {
        unreachable!()
    };
    let stoich = Stoichiometry::new(stoich[0], stoich[1], stoich[2])?;
    let grid = Grid::rectangle(sc.domain[0], sc.domain[1], out.case.dx, out.case.dt)?;
    let sf = StreamFunction {
        p: *p,
        q: *q,
        alpha: *alpha,
        lx: sc.domain[0],
        ly: sc.domain[1],
    };
    let velocity: Vec<[f64; 2]> = (0..grid.len())
        .map(|n| {
            let x = grid.position(n);
            sf.velocity(x[0], x[1])
        })
        .collect();
    let tensors = velocity.iter().map(|&v| dispersion_tensor(v, *base, *beta_t, *beta_l)).collect();
    let (nx, ny) = (grid.nx, grid.ny);
    let rest = BoundarySpec::new().neumann(
        column(&grid, nx - 1).chain(row(&grid, 0)).chain(row(&grid, ny - 1)).collect(),
        constant(0.0),
    );
    let inlet_nodes = split_inlet(&grid, sc.domain[1] / 2.0);
    let (f, g) = invariant_problems(
        &grid,
        sc,
        DiffusionSpec::Field(tensors),
        velocity,
        stoich,
        inlet_nodes,
        rest,
        req.bc,
        out.end_time,
        *u_a,
        *u_b,
    );
    let mut run = ReactiveRun::new(f, g, stoich)?;
    run.run(out.sample_every, None)?;
    run.finish(out)
}
