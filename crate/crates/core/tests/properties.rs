use std::sync::Arc;

use lbm_core::boundary::{apply_dirichlet_standard, constant, BoundarySpec, DirichletMethod};
use lbm_core::lattice::{stream, Topology};
use lbm_core::mrt::{collide_mrt, kernel_for_tensor, HwParams, MomentTransform, RelaxationMatrix, YnParams};
use lbm_core::transport::{
    collide_srt, equilibrium, CollisionScheme, DiffusionSpec, Sample, TransportProblem, TransportSolver,
};
use lbm_core::{build_lattice, DistributionField, Grid, LatticeKind, LatticeScale, Tensor2};
use proptest::prelude::*;

const KINDS: [LatticeKind; 3] = [LatticeKind::D1Q3, LatticeKind::D2Q5, LatticeKind::D2Q9];

fn kind() -> impl Strategy<Value = LatticeKind> {
    (0usize..3).prop_map(|k| KINDS[k])
}

fn spd() -> impl Strategy<Value = Tensor2> {
    (1e-3f64..1.0, 1e-3f64..1.0, 0.0f64..std::f64::consts::PI).prop_map(|(a, b, th)| Tensor2::diag(a, b).rotated(th))
}

proptest! {
    #[test]
    fn streaming_conserves_the_total(k in kind(), nx in 1usize..12, ny in 1usize..12, seed in 0u64..1000) {
        let model = build_lattice(k);
        let ny = if k == LatticeKind::D1Q3 { 1 } else { ny };
        let grid = Grid::new(nx, ny, 1.0, 1.0).unwrap().with_periodic(true, true);
        let topo = Topology::new(&grid, &model);
        let mut field = DistributionField::zeros(model.q(), grid.len());
        for (i, f) in field.as_mut_slice().iter_mut().enumerate() {
            *f = (((i as u64 + 1) * (seed * 2654435761 + 97)) % 1009) as f64 / 1009.0;
        }
        let before = field.total();
        let mut sorted_before = field.as_slice().to_vec();
        stream(&mut field, &topo);
        let after = field.total();
        prop_assert!((after - before).abs() <= 1e-13 * before.abs().max(1.0));
        let mut sorted_after = field.as_slice().to_vec();
        sorted_before.sort_by(f64::total_cmp);
        sorted_after.sort_by(f64::total_cmp);
        prop_assert_eq!(sorted_before, sorted_after);
    }

    #[test]
    fn equilibrium_has_the_right_moments(
        k in kind(),
        u in 1e-3f64..10.0,
        vx in -1.0f64..1.0,
        vy in -1.0f64..1.0,
        dx in 1e-3f64..1.0,
        dt in 1e-5f64..1e-1,
    ) {
        let model = build_lattice(k);
        let scale = LatticeScale::new(&model, dx, dt);
        // keep |v| below c_s
        let vy = if k == LatticeKind::D1Q3 { 0.0 } else { vy };
        let v = [0.9 * vx * scale.cs() / 2f64.sqrt(), 0.9 * vy * scale.cs() / 2f64.sqrt()];
        let f = equilibrium(u, v, &model, &scale);
        let sum: f64 = f.iter().sum();
        prop_assert!((sum - u).abs() <= 1e-13 * u);
        for axis in 0..2 {
            let j: f64 = (0..model.q()).map(|i| f[i] * model.e(i)[axis] * scale.c).sum();
            prop_assert!((j - u * v[axis]).abs() <= 1e-13 * u * scale.c);
        }
    }

    #[test]
    fn srt_collision_adds_exactly_the_source(
        k in kind(),
        f in proptest::collection::vec(0.0f64..2.0, 9),
        tau in 0.51f64..5.0,
        g in -10.0f64..10.0,
        dt in 1e-6f64..1e-1,
        vl in -0.3f64..0.3,
    ) {
        let model = build_lattice(k);
        let f = &f[..model.q()];
        let u: f64 = f.iter().sum();
        let scale = LatticeScale::new(&model, 1.0, 1.0);
        let feq = equilibrium(u, [vl, 0.0], &model, &scale);
        let out = collide_srt(f, &feq, tau, g, dt, &model).unwrap();
        let gained: f64 = out.iter().sum::<f64>() - u;
        prop_assert!((gained - dt * g).abs() <= 1e-14 * (u + (dt * g).abs()).max(1.0));
    }

    #[test]
    fn standard_dirichlet_sets_the_concentration(up in -5.0f64..5.0, f in proptest::collection::vec(0.0f64..1.0, 9), side in 0usize..4) {
        let model = build_lattice(LatticeKind::D2Q9);
        // unknowns: the three directions entering through one edge
        let normal: [[f64; 2]; 4] = [[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]];
        let n = normal[side];
        let unknown: Vec<usize> = (0..9)
            .filter(|&i| { let e = model.e(i); e[0] * n[0] + e[1] * n[1] < 0.0 })
            .collect();
        let mut f = f.clone();
        apply_dirichlet_standard(0, &mut f, &unknown, up, &model).unwrap();
        let sum: f64 = f.iter().sum();
        prop_assert!((sum - up).abs() <= 1e-14 * up.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mrt_with_scalar_relaxation_is_srt(
        k in kind(),
        f in proptest::collection::vec(-1.0f64..2.0, 9),
        tau in 0.51f64..5.0,
        g in -1.0f64..1.0,
        vl in -0.3f64..0.3,
    ) {
        let model = build_lattice(k);
        let q = model.q();
        let f = &f[..q];
        let u: f64 = f.iter().sum();
        let scale = LatticeScale::new(&model, 1.0, 1.0);
        let feq = equilibrium(u, [vl, -0.5 * vl], &model, &scale);
        let transform = match k {
            LatticeKind::D2Q5 => MomentTransform::d2q5(),
            LatticeKind::D2Q9 => MomentTransform::d2q9(),
            _ => MomentTransform::identity(q),
        };
        let a = collide_srt(f, &feq, tau, g, 1e-2, &model).unwrap();
        let b = collide_mrt(f, &feq, &transform, &RelaxationMatrix::isotropic(tau, q), g, 1e-2, &model).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn mrt_collisions_conserve_mass(
        d in spd(),
        f in proptest::collection::vec(0.0f64..2.0, 9),
        vx in -0.2f64..0.2,
        vy in -0.2f64..0.2,
        hw in any::<bool>(),
    ) {
        let (model, scheme) = if hw {
            (build_lattice(LatticeKind::D2Q9), CollisionScheme::HuangWu(HwParams::default()))
        } else {
            (build_lattice(LatticeKind::D2Q5), CollisionScheme::YoshidaNagaoka(YnParams::default()))
        };
        let kernel = kernel_for_tensor(&model, &scheme, &d, 1e-3, 10.0).unwrap();
        let mut f = f[..model.q()].to_vec();
        let before: f64 = f.iter().sum();
        kernel.collide(&mut f, [vx, vy], None);
        let after: f64 = f.iter().sum();
        prop_assert!((after - before).abs() <= 1e-13 * before.max(1.0));
    }
}

/// A random 1D problem satisfying the hypotheses of the positivity theorem.
#[derive(Debug, Clone)]
struct PositiveLine {
    n: usize,
    d: f64,
    dx: f64,
    dt: f64,
    u0: Vec<f64>,
    left: Option<f64>,
    right: Option<f64>,
    g: f64,
    steps: usize,
}

fn positive_line() -> impl Strategy<Value = PositiveLine> {
    (5usize..60, 1e-3f64..1.0, 1e-3f64..0.1, 1.0f64..20.0).prop_flat_map(|(n, d, dx, stretch)| {
        // dt at or above dx^2 / (6 D)
        let dt = stretch * dx * dx / (6.0 * d);
        (
            proptest::collection::vec(0.0f64..3.0, n),
            proptest::option::weighted(0.8, 0.0f64..3.0),
            proptest::option::weighted(0.8, 0.0f64..3.0),
            prop_oneof![Just(0.0), 0.0f64..5.0],
            10usize..200,
        )
            .prop_map(move |(u0, left, right, g, steps)| PositiveLine {
                n,
                d,
                dx,
                dt,
                u0,
                left,
                right,
                g,
                steps,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_split_keeps_every_population_non_negative(c in positive_line()) {
        let grid = Grid::new(c.n, 1, c.dx, c.dt).unwrap();
        let mut boundary = BoundarySpec::new();
        for (node, value) in [(0, c.left), (c.n - 1, c.right)] {
            boundary = match value {
                Some(u) => boundary.dirichlet(vec![node], DirichletMethod::WeightedSplit, constant(u)),
                None => boundary.neumann(vec![node], constant(0.0)),
            };
        }
        let g = c.g;
        let problem = TransportProblem {
            grid,
            model: build_lattice(LatticeKind::D1Q3),
            diffusion: DiffusionSpec::Scalar(c.d),
            scheme: CollisionScheme::Srt,
            velocity: None,
            source: (g > 0.0).then(|| Arc::new(move |_: [f64; 2], _: f64| g) as _),
            boundary,
            initial: c.u0.clone(),
            end_time: c.steps as f64 * c.dt,
        };
        let mut solver = TransportSolver::new(problem).unwrap();
        prop_assert!(solver.field().as_slice().iter().all(|&f| f >= 0.0));
        let mut worst = f64::INFINITY;
        let mut watch = |s: &Sample<'_>| {
            worst = s.field.as_slice().iter().chain(s.u).fold(worst, |a, &b| a.min(b));
            Ok(())
        };
        solver.run(&mut [&mut watch], 1).unwrap();
        prop_assert!(worst >= 0.0, "negative value {worst:e}");
    }
}
