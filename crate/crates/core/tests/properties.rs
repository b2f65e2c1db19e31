use dynbc_core::control::observability_quotient;
use dynbc_core::dynamics::duality_sides;
use dynbc_core::geometry::Endpoints;
use dynbc_core::{
    assemble_operator, build_mesh, inner_l2, observability_constant, solve_forward, solve_hum, Arc, CgSettings,
    ControlSeries, CoupledField, DomainSpec, GramianOp, HumProblem, PowerSettings, SampleRng, Scheme, SourceSeries,
    TimeGrid, WentzellOperator,
};
use nalgebra::DVector;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = DomainSpec> {
    prop_oneof![
        (4usize..24, 0.5f64..3.0).prop_map(|(n, l)| DomainSpec::interval(l, n)),
        (2usize..6, 2usize..5, 0.5f64..2.0).prop_map(|(nr, q, r)| DomainSpec::Disk {
            radius: r,
            rings: nr,
            sectors: 4 * q,
            gamma: Arc {
                center: 0.0,
                half_width: 1.0
            },
            gamma0: Arc {
                center: 0.0,
                half_width: 2.0
            },
        }),
    ]
}

fn op_for(spec: &DomainSpec, d: f64, delta: f64) -> WentzellOperator {
    assemble_operator(&build_mesh(spec).unwrap(), d, delta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_self_adjoint_and_dissipative(
        spec in spec_strategy(), d in 0.1f64..3.0, delta in 0.1f64..3.0, seed in any::<u64>()
    ) {
        let op = op_for(&spec, d, delta);
        prop_assert!(op.symmetry_defect() <= 1e-8);
        let mut rng = SampleRng::new(seed);
        let y = rng.vector(op.dim());
        let z = rng.vector(op.dim());
        let ayz = op.inner(&op.apply(&y), &z);
        let yaz = op.inner(&y, &op.apply(&z));
        let scale = op.norm(&op.apply(&y)) * op.norm(&z) + op.norm(&y) * op.norm(&op.apply(&z));
        prop_assert!((ayz - yaz).abs() <= 1e-10 * scale);
        let form = op.inner(&op.apply(&y), &y);
        prop_assert!(form <= 1e-12 * op.norm(&op.apply(&y)) * op.norm(&y));
        prop_assert!((form + op.dissipation(&y)).abs() <= 1e-10 * op.dissipation(&y).max(1e-300));
    }

    #[test]
    fn inner_product_is_symmetric_and_positive(spec in spec_strategy(), seed in any::<u64>()) {
        let mesh = build_mesh(&spec).unwrap();
        let mut rng = SampleRng::new(seed);
        let y = CoupledField::from_nodal(&mesh, rng.vector(mesh.node_count()));
        let z = CoupledField::from_nodal(&mesh, rng.vector(mesh.node_count()));
        prop_assert!((inner_l2(&mesh, &y, &z) - inner_l2(&mesh, &z, &y)).abs() <= 1e-14);
        prop_assert!(inner_l2(&mesh, &y, &y) > 0.0);
    }

    #[test]
    fn constants_span_the_kernel(spec in spec_strategy(), c in -5.0f64..5.0) {
        let op = op_for(&spec, 1.0, 1.0);
        let y = DVector::from_element(op.dim(), c);
        prop_assert!(op.apply(&y).amax() <= 1e-9 * (1.0 + c.abs()) * op.stiffness_norm_inf());
    }

    #[test]
    fn free_flow_conserves_mass_and_dissipates_energy(
        spec in spec_strategy(), seed in any::<u64>(), cn in any::<bool>()
    ) {
        let op = op_for(&spec, 1.0, 1.0);
        let scheme = if cn { Scheme::CrankNicolson } else { Scheme::ImplicitEuler };
        let grid = TimeGrid::new(0.2, 16, scheme).unwrap();
        let mut rng = SampleRng::new(seed);
        let y0 = CoupledField::from_nodal(op.mesh(), rng.vector(op.dim()));
        let tr = solve_forward(&op, &grid, &y0, None, None).unwrap();
        let masses = tr.masses(&op);
        let norms = tr.norms(&op);
        for k in 0..16 {
            prop_assert!((masses[k + 1] - masses[0]).abs() <= 1e-10 * norms[0] * op.mesh().volume().max(1.0));
            prop_assert!(norms[k + 1] <= norms[k] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn duality_holds_with_sources_and_control(seed in any::<u64>(), cn in any::<bool>()) {
        let op = op_for(&DomainSpec::interval(1.0, 10), 1.0, 1.0);
        let scheme = if cn { Scheme::CrankNicolson } else { Scheme::ImplicitEuler };
        let grid = TimeGrid::new(0.5, 12, scheme).unwrap();
        let mut rng = SampleRng::new(seed);
        let y0 = CoupledField::from_nodal(op.mesh(), rng.vector(11));
        let src = SourceSeries::random_smooth(op.mesh(), &grid, &mut rng, false);
        let mut control = ControlSeries::zeros(op.mesh(), &grid);
        for v in &mut control.values {
            *v = rng.vector(2);
        }
        control.mask(op.mesh());
        let phi_t = CoupledField::from_nodal(op.mesh(), rng.vector(11));
        let fwd = solve_forward(&op, &grid, &y0, Some(&src), Some(&control)).unwrap();
        let adj = dynbc_core::solve_adjoint(&op, &grid, &phi_t, None).unwrap();
        let (lhs, rhs) = duality_sides(&op, &fwd, &adj, Some(&src), Some(&control));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (lhs.abs() + rhs.abs()).max(1e-12), "{} vs {}", lhs, rhs);
    }
}

#[test]
fn forward_map_is_linear() {
    let op = op_for(&DomainSpec::interval(1.0, 12), 1.0, 1.0);
    let grid = TimeGrid::new(0.4, 16, Scheme::CrankNicolson).unwrap();
    let mut rng = SampleRng::new(5);
    let a = rng.vector(13);
    let b = rng.vector(13);
    let run = |v: DVector<f64>| solve_forward(&op, &grid, &CoupledField::from_nodal(op.mesh(), v), None, None).unwrap();
    let ya = run(a.clone());
    let yb = run(b.clone());
    let yab = run(&a * 2.0 - &b * 3.0);
    let combo = ya.final_state() * 2.0 - yb.final_state() * 3.0;
    assert!((yab.final_state() - combo).amax() < 1e-12);
}

#[test]
fn observability_estimate_bounds_random_quotients() {
    let op = op_for(&DomainSpec::interval(1.0, 16), 1.0, 1.0);
    let grid = TimeGrid::new(0.5, 64, Scheme::ImplicitEuler).unwrap();
    let report = observability_constant(&op, &grid, &PowerSettings::default()).unwrap();
    assert!(report.converged && !report.singular);
    let g = GramianOp::new(&op, grid, 0.0).unwrap();
    let mut rng = SampleRng::new(77);
    for _ in 0..20 {
        let q = observability_quotient(&g, &rng.vector(17)).unwrap();
        assert!(q <= report.k_est * (1.0 + 1e-3), "{q} > {}", report.k_est);
    }
}

#[test]
fn enlarging_the_control_region_lowers_the_constant() {
    let grid = TimeGrid::new(0.5, 64, Scheme::ImplicitEuler).unwrap();
    let k = |gamma0| {
        let spec = DomainSpec::Interval {
            length: 1.0,
            cells: 16,
            gamma: Endpoints::RIGHT,
            gamma0,
        };
        observability_constant(&op_for(&spec, 1.0, 1.0), &grid, &PowerSettings::default())
            .unwrap()
            .k_est
    };
    let narrow = k(Endpoints::RIGHT);
    let wide = k(Endpoints::BOTH);
    assert!(wide <= narrow * (1.0 + 1e-3), "{wide} vs {narrow}");
}

#[test]
fn hum_control_is_linear_in_the_data() {
    let op = op_for(&DomainSpec::interval(1.0, 12), 1.0, 1.0);
    let grid = TimeGrid::new(0.5, 32, Scheme::ImplicitEuler).unwrap();
    let mut rng = SampleRng::new(3);
    let a = CoupledField::from_nodal(op.mesh(), rng.vector(13));
    let b = CoupledField::from_nodal(op.mesh(), rng.vector(13));
    let cg = CgSettings {
        tol: 1e-13,
        max_iter: 2000,
    };
    let solve = |y0: CoupledField| {
        solve_hum(&HumProblem {
            op: &op,
            grid,
            y0,
            sources: None,
            epsilon: 1e-3,
            cg,
        })
        .unwrap()
    };
    let ra = solve(a.clone());
    let rb = solve(b.clone());
    let sum = CoupledField {
        bulk: &a.bulk + &b.bulk,
        boundary: &a.boundary + &b.boundary,
    };
    let rab = solve(sum);
    let scale = ra.phi_t_star.amax() + rb.phi_t_star.amax();
    let defect = (&rab.phi_t_star - &ra.phi_t_star - &rb.phi_t_star).amax();
    assert!(defect <= 1e-8 * scale, "defect {defect}, scale {scale}");
}
