//! Property checks through the public API.

use nalgebra::DMatrix;
use proptest::prelude::*;

use qlre_core::dynamics::{build_realistic, evolve, lindblad_rhs, EvolveOptions, Reservoir};
use qlre_core::hilbert::{partial_trace, Backend, BasisDescriptor, DensityMatrix, C64};
use qlre_core::oracle::chain_reduced_end_state;
use qlre_core::run::run;
use qlre_core::scenario::{
    build_initial_state, mixed_weights, preset, sweep, DomainSpec, InitialState, MixedBasis,
    ReservoirSpec, ScenarioConfig,
};

/// Random density matrix `A A† / tr` on `basis`.
fn random_state(basis: &BasisDescriptor, entries: &[f64]) -> DensityMatrix {
    let d = basis.dim();
    let a = DMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        C64::new(entries[k % entries.len()], entries[(k + 1) % entries.len()])
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityMatrix::new(basis.clone(), m / tr).unwrap()
}

fn chain_config(pops: [usize; 3], initial: [InitialState; 3]) -> ScenarioConfig {
    let domains: Vec<DomainSpec> = ["A", "B", "C"]
        .iter()
        .zip(pops)
        .zip(initial)
        .map(|((l, n), s)| DomainSpec::new(l, n, s))
        .collect();
    let json = serde_json::json!({
        "name": "prop",
        "domains": domains,
        "reservoirs": [ReservoirSpec::between(&["A", "B"]), ReservoirSpec::between(&["B", "C"])],
    });
    serde_json::from_value(json).unwrap()
}

fn initial_strategy(n: usize) -> impl Strategy<Value = InitialState> {
    prop_oneof![
        Just(InitialState::Ground),
        Just(InitialState::Excited),
        (0..=n).prop_map(InitialState::Dicke),
        (0.0f64..1.0).prop_map(move |t| {
            let d = (1usize << n) as f64;
            let f0 = 1.0 / d + t * (1.0 - 1.0 / d);
            let (a, b) = mixed_weights(f0, n, MixedBasis::Full).unwrap();
            InitialState::Mixed { a, b }
        }),
    ]
}

fn config_strategy() -> impl Strategy<Value = ScenarioConfig> {
    (1usize..4, 1usize..4, 1usize..3).prop_flat_map(|(na, nb, nc)| {
        (initial_strategy(na), initial_strategy(nb), initial_strategy(nc))
            .prop_map(move |(a, b, c)| chain_config([na, nb, nc], [a, b, c]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_trace_is_linear_and_trace_preserving(
        e1 in prop::collection::vec(-1.0f64..1.0, 50),
        e2 in prop::collection::vec(-1.0f64..1.0, 50),
        w in 0.0f64..1.0,
        pops in prop::collection::vec(1usize..3, 2..4),
        full in any::<bool>(),
        keep_mask in 1u8..7,
    ) {
        let backend = if full { Backend::Full } else { Backend::Collective };
        let basis = BasisDescriptor::new(backend, &pops).unwrap();
        let keep: Vec<usize> = (0..pops.len()).filter(|i| keep_mask & (1 << i) != 0).collect();
        prop_assume!(!keep.is_empty());
        let a = random_state(&basis, &e1);
        let b = random_state(&basis, &e2);
        let mix = DensityMatrix::mixture(&[(w, &a), (1.0 - w, &b)]).unwrap();
        let lhs = partial_trace(&mix, &keep).unwrap();
        let ra = partial_trace(&a, &keep).unwrap();
        let rb = partial_trace(&b, &keep).unwrap();
        let rhs = ra.matrix() * C64::new(w, 0.0) + rb.matrix() * C64::new(1.0 - w, 0.0);
        prop_assert!((lhs.matrix() - rhs).norm() < 1e-12);
        prop_assert!((lhs.trace() - 1.0).abs() < 1e-12);
        prop_assert!(lhs.validate().is_ok());
    }

    #[test]
    fn initial_states_are_valid(cfg in config_strategy()) {
        let rho = build_initial_state(&cfg).unwrap();
        prop_assert!(rho.validate().is_ok());
        prop_assert_eq!(rho.dim(), cfg.resolve().unwrap().dim());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_keeps_a_density_matrix(
        cfg in config_strategy(),
        nbar in 0.0f64..0.5,
        dep in 0.0f64..0.2,
        individual in any::<bool>(),
    ) {
        let res = cfg.resolve().unwrap();
        let rho0 = res.initial_state().unwrap();
        let basis = if individual || dep > 0.0 { rho0.basis().to_full().unwrap() } else { rho0.basis().clone() };
        let rho0 = if basis.backend() == rho0.basis().backend() { rho0 } else { rho0.to_full().unwrap() };
        let reservoirs = [Reservoir::new(vec![0, 1]), Reservoir::with_rate(vec![1, 2], 0.5)];
        let eq = build_realistic(&basis, &reservoirs, nbar, individual, dep).unwrap();
        let opts = EvolveOptions {
            t_max: 1.0,
            sample_dt: 0.25,
            keep: Some(vec![0, 1, 2]),
            ..EvolveOptions::default()
        };
        let traj = evolve(&eq, &rho0, &opts, &[]).unwrap();
        prop_assert!(traj.max_trace_drift < 1e-9);
        for snap in &traj.snapshots {
            prop_assert!(snap.validate().is_ok());
            let rhs = lindblad_rhs(&eq, snap).unwrap();
            prop_assert!(rhs.trace().norm() < 1e-12);
            prop_assert!((&rhs - rhs.adjoint()).norm() < 1e-12);
        }
    }
}

#[test]
fn separable_configurations_at_four_spins_settle() {
    for base in preset("appA-initial-states").unwrap() {
        let cfg = &sweep(&base, "N_B", &[4.0]).unwrap()[0];
        let out = run(cfg).unwrap();
        let ss = out.summary.steady_state.unwrap();
        assert!(ss.residual < 1e-10, "{}: {}", cfg.name, ss.residual);
        assert!(ss.time <= cfg.t_max + 200.0);
        if base.name.ends_with("_ddd") {
            let res = cfg.resolve().unwrap();
            let rho0 = res.initial_state().unwrap();
            let rhs = lindblad_rhs(&res.master_equation().unwrap(), &rho0).unwrap();
            assert_eq!(rhs.norm(), 0.0);
            assert_eq!(out.final_state.trace_distance(&rho0).unwrap(), 0.0);
        }
    }
}

#[test]
fn reduced_end_states_match_the_closed_form_family() {
    for cfg in preset("appB-oracle").unwrap() {
        let nb = cfg.domains[1].population;
        let out = run(&cfg).unwrap();
        let reduced = out.final_state.partial_trace(&[0, 2]).unwrap().to_full().unwrap();
        let family = chain_reduced_end_state(nb).unwrap();
        let d = reduced.trace_distance(&family).unwrap();
        assert!(d < 1e-7, "N_B = {nb}: {d:.3e}");
    }
}

#[test]
fn presets_report_their_size() {
    for name in qlre_core::scenario::PRESET_NAMES {
        for cfg in preset(name).unwrap() {
            let res = cfg.resolve().unwrap();
            assert_eq!(res.density_matrix_bytes(), 16 * (res.dim() as u128).pow(2));
        }
    }
}
