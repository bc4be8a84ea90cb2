use super::*;
use crate::hilbert::{collective_jz, embed, product_state, LocalState, PureState};
use crate::observables::Observable;
use nalgebra::DVector;
use proptest::prelude::*;

fn chain(backend: Backend, nb: usize) -> BasisDescriptor {
    BasisDescriptor::new(backend, &[1, nb, 1]).unwrap()
}

fn chain_reservoirs() -> Vec<Reservoir> {
    vec![Reservoir::new(vec![0, 1]), Reservoir::new(vec![1, 2])]
}

fn excitations(basis: &BasisDescriptor, ks: &[usize]) -> DensityMatrix {
    let locals: Vec<LocalState> = ks.iter().map(|&k| LocalState::Excitations(k)).collect();
    product_state(basis, &locals).unwrap()
}

#[test]
fn single_qubit_decays_as_exp_minus_two_tau() {
    let basis = BasisDescriptor::qubits(1);
    let eq = build_collective_zero_t(&basis, &[Reservoir::new(vec![0])]).unwrap();
    let rho0 = excitations(&basis, &[1]);
    let opts = EvolveOptions {
        t_max: 3.0,
        sample_dt: 0.25,
        ..Default::default()
    };
    let traj = evolve(&eq, &rho0, &opts, &[Observable::JzNormalized { domain: 0 }]).unwrap();
    let jz = traj.series("jz_A").unwrap();
    for (t, v) in traj.times.iter().zip(jz) {
        // ⟨σz⟩/2 = p − 1/2
        let p = v + 0.5;
        assert!((p - (-2.0 * t).exp()).abs() < 1e-9, "t={t} p={p}");
    }
    assert_eq!(traj.times.len(), 13);
    assert!(traj.max_trace_drift < 1e-8);
}

#[test]
fn ground_state_is_stationary() {
    for backend in [Backend::Collective, Backend::Full] {
        let basis = chain(backend, 3);
        let eq = build_collective_zero_t(&basis, &chain_reservoirs()).unwrap();
        let rho = excitations(&basis, &[0, 0, 0]);
        assert!(lindblad_rhs(&eq, &rho).unwrap().norm() < 1e-14);
        let ss = steady_state(&eq, &rho, &SteadyStateOptions::default()).unwrap();
        assert_eq!(ss.elapsed_scaled_time, 0.0);
        assert!(ss.rho.trace_distance(&rho).unwrap() < 1e-15);
    }
}

#[test]
fn singlet_is_dark_under_a_shared_reservoir() {
    let basis = BasisDescriptor::qubits(2);
    let eq = build_collective_zero_t(&basis, &[Reservoir::new(vec![0, 1])]).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let psi = PureState::new(
        basis,
        DVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0), C64::new(0.0, 0.0)]),
    )
    .unwrap();
    assert!(lindblad_rhs(&eq, &psi.projector()).unwrap().norm() < 1e-14);
}

#[test]
fn empty_equation_gives_constant_trajectory() {
    let basis = chain(Backend::Collective, 2);
    let eq = MasterEquation::empty(basis.clone());
    let rho0 = excitations(&basis, &[0, 2, 0]);
    let opts = EvolveOptions {
        t_max: 1.0,
        sample_dt: 0.5,
        ..Default::default()
    };
    let traj = evolve(&eq, &rho0, &opts, &[Observable::JzNormalized { domain: 1 }]).unwrap();
    assert_eq!(traj.series("jz_B").unwrap(), &[0.5, 0.5, 0.5]);
    assert_eq!(traj.accepted_steps, 0);
}

#[test]
fn term_counts() {
    let basis = BasisDescriptor::qubits(3);
    let res = chain_reservoirs();
    assert_eq!(build_collective_zero_t(&basis, &res).unwrap().terms().len(), 2);
    assert_eq!(build_realistic(&basis, &res, 0.3, false, 0.0).unwrap().terms().len(), 4);
    assert_eq!(build_realistic(&basis, &res, 0.3, true, 0.1).unwrap().terms().len(), 13);
    assert_eq!(build_realistic(&basis, &res, 0.0, true, 0.0).unwrap().terms().len(), 5);
    let star = vec![
        Reservoir::new(vec![0, 3]),
        Reservoir::new(vec![1, 3]),
        Reservoir::new(vec![2, 3]),
    ];
    let sb = BasisDescriptor::new(Backend::Collective, &[1, 1, 1, 4]).unwrap();
    assert_eq!(build_realistic(&sb, &star, 0.2, false, 0.0).unwrap().terms().len(), 6);
}

#[test]
fn zero_temperature_realistic_matches_collective() {
    let basis = chain(Backend::Collective, 3);
    let a = build_collective_zero_t(&basis, &chain_reservoirs()).unwrap();
    let b = build_realistic(&basis, &chain_reservoirs(), 0.0, false, 0.0).unwrap();
    assert_eq!(a.terms().len(), b.terms().len());
    for (x, y) in a.terms().iter().zip(b.terms()) {
        assert_eq!(x.rate, y.rate);
        assert_eq!(x.label, y.label);
        assert_eq!(x.jump.to_dense(), y.jump.to_dense());
    }
}

#[test]
fn local_noise_needs_full_backend() {
    let basis = chain(Backend::Collective, 2);
    for (ind, dep) in [(true, 0.0), (false, 0.1)] {
        assert!(matches!(
            build_realistic(&basis, &chain_reservoirs(), 0.0, ind, dep),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }
    assert!(build_realistic(&basis, &chain_reservoirs(), -0.1, false, 0.0).is_err());
}

#[test]
fn half_max_examples() {
    assert!((half_max_time(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    assert!((half_max_time(&times, &times).unwrap() - 0.5).abs() < 1e-15);
    assert!(matches!(
        half_max_time(&[0.0, 0.0], &[0.0, 1.0]),
        Err(Error::UndefinedResult(_))
    ));
    assert!(half_max_time(&[], &[]).is_err());
    assert!(half_max_time(&[1.0], &[0.0, 1.0]).is_err());
}

#[test]
fn steady_state_reports_non_convergence() {
    let basis = BasisDescriptor::qubits(1);
    let eq = build_collective_zero_t(&basis, &[Reservoir::new(vec![0])]).unwrap();
    let rho0 = excitations(&basis, &[1]);
    let opts = SteadyStateOptions {
        max_time: 1.0,
        ..Default::default()
    };
    assert!(matches!(
        steady_state(&eq, &rho0, &opts),
        Err(Error::ConvergenceFailure { .. })
    ));
}

#[test]
fn intro_pair_reaches_half_singlet_mixture() {
    let basis = BasisDescriptor::qubits(2);
    let eq = build_collective_zero_t(&basis, &[Reservoir::new(vec![0, 1])]).unwrap();
    let rho0 = excitations(&basis, &[1, 0]);
    let ss = steady_state(&eq, &rho0, &SteadyStateOptions::default()).unwrap();
    assert!(ss.residual < 1e-10);
    let m = ss.rho.matrix();
    assert!((m[(3, 3)].re - 0.5).abs() < 1e-9);
    assert!((m[(1, 1)].re - 0.25).abs() < 1e-9);
    assert!((m[(1, 2)].re + 0.25).abs() < 1e-9);
}

#[test]
fn superradiant_relaxation_speeds_up_with_population() {
    // Time for ⟨Jz_B⟩/N_B to fall below zero from the excited domain.
    let mut crossings = Vec::new();
    for nb in [3, 6, 12] {
        let basis = chain(Backend::Collective, nb);
        let eq = build_collective_zero_t(&basis, &chain_reservoirs()).unwrap();
        let rho0 = excitations(&basis, &[0, nb, 0]);
        let opts = EvolveOptions {
            t_max: 3.0,
            sample_dt: 0.01,
            ..Default::default()
        };
        let traj = evolve(&eq, &rho0, &opts, &[Observable::JzNormalized { domain: 1 }]).unwrap();
        let jz = traj.series("jz_B").unwrap();
        let i = jz.iter().position(|&v| v < 0.0).unwrap();
        crossings.push(traj.times[i]);
    }
    assert!(crossings[0] > crossings[1] && crossings[1] > crossings[2], "{crossings:?}");
}

#[test]
fn snapshots_follow_keep() {
    let basis = chain(Backend::Collective, 2);
    let eq = build_collective_zero_t(&basis, &chain_reservoirs()).unwrap();
    let rho0 = excitations(&basis, &[0, 2, 0]);
    let opts = EvolveOptions {
        t_max: 1.0,
        sample_dt: 0.1,
        keep: Some(vec![0, 2]),
        ..Default::default()
    };
    let traj = evolve(&eq, &rho0, &opts, &[]).unwrap();
    assert_eq!(traj.snapshots.len(), traj.times.len());
    assert!(traj.snapshots.iter().all(|s| s.dim() == 4));
    assert!(traj.observables.is_empty());
    for s in &traj.snapshots {
        s.validate().unwrap();
    }
}

#[test]
fn evolve_rejects_bad_options() {
    let basis = BasisDescriptor::qubits(1);
    let eq = MasterEquation::empty(basis.clone());
    let rho0 = excitations(&basis, &[1]);
    let bad = EvolveOptions {
        sample_dt: 0.0,
        ..Default::default()
    };
    assert!(evolve(&eq, &rho0, &bad, &[]).is_err());
    let other = excitations(&BasisDescriptor::qubits(2), &[1, 1]);
    assert!(evolve(&eq, &other, &EvolveOptions::default(), &[]).is_err());
}

fn random_chain_state(backend: Backend, ks: &[usize; 3], nb: usize) -> (MasterEquation, DensityMatrix) {
    let basis = chain(backend, nb);
    let eq = build_collective_zero_t(&basis, &chain_reservoirs()).unwrap();
    let rho = excitations(&basis, &[ks[0] % 2, ks[1] % (nb + 1), ks[2] % 2]);
    (eq, rho)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rhs_is_hermitian_and_traceless(ks in prop::array::uniform3(0usize..5), nb in 1usize..4,
                                      nbar in 0.0f64..1.0, dep in 0.0f64..0.3) {
        let basis = chain(Backend::Full, nb);
        let eq = build_realistic(&basis, &chain_reservoirs(), nbar, true, dep).unwrap();
        let (_, rho0) = random_chain_state(Backend::Full, &ks, nb);
        // mix in a coherent superposition so off-diagonals are exercised
        let dim = basis.dim();
        let amps: Vec<C64> = (0..dim).map(|i| C64::new((i as f64).cos(), (i as f64 * 0.7).sin())).collect();
        let psi = PureState::normalized(basis.clone(), DVector::from_vec(amps)).unwrap();
        let rho = DensityMatrix::mixture(&[(0.5, &rho0), (0.5, &psi.projector())]).unwrap();
        let d = lindblad_rhs(&eq, &rho).unwrap();
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!((&d - d.adjoint()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn total_excitation_never_increases(ks in prop::array::uniform3(0usize..6), nb in 1usize..5) {
        let (eq, rho0) = random_chain_state(Backend::Collective, &ks, nb);
        let basis = eq.basis().clone();
        let jz: Vec<Operator> = (0..3)
            .map(|m| embed(&collective_jz(basis.domain_pops()[m], Backend::Collective).unwrap(), &basis, m).unwrap())
            .collect();
        let opts = EvolveOptions { t_max: 2.0, sample_dt: 0.1, keep: None, ..Default::default() };
        let obs: Vec<Observable> = (0..3).map(|m| Observable::JzNormalized { domain: m }).collect();
        let traj = evolve(&eq, &rho0, &opts, &obs).unwrap();
        let pops = basis.domain_pops();
        let total: Vec<f64> = (0..traj.times.len())
            .map(|i| (0..3).map(|m| traj.observables[m].1[i] * pops[m] as f64).sum())
            .collect();
        for w in total.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
        let direct: f64 = jz.iter().map(|op| expectation(&traj.final_state, op).unwrap()).sum();
        prop_assert!((direct - total[total.len() - 1]).abs() < 1e-10);
    }
}
