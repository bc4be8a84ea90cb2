use super::*;
use crate::hilbert::Backend;

fn chain(nb: usize) -> ScenarioConfig {
    preset("fig3a").unwrap()[0].clone().with_population(1, nb)
}

impl ScenarioConfig {
    fn with_population(mut self, m: usize, n: usize) -> Self {
        self.domains[m].population = n;
        self
    }
}

#[test]
fn nbar_zero_temperature_is_exactly_zero() {
    assert_eq!(bose_einstein_nbar(10e9, 0.0).unwrap(), 0.0);
}

#[test]
fn nbar_is_one_at_ln2() {
    let t = PLANCK * 10e9 / (BOLTZMANN * std::f64::consts::LN_2);
    assert!((bose_einstein_nbar(10e9, t).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn nbar_matches_high_precision_values() {
    // 50-digit evaluations of 1/expm1(hf/kT) at f = 10 GHz.
    let cases = [
        (0.48, 0.582_121_915_470_478_7),
        (0.2, 0.099_810_307_495_377_32),
        (0.1, 0.008_304_373_364_239_452),
        (0.05, 6.783_594_691_135_248e-5),
    ];
    for (t, want) in cases {
        let got = bose_einstein_nbar(10e9, t).unwrap();
        assert!(((got - want) / want).abs() < 1e-13, "T={t}: {got} vs {want}");
    }
}

#[test]
fn nbar_rejects_bad_inputs() {
    assert!(bose_einstein_nbar(10e9, -1.0).is_err());
    assert!(bose_einstein_nbar(0.0, 1.0).is_err());
    assert!(bose_einstein_nbar(10e9, f64::NAN).is_err());
}

#[test]
fn json_round_trip_and_defaults() {
    let text = r#"{
        "name": "pair",
        "domains": [
            {"population": 1, "initial": "excited"},
            {"population": 3, "initial": {"dicke": 1}}
        ],
        "reservoirs": [{"domains": [0, "B"], "rate": 0.5}],
        "observables": ["log_negativity(A|B)"]
    }"#;
    let cfg = ScenarioConfig::from_json(text).unwrap();
    assert_eq!(cfg.t_max, 10.0);
    assert_eq!(cfg.sample_dt, 0.05);
    assert_eq!(cfg.backend, BackendChoice::Auto);
    assert!(!cfg.steady_state);
    assert_eq!(cfg.domains[1].initial, InitialState::Dicke(1));
    let back = ScenarioConfig::from_json(&cfg.to_json_pretty()).unwrap();
    assert_eq!(back, cfg);
    let res = cfg.resolve().unwrap();
    assert_eq!(res.labels, ["A", "B"]);
    assert_eq!(res.reservoirs[0].domains, [0, 1]);
    assert_eq!(res.reservoirs[0].rate, 0.5);
    assert_eq!(res.column_names(), ["log_negativity_A|B"]);
}

#[test]
fn mixed_initial_parses() {
    let cfg: InitialState = serde_json::from_str(r#"{"mixed": {"a": 0.5, "b": 0.25}}"#).unwrap();
    assert_eq!(cfg, InitialState::Mixed { a: 0.5, b: 0.25 });
    assert!(serde_json::from_str::<InitialState>(r#"{"mixed": {"a": 0.5, "b": 0.25, "c": 1}}"#).is_err());
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v: serde_json::Value = serde_json::to_value(&preset("intro-pair").unwrap()[0]).unwrap();
    v["colour"] = serde_json::json!("blue");
    let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");

    let mut v: serde_json::Value = serde_json::to_value(&preset("intro-pair").unwrap()[0]).unwrap();
    v["domains"][0]["spin"] = serde_json::json!(1);
    assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
}

fn field_of(cfg: &ScenarioConfig) -> String {
    match cfg.resolve() {
        Err(Error::InvalidArgument(msg)) => msg,
        other => panic!("expected an invalid-argument error, got {other:?}"),
    }
}

#[test]
fn validation_names_the_failing_field() {
    let ok = chain(3);
    let mut c = ok.clone();
    c.domains.truncate(1);
    assert!(field_of(&c).starts_with("domains:"));

    let mut c = ok.clone();
    c.domains[1].population = 0;
    assert!(field_of(&c).starts_with("domains[1].population"));

    let mut c = ok.clone();
    c.domains[2].initial = InitialState::Dicke(2);
    assert!(field_of(&c).starts_with("domains[2].initial"));

    let mut c = ok.clone();
    c.domains[1].initial = InitialState::Mixed { a: 0.5, b: 0.5 };
    assert!(field_of(&c).starts_with("domains[1].initial"));

    let mut c = ok.clone();
    c.reservoirs[1].domains.push(DomainRef::Label("Q".into()));
    assert!(field_of(&c).starts_with("reservoirs[1].domains"));

    let mut c = ok.clone();
    c.reservoirs[0].domains.push(DomainRef::Index(1));
    assert!(field_of(&c).contains("listed twice"));

    let mut c = ok.clone();
    c.reservoirs[0].rate = -1.0;
    assert!(field_of(&c).starts_with("reservoirs[0].rate"));

    let mut c = ok.clone();
    c.temperature = Some(Temperature { kelvin: -0.1, omega0_over_2pi_hz: 1e10 });
    assert!(field_of(&c).starts_with("temperature"));

    let mut c = ok.clone();
    c.nbar = Some(0.1);
    c.temperature = Some(Temperature { kelvin: 0.1, omega0_over_2pi_hz: 1e10 });
    assert!(field_of(&c).starts_with("nbar"));

    let mut c = ok.clone();
    c.gamma_dep_over_gamma = -0.1;
    assert!(field_of(&c).starts_with("gamma_dep_over_gamma"));

    let mut c = ok.clone();
    c.sample_dt = 0.0;
    assert!(field_of(&c).starts_with("sample_dt"));

    let mut c = ok.clone();
    c.observables.push("eof(A,B)".into());
    assert!(field_of(&c).starts_with("observables[2]"));

    let mut c = ok.clone();
    c.name = "a/b".into();
    assert!(field_of(&c).starts_with("name"));

    let mut c = ok.clone();
    c.domains[2].label = Some("A".into());
    assert!(field_of(&c).starts_with("domains[2].label"));
}

#[test]
fn backend_auto_selection() {
    let c = chain(4);
    assert_eq!(c.backend().unwrap(), Backend::Collective);
    let mut d = c.clone();
    d.gamma_dep_over_gamma = 0.1;
    assert_eq!(d.backend().unwrap(), Backend::Full);
    let mut d = c.clone();
    d.include_individual = true;
    assert_eq!(d.backend().unwrap(), Backend::Full);
    let mut d = c.clone();
    d.domains[1].initial = InitialState::Mixed { a: 0.5, b: 0.5 / 16.0 };
    assert_eq!(d.backend().unwrap(), Backend::Full);
    d.mixed_basis = MixedBasis::Symmetric;
    d.domains[1].initial = InitialState::Mixed { a: 0.5, b: 0.1 };
    assert_eq!(d.backend().unwrap(), Backend::Collective);
    let mut d = c.clone();
    d.include_individual = true;
    d.backend = BackendChoice::Collective;
    assert!(matches!(d.resolve(), Err(Error::UnsupportedConfiguration(_))));
}

#[test]
fn full_backend_spin_cap() {
    let mut c = chain(12);
    c.include_individual = true;
    let err = c.resolve().unwrap_err();
    assert!(err.to_string().starts_with("invalid argument: allow_large"), "{err}");
    c.allow_large = true;
    let res = c.resolve().unwrap();
    assert_eq!(res.dim(), 1 << 14);
    assert_eq!(res.density_matrix_bytes(), 16 * (1u128 << 28));
}

#[test]
fn every_preset_resolves() {
    for name in PRESET_NAMES {
        let configs = preset(name).unwrap();
        assert!(!configs.is_empty(), "{name}");
        for cfg in configs {
            let res = cfg.resolve().unwrap_or_else(|e| panic!("{name}/{}: {e}", cfg.name));
            assert!(res.dim() > 0);
            assert!(!res.observables.is_empty());
        }
    }
}

#[test]
fn preset_contents() {
    let fig5a = preset("fig5a-dephasing").unwrap();
    let rates: Vec<f64> = fig5a.iter().map(|c| c.gamma_dep_over_gamma).collect();
    assert_eq!(rates, [0.0, 0.02, 0.05, 0.1, 0.2]);
    assert!(fig5a.iter().all(|c| c.backend().unwrap() == Backend::Full));

    let pops = |name: &str| -> Vec<usize> {
        preset(name).unwrap()[0].domains.iter().map(|d| d.population).collect()
    };
    assert_eq!(pops("fig4-chain4"), [1, 6, 6, 1]);
    assert_eq!(pops("fig4-chain5"), [1, 4, 4, 4, 1]);

    let star = &preset("fig6-star").unwrap()[0];
    assert_eq!(star.domains[3].population, 11);
    assert_eq!(star.domains[3].initial, InitialState::Excited);
    assert_eq!(star.reservoirs.len(), 3);

    let nb: Vec<usize> = preset("fig3a")
        .unwrap()
        .iter()
        .map(|c| c.domains[1].population)
        .collect();
    assert_eq!(nb, [3, 6, 9, 12]);
    assert_eq!(preset("fig3b").unwrap().len(), 11);
    assert_eq!(preset("appA-initial-states").unwrap().len(), 8);
    assert_eq!(preset("appB-oracle").unwrap().len(), 8);

    let intro = &preset("intro-pair").unwrap()[0];
    assert_eq!(intro.domains[0].initial, InitialState::Excited);
    assert_eq!(intro.domains[1].initial, InitialState::Ground);
}

#[test]
fn unknown_preset_lists_names() {
    let err = preset("fig9").unwrap_err().to_string();
    for name in PRESET_NAMES {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn initial_states_are_valid_products() {
    let res = chain(3).resolve().unwrap();
    let rho = res.initial_state().unwrap();
    rho.validate().unwrap();
    // |↓⟩|↑↑↑⟩|↓⟩ on collective dims (2, 4, 2): index 1·8 + 0·2 + 1.
    assert!((rho.population(9) - 1.0).abs() < 1e-15);

    let mut appb = chain(3);
    appb.domains[0].initial = InitialState::Excited;
    appb.domains[1].initial = InitialState::Ground;
    let rho = build_initial_state(&appb).unwrap();
    // |↑⟩|↓↓↓⟩|↓⟩: index 0·8 + 3·2 + 1.
    assert!((rho.population(7) - 1.0).abs() < 1e-15);
}

#[test]
fn mixed_preparation_has_requested_fidelity() {
    for nb in 1..=4 {
        for f0 in [0.6, 0.75, 1.0] {
            let mut c = chain(nb);
            let (a, b) = mixed_weights(f0, nb, MixedBasis::Full).unwrap();
            assert!((a + b * (1 << nb) as f64 - 1.0).abs() < 1e-14);
            c.domains[1].initial = InitialState::Mixed { a, b };
            let res = c.resolve().unwrap();
            let rho = res.initial_state().unwrap();
            rho.validate().unwrap();
            let rho_b = rho.partial_trace(&[1]).unwrap();
            assert!((rho_b.population(0) - f0).abs() < 1e-14, "nb={nb} f0={f0}");
        }
    }
}

#[test]
fn symmetric_mixed_preparation() {
    for backend in [BackendChoice::Collective, BackendChoice::Full] {
        let mut c = chain(3);
        c.mixed_basis = MixedBasis::Symmetric;
        c.backend = backend;
        let (a, b) = mixed_weights(0.7, 3, MixedBasis::Symmetric).unwrap();
        c.domains[1].initial = InitialState::Mixed { a, b };
        let rho = build_initial_state(&c).unwrap();
        rho.validate().unwrap();
        let rho_b = rho.partial_trace(&[1]).unwrap();
        assert!((rho_b.population(0) - 0.7).abs() < 1e-14);
        assert!((rho_b.trace() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn sweeps() {
    let base = chain(3);
    let configs = sweep(&base, "N_B", &[2., 3., 4., 5., 6., 7., 8., 9., 10.]).unwrap();
    assert_eq!(configs.len(), 9);
    assert_eq!(configs[4].domains[1].population, 6);
    assert_eq!(configs[4].name, "fig3a_N_B_3_N_B_6");
    assert_eq!(configs[4].domains[0], base.domains[0]);
    assert!(sweep(&base, "N_B", &[2.5]).is_err());
    assert!(sweep(&base, "N_Q", &[2.0]).is_err());
    assert!(sweep(&base, "colour", &[2.0]).is_err());

    let f = sweep(&base, "F_0", &[1.0, 0.5]).unwrap();
    assert_eq!(f[0].domains[1].initial, InitialState::Mixed { a: 1.0, b: 0.0 });
    let InitialState::Mixed { a, b } = f[1].domains[1].initial else { panic!() };
    assert!((a + b - 0.5).abs() < 1e-15 && (a + 8.0 * b - 1.0).abs() < 1e-15);
    // Fidelity survives a population change.
    let g = sweep(&f[1], "N_B", &[4.0]).unwrap();
    let InitialState::Mixed { a, b } = g[0].domains[1].initial else { panic!() };
    assert!((a + b - 0.5).abs() < 1e-15 && (a + 16.0 * b - 1.0).abs() < 1e-15);

    let t = sweep(&base, "T", &[0.0, 0.48]).unwrap();
    assert_eq!(t[1].temperature.unwrap().omega0_over_2pi_hz, 10e9);
    assert!((t[1].resolve().unwrap().nbar - 0.582_121_915_470_478_7).abs() < 1e-12);
    assert!(sweep(&base, "T", &[-1.0]).is_err());

    let g = sweep(&base, "gamma_dep_over_gamma", &[0.1]).unwrap();
    assert_eq!(g[0].backend().unwrap(), Backend::Full);

    let star = preset("fig6-star").unwrap()[0].clone();
    let s = sweep(&star, "N_D", &[1.0, 2.0]).unwrap();
    assert_eq!(s[1].domains[3].population, 2);
}

#[test]
fn hash_is_stable_and_sensitive() {
    let a = chain(3);
    assert_eq!(a.hash(), chain(3).hash());
    assert_eq!(a.hash().len(), 64);
    assert_ne!(a.hash(), chain(4).hash());
}
