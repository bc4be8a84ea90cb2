use super::{
    mixed_weights, BackendChoice, DomainSpec, InitialState, MixedBasis, ReservoirSpec,
    ScenarioConfig, Temperature,
};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 13] = [
    "intro-pair",
    "fig1a-sweep",
    "fig3a",
    "fig3b",
    "fig4-chain4",
    "fig4-chain5",
    "fig5a-dephasing",
    "fig5b-individual",
    "fig5c-thermal",
    "fig6-star",
    "appA-initial-states",
    "appA-mixed",
    "appB-oracle",
];

/// Central-domain sizes for curves plotted as "various values".
const VARIOUS_NB: [usize; 4] = [3, 6, 9, 12];
/// Central-domain size on the full backend for local-noise runs.
const LOCAL_NOISE_NB: usize = 5;
const DEPHASING_RATES: [f64; 5] = [0.0, 0.02, 0.05, 0.1, 0.2];
const TEMPERATURES_K: [f64; 5] = [0.0, 0.05, 0.1, 0.2, 0.48];
const MODE_FREQUENCY_HZ: f64 = 10e9;
const FIDELITIES: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

use InitialState::{Excited, Ground};

fn base(name: String, domains: Vec<DomainSpec>, reservoirs: Vec<ReservoirSpec>) -> ScenarioConfig {
    ScenarioConfig {
        name,
        domains,
        reservoirs,
        nbar: None,
        temperature: None,
        include_individual: false,
        gamma_dep_over_gamma: 0.0,
        backend: BackendChoice::Auto,
        t_max: 10.0,
        sample_dt: 0.05,
        observables: Vec::new(),
        mixed_basis: MixedBasis::Full,
        steady_state: true,
        allow_large: false,
    }
}

fn observables(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Three-domain chain `A – B – C` with one reservoir per link.
fn chain3(name: String, nb: usize, initial: [InitialState; 3]) -> ScenarioConfig {
    let [a, b, c] = initial;
    let mut cfg = base(
        name,
        vec![
            DomainSpec::new("A", 1, a),
            DomainSpec::new("B", nb, b),
            DomainSpec::new("C", 1, c),
        ],
        vec![
            ReservoirSpec::between(&["A", "B"]),
            ReservoirSpec::between(&["B", "C"]),
        ],
    );
    cfg.observables = observables(&["eof(A,C)", "jz(B)"]);
    cfg
}

/// Linear chain of domains with the listed populations, inner ones excited.
fn long_chain(name: &str, pops: &[usize]) -> ScenarioConfig {
    let labels: Vec<String> = (0..pops.len())
        .map(|i| ((b'A' + i as u8) as char).to_string())
        .collect();
    let domains = pops
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (&n, l))| DomainSpec::new(l, n, if i == 1 { Excited } else { Ground }))
        .collect();
    let reservoirs = labels
        .windows(2)
        .map(|w| ReservoirSpec::between(&[&w[0], &w[1]]))
        .collect();
    let mut cfg = base(name.to_string(), domains, reservoirs);
    cfg.t_max = 60.0;
    let last = labels.last().expect("nonempty chain");
    cfg.observables = vec![format!("eof(A,{last})")];
    cfg
}

fn star(nd: usize) -> ScenarioConfig {
    let mut cfg = base(
        format!("fig6-star_N_D_{nd}"),
        vec![
            DomainSpec::new("A", 1, Ground),
            DomainSpec::new("B", 1, Ground),
            DomainSpec::new("C", 1, Ground),
            DomainSpec::new("D", nd, Excited),
        ],
        vec![
            ReservoirSpec::between(&["A", "D"]),
            ReservoirSpec::between(&["B", "D"]),
            ReservoirSpec::between(&["C", "D"]),
        ],
    );
    cfg.observables = observables(&["tripartite_negativity(A,B,C)"]);
    cfg
}

fn updown(s: &InitialState) -> char {
    match s {
        Excited => 'u',
        _ => 'd',
    }
}

/// Named scenario collections reproducing each figure.
pub fn preset(name: &str) -> Result<Vec<ScenarioConfig>> {
    let configs = match name {
        "intro-pair" => {
            let mut cfg = base(
                "intro-pair".into(),
                vec![DomainSpec::new("A", 1, Excited), DomainSpec::new("B", 1, Ground)],
                vec![ReservoirSpec::between(&["A", "B"])],
            );
            cfg.observables = observables(&["eof(A,B)", "concurrence(A,B)", "log_negativity(A|B)"]);
            vec![cfg]
        }
        "fig1a-sweep" => (1..=8)
            .map(|na| {
                let mut cfg = base(
                    format!("fig1a_N_A_{na}"),
                    vec![DomainSpec::new("A", na, Excited), DomainSpec::new("B", 1, Ground)],
                    vec![ReservoirSpec::between(&["A", "B"])],
                );
                cfg.observables = observables(&["log_negativity(A|B)", "negativity(A|B)"]);
                cfg
            })
            .collect(),
        "fig3a" => VARIOUS_NB
            .iter()
            .map(|&nb| chain3(format!("fig3a_N_B_{nb}"), nb, [Ground, Excited, Ground]))
            .collect(),
        "fig3b" => (2..=12)
            .map(|nb| {
                let mut cfg = chain3(format!("fig3b_N_B_{nb}"), nb, [Ground, Excited, Ground]);
                cfg.t_max = 20.0;
                cfg
            })
            .collect(),
        "fig4-chain4" => vec![long_chain("fig4-chain4", &[1, 6, 6, 1])],
        "fig4-chain5" => vec![long_chain("fig4-chain5", &[1, 4, 4, 4, 1])],
        "fig5a-dephasing" => DEPHASING_RATES
            .iter()
            .map(|&g| {
                let mut cfg = chain3(
                    format!("fig5a_gamma_dep_{g}"),
                    LOCAL_NOISE_NB,
                    [Ground, Excited, Ground],
                );
                cfg.gamma_dep_over_gamma = g;
                cfg.backend = BackendChoice::Full;
                cfg.steady_state = false;
                cfg.observables = observables(&["eof(A,C)"]);
                cfg
            })
            .collect(),
        "fig5b-individual" => {
            let mut cfg = chain3(
                "fig5b-individual".into(),
                LOCAL_NOISE_NB,
                [Ground, Excited, Ground],
            );
            cfg.include_individual = true;
            cfg.steady_state = false;
            cfg.observables = observables(&["eof(A,C)"]);
            vec![cfg]
        }
        "fig5c-thermal" => TEMPERATURES_K
            .iter()
            .map(|&t| {
                let mut cfg = chain3(format!("fig5c_T_{t}"), 11, [Ground, Excited, Ground]);
                cfg.temperature = Some(Temperature {
                    kelvin: t,
                    omega0_over_2pi_hz: MODE_FREQUENCY_HZ,
                });
                cfg.steady_state = false;
                cfg.observables = observables(&["eof(A,C)"]);
                cfg
            })
            .collect(),
        "fig6-star" => vec![star(11)],
        "appA-initial-states" => {
            let mut out = Vec::with_capacity(8);
            for bits in 0..8u8 {
                let pick = |k: u8| if bits & k != 0 { Excited } else { Ground };
                let init = [pick(4), pick(2), pick(1)];
                let tag: String = init.iter().map(updown).collect();
                let mut cfg = chain3(format!("appA_init_{tag}"), 10, init);
                cfg.t_max = 20.0;
                cfg.observables = observables(&["eof(A,C)"]);
                out.push(cfg);
            }
            out
        }
        "appA-mixed" => {
            let mut out = Vec::new();
            for nb in 2..=6 {
                for &f0 in &FIDELITIES {
                    let (a, b) = mixed_weights(f0, nb, MixedBasis::Full)?;
                    let mut cfg = chain3(
                        format!("appA_mixed_N_B_{nb}_F_0_{f0}"),
                        nb,
                        [Ground, InitialState::Mixed { a, b }, Ground],
                    );
                    cfg.t_max = 20.0;
                    cfg.observables = observables(&["eof(A,C)"]);
                    out.push(cfg);
                }
            }
            out
        }
        "appB-oracle" => (1..=8)
            .map(|nb| {
                let mut cfg = chain3(format!("appB_N_B_{nb}"), nb, [Excited, Ground, Ground]);
                cfg.t_max = 20.0;
                cfg.observables = observables(&["eof(A,C)", "concurrence(A,C)"]);
                cfg
            })
            .collect(),
        other => {
            return Err(Error::invalid(format!(
                "unknown preset '{other}' (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(configs)
}
