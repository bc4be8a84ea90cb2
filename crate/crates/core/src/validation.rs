//! Self-checks of the simulator against closed-form results.

use std::fmt;

use nalgebra::DVector;

use crate::dynamics::{
    build_collective_zero_t, evolve, lindblad_rhs, steady_state, EvolveOptions, Reservoir,
    SteadyStateOptions,
};
use crate::entanglement::{concurrence, entanglement_of_formation, eof_from_concurrence, tripartite_negativity};
use crate::error::Result;
use crate::hilbert::{fidelity_with_pure, product_state, Backend, BasisDescriptor, LocalState, PureState, C64};
use crate::observables::Observable;
use crate::oracle::{
    chain_reduced_end_state, chain_steady_state, concurrence_analytic, dark_state, ghz_state,
    intro_pair_steady, w_state, x_dark, x_reduced,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<32} {}", self.name, self.detail)
    }
}

/// Tracks the worst deviation seen by one check.
struct Check {
    name: String,
    tol: f64,
    worst: f64,
    at: String,
}

impl Check {
    fn new(name: &str, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            tol,
            worst: 0.0,
            at: String::new(),
        }
    }

    fn record(&mut self, err: f64, at: impl fmt::Display) {
        if !(err <= self.worst) {
            self.worst = err;
            self.at = at.to_string();
        }
    }

    fn finish(self) -> CheckResult {
        let passed = self.worst < self.tol;
        let at = if self.at.is_empty() {
            String::new()
        } else {
            format!(" at {}", self.at)
        };
        CheckResult {
            name: self.name,
            passed,
            detail: format!("worst {:.3e}{at} (tolerance {:.0e})", self.worst, self.tol),
        }
    }
}

fn guarded(name: &str, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult {
        name: name.to_string(),
        passed: false,
        detail: format!("error: {e}"),
    })
}

fn chain_reservoirs() -> Vec<Reservoir> {
    vec![Reservoir::new(vec![0, 1]), Reservoir::new(vec![1, 2])]
}

fn dark_state_stationarity(max_nb: usize) -> Result<CheckResult> {
    let mut check = Check::new("dark-state stationarity", 1e-10);
    for nb in 1..=max_nb {
        for backend in [Backend::Collective, Backend::Full] {
            let mut psi = dark_state(nb)?;
            if backend == Backend::Collective {
                psi = psi.to_collective()?;
            }
            let eq = build_collective_zero_t(psi.basis(), &chain_reservoirs())?;
            let r = lindblad_rhs(&eq, &psi.projector())?.norm();
            check.record(r, format!("N_B={nb} {backend}"));
        }
    }
    Ok(check.finish())
}

fn dark_state_weight(max_nb: usize) -> Result<(CheckResult, CheckResult)> {
    let mut weight = Check::new("dark-state weight N/(2N+1)", 1e-7);
    let mut conc = Check::new("steady concurrence 2N^2/(2N+1)^2", 1e-6);
    for nb in 1..=max_nb {
        let basis = BasisDescriptor::new(Backend::Collective, &[1, nb, 1])?;
        let rho0 = product_state(
            &basis,
            &[
                LocalState::Excitations(1),
                LocalState::Excitations(0),
                LocalState::Excitations(0),
            ],
        )?;
        let eq = build_collective_zero_t(&basis, &chain_reservoirs())?;
        let ss = steady_state(&eq, &rho0, &SteadyStateOptions::default())?;
        let psi = dark_state(nb)?.to_collective()?;
        weight.record(
            (fidelity_with_pure(&ss.rho, &psi)? - x_dark(nb)).abs(),
            format!("N_B={nb}"),
        );
        let oracle = chain_steady_state(nb, Backend::Collective)?;
        weight.record(ss.rho.trace_distance(&oracle)?, format!("N_B={nb} (state)"));
        let c = concurrence(&ss.rho.partial_trace(&[0, 2])?)?;
        conc.record((c - concurrence_analytic(nb)).abs(), format!("N_B={nb}"));
    }
    Ok((weight.finish(), conc.finish()))
}

fn reduced_family(max_nb: usize) -> Result<CheckResult> {
    let mut check = Check::new("closed-form family C = x", 1e-12);
    for nb in 1..=max_nb {
        let c = concurrence(&chain_reduced_end_state(nb)?)?;
        check.record((c - x_reduced(nb)).abs(), format!("N_B={nb}"));
        check.record((x_reduced(nb) - concurrence_analytic(nb)).abs(), format!("N_B={nb} (formula)"));
    }
    Ok(check.finish())
}

fn backend_equivalence(max_nb: usize) -> Result<CheckResult> {
    let mut check = Check::new("backend equivalence", 1e-8);
    let opts = EvolveOptions {
        t_max: 3.0,
        sample_dt: 0.25,
        keep: Some(vec![0, 2]),
        ..EvolveOptions::default()
    };
    let jz = [Observable::JzNormalized { domain: 1 }];
    for nb in 1..=max_nb {
        let mut runs = Vec::new();
        for backend in [Backend::Collective, Backend::Full] {
            let basis = BasisDescriptor::new(backend, &[1, nb, 1])?;
            let rho0 = product_state(
                &basis,
                &[
                    LocalState::Excitations(0),
                    LocalState::Excitations(nb),
                    LocalState::Excitations(0),
                ],
            )?;
            let eq = build_collective_zero_t(&basis, &chain_reservoirs())?;
            runs.push(evolve(&eq, &rho0, &opts, &jz)?);
        }
        let (c, f) = (&runs[0], &runs[1]);
        for (i, (a, b)) in c.snapshots.iter().zip(&f.snapshots).enumerate() {
            check.record(a.to_full()?.trace_distance(b)?, format!("N_B={nb} t={}", c.times[i]));
        }
        for (a, b) in c.observables[0].1.iter().zip(&f.observables[0].1) {
            check.record((a - b).abs(), format!("N_B={nb} jz"));
        }
    }
    Ok(check.finish())
}

fn measures() -> Result<CheckResult> {
    let mut check = Check::new("entanglement measures", 1e-9);
    let mut bell = DVector::<C64>::zeros(4);
    bell[1] = C64::new(1.0, 0.0);
    bell[2] = C64::new(1.0, 0.0);
    let bell = PureState::normalized(BasisDescriptor::qubits(2), bell)?.projector();
    check.record((entanglement_of_formation(&bell)? - 1.0).abs(), "Bell E_F");
    let product = PureState::basis_state(BasisDescriptor::qubits(2), 1)?.projector();
    check.record(concurrence(&product)?, "product C");
    let w = tripartite_negativity(&w_state().projector())?;
    check.record((w - 2f64.sqrt() / 3.0).abs(), "W N_ABC");
    check.record((tripartite_negativity(&ghz_state().projector())? - 0.5).abs(), "GHZ N_ABC");
    let pair = entanglement_of_formation(&intro_pair_steady())?;
    check.record((pair - eof_from_concurrence(0.5)?).abs(), "pair E_F");
    let limit = eof_from_concurrence(x_reduced(1000))?;
    check.record(((limit - eof_from_concurrence(0.5)?).abs() - 1e-3).max(0.0), "large-N_B limit");
    Ok(check.finish())
}

/// Runs every check with chains up to `max_nb` spins in the central domain.
///
/// Full-backend comparisons stop at five spins regardless.
pub fn oracle_suite(max_nb: usize) -> Vec<CheckResult> {
    let mut out = vec![
        guarded("entanglement measures", measures),
        guarded("closed-form family C = x", || reduced_family(max_nb)),
        guarded("dark-state stationarity", || dark_state_stationarity(max_nb)),
    ];
    match dark_state_weight(max_nb) {
        Ok((a, b)) => out.extend([a, b]),
        Err(e) => out.push(CheckResult {
            name: "dark-state weight N/(2N+1)".into(),
            passed: false,
            detail: format!("error: {e}"),
        }),
    }
    out.push(guarded("backend equivalence", || backend_equivalence(max_nb.min(5))));
    out
}
