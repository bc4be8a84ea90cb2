//! Running a scenario end to end and summarising the result.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, half_max_time, steady_state, EvolveOptions, SteadyStateOptions};
use crate::error::Result;
use crate::hilbert::{fidelity_with_pure, Backend, DensityMatrix};
use crate::observables::Observable;
use crate::oracle::{dark_state, tripartite_decompose, TripartiteDecomposition};
use crate::scenario::{ResolvedScenario, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSummary {
    /// Stationary value when the run went to steady state, else the last sample.
    pub value: f64,
    pub last_sample: f64,
    pub peak: f64,
    pub peak_time: f64,
    /// First time the sampled series reaches half its peak; absent if it never rises.
    pub half_max_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    pub residual: f64,
    /// Total scaled time, including the sampled window.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub config_hash: String,
    pub backend: Backend,
    pub dim: usize,
    pub nbar: f64,
    pub samples: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_trace_drift: f64,
    pub steady_state: Option<SteadySummary>,
    pub wall_time_s: f64,
    pub observables: BTreeMap<String, ObservableSummary>,
    /// Weight of the two-reservoir dark state, for `1 – N – 1` chains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_state_weight: Option<f64>,
    /// Ground-plus-W decomposition of the first tripartite observable's qubits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tripartite: Option<TripartiteDecomposition>,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub times: Vec<f64>,
    /// Column names, in the order the observables were requested.
    pub columns: Vec<String>,
    pub series: Vec<Vec<f64>>,
    /// Steady state if requested, else the state at `t_max`.
    pub final_state: DensityMatrix,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|i| self.series[i].as_slice())
    }

    /// Summary value of an observable column.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.summary.observables.get(name).map(|o| o.value)
    }
}

pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    run_resolved(&config.resolve()?)
}

pub fn run_resolved(res: &ResolvedScenario) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = &res.config;
    let eq = res.master_equation()?;
    let rho0 = res.initial_state()?;
    let opts = EvolveOptions {
        t_max: cfg.t_max,
        sample_dt: cfg.sample_dt,
        ..EvolveOptions::default()
    };
    let traj = evolve(&eq, &rho0, &opts, &res.observables)?;
    let (final_state, steady) = if cfg.steady_state {
        let ss = steady_state(&eq, &traj.final_state, &SteadyStateOptions::default())?;
        let summary = SteadySummary {
            residual: ss.residual,
            time: cfg.t_max + ss.elapsed_scaled_time,
        };
        (ss.rho, Some(summary))
    } else {
        (traj.final_state.clone(), None)
    };

    let columns = res.column_names();
    let series: Vec<Vec<f64>> = traj.observables.iter().map(|(_, s)| s.clone()).collect();
    let mut observables = BTreeMap::new();
    for ((obs, col), s) in res.observables.iter().zip(&columns).zip(&series) {
        let value = if steady.is_some() {
            obs.evaluate(&final_state)?
        } else {
            *s.last().expect("at least one sample")
        };
        let (peak_idx, peak) = s
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        observables.insert(
            col.clone(),
            ObservableSummary {
                value,
                last_sample: *s.last().expect("at least one sample"),
                peak,
                peak_time: traj.times[peak_idx],
                half_max_time: half_max_time(s, &traj.times).ok(),
            },
        );
    }

    let summary = RunSummary {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        backend: res.backend(),
        dim: res.dim(),
        nbar: res.nbar,
        samples: traj.times.len(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        max_trace_drift: traj.max_trace_drift,
        steady_state: steady,
        wall_time_s: 0.0,
        observables,
        dark_state_weight: dark_state_weight(res, &final_state)?,
        tripartite: tripartite(res, &final_state)?,
        config: cfg.clone(),
    };
    let mut out = RunOutput {
        times: traj.times,
        columns,
        series,
        final_state,
        summary,
    };
    out.summary.wall_time_s = start.elapsed().as_secs_f64();
    Ok(out)
}

fn is_three_domain_chain(res: &ResolvedScenario) -> bool {
    let pops = res.basis.domain_pops();
    if pops.len() != 3 || pops[0] != 1 || pops[2] != 1 || res.reservoirs.len() != 2 {
        return false;
    }
    let mut links: Vec<Vec<usize>> = res
        .reservoirs
        .iter()
        .map(|r| {
            let mut d = r.domains.clone();
            d.sort_unstable();
            d
        })
        .collect();
    links.sort();
    links == [vec![0, 1], vec![1, 2]] && res.reservoirs.iter().all(|r| r.rate == 1.0)
}

fn dark_state_weight(res: &ResolvedScenario, rho: &DensityMatrix) -> Result<Option<f64>> {
    if !is_three_domain_chain(res) {
        return Ok(None);
    }
    let mut psi = dark_state(res.basis.domain_pops()[1])?;
    if res.backend() == Backend::Collective {
        psi = psi.to_collective()?;
    }
    Ok(Some(fidelity_with_pure(rho, &psi)?))
}

fn tripartite(res: &ResolvedScenario, rho: &DensityMatrix) -> Result<Option<TripartiteDecomposition>> {
    let Some(triple) = res.observables.iter().find_map(|o| match o {
        Observable::TripartiteNegativity { triple } => Some(*triple),
        _ => None,
    }) else {
        return Ok(None);
    };
    let mut keep = triple.to_vec();
    keep.sort_unstable();
    Ok(Some(tripartite_decompose(&rho.partial_trace(&keep)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;

    #[test]
    fn intro_pair_summary() {
        let out = run(&preset("intro-pair").unwrap()[0]).unwrap();
        let s = &out.summary;
        assert_eq!(s.backend, Backend::Collective);
        assert_eq!(s.dim, 4);
        assert_eq!(out.columns, ["eof_A_B", "concurrence_A_B", "log_negativity_A|B"]);
        assert_eq!(out.times.len(), 201);
        assert!(s.steady_state.unwrap().residual < 1e-10);
        assert!((out.value("eof_A_B").unwrap() - 0.354_578_899_23).abs() < 1e-6);
        assert!((out.value("concurrence_A_B").unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(s.config_hash, s.config.hash());
        assert!(s.dark_state_weight.is_none() && s.tripartite.is_none());
        let eof = &s.observables["eof_A_B"];
        assert_eq!(eof.last_sample, *out.column("eof_A_B").unwrap().last().unwrap());
        assert!(eof.half_max_time.unwrap() > 0.0);
    }

    #[test]
    fn observables_present_iff_requested() {
        let mut cfg = preset("intro-pair").unwrap()[0].clone();
        cfg.observables.clear();
        cfg.steady_state = false;
        cfg.t_max = 1.0;
        let out = run(&cfg).unwrap();
        assert!(out.summary.observables.is_empty());
        assert!(out.columns.is_empty());
        assert!(out.summary.steady_state.is_none());
        assert_eq!(out.times.len(), 21);
    }

    #[test]
    fn chain_reports_dark_state_weight() {
        let cfg = &preset("appB-oracle").unwrap()[1];
        let out = run(cfg).unwrap();
        let w = out.summary.dark_state_weight.unwrap();
        assert!((w - 0.4).abs() < 1e-7, "{w}");
    }

    #[test]
    fn star_reports_decomposition() {
        let mut cfg = preset("fig6-star").unwrap()[0].clone();
        cfg.domains[3].population = 2;
        let out = run(&cfg).unwrap();
        let d = out.summary.tripartite.unwrap();
        assert!(d.residual < 1e-8);
        assert!((d.c_ground + d.c_w - 1.0).abs() < 1e-8);
    }

    #[test]
    fn summary_serializes_with_config() {
        let mut cfg = preset("intro-pair").unwrap()[0].clone();
        cfg.t_max = 0.5;
        cfg.steady_state = false;
        let out = run(&cfg).unwrap();
        let json = serde_json::to_value(&out.summary).unwrap();
        assert_eq!(json["backend"], "collective");
        assert_eq!(json["config"]["name"], "intro-pair");
        let back: RunSummary = serde_json::from_value(json).unwrap();
        assert_eq!(back.config, cfg);
    }
}
