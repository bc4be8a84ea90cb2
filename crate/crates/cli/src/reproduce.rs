use std::path::Path;

use serde::Serialize;

use qlre_core::run::RunOutput;
use qlre_core::scenario::{preset, sweep, ScenarioConfig};

use crate::output::{csv_bytes, fmt_sig, summary_json, timeseries_csv, write_atomic};
use crate::{ensure_dir, io_failure, run_many, Failure, RunFlags};

pub const FIGURES: [&str; 12] = [
    "intro",
    "fig1a",
    "fig3a",
    "fig3b",
    "fig4",
    "fig5a",
    "fig5b",
    "fig5c",
    "fig6",
    "appA-init",
    "appA-mixed",
    "appB",
];

/// Per-run quantity placed in a table column.
#[derive(Clone)]
enum Extract {
    Value(&'static str),
    HalfMax(&'static str),
    GroundWeight,
    WWeight,
}

impl Extract {
    fn get(&self, out: &RunOutput) -> Option<f64> {
        match self {
            Extract::Value(c) => out.value(c),
            Extract::HalfMax(c) => out.summary.observables.get(*c)?.half_max_time,
            Extract::GroundWeight => out.summary.tripartite.as_ref().map(|d| d.c_ground),
            Extract::WWeight => out.summary.tripartite.as_ref().map(|d| d.c_w),
        }
    }
}

struct Curve {
    run: usize,
    file: String,
    panel: String,
}

/// One row per run, keyed by a swept parameter.
struct Table {
    file: String,
    panel: String,
    key: &'static str,
    rows: Vec<(f64, usize)>,
    columns: Vec<(&'static str, Extract)>,
}

#[derive(Default)]
struct Plan {
    configs: Vec<ScenarioConfig>,
    curves: Vec<Curve>,
    tables: Vec<Table>,
}

impl Plan {
    fn add(&mut self, cfg: ScenarioConfig) -> usize {
        self.configs.push(cfg);
        self.configs.len() - 1
    }

    fn curve(&mut self, run: usize, file: String, panel: &str) {
        self.curves.push(Curve {
            run,
            file,
            panel: panel.to_string(),
        });
    }

    /// Adds every config as its own curve, named `<figure>_<suffix>.csv`.
    fn curves_from(
        &mut self,
        configs: Vec<ScenarioConfig>,
        figure: &str,
        panel: &str,
        suffix: impl Fn(&ScenarioConfig) -> String,
    ) -> Vec<usize> {
        configs
            .into_iter()
            .map(|cfg| {
                let file = format!("{figure}_{}.csv", suffix(&cfg));
                let i = self.add(cfg);
                self.curve(i, file, panel);
                i
            })
            .collect()
    }
}

fn population(cfg: &ScenarioConfig, domain: usize) -> f64 {
    cfg.domains[domain].population as f64
}

fn strip(name: &str, prefix: &str) -> String {
    name.strip_prefix(prefix).unwrap_or(name).to_string()
}

fn plan(figure: &str) -> Result<Plan, Failure> {
    let mut p = Plan::default();
    match figure {
        "intro" => {
            p.curves_from(preset("intro-pair")?, "intro", "two spins sharing one reservoir", |_| {
                "pair".into()
            });
        }
        "fig1a" => {
            let runs = p.curves_from(preset("fig1a-sweep")?, "fig1a", "1(a) dynamics", |c| {
                strip(&c.name, "fig1a_")
            });
            let rows = runs.iter().map(|&i| (population(&p.configs[i], 0), i)).collect();
            p.tables.push(Table {
                file: "fig1a_steady.csv".into(),
                panel: "1(a) steady log-negativity versus N_A".into(),
                key: "N_A",
                rows,
                columns: vec![
                    ("log_negativity", Extract::Value("log_negativity_A|B")),
                    ("negativity", Extract::Value("negativity_A|B")),
                ],
            });
        }
        "fig3a" => {
            p.curves_from(preset("fig3a")?, "fig3a", "3(a) E_F and J^z_B/N_B", |c| {
                strip(&c.name, "fig3a_")
            });
        }
        "fig3b" => {
            let configs = preset("fig3b")?;
            let rows = configs
                .into_iter()
                .map(|cfg| {
                    let n = population(&cfg, 1);
                    (n, p.add(cfg))
                })
                .collect();
            p.tables.push(Table {
                file: "fig3b.csv".into(),
                panel: "3(b) steady E_F and half-rise time versus N_B".into(),
                key: "N_B",
                rows,
                columns: vec![
                    ("eof_A_C", Extract::Value("eof_A_C")),
                    ("t_E", Extract::HalfMax("eof_A_C")),
                ],
            });
        }
        "fig4" => {
            for (name, panel) in [
                ("fig4-chain4", "4 chain {1,6,6,1}"),
                ("fig4-chain5", "4 chain {1,4,4,4,1}"),
            ] {
                p.curves_from(preset(name)?, "fig4", panel, |c| strip(&c.name, "fig4-"));
            }
        }
        "fig5a" => {
            p.curves_from(preset("fig5a-dephasing")?, "fig5a", "5(a) dephasing", |c| {
                strip(&c.name, "fig5a_")
            });
        }
        "fig5b" => {
            p.curves_from(preset("fig5b-individual")?, "fig5b", "5(b) individual decay", |_| {
                "individual".into()
            });
        }
        "fig5c" => {
            p.curves_from(preset("fig5c-thermal")?, "fig5c", "5(c) thermal reservoirs", |c| {
                strip(&c.name, "fig5c_")
            });
        }
        "fig6" => {
            let main = preset("fig6-star")?;
            let nd: Vec<f64> = (1..=11).map(f64::from).collect();
            let inset = sweep(&main[0], "N_D", &nd)?;
            p.curves_from(main, "fig6", "6(b) tripartite negativity", |_| "N_D_11".into());
            let rows = inset
                .into_iter()
                .map(|cfg| {
                    let n = population(&cfg, 3);
                    (n, p.add(cfg))
                })
                .collect();
            p.tables.push(Table {
                file: "fig6_inset.csv".into(),
                panel: "6(b) inset steady tripartite negativity versus N_D".into(),
                key: "N_D",
                rows,
                columns: vec![
                    ("tripartite_negativity", Extract::Value("tripartite_negativity_A_B_C")),
                    ("c_ground", Extract::GroundWeight),
                    ("c_w", Extract::WWeight),
                ],
            });
        }
        "appA-init" => {
            p.curves_from(preset("appA-initial-states")?, "appA_init", "initial states", |c| {
                strip(&c.name, "appA_init_")
            });
        }
        "appA-mixed" => {
            let configs = preset("appA-mixed")?;
            let mut by_nb: Vec<(usize, Vec<(f64, usize)>)> = Vec::new();
            for cfg in configs {
                let nb = cfg.domains[1].population;
                let f0: f64 = cfg
                    .name
                    .rsplit('_')
                    .next()
                    .and_then(|s| s.parse().ok())
                    .expect("preset names end in the fidelity");
                let i = p.add(cfg);
                match by_nb.iter_mut().find(|(n, _)| *n == nb) {
                    Some((_, rows)) => rows.push((f0, i)),
                    None => by_nb.push((nb, vec![(f0, i)])),
                }
            }
            for (nb, rows) in by_nb {
                p.tables.push(Table {
                    file: format!("appA_mixed_N_B_{nb}.csv"),
                    panel: format!("mixed central domain, N_B = {nb}"),
                    key: "F_0",
                    rows,
                    columns: vec![("eof_A_C", Extract::Value("eof_A_C"))],
                });
            }
        }
        "appB" => {
            let runs = p.curves_from(preset("appB-oracle")?, "appB", "single excitation in A", |c| {
                strip(&c.name, "appB_")
            });
            let rows = runs.iter().map(|&i| (population(&p.configs[i], 1), i)).collect();
            p.tables.push(Table {
                file: "appB_steady.csv".into(),
                panel: "single excitation in A, steady values versus N_B".into(),
                key: "N_B",
                rows,
                columns: vec![
                    ("eof_A_C", Extract::Value("eof_A_C")),
                    ("concurrence_A_C", Extract::Value("concurrence_A_C")),
                ],
            });
        }
        other => {
            return Err(Failure::Config(format!(
                "unknown figure '{other}' (known: {})",
                FIGURES.join(", ")
            )))
        }
    }
    Ok(p)
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    panel: String,
    scenarios: Vec<String>,
}

#[derive(Serialize)]
struct Manifest {
    figure: String,
    files: Vec<ManifestEntry>,
}

fn table_csv(t: &Table, outputs: &[RunOutput]) -> Vec<u8> {
    let mut header = vec![t.key.to_string()];
    header.extend(t.columns.iter().map(|(h, _)| h.to_string()));
    let mut rows = t.rows.clone();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|&(key, i)| {
            std::iter::once(fmt_sig(key))
                .chain(
                    t.columns
                        .iter()
                        .map(|(_, e)| e.get(&outputs[i]).map(fmt_sig).unwrap_or_default()),
                )
                .collect()
        })
        .collect();
    csv_bytes(&header, &rows)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    write_atomic(path, bytes).map_err(|e| io_failure(path, e))
}

pub fn reproduce(figure: &str, jobs: usize, flags: &RunFlags) -> Result<(), Failure> {
    let plan = plan(figure)?;
    ensure_dir(&flags.out)?;
    let results = run_many(&plan.configs, jobs, flags.force)?;
    let mut outputs = Vec::with_capacity(results.len());
    for (cfg, r) in plan.configs.iter().zip(results) {
        let out = r.map_err(|e| Failure::from(e).context(&cfg.name))?;
        write(
            &flags.out.join(format!("{}_summary.json", cfg.name)),
            &summary_json(&out.summary),
        )?;
        outputs.push(out);
    }

    let mut files = Vec::new();
    for c in &plan.curves {
        write(&flags.out.join(&c.file), &timeseries_csv(&outputs[c.run]))?;
        files.push(ManifestEntry {
            file: c.file.clone(),
            panel: c.panel.clone(),
            scenarios: vec![plan.configs[c.run].name.clone()],
        });
    }
    for t in &plan.tables {
        write(&flags.out.join(&t.file), &table_csv(t, &outputs))?;
        let mut rows = t.rows.clone();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        files.push(ManifestEntry {
            file: t.file.clone(),
            panel: t.panel.clone(),
            scenarios: rows.iter().map(|&(_, i)| plan.configs[i].name.clone()).collect(),
        });
    }
    let manifest = Manifest {
        figure: figure.to_string(),
        files,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    let path = flags.out.join(format!("{figure}_manifest.json"));
    write(&path, json.as_bytes())?;
    for f in &manifest.files {
        println!("{}  ({})", f.file, f.panel);
    }
    Ok(())
}
