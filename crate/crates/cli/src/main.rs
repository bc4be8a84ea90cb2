use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use qlre_core::run::{run_resolved, RunOutput};
use qlre_core::scenario::{preset, sweep, ScenarioConfig, PRESET_NAMES};
use qlre_core::validation::oracle_suite;
use qlre_core::Error;

mod output;
mod reproduce;

use output::{csv_bytes, fmt_sig, human_bytes, write_atomic, write_run};

const DEFAULT_MEM_CAP: u128 = 4 << 30;
const MEM_CAP_VAR: &str = "QLRE_MAX_MEM_BYTES";

#[derive(Parser)]
#[command(name = "qlre", version, about = "Entanglement from collective dissipation in spin-domain networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Source {
    /// Scenario file (JSON)
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset instead of a file
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(clap::Args, Clone)]
struct RunFlags {
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Run even above the memory cap or the full-backend spin cap
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (or every scenario of a preset)
    Simulate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a scenario once per value of one parameter
    Sweep {
        #[command(flatten)]
        source: Source,
        /// N_<label>, T, nbar, gamma_dep_over_gamma or F_0
        #[arg(long, value_name = "NAME")]
        param: String,
        /// Comma-separated values; `a..b` expands to the integers a through b
        #[arg(long, value_name = "CSV-list")]
        values: String,
        /// Concurrent runs
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Regenerate the data behind one figure
    Reproduce {
        /// intro, fig1a, fig3a, fig3b, fig4, fig5a, fig5b, fig5c, fig6, appA-init, appA-mixed or appB
        figure: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check the simulator against closed-form results
    Validate {
        #[arg(long, value_enum, default_value_t = Scale::Quick)]
        scale: Scale,
    },
    /// List the built-in presets
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Quick,
    Full,
}

/// A failed command and its exit status.
#[derive(Debug)]
enum Failure {
    Config(String),
    Run(String),
    Partial(String),
    Validate(String),
}

impl Failure {
    /// Prefixes the message, keeping the exit status.
    fn context(self, what: &str) -> Self {
        match self {
            Failure::Config(m) => Failure::Config(format!("{what}: {m}")),
            Failure::Run(m) => Failure::Run(format!("{what}: {m}")),
            Failure::Partial(m) => Failure::Partial(format!("{what}: {m}")),
            Failure::Validate(m) => Failure::Validate(format!("{what}: {m}")),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Run(_) => 2,
            Failure::Partial(_) => 3,
            Failure::Validate(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Run(m) | Failure::Partial(m) | Failure::Validate(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::UnsupportedConfiguration(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn load(source: &Source) -> Result<Vec<ScenarioConfig>, Failure> {
    if let Some(name) = &source.preset {
        return Ok(preset(name)?);
    }
    let path = source.config.as_ref().expect("clap requires a source");
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let cfg = ScenarioConfig::from_json(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(vec![cfg])
}

fn memory_cap() -> Result<u128, Failure> {
    match std::env::var(MEM_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{MEM_CAP_VAR}: '{v}' is not a byte count"))),
        Err(_) => Ok(DEFAULT_MEM_CAP),
    }
}

/// Resolves a config, reports its size and applies the memory guard.
fn prepare(
    cfg: &ScenarioConfig,
    force: bool,
    cap: u128,
) -> Result<qlre_core::scenario::ResolvedScenario, Error> {
    let mut cfg = cfg.clone();
    cfg.allow_large |= force;
    let res = cfg.resolve()?;
    let bytes = res.density_matrix_bytes();
    eprintln!(
        "{}: {} backend, dimension {}, density matrix {}",
        cfg.name,
        res.backend(),
        res.dim(),
        human_bytes(bytes)
    );
    if bytes > cap && !force {
        return Err(Error::InvalidArgument(format!(
            "{}: density matrix needs {} (cap {}); pass --force or raise {MEM_CAP_VAR}",
            cfg.name,
            human_bytes(bytes),
            human_bytes(cap)
        )));
    }
    Ok(res)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    if jobs == 0 {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Run(format!("thread pool: {e}")))
}

/// Runs configs with up to `jobs` at a time, keeping input order.
fn run_many(
    configs: &[ScenarioConfig],
    jobs: usize,
    force: bool,
) -> Result<Vec<Result<RunOutput, Error>>, Failure> {
    let cap = memory_cap()?;
    let pool = pool(jobs)?;
    Ok(pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| prepare(cfg, force, cap).and_then(|res| run_resolved(&res)))
            .collect()
    }))
}

fn simulate(source: &Source, flags: &RunFlags) -> Result<(), Failure> {
    let configs = load(source)?;
    let cap = memory_cap()?;
    let resolved = configs
        .iter()
        .map(|c| prepare(c, flags.force, cap))
        .collect::<Result<Vec<_>, _>>()?;
    ensure_dir(&flags.out)?;
    for res in &resolved {
        let out = run_resolved(res)?;
        let files = write_run(&flags.out, &out).map_err(|e| io_failure(&flags.out, e))?;
        println!("{}: {:.2}s, wrote {}", out.summary.name, out.summary.wall_time_s, files.join(", "));
        for (name, o) in &out.summary.observables {
            println!("  {name} = {}", fmt_sig(o.value));
        }
    }
    Ok(())
}

/// Parses `2,3,5..8` into numbers.
fn parse_values(list: &str) -> Result<Vec<f64>, Failure> {
    let bad = |item: &str| Failure::Config(format!("--values: cannot parse '{item}'"));
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: i64 = a.trim().parse().map_err(|_| bad(item))?;
            let b: i64 = b.trim().parse().map_err(|_| bad(item))?;
            if b < a || b - a > 10_000 {
                return Err(bad(item));
            }
            out.extend((a..=b).map(|v| v as f64));
        } else {
            let v: f64 = item.parse().map_err(|_| bad(item))?;
            if !v.is_finite() {
                return Err(bad(item));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Failure::Config("--values: no values given".into()));
    }
    Ok(out)
}

fn sweep_cmd(
    source: &Source,
    param: &str,
    values: &str,
    jobs: usize,
    flags: &RunFlags,
) -> Result<(), Failure> {
    let configs = load(source)?;
    let [base] = configs.as_slice() else {
        return Err(Failure::Config(format!(
            "sweeps start from a single scenario; this source has {}",
            configs.len()
        )));
    };
    let mut values = parse_values(values)?;
    values.sort_by(f64::total_cmp);
    values.dedup();
    let configs = sweep(base, param, &values)?;
    ensure_dir(&flags.out)?;
    let results = run_many(&configs, jobs, flags.force)?;

    let columns: Vec<String> = base.resolve().map(|r| r.column_names()).unwrap_or_default();
    let mut header = vec![param.to_string(), "name".into(), "status".into()];
    for c in &columns {
        header.extend([c.clone(), format!("{c}_peak"), format!("{c}_t_half")]);
    }
    header.push("error".into());
    let mut rows = Vec::new();
    let mut failed = 0;
    for ((v, cfg), result) in values.iter().zip(&configs).zip(&results) {
        let mut row = vec![fmt_sig(*v), cfg.name.clone()];
        match result {
            Ok(out) => {
                write_run(&flags.out, out).map_err(|e| io_failure(&flags.out, e))?;
                row.push("ok".into());
                for c in &columns {
                    let o = &out.summary.observables[c];
                    row.push(fmt_sig(o.value));
                    row.push(fmt_sig(o.peak));
                    row.push(o.half_max_time.map(fmt_sig).unwrap_or_default());
                }
                row.push(String::new());
            }
            Err(e) => {
                failed += 1;
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 3 * columns.len()));
                row.push(e.to_string());
            }
        }
        println!("{}", row[..3].join("  "));
        rows.push(row);
    }
    let path = flags.out.join("sweep.csv");
    write_atomic(&path, &csv_bytes(&header, &rows)).map_err(|e| io_failure(&path, e))?;
    if failed > 0 {
        return Err(Failure::Partial(format!(
            "{failed} of {} sweep runs failed; see the status column of {}",
            rows.len(),
            path.display()
        )));
    }
    Ok(())
}

fn validate(scale: Scale) -> Result<(), Failure> {
    let max_nb = match scale {
        Scale::Quick => 5,
        Scale::Full => 8,
    };
    let results = oracle_suite(max_nb);
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        println!("all {} checks passed (N_B up to {max_nb})", results.len());
        Ok(())
    } else {
        Err(Failure::Validate(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { source, flags } => simulate(source, flags),
        Command::Sweep {
            source,
            param,
            values,
            jobs,
            flags,
        } => sweep_cmd(source, param, values, *jobs, flags),
        Command::Reproduce { figure, jobs, flags } => reproduce::reproduce(figure, *jobs, flags),
        Command::Validate { scale } => validate(*scale),
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(Failure::from(Error::InvalidArgument("x".into())).code(), 1);
        assert_eq!(Failure::from(Error::UnsupportedConfiguration("x".into())).code(), 1);
        let integration = Error::IntegrationFailure {
            time: 1.0,
            worst_drift: 0.0,
            reason: "step underflow".into(),
        };
        assert_eq!(Failure::from(integration).code(), 2);
        let convergence = Error::ConvergenceFailure {
            max_time: 200.0,
            residual: 1e-6,
            tol: 1e-10,
        };
        assert_eq!(Failure::from(convergence).code(), 2);
        assert_eq!(Failure::from(Error::NumericalFailure("x".into())).code(), 2);
        assert_eq!(Failure::from(Error::UndefinedResult("x".into())).context("run").code(), 2);
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("1, 3..5,0.5").unwrap(), [1.0, 3.0, 4.0, 5.0, 0.5]);
        assert!(parse_values("").is_err());
        assert!(parse_values("5..3").is_err());
        assert!(parse_values("nan").is_err());
    }
}
