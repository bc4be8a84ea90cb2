//! Declarative scenario descriptions and their resolution into a basis,
//! master equation and initial state.
//!
//! A scenario file is JSON mirroring [`ScenarioConfig`]:
//!
//! ```json
//! {
//!   "name": "chain",
//!   "domains": [
//!     {"label": "A", "population": 1, "initial": "ground"},
//!     {"label": "B", "population": 6, "initial": "excited"},
//!     {"label": "C", "population": 1, "initial": "ground"}
//!   ],
//!   "reservoirs": [{"domains": ["A", "B"]}, {"domains": ["B", "C"]}],
//!   "temperature": {"kelvin": 0.1, "omega0_over_2pi_hz": 1e10},
//!   "t_max": 10.0,
//!   "observables": ["eof(A,C)", "jz(B)"]
//! }
//! ```
//!
//! `initial` is `"ground"`, `"excited"`, `{"dicke": k}` (k spins up) or
//! `{"mixed": {"a": a, "b": b}}` for `a|↑…↑⟩⟨↑…↑| + b·I`. Unknown keys are
//! rejected.

mod presets;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{build_realistic, MasterEquation, Reservoir};
use crate::error::{Error, Result};
use crate::hilbert::{
    dicke_isometry, product_state, Backend, BasisDescriptor, DensityMatrix, LocalState, C64,
};
use crate::observables::{default_labels, Observable};

pub use presets::{preset, PRESET_NAMES};

/// Planck constant, J·s (CODATA, exact).
const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (CODATA, exact).
const BOLTZMANN: f64 = 1.380_649e-23;

/// Total spin count above which the full backend needs `allow_large`.
pub const FULL_BACKEND_SPIN_CAP: usize = 13;

/// Bose–Einstein occupation `1/(e^{hf/k_B T} − 1)` of a mode at `f` hertz.
pub fn bose_einstein_nbar(omega0_over_2pi_hz: f64, kelvin: f64) -> Result<f64> {
    if !(kelvin >= 0.0) || !kelvin.is_finite() {
        return Err(Error::invalid(format!(
            "temperature must be finite and non-negative, got {kelvin}"
        )));
    }
    if !(omega0_over_2pi_hz > 0.0) || !omega0_over_2pi_hz.is_finite() {
        return Err(Error::invalid(format!(
            "mode frequency must be positive, got {omega0_over_2pi_hz}"
        )));
    }
    if kelvin == 0.0 {
        return Ok(0.0);
    }
    let x = PLANCK * omega0_over_2pi_hz / (BOLTZMANN * kelvin);
    Ok(1.0 / x.exp_m1())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Ground,
    Excited,
    /// Symmetric Dicke state with this many spins up.
    Dicke(usize),
    /// `a|↑…↑⟩⟨↑…↑| + b·I`.
    Mixed { a: f64, b: f64 },
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Ground => f.write_str("ground"),
            InitialState::Excited => f.write_str("excited"),
            InitialState::Dicke(k) => write!(f, "dicke({k})"),
            InitialState::Mixed { a, b } => write!(f, "mixed({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// Defaults to a letter by position (A, B, C, …).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub population: usize,
    pub initial: InitialState,
}

impl DomainSpec {
    pub fn new(label: &str, population: usize, initial: InitialState) -> Self {
        Self {
            label: Some(label.to_string()),
            population,
            initial,
        }
    }
}

/// A domain named by label or by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainRef {
    Index(usize),
    Label(String),
}

impl fmt::Display for DomainRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainRef::Index(i) => write!(f, "{i}"),
            DomainRef::Label(l) => f.write_str(l),
        }
    }
}

fn unit_rate() -> f64 {
    1.0
}

fn is_unit_rate(r: &f64) -> bool {
    *r == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub domains: Vec<DomainRef>,
    /// Coupling in units of the common rate γ.
    #[serde(default = "unit_rate", skip_serializing_if = "is_unit_rate")]
    pub rate: f64,
}

impl ReservoirSpec {
    pub fn between(labels: &[&str]) -> Self {
        Self {
            domains: labels.iter().map(|l| DomainRef::Label(l.to_string())).collect(),
            rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperature {
    pub kelvin: f64,
    pub omega0_over_2pi_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Auto,
    Collective,
    Full,
}

/// Which identity a `mixed` initial state adds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixedBasis {
    /// Identity on all `2^N` configurations of the domain.
    #[default]
    Full,
    /// Identity on the `N + 1` symmetric Dicke states only.
    Symmetric,
}

fn default_t_max() -> f64 {
    10.0
}

fn default_sample_dt() -> f64 {
    0.05
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Used as the stem of output file names.
    pub name: String,
    pub domains: Vec<DomainSpec>,
    pub reservoirs: Vec<ReservoirSpec>,
    /// Thermal occupation of every reservoir. Exclusive with `temperature`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Temperature>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub include_individual: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gamma_dep_over_gamma: f64,
    #[serde(default)]
    pub backend: BackendChoice,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default)]
    pub mixed_basis: MixedBasis,
    /// Continue integrating after `t_max` until the state is stationary.
    #[serde(default)]
    pub steady_state: bool,
    /// Lift the full-backend spin cap.
    #[serde(default, skip_serializing_if = "is_false")]
    pub allow_large: bool,
}

/// A validated scenario with everything needed to run it, short of
/// allocating the density matrix.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub labels: Vec<String>,
    pub basis: BasisDescriptor,
    pub reservoirs: Vec<Reservoir>,
    pub nbar: f64,
    pub observables: Vec<Observable>,
}

fn field_error(field: impl fmt::Display, msg: impl fmt::Display) -> Error {
    Error::InvalidArgument(format!("{field}: {msg}"))
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(field_error("name", "must not be empty"));
    }
    if !name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
    {
        return Err(field_error(
            "name",
            format!("'{name}' may only contain letters, digits, '_', '-' and '.'"),
        ));
    }
    Ok(())
}

fn check_label(label: &str, field: &str) -> Result<()> {
    if label.is_empty() || label.chars().any(|c| c.is_whitespace() || ",|()".contains(c)) {
        return Err(field_error(
            field,
            format!("'{label}' is not a usable label (no spaces, commas, '|' or parentheses)"),
        ));
    }
    Ok(())
}

fn finite_nonneg(x: f64, field: &str) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(field_error(field, format!("must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// Dimension of the identity added by a `mixed` preparation.
fn mixed_dim(n: usize, basis: MixedBasis) -> Result<f64> {
    match basis {
        MixedBasis::Symmetric => Ok((n + 1) as f64),
        MixedBasis::Full => Ok(Backend::Full.domain_dim(n)? as f64),
    }
}

/// `(a, b)` with fidelity `a + b = f0` and unit trace.
pub fn mixed_weights(f0: f64, n: usize, basis: MixedBasis) -> Result<(f64, f64)> {
    let d = mixed_dim(n, basis)?;
    if !(f0 <= 1.0 && f0 >= 1.0 / d) {
        return Err(Error::invalid(format!(
            "fidelity {f0} outside [1/{d}, 1] for a domain of {n} spins"
        )));
    }
    let b = (1.0 - f0) / (d - 1.0);
    Ok((f0 - b, b))
}

impl ScenarioConfig {
    /// Domain labels, explicit or by position.
    pub fn labels(&self) -> Vec<String> {
        let defaults = default_labels(self.domains.len());
        self.domains
            .iter()
            .zip(defaults)
            .map(|(d, def)| d.label.clone().unwrap_or(def))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("scenario file: {e}")))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn needs_full_backend(&self) -> bool {
        self.include_individual
            || self.gamma_dep_over_gamma > 0.0
            || (self.mixed_basis == MixedBasis::Full
                && self
                    .domains
                    .iter()
                    .any(|d| matches!(d.initial, InitialState::Mixed { .. })))
    }

    /// Backend that will be used, with `auto` resolved.
    pub fn backend(&self) -> Result<Backend> {
        let full = self.needs_full_backend();
        match self.backend {
            BackendChoice::Auto if full => Ok(Backend::Full),
            BackendChoice::Auto => Ok(Backend::Collective),
            BackendChoice::Full => Ok(Backend::Full),
            BackendChoice::Collective if full => Err(Error::unsupported(
                "backend: collective cannot represent individual decay, dephasing or a full-space mixed preparation",
            )),
            BackendChoice::Collective => Ok(Backend::Collective),
        }
    }

    /// Thermal occupation, from `nbar` or the temperature block.
    pub fn nbar(&self) -> Result<f64> {
        match (self.nbar, self.temperature) {
            (Some(_), Some(_)) => Err(field_error(
                "nbar",
                "give either nbar or temperature, not both",
            )),
            (Some(n), None) => {
                finite_nonneg(n, "nbar")?;
                Ok(n)
            }
            (None, Some(t)) => bose_einstein_nbar(t.omega0_over_2pi_hz, t.kelvin)
                .map_err(|e| field_error("temperature", e)),
            (None, None) => Ok(0.0),
        }
    }

    /// Checks every field and resolves labels, backend and observables.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        check_name(&self.name)?;
        if self.domains.len() < 2 {
            return Err(field_error(
                "domains",
                format!("need at least two domains, got {}", self.domains.len()),
            ));
        }
        let labels = self.labels();
        for (i, (d, label)) in self.domains.iter().zip(&labels).enumerate() {
            let field = format!("domains[{i}]");
            check_label(label, &format!("{field}.label"))?;
            if labels[..i].contains(label) {
                return Err(field_error(
                    format!("{field}.label"),
                    format!("duplicate label '{label}'"),
                ));
            }
            if d.population == 0 {
                return Err(field_error(format!("{field}.population"), "must be at least 1"));
            }
            match d.initial {
                InitialState::Dicke(k) if k > d.population => {
                    return Err(field_error(
                        format!("{field}.initial"),
                        format!("dicke({k}) needs k <= population {}", d.population),
                    ));
                }
                InitialState::Mixed { a, b } => {
                    let f = format!("{field}.initial");
                    finite_nonneg(a, &f)?;
                    finite_nonneg(b, &f)?;
                    let dim = mixed_dim(d.population, self.mixed_basis)
                        .map_err(|e| field_error(&f, e))?;
                    if (a + b * dim - 1.0).abs() > 1e-9 {
                        return Err(field_error(
                            f,
                            format!("mixed weights need a + {dim}·b = 1, got {}", a + b * dim),
                        ));
                    }
                }
                _ => {}
            }
        }
        let mut reservoirs = Vec::with_capacity(self.reservoirs.len());
        for (i, r) in self.reservoirs.iter().enumerate() {
            let field = format!("reservoirs[{i}]");
            if r.domains.is_empty() {
                return Err(field_error(format!("{field}.domains"), "must not be empty"));
            }
            let mut idx = Vec::with_capacity(r.domains.len());
            for d in &r.domains {
                let m = match d {
                    DomainRef::Index(m) if *m < labels.len() => *m,
                    DomainRef::Label(l) => labels.iter().position(|x| x == l).ok_or_else(|| {
                        field_error(
                            format!("{field}.domains"),
                            format!("unknown domain '{l}' (known: {})", labels.join(", ")),
                        )
                    })?,
                    DomainRef::Index(m) => {
                        return Err(field_error(
                            format!("{field}.domains"),
                            format!("domain index {m} out of range"),
                        ))
                    }
                };
                if idx.contains(&m) {
                    return Err(field_error(
                        format!("{field}.domains"),
                        format!("domain '{d}' listed twice"),
                    ));
                }
                idx.push(m);
            }
            finite_nonneg(r.rate, &format!("{field}.rate"))?;
            reservoirs.push(Reservoir::with_rate(idx, r.rate));
        }
        let nbar = self.nbar()?;
        finite_nonneg(self.gamma_dep_over_gamma, "gamma_dep_over_gamma")?;
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(field_error("t_max", "must be finite and non-negative"));
        }
        if !(self.sample_dt > 0.0) || !self.sample_dt.is_finite() {
            return Err(field_error("sample_dt", "must be positive"));
        }
        if self.t_max / self.sample_dt > 1e7 {
            return Err(field_error("sample_dt", "more than 1e7 samples requested"));
        }
        let backend = self.backend()?;
        let pops: Vec<usize> = self.domains.iter().map(|d| d.population).collect();
        let basis = BasisDescriptor::new(backend, &pops).map_err(|e| field_error("domains", e))?;
        if backend == Backend::Full && basis.total_spins() > FULL_BACKEND_SPIN_CAP && !self.allow_large
        {
            return Err(field_error(
                "allow_large",
                format!(
                    "{} spins on the full backend exceed the cap of {FULL_BACKEND_SPIN_CAP}; set allow_large to proceed",
                    basis.total_spins()
                ),
            ));
        }
        let mut observables = Vec::with_capacity(self.observables.len());
        for (i, expr) in self.observables.iter().enumerate() {
            let field = format!("observables[{i}]");
            let obs = Observable::parse(expr, &labels).map_err(|e| field_error(&field, e))?;
            obs.check(&basis).map_err(|e| field_error(&field, e))?;
            observables.push(obs);
        }
        Ok(ResolvedScenario {
            config: self.clone(),
            labels,
            basis,
            reservoirs,
            nbar,
            observables,
        })
    }
}

impl ResolvedScenario {
    pub fn backend(&self) -> Backend {
        self.basis.backend()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Bytes of one dense density matrix, `16·dim²`.
    pub fn density_matrix_bytes(&self) -> u128 {
        self.basis.density_matrix_bytes()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.observables
            .iter()
            .map(|o| o.column_name(&self.labels))
            .collect()
    }

    pub fn master_equation(&self) -> Result<MasterEquation> {
        build_realistic(
            &self.basis,
            &self.reservoirs,
            self.nbar,
            self.config.include_individual,
            self.config.gamma_dep_over_gamma,
        )
    }

    /// Product of the per-domain preparations.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let backend = self.backend();
        let locals = self
            .config
            .domains
            .iter()
            .map(|d| local_state(d, backend, self.config.mixed_basis))
            .collect::<Result<Vec<_>>>()?;
        product_state(&self.basis, &locals)
    }
}

fn local_state(d: &DomainSpec, backend: Backend, mixed: MixedBasis) -> Result<LocalState> {
    let n = d.population;
    Ok(match d.initial {
        InitialState::Ground => LocalState::Excitations(0),
        InitialState::Excited => LocalState::Excitations(n),
        InitialState::Dicke(k) => LocalState::Excitations(k),
        InitialState::Mixed { a, b } => {
            let dim = backend.domain_dim(n)?;
            let identity: DMatrix<C64> = match (backend, mixed) {
                (Backend::Full, MixedBasis::Full) | (Backend::Collective, MixedBasis::Symmetric) => {
                    DMatrix::identity(dim, dim)
                }
                (Backend::Full, MixedBasis::Symmetric) => {
                    let v = dicke_isometry(n)?;
                    &v * v.adjoint()
                }
                (Backend::Collective, MixedBasis::Full) => {
                    return Err(Error::unsupported(
                        "a full-space mixed preparation needs the full backend",
                    ))
                }
            };
            // Index 0 is all spins up in both backends.
            let mut rho = identity * C64::new(b, 0.0);
            rho[(0, 0)] += C64::new(a, 0.0);
            LocalState::Density(rho)
        }
    })
}

/// Initial density matrix of a scenario.
pub fn build_initial_state(config: &ScenarioConfig) -> Result<DensityMatrix> {
    config.resolve()?.initial_state()
}

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

/// Copies of `base`, one per value of `parameter`.
///
/// Parameters: `N_<label>` (domain population), `T` (kelvin), `nbar`,
/// `gamma_dep_over_gamma` and `F_0` (fidelity of the one domain prepared
/// excited or mixed).
pub fn sweep(base: &ScenarioConfig, parameter: &str, values: &[f64]) -> Result<Vec<ScenarioConfig>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&v| {
            let mut cfg = base.clone();
            apply_parameter(&mut cfg, parameter, v)?;
            cfg.name = format!("{}_{}_{}", base.name, parameter, fmt_value(v));
            Ok(cfg)
        })
        .collect()
}

fn as_population(v: f64, parameter: &str) -> Result<usize> {
    if v.fract() != 0.0 || !(v >= 1.0) || v > 1e6 {
        return Err(Error::invalid(format!(
            "{parameter} must be a positive integer, got {v}"
        )));
    }
    Ok(v as usize)
}

fn apply_parameter(cfg: &mut ScenarioConfig, parameter: &str, v: f64) -> Result<()> {
    let labels = cfg.labels();
    match parameter {
        "T" => {
            finite_nonneg(v, "T")?;
            let freq = cfg.temperature.map(|t| t.omega0_over_2pi_hz).unwrap_or(10e9);
            cfg.nbar = None;
            cfg.temperature = Some(Temperature {
                kelvin: v,
                omega0_over_2pi_hz: freq,
            });
        }
        "nbar" => {
            finite_nonneg(v, "nbar")?;
            cfg.temperature = None;
            cfg.nbar = Some(v);
        }
        "gamma_dep_over_gamma" => {
            finite_nonneg(v, "gamma_dep_over_gamma")?;
            cfg.gamma_dep_over_gamma = v;
        }
        "F_0" => {
            let targets: Vec<usize> = cfg
                .domains
                .iter()
                .enumerate()
                .filter(|(_, d)| {
                    matches!(d.initial, InitialState::Excited | InitialState::Mixed { .. })
                })
                .map(|(i, _)| i)
                .collect();
            let &[m] = targets.as_slice() else {
                return Err(Error::invalid(format!(
                    "F_0 needs exactly one domain prepared excited or mixed, found {}",
                    targets.len()
                )));
            };
            let (a, b) = mixed_weights(v, cfg.domains[m].population, cfg.mixed_basis)?;
            cfg.domains[m].initial = InitialState::Mixed { a, b };
        }
        p if p.starts_with("N_") => {
            let label = &p[2..];
            let m = labels.iter().position(|l| l == label).ok_or_else(|| {
                Error::invalid(format!(
                    "sweep parameter {p}: no domain labelled '{label}' (known: {})",
                    labels.join(", ")
                ))
            })?;
            let n = as_population(v, p)?;
            let domain = &mut cfg.domains[m];
            domain.label = Some(label.to_string());
            domain.population = n;
            if let InitialState::Mixed { a, b } = domain.initial {
                // Keep the fidelity, re-normalized for the new size.
                let f0 = a + b;
                let (a, b) = mixed_weights(f0, n, cfg.mixed_basis)?;
                domain.initial = InitialState::Mixed { a, b };
            }
        }
        other => {
            return Err(Error::invalid(format!(
                "cannot sweep '{other}' (expected N_<label>, T, nbar, gamma_dep_over_gamma or F_0)"
            )))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
