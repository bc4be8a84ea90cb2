//! Lindblad master equations for spin domains coupled to shared reservoirs.
//!
//! Time is measured in units of `γt/2`. With that scaling the dissipator of
//! a jump operator `O` with relative rate `r` contributes
//! `r · (2OρO† − O†Oρ − ρO†O)` to `dρ/dτ`, so an isolated excited spin decays
//! as `e^{−2τ} = e^{−γt}`.

mod generator;
mod integrate;

pub use generator::Generator;
pub use integrate::{
    evolve, steady_state, EvolveOptions, SteadyStateOptions, SteadyStateResult, Trajectory,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{
    reservoir_jump, spin_operator, Backend, BasisDescriptor, DensityMatrix, Operator, SpinOp, C64,
};

/// One dissipator `rate · D[jump]`.
#[derive(Debug, Clone)]
pub struct LindbladTerm {
    pub jump: Operator,
    pub rate: f64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct MasterEquation {
    terms: Vec<LindbladTerm>,
    basis: BasisDescriptor,
}

/// A reservoir shared by a set of domains, with its coupling in units of γ.
#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub domains: Vec<usize>,
    pub rate: f64,
}

impl Reservoir {
    pub fn new(domains: Vec<usize>) -> Self {
        Self { domains, rate: 1.0 }
    }

    pub fn with_rate(domains: Vec<usize>, rate: f64) -> Self {
        Self { domains, rate }
    }
}

impl From<Vec<usize>> for Reservoir {
    fn from(domains: Vec<usize>) -> Self {
        Self::new(domains)
    }
}

fn check_rate(rate: f64, what: &str) -> Result<()> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::invalid(format!("{what}: rate {rate} must be finite and >= 0")));
    }
    Ok(())
}

impl MasterEquation {
    pub fn new(basis: BasisDescriptor, terms: Vec<LindbladTerm>) -> Result<Self> {
        for t in &terms {
            check_rate(t.rate, &t.label)?;
            if t.jump.basis() != &basis {
                return Err(Error::invalid(format!(
                    "term '{}' lives on {}, equation on {basis}",
                    t.label,
                    t.jump.basis()
                )));
            }
        }
        Ok(Self { terms, basis })
    }

    pub fn empty(basis: BasisDescriptor) -> Self {
        Self {
            terms: Vec::new(),
            basis,
        }
    }

    pub fn terms(&self) -> &[LindbladTerm] {
        &self.terms
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn push(&mut self, term: LindbladTerm) -> Result<()> {
        check_rate(term.rate, &term.label)?;
        if term.jump.basis() != &self.basis {
            return Err(Error::invalid("term basis does not match the equation"));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn generator(&self) -> Generator {
        Generator::new(self)
    }
}

fn reservoir_label(domains: &[usize], raising: bool) -> String {
    let names: Vec<String> = domains.iter().map(|d| d.to_string()).collect();
    format!("collective{}[{}]", if raising { "+" } else { "-" }, names.join(","))
}

/// One unit-rate collective decay term per reservoir.
pub fn build_collective_zero_t(
    basis: &BasisDescriptor,
    reservoirs: &[Reservoir],
) -> Result<MasterEquation> {
    build_realistic(basis, reservoirs, 0.0, false, 0.0)
}

/// Collective thermalisation, optional individual thermalisation and dephasing.
///
/// Per reservoir: `J⁻` at `rate·(n̄+1)` and `J⁺` at `rate·n̄`. Per spin (when
/// `include_individual`): `σ⁻` at `n̄+1` and `σ⁺` at `n̄`. Per spin: `σᶻ` at
/// `gamma_dep_over_gamma`. Terms whose rate is exactly zero are omitted.
pub fn build_realistic(
    basis: &BasisDescriptor,
    reservoirs: &[Reservoir],
    nbar: f64,
    include_individual: bool,
    gamma_dep_over_gamma: f64,
) -> Result<MasterEquation> {
    check_rate(nbar, "thermal occupation")?;
    check_rate(gamma_dep_over_gamma, "dephasing")?;
    let local = include_individual || gamma_dep_over_gamma > 0.0;
    if local && basis.backend() != Backend::Full {
        return Err(Error::unsupported(
            "individual decay and dephasing need the full backend",
        ));
    }
    let mut eq = MasterEquation::empty(basis.clone());
    for res in reservoirs {
        check_rate(res.rate, "reservoir")?;
        let lower = reservoir_jump(basis, &res.domains)?;
        let down_rate = res.rate * (nbar + 1.0);
        let up_rate = res.rate * nbar;
        if up_rate > 0.0 {
            eq.push(LindbladTerm {
                jump: lower.adjoint(),
                rate: up_rate,
                label: reservoir_label(&res.domains, true),
            })?;
        }
        if down_rate > 0.0 {
            eq.push(LindbladTerm {
                jump: lower,
                rate: down_rate,
                label: reservoir_label(&res.domains, false),
            })?;
        }
    }
    if local {
        for m in 0..basis.num_domains() {
            for s in 0..basis.domain_pops()[m] {
                let mut add = |kind: SpinOp, rate: f64, tag: &str| -> Result<()> {
                    if rate > 0.0 {
                        eq.push(LindbladTerm {
                            jump: spin_operator(basis, m, s, kind)?,
                            rate,
                            label: format!("{tag}[{m}.{s}]"),
                        })?;
                    }
                    Ok(())
                };
                if include_individual {
                    add(SpinOp::Lower, nbar + 1.0, "sigma-")?;
                    add(SpinOp::Raise, nbar, "sigma+")?;
                }
                add(SpinOp::Z, gamma_dep_over_gamma, "dephasing")?;
            }
        }
    }
    Ok(eq)
}

/// `dρ/dτ` for the equation, as a dense matrix.
pub fn lindblad_rhs(eq: &MasterEquation, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
    if rho.basis() != eq.basis() {
        return Err(Error::invalid(format!(
            "state on {} but equation on {}",
            rho.basis(),
            eq.basis()
        )));
    }
    let gen = eq.generator();
    let mut out = DMatrix::zeros(rho.dim(), rho.dim());
    gen.apply(rho.matrix(), &mut out);
    Ok(out)
}

/// `Tr(ρ·op)` for a Hermitian operator.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<f64> {
    if rho.basis() != op.basis() {
        return Err(Error::invalid("expectation over mismatched bases"));
    }
    let m = rho.matrix();
    let value: C64 = op
        .triplets()
        .into_iter()
        .map(|(r, c, v)| v * m[(c, r)])
        .sum();
    if value.im.abs() > 1e-10 {
        return Err(Error::NumericalFailure(format!(
            "expectation value has imaginary part {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// First time the series reaches half its maximum, linearly interpolated.
pub fn half_max_time(series: &[f64], times: &[f64]) -> Result<f64> {
    if series.is_empty() || series.len() != times.len() {
        return Err(Error::invalid(
            "half-max time needs a nonempty series with one time per value",
        ));
    }
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::UndefinedResult(
            "series never rises above zero".into(),
        ));
    }
    let target = 0.5 * max;
    let i = series
        .iter()
        .position(|&v| v >= target)
        .expect("the maximum itself reaches the target");
    if i == 0 {
        return Ok(times[0]);
    }
    let (s0, s1) = (series[i - 1], series[i]);
    let (t0, t1) = (times[i - 1], times[i]);
    Ok(t0 + (target - s0) / (s1 - s0) * (t1 - t0))
}

#[cfg(test)]
mod tests;
