//! Scalar observables recorded along trajectories.
//!
//! Written as `eof(A,C)`, `concurrence(A,C)`, `jz(B)`, `negativity(A|B)`,
//! `log_negativity(A|B,C)` or `tripartite_negativity(A,B,C)`, where the
//! names are domain labels. CSV columns use the flattened form `eof_A_C`,
//! `jz_B`, `negativity_A|B`, and so on.

use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence, entanglement_of_formation, log_negativity, negativity, tripartite_negativity};
use crate::error::{Error, Result};
use crate::hilbert::{Backend, BasisDescriptor, DensityMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// Entanglement of formation between two single-spin domains.
    Eof { pair: [usize; 2] },
    Concurrence { pair: [usize; 2] },
    /// `⟨Jz⟩/N` of one domain, in [−1/2, 1/2].
    JzNormalized { domain: usize },
    /// Negativity of the state reduced to `side ∪ rest`, transposing `side`.
    Negativity { side: Vec<usize>, rest: Vec<usize> },
    LogNegativity { side: Vec<usize>, rest: Vec<usize> },
    TripartiteNegativity { triple: [usize; 3] },
}

fn default_label(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("D{i}")
    }
}

/// Letters A, B, C, … for `n` domains.
pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(default_label).collect()
}

fn label(labels: &[String], i: usize) -> String {
    labels.get(i).cloned().unwrap_or_else(|| default_label(i))
}

fn join(labels: &[String], idx: &[usize], sep: &str) -> String {
    idx.iter().map(|&i| label(labels, i)).collect::<Vec<_>>().join(sep)
}

impl Observable {
    /// Column name with default letter labels.
    pub fn name(&self) -> String {
        self.column_name(&[])
    }

    pub fn column_name(&self, labels: &[String]) -> String {
        match self {
            Observable::Eof { pair } => format!("eof_{}", join(labels, pair, "_")),
            Observable::Concurrence { pair } => format!("concurrence_{}", join(labels, pair, "_")),
            Observable::JzNormalized { domain } => format!("jz_{}", label(labels, *domain)),
            Observable::Negativity { side, rest } => {
                format!("negativity_{}|{}", join(labels, side, "_"), join(labels, rest, "_"))
            }
            Observable::LogNegativity { side, rest } => {
                format!("log_negativity_{}|{}", join(labels, side, "_"), join(labels, rest, "_"))
            }
            Observable::TripartiteNegativity { triple } => {
                format!("tripartite_negativity_{}", join(labels, triple, "_"))
            }
        }
    }

    /// Expression form accepted by [`Observable::parse`].
    pub fn expression(&self, labels: &[String]) -> String {
        match self {
            Observable::Eof { pair } => format!("eof({})", join(labels, pair, ",")),
            Observable::Concurrence { pair } => format!("concurrence({})", join(labels, pair, ",")),
            Observable::JzNormalized { domain } => format!("jz({})", label(labels, *domain)),
            Observable::Negativity { side, rest } => {
                format!("negativity({}|{})", join(labels, side, ","), join(labels, rest, ","))
            }
            Observable::LogNegativity { side, rest } => {
                format!("log_negativity({}|{})", join(labels, side, ","), join(labels, rest, ","))
            }
            Observable::TripartiteNegativity { triple } => {
                format!("tripartite_negativity({})", join(labels, triple, ","))
            }
        }
    }

    /// Parses an expression such as `eof(A,C)` against domain labels.
    pub fn parse(expr: &str, labels: &[String]) -> Result<Self> {
        let expr = expr.trim();
        let open = expr
            .find('(')
            .filter(|_| expr.ends_with(')'))
            .ok_or_else(|| Error::invalid(format!("observable '{expr}': expected name(args)")))?;
        let head = expr[..open].trim();
        let body = &expr[open + 1..expr.len() - 1];
        let lookup = |s: &str| -> Result<usize> {
            let s = s.trim();
            labels.iter().position(|l| l == s).ok_or_else(|| {
                Error::invalid(format!(
                    "observable '{expr}': unknown domain '{s}' (known: {})",
                    labels.join(", ")
                ))
            })
        };
        let list = |s: &str| -> Result<Vec<usize>> {
            s.split(',').filter(|p| !p.trim().is_empty()).map(lookup).collect()
        };
        let fixed = |n: usize| -> Result<Vec<usize>> {
            let v = list(body)?;
            if v.len() != n {
                return Err(Error::invalid(format!(
                    "observable '{expr}': expected {n} domain(s), got {}",
                    v.len()
                )));
            }
            Ok(v)
        };
        let split = || -> Result<(Vec<usize>, Vec<usize>)> {
            let (l, r) = body.split_once('|').ok_or_else(|| {
                Error::invalid(format!("observable '{expr}': expected a partition 'X|Y'"))
            })?;
            Ok((list(l)?, list(r)?))
        };
        match head {
            "eof" => {
                let v = fixed(2)?;
                Ok(Observable::Eof { pair: [v[0], v[1]] })
            }
            "concurrence" => {
                let v = fixed(2)?;
                Ok(Observable::Concurrence { pair: [v[0], v[1]] })
            }
            "jz" => Ok(Observable::JzNormalized { domain: fixed(1)?[0] }),
            "negativity" => {
                let (side, rest) = split()?;
                Ok(Observable::Negativity { side, rest })
            }
            "log_negativity" => {
                let (side, rest) = split()?;
                Ok(Observable::LogNegativity { side, rest })
            }
            "tripartite_negativity" => {
                let v = fixed(3)?;
                Ok(Observable::TripartiteNegativity {
                    triple: [v[0], v[1], v[2]],
                })
            }
            other => Err(Error::invalid(format!(
                "unknown observable '{other}' (known: eof, concurrence, jz, negativity, log_negativity, tripartite_negativity)"
            ))),
        }
    }

    fn domains(&self) -> Vec<usize> {
        match self {
            Observable::Eof { pair } | Observable::Concurrence { pair } => pair.to_vec(),
            Observable::JzNormalized { domain } => vec![*domain],
            Observable::Negativity { side, rest } | Observable::LogNegativity { side, rest } => {
                side.iter().chain(rest).copied().collect()
            }
            Observable::TripartiteNegativity { triple } => triple.to_vec(),
        }
    }

    /// Checks domain indices and shape requirements against a basis.
    pub fn check(&self, basis: &BasisDescriptor) -> Result<()> {
        let doms = self.domains();
        let mut sorted = doms.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != doms.len() {
            return Err(Error::invalid(format!("{}: domains repeat", self.name())));
        }
        if let Some(&bad) = doms.iter().find(|&&d| d >= basis.num_domains()) {
            return Err(Error::invalid(format!(
                "{}: domain index {bad} out of range for {} domains",
                self.name(),
                basis.num_domains()
            )));
        }
        let single = |d: usize| basis.domain_pops()[d] == 1;
        match self {
            Observable::Eof { .. }
            | Observable::Concurrence { .. }
            | Observable::TripartiteNegativity { .. } => {
                if !doms.iter().all(|&d| single(d)) {
                    return Err(Error::invalid(format!(
                        "{}: needs single-spin domains",
                        self.name()
                    )));
                }
            }
            Observable::Negativity { side, rest } | Observable::LogNegativity { side, rest } => {
                if side.is_empty() || rest.is_empty() {
                    return Err(Error::invalid(format!(
                        "{}: both sides of the partition must be nonempty",
                        self.name()
                    )));
                }
            }
            Observable::JzNormalized { .. } => {}
        }
        Ok(())
    }

    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<f64> {
        self.check(rho.basis())?;
        match self {
            Observable::Eof { pair } => entanglement_of_formation(&rho.partial_trace(pair)?),
            Observable::Concurrence { pair } => concurrence(&rho.partial_trace(pair)?),
            Observable::JzNormalized { domain } => jz_normalized(rho, *domain),
            Observable::Negativity { side, rest } => {
                let (reduced, side) = reduce_for_partition(rho, side, rest)?;
                negativity(&reduced, &side)
            }
            Observable::LogNegativity { side, rest } => {
                let (reduced, side) = reduce_for_partition(rho, side, rest)?;
                log_negativity(&reduced, &side)
            }
            Observable::TripartiteNegativity { triple } => {
                tripartite_negativity(&rho.partial_trace(triple)?)
            }
        }
    }
}

fn reduce_for_partition(
    rho: &DensityMatrix,
    side: &[usize],
    rest: &[usize],
) -> Result<(DensityMatrix, Vec<usize>)> {
    let mut keep: Vec<usize> = side.iter().chain(rest).copied().collect();
    keep.sort_unstable();
    let reduced = rho.partial_trace(&keep)?;
    let side = side
        .iter()
        .map(|d| keep.iter().position(|k| k == d).expect("side is part of keep"))
        .collect();
    Ok((reduced, side))
}

/// `⟨Jz⟩/N` for one domain, read off the diagonal.
pub fn jz_normalized(rho: &DensityMatrix, domain: usize) -> Result<f64> {
    let basis = rho.basis();
    if domain >= basis.num_domains() {
        return Err(Error::invalid(format!("domain {domain} out of range")));
    }
    let strides = basis.strides();
    let ddim = basis.domain_dims()[domain];
    let n = basis.domain_pops()[domain];
    let m = rho.matrix();
    let mut acc = 0.0;
    for g in 0..basis.dim() {
        let local = (g / strides[domain]) % ddim;
        let down = match basis.backend() {
            Backend::Collective => local,
            Backend::Full => local.count_ones() as usize,
        };
        acc += m[(g, g)].re * (n as f64 / 2.0 - down as f64);
    }
    Ok(acc / n as f64)
}
