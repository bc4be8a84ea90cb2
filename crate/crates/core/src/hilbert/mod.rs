//! State spaces for chains and stars of spin-1/2 domains.
//!
//! Two interchangeable representations are supported:
//!
//! * [`Backend::Collective`]: each domain of `N` spins is restricted to its
//!   maximal-`j` symmetric (Dicke) subspace of dimension `N + 1`. Index `k`
//!   within a domain is the Dicke level `m = N/2 - k`, so index 0 is the
//!   fully excited state.
//! * [`Backend::Full`]: each domain carries the full `2^N` tensor product
//!   space. Bitstrings are ordered lexicographically with spin 0 as the most
//!   significant bit and `up = 0`, so index 0 is again fully excited.
//!
//! Domains are composed in declaration order (first domain most significant).

mod operators;
mod states;

pub use operators::{
    collective_jz, collective_lowering, collective_raising, embed, reservoir_jump, spin_operator,
    OpMatrix, Operator, SpinOp,
};
pub use states::{
    collective_to_full_isometry, dicke_isometry, fidelity_with_pure, partial_trace,
    product_state, DensityMatrix, LocalState, PureState,
};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Operators on spaces up to this dimension are stored dense.
pub const DENSE_DIM_LIMIT: usize = 256;
/// Max-abs elementwise deviation from Hermiticity accepted for a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Accepted deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-8;
/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_FLOOR: f64 = -1e-9;
/// Accepted deviation of a pure state's norm from one.
pub const NORM_TOL: f64 = 1e-12;

/// Largest total Hilbert-space dimension we are willing to index.
const MAX_DIM: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Collective,
    Full,
}

impl Backend {
    /// Dimension of a single domain of `n` spins.
    pub fn domain_dim(self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::invalid("a spin domain needs at least one spin"));
        }
        match self {
            Backend::Collective => Ok(n + 1),
            Backend::Full => {
                if n >= 28 {
                    return Err(Error::invalid(format!(
                        "full-space domain of {n} spins is too large to index"
                    )));
                }
                Ok(1 << n)
            }
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Collective => f.write_str("collective"),
            Backend::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "collective" => Ok(Backend::Collective),
            "full" => Ok(Backend::Full),
            other => Err(Error::invalid(format!(
                "unknown backend '{other}' (expected 'collective' or 'full')"
            ))),
        }
    }
}

/// Describes how a state vector or matrix index decomposes over spin domains.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisDescriptor {
    backend: Backend,
    domain_dims: Vec<usize>,
    domain_pops: Vec<usize>,
}

impl BasisDescriptor {
    pub fn new(backend: Backend, pops: &[usize]) -> Result<Self> {
        if pops.is_empty() {
            return Err(Error::invalid("basis needs at least one domain"));
        }
        let domain_dims = pops
            .iter()
            .map(|&n| backend.domain_dim(n))
            .collect::<Result<Vec<_>>>()?;
        let mut dim: usize = 1;
        for &d in &domain_dims {
            dim = dim
                .checked_mul(d)
                .filter(|&x| x <= MAX_DIM)
                .ok_or_else(|| Error::invalid("total Hilbert-space dimension too large"))?;
        }
        Ok(Self {
            backend,
            domain_dims,
            domain_pops: pops.to_vec(),
        })
    }

    /// `n` single-spin domains (two-level factors).
    pub fn qubits(n: usize) -> Self {
        Self::new(Backend::Full, &vec![1; n]).expect("qubit register of reasonable size")
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn domain_dims(&self) -> &[usize] {
        &self.domain_dims
    }

    pub fn domain_pops(&self) -> &[usize] {
        &self.domain_pops
    }

    pub fn num_domains(&self) -> usize {
        self.domain_dims.len()
    }

    pub fn dim(&self) -> usize {
        self.domain_dims.iter().product()
    }

    pub fn total_spins(&self) -> usize {
        self.domain_pops.iter().sum()
    }

    /// Bytes needed to hold one dense complex matrix on this space.
    pub fn density_matrix_bytes(&self) -> u128 {
        let d = self.dim() as u128;
        16 * d * d
    }

    /// True when every factor is a two-level system.
    pub fn is_qubit_register(&self, n: usize) -> bool {
        self.num_domains() == n && self.domain_dims.iter().all(|&d| d == 2)
    }

    /// Same domains in the full tensor-product representation.
    pub fn to_full(&self) -> Result<Self> {
        Self::new(Backend::Full, &self.domain_pops)
    }

    /// Same domains in the symmetric-subspace representation.
    pub fn to_collective(&self) -> Result<Self> {
        Self::new(Backend::Collective, &self.domain_pops)
    }

    /// Basis over the kept domains, in their original order.
    pub fn subsystem(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.check_domain_set(keep, "keep")?;
        let pops: Vec<usize> = keep.iter().map(|&m| self.domain_pops[m]).collect();
        Self::new(self.backend, &pops)
    }

    /// Sorts, de-duplicates and bounds-checks a set of domain indices.
    pub(crate) fn check_domain_set(&self, set: &[usize], what: &str) -> Result<Vec<usize>> {
        if set.is_empty() {
            return Err(Error::invalid(format!("{what}: empty domain set")));
        }
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("{what}: repeated domain index")));
        }
        if let Some(&bad) = sorted.iter().find(|&&m| m >= self.num_domains()) {
            return Err(Error::invalid(format!(
                "{what}: domain index {bad} out of range for {} domains",
                self.num_domains()
            )));
        }
        Ok(sorted)
    }

    /// Row-major strides of the domain factors.
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.num_domains()];
        for m in (0..self.num_domains().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * self.domain_dims[m + 1];
        }
        strides
    }

    /// Splits every global index into (index over `subset`, index over the rest).
    pub(crate) fn split_indices(&self, subset: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
        let in_subset: Vec<bool> = (0..self.num_domains())
            .map(|m| subset.contains(&m))
            .collect();
        let dim = self.dim();
        let mut sub_idx = vec![0; dim];
        let mut rest_idx = vec![0; dim];
        let mut sub_dim = 1;
        let mut rest_dim = 1;
        for (m, &d) in self.domain_dims.iter().enumerate() {
            if in_subset[m] {
                sub_dim *= d;
            } else {
                rest_dim *= d;
            }
        }
        let strides = self.strides();
        for g in 0..dim {
            let (mut s, mut r) = (0, 0);
            for (m, &d) in self.domain_dims.iter().enumerate() {
                let local = (g / strides[m]) % d;
                if in_subset[m] {
                    s = s * d + local;
                } else {
                    r = r * d + local;
                }
            }
            sub_idx[g] = s;
            rest_idx[g] = r;
        }
        (sub_idx, rest_idx, sub_dim, rest_dim)
    }
}

impl fmt::Display for BasisDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?} (dim {})", self.backend, self.domain_pops, self.dim())
    }
}
