use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::{Backend, BasisDescriptor, C64, DENSE_DIM_LIMIT};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum OpMatrix {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix<C64>),
}

/// A linear operator on the space described by its basis.
#[derive(Debug, Clone)]
pub struct Operator {
    matrix: OpMatrix,
    basis: BasisDescriptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinOp {
    /// σ⁻ = |↓⟩⟨↑|
    Lower,
    /// σ⁺ = |↑⟩⟨↓|
    Raise,
    /// σᶻ = |↑⟩⟨↑| − |↓⟩⟨↓|
    Z,
}

fn csr_from_triplets(dim: usize, triplets: &[(usize, usize, C64)]) -> CsrMatrix<C64> {
    let mut coo = CooMatrix::new(dim, dim);
    for &(r, c, v) in triplets {
        if v != C64::new(0.0, 0.0) {
            coo.push(r, c, v);
        }
    }
    CsrMatrix::from(&coo)
}

impl Operator {
    /// Builds an operator from (row, col, value) entries; duplicates are summed.
    ///
    /// Storage is dense up to [`DENSE_DIM_LIMIT`] unless `force_sparse`.
    pub fn from_triplets(
        basis: BasisDescriptor,
        triplets: &[(usize, usize, C64)],
        force_sparse: bool,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::invalid(format!(
                "entry ({r}, {c}) outside a {dim}-dimensional space"
            )));
        }
        let matrix = if force_sparse || dim > DENSE_DIM_LIMIT {
            OpMatrix::Sparse(csr_from_triplets(dim, triplets))
        } else {
            let mut m = DMatrix::zeros(dim, dim);
            for &(r, c, v) in triplets {
                m[(r, c)] += v;
            }
            OpMatrix::Dense(m)
        };
        Ok(Self { matrix, basis })
    }

    pub fn from_dense(basis: BasisDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = basis.dim();
        if matrix.shape() != (dim, dim) {
            return Err(Error::invalid(format!(
                "matrix shape {:?} does not match basis dimension {dim}",
                matrix.shape()
            )));
        }
        Ok(Self {
            matrix: OpMatrix::Dense(matrix),
            basis,
        })
    }

    pub fn identity(basis: BasisDescriptor) -> Self {
        let dim = basis.dim();
        let triplets: Vec<_> = (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(basis, &triplets, false).expect("diagonal entries are in range")
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn storage(&self) -> &OpMatrix {
        &self.matrix
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.matrix, OpMatrix::Sparse(_))
    }

    /// Nonzero entries as (row, col, value).
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.matrix {
            OpMatrix::Dense(m) => {
                let mut out = Vec::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let v = m[(r, c)];
                        if v != C64::new(0.0, 0.0) {
                            out.push((r, c, v));
                        }
                    }
                }
                out
            }
            OpMatrix::Sparse(s) => s.triplet_iter().map(|(r, c, v)| (r, c, *v)).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.matrix {
            OpMatrix::Dense(m) => m.clone(),
            OpMatrix::Sparse(s) => {
                let mut m = DMatrix::zeros(s.nrows(), s.ncols());
                for (r, c, v) in s.triplet_iter() {
                    m[(r, c)] += *v;
                }
                m
            }
        }
    }

    pub fn to_csr(&self) -> CsrMatrix<C64> {
        match &self.matrix {
            OpMatrix::Sparse(s) => s.clone(),
            OpMatrix::Dense(_) => csr_from_triplets(self.dim(), &self.triplets()),
        }
    }

    pub fn adjoint(&self) -> Operator {
        let matrix = match &self.matrix {
            OpMatrix::Dense(m) => OpMatrix::Dense(m.adjoint()),
            OpMatrix::Sparse(s) => {
                let t: Vec<_> = s
                    .triplet_iter()
                    .map(|(r, c, v)| (c, r, v.conj()))
                    .collect();
                OpMatrix::Sparse(csr_from_triplets(s.nrows(), &t))
            }
        };
        Operator {
            matrix,
            basis: self.basis.clone(),
        }
    }

    /// Elementwise sum of operators sharing this basis.
    pub fn sum(basis: BasisDescriptor, ops: &[Operator], force_sparse: bool) -> Result<Self> {
        let mut triplets = Vec::new();
        for op in ops {
            if op.basis != basis {
                return Err(Error::invalid("operator sum over mismatched bases"));
            }
            triplets.extend(op.triplets());
        }
        Self::from_triplets(basis, &triplets, force_sparse)
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::invalid("vector length does not match operator"));
        }
        Ok(match &self.matrix {
            OpMatrix::Dense(m) => m * v,
            OpMatrix::Sparse(s) => {
                let mut out = DVector::zeros(v.len());
                for (r, row) in s.row_iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (&c, val) in row.col_indices().iter().zip(row.values()) {
                        acc += val * v[c];
                    }
                    out[r] = acc;
                }
                out
            }
        })
    }

    /// `self · m` for a dense right-hand side.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        match &self.matrix {
            OpMatrix::Dense(a) => a * m,
            OpMatrix::Sparse(s) => s * m,
        }
    }
}

fn single_domain(n: usize, backend: Backend) -> Result<BasisDescriptor> {
    if n == 0 {
        return Err(Error::invalid("collective operators need N >= 1"));
    }
    BasisDescriptor::new(backend, &[n])
}

/// Collective lowering operator J⁻ for one domain of `n` spins.
pub fn collective_lowering(n: usize, backend: Backend) -> Result<Operator> {
    let basis = single_domain(n, backend)?;
    let one = C64::new(1.0, 0.0);
    let triplets: Vec<_> = match backend {
        Backend::Collective => {
            let j = n as f64 / 2.0;
            (0..n)
                .map(|k| {
                    let m = j - k as f64;
                    (k + 1, k, C64::new((j * (j + 1.0) - m * (m - 1.0)).sqrt(), 0.0))
                })
                .collect()
        }
        Backend::Full => {
            let dim = 1usize << n;
            let mut t = Vec::with_capacity(n * dim / 2);
            for p in 0..n {
                let bit = 1usize << (n - 1 - p);
                for i in (0..dim).filter(|i| i & bit == 0) {
                    t.push((i | bit, i, one));
                }
            }
            t
        }
    };
    Operator::from_triplets(basis, &triplets, backend == Backend::Full)
}

/// Collective raising operator J⁺ (adjoint of [`collective_lowering`]).
pub fn collective_raising(n: usize, backend: Backend) -> Result<Operator> {
    Ok(collective_lowering(n, backend)?.adjoint())
}

/// Collective Jᶻ for one domain of `n` spins.
pub fn collective_jz(n: usize, backend: Backend) -> Result<Operator> {
    let basis = single_domain(n, backend)?;
    let triplets: Vec<_> = match backend {
        Backend::Collective => (0..=n)
            .map(|k| (k, k, C64::new(n as f64 / 2.0 - k as f64, 0.0)))
            .collect(),
        Backend::Full => (0..1usize << n)
            .map(|i| {
                let down = i.count_ones() as f64;
                (i, i, C64::new((n as f64 - 2.0 * down) / 2.0, 0.0))
            })
            .collect(),
    };
    Operator::from_triplets(basis, &triplets, false)
}

fn kron_identity_triplets(
    local: &[(usize, usize, C64)],
    local_dim: usize,
    left: usize,
    right: usize,
) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::with_capacity(local.len() * left * right);
    for l in 0..left {
        for &(r, c, v) in local {
            for k in 0..right {
                out.push((
                    (l * local_dim + r) * right + k,
                    (l * local_dim + c) * right + k,
                    v,
                ));
            }
        }
    }
    out
}

/// Embeds a single-domain operator at domain `m`, identity elsewhere.
pub fn embed(op: &Operator, basis: &BasisDescriptor, m: usize) -> Result<Operator> {
    if m >= basis.num_domains() {
        return Err(Error::invalid(format!("domain index {m} out of range")));
    }
    let d = basis.domain_dims()[m];
    if op.dim() != d {
        return Err(Error::invalid(format!(
            "operator dimension {} does not match domain {m} dimension {d}",
            op.dim()
        )));
    }
    let left: usize = basis.domain_dims()[..m].iter().product();
    let right: usize = basis.domain_dims()[m + 1..].iter().product();
    let triplets = kron_identity_triplets(&op.triplets(), d, left, right);
    Operator::from_triplets(
        basis.clone(),
        &triplets,
        op.is_sparse() || basis.backend() == Backend::Full,
    )
}

/// Jump operator of a reservoir shared by `domains`: the sum of their collective lowering operators.
pub fn reservoir_jump(basis: &BasisDescriptor, domains: &[usize]) -> Result<Operator> {
    let domains = basis.check_domain_set(domains, "reservoir")?;
    let mut triplets = Vec::new();
    for &m in &domains {
        let local = collective_lowering(basis.domain_pops()[m], basis.backend())?;
        let d = basis.domain_dims()[m];
        let left: usize = basis.domain_dims()[..m].iter().product();
        let right: usize = basis.domain_dims()[m + 1..].iter().product();
        triplets.extend(kron_identity_triplets(&local.triplets(), d, left, right));
    }
    Operator::from_triplets(basis.clone(), &triplets, basis.backend() == Backend::Full)
}

/// Pauli-type operator on spin `spin` of domain `domain`. Full backend only.
pub fn spin_operator(
    basis: &BasisDescriptor,
    domain: usize,
    spin: usize,
    kind: SpinOp,
) -> Result<Operator> {
    if basis.backend() != Backend::Full {
        return Err(Error::unsupported(
            "single-spin operators need the full backend",
        ));
    }
    if domain >= basis.num_domains() {
        return Err(Error::invalid(format!("domain index {domain} out of range")));
    }
    let n = basis.domain_pops()[domain];
    if spin >= n {
        return Err(Error::invalid(format!(
            "spin {spin} out of range for domain {domain} of {n} spins"
        )));
    }
    let strides = basis.strides();
    let bit = strides[domain] << (n - 1 - spin);
    let dim = basis.dim();
    let one = C64::new(1.0, 0.0);
    let triplets: Vec<_> = match kind {
        SpinOp::Lower => (0..dim)
            .filter(|i| i & bit == 0)
            .map(|i| (i | bit, i, one))
            .collect(),
        SpinOp::Raise => (0..dim)
            .filter(|i| i & bit != 0)
            .map(|i| (i & !bit, i, one))
            .collect(),
        SpinOp::Z => (0..dim)
            .map(|i| (i, i, if i & bit == 0 { one } else { -one }))
            .collect(),
    };
    Operator::from_triplets(basis.clone(), &triplets, true)
}
