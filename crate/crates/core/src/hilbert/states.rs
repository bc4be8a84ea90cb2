use nalgebra::{DMatrix, DVector};

use super::{
    Backend, BasisDescriptor, C64, HERMITIAN_TOL, NORM_TOL, PSD_FLOOR, TRACE_TOL,
};
use crate::linalg::hermitian_eigenvalues;
use crate::error::{Error, Result};

/// Normalized state vector.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: DVector<C64>,
    basis: BasisDescriptor,
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    basis: BasisDescriptor,
}

/// Per-domain preparation used by [`product_state`].
#[derive(Debug, Clone)]
pub enum LocalState {
    /// Symmetric Dicke state with `k` spins up.
    Excitations(usize),
    /// Explicit spin configuration, `true` = up. Full backend only.
    Bits(Vec<bool>),
    /// Arbitrary local density matrix in the domain's basis.
    Density(DMatrix<C64>),
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Local vector of a pure [`LocalState`] for one domain.
fn local_vector(backend: Backend, n: usize, state: &LocalState) -> Result<Option<DVector<C64>>> {
    let d = backend.domain_dim(n)?;
    match state {
        LocalState::Excitations(k) => {
            if *k > n {
                return Err(Error::invalid(format!(
                    "{k} excitations requested in a domain of {n} spins"
                )));
            }
            let mut v = DVector::zeros(d);
            match backend {
                Backend::Collective => v[n - k] = C64::new(1.0, 0.0),
                Backend::Full => {
                    let amp = C64::new(1.0 / binomial(n, *k).sqrt(), 0.0);
                    for i in 0..d {
                        if i.count_ones() as usize == n - k {
                            v[i] = amp;
                        }
                    }
                }
            }
            Ok(Some(v))
        }
        LocalState::Bits(bits) => {
            if backend != Backend::Full {
                return Err(Error::invalid(
                    "explicit spin configurations need the full backend",
                ));
            }
            if bits.len() != n {
                return Err(Error::invalid(format!(
                    "{} spin values given for a domain of {n} spins",
                    bits.len()
                )));
            }
            let idx = bits
                .iter()
                .fold(0usize, |acc, &up| (acc << 1) | usize::from(!up));
            let mut v = DVector::zeros(d);
            v[idx] = C64::new(1.0, 0.0);
            Ok(Some(v))
        }
        LocalState::Density(_) => Ok(None),
    }
}

/// Product state over all domains of `basis`, one [`LocalState`] per domain.
pub fn product_state(basis: &BasisDescriptor, locals: &[LocalState]) -> Result<DensityMatrix> {
    if locals.len() != basis.num_domains() {
        return Err(Error::invalid(format!(
            "{} local states given for {} domains",
            locals.len(),
            basis.num_domains()
        )));
    }
    let mut matrix = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for (m, local) in locals.iter().enumerate() {
        let n = basis.domain_pops()[m];
        let d = basis.domain_dims()[m];
        let factor = match local_vector(basis.backend(), n, local)? {
            Some(v) => &v * v.adjoint(),
            None => {
                let LocalState::Density(rho) = local else {
                    unreachable!()
                };
                if rho.shape() != (d, d) {
                    return Err(Error::invalid(format!(
                        "local density matrix for domain {m} has shape {:?}, expected {d}x{d}",
                        rho.shape()
                    )));
                }
                let sub = BasisDescriptor::new(basis.backend(), &[n])?;
                DensityMatrix::new(sub, rho.clone())
                    .map_err(|e| Error::invalid(format!("domain {m}: {e}")))?;
                rho.clone()
            }
        };
        matrix = matrix.kronecker(&factor);
    }
    Ok(DensityMatrix {
        matrix,
        basis: basis.clone(),
    })
}

/// Reduced density matrix over `keep` (domain order preserved).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let basis = &rho.basis;
    let keep = basis.check_domain_set(keep, "partial trace")?;
    let sub_basis = basis.subsystem(&keep)?;
    if keep.len() == basis.num_domains() {
        return Ok(rho.clone());
    }
    let (kept, traced, kdim, tdim) = basis.split_indices(&keep);
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(kdim); tdim];
    for g in 0..basis.dim() {
        groups[traced[g]].push((kept[g], g));
    }
    let mut out = DMatrix::<C64>::zeros(kdim, kdim);
    for group in &groups {
        for &(kc, gc) in group {
            for &(kr, gr) in group {
                out[(kr, kc)] += rho.matrix[(gr, gc)];
            }
        }
    }
    Ok(DensityMatrix {
        matrix: out,
        basis: sub_basis,
    })
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity_with_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.basis != psi.basis {
        return Err(Error::invalid(format!(
            "basis mismatch: state on {} vs density matrix on {}",
            psi.basis, rho.basis
        )));
    }
    let v = &psi.amplitudes;
    let f = (v.adjoint() * &rho.matrix * v)[(0, 0)];
    if f.im.abs() > 1e-10 {
        return Err(Error::NumericalFailure(format!(
            "fidelity has imaginary part {:.3e}",
            f.im
        )));
    }
    Ok(f.re.clamp(0.0, 1.0))
}

/// Isometry from the symmetric subspace of `n` spins into the full space.
///
/// Column `k` is the Dicke state with `n - k` spins up, matching the
/// collective-backend ordering.
pub fn dicke_isometry(n: usize) -> Result<DMatrix<C64>> {
    let dim = Backend::Full.domain_dim(n)?;
    let mut v = DMatrix::zeros(dim, n + 1);
    for k in 0..=n {
        let amp = 1.0 / binomial(n, k).sqrt();
        for i in 0..dim {
            if i.count_ones() as usize == k {
                v[(i, k)] = C64::new(amp, 0.0);
            }
        }
    }
    Ok(v)
}

/// Isometry mapping a collective-backend space into its full-backend counterpart.
pub fn collective_to_full_isometry(basis: &BasisDescriptor) -> Result<DMatrix<C64>> {
    if basis.backend() != Backend::Collective {
        return Err(Error::invalid("basis is not a collective-backend basis"));
    }
    let mut v = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for &n in basis.domain_pops() {
        v = v.kronecker(&dicke_isometry(n)?);
    }
    Ok(v)
}

impl PureState {
    pub fn new(basis: BasisDescriptor, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::invalid(format!(
                "{} amplitudes for a {}-dimensional basis",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Normalizes `amplitudes` before wrapping them.
    pub fn normalized(basis: BasisDescriptor, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        Self::new(basis, amplitudes.unscale(norm))
    }

    pub fn basis_state(basis: BasisDescriptor, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut v = DVector::zeros(basis.dim());
        v[index] = C64::new(1.0, 0.0);
        Ok(Self {
            amplitudes: v,
            basis,
        })
    }

    /// Product of pure per-domain preparations.
    pub fn product(basis: BasisDescriptor, locals: &[LocalState]) -> Result<Self> {
        if locals.len() != basis.num_domains() {
            return Err(Error::invalid("one local state per domain required"));
        }
        let mut v = DVector::from_element(1, C64::new(1.0, 0.0));
        for (m, local) in locals.iter().enumerate() {
            let factor = local_vector(basis.backend(), basis.domain_pops()[m], local)?
                .ok_or_else(|| Error::invalid("mixed local state in a pure product"))?;
            v = v.kronecker(&factor);
        }
        Ok(Self {
            amplitudes: v,
            basis,
        })
    }

    /// All spins down.
    pub fn ground(basis: BasisDescriptor) -> Self {
        let last = basis.dim() - 1;
        Self::basis_state(basis, last).expect("last index exists")
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::invalid("inner product over mismatched bases"));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            basis: self.basis.clone(),
        }
    }

    /// Projects a full-backend state onto the symmetric subspace of every domain.
    ///
    /// Fails when more than `1e-10` of the norm lies outside that subspace.
    pub fn to_collective(&self) -> Result<PureState> {
        if self.basis.backend() != Backend::Full {
            return Err(Error::invalid("state is not in the full backend"));
        }
        let cbasis = self.basis.to_collective()?;
        let v = collective_to_full_isometry(&cbasis)?;
        let projected = v.adjoint() * &self.amplitudes;
        let lost = 1.0 - projected.norm_squared();
        if lost.abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "state has weight {lost:.3e} outside the symmetric subspace"
            )));
        }
        PureState::normalized(cbasis, projected)
    }
}

impl DensityMatrix {
    /// Wraps `matrix`, checking Hermiticity, trace and positivity.
    pub fn new(basis: BasisDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(basis, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps `matrix` after a shape check only.
    pub fn from_matrix_unchecked(basis: BasisDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = basis.dim();
        if matrix.shape() != (dim, dim) {
            return Err(Error::invalid(format!(
                "matrix shape {:?} does not match basis dimension {dim}",
                matrix.shape()
            )));
        }
        Ok(Self { matrix, basis })
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid(format!("trace {tr} is not 1")));
        }
        let min = self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        if min < PSD_FLOOR {
            return Err(Error::invalid(format!(
                "matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(())
    }

    pub fn maximally_mixed(basis: BasisDescriptor) -> Self {
        let d = basis.dim();
        Self {
            matrix: DMatrix::from_diagonal_element(d, d, C64::new(1.0 / d as f64, 0.0)),
            basis,
        }
    }

    /// Convex combination `Σ wᵢ ρᵢ`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::invalid("empty mixture"))?;
        let mut matrix = DMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.basis != first.basis {
                return Err(Error::invalid("mixture over mismatched bases"));
            }
            if *w < 0.0 {
                return Err(Error::invalid("negative mixture weight"));
            }
            matrix += &rho.matrix * C64::new(*w, 0.0);
        }
        Self::new(first.basis.clone(), matrix)
    }

    pub fn basis(&self) -> &BasisDescriptor {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            for r in 0..=c {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Replaces the matrix by its Hermitian part.
    pub fn symmetrize(&mut self) {
        let adj = self.matrix.adjoint();
        self.matrix += adj;
        self.matrix.scale_mut(0.5);
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut ev = hermitian_eigenvalues(&h)?;
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }

    /// Population of basis vector `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::invalid(format!(
                "trace distance between {} and {}",
                self.basis, other.basis
            )));
        }
        let diff = &self.matrix - &other.matrix;
        let h = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        Ok(0.5 * hermitian_eigenvalues(&h)?.iter().map(|l| l.abs()).sum::<f64>())
    }

    /// Maps a collective-backend state into the full tensor-product space.
    pub fn to_full(&self) -> Result<DensityMatrix> {
        match self.basis.backend() {
            Backend::Full => Ok(self.clone()),
            Backend::Collective => {
                let v = collective_to_full_isometry(&self.basis)?;
                Ok(DensityMatrix {
                    matrix: &v * &self.matrix * v.adjoint(),
                    basis: self.basis.to_full()?,
                })
            }
        }
    }
}
