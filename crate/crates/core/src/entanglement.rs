//! Entanglement quantifiers: Wootters concurrence, entanglement of
//! formation, (logarithmic) negativity and tripartite negativity.

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, C64};
use crate::linalg::hermitian_eigenvalues;

/// Imaginary parts of the spectrum of ρρ̃ above this are reported as a numerical failure.
const SPECTRUM_IMAG_TOL: f64 = 1e-9;
/// Negative real parts of the spectrum of ρρ̃ down to this are treated as zero.
const SPECTRUM_NEG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub concurrence: f64,
    pub eof: f64,
    pub negativity: Option<f64>,
    pub log_negativity: Option<f64>,
}

impl EntanglementReport {
    /// All measures for a two-qubit state.
    pub fn two_qubit(rho: &DensityMatrix) -> Result<Self> {
        let c = concurrence(rho)?;
        Ok(Self {
            concurrence: c,
            eof: eof_from_concurrence(c)?,
            negativity: Some(negativity(rho, &[0])?),
            log_negativity: Some(log_negativity(rho, &[0])?),
        })
    }
}

fn spin_flip() -> DMatrix<C64> {
    let mut y = DMatrix::zeros(4, 4);
    y[(0, 3)] = C64::new(-1.0, 0.0);
    y[(1, 2)] = C64::new(1.0, 0.0);
    y[(2, 1)] = C64::new(1.0, 0.0);
    y[(3, 0)] = C64::new(-1.0, 0.0);
    y
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if !rho.basis().is_qubit_register(2) {
        return Err(Error::invalid(format!(
            "concurrence needs a two-qubit state, got {}",
            rho.basis()
        )));
    }
    let m = rho.matrix();
    let y = spin_flip();
    let tilde = &y * m.conjugate() * &y;
    let product = m * tilde;
    let spectrum = Schur::new(product)
        .eigenvalues()
        .ok_or_else(|| Error::NumericalFailure("Schur form of ρρ̃ not triangular".into()))?;
    let mut lambdas = Vec::with_capacity(4);
    for z in spectrum.iter() {
        if z.im.abs() > SPECTRUM_IMAG_TOL {
            return Err(Error::NumericalFailure(format!(
                "eigenvalue of ρρ̃ has imaginary part {:.3e}",
                z.im
            )));
        }
        if z.re < -SPECTRUM_NEG_TOL {
            return Err(Error::NumericalFailure(format!(
                "eigenvalue of ρρ̃ has negative real part {:.3e}",
                z.re
            )));
        }
        lambdas.push(z.re.max(0.0).sqrt());
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(c.clamp(0.0, 1.0))
}

fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Entanglement of formation (ebits) as a function of concurrence.
pub fn eof_from_concurrence(c: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&c) || c.is_nan() {
        return Err(Error::invalid(format!("concurrence {c} outside [0, 1]")));
    }
    let c = c.clamp(0.0, 1.0);
    Ok(binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0))
}

pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    eof_from_concurrence(concurrence(rho)?)
}

/// Partial transpose over the domains in `side`.
pub fn partial_transpose(rho: &DensityMatrix, side: &[usize]) -> Result<DMatrix<C64>> {
    let basis = rho.basis();
    let side = basis.check_domain_set(side, "partition")?;
    if side.len() == basis.num_domains() {
        return Err(Error::invalid(
            "partition must leave at least one domain on the other side",
        ));
    }
    let (sub, rest, _, rest_dim) = basis.split_indices(&side);
    let dim = basis.dim();
    let mut compose = vec![0usize; dim];
    for g in 0..dim {
        compose[sub[g] * rest_dim + rest[g]] = g;
    }
    let m = rho.matrix();
    Ok(DMatrix::from_fn(dim, dim, |r, c| {
        let src_r = compose[sub[c] * rest_dim + rest[r]];
        let src_c = compose[sub[r] * rest_dim + rest[c]];
        m[(src_r, src_c)]
    }))
}

fn partial_transpose_trace_norm(rho: &DensityMatrix, side: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, side)?;
    Ok(hermitian_eigenvalues(&pt)?.iter().map(|l| l.abs()).sum())
}

/// `(‖ρ^Γ‖₁ − 1) / 2`, floored at zero.
pub fn negativity(rho: &DensityMatrix, side: &[usize]) -> Result<f64> {
    Ok(((partial_transpose_trace_norm(rho, side)? - 1.0) / 2.0).max(0.0))
}

/// `log₂ ‖ρ^Γ‖₁`, floored at zero.
pub fn log_negativity(rho: &DensityMatrix, side: &[usize]) -> Result<f64> {
    Ok(partial_transpose_trace_norm(rho, side)?.log2().max(0.0))
}

/// Geometric mean of the three one-versus-two negativities of a three-qubit state.
pub fn tripartite_negativity(rho: &DensityMatrix) -> Result<f64> {
    if !rho.basis().is_qubit_register(3) {
        return Err(Error::invalid(format!(
            "tripartite negativity needs a three-qubit state, got {}",
            rho.basis()
        )));
    }
    let mut product = 1.0;
    for i in 0..3 {
        product *= negativity(rho, &[i])?;
    }
    Ok(product.cbrt())
}
