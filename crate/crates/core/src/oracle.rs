//! Closed-form states for the three-domain chain `(1, N_B, 1)` and the
//! two-spin and star examples, used as ground truth for the integrator.
//!
//! Oracle states live in the full backend; use [`PureState::to_collective`]
//! to compare against symmetric-subspace runs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Backend, BasisDescriptor, DensityMatrix, PureState, C64};

fn chain_basis(nb: usize) -> Result<BasisDescriptor> {
    if nb == 0 {
        return Err(Error::invalid("N_B must be at least 1"));
    }
    BasisDescriptor::new(Backend::Full, &[1, nb, 1])
}

/// Full-backend index of `|a⟩|b⟩|c⟩` in the chain, bits set for down spins.
fn chain_index(nb: usize, a_down: bool, b_bits: usize, c_down: bool) -> usize {
    ((a_down as usize) << (nb + 1)) | (b_bits << 1) | (c_down as usize)
}

/// Amplitude vector `α(|↑↓…↓↓⟩ + s·|↓↓…↓↑⟩) + β Σ_k |↓ 1_k ↓⟩`.
fn chain_superposition(nb: usize, alpha: f64, sign: f64, beta: f64) -> Result<PureState> {
    let basis = chain_basis(nb)?;
    let all_down = (1usize << nb) - 1;
    let mut amp = DVector::<C64>::zeros(basis.dim());
    amp[chain_index(nb, false, all_down, true)] += C64::new(alpha, 0.0);
    amp[chain_index(nb, true, all_down, false)] += C64::new(sign * alpha, 0.0);
    for s in 0..nb {
        let b = all_down ^ (1 << (nb - 1 - s));
        amp[chain_index(nb, true, b, true)] += C64::new(beta, 0.0);
    }
    PureState::new(basis, amp)
}

/// The stationary state reached from `|↑⟩|↓…↓⟩|↓⟩`:
/// `√(N_B/(2N_B+1)) (|↑↓…↓↓⟩ + |↓↓…↓↑⟩ − (1/N_B) Σ_k |↓ 1_k ↓⟩)`.
pub fn dark_state(nb: usize) -> Result<PureState> {
    let n = nb as f64;
    let norm = (n / (2.0 * n + 1.0)).sqrt();
    chain_superposition(nb, norm, 1.0, -norm / n)
}

/// `(|↑↓…↓↓⟩ + |↓↓…↓↑⟩ + 2 Σ_k |↓ 1_k ↓⟩) / √(2+4N_B)`; decays to the ground state.
pub fn psi_1(nb: usize) -> Result<PureState> {
    let norm = 1.0 / (2.0 + 4.0 * nb as f64).sqrt();
    chain_superposition(nb, norm, 1.0, 2.0 * norm)
}

/// `(|↑↓…↓↓⟩ − |↓↓…↓↑⟩) / √2`; decays to the ground state.
pub fn psi_2(nb: usize) -> Result<PureState> {
    chain_superposition(nb, std::f64::consts::FRAC_1_SQRT_2, -1.0, 0.0)
}

/// Weight of the dark state in the steady state, `N_B/(2N_B+1)`.
pub fn x_dark(nb: usize) -> f64 {
    let n = nb as f64;
    n / (2.0 * n + 1.0)
}

/// Weight of `|Ψ⁺⟩` in the reduced end-spin state, `2N_B²/(2N_B+1)²`.
pub fn x_reduced(nb: usize) -> f64 {
    let n = nb as f64;
    2.0 * n * n / ((2.0 * n + 1.0) * (2.0 * n + 1.0))
}

/// Concurrence of the reduced end-spin state; equal to [`x_reduced`].
pub fn concurrence_analytic(nb: usize) -> f64 {
    x_reduced(nb)
}

/// `(1 − x_d)·|↓…↓⟩⟨↓…↓| + x_d·|ψ_d⟩⟨ψ_d|` in the requested backend.
pub fn chain_steady_state(nb: usize, backend: Backend) -> Result<DensityMatrix> {
    let mut psi = dark_state(nb)?;
    if backend == Backend::Collective {
        psi = psi.to_collective()?;
    }
    let ground = PureState::ground(psi.basis().clone()).projector();
    let x = x_dark(nb);
    DensityMatrix::mixture(&[(1.0 - x, &ground), (x, &psi.projector())])
}

fn two_qubit_projector(amps: [f64; 4]) -> DensityMatrix {
    let v = DVector::from_iterator(4, amps.iter().map(|&a| C64::new(a, 0.0)));
    PureState::normalized(BasisDescriptor::qubits(2), v)
        .expect("nonzero amplitudes")
        .projector()
}

/// `x|Ψ⁺⟩⟨Ψ⁺| + (1 − x)|↓↓⟩⟨↓↓|` with `x` from [`x_reduced`].
pub fn chain_reduced_end_state(nb: usize) -> Result<DensityMatrix> {
    if nb == 0 {
        return Err(Error::invalid("N_B must be at least 1"));
    }
    let x = x_reduced(nb);
    DensityMatrix::mixture(&[
        (x, &two_qubit_projector([0.0, 1.0, 1.0, 0.0])),
        (1.0 - x, &two_qubit_projector([0.0, 0.0, 0.0, 1.0])),
    ])
}

/// `½(|↓↓⟩⟨↓↓| + |Ψ⁻⟩⟨Ψ⁻|)`, the steady state of two spins sharing one reservoir from `|↑↓⟩`.
pub fn intro_pair_steady() -> DensityMatrix {
    DensityMatrix::mixture(&[
        (0.5, &two_qubit_projector([0.0, 0.0, 0.0, 1.0])),
        (0.5, &two_qubit_projector([0.0, 1.0, -1.0, 0.0])),
    ])
    .expect("valid mixture")
}

/// `(|↑↓↓⟩ + |↓↑↓⟩ + |↓↓↑⟩)/√3`.
pub fn w_state() -> PureState {
    let mut v = DVector::<C64>::zeros(8);
    for idx in [0b011, 0b101, 0b110] {
        v[idx] = C64::new(1.0, 0.0);
    }
    PureState::normalized(BasisDescriptor::qubits(3), v).expect("nonzero")
}

/// `(|↑↑↑⟩ + |↓↓↓⟩)/√2`.
pub fn ghz_state() -> PureState {
    let mut v = DVector::<C64>::zeros(8);
    v[0] = C64::new(1.0, 0.0);
    v[7] = C64::new(1.0, 0.0);
    PureState::normalized(BasisDescriptor::qubits(3), v).expect("nonzero")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripartiteDecomposition {
    /// `⟨↓↓↓|ρ|↓↓↓⟩`
    pub c_ground: f64,
    /// `⟨W|ρ|W⟩`
    pub c_w: f64,
    /// Frobenius norm of `ρ − c_G|↓↓↓⟩⟨↓↓↓| − c_W|W⟩⟨W|`.
    pub residual: f64,
}

/// Projects a three-qubit state onto the ground-plus-W form.
pub fn tripartite_decompose(rho: &DensityMatrix) -> Result<TripartiteDecomposition> {
    if !rho.basis().is_qubit_register(3) {
        return Err(Error::invalid(format!(
            "tripartite decomposition needs a three-qubit state, got {}",
            rho.basis()
        )));
    }
    let w = w_state();
    let ground = PureState::ground(BasisDescriptor::qubits(3));
    let m = rho.matrix();
    let c_ground = m[(7, 7)].re;
    let c_w = (w.amplitudes().adjoint() * m * w.amplitudes())[(0, 0)].re;
    let model: DMatrix<C64> = ground.projector().into_matrix() * C64::new(c_ground, 0.0)
        + w.projector().into_matrix() * C64::new(c_w, 0.0);
    Ok(TripartiteDecomposition {
        c_ground,
        c_w,
        residual: (m - model).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{concurrence, eof_from_concurrence, negativity, tripartite_negativity};
    use crate::hilbert::{reservoir_jump, LocalState};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn dark_state_for_two_bath_spins() {
        // √(2/5)(|↑↓↓↓⟩ − ½|↓↑↓↓⟩ − ½|↓↓↑↓⟩ + |↓↓↓↑⟩), spins A B1 B2 C with up = 0.
        let psi = dark_state(2).unwrap();
        let s = (2.0f64 / 5.0).sqrt();
        let mut want = DVector::<C64>::zeros(16);
        want[0b0111] = c(s);
        want[0b1011] = c(-s / 2.0);
        want[0b1101] = c(-s / 2.0);
        want[0b1110] = c(s);
        assert!((psi.amplitudes() - want).norm() < 1e-15);
    }

    #[test]
    fn family_is_orthonormal_and_dark_state_is_annihilated() {
        for nb in 1..=8 {
            let d = dark_state(nb).unwrap();
            let p1 = psi_1(nb).unwrap();
            let p2 = psi_2(nb).unwrap();
            for v in [&d, &p1, &p2] {
                assert!((v.amplitudes().norm() - 1.0).abs() < 1e-12);
            }
            assert!(d.inner(&p1).unwrap().norm() < 1e-12);
            assert!(d.inner(&p2).unwrap().norm() < 1e-12);
            assert!(p1.inner(&p2).unwrap().norm() < 1e-12);
            for res in [[0usize, 1], [1, 2]] {
                let j = reservoir_jump(d.basis(), &res).unwrap();
                assert!(j.apply(d.amplitudes()).unwrap().norm() < 1e-12, "nb={nb}");
            }
        }
    }

    #[test]
    fn initial_state_splits_into_the_family() {
        // |↑⟩|↓↓⟩|↓⟩ = (ψ₁ + √5 ψ₂ + 2 ψ_d)/√10
        let basis = chain_basis(2).unwrap();
        let init = PureState::product(
            basis,
            &[
                LocalState::Excitations(1),
                LocalState::Excitations(0),
                LocalState::Excitations(0),
            ],
        )
        .unwrap();
        let combo = (psi_1(2).unwrap().amplitudes()
            + psi_2(2).unwrap().amplitudes() * c(5f64.sqrt())
            + dark_state(2).unwrap().amplitudes() * c(2.0))
            / c(10f64.sqrt());
        assert!((init.amplitudes() - combo).norm() < 1e-14);
        // overlap with the dark state squared is its steady-state weight
        for nb in 1..=8 {
            let basis = chain_basis(nb).unwrap();
            let init = PureState::product(
                basis,
                &[
                    LocalState::Excitations(1),
                    LocalState::Excitations(0),
                    LocalState::Excitations(0),
                ],
            )
            .unwrap();
            let ov = init.inner(&dark_state(nb).unwrap()).unwrap().norm_sqr();
            assert!((ov - x_dark(nb)).abs() < 1e-14);
        }
    }

    #[test]
    fn weights() {
        assert!((x_dark(2) - 0.4).abs() < 1e-15);
        assert!((x_dark(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((x_dark(1_000_000) - 0.5).abs() < 1e-6);
        assert!((x_reduced(2) - 8.0 / 25.0).abs() < 1e-15);
        assert!((x_reduced(1) - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(concurrence_analytic(7), x_reduced(7));
        let e = eof_from_concurrence(x_reduced(1000)).unwrap();
        assert!((e - 0.354).abs() < 1e-3);
    }

    #[test]
    fn reduced_end_state_matches_partial_trace_of_the_steady_state() {
        for nb in 1..=6 {
            let rho = chain_steady_state(nb, Backend::Full).unwrap();
            let ac = rho.partial_trace(&[0, 2]).unwrap();
            let want = chain_reduced_end_state(nb).unwrap();
            assert!(ac.trace_distance(&want).unwrap() < 1e-13);
            assert!((concurrence(&ac).unwrap() - concurrence_analytic(nb)).abs() < 1e-12);
            let coll = chain_steady_state(nb, Backend::Collective).unwrap();
            let td = coll.to_full().unwrap().trace_distance(&rho).unwrap();
            assert!(td < 1e-13, "nb={nb} td={td}");
        }
    }

    #[test]
    fn intro_pair() {
        let rho = intro_pair_steady();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        let rank = rho.eigenvalues().unwrap().iter().filter(|&&l| l > 1e-12).count();
        assert_eq!(rank, 2);
        let e = eof_from_concurrence(concurrence(&rho).unwrap()).unwrap();
        assert!((e - 0.354).abs() < 1e-3);
    }

    #[test]
    fn w_and_ghz() {
        let w = w_state().projector();
        assert!((tripartite_negativity(&w).unwrap() - 2f64.sqrt() / 3.0).abs() < 1e-9);
        assert!((negativity(&w, &[0]).unwrap() - 2f64.sqrt() / 3.0).abs() < 1e-12);
        let g = ghz_state().projector();
        assert!((tripartite_negativity(&g).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decomposition_of_exact_form() {
        let w = w_state().projector();
        let g = PureState::ground(BasisDescriptor::qubits(3)).projector();
        let rho = DensityMatrix::mixture(&[(0.7, &g), (0.3, &w)]).unwrap();
        let d = tripartite_decompose(&rho).unwrap();
        assert!((d.c_ground - 0.7).abs() < 1e-14);
        assert!((d.c_w - 0.3).abs() < 1e-14);
        assert!(d.residual < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(BasisDescriptor::qubits(3));
        assert!(tripartite_decompose(&mixed).unwrap().residual > 0.1);
        assert!(tripartite_decompose(&intro_pair_steady()).is_err());
    }

    #[test]
    fn zero_population_is_rejected() {
        assert!(dark_state(0).is_err());
        assert!(psi_1(0).is_err());
        assert!(chain_reduced_end_state(0).is_err());
    }
}
