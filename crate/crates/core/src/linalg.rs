//! Dense Hermitian eigenvalues with block deflation.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hilbert::C64;

/// Groups indices into connected components of the nonzero pattern.
fn components(m: &DMatrix<C64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for c in 0..n {
        for r in 0..c {
            if m[(r, c)] != C64::new(0.0, 0.0) || m[(c, r)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

fn block_eigenvalues(block: DMatrix<C64>) -> Option<Vec<f64>> {
    let ok = |v: &[f64]| v.iter().all(|x| x.is_finite());
    let ev: Vec<f64> = SymmetricEigen::new(block.clone()).eigenvalues.iter().copied().collect();
    if ok(&ev) {
        return Some(ev);
    }
    // The implicit QR sweep occasionally breaks down on exactly degenerate
    // blocks; a diagonal shift changes the iteration without changing the
    // spectrum beyond round-off.
    let n = block.nrows();
    let shift = block.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0);
    let shifted = block + DMatrix::<C64>::identity(n, n) * C64::new(shift, 0.0);
    let ev: Vec<f64> = SymmetricEigen::new(shifted)
        .eigenvalues
        .iter()
        .map(|l| l - shift)
        .collect();
    ok(&ev).then_some(ev)
}

/// Eigenvalues of a Hermitian matrix (lower triangle is read), unsorted.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::invalid("eigenvalues of a non-square matrix"));
    }
    let mut out = Vec::with_capacity(m.nrows());
    for group in components(m) {
        if group.len() == 1 {
            out.push(m[(group[0], group[0])].re);
            continue;
        }
        let k = group.len();
        let block = DMatrix::from_fn(k, k, |r, c| m[(group[r], group[c])]);
        let ev = block_eigenvalues(block).ok_or_else(|| {
            Error::NumericalFailure(format!("Hermitian eigensolver diverged on a {k}x{k} block"))
        })?;
        out.extend(ev);
    }
    Ok(out)
}
