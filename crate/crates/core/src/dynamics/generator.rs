use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use super::MasterEquation;
use crate::hilbert::{Backend, BasisDescriptor, C64};

/// Matrix-free form of a master equation, ready for repeated application.
///
/// Uses `Σ rₖ D[Oₖ]ρ = A + A†` with `A = Σ rₖ Oₖ ρ Oₖ† − Kρ` and
/// `K = Σ rₖ Oₖ†Oₖ`, which holds for Hermitian `ρ`. The output is exactly
/// Hermitian by construction.
#[derive(Debug, Clone)]
pub struct Generator {
    dim: usize,
    jumps: Vec<(f64, CsrMatrix<C64>)>,
    /// Per jump: `Oₖ` and `rₖ Oₖ` in kernel form.
    kernels: Vec<(SparseKernel, SparseKernel)>,
    /// `−K`.
    decay: SparseKernel,
    sectors: Option<Sectors>,
}

/// Basis grouped by excitation number, with every jump operator moving
/// between sectors by a fixed amount. States that are block diagonal in
/// this grouping stay block diagonal, and only the blocks need computing.
#[derive(Debug, Clone)]
struct Sectors {
    of: Vec<usize>,
    members: Vec<Vec<usize>>,
    /// Per jump: sector shift, `Oₖ` and `rₖ Oₖ`.
    jumps: Vec<(isize, CscMatrix<C64>, CscMatrix<C64>)>,
    decay: CscMatrix<C64>,
}

fn excitation_numbers(basis: &BasisDescriptor) -> Vec<usize> {
    let dim = basis.dim();
    match basis.backend() {
        Backend::Full => {
            let spins = basis.total_spins();
            (0..dim).map(|i| spins - i.count_ones() as usize).collect()
        }
        Backend::Collective => (0..dim)
            .map(|mut i| {
                let mut up = 0;
                for (&d, &n) in basis.domain_dims().iter().zip(basis.domain_pops()).rev() {
                    up += n - i % d;
                    i /= d;
                }
                up
            })
            .collect(),
    }
}

/// Sector shift of `a`, if all its entries share one.
fn uniform_shift(a: &CsrMatrix<C64>, of: &[usize]) -> Option<isize> {
    let mut shift = None;
    for (i, j, v) in a.triplet_iter() {
        if v.norm_sqr() == 0.0 {
            continue;
        }
        let d = of[i] as isize - of[j] as isize;
        match shift {
            None => shift = Some(d),
            Some(s) if s != d => return None,
            _ => {}
        }
    }
    Some(shift.unwrap_or(0))
}

fn scaled_csc(a: &CsrMatrix<C64>, scale: C64) -> CscMatrix<C64> {
    let mut c = CscMatrix::from(a);
    c.values_mut().iter_mut().for_each(|v| *v *= scale);
    c
}

impl Sectors {
    fn new(basis: &BasisDescriptor, jumps: &[(f64, CsrMatrix<C64>)], decay: &CsrMatrix<C64>) -> Option<Self> {
        let of = excitation_numbers(basis);
        if uniform_shift(decay, &of)? != 0 {
            return None;
        }
        let count = of.iter().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); count];
        for (i, &s) in of.iter().enumerate() {
            members[s].push(i);
        }
        let jumps = jumps
            .iter()
            .map(|(rate, o)| {
                let shift = uniform_shift(o, &of)?;
                Some((
                    shift,
                    scaled_csc(o, C64::new(1.0, 0.0)),
                    scaled_csc(o, C64::new(*rate, 0.0)),
                ))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            of,
            members,
            jumps,
            decay: scaled_csc(decay, C64::new(-1.0, 0.0)),
        })
    }

    fn is_block_diagonal(&self, m: &DMatrix<C64>) -> bool {
        let n = m.nrows();
        m.as_slice().chunks_exact(n).enumerate().all(|(j, col)| {
            col.iter()
                .zip(&self.of)
                .all(|(v, &s)| s == self.of[j] || v.norm_sqr() == 0.0)
        })
    }

    /// `c += a · b` where column `j` of `b` is supported on sector
    /// `sector(j) + delta`.
    fn mul_acc(&self, a: &CscMatrix<C64>, b: &DMatrix<C64>, c: &mut DMatrix<C64>, delta: isize) {
        let n = b.nrows();
        let offsets = a.col_offsets();
        let rows = a.row_indices();
        let vals = a.values();
        let bs = b.as_slice();
        let cs = c.as_mut_slice();
        for (j, (bcol, ccol)) in bs.chunks_exact(n).zip(cs.chunks_exact_mut(n)).enumerate() {
            let s = self.of[j] as isize + delta;
            let Some(members) = usize::try_from(s).ok().and_then(|s| self.members.get(s)) else {
                continue;
            };
            for &k in members {
                let bk = bcol[k];
                if bk.re == 0.0 && bk.im == 0.0 {
                    continue;
                }
                for (&r, &v) in rows[offsets[k]..offsets[k + 1]].iter().zip(&vals[offsets[k]..offsets[k + 1]]) {
                    ccol[r] += v * bk;
                }
            }
        }
    }
}

/// Sparse square matrix stored by diagonals when it has few of them
/// (collective ladder operators do), else as CSR.
#[derive(Debug, Clone)]
enum SparseKernel {
    /// `(offset, values)`: entry `(i, i + offset) = values[i]`.
    Diagonals(Vec<(isize, Vec<C64>)>),
    Csr(CsrMatrix<C64>),
}

impl SparseKernel {
    fn new(a: &CsrMatrix<C64>, scale: C64) -> Self {
        let n = a.nrows();
        let mut offsets: Vec<isize> = a
            .triplet_iter()
            .map(|(i, j, _)| j as isize - i as isize)
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        if offsets.len() * n > 3 * a.nnz().max(1) {
            let mut a = a.clone();
            a.values_mut().iter_mut().for_each(|v| *v *= scale);
            return SparseKernel::Csr(a);
        }
        let mut diags: Vec<(isize, Vec<C64>)> = offsets
            .iter()
            .map(|&d| (d, vec![C64::new(0.0, 0.0); n]))
            .collect();
        for (i, j, v) in a.triplet_iter() {
            let d = j as isize - i as isize;
            let k = offsets.binary_search(&d).expect("offset collected");
            diags[k].1[i] += *v * scale;
        }
        SparseKernel::Diagonals(diags)
    }

    /// `c += self · b` for dense column-major `b`, `c`.
    fn mul_acc(&self, b: &DMatrix<C64>, c: &mut DMatrix<C64>) {
        let n = b.nrows();
        assert!(c.shape() == b.shape());
        match self {
            SparseKernel::Csr(a) => csr_mul_acc(a, C64::new(1.0, 0.0), b, c),
            SparseKernel::Diagonals(diags) => {
                let bs = b.as_slice();
                let cs = c.as_mut_slice();
                for (bcol, ccol) in bs.chunks_exact(n).zip(cs.chunks_exact_mut(n)) {
                    for (d, v) in diags {
                        let lo = (-d).max(0) as usize;
                        let hi = (n as isize - d).min(n as isize) as usize;
                        if lo >= hi {
                            continue;
                        }
                        let src = &bcol[(lo as isize + d) as usize..(hi as isize + d) as usize];
                        for ((ci, &vi), &bi) in ccol[lo..hi].iter_mut().zip(&v[lo..hi]).zip(src) {
                            *ci += vi * bi;
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    a: DMatrix<C64>,
    x: DMatrix<C64>,
    xa: DMatrix<C64>,
    /// Inputs are known to be block diagonal by excitation number.
    pub(crate) blocked: bool,
}

impl Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(dim, dim),
            x: DMatrix::zeros(dim, dim),
            xa: DMatrix::zeros(dim, dim),
            blocked: false,
        }
    }
}

/// `c += alpha · a · b` with `a` sparse and `b`, `c` dense column-major.
fn csr_mul_acc(a: &CsrMatrix<C64>, alpha: C64, b: &DMatrix<C64>, c: &mut DMatrix<C64>) {
    let n = a.nrows();
    assert!(a.ncols() == b.nrows() && b.nrows() == n && c.shape() == b.shape());
    let offsets = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    let rows: Vec<(usize, usize, usize)> = (0..n)
        .filter(|&i| offsets[i] < offsets[i + 1])
        .map(|i| (i, offsets[i], offsets[i + 1]))
        .collect();
    let bs = b.as_slice();
    let cs = c.as_mut_slice();
    for (bcol, ccol) in bs.chunks_exact(n).zip(cs.chunks_exact_mut(n)) {
        for &(i, lo, hi) in &rows {
            let mut acc = C64::new(0.0, 0.0);
            for (&k, &v) in cols[lo..hi].iter().zip(&vals[lo..hi]) {
                // SAFETY: CSR column indices are below ncols == bcol.len().
                acc += v * unsafe { *bcol.get_unchecked(k) };
            }
            ccol[i] += alpha * acc;
        }
    }
}

fn sparse_adjoint_product(o: &CsrMatrix<C64>) -> Vec<(usize, usize, C64)> {
    // (O†O)_{ij} = Σ_k conj(O_ki) O_kj, accumulated row by row of O.
    let mut out = Vec::new();
    for row in o.row_iter() {
        let cols = row.col_indices();
        let vals = row.values();
        for (a, &i) in cols.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.push((i, j, vals[a].conj() * vals[b]));
            }
        }
    }
    out
}

impl Generator {
    pub fn new(eq: &MasterEquation) -> Self {
        let dim = eq.basis().dim();
        let mut jumps = Vec::new();
        let mut decay = CooMatrix::new(dim, dim);
        for term in eq.terms() {
            if term.rate == 0.0 {
                continue;
            }
            let o = term.jump.to_csr();
            for (i, j, v) in sparse_adjoint_product(&o) {
                decay.push(i, j, v * term.rate);
            }
            jumps.push((term.rate, o));
        }
        let kernels = jumps
            .iter()
            .map(|(rate, o)| {
                (
                    SparseKernel::new(o, C64::new(1.0, 0.0)),
                    SparseKernel::new(o, C64::new(*rate, 0.0)),
                )
            })
            .collect();
        let decay = CsrMatrix::from(&decay);
        Self {
            dim,
            sectors: Sectors::new(eq.basis(), &jumps, &decay),
            jumps,
            kernels,
            decay: SparseKernel::new(&decay, C64::new(-1.0, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on the spectral radius of the generator,
    /// `4 Σ rₖ ‖Oₖ‖₁ ‖Oₖ‖_∞`.
    pub fn rate_bound(&self) -> f64 {
        self.jumps
            .iter()
            .map(|(rate, o)| {
                let mut cols = vec![0.0; self.dim];
                let mut row_max: f64 = 0.0;
                for row in o.row_iter() {
                    let mut sum = 0.0;
                    for (&c, v) in row.col_indices().iter().zip(row.values()) {
                        sum += v.norm();
                        cols[c] += v.norm();
                    }
                    row_max = row_max.max(sum);
                }
                let col_max = cols.into_iter().fold(0.0, f64::max);
                4.0 * rate * row_max * col_max
            })
            .sum()
    }

    /// Stored nonzeros over all jump operators and the decay term.
    pub fn nnz(&self) -> usize {
        let decay = match &self.decay {
            SparseKernel::Csr(a) => a.nnz(),
            SparseKernel::Diagonals(d) => d
                .iter()
                .map(|(_, v)| v.iter().filter(|x| x.norm_sqr() > 0.0).count())
                .sum(),
        };
        self.jumps.iter().map(|(_, o)| o.nnz()).sum::<usize>() + decay
    }

    pub fn is_trivial(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Whether `rho` is block diagonal by excitation number and every
    /// jump respects that, so evolution from it can skip the off-blocks.
    pub(crate) fn preserves_blocks(&self, rho: &DMatrix<C64>) -> bool {
        self.sectors.as_ref().is_some_and(|s| s.is_block_diagonal(rho))
    }

    /// Writes `dρ/dτ` into `out`.
    pub fn apply(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let mut ws = Workspace::new(self.dim);
        ws.blocked = self.preserves_blocks(rho);
        self.apply_with(rho, out, &mut ws);
    }

    pub(crate) fn apply_with(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>, ws: &mut Workspace) {
        ws.a.fill(C64::new(0.0, 0.0));
        if let (true, Some(sec)) = (ws.blocked, &self.sectors) {
            for (shift, o, scaled) in &sec.jumps {
                ws.x.fill(C64::new(0.0, 0.0));
                sec.mul_acc(o, rho, &mut ws.x, 0);
                ws.x.adjoint_to(&mut ws.xa);
                sec.mul_acc(scaled, &ws.xa, &mut ws.a, -shift);
            }
            sec.mul_acc(&sec.decay, rho, &mut ws.a, 0);
            ws.a.adjoint_to(out);
            *out += &ws.a;
            return;
        }
        for (o, scaled) in &self.kernels {
            ws.x.fill(C64::new(0.0, 0.0));
            o.mul_acc(rho, &mut ws.x);
            // (Oρ)† = ρO† for Hermitian ρ
            ws.x.adjoint_to(&mut ws.xa);
            scaled.mul_acc(&ws.xa, &mut ws.a);
        }
        self.decay.mul_acc(rho, &mut ws.a);
        ws.a.adjoint_to(out);
        *out += &ws.a;
    }
}
