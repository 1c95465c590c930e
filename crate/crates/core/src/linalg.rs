//! Dense complex linear algebra on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Minimum-norm least-squares solution through a truncated SVD.
#[derive(Debug, Clone)]
pub struct PseudoSolve {
    pub solution: CVector,
    pub rank: usize,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
}

/// Solves `a x = b` with the Moore-Penrose pseudoinverse; singular values at
/// or below `rel_tol * sigma_max` are treated as zero.
pub fn pinv_solve(a: &CMatrix, b: &CVector, rel_tol: f64) -> PseudoSolve {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = rel_tol * sigma_max;
    let mut solution = CVector::zeros(a.ncols());
    let mut rank = 0;
    for &k in &order {
        let s = svd.singular_values[k];
        if !(s > cutoff) || s == 0.0 {
            continue;
        }
        rank += 1;
        // x += v_k (u_k^H b) / s_k
        let coeff = u.column(k).dotc(b) / s;
        for (x, vk) in solution.iter_mut().zip(v_t.row(k).iter()) {
            *x += vk.conj() * coeff;
        }
    }
    PseudoSolve {
        solution,
        rank,
        singular_values,
    }
}

/// Real-valued counterpart of [`pinv_solve`].
pub fn pinv_solve_real(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> (DVector<f64>, usize, Vec<f64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cutoff = rel_tol * singular_values.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(a.ncols());
    let mut rank = 0;
    for &k in &order {
        let s = svd.singular_values[k];
        if !(s > cutoff) || s == 0.0 {
            continue;
        }
        rank += 1;
        let coeff = u.column(k).dot(b) / s;
        x += v_t.row(k).transpose() * coeff;
    }
    (x, rank, singular_values)
}

/// Smallest eigenvalue of a Hermitian matrix (only the upper triangle's
/// Hermitian part matters).
pub fn hermitian_min_eigenvalue(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Eigenvalues of a general square complex matrix.
///
/// Rows or columns whose off-diagonal entries inside the active block are
/// all at or below `deflation_tol` isolate their diagonal entry as an exact
/// eigenvalue (the permutation step of LAPACK's balancing). The remaining
/// core block goes through a complex Schur decomposition. Triangular and
/// permuted-triangular inputs therefore return their diagonal exactly, which
/// matters for nilpotent sections where a rounding-level perturbation would
/// otherwise be amplified to O(eps^(1/N)).
pub fn eigenvalues_with_tol(a: &CMatrix, deflation_tol: f64) -> Vec<Complex64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    let n = a.nrows();
    let mut active: Vec<usize> = (0..n).collect();
    let mut isolated = Vec::with_capacity(n);

    loop {
        let found = active.iter().position(|&i| {
            active
                .iter()
                .all(|&j| j == i || a[(i, j)].norm() <= deflation_tol)
        });
        let found = found.or_else(|| {
            active.iter().position(|&j| {
                active
                    .iter()
                    .all(|&i| i == j || a[(i, j)].norm() <= deflation_tol)
            })
        });
        match found {
            Some(pos) => {
                let idx = active.remove(pos);
                isolated.push(a[(idx, idx)]);
            }
            None => break,
        }
    }

    if !active.is_empty() {
        let m = active.len();
        let core = CMatrix::from_fn(m, m, |r, c| a[(active[r], active[c])]);
        isolated.extend(schur_eigenvalues(core));
    }
    isolated
}

/// Default deflation tolerance: `1e-12 * ||a||_F`.
pub fn eigenvalues(a: &CMatrix) -> Vec<Complex64> {
    eigenvalues_with_tol(a, 1e-12 * a.norm())
}

fn schur_eigenvalues(core: CMatrix) -> Vec<Complex64> {
    let m = core.nrows();
    let (_, t) = Schur::new(core).unpack();
    (0..m).map(|i| t[(i, i)]).collect()
}

/// Unit vector spanning (approximately) the null space of `a`: the right
/// singular vector of the smallest singular value.
pub fn null_vector(a: &CMatrix) -> CVector {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let k = (0..svd.singular_values.len())
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .expect("non-empty matrix");
    v_t.row(k).adjoint()
}
