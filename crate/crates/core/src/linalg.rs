//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::space::{smat, Point};

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted decreasing.
/// Column `k` of the returned matrix is the eigenvector for value `k`.
pub fn sym_eigen(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let sym = 0.5 * (x + x.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigenvalues_desc(x: &DMatrix<f64>) -> Vec<f64> {
    sym_eigen(x).0
}

/// Smallest eigenvalue of `smat(p)`.
pub fn lambda_min(p: &Point) -> f64 {
    *eigenvalues_desc(&smat(p)).last().unwrap_or(&0.0)
}

pub fn lambda_max(p: &Point) -> f64 {
    *eigenvalues_desc(&smat(p)).first().unwrap_or(&0.0)
}

pub fn rows_to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), ncols);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

fn rank_tol(sv: &DVector<f64>, shape: (usize, usize), tol: Option<f64>) -> f64 {
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    tol.unwrap_or(smax * (shape.0.max(shape.1) as f64) * f64::EPSILON * 16.0).max(1e-300)
}

/// Numerical rank of the matrix whose rows are `rows`.
pub fn rank(rows: &[Vec<f64>], ncols: usize, tol: Option<f64>) -> usize {
    if rows.is_empty() || ncols == 0 {
        return 0;
    }
    let m = rows_to_matrix(rows, ncols);
    let sv = m.singular_values();
    let t = rank_tol(&sv, (rows.len(), ncols), tol);
    sv.iter().filter(|&&s| s > t).count()
}

/// Orthonormal basis of `{x : row · x = 0 for every row}`.
pub fn nullspace(rows: &[Vec<f64>], ncols: usize, tol: Option<f64>) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return identity_rows(ncols);
    }
    // Pad to at least square so the SVD exposes a full right basis.
    let nrows = rows.len().max(ncols);
    let mut m = DMatrix::zeros(nrows, ncols);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let t = rank_tol(&svd.singular_values, (rows.len(), ncols), tol);
    let mut out = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= t {
            out.push(vt.row(k).iter().copied().collect());
        }
    }
    out
}

pub fn identity_rows(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect()
}

/// Modified Gram–Schmidt; vectors that fall below `tol` after projection are dropped.
pub fn orthonormalize(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > tol {
            basis.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)` in `R^dim`.
pub fn orth_complement(vectors: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let onb = orthonormalize(vectors, 1e-10);
    nullspace(&onb, dim, Some(1e-10))
}

/// Least-squares solution of `a x ≈ b` via SVD. Returns `(x, rank)`.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let t = rank_tol(&svd.singular_values, a.shape(), None);
    let r = svd.singular_values.iter().filter(|&&s| s > t).count();
    let x = svd.solve(b, t).expect("u and v_t requested");
    (x, r)
}
