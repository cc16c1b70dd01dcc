//! Small dense helpers shared by the fitting code.

use nalgebra::{DMatrix, DVector};

/// `aᵀ b`. Goes through an explicit transpose so the product hits the
/// blocked gemm kernel instead of nalgebra's dot-product `tr_mul` loop.
pub fn cross_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let at = a.transpose();
    at * b
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Flip `v` so its largest-magnitude entry is positive. Returns the sign applied.
pub fn fix_sign(v: &mut DVector<f64>) -> f64 {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
        -1.0
    } else {
        1.0
    }
}

/// Lexicographic comparison used to break ties between equal eigenvalues.
pub fn lexicographic_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// A unit vector orthogonal to every vector in `basis` (which need not be
/// orthonormal). Built by Gram-Schmidt against the standard basis.
pub fn orthogonal_completion(basis: &[DVector<f64>], n: usize) -> DVector<f64> {
    let ortho = orthonormal_basis(basis, n);
    for j in 0..n {
        let mut v = DVector::zeros(n);
        v[j] = 1.0;
        for q in &ortho {
            let d = q.dot(&v);
            v.axpy(-d, q, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
    // Basis spans everything; fall back to the first axis.
    let mut v = DVector::zeros(n);
    if n > 0 {
        v[0] = 1.0;
    }
    v
}

/// Modified Gram-Schmidt with re-orthogonalization, dropping dependent vectors.
pub fn orthonormal_basis(vectors: &[DVector<f64>], n: usize) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        debug_assert_eq!(v.len(), n);
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut u = v / scale;
        for _ in 0..2 {
            for q in &out {
                let d = q.dot(&u);
                u.axpy(-d, q, 1.0);
            }
        }
        let norm = u.norm();
        if norm > 1e-10 {
            out.push(u / norm);
        }
    }
    out
}

/// Cosines of the principal angles between the column spaces of `a` and `b`,
/// in descending order.
pub fn principal_cosines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    assert_eq!(a.nrows(), b.nrows(), "principal angles need a common ambient space");
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let m = qa.transpose() * qb;
    let mut s: Vec<f64> = m.singular_values().iter().map(|v| v.min(1.0)).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Matrix with the given columns.
pub fn stack_columns(cols: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}
