use nalgebra::DMatrix;

/// All singular values of `m`, descending.
pub fn singular_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().map(|v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let s = singular_spectrum(&DMatrix::identity(3, 3));
        for v in s {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn embedded_diagonal() {
        let mut m = DMatrix::zeros(2, 4);
        m[(0, 0)] = 2.0;
        m[(1, 1)] = 3.0;
        let s = singular_spectrum(&m);
        assert_eq!(s.len(), 2);
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 2.0).abs() < 1e-14);
    }
}
