//! Small dense helpers shared by the physics modules.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Identity followed by σx, σy, σz.
pub fn paulis() -> [Matrix2<C64>; 4] {
    [
        Matrix2::new(ONE, ZERO, ZERO, ONE),
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

pub fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
pub fn eigvals_herm2(m: &Matrix2<C64>) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let off = m[(0, 1)].norm();
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + off * off).sqrt();
    [mean - r, mean + r]
}

/// Eigenvalues of a 4×4 Hermitian matrix, ascending.
pub fn eigvals_herm4(m: &Matrix4<C64>) -> [f64; 4] {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: [f64; 4] = h.symmetric_eigenvalues().into();
    ev.sort_by(f64::total_cmp);
    ev
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Shannon entropy in bits of a probability vector, ignoring non-positive entries.
pub fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

/// exp(scale · H) for Hermitian H via its eigen-decomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, scale: C64) -> DMatrix<C64> {
    let eig = hermitian_part(h).symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| (scale * e).exp()));
    v * d * v.adjoint()
}

/// exp(scale · H) for Hermitian H, 4×4 version.
pub fn expm_hermitian4(h: &Matrix4<C64>, scale: C64) -> Matrix4<C64> {
    let eig = ((h + h.adjoint()) * C64::new(0.5, 0.0)).symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| (scale * e).exp()));
    v * d * v.adjoint()
}

/// Integer power by repeated squaring.
pub fn matrix_power(m: &DMatrix<C64>, mut n: u64) -> DMatrix<C64> {
    let dim = m.nrows();
    let mut result = DMatrix::identity(dim, dim);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let [id, x, y, z] = paulis();
        assert!((x * y - z * I).norm() < 1e-15);
        assert!((x * x - id).norm() < 1e-15);
    }

    #[test]
    fn closed_form_two_by_two_eigenvalues() {
        let m = Matrix2::new(ONE * 0.3, C64::new(0.1, -0.2), C64::new(0.1, 0.2), ONE * -0.5);
        let a = eigvals_herm2(&m);
        let b = m.symmetric_eigenvalues();
        let (lo, hi) = (b[0].min(b[1]), b[0].max(b[1]));
        assert!((a[0] - lo).abs() < 1e-14 && (a[1] - hi).abs() < 1e-14);
    }

    #[test]
    fn power_matches_repeated_product() {
        let m = DMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
        let mut direct = DMatrix::identity(3, 3);
        for _ in 0..7 {
            direct = &direct * &m;
        }
        assert!((matrix_power(&m, 7) - direct).norm() < 1e-12);
        assert_eq!(matrix_power(&m, 0), DMatrix::identity(3, 3));
    }
}
