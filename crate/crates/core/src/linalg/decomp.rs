use nalgebra::DMatrix;

use super::{ComplexMatrix, C64};
use crate::error::Result;

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    /// Q diag(f(λ)) Q†.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let q = self.vectors.as_inner();
        let n = self.values.len();
        let mut scaled = q.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        ComplexMatrix::from_inner(scaled * q.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|x| C64::new(x, 0.0))
    }
}

/// Hermitian eigendecomposition H = Q Λ Q†.
pub fn eigh(h: &ComplexMatrix) -> Result<Eigh> {
    h.ensure_hermitian()?;
    let sym = h.hermitian_part().into_inner();
    let n = sym.nrows();
    let dec = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&k| dec.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| dec.eigenvectors[(i, order[j])]);
    Ok(Eigh { values, vectors: ComplexMatrix::from_inner(vectors) })
}

/// Thin SVD A = U diag(s) V†, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub values: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Svd {
    let dec = a.as_inner().clone().svd(true, true);
    let u = dec.u.expect("svd computed with u");
    let vt = dec.v_t.expect("svd computed with v_t");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| dec.singular_values[y].total_cmp(&dec.singular_values[x]));
    let values = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
    let vt_sorted = DMatrix::from_fn(k, vt.ncols(), |i, j| vt[(order[i], j)]);
    Svd { u: ComplexMatrix::from_inner(u_sorted), values, v_adjoint: ComplexMatrix::from_inner(vt_sorted) }
}

/// Singular values, descending and non-negative.
pub fn svd_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.as_inner().clone().svd(false, false).singular_values.iter().map(|x| x.max(0.0)).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Unitary factor W = U V† of the polar decomposition A = W|A| of a square
/// matrix. It maximizes |Tr(W†A)| over unitaries, with value ‖A‖₁.
pub fn polar_unitary(a: &ComplexMatrix) -> ComplexMatrix {
    let dec = svd(a);
    &dec.u * &dec.v_adjoint
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, pauli, random_instance, InstanceKind, RandomInstanceSpec};

    #[test]
    fn eigh_of_paulis() {
        let e = eigh(&pauli::z()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);

        let e = eigh(&pauli::x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // eigenvectors up to phase: |<v|expected>| = 1
        let minus = [c64(r, 0.0), c64(-r, 0.0)];
        let plus = [c64(r, 0.0), c64(r, 0.0)];
        for (col, want) in [(0, minus), (1, plus)] {
            let v = e.vectors.column(col);
            let overlap: C64 = v.iter().zip(want.iter()).map(|(a, b)| a.conj() * b).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_reconstructs_gue() {
        for seed in 0..10 {
            let h = random_instance(&RandomInstanceSpec::new(seed, InstanceKind::GueHermitian, 8));
            let e = eigh(&h).unwrap();
            assert!(e.reconstruct().max_abs_diff(&h) < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(e.vectors.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let a = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(eigh(&a).is_err());
    }

    #[test]
    fn singular_value_literals() {
        assert_eq!(svd_values(&ComplexMatrix::identity(3)), vec![1.0, 1.0, 1.0]);
        let s = svd_values(&ComplexMatrix::diag_real(&[3.0, -4.0]));
        assert!((s[0] - 4.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_square_to_gram_eigenvalues() {
        for seed in 0..20 {
            let a = random_instance(&RandomInstanceSpec::new(seed, InstanceKind::Ginibre, 5));
            let s = svd_values(&a);
            let mut gram = eigh(&(&a.adjoint() * &a)).unwrap().values;
            gram.reverse();
            for (x, g) in s.iter().zip(gram.iter()) {
                assert!((x * x - g).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn svd_reconstructs() {
        let a = random_instance(&RandomInstanceSpec::new(3, InstanceKind::Ginibre, 4));
        let d = svd(&a);
        let s = ComplexMatrix::diag_real(&d.values);
        assert!((&(&d.u * &s) * &d.v_adjoint).max_abs_diff(&a) < 1e-12);
    }
}
