//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is the single carrier type for states, Hamiltonians,
//! unitaries and superoperator matrices. Storage is a column-major
//! `nalgebra::DMatrix`, while the public constructors and the JSON format
//! speak row-major. Everything here uses ħ = 1.

mod decomp;
mod expm;
pub mod random;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use decomp::{eigh, polar_unitary, svd, svd_values, Eigh, Svd};
pub use expm::{
    eigenphases, expm_general, expm_skew_hermitian, hermitian_function, logm_unitary_principal, sqrtm_psd,
    PrincipalLog, BRANCH_GUARD,
};
pub use random::{random_instance, trial_rng, InstanceKind, RandomInstanceSpec, RNG_NAME};

pub type C64 = Complex64;

/// Tolerance on max |H - H†| accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on max |U†U - I| accepted as unitary.
pub const UNITARY_TOL: f64 = 1e-8;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

/// Factor dimensions of a bipartite system ⊗ bath space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemDims {
    pub ds: usize,
    pub db: usize,
}

impl SubsystemDims {
    pub fn new(ds: usize, db: usize) -> Result<Self> {
        if ds == 0 || db == 0 {
            return Err(Error::InvalidArgument(format!("subsystem dimensions must be positive, got {ds}x{db}")));
        }
        Ok(Self { ds, db })
    }

    pub fn joint(&self) -> usize {
        self.ds * self.db
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: DMatrix::identity(n, n) }
    }

    /// Builds a matrix from row-major entries, rejecting wrong counts and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("matrix sides must be positive, got {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { inner: DMatrix::from_row_slice(rows, cols, &entries) })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for
    /// literals in code and tests.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(n * m);
        for r in rows {
            assert_eq!(r.as_ref().len(), m, "ragged rows");
            entries.extend_from_slice(r.as_ref());
        }
        Self { inner: DMatrix::from_row_slice(n, m, &entries) }
    }

    /// Real-valued convenience constructor for literals.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.as_ref().iter().map(|&x| c64(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.inner[(i, i)] = v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| c64(x, 0.0)).collect();
        Self::diag(&v)
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m.inner[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn from_inner(inner: DMatrix<C64>) -> Self {
        Self { inner }
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length of a square matrix.
    pub fn side(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows()
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.inner.column(j).iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose() }
    }

    pub fn conj(&self) -> Self {
        Self { inner: self.inner.map(|z| z.conj()) }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { inner: &self.inner * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { inner: self.inner.map(|z| z * s) }
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise modulus of `self - other`. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.inner.iter().zip(other.inner.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    /// max |A - A†|, or infinity for non-square input.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// max |U†U - I|, or infinity for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self.inner.adjoint() * &self.inner;
        g.max_abs_diff_identity()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(())
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(())
    }

    /// (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self { inner: (&self.inner + self.inner.adjoint()) * c64(0.5, 0.0) }
    }
}

trait MaxAbsDiffIdentity {
    fn max_abs_diff_identity(&self) -> f64;
}

impl MaxAbsDiffIdentity for DMatrix<C64> {
    fn max_abs_diff_identity(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self[(i, j)] - id).norm());
            }
        }
        worst
    }
}

/// Checked matrix product.
pub fn multiply(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(ComplexMatrix { inner: &a.inner * &b.inner })
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Kronecker product, A-major block order.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix { inner: a.inner.kronecker(&b.inner) }
}

/// Commutator [A, B].
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Partial trace over the bath factor: (tr_B X)_{ij} = Σ_k X_{(i,k),(j,k)}.
pub fn partial_trace_b(x: &ComplexMatrix, dims: SubsystemDims) -> Result<ComplexMatrix> {
    let n = dims.joint();
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {}x{} needs a {n}x{n} matrix, got {}x{}",
            dims.ds,
            dims.db,
            x.rows(),
            x.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(dims.ds, dims.ds);
    for i in 0..dims.ds {
        for j in 0..dims.ds {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..dims.db {
                acc += x.inner[(i * dims.db + k, j * dims.db + k)];
            }
            out.inner[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Pauli matrices and related literals.
pub mod pauli {
    use super::{c64, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[c64(0.0, 0.0), c64(0.0, -1.0)], [c64(0.0, 1.0), c64(0.0, 0.0)]])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]])
    }

    /// (σx, σy, σz).
    pub fn all() -> [ComplexMatrix; 3] {
        [x(), y(), z()]
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.inner[idx]
    }
}

// Operator forms panic on shape mismatch, like nalgebra; use `multiply` for
// the checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner * &rhs.inner }
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: self.inner * rhs.inner }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner + &rhs.inner }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: self.inner + rhs.inner }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: &self.inner - &rhs.inner }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { inner: self.inner - rhs.inner }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { inner: -&self.inner }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.inner[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            entries: self.to_row_major().into_iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        let entries = raw.entries.into_iter().map(|[re, im]| c64(re, im)).collect();
        ComplexMatrix::from_row_major(raw.rows, raw.cols, entries).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = c64(0.0, 0.0);
                for k in 0..a.cols() {
                    acc += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    fn ginibre(seed: u64, n: usize) -> ComplexMatrix {
        random_instance(&RandomInstanceSpec::new(seed, InstanceKind::Ginibre, n))
    }

    #[test]
    fn identity_is_left_unit() {
        let a = ginibre(1, 2);
        assert_eq!(multiply(&ComplexMatrix::identity(2), &a).unwrap().max_abs_diff(&a), 0.0);
    }

    #[test]
    fn pauli_x_squares_to_identity() {
        let sx = pauli::x();
        assert_eq!(&sx * &sx, ComplexMatrix::identity(2));
    }

    #[test]
    fn product_matches_triple_loop() {
        let a = ginibre(11, 3);
        let b = ginibre(12, 3);
        let got = multiply(&a, &b).unwrap();
        assert!(got.max_abs_diff(&naive_product(&a, &b)) < 1e-13);
    }

    #[test]
    fn product_rejects_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(multiply(&a, &a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn adjoint_cases() {
        assert_eq!(adjoint(&ComplexMatrix::identity(3)), ComplexMatrix::identity(3));
        let a = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        let expect = ComplexMatrix::from_real_rows(&[[0.0, -1.0], [1.0, 0.0]]);
        assert_eq!(adjoint(&a), expect);
        for seed in 0..100 {
            let g = ginibre(seed, 3);
            assert_eq!(adjoint(&adjoint(&g)), g);
        }
    }

    #[test]
    fn tensor_literals() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
        assert_eq!(tensor(&pauli::z(), &i2), ComplexMatrix::diag_real(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn tensor_is_associative() {
        let (a, b, c) = (ginibre(1, 2), ginibre(2, 3), ginibre(3, 2));
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        assert!(left.max_abs_diff(&right) < 1e-13);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ginibre(4, 2);
        let b = ginibre(5, 3);
        let dims = SubsystemDims::new(2, 3).unwrap();
        let got = partial_trace_b(&tensor(&a, &b), dims).unwrap();
        assert!(got.max_abs_diff(&a.scale(b.trace())) < 1e-13);

        let dims = SubsystemDims::new(2, 2).unwrap();
        let got = partial_trace_b(&ComplexMatrix::identity(4), dims).unwrap();
        assert_eq!(got, ComplexMatrix::identity(2).scale_real(2.0));
    }

    #[test]
    fn partial_trace_rejects_wrong_side() {
        let dims = SubsystemDims::new(2, 2).unwrap();
        assert!(partial_trace_b(&ComplexMatrix::identity(3), dims).is_err());
    }

    #[test]
    fn row_major_rejects_nan_and_bad_count() {
        assert!(matches!(
            ComplexMatrix::from_row_major(1, 2, vec![c64(0.0, 0.0), c64(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(ComplexMatrix::from_row_major(2, 2, vec![c64(0.0, 0.0)]).is_err());
    }

    #[test]
    fn json_layout_is_row_major() {
        let m = ComplexMatrix::from_rows(&[[c64(1.0, 0.0), c64(2.0, 0.5)], [c64(3.0, 0.0), c64(4.0, -1.0)]]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":2,"entries":[[1.0,0.0],[2.0,0.5],[3.0,0.0],[4.0,-1.0]]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
