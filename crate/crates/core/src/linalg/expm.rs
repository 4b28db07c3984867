//! Matrix exponential and logarithm.
//!
//! Hermitian generators go through the eigendecomposition; general matrices
//! (superoperator generators) use scaling and squaring with a [13/13] Padé
//! core. The principal unitary logarithm diagonalizes U through its Cayley
//! transform, which is Hermitian and shares U's eigenvectors.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::{eigh, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Minimum angular distance of eigenphases from ±π accepted by the
/// principal logarithm.
pub const BRANCH_GUARD: f64 = 1e-6;

/// e^{-itH} for Hermitian H.
pub fn expm_skew_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let e = eigh(h)?;
    Ok(e.map(|lam| C64::from_polar(1.0, -lam * t)))
}

/// f(H) = Q f(Λ) Q† for Hermitian H.
pub fn hermitian_function(h: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let e = eigh(h)?;
    Ok(e.map(|lam| C64::new(f(lam), 0.0)))
}

/// Square root of a positive semidefinite matrix; eigenvalues below zero
/// (round-off) are clamped.
pub fn sqrtm_psd(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_function(rho, |x| x.max(0.0).sqrt())
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// e^M for an arbitrary square matrix.
pub fn expm_general(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("expm needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let a = m.as_inner();
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * C64::new(2f64.powi(-squarings), 0.0);

    let b = |k: usize| C64::new(PADE13[k], 0.0);
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (u_inner + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let v_inner = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = v_inner + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::InvalidArgument("singular Padé denominator in expm".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(ComplexMatrix::from_inner(r))
}

/// Eigenphases and eigenvectors of a unitary, phases in (-π, π].
fn unitary_eigen(u: &ComplexMatrix) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = u.rows();
    let id = DMatrix::<C64>::identity(n, n);
    let mut best: Option<(f64, DMatrix<C64>)> = None;
    // Rotating by a global phase moves the spectrum away from -1, where the
    // Cayley transform blows up; eigenvectors are unaffected.
    for k in 0..(2 * n + 3) {
        let phi = if k == 0 { 0.0 } else { PI * (k as f64) / (n as f64 + 1.5) };
        let w = u.as_inner() * C64::from_polar(1.0, phi);
        let Some(inv) = (&id + &w).lu().try_inverse() else {
            continue;
        };
        let k_mat = (&id - &w) * inv * C64::new(0.0, 1.0);
        let size = k_mat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !size.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(s, _)| size < *s) {
            best = Some((size, k_mat));
        }
        if size < 1e2 {
            break;
        }
    }
    let (_, k_mat) = best.ok_or(Error::BranchCut { margin: 0.0 })?;
    let herm = (&k_mat + k_mat.adjoint()) * C64::new(0.5, 0.0);
    let q = herm.symmetric_eigen().eigenvectors;
    let uq = u.as_inner() * &q;
    let phases = (0..n)
        .map(|j| {
            let lam: C64 = q.column(j).iter().zip(uq.column(j).iter()).map(|(a, b)| a.conj() * b).sum();
            lam.arg()
        })
        .collect();
    Ok((phases, q))
}

/// Eigenphases of a unitary, ascending, in (-π, π].
pub fn eigenphases(u: &ComplexMatrix) -> Result<Vec<f64>> {
    u.ensure_unitary()?;
    let (mut phases, _) = unitary_eigen(u)?;
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// Principal logarithm of a unitary in Hamiltonian form.
#[derive(Debug, Clone)]
pub struct PrincipalLog {
    /// Hermitian Ω with U = e^{-iΩ}.
    pub omega: ComplexMatrix,
    /// Smallest angular distance of an eigenphase of U from ±π.
    pub branch_margin: f64,
}

/// Hermitian Ω with U = e^{-iΩ} and spectrum in (-π, π). Fails when an
/// eigenphase lies within [`BRANCH_GUARD`] of ±π.
pub fn logm_unitary_principal(u: &ComplexMatrix) -> Result<PrincipalLog> {
    u.ensure_unitary()?;
    let (phases, q) = unitary_eigen(u)?;
    let branch_margin = phases.iter().map(|th| PI - th.abs()).fold(f64::INFINITY, f64::min);
    if branch_margin < BRANCH_GUARD {
        return Err(Error::BranchCut { margin: branch_margin });
    }
    let n = phases.len();
    let mut scaled = q.clone();
    for (j, th) in phases.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= -th;
        }
    }
    let omega = ComplexMatrix::from_inner(scaled * q.adjoint()).hermitian_part();
    Ok(PrincipalLog { omega, branch_margin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, pauli, random_instance, InstanceKind, RandomInstanceSpec};
    use std::f64::consts::FRAC_PI_2;

    fn gue(seed: u64, n: usize) -> ComplexMatrix {
        random_instance(&RandomInstanceSpec::new(seed, InstanceKind::GueHermitian, n))
    }

    // e^M by plain Taylor summation with repeated halving; slow but
    // structurally unrelated to the Padé path.
    fn taylor_expm(m: &ComplexMatrix) -> ComplexMatrix {
        let n = m.rows();
        let halvings = 12;
        let a = m.scale_real(2f64.powi(-halvings));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..30 {
            term = (&term * &a).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..halvings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn skew_hermitian_literals() {
        let h = gue(1, 3);
        assert!(expm_skew_hermitian(&h, 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);
        let got = expm_skew_hermitian(&pauli::x(), FRAC_PI_2).unwrap();
        assert!(got.max_abs_diff(&pauli::x().scale(c64(0.0, -1.0))) < 1e-15);
    }

    #[test]
    fn skew_hermitian_is_unitary() {
        for seed in 0..20 {
            let u = expm_skew_hermitian(&gue(seed, 6), 1.0).unwrap();
            assert!(u.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn general_literals() {
        assert_eq!(expm_general(&ComplexMatrix::zeros(3, 3)).unwrap(), ComplexMatrix::identity(3));
        let got = expm_general(&ComplexMatrix::diag(&[c64(0.7, 0.0), c64(-2.0, 1.0)])).unwrap();
        let want = ComplexMatrix::diag(&[c64(0.7, 0.0).exp(), c64(-2.0, 1.0).exp()]);
        assert!(got.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn general_agrees_with_eigen_path() {
        for seed in 0..20 {
            let h = gue(seed, 5).scale_real(3.0);
            let via_pade = expm_general(&h.scale(c64(0.0, -1.0))).unwrap();
            let via_eigh = expm_skew_hermitian(&h, 1.0).unwrap();
            assert!(via_pade.max_abs_diff(&via_eigh) < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn general_matches_taylor_on_non_normal() {
        for seed in 0..10 {
            let g = random_instance(&RandomInstanceSpec::new(seed, InstanceKind::Ginibre, 6)).scale_real(1.5);
            let got = expm_general(&g).unwrap();
            let want = taylor_expm(&g);
            assert!(got.max_abs_diff(&want) / want.max_abs() < 1e-11, "seed {seed}");
        }
    }

    #[test]
    fn log_literals() {
        let log = logm_unitary_principal(&ComplexMatrix::identity(3)).unwrap();
        assert!(log.omega.max_abs() < 1e-15);
        assert!((log.branch_margin - PI).abs() < 1e-15);

        let u = expm_skew_hermitian(&pauli::z(), 0.3).unwrap();
        let log = logm_unitary_principal(&u).unwrap();
        assert!(log.omega.max_abs_diff(&pauli::z().scale_real(0.3)) < 1e-10);
    }

    #[test]
    fn log_roundtrip_on_haar() {
        let mut checked = 0;
        for seed in 0..200u64 {
            let u = random_instance(&RandomInstanceSpec::new(seed, InstanceKind::HaarUnitary, 4));
            let Ok(log) = logm_unitary_principal(&u) else { continue };
            if log.branch_margin < 1e-2 {
                continue;
            }
            let back = expm_skew_hermitian(&log.omega, 1.0).unwrap();
            assert!(back.max_abs_diff(&u) < 1e-9, "seed {seed}");
            checked += 1;
        }
        assert!(checked > 150);
    }

    #[test]
    fn log_inverts_exp_below_pi() {
        for seed in 0..50 {
            let h = gue(seed, 4);
            let e = eigh(&h).unwrap();
            let spread = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let t = 2.5 / spread;
            let u = expm_skew_hermitian(&h, t).unwrap();
            let log = logm_unitary_principal(&u).unwrap();
            assert!(log.omega.scale_real(1.0 / t).max_abs_diff(&h) < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn log_handles_degenerate_spectrum() {
        let h = ComplexMatrix::diag_real(&[0.5, 0.5, -0.25, -0.25]);
        let v = random_instance(&RandomInstanceSpec::new(9, InstanceKind::HaarUnitary, 4));
        let h = &(&v * &h) * &v.adjoint();
        let u = expm_skew_hermitian(&h, 1.0).unwrap();
        let log = logm_unitary_principal(&u).unwrap();
        assert!(log.omega.max_abs_diff(&h) < 1e-10);
    }

    #[test]
    fn log_guards_branch_cut() {
        let u = ComplexMatrix::diag(&[c64(-1.0, 0.0), c64(1.0, 0.0)]);
        assert!(matches!(logm_unitary_principal(&u), Err(Error::BranchCut { .. })));
        let near = ComplexMatrix::diag(&[C64::from_polar(1.0, PI - 1e-8), c64(1.0, 0.0)]);
        assert!(matches!(logm_unitary_principal(&near), Err(Error::BranchCut { .. })));
        let ok = ComplexMatrix::diag(&[C64::from_polar(1.0, PI - 1e-4), c64(1.0, 0.0)]);
        assert!(logm_unitary_principal(&ok).is_ok());
    }

    #[test]
    fn log_rejects_non_unitary() {
        let a = ComplexMatrix::identity(2).scale_real(1.1);
        assert!(matches!(logm_unitary_principal(&a), Err(Error::NotUnitary { .. })));
    }
}
