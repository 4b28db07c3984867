//! Superoperators as d²×d² matrices acting on column-stacked operators.
//!
//! Convention: `stack(ρ)[i + j·d] = ρ[i][j]`, so that
//! `stack(A ρ B) = (Bᵀ ⊗ A) stack(ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::{trial_rng, unit_vector};
use crate::linalg::{c64, expm_general, polar_unitary, svd, tensor, ComplexMatrix, C64};
use crate::norms::{operator_norm, trace_norm};

/// Restarts used by [`ot_norm_lower`] when the caller has no preference.
pub const DEFAULT_SAMPLES: usize = 64;
/// Ascent iterations per restart.
pub const DEFAULT_REFINE_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

/// Column-stacks a square matrix.
pub fn stack(rho: &ComplexMatrix) -> Vec<C64> {
    // nalgebra storage is column-major, which is exactly the stacking order
    rho.as_inner().as_slice().to_vec()
}

/// Inverse of [`stack`].
pub fn unstack(v: &[C64], d: usize) -> ComplexMatrix {
    assert_eq!(v.len(), d * d, "unstack length");
    ComplexMatrix::from_inner(nalgebra::DMatrix::from_column_slice(d, d, v))
}

impl SuperOperator {
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != dim * dim || matrix.cols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on {dim}x{dim} operators needs a {0}x{0} matrix, got {1}x{2}",
                dim * dim,
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: ComplexMatrix::identity(dim * dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: ComplexMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator acts on {0}x{0} operators, got {1}x{2}",
                self.dim,
                rho.rows(),
                rho.cols()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(&stack(rho));
        let out = self.matrix.as_inner() * v;
        Ok(unstack(out.as_slice(), self.dim))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.same_dim(other)?;
        Ok(Self { dim: self.dim, matrix: &self.matrix * &other.matrix })
    }

    pub fn sub(&self, other: &SuperOperator) -> Result<SuperOperator> {
        self.same_dim(other)?;
        Ok(Self { dim: self.dim, matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, s: f64) -> SuperOperator {
        Self { dim: self.dim, matrix: self.matrix.scale_real(s) }
    }

    /// Dual map with respect to the Hilbert–Schmidt inner product.
    pub fn dual(&self) -> SuperOperator {
        Self { dim: self.dim, matrix: self.matrix.adjoint() }
    }

    fn same_dim(&self, other: &SuperOperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperators on {} and {} dimensional spaces",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// L = −i[Ω, ·], matrix −i(I⊗Ω − Ωᵀ⊗I).
pub fn commutator_generator(omega: &ComplexMatrix) -> Result<SuperOperator> {
    omega.ensure_hermitian()?;
    let d = omega.rows();
    let id = ComplexMatrix::identity(d);
    let m = (tensor(&id, omega) - tensor(&omega.transpose(), &id)).scale(c64(0.0, -1.0));
    SuperOperator::new(d, m)
}

/// ρ ↦ UρU†, matrix conj(U)⊗U.
pub fn conjugation_channel(u: &ComplexMatrix) -> Result<SuperOperator> {
    u.ensure_unitary()?;
    SuperOperator::new(u.rows(), tensor(&u.conj(), u))
}

/// e^{tL}.
pub fn superop_exp(l: &SuperOperator, t: f64) -> Result<SuperOperator> {
    SuperOperator::new(l.dim, expm_general(&l.matrix.scale_real(t))?)
}

/// Certified upper bound 2‖Ω‖∞ on the O-T norm of −i[Ω, ·].
pub fn commutator_ot_norm_upper(omega: &ComplexMatrix) -> Result<f64> {
    omega.ensure_hermitian()?;
    Ok(2.0 * operator_norm(omega))
}

/// Lower estimate of the operator-trace norm sup_{‖ρ‖₁=1} ‖Λρ‖₁.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OTNormEstimate {
    /// ‖Λ(uv†)‖₁ at the reported dyad.
    pub value: f64,
    pub samples: usize,
    pub refine_iters: usize,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
}

fn dyad_value(l: &SuperOperator, u: &[C64], v: &[C64]) -> f64 {
    trace_norm(&l.apply(&ComplexMatrix::outer(u, v)).expect("dyad has the map's dimension"))
}

/// Estimates the O-T norm from below by maximizing f(u, v) = ‖Λ(uv†)‖₁
/// over unit vectors.
///
/// ρ ↦ ‖Λρ‖₁ is convex, so its supremum over the trace-norm unit ball is
/// attained at an extreme point of the ball, and the extreme points are the
/// rank-one dyads uv† with unit u, v. Searching dyads therefore loses
/// nothing.
///
/// Each restart starts from random (u, v) drawn from its own RNG stream and
/// alternates two exact maximizations: W ← polar unitary of Λ(uv†), which
/// makes Re Tr(W†Λ(uv†)) = f(u, v); then (u, v) ← top singular pair of the
/// dual map applied to W, which maximizes |Tr(W†Λ(uv†))| over dyads. f never
/// decreases along the way. The best restart wins, so the value is monotone
/// in `samples`.
pub fn ot_norm_lower(l: &SuperOperator, samples: usize, refine_iters: usize, seed: u64) -> Result<OTNormEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("ot_norm_lower needs at least one sample".into()));
    }
    let d = l.dim;
    let dual = l.dual();
    let mut best: Option<(f64, Vec<C64>, Vec<C64>)> = None;
    for restart in 0..samples {
        let mut rng = trial_rng(seed, restart as u64);
        let mut u = unit_vector(&mut rng, d);
        let mut v = unit_vector(&mut rng, d);
        let mut f = dyad_value(l, &u, &v);
        for _ in 0..refine_iters {
            let image = l.apply(&ComplexMatrix::outer(&u, &v))?;
            let w = polar_unitary(&image);
            let m = dual.apply(&w)?;
            let dec = svd(&m);
            let (nu, nv) = (dec.u.column(0), dec.v_adjoint.adjoint().column(0));
            let nf = dyad_value(l, &nu, &nv);
            if nf <= f {
                break;
            }
            let gain = nf - f;
            u = nu;
            v = nv;
            f = nf;
            if gain <= 1e-15 * f.max(1.0) {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _, _)| f > *b) {
            best = Some((f, u, v));
        }
    }
    let (value, u, v) = best.expect("samples >= 1");
    Ok(OTNormEstimate { value, samples, refine_iters, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{gue, haar_unitary, random_density};
    use crate::linalg::{commutator, eigh, expm_skew_hermitian, pauli};

    #[test]
    fn stacking_convention() {
        let a = ComplexMatrix::from_rows(&[[c64(1.0, 0.0), c64(2.0, 0.0)], [c64(3.0, 0.0), c64(4.0, 0.0)]]);
        let s = stack(&a);
        assert_eq!(s, vec![c64(1.0, 0.0), c64(3.0, 0.0), c64(2.0, 0.0), c64(4.0, 0.0)]);
        assert_eq!(unstack(&s, 2), a);
    }

    #[test]
    fn sandwich_identity_pins_convention() {
        let mut rng = trial_rng(1, 0);
        let a = crate::linalg::random::ginibre(&mut rng, 3);
        let b = crate::linalg::random::ginibre(&mut rng, 3);
        let x = crate::linalg::random::ginibre(&mut rng, 3);
        let map = SuperOperator::new(3, tensor(&b.transpose(), &a)).unwrap();
        let direct = &(&a * &x) * &b;
        assert!(map.apply(&x).unwrap().max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn commutator_generator_literals() {
        let l = commutator_generator(&ComplexMatrix::zeros(2, 2)).unwrap();
        assert_eq!(l, SuperOperator::zero(2));

        let l = commutator_generator(&pauli::z()).unwrap();
        let got = l.apply(&pauli::x()).unwrap();
        assert!(got.max_abs_diff(&pauli::y().scale_real(2.0)) < 1e-15);
    }

    #[test]
    fn commutator_generator_matches_direct_algebra() {
        let mut rng = trial_rng(2, 0);
        for _ in 0..20 {
            let om = gue(&mut rng, 3);
            let rho = random_density(&mut rng, 3);
            let got = commutator_generator(&om).unwrap().apply(&rho).unwrap();
            let want = commutator(&om, &rho).scale(c64(0.0, -1.0));
            assert!(got.max_abs_diff(&want) < 1e-13);
        }
    }

    #[test]
    fn nested_commutator_identity() {
        let mut rng = trial_rng(3, 0);
        for _ in 0..20 {
            let om = gue(&mut rng, 2);
            let rho = random_density(&mut rng, 2);
            let t = 0.7;
            let via_super = superop_exp(&commutator_generator(&om).unwrap(), t).unwrap().apply(&rho).unwrap();
            let u = expm_skew_hermitian(&om, t).unwrap();
            let direct = &(&u * &rho) * &u.adjoint();
            assert!(via_super.max_abs_diff(&direct) < 1e-9);
        }
    }

    #[test]
    fn conjugation_channel_literals() {
        assert_eq!(conjugation_channel(&ComplexMatrix::identity(2)).unwrap(), SuperOperator::identity(2));
        let ket0 = ComplexMatrix::diag_real(&[1.0, 0.0]);
        let got = conjugation_channel(&pauli::x()).unwrap().apply(&ket0).unwrap();
        assert_eq!(got, ComplexMatrix::diag_real(&[0.0, 1.0]));
        assert!(conjugation_channel(&ComplexMatrix::identity(2).scale_real(2.0)).is_err());
    }

    #[test]
    fn conjugation_preserves_trace_and_hermiticity() {
        let mut rng = trial_rng(4, 0);
        let ch = conjugation_channel(&haar_unitary(&mut rng, 3)).unwrap();
        for _ in 0..100 {
            let rho = random_density(&mut rng, 3);
            let out = ch.apply(&rho).unwrap();
            assert!((out.trace() - rho.trace()).norm() < 1e-12);
            assert!(out.hermitian_defect() < 1e-12);
        }
    }

    #[test]
    fn superop_exp_semigroup_and_channel_agreement() {
        let mut rng = trial_rng(5, 0);
        let h = gue(&mut rng, 2);
        let l = commutator_generator(&h).unwrap();
        assert!(superop_exp(&l, 0.0).unwrap().matrix().max_abs_diff(SuperOperator::identity(2).matrix()) < 1e-15);
        let direct = conjugation_channel(&expm_skew_hermitian(&h, 0.9).unwrap()).unwrap();
        assert!(superop_exp(&l, 0.9).unwrap().matrix().max_abs_diff(direct.matrix()) < 1e-9);
        let split = superop_exp(&l, 0.4).unwrap().compose(&superop_exp(&l, 0.5).unwrap()).unwrap();
        assert!(split.matrix().max_abs_diff(superop_exp(&l, 0.9).unwrap().matrix()) < 1e-9);
    }

    #[test]
    fn ot_norm_of_zero_map() {
        let est = ot_norm_lower(&SuperOperator::zero(3), 4, 10, 0).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn ot_norm_of_unitary_channel_is_one() {
        let mut rng = trial_rng(6, 0);
        for _ in 0..10 {
            let ch = conjugation_channel(&haar_unitary(&mut rng, 3)).unwrap();
            let est = ot_norm_lower(&ch, 8, 50, 1).unwrap();
            assert!((est.value - 1.0).abs() < 1e-6);
        }
    }

    // Brute-force grid over qubit dyads (Bloch angles for u and v plus a
    // relative phase) for the commutator with σz.
    #[test]
    fn ot_norm_of_sigma_z_commutator_grid_oracle() {
        let l = commutator_generator(&pauli::z()).unwrap();
        let steps = 24;
        let mut grid_best = 0.0f64;
        for a in 0..=steps {
            for b in 0..=steps {
                for p in 0..steps {
                    let th_u = std::f64::consts::PI * a as f64 / steps as f64;
                    let th_v = std::f64::consts::PI * b as f64 / steps as f64;
                    let ph = 2.0 * std::f64::consts::PI * p as f64 / steps as f64;
                    let u = [c64((th_u / 2.0).cos(), 0.0), C64::from_polar((th_u / 2.0).sin(), ph)];
                    let v = [c64((th_v / 2.0).cos(), 0.0), c64((th_v / 2.0).sin(), 0.0)];
                    grid_best = grid_best.max(dyad_value(&l, &u, &v));
                }
            }
        }
        assert!((grid_best - 2.0).abs() < 1e-9);
        let est = ot_norm_lower(&l, DEFAULT_SAMPLES, DEFAULT_REFINE_ITERS, 7).unwrap();
        assert!(est.value >= 2.0 - 1e-4 && est.value <= 2.0 + 1e-10, "{}", est.value);
        let recomputed = dyad_value(&l, &est.u, &est.v);
        assert_eq!(recomputed, est.value);
    }

    #[test]
    fn ot_norm_reaches_spectral_spread() {
        let mut rng = trial_rng(8, 0);
        for _ in 0..20 {
            let om = gue(&mut rng, 3);
            let e = eigh(&om).unwrap();
            let spread = e.values[2] - e.values[0];
            let l = commutator_generator(&om).unwrap();
            let est = ot_norm_lower(&l, 16, 100, 2).unwrap();
            assert!(est.value <= spread + 1e-9);
            assert!(est.value >= spread - 1e-6, "{} vs {}", est.value, spread);
            assert!(est.value <= commutator_ot_norm_upper(&om).unwrap() + 1e-9);
        }
    }

    #[test]
    fn ot_norm_monotone_in_samples() {
        let mut rng = trial_rng(9, 0);
        let a = crate::linalg::random::ginibre(&mut rng, 9);
        let l = SuperOperator::new(3, a).unwrap();
        let mut prev = 0.0;
        for samples in [1, 2, 4, 8] {
            let v = ot_norm_lower(&l, samples, 3, 11).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn ot_norm_rejects_zero_samples() {
        assert!(ot_norm_lower(&SuperOperator::identity(2), 0, 1, 0).is_err());
    }
}
