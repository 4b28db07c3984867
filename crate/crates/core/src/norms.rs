//! Unitarily invariant matrix norms and the identities they satisfy.
//!
//! Every norm is computed from one call to [`svd_values`], so all of them
//! share a single numerical pathway and a single round-off budget.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::{ginibre, haar_unitary, trial_rng};
use crate::linalg::{partial_trace_b, polar_unitary, svd, svd_values, ComplexMatrix, SubsystemDims, C64};

/// Inequalities may fail by at most this much (round-off).
pub const SLACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Trace,
    Frobenius,
    Operator,
    /// Sum of the k largest singular values.
    KyFan(usize),
}

impl NormKind {
    /// Norms that are multiplicative over tensor products.
    pub fn is_tensor_multiplicative(&self) -> bool {
        !matches!(self, NormKind::KyFan(_))
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormKind::Trace => write!(f, "trace"),
            NormKind::Frobenius => write!(f, "frobenius"),
            NormKind::Operator => write!(f, "operator"),
            NormKind::KyFan(k) => write!(f, "kyfan({k})"),
        }
    }
}

fn from_singular_values(s: &[f64], kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Trace => Ok(s.iter().sum()),
        NormKind::Frobenius => Ok(s.iter().map(|x| x * x).sum::<f64>().sqrt()),
        NormKind::Operator => Ok(s.first().copied().unwrap_or(0.0)),
        NormKind::KyFan(k) => {
            if k == 0 || k > s.len() {
                return Err(Error::InvalidArgument(format!("Ky Fan index {k} outside 1..={}", s.len())));
            }
            Ok(s[..k].iter().sum())
        }
    }
}

pub fn norm(a: &ComplexMatrix, kind: NormKind) -> Result<f64> {
    from_singular_values(&svd_values(a), kind)
}

pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    svd_values(a).iter().sum()
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    svd_values(a).iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    svd_values(a).first().copied().unwrap_or(0.0)
}

/// Trace, Frobenius and operator norms plus all Ky Fan norms of one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub trace: f64,
    pub frobenius: f64,
    pub operator: f64,
    /// `kyfan[k-1]` is the Ky Fan k-norm.
    pub kyfan: Vec<f64>,
    /// ‖A‖∞ ≤ ‖A‖₂ ≤ ‖A‖₁ within round-off.
    pub ordering_ok: bool,
}

pub fn summarize(a: &ComplexMatrix) -> NormSummary {
    let s = svd_values(a);
    let trace: f64 = s.iter().sum();
    let frobenius = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let operator = s.first().copied().unwrap_or(0.0);
    let kyfan = s
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let ordering_ok = operator <= frobenius + 1e-12 && frobenius <= trace + 1e-12;
    NormSummary { trace, frobenius, operator, kyfan, ordering_ok }
}

/// Outcome of the trace/operator duality checks on one matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualityReport {
    pub trace_norm: f64,
    pub operator_norm: f64,
    /// |Tr(W†A)| for the polar unitary W of A.
    pub polar_value: f64,
    /// |Tr(B†A)| for B = u₁v₁†, the top singular dyad (‖B‖₁ = 1).
    pub dyad_value: f64,
    /// Largest |Tr(B†A)| over the random unitaries probed.
    pub random_unitary_max: f64,
    /// Minimum slack over every checked relation; negative means violation.
    pub worst_slack: f64,
}

impl DualityReport {
    pub fn holds(&self) -> bool {
        self.worst_slack >= -SLACK_TOL
    }
}

fn tr_adjoint_product(b: &ComplexMatrix, a: &ComplexMatrix) -> C64 {
    // Tr(B†A) = Σ conj(B_ij) A_ij
    b.as_inner().iter().zip(a.as_inner().iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Checks |Tr(BA)| ≤ ‖A‖∞‖B†‖₁ and ≤ ‖B†‖∞‖A‖₁ over `trials` random B,
/// that random unitaries never beat ‖A‖₁, and that the polar unitary and
/// the top singular dyad attain ‖A‖₁ and ‖A‖∞ exactly.
pub fn check_duality(a: &ComplexMatrix, trials: usize, seed: u64) -> Result<DualityReport> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("duality check needs a square matrix".into()));
    }
    let n = a.rows();
    let sa = svd_values(a);
    let a1: f64 = sa.iter().sum();
    let ainf = sa.first().copied().unwrap_or(0.0);
    let mut worst = f64::INFINITY;

    let mut rng = trial_rng(seed, 0);
    let mut random_unitary_max = 0.0f64;
    for _ in 0..trials {
        let b = ginibre(&mut rng, n).scale_real(rng.random_range(0.1..2.0));
        let sb = svd_values(&b);
        let b1: f64 = sb.iter().sum();
        let binf = sb[0];
        let lhs = (&b * a).trace().norm();
        worst = worst.min(ainf * b1 - lhs).min(binf * a1 - lhs);

        let w = haar_unitary(&mut rng, n);
        let val = tr_adjoint_product(&w, a).norm();
        random_unitary_max = random_unitary_max.max(val);
        worst = worst.min(a1 - val);
    }

    let w = polar_unitary(a);
    let polar_value = tr_adjoint_product(&w, a).norm();
    worst = worst.min(-(polar_value - a1).abs());

    let dec = svd(a);
    let dyad = ComplexMatrix::outer(&dec.u.column(0), &dec.v_adjoint.adjoint().column(0));
    let dyad_value = tr_adjoint_product(&dyad, a).norm();
    worst = worst.min(-(dyad_value - ainf).abs());

    Ok(DualityReport {
        trace_norm: a1,
        operator_norm: ainf,
        polar_value,
        dyad_value,
        random_unitary_max,
        worst_slack: worst,
    })
}

/// Both sides of ‖tr_B X‖ ≤ (d_B/‖I_B‖)‖X‖.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialTraceReport {
    pub kind: NormKind,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs.
    pub slack: f64,
    /// False for Ky Fan norms, where the inequality is not guaranteed.
    pub guaranteed: bool,
}

impl PartialTraceReport {
    pub fn holds(&self) -> bool {
        self.slack >= -SLACK_TOL
    }
}

pub fn check_partial_trace_bound(x: &ComplexMatrix, dims: SubsystemDims, kind: NormKind) -> Result<PartialTraceReport> {
    let reduced = partial_trace_b(x, dims)?;
    let lhs = norm(&reduced, kind)?;
    let id_norm = norm(&ComplexMatrix::identity(dims.db), kind)?;
    let rhs = dims.db as f64 / id_norm * norm(x, kind)?;
    Ok(PartialTraceReport { kind, lhs, rhs, slack: rhs - lhs, guaranteed: kind.is_tensor_multiplicative() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_density;
    use crate::linalg::{random_instance, tensor, InstanceKind, RandomInstanceSpec};

    #[test]
    fn identity_norms() {
        for d in 1..6 {
            let id = ComplexMatrix::identity(d);
            assert!((norm(&id, NormKind::Trace).unwrap() - d as f64).abs() < 1e-12);
            assert!((norm(&id, NormKind::Frobenius).unwrap() - (d as f64).sqrt()).abs() < 1e-12);
            assert!((norm(&id, NormKind::Operator).unwrap() - 1.0).abs() < 1e-12);
            for k in 1..=d {
                assert!((norm(&id, NormKind::KyFan(k)).unwrap() - k as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_ordering() {
        let a = ComplexMatrix::diag_real(&[3.0, 1.0]);
        let s = summarize(&a);
        assert!((s.operator - 3.0).abs() < 1e-14);
        assert!((s.frobenius - 10f64.sqrt()).abs() < 1e-14);
        assert!((s.trace - 4.0).abs() < 1e-14);
        assert!(s.ordering_ok);
    }

    #[test]
    fn kyfan_index_is_checked() {
        let a = ComplexMatrix::identity(2);
        assert!(norm(&a, NormKind::KyFan(3)).is_err());
        assert!(norm(&a, NormKind::KyFan(0)).is_err());
    }

    #[test]
    fn duality_literals() {
        let r = check_duality(&ComplexMatrix::identity(2), 10, 1).unwrap();
        assert!((r.polar_value - 2.0).abs() < 1e-12 && r.holds());
        let r = check_duality(&ComplexMatrix::diag_real(&[1.0, -1.0]), 10, 1).unwrap();
        assert!((r.polar_value - 2.0).abs() < 1e-12 && r.holds());
        assert!(
            polar_unitary(&ComplexMatrix::diag_real(&[1.0, -1.0]))
                .max_abs_diff(&ComplexMatrix::diag_real(&[1.0, -1.0]))
                < 1e-12
        );
    }

    #[test]
    fn duality_random_probe() {
        let a = random_instance(&RandomInstanceSpec::new(77, InstanceKind::Ginibre, 4));
        let r = check_duality(&a, 500, 3).unwrap();
        assert!(r.random_unitary_max <= r.trace_norm + 1e-10);
        assert!((r.polar_value - r.trace_norm).abs() < 1e-10);
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn partial_trace_trace_norm_contracts() {
        let mut rng = trial_rng(8, 0);
        let dims = SubsystemDims::new(2, 3).unwrap();
        for _ in 0..50 {
            let x = &random_density(&mut rng, 6) - &random_density(&mut rng, 6);
            let r = check_partial_trace_bound(&x, dims, NormKind::Trace).unwrap();
            assert!(r.holds());
        }
    }

    #[test]
    fn partial_trace_identity_saturates_frobenius() {
        let dims = SubsystemDims::new(2, 2).unwrap();
        let r = check_partial_trace_bound(&ComplexMatrix::identity(4), dims, NormKind::Frobenius).unwrap();
        assert!((r.lhs - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((r.rhs - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kyfan_counterexample() {
        let dims = SubsystemDims::new(2, 2).unwrap();
        let r = check_partial_trace_bound(&ComplexMatrix::identity(4), dims, NormKind::KyFan(2)).unwrap();
        assert!((r.lhs - 4.0).abs() < 1e-12);
        assert!((r.rhs - 2.0).abs() < 1e-12);
        assert!(!r.guaranteed && !r.holds());
    }

    #[test]
    fn kyfan_not_tensor_multiplicative() {
        let i2 = ComplexMatrix::identity(2);
        let lhs = norm(&tensor(&i2, &i2), NormKind::KyFan(2)).unwrap();
        let rhs = norm(&i2, NormKind::KyFan(2)).unwrap().powi(2);
        assert!((lhs - 2.0).abs() < 1e-12 && (rhs - 4.0).abs() < 1e-12);
    }
}
