//! State distances and the distance bounds built on effective Hamiltonians.

mod scenario;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, C64};
use crate::norms::{operator_norm, trace_norm};

pub use scenario::{
    dyson_chain_check, random_scenario, verify_scenario, BoundReport, BoundSlacks, BoundVerdicts, DysonPoint,
    DysonReport, Scenario, ScenarioParams, VerifyOptions,
};

/// Round-off allowance for density-matrix validation.
pub const DENSITY_TOL: f64 = 1e-10;
/// Round-off allowance for the bound verdicts.
pub const BOUND_TOL: f64 = 1e-8;
/// Round-off allowance for the Fuchs–van de Graaf sandwich.
pub const FUCHS_TOL: f64 = 1e-10;
/// Eigenvalues of a density matrix below this are treated as exact zeros
/// when taking square roots, so round-off does not leak √ε into fidelities.
const PSD_FLOOR: f64 = 1e-14;

/// Checks Hermiticity, unit trace and positivity up to [`DENSITY_TOL`].
pub fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidDensity(format!("shape {:?} is not square", rho.shape())));
    }
    if !rho.is_finite() {
        return Err(Error::InvalidDensity("non-finite entry".into()));
    }
    let defect = rho.hermitian_defect();
    if defect > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("not Hermitian (defect {defect:.3e})")));
    }
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
    }
    let min = eigh(&rho.hermitian_part())?.values[0];
    if min < -DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn check_pair(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<()> {
    validate_density(rho1)?;
    validate_density(rho2)?;
    if rho1.shape() != rho2.shape() {
        return Err(Error::DimensionMismatch(format!("states of shape {:?} and {:?}", rho1.shape(), rho2.shape())));
    }
    Ok(())
}

/// D = ½‖ρ₁ − ρ₂‖₁.
pub fn trace_distance(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64> {
    check_pair(rho1, rho2)?;
    Ok(0.5 * trace_norm(&(rho1 - rho2)))
}

/// Tr[P(ρ₁ − ρ₂)] for P the projector onto the positive eigenspace of
/// ρ₁ − ρ₂: the best single-measurement bias, equal to the trace distance.
pub fn trace_distance_projector(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64> {
    check_pair(rho1, rho2)?;
    let e = eigh(&(rho1 - rho2).hermitian_part())?;
    Ok(e.values.iter().filter(|&&x| x > 0.0).sum())
}

fn sqrt_density(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(&rho.hermitian_part())?;
    Ok(e.map(|x| C64::new(if x > PSD_FLOOR { x.sqrt() } else { 0.0 }, 0.0)))
}

/// F = ‖√ρ₁√ρ₂‖₁ = Tr√(√ρ₁ρ₂√ρ₁).
pub fn fidelity(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<f64> {
    check_pair(rho1, rho2)?;
    Ok(trace_norm(&(&sqrt_density(rho1)? * &sqrt_density(rho2)?)))
}

/// 1 − D ≤ F ≤ √(1 − D²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuchsReport {
    pub trace_distance: f64,
    pub fidelity: f64,
    pub lower: f64,
    pub upper: f64,
    pub slack_lower: f64,
    pub slack_upper: f64,
}

impl FuchsReport {
    pub fn holds(&self) -> bool {
        self.slack_lower >= -FUCHS_TOL && self.slack_upper >= -FUCHS_TOL
    }
}

pub fn fuchs_sandwich_check(rho1: &ComplexMatrix, rho2: &ComplexMatrix) -> Result<FuchsReport> {
    let d = trace_distance(rho1, rho2)?;
    let f = fidelity(rho1, rho2)?;
    let lower = 1.0 - d;
    let upper = (1.0 - d * d).max(0.0).sqrt();
    Ok(FuchsReport { trace_distance: d, fidelity: f, lower, upper, slack_lower: f - lower, slack_upper: upper - f })
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidArgument(format!("{name} must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// min[1, ½(e^{t·n} − 1)] for n an upper bound on ‖ΔL‖∞,1.
pub fn theorem1_bound(t: f64, delta_l_norm: f64) -> Result<f64> {
    check_nonneg("t", t)?;
    check_nonneg("generator norm", delta_l_norm)?;
    Ok((0.5 * (t * delta_l_norm).exp_m1()).min(1.0))
}

/// t·n, valid (and looser than [`theorem1_bound`]) when t·n ≤ 1.
pub fn theorem1_linearized(t: f64, delta_l_norm: f64) -> Result<Option<f64>> {
    check_nonneg("t", t)?;
    check_nonneg("generator norm", delta_l_norm)?;
    let x = t * delta_l_norm;
    Ok((x <= 1.0).then_some(x))
}

/// min[1, ½(e^{2t‖ΔΩ‖∞} − 1)].
pub fn corollary3_bound(t: f64, delta_omega: &ComplexMatrix) -> Result<f64> {
    delta_omega.ensure_hermitian()?;
    theorem1_bound(t, 2.0 * operator_norm(delta_omega))
}
