use serde::{Deserialize, Serialize};

use super::{HamiltonianSchedule, Segment};
use crate::error::{Error, Result};
use crate::linalg::{c64, commutator, logm_unitary_principal, ComplexMatrix};
use crate::norms::operator_norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaMethod {
    PrincipalLog,
    Magnus1,
    Magnus12,
}

/// Ω(t) with U(t) = e^{-itΩ(t)}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveHamiltonianResult {
    pub omega: ComplexMatrix,
    pub t: f64,
    pub method: OmegaMethod,
    /// Distance of U's eigenphases from ±π; only for the principal log.
    pub branch_margin: Option<f64>,
}

/// Ω = (principal log of U)/t, Hermitian, with e^{-itΩ} = U.
pub fn effective_hamiltonian(u: &ComplexMatrix, t: f64) -> Result<EffectiveHamiltonianResult> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("effective Hamiltonian needs t > 0, got {t}")));
    }
    let log = logm_unitary_principal(u)?;
    Ok(EffectiveHamiltonianResult {
        omega: log.omega.scale_real(1.0 / t),
        t,
        method: OmegaMethod::PrincipalLog,
        branch_margin: Some(log.branch_margin),
    })
}

fn free_only(sched: &HamiltonianSchedule) -> Result<()> {
    if sched.has_pulses() {
        return Err(Error::PulsesPresent);
    }
    Ok(())
}

/// Ω₁ = (1/t)∫H, the duration-weighted mean of the segment generators.
pub fn magnus_term1(sched: &HamiltonianSchedule) -> Result<ComplexMatrix> {
    free_only(sched)?;
    let t = sched.total_duration();
    let mut acc = ComplexMatrix::zeros(sched.dim(), sched.dim());
    for (d, h) in sched.free_segments() {
        acc = &acc + &h.scale_real(d);
    }
    Ok(acc.scale_real(1.0 / t))
}

/// Ω₂ = (−i/2t)∫₀ᵗdt₁∫₀^{t₁}dt₂[H(t₁), H(t₂)].
///
/// For piecewise-constant H the kernel vanishes inside each interval, and a
/// later interval k against an earlier interval l contributes δₖδₗ[Hₖ, Hₗ],
/// so Ω₂ = (−i/2t) Σ_k δₖ[Hₖ, Σ_{l<k} δₗHₗ].
pub fn magnus_term2(sched: &HamiltonianSchedule) -> Result<ComplexMatrix> {
    free_only(sched)?;
    let t = sched.total_duration();
    let n = sched.dim();
    let mut earlier = ComplexMatrix::zeros(n, n);
    let mut acc = ComplexMatrix::zeros(n, n);
    for (d, h) in sched.free_segments() {
        acc = &acc + &commutator(h, &earlier).scale_real(d);
        earlier = &earlier + &h.scale_real(d);
    }
    Ok(acc.scale(c64(0.0, -0.5 / t)).hermitian_part())
}

/// Ω₁ + Ω₂.
pub fn magnus_term12(sched: &HamiltonianSchedule) -> Result<ComplexMatrix> {
    Ok(&magnus_term1(sched)? + &magnus_term2(sched)?)
}

/// Schedule with pulses folded into the frame of the preceding pulses.
#[derive(Debug, Clone)]
pub struct TogglingFrame {
    /// Pulse-free schedule with each H replaced by P†HP, P the product of
    /// all earlier pulses.
    pub schedule: HamiltonianSchedule,
    /// Product of all pulses; the full propagator is `net_pulse · U_toggled`.
    pub net_pulse: ComplexMatrix,
}

pub fn toggling_frame(sched: &HamiltonianSchedule) -> Result<TogglingFrame> {
    let mut frame = ComplexMatrix::identity(sched.dim());
    let mut segments = Vec::new();
    for seg in sched.segments() {
        match seg {
            Segment::Free { duration, h } => {
                let toggled = (&(&frame.adjoint() * h) * &frame).hermitian_part();
                segments.push(Segment::Free { duration: *duration, h: toggled });
            }
            Segment::Pulse { u } => frame = u * &frame,
        }
    }
    Ok(TogglingFrame { schedule: HamiltonianSchedule::new(segments)?, net_pulse: frame })
}

/// Sufficient condition ∫‖H(s)‖∞ds < π for absolute Magnus convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnusGate {
    pub ok: bool,
    pub integral: f64,
}

pub fn magnus_convergence_ok(sched: &HamiltonianSchedule) -> Result<MagnusGate> {
    free_only(sched)?;
    let integral: f64 = sched.free_segments().map(|(d, h)| d * operator_norm(h)).sum();
    Ok(MagnusGate { ok: integral < std::f64::consts::PI, integral })
}
