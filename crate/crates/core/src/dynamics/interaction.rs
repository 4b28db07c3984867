use serde::{Deserialize, Serialize};

use super::{
    check_compatible, effective_hamiltonian, propagator, sum_schedules, sup_norm, time_average_norm,
    HamiltonianSchedule,
};
use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::norms::{norm, NormKind};

/// Slack below which a Corollary-2-type inequality counts as violated.
pub const COROLLARY2_TOL: f64 = 1e-9;

/// Frame that removes the unperturbed evolution U₀.
#[derive(Debug, Clone)]
pub struct InteractionPicture {
    /// Ũ = U₀(t)†U(t).
    pub u_tilde: ComplexMatrix,
    pub t: f64,
    h0: HamiltonianSchedule,
    v: HamiltonianSchedule,
}

impl InteractionPicture {
    /// H̃(s) = U₀(s)†V(s)U₀(s).
    pub fn h_tilde_at(&self, s: f64) -> Result<ComplexMatrix> {
        let u0 = self.h0.propagator_until(s)?;
        Ok((&(&u0.adjoint() * self.v.hamiltonian_at(s)) * &u0).hermitian_part())
    }
}

/// Requires `v` pulse-free and of the same total duration as `h0`.
pub fn interaction_picture(h0: &HamiltonianSchedule, v: &HamiltonianSchedule) -> Result<InteractionPicture> {
    check_compatible(h0, v)?;
    let full = sum_schedules(h0, v)?;
    let u_tilde = &propagator(h0)?.adjoint() * &propagator(&full)?;
    Ok(InteractionPicture { u_tilde, t: h0.total_duration(), h0: h0.clone(), v: v.clone() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corollary2Report {
    pub kind: NormKind,
    pub t: f64,
    pub branch_margin: f64,
    pub omega_tilde_norm: f64,
    pub avg_v_norm: f64,
    pub sup_v_norm: f64,
    /// ⟨‖V‖⟩ − ‖Ω̃‖.
    pub slack_avg: f64,
    /// sup‖V‖ − ⟨‖V‖⟩.
    pub slack_sup: f64,
    /// Same bound for the full Ω against ⟨‖H₀ + V‖⟩; absent when `h0` has
    /// pulses or the full propagator sits on the log branch cut.
    pub schrodinger: Option<SchrodingerVariant>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchrodingerVariant {
    pub omega_norm: f64,
    pub avg_h_norm: f64,
    pub slack: f64,
}

impl Corollary2Report {
    pub fn holds(&self) -> bool {
        self.slack_avg >= -COROLLARY2_TOL
            && self.slack_sup >= -COROLLARY2_TOL
            && self.schrodinger.is_none_or(|s| s.slack >= -COROLLARY2_TOL)
    }

    pub fn worst_slack(&self) -> f64 {
        let base = self.slack_avg.min(self.slack_sup);
        self.schrodinger.map_or(base, |s| base.min(s.slack))
    }
}

/// ‖Ω̃‖ ≤ ⟨‖V‖⟩ ≤ sup‖V‖ for a unitarily invariant norm.
pub fn corollary2_check(h0: &HamiltonianSchedule, v: &HamiltonianSchedule, kind: NormKind) -> Result<Corollary2Report> {
    let ip = interaction_picture(h0, v)?;
    let eff = effective_hamiltonian(&ip.u_tilde, ip.t)?;
    let nrm = |m: &ComplexMatrix| norm(m, kind);
    // validates the Ky Fan index once; the closures below cannot fail after it
    let omega_tilde_norm = nrm(&eff.omega)?;
    let avg_v_norm = time_average_norm(v, |m| nrm(m).unwrap_or(f64::NAN));
    let sup_v_norm = sup_norm(v, |m| nrm(m).unwrap_or(f64::NAN));

    let schrodinger = if h0.has_pulses() {
        None
    } else {
        let full = sum_schedules(h0, v)?;
        match effective_hamiltonian(&propagator(&full)?, ip.t) {
            Ok(res) => {
                let omega_norm = nrm(&res.omega)?;
                let avg_h_norm = time_average_norm(&full, |m| nrm(m).unwrap_or(f64::NAN));
                Some(SchrodingerVariant { omega_norm, avg_h_norm, slack: avg_h_norm - omega_norm })
            }
            Err(_) => None,
        }
    };

    Ok(Corollary2Report {
        kind,
        t: ip.t,
        branch_margin: eff.branch_margin.unwrap_or(f64::NAN),
        omega_tilde_norm,
        avg_v_norm,
        sup_v_norm,
        slack_avg: avg_v_norm - omega_tilde_norm,
        slack_sup: sup_v_norm - avg_v_norm,
        schrodinger,
    })
}
