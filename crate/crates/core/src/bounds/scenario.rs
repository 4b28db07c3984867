use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    corollary3_bound, fuchs_sandwich_check, theorem1_bound, theorem1_linearized, trace_distance,
    trace_distance_projector, validate_density, BOUND_TOL, DENSITY_TOL,
};
use crate::dynamics::{
    difference_schedule, durations_match, effective_hamiltonian, propagator, sum_schedules, time_average_norm,
    HamiltonianSchedule, Segment,
};
use crate::error::{Error, Result};
use crate::linalg::random::{gue, haar_unitary, random_pure_state, trial_rng};
use crate::linalg::{partial_trace_b, tensor, ComplexMatrix, SubsystemDims};
use crate::norms::{operator_norm, trace_norm};
use crate::superop::{commutator_generator, ot_norm_lower, superop_exp, SuperOperator};

/// Tolerance for the superoperator route to the joint distance.
const DYSON_D_TOL: f64 = 1e-9;

/// Joint system–bath evolution under an actual and an ideal schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    pub dims: SubsystemDims,
    pub h_actual: HamiltonianSchedule,
    pub h_ideal: HamiltonianSchedule,
    pub rho0: ComplexMatrix,
    pub label: String,
}

#[derive(Deserialize)]
struct RawScenario {
    dims: SubsystemDims,
    h_actual: HamiltonianSchedule,
    h_ideal: HamiltonianSchedule,
    #[serde(default)]
    rho0: Option<ComplexMatrix>,
    /// System state; the bath starts maximally mixed. Used when `rho0` is absent.
    #[serde(default)]
    rho_s: Option<ComplexMatrix>,
    #[serde(default)]
    label: String,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;
    fn try_from(raw: RawScenario) -> Result<Self> {
        let rho0 = match (raw.rho0, raw.rho_s) {
            (Some(r), None) => r,
            (None, Some(rs)) => Scenario::product_with_mixed_bath(&rs, raw.dims.db),
            _ => return Err(Error::InvalidArgument("give exactly one of rho0 and rho_s".into())),
        };
        Scenario::new(raw.dims, raw.h_actual, raw.h_ideal, rho0, raw.label)
    }
}

impl Scenario {
    pub fn new(
        dims: SubsystemDims,
        h_actual: HamiltonianSchedule,
        h_ideal: HamiltonianSchedule,
        rho0: ComplexMatrix,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = SubsystemDims::new(dims.ds, dims.db)?.joint();
        if h_actual.dim() != n || h_ideal.dim() != n || rho0.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "scenario on {}x{} needs joint dimension {n}",
                dims.ds, dims.db
            )));
        }
        if !durations_match(&h_actual, &h_ideal) {
            return Err(Error::IncompatibleSchedules(format!(
                "actual and ideal durations differ: {} vs {}",
                h_actual.total_duration(),
                h_ideal.total_duration()
            )));
        }
        validate_density(&rho0)?;
        Ok(Self { dims, h_actual, h_ideal, rho0, label: label.into() })
    }

    /// ρ_S ⊗ I/d_B.
    pub fn product_with_mixed_bath(rho_s: &ComplexMatrix, db: usize) -> ComplexMatrix {
        tensor(rho_s, &ComplexMatrix::identity(db).scale_real(1.0 / db as f64))
    }

    pub fn duration(&self) -> f64 {
        self.h_actual.total_duration()
    }
}

/// Knobs for [`verify_scenario`] and [`dyson_chain_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Restarts of the O-T estimator; 0 skips the estimate.
    pub ot_samples: usize,
    pub ot_iters: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { ot_samples: 8, ot_iters: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSlacks {
    pub theorem2: f64,
    pub linearized: Option<f64>,
    pub avg_norm: Option<f64>,
    /// D_joint − D_S.
    pub lemma2: f64,
    pub fuchs_lower: f64,
    pub fuchs_upper: f64,
    /// |trace-norm D − projector D|.
    pub projector_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundVerdicts {
    pub theorem2: bool,
    pub linearized: bool,
    pub avg_norm: bool,
    pub lemma2: bool,
    pub fuchs: bool,
    pub projector: bool,
}

impl BoundVerdicts {
    pub fn all(&self) -> bool {
        self.theorem2 && self.linearized && self.avg_norm && self.lemma2 && self.fuchs && self.projector
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub label: String,
    pub t: f64,
    pub measured_d: f64,
    pub measured_d_joint: f64,
    pub branch_margin: f64,
    pub delta_omega_norm: f64,
    /// Certified 2‖ΔΩ‖∞ ≥ ‖ΔL‖∞,1.
    pub delta_l_certified: f64,
    /// Dyad-search lower estimate of ‖ΔL‖∞,1.
    pub delta_l_estimate: Option<f64>,
    /// Superoperator-norm bound from (estimate, certified surrogate); the
    /// estimate-based value is for tightness profiling only.
    pub theorem1_lhs_rhs: (Option<f64>, f64),
    pub corollary3_bound: f64,
    pub corollary3_linearized: Option<f64>,
    pub theorem2_bound: f64,
    /// min[1, ½(e^{2t⟨‖H − H⁰‖∞⟩} − 1)]; only for pulse-free schedules.
    pub avg_norm_bound: Option<f64>,
    /// Same expression with ⟨‖H‖∞⟩ − ⟨‖H⁰‖∞⟩ in the exponent. Reported, never
    /// asserted: the difference of averages can be negative.
    pub printed_avg_difference_bound: f64,
    pub fidelity: f64,
    pub fuchs_lower: f64,
    pub fuchs_upper: f64,
    pub slacks: BoundSlacks,
    pub verdicts: BoundVerdicts,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.verdicts.all()
    }
}

fn evolve(u: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    (&(u * rho) * &u.adjoint()).hermitian_part()
}

/// End-to-end check of the distance bounds on one scenario.
pub fn verify_scenario(s: &Scenario, opts: &VerifyOptions) -> Result<BoundReport> {
    let t = s.duration();
    let u = propagator(&s.h_actual)?;
    let u0 = propagator(&s.h_ideal)?;
    let joint = evolve(&u, &s.rho0);
    let joint0 = evolve(&u0, &s.rho0);
    let rho_s = partial_trace_b(&joint, s.dims)?.hermitian_part();
    let rho_s0 = partial_trace_b(&joint0, s.dims)?.hermitian_part();

    let measured_d = trace_distance(&rho_s, &rho_s0)?;
    let projector_d = trace_distance_projector(&rho_s, &rho_s0)?;
    let measured_d_joint = trace_distance(&joint, &joint0)?;

    let eff = effective_hamiltonian(&u, t)?;
    let eff0 = effective_hamiltonian(&u0, t)?;
    let branch_margin = eff.branch_margin.unwrap_or(f64::NAN).min(eff0.branch_margin.unwrap_or(f64::NAN));
    let delta = (&eff.omega - &eff0.omega).hermitian_part();
    let delta_omega_norm = operator_norm(&delta);
    let delta_l_certified = 2.0 * delta_omega_norm;
    let delta_l_estimate = if opts.ot_samples > 0 {
        Some(ot_norm_lower(&commutator_generator(&delta)?, opts.ot_samples, opts.ot_iters, opts.seed)?.value)
    } else {
        None
    };

    let theorem1_certified = theorem1_bound(t, delta_l_certified)?;
    let theorem1_estimate = delta_l_estimate.map(|n| theorem1_bound(t, n)).transpose()?;
    let corollary3 = corollary3_bound(t, &delta)?;
    let linearized = theorem1_linearized(t, delta_l_certified)?;
    let theorem2_bound = corollary3;

    let avg_norm_bound = if s.h_actual.has_pulses() || s.h_ideal.has_pulses() {
        None
    } else {
        let v = difference_schedule(&s.h_actual, &s.h_ideal)?;
        Some(theorem1_bound(t, 2.0 * time_average_norm(&v, operator_norm))?)
    };
    let avg_diff = time_average_norm(&s.h_actual, operator_norm) - time_average_norm(&s.h_ideal, operator_norm);
    let printed_avg_difference_bound = (0.5 * (2.0 * t * avg_diff).exp_m1()).min(1.0);

    let fuchs = fuchs_sandwich_check(&rho_s, &rho_s0)?;

    let slacks = BoundSlacks {
        theorem2: theorem2_bound - measured_d,
        linearized: linearized.map(|b| b - measured_d),
        avg_norm: avg_norm_bound.map(|b| b - measured_d),
        lemma2: measured_d_joint - measured_d,
        fuchs_lower: fuchs.slack_lower,
        fuchs_upper: fuchs.slack_upper,
        projector_gap: (measured_d - projector_d).abs(),
    };
    let verdicts = BoundVerdicts {
        theorem2: slacks.theorem2 >= -BOUND_TOL,
        linearized: slacks.linearized.is_none_or(|x| x >= -BOUND_TOL),
        avg_norm: slacks.avg_norm.is_none_or(|x| x >= -BOUND_TOL),
        lemma2: slacks.lemma2 >= -DENSITY_TOL,
        fuchs: fuchs.holds(),
        projector: slacks.projector_gap <= DENSITY_TOL,
    };

    Ok(BoundReport {
        label: s.label.clone(),
        t,
        measured_d,
        measured_d_joint,
        branch_margin,
        delta_omega_norm,
        delta_l_certified,
        delta_l_estimate,
        theorem1_lhs_rhs: (theorem1_estimate, theorem1_certified),
        corollary3_bound: corollary3,
        corollary3_linearized: linearized,
        theorem2_bound,
        avg_norm_bound,
        printed_avg_difference_bound,
        fidelity: fuchs.fidelity,
        fuchs_lower: fuchs.lower,
        fuchs_upper: fuchs.upper,
        slacks,
        verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DysonPoint {
    pub s: f64,
    /// Lower estimate of ‖𝒮(s) − ℐ‖∞,1.
    pub lhs_estimate: f64,
    /// e^{s·t·2‖ΔΩ‖∞} − 1.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DysonReport {
    pub points: Vec<DysonPoint>,
    /// ½‖(𝒮(1) − ℐ)ρ(0)‖₁.
    pub d_superop: f64,
    /// ½‖UρU† − U⁰ρU⁰†‖₁.
    pub d_direct: f64,
    pub d_residual: f64,
}

impl DysonReport {
    pub fn worst_slack(&self) -> f64 {
        self.points.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self) -> bool {
        self.worst_slack() >= -BOUND_TOL && self.d_residual <= DYSON_D_TOL
    }
}

/// 𝒮(s) = e^{−stL⁰}e^{stL} on the grid s = k/steps, k = 1..=steps, with
/// L = −i[Ω, ·] built from the principal-log generators of both schedules.
pub fn dyson_chain_check(sc: &Scenario, steps: usize, opts: &VerifyOptions) -> Result<DysonReport> {
    if steps == 0 {
        return Err(Error::InvalidArgument("dyson chain needs at least one grid point".into()));
    }
    let t = sc.duration();
    let u = propagator(&sc.h_actual)?;
    let u0 = propagator(&sc.h_ideal)?;
    let omega = effective_hamiltonian(&u, t)?.omega;
    let omega0 = effective_hamiltonian(&u0, t)?.omega;
    let certified = 2.0 * operator_norm(&(&omega - &omega0).hermitian_part());
    let l = commutator_generator(&omega)?;
    let l0 = commutator_generator(&omega0)?;
    let id = SuperOperator::identity(sc.rho0.rows());

    let mut points = Vec::with_capacity(steps);
    let mut s_one = None;
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let big_s = superop_exp(&l0, -s * t)?.compose(&superop_exp(&l, s * t)?)?;
        let diff = big_s.sub(&id)?;
        let lhs = ot_norm_lower(&diff, opts.ot_samples.max(1), opts.ot_iters, opts.seed)?.value;
        let rhs = (s * t * certified).exp_m1();
        points.push(DysonPoint { s, lhs_estimate: lhs, rhs, slack: rhs - lhs });
        if k == steps {
            s_one = Some(diff);
        }
    }
    let diff = s_one.expect("steps >= 1");
    let d_superop = 0.5 * trace_norm(&diff.apply(&sc.rho0)?);
    let d_direct = 0.5 * trace_norm(&(&evolve(&u, &sc.rho0) - &evolve(&u0, &sc.rho0)));
    Ok(DysonReport { points, d_superop, d_direct, d_residual: (d_superop - d_direct).abs() })
}

/// Shape of the random joint scenarios used by the fuzz campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub dims: SubsystemDims,
    /// Total time is drawn from [time_scale/2, time_scale].
    pub time_scale: f64,
    /// ‖H⁰‖∞ on every ideal segment.
    pub ideal_strength: f64,
    /// Upper limit of ‖V‖∞ on every perturbation segment.
    pub perturbation_strength: f64,
    /// Chance of a shared Haar-random pulse in both schedules.
    pub pulse_probability: f64,
}

impl ScenarioParams {
    pub fn new(dims: SubsystemDims) -> Self {
        Self { dims, time_scale: 1.0, ideal_strength: 1.0, perturbation_strength: 0.5, pulse_probability: 0.25 }
    }
}

fn normalized_gue<R: Rng + ?Sized>(rng: &mut R, n: usize, strength: f64) -> ComplexMatrix {
    let g = gue(rng, n);
    let nrm = operator_norm(&g);
    g.scale_real(strength / nrm)
}

/// Two-segment ideal schedule plus a two-segment perturbation on a
/// different grid, optionally with one shared pulse; ρ(0) = pure ⊗ I/d_B.
pub fn random_scenario(params: &ScenarioParams, seed: u64, stream: u64) -> Result<Scenario> {
    let mut rng = trial_rng(seed, stream);
    let dims = params.dims;
    let n = dims.joint();
    let t = params.time_scale * (0.5 + 0.5 * rng.random::<f64>());
    let split = t * rng.random_range(0.2..0.8);
    let first = normalized_gue(&mut rng, n, params.ideal_strength);
    let second = normalized_gue(&mut rng, n, params.ideal_strength);
    let mut segments = vec![Segment::Free { duration: split, h: first }];
    if rng.random::<f64>() < params.pulse_probability {
        segments.push(Segment::Pulse { u: haar_unitary(&mut rng, n) });
    }
    segments.push(Segment::Free { duration: t - split, h: second });
    let h_ideal = HamiltonianSchedule::new(segments)?;

    let vsplit = t * rng.random_range(0.1..0.9);
    let eps = params.perturbation_strength;
    let (e1, e2) = (eps * rng.random::<f64>(), eps * rng.random::<f64>());
    let v1 = normalized_gue(&mut rng, n, e1);
    let v2 = normalized_gue(&mut rng, n, e2);
    let v = HamiltonianSchedule::from_pieces(vec![(vsplit, v1), (t - vsplit, v2)])?;
    let h_actual = sum_schedules(&h_ideal, &v)?;

    let rho_s = random_pure_state(&mut rng, dims.ds);
    let rho0 = Scenario::product_with_mixed_bath(&rho_s, dims.db);
    Scenario::new(dims, h_actual, h_ideal, rho0, format!("random-{seed}-{stream}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;

    fn qubit_pair() -> SubsystemDims {
        SubsystemDims::new(2, 2).unwrap()
    }

    #[test]
    fn identical_schedules_pass_with_zero_distance() {
        let sc = random_scenario(&ScenarioParams::new(qubit_pair()), 1, 0).unwrap();
        let same = Scenario::new(sc.dims, sc.h_ideal.clone(), sc.h_ideal.clone(), sc.rho0.clone(), "same").unwrap();
        let r = verify_scenario(&same, &VerifyOptions::default()).unwrap();
        assert!(r.measured_d < 1e-14);
        assert_eq!(r.theorem2_bound, 0.0);
        assert!(r.passed(), "{r:?}");
        let d = dyson_chain_check(&same, 3, &VerifyOptions::default()).unwrap();
        assert!(d.points.iter().all(|p| p.lhs_estimate < 1e-12 && p.rhs == 0.0));
        assert!(d.holds());
    }

    // Memory setting: ideal I⊗H_B, actual adds σ_α⊗B_α with zero coupling.
    #[test]
    fn uncoupled_memory_has_zero_distance() {
        let hb = pauli::x().scale_real(0.7);
        let ideal = tensor(&ComplexMatrix::identity(2), &hb);
        let coupling = tensor(&pauli::z(), &ComplexMatrix::zeros(2, 2));
        let h0 = HamiltonianSchedule::constant(ideal.clone(), 1.3).unwrap();
        let h = HamiltonianSchedule::constant(&ideal + &coupling, 1.3).unwrap();
        let rho0 = Scenario::product_with_mixed_bath(&ComplexMatrix::diag_real(&[1.0, 0.0]), 2);
        let sc = Scenario::new(qubit_pair(), h, h0, rho0, "memory").unwrap();
        let r = verify_scenario(&sc, &VerifyOptions::default()).unwrap();
        assert!(r.measured_d < 1e-14);
        assert!(r.passed());
    }

    #[test]
    fn random_scenarios_respect_bounds() {
        let params = ScenarioParams::new(qubit_pair());
        for k in 0..40 {
            let sc = random_scenario(&params, 2, k).unwrap();
            let r = verify_scenario(&sc, &VerifyOptions::default()).unwrap();
            assert!(r.passed(), "{k}: {r:?}");
            assert!(r.measured_d <= r.measured_d_joint + 1e-12);
            let (est, cert) = r.theorem1_lhs_rhs;
            assert!(est.unwrap() <= cert + 1e-9);
            assert!(r.corollary3_bound >= cert - 1e-15);
        }
    }

    #[test]
    fn dyson_chain_on_random_scenarios() {
        let params = ScenarioParams::new(qubit_pair());
        let opts = VerifyOptions { ot_samples: 4, ot_iters: 30, seed: 3 };
        for k in 0..10 {
            let sc = random_scenario(&params, 3, k).unwrap();
            let d = dyson_chain_check(&sc, 4, &opts).unwrap();
            assert!(d.holds(), "{k}: {d:?}");
        }
    }

    // Commuting diagonal generators: 𝒮(1) is conjugation by e^{−itΔΩ}, whose
    // distance from the identity map is known in closed form.
    #[test]
    fn dyson_commuting_case() {
        let h0 = HamiltonianSchedule::constant(ComplexMatrix::diag_real(&[0.1, 0.4, -0.2, 0.3]), 1.0).unwrap();
        let h = HamiltonianSchedule::constant(ComplexMatrix::diag_real(&[0.3, 0.4, -0.2, 0.1]), 1.0).unwrap();
        let rho0 = Scenario::product_with_mixed_bath(&ComplexMatrix::from_real_rows(&[[0.5, 0.5], [0.5, 0.5]]), 2);
        let sc = Scenario::new(qubit_pair(), h, h0, rho0, "diag").unwrap();
        let d = dyson_chain_check(&sc, 1, &VerifyOptions { ot_samples: 16, ot_iters: 100, seed: 0 }).unwrap();
        // ΔΩ = diag(0.2, 0, 0, −0.2), so W = e^{−iΔΩ} has phase spread 0.4
        // and ‖W·W† − ·‖∞,1 = 2 sin(0.2), below e^{0.4} − 1.
        let p = d.points[0];
        assert!((p.rhs - 0.4f64.exp_m1()).abs() < 1e-12);
        assert!(p.lhs_estimate <= p.rhs);
        assert!((p.lhs_estimate - 2.0 * (0.2f64).sin()).abs() < 1e-6, "{}", p.lhs_estimate);
        assert!(d.d_residual < 1e-12);
    }

    #[test]
    fn scenario_validation() {
        let h = HamiltonianSchedule::constant(ComplexMatrix::zeros(4, 4), 1.0).unwrap();
        let short = HamiltonianSchedule::constant(ComplexMatrix::zeros(4, 4), 0.5).unwrap();
        let rho = Scenario::product_with_mixed_bath(&ComplexMatrix::diag_real(&[1.0, 0.0]), 2);
        assert!(Scenario::new(qubit_pair(), h.clone(), short, rho.clone(), "").is_err());
        assert!(Scenario::new(SubsystemDims { ds: 2, db: 3 }, h.clone(), h.clone(), rho.clone(), "").is_err());
        assert!(Scenario::new(qubit_pair(), h.clone(), h.clone(), rho.scale_real(2.0), "").is_err());
    }

    #[test]
    fn scenario_json_accepts_system_state() {
        let h = HamiltonianSchedule::constant(ComplexMatrix::zeros(4, 4), 1.0).unwrap();
        let json = serde_json::json!({
            "dims": {"ds": 2, "db": 2},
            "h_actual": h,
            "h_ideal": h,
            "rho_s": ComplexMatrix::diag_real(&[1.0, 0.0]),
        });
        let sc: Scenario = serde_json::from_value(json).unwrap();
        assert!((sc.rho0[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((sc.rho0[(1, 1)].re - 0.5).abs() < 1e-15);
    }
}
