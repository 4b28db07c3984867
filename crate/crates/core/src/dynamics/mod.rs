//! Piecewise-constant time dependence with zero-width pulses.
//!
//! A [`HamiltonianSchedule`] is the only time-dependence model: a sequence
//! of free intervals with constant Hermitian generators and instantaneous
//! unitary pulses. Propagators are exact products of per-segment unitaries.

mod interaction;
mod magnus;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_skew_hermitian, tensor, ComplexMatrix};

pub use interaction::{
    corollary2_check, interaction_picture, Corollary2Report, InteractionPicture, SchrodingerVariant, COROLLARY2_TOL,
};
pub use magnus::{
    effective_hamiltonian, magnus_convergence_ok, magnus_term1, magnus_term12, magnus_term2, toggling_frame,
    EffectiveHamiltonianResult, MagnusGate, OmegaMethod, TogglingFrame,
};

/// Relative tolerance when comparing total durations of two schedules.
const DURATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Segment {
    Free { duration: f64, h: ComplexMatrix },
    Pulse { u: ComplexMatrix },
}

impl Segment {
    fn dim(&self) -> usize {
        match self {
            Segment::Free { h, .. } => h.rows(),
            Segment::Pulse { u } => u.rows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct HamiltonianSchedule {
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    segments: Vec<Segment>,
}

impl TryFrom<RawSchedule> for HamiltonianSchedule {
    type Error = Error;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        HamiltonianSchedule::new(raw.segments)
    }
}

impl From<HamiltonianSchedule> for RawSchedule {
    fn from(s: HamiltonianSchedule) -> Self {
        RawSchedule { segments: s.segments }
    }
}

impl HamiltonianSchedule {
    /// Validates segment shapes, Hermiticity, unitarity and durations.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidArgument("schedule has no segments".into()));
        };
        let d = first.dim();
        if !segments.iter().any(|s| matches!(s, Segment::Free { .. })) {
            return Err(Error::InvalidArgument("schedule needs at least one free interval".into()));
        }
        for (k, seg) in segments.iter().enumerate() {
            match seg {
                Segment::Free { duration, h } => {
                    if !(duration.is_finite() && *duration > 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "segment {k}: duration must be positive, got {duration}"
                        )));
                    }
                    if !h.is_square() || h.rows() != d {
                        return Err(Error::DimensionMismatch(format!("segment {k}: expected {d}x{d} Hamiltonian")));
                    }
                    h.ensure_hermitian()?;
                }
                Segment::Pulse { u } => {
                    if !u.is_square() || u.rows() != d {
                        return Err(Error::DimensionMismatch(format!("segment {k}: expected {d}x{d} pulse")));
                    }
                    u.ensure_unitary()?;
                }
            }
        }
        Ok(Self { segments })
    }

    /// Single free interval.
    pub fn constant(h: ComplexMatrix, duration: f64) -> Result<Self> {
        Self::new(vec![Segment::Free { duration, h }])
    }

    /// Free intervals `(duration, H)` in time order.
    pub fn from_pieces(pieces: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        Self::new(pieces.into_iter().map(|(duration, h)| Segment::Free { duration, h }).collect())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn total_duration(&self) -> f64 {
        self.free_segments().map(|(d, _)| d).sum()
    }

    pub fn has_pulses(&self) -> bool {
        self.segments.iter().any(|s| matches!(s, Segment::Pulse { .. }))
    }

    /// Free intervals in order, skipping pulses.
    pub fn free_segments(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Free { duration, h } => Some((*duration, h)),
            Segment::Pulse { .. } => None,
        })
    }

    /// Schedule `self` followed by `later`.
    pub fn then(&self, later: &HamiltonianSchedule) -> Result<Self> {
        if later.dim() != self.dim() {
            return Err(Error::DimensionMismatch("concatenating schedules of different dimension".into()));
        }
        let mut segments = self.segments.clone();
        segments.extend(later.segments.iter().cloned());
        Ok(Self { segments })
    }

    /// Embeds every generator and pulse as `A ⊗ B`-style products with the
    /// given factor on the right (`right = true`) or left.
    pub fn tensor_identity(&self, other_dim: usize, right: bool) -> Self {
        let id = ComplexMatrix::identity(other_dim);
        let embed = |m: &ComplexMatrix| if right { tensor(m, &id) } else { tensor(&id, m) };
        let segments = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Free { duration, h } => Segment::Free { duration: *duration, h: embed(h) },
                Segment::Pulse { u } => Segment::Pulse { u: embed(u) },
            })
            .collect();
        Self { segments }
    }

    /// Adds a constant Hermitian term to every free interval.
    pub fn plus_constant(&self, extra: &ComplexMatrix) -> Result<Self> {
        if extra.rows() != self.dim() || !extra.is_square() {
            return Err(Error::DimensionMismatch("constant term has wrong dimension".into()));
        }
        extra.ensure_hermitian()?;
        let segments = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Free { duration, h } => Segment::Free { duration: *duration, h: h + extra },
                p => p.clone(),
            })
            .collect();
        Ok(Self { segments })
    }

    /// Generator active at time `s`, using half-open intervals [a, b); the
    /// final instant belongs to the last interval.
    pub fn hamiltonian_at(&self, s: f64) -> &ComplexMatrix {
        let mut start = 0.0;
        let mut last = None;
        for (d, h) in self.free_segments() {
            if s < start + d {
                return h;
            }
            start += d;
            last = Some(h);
        }
        last.expect("schedule has a free segment")
    }

    /// Propagator from 0 to `s`, including every pulse positioned at or
    /// before `s`.
    pub fn propagator_until(&self, s: f64) -> Result<ComplexMatrix> {
        let mut u = ComplexMatrix::identity(self.dim());
        let mut clock = 0.0;
        for seg in &self.segments {
            match seg {
                Segment::Free { duration, h } => {
                    if clock >= s {
                        break;
                    }
                    let dt = duration.min(s - clock);
                    u = &expm_skew_hermitian(h, dt)? * &u;
                    clock += duration;
                }
                Segment::Pulse { u: p } => {
                    if clock > s {
                        break;
                    }
                    u = p * &u;
                }
            }
        }
        Ok(u)
    }
}

/// Ordered product of per-segment unitaries, latest on the left.
pub fn propagator(sched: &HamiltonianSchedule) -> Result<ComplexMatrix> {
    let mut u = ComplexMatrix::identity(sched.dim());
    for seg in sched.segments() {
        let step = match seg {
            Segment::Free { duration, h } => expm_skew_hermitian(h, *duration)?,
            Segment::Pulse { u } => u.clone(),
        };
        u = &step * &u;
    }
    Ok(u)
}

/// H₀(t) + V(t) on the common refinement of both time grids. `v` must be
/// pulse-free; pulses of `h0` are kept at their positions.
pub fn sum_schedules(h0: &HamiltonianSchedule, v: &HamiltonianSchedule) -> Result<HamiltonianSchedule> {
    check_compatible(h0, v)?;
    let v_edges: Vec<f64> = v
        .free_segments()
        .scan(0.0, |acc, (d, _)| {
            *acc += d;
            Some(*acc)
        })
        .collect();
    let mut segments = Vec::new();
    let mut clock = 0.0;
    for seg in h0.segments() {
        match seg {
            Segment::Free { duration, h } => {
                let end = clock + duration;
                let mut cuts: Vec<f64> = v_edges.iter().copied().filter(|&e| e > clock && e < end).collect();
                cuts.push(end);
                let mut a = clock;
                for b in cuts {
                    // slivers from floating-point edge mismatch carry no time
                    if b - a <= DURATION_TOL * end.max(1.0) {
                        continue;
                    }
                    let mid = 0.5 * (a + b);
                    segments.push(Segment::Free { duration: b - a, h: h + v.hamiltonian_at(mid) });
                    a = b;
                }
                clock = end;
            }
            Segment::Pulse { .. } => segments.push(seg.clone()),
        }
    }
    HamiltonianSchedule::new(segments)
}

/// H(t) − H₀(t) on the common refinement; both must be pulse-free.
pub fn difference_schedule(h: &HamiltonianSchedule, h0: &HamiltonianSchedule) -> Result<HamiltonianSchedule> {
    if h.has_pulses() || h0.has_pulses() {
        return Err(Error::PulsesPresent);
    }
    let neg = HamiltonianSchedule::from_pieces(h0.free_segments().map(|(d, m)| (d, m.scale_real(-1.0))).collect())?;
    sum_schedules(h, &neg)
}

/// True when both schedules span the same total time.
pub fn durations_match(a: &HamiltonianSchedule, b: &HamiltonianSchedule) -> bool {
    let (x, y) = (a.total_duration(), b.total_duration());
    (x - y).abs() <= DURATION_TOL * x.max(y).max(1.0)
}

pub(crate) fn check_compatible(h0: &HamiltonianSchedule, v: &HamiltonianSchedule) -> Result<()> {
    if h0.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!("schedules act on dimensions {} and {}", h0.dim(), v.dim())));
    }
    if v.has_pulses() {
        return Err(Error::IncompatibleSchedules("the perturbation schedule may not contain pulses".into()));
    }
    if !durations_match(h0, v) {
        let (a, b) = (h0.total_duration(), v.total_duration());
        return Err(Error::IncompatibleSchedules(format!("total durations differ: {a} vs {b}")));
    }
    Ok(())
}

/// Average of ‖H(s)‖ over the schedule, (1/t)∫‖H(s)‖ds, for any norm
/// function. Pulses are ignored.
pub fn time_average_norm(sched: &HamiltonianSchedule, norm: impl Fn(&ComplexMatrix) -> f64) -> f64 {
    let t = sched.total_duration();
    sched.free_segments().map(|(d, h)| d * norm(h)).sum::<f64>() / t
}

/// sup over s of ‖H(s)‖. Pulses are ignored.
pub fn sup_norm(sched: &HamiltonianSchedule, norm: impl Fn(&ComplexMatrix) -> f64) -> f64 {
    sched.free_segments().map(|(_, h)| norm(h)).fold(0.0, f64::max)
}
