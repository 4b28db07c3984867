//! Seeded random instances.
//!
//! All randomness flows from ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded
//! with `seed_from_u64(seed)`. Independent trials use distinct ChaCha
//! streams of the same key via `set_stream(stream)`, so trial `k` of a
//! campaign is reproducible in isolation from `(seed, stream)` alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{c64, ComplexMatrix, C64};

/// Generator identity recorded in campaign reports.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha 0.9, seed_from_u64 + set_stream)";

/// RNG for stream `stream` under `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    HaarUnitary,
    GueHermitian,
    RandomDensity,
    Ginibre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomInstanceSpec {
    pub seed: u64,
    pub kind: InstanceKind,
    pub dim: usize,
    /// Multiplies Hermitian (and Ginibre) draws.
    pub scale: f64,
}

impl RandomInstanceSpec {
    pub fn new(seed: u64, kind: InstanceKind, dim: usize) -> Self {
        Self { seed, kind, dim, scale: 1.0 }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }
}

/// Deterministic draw described by `spec`.
pub fn random_instance(spec: &RandomInstanceSpec) -> ComplexMatrix {
    let mut rng = trial_rng(spec.seed, 0);
    match spec.kind {
        InstanceKind::HaarUnitary => haar_unitary(&mut rng, spec.dim),
        InstanceKind::GueHermitian => gue(&mut rng, spec.dim).scale_real(spec.scale),
        InstanceKind::RandomDensity => random_density(&mut rng, spec.dim),
        InstanceKind::Ginibre => ginibre(&mut rng, spec.dim).scale_real(spec.scale),
    }
}

/// Standard complex normal entry, E|z|² = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let entries: Vec<C64> = (0..n * n).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_row_major(n, n, entries).expect("finite normal draws")
}

/// (G + G†)/2.
pub fn gue<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ginibre(rng, n).hermitian_part()
}

/// Haar unitary: QR of a Ginibre matrix with the phases of diag(R)
/// moved into Q.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n).into_inner();
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_inner(q)
}

/// G G† / Tr(G G†).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ginibre(rng, n);
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    w.scale_real(1.0 / tr).hermitian_part()
}

/// Uniformly random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| complex_normal(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// |ψ⟩⟨ψ| for a uniformly random unit ψ.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let psi = unit_vector(rng, n);
    ComplexMatrix::outer(&psi, &psi)
}
