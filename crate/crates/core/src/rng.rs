//! Seeded Gaussian draws.
//!
//! All randomness goes through [`GaussianSampler`] so that a seed means the
//! same parameter vector in any implementation:
//!
//! * uniform bits come from ChaCha20 (`rand_chacha::ChaCha20Rng`), keyed with
//!   `SeedableRng::seed_from_u64(seed)`;
//! * each 64-bit word `w` becomes a uniform `(w >> 11) · 2⁻⁵³ ∈ [0, 1)`;
//! * normals use the basic Box–Muller transform on consecutive uniforms
//!   `(u1, u2)`, with `r = sqrt(−2 ln(1 − u1))`. The pair yields
//!   `r cos(2π u2)` first and `r sin(2π u2)` second.

use std::f64::consts::TAU;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Debug)]
pub struct GaussianSampler {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// `len` independent draws from `N(0, sigma²)`.
    pub fn normal_vec(&mut self, len: usize, sigma: f64) -> Vec<f64> {
        (0..len).map(|_| sigma * self.standard_normal()).collect()
    }
}
