//! Seeded random sampling.
//!
//! All randomness goes through ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! with `seed_from_u64`, so a seed fixes every sample across platforms.
//! Normals come from `rand_distr::StandardNormal` and uniforms from
//! `rand`'s `random_range`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::quat::Quaternion;

pub type QRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> QRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Each component i.i.d. uniform on `[lo, hi]`.
pub fn uniform_quaternion<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Quaternion {
    Quaternion::new(
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
    )
}

/// Uniform on the unit 3-sphere: four standard normals, normalized.
pub fn unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    loop {
        let q = Quaternion::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = q.norm();
        if n > 1e-12 {
            return q.scale(1.0 / n);
        }
    }
}

/// Uniform on `[-1, 1]^4`, rejecting draws whose imaginary part has norm
/// below `min_imag`.
pub fn non_real_quaternion<R: Rng + ?Sized>(rng: &mut R, min_imag: f64) -> Quaternion {
    loop {
        let q = uniform_quaternion(rng, -1.0, 1.0);
        if q.imag().norm() >= min_imag {
            return q;
        }
    }
}
