//! Seeded randomness and weight initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// The one RNG used everywhere; ChaCha so streams replay exactly across
/// platforms and runs.
pub type SeededRng = ChaCha8Rng;

pub trait SeedExt {
    fn seed(seed: u64) -> SeededRng;
}

impl SeedExt for SeededRng {
    fn seed(seed: u64) -> SeededRng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}

/// Kaiming-uniform fan-in initialization: U(-b, b) with b = sqrt(6 / fan_in).
///
/// For a unit inside a stacked layer, `fan_in` is the unit's own receptive
/// width (d²·c_in'), not the full layer width.
pub fn kaiming_uniform(shape: &[usize], fan_in: usize, rng: &mut SeededRng) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape/data length agree by construction")
}
