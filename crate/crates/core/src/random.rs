//! Seeded generators for test corpora.
//!
//! Every generator takes an explicit seed; sub-streams for parallel trials
//! are derived from `(seed, index)` so results do not depend on scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::tensor::{symmetrize, DenseTensor, Shape};

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Tensor with i.i.d. standard normal entries.
pub fn gaussian_tensor_with<R: Rng + ?Sized>(rng: &mut R, shape: &Shape) -> DenseTensor {
    let data = (0..shape.numel())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    DenseTensor::from_raw(shape.clone(), data)
}

pub fn gaussian_tensor(shape: &Shape, seed: u64) -> DenseTensor {
    gaussian_tensor_with(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

/// Symmetrized Gaussian cubic tensor.
pub fn random_symmetric(n: usize, order: usize, seed: u64) -> Result<DenseTensor> {
    symmetrize(&gaussian_tensor(&Shape::cubic(n, order)?, seed))
}

pub fn random_symmetric_with<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    order: usize,
) -> Result<DenseTensor> {
    symmetrize(&gaussian_tensor_with(rng, &Shape::cubic(n, order)?))
}
