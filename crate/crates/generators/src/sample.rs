use mwcov_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{GenError, Result};
use crate::truth::GroundTruth;

/// White forcing for replicate `r`: an independent ChaCha stream of the
/// seeded generator, so replicates can be drawn in any order.
pub fn forcing(len: usize, sigma_w: f64, seed: u64, r: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    (0..len).map(|_| sigma_w * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Draws `n` independent realizations of `L vec(U) = vec(W)`,
/// `vec(W) ~ N(0, σ_w² I)`, shaped to the spec's tensor dims.
pub fn sample_process(gt: &GroundTruth, n: usize, sigma_w: f64, seed: u64) -> Result<Vec<Tensor>> {
    if !(sigma_w >= 0.0 && sigma_w.is_finite()) {
        return Err(GenError::InvalidSpec(format!("sigma_w = {sigma_w} must be non-negative")));
    }
    let dims = gt.tensor_dims();
    (0..n as u64)
        .map(|r| {
            let w = forcing(gt.side(), sigma_w, seed, r);
            let u = if sigma_w == 0.0 { vec![0.0; w.len()] } else { gt.solve(&w)? };
            Ok(Tensor::new(dims.clone(), u)?)
        })
        .collect()
}
