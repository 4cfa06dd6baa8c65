use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::profile::{build_variance_profile, VarianceProfile};
use super::spec::EnsembleSpec;
use crate::{CMat, Result, ZERO};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN_GAMMA);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-trial seed: `splitmix64(master ^ splitmix64(trial))`.
///
/// Any single trial can be replayed from the master seed alone.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

fn chacha_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    key
}

#[derive(Debug, Clone)]
pub struct SampledMatrix {
    pub values: CMat,
    pub spec: EnsembleSpec,
    pub seed: u64,
    pub trial: u64,
}

impl SampledMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

/// Draw x_ij = b_ij·ξ_ij.
///
/// The generator is ChaCha8 keyed by `trial_seed(seed, trial)`, with one
/// independent stream per row; within a row, draws are made for the support
/// positions in increasing column order. Off-support entries are exactly 0.
pub fn sample_matrix(spec: &EnsembleSpec, seed: u64, trial: u64) -> Result<SampledMatrix> {
    let profile = build_variance_profile(spec)?;
    Ok(sample_with_profile(spec, &profile, seed, trial))
}

/// Like [`sample_matrix`] with a prebuilt profile, for batch loops.
pub fn sample_with_profile(spec: &EnsembleSpec, profile: &VarianceProfile, seed: u64, trial: u64) -> SampledMatrix {
    let n = profile.n();
    let key = chacha_key(trial_seed(seed, trial));
    let mut values = CMat::zeros(n, n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(i as u64);
        for (j, &b) in profile.row(i).iter().enumerate() {
            if b != 0.0 {
                values[(i, j)] = spec.atom.draw(&mut rng) * b;
            } else {
                values[(i, j)] = ZERO;
            }
        }
    }
    SampledMatrix {
        values,
        spec: spec.clone(),
        seed,
        trial,
    }
}
