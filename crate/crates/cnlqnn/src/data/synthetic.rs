//! Hermetic synthetic dataset: class +1 images are bright in the top rows,
//! class -1 in the bottom rows, with everything else dark. The construction is
//! linearly separable at grid resolution, so simple models can reach high
//! accuracy without any real-image downloads.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetSplit, Sample};

/// Mean brightness of the class-defining rows.
pub const BRIGHT: f64 = 0.8;
/// Mean brightness everywhere else (background).
pub const DARK: f64 = 0.1;
/// Half-width of the uniform per-pixel noise.
pub const NOISE: f64 = 0.1;

fn sample_features(grid: usize, positive: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let top_rows = grid / 2; // rows 0..top_rows are "top"
    let bottom_start = grid - grid / 2; // rows bottom_start.. are "bottom"
    let mut features = Vec::with_capacity(grid * grid);
    for row in 0..grid {
        let bright_row = if positive { row < top_rows } else { row >= bottom_start };
        let base = if bright_row { BRIGHT } else { DARK };
        for _ in 0..grid {
            let v: f64 = base + rng.gen_range(-NOISE..=NOISE);
            features.push(v.clamp(0.0, 1.0));
        }
    }
    features
}

fn sample_block(grid: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    let mut samples: Vec<Sample> = (0..count)
        .map(|i| {
            let positive = i % 2 == 0;
            Sample {
                features: sample_features(grid, positive, rng),
                label: if positive { 1.0 } else { -1.0 },
                source_class: if positive { 1 } else { 0 },
            }
        })
        .collect();
    samples.shuffle(rng);
    samples
}

/// Generates a balanced split of bright-top (+1) vs bright-bottom (-1)
/// images at the requested grid resolution.
pub fn synthetic_dataset(grid: usize, n_train: usize, n_test: usize, rng: &mut ChaCha8Rng) -> DatasetSplit {
    DatasetSplit {
        train: sample_block(grid, n_train, rng),
        test: sample_block(grid, n_test, rng),
        grid,
        class_pair: (0, 1),
    }
}
