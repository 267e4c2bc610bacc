//! Dataset ingestion and preprocessing.
//!
//! Real images arrive as IDX (MNIST/FashionMNIST) or CIFAR-10 binary files,
//! get converted to grayscale where needed, and are downsampled to a
//! `grid × grid` block-mean representation in `[0,1]` whose flattened length
//! equals the model's qubit count. A synthetic generator provides hermetic
//! data with the same shape.

mod cifar;
mod idx;
mod synthetic;

pub use cifar::{parse_cifar10, RECORD_BYTES};
pub use idx::{parse_idx, parse_idx_images, parse_idx_labels, serialize_idx_images, serialize_idx_labels, IdxContent};
pub use synthetic::{synthetic_dataset, BRIGHT, DARK, NOISE};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A raw image: `pixels.len() = width·height·channels`, row-major, and
/// channel-planar when `channels = 3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || !(channels == 1 || channels == 3) {
            return Err(Error::DataFormat {
                offset: 0,
                reason: format!("bad image shape {width}x{height}x{channels}"),
            });
        }
        if pixels.len() != width * height * channels {
            return Err(Error::DataFormat {
                offset: 0,
                reason: format!(
                    "pixel buffer length {} does not match {width}x{height}x{channels}",
                    pixels.len()
                ),
            });
        }
        Ok(Self { width, height, channels, pixels })
    }
}

/// One preprocessed sample: features in `[0,1]^{grid²}`, label ±1, and the
/// original dataset class the sample came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: f64,
    pub source_class: u8,
}

/// Train/test partitions sharing one grid and class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub grid: usize,
    pub class_pair: (u8, u8),
}

/// Rec. 601 luma conversion of an RGB image.
pub fn to_grayscale(img: &RawImage) -> Result<RawImage> {
    if img.channels != 3 {
        return Err(Error::NotRgb { channels: img.channels });
    }
    let plane = img.width * img.height;
    let pixels = (0..plane)
        .map(|i| {
            let r = img.pixels[i] as f64;
            let g = img.pixels[plane + i] as f64;
            let b = img.pixels[2 * plane + i] as f64;
            (0.299 * r + 0.587 * g + 0.114 * b).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    RawImage::new(img.width, img.height, 1, pixels)
}

/// Center-crops a square grayscale image to the largest multiple of `grid`
/// (dropping trailing rows/columns first, then leading) and returns the
/// row-major `grid × grid` block means divided by 255.
pub fn downsample(img: &RawImage, grid: usize) -> Result<Vec<f64>> {
    if img.channels != 1 {
        return Err(Error::NotRgb { channels: img.channels });
    }
    if img.width != img.height {
        return Err(Error::NotSquare { width: img.width, height: img.height });
    }
    let side = img.width;
    if side < grid {
        return Err(Error::ImageTooSmall { rows: img.height, cols: img.width, grid });
    }
    let cropped = (side / grid) * grid;
    let excess = side - cropped;
    let lead = excess / 2; // trailing side absorbs the odd row/column
    let block = cropped / grid;
    let mut features = Vec::with_capacity(grid * grid);
    for br in 0..grid {
        for bc in 0..grid {
            let mut acc = 0.0;
            for r in 0..block {
                for c in 0..block {
                    let row = lead + br * block + r;
                    let col = lead + bc * block + c;
                    acc += img.pixels[row * side + col] as f64;
                }
            }
            features.push(acc / (block * block) as f64 / 255.0);
        }
    }
    Ok(features)
}

/// Filters to `class_pair`, downsamples, maps `c0 → -1` and `c1 → +1`,
/// shuffles, and deals `n_train` then `n_test` samples. Both classes are
/// guaranteed present in each split.
pub fn make_split(
    images: &[RawImage],
    labels: &[u8],
    class_pair: (u8, u8),
    n_train: usize,
    n_test: usize,
    grid: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DatasetSplit> {
    if images.len() != labels.len() {
        return Err(Error::DataFormat {
            offset: 0,
            reason: format!("{} images but {} labels", images.len(), labels.len()),
        });
    }
    let (c0, c1) = class_pair;
    let mut selected: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == c0 || labels[i] == c1)
        .collect();
    let needed = n_train + n_test;
    let count_c0 = selected.iter().filter(|&&i| labels[i] == c0).count();
    let count_c1 = selected.len() - count_c0;
    for (class, available) in [(c0, count_c0), (c1, count_c1)] {
        if available == 0 {
            return Err(Error::InsufficientClass { class, available, needed: 1 });
        }
    }
    if selected.len() < needed {
        // Attribute the shortfall to the minority class by name.
        let (class, available) = if count_c0 <= count_c1 { (c0, count_c0) } else { (c1, count_c1) };
        return Err(Error::InsufficientClass {
            class,
            available,
            needed: needed - (selected.len() - available),
        });
    }
    selected.shuffle(rng);
    selected.truncate(needed);

    let mut samples = Vec::with_capacity(needed);
    for &i in &selected {
        samples.push(Sample {
            features: downsample(&images[i], grid)?,
            label: if labels[i] == c1 { 1.0 } else { -1.0 },
            source_class: labels[i],
        });
    }
    let mut test = samples.split_off(n_train);
    let mut train = samples;

    // Postcondition repair: if an unlucky shuffle left a split single-class,
    // swap in the first sample of the missing class from the other split.
    for (a, b) in [(0, 1), (1, 0)] {
        let (first, second) = if a == 0 {
            (&mut train, &mut test)
        } else {
            (&mut test, &mut train)
        };
        let _ = b;
        if first.is_empty() || second.is_empty() {
            continue;
        }
        for sign in [-1.0, 1.0] {
            if !first.iter().any(|s| s.label == sign) {
                if let Some(j) = second.iter().position(|s| s.label == sign) {
                    if let Some(k) = first.iter().position(|s| s.label == -sign) {
                        std::mem::swap(&mut first[k], &mut second[j]);
                    }
                }
            }
        }
    }

    Ok(DatasetSplit { train, test, grid, class_pair })
}
