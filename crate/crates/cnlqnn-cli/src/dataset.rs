//! Dataset loading per experiment config: IDX pairs for MNIST/Fashion-MNIST,
//! CIFAR-10 binary batches, or the hermetic synthetic generator. Real
//! datasets pool their published train and test files and re-split to the
//! configured sizes, so arbitrary `n_train`/`n_test` work uniformly.

use std::path::{Path, PathBuf};

use cnlqnn::data::{
    make_split, parse_cifar10, parse_idx_images, parse_idx_labels, synthetic_dataset,
    to_grayscale, DatasetSplit, RawImage,
};
use cnlqnn::rng::{SeedFactory, Stream};

use crate::config::{DatasetKind, ExperimentConfig};
use crate::error::{CliError, Result};

const IDX_FILES: [(&str, &str); 2] = [
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
];

const CIFAR_FILES: [&str; 6] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
    "test_batch.bin",
];

/// Directory a dataset's files are expected in: `<data_dir>/<dataset>`.
pub fn dataset_dir(config: &ExperimentConfig) -> PathBuf {
    Path::new(&config.data_dir).join(config.dataset.name())
}

/// Whether every file the configured dataset needs is present (trivially
/// true for synthetic data).
pub fn dataset_available(config: &ExperimentConfig) -> bool {
    let dir = dataset_dir(config);
    match config.dataset {
        DatasetKind::Synthetic => true,
        DatasetKind::Mnist | DatasetKind::Fashion => IDX_FILES
            .iter()
            .all(|(im, lb)| dir.join(im).is_file() && dir.join(lb).is_file()),
        DatasetKind::Cifar10 => CIFAR_FILES.iter().all(|f| dir.join(f).is_file()),
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn load_idx_pool(dir: &Path) -> Result<(Vec<RawImage>, Vec<u8>)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (image_file, label_file) in IDX_FILES {
        let mut im = parse_idx_images(&read_file(&dir.join(image_file))?)
            .map_err(|e| CliError::data(format!("{image_file}: {e}")))?;
        let mut lb = parse_idx_labels(&read_file(&dir.join(label_file))?)
            .map_err(|e| CliError::data(format!("{label_file}: {e}")))?;
        if im.len() != lb.len() {
            return Err(CliError::data(format!(
                "{image_file} holds {} images but {label_file} holds {} labels",
                im.len(),
                lb.len()
            )));
        }
        images.append(&mut im);
        labels.append(&mut lb);
    }
    Ok((images, labels))
}

fn load_cifar_pool(dir: &Path) -> Result<(Vec<RawImage>, Vec<u8>)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for file in CIFAR_FILES {
        let records = parse_cifar10(&read_file(&dir.join(file))?)
            .map_err(|e| CliError::data(format!("{file}: {e}")))?;
        for (label, image) in records {
            let gray = to_grayscale(&image).map_err(|e| CliError::data(e.to_string()))?;
            images.push(gray);
            labels.push(label);
        }
    }
    Ok((images, labels))
}

/// Loads (or generates) the configured dataset. Real datasets shuffle with
/// the data-shuffle stream; synthetic data draws from its own stream — both
/// derived from the master seed, so the split is part of the experiment's
/// reproducible state.
pub fn load_dataset(config: &ExperimentConfig, seeds: &SeedFactory) -> Result<DatasetSplit> {
    match config.dataset {
        DatasetKind::Synthetic => {
            let mut rng = seeds.stream(Stream::Synthetic);
            Ok(synthetic_dataset(config.grid, config.n_train, config.n_test, &mut rng))
        }
        DatasetKind::Mnist | DatasetKind::Fashion | DatasetKind::Cifar10 => {
            let dir = dataset_dir(config);
            let (images, labels) = match config.dataset {
                DatasetKind::Cifar10 => load_cifar_pool(&dir)?,
                _ => load_idx_pool(&dir)?,
            };
            let mut rng = seeds.stream(Stream::DataShuffle);
            make_split(
                &images,
                &labels,
                config.class_pair,
                config.n_train,
                config.n_test,
                config.grid,
                &mut rng,
            )
            .map_err(|e| CliError::data(e.to_string()))
        }
    }
}
