//! MNIST IDX ingestion and train/validation splitting.
//!
//! IDX headers are big-endian: a magic number (`0x00000803` for 3-D image
//! files, `0x00000801` for label files), then one `u32` per dimension.
//! Files starting with the gzip signature `1f 8b` are decompressed first.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;

use crate::error::{HdcError, Result};
use crate::image::{Image, ImageId};
use crate::rng::seeded_rng;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Environment variable that overrides the MNIST data directory.
pub const DATA_DIR_ENV: &str = "HDCDIFF_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub images: Vec<Image>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, images: Vec<Image>) -> Self {
        Dataset {
            name: name.into(),
            images,
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self) -> Result<Vec<u8>> {
        crate::classifier::labels_of(&self.images)
    }

    /// Loads an IDX image/label pair. Image ids are `(name, file index)`.
    pub fn load_idx(name: &str, images_path: &Path, labels_path: &Path) -> Result<Self> {
        let image_bytes = read_maybe_gzip(images_path)?;
        let label_bytes = read_maybe_gzip(labels_path)?;
        Dataset::from_idx_bytes(name, &image_bytes, &label_bytes)
    }

    pub fn from_idx_bytes(name: &str, image_bytes: &[u8], label_bytes: &[u8]) -> Result<Self> {
        let images = parse_idx_images(image_bytes)?;
        let labels = parse_idx_labels(label_bytes)?;
        if images.count != labels.len() {
            return Err(HdcError::Format {
                field: "count",
                offset: 4,
                message: format!(
                    "image file holds {} items but label file holds {}",
                    images.count,
                    labels.len()
                ),
            });
        }
        if let Some((i, &bad)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
            return Err(HdcError::Format {
                field: "label",
                offset: 8 + i as u64,
                message: format!("label {bad} out of range 0..10"),
            });
        }
        let source: Arc<str> = Arc::from(name);
        let px = images.rows * images.cols;
        let images = images
            .data
            .chunks_exact(px)
            .zip(labels)
            .enumerate()
            .map(|(i, (pixels, label))| {
                Image::new(
                    ImageId::new(source.clone(), i as u32),
                    images.cols,
                    images.rows,
                    pixels.to_vec(),
                    Some(label),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::new(name, images))
    }

    /// Splits into `(train, validation)`. The validation part has
    /// `floor(fraction * len)` images: the tail of the file order when
    /// `shuffle_seed` is `None`, otherwise a seeded random subset. Both parts
    /// keep file order.
    pub fn split(&self, config: &SplitConfig) -> Result<(Dataset, Dataset)> {
        config.validate()?;
        let n = self.images.len();
        let n_val = (config.validation_fraction * n as f64).floor() as usize;
        let n_train = n - n_val;
        let (train, validation) = match config.shuffle_seed {
            None => (
                self.images[..n_train].to_vec(),
                self.images[n_train..].to_vec(),
            ),
            Some(seed) => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut seeded_rng(seed));
                let mut train_idx = order[..n_train].to_vec();
                let mut val_idx = order[n_train..].to_vec();
                train_idx.sort_unstable();
                val_idx.sort_unstable();
                (
                    train_idx.iter().map(|&i| self.images[i].clone()).collect(),
                    val_idx.iter().map(|&i| self.images[i].clone()).collect(),
                )
            }
        };
        Ok((
            Dataset::new(format!("{}/train", self.name), train),
            Dataset::new(format!("{}/validation", self.name), validation),
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitConfig {
    pub validation_fraction: f64,
    pub shuffle_seed: Option<u64>,
}

impl SplitConfig {
    pub fn new(validation_fraction: f64, shuffle_seed: Option<u64>) -> Result<Self> {
        let config = SplitConfig {
            validation_fraction,
            shuffle_seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(HdcError::domain(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

fn read_u32_be(bytes: &[u8], offset: usize, field: &'static str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| HdcError::Format {
            field,
            offset: offset as u64,
            message: format!("truncated header: file has {} bytes", bytes.len()),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = read_u32_be(bytes, 0, "magic")?;
    if magic != expected {
        return Err(HdcError::Format {
            field: "magic",
            offset: 0,
            message: format!("unexpected magic {magic} (0x{magic:08x}), expected {expected}"),
        });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32_be(bytes, 4, "count")? as usize;
    let rows = read_u32_be(bytes, 8, "rows")? as usize;
    let cols = read_u32_be(bytes, 12, "cols")? as usize;
    if rows == 0 || cols == 0 {
        return Err(HdcError::Format {
            field: "rows",
            offset: 8,
            message: format!("empty image geometry {rows}x{cols}"),
        });
    }
    let expected = count
        .checked_mul(rows * cols)
        .ok_or_else(|| HdcError::Format {
            field: "count",
            offset: 4,
            message: "image count overflows".into(),
        })?;
    let body = &bytes[16..];
    if body.len() != expected {
        return Err(HdcError::Format {
            field: "pixels",
            offset: (16 + body.len().min(expected)) as u64,
            message: format!(
                "expected {expected} pixel bytes for {count} images, found {}",
                body.len()
            ),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        data: body.to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32_be(bytes, 4, "count")? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(HdcError::Format {
            field: "labels",
            offset: (8 + body.len().min(count)) as u64,
            message: format!("expected {count} label bytes, found {}", body.len()),
        });
    }
    Ok(body.to_vec())
}

pub fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| HdcError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| HdcError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Finds `<stem>` or `<stem>.gz` inside `dir`.
fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    [stem.to_string(), format!("{stem}.gz")]
        .iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            HdcError::io(
                dir.join(stem),
                std::io::Error::new(std::io::ErrorKind::NotFound, "MNIST file not found"),
            )
        })
}

/// The standard MNIST file pair for `"train"` or `"t10k"`.
pub fn load_mnist_part(dir: &Path, part: &str, name: &str) -> Result<Dataset> {
    let images = locate(dir, &format!("{part}-images-idx3-ubyte"))?;
    let labels = locate(dir, &format!("{part}-labels-idx1-ubyte"))?;
    Dataset::load_idx(name, &images, &labels)
}

/// Loads `(train, test)` from a directory holding the four MNIST files.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    Ok((
        load_mnist_part(dir, "train", "train")?,
        load_mnist_part(dir, "t10k", "test")?,
    ))
}

/// `$HDCDIFF_DATA_DIR` if set, else `fallback`.
pub fn data_dir(fallback: &Path) -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| fallback.to_path_buf())
}
