//! IDX container parsing (the MNIST/FashionMNIST on-disk format).
//!
//! Big-endian magic 0x00000803 introduces an image tensor (count, rows, cols),
//! 0x00000801 a label vector (count). The payload must match the header
//! exactly; surplus or missing bytes are format errors.

use byteorder::{BigEndian, ByteOrder};

use super::RawImage;
use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxContent {
    Images(Vec<RawImage>),
    Labels(Vec<u8>),
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    if bytes.len() < offset + 4 {
        return Err(Error::IdxLength { expected: offset + 4, actual: bytes.len() });
    }
    Ok(BigEndian::read_u32(&bytes[offset..offset + 4]))
}

/// Parses a complete IDX byte stream.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxContent> {
    let magic = read_u32(bytes, 0)?;
    match magic {
        IMAGE_MAGIC => {
            let count = read_u32(bytes, 4)? as usize;
            let rows = read_u32(bytes, 8)? as usize;
            let cols = read_u32(bytes, 12)? as usize;
            let expected = 16 + count * rows * cols;
            if bytes.len() != expected {
                return Err(Error::IdxLength { expected, actual: bytes.len() });
            }
            let mut images = Vec::with_capacity(count);
            for i in 0..count {
                let start = 16 + i * rows * cols;
                images.push(RawImage::new(
                    cols,
                    rows,
                    1,
                    bytes[start..start + rows * cols].to_vec(),
                )?);
            }
            Ok(IdxContent::Images(images))
        }
        LABEL_MAGIC => {
            let count = read_u32(bytes, 4)? as usize;
            let expected = 8 + count;
            if bytes.len() != expected {
                return Err(Error::IdxLength { expected, actual: bytes.len() });
            }
            Ok(IdxContent::Labels(bytes[8..].to_vec()))
        }
        other => Err(Error::DataFormat {
            offset: 0,
            reason: format!("unrecognized IDX magic 0x{other:08x}"),
        }),
    }
}

/// Parses bytes that must contain images.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<RawImage>> {
    match parse_idx(bytes)? {
        IdxContent::Images(images) => Ok(images),
        IdxContent::Labels(_) => Err(Error::DataFormat {
            offset: 0,
            reason: "expected image magic 0x00000803, found label data".into(),
        }),
    }
}

/// Parses bytes that must contain labels.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    match parse_idx(bytes)? {
        IdxContent::Labels(labels) => Ok(labels),
        IdxContent::Images(_) => Err(Error::DataFormat {
            offset: 0,
            reason: "expected label magic 0x00000801, found image data".into(),
        }),
    }
}

/// Serializes images back to IDX bytes (all images must share dimensions).
/// Used by round-trip tests and the fixture generator.
pub fn serialize_idx_images(images: &[RawImage]) -> Vec<u8> {
    let (rows, cols) = images
        .first()
        .map(|i| (i.height, i.width))
        .unwrap_or((0, 0));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!((img.height, img.width, img.channels), (rows, cols, 1));
        out.extend_from_slice(&img.pixels);
    }
    out
}

pub fn serialize_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
