//! CIFAR-10 binary batch parsing: 3073-byte records, one label byte followed
//! by 3072 bytes of channel-planar RGB for a 32×32 image.

use super::RawImage;
use crate::{Error, Result};

pub const RECORD_BYTES: usize = 3073;
const SIDE: usize = 32;

pub fn parse_cifar10(bytes: &[u8]) -> Result<Vec<(u8, RawImage)>> {
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::CifarRecordSize { len: bytes.len(), record: RECORD_BYTES });
    }
    let mut out = Vec::with_capacity(bytes.len() / RECORD_BYTES);
    for (i, record) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let label = record[0];
        if label > 9 {
            return Err(Error::DataFormat {
                offset: i * RECORD_BYTES,
                reason: format!("CIFAR-10 label byte {label} outside 0..=9"),
            });
        }
        out.push((label, RawImage::new(SIDE, SIDE, 3, record[1..].to_vec())?));
    }
    Ok(out)
}
