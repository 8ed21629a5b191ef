//! The IDX binary format used by the MNIST distribution files.
//!
//! All integers are big-endian. An image file starts with magic `0x00000803`
//! followed by `count`, `rows`, `cols` and then `count * rows * cols` unsigned
//! bytes. A label file starts with magic `0x00000801`, then `count`, then one
//! byte per label.

use alloc::format;
use alloc::vec::Vec;

use super::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Decoded contents of an IDX image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    match bytes.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => {
            Err(Error::Parse { offset: bytes.len(), msg: format!("truncated header: need 4 bytes at offset {offset}") })
        }
    }
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::Parse {
            offset: 0,
            msg: format!("bad magic number {magic:#010x}, expected {expected:#010x}"),
        });
    }
    Ok(())
}

fn payload(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    let end =
        start.checked_add(len).ok_or_else(|| Error::Parse { offset: start, msg: "payload size overflows".into() })?;
    if bytes.len() < end {
        return Err(Error::Parse {
            offset: bytes.len(),
            msg: format!("truncated payload: expected {len} bytes from offset {start}"),
        });
    }
    if bytes.len() > end {
        return Err(Error::Parse { offset: end, msg: format!("{} trailing bytes after payload", bytes.len() - end) });
    }
    Ok(&bytes[start..end])
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let size = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| Error::Parse { offset: 4, msg: "image dimensions overflow".into() })?;
    let pixels = payload(bytes, 16, size)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    Ok(payload(bytes, 8, count)?.to_vec())
}

/// Builds a classification dataset with pixels scaled to `[0, 1]`.
pub fn dataset_from_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let img = parse_images(images)?;
    let lab = parse_labels(labels)?;
    if img.count != lab.len() {
        return Err(Error::Parse {
            offset: 4,
            msg: format!("image count {} does not match label count {}", img.count, lab.len()),
        });
    }
    if let Some(pos) = lab.iter().position(|&l| l > 9) {
        return Err(Error::Parse { offset: 8 + pos, msg: format!("label {} out of range 0..9", lab[pos]) });
    }
    let n_features = img.rows * img.cols;
    let data = img.pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let features = DenseMatrix::from_vec_unchecked(img.count, n_features, data);
    let labels = lab.into_iter().map(usize::from).collect();
    Dataset::new(features, Targets::Classes { labels, n_classes: 10 })
}

pub fn encode_images(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let count = pixels.len().checked_div(rows * cols).unwrap_or(0);
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    for v in [count, rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
