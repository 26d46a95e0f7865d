//! IDX (MNIST) file format.
//!
//! Big-endian magic (`0x00000803` images, `0x00000801` labels), one
//! big-endian `u32` per dimension, then raw unsigned bytes. Files ending in
//! `.gz` are decompressed transparently.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::Dataset;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn idx_error(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_error(path, bytes.len() as u64, "truncated header"))
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let magic = read_u32(bytes, 0, path)?;
    if magic != expected {
        return Err(idx_error(
            path,
            0,
            format!("wrong magic 0x{magic:08x}, expected 0x{expected:08x}"),
        ));
    }
    Ok(())
}

fn payload<'a>(bytes: &'a [u8], start: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    bytes.get(start..start + len).ok_or_else(|| {
        idx_error(
            path,
            bytes.len() as u64,
            format!("truncated payload: need {} bytes, file has {}", start + len, bytes.len()),
        )
    })
}

/// Images as `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(bytes, IMAGE_MAGIC, path)?;
    let n = read_u32(bytes, 4, path)? as usize;
    let rows = read_u32(bytes, 8, path)? as usize;
    let cols = read_u32(bytes, 12, path)? as usize;
    let data = payload(bytes, 16, n * rows * cols, path)?;
    Ok((n, rows, cols, data.to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, path)?;
    let n = read_u32(bytes, 4, path)? as usize;
    Ok(payload(bytes, 8, n, path)?.to_vec())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(format!("decompressing {}", path.display()), e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Load an image/label IDX pair. Pixel byte `v` becomes `v / 255`.
///
/// The class count is one more than the largest label present.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let (n, rows, cols, pixels) = parse_idx_images(&read_file(images_path)?, images_path)?;
    let labels = parse_idx_labels(&read_file(labels_path)?, labels_path)?;
    if labels.len() != n {
        return Err(idx_error(
            labels_path,
            4,
            format!(
                "label count {} does not match image count {n} in {}",
                labels.len(),
                PathBuf::from(images_path).display()
            ),
        ));
    }
    if n == 0 {
        return Err(idx_error(images_path, 4, "file contains no images"));
    }
    let num_classes = (labels.iter().copied().max().unwrap_or(0) as usize + 1).max(2);
    let features = pixels.iter().map(|&v| f32::from(v) / 255.0).collect();
    Dataset::new(
        features,
        labels.into_iter().map(u32::from).collect(),
        rows * cols,
        num_classes,
    )
}

/// Encode features as an IDX image file. Every feature must be exactly
/// `k / 255` for some byte `k`, and `rows * cols` must equal the width.
pub fn encode_idx_images(data: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != data.dim() {
        return Err(Error::Shape(format!(
            "{rows}x{cols} images do not match feature width {}",
            data.dim()
        )));
    }
    let mut out = Vec::with_capacity(16 + data.len() * data.dim());
    for word in [IMAGE_MAGIC, data.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for &v in data.features().iter() {
        let k = (v * 255.0).round();
        if !(0.0..=255.0).contains(&k) || f32::from(k as u8) / 255.0 != v {
            return Err(Error::InvalidInput(format!("feature {v} is not a byte pixel")));
        }
        out.push(k as u8);
    }
    Ok(out)
}

pub fn encode_idx_labels(data: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + data.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    for &y in data.labels() {
        let b = u8::try_from(y).map_err(|_| Error::InvalidInput(format!("label {y} exceeds 255")))?;
        out.push(b);
    }
    Ok(out)
}
