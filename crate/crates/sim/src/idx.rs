//! MNIST-style IDX files: big-endian u32 header, then unsigned bytes.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Result, SimError};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| SimError::Idx(format!("truncated header at byte {at}")))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = read_u32(bytes, 0)?;
    if magic != expected {
        return Err(SimError::Idx(format!("magic {magic:#010x}, expected {expected:#010x}")));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let expected = count * rows * cols;
    let body = &bytes[16..];
    if body.len() != expected {
        return Err(SimError::Idx(format!(
            "{} pixel bytes, header implies {expected}",
            body.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: body.to_vec(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(SimError::Idx(format!(
            "{} label bytes, header implies {count}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [
        IMAGES_MAGIC,
        images.count as u32,
        images.rows as u32,
        images.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Pixels divided by 255; classes are `0..=max label`.
pub fn to_dataset(images: &IdxImages, labels: &[u8], subsample: Option<usize>) -> Result<Dataset> {
    if images.count != labels.len() {
        return Err(SimError::Idx(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    let n = subsample.map_or(images.count, |s| s.min(images.count));
    let pixels_per = images.rows * images.cols;
    let features = images
        .pixels
        .chunks_exact(pixels_per.max(1))
        .take(n)
        .map(|px| px.iter().map(|&p| f64::from(p) / 255.0).collect())
        .collect();
    let labels: Vec<usize> = labels[..n].iter().map(|&y| usize::from(y)).collect();
    let n_classes = labels.iter().max().map_or(1, |m| m + 1);
    Dataset::new(features, labels, n_classes)
}

pub fn load_dataset(images_path: &Path, labels_path: &Path, subsample: Option<usize>) -> Result<Dataset> {
    let images = parse_images(&std::fs::read(images_path)?)?;
    let labels = parse_labels(&std::fs::read(labels_path)?)?;
    to_dataset(&images, &labels, subsample)
}
