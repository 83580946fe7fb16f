//! Reader for the IDX image and label files used by MNIST and Fashion-MNIST.

use super::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, `rows · cols` bytes per image.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

fn header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let need = 4 + 4 * dims;
    if bytes.len() < need {
        return Err(Error::Idx(format!("file of {} bytes has no complete header", bytes.len())));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != magic {
        return Err(Error::Idx(format!("magic {:#010x}, expected {magic:#010x}", word(0))));
    }
    Ok((1..=dims).map(|i| word(i) as usize).collect())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let d = header(bytes, IMAGE_MAGIC, 3)?;
    let (count, rows, cols) = (d[0], d[1], d[2]);
    let body = &bytes[16..];
    if body.len() != count * rows * cols {
        return Err(Error::Idx(format!(
            "{} pixel bytes for {count} images of {rows}×{cols}",
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

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let d = header(bytes, LABEL_MAGIC, 1)?;
    let body = &bytes[8..];
    if body.len() != d[0] {
        return Err(Error::Idx(format!("{} label bytes, header says {}", body.len(), d[0])));
    }
    Ok(body.to_vec())
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    parse_idx_images(&std::fs::read(path)?)
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&std::fs::read(path)?)
}

/// Samples whose raw label lies in `first..first + classes`, relabelled to
/// `0..classes`, with pixels scaled to `[0, 1]` and the bias appended.
pub fn idx_dataset<T: Scalar>(images: &IdxImages, labels: &[u8], first: u8, classes: usize) -> Result<Dataset<T>> {
    if images.count != labels.len() {
        return Err(Error::Idx(format!("{} images but {} labels", images.count, labels.len())));
    }
    let mut features = Vec::new();
    let mut out = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        let Some(v) = l.checked_sub(first).map(usize::from).filter(|&v| v < classes) else {
            continue;
        };
        features.push(images.image(i).iter().map(|&p| T::lit(f64::from(p) / 255.0)).collect());
        out.push(v);
    }
    Ok(Dataset::new(features, out, classes)?.with_bias())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(count: u32, rows: u32, cols: u32, px: &[u8]) -> Vec<u8> {
        let mut b = IMAGE_MAGIC.to_be_bytes().to_vec();
        for x in [count, rows, cols] {
            b.extend(x.to_be_bytes());
        }
        b.extend(px);
        b
    }

    fn labels(ls: &[u8]) -> Vec<u8> {
        let mut b = LABEL_MAGIC.to_be_bytes().to_vec();
        b.extend((ls.len() as u32).to_be_bytes());
        b.extend(ls);
        b
    }

    #[test]
    fn parses_and_filters() {
        let img = parse_idx_images(&images(3, 1, 2, &[0, 255, 51, 102, 7, 8])).unwrap();
        assert_eq!(img.image(1), &[51, 102]);
        let lab = parse_idx_labels(&labels(&[4, 6, 9])).unwrap();
        let d = idx_dataset::<f64>(&img, &lab, 5, 5).unwrap();
        assert_eq!(d.labels, vec![1, 4]);
        assert_eq!(d.features[0], vec![0.2, 0.4, 1.0]);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut b = images(1, 1, 1, &[0]);
        b[3] = 0x01;
        assert!(matches!(parse_idx_images(&b), Err(Error::Idx(_))));
        assert!(parse_idx_images(&images(2, 1, 1, &[0])).is_err());
        assert!(parse_idx_labels(&[0, 0, 8]).is_err());
    }
}
