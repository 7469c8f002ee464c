//! Labelled datasets and the IDX container used by MNIST.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::formula::ClassLabel;
use crate::knowledge::{ImageShape, InputPoint};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} file: bad magic {got:#010x}, expected {expected:#010x}")]
    BadMagic { file: &'static str, expected: u32, got: u32 },
    #[error("{file} file truncated: need {expected} bytes, have {got}")]
    Truncated { file: &'static str, expected: usize, got: usize },
    #[error("{file} file has {extra} trailing bytes")]
    TrailingBytes { file: &'static str, extra: usize },
    #[error("images file holds {images} items but labels file holds {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("label {label} of item {item} is not a digit")]
    BadLabel { item: usize, label: u8 },
    #[error("images have zero size ({rows}x{cols})")]
    EmptyImage { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("item {item} has {got} features, expected {expected}")]
    DimensionMismatch { item: usize, expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<(InputPoint, ClassLabel)>,
    shape: Option<ImageShape>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(InputPoint, ClassLabel)>, shape: Option<ImageShape>) -> Result<Self, DatasetError> {
        if let Some((first, _)) = items.first() {
            let expected = first.dim();
            if let Some((item, (p, _))) = items.iter().enumerate().find(|(_, (p, _))| p.dim() != expected) {
                return Err(DatasetError::DimensionMismatch {
                    item,
                    expected,
                    got: p.dim(),
                });
            }
        }
        Ok(LabeledDataset { items, shape })
    }

    pub fn items(&self) -> &[(InputPoint, ClassLabel)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn shape(&self) -> Option<ImageShape> {
        self.shape
    }

    /// The first `n` items.
    pub fn truncate(mut self, n: usize) -> Self {
        self.items.truncate(n);
        self
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn need(file: &'static str, bytes: &[u8], expected: usize) -> Result<(), IdxError> {
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            file,
            expected,
            got: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(IdxError::TrailingBytes {
            file,
            extra: bytes.len() - expected,
        });
    }
    Ok(())
}

fn header(file: &'static str, bytes: &[u8], magic: u32, len: usize) -> Result<(), IdxError> {
    if bytes.len() < len {
        return Err(IdxError::Truncated {
            file,
            expected: len,
            got: bytes.len(),
        });
    }
    let got = be_u32(bytes, 0);
    if got != magic {
        return Err(IdxError::BadMagic {
            file,
            expected: magic,
            got,
        });
    }
    Ok(())
}

/// Decodes an IDX image/label pair already in memory. Pixels are scaled to
/// [0, 1] by /255 and digit `d` becomes the label `c{d}`.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<LabeledDataset, IdxError> {
    header("images", images, IMAGES_MAGIC, 16)?;
    header("labels", labels, LABELS_MAGIC, 8)?;
    let count = be_u32(images, 4) as usize;
    let rows = be_u32(images, 8) as usize;
    let cols = be_u32(images, 12) as usize;
    let label_count = be_u32(labels, 4) as usize;
    if count != label_count {
        return Err(IdxError::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    if rows == 0 || cols == 0 {
        return Err(IdxError::EmptyImage { rows, cols });
    }
    let pixels = rows * cols;
    need("images", images, 16 + count * pixels)?;
    need("labels", labels, 8 + count)?;

    let shape = ImageShape { height: rows, width: cols };
    let mut items = Vec::with_capacity(count);
    for (i, (chunk, &label)) in images[16..].chunks_exact(pixels).zip(&labels[8..]).enumerate() {
        if label > 9 {
            return Err(IdxError::BadLabel { item: i, label });
        }
        let features = chunk.iter().map(|&b| f64::from(b) / 255.0).collect();
        let point = InputPoint::image(features, shape).expect("pixel count matches shape");
        items.push((point, ClassLabel::new(format!("c{label}")).expect("identifier")));
    }
    Ok(LabeledDataset { items, shape: Some(shape) })
}

fn read(path: &Path) -> Result<Vec<u8>, IdxError> {
    std::fs::read(path).map_err(|source| IdxError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_mnist(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset, IdxError> {
    let images = read(images_path.as_ref())?;
    let labels = read(labels_path.as_ref())?;
    parse_idx(&images, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(count: u32, rows: u32, cols: u32, fill: u8) -> Vec<u8> {
        let mut v = Vec::new();
        for w in [IMAGES_MAGIC, count, rows, cols] {
            v.extend_from_slice(&w.to_be_bytes());
        }
        v.resize(v.len() + (count * rows * cols) as usize, fill);
        v
    }

    fn labels(ls: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        v.extend_from_slice(&(ls.len() as u32).to_be_bytes());
        v.extend_from_slice(ls);
        v
    }

    #[test]
    fn one_white_seven() {
        let d = parse_idx(&images(1, 28, 28, 255), &labels(&[7])).unwrap();
        assert_eq!(d.len(), 1);
        let (p, l) = &d.items()[0];
        assert_eq!(p.dim(), 784);
        assert!(p.features().iter().all(|&v| v == 1.0));
        assert_eq!(l.as_str(), "c7");
        assert_eq!(d.shape(), Some(ImageShape { height: 28, width: 28 }));
    }

    #[test]
    fn scaling() {
        let mut img = images(1, 1, 3, 0);
        img[17] = 51;
        img[18] = 128;
        let d = parse_idx(&img, &labels(&[0])).unwrap();
        assert_eq!(d.items()[0].0.features(), &[0.0, 0.2, 128.0 / 255.0]);
    }

    #[test]
    fn format_errors() {
        let mut bad = images(1, 2, 2, 0);
        bad[3] = 0x01;
        assert!(matches!(
            parse_idx(&bad, &labels(&[1])),
            Err(IdxError::BadMagic { file: "images", .. })
        ));
        assert!(matches!(
            parse_idx(&images(2, 2, 2, 0), &labels(&[1])),
            Err(IdxError::CountMismatch { images: 2, labels: 1 })
        ));
        let mut short = images(2, 2, 2, 0);
        short.pop();
        assert!(matches!(
            parse_idx(&short, &labels(&[1, 2])),
            Err(IdxError::Truncated { file: "images", .. })
        ));
        assert!(matches!(
            parse_idx(&images(1, 2, 2, 0)[..10], &labels(&[1])),
            Err(IdxError::Truncated { .. })
        ));
        assert!(matches!(
            parse_idx(&images(1, 2, 2, 0), &labels(&[12])),
            Err(IdxError::BadLabel { item: 0, label: 12 })
        ));
    }

    #[test]
    fn dataset_dimension_check() {
        let items = vec![
            (InputPoint::new(vec![0.0, 1.0]).unwrap(), ClassLabel::from("a")),
            (InputPoint::new(vec![0.0]).unwrap(), ClassLabel::from("a")),
        ];
        assert_eq!(
            LabeledDataset::new(items, None),
            Err(DatasetError::DimensionMismatch {
                item: 1,
                expected: 2,
                got: 1
            })
        );
    }
}
