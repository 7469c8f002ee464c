//! Dense feed-forward classifiers and the `MASKSNN1` weight format.
//!
//! Layout (little-endian, no padding):
//!
//! ```text
//! "MASKSNN1"                      8 bytes
//! u32 layer_count
//! per layer: u32 in_dim, u32 out_dim,
//!            out_dim*in_dim f32 weights (row per output neuron),
//!            out_dim f32 biases
//! u32 label_count, then per label: u16 byte length, UTF-8 bytes
//! ```
//!
//! Hidden layers use ReLU, the last layer is linear and the predicted class is
//! the arg-max logit (lowest index on ties).

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::{ClassifyError, Classifier};
use crate::formula::ClassLabel;
use crate::knowledge::InputPoint;

pub const MAGIC: &[u8; 8] = b"MASKSNN1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightsError {
    #[error("bad magic at offset {offset}")]
    BadMagic { offset: usize },
    #[error("file truncated at offset {offset}")]
    TruncatedFile { offset: usize },
    #[error("dimension mismatch at offset {offset}: {detail}")]
    DimMismatch { offset: usize, detail: String },
    #[error("non-finite weight at offset {offset}")]
    NonFiniteWeight { offset: usize },
    #[error("invalid class label at offset {offset}")]
    BadLabel { offset: usize },
    #[error("unexpected trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major, one row of `in_dim` weights per output neuron.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl DenseLayer {
    /// Matrix-vector product plus bias. Each row is summed left to right
    /// starting from zero and the bias is added last.
    fn apply(&self, input: &[f32], out: &mut Vec<f32>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.in_dim).zip(&self.bias) {
            let mut acc = 0.0f32;
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            out.push(acc + b);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
    labels: Vec<ClassLabel>,
}

impl MlpNetwork {
    pub fn new(layers: Vec<DenseLayer>, labels: Vec<ClassLabel>) -> Result<Self, WeightsError> {
        let mismatch = |detail: String| WeightsError::DimMismatch { offset: 0, detail };
        if layers.is_empty() {
            return Err(mismatch("network has no layers".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(mismatch(format!("layer {k} has a zero dimension")));
            }
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(mismatch(format!("layer {k} parameter count does not match its dims")));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(WeightsError::NonFiniteWeight { offset: 0 });
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(mismatch(format!(
                    "layer {k} outputs {} but layer {} takes {}",
                    pair[0].out_dim,
                    k + 1,
                    pair[1].in_dim
                )));
            }
        }
        let last = layers.last().unwrap().out_dim;
        if labels.len() != last {
            return Err(mismatch(format!("{} labels for {last} outputs", labels.len())));
        }
        Ok(MlpNetwork { layers, labels })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    /// Output logits for `input`.
    pub fn logits(&self, input: &[f32]) -> Result<Vec<f32>, ClassifyError> {
        if input.len() != self.input_dim() {
            return Err(ClassifyError(format!(
                "input has {} features, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if k < last {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
            out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
            for v in l.weights.iter().chain(&l.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.labels.len() as u32).to_le_bytes());
        for label in &self.labels {
            out.extend_from_slice(&(label.as_str().len() as u16).to_le_bytes());
            out.extend_from_slice(label.as_str().as_bytes());
        }
        out
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WeightsError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(WeightsError::TruncatedFile { offset: self.bytes.len() })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, WeightsError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, WeightsError> {
        let start = self.pos;
        let raw = self.take(n.checked_mul(4).ok_or(WeightsError::TruncatedFile { offset: start })?)?;
        raw.chunks_exact(4)
            .enumerate()
            .map(|(i, c)| {
                let v = f32::from_le_bytes(c.try_into().unwrap());
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(WeightsError::NonFiniteWeight { offset: start + 4 * i })
                }
            })
            .collect()
    }
}

pub fn load_weights(bytes: &[u8]) -> Result<MlpNetwork, WeightsError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(WeightsError::BadMagic { offset: 0 });
    }
    r.pos = MAGIC.len();
    let count_at = r.pos;
    let layer_count = r.u32()? as usize;
    if layer_count == 0 {
        return Err(WeightsError::DimMismatch {
            offset: count_at,
            detail: "network has no layers".into(),
        });
    }
    let mut layers: Vec<DenseLayer> = Vec::new();
    for k in 0..layer_count {
        let at = r.pos;
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        if in_dim == 0 || out_dim == 0 {
            return Err(WeightsError::DimMismatch {
                offset: at,
                detail: format!("layer {k} has a zero dimension"),
            });
        }
        if let Some(prev) = layers.last() {
            if prev.out_dim != in_dim {
                return Err(WeightsError::DimMismatch {
                    offset: at,
                    detail: format!("layer {k} takes {in_dim} inputs, previous layer gives {}", prev.out_dim),
                });
            }
        }
        let weights = r.f32s(in_dim.checked_mul(out_dim).ok_or(WeightsError::TruncatedFile { offset: at })?)?;
        let bias = r.f32s(out_dim)?;
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            weights,
            bias,
        });
    }
    let at = r.pos;
    let label_count = r.u32()? as usize;
    let out_dim = layers.last().unwrap().out_dim;
    if label_count != out_dim {
        return Err(WeightsError::DimMismatch {
            offset: at,
            detail: format!("{label_count} labels for {out_dim} outputs"),
        });
    }
    let mut labels = Vec::with_capacity(label_count);
    for _ in 0..label_count {
        let at = r.pos;
        let len = r.u16()? as usize;
        let raw = r.take(len)?;
        let label = std::str::from_utf8(raw)
            .ok()
            .and_then(|s| ClassLabel::new(s).ok())
            .ok_or(WeightsError::BadLabel { offset: at })?;
        labels.push(label);
    }
    if r.pos != bytes.len() {
        return Err(WeightsError::TrailingBytes { offset: r.pos });
    }
    MlpNetwork::new(layers, labels)
}

impl Classifier for MlpNetwork {
    fn classify(&self, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        let input: Vec<f32> = x.features().iter().map(|&v| v as f32).collect();
        let logits = self.logits(&input)?;
        Ok(self.labels[argmax(&logits)].clone())
    }

    fn class_labels(&self) -> BTreeSet<ClassLabel> {
        self.labels.iter().cloned().collect()
    }

    fn fingerprint(&self) -> String {
        format!("sha256:{}", hex::encode(Sha256::digest(self.to_bytes())))
    }
}
