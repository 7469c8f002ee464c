//! The classifier contract and deterministic mock classifiers.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::formula::ClassLabel;
use crate::knowledge::InputPoint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ClassifyError(pub String);

/// A read-only map from inputs to output classes. Implementations must be
/// pure: points of a perturbation set may be classified concurrently.
pub trait Classifier: Send + Sync {
    fn classify(&self, x: &InputPoint) -> Result<ClassLabel, ClassifyError>;

    /// Classifies the `index`-th point of a perturbation set (index 0 is the
    /// unperturbed input). Only scripted mocks look at the index.
    fn classify_indexed(&self, _index: usize, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        self.classify(x)
    }

    /// Every class this classifier can emit.
    fn class_labels(&self) -> BTreeSet<ClassLabel>;

    /// Stable identifier echoed in experiment reports.
    fn fingerprint(&self) -> String;
}

impl<T: Classifier + ?Sized> Classifier for &T {
    fn classify(&self, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        (**self).classify(x)
    }
    fn classify_indexed(&self, index: usize, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        (**self).classify_indexed(index, x)
    }
    fn class_labels(&self) -> BTreeSet<ClassLabel> {
        (**self).class_labels()
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

impl<T: Classifier + ?Sized> Classifier for Box<T> {
    fn classify(&self, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        (**self).classify(x)
    }
    fn classify_indexed(&self, index: usize, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        (**self).classify_indexed(index, x)
    }
    fn class_labels(&self) -> BTreeSet<ClassLabel> {
        (**self).class_labels()
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockClassifier {
    Constant(ClassLabel),
    /// Point `i` of a perturbation set gets `script[i % script.len()]`, so a
    /// set of at least `script.len()` points yields exactly the script's classes.
    Scripted(Vec<ClassLabel>),
    /// `q1`..`q4` by the signs of the first two features (zero counts as
    /// positive).
    Quadrant2D,
    /// Ground truth is [`halfplane_truth`]; inside a seeded straight band of
    /// the given width the answer is flipped.
    HalfplaneNoise { seed: u64, band_width: f64 },
}

/// `c1` when `x + y >= 0`, else `c0`.
pub fn halfplane_truth(features: &[f64]) -> ClassLabel {
    if features[0] + features[1] >= 0.0 {
        ClassLabel::from("c1")
    } else {
        ClassLabel::from("c0")
    }
}

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

impl MockClassifier {
    pub fn scripted<I, S>(classes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ClassLabel>,
    {
        MockClassifier::Scripted(classes.into_iter().map(Into::into).collect())
    }

    /// Normal angle and offset of the flip band of a `HalfplaneNoise` mock.
    pub fn band(seed: u64) -> (f64, f64) {
        let mut s = seed;
        let angle = unit(&mut s) * std::f64::consts::TAU;
        let offset = unit(&mut s) * 1.6 - 0.8;
        (angle, offset)
    }

    fn two_dims(x: &InputPoint) -> Result<(f64, f64), ClassifyError> {
        match x.features() {
            [a, b] => Ok((*a, *b)),
            f => Err(ClassifyError(format!("expected a 2-d input, got {} features", f.len()))),
        }
    }
}

impl Classifier for MockClassifier {
    fn classify(&self, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        self.classify_indexed(0, x)
    }

    fn classify_indexed(&self, index: usize, x: &InputPoint) -> Result<ClassLabel, ClassifyError> {
        match self {
            MockClassifier::Constant(c) => Ok(c.clone()),
            MockClassifier::Scripted(script) => script
                .get(index % script.len().max(1))
                .cloned()
                .ok_or_else(|| ClassifyError("empty script".into())),
            MockClassifier::Quadrant2D => {
                let (a, b) = Self::two_dims(x)?;
                let q = match (a >= 0.0, b >= 0.0) {
                    (true, true) => "q1",
                    (false, true) => "q2",
                    (false, false) => "q3",
                    (true, false) => "q4",
                };
                Ok(ClassLabel::from(q))
            }
            MockClassifier::HalfplaneNoise { seed, band_width } => {
                let (a, b) = Self::two_dims(x)?;
                let truth = halfplane_truth(&[a, b]);
                let (angle, offset) = Self::band(*seed);
                let d = a * angle.cos() + b * angle.sin() - offset;
                if d.abs() < band_width / 2.0 {
                    Ok(if truth.as_str() == "c1" { "c0".into() } else { "c1".into() })
                } else {
                    Ok(truth)
                }
            }
        }
    }

    fn class_labels(&self) -> BTreeSet<ClassLabel> {
        match self {
            MockClassifier::Constant(c) => BTreeSet::from([c.clone()]),
            MockClassifier::Scripted(s) => s.iter().cloned().collect(),
            MockClassifier::Quadrant2D => ["q1", "q2", "q3", "q4"].into_iter().map(ClassLabel::from).collect(),
            MockClassifier::HalfplaneNoise { .. } => ["c0", "c1"].into_iter().map(ClassLabel::from).collect(),
        }
    }

    fn fingerprint(&self) -> String {
        format!("mock:{self:?}")
    }
}
