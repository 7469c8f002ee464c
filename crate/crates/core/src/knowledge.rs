//! Perturbation sets around an input and the knowledge a classifier has over them.
//!
//! The neighbourhood of an input and its manipulation set are both realised as
//! finite, deterministic generators. A classifier's knowledge set is the set of
//! classes it emits over the generated points; it is robust when that set is a
//! singleton.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::classifier::{ClassifyError, Classifier};
use crate::formula::ClassLabel;
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("affine perturbation needs image shape metadata")]
    ShapeMissing,
    #[error("classifier failed on perturbation point {point}: {source}")]
    ClassifierFailure {
        point: usize,
        #[source]
        source: ClassifyError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputPoint {
    features: Vec<f64>,
    shape: Option<ImageShape>,
}

impl InputPoint {
    pub fn new(features: Vec<f64>) -> Result<Self, KnowledgeError> {
        if features.is_empty() {
            return Err(KnowledgeError::InvalidInput("empty feature vector".into()));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(KnowledgeError::InvalidInput(format!("feature {i} is not finite")));
        }
        Ok(InputPoint { features, shape: None })
    }

    pub fn image(pixels: Vec<f64>, shape: ImageShape) -> Result<Self, KnowledgeError> {
        if pixels.len() != shape.height * shape.width {
            return Err(KnowledgeError::InvalidInput(format!(
                "{} pixels do not fill a {}x{} image",
                pixels.len(),
                shape.height,
                shape.width
            )));
        }
        let mut p = Self::new(pixels)?;
        p.shape = Some(shape);
        Ok(p)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn shape(&self) -> Option<ImageShape> {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    fn with_features(&self, features: Vec<f64>) -> Self {
        InputPoint {
            features,
            shape: self.shape,
        }
    }

    fn bits(&self) -> Vec<u64> {
        self.features.iter().map(|v| v.to_bits()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Linf,
    L2,
}

/// Direction of the affine translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftAxis {
    #[default]
    Diagonal,
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationSpec {
    /// `±ε·k/steps` along each selected axis (all axes when `axes` is `None`),
    /// plus the uniform direction over those axes scaled to length `ε·k/steps`
    /// in `metric`.
    EpsilonGrid {
        epsilon: f64,
        metric: Metric,
        steps: usize,
        axes: Option<Vec<usize>>,
    },
    /// Image translations by `t` image sizes for `steps` equally spaced `t`
    /// in `[lo, hi]`.
    AffineGrid {
        lo: f64,
        hi: f64,
        steps: usize,
        axis: ShiftAxis,
        interp: Interpolation,
    },
    Explicit(Vec<Vec<f64>>),
    /// De-duplicated union of the parts.
    Composite(Vec<PerturbationSpec>),
}

impl PerturbationSpec {
    pub fn affine(lo: f64, hi: f64, steps: usize) -> Self {
        PerturbationSpec::AffineGrid {
            lo,
            hi,
            steps,
            axis: ShiftAxis::default(),
            interp: Interpolation::default(),
        }
    }

    pub fn epsilon(epsilon: f64, metric: Metric, steps: usize) -> Self {
        PerturbationSpec::EpsilonGrid {
            epsilon,
            metric,
            steps,
            axes: None,
        }
    }

    pub fn validate(&self) -> Result<(), KnowledgeError> {
        let invalid = |m: &str| Err(KnowledgeError::InvalidSpec(m.to_string()));
        match self {
            PerturbationSpec::EpsilonGrid { epsilon, steps, .. } => {
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return invalid("epsilon must be finite and non-negative");
                }
                if *steps == 0 {
                    return invalid("steps must be at least 1");
                }
                Ok(())
            }
            PerturbationSpec::AffineGrid { lo, hi, steps, .. } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return invalid("affine range needs finite lo <= hi");
                }
                if *steps == 0 {
                    return invalid("steps must be at least 1");
                }
                Ok(())
            }
            PerturbationSpec::Explicit(points) => {
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return invalid("explicit points must be finite");
                }
                Ok(())
            }
            PerturbationSpec::Composite(parts) => parts.iter().try_for_each(Self::validate),
        }
    }

    /// Parses one command-line perturbation:
    /// `affine:LO:HI:STEPS[:axis][:interp]`, `eps:EPS:METRIC:STEPS` or
    /// `file:PATH` (one comma-separated point per line).
    pub fn from_arg(arg: &str) -> Result<Self, KnowledgeError> {
        let invalid = |m: String| KnowledgeError::InvalidSpec(m);
        if let Some(path) = arg.strip_prefix("file:") {
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{path}: {e}")))?;
            return parse_point_lines(&text).map(PerturbationSpec::Explicit);
        }
        let fields: Vec<&str> = arg.split(':').collect();
        let num = |s: &str| -> Result<f64, KnowledgeError> {
            s.parse().map_err(|_| invalid(format!("bad number {s:?} in {arg:?}")))
        };
        let count = |s: &str| -> Result<usize, KnowledgeError> {
            s.parse().map_err(|_| invalid(format!("bad step count {s:?} in {arg:?}")))
        };
        let spec = match fields.as_slice() {
            ["affine", lo, hi, steps, rest @ ..] if rest.len() <= 2 => {
                let mut axis = ShiftAxis::default();
                let mut interp = Interpolation::default();
                for opt in rest {
                    match *opt {
                        "diag" => axis = ShiftAxis::Diagonal,
                        "x" => axis = ShiftAxis::X,
                        "y" => axis = ShiftAxis::Y,
                        "bilinear" => interp = Interpolation::Bilinear,
                        "nearest" => interp = Interpolation::Nearest,
                        other => return Err(invalid(format!("unknown affine option {other:?}"))),
                    }
                }
                PerturbationSpec::AffineGrid {
                    lo: num(lo)?,
                    hi: num(hi)?,
                    steps: count(steps)?,
                    axis,
                    interp,
                }
            }
            ["eps", eps, metric, steps] => PerturbationSpec::EpsilonGrid {
                epsilon: num(eps)?,
                metric: match *metric {
                    "linf" => Metric::Linf,
                    "l2" => Metric::L2,
                    other => return Err(invalid(format!("unknown metric {other:?}"))),
                },
                steps: count(steps)?,
                axes: None,
            },
            _ => return Err(invalid(format!("unrecognised perturbation {arg:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Composite of several command-line perturbations (a single one is
    /// returned as is).
    pub fn from_args<S: AsRef<str>>(args: &[S]) -> Result<Self, KnowledgeError> {
        let mut parts = args
            .iter()
            .map(|a| Self::from_arg(a.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PerturbationSpec::Composite(parts)
        })
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationSpec::EpsilonGrid {
                epsilon,
                metric,
                steps,
                axes,
            } => {
                let metric = match metric {
                    Metric::Linf => "linf",
                    Metric::L2 => "l2",
                };
                write!(f, "eps:{epsilon}:{metric}:{steps}")?;
                if let Some(axes) = axes {
                    write!(f, "@{axes:?}")?;
                }
                Ok(())
            }
            PerturbationSpec::AffineGrid {
                lo,
                hi,
                steps,
                axis,
                interp,
            } => {
                let axis = match axis {
                    ShiftAxis::Diagonal => "diag",
                    ShiftAxis::X => "x",
                    ShiftAxis::Y => "y",
                };
                let interp = match interp {
                    Interpolation::Bilinear => "bilinear",
                    Interpolation::Nearest => "nearest",
                };
                write!(f, "affine:{lo}:{hi}:{steps}:{axis}:{interp}")
            }
            PerturbationSpec::Explicit(points) => write!(f, "explicit:{}", points.len()),
            PerturbationSpec::Composite(parts) => {
                let parts: Vec<String> = parts.iter().map(ToString::to_string).collect();
                write!(f, "{}", parts.join("+"))
            }
        }
    }
}

/// One point per non-empty line, comma-separated reals; `#` starts a comment.
pub fn parse_point_lines(text: &str) -> Result<Vec<Vec<f64>>, KnowledgeError> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        KnowledgeError::InvalidSpec(format!("line {}: bad number {:?}", i + 1, v.trim()))
                    })
                })
                .collect()
        })
        .collect()
}

/// The `t` values of an affine grid: `steps` points from `lo` to `hi`.
pub fn affine_parameters(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let n = (steps - 1) as f64;
    (0..steps)
        .map(|k| (lo * (n - k as f64) + hi * k as f64) / n)
        .collect()
}

/// Translates an image by `(dx, dy)` pixels with zero padding.
pub fn translate_image(
    pixels: &[f64],
    shape: ImageShape,
    dx: f64,
    dy: f64,
    interp: Interpolation,
) -> Vec<f64> {
    let ImageShape { height, width } = shape;
    let pixel = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= height as i64 || c >= width as i64 {
            0.0
        } else {
            pixels[r as usize * width + c as usize]
        }
    };
    let mut out = Vec::with_capacity(pixels.len());
    for r in 0..height {
        for c in 0..width {
            let sr = r as f64 - dy;
            let sc = c as f64 - dx;
            let v = match interp {
                Interpolation::Nearest => pixel(sr.round() as i64, sc.round() as i64),
                Interpolation::Bilinear => {
                    let (r0, c0) = (sr.floor(), sc.floor());
                    let (fr, fc) = (sr - r0, sc - c0);
                    let (r0, c0) = (r0 as i64, c0 as i64);
                    pixel(r0, c0) * (1.0 - fr) * (1.0 - fc)
                        + pixel(r0, c0 + 1) * (1.0 - fr) * fc
                        + pixel(r0 + 1, c0) * fr * (1.0 - fc)
                        + pixel(r0 + 1, c0 + 1) * fr * fc
                }
            };
            out.push(v);
        }
    }
    out
}

fn generate_part(x0: &InputPoint, spec: &PerturbationSpec, out: &mut Vec<InputPoint>) -> Result<(), KnowledgeError> {
    match spec {
        PerturbationSpec::EpsilonGrid {
            epsilon,
            metric,
            steps,
            axes,
        } => {
            let all: Vec<usize>;
            let axes = match axes {
                Some(a) => a.as_slice(),
                None => {
                    all = (0..x0.dim()).collect();
                    &all
                }
            };
            if let Some(&a) = axes.iter().find(|&&a| a >= x0.dim()) {
                return Err(KnowledgeError::InvalidSpec(format!("axis {a} out of range")));
            }
            for k in 1..=*steps {
                let delta = epsilon * k as f64 / *steps as f64;
                for &a in axes {
                    for sign in [1.0, -1.0] {
                        let mut f = x0.features.clone();
                        f[a] += sign * delta;
                        out.push(x0.with_features(f));
                    }
                }
            }
            if axes.len() > 1 {
                let scale = match metric {
                    Metric::Linf => 1.0,
                    Metric::L2 => 1.0 / (axes.len() as f64).sqrt(),
                };
                for k in 1..=*steps {
                    let delta = epsilon * k as f64 / *steps as f64 * scale;
                    for sign in [1.0, -1.0] {
                        let mut f = x0.features.clone();
                        for &a in axes {
                            f[a] += sign * delta;
                        }
                        out.push(x0.with_features(f));
                    }
                }
            }
        }
        PerturbationSpec::AffineGrid {
            lo,
            hi,
            steps,
            axis,
            interp,
        } => {
            let shape = x0.shape.ok_or(KnowledgeError::ShapeMissing)?;
            for t in affine_parameters(*lo, *hi, *steps) {
                if t == 0.0 {
                    out.push(x0.clone());
                    continue;
                }
                let (dx, dy) = match axis {
                    ShiftAxis::Diagonal => (t * shape.width as f64, t * shape.height as f64),
                    ShiftAxis::X => (t * shape.width as f64, 0.0),
                    ShiftAxis::Y => (0.0, t * shape.height as f64),
                };
                out.push(x0.with_features(translate_image(&x0.features, shape, dx, dy, *interp)));
            }
        }
        PerturbationSpec::Explicit(points) => {
            for p in points {
                if p.len() != x0.dim() {
                    return Err(KnowledgeError::InvalidSpec(format!(
                        "explicit point of dimension {} for input of dimension {}",
                        p.len(),
                        x0.dim()
                    )));
                }
                out.push(x0.with_features(p.clone()));
            }
        }
        PerturbationSpec::Composite(parts) => {
            for part in parts {
                generate_part(x0, part, out)?;
            }
        }
    }
    Ok(())
}

/// The finite perturbation set of `x0`: `x0` first, then the generated points
/// in generation order with exact duplicates removed.
pub fn generate_perturbations(x0: &InputPoint, spec: &PerturbationSpec) -> Result<Vec<InputPoint>, KnowledgeError> {
    spec.validate()?;
    let mut raw = Vec::new();
    generate_part(x0, spec, &mut raw)?;
    let mut seen = HashSet::from([x0.bits()]);
    let mut points = vec![x0.clone()];
    for p in raw {
        if seen.insert(p.bits()) {
            points.push(p);
        }
    }
    Ok(points)
}

/// Classes a classifier emits over a perturbation set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeSet {
    pub classes: BTreeSet<ClassLabel>,
    pub robust: bool,
}

impl KnowledgeSet {
    pub fn new(classes: BTreeSet<ClassLabel>) -> Self {
        let robust = classes.len() == 1;
        KnowledgeSet { classes, robust }
    }
}

/// Knowledge of `classifier` about `x0` over the perturbation set of `spec`.
pub fn ckc<C: Classifier + ?Sized>(
    classifier: &C,
    x0: &InputPoint,
    spec: &PerturbationSpec,
) -> Result<KnowledgeSet, KnowledgeError> {
    ckc_with(Execution::default(), classifier, x0, spec)
}

pub fn ckc_with<C: Classifier + ?Sized>(
    exec: Execution,
    classifier: &C,
    x0: &InputPoint,
    spec: &PerturbationSpec,
) -> Result<KnowledgeSet, KnowledgeError> {
    let points = generate_perturbations(x0, spec)?;
    let labels = exec.try_map(&points, |i, p| {
        classifier
            .classify_indexed(i, p)
            .map_err(|source| KnowledgeError::ClassifierFailure { point: i, source })
    })?;
    Ok(KnowledgeSet::new(labels.into_iter().collect()))
}
