//! Dense tensors and the canonical activation layout.
//!
//! Everything downstream of loading works on [`ActivationVolume`], whose axes
//! are always (frame, height, width, channel) regardless of how the exporter
//! stored them. The stored layout is described by an [`AxisOrder`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Maximum tensor rank accepted anywhere in the engine.
pub const MAX_RANK: usize = 4;

/// A row-major tensor of finite `f64` values with rank 1 to 4.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = element_count(&shape)?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {expected} elements but {} were given",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value {} at flat index {pos}",
                data[pos]
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f64>) {
        (self.shape, self.data)
    }
}

/// Validates a shape and returns its element count.
pub(crate) fn element_count(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.len() > MAX_RANK {
        return Err(Error::InvalidShape(format!(
            "rank must be 1..={MAX_RANK}, got {}",
            shape.len()
        )));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!(
            "zero-length axis in {shape:?}"
        )));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidShape(format!("element count of {shape:?} overflows")))
}

/// One of the four semantic activation axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Frame,
    Height,
    Width,
    Channel,
}

impl Axis {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'F' => Some(Axis::Frame),
            'H' => Some(Axis::Height),
            'W' => Some(Axis::Width),
            'D' => Some(Axis::Channel),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Axis::Frame => 'F',
            Axis::Height => 'H',
            Axis::Width => 'W',
            Axis::Channel => 'D',
        }
    }

    /// Position of this axis in the canonical (F, H, W, D) order.
    fn canonical_pos(self) -> usize {
        match self {
            Axis::Frame => 0,
            Axis::Height => 1,
            Axis::Width => 2,
            Axis::Channel => 3,
        }
    }
}

/// Stored layout of a rank-4 activation tensor, e.g. `FHWD` or `DFHW`.
///
/// Character `k` names the semantic axis of stored axis `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AxisOrder([Axis; 4]);

impl AxisOrder {
    pub const CANONICAL: AxisOrder = AxisOrder([Axis::Frame, Axis::Height, Axis::Width, Axis::Channel]);

    pub fn axes(&self) -> [Axis; 4] {
        self.0
    }

    /// For each canonical axis, the stored axis that holds it.
    fn stored_pos_of_canonical(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for (stored, axis) in self.0.iter().enumerate() {
            out[axis.canonical_pos()] = stored;
        }
        out
    }
}

impl Default for AxisOrder {
    fn default() -> Self {
        Self::CANONICAL
    }
}

impl FromStr for AxisOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Policy(format!("axis order `{s}` is not a permutation of F, H, W, D"));
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 4 {
            return Err(bad());
        }
        let mut axes = [Axis::Frame; 4];
        let mut seen = [false; 4];
        for (k, c) in chars.into_iter().enumerate() {
            let axis = Axis::from_char(c).ok_or_else(bad)?;
            if std::mem::replace(&mut seen[axis.canonical_pos()], true) {
                return Err(bad());
            }
            axes[k] = axis;
        }
        Ok(AxisOrder(axes))
    }
}

impl fmt::Display for AxisOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for axis in self.0 {
            write!(f, "{}", axis.as_char())?;
        }
        Ok(())
    }
}

/// Final-convolution activations in canonical (F′, H′, W′, D′) layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationVolume {
    frames: usize,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ActivationVolume {
    /// Builds a volume from data already in canonical order.
    pub fn new(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let tensor = DenseTensor::new(dims.to_vec(), data)?;
        let (_, data) = tensor.into_parts();
        let [frames, height, width, channels] = dims;
        Ok(Self {
            frames,
            height,
            width,
            channels,
            data,
        })
    }

    /// Permutes a stored rank-4 tensor into canonical order.
    pub fn canonicalize(tensor: &DenseTensor, order: AxisOrder) -> Result<Self> {
        if tensor.rank() != 4 {
            return Err(Error::Shape(format!(
                "activations must be rank 4, got shape {:?}",
                tensor.shape()
            )));
        }
        let src_shape = tensor.shape();
        let src_strides = row_major_strides(src_shape);
        let pos = order.stored_pos_of_canonical();
        let dims = [
            src_shape[pos[0]],
            src_shape[pos[1]],
            src_shape[pos[2]],
            src_shape[pos[3]],
        ];
        // stride in the source buffer for each canonical axis
        let strides = [
            src_strides[pos[0]],
            src_strides[pos[1]],
            src_strides[pos[2]],
            src_strides[pos[3]],
        ];
        let src = tensor.data();
        let mut data = Vec::with_capacity(src.len());
        for f in 0..dims[0] {
            for h in 0..dims[1] {
                for w in 0..dims[2] {
                    let base = f * strides[0] + h * strides[1] + w * strides[2];
                    data.extend((0..dims[3]).map(|d| src[base + d * strides[3]]));
                }
            }
        }
        Self::new(dims, data)
    }

    /// Inverse of [`ActivationVolume::canonicalize`]: lays the volume out in `order`.
    pub fn to_layout(&self, order: AxisOrder) -> DenseTensor {
        let dims = self.dims();
        let stored_shape: Vec<usize> = order.axes().iter().map(|a| dims[a.canonical_pos()]).collect();
        let stored_strides = row_major_strides(&stored_shape);
        let pos = order.stored_pos_of_canonical();
        let mut out = vec![0.0; self.data.len()];
        for f in 0..self.frames {
            for h in 0..self.height {
                for w in 0..self.width {
                    for d in 0..self.channels {
                        let idx = f * stored_strides[pos[0]]
                            + h * stored_strides[pos[1]]
                            + w * stored_strides[pos[2]]
                            + d * stored_strides[pos[3]];
                        out[idx] = self.get(f, h, w, d);
                    }
                }
            }
        }
        DenseTensor {
            shape: stored_shape,
            data: out,
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.frames, self.height, self.width, self.channels]
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Spatio-temporal dims (F′, H′, W′).
    pub fn grid(&self) -> [usize; 3] {
        [self.frames, self.height, self.width]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn index(&self, f: usize, h: usize, w: usize, d: usize) -> usize {
        ((f * self.height + h) * self.width + w) * self.channels + d
    }

    #[inline]
    pub fn get(&self, f: usize, h: usize, w: usize, d: usize) -> f64 {
        self.data[self.index(f, h, w, d)]
    }

    /// The activation vector of channel values at voxel `(f, h, w)`.
    pub fn voxel(&self, f: usize, h: usize, w: usize) -> &[f64] {
        let start = self.index(f, h, w, 0);
        &self.data[start..start + self.channels]
    }

    /// Single-frame volume holding frame `f`.
    pub fn frame(&self, f: usize) -> ActivationVolume {
        let len = self.height * self.width * self.channels;
        ActivationVolume {
            frames: 1,
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data[f * len..(f + 1) * len].to_vec(),
        }
    }

    /// Per-channel mean over all voxels (global average pooling).
    pub fn channel_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.channels];
        for voxel in self.data.chunks_exact(self.channels) {
            for (s, v) in sums.iter_mut().zip(voxel) {
                *s += v;
            }
        }
        let n = (self.frames * self.height * self.width) as f64;
        sums.iter().map(|s| s / n).collect()
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// The prediction-layer matrix: row `i` holds the class weights for class `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierWeights {
    classes: usize,
    features: usize,
    matrix: Vec<f64>,
    bias: Option<Vec<f64>>,
    labels: Vec<String>,
}

impl ClassifierWeights {
    pub fn new(classes: usize, features: usize, matrix: Vec<f64>) -> Result<Self> {
        DenseTensor::new(vec![classes, features], matrix).and_then(|t| Self::from_tensor(&t))
    }

    pub fn from_tensor(tensor: &DenseTensor) -> Result<Self> {
        if tensor.rank() != 2 {
            return Err(Error::Shape(format!(
                "classifier weights must be rank 2 (N x D'), got shape {:?}",
                tensor.shape()
            )));
        }
        Ok(Self {
            classes: tensor.shape()[0],
            features: tensor.shape()[1],
            matrix: tensor.data().to_vec(),
            bias: None,
            labels: Vec::new(),
        })
    }

    pub fn with_bias(mut self, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != self.classes {
            return Err(Error::Shape(format!(
                "bias has {} entries but there are {} classes",
                bias.len(),
                self.classes
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Data("non-finite bias value".into()));
        }
        self.bias = Some(bias);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if !labels.is_empty() && labels.len() != self.classes {
            return Err(Error::Shape(format!(
                "{} class labels given for {} classes",
                labels.len(),
                self.classes
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.bias.as_deref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row(&self, class_index: usize) -> Result<&[f64]> {
        self.check_class(class_index)?;
        let start = class_index * self.features;
        Ok(&self.matrix[start..start + self.features])
    }

    pub fn check_class(&self, class_index: usize) -> Result<()> {
        if class_index >= self.classes {
            return Err(Error::Index(format!(
                "class index {class_index} not in 0..{}",
                self.classes
            )));
        }
        Ok(())
    }

    /// Resolves a label by exact match.
    pub fn class_by_label(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Index(format!("no class labelled `{label}`")))
    }

    /// Returns a copy with row `class_index` replaced.
    pub fn with_row(&self, class_index: usize, row: &[f64]) -> Result<Self> {
        self.check_class(class_index)?;
        if row.len() != self.features {
            return Err(Error::Shape(format!(
                "row has {} entries, expected {}",
                row.len(),
                self.features
            )));
        }
        let mut out = self.clone();
        let start = class_index * self.features;
        out.matrix[start..start + self.features].copy_from_slice(row);
        Ok(out)
    }

    pub fn to_tensor(&self) -> DenseTensor {
        DenseTensor {
            shape: vec![self.classes, self.features],
            data: self.matrix.clone(),
        }
    }
}
