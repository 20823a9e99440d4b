use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// A scalar field over (frame, height, width), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Volume {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidShape(format!("zero-length axis in {dims:?}")));
        }
        let n = dims.iter().product::<usize>();
        if data.len() != n {
            return Err(Error::Shape(format!(
                "volume {dims:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for t in 0..dims[0] {
            for y in 0..dims[1] {
                for x in 0..dims[2] {
                    data.push(f(t, y, x));
                }
            }
        }
        Self { dims, data }
    }

    pub fn from_tensor(tensor: &DenseTensor) -> Result<Self> {
        match *tensor.shape() {
            [f, h, w] => Self::new([f, h, w], tensor.data().to_vec()),
            _ => Err(Error::Shape(format!(
                "tube must be rank 3 (F, H, W), got shape {:?}",
                tensor.shape()
            ))),
        }
    }

    pub fn to_tensor(&self) -> Result<DenseTensor> {
        DenseTensor::new(self.dims.to_vec(), self.data.clone())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn frames(&self) -> usize {
        self.dims[0]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, f: usize, h: usize, w: usize) -> f64 {
        self.data[(f * self.dims[1] + h) * self.dims[2] + w]
    }

    /// The H×W plane of frame `f`.
    pub fn frame(&self, f: usize) -> &[f64] {
        let len = self.dims[1] * self.dims[2];
        &self.data[f * len..(f + 1) * len]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Location of the largest value; the first one in row-major order on ties.
    pub fn argmax(&self) -> [usize; 3] {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        let plane = self.dims[1] * self.dims[2];
        [best / plane, (best % plane) / self.dims[2], best % self.dims[2]]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub(crate) fn add_scaled(&mut self, other: &Volume, scale: f64) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}
