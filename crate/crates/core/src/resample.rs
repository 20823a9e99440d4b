//! Separable upsampling of saliency volumes to video resolution.
//!
//! Coordinates follow the align-corners convention: target index `d` on an
//! axis of length `n_out` reads source position `d * (n_in - 1) / (n_out - 1)`,
//! so the first and last samples of every axis land exactly on the source
//! corners. Axes are processed in the order frame, height, width.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tube::{normalize_tube, Resolution, SaliencyTube};
use crate::volume::Volume;

/// Catmull-Rom kernel parameter.
pub const CUBIC_A: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Trilinear,
    #[default]
    Cubic,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trilinear" | "linear" => Ok(Method::Trilinear),
            "cubic" => Ok(Method::Cubic),
            _ => Err(Error::Spec(format!("unknown method `{s}` (expected trilinear or cubic)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Trilinear => "trilinear",
            Method::Cubic => "cubic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleSpec {
    /// (F, H, W)
    pub target: [usize; 3],
    pub method: Method,
}

impl ResampleSpec {
    pub fn new(target: [usize; 3], method: Method) -> Result<Self> {
        if target.contains(&0) {
            return Err(Error::Spec(format!("zero target dimension in {target:?}")));
        }
        Ok(Self { target, method })
    }
}

/// Keys cubic convolution weight for distance `x`.
fn cubic_weight(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Source taps and weights for every output position on one axis.
fn axis_taps(n_in: usize, n_out: usize, method: Method) -> Vec<Vec<(usize, f64)>> {
    (0..n_out)
        .map(|d| {
            if n_in == 1 {
                return vec![(0, 1.0)];
            }
            let s = if n_out > 1 {
                (d * (n_in - 1)) as f64 / (n_out - 1) as f64
            } else {
                0.0
            };
            let base = s.floor();
            let t = s - base;
            let base = base as isize;
            let last = (n_in - 1) as isize;
            let clamp = |i: isize| i.clamp(0, last) as usize;
            match method {
                Method::Trilinear => {
                    if t == 0.0 {
                        vec![(clamp(base), 1.0)]
                    } else {
                        vec![(clamp(base), 1.0 - t), (clamp(base + 1), t)]
                    }
                }
                Method::Cubic => (-1..=2)
                    .map(|k| (clamp(base + k), cubic_weight(t - k as f64)))
                    .collect(),
            }
        })
        .collect()
}

/// Resamples one axis (0 = frame, 1 = height, 2 = width) to `n_out`.
fn resample_axis(vol: &Volume, axis: usize, n_out: usize, method: Method) -> Volume {
    let dims = vol.dims();
    let taps = axis_taps(dims[axis], n_out, method);
    let mut out_dims = dims;
    out_dims[axis] = n_out;
    let src = vol.data();
    let strides = [dims[1] * dims[2], dims[2], 1];
    Volume::from_fn(out_dims, |f, h, w| {
        let mut idx = [f, h, w];
        let pos = idx[axis];
        idx[axis] = 0;
        let base = idx[0] * strides[0] + idx[1] * strides[1] + idx[2] * strides[2];
        taps[pos]
            .iter()
            .map(|&(i, wt)| wt * src[base + i * strides[axis]])
            .sum()
    })
}

/// Applies the separable passes in the given axis order.
pub fn resample_volume_in_order(vol: &Volume, spec: &ResampleSpec, order: [usize; 3]) -> Volume {
    order
        .iter()
        .fold(vol.clone(), |v, &axis| resample_axis(&v, axis, spec.target[axis], spec.method))
}

pub fn resample_volume(vol: &Volume, spec: &ResampleSpec) -> Volume {
    resample_volume_in_order(vol, spec, [0, 1, 2])
}

/// Brings a tube to video resolution; the normalized volume is recomputed
/// from the resampled raw volume.
pub fn upsample(tube: &SaliencyTube, spec: &ResampleSpec) -> Result<SaliencyTube> {
    ResampleSpec::new(spec.target, spec.method)?;
    let raw = resample_volume(&tube.raw, spec);
    let resized = SaliencyTube::new(tube.class_index, raw, Resolution::Video);
    Ok(normalize_tube(&resized))
}

/// Mean of the tube over (height, width) for each frame.
pub fn temporal_marginal(tube: &SaliencyTube) -> Vec<f64> {
    let [frames, h, w] = tube.raw.dims();
    let n = (h * w) as f64;
    (0..frames)
        .map(|f| tube.raw.frame(f).iter().sum::<f64>() / n)
        .collect()
}
