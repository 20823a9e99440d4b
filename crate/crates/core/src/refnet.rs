//! A tiny deterministic 3D CNN: same-padded conv3d + ReLU layers, global
//! average pooling and a linear head.
//!
//! It exists to manufacture activation volumes and classifier weights whose
//! relationship is known exactly, so the tube pipeline can be checked without
//! an external model.
//!
//! # Seeded weights
//!
//! [`make_seeded`] draws every parameter from a SplitMix64 stream:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! uniform = (out >> 11) * 2^-53 * 2 - 1          // in [-1, 1)
//! ```
//!
//! Parameters are drawn in this order: for each conv layer its kernel
//! (D_out, D_in, kF, kH, kW row-major, scaled by `1/sqrt(D_in*kF*kH*kW)`)
//! then its bias (scaled by 0.1); then the head matrix (N x D row-major) and
//! the head bias.

use crate::error::{Error, Result};
use crate::tensor::{ActivationVolume, ClassifierWeights};

/// SplitMix64 pseudo-random stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn next_signed(&mut self) -> f64 {
        self.next_unit() * 2.0 - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv3dLayer {
    out_channels: usize,
    in_channels: usize,
    /// (kF, kH, kW), all odd.
    kernel: [usize; 3],
    /// D_out x D_in x kF x kH x kW, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Conv3dLayer {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel: [usize; 3],
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if kernel.iter().any(|k| k % 2 == 0) {
            return Err(Error::Shape(format!("kernel extents {kernel:?} must be odd")));
        }
        if out_channels == 0 || in_channels == 0 {
            return Err(Error::Shape("conv layer needs at least one channel".into()));
        }
        let n = out_channels * in_channels * kernel.iter().product::<usize>();
        if weights.len() != n || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv layer expects {n} weights and {out_channels} biases, got {} and {}",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            kernel,
            weights,
            bias,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel(&self) -> [usize; 3] {
        self.kernel
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, kf: usize, kh: usize, kw: usize) -> f64 {
        let [nf, nh, nw] = self.kernel;
        self.weights[(((o * self.in_channels + i) * nf + kf) * nh + kh) * nw + kw]
    }
}

/// Same-padded stride-1 cross-correlation plus bias, followed by ReLU.
pub fn conv3d_forward(input: &ActivationVolume, layer: &Conv3dLayer) -> Result<ActivationVolume> {
    if input.channels() != layer.in_channels {
        return Err(Error::Shape(format!(
            "layer expects {} input channels, got {}",
            layer.in_channels,
            input.channels()
        )));
    }
    let [nf, nh, nw] = input.grid();
    let [kf, kh, kw] = layer.kernel;
    let (pf, ph, pw) = ((kf / 2) as isize, (kh / 2) as isize, (kw / 2) as isize);
    let mut out = Vec::with_capacity(nf * nh * nw * layer.out_channels);
    let mut acc = vec![0.0; layer.out_channels];
    for f in 0..nf {
        for h in 0..nh {
            for w in 0..nw {
                acc.copy_from_slice(&layer.bias);
                for df in 0..kf {
                    let sf = f as isize + df as isize - pf;
                    if sf < 0 || sf >= nf as isize {
                        continue;
                    }
                    for dh in 0..kh {
                        let sh = h as isize + dh as isize - ph;
                        if sh < 0 || sh >= nh as isize {
                            continue;
                        }
                        for dw in 0..kw {
                            let sw = w as isize + dw as isize - pw;
                            if sw < 0 || sw >= nw as isize {
                                continue;
                            }
                            let src = input.voxel(sf as usize, sh as usize, sw as usize);
                            for (o, a) in acc.iter_mut().enumerate() {
                                for (i, x) in src.iter().enumerate() {
                                    *a += layer.weight(o, i, df, dh, dw) * x;
                                }
                            }
                        }
                    }
                }
                out.extend(acc.iter().map(|v| v.max(0.0)));
            }
        }
    }
    ActivationVolume::new([nf, nh, nw, layer.out_channels], out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefNet {
    layers: Vec<Conv3dLayer>,
    head: ClassifierWeights,
}

/// Output of [`RefNet::forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub activations: ActivationVolume,
    pub logits: Vec<f64>,
}

impl RefNet {
    pub fn new(layers: Vec<Conv3dLayer>, head: ClassifierWeights) -> Result<Self> {
        let last = layers
            .last()
            .ok_or_else(|| Error::Shape("network needs at least one conv layer".into()))?;
        for pair in layers.windows(2) {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(Error::Shape("consecutive conv layers disagree on channels".into()));
            }
        }
        if head.features() != last.out_channels {
            return Err(Error::Shape(format!(
                "head has {} columns but last conv has {} channels",
                head.features(),
                last.out_channels
            )));
        }
        Ok(Self { layers, head })
    }

    pub fn layers(&self) -> &[Conv3dLayer] {
        &self.layers
    }

    pub fn head(&self) -> &ClassifierWeights {
        &self.head
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn forward(&self, clip: &ActivationVolume) -> Result<Forward> {
        let mut x = conv3d_forward(clip, &self.layers[0])?;
        for layer in &self.layers[1..] {
            x = conv3d_forward(&x, layer)?;
        }
        let gap = x.channel_means();
        let d = self.head.features();
        let logits = (0..self.head.classes())
            .map(|i| {
                let row = &self.head.matrix()[i * d..(i + 1) * d];
                let b = self.head.bias().map_or(0.0, |b| b[i]);
                row.iter().zip(&gap).map(|(y, g)| y * g).sum::<f64>() + b
            })
            .collect();
        Ok(Forward { activations: x, logits })
    }

    /// All parameters in generator order, for hashing and comparison.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out.extend_from_slice(self.head.matrix());
        out.extend_from_slice(self.head.bias().unwrap_or(&[]));
        out
    }
}

/// Architecture of a seeded network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetDims {
    pub in_channels: usize,
    /// (D_out, (kF, kH, kW)) per conv layer.
    pub layers: Vec<(usize, [usize; 3])>,
    pub classes: usize,
}

pub fn make_seeded(seed: u64, dims: &NetDims) -> Result<RefNet> {
    let mut rng = SplitMix64::new(seed);
    let mut layers = Vec::with_capacity(dims.layers.len());
    let mut d_in = dims.in_channels;
    for &(d_out, kernel) in &dims.layers {
        let fan_in = d_in * kernel.iter().product::<usize>();
        let scale = 1.0 / (fan_in as f64).sqrt();
        let weights = (0..d_out * fan_in).map(|_| rng.next_signed() * scale).collect();
        let bias = (0..d_out).map(|_| rng.next_signed() * 0.1).collect();
        layers.push(Conv3dLayer::new(d_out, d_in, kernel, weights, bias)?);
        d_in = d_out;
    }
    let matrix = (0..dims.classes * d_in).map(|_| rng.next_signed()).collect();
    let bias = (0..dims.classes).map(|_| rng.next_signed()).collect();
    let head = ClassifierWeights::new(dims.classes, d_in, matrix)?.with_bias(bias)?;
    RefNet::new(layers, head)
}

/// A non-negative input clip with values uniform in [0, 1).
pub fn seeded_clip(seed: u64, dims: [usize; 4]) -> Result<ActivationVolume> {
    let mut rng = SplitMix64::new(seed);
    let n = dims.iter().product();
    ActivationVolume::new(dims, (0..n).map(|_| rng.next_unit()).collect())
}

/// A clip with a bright cube on a dim noisy background, and a network whose
/// class 0 responds to brightness above the background level.
#[derive(Debug, Clone)]
pub struct PlantedBlob {
    pub net: RefNet,
    pub clip: ActivationVolume,
    /// Inclusive frame range of the cube.
    pub frames: (usize, usize),
    /// Activation cell (h, w) the cube occupies.
    pub cell: (usize, usize),
}

impl PlantedBlob {
    pub const GRID: [usize; 3] = [16, 8, 8];
    pub const BACKGROUND_MAX: f64 = 0.3;

    pub fn new(seed: u64) -> Result<Self> {
        let frames = (5, 8);
        let cell = (3, 5);
        let [nf, nh, nw] = Self::GRID;
        let mut rng = SplitMix64::new(seed);
        let mut data = Vec::with_capacity(nf * nh * nw);
        for f in 0..nf {
            for h in 0..nh {
                for w in 0..nw {
                    let inside = (frames.0..=frames.1).contains(&f) && (h, w) == cell;
                    data.push(if inside { 1.0 } else { rng.next_unit() * Self::BACKGROUND_MAX });
                }
            }
        }
        let clip = ActivationVolume::new([nf, nh, nw, 1], data)?;

        // channel 0: centre tap with a threshold above the background
        // channel 1: 3x3x3 box filter, fires everywhere
        let mut weights = vec![0.0; 2 * 27];
        weights[13] = 1.0;
        for w in &mut weights[27..] {
            *w = 1.0 / 27.0;
        }
        let layer = Conv3dLayer::new(2, 1, [3, 3, 3], weights, vec![-0.5, 0.0])?;
        let head = ClassifierWeights::new(2, 2, vec![1.0, -0.2, -0.3, 1.0])?.with_bias(vec![0.1, -0.1])?;
        Ok(Self {
            net: RefNet::new(vec![layer], head)?,
            clip,
            frames,
            cell,
        })
    }
}
