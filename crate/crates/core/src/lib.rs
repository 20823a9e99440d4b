//! Saliency tubes: class-discriminative spatio-temporal saliency volumes for
//! 3D-CNN video classifiers.
//!
//! The pipeline reads final-convolution activations and prediction-layer
//! weights ([`manifest`], [`npy`]), weights and sums the informative channels
//! for one class ([`tube`]), upsamples the result to the clip's resolution
//! ([`resample`]) and draws it over the original frames ([`render`]).
//! [`refnet`] supplies a small deterministic network used as ground truth.

pub mod error;
pub mod manifest;
pub mod npy;
pub mod palette;
pub mod refnet;
pub mod render;
pub mod resample;
pub mod selftest;
pub mod tensor;
pub mod tube;
pub mod volume;

pub use error::{Error, Result};
pub use manifest::{load_manifest, Manifest};
pub use npy::{encode_npy, parse_npy, read_npy, write_npy};
pub use render::{
    jet_color, load_frames, overlay_focus, overlay_heat, render_sequence, FrameSequence, RenderConfig,
    RenderMode,
};
pub use resample::{temporal_marginal, upsample, Method, ResampleSpec};
pub use tensor::{ActivationVolume, AxisOrder, ClassifierWeights, DenseTensor};
pub use tube::{
    cam2d_per_frame, compute_tube, normalize_tube, per_feature_tubes, select_features, sum_tube,
    weight_activations, FeatureSelection, Resolution, SaliencyTube, TauPolicy, TubeSidecar,
    WeightedFeatureMaps,
};
pub use volume::Volume;
