//! Self-contained end-to-end check built on a seeded reference network.
//!
//! The fixture is written to disk through the same manifest and npy path an
//! exporter uses (activations stored channels-first), then reloaded and
//! checked against the in-memory network.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::manifest::{load_manifest, write_bundle};
use crate::npy::{encode_npy, parse_npy};
use crate::refnet::{make_seeded, seeded_clip, NetDims, RefNet};
use crate::resample::{resample_volume, Method, ResampleSpec};
use crate::tensor::{ActivationVolume, AxisOrder, ClassifierWeights};
use crate::tube::{compute_tube, select_features, TauPolicy};
use crate::volume::Volume;

pub const FIXTURE_SEED: u64 = 42;
/// Input clip of the fixture network, (F′, H′, W′, C).
pub const FIXTURE_CLIP: [usize; 4] = [8, 6, 6, 3];
pub const FIXTURE_VIDEO: [usize; 3] = [16, 48, 48];
pub const FIXTURE_CLASSES: usize = 5;
pub const FIXTURE_FEATURES: usize = 8;
pub const FIXTURE_LAYOUT: &str = "DFHW";

pub fn fixture_dims() -> NetDims {
    NetDims {
        in_channels: FIXTURE_CLIP[3],
        layers: vec![(FIXTURE_FEATURES, [3, 3, 3])],
        classes: FIXTURE_CLASSES,
    }
}

/// The seeded network and its forward pass on the seeded clip.
pub struct Fixture {
    pub net: RefNet,
    pub activations: ActivationVolume,
    pub logits: Vec<f64>,
}

impl Fixture {
    pub fn build() -> Result<Self> {
        let net = make_seeded(FIXTURE_SEED, &fixture_dims())?;
        let clip = seeded_clip(FIXTURE_SEED + 1, FIXTURE_CLIP)?;
        let fwd = net.forward(&clip)?;
        Ok(Self {
            net,
            activations: fwd.activations,
            logits: fwd.logits,
        })
    }

    pub fn labels() -> Vec<String> {
        (0..FIXTURE_CLASSES).map(|i| format!("class_{i}")).collect()
    }

    pub fn weights(&self) -> Result<ClassifierWeights> {
        self.net.head().clone().with_labels(Self::labels())
    }
}

/// Synthetic clip frames: a moving diagonal gradient.
pub fn fixture_frames(dims: [usize; 3]) -> Vec<RgbImage> {
    let [f, h, w] = dims;
    (0..f)
        .map(|k| {
            RgbImage::from_fn(w as u32, h as u32, |x, y| {
                let r = ((x as usize * 5 + k * 7) % 256) as u8;
                let g = ((y as usize * 5 + k * 3) % 256) as u8;
                let b = (((x + y) as usize * 2 + k * 11) % 256) as u8;
                Rgb([r, g, b])
            })
        })
        .collect()
}

/// Writes the fixture manifest, tensors and 16 frames into `dir`.
pub fn emit_fixture(dir: &Path) -> Result<PathBuf> {
    let fixture = Fixture::build()?;
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
    for (k, img) in fixture_frames(FIXTURE_VIDEO).iter().enumerate() {
        let p = frames_dir.join(format!("{k:04}.png"));
        img.save(&p).map_err(|e| Error::Image { path: p.clone(), reason: e.to_string() })?;
    }
    write_bundle(
        dir,
        &fixture.activations,
        FIXTURE_LAYOUT.parse().expect("valid layout"),
        &fixture.weights()?,
        Some(Path::new("frames")),
        Some(FIXTURE_VIDEO),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn record(&mut self, name: &'static str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check { name, passed, detail });
    }
}

/// |a - b| relative to the larger magnitude; zero when both are zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Index-by-index tube computation kept separate from the engine.
pub fn oracle_tube(acts: &ActivationVolume, row: &[f64], keep: &[usize]) -> Vec<f64> {
    let [f, h, w, d] = acts.dims();
    let raw = acts.data();
    let mut out = vec![0.0; f * h * w];
    for (voxel, slot) in out.iter_mut().enumerate() {
        for &j in keep {
            *slot += row[j] * raw[voxel * d + j];
        }
    }
    out
}

/// Runs every check against the fixture in `dir`, emitting it first when the
/// directory holds no manifest.
pub fn run(dir: &Path) -> Report {
    let mut report = Report::default();
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        if let Err(e) = emit_fixture(dir) {
            report.record("fixture-emit", Err(e.to_string()));
            return report;
        }
    }
    let expected = match Fixture::build() {
        Ok(f) => f,
        Err(e) => {
            report.record("fixture-build", Err(e.to_string()));
            return report;
        }
    };

    let loaded = load_manifest(&manifest_path).and_then(|m| m.load_inputs());
    let (acts, weights) = match loaded {
        Ok(v) => {
            report.record("fixture-load", Ok(format!("loaded {:?}", v.0.dims())));
            v
        }
        Err(e) => {
            report.record("fixture-load", Err(e.to_string()));
            return report;
        }
    };

    report.record("fixture-integrity", {
        if acts != expected.activations {
            Err("activations differ from the reference forward pass".into())
        } else if weights.matrix() != expected.net.head().matrix()
            || weights.bias() != expected.net.head().bias()
        {
            Err("classifier weights differ from the seeded head".into())
        } else {
            Ok("activations and weights match the seeded network".into())
        }
    });

    report.record("brute-force", check_brute_force(&acts, &weights));
    report.record("cam-gap", check_cam_gap(&acts, &weights, &expected.logits));
    report.record("exclusion", check_exclusion(&acts, &weights));
    report.record("constant-preservation", check_constant_preservation());
    report.record("npy-roundtrip", check_npy_roundtrip(&acts));
    report
}

fn check_brute_force(acts: &ActivationVolume, weights: &ClassifierWeights) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for class in 0..weights.classes() {
        for policy in [TauPolicy::NonNeg, TauPolicy::TopK(3), TauPolicy::Percentile(50.0)] {
            let (sel, tube) = match compute_tube(acts, weights, class, policy) {
                Ok(v) => v,
                Err(Error::EmptySelection { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            };
            let row = weights.row(class).map_err(|e| e.to_string())?;
            let oracle = oracle_tube(acts, row, &sel.selected);
            for (a, b) in tube.raw.data().iter().zip(&oracle) {
                worst = worst.max(rel_err(*a, *b));
            }
            cases += 1;
        }
    }
    if worst <= 1e-9 {
        Ok(format!("{cases} cases, max relative error {worst:.3e}"))
    } else {
        Err(format!("max relative error {worst:.3e} exceeds 1e-9"))
    }
}

fn check_cam_gap(acts: &ActivationVolume, weights: &ClassifierWeights, logits: &[f64]) -> Result<String, String> {
    let voxels = (acts.frames() * acts.height() * acts.width()) as f64;
    let bias = weights.bias().ok_or("fixture has no bias")?;
    let mut worst = 0.0f64;
    for class in 0..weights.classes() {
        let (_, tube) = compute_tube(acts, weights, class, TauPolicy::TopK(weights.features()))
            .map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(tube.raw.sum(), voxels * (logits[class] - bias[class])));
    }
    if worst <= 1e-6 {
        Ok(format!("{} classes, max relative error {worst:.3e}", weights.classes()))
    } else {
        Err(format!("max relative error {worst:.3e} exceeds 1e-6"))
    }
}

fn check_exclusion(acts: &ActivationVolume, weights: &ClassifierWeights) -> Result<String, String> {
    let mut checked = 0;
    for class in 0..weights.classes() {
        let sel = match select_features(weights, class, TauPolicy::NonNeg) {
            Ok(s) if s.excluded_count > 0 => s,
            _ => continue,
        };
        let (_, base) = compute_tube(acts, weights, class, TauPolicy::NonNeg).map_err(|e| e.to_string())?;
        let [f, h, w, d] = acts.dims();
        let mut data = acts.data().to_vec();
        for (k, v) in data.iter_mut().enumerate() {
            if !sel.contains(k % d) {
                *v = *v * -3.5 + 1e3 + (k % 17) as f64;
            }
        }
        let perturbed = ActivationVolume::new([f, h, w, d], data).map_err(|e| e.to_string())?;
        let (_, after) = compute_tube(&perturbed, weights, class, TauPolicy::NonNeg).map_err(|e| e.to_string())?;
        if after.raw != base.raw {
            return Err(format!("class {class}: perturbing excluded channels changed the tube"));
        }
        checked += 1;
    }
    if checked == 0 {
        Err("no class had excluded channels".into())
    } else {
        Ok(format!("{checked} classes unchanged under perturbation"))
    }
}

fn check_constant_preservation() -> Result<String, String> {
    let c = -2.375;
    let src = Volume::new([3, 4, 5], vec![c; 60]).map_err(|e| e.to_string())?;
    for method in [Method::Trilinear, Method::Cubic] {
        let spec = ResampleSpec::new(FIXTURE_VIDEO, method).map_err(|e| e.to_string())?;
        let out = resample_volume(&src, &spec);
        let worst = out.data().iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(format!("{method}: deviation {worst:.3e} exceeds 1e-12"));
        }
    }
    Ok("trilinear and cubic reproduce constants".into())
}

fn check_npy_roundtrip(acts: &ActivationVolume) -> Result<String, String> {
    let order: AxisOrder = FIXTURE_LAYOUT.parse().expect("valid layout");
    let stored = acts.to_layout(order);
    let bytes = encode_npy(&stored).map_err(|e| e.to_string())?;
    let back = parse_npy(&bytes).map_err(|e| e.to_string())?;
    let same = back.shape() == stored.shape()
        && back.data().iter().zip(stored.data()).all(|(a, b)| a.to_bits() == b.to_bits());
    let canon = ActivationVolume::canonicalize(&back, order).map_err(|e| e.to_string())?;
    if same && &canon == acts {
        Ok(format!("{} bytes, bit-exact", bytes.len()))
    } else {
        Err("round trip altered the tensor".into())
    }
}
