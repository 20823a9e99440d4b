//! The run manifest: a small JSON document pointing at exported tensors.
//!
//! ```json
//! {
//!   "version": "1.0",
//!   "activations_path": "activations.npy",
//!   "weights_path": "weights.npy",
//!   "bias_path": "bias.npy",
//!   "axis_order": "DFHW",
//!   "class_labels": ["open", "close"],
//!   "frames_dir": "frames",
//!   "video_dims": [16, 112, 112]
//! }
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::npy::{read_npy, write_npy};
use crate::tensor::{ActivationVolume, AxisOrder, ClassifierWeights};

/// Major format version understood by this build.
pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: String,
    pub activations_path: PathBuf,
    pub weights_path: PathBuf,
    pub bias_path: Option<PathBuf>,
    pub axis_order: AxisOrder,
    pub class_labels: Vec<String>,
    pub frames_dir: Option<PathBuf>,
    /// Original clip size as (F, H, W).
    pub video_dims: Option<[usize; 3]>,
}

impl Manifest {
    /// Parses and validates manifest JSON without touching the filesystem.
    ///
    /// Paths are returned exactly as written.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::manifest("<document>", format!("invalid JSON: {e}")))?;
        let Value::Object(obj) = value else {
            return Err(Error::manifest("<document>", "top level must be an object"));
        };

        let version = required_str(&obj, "version")?;
        if version.split('.').next() != FORMAT_VERSION.split('.').next() {
            return Err(Error::manifest(
                "version",
                format!("unsupported version `{version}`, expected {FORMAT_VERSION}"),
            ));
        }
        let axis_order = required_str(&obj, "axis_order")?
            .parse::<AxisOrder>()
            .map_err(|e| Error::manifest("axis_order", e.to_string()))?;

        let class_labels = match obj.get("class_labels") {
            None => return Err(Error::manifest("class_labels", "missing required field")),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_str().map(str::to_owned))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::manifest("class_labels", "entries must be strings"))?,
            Some(_) => return Err(Error::manifest("class_labels", "must be an array of strings")),
        };

        let video_dims = match obj.get("video_dims") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) if items.len() == 3 => {
                let mut dims = [0usize; 3];
                for (slot, item) in dims.iter_mut().zip(items) {
                    *slot = item
                        .as_u64()
                        .filter(|&d| d > 0)
                        .and_then(|d| usize::try_from(d).ok())
                        .ok_or_else(|| {
                            Error::manifest("video_dims", "entries must be positive integers")
                        })?;
                }
                Some(dims)
            }
            Some(_) => return Err(Error::manifest("video_dims", "must be [F, H, W]")),
        };

        Ok(Manifest {
            version,
            activations_path: required_str(&obj, "activations_path")?.into(),
            weights_path: required_str(&obj, "weights_path")?.into(),
            bias_path: optional_str(&obj, "bias_path")?.map(PathBuf::from),
            axis_order,
            class_labels,
            frames_dir: optional_str(&obj, "frames_dir")?.map(PathBuf::from),
            video_dims,
        })
    }

    /// Resolves relative paths against `base` and checks that they exist.
    pub fn resolve(mut self, base: &Path) -> Result<Self> {
        let check = |field: &'static str, p: &Path| -> Result<PathBuf> {
            let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            if full.exists() {
                Ok(full)
            } else {
                Err(Error::manifest(field, format!("{} does not exist", full.display())))
            }
        };
        self.activations_path = check("activations_path", &self.activations_path)?;
        self.weights_path = check("weights_path", &self.weights_path)?;
        if let Some(p) = self.bias_path.take() {
            self.bias_path = Some(check("bias_path", &p)?);
        }
        if let Some(p) = self.frames_dir.take() {
            self.frames_dir = Some(check("frames_dir", &p)?);
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "version": self.version,
            "activations_path": self.activations_path,
            "weights_path": self.weights_path,
            "axis_order": self.axis_order.to_string(),
            "class_labels": self.class_labels,
        });
        let map = obj.as_object_mut().unwrap();
        if let Some(p) = &self.bias_path {
            map.insert("bias_path".into(), json!(p));
        }
        if let Some(p) = &self.frames_dir {
            map.insert("frames_dir".into(), json!(p));
        }
        if let Some(d) = self.video_dims {
            map.insert("video_dims".into(), json!(d));
        }
        obj
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_json()).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads the activation and weight tensors this manifest points at and
    /// cross-checks their shapes.
    pub fn load_inputs(&self) -> Result<(ActivationVolume, ClassifierWeights)> {
        let acts = ActivationVolume::canonicalize(&read_npy(&self.activations_path)?, self.axis_order)?;
        let weights = self.load_weights()?;
        if weights.features() != acts.channels() {
            return Err(Error::Shape(format!(
                "weights have {} columns but activations have {} channels",
                weights.features(),
                acts.channels()
            )));
        }
        Ok((acts, weights))
    }

    pub fn load_weights(&self) -> Result<ClassifierWeights> {
        let mut weights = ClassifierWeights::from_tensor(&read_npy(&self.weights_path)?)?;
        if let Some(p) = &self.bias_path {
            let bias = read_npy(p)?;
            if bias.rank() != 1 {
                return Err(Error::Shape(format!("bias must be rank 1, got {:?}", bias.shape())));
            }
            weights = weights.with_bias(bias.into_parts().1)?;
        }
        weights.with_labels(self.class_labels.clone())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Manifest::parse(&text)?.resolve(base)
}

/// Writes `acts` (in `order`), `weights` and optional bias next to a new
/// manifest in `dir`, the same layout an exporter produces.
pub fn write_bundle(
    dir: &Path,
    acts: &ActivationVolume,
    order: AxisOrder,
    weights: &ClassifierWeights,
    frames_dir: Option<&Path>,
    video_dims: Option<[usize; 3]>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_npy(&acts.to_layout(order), dir.join("activations.npy"))?;
    write_npy(&weights.to_tensor(), dir.join("weights.npy"))?;
    let bias_path = match weights.bias() {
        Some(b) => {
            let t = crate::tensor::DenseTensor::new(vec![b.len()], b.to_vec())?;
            write_npy(&t, dir.join("bias.npy"))?;
            Some(PathBuf::from("bias.npy"))
        }
        None => None,
    };
    let manifest = Manifest {
        version: FORMAT_VERSION.into(),
        activations_path: "activations.npy".into(),
        weights_path: "weights.npy".into(),
        bias_path,
        axis_order: order,
        class_labels: weights.labels().to_vec(),
        frames_dir: frames_dir.map(Path::to_path_buf),
        video_dims,
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

fn required_str(obj: &Map<String, Value>, field: &'static str) -> Result<String> {
    optional_str(obj, field)?.ok_or_else(|| Error::manifest(field, "missing required field"))
}

fn optional_str(obj: &Map<String, Value>, field: &'static str) -> Result<Option<String>> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if !s.is_empty() => Ok(Some(s.clone())),
        Some(Value::String(_)) => Err(Error::manifest(field, "must not be empty")),
        Some(_) => Err(Error::manifest(field, "must be a string")),
    }
}
