//! Class-weighted saliency volumes.
//!
//! For a class `i`, every retained channel `j` contributes the map
//! `y[i][j] * a[.., .., .., j]`; the tube is the sum of those maps over the
//! retained channels. Channels rejected by the [`TauPolicy`] never touch the
//! result.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ActivationVolume, ClassifierWeights};
use crate::volume::Volume;

/// Rule deciding which class weights count as informative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPolicy {
    /// Keep `y >= 0`.
    NonNeg,
    /// Keep `y >= tau`.
    Absolute(f64),
    /// Keep `y >= tau` where tau is the given percentile of the class row.
    Percentile(f64),
    /// Keep the `k` largest weights.
    TopK(usize),
}

impl Default for TauPolicy {
    fn default() -> Self {
        TauPolicy::NonNeg
    }
}

impl TauPolicy {
    /// Checks the policy parameters against a row of `features` weights.
    pub fn validate(&self, features: usize) -> Result<()> {
        match *self {
            TauPolicy::NonNeg => Ok(()),
            TauPolicy::Absolute(t) if t.is_finite() => Ok(()),
            TauPolicy::Absolute(t) => Err(Error::Policy(format!("threshold {t} is not finite"))),
            TauPolicy::Percentile(p) if (0.0..=100.0).contains(&p) => Ok(()),
            TauPolicy::Percentile(p) => Err(Error::Policy(format!("percentile {p} not in [0, 100]"))),
            TauPolicy::TopK(k) if k >= 1 && k <= features => Ok(()),
            TauPolicy::TopK(k) => Err(Error::Policy(format!("topk {k} not in [1, {features}]"))),
        }
    }
}

impl FromStr for TauPolicy {
    type Err = Error;

    /// Accepts `nonneg`, `absolute:T`, `percentile:P` and `topk:K`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Policy(format!("`{s}`: {why}"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            let v: f64 = a
                .ok_or_else(|| bad("missing value"))?
                .trim()
                .parse()
                .map_err(|_| bad("value is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad("value is not finite"))
            }
        };
        let policy = match kind {
            "nonneg" if arg.is_none() => TauPolicy::NonNeg,
            "nonneg" => return Err(bad("nonneg takes no value")),
            "absolute" => TauPolicy::Absolute(number(arg)?),
            "percentile" => {
                let p = number(arg)?;
                if !(0.0..=100.0).contains(&p) {
                    return Err(bad("percentile must lie in [0, 100]"));
                }
                TauPolicy::Percentile(p)
            }
            "topk" => {
                let k: usize = arg
                    .ok_or_else(|| bad("missing value"))?
                    .trim()
                    .parse()
                    .map_err(|_| bad("k must be a positive integer"))?;
                if k == 0 {
                    return Err(bad("k must be at least 1"));
                }
                TauPolicy::TopK(k)
            }
            _ => return Err(bad("expected nonneg, absolute:T, percentile:P or topk:K")),
        };
        Ok(policy)
    }
}

impl fmt::Display for TauPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauPolicy::NonNeg => write!(f, "nonneg"),
            TauPolicy::Absolute(t) => write!(f, "absolute:{t}"),
            TauPolicy::Percentile(p) => write!(f, "percentile:{p}"),
            TauPolicy::TopK(k) => write!(f, "topk:{k}"),
        }
    }
}

/// Retained channel indices for one class; the excluded set is the complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSelection {
    pub class_index: usize,
    /// Sorted ascending.
    pub selected: Vec<usize>,
    pub excluded_count: usize,
}

impl FeatureSelection {
    pub fn contains(&self, channel: usize) -> bool {
        self.selected.binary_search(&channel).is_ok()
    }
}

/// Linear-interpolated percentile of `values` (numpy's default method).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Channel indices ordered by weight descending, lower index first on ties.
fn rank_by_weight(row: &[f64], indices: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = indices.into_iter().collect();
    idx.sort_by(|&a, &b| match row[b].partial_cmp(&row[a]) {
        Some(Ordering::Equal) | None => a.cmp(&b),
        Some(o) => o,
    });
    idx
}

pub fn select_features(
    weights: &ClassifierWeights,
    class_index: usize,
    policy: TauPolicy,
) -> Result<FeatureSelection> {
    let row = weights.row(class_index)?;
    policy.validate(row.len())?;
    let keep_at_least = |tau: f64| -> Vec<usize> { (0..row.len()).filter(|&j| row[j] >= tau).collect() };
    let selected = match policy {
        TauPolicy::NonNeg => keep_at_least(0.0),
        TauPolicy::Absolute(tau) => keep_at_least(tau),
        TauPolicy::Percentile(p) => keep_at_least(percentile(row, p)),
        TauPolicy::TopK(k) => {
            let mut top = rank_by_weight(row, 0..row.len());
            top.truncate(k);
            top.sort_unstable();
            top
        }
    };
    if selected.is_empty() {
        return Err(Error::EmptySelection {
            class_index,
            policy: policy.to_string(),
        });
    }
    Ok(FeatureSelection {
        class_index,
        excluded_count: row.len() - selected.len(),
        selected,
    })
}

/// One class-weighted activation map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channel: usize,
    pub weight: f64,
    pub map: Volume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFeatureMaps {
    pub class_index: usize,
    pub maps: Vec<FeatureMap>,
}

pub fn weight_activations(
    acts: &ActivationVolume,
    weights: &ClassifierWeights,
    selection: &FeatureSelection,
) -> Result<WeightedFeatureMaps> {
    if weights.features() != acts.channels() {
        return Err(Error::Shape(format!(
            "weights have {} columns but activations have {} channels",
            weights.features(),
            acts.channels()
        )));
    }
    let row = weights.row(selection.class_index)?;
    if selection.selected.is_empty() {
        return Err(Error::EmptySelection {
            class_index: selection.class_index,
            policy: "<given selection>".into(),
        });
    }
    let grid = acts.grid();
    let maps = selection
        .selected
        .iter()
        .map(|&j| {
            if j >= acts.channels() {
                return Err(Error::Index(format!(
                    "selected channel {j} not in 0..{}",
                    acts.channels()
                )));
            }
            let y = row[j];
            let map = Volume::from_fn(grid, |f, h, w| y * acts.get(f, h, w, j));
            Ok(FeatureMap { channel: j, weight: y, map })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedFeatureMaps {
        class_index: selection.class_index,
        maps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Activation,
    Video,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyTube {
    pub class_index: usize,
    pub raw: Volume,
    pub normalized: Option<Volume>,
    pub resolution: Resolution,
}

impl SaliencyTube {
    pub fn new(class_index: usize, raw: Volume, resolution: Resolution) -> Self {
        Self {
            class_index,
            raw,
            normalized: None,
            resolution,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.raw.dims()
    }
}

pub fn sum_tube(maps: &WeightedFeatureMaps) -> Result<SaliencyTube> {
    let first = maps
        .maps
        .first()
        .ok_or_else(|| Error::EmptySelection {
            class_index: maps.class_index,
            policy: "<given maps>".into(),
        })?;
    let mut raw = Volume::zeros(first.map.dims());
    for m in &maps.maps {
        if m.map.dims() != raw.dims() {
            return Err(Error::Shape("feature maps differ in shape".into()));
        }
        raw.add_scaled(&m.map, 1.0);
    }
    Ok(SaliencyTube::new(maps.class_index, raw, Resolution::Activation))
}

/// The `top_m` highest-weighted features, each as its own tube.
pub fn per_feature_tubes(maps: &WeightedFeatureMaps, top_m: usize) -> Result<Vec<(usize, SaliencyTube)>> {
    if top_m == 0 || top_m > maps.maps.len() {
        return Err(Error::Index(format!(
            "top_m {top_m} not in [1, {}]",
            maps.maps.len()
        )));
    }
    let mut order: Vec<&FeatureMap> = maps.maps.iter().collect();
    order.sort_by(|a, b| match b.weight.partial_cmp(&a.weight) {
        Some(Ordering::Equal) | None => a.channel.cmp(&b.channel),
        Some(o) => o,
    });
    Ok(order
        .into_iter()
        .take(top_m)
        .map(|m| {
            (
                m.channel,
                SaliencyTube::new(maps.class_index, m.map.clone(), Resolution::Activation),
            )
        })
        .collect())
}

/// Global min-max normalization; a constant field maps to all zeros.
pub fn normalize_tube(tube: &SaliencyTube) -> SaliencyTube {
    let (lo, hi) = tube.raw.min_max();
    let range = hi - lo;
    let data = if range > 0.0 {
        tube.raw.data().iter().map(|v| (v - lo) / range).collect()
    } else {
        vec![0.0; tube.raw.data().len()]
    };
    SaliencyTube {
        normalized: Some(Volume::new(tube.raw.dims(), data).expect("same dims as raw")),
        ..tube.clone()
    }
}

/// Selection, weighting and summation in one call.
pub fn compute_tube(
    acts: &ActivationVolume,
    weights: &ClassifierWeights,
    class_index: usize,
    policy: TauPolicy,
) -> Result<(FeatureSelection, SaliencyTube)> {
    let selection = select_features(weights, class_index, policy)?;
    let maps = weight_activations(acts, weights, &selection)?;
    Ok((selection, sum_tube(&maps)?))
}

/// Frame-by-frame variant for 2D per-frame classifiers: each single-frame
/// volume gets its own map, and the maps are stacked along time.
pub fn cam2d_per_frame(
    frame_acts: &[ActivationVolume],
    weights: &ClassifierWeights,
    class_index: usize,
    policy: TauPolicy,
) -> Result<SaliencyTube> {
    let first = frame_acts
        .first()
        .ok_or_else(|| Error::Shape("no frames given".into()))?;
    let [_, h, w, d] = first.dims();
    for (k, fa) in frame_acts.iter().enumerate() {
        if fa.dims() != [1, h, w, d] {
            return Err(Error::Shape(format!(
                "frame {k} has dims {:?}, expected {:?}",
                fa.dims(),
                [1, h, w, d]
            )));
        }
    }
    let selection = select_features(weights, class_index, policy)?;
    let mut data = Vec::with_capacity(frame_acts.len() * h * w);
    for fa in frame_acts {
        let tube = sum_tube(&weight_activations(fa, weights, &selection)?)?;
        data.extend_from_slice(tube.raw.data());
    }
    let raw = Volume::new([frame_acts.len(), h, w], data)?;
    Ok(SaliencyTube::new(class_index, raw, Resolution::Activation))
}

/// Metadata written next to a serialized tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSidecar {
    pub class_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_label: Option<String>,
    pub policy: String,
    pub selected: Vec<usize>,
    pub excluded_count: usize,
    pub resolution_tag: Resolution,
    /// (F, H, W) of the written tube.
    pub shape: [usize; 3],
    /// (F′, H′, W′) of the activations the tube came from.
    pub activation_shape: [usize; 3],
    /// Sum of the raw tube over all voxels at activation resolution.
    pub activation_raw_sum: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_path: Option<String>,
    pub mode: String,
}
