//! Heat-tube and focus-tube overlays on the original clip.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::palette::{write_gif, Rgb};
use crate::tube::SaliencyTube;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    #[default]
    Heat,
    Focus,
}

impl std::str::FromStr for RenderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(RenderMode::Heat),
            "focus" => Ok(RenderMode::Focus),
            _ => Err(Error::Range(format!("unknown render mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub mode: RenderMode,
    /// Heat-map blend weight in [0, 1].
    pub alpha: f64,
    /// Focus-mode brightness floor in [0, 1).
    pub floor: f64,
    pub gif_delay_ms: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            mode: RenderMode::Heat,
            alpha: 0.5,
            floor: 0.15,
            gif_delay_ms: 100,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Range(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.floor) {
            return Err(Error::Range(format!("floor {} not in [0, 1)", self.floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<RgbImage>,
    pub paths: Vec<PathBuf>,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// (height, width) shared by all frames.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.height() as usize, f.width() as usize))
    }
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Jet colormap for `v` in [0, 1].
pub fn jet_color(v: f64) -> Result<Rgb> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Range(format!("colormap input {v} not in [0, 1]")));
    }
    let ch = |center: f64| (1.5 - (4.0 * v - center).abs()).clamp(0.0, 1.0) * 255.0;
    Ok([to_u8(ch(3.0)), to_u8(ch(2.0)), to_u8(ch(1.0))])
}

fn check_slice(frame: &RgbImage, slice: &[f64]) -> Result<()> {
    let n = (frame.width() * frame.height()) as usize;
    if slice.len() != n {
        return Err(Error::Shape(format!(
            "frame has {n} pixels but tube slice has {}",
            slice.len()
        )));
    }
    Ok(())
}

pub fn overlay_heat(frame: &RgbImage, slice: &[f64], alpha: f64) -> Result<RgbImage> {
    check_slice(frame, slice)?;
    let mut out = frame.clone();
    for (px, &t) in out.pixels_mut().zip(slice) {
        let heat = jet_color(t)?;
        for c in 0..3 {
            px.0[c] = to_u8((1.0 - alpha) * px.0[c] as f64 + alpha * heat[c] as f64);
        }
    }
    Ok(out)
}

pub fn overlay_focus(frame: &RgbImage, slice: &[f64], floor: f64) -> Result<RgbImage> {
    check_slice(frame, slice)?;
    let mut out = frame.clone();
    for (px, &t) in out.pixels_mut().zip(slice) {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Range(format!("tube value {t} not in [0, 1]")));
        }
        let gain = floor + (1.0 - floor) * t;
        for c in px.0.iter_mut() {
            *c = to_u8(*c as f64 * gain);
        }
    }
    Ok(out)
}

/// Composites every frame with its tube slice.
pub fn composite(frames: &FrameSequence, tube: &SaliencyTube, config: &RenderConfig) -> Result<Vec<RgbImage>> {
    config.validate()?;
    let norm = tube
        .normalized
        .as_ref()
        .ok_or_else(|| Error::Data("tube has no normalized volume".into()))?;
    let [f, h, w] = norm.dims();
    if f != frames.len() {
        return Err(Error::Shape(format!(
            "tube has {f} frames but the clip has {}",
            frames.len()
        )));
    }
    if frames.dims() != Some((h, w)) {
        return Err(Error::Shape(format!(
            "tube slices are {h}x{w} but frames are {:?}",
            frames.dims()
        )));
    }
    frames
        .frames
        .iter()
        .enumerate()
        .map(|(k, img)| match config.mode {
            RenderMode::Heat => overlay_heat(img, norm.frame(k), config.alpha),
            RenderMode::Focus => overlay_focus(img, norm.frame(k), config.floor),
        })
        .collect()
}

pub fn frame_file_name(k: usize) -> String {
    format!("frame_{k:04}.png")
}

/// Writes `frame_0000.png`... into `out_dir` and, if `gif` is given, an
/// animated GIF. Returns every path written. Nothing is left behind on error.
pub fn render_sequence(
    frames: &FrameSequence,
    tube: &SaliencyTube,
    config: &RenderConfig,
    out_dir: &Path,
    gif: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let composited = composite(frames, tube, config)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::with_capacity(composited.len() + 1);
    let result = (|| {
        for (k, img) in composited.iter().enumerate() {
            let path = out_dir.join(frame_file_name(k));
            written.push(path.clone());
            img.save_with_format(&path, ImageFormat::Png).map_err(|e| Error::Image {
                path: path.clone(),
                reason: e.to_string(),
            })?;
        }
        if let Some(gif_path) = gif {
            written.push(gif_path.to_path_buf());
            write_gif(gif_path, &composited, config.gif_delay_ms)?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            Err(e)
        }
    }
}

/// Loads all PNG/JPEG files in `dir`, sorted by file name.
pub fn load_frames(dir: &Path) -> Result<FrameSequence> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                    .unwrap_or(false)
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::EmptyInput(dir.to_path_buf()));
    }
    paths.sort();
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let img = image::open(p).map_err(|e| Error::Image {
            path: p.clone(),
            reason: e.to_string(),
        })?;
        let rgb = img.to_rgb8();
        if let Some(first) = frames.first() {
            let first: &RgbImage = first;
            if first.dimensions() != rgb.dimensions() {
                return Err(Error::Shape(format!(
                    "{} is {:?} but earlier frames are {:?}",
                    p.display(),
                    rgb.dimensions(),
                    first.dimensions()
                )));
            }
        }
        frames.push(rgb);
    }
    Ok(FrameSequence { frames, paths })
}
