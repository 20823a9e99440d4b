//! Median-cut colour quantization and GIF assembly.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// A box of distinct colours with their pixel counts.
struct ColorBox {
    colors: Vec<(Rgb, u64)>,
}

impl ColorBox {
    fn channel_range(&self, c: usize) -> u8 {
        let (lo, hi) = self
            .colors
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), (rgb, _)| (lo.min(rgb[c]), hi.max(rgb[c])));
        hi - lo
    }

    fn widest_channel(&self) -> (usize, u8) {
        (0..3)
            .map(|c| (c, self.channel_range(c)))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    fn population(&self) -> u64 {
        self.colors.iter().map(|(_, n)| n).sum()
    }

    /// Splits at the pixel-weighted median of the widest channel.
    fn split(mut self) -> (ColorBox, ColorBox) {
        let (c, _) = self.widest_channel();
        self.colors.sort_by_key(|(rgb, _)| (rgb[c], *rgb));
        let half = self.population() / 2;
        let mut acc = 0;
        let mut cut = 1;
        for (k, (_, n)) in self.colors.iter().enumerate() {
            acc += n;
            if acc >= half {
                cut = k + 1;
                break;
            }
        }
        cut = cut.clamp(1, self.colors.len() - 1);
        let upper = self.colors.split_off(cut);
        (self, ColorBox { colors: upper })
    }

    fn mean(&self) -> Rgb {
        let total = self.population();
        let mut sum = [0u64; 3];
        for (rgb, n) in &self.colors {
            for c in 0..3 {
                sum[c] += rgb[c] as u64 * n;
            }
        }
        sum.map(|s| ((s + total / 2) / total) as u8)
    }
}

/// Builds a palette of at most `max_colors` entries from RGB pixels.
///
/// Boxes are split in order of (population × widest range), which keeps the
/// result deterministic for a given multiset of pixels.
pub fn median_cut(pixels: &[Rgb], max_colors: usize) -> Vec<Rgb> {
    let mut histogram: BTreeMap<Rgb, u64> = BTreeMap::new();
    for p in pixels {
        *histogram.entry(*p).or_default() += 1;
    }
    if histogram.is_empty() || max_colors == 0 {
        return Vec::new();
    }
    let mut boxes = vec![ColorBox {
        colors: histogram.into_iter().collect(),
    }];
    while boxes.len() < max_colors {
        let candidate = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.colors.len() > 1)
            .max_by_key(|(k, b)| (b.population() * b.widest_channel().1 as u64, std::cmp::Reverse(*k)))
            .map(|(k, _)| k);
        let Some(k) = candidate else { break };
        let (a, b) = boxes.remove(k).split();
        boxes.push(a);
        boxes.push(b);
    }
    boxes.iter().map(ColorBox::mean).collect()
}

/// Index of the nearest palette entry in squared RGB distance.
pub fn nearest(palette: &[Rgb], color: Rgb) -> usize {
    let dist = |p: &Rgb| -> u32 {
        (0..3)
            .map(|c| {
                let d = p[c] as i32 - color[c] as i32;
                (d * d) as u32
            })
            .sum()
    };
    let mut best = 0;
    let mut best_d = u32::MAX;
    for (k, p) in palette.iter().enumerate() {
        let d = dist(p);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Writes frames as a looping GIF89a sharing one global median-cut palette.
pub fn write_gif(
    path: &Path,
    frames: &[image::RgbImage],
    delay_ms: u32,
) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Gif("no frames to encode".into()))?;
    let (w, h) = first.dimensions();
    let width = u16::try_from(w).map_err(|_| Error::Gif(format!("width {w} exceeds GIF limit")))?;
    let height = u16::try_from(h).map_err(|_| Error::Gif(format!("height {h} exceeds GIF limit")))?;

    let pixels: Vec<Rgb> = frames.iter().flat_map(|f| f.pixels().map(|p| p.0)).collect();
    let palette = median_cut(&pixels, 256);
    let flat: Vec<u8> = palette.iter().flatten().copied().collect();

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let gif_err = |e: gif::EncodingError| Error::Gif(e.to_string());
    let mut encoder = gif::Encoder::new(BufWriter::new(file), width, height, &flat).map_err(gif_err)?;
    encoder.set_repeat(gif::Repeat::Infinite).map_err(gif_err)?;

    let delay = u16::try_from(delay_ms.div_ceil(10)).unwrap_or(u16::MAX);
    let mut cache: HashMap<Rgb, u8> = HashMap::new();
    for img in frames {
        if img.dimensions() != (w, h) {
            return Err(Error::Shape("GIF frames differ in size".into()));
        }
        let indices: Vec<u8> = img
            .pixels()
            .map(|p| *cache.entry(p.0).or_insert_with(|| nearest(&palette, p.0) as u8))
            .collect();
        let frame = gif::Frame {
            width,
            height,
            delay,
            buffer: indices.into(),
            ..gif::Frame::default()
        };
        encoder.write_frame(&frame).map_err(gif_err)?;
    }
    Ok(())
}
