use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use saliency_tubes::TauPolicy;

#[derive(Debug, Parser)]
#[command(name = "saliency-tubes", version, about = "Compute and render saliency tubes for 3D-CNN video classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize the tensors a manifest points at.
    Info {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Compute a class saliency tube from 3D activations.
    Compute(ComputeArgs),
    /// Compute a tube frame by frame, treating every frame as an independent 2D map.
    Cam2d {
        #[command(flatten)]
        compute: ComputeArgs,
        /// Directory of per-frame npy files (one frame each, in the manifest's axis order).
        /// Defaults to slicing the manifest's activations along time.
        #[arg(long)]
        frame_acts: Option<PathBuf>,
    },
    /// Overlay a normalized tube on the original frames.
    Render(RenderArgs),
    /// Run the built-in reference network through the whole pipeline.
    Selftest {
        /// Fixture directory; written first when it holds no manifest.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, conflicts_with = "class_label", required_unless_present = "class_label")]
    pub class_index: Option<usize>,
    #[arg(long)]
    pub class_label: Option<String>,
    /// nonneg, absolute:T, percentile:P or topk:K
    #[arg(long, default_value = "nonneg", value_parser = parse_policy)]
    pub tau_policy: TauPolicy,
    /// Target size F,H,W; defaults to the manifest's video_dims.
    #[arg(long, value_parser = parse_dims)]
    pub upsample: Option<[usize; 3]>,
    #[arg(long, value_enum, default_value_t = MethodArg::Cubic)]
    pub method: MethodArg,
    /// Normalized tube output (.npy); the raw tube and a JSON sidecar are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub tube: PathBuf,
    #[arg(long)]
    pub frames: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Heat)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0.5, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.15, value_parser = parse_floor)]
    pub floor: f64,
    #[arg(long)]
    pub gif: Option<PathBuf>,
    /// GIF frame delay in milliseconds.
    #[arg(long, default_value_t = 100)]
    pub delay_ms: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Trilinear,
    Cubic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Heat,
    Focus,
}

fn parse_policy(s: &str) -> Result<TauPolicy, String> {
    s.parse().map_err(|e: saliency_tubes::Error| e.to_string())
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let dims: Vec<usize> = parts
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| format!("`{p}` is not a positive integer")))
        .collect::<Result<_, _>>()?;
    match dims[..] {
        [f, h, w] if f > 0 && h > 0 && w > 0 => Ok([f, h, w]),
        _ => Err("expected three positive integers F,H,W".into()),
    }
}

fn parse_unit(s: &str, upper_inclusive: bool) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    let ok = v >= 0.0 && if upper_inclusive { v <= 1.0 } else { v < 1.0 };
    if ok {
        Ok(v)
    } else if upper_inclusive {
        Err(format!("{v} not in [0, 1]"))
    } else {
        Err(format!("{v} not in [0, 1)"))
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    parse_unit(s, true)
}

fn parse_floor(s: &str) -> Result<f64, String> {
    parse_unit(s, false)
}
