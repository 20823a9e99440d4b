use std::fs;
use std::path::{Path, PathBuf};

use saliency_tubes::manifest::Manifest;
use saliency_tubes::selftest;
use saliency_tubes::{
    cam2d_per_frame, compute_tube, load_frames, load_manifest, normalize_tube, read_npy, render_sequence,
    upsample, write_npy, ActivationVolume, ClassifierWeights, Error, Method, RenderConfig, RenderMode,
    ResampleSpec, Resolution, SaliencyTube, TubeSidecar, Volume,
};

use crate::args::{ComputeArgs, MethodArg, ModeArg, RenderArgs};

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const EMPTY_SELECTION: i32 = 3;
    pub const SELFTEST: i32 = 4;
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Engine(Error),
    Selftest(Vec<String>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Engine(Error::Policy(_)) => exit::USAGE,
            Failure::Engine(Error::EmptySelection { .. }) => exit::EMPTY_SELECTION,
            Failure::Engine(_) => exit::DATA,
            Failure::Selftest(_) => exit::SELFTEST,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Engine(e) => write!(f, "{e}"),
            Failure::Selftest(names) => write!(f, "selftest failed: {}", names.join(", ")),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

/// Tracks files written by a command and deletes them unless committed.
struct Outputs {
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self { written: Vec::new(), committed: false }
    }

    fn track(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

pub fn info(manifest_path: &Path) -> CmdResult {
    let manifest = load_manifest(manifest_path)?;
    let (acts, weights) = manifest.load_inputs()?;
    let [f, h, w, d] = acts.dims();
    println!("manifest:    {}", manifest_path.display());
    println!("axis_order:  {}", manifest.axis_order);
    println!("activations: F'={f} H'={h} W'={w} D'={d}");
    println!("classes:     N={}", weights.classes());
    println!("bias:        {}", if weights.bias().is_some() { "yes" } else { "no" });
    if let Some([vf, vh, vw]) = manifest.video_dims {
        println!("video_dims:  F={vf} H={vh} W={vw}");
    }
    if let Some(dir) = &manifest.frames_dir {
        println!("frames_dir:  {}", dir.display());
    }
    if !weights.labels().is_empty() {
        println!("labels:      {}", weights.labels().join(", "));
    }
    Ok(())
}

fn resolve_class(args: &ComputeArgs, weights: &ClassifierWeights) -> CmdResult<usize> {
    let index = match (&args.class_index, &args.class_label) {
        (Some(i), _) => *i,
        (None, Some(label)) => weights.class_by_label(label)?,
        (None, None) => return Err(Failure::Usage("--class-index or --class-label is required".into())),
    };
    weights.check_class(index)?;
    Ok(index)
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Trilinear => Method::Trilinear,
        MethodArg::Cubic => Method::Cubic,
    }
}

/// `<dir>/<stem>.<suffix>` next to the main output.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("tube");
    out.with_file_name(format!("{stem}.{suffix}"))
}

struct Computed {
    selection: saliency_tubes::FeatureSelection,
    tube: SaliencyTube,
    activation_grid: [usize; 3],
}

fn finish(
    args: &ComputeArgs,
    manifest: &Manifest,
    weights: &ClassifierWeights,
    computed: Computed,
    mode: &str,
) -> CmdResult {
    let Computed { selection, tube, activation_grid } = computed;
    let activation_raw_sum = tube.raw.sum();
    let target = args.upsample.or(manifest.video_dims);
    let (final_tube, method_name) = match target {
        Some(dims) => {
            let spec = ResampleSpec::new(dims, method(args.method))?;
            (upsample(&tube, &spec)?, Some(spec.method.to_string()))
        }
        None => (normalize_tube(&tube), None),
    };
    let normalized = final_tube.normalized.as_ref().expect("normalized above");

    let raw_path = sibling(&args.out, "raw.npy");
    let sidecar_path = sibling(&args.out, "json");
    let sidecar = TubeSidecar {
        class_index: selection.class_index,
        class_label: weights.labels().get(selection.class_index).cloned(),
        policy: args.tau_policy.to_string(),
        selected: selection.selected.clone(),
        excluded_count: selection.excluded_count,
        resolution_tag: final_tube.resolution,
        shape: final_tube.dims(),
        activation_shape: activation_grid,
        activation_raw_sum,
        method: method_name,
        raw_path: raw_path.file_name().map(|n| n.to_string_lossy().into_owned()),
        mode: mode.into(),
    };

    let mut outputs = Outputs::new();
    outputs.track(&args.out);
    write_npy(&normalized.to_tensor()?, &args.out)?;
    outputs.track(&raw_path);
    write_npy(&final_tube.raw.to_tensor()?, &raw_path)?;
    outputs.track(&sidecar_path);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&sidecar_path, text + "\n").map_err(|e| Error::Io { path: sidecar_path.clone(), source: e })?;
    outputs.commit();

    eprintln!(
        "class {} ({} of {} features kept) -> {} {:?}",
        selection.class_index,
        selection.selected.len(),
        selection.selected.len() + selection.excluded_count,
        args.out.display(),
        final_tube.dims()
    );
    Ok(())
}

pub fn compute(args: &ComputeArgs) -> CmdResult {
    let manifest = load_manifest(&args.manifest)?;
    let (acts, weights) = manifest.load_inputs()?;
    let class = resolve_class(args, &weights)?;
    let (selection, tube) = compute_tube(&acts, &weights, class, args.tau_policy)?;
    let computed = Computed { selection, tube, activation_grid: acts.grid() };
    finish(args, &manifest, &weights, computed, "3d")
}

fn load_frame_acts(dir: &Path, manifest: &Manifest) -> CmdResult<Vec<ActivationVolume>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "npy"))
        .collect();
    if paths.is_empty() {
        return Err(Error::EmptyInput(dir.to_path_buf()).into());
    }
    paths.sort();
    paths
        .iter()
        .map(|p| Ok(ActivationVolume::canonicalize(&read_npy(p)?, manifest.axis_order)?))
        .collect()
}

pub fn cam2d(args: &ComputeArgs, frame_acts: Option<&Path>) -> CmdResult {
    let manifest = load_manifest(&args.manifest)?;
    let (frames, weights) = match frame_acts {
        Some(dir) => {
            let weights = manifest.load_weights()?;
            let frames = load_frame_acts(dir, &manifest)?;
            if let Some(bad) = frames.iter().find(|f| f.channels() != weights.features()) {
                return Err(Error::Shape(format!(
                    "frame activations have {} channels but weights have {} columns",
                    bad.channels(),
                    weights.features()
                ))
                .into());
            }
            (frames, weights)
        }
        None => {
            let (acts, weights) = manifest.load_inputs()?;
            ((0..acts.frames()).map(|f| acts.frame(f)).collect(), weights)
        }
    };
    let class = resolve_class(args, &weights)?;
    let selection = saliency_tubes::select_features(&weights, class, args.tau_policy)?;
    let tube = cam2d_per_frame(&frames, &weights, class, args.tau_policy)?;
    let activation_grid = tube.dims();
    finish(args, &manifest, &weights, Computed { selection, tube, activation_grid }, "2d")
}

pub fn render(args: &RenderArgs) -> CmdResult {
    let config = RenderConfig {
        mode: match args.mode {
            ModeArg::Heat => RenderMode::Heat,
            ModeArg::Focus => RenderMode::Focus,
        },
        alpha: args.alpha,
        floor: args.floor,
        gif_delay_ms: args.delay_ms,
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let normalized = Volume::from_tensor(&read_npy(&args.tube)?)?;
    if let Some(v) = normalized.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Data(format!("{} is not a normalized tube (value {v})", args.tube.display())).into());
    }
    let mut tube = SaliencyTube::new(0, normalized.clone(), Resolution::Video);
    tube.normalized = Some(normalized);
    let frames = load_frames(&args.frames)?;
    let written = render_sequence(&frames, &tube, &config, &args.out, args.gif.as_deref())?;
    eprintln!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

pub fn run_selftest(fixture: Option<&Path>) -> CmdResult {
    let scratch;
    let dir = match fixture {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| Error::Io { path: d.to_path_buf(), source: e })?;
            d.to_path_buf()
        }
        None => {
            scratch = tempfile::tempdir().map_err(|e| Error::Io { path: std::env::temp_dir(), source: e })?;
            scratch.path().to_path_buf()
        }
    };
    let report = selftest::run(&dir);
    for check in &report.checks {
        eprintln!("{} {:<22} {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    if report.passed() {
        eprintln!("selftest passed ({} checks)", report.checks.len());
        Ok(())
    } else {
        Err(Failure::Selftest(report.failed().map(|c| c.name.to_string()).collect()))
    }
}
