//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use image::codecs::gif::GifDecoder;
use image::AnimationDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use saliency_tubes::manifest::write_bundle;
use saliency_tubes::refnet::{make_seeded, seeded_clip, NetDims, PlantedBlob};
use saliency_tubes::resample::resample_volume;
use saliency_tubes::selftest::{fixture_frames, rel_err};
use saliency_tubes::{
    cam2d_per_frame, compute_tube, encode_npy, load_frames, load_manifest, normalize_tube, parse_npy, read_npy,
    render_sequence, temporal_marginal, upsample, write_npy, ActivationVolume, AxisOrder, ClassifierWeights,
    DenseTensor, Error, Method, RenderConfig, ResampleSpec, SaliencyTube, TauPolicy, Volume,
};

use common::{code, run, s};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_acts(rng: &mut ChaCha8Rng, dims: [usize; 4], lo: f64, hi: f64) -> ActivationVolume {
    let n = dims.iter().product();
    ActivationVolume::new(dims, (0..n).map(|_| uniform(rng, lo, hi)).collect()).unwrap()
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize, d: usize) -> ClassifierWeights {
    ClassifierWeights::new(n, d, (0..n * d).map(|_| uniform(rng, -1.0, 1.0)).collect()).unwrap()
}

fn random_volume(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Volume {
    Volume::from_fn(dims, |_, _, _| uniform(rng, -5.0, 5.0))
}

/// Independent selection rule: threshold by hand, or sort for top-k.
fn oracle_keep(row: &[f64], policy: TauPolicy) -> Vec<usize> {
    let at_least = |tau: f64| (0..row.len()).filter(|&j| row[j] >= tau).collect::<Vec<_>>();
    match policy {
        TauPolicy::NonNeg => at_least(0.0),
        TauPolicy::Absolute(t) => at_least(t),
        TauPolicy::Percentile(p) => {
            let mut v = row.to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rank = p / 100.0 * (v.len() - 1) as f64;
            let (i, t) = (rank.floor() as usize, rank.fract());
            let tau = if i + 1 < v.len() { v[i] * (1.0 - t) + v[i + 1] * t } else { v[i] };
            at_least(tau)
        }
        TauPolicy::TopK(k) => {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
            let mut keep = idx[..k].to_vec();
            keep.sort();
            keep
        }
    }
}

fn brute_force() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut tubes, mut worst, mut empty) = (0, 0.0f64, 0);
    for _ in 0..100 {
        let dims = [rng.random_range(1..=4), rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=8)];
        let n = rng.random_range(1..=5);
        let acts = random_acts(&mut rng, dims, -1.0, 3.0);
        let weights = random_weights(&mut rng, n, dims[3]);
        let policy = match rng.random_range(0..4) {
            0 => TauPolicy::NonNeg,
            1 => TauPolicy::Absolute(uniform(&mut rng, -0.5, 0.5)),
            2 => TauPolicy::Percentile(uniform(&mut rng, 0.0, 100.0)),
            _ => TauPolicy::TopK(rng.random_range(1..=dims[3])),
        };
        for class in 0..n {
            let row = weights.row(class).unwrap();
            let keep = oracle_keep(row, policy);
            let (selection, tube) = match compute_tube(&acts, &weights, class, policy) {
                Err(Error::EmptySelection { .. }) => {
                    ensure!(keep.is_empty(), "engine found no features but oracle kept {keep:?}");
                    empty += 1;
                    continue;
                }
                other => other.map_err(|e| e.to_string())?,
            };
            ensure!(selection.selected == keep, "selection {:?} vs oracle {keep:?}", selection.selected);
            let [f, h, w, d] = dims;
            for fi in 0..f {
                for hi in 0..h {
                    for wi in 0..w {
                        let mut expect = 0.0;
                        for &j in &keep {
                            expect += row[j] * acts.data()[((fi * h + hi) * w + wi) * d + j];
                        }
                        worst = worst.max(rel_err(tube.raw.get(fi, hi, wi), expect));
                    }
                }
            }
            tubes += 1;
        }
    }
    ensure!(worst <= 1e-9, "max relative error {worst:e}");
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "{tubes} class tubes over 100 cases ({empty} empty selections agreed), max rel err {worst:.1e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn cam_gap() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for seed in 0..20u64 {
        let dims = NetDims {
            in_channels: 3,
            layers: vec![(6, [3, 3, 3]), (5 + (seed as usize % 4), [1, 3, 3])],
            classes: 4,
        };
        let net = make_seeded(1000 + seed, &dims).map_err(|e| e.to_string())?;
        let clip = seeded_clip(2000 + seed, [4 + seed as usize % 3, 6, 5, 3]).map_err(|e| e.to_string())?;
        let fwd = net.forward(&clip).map_err(|e| e.to_string())?;
        let head = net.head();
        let d = fwd.activations.channels();
        let voxels = fwd.activations.grid().iter().product::<usize>() as f64;
        for class in 0..head.classes() {
            let (_, tube) =
                compute_tube(&fwd.activations, head, class, TauPolicy::TopK(d)).map_err(|e| e.to_string())?;
            let expect = voxels * (fwd.logits[class] - head.bias().map_or(0.0, |b| b[class]));
            worst = worst.max(rel_err(tube.raw.sum(), expect));
            checks += 1;
        }
    }
    ensure!(worst <= 1e-6, "max relative error {worst:e}");
    within(start.elapsed(), 10.0)?;
    Ok(format!("{checks} (net, class) pairs, max rel err {worst:.1e}, {:.2}s", start.elapsed().as_secs_f64()))
}

fn scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..50 {
        let dims = [rng.random_range(2..=4), rng.random_range(2..=6), rng.random_range(2..=6), rng.random_range(2..=8)];
        let acts = random_acts(&mut rng, dims, 0.0, 2.0);
        let weights = random_weights(&mut rng, 3, dims[3]);
        let spec = ResampleSpec::new([dims[0] * 2, dims[1] * 5, dims[2] * 5], Method::Cubic).unwrap();
        for class in 0..3 {
            let base = match compute_tube(&acts, &weights, class, TauPolicy::NonNeg) {
                Err(Error::EmptySelection { .. }) => continue,
                other => other.map_err(|e| e.to_string())?.1,
            };
            let base_norm = normalize_tube(&base);
            let base_video = upsample(&base, &spec).map_err(|e| e.to_string())?;
            for c in [0.1, 1.0, 7.3] {
                let row: Vec<f64> = weights.row(class).unwrap().iter().map(|y| y * c).collect();
                let scaled_w = weights.with_row(class, &row).map_err(|e| e.to_string())?;
                let (_, tube) = compute_tube(&acts, &scaled_w, class, TauPolicy::NonNeg).map_err(|e| e.to_string())?;
                ensure!(
                    tube.raw.argmax() == base.raw.argmax(),
                    "argmax moved under c={c}: {:?} vs {:?}",
                    tube.raw.argmax(),
                    base.raw.argmax()
                );
                let video = upsample(&tube, &spec).map_err(|e| e.to_string())?;
                ensure!(video.raw.argmax() == base_video.raw.argmax(), "video argmax moved under c={c}");
                let pairs = [(normalize_tube(&tube), &base_norm), (video, &base_video)];
                for (a, b) in &pairs {
                    let (a, b) = (a.normalized.as_ref().unwrap(), b.normalized.as_ref().unwrap());
                    for (x, y) in a.data().iter().zip(b.data()) {
                        worst = worst.max((x - y).abs());
                    }
                }
                cases += 1;
            }
        }
    }
    ensure!(worst <= 1e-12, "normalized tube moved by {worst:e}");
    Ok(format!("{cases} scaled tubes, argmax identical, max normalized diff {worst:.1e}"))
}

fn exclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cases = 0;
    for _ in 0..50 {
        let dims = [rng.random_range(1..=4), rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(2..=8)];
        let acts = random_acts(&mut rng, dims, -1.0, 1.0);
        let weights = random_weights(&mut rng, 2, dims[3]);
        let policy = TauPolicy::TopK(rng.random_range(1..dims[3]));
        let (selection, base) = compute_tube(&acts, &weights, 0, policy).map_err(|e| e.to_string())?;
        let mut data = acts.data().to_vec();
        for (i, v) in data.iter_mut().enumerate() {
            if !selection.contains(i % dims[3]) {
                *v = match rng.random_range(0..3) {
                    0 => uniform(&mut rng, -1e9, 1e9),
                    1 => 0.0,
                    _ => -*v * 1e3,
                };
            }
        }
        let perturbed = ActivationVolume::new(dims, data).unwrap();
        let (_, tube) = compute_tube(&perturbed, &weights, 0, policy).map_err(|e| e.to_string())?;
        let same = tube.raw.data().iter().zip(base.raw.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure!(same, "raw tube changed after perturbing excluded channels");
        cases += 1;
    }
    Ok(format!("{cases} perturbed volumes, raw tubes bit-identical"))
}

fn resampling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut const_err, mut ramp_err, mut lin_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..40 {
        let src = [rng.random_range(1..=5), rng.random_range(1..=7), rng.random_range(1..=7)];
        let dst = [rng.random_range(1..=12), rng.random_range(1..=20), rng.random_range(1..=20)];
        for method in [Method::Trilinear, Method::Cubic] {
            let spec = ResampleSpec::new(dst, method).unwrap();

            let c = uniform(&mut rng, -10.0, 10.0);
            let out = resample_volume(&Volume::from_fn(src, |_, _, _| c), &spec);
            const_err = out.data().iter().fold(const_err, |m, v| m.max((v - c).abs()));

            let x = random_volume(&mut rng, src);
            let out = resample_volume(&x, &spec);
            // output corners sample source corners; a length-1 output axis sits at 0
            let corner = |d: usize, n_src: usize| if d == 0 { 0 } else { n_src - 1 };
            for fd in [0, dst[0] - 1] {
                for hd in [0, dst[1] - 1] {
                    for wd in [0, dst[2] - 1] {
                        let v_src = x.get(corner(fd, src[0]), corner(hd, src[1]), corner(wd, src[2]));
                        ensure!(
                            out.get(fd, hd, wd).to_bits() == v_src.to_bits(),
                            "{method} corner ({fd},{hd},{wd}) = {} expected {v_src}",
                            out.get(fd, hd, wd)
                        );
                    }
                }
            }

            let y = random_volume(&mut rng, src);
            let (a, b) = (uniform(&mut rng, -3.0, 3.0), uniform(&mut rng, -3.0, 3.0));
            let combo = Volume::from_fn(src, |f, h, w| a * x.get(f, h, w) + b * y.get(f, h, w));
            let (rx, ry, rc) = (out, resample_volume(&y, &spec), resample_volume(&combo, &spec));
            for i in 0..rc.data().len() {
                let expect = a * rx.data()[i] + b * ry.data()[i];
                lin_err = lin_err.max((rc.data()[i] - expect).abs());
            }
        }

        // trilinear on an affine field reproduces the field at mapped coordinates
        let coef = [uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0), uniform(&mut rng, -2.0, 2.0)];
        let offset = uniform(&mut rng, -5.0, 5.0);
        let ramp = Volume::from_fn(src, |f, h, w| offset + coef[0] * f as f64 + coef[1] * h as f64 + coef[2] * w as f64);
        let out = resample_volume(&ramp, &ResampleSpec::new(dst, Method::Trilinear).unwrap());
        let map = |i: usize, n_in: usize, n_out: usize| {
            if n_in == 1 || n_out == 1 {
                0.0
            } else {
                i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64
            }
        };
        for f in 0..dst[0] {
            for h in 0..dst[1] {
                for w in 0..dst[2] {
                    let expect = offset
                        + coef[0] * map(f, src[0], dst[0])
                        + coef[1] * map(h, src[1], dst[1])
                        + coef[2] * map(w, src[2], dst[2]);
                    ramp_err = ramp_err.max((out.get(f, h, w) - expect).abs());
                }
            }
        }
    }
    ensure!(const_err <= 1e-12, "constant field drifted by {const_err:e}");
    ensure!(ramp_err <= 1e-12, "trilinear ramp off by {ramp_err:e}");
    ensure!(lin_err <= 1e-10, "linearity violated by {lin_err:e}");
    Ok(format!(
        "constant err {const_err:.1e}, corners exact, ramp err {ramp_err:.1e}, linearity err {lin_err:.1e}"
    ))
}

const BLOB_VIDEO: [usize; 3] = [16, 64, 64];

/// The planted-blob clip taken through network, bundle files, manifest load,
/// tube computation and cubic upsampling.
fn blob_tube(dir: &Path) -> Result<(PlantedBlob, SaliencyTube), String> {
    let blob = PlantedBlob::new(7).map_err(|e| e.to_string())?;
    let fwd = blob.net.forward(&blob.clip).map_err(|e| e.to_string())?;
    let order: AxisOrder = "DFHW".parse().unwrap();
    let manifest_path = write_bundle(dir, &fwd.activations, order, blob.net.head(), None, Some(BLOB_VIDEO))
        .map_err(|e| e.to_string())?;
    let manifest = load_manifest(&manifest_path).map_err(|e| e.to_string())?;
    let (acts, weights) = manifest.load_inputs().map_err(|e| e.to_string())?;
    let (_, tube) = compute_tube(&acts, &weights, 0, TauPolicy::NonNeg).map_err(|e| e.to_string())?;
    let spec = ResampleSpec::new(manifest.video_dims.unwrap(), Method::Cubic).unwrap();
    Ok((blob, upsample(&tube, &spec).map_err(|e| e.to_string())?))
}

fn planted_blob() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (blob, tube) = blob_tube(dir.path())?;
    let [nf, nh, nw] = PlantedBlob::GRID;
    // video coordinate of activation index i under align-corners, and one upsampled cell
    let scale = |n_act: usize, n_vid: usize| (n_vid - 1) as f64 / (n_act - 1) as f64;
    let (sf, sh, sw) = (scale(nf, BLOB_VIDEO[0]), scale(nh, BLOB_VIDEO[1]), scale(nw, BLOB_VIDEO[2]));
    let support = |lo: usize, hi: usize, s: f64, i: usize| {
        let (a, b) = ((lo as f64 - 0.5) * s - s, (hi as f64 + 0.5) * s + s);
        (a..=b).contains(&(i as f64))
    };
    let [af, ah, aw] = tube.raw.argmax();
    let inside = support(blob.frames.0, blob.frames.1, sf, af)
        && support(blob.cell.0, blob.cell.0, sh, ah)
        && support(blob.cell.1, blob.cell.1, sw, aw);
    ensure!(inside, "argmax {:?} outside the dilated blob support", [af, ah, aw]);
    let marginal = temporal_marginal(&tube);
    let peak = (0..marginal.len()).fold(0, |best, f| if marginal[f] > marginal[best] { f } else { best });
    ensure!((5..=8).contains(&peak), "temporal marginal peaks at frame {peak}");
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "argmax {:?} at video {:?}, marginal peak frame {peak}, {:.2}s",
        [af, ah, aw],
        BLOB_VIDEO,
        start.elapsed().as_secs_f64()
    ))
}

fn time_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let [h, w, d] = [rng.random_range(2..=6), rng.random_range(2..=6), rng.random_range(1..=8)];
        let frames = rng.random_range(2..=8);
        let frame = random_acts(&mut rng, [1, h, w, d], 0.0, 2.0);
        let replicated = ActivationVolume::new([frames, h, w, d], frame.data().repeat(frames)).unwrap();
        let weights = random_weights(&mut rng, 2, d);
        let policy = TauPolicy::TopK(d);
        let (_, tube3d) = compute_tube(&replicated, &weights, 0, policy).map_err(|e| e.to_string())?;
        let tube2d = cam2d_per_frame(&vec![frame; frames], &weights, 0, policy).map_err(|e| e.to_string())?;
        let spec = ResampleSpec::new([frames * 3, h * 4, w * 4], Method::Cubic).unwrap();
        for t in [tube3d.clone(), tube2d, upsample(&tube3d, &spec).map_err(|e| e.to_string())?] {
            let m = temporal_marginal(&t);
            let scale = m[0].abs().max(1.0);
            worst = m.iter().fold(worst, |acc, v| acc.max((v - m[0]).abs() / scale));
        }
    }
    ensure!(worst <= 1e-12, "replicated marginal varies by {worst:e}");

    let dir = tempfile::tempdir().unwrap();
    let (_, blob) = blob_tube(dir.path())?;
    let m = temporal_marginal(&blob);
    let mean = m.iter().sum::<f64>() / m.len() as f64;
    let peak = m.iter().cloned().fold(f64::MIN, f64::max);
    let ratio = peak / mean;
    ensure!(ratio > 2.0, "blob peak-to-mean ratio {ratio:.3} not above 2");
    Ok(format!("replicated marginal spread {worst:.1e}; blob peak/mean {ratio:.2}"))
}

fn digest_files(paths: &[std::path::PathBuf]) -> Vec<Vec<u8>> {
    paths.iter().map(|p| Sha256::digest(fs::read(p).unwrap()).to_vec()).collect()
}

fn formats() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scratch = tempfile::tempdir().unwrap();
    for i in 0..1000 {
        let rank = rng.random_range(1..=4);
        let shape: Vec<usize> = (0..rank).map(|_| rng.random_range(1..=6)).collect();
        let n = shape.iter().product();
        // arbitrary finite bit patterns, including subnormals and -0.0
        let data: Vec<f64> = std::iter::repeat_with(|| f64::from_bits(rng.random::<u64>()))
            .filter(|v| v.is_finite())
            .take(n)
            .collect();
        let t = DenseTensor::new(shape, data).map_err(|e| e.to_string())?;
        let back = if i % 10 == 0 {
            let p = scratch.path().join("t.npy");
            write_npy(&t, &p).map_err(|e| e.to_string())?;
            read_npy(&p).map_err(|e| e.to_string())?
        } else {
            parse_npy(&encode_npy(&t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?
        };
        ensure!(back.shape() == t.shape(), "shape changed on case {i}");
        let exact = back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure!(exact, "payload changed on case {i}");
    }

    let dir = tempfile::tempdir().unwrap();
    let frames_dir = dir.path().join("frames");
    fs::create_dir(&frames_dir).unwrap();
    for (k, img) in fixture_frames(BLOB_VIDEO).iter().enumerate() {
        img.save(frames_dir.join(format!("{k:04}.png"))).unwrap();
    }
    let seq = load_frames(&frames_dir).map_err(|e| e.to_string())?;
    let (_, tube) = blob_tube(&dir.path().join("bundle"))?;
    let mut digests = Vec::new();
    for run_no in 0..2 {
        let out = dir.path().join(format!("out{run_no}"));
        let gif = out.join("tube.gif");
        let written =
            render_sequence(&seq, &tube, &RenderConfig::default(), &out, Some(&gif)).map_err(|e| e.to_string())?;
        let pngs: Vec<_> = written.iter().filter(|p| p.extension().is_some_and(|e| e == "png")).collect();
        ensure!(pngs.len() == BLOB_VIDEO[0], "{} PNGs written", pngs.len());
        for p in &pngs {
            let img = image::open(p).map_err(|e| e.to_string())?;
            ensure!((img.height() as usize, img.width() as usize) == (64, 64), "{} has wrong size", p.display());
        }
        let decoded = GifDecoder::new(std::io::BufReader::new(fs::File::open(&gif).unwrap()))
            .map_err(|e| e.to_string())?
            .into_frames()
            .collect_frames()
            .map_err(|e| e.to_string())?;
        ensure!(decoded.len() == BLOB_VIDEO[0], "GIF has {} frames", decoded.len());
        ensure!(
            decoded.iter().all(|f| f.buffer().dimensions() == (64, 64)),
            "GIF frame size mismatch"
        );
        digests.push(digest_files(&written));
    }
    ensure!(digests[0] == digests[1], "rendering is not byte-identical across runs");
    Ok("1000 NPY round trips bit-exact; 16 PNG + 16-frame GIF at 64x64, identical across runs".into())
}

fn cli_contract() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut expect = |label: &str, args: &[&str], want: i32| -> Result<(), String> {
        let out = run(args);
        let got = code(&out);
        ensure!(got == want, "{label}: exit {got}, expected {want}\n{}", String::from_utf8_lossy(&out.stderr));
        lines.push(format!("{label}={got}"));
        Ok(())
    };

    expect("selftest", &["selftest"], 0)?;

    let fixture = dir.path().join("fixture");
    expect("selftest-fixture", &["selftest", "--fixture", s(&fixture)], 0)?;
    let manifest = fixture.join("manifest.json");
    let tube = dir.path().join("tube.npy");
    expect("compute", &["compute", "--manifest", s(&manifest), "--class-index", "0", "--out", s(&tube)], 0)?;
    let render_out = dir.path().join("render");
    expect(
        "render",
        &["render", "--tube", s(&tube), "--frames", s(&fixture.join("frames")), "--out", s(&render_out)],
        0,
    )?;
    expect(
        "bad-alpha",
        &["render", "--tube", s(&tube), "--frames", s(&fixture.join("frames")), "--alpha", "2", "--out", s(&render_out)],
        1,
    )?;
    expect("missing-class", &["compute", "--manifest", s(&manifest), "--out", s(&tube)], 1)?;
    expect("missing-manifest", &["info", "--manifest", s(&dir.path().join("nope.json"))], 2)?;

    let neg = dir.path().join("negative");
    let acts = ActivationVolume::new([2, 3, 3, 2], vec![1.0; 36]).unwrap();
    let weights = ClassifierWeights::new(1, 2, vec![-0.5, -2.0]).unwrap();
    let neg_manifest = write_bundle(&neg, &acts, AxisOrder::CANONICAL, &weights, None, None).unwrap();
    let neg_out = neg.join("t.npy");
    expect("empty-selection", &["compute", "--manifest", s(&neg_manifest), "--class-index", "0", "--out", s(&neg_out)], 3)?;
    ensure!(!neg_out.exists(), "empty selection left an output behind");

    let acts_path = fixture.join("activations.npy");
    let (shape, mut data) = read_npy(&acts_path).unwrap().into_parts();
    data[0] += 1.0;
    write_npy(&DenseTensor::new(shape, data).unwrap(), &acts_path).unwrap();
    expect("corrupted-fixture", &["selftest", "--fixture", s(&fixture)], 4)?;

    Ok(lines.join(" "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("brute-force equivalence", brute_force),
        ("CAM-GAP identity", cam_gap),
        ("scaling invariance", scaling),
        ("exclusion", exclusion),
        ("resampling", resampling),
        ("planted-blob localization", planted_blob),
        ("2D vs 3D time invariance", time_invariance),
        ("formats", formats),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
