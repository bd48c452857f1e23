//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fsseg_core::align::{bilinear_sample, SuperpixelDescriptor};
use fsseg_core::annotate::{label_frames, read_frames, read_telemetry, AnnotationParams};
use fsseg_core::dasp::{
    compute_density, iterate_clusters, iterate_clusters_observed, poisson_disc_sample, repair_depth, DaspParams,
};
use fsseg_core::eval::{generate_scene, iou, write_scene, SceneSpec, SyntheticScene};
use fsseg_core::features::FeatureGrid;
use fsseg_core::freespace::{init_centers, kmeans, ClusterParams};
use fsseg_core::pipeline::{process_frame, run_maskgen, PipelineConfig};
use fsseg_core::{DepthMap, RgbImage, SuperpixelMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const SCENES: usize = 50;
const SCENE_SEED: u64 = 0;

fn scenes(n: usize, seed: u64) -> Vec<SyntheticScene> {
    SceneSpec::corridor_batch(n, seed)
        .into_iter()
        .map(|(_, spec)| generate_scene(&spec, spec.rng_seed).unwrap())
        .collect()
}

/// Tent-weighted sum over every cell: an interpolation written without
/// locating the surrounding four cells.
fn brute_bilinear(grid: &FeatureGrid, x: f64, y: f64, w: usize, h: usize) -> Vec<f64> {
    let (gw, gh) = (grid.grid_w(), grid.grid_h());
    let u = ((x + 0.5) / w as f64 * gw as f64 - 0.5).max(0.0).min((gw - 1) as f64);
    let v = ((y + 0.5) / h as f64 * gh as f64 - 0.5).max(0.0).min((gh - 1) as f64);
    let mut out = vec![0.0; grid.dim()];
    for j in 0..gh {
        for i in 0..gw {
            let wt = (1.0 - (u - i as f64).abs()).max(0.0) * (1.0 - (v - j as f64).abs()).max(0.0);
            if wt > 0.0 {
                for (o, &c) in out.iter_mut().zip(grid.cell(i, j)) {
                    *o += wt * c as f64;
                }
            }
        }
    }
    out
}

fn bilinear_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (gw, gh, dim) = (rng.random_range(2..=24), rng.random_range(2..=24), rng.random_range(1..=16));
        let data: Vec<f32> = (0..gw * gh * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let grid = FeatureGrid::new(gw, gh, dim, data).unwrap();
        let (w, h) = (rng.random_range(8..=320), rng.random_range(8..=240));
        let (x, y) = (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
        let got = bilinear_sample(&grid, x, y, w, h).unwrap();
        for (a, b) in got.iter().zip(brute_bilinear(&grid, x, y, w, h)) {
            worst = worst.max((*a as f64 - b).abs());
        }
    }
    let took = start.elapsed();
    if worst > 1e-6 {
        return Err(format!("max deviation {worst:.2e}"));
    }
    if took > Duration::from_secs(5) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("1000 pairs, max deviation {worst:.2e}, {took:.2?}"))
}

/// Labels are exactly `0..count`, each a single 4-connected region.
fn check_partition(sp: &SuperpixelMap) -> Result<(), String> {
    let (w, h, n) = (sp.width(), sp.height(), sp.count());
    let labels = sp.labels();
    let mut seen = vec![false; n];
    for &l in labels {
        let l = l as usize;
        if l >= n {
            return Err(format!("label {l} out of range {n}"));
        }
        seen[l] = true;
    }
    if let Some(l) = seen.iter().position(|s| !s) {
        return Err(format!("label {l} unused"));
    }
    let mut visited = vec![false; w * h];
    let mut regions = vec![0usize; n];
    for start in 0..w * h {
        if visited[start] {
            continue;
        }
        let l = labels[start];
        regions[l as usize] += 1;
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut push = |j: usize| {
                if !visited[j] && labels[j] == l {
                    visited[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < w {
                push(i + 1);
            }
            if y > 0 {
                push(i - w);
            }
            if y + 1 < h {
                push(i + w);
            }
        }
    }
    match regions.iter().position(|&r| r != 1) {
        Some(l) => Err(format!("label {l} has {} components", regions[l])),
        None => Ok(()),
    }
}

fn superpixel_invariants() -> Outcome {
    let p = DaspParams::default();
    let mut centers_total = 0;
    for (i, s) in scenes(20, 21).iter().enumerate() {
        let depth = repair_depth(&s.depth).unwrap();
        let rho = compute_density(&depth, &p).unwrap();
        let centers = poisson_disc_sample(&rho, &depth, &s.rgb, p.rng_seed).unwrap();
        for a in 0..centers.len() {
            for b in a + 1..centers.len() {
                let (ca, cb) = (&centers[a], &centers[b]);
                let d = ((ca.x - cb.x).powi(2) + (ca.y - cb.y).powi(2)).sqrt();
                if d < 0.8 * ca.radius.min(cb.radius) {
                    return Err(format!("scene {i}: centers {a},{b} at {d:.3}"));
                }
            }
        }
        centers_total += centers.len();
        let sp = iterate_clusters(&s.rgb, &depth, &centers, &p).unwrap();
        check_partition(&sp).map_err(|e| format!("scene {i}: {e}"))?;
    }
    Ok(format!("20 scenes, {centers_total} centers checked pairwise"))
}

fn random_frame(rng: &mut ChaCha8Rng) -> (RgbImage, DepthMap) {
    let (w, h) = (rng.random_range(24..64), rng.random_range(24..64));
    let rgb: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
    let (a, b) = (rng.random_range(0.5..3.0), rng.random_range(-0.05..0.05));
    let depth: Vec<f32> = (0..w * h)
        .map(|i| (a + b * (i / w) as f64 + rng.random_range(0.0..0.3)) as f32)
        .map(|z| z.max(0.2))
        .collect();
    (RgbImage::new(w, h, rgb).unwrap(), DepthMap::new(w, h, depth).unwrap())
}

fn non_increasing(obj: &[f64]) -> Result<(), String> {
    for (i, pair) in obj.windows(2).enumerate() {
        if pair[1] > pair[0] + 1e-9 {
            return Err(format!("step {}: {} -> {}", i + 1, pair[0], pair[1]));
        }
    }
    Ok(())
}

fn objective_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut steps = 0;
    for f in 0..10 {
        let (img, depth) = random_frame(&mut rng);
        let p = DaspParams {
            target_superpixels: rng.random_range(8..60),
            rng_seed: f,
            ..Default::default()
        };
        let rho = compute_density(&depth, &p).unwrap();
        let centers = poisson_disc_sample(&rho, &depth, &img, p.rng_seed).unwrap();
        let mut obj = Vec::new();
        iterate_clusters_observed(&img, &depth, &centers, &p, |s| obj.push(s.objective)).unwrap();
        non_increasing(&obj).map_err(|e| format!("superpixel fixture {f}: {e}"))?;
        steps += obj.len();
    }
    for f in 0..10 {
        let (n, dim, k) = (rng.random_range(20..200), rng.random_range(1..20), rng.random_range(2..8));
        let descs: Vec<SuperpixelDescriptor> = (0..n)
            .map(|label| SuperpixelDescriptor {
                label,
                feature: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                centroid: (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)),
                mean_depth: rng.random_range(0.5..5.0),
                area: rng.random_range(1..50),
            })
            .collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let p = ClusterParams {
            k,
            rng_seed: f,
            tol: 0.0,
            ..Default::default()
        };
        let init = init_centers(&descs, &weights, k, p.rng_seed).unwrap();
        let a = kmeans(&descs, &init, &p).unwrap();
        non_increasing(&a.objective).map_err(|e| format!("k-means fixture {f}: {e}"))?;
        steps += a.objective.len();
    }
    Ok(format!("20 fixtures, {steps} steps non-increasing"))
}

fn density_law() -> Outcome {
    let (w, h) = (96, 72);
    let depth = DepthMap::from_fn(w, h, |_, y| if y < h / 2 { 2.0 } else { 1.0 }).unwrap();
    let img = RgbImage::filled(w, h, [128, 128, 128]).unwrap();
    let p = DaspParams::default();
    let rho = compute_density(&depth, &p).unwrap();
    let ratio = rho.at(0, h - 1) / rho.at(0, 0);
    if ratio != 4.0 {
        return Err(format!("density ratio {ratio}"));
    }
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let sp = iterate_clusters(
            &img,
            &depth,
            &poisson_disc_sample(&rho, &depth, &img, seed).unwrap(),
            &DaspParams { rng_seed: seed, ..p.clone() },
        )
        .unwrap();
        let (mut sy, mut n) = (vec![0.0f64; sp.count()], vec![0usize; sp.count()]);
        for (i, &l) in sp.labels().iter().enumerate() {
            sy[l as usize] += (i / w) as f64;
            n[l as usize] += 1;
        }
        let deep = (0..sp.count()).filter(|&l| sy[l] / (n[l] as f64) < (h / 2) as f64).count();
        let near = sp.count() - deep;
        ratios.push(deep as f64 / near as f64);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if mean >= 1.0 {
        return Err(format!("deep/near superpixel ratio {mean:.3}"));
    }
    Ok(format!("density 4:1, deep/near superpixel ratio {mean:.3}"))
}

fn mean_iou(batch: &[SyntheticScene], k: usize) -> (f64, f64) {
    let mut cfg = PipelineConfig::default();
    cfg.cluster.k = k;
    let scores: Vec<f64> = batch
        .iter()
        .map(|s| iou(&process_frame(&s.rgb, &s.depth, None, &cfg).unwrap().mask, &s.truth).unwrap())
        .collect();
    (
        scores.iter().sum::<f64>() / scores.len() as f64,
        scores.iter().copied().fold(1.0, f64::min),
    )
}

fn end_to_end(batch: &[SyntheticScene]) -> Outcome {
    let start = Instant::now();
    let (mean, min) = mean_iou(batch, 5);
    let took = start.elapsed();
    let summary = format!("{SCENES} scenes, k=5: mean IoU {mean:.4}, min {min:.4}, {took:.2?}");
    if mean >= 0.75 && min >= 0.40 && took < Duration::from_secs(120) {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn sweep_shape(batch: &[SyntheticScene]) -> Outcome {
    let means: Vec<(usize, f64)> = (2..=8).map(|k| (k, mean_iou(batch, k).0)).collect();
    let (peak_k, peak) = means.iter().copied().fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let last = means.last().unwrap().1;
    let table = means.iter().map(|(k, m)| format!("k{k}={m:.3}")).collect::<Vec<_>>().join(" ");
    if (3..=7).contains(&peak_k) && last < peak {
        Ok(format!("peak at k={peak_k}; {table}"))
    } else {
        Err(format!("peak at k={peak_k}; {table}"))
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn annotation_fixture() -> Outcome {
    let log = read_telemetry(&fixture("telemetry.csv")).map_err(|e| e.to_string())?;
    let frames = read_frames(&fixture("frames.csv")).map_err(|e| e.to_string())?;
    let base = label_frames(&log, &frames, &AnnotationParams::default()).unwrap();
    let (p, u) = (base.positive.len(), base.unlabeled.len());
    if (p, u) != (4, 6) {
        return Err(format!("positive {p}, unlabeled {u}"));
    }
    let relaxed = label_frames(
        &log,
        &frames,
        &AnnotationParams {
            v_thresh: 0.5,
            ..Default::default()
        },
    )
    .unwrap();
    if relaxed.positive.len() < p || !base.positive.iter().all(|id| relaxed.positive.contains(id)) {
        return Err(format!("v_thresh 0.5 gave {:?}", relaxed.positive));
    }
    Ok(format!("positive {p}, unlabeled {u}; v_thresh 0.5 -> {} positive", relaxed.positive.len()))
}

fn maskgen_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    for (id, spec) in SceneSpec::corridor_batch(5, 13) {
        write_scene(&generate_scene(&spec, spec.rng_seed).unwrap(), &input.join(id)).unwrap();
    }
    let run = |out: &Path| {
        let mut cfg = PipelineConfig::default();
        cfg.paths.input = Some(input.clone());
        cfg.paths.output = Some(out.to_path_buf());
        run_maskgen(&cfg).unwrap()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (ra, rb) = (run(&a), run(&b));
    if ra.written.len() != 5 || ra.written != rb.written {
        return Err(format!("written {:?} vs {:?}", ra.written, rb.written));
    }
    for stem in &ra.written {
        let name = format!("{stem}.png");
        if std::fs::read(a.join(&name)).unwrap() != std::fs::read(b.join(&name)).unwrap() {
            return Err(format!("{name} differs"));
        }
    }
    Ok("5 masks byte-identical across runs".into())
}

fn main() {
    let batch = scenes(SCENES, SCENE_SEED);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("bilinear alignment oracle", Box::new(bilinear_oracle)),
        ("superpixel invariants", Box::new(superpixel_invariants)),
        ("objective monotonicity", Box::new(objective_monotonicity)),
        ("density law", Box::new(density_law)),
        ("end-to-end synthetic oracle", Box::new(|| end_to_end(&batch))),
        ("cluster-count sweep shape", Box::new(|| sweep_shape(&batch))),
        ("annotation fixture", Box::new(annotation_fixture)),
        ("maskgen determinism", Box::new(maskgen_determinism)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
