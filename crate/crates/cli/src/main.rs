//! `boxgrasp`: grasp generation, synthetic scenes, benchmarking and PLY export.
//!
//! Exit codes: 0 success, 1 input error, 2 partial result or warning.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use boxgrasp_core::{
    generate_scene_grasps, load_scene, precompute, query_on_demand, save_scene, GraspFile, GraspSet, Mode,
    ObjectGrasps, QueryResult, RunConfig, Scene,
};
use boxgrasp_harness::{bench_scenes, occluded_variant, synth_scene_at, BenchConfig, SceneSpec};
use clap::{Parser, Subcommand};
use log::warn;

const EXIT_INPUT: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

#[derive(Parser)]
#[command(name = "boxgrasp", version, about = "6-DoF parallel-jaw grasps from oriented bounding boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate grasps for a scene, or for labelled targets in it.
    Generate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Target label; repeat to issue several queries in one run.
        #[arg(long)]
        label: Vec<String>,
        /// 1 = precompute then look up, 2 = generate per query.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        mode: Option<u8>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "top-k")]
        top_k: Option<usize>,
    },
    /// Write seeded synthetic tabletop scenes.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Also write an occluded copy of every scene with this fraction of points removed.
        #[arg(long)]
        occlude: Option<f64>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Score a directory of scenes; writes a JSON report and a CSV quantile table.
    Bench {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render boxes and grasps as an ASCII PLY wireframe.
    ExportPly {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        grasps: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn timing(phase: &str, extra: &str, started: Instant) {
    let ms = started.elapsed().as_secs_f64() * 1e3;
    eprintln!("phase={phase}{extra} elapsed_ms={ms:.3}");
}

fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn only_unsupported(scene: &Scene) -> bool {
    !scene.objects.is_empty() && scene.objects.iter().all(|o| !o.shape_class.is_supported())
}

fn report_warnings(set: &GraspSet) {
    for w in &set.warnings {
        warn!("{w}");
    }
}

fn merge_hits(scene: &Scene, results: &[QueryResult]) -> GraspSet {
    let mut objects: Vec<ObjectGrasps> = Vec::new();
    for hit in results.iter().flat_map(|r| &r.hits) {
        if !objects.iter().any(|o| o.object_id == hit.object_id) {
            objects.push(hit.clone());
        }
    }
    GraspSet {
        scene_id: scene.scene_id.clone(),
        objects,
        warnings: Vec::new(),
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    scene: &Path,
    config: &Path,
    out: &Path,
    labels: &[String],
    mode: Option<u8>,
    seed: Option<u64>,
    top_k: Option<usize>,
) -> Result<u8> {
    let started = Instant::now();
    let scene = load_scene(scene).with_context(|| format!("loading scene {}", scene.display()))?;
    let mut config = load_config(config)?;
    if let Some(mode) = mode {
        config.mode = Mode::try_from(mode).map_err(anyhow::Error::msg)?;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(k) = top_k {
        config.top_k = k;
    }
    config.validate().context("validating config")?;
    timing("load", "", started);

    let set = if labels.is_empty() {
        let t = Instant::now();
        let set = generate_scene_grasps(&scene, &config)?;
        timing("generate", "", t);
        report_warnings(&set);
        set
    } else {
        let mut results = Vec::with_capacity(labels.len());
        match config.mode {
            Mode::Precompute => {
                let t = Instant::now();
                let index = precompute(&scene, &config)?;
                timing("precompute", "", t);
                report_warnings(index.grasp_set());
                for label in labels {
                    let t = Instant::now();
                    results.push(index.query(&scene.scene_id, label)?);
                    timing("query", &format!(" label={label:?}"), t);
                }
            }
            Mode::OnDemand => {
                for label in labels {
                    let t = Instant::now();
                    results.push(query_on_demand(&scene, label, &config)?);
                    timing("query", &format!(" label={label:?}"), t);
                }
            }
        }
        for r in &results {
            if let Some(notice) = r.notice() {
                eprintln!("notice: {notice}");
            }
        }
        merge_hits(&scene, &results)
    };

    let t = Instant::now();
    GraspFile::from_grasp_set(&set, config.seed, &config.digest()).save(out)?;
    timing("write", "", t);
    eprintln!("grasps={} objects={}", set.total_grasps(), set.objects.len());
    if only_unsupported(&scene) {
        warn!("scene `{}` contains only unsupported shape classes", scene.scene_id);
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn synth(spec: &Path, n: usize, seed: u64, occlude: Option<f64>, out_dir: &Path) -> Result<u8> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    if let Some(f) = occlude {
        if !(0.0..=1.0).contains(&f) {
            bail!("--occlude must lie in [0, 1], got {f}");
        }
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading spec {}", spec.display()))?;
    let mut spec = SceneSpec::from_json(&text)?;
    spec.seed = seed;

    let started = Instant::now();
    let mut scenes = Vec::with_capacity(n);
    for i in 0..n {
        let scene = synth_scene_at(&spec, i)?;
        if let Some(f) = occlude {
            let variant = occluded_variant(&scene, f, seed);
            scenes.push(scene);
            scenes.push(variant);
        } else {
            scenes.push(scene);
        }
    }
    timing("synth", "", started);
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for scene in &scenes {
        save_scene(scene, &out_dir.join(format!("{}.json", scene.scene_id)))?;
    }
    eprintln!("scenes={}", scenes.len());
    Ok(0)
}

fn bench(dir: &Path, config: &Path, out: &Path) -> Result<u8> {
    let config = load_config(config)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading scene directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no scene files (*.json) in {}", dir.display());
    }

    let started = Instant::now();
    let mut scenes = Vec::with_capacity(paths.len());
    let mut unreadable = Vec::new();
    for p in &paths {
        match load_scene(p) {
            Ok(s) => scenes.push(s),
            Err(e) => {
                warn!("skipping {}: {e}", p.display());
                unreadable.push(boxgrasp_harness::bench::SkippedScene {
                    source: p.display().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    let mut report = bench_scenes(&scenes, &config, &BenchConfig::default());
    report.skipped.extend(unreadable);
    report.skipped.sort_by(|a, b| a.source.cmp(&b.source));
    report.scenes_skipped = report.skipped.len();
    timing("bench", "", started);

    std::fs::write(out, report.to_json()).with_context(|| format!("writing {}", out.display()))?;
    let csv_path = out.with_extension("csv");
    std::fs::write(&csv_path, report.to_csv()).with_context(|| format!("writing {}", csv_path.display()))?;
    eprintln!(
        "scenes_evaluated={} scenes_skipped={} mean={}",
        report.scenes_evaluated,
        report.scenes_skipped,
        report.mean.map_or("none".into(), |m| format!("{m:.6}"))
    );
    if report.scenes_evaluated == 0 {
        bail!("no scene in {} could be evaluated", dir.display());
    }
    Ok(if report.scenes_skipped > 0 { EXIT_PARTIAL } else { 0 })
}

fn export_ply(scene: &Path, grasps: &Path, out: &Path) -> Result<u8> {
    let scene = load_scene(scene).with_context(|| format!("loading scene {}", scene.display()))?;
    let grasps = GraspFile::load(grasps)?;
    boxgrasp_core::export_ply(&scene, &grasps, out)?;
    eprintln!("vertices={} grasps={}", scene.objects.len() * 8 + grasps.grasps.len() * 6, grasps.grasps.len());
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate { scene, config, out, label, mode, seed, top_k } => {
            generate(&scene, &config, &out, &label, mode, seed, top_k)
        }
        Command::Synth { spec, n, seed, occlude, out_dir } => synth(&spec, n, seed, occlude, &out_dir),
        Command::Bench { scenes, config, out } => bench(&scenes, &config, &out),
        Command::ExportPly { scene, grasps, out } => export_ply(&scene, &grasps, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
