//! Benchmark: top-k stability of the best-detected objects, gated by the
//! feasibility oracle, summarised per scenario.

use std::collections::BTreeMap;

use boxgrasp_core::pipeline::PipelineError;
use boxgrasp_core::{generate_scene_grasps, Obb, RunConfig, Scene};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::occlude::{is_occluded_id, occluded_variant};
use crate::oracle::{feasibility_oracle, OracleParams};
use crate::synth::{synth_scene_at, SceneSpec, SynthError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Single,
    Multi,
    Occluded,
}

impl Scenario {
    pub fn of(scene: &Scene) -> Self {
        if is_occluded_id(&scene.scene_id) {
            Scenario::Occluded
        } else if scene.objects.len() > 1 {
            Scenario::Multi
        } else {
            Scenario::Single
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::Single => "single",
            Scenario::Multi => "multi",
            Scenario::Occluded => "occluded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub objects_per_scene: usize,
    pub grasps_per_object: usize,
    pub finger_clearance: f64,
    pub finger_thickness: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let oracle = OracleParams::default();
        Self {
            objects_per_scene: 3,
            grasps_per_object: 5,
            finger_clearance: oracle.finger_clearance,
            finger_thickness: oracle.finger_thickness,
        }
    }
}

impl BenchConfig {
    pub fn oracle_params(&self, run: &RunConfig) -> OracleParams {
        OracleParams {
            w_max: run.gripper.w_max,
            th0: run.thresholds.th0,
            finger_clearance: self.finger_clearance,
            finger_thickness: self.finger_thickness,
        }
    }
}

/// Per-scene contribution: one β·M value per grasp slot, zero for empty slots.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSamples {
    pub scene_id: String,
    pub scenario: Scenario,
    pub objects: usize,
    pub feasible: usize,
    pub values: Vec<f64>,
}

/// Up to `n` objects, highest confidence first, lower id on ties.
pub fn select_objects(scene: &Scene, n: usize) -> Vec<u64> {
    let mut ranked: Vec<_> = scene.objects.iter().map(|o| (o.confidence, o.id)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(n).map(|(_, id)| id).collect()
}

pub fn evaluate_scene(scene: &Scene, run: &RunConfig, bench: &BenchConfig) -> Result<SceneSamples, PipelineError> {
    let config = RunConfig {
        top_k: run.top_k.max(bench.grasps_per_object),
        ..run.clone()
    };
    let set = generate_scene_grasps(scene, &config)?;
    let params = bench.oracle_params(run);
    let selected = select_objects(scene, bench.objects_per_scene);
    let mut values = Vec::with_capacity(selected.len() * bench.grasps_per_object);
    let mut feasible = 0;
    for id in &selected {
        let target = scene.object(*id).expect("selected from scene").obb;
        let others: Vec<Obb> = scene.objects.iter().filter(|o| o.id != *id).map(|o| o.obb).collect();
        let grasps = set.for_object(*id).map(|o| o.grasps.as_slice()).unwrap_or(&[]);
        for slot in 0..bench.grasps_per_object {
            let value = match grasps.get(slot) {
                Some(g) => {
                    let verdict = feasibility_oracle(g, &target, &others, &scene.gravity, &params);
                    if verdict.feasible() {
                        feasible += 1;
                    }
                    verdict.beta() * g.stability
                }
                None => 0.0,
            };
            values.push(value);
        }
    }
    Ok(SceneSamples {
        scene_id: scene.scene_id.clone(),
        scenario: Scenario::of(scene),
        objects: selected.len(),
        feasible,
        values,
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_mean(sorted: &[f64]) -> f64 {
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub scenario: Scenario,
    pub scenes: usize,
    pub objects: usize,
    pub slots: usize,
    pub feasible: usize,
    pub mean: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl ScenarioStats {
    fn from_sorted(scenario: Scenario, scenes: usize, objects: usize, feasible: usize, v: &[f64]) -> Self {
        Self {
            scenario,
            scenes,
            objects,
            slots: v.len(),
            feasible,
            mean: sorted_mean(v),
            q05: quantile(v, 0.05),
            q25: quantile(v, 0.25),
            q50: quantile(v, 0.5),
            q75: quantile(v, 0.75),
            q95: quantile(v, 0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedScene {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config_digest: String,
    pub seed: u64,
    pub scenes_evaluated: usize,
    pub scenes_skipped: usize,
    pub skipped: Vec<SkippedScene>,
    /// Mean over every slot of every scenario; `None` when nothing was evaluated.
    pub mean: Option<f64>,
    /// Mean over single- and multi-object slots.
    pub unoccluded_mean: Option<f64>,
    pub scenarios: Vec<ScenarioStats>,
}

fn mean_of(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(sorted_mean(&values))
}

impl BenchReport {
    /// Order-insensitive reduction of per-scene samples.
    pub fn from_samples(run: &RunConfig, samples: Vec<SceneSamples>, mut skipped: Vec<SkippedScene>) -> Self {
        let mut groups: BTreeMap<Scenario, (usize, usize, usize, Vec<f64>)> = BTreeMap::new();
        let scenes_evaluated = samples.len();
        for s in samples {
            let entry = groups.entry(s.scenario).or_default();
            entry.0 += 1;
            entry.1 += s.objects;
            entry.2 += s.feasible;
            entry.3.extend(s.values);
        }
        let mut scenarios = Vec::new();
        let mut all = Vec::new();
        let mut unoccluded = Vec::new();
        for (scenario, (scenes, objects, feasible, mut values)) in groups {
            all.extend_from_slice(&values);
            if scenario != Scenario::Occluded {
                unoccluded.extend_from_slice(&values);
            }
            if values.is_empty() {
                continue;
            }
            values.sort_by(f64::total_cmp);
            scenarios.push(ScenarioStats::from_sorted(scenario, scenes, objects, feasible, &values));
        }
        skipped.sort_by(|a, b| a.source.cmp(&b.source));
        Self {
            config_digest: run.digest(),
            seed: run.seed,
            scenes_evaluated,
            scenes_skipped: skipped.len(),
            skipped,
            mean: mean_of(all),
            unoccluded_mean: mean_of(unoccluded),
            scenarios,
        }
    }

    pub fn scenario(&self, scenario: Scenario) -> Option<&ScenarioStats> {
        self.scenarios.iter().find(|s| s.scenario == scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Quantile table: scenario, q05, q25, q50, q75, q95, mean, n.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "q05", "q25", "q50", "q75", "q95", "mean", "n"])
            .expect("in-memory csv");
        for s in &self.scenarios {
            w.write_record([
                s.scenario.as_str().to_string(),
                s.q05.to_string(),
                s.q25.to_string(),
                s.q50.to_string(),
                s.q75.to_string(),
                s.q95.to_string(),
                s.mean.to_string(),
                s.slots.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

/// Evaluates loaded scenes in parallel; pipeline failures are skipped and listed.
pub fn bench_scenes(scenes: &[Scene], run: &RunConfig, bench: &BenchConfig) -> BenchReport {
    let results: Vec<_> = scenes
        .par_iter()
        .map(|s| evaluate_scene(s, run, bench).map_err(|e| SkippedScene {
            source: s.scene_id.clone(),
            error: e.to_string(),
        }))
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(e) => skipped.push(e),
        }
    }
    BenchReport::from_samples(run, samples, skipped)
}

/// Synthetic scene set: `count` scenes generated from `spec`, plus occluded variants
/// of the first `occluded` of them.
pub fn synth_scene_set(spec: &SceneSpec, count: usize, occluded: usize, fraction: f64) -> Result<Vec<Scene>, SynthError> {
    let base = (0..count).map(|i| synth_scene_at(spec, i)).collect::<Result<Vec<_>, _>>()?;
    let variants: Vec<Scene> = base
        .iter()
        .take(occluded)
        .map(|s| occluded_variant(s, fraction, spec.seed))
        .collect();
    Ok(base.into_iter().chain(variants).collect())
}

pub fn bench(
    spec: &SceneSpec,
    count: usize,
    occluded: usize,
    fraction: f64,
    run: &RunConfig,
    bench: &BenchConfig,
) -> Result<BenchReport, SynthError> {
    Ok(bench_scenes(&synth_scene_set(spec, count, occluded, fraction)?, run, bench))
}
