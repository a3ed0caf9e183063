//! Scene-level grasp synthesis and the two target-query modes.
//!
//! For every detection the shape-class strategy generates object-frame
//! candidates, which are moved into the camera frame, filtered against the
//! other boxes in the scene and ranked by confidence-weighted stability.

use std::collections::BTreeMap;
use std::time::SystemTime;

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::RunConfig;
use crate::filter::{apply_filters_and_rank, FilterThresholds, ProximityField, SceneContext, ScoredGrasp};
use crate::geometry::{sample_obb_surface, Vec3};
use crate::scene::{Scene, SceneError};
use crate::strategies::{strategy_for, to_camera_frame, ShapeClass, StrategyError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("stale grasp index: built for scene `{indexed}`, queried for `{requested}`")]
    StaleIndex { indexed: String, requested: String },
    #[error("object {id}: {source}")]
    Strategy {
        id: u64,
        #[source]
        source: StrategyError,
    },
}

/// Ranked grasps for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectGrasps {
    pub object_id: u64,
    pub label: String,
    pub shape_class: ShapeClass,
    pub grasps: Vec<ScoredGrasp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspSet {
    pub scene_id: String,
    pub objects: Vec<ObjectGrasps>,
    pub warnings: Vec<String>,
}

impl GraspSet {
    pub fn total_grasps(&self) -> usize {
        self.objects.iter().map(|o| o.grasps.len()).sum()
    }

    pub fn for_object(&self, id: u64) -> Option<&ObjectGrasps> {
        self.objects.iter().find(|o| o.object_id == id)
    }
}

/// Per-object PRNG seed.
pub fn object_seed(seed: u64, object_id: u64) -> u64 {
    seed ^ object_id
}

/// Filter thresholds with the scene's measured gravity substituted.
fn scene_thresholds(scene: &Scene, config: &RunConfig) -> FilterThresholds {
    FilterThresholds {
        gravity: scene.gravity.into(),
        ..config.thresholds.clone()
    }
}

fn surface_samples(scene: &Scene, per_box: usize) -> Result<Vec<Vec<Vec3>>, PipelineError> {
    scene
        .objects
        .iter()
        .map(|o| {
            sample_obb_surface(&o.obb, per_box).map_err(|e| PipelineError::Strategy {
                id: o.id,
                source: e.into(),
            })
        })
        .collect()
}

fn grasps_for_object(
    scene: &Scene,
    index: usize,
    samples: &[Vec<Vec3>],
    config: &RunConfig,
    thresholds: &FilterThresholds,
) -> Result<(ObjectGrasps, Vec<String>), PipelineError> {
    let det = &scene.objects[index];
    let mut entry = ObjectGrasps {
        object_id: det.id,
        label: det.label.clone(),
        shape_class: det.shape_class,
        grasps: Vec::new(),
    };
    let generator = match strategy_for(det.shape_class) {
        Ok(g) => g,
        Err(e) => {
            let msg = format!("object {} ({}): {e}", det.id, det.label);
            warn!("{msg}");
            return Ok((entry, vec![msg]));
        }
    };
    let generated = generator(
        &det.obb,
        det.points.as_deref(),
        &config.gripper,
        object_seed(config.seed, det.id),
    )
    .map_err(|source| PipelineError::Strategy { id: det.id, source })?;
    let neighbours: Vec<Vec3> = samples
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != index)
        .flat_map(|(_, s)| s.iter().copied())
        .collect();
    let context = SceneContext::new(
        det.obb,
        det.confidence,
        config.gripper.w_max,
        ProximityField::from_samples(neighbours),
    );
    let candidates = to_camera_frame(&det.obb, &generated.candidates);
    entry.grasps = apply_filters_and_rank(&candidates, &context, thresholds, &config.stability, config.top_k);
    let warnings = generated
        .warnings
        .into_iter()
        .map(|w| format!("object {} ({}): {w}", det.id, det.label))
        .collect();
    Ok((entry, warnings))
}

fn generate_for(
    scene: &Scene,
    config: &RunConfig,
    select: impl Fn(usize) -> bool + Sync,
) -> Result<GraspSet, PipelineError> {
    scene.validate()?;
    config.validate()?;
    let thresholds = scene_thresholds(scene, config);
    let samples = surface_samples(scene, thresholds.surface_samples)?;
    let results: Vec<_> = (0..scene.objects.len())
        .into_par_iter()
        .filter(|i| select(*i))
        .map(|i| grasps_for_object(scene, i, &samples, config, &thresholds))
        .collect::<Result<_, _>>()?;
    let mut set = GraspSet {
        scene_id: scene.scene_id.clone(),
        objects: Vec::with_capacity(results.len()),
        warnings: Vec::new(),
    };
    for (entry, warnings) in results {
        set.objects.push(entry);
        set.warnings.extend(warnings);
    }
    Ok(set)
}

/// Ranked grasps for every object in the scene.
pub fn generate_scene_grasps(scene: &Scene, config: &RunConfig) -> Result<GraspSet, PipelineError> {
    generate_for(scene, config, |_| true)
}

/// Hits for one label query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub label: String,
    pub hits: Vec<ObjectGrasps>,
}

impl QueryResult {
    pub fn found(&self) -> bool {
        !self.hits.is_empty()
    }

    pub fn notice(&self) -> Option<String> {
        (!self.found()).then(|| format!("label `{}` not found in scene", self.label))
    }

    /// Highest-scoring first-ranked grasp across hits; the earlier hit wins ties.
    pub fn best(&self) -> Option<&ScoredGrasp> {
        self.hits
            .iter()
            .filter_map(|h| h.grasps.first())
            .reduce(|a, b| if b.score > a.score { b } else { a })
    }
}

/// Precomputed grasps for a whole scene, keyed by label.
#[derive(Debug, Clone)]
pub struct GraspIndex {
    scene_id: String,
    built_at: SystemTime,
    grasps: GraspSet,
    by_label: BTreeMap<String, Vec<usize>>,
}

impl GraspIndex {
    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn built_at(&self) -> SystemTime {
        self.built_at
    }

    pub fn grasp_set(&self) -> &GraspSet {
        &self.grasps
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.by_label.keys().map(String::as_str)
    }

    /// Lookup only. Errors when `scene_id` differs from the indexed scene.
    pub fn query(&self, scene_id: &str, label: &str) -> Result<QueryResult, PipelineError> {
        if scene_id != self.scene_id {
            return Err(PipelineError::StaleIndex {
                indexed: self.scene_id.clone(),
                requested: scene_id.to_string(),
            });
        }
        let hits = self
            .by_label
            .get(label)
            .map(|idx| idx.iter().map(|&i| self.grasps.objects[i].clone()).collect())
            .unwrap_or_default();
        Ok(QueryResult {
            label: label.to_string(),
            hits,
        })
    }
}

/// Mode 1: generate for every object, then serve queries from the index.
pub fn precompute(scene: &Scene, config: &RunConfig) -> Result<GraspIndex, PipelineError> {
    let grasps = generate_scene_grasps(scene, config)?;
    let mut by_label: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, o) in grasps.objects.iter().enumerate() {
        by_label.entry(o.label.clone()).or_default().push(i);
    }
    Ok(GraspIndex {
        scene_id: scene.scene_id.clone(),
        built_at: SystemTime::now(),
        grasps,
        by_label,
    })
}

/// Mode 2: generate only for objects carrying `label`; all boxes still act
/// as proximity context.
pub fn query_on_demand(scene: &Scene, label: &str, config: &RunConfig) -> Result<QueryResult, PipelineError> {
    let set = generate_for(scene, config, |i| scene.objects[i].label == label)?;
    Ok(QueryResult {
        label: label.to_string(),
        hits: set.objects,
    })
}
