//! Feasibility filters on grasp candidates and the centre-of-gravity
//! stability score used to rank survivors.
//!
//! All four filters use strict inequalities at their thresholds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{obb_corners, sample_obb_surface, GeometryError, Obb, Vec3};
use crate::strategies::GraspCandidate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid filter thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid stability params: alpha = {0} is outside [0, 1]")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// What the table-clearance filter measures the grasp height against.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "level")]
pub enum ClearanceReference {
    /// Lowest corner of the grasped object's own box.
    #[default]
    ObjectBox,
    /// An explicit table plane at this gravity-coordinate.
    TablePlane(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterThresholds {
    /// Upper bound on the cosine distance between approach and gravity.
    pub th0: f64,
    /// Minimum height of the grasp above the table reference (m).
    pub th1: f64,
    /// Minimum distance from the grasp to neighbouring boxes (m).
    pub th2: f64,
    pub gravity: [f64; 3],
    /// Surface samples taken on each neighbouring box.
    pub surface_samples: usize,
    pub clearance_reference: ClearanceReference,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        Self {
            th0: 1.05,
            th1: 0.02,
            th2: 0.05,
            gravity: [0.0, 1.0, 0.0],
            surface_samples: 98,
            clearance_reference: ClearanceReference::ObjectBox,
        }
    }
}

impl FilterThresholds {
    pub fn gravity(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |msg: String| Err(FilterError::InvalidThresholds(msg));
        if !(self.th0 > 0.0 && self.th0 <= 2.0) {
            return bad(format!("th0 = {} must lie in (0, 2]", self.th0));
        }
        if !(self.th1 >= 0.0) {
            return bad(format!("th1 = {} must be >= 0", self.th1));
        }
        if !(self.th2 >= 0.0) {
            return bad(format!("th2 = {} must be >= 0", self.th2));
        }
        let g = self.gravity();
        if !((g.norm() - 1.0).abs() < 1e-9) {
            return bad(format!("gravity {:?} must be unit length", self.gravity));
        }
        if self.surface_samples < 8 {
            return bad(format!("surface_samples = {} must be >= 8", self.surface_samples));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityParams {
    pub alpha: f64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl StabilityParams {
    pub fn validate(&self) -> Result<(), FilterError> {
        if (0.0..=1.0).contains(&self.alpha) {
            Ok(())
        } else {
            Err(FilterError::InvalidAlpha(self.alpha))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredGrasp {
    pub candidate: GraspCandidate,
    pub stability: f64,
    pub confidence: f64,
    pub score: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Approach must be horizontal or tilted toward gravity.
pub fn filter_orientation(approach: &Vec3, thresholds: &FilterThresholds) -> bool {
    let g = thresholds.gravity();
    let dcos = 1.0 - approach.dot(&g) / (approach.norm() * g.norm());
    dcos < thresholds.th0
}

/// Grasp must sit more than `th1` above the lowest point of the reference,
/// measured along gravity.
pub fn filter_table_clearance(
    translation: &Vec3,
    corners: &[Vec3; 8],
    thresholds: &FilterThresholds,
) -> bool {
    let g = thresholds.gravity();
    let lowest = match thresholds.clearance_reference {
        ClearanceReference::ObjectBox => corners
            .iter()
            .map(|c| c.dot(&g))
            .fold(f64::NEG_INFINITY, f64::max),
        ClearanceReference::TablePlane(level) => level,
    };
    lowest - translation.dot(&g) > thresholds.th1
}

pub fn filter_width(width: f64, w_max: f64) -> bool {
    w_max - width > 0.0
}

/// Grasp must be farther than `th2` from every surface sample of every other box.
pub fn filter_proximity(
    translation: &Vec3,
    other_objects: &[Obb],
    thresholds: &FilterThresholds,
) -> Result<bool, FilterError> {
    let field = ProximityField::from_boxes(other_objects, thresholds.surface_samples)?;
    Ok(field.clear_of(translation, thresholds.th2))
}

/// Pre-sampled surface points of neighbouring boxes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProximityField {
    samples: Vec<Vec3>,
}

impl ProximityField {
    pub fn from_boxes<'a>(
        boxes: impl IntoIterator<Item = &'a Obb>,
        samples_per_box: usize,
    ) -> Result<Self, FilterError> {
        let mut samples = Vec::new();
        for b in boxes {
            samples.extend(sample_obb_surface(b, samples_per_box)?);
        }
        Ok(Self { samples })
    }

    pub fn from_samples(samples: Vec<Vec3>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    /// `+inf` when there are no neighbours.
    pub fn min_distance(&self, p: &Vec3) -> f64 {
        self.samples
            .iter()
            .map(|s| (s - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn clear_of(&self, p: &Vec3, threshold: f64) -> bool {
        self.min_distance(p) > threshold
    }
}

/// Stability of a camera-frame grasp on `obb`; returns `(M, d1, d2)`.
///
/// `d2` is the distance from the grasp point to the box centre and `d1` the
/// distance from the centre to the gripper plane spanned by X and Y.
pub fn stability(grasp: &GraspCandidate, obb: &Obb, params: &StabilityParams) -> (f64, f64, f64) {
    let offset = obb.center() - grasp.translation;
    let d2 = offset.norm();
    let d1 = grasp.rotation.z_axis().dot(&offset).abs().min(d2);
    let half_diag = obb.diag_length() / 2.0;
    let alpha = params.alpha;
    let m = alpha * (1.0 - d1 / half_diag) + (1.0 - alpha) * (1.0 - d2 / half_diag);
    (m, d1, d2)
}

/// Confidence-weighted final score.
pub fn score(stability: f64, confidence: f64) -> f64 {
    confidence * stability
}

/// Everything the filters need to know about the scene around one object.
#[derive(Debug, Clone)]
pub struct SceneContext {
    pub target: Obb,
    pub confidence: f64,
    pub w_max: f64,
    pub neighbours: ProximityField,
}

impl SceneContext {
    pub fn new(target: Obb, confidence: f64, w_max: f64, neighbours: ProximityField) -> Self {
        Self {
            target,
            confidence,
            w_max,
            neighbours,
        }
    }
}

/// True when a camera-frame candidate passes all four filters.
pub fn passes_filters(
    candidate: &GraspCandidate,
    corners: &[Vec3; 8],
    context: &SceneContext,
    thresholds: &FilterThresholds,
) -> bool {
    filter_orientation(&candidate.approach(), thresholds)
        && filter_table_clearance(&candidate.translation, corners, thresholds)
        && filter_width(candidate.width, context.w_max)
        && context.neighbours.clear_of(&candidate.translation, thresholds.th2)
}

/// Filters camera-frame candidates, scores survivors and returns the best `k`.
///
/// Ordering: score descending, then stability descending, then `d2`
/// ascending, then input order.
pub fn apply_filters_and_rank(
    candidates: &[GraspCandidate],
    context: &SceneContext,
    thresholds: &FilterThresholds,
    params: &StabilityParams,
    k: usize,
) -> Vec<ScoredGrasp> {
    let corners = obb_corners(&context.target);
    let mut survivors: Vec<ScoredGrasp> = candidates
        .iter()
        .filter(|c| passes_filters(c, &corners, context, thresholds))
        .map(|c| {
            let (m, d1, d2) = stability(c, &context.target, params);
            ScoredGrasp {
                candidate: *c,
                stability: m,
                confidence: context.confidence,
                score: score(m, context.confidence),
                d1,
                d2,
            }
        })
        .collect();
    // stable sort keeps input order for full ties
    survivors.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(b.stability.total_cmp(&a.stability))
            .then(a.d2.total_cmp(&b.d2))
    });
    survivors.truncate(k);
    survivors
}
