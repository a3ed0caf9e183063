//! Simulated partial occlusion of segmented object points.

use std::f64::consts::PI;

use boxgrasp_core::{Scene, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Suffix appended to the scene id of an occluded variant.
pub const OCCLUDED_SUFFIX: &str = "-occ";

/// Random cutting direction for one object.
pub fn cut_direction(seed: u64, object_id: u64) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ object_id);
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Drops `fraction` of every object's points from the far side of a random
/// cutting plane. Surviving points keep their order; boxes, labels, ids and
/// confidences are untouched.
pub fn occlude(scene: &Scene, fraction: f64, seed: u64) -> Scene {
    let fraction = fraction.clamp(0.0, 1.0);
    let mut out = scene.clone();
    for object in &mut out.objects {
        let Some(points) = object.points.as_mut() else {
            continue;
        };
        let remove = (fraction * points.len() as f64).round() as usize;
        if remove == 0 {
            continue;
        }
        let dir = cut_direction(seed, object.id);
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[b]
                .dot(&dir)
                .total_cmp(&points[a].dot(&dir))
                .then(a.cmp(&b))
        });
        let mut keep = vec![true; points.len()];
        for &i in &order[..remove] {
            keep[i] = false;
        }
        let mut k = keep.iter();
        points.retain(|_| *k.next().unwrap());
    }
    out
}

/// Occluded variant with the id suffix used to classify benchmark scenarios.
pub fn occluded_variant(scene: &Scene, fraction: f64, seed: u64) -> Scene {
    let mut out = occlude(scene, fraction, seed);
    out.scene_id.push_str(OCCLUDED_SUFFIX);
    out
}

pub fn is_occluded_id(scene_id: &str) -> bool {
    scene_id.ends_with(OCCLUDED_SUFFIX)
}
