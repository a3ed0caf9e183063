//! Analytic grasp feasibility verdict and a brute-force stability maximiser.
//!
//! Both are written against raw box geometry and share no code with the
//! filters or the stability metric they are used to check.

use boxgrasp_core::{obb_corners, Obb, ScoredGrasp, StabilityParams, Vec3};
use serde::{Deserialize, Serialize};

/// Numerical slack for contact and containment tests (m).
pub const CONTACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    pub w_max: f64,
    pub th0: f64,
    /// Finger clearance required from every other box (m).
    pub finger_clearance: f64,
    /// Finger thickness along the gripper Z axis (m).
    pub finger_thickness: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            w_max: 0.085,
            th0: 1.05,
            finger_clearance: 0.001,
            finger_thickness: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailedCheck {
    /// Opening too wide, or a finger comes too close to another box.
    JawSpan,
    /// The closing segment misses the target.
    Containment,
    /// The approach corridor hits the table or another box.
    Approach,
    /// Approach points against gravity.
    Orientation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    feasible: bool,
    reasons: Vec<FailedCheck>,
}

impl FeasibilityVerdict {
    pub fn from_reasons(reasons: Vec<FailedCheck>) -> Self {
        Self {
            feasible: reasons.is_empty(),
            reasons,
        }
    }

    pub fn feasible(&self) -> bool {
        self.feasible
    }

    pub fn reasons(&self) -> &[FailedCheck] {
        &self.reasons
    }

    /// Binary success coefficient.
    pub fn beta(&self) -> f64 {
        if self.feasible {
            1.0
        } else {
            0.0
        }
    }
}

/// Box given by centre, orthonormal axes and half extents.
#[derive(Debug, Clone, Copy)]
struct Solid {
    centre: Vec3,
    axes: [Vec3; 3],
    half: Vec3,
}

impl Solid {
    fn of(obb: &Obb) -> Self {
        let r = obb.pose().rotation;
        Self {
            centre: obb.center(),
            axes: [r.x_axis(), r.y_axis(), r.z_axis()],
            half: obb.half_extents(),
        }
    }

    fn distance(&self, p: &Vec3) -> f64 {
        let d = p - self.centre;
        let mut sq = 0.0;
        for k in 0..3 {
            let excess = d.dot(&self.axes[k]).abs() - self.half[k];
            if excess > 0.0 {
                sq += excess * excess;
            }
        }
        sq.sqrt()
    }

    fn radius_along(&self, n: &Vec3) -> f64 {
        (0..3).map(|k| self.half[k] * self.axes[k].dot(n).abs()).sum()
    }

    fn corners(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..8).map(move |i| {
            let s = |b: usize| if i >> b & 1 == 1 { 1.0 } else { -1.0 };
            self.centre
                + self.axes[0] * (s(2) * self.half.x)
                + self.axes[1] * (s(1) * self.half.y)
                + self.axes[2] * (s(0) * self.half.z)
        })
    }
}

/// Separating-axis overlap test; touching within `tol` counts as overlap.
fn solids_overlap(a: &Solid, b: &Solid, tol: f64) -> bool {
    let mut axes: Vec<Vec3> = a.axes.iter().chain(b.axes.iter()).copied().collect();
    for u in &a.axes {
        for v in &b.axes {
            let c = u.cross(v);
            if c.norm() > 1e-12 {
                axes.push(c.normalize());
            }
        }
    }
    let d = b.centre - a.centre;
    axes.iter()
        .all(|n| d.dot(n).abs() <= a.radius_along(n) + b.radius_along(n) + tol)
}

/// Distance from segment `[p, q]` to a box, by ternary search on the convex
/// distance profile along the segment.
pub fn segment_obb_distance(p: &Vec3, q: &Vec3, obb: &Obb) -> f64 {
    let s = Solid::of(obb);
    let at = |t: f64| s.distance(&(p + (q - p) * t));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if at(a) <= at(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    at(0.0).min(at(1.0)).min(at((lo + hi) / 2.0))
}

/// Whether the segment `[p, q]` meets the box, by slab clipping.
pub fn segment_hits_obb(p: &Vec3, q: &Vec3, obb: &Obb, tol: f64) -> bool {
    let s = Solid::of(obb);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..3 {
        let a = (p - s.centre).dot(&s.axes[k]);
        let v = (q - p).dot(&s.axes[k]);
        let h = s.half[k] + tol;
        if v.abs() < 1e-15 {
            if a.abs() > h {
                return false;
            }
            continue;
        }
        let (mut e0, mut e1) = ((-h - a) / v, (h - a) / v);
        if e0 > e1 {
            std::mem::swap(&mut e0, &mut e1);
        }
        t0 = t0.max(e0);
        t1 = t1.min(e1);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Box swept by the gripper body while approaching: it ends at the grasp
/// point and extends `depth` back along the approach axis.
fn approach_corridor(g: &ScoredGrasp, thickness: f64) -> Solid {
    let c = &g.candidate;
    let (x, y) = (c.rotation.x_axis(), c.rotation.y_axis());
    Solid {
        centre: c.translation - x * (c.depth / 2.0),
        axes: [x, y, x.cross(&y)],
        half: Vec3::new(c.depth / 2.0, c.width / 2.0, thickness / 2.0),
    }
}

/// Four independent checks standing in for a human success judgement.
pub fn feasibility_oracle(
    grasp: &ScoredGrasp,
    target: &Obb,
    others: &[Obb],
    gravity: &Vec3,
    params: &OracleParams,
) -> FeasibilityVerdict {
    let c = &grasp.candidate;
    let (x, y) = (c.rotation.x_axis(), c.rotation.y_axis());
    let t = c.translation;
    let g = gravity.normalize();
    let mut reasons = Vec::new();

    let left = t - y * (c.width / 2.0);
    let right = t + y * (c.width / 2.0);
    let fingers_clear = [left, right].iter().all(|base| {
        let tip = base + x * c.depth;
        others
            .iter()
            .all(|o| segment_obb_distance(base, &tip, o) >= params.finger_clearance)
    });
    if !(c.width < params.w_max) || !fingers_clear {
        reasons.push(FailedCheck::JawSpan);
    }

    if !segment_hits_obb(&left, &right, target, CONTACT_TOLERANCE) {
        reasons.push(FailedCheck::Containment);
    }

    let table = std::iter::once(target)
        .chain(others)
        .flat_map(|o| obb_corners(o).map(|p| p.dot(&g)))
        .fold(f64::NEG_INFINITY, f64::max);
    let corridor = approach_corridor(grasp, params.finger_thickness);
    let below_table = corridor.corners().any(|p| p.dot(&g) > table + CONTACT_TOLERANCE);
    let hits_other = others
        .iter()
        .any(|o| solids_overlap(&corridor, &Solid::of(o), -CONTACT_TOLERANCE));
    if below_table || hits_other {
        reasons.push(FailedCheck::Approach);
    }

    if !(1.0 - x.dot(&g) < params.th0) {
        reasons.push(FailedCheck::Orientation);
    }
    FeasibilityVerdict::from_reasons(reasons)
}

/// Stability with the grasp plane through the centre, from the object-frame
/// offset of the grasp point.
fn centred_m(offset: &Vec3, half_diag: f64, alpha: f64) -> f64 {
    alpha + (1.0 - alpha) * (1.0 - offset.norm() / half_diag)
}

fn lattice(extent: f64, resolution: usize) -> impl Iterator<Item = f64> {
    (0..resolution).map(move |i| extent * i as f64 / (resolution - 1) as f64)
}

/// Maximum of the stability metric (zero plane offset) over a regular grid
/// filling the box, with the object-frame point where it is attained.
pub fn brute_force_best_m(obb: &Obb, resolution: usize, params: &StabilityParams) -> (f64, Vec3) {
    assert!(resolution >= 9, "grid resolution must be at least 9");
    let e = *obb.extents();
    let half_diag = e.norm() / 2.0;
    let mut best = (f64::NEG_INFINITY, Vec3::zeros());
    for x in lattice(e.x, resolution) {
        for y in lattice(e.y, resolution) {
            for z in lattice(e.z, resolution) {
                let p = Vec3::new(x, y, z);
                let m = centred_m(&(p - e / 2.0), half_diag, params.alpha);
                if m > best.0 {
                    best = (m, p);
                }
            }
        }
    }
    best
}

/// Same search restricted to one face: `axis` is held at 0 (`high = false`)
/// or at its full extent.
pub fn brute_force_best_m_on_face(
    obb: &Obb,
    axis: usize,
    high: bool,
    resolution: usize,
    params: &StabilityParams,
) -> (f64, Vec3) {
    assert!(resolution >= 9, "grid resolution must be at least 9");
    let e = *obb.extents();
    let half_diag = e.norm() / 2.0;
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut best = (f64::NEG_INFINITY, Vec3::zeros());
    for a in lattice(e[u], resolution) {
        for b in lattice(e[v], resolution) {
            let mut p = Vec3::zeros();
            p[axis] = if high { e[axis] } else { 0.0 };
            p[u] = a;
            p[v] = b;
            let m = centred_m(&(p - e / 2.0), half_diag, params.alpha);
            if m > best.0 {
                best = (m, p);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::upright_obb;
    use boxgrasp_core::{rotation_from_xy, GraspCandidate};
    use proptest::prelude::*;

    fn scored(t: Vec3, x: Vec3, y: Vec3, w: f64, d: f64) -> ScoredGrasp {
        ScoredGrasp {
            candidate: GraspCandidate {
                rotation: rotation_from_xy(&x, &y).unwrap(),
                translation: t,
                width: w,
                depth: d,
            },
            stability: 0.7,
            confidence: 1.0,
            score: 0.7,
            d1: 0.0,
            d2: 0.0,
        }
    }

    /// Upright 6x8x10 cm box on a table at y = 0.3; face-centre side grasp.
    fn canonical() -> (Obb, ScoredGrasp) {
        let obb = upright_obb(Vec3::new(0.06, 0.08, 0.10), 0.0, 0.0, 1.0, 0.3).unwrap();
        let centre = obb.center();
        let t = obb.to_camera(&Vec3::new(0.03, 0.0, 0.05));
        let x = (centre - t).normalize();
        let y = x.cross(&obb.pose().rotation.z_axis());
        (obb, scored(t, x, y, 0.06, 0.03))
    }

    #[test]
    fn canonical_grasp_is_feasible() {
        let (obb, g) = canonical();
        let v = feasibility_oracle(&g, &obb, &[], &Vec3::y(), &OracleParams::default());
        assert!(v.feasible(), "{:?}", v.reasons());
        assert_eq!(v.beta(), 1.0);
    }

    #[test]
    fn missing_the_target_fails_containment() {
        let (obb, mut g) = canonical();
        g.candidate.translation -= g.candidate.rotation.x_axis() * 0.2;
        let v = feasibility_oracle(&g, &obb, &[], &Vec3::y(), &OracleParams::default());
        assert_eq!(v.reasons(), &[FailedCheck::Containment]);
    }

    #[test]
    fn upward_approach_fails_orientation() {
        let (obb, g) = canonical();
        let up = scored(g.candidate.translation, Vec3::new(0.0, -1.0, 0.0), Vec3::x(), 0.06, 0.03);
        let v = feasibility_oracle(&up, &obb, &[], &Vec3::y(), &OracleParams::default());
        assert!(v.reasons().contains(&FailedCheck::Orientation));
        assert!(!v.feasible());
    }

    #[test]
    fn wide_or_crowded_grasps_fail_jaw_span() {
        let (obb, mut g) = canonical();
        g.candidate.width = 0.085;
        let v = feasibility_oracle(&g, &obb, &[], &Vec3::y(), &OracleParams::default());
        assert_eq!(v.reasons(), &[FailedCheck::JawSpan]);

        let (obb, g) = canonical();
        // the -Y finger runs along camera +z at x = -0.03; a post 0.5 mm beside it
        let post = upright_obb(Vec3::new(0.02, 0.02, 0.10), 0.0, -0.0405, 0.975, 0.3).unwrap();
        let v = feasibility_oracle(&g, &obb, &[post], &Vec3::y(), &OracleParams::default());
        assert_eq!(v.reasons(), &[FailedCheck::JawSpan]);
    }

    #[test]
    fn corridor_into_table_or_neighbour_fails_approach() {
        let (obb, g) = canonical();
        // 2 mm above the table: half the finger thickness reaches below it
        let mut low = g;
        low.candidate.translation = obb.to_camera(&Vec3::new(0.03, 0.0, 0.002));
        let v = feasibility_oracle(&low, &obb, &[], &Vec3::y(), &OracleParams::default());
        assert_eq!(v.reasons(), &[FailedCheck::Approach]);

        // a block straight behind the grasp point, 1 cm out
        let block = upright_obb(Vec3::new(0.02, 0.02, 0.10), 0.0, 0.0, 0.94, 0.3).unwrap();
        let v = feasibility_oracle(&g, &obb, &[block], &Vec3::y(), &OracleParams::default());
        assert!(v.reasons().contains(&FailedCheck::Approach));
    }

    #[test]
    fn box_center_maximises_m() {
        let obb = upright_obb(Vec3::new(0.06, 0.08, 0.10), 0.4, 0.1, 0.9, 0.3).unwrap();
        let (m, p) = brute_force_best_m(&obb, 21, &StabilityParams::default());
        assert_eq!(m, 1.0);
        assert!((p - obb.extents() / 2.0).norm() < 1e-12);
    }

    #[test]
    fn face_search_matches_hand_example() {
        let obb = Obb::axis_aligned(Vec3::new(0.06, 0.08, 0.10)).unwrap();
        let (m, p) = brute_force_best_m_on_face(&obb, 1, false, 21, &StabilityParams::default());
        assert!((m - 0.717157287525381).abs() < 1e-12);
        assert!((p - Vec3::new(0.03, 0.0, 0.05)).norm() < 1e-12);
    }

    #[test]
    fn alpha_one_is_flat() {
        let obb = Obb::axis_aligned(Vec3::new(0.03, 0.05, 0.2)).unwrap();
        let params = StabilityParams { alpha: 1.0 };
        for axis in 0..3 {
            let (m, _) = brute_force_best_m_on_face(&obb, axis, true, 9, &params);
            assert_eq!(m, 1.0);
        }
    }

    #[test]
    fn sat_detects_touch_and_gap() {
        let a = Solid::of(&Obb::axis_aligned(Vec3::new(1.0, 1.0, 1.0)).unwrap());
        let mut b = a;
        b.centre.x += 1.0;
        assert!(solids_overlap(&a, &b, 1e-9));
        assert!(!solids_overlap(&a, &b, -1e-9));
        b.centre.x += 0.01;
        assert!(!solids_overlap(&a, &b, 1e-9));
    }

    proptest! {
        #[test]
        fn segment_distance_matches_dense_sampling(
            px in -0.3f64..0.3, py in -0.3f64..0.3, pz in -0.3f64..0.3,
            qx in -0.3f64..0.3, qy in -0.3f64..0.3, qz in -0.3f64..0.3,
            psi in 0.0f64..3.0,
        ) {
            let obb = upright_obb(Vec3::new(0.05, 0.1, 0.08), psi, 0.0, 0.0, 0.0).unwrap();
            let (p, q) = (Vec3::new(px, py, pz), Vec3::new(qx, qy, qz));
            let d = segment_obb_distance(&p, &q, &obb);
            let sampled = (0..=2000)
                .map(|i| obb.distance_to_point(&(p + (q - p) * (i as f64 / 2000.0))))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(d <= sampled + 1e-12);
            prop_assert!(sampled - d <= (q - p).norm() / 2000.0 + 1e-9);
            prop_assert_eq!(segment_hits_obb(&p, &q, &obb, 1e-9), d <= 1e-9 || sampled == 0.0);
        }

        #[test]
        fn oracle_is_deterministic(px in -0.05f64..0.05, pz in 0.95f64..1.05, a in 0.0f64..6.28) {
            let (obb, _) = canonical();
            let x = Vec3::new(a.cos(), 0.3, a.sin()).normalize();
            let y = x.cross(&Vec3::y()).normalize();
            let g = scored(Vec3::new(px, 0.25, pz), x, y, 0.05, 0.03);
            let p = OracleParams::default();
            prop_assert_eq!(
                feasibility_oracle(&g, &obb, &[], &Vec3::y(), &p),
                feasibility_oracle(&g, &obb, &[], &Vec3::y(), &p)
            );
        }
    }
}
