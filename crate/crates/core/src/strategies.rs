//! Shape-class specific dense grasp-candidate generation.
//!
//! Every generator works in the object frame of the detection's box and
//! consumes only the box and the gripper configuration. Candidates are moved
//! into the camera frame by [`to_camera_frame`].

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_from_xy, transform_grasp, GeometryError, Obb, RotationMatrix, Vec3};

/// Stratified-mode replacement for the random augmentation angle about Y.
pub const STRATIFIED_ANGLES: [f64; 5] = [-FRAC_PI_4, -FRAC_PI_8, 0.0, FRAC_PI_8, FRAC_PI_4];

/// Extent ratio above which a sphere detection is reported as not spherical.
pub const SPHERE_ASPECT_LIMIT: f64 = 1.5;

/// Fraction of the cylinder height excluded at each end of the side family.
pub const CYLINDER_SIDE_INSET: f64 = 0.1;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeClass {
    Box,
    Sphere,
    Cylinder,
    Curved,
    Container,
    Tool,
    Ring,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 7] = [
        ShapeClass::Box,
        ShapeClass::Sphere,
        ShapeClass::Cylinder,
        ShapeClass::Curved,
        ShapeClass::Container,
        ShapeClass::Tool,
        ShapeClass::Ring,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeClass::Box => "box",
            ShapeClass::Sphere => "sphere",
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Curved => "curved",
            ShapeClass::Container => "container",
            ShapeClass::Tool => "tool",
            ShapeClass::Ring => "ring",
        }
    }

    pub fn is_supported(&self) -> bool {
        matches!(self, ShapeClass::Box | ShapeClass::Sphere | ShapeClass::Cylinder)
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("shape class `{0}` has no grasp generation strategy")]
    UnsupportedShapeClass(ShapeClass),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid gripper config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Uniform sampling from a ChaCha stream keyed by the object seed.
    Random,
    /// Evenly spaced parameters and the fixed [`STRATIFIED_ANGLES`] set.
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperConfig {
    pub category: String,
    /// Maximum jaw opening (m).
    pub w_max: f64,
    /// Maximum finger depth (m).
    pub gd: f64,
    pub samples_per_trajectory: usize,
    pub sampling_mode: SamplingMode,
}

impl Default for GripperConfig {
    fn default() -> Self {
        Self {
            category: "parallel-jaw".to_string(),
            w_max: 0.085,
            gd: 0.04,
            samples_per_trajectory: 15,
            sampling_mode: SamplingMode::Stratified,
        }
    }
}

impl GripperConfig {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if !(self.w_max.is_finite() && self.w_max > 0.0) {
            return Err(StrategyError::InvalidConfig(format!("w_max = {}", self.w_max)));
        }
        if !(self.gd.is_finite() && self.gd > 0.0) {
            return Err(StrategyError::InvalidConfig(format!("gd = {}", self.gd)));
        }
        if self.samples_per_trajectory == 0 {
            return Err(StrategyError::InvalidConfig(
                "samples_per_trajectory must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One grasp hypothesis: orientation `[X | Y | Z]`, translation, jaw width and finger depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspCandidate {
    pub rotation: RotationMatrix,
    pub translation: Vec3,
    pub width: f64,
    pub depth: f64,
}

impl GraspCandidate {
    pub fn approach(&self) -> Vec3 {
        self.rotation.x_axis()
    }

    pub fn closing(&self) -> Vec3 {
        self.rotation.y_axis()
    }
}

/// Locus of candidate grasp points in the object frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingTrajectory {
    LineSegment { start: Vec3, end: Vec3 },
    SphereSurface { center: Vec3, radius: f64 },
    /// Line parallel to `axis`; the other two coordinates are taken from `anchor`.
    AxialLine { anchor: Vec3, axis: usize, range: (f64, f64) },
}

impl SamplingTrajectory {
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        match *self {
            SamplingTrajectory::LineSegment { start, end } => segment_distance(&start, &end, p),
            SamplingTrajectory::SphereSurface { center, radius } => {
                ((p - center).norm() - radius).abs()
            }
            SamplingTrajectory::AxialLine { anchor, axis, range } => {
                let mut start = anchor;
                start[axis] = range.0;
                let mut end = anchor;
                end[axis] = range.1;
                segment_distance(&start, &end, p)
            }
        }
    }
}

fn segment_distance(a: &Vec3, b: &Vec3, p: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm()
}

/// One face mid-line of the box: `free` is the sampled axis, `face` the face
/// normal axis with the face at 0 (`high == false`) or at the extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceLine {
    pub free: usize,
    pub face: usize,
    pub high: bool,
}

impl FaceLine {
    /// The remaining axis, held at its midpoint.
    pub fn mid(&self) -> usize {
        3 - self.free - self.face
    }

    /// Point at fraction `t` in `[0, 1]` along the line.
    pub fn point_at(&self, extents: &Vec3, t: f64) -> Vec3 {
        let mut p = Vec3::zeros();
        p[self.face] = if self.high { extents[self.face] } else { 0.0 };
        p[self.mid()] = extents[self.mid()] / 2.0;
        p[self.free] = extents[self.free] * t;
        p
    }

    pub fn segment(&self, extents: &Vec3) -> SamplingTrajectory {
        let mut start = Vec3::zeros();
        start[self.face] = if self.high { extents[self.face] } else { 0.0 };
        start[self.mid()] = extents[self.mid()] / 2.0;
        let mut end = start;
        end[self.free] = extents[self.free];
        SamplingTrajectory::LineSegment { start, end }
    }
}

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

const fn line(free: usize, face: usize, high: bool) -> FaceLine {
    FaceLine { free, face, high }
}

/// The twelve face mid-lines, in the order they are traversed.
pub const BOX_FACE_LINES: [FaceLine; 12] = [
    line(Z, Y, false),
    line(Z, Y, true),
    line(Z, X, false),
    line(Z, X, true),
    line(Y, Z, false),
    line(Y, Z, true),
    line(Y, X, false),
    line(Y, X, true),
    line(X, Z, false),
    line(X, Z, true),
    line(X, Y, false),
    line(X, Y, true),
];

pub fn box_trajectories(extents: &Vec3) -> [SamplingTrajectory; 12] {
    std::array::from_fn(|i| BOX_FACE_LINES[i].segment(extents))
}

/// Result of one generator run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generated {
    pub candidates: Vec<GraspCandidate>,
    pub warnings: Vec<String>,
}

/// Object points are accepted for interface parity with detector output but
/// no generator reads them.
pub type GraspGenerator =
    fn(&Obb, Option<&[Vec3]>, &GripperConfig, u64) -> Result<Generated, StrategyError>;

pub fn strategy_for(shape: ShapeClass) -> Result<GraspGenerator, StrategyError> {
    match shape {
        ShapeClass::Box => Ok(box_generator),
        ShapeClass::Sphere => Ok(sphere_generator),
        ShapeClass::Cylinder => Ok(cylinder_generator),
        other => Err(StrategyError::UnsupportedShapeClass(other)),
    }
}

fn box_generator(
    obb: &Obb,
    _points: Option<&[Vec3]>,
    config: &GripperConfig,
    seed: u64,
) -> Result<Generated, StrategyError> {
    Ok(Generated {
        candidates: generate_box_grasps(obb, config, seed)?,
        warnings: Vec::new(),
    })
}

fn sphere_generator(
    obb: &Obb,
    _points: Option<&[Vec3]>,
    config: &GripperConfig,
    seed: u64,
) -> Result<Generated, StrategyError> {
    let mut warnings = Vec::new();
    if let Some(w) = sphericity_warning(obb.extents()) {
        warnings.push(w);
    }
    Ok(Generated {
        candidates: generate_sphere_grasps(obb, config, seed)?,
        warnings,
    })
}

fn cylinder_generator(
    obb: &Obb,
    _points: Option<&[Vec3]>,
    config: &GripperConfig,
    seed: u64,
) -> Result<Generated, StrategyError> {
    Ok(Generated {
        candidates: generate_cylinder_grasps(obb, config, seed)?,
        warnings: Vec::new(),
    })
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Jaw width for a box grasp: the box extent measured along the closing axis.
pub fn box_width(extents: &Vec3, closing: &Vec3) -> f64 {
    closing.x.abs() * extents.x + closing.y.abs() * extents.y + closing.z.abs() * extents.z
}

/// Finger depth for a box grasp.
pub fn box_depth(extents: &Vec3, gd: f64) -> f64 {
    (extents.x / 2.0)
        .min(extents.y / 2.0)
        .min(extents.z / 2.0)
        .min(gd)
}

/// Base (unaugmented) grasp at point `p` on face line `line`.
pub fn box_base_grasp(
    extents: &Vec3,
    line: &FaceLine,
    p: &Vec3,
    gd: f64,
) -> Result<GraspCandidate, StrategyError> {
    let center = extents * 0.5;
    // toward the central axis parallel to the free direction
    let mut target = center;
    target[line.free] = p[line.free];
    let approach = (target - p).normalize();
    let mut free_dir = Vec3::zeros();
    free_dir[line.free] = 1.0;
    let closing = approach.cross(&free_dir).normalize();
    let rotation = rotation_from_xy(&approach, &closing)?;
    Ok(GraspCandidate {
        rotation,
        translation: *p,
        width: box_width(extents, &closing),
        depth: box_depth(extents, gd),
    })
}

/// Dense box candidates in the object frame: two per sampled point (base pose
/// and the pose rotated about its closing axis), `24 N` in total.
pub fn generate_box_grasps(
    obb: &Obb,
    config: &GripperConfig,
    seed: u64,
) -> Result<Vec<GraspCandidate>, StrategyError> {
    config.validate()?;
    let extents = *obb.extents();
    crate::geometry::check_extents(&extents)?;
    let n = config.samples_per_trajectory;
    let mut out = Vec::with_capacity(24 * n);
    for (k, line) in BOX_FACE_LINES.iter().enumerate() {
        let mut rng = stream(seed, k as u64);
        for i in 0..n {
            let (t, angle) = match config.sampling_mode {
                SamplingMode::Stratified => (
                    (i as f64 + 0.5) / n as f64,
                    STRATIFIED_ANGLES[i % STRATIFIED_ANGLES.len()],
                ),
                SamplingMode::Random => {
                    let t = rng.random_range(0.0..=1.0);
                    let angle = rng.random_range(-FRAC_PI_4..=FRAC_PI_4);
                    (t, angle)
                }
            };
            let p = line.point_at(&extents, t);
            let base = box_base_grasp(&extents, line, &p, config.gd)?;
            out.push(base);
            out.push(GraspCandidate {
                rotation: base.rotation.rotated_about_own_y(angle),
                ..base
            });
        }
    }
    Ok(out)
}

pub fn sphericity_warning(extents: &Vec3) -> Option<String> {
    let ratio = extents.max() / extents.min();
    (ratio > SPHERE_ASPECT_LIMIT).then(|| {
        format!(
            "sphere detection is not spherical (extent ratio {ratio:.3} > {SPHERE_ASPECT_LIMIT}); \
             using the smallest extent as diameter"
        )
    })
}

/// Sphere grasp approaching along `-u` at the surface point `center + r u`.
pub fn sphere_grasp(
    center: &Vec3,
    radius: f64,
    u: &Vec3,
    closing: &Vec3,
    gd: f64,
) -> Result<GraspCandidate, StrategyError> {
    let rotation = rotation_from_xy(&(-u), closing)?;
    Ok(GraspCandidate {
        rotation,
        translation: center + u * radius,
        width: 2.0 * radius,
        depth: radius.min(gd),
    })
}

fn fibonacci_direction(i: usize, n: usize) -> (Vec3, f64) {
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let phi = i as f64 * GOLDEN_ANGLE;
    (Vec3::new(rho * phi.cos(), rho * phi.sin(), z), phi)
}

fn orthonormal_pair(u: &Vec3) -> (Vec3, Vec3) {
    let helper = if u.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = helper.cross(u).normalize();
    let e2 = u.cross(&e1).normalize();
    (e1, e2)
}

/// `N` candidates spread over the whole sphere, one per direction.
pub fn generate_sphere_grasps(
    obb: &Obb,
    config: &GripperConfig,
    seed: u64,
) -> Result<Vec<GraspCandidate>, StrategyError> {
    config.validate()?;
    let extents = *obb.extents();
    crate::geometry::check_extents(&extents)?;
    let radius = extents.min() / 2.0;
    let center = extents * 0.5;
    let n = config.samples_per_trajectory;
    let mut rng = stream(seed, 0);
    (0..n)
        .map(|i| {
            let (u, closing) = match config.sampling_mode {
                SamplingMode::Stratified => {
                    let (u, phi) = fibonacci_direction(i, n);
                    (u, Vec3::new(-phi.sin(), phi.cos(), 0.0))
                }
                SamplingMode::Random => {
                    let z: f64 = rng.random_range(-1.0..=1.0);
                    let phi: f64 = rng.random_range(0.0..2.0 * PI);
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let u = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
                    let psi: f64 = rng.random_range(0.0..2.0 * PI);
                    let (e1, e2) = orthonormal_pair(&u);
                    (u, e1 * psi.cos() + e2 * psi.sin())
                }
            };
            sphere_grasp(&center, radius, &u, &closing, config.gd)
        })
        .collect()
}

/// Side grasp on the lateral surface at `height` and azimuth `phi`.
pub fn cylinder_side_grasp(
    extents: &Vec3,
    height: f64,
    phi: f64,
    gd: f64,
) -> Result<GraspCandidate, StrategyError> {
    let radius = extents.x.min(extents.y) / 2.0;
    let (s, c) = phi.sin_cos();
    let radial = Vec3::new(c, s, 0.0);
    let translation = Vec3::new(extents.x / 2.0, extents.y / 2.0, height) + radial * radius;
    let rotation = rotation_from_xy(&(-radial), &Vec3::new(-s, c, 0.0))?;
    Ok(GraspCandidate {
        rotation,
        translation,
        width: 2.0 * radius,
        depth: radius.min(gd),
    })
}

/// Top grasp at the center of the upper cap, closing along azimuth `psi`.
pub fn cylinder_top_grasp(extents: &Vec3, psi: f64, gd: f64) -> Result<GraspCandidate, StrategyError> {
    let radius = extents.x.min(extents.y) / 2.0;
    let (s, c) = psi.sin_cos();
    let rotation = rotation_from_xy(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(c, s, 0.0))?;
    Ok(GraspCandidate {
        rotation,
        translation: Vec3::new(extents.x / 2.0, extents.y / 2.0, extents.z),
        width: 2.0 * radius,
        depth: (extents.z / 2.0).min(gd),
    })
}

/// The vertical line of the lateral surface at azimuth `phi`, inset at both ends.
pub fn cylinder_side_line(extents: &Vec3, phi: f64) -> SamplingTrajectory {
    let radius = extents.x.min(extents.y) / 2.0;
    let h = extents.z;
    let anchor = Vec3::new(
        extents.x / 2.0 + radius * phi.cos(),
        extents.y / 2.0 + radius * phi.sin(),
        0.0,
    );
    SamplingTrajectory::AxialLine {
        anchor,
        axis: Z,
        range: (CYLINDER_SIDE_INSET * h, (1.0 - CYLINDER_SIDE_INSET) * h),
    }
}

/// `N` side grasps plus `N / 4` top grasps; the cylinder axis is object z.
pub fn generate_cylinder_grasps(
    obb: &Obb,
    config: &GripperConfig,
    seed: u64,
) -> Result<Vec<GraspCandidate>, StrategyError> {
    config.validate()?;
    let extents = *obb.extents();
    crate::geometry::check_extents(&extents)?;
    let h = extents.z;
    let (lo, hi) = (CYLINDER_SIDE_INSET * h, (1.0 - CYLINDER_SIDE_INSET) * h);
    let n = config.samples_per_trajectory;
    let n_top = n / 4;
    let mut side_rng = stream(seed, 0);
    let mut top_rng = stream(seed, 1);
    let mut out = Vec::with_capacity(n + n_top);
    for i in 0..n {
        let (height, phi) = match config.sampling_mode {
            SamplingMode::Stratified => (
                lo + (hi - lo) * (i as f64 + 0.5) / n as f64,
                i as f64 * GOLDEN_ANGLE,
            ),
            SamplingMode::Random => (
                side_rng.random_range(lo..=hi),
                side_rng.random_range(0.0..2.0 * PI),
            ),
        };
        out.push(cylinder_side_grasp(&extents, height, phi, config.gd)?);
    }
    for j in 0..n_top {
        let psi = match config.sampling_mode {
            SamplingMode::Stratified => j as f64 * PI / n_top as f64,
            SamplingMode::Random => top_rng.random_range(0.0..PI),
        };
        out.push(cylinder_top_grasp(&extents, psi, config.gd)?);
    }
    Ok(out)
}

/// Moves object-frame candidates into the frame of the box pose.
pub fn to_camera_frame(obb: &Obb, candidates: &[GraspCandidate]) -> Vec<GraspCandidate> {
    candidates
        .iter()
        .map(|c| {
            let (rotation, translation) = transform_grasp(obb.pose(), &c.rotation, &c.translation);
            GraspCandidate {
                rotation,
                translation,
                ..*c
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stratified(n: usize, gd: f64) -> GripperConfig {
        GripperConfig {
            gd,
            samples_per_trajectory: n,
            sampling_mode: SamplingMode::Stratified,
            ..GripperConfig::default()
        }
    }

    fn contains_segment(trajs: &[SamplingTrajectory], a: Vec3, b: Vec3) -> bool {
        trajs.iter().any(|t| match t {
            SamplingTrajectory::LineSegment { start, end } => {
                ((start - a).norm() < 1e-12 && (end - b).norm() < 1e-12)
                    || ((start - b).norm() < 1e-12 && (end - a).norm() < 1e-12)
            }
            _ => false,
        })
    }

    #[test]
    fn box_trajectories_match_face_midlines() {
        let e = Vec3::new(2.0, 4.0, 6.0);
        let trajs = box_trajectories(&e);
        assert_eq!(trajs.len(), 12);
        assert!(contains_segment(&trajs, Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 6.0)));
        // x free, y at mid, on the z = 0 face
        assert!(contains_segment(&trajs, Vec3::new(0.0, 2.0, 0.0), Vec3::new(2.0, 2.0, 0.0)));
        // the central line is not a trajectory
        assert!(!contains_segment(&trajs, Vec3::new(0.0, 2.0, 3.0), Vec3::new(2.0, 2.0, 3.0)));
        let obb = Obb::axis_aligned(e).unwrap();
        for t in &trajs {
            if let SamplingTrajectory::LineSegment { start, end } = t {
                assert!(obb.distance_to_surface(start) < 1e-12);
                assert!(obb.distance_to_surface(end) < 1e-12);
            }
        }
    }

    #[test]
    fn box_grasp_hand_example() {
        let e = Vec3::new(0.06, 0.08, 0.10);
        let line = BOX_FACE_LINES[0];
        assert_eq!(line, FaceLine { free: Z, face: Y, high: false });
        let g = box_base_grasp(&e, &line, &Vec3::new(0.03, 0.0, 0.05), 0.04).unwrap();
        assert_relative_eq!(g.approach(), Vec3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(g.closing(), Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(g.rotation.z_axis(), Vec3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
        assert_relative_eq!(g.width, 0.06);
        assert_relative_eq!(g.depth, 0.03);
    }

    #[test]
    fn cube_depth_is_half_edge() {
        let s = 0.05;
        let obb = Obb::axis_aligned(Vec3::new(s, s, s)).unwrap();
        for g in generate_box_grasps(&obb, &stratified(4, 0.1), 0).unwrap() {
            assert_eq!(g.depth, s / 2.0);
        }
    }

    #[test]
    fn stratified_box_count_and_reproducibility() {
        let obb = Obb::axis_aligned(Vec3::new(0.06, 0.08, 0.10)).unwrap();
        let a = generate_box_grasps(&obb, &stratified(3, 0.04), 1).unwrap();
        let b = generate_box_grasps(&obb, &stratified(3, 0.04), 99).unwrap();
        assert_eq!(a.len(), 72);
        assert_eq!(a, b);
    }

    #[test]
    fn random_box_depends_on_seed_only() {
        let obb = Obb::axis_aligned(Vec3::new(0.06, 0.08, 0.10)).unwrap();
        let cfg = GripperConfig {
            sampling_mode: SamplingMode::Random,
            samples_per_trajectory: 4,
            ..GripperConfig::default()
        };
        let a = generate_box_grasps(&obb, &cfg, 5).unwrap();
        assert_eq!(a, generate_box_grasps(&obb, &cfg, 5).unwrap());
        assert_ne!(a, generate_box_grasps(&obb, &cfg, 6).unwrap());
        assert_eq!(a.len(), 96);
        let trajs = box_trajectories(obb.extents());
        for g in &a {
            let d = trajs.iter().map(|t| t.distance_to(&g.translation)).fold(f64::MAX, f64::min);
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn sphere_rules() {
        let r = 0.035;
        let obb = Obb::axis_aligned(Vec3::new(2.0 * r, 2.0 * r, 2.0 * r)).unwrap();
        let center = obb.half_extents();
        for mode in [SamplingMode::Stratified, SamplingMode::Random] {
            let cfg = GripperConfig {
                sampling_mode: mode,
                samples_per_trajectory: 50,
                ..GripperConfig::default()
            };
            let cands = generate_sphere_grasps(&obb, &cfg, 3).unwrap();
            assert_eq!(cands.len(), 50);
            for g in &cands {
                assert_relative_eq!(g.width, 0.07, epsilon = 1e-15);
                assert_relative_eq!(g.depth, 0.035, epsilon = 1e-15);
                assert!(((g.translation - center).norm() - r).abs() < 1e-9);
                assert!(g.rotation.orthonormality_error() < 1e-9);
            }
        }
        let g = sphere_grasp(&center, r, &Vec3::new(0.0, -1.0, 0.0), &Vec3::x(), 0.04).unwrap();
        assert_eq!(g.approach(), Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn sphere_aspect_warning() {
        assert!(sphericity_warning(&Vec3::new(0.07, 0.07, 0.07)).is_none());
        assert!(sphericity_warning(&Vec3::new(0.05, 0.07, 0.08)).is_some());
        let gen = strategy_for(ShapeClass::Sphere).unwrap();
        let obb = Obb::axis_aligned(Vec3::new(0.04, 0.07, 0.07)).unwrap();
        let out = gen(&obb, None, &GripperConfig::default(), 0).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.candidates.iter().all(|g| (g.width - 0.04).abs() < 1e-15));
    }

    #[test]
    fn cylinder_rules() {
        let e = Vec3::new(0.06, 0.06, 0.12);
        let side = cylinder_side_grasp(&e, 0.06, 0.3, 0.05).unwrap();
        assert_relative_eq!(side.width, 0.06);
        assert_relative_eq!(side.depth, 0.03);
        assert_relative_eq!(side.translation.z, 0.06);
        let top = cylinder_top_grasp(&e, 0.0, 0.05).unwrap();
        assert_eq!(top.approach(), Vec3::new(0.0, 0.0, -1.0));
        assert_relative_eq!(top.depth, 0.05);

        let obb = Obb::axis_aligned(e).unwrap();
        let one = generate_cylinder_grasps(&obb, &stratified(1, 0.05), 0).unwrap();
        assert_eq!(one.len(), 1);
        assert_relative_eq!(one[0].translation.z, 0.06, epsilon = 1e-15);

        let cands = generate_cylinder_grasps(&obb, &stratified(10, 0.05), 0).unwrap();
        assert_eq!(cands.len(), 12);
        for g in &cands[..10] {
            assert!(g.approach().dot(&Vec3::z()).abs() < 1e-9);
            let radial = Vec3::new(g.translation.x - 0.03, g.translation.y - 0.03, 0.0).norm();
            assert!((radial - 0.03).abs() < 1e-12);
            assert!(g.translation.z >= 0.012 - 1e-12 && g.translation.z <= 0.108 + 1e-12);
        }
    }

    #[test]
    fn dispatch() {
        let obb = Obb::axis_aligned(Vec3::new(0.05, 0.05, 0.12)).unwrap();
        let cfg = GripperConfig::default();
        let run = |s| strategy_for(s).unwrap()(&obb, None, &cfg, 7).unwrap().candidates;
        assert_eq!(run(ShapeClass::Box), generate_box_grasps(&obb, &cfg, 7).unwrap());
        assert_eq!(run(ShapeClass::Sphere), generate_sphere_grasps(&obb, &cfg, 7).unwrap());
        assert_eq!(run(ShapeClass::Cylinder), generate_cylinder_grasps(&obb, &cfg, 7).unwrap());
        for s in [ShapeClass::Curved, ShapeClass::Container, ShapeClass::Tool, ShapeClass::Ring] {
            let err = strategy_for(s).unwrap_err();
            assert_eq!(err, StrategyError::UnsupportedShapeClass(s));
            assert!(err.to_string().contains(s.as_str()));
        }
    }

    #[test]
    fn degenerate_extents_rejected() {
        let bad = Obb::axis_aligned(Vec3::new(0.1, 0.0, 0.1));
        assert!(bad.is_err());
    }

    proptest! {
        #[test]
        fn box_candidate_properties(
            ex in 0.01f64..0.3, ey in 0.01f64..0.3, ez in 0.01f64..0.3,
            n in 1usize..8, gd in 0.005f64..0.1,
        ) {
            let e = Vec3::new(ex, ey, ez);
            let obb = Obb::axis_aligned(e).unwrap();
            let cands = generate_box_grasps(&obb, &stratified(n, gd), 0).unwrap();
            prop_assert_eq!(cands.len(), 24 * n);
            let trajs = box_trajectories(&e);
            let depth = (ex / 2.0).min(ey / 2.0).min(ez / 2.0).min(gd);
            for pair in cands.chunks(2) {
                let (base, rotated) = (pair[0], pair[1]);
                prop_assert!((base.closing() - rotated.closing()).amax() < 1e-9);
                prop_assert_eq!(base.translation, rotated.translation);
            }
            for g in &cands {
                let d = trajs.iter().map(|t| t.distance_to(&g.translation)).fold(f64::MAX, f64::min);
                prop_assert!(d < 1e-9);
                prop_assert!(obb.contains(&(g.translation + g.approach() * 1e-6), 0.0));
                prop_assert!([ex, ey, ez].contains(&g.width));
                prop_assert!((g.width - box_width(&e, &g.closing())).abs() < 1e-12);
                prop_assert_eq!(g.depth, depth);
                prop_assert!(g.depth > 0.0 && g.depth <= gd);
            }
        }

        #[test]
        fn cylinder_and_sphere_counts(n in 1usize..40) {
            let obb = Obb::axis_aligned(Vec3::new(0.05, 0.05, 0.15)).unwrap();
            prop_assert_eq!(generate_cylinder_grasps(&obb, &stratified(n, 0.04), 0).unwrap().len(), n + n / 4);
            prop_assert_eq!(generate_sphere_grasps(&obb, &stratified(n, 0.04), 0).unwrap().len(), n);
        }
    }
}
