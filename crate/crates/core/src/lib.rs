//! Training-free 6-DoF grasp synthesis for two-finger parallel-jaw grippers.
//!
//! Grasps are derived from per-object oriented bounding boxes and shape
//! classes: each supported class has a heuristic candidate generator, the
//! candidates are filtered for feasibility against gravity, the table and
//! neighbouring boxes, and survivors are ranked by a centre-of-gravity
//! stability metric weighted by detection confidence.

pub mod config;
pub mod export;
pub mod filter;
pub mod geometry;
pub mod pipeline;
pub mod scene;
pub mod strategies;

pub use config::{Mode, RunConfig};
pub use export::{export_grasps, export_ply, parse_ascii_ply, GraspFile, GraspRecord};
pub use filter::{
    apply_filters_and_rank, filter_orientation, filter_proximity, filter_table_clearance,
    filter_width, score, stability, FilterThresholds, ScoredGrasp, StabilityParams,
};
pub use geometry::{
    diag_length, obb_corners, rotation_from_xy, sample_obb_surface, transform_grasp, Obb,
    RigidTransform, RotationMatrix, Vec3,
};
pub use pipeline::{
    generate_scene_grasps, precompute, query_on_demand, GraspIndex, GraspSet, ObjectGrasps,
    QueryResult,
};
pub use scene::{load_scene, save_scene, ObbDetection, Scene};
pub use strategies::{
    generate_box_grasps, generate_cylinder_grasps, generate_sphere_grasps, strategy_for,
    GraspCandidate, GripperConfig, SamplingMode, ShapeClass,
};
