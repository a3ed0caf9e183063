//! Desk-scale verification for boxgrasp: synthetic tabletop scenes,
//! simulated occlusion, an analytic feasibility oracle, a brute-force
//! stability maximiser and the benchmark runner built on them.

pub mod bench;
pub mod occlude;
pub mod oracle;
pub mod synth;

pub use bench::{bench, bench_scenes, synth_scene_set, BenchConfig, BenchReport, Scenario, ScenarioStats};
pub use occlude::{occlude, occluded_variant};
pub use oracle::{
    brute_force_best_m, brute_force_best_m_on_face, feasibility_oracle, FailedCheck, FeasibilityVerdict,
    OracleParams,
};
pub use synth::{synth_scene, synth_scene_at, SceneSpec, SynthError};
