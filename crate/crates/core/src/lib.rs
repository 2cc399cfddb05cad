//! Design of planar hook-shaped hand tools for a push/pull manipulation task.
//!
//! The pipeline has three roles wired together by [`design`]:
//!
//! * a *designer* ([`opt`]) proposes polynomial tool shapes under a fixed
//!   arc-length constraint ([`geometry`]),
//! * a *user* executes a fixed motion plan with the tool in a deterministic
//!   planar contact simulator ([`sim`]),
//! * an *evaluator* ([`objective`]) scores each rollout with a free-energy
//!   fitness that combines goal error with the control-confidence term
//!   (the log-determinant of the control precision matrix).
//!
//! [`eval`] measures how robust a designed tool is when the object mass is
//! perturbed, and runs comparative studies across objective weights.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`];
//! `f64` aliases for the main domain types live at the crate root.

pub mod design;
pub mod eval;
pub mod geometry;
pub mod linalg;
pub mod objective;
pub mod opt;
pub mod scalar;
pub mod sim;

pub use scalar::Real;

/// `f64` aliases for the main domain types.
pub type Vec2 = linalg::Vec2<f64>;
pub type Vec3 = linalg::Vec3<f64>;
pub type ToolParams = geometry::ToolParams<f64>;
pub type ToolShape = geometry::ToolShape<f64>;
pub type PlanSpec = sim::PlanSpec<f64>;
pub type WorldConfig = sim::WorldConfig<f64>;
pub type Rollout = sim::Rollout<f64>;
pub type ObjectiveConfig = objective::ObjectiveConfig<f64>;
pub type FitnessReport = objective::FitnessReport<f64>;
pub type OptimizerConfig = opt::OptimizerConfig<f64>;
pub type OptRun = opt::OptRun<f64>;
pub type DesignConfig = design::DesignConfig<f64>;
pub type DesignRun = design::DesignRun<f64>;
pub type PerturbationSpec = eval::PerturbationSpec<f64>;
pub type RobustnessReport = eval::RobustnessReport<f64>;
pub type StudyTable = eval::StudyTable<f64>;

/// `f32` aliases for callers that trade precision for footprint.
pub type ToolParams32 = geometry::ToolParams<f32>;
pub type ToolShape32 = geometry::ToolShape<f32>;
pub type Rollout32 = sim::Rollout<f32>;
