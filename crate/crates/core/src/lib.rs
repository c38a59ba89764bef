pub mod ensemble;
pub mod evaluation;
pub mod geometry;
pub mod image;
pub mod io;
pub mod predictor;
pub mod registration;
pub mod scalar;
pub mod scene_sim;
pub mod stereo_model;
pub mod view_graph;

pub use scalar::Real;
pub use view_graph::ViewId;

pub type Pointmap32 = geometry::Pointmap<f32>;
pub type Pointmap64 = geometry::Pointmap<f64>;
pub type Confidence32 = geometry::ConfidenceMap<f32>;
pub type Confidence64 = geometry::ConfidenceMap<f64>;
pub type Pose64 = geometry::Se3Pose<f64>;
pub type Sim3_64 = geometry::Sim3Transform<f64>;
pub type Intrinsics64 = geometry::Intrinsics<f64>;
