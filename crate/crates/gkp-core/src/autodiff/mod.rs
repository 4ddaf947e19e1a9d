//! Reverse-mode automatic differentiation and the code-design training loop.

pub mod adam;
pub mod cnum;
pub mod mlp;
pub mod objective;
pub mod schedule;
pub mod tape;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use mlp::{mlp_coefficients, MlpParams};
pub use objective::{build_objective, Objective, ObjectiveSpec, TOTAL_PARAMS};
pub use schedule::cosine_warm_restarts;
pub use tape::{tape_gradient, Graph, GraphBuilder, Node, Workspace};
pub use train::{real_constrained_train, train, FParams, TrainConfig, TrainOutcome};
