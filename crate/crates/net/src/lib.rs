//! Policy-value network for Gomoku with hand-written forward and backward
//! passes, the training loss, Adam/SGD with percentile gradient clipping, and
//! binary checkpoints.

pub mod batch;
pub mod checkpoint;
pub mod config;
mod error;
mod fpenv;
pub mod gradcheck;
mod layers;
pub mod loss;
pub mod network;
pub mod optim;
mod real;

pub use batch::LabeledBatch;
pub use checkpoint::{load, load_expecting, save, Checkpoint};
pub use config::{NetConfig, OptimizerKind, TrainHyper};
pub use error::NetError;
pub use gradcheck::{gradient_check, GradCheckReport};
pub use loss::{loss, LossParts};
pub use network::{Network, Prediction};
pub use optim::{AutoClip, StepMetrics, Trainer};
pub use real::Real;
