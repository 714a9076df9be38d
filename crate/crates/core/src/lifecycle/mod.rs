//! Per-transaction lifecycle control.

mod controller;
mod model;
mod stochastic;

pub use controller::{
    run_traversal_shared, Controller, ControllerConfig, ControllerError, HookError, NoHooks, StageContext, StageHooks,
    TraversalError, DEFAULT_CONFIRMATIONS,
};
pub use model::{LifecycleState, LifecycleTrace, Stage, TraceStep, TransitionRecord, TraversalPlan, EDGES};
pub use stochastic::{SoakStats, StochasticDriver, StochasticProfile, MEAN_BLOCKS_BETWEEN_REORGS};
