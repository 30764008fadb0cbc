//! Hybrid simulation and gait analysis of a compass walker with a triggered,
//! precompressed ankle spring.
//!
//! The crate is organised bottom-up:
//! - [`model`]: parameters, phase states, kinematics and energy
//! - [`dynamics`]: per-phase vector fields
//! - [`events`]: guards and reset maps
//! - [`simulator`]: the stride map
//! - [`poincare`]: fixed points, linear stability, periodicity, basins
//! - [`metrics`] and [`sweep`]: gait measures and the control-parameter sweep

pub mod dynamics;
pub mod events;
pub mod format;
pub mod metrics;
pub mod model;
pub mod poincare;
pub mod simulator;
pub mod sweep;

pub use dynamics::{double_field, pushoff_field, single_field, DynamicsMode};
pub use events::{
    collision_map_post, collision_map_pre, impulsive_pushoff_map, liftoff_map, pushoff_forces, EventOutcome,
    ImpactFlag, PushoffForces, TransitionKind,
};
pub use model::{
    chain, hip_position, total_energy, Chain, DoubleSupportState, HybridState, LiftoffPoint, ModelParams,
    ParamError, Phase, PushoffState, SectionError, SingleSupportState,
};
pub use simulator::{
    simulate, step_stride, Actuation, ConfigError, EventKind, FailureReason, FallReason, IntegratorConfig,
    StrideResult, StrideTrace, Walker,
};
pub use metrics::{classify_region, mcot, speed, GaitMetrics, Region};
pub use poincare::{
    detect_period, find_fixed_point, jacobian, return_map, FixedPoint, FixedPointRecord, Periodicity, PoincareError,
};
pub use sweep::{baseline_frontier, run_sweep, BaselinePoint, CellStatus, GridAxis, SweepCell, SweepError, SweepSpec};
