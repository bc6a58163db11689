//! Load-aware downlink spectrum allocation for dense small-cell OFDMA
//! networks, with a fixed-allocation baseline and the closed-form
//! stochastic-geometry laws used to check the simulator.

pub mod analytics;
pub mod association;
pub mod coloring;
pub mod config;
pub mod deployment;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod linalg;
pub mod load;
pub mod propagation;
pub mod scheduling;
pub mod seed;
pub mod special;
pub mod validation;

pub use association::{associate, Association};
pub use coloring::{ChannelAllocation, InterferenceGraph};
pub use config::{ExperimentConfig, Scenario};
pub use deployment::{NetworkRealization, Point, Region};
pub use error::{Error, Result};
pub use evaluation::DropMetrics;
pub use experiment::{run_drop, run_sweep, ResultRow, SummaryRow, SweepOutput};
pub use load::{LoadEstimate, RadioParams};
pub use propagation::{ChannelState, LinkMatrix, PropagationConfig};
pub use scheduling::Schedule;
