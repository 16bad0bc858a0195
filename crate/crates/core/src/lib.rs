//! Voltage-unbalance indices, their relative bounds, and a radial
//! three-phase power-flow study harness for LV distribution feeders.

pub mod bounds;
pub mod error;
pub mod feeder;
pub mod matrix;
pub mod metrics;
pub mod phasor;
pub mod powerflow;
pub mod scenario;

pub use error::{BoundsError, FeederError, Leg, MetricError, PowerFlowError, ScenarioError};
pub use metrics::{IndexSet, Metric, MetricDetail};
pub use phasor::{LineVoltageTriple, Phasor, PhasorTriple, SequenceSet};
pub use feeder::{load_feeder, main_line, phase_impedance, BusId, FeederModel, Phase};
