//! Threshold-logic modelling for hTron gate networks: device calibration and
//! switching dynamics, bias-configured gates, netlists, transient simulation,
//! technology mapping and bias-margin analysis.

pub mod device;
pub mod gate;
pub mod margins;
pub mod netlist;
pub mod sim;
pub mod synth;
