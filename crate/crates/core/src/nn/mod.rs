//! Small dense networks with exact gradients, Adam, a dueling head, and
//! interval bound propagation.

mod adam;
mod ibp;
mod network;
mod params;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use ibp::{input_box, IbpTrace, IntervalBounds, OBS_HIGH, OBS_LOW};
pub use network::{argmax, dueling_combine, log_softmax, softmax, Network, Trace};
pub use params::{Dense, NetworkSpec, Parameters};
