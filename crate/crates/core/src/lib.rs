//! Bounding models for networks of independent noisy channels.
//!
//! Noisy components are replaced by networks of noiseless bit pipes whose
//! capacity regions bound the original from inside (lower models) or outside
//! (upper models). Cut computations on the resulting deterministic networks
//! give capacity bounds, and gap metrics quantify how far apart the two sides
//! are. The [`emulator`] module simulates the random emulation codes behind
//! the upper models at small block lengths.

pub mod capacity;
pub mod emulator;
pub mod error;
pub mod fmt;
pub mod grid;
pub mod info;
pub mod model;
pub mod netgraph;
pub mod rate;
pub mod rng;

pub use error::{Error, Result};
pub use info::{Channel, Dmc, GaussianBc, GaussianChannelSpec, GaussianMac, JointPmf, Pmf, Role};
pub use model::{BitPipeModel, EdgeKey, ModelPair, RateVector, Side};
pub use netgraph::{Component, Demand, Network};
pub use rate::Rate;
