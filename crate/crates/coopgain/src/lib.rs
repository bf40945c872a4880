//! Numerical toolbox for encoder cooperation on state-dependent multiple
//! access channels (MACs).
//!
//! Two encoders, each seeing one component of a distributed channel state,
//! talk to a single decoder that sees the full state. A rate-limited
//! *cooperation facilitator* (CF) exchanges a few bits with the encoders
//! before transmission. This crate computes, at desk scale over small finite
//! alphabets:
//!
//! * no-cooperation sum-capacity baselines and outer regions ([`bounds`]),
//! * cooperation inner bounds under four state-causality regimes ([`bounds`]),
//! * exact membership checks for the channel classes whose cooperation gain
//!   has infinite slope at zero CF rate, plus slope profiles ([`gain`]),
//! * closed forms for the Gaussian MAC with binary fading ([`gaussian`]),
//! * a Monte Carlo simulation of the CF coordination coding protocol
//!   ([`sim`]).
//!
//! All information quantities are in bits. Everything is deterministic given
//! the caller-supplied seeds; randomized routines use counter-keyed streams
//! so results are pure functions of `(seed, stream key)`.

pub mod bounds;
pub mod channel;
pub mod gain;
pub mod gaussian;
pub mod prob;
pub mod sim;

pub use bounds::{CoutBudget, Provenance, RateRegion, SumRateBound};
pub use channel::{CausalityTag, InputPolicy, StateMac};
pub use gain::{ClassReport, LambdaPath, SlopeProfile, SlopeVerdict};
pub use gaussian::GaussianParams;
pub use prob::{Axis, CondKernel, Dist, JointDist, RngKey};
pub use sim::{CodeConfig, SimResult};
