//! Secrecy rate regions for a two-user downlink where a multi-antenna base
//! station serves a multicast message to both users and a confidential
//! message to user 1, with antennas that can be repositioned inside a
//! square transmit region.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: field-response channels and antenna position vectors.
//! - [`rates`]: rate-pair evaluation, single-antenna closed forms, time
//!   sharing and single-purpose beamforming optima.
//! - [`sdp`]: a small dense primal-dual interior-point SDP solver.
//! - [`inner`]: beamforming optimisation for a fixed antenna placement via
//!   semidefinite relaxation and the Charnes-Cooper transformation.
//! - [`outer`]: antenna placement search on a sampling grid, plus the
//!   fixed-array and particle-swarm baselines.
//! - [`los`]: the line-of-sight special case with integer-spaced arrays.
//! - [`harness`]: Monte Carlo experiments, CSV output and configuration.

pub mod channel;
pub mod error;
pub mod harness;
pub mod inner;
pub mod linalg;
pub mod los;
pub mod outer;
pub mod rates;
pub mod sdp;

pub use channel::{Apv, ChannelRealization, PathSpec, Position2D, ScenarioParams, UserChannel};
pub use error::{Error, Result};
pub use inner::{InnerProblem, InnerSolution, SolveStatus};
pub use rates::{BeamformingSolution, PowerSplit, RatePair};
