//! Covariance-based asynchronous device-activity detection for cell-free
//! massive MIMO.
//!
//! The crate is organized around the detection pipeline:
//!
//! - [`scenario`]: random network layouts, power control, and received-signal
//!   synthesis.
//! - [`likelihood`]: model covariance, negative log-likelihood cost/gradient,
//!   and the penalized objective with rank-1 inverse maintenance.
//! - [`proximal`]: the centralized proximal-gradient solver with the
//!   closed-form block prox.
//! - [`admm`]: the consensus solvers (per-AP coordinate descent, dual ascent,
//!   and the accelerated covariance-target variant).
//! - [`baselines`]: coordinate-descent reference detectors.
//! - [`fronthaul`]: uniform scalar quantization, canonical Huffman coding,
//!   and exact bit accounting for CPU-AP messages.
//! - [`detect`]: missed-detection / false-alarm metrics, ROC sweeps, and the
//!   equal-error operating point.
//!
//! Everything here is `no_std + alloc`; IO, CLI, and parallel trial
//! orchestration live in the companion `asyncact` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod admm;
pub mod baselines;
pub mod config;
pub mod detect;
pub mod fronthaul;
pub mod likelihood;
pub mod linalg;
mod math;
pub mod proximal;
pub mod scenario;

pub use config::{NumericsConfig, SolveOptions, SystemConfig};
pub use likelihood::{Problem, SoftActivity};
pub use linalg::{CMat, C64};
pub use scenario::{ReceivedData, Scenario};
