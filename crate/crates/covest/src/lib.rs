//! Structured covariance estimation toolkit.
//!
//! The crate bundles a dense symmetric/Hermitian linear-algebra kernel
//! ([`matcore`]), seeded ground-truth and sample synthesis ([`synth`]),
//! classical structured estimators with their tuning rules
//! ([`estimators`]), one-bit and dithered quantized estimators
//! ([`quantized`]), a massive-MIMO channel covariance pipeline ([`mimo`])
//! and a configuration-driven Monte-Carlo experiment harness ([`harness`])
//! exposed through the `covest` binary.

pub mod estimators;
pub mod harness;
pub mod matcore;
pub mod mimo;
pub mod quantized;
pub mod synth;
