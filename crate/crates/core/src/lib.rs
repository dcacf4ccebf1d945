//! Detection of mutual influences between configurable agents.
//!
//! Agents log their configuration and a local performance value every time
//! step. The [`detection`] module scores how strongly a remote agent's
//! configuration parts explain a target agent's performance, both directly
//! and conditioned on the target's own configuration, and tests the result
//! with permutation nulls. [`camera`] simulates a smart-camera network that
//! produces such logs, and [`taxonomy`] maps a coarse system description to
//! detection settings.

pub mod camera;
pub mod detection;
pub mod measures;
pub mod model;
pub mod synthetic;
pub mod taxonomy;
