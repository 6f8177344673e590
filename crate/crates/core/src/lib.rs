//! Riemannian flow matching policies.
//!
//! A policy is a conditional vector field trained to transport a base
//! distribution onto blocks of demonstrated actions, on `R^d` or on the
//! sphere `S^d`. Inference integrates the field from a base sample and the
//! first few actions of the resulting horizon are executed before the next
//! query (receding horizon).
//!
//! Module map:
//! - [`manifold`]: exp/log maps, parallel transport, distances, base sampling.
//! - [`flowmatch`]: conditional paths, target fields, and the regression loss.
//! - [`net`]: the MLP vector field with Swish activations, Adam, and EMA.
//! - [`odeint`]: Dormand–Prince and geodesic Euler flow integration.
//! - [`data`]: demonstrations, normalization, synthetic letters, training pairs.
//! - [`policy`]: training loop, action inference, and rollouts.
//! - [`metrics`]: dynamic time warping distance and jerkiness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod flowmatch;
pub mod horizon;
pub mod manifold;
pub mod metrics;
pub mod net;
pub mod odeint;
pub mod policy;

pub use error::{Error, Result};
pub use horizon::ActionHorizon;
pub use manifold::{ManifoldKind, ManifoldPoint, TangentVector};
