//! Nonlinear dynamics and fractal toolkit: adaptive ODE integration, chaotic
//! maps and flows, escape-time and IFS fractals, fractal dimension, a fractal
//! image codec and a chaos-based stream cipher.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cipher;
pub mod cli;
pub mod compression;
pub mod dynamics;
pub mod fractals;
pub mod systems;
