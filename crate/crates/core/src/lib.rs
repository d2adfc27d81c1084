//! Atoms moving through a coupled-cavity array.
//!
//! Units throughout: `J = a = ħ = 1`, so the band speed `c̄ = 2Ja` equals 2
//! and the band center sits at zero. Physical-unit helpers live in
//! [`platforms`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod band;
pub mod dynamics;
pub mod emission;
pub mod platforms;
pub mod quad;
pub mod spectral;

pub mod cli;
