//! Space and momentum variances and uncertainty products of zonal functions
//! on the sphere `S^n`, with the Abel–Poisson wavelet worked out through
//! exact closed forms of the series `Σ binom(l+2λ-1, l)·l^m·e^{-2ρl}`.
//!
//! Gegenbauer polynomials are normalized by `C_l^λ(1) = binom(l+2λ-1, l)`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abel_poisson;
pub mod cli;
pub mod error;
pub mod localization;
pub mod qseries;
pub mod quadrature;
pub mod special_fn;

pub use error::{Error, Result};
