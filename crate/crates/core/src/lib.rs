//! Describing functions of odd piecewise-linear nonlinearities with
//! discontinuities, and limit cycle estimation for the classic
//! nonlinearity / linear-plant feedback loop.
//!
//! The loop is `x -> y(x) -> -G(s) -> x`. A limit cycle of amplitude `X`
//! and frequency `w` is predicted wherever `F(X) G(jw) = -1`, with `F`
//! the (real) describing function of `y`.
//!
//! Layout:
//! - [`piecewise`]: breakpoint representation and dead-zone/relay decomposition.
//! - [`descfun`]: closed-form describing function, derivatives, quadrature oracle.
//! - [`qualdf`]: the hand-drawable qualitative describing function.
//! - [`linsys`]: rational plants, frequency response, crossovers, realizations.
//! - [`cycles`]: intersections, stability classification, steady-state ellipse.
//! - [`sim`]: fixed-step closed-loop simulation and oscillation measurement.
//! - [`analysis`], [`io`], [`svg`]: the pipeline and data products used by the CLI.

// `!(x > 0.0)` guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cycles;
pub mod descfun;
pub mod error;
pub mod io;
pub mod linsys;
pub mod piecewise;
pub mod qualdf;
pub mod sim;
pub mod svg;

pub use cycles::{LimitCycleEstimate, Stability};
pub use descfun::{
    DescribingFunction, DescribingFunctionCurve, ExactDescribingFunction, Provenance,
};
pub use error::{Error, Result};
pub use linsys::{LinearPlant, StateSpace};
pub use piecewise::{Decomposition, PiecewiseNonlinearity, PrimitiveComponent, PrimitiveKind};
pub use qualdf::QualitativeDescribingFunction;

/// Log-spaced grid of `n` points covering `[lo, hi]` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (n - 1) as f64;
            let mut out: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
            out[0] = lo;
            out[n - 1] = hi;
            out
        }
    }
}
