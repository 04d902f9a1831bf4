//! Qualitative (hand-drawable) describing function.
//!
//! On `[0, X_1]` the curve is the first slope `m0`. On each following range
//! `(X_j, X_{j+1}]` it relaxes from the value reached at `X_j` toward the
//! slope `m_j` of that range through `1 - X_j/X`, and a jump `Y_j` at `X_j`
//! adds the relay bump `Y_j Psi(X_j, X)`. A jump at the origin adds the ideal
//! relay term to the first range, which makes `F(0+)` infinite.

use log::debug;

use crate::descfun::{psi, validate_grid, DescribingFunction, DescribingFunctionCurve, Provenance};
use crate::error::{Error, Result};
use crate::piecewise::PiecewiseNonlinearity;

/// Ramp from 0 at `X = X_j` toward 1 as `X -> inf`.
pub fn phi_tilde(amplitude: f64, breakpoint: f64) -> Result<f64> {
    if !(breakpoint > 0.0) || !(amplitude >= breakpoint) || !amplitude.is_finite() {
        return Err(Error::Domain(format!(
            "phi_tilde needs X >= X_j > 0, got X = {amplitude}, X_j = {breakpoint}"
        )));
    }
    Ok(1.0 - breakpoint / amplitude)
}

/// The exact relay shape, reused unchanged.
pub fn psi_tilde(amplitude: f64, breakpoint: f64) -> Result<f64> {
    psi(breakpoint, amplitude)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QualSegment {
    start: f64,
    start_value: f64,
    target: f64,
    jump: f64,
}

impl QualSegment {
    fn value(&self, amplitude: f64) -> Result<f64> {
        let mut f =
            self.start_value + (self.target - self.start_value) * phi_tilde(amplitude, self.start)?;
        if self.jump != 0.0 {
            f += self.jump * psi_tilde(amplitude, self.start)?;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone)]
pub struct QualitativeDescribingFunction {
    initial_slope: f64,
    origin_jump: f64,
    tail_slope: f64,
    segments: Vec<QualSegment>,
    scale: f64,
}

impl QualitativeDescribingFunction {
    pub fn new(nl: &PiecewiseNonlinearity) -> Result<Self> {
        let mut q = QualitativeDescribingFunction {
            initial_slope: nl.initial_slope(),
            origin_jump: nl.origin_jump(),
            tail_slope: nl.tail_slope(),
            segments: Vec::new(),
            scale: nl.amplitude_scale(),
        };
        debug!(
            "rule 3: F~ = m0 = {} up to the first breakpoint",
            q.initial_slope
        );
        if q.origin_jump != 0.0 {
            debug!(
                "rule 2: jump {} at the origin, F~(0+) is infinite",
                q.origin_jump
            );
        }
        for b in nl.features() {
            let start_value = q.value(b.at)?;
            debug!(
                "rule 5: range starting at X = {} from F~ = {start_value} toward m = {}{}",
                b.at,
                b.slope_after,
                if b.has_jump() {
                    format!(", relay bump Y = {}", b.jump)
                } else {
                    String::new()
                }
            );
            q.segments.push(QualSegment {
                start: b.at,
                start_value,
                target: b.slope_after,
                jump: b.jump,
            });
        }
        debug!("rule 4: F~ -> m_r = {} as X -> inf", q.tail_slope);
        Ok(q)
    }

    /// Breakpoints `X_j` that start a new range.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.start).collect()
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    fn initial_value(&self, amplitude: f64) -> Result<f64> {
        if self.origin_jump == 0.0 {
            return Ok(self.initial_slope);
        }
        if amplitude == 0.0 {
            return Err(Error::Domain(
                "F~(0+) is infinite for a jump at the origin".into(),
            ));
        }
        Ok(self.initial_slope + self.origin_jump * psi(0.0, amplitude)?)
    }
}

impl DescribingFunction for QualitativeDescribingFunction {
    fn value(&self, amplitude: f64) -> Result<f64> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::Domain(format!(
                "amplitude must be nonnegative and finite, got {amplitude}"
            )));
        }
        // ranges are half-open on the left: X_j < X <= X_{j+1}
        let idx = self.segments.partition_point(|s| s.start < amplitude);
        match idx {
            0 => self.initial_value(amplitude),
            k => self.segments[k - 1].value(amplitude),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        self.breakpoints()
    }

    fn search_range(&self) -> (f64, f64) {
        let first = self.segments.first().map(|s| s.start).unwrap_or(self.scale);
        (first * 1e-3, 100.0 * self.scale)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Qualitative
    }
}

pub fn df_qualitative(nl: &PiecewiseNonlinearity, grid: &[f64]) -> Result<DescribingFunctionCurve> {
    validate_grid(grid, !nl.has_origin_jump())?;
    let q = QualitativeDescribingFunction::new(nl)?;
    let values = grid
        .iter()
        .map(|&x| q.value(x))
        .collect::<Result<Vec<_>>>()?;
    DescribingFunctionCurve::new(grid.to_vec(), values, Provenance::Qualitative)
}
