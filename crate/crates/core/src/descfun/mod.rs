//! Exact describing function of a piecewise nonlinearity.
//!
//! `F(X) = m0 + sum (m_j - m_{j-1}) Phi(X/X_j) + sum Y_j Psi(X_j, X)`, the
//! superposition of the dead-zone and relay primitives returned by
//! [`PiecewiseNonlinearity::decompose`]. [`df_oracle`] recomputes the same
//! quantity from the Fourier integral as an independent check.

pub mod quadrature;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::{Decomposition, PiecewiseNonlinearity, PrimitiveComponent, PrimitiveKind};
use quadrature::AdaptiveSimpson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Qualitative,
    Oracle,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::Qualitative => "qualitative",
            Provenance::Oracle => "oracle",
        })
    }
}

/// Dead-zone shape function: 0 below the threshold, rising to 1 as `X -> inf`.
pub fn phi(amplitude: f64, threshold: f64) -> Result<f64> {
    check_amplitude(amplitude)?;
    check_threshold(threshold)?;
    if threshold == 0.0 {
        return Ok(1.0);
    }
    if amplitude <= threshold {
        return Ok(0.0);
    }
    let u = threshold / amplitude;
    Ok(1.0 - 2.0 / PI * (u.asin() + u * ((1.0 - u) * (1.0 + u)).sqrt()))
}

/// Relay-with-threshold shape function `4/(pi X) sqrt(1 - (X1/X)^2)`, 0 below the threshold.
pub fn psi(threshold: f64, amplitude: f64) -> Result<f64> {
    check_amplitude(amplitude)?;
    check_threshold(threshold)?;
    if amplitude < threshold {
        return Ok(0.0);
    }
    let u = threshold / amplitude;
    Ok(4.0 / (PI * amplitude) * ((1.0 - u) * (1.0 + u)).sqrt())
}

/// `dF/dX` of a single primitive, defined for `X > X1` only.
pub fn df_derivative(component: &PrimitiveComponent, amplitude: f64) -> Result<f64> {
    check_threshold(component.threshold)?;
    let (x, x1) = (amplitude, component.threshold);
    if !(x > x1) {
        return Err(Error::Domain(format!(
            "derivative needs X > X1, got X = {x}, X1 = {x1}"
        )));
    }
    let root = ((x - x1) * (x + x1)).sqrt();
    let x3 = x * x * x;
    Ok(match component.kind {
        // 4 m X1 (X^2 - X1^2) / (pi X^3 sqrt(X^2 - X1^2)), simplified
        PrimitiveKind::DeadZone => 4.0 * component.magnitude * x1 * root / (PI * x3),
        PrimitiveKind::Relay => {
            4.0 * component.magnitude * (2.0 * x1 * x1 - x * x) / (PI * x3 * root)
        }
    })
}

impl PrimitiveComponent {
    pub fn describing_function(&self, amplitude: f64) -> Result<f64> {
        Ok(self.magnitude
            * match self.kind {
                PrimitiveKind::DeadZone => phi(amplitude, self.threshold)?,
                PrimitiveKind::Relay => psi(self.threshold, amplitude)?,
            })
    }
}

fn check_amplitude(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "amplitude must be positive and finite, got {x}"
        )))
    }
}

fn check_threshold(x1: f64) -> Result<()> {
    if x1 >= 0.0 && x1.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "threshold must be nonnegative, got {x1}"
        )))
    }
}

/// A real, amplitude-dependent equivalent gain.
pub trait DescribingFunction {
    fn value(&self, amplitude: f64) -> Result<f64>;

    /// `dF/dX` where cheaply available; root refinement falls back to bisection otherwise.
    fn derivative(&self, _amplitude: f64) -> Option<f64> {
        None
    }

    /// Amplitudes where `F` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Search interval `(lo, hi)` that contains every crossing of interest.
    fn search_range(&self) -> (f64, f64);

    fn provenance(&self) -> Provenance;
}

/// Closed-form describing function built from the primitive decomposition.
#[derive(Debug, Clone)]
pub struct ExactDescribingFunction {
    decomposition: Decomposition,
    first_feature: Option<f64>,
    scale: f64,
}

impl ExactDescribingFunction {
    pub fn new(nl: &PiecewiseNonlinearity) -> Self {
        ExactDescribingFunction {
            decomposition: nl.decompose(),
            first_feature: nl.first_feature(),
            scale: nl.amplitude_scale(),
        }
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    fn has_origin_relay(&self) -> bool {
        self.decomposition.relays().any(|c| c.threshold == 0.0)
    }
}

impl DescribingFunction for ExactDescribingFunction {
    fn value(&self, amplitude: f64) -> Result<f64> {
        if amplitude == 0.0 {
            return if self.has_origin_relay() {
                Err(Error::Domain(
                    "F(0+) is infinite for a jump at the origin".into(),
                ))
            } else {
                Ok(self.decomposition.initial_slope)
            };
        }
        let mut f = self.decomposition.initial_slope;
        for c in &self.decomposition.components {
            f += c.describing_function(amplitude)?;
        }
        Ok(f)
    }

    fn derivative(&self, amplitude: f64) -> Option<f64> {
        let mut d = 0.0;
        for c in &self.decomposition.components {
            if amplitude > c.threshold {
                d += df_derivative(c, amplitude).ok()?;
            } else if amplitude == c.threshold && c.kind == PrimitiveKind::Relay {
                return None;
            }
        }
        Some(d)
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .decomposition
            .components
            .iter()
            .map(|c| c.threshold)
            .filter(|&t| t > 0.0)
            .collect();
        k.dedup();
        k
    }

    fn search_range(&self) -> (f64, f64) {
        let lo = self.first_feature.unwrap_or(self.scale) * 1e-3;
        (lo, 100.0 * self.scale)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Exact
    }
}

/// Sampled `(X, F)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribingFunctionCurve {
    amplitudes: Vec<f64>,
    values: Vec<f64>,
    provenance: Provenance,
}

impl DescribingFunctionCurve {
    pub fn new(amplitudes: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if amplitudes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} amplitudes but {} values",
                amplitudes.len(),
                values.len()
            )));
        }
        validate_grid(&amplitudes, true)?;
        if let Some(i) = (0..values.len()).find(|&i| amplitudes[i] > 0.0 && !values[i].is_finite())
        {
            return Err(Error::InvalidGrid(format!(
                "F is not finite at X = {}",
                amplitudes[i]
            )));
        }
        Ok(DescribingFunctionCurve {
            amplitudes,
            values,
            provenance,
        })
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.amplitudes
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Linear interpolation between samples; `None` outside the sampled range.
    pub fn interpolate(&self, amplitude: f64) -> Option<f64> {
        let xs = &self.amplitudes;
        if xs.is_empty() || amplitude < xs[0] || amplitude > xs[xs.len() - 1] {
            return None;
        }
        let i = xs.partition_point(|&x| x <= amplitude);
        if i == xs.len() {
            return Some(self.values[xs.len() - 1]);
        }
        let (x0, x1) = (xs[i - 1], xs[i]);
        let (f0, f1) = (self.values[i - 1], self.values[i]);
        Some(f0 + (f1 - f0) * (amplitude - x0) / (x1 - x0))
    }
}

impl DescribingFunction for DescribingFunctionCurve {
    fn value(&self, amplitude: f64) -> Result<f64> {
        self.interpolate(amplitude)
            .ok_or_else(|| Error::Domain(format!("X = {amplitude} outside the sampled curve")))
    }

    fn kinks(&self) -> Vec<f64> {
        self.amplitudes.clone()
    }

    fn search_range(&self) -> (f64, f64) {
        let lo = self
            .amplitudes
            .iter()
            .copied()
            .find(|&x| x > 0.0)
            .unwrap_or(0.0);
        (lo, self.amplitudes.last().copied().unwrap_or(0.0))
    }

    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Grid must be nonempty, finite, strictly increasing and positive
/// (zero allowed as the first entry when `allow_zero`).
pub fn validate_grid(grid: &[f64], allow_zero: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite amplitude {x}")));
    }
    if grid[0] < 0.0 || (grid[0] == 0.0 && !allow_zero) {
        return Err(Error::InvalidGrid(format!(
            "amplitudes must be positive, got {}",
            grid[0]
        )));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Exact describing function sampled on `grid`.
pub fn df_exact(nl: &PiecewiseNonlinearity, grid: &[f64]) -> Result<DescribingFunctionCurve> {
    validate_grid(grid, !nl.has_origin_jump())?;
    let df = ExactDescribingFunction::new(nl);
    let values = grid
        .iter()
        .map(|&x| df.value(x))
        .collect::<Result<Vec<_>>>()?;
    DescribingFunctionCurve::new(grid.to_vec(), values, Provenance::Exact)
}

/// First-harmonic Fourier coefficients of `y(X sin t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstHarmonic {
    /// Cosine coefficient; zero for odd characteristics.
    pub a1: f64,
    /// Sine coefficient.
    pub b1: f64,
    /// `b1 / X` from the quarter-period integral.
    pub value: f64,
}

/// Describing function by quadrature of the Fourier integral, with the `a1 = 0` self-check.
pub fn df_oracle(nl: &PiecewiseNonlinearity, amplitude: f64) -> Result<f64> {
    Ok(first_harmonic(nl, amplitude, &AdaptiveSimpson::default())?.value)
}

pub fn df_oracle_curve(
    nl: &PiecewiseNonlinearity,
    grid: &[f64],
) -> Result<DescribingFunctionCurve> {
    validate_grid(grid, false)?;
    let values = grid
        .iter()
        .map(|&x| df_oracle(nl, x))
        .collect::<Result<Vec<_>>>()?;
    DescribingFunctionCurve::new(grid.to_vec(), values, Provenance::Oracle)
}

pub fn first_harmonic(
    nl: &PiecewiseNonlinearity,
    amplitude: f64,
    quad: &AdaptiveSimpson,
) -> Result<FirstHarmonic> {
    check_amplitude(amplitude)?;
    let x = amplitude;
    // angles in (0, pi/2) where X sin t meets a breakpoint
    let mut kinks: Vec<f64> = nl
        .breakpoints()
        .iter()
        .filter(|b| b.at < x)
        .map(|b| (b.at / x).asin())
        .collect();
    kinks.dedup();

    // Each piece lies inside one linear segment of y, so the integrand is
    // smooth there; the segment is looked up once from the piece midpoint.
    let quarter: Vec<f64> = std::iter::once(0.0)
        .chain(kinks.iter().copied())
        .chain([FRAC_PI_2])
        .collect();
    let mut quarter_integral = 0.0;
    for w in quarter.windows(2) {
        let seg = *nl.segment_at(x * (0.5 * (w[0] + w[1])).sin());
        quarter_integral +=
            quad.integrate(|t: f64| seg.value(x * t.sin()) * t.sin(), w[0], w[1])?;
    }
    let value = 4.0 / (PI * x) * quarter_integral;

    let mut full: Vec<f64> = vec![-PI, 0.0, PI];
    for &k in &kinks {
        full.extend([k, PI - k, -k, k - PI]);
    }
    full.sort_by(f64::total_cmp);
    full.dedup();
    let (mut a1, mut b1) = (0.0, 0.0);
    for w in full.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let sign = if mid.sin() < 0.0 { -1.0 } else { 1.0 };
        let seg = *nl.segment_at((x * mid.sin()).abs());
        let y = |t: f64| sign * seg.value((x * t.sin()).abs());
        a1 += quad.integrate(|t| y(t) * t.cos(), w[0], w[1])?;
        b1 += quad.integrate(|t| y(t) * t.sin(), w[0], w[1])?;
    }
    let (a1, b1) = (a1 / PI, b1 / PI);
    if a1.abs() > 1e-8 * (1.0 + b1.abs()) {
        return Err(Error::SymmetryViolation { a1, b1 });
    }
    Ok(FirstHarmonic { a1, b1, value })
}
