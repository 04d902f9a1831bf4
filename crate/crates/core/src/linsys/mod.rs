//! Rational plants `G(s) = k num(s) / den(s)`.
//!
//! Frequency response, phase crossovers with their gain margins, and the
//! controllable canonical realization used for the steady-state ellipse and
//! the closed-loop simulator.

mod nyquist;

pub use nyquist::NyquistContour;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_OMEGA_MIN: f64 = 1e-3;
pub const DEFAULT_OMEGA_MAX: f64 = 1e3;

/// Points per decade of the crossover scan.
const CROSSOVER_SCAN_DENSITY: f64 = 200.0;
const MAX_BISECTIONS: usize = 200;

/// Horner evaluation of descending real coefficients at a complex point.
pub fn polyval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// JSON form `{"num": [..], "den": [..], "k": ..}`; coefficients in descending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantDescriptor {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    #[serde(default = "unit_gain")]
    pub k: f64,
}

fn unit_gain() -> f64 {
    1.0
}

/// `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// `(jw I - A)^-1 B`.
    pub fn h_of_jw(&self, omega: f64) -> Result<Vec<Complex64>> {
        self.resolvent_times_b(Complex64::new(0.0, omega))
            .ok_or(Error::SingularMatrix(omega))
    }

    /// `C (sI - A)^-1 B + D`, or `None` when `s` is an eigenvalue of `A`.
    pub fn transfer(&self, s: Complex64) -> Option<Complex64> {
        let h = self.resolvent_times_b(s)?;
        Some(
            h.iter()
                .zip(self.c.iter())
                .map(|(hi, &ci)| hi * ci)
                .sum::<Complex64>()
                + self.d,
        )
    }

    fn resolvent_times_b(&self, s: Complex64) -> Option<Vec<Complex64>> {
        let n = self.order();
        if n == 0 {
            return Some(Vec::new());
        }
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(self.b[i], 0.0));
        let h = m.lu().solve(&rhs)?;
        h.iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
            .then(|| h.iter().copied().collect())
    }
}

/// One sample of `G(jw)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyResponsePoint {
    pub omega: f64,
    #[serde(skip)]
    pub value: Complex64,
    pub re: f64,
    pub im: f64,
}

impl FrequencyResponsePoint {
    fn new(omega: f64, value: Complex64) -> Self {
        FrequencyResponsePoint {
            omega,
            value,
            re: value.re,
            im: value.im,
        }
    }
}

/// A crossing of the negative real axis: `Im G(jw) = 0`, `Re G(jw) < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    pub omega: f64,
    /// `1 / |G(jw)|`.
    pub gain_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlantDescriptor", into = "PlantDescriptor")]
pub struct LinearPlant {
    num: Vec<f64>,
    den: Vec<f64>,
    gain: f64,
}

impl LinearPlant {
    pub fn new(num: Vec<f64>, den: Vec<f64>, gain: f64) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidPlant(m));
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) || !gain.is_finite() {
            return invalid("coefficients and gain must be finite".into());
        }
        let strip = |v: Vec<f64>| -> Vec<f64> {
            let first = v.iter().position(|&c| c != 0.0).unwrap_or(v.len());
            v[first..].to_vec()
        };
        let (num, den) = (strip(num), strip(den));
        if den.is_empty() {
            return invalid("denominator is identically zero".into());
        }
        if num.len() > den.len() {
            return invalid(format!(
                "improper transfer function: deg num = {} > deg den = {}",
                num.len() - 1,
                den.len() - 1
            ));
        }
        Ok(LinearPlant { num, den, gain })
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        LinearPlant {
            gain,
            ..self.clone()
        }
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_empty() || self.num.len() < self.den.len()
    }

    /// Number of poles at `s = 0` left after cancelling common factors of `s`.
    pub fn origin_poles(&self) -> usize {
        let trailing = |v: &[f64]| v.iter().rev().take_while(|&&c| c == 0.0).count();
        trailing(&self.den).saturating_sub(trailing(&self.num))
    }

    pub fn transfer_function(&self, s: Complex64) -> Result<Complex64> {
        let d = polyval(&self.den, s);
        let scale: f64 = self
            .den
            .iter()
            .rev()
            .enumerate()
            .map(|(i, c)| c.abs() * s.norm().powi(i as i32))
            .sum();
        if d.norm() <= 1e-13 * scale {
            return Err(Error::PoleOnAxis(s.im));
        }
        Ok(self.gain * polyval(&self.num, s) / d)
    }

    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Domain(format!(
                "frequency must be positive, got {omega}"
            )));
        }
        self.transfer_function(Complex64::new(0.0, omega))
    }

    pub fn nyquist_samples(&self, grid: &[f64]) -> Result<Vec<FrequencyResponsePoint>> {
        grid.iter()
            .map(|&w| Ok(FrequencyResponsePoint::new(w, self.freq_response(w)?)))
            .collect()
    }

    /// All negative-real-axis crossings in `[omega_min, omega_max]`, ascending in frequency.
    pub fn phase_crossovers(&self, omega_min: f64, omega_max: f64) -> Result<Vec<Crossover>> {
        if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid frequency range [{omega_min}, {omega_max}]"
            )));
        }
        let decades = (omega_max / omega_min).log10();
        let n = ((decades * CROSSOVER_SCAN_DENSITY).ceil() as usize).max(16) + 1;
        let grid = crate::log_grid(omega_min, omega_max, n);
        let samples = self.nyquist_samples(&grid)?;

        let mut out = Vec::new();
        let mut push = |w: f64, g: Complex64| {
            if g.re < 0.0 {
                out.push(Crossover {
                    omega: w,
                    gain_margin: 1.0 / g.norm(),
                });
            }
        };
        if samples[0].im == 0.0 {
            push(samples[0].omega, samples[0].value);
        }
        for pair in samples.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.im == 0.0 {
                push(b.omega, b.value);
            } else if a.im != 0.0 && a.im.signum() != b.im.signum() {
                let w = self.bisect_imaginary_zero(a.omega, b.omega, a.im)?;
                push(w, self.freq_response(w)?);
            }
        }
        Ok(out)
    }

    fn bisect_imaginary_zero(&self, mut lo: f64, mut hi: f64, im_lo: f64) -> Result<f64> {
        let sign_lo = im_lo.signum();
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..MAX_BISECTIONS {
            mid = 0.5 * (lo + hi);
            let g = self.freq_response(mid)?;
            if g.im.abs() <= 1e-12 * g.norm() || mid == lo || mid == hi {
                break;
            }
            if g.im.signum() == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }

    /// Controllable canonical realization of `k num / den`.
    ///
    /// States are `z, z', .., z^(n-1)` of the normalized denominator; `B = e_n`.
    pub fn realization(&self) -> StateSpace {
        let n = self.order();
        let lead = self.den[0];
        // alpha[i] multiplies s^i, i < n
        let alpha: Vec<f64> = (0..n).map(|i| self.den[n - i] / lead).collect();
        let mut beta = vec![0.0; n + 1];
        for (p, &c) in self.num.iter().rev().enumerate() {
            beta[p] = self.gain * c / lead;
        }
        let d = beta[n];
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 < n {
                if j == i + 1 {
                    1.0
                } else {
                    0.0
                }
            } else {
                -alpha[j]
            }
        });
        let b = DVector::from_fn(n, |i, _| if i + 1 == n { 1.0 } else { 0.0 });
        let c = RowDVector::from_fn(n, |_, j| beta[j] - alpha[j] * d);
        StateSpace { a, b, c, d }
    }

    pub fn h_of_jw(&self, omega: f64) -> Result<Vec<Complex64>> {
        self.realization().h_of_jw(omega)
    }

    pub fn descriptor(&self) -> PlantDescriptor {
        PlantDescriptor {
            num: self.num.clone(),
            den: self.den.clone(),
            k: self.gain,
        }
    }
}

impl TryFrom<PlantDescriptor> for LinearPlant {
    type Error = Error;

    fn try_from(d: PlantDescriptor) -> Result<Self> {
        LinearPlant::new(d.num, d.den, d.k)
    }
}

impl From<LinearPlant> for PlantDescriptor {
    fn from(p: LinearPlant) -> Self {
        p.descriptor()
    }
}
