//! Limit cycles from the self-sustaining equation `F(X) G(jw) = -1`.
//!
//! With `w` fixed at a phase crossover the equation reduces to `F(X) = K`,
//! `K` the gain margin there. Each root is labelled by whether the point
//! `-1/F` leaves or enters the region enclosed by the Nyquist contour as `X`
//! grows through it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::descfun::DescribingFunction;
use crate::error::{Error, Result};
use crate::linsys::{LinearPlant, NyquistContour, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN};

/// Relative amplitude offset of the stability probes.
pub const PROBE_DELTA: f64 = 1e-3;
pub const SCAN_POINTS: usize = 4096;
/// Residual target `|F - K|` for refined roots.
pub const ROOT_TOL: f64 = 1e-10;
const DEDUP_REL: f64 = 1e-6;
const MAX_REFINE: usize = 200;
const CONTOUR_POINTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        })
    }
}

/// All `X` in the search range of `df` with `F(X) = gain_margin`, ascending.
///
/// Sign changes of `F - K` on a dense log grid (kinks included), refined by
/// bisection with Newton steps where a derivative is available. Roots where
/// `F` only touches `K` without crossing are not reported.
pub fn find_intersections(df: &dyn DescribingFunction, gain_margin: f64) -> Result<Vec<f64>> {
    let (lo, hi) = df.search_range();
    find_intersections_in(df, gain_margin, lo, hi)
}

pub fn find_intersections_in(
    df: &dyn DescribingFunction,
    gain_margin: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    if !(gain_margin > 0.0) || !gain_margin.is_finite() {
        return Err(Error::Domain(format!(
            "gain margin must be positive, got {gain_margin}"
        )));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "invalid amplitude range [{lo}, {hi}]"
        )));
    }
    let mut grid = crate::log_grid(lo, hi, SCAN_POINTS);
    grid.extend(df.kinks().into_iter().filter(|k| *k > lo && *k < hi));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let g = |x: f64| df.value(x).map(|f| f - gain_margin);
    let values: Vec<f64> = grid.iter().map(|&x| g(x)).collect::<Result<_>>()?;

    let mut roots = Vec::new();
    if values[0] == 0.0 {
        roots.push(grid[0]);
    }
    for i in 1..grid.len() {
        let (ga, gb) = (values[i - 1], values[i]);
        if gb == 0.0 {
            roots.push(grid[i]);
        } else if ga != 0.0 && ga.signum() != gb.signum() {
            roots.push(refine(df, gain_margin, grid[i - 1], grid[i], ga)?);
        }
    }
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        match out.last() {
            Some(&prev) if (r - prev).abs() <= DEDUP_REL * r.abs().max(prev.abs()) => {}
            _ => out.push(r),
        }
    }
    Ok(out)
}

fn refine(df: &dyn DescribingFunction, k: f64, mut a: f64, mut b: f64, ga: f64) -> Result<f64> {
    let sa = ga.signum();
    let mut x = 0.5 * (a + b);
    for _ in 0..MAX_REFINE {
        let gx = df.value(x)? - k;
        if gx.abs() <= ROOT_TOL {
            return Ok(x);
        }
        if gx.signum() == sa {
            a = x;
        } else {
            b = x;
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        // Newton step when it stays inside the bracket, bisection otherwise
        x = match df.derivative(x) {
            Some(d) if d != 0.0 && d.is_finite() => {
                let n = x - gx / d;
                if n > a && n < b {
                    n
                } else {
                    mid
                }
            }
            _ => mid,
        };
    }
    // bracket collapsed: return the endpoint with the smaller residual
    let (fa, fb) = ((df.value(a)? - k).abs(), (df.value(b)? - k).abs());
    Ok(if fa <= fb { a } else { b })
}

/// `-1/F(X)`; `None` when `F(X) = 0` (the point sits at infinity).
fn critical_point(df: &dyn DescribingFunction, amplitude: f64) -> Result<Option<Complex64>> {
    let f = df.value(amplitude)?;
    Ok((f != 0.0).then(|| Complex64::new(-1.0 / f, 0.0)))
}

/// Stability of the cycle at `amplitude` from enclosure of the probes `-1/F(X(1 -+ delta))`.
pub fn classify(
    contour: &NyquistContour,
    df: &dyn DescribingFunction,
    amplitude: f64,
) -> Result<Stability> {
    let enclosed = |x: f64| -> Result<bool> {
        Ok(critical_point(df, x)?.is_some_and(|p| contour.encloses(p)))
    };
    let below = enclosed(amplitude * (1.0 - PROBE_DELTA))?;
    let above = enclosed(amplitude * (1.0 + PROBE_DELTA))?;
    match (below, above) {
        (true, false) => Ok(Stability::Stable),
        (false, true) => Ok(Stability::Unstable),
        _ => Err(Error::AmbiguousClassification {
            amplitude,
            below_enclosed: below,
            above_enclosed: above,
        }),
    }
}

/// Contour over the default frequency range with `crossovers` inserted.
pub fn default_contour(plant: &LinearPlant, crossovers: &[f64]) -> Result<NyquistContour> {
    NyquistContour::new(
        plant,
        DEFAULT_OMEGA_MIN,
        DEFAULT_OMEGA_MAX,
        CONTOUR_POINTS,
        crossovers,
    )
}

/// Steady-state state-space orbit `x(t) = cos(wt) x0 + sin(wt) xq` of the
/// plant driven by `Y1 sin(wt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub omega: f64,
    /// State at `t = 0`.
    pub x0: Vec<f64>,
    /// State at `t = pi / (2w)`.
    pub xq: Vec<f64>,
}

impl Ellipse {
    pub fn at(&self, t: f64) -> Vec<f64> {
        let (s, c) = (self.omega * t).sin_cos();
        self.x0
            .iter()
            .zip(&self.xq)
            .map(|(a, b)| c * a + s * b)
            .collect()
    }

    pub fn order(&self) -> usize {
        self.x0.len()
    }
}

/// With `H = (jwI - A)^-1 B`, the amplitudes are `Y1 |H|` and the phases `arg H`.
pub fn ellipse_estimate(plant: &LinearPlant, omega: f64, y1: f64) -> Result<Ellipse> {
    let h = plant.h_of_jw(omega)?;
    let (amp, phase): (Vec<f64>, Vec<f64>) = h.iter().map(|z| (y1 * z.norm(), z.arg())).unzip();
    Ok(Ellipse {
        omega,
        x0: amp.iter().zip(&phase).map(|(a, p)| a * p.sin()).collect(),
        xq: amp.iter().zip(&phase).map(|(a, p)| a * p.cos()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycleEstimate {
    pub omega: f64,
    #[serde(rename = "X")]
    pub amplitude: f64,
    pub stability: Stability,
    pub gain_margin: f64,
    /// First-harmonic amplitude of `y`, `F(X) X`.
    #[serde(rename = "Y1")]
    pub y1: f64,
    pub ellipse: Ellipse,
}

/// Every cycle predicted at one crossover.
pub fn estimate_limit_cycles(
    plant: &LinearPlant,
    contour: &NyquistContour,
    df: &dyn DescribingFunction,
    omega: f64,
    gain_margin: f64,
) -> Result<Vec<LimitCycleEstimate>> {
    find_intersections(df, gain_margin)?
        .into_iter()
        .map(|x| {
            let stability = classify(contour, df, x)?;
            let y1 = df.value(x)? * x;
            let ellipse = ellipse_estimate(plant, omega, y1)?;
            Ok(LimitCycleEstimate {
                omega,
                amplitude: x,
                stability,
                gain_margin,
                y1,
                ellipse,
            })
        })
        .collect()
}
