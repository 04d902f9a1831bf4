//! The full pipeline behind `dfkit analyze`.

use serde::Serialize;

use crate::cycles::{default_contour, estimate_limit_cycles, Ellipse, Stability};
use crate::descfun::{
    DescribingFunction, DescribingFunctionCurve, ExactDescribingFunction, Provenance,
};
use crate::error::Result;
use crate::linsys::{LinearPlant, PlantDescriptor, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN};
use crate::piecewise::{NonlinearityDescriptor, PiecewiseNonlinearity};
use crate::qualdf::QualitativeDescribingFunction;
use crate::sim::{simulate_with, SimConfig, Verdict};

pub const SCHEMA_VERSION: u32 = 1;
pub const NOTE_ORIGIN_STABLE: &str = "origin globally asymptotically stable";
pub const NOTE_NO_CYCLE: &str = "no limit cycle predicted";
pub const NOTE_NO_CROSSOVER: &str = "no phase crossover";
/// Initial conditions of verification runs, as multiples of the ellipse basis `x0`.
pub const SIM_SCALES: [f64; 2] = [0.5, 1.5];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub qualitative: bool,
    pub simulate: bool,
    /// Emit ellipses for unstable cycles too.
    pub unstable_ellipses: bool,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            qualitative: false,
            simulate: false,
            unstable_ellipses: false,
            omega_min: DEFAULT_OMEGA_MIN,
            omega_max: DEFAULT_OMEGA_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Realization {
    pub form: &'static str,
    pub order: usize,
    pub loop_signal: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRun {
    pub scale: f64,
    pub x0: Vec<f64>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    #[serde(rename = "X")]
    pub amplitude: f64,
    #[serde(rename = "Y1")]
    pub y1: f64,
    pub stability: Stability,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ellipse: Option<Ellipse>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Vec<SimulationRun>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverReport {
    pub omega: f64,
    pub gain_margin: f64,
    pub cycles: Vec<CycleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSamples {
    #[serde(rename = "X")]
    pub amplitudes: Vec<f64>,
    #[serde(rename = "F")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub nonlinearity: NonlinearityDescriptor,
    pub plant: PlantDescriptor,
    pub describing_function: Provenance,
    pub realization: Realization,
    /// First crossover, which the top-level `cycles` and `ellipse` refer to.
    pub omega: Option<f64>,
    pub gain_margin: Option<f64>,
    pub cycles: Vec<CycleReport>,
    /// Ellipse of the largest stable cycle at the first crossover.
    pub ellipse: Option<Ellipse>,
    pub crossovers: Vec<CrossoverReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<CurveSamples>,
}

impl Report {
    pub fn has_crossover(&self) -> bool {
        !self.crossovers.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `X = (d, 2d, .., Xm)` with `Xm = 1.1 X_r` and `d = Xm / 200`.
pub fn default_grid(nl: &PiecewiseNonlinearity) -> Vec<f64> {
    let xm = 1.1 * nl.amplitude_scale();
    uniform_grid(xm / 200.0, xm)
}

/// `(step, 2 step, ..)` up to and including `xm` (within rounding).
pub fn uniform_grid(step: f64, xm: f64) -> Vec<f64> {
    if !(step > 0.0) || !(xm >= step) || !xm.is_finite() {
        return Vec::new();
    }
    let n = (xm / step * (1.0 + 1e-12)).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

pub fn describing_function(
    nl: &PiecewiseNonlinearity,
    qualitative: bool,
) -> Result<Box<dyn DescribingFunction>> {
    Ok(if qualitative {
        Box::new(QualitativeDescribingFunction::new(nl)?)
    } else {
        Box::new(ExactDescribingFunction::new(nl))
    })
}

pub fn analyze(
    nl: &PiecewiseNonlinearity,
    plant: &LinearPlant,
    opts: &AnalysisOptions,
) -> Result<Report> {
    let df = describing_function(nl, opts.qualitative)?;
    let crossings = plant.phase_crossovers(opts.omega_min, opts.omega_max)?;
    let omegas: Vec<f64> = crossings.iter().map(|c| c.omega).collect();
    let order = plant.order();

    let mut crossovers = Vec::with_capacity(crossings.len());
    if !crossings.is_empty() {
        let contour = default_contour(plant, &omegas)?;
        for c in &crossings {
            let estimates =
                estimate_limit_cycles(plant, &contour, df.as_ref(), c.omega, c.gain_margin)?;
            let mut cycles = Vec::with_capacity(estimates.len());
            for e in estimates {
                let simulation = if opts.simulate {
                    Some(verification_runs(nl, plant, c.omega, &e.ellipse)?)
                } else {
                    None
                };
                let show = e.stability == Stability::Stable || opts.unstable_ellipses;
                cycles.push(CycleReport {
                    amplitude: e.amplitude,
                    y1: e.y1,
                    stability: e.stability,
                    ellipse: show.then_some(e.ellipse),
                    simulation,
                });
            }
            crossovers.push(CrossoverReport {
                omega: c.omega,
                gain_margin: c.gain_margin,
                cycles,
            });
        }
    }

    let first = crossovers.first();
    let cycles = first.map(|c| c.cycles.clone()).unwrap_or_default();
    let ellipse = cycles
        .iter()
        .rev()
        .find(|c| c.stability == Stability::Stable)
        .and_then(|c| c.ellipse.clone());
    let note = if crossovers.is_empty() {
        Some(NOTE_NO_CROSSOVER.to_string())
    } else if crossovers.iter().all(|c| c.cycles.is_empty()) {
        let (lo, hi) = df.search_range();
        let below_everywhere = crossings.iter().all(|c| {
            crate::log_grid(lo, hi, crate::cycles::SCAN_POINTS)
                .into_iter()
                .all(|x| df.value(x).map(|f| f < c.gain_margin).unwrap_or(false))
        });
        Some(
            if below_everywhere {
                NOTE_ORIGIN_STABLE
            } else {
                NOTE_NO_CYCLE
            }
            .to_string(),
        )
    } else {
        None
    };
    let df_samples = if crossovers.is_empty() {
        let grid = default_grid(nl);
        let values = grid
            .iter()
            .map(|&x| df.value(x))
            .collect::<Result<Vec<_>>>()?;
        Some(CurveSamples {
            amplitudes: grid,
            values,
        })
    } else {
        None
    };

    Ok(Report {
        schema: SCHEMA_VERSION,
        nonlinearity: nl.descriptor(),
        plant: plant.descriptor(),
        describing_function: df.provenance(),
        realization: Realization {
            form: "controllable_canonical",
            order,
            loop_signal: "x = -C xs",
        },
        omega: first.map(|c| c.omega),
        gain_margin: first.map(|c| c.gain_margin),
        cycles,
        ellipse,
        crossovers,
        note,
        df: df_samples,
    })
}

/// Runs from `0.5 x0` and `1.5 x0` of the cycle's ellipse, concurrently.
pub fn verification_runs(
    nl: &PiecewiseNonlinearity,
    plant: &LinearPlant,
    omega: f64,
    ellipse: &Ellipse,
) -> Result<Vec<SimulationRun>> {
    let cfg = SimConfig::for_frequency(omega);
    std::thread::scope(|s| {
        let handles: Vec<_> = SIM_SCALES
            .iter()
            .map(|&scale| {
                let x0: Vec<f64> = ellipse.x0.iter().map(|v| v * scale).collect();
                s.spawn(move || {
                    simulate_with(plant, nl, &x0, &cfg).map(|r| SimulationRun {
                        scale,
                        x0,
                        verdict: r.verdict,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

impl From<&DescribingFunctionCurve> for CurveSamples {
    fn from(c: &DescribingFunctionCurve) -> Self {
        CurveSamples {
            amplitudes: c.amplitudes().to_vec(),
            values: c.values().to_vec(),
        }
    }
}
