//! Fixed-step closed-loop simulation of `x -> y(x) -> -G(s) -> x`.
//!
//! The state is that of the controllable canonical realization of `G`,
//! driven by `y`; the loop signal is `x = -C xs`. Using the same
//! coordinates as the ellipse estimate lets its basis vectors serve
//! directly as initial conditions.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linsys::{LinearPlant, StateSpace};
use crate::piecewise::PiecewiseNonlinearity;

pub const DIVERGENCE_BOUND: f64 = 1e8;
pub const STEPS_PER_PERIOD: f64 = 400.0;
pub const PERIODS: f64 = 200.0;
/// Max relative change of the amplitude between the last two windows.
pub const MAX_DRIFT: f64 = 0.02;
const REST_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// The loop signal has come to rest. With a dead zone this can be a
    /// nonzero equilibrium inside the zone.
    ConvergedToOrigin,
    SustainedOscillation {
        amplitude: f64,
        frequency: f64,
    },
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oscillation {
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Analysis window; `t_end / 20` when `None`.
    pub window: Option<f64>,
}

impl SimConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        SimConfig {
            t_end,
            dt,
            window: None,
        }
    }

    /// Defaults scaled to an expected oscillation frequency.
    pub fn for_frequency(omega: f64) -> Self {
        let period = 2.0 * std::f64::consts::PI / omega;
        SimConfig::new(PERIODS * period, period / STEPS_PER_PERIOD)
    }

    pub fn window(&self) -> f64 {
        self.window.unwrap_or(self.t_end / 20.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Loop signal, the nonlinearity input.
    pub x: Vec<f64>,
    /// Nonlinearity output.
    pub y: Vec<f64>,
    pub verdict: Verdict,
}

impl SimResult {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn simulate(
    plant: &LinearPlant,
    nl: &PiecewiseNonlinearity,
    x0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<SimResult> {
    simulate_with(plant, nl, x0, &SimConfig::new(t_end, dt))
}

pub fn simulate_with(
    plant: &LinearPlant,
    nl: &PiecewiseNonlinearity,
    x0: &[f64],
    cfg: &SimConfig,
) -> Result<SimResult> {
    let ss = plant.realization();
    if ss.d != 0.0 {
        return Err(Error::AlgebraicLoop(ss.d));
    }
    let (t_end, dt) = (cfg.t_end, cfg.dt);
    if !(dt > 0.0) || !dt.is_finite() || !(t_end >= 100.0 * dt) || !t_end.is_finite() {
        return Err(Error::InvalidSimulation(format!(
            "need dt > 0 and T >= 100 dt, got T = {t_end}, dt = {dt}"
        )));
    }
    if x0.len() != ss.order() {
        return Err(Error::InvalidSimulation(format!(
            "initial state has {} entries, plant order is {}",
            x0.len(),
            ss.order()
        )));
    }
    let window = cfg.window();
    if !(window > 0.0) || 2.0 * window > t_end {
        return Err(Error::InvalidSimulation(format!(
            "window {window} must be positive and at most T/2"
        )));
    }

    let steps = (t_end / dt).round() as usize;
    let loop_signal = |xs: &DVector<f64>| -ss.c.dot(&xs.transpose());
    let rhs =
        |xs: &DVector<f64>| -> DVector<f64> { &ss.a * xs + &ss.b * nl.evaluate(loop_signal(xs)) };

    let mut xs = DVector::from_column_slice(x0);
    let mut out = SimResult {
        t: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        verdict: Verdict::Diverged,
    };
    let record = |k: usize, xs: &DVector<f64>, out: &mut SimResult| {
        let x = loop_signal(xs);
        out.t.push(k as f64 * dt);
        out.states.push(xs.iter().copied().collect());
        out.x.push(x);
        out.y.push(nl.evaluate(x));
    };
    record(0, &xs, &mut out);
    for k in 1..=steps {
        xs = rk4_step(&rhs, &xs, dt);
        if !(xs.norm() <= DIVERGENCE_BOUND) {
            record(k, &xs, &mut out);
            return Ok(out);
        }
        record(k, &xs, &mut out);
    }
    out.verdict = classify_trajectory(&out.t, &out.x, window);
    Ok(out)
}

fn rk4_step(f: &impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Linear closed loop `x' = (A - B k C) x` stepped with the same integrator;
/// used to check the order of accuracy.
pub fn rk4_linear(ss: &StateSpace, gain: f64, x0: &[f64], t_end: f64, dt: f64) -> Vec<f64> {
    let m = &ss.a - &ss.b * ss.c.clone() * gain;
    let f = |x: &DVector<f64>| &m * x;
    let steps = (t_end / dt).round() as usize;
    let mut x = DVector::from_column_slice(x0);
    for _ in 0..steps {
        x = rk4_step(&f, &x, dt);
    }
    x.iter().copied().collect()
}

fn window_slice<'a>(t: &[f64], x: &'a [f64], from: f64, to: f64) -> &'a [f64] {
    let a = t.partition_point(|&s| s < from);
    let b = t.partition_point(|&s| s <= to);
    &x[a..b]
}

fn half_peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if x.is_empty() {
        0.0
    } else {
        0.5 * (hi - lo)
    }
}

fn classify_trajectory(t: &[f64], x: &[f64], window: f64) -> Verdict {
    let t_end = *t.last().expect("trajectory is nonempty");
    let last = half_peak_to_peak(window_slice(t, x, t_end - window, t_end));
    let prev = half_peak_to_peak(window_slice(t, x, t_end - 2.0 * window, t_end - window));
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if last <= REST_TOL * peak.max(1.0) {
        return Verdict::ConvergedToOrigin;
    }
    if let Some(o) = measure_oscillation(t, x, window) {
        return Verdict::SustainedOscillation {
            amplitude: o.amplitude,
            frequency: o.frequency,
        };
    }
    if last < prev {
        Verdict::ConvergedToOrigin
    } else {
        Verdict::Diverged
    }
}

/// Amplitude (half peak-to-peak over the last window) and frequency (from
/// the mean period between upward crossings of the window midline) of the
/// second half of `x(t)`.
///
/// `None` with fewer than 4 crossings, or when the amplitude changes by more
/// than 2% between the last two windows.
pub fn measure_oscillation(t: &[f64], x: &[f64], window: f64) -> Option<Oscillation> {
    if t.len() != x.len() || t.len() < 2 || !(window > 0.0) {
        return None;
    }
    let (t0, t_end) = (t[0], *t.last()?);
    if t_end - t0 < 2.0 * window {
        return None;
    }
    let last_w = window_slice(t, x, t_end - window, t_end);
    let amplitude = half_peak_to_peak(last_w);
    let prev = half_peak_to_peak(window_slice(t, x, t_end - 2.0 * window, t_end - window));
    if !(amplitude > 0.0) || (amplitude - prev).abs() > MAX_DRIFT * amplitude {
        return None;
    }
    let (lo, hi) = last_w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let level = 0.5 * (lo + hi);

    let start = t.partition_point(|&s| s < t0 + 0.5 * (t_end - t0));
    let mut crossings = 0usize;
    let mut upward = Vec::new();
    for i in start.max(1)..t.len() {
        let (a, b) = (x[i - 1] - level, x[i] - level);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            crossings += 1;
            if a < 0.0 {
                upward.push(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
            }
        }
    }
    if crossings < 4 || upward.len() < 2 {
        return None;
    }
    let period = (upward[upward.len() - 1] - upward[0]) / (upward.len() - 1) as f64;
    Some(Oscillation {
        amplitude,
        frequency: 2.0 * std::f64::consts::PI / period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{ellipse_estimate, find_intersections};
    use crate::descfun::{DescribingFunction, ExactDescribingFunction};
    use std::f64::consts::SQRT_2;

    fn plant_a(k: f64) -> LinearPlant {
        LinearPlant::new(vec![-1.0, 2.0], vec![1.0, 1.0, 0.0], k).unwrap()
    }

    fn plant_b(k: f64) -> LinearPlant {
        LinearPlant::new(vec![1.0], vec![1.0, 4.0, 3.0, 0.0], k).unwrap()
    }

    fn nl_a() -> PiecewiseNonlinearity {
        PiecewiseNonlinearity::new(
            vec![2.0, 7.0, 20.0, 20.0, 25.0],
            vec![0.0, 4.5, 7.21, 4.21, 5.25],
        )
        .unwrap()
    }

    #[test]
    fn sinusoid_measurement() {
        let (amp, w) = (3.7, 2.3);
        let dt = 1e-3;
        let t: Vec<f64> = (0..200_000).map(|i| i as f64 * dt).collect();
        let x: Vec<f64> = t.iter().map(|s| amp * (w * s).sin()).collect();
        let o = measure_oscillation(&t, &x, 20.0).unwrap();
        assert!((o.amplitude - amp).abs() <= 1e-3 * amp);
        assert!((o.frequency - w).abs() <= 1e-3 * w);
    }

    #[test]
    fn decaying_exponential_is_not_an_oscillation() {
        let t: Vec<f64> = (0..10_000).map(|i| i as f64 * 1e-2).collect();
        let x: Vec<f64> = t.iter().map(|s| (-s / 5.0f64).exp()).collect();
        assert!(measure_oscillation(&t, &x, 5.0).is_none());
        // decaying oscillation fails the drift test
        let x: Vec<f64> = t
            .iter()
            .map(|s| (-s / 5.0f64).exp() * (3.0 * s).sin())
            .collect();
        assert!(measure_oscillation(&t, &x, 5.0).is_none());
        assert!(measure_oscillation(&t, &x, 60.0).is_none());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let ss = plant_b(1.0).realization();
        let x0 = [1.0, -0.5, 0.2];
        let (t_end, dt) = (5.0, 0.1);
        let reference = rk4_linear(&ss, 1.0, &x0, t_end, dt / 64.0);
        let err = |h: f64| {
            let x = rk4_linear(&ss, 1.0, &x0, t_end, h);
            x.iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let order = (err(dt) / err(dt / 2.0)).log2();
        assert!((3.5..=4.5).contains(&order), "order {order}");
    }

    #[test]
    fn nonlinear_loop_matches_linear_loop_for_pure_gain() {
        let plant = plant_b(1.0);
        let nl = PiecewiseNonlinearity::linear(1.0).unwrap();
        let x0 = [1.0, -0.5, 0.2];
        let r = simulate(&plant, &nl, &x0, 10.0, 0.01).unwrap();
        let lin = rk4_linear(&plant.realization(), 1.0, &x0, 10.0, 0.01);
        for (a, b) in r.final_state().iter().zip(&lin) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn open_loop_modes_never_grow() {
        // with y = 0 the states are z, z', z'' of s(s+1)(s+3); z'' + 3z' and
        // z'' + z' are the modal coordinates of the poles -1 and -3
        let zero = PiecewiseNonlinearity::linear(0.0).unwrap();
        let r = simulate(&plant_b(30.0), &zero, &[0.3, 2.0, -1.0], 20.0, 0.01).unwrap();
        let modes = |s: &[f64]| ((s[2] + 3.0 * s[1]).abs(), (s[2] + s[1]).abs());
        let (m1, m3) = modes(&r.states[0]);
        for s in &r.states {
            let (a, b) = modes(s);
            assert!(a <= m1 * (1.0 + 1e-6) && b <= m3 * (1.0 + 1e-6));
        }
        assert!(matches!(r.verdict, Verdict::ConvergedToOrigin));
    }

    #[test]
    fn algebraic_loop_and_bad_arguments() {
        let nl = nl_a();
        let biproper = LinearPlant::new(vec![1.0, 1.0], vec![1.0, 2.0], 1.0).unwrap();
        assert!(matches!(
            simulate(&biproper, &nl, &[0.0], 10.0, 0.01),
            Err(Error::AlgebraicLoop(_))
        ));
        assert!(simulate(&plant_a(1.0), &nl, &[0.0, 0.0], 0.5, 0.01).is_err());
        assert!(simulate(&plant_a(1.0), &nl, &[0.0], 10.0, 0.01).is_err());
        assert!(simulate(&plant_a(1.0), &nl, &[0.0, 0.0], 10.0, 0.0).is_err());
    }

    #[test]
    fn stable_cycle_attracts_from_both_sides() {
        let plant = plant_a(2.5);
        let f = ExactDescribingFunction::new(&nl_a());
        let roots = find_intersections(&f, 0.4).unwrap();
        let x_s = roots[1];
        let e = ellipse_estimate(&plant, SQRT_2, f.value(x_s).unwrap() * x_s).unwrap();
        let cfg = SimConfig::for_frequency(SQRT_2);
        let amp = |scale: f64| {
            let x0: Vec<f64> = e.x0.iter().map(|v| v * scale).collect();
            match simulate_with(&plant, &nl_a(), &x0, &cfg).unwrap().verdict {
                Verdict::SustainedOscillation {
                    amplitude,
                    frequency,
                } => {
                    assert!((frequency - SQRT_2).abs() < 0.1 * SQRT_2);
                    amplitude
                }
                v => panic!("scale {scale}: {v:?}"),
            }
        };
        let (inside, outside) = (amp(0.9), amp(1.1));
        assert!(
            (inside - outside).abs() <= 0.02 * inside,
            "{inside} vs {outside}"
        );
    }

    #[test]
    fn verdict_serialization() {
        let v = Verdict::SustainedOscillation {
            amplitude: 2.0,
            frequency: 1.5,
        };
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"verdict":"sustained_oscillation","amplitude":2.0,"frequency":1.5}"#
        );
        assert_eq!(
            serde_json::to_string(&Verdict::Diverged).unwrap(),
            r#"{"verdict":"diverged"}"#
        );
    }
}
