//! Closed Nyquist contour and point enclosure.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::LinearPlant;
use crate::error::{Error, Result};

const ARC_POINTS_PER_HALF_TURN: usize = 512;

/// Image of the indented D-contour under `G`: the mirrored negative
/// frequency branch, a clockwise arc of `pi` per pole at the origin, the
/// positive branch, and a straight closing segment at high frequency.
#[derive(Debug, Clone)]
pub struct NyquistContour {
    points: Vec<Complex64>,
}

impl NyquistContour {
    /// `extra` frequencies (e.g. known crossovers) are inserted into the
    /// log grid so the polyline passes through them exactly.
    pub fn new(
        plant: &LinearPlant,
        omega_min: f64,
        omega_max: f64,
        n: usize,
        extra: &[f64],
    ) -> Result<Self> {
        if !(omega_min > 0.0 && omega_max > omega_min) || n < 2 {
            return Err(Error::Domain(format!(
                "invalid contour range [{omega_min}, {omega_max}] with {n} points"
            )));
        }
        let mut grid = crate::log_grid(omega_min, omega_max, n);
        grid.extend(
            extra
                .iter()
                .copied()
                .filter(|w| *w > omega_min && *w < omega_max),
        );
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let positive: Vec<Complex64> = grid
            .iter()
            .map(|&w| plant.freq_response(w))
            .collect::<Result<_>>()?;

        let mut points: Vec<Complex64> = positive.iter().rev().map(|z| z.conj()).collect();
        let start = *points.last().expect("grid has at least two points");
        let end = positive[0];
        let poles = plant.origin_poles();
        if poles > 0 {
            let radius = 10.0 * end.norm();
            let (a0, a1) = (start.arg(), end.arg());
            // clockwise sweep closest to -poles * pi
            let target = -(poles as f64) * PI;
            let raw = a1 - a0;
            let sweep = raw + 2.0 * PI * ((target - raw) / (2.0 * PI)).round();
            let m = ARC_POINTS_PER_HALF_TURN * poles;
            points.extend(
                (0..=m).map(|i| Complex64::from_polar(radius, a0 + sweep * i as f64 / m as f64)),
            );
        }
        points.extend(positive);
        Ok(NyquistContour { points })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Net counter-clockwise turns of the closed polyline around `p`.
    pub fn winding_number(&self, p: Complex64) -> i64 {
        let n = self.points.len();
        let total: f64 = (0..n)
            .map(|i| {
                let a = self.points[i] - p;
                let b = self.points[(i + 1) % n] - p;
                (a.re * b.im - a.im * b.re).atan2(a.re * b.re + a.im * b.im)
            })
            .sum();
        (total / (2.0 * PI)).round() as i64
    }

    pub fn encloses(&self, p: Complex64) -> bool {
        self.winding_number(p) != 0
    }
}
