//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson {
    /// Absolute tolerance on each top-level subinterval; halved at every bisection.
    pub tol: f64,
    /// Bisections always performed before the error test.
    pub min_depth: u32,
    pub max_depth: u32,
}

impl Default for AdaptiveSimpson {
    fn default() -> Self {
        AdaptiveSimpson {
            tol: 1e-10,
            min_depth: 2,
            max_depth: 48,
        }
    }
}

impl AdaptiveSimpson {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<f64> {
        if hi == lo {
            return Ok(0.0);
        }
        let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        self.step(&f, lo, hi, fa, fm, fb, whole, self.tol, 0)
            .map_err(|_| Error::QuadratureNonConvergence {
                lo,
                hi,
                estimate: whole,
            })
    }

    /// Integrates over `[points[0], points[last]]`, treating every interior
    /// point as a place where `f` may kink or jump.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<f64> {
        points
            .windows(2)
            .map(|w| self.integrate(&f, w[0], w[1]))
            .sum()
    }

    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> std::result::Result<f64, ()> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth >= self.min_depth && delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= self.max_depth || !delta.is_finite() {
            return Err(());
        }
        Ok(self.step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
}
