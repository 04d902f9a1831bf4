//! Odd piecewise-linear nonlinearities with jumps.
//!
//! Only the `x >= 0` half is stored, as the breakpoint vectors `x` and `y`.
//! The origin `(0, 0)` is implicit: it is prepended unless the first stored
//! point already is the origin. A repeated abscissa encodes a jump, so
//! `x = [0, 0], y = [0, Y]` (or simply `x = [0], y = [Y]`) is an ideal relay.
//!
//! The line through the last two distinct abscissae extends to `+inf`. A
//! trailing jump keeps the slope of the segment before it; the tail slope can
//! also be set explicitly, which is the only way to describe a pure gain with
//! a single point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which two adjacent slopes are considered equal.
const SLOPE_EPS: f64 = 1e-12;

/// One linear piece `y = y_start + slope (x - start)` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub y_start: f64,
    pub slope: f64,
}

impl Segment {
    pub fn value(&self, x: f64) -> f64 {
        self.y_start + self.slope * (x - self.start)
    }
}

/// A distinct abscissa `X_j > 0` of the characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub at: f64,
    pub slope_before: f64,
    pub slope_after: f64,
    /// `y(X_j+) - y(X_j-)`, zero when the characteristic is continuous here.
    pub jump: f64,
}

impl Breakpoint {
    pub fn slope_change(&self) -> f64 {
        self.slope_after - self.slope_before
    }

    pub fn has_slope_change(&self) -> bool {
        let scale = 1f64
            .max(self.slope_before.abs())
            .max(self.slope_after.abs());
        self.slope_change().abs() > SLOPE_EPS * scale
    }

    pub fn has_jump(&self) -> bool {
        self.jump != 0.0
    }

    /// Breakpoints that neither bend nor jump (collinear points) carry no
    /// information for the describing function.
    pub fn is_feature(&self) -> bool {
        self.has_slope_change() || self.has_jump()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    DeadZone,
    Relay,
}

/// A dead zone `(m, X1)` or a relay with threshold `(Y1, X1)`.
///
/// `magnitude` is the slope `m` for a dead zone and the jump `Y1` for a relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveComponent {
    pub kind: PrimitiveKind,
    pub threshold: f64,
    pub magnitude: f64,
}

impl PrimitiveComponent {
    pub fn dead_zone(slope: f64, threshold: f64) -> Self {
        PrimitiveComponent {
            kind: PrimitiveKind::DeadZone,
            threshold,
            magnitude: slope,
        }
    }

    pub fn relay(jump: f64, threshold: f64) -> Self {
        PrimitiveComponent {
            kind: PrimitiveKind::Relay,
            threshold,
            magnitude: jump,
        }
    }

    /// Static characteristic of the primitive, oddly extended; right limit at the threshold.
    pub fn output(&self, x: f64) -> f64 {
        let (sign, a) = split_sign(x);
        if a < self.threshold {
            return 0.0;
        }
        sign * match self.kind {
            PrimitiveKind::DeadZone => self.magnitude * (a - self.threshold),
            PrimitiveKind::Relay => self.magnitude,
        }
    }
}

/// `y(x) = m0 x + sum of components`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub initial_slope: f64,
    pub components: Vec<PrimitiveComponent>,
}

impl Decomposition {
    pub fn output(&self, x: f64) -> f64 {
        self.initial_slope * x + self.components.iter().map(|c| c.output(x)).sum::<f64>()
    }

    pub fn dead_zones(&self) -> impl Iterator<Item = &PrimitiveComponent> {
        self.components
            .iter()
            .filter(|c| c.kind == PrimitiveKind::DeadZone)
    }

    pub fn relays(&self) -> impl Iterator<Item = &PrimitiveComponent> {
        self.components
            .iter()
            .filter(|c| c.kind == PrimitiveKind::Relay)
    }
}

/// JSON form `{"x": [..], "y": [..]}` with an optional `"tail_slope"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityDescriptor {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NonlinearityDescriptor", into = "NonlinearityDescriptor")]
pub struct PiecewiseNonlinearity {
    x: Vec<f64>,
    y: Vec<f64>,
    tail_override: Option<f64>,
    segments: Vec<Segment>,
    breakpoints: Vec<Breakpoint>,
    origin_jump: f64,
}

impl PiecewiseNonlinearity {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::build(x, y, None)
    }

    /// Same as [`new`](Self::new) but with the slope beyond the last point fixed.
    pub fn with_tail_slope(x: Vec<f64>, y: Vec<f64>, tail_slope: f64) -> Result<Self> {
        Self::build(x, y, Some(tail_slope))
    }

    /// `y = m x`.
    pub fn linear(slope: f64) -> Result<Self> {
        Self::with_tail_slope(vec![0.0], vec![0.0], slope)
    }

    fn build(x: Vec<f64>, y: Vec<f64>, tail_override: Option<f64>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidNonlinearity(msg));
        if x.is_empty() {
            return invalid("x must contain at least one breakpoint".into());
        }
        if x.len() != y.len() {
            return invalid(format!("x has {} entries but y has {}", x.len(), y.len()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return invalid(format!("x[{i}] is not finite"));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return invalid(format!("y[{i}] is not finite"));
        }
        if x[0] < 0.0 {
            return invalid(format!(
                "x[0] = {} is negative; only x >= 0 is stored",
                x[0]
            ));
        }
        if let Some(i) = x.windows(2).position(|w| w[1] < w[0]) {
            return invalid(format!("x is not nondecreasing at index {}", i + 1));
        }
        if let Some(m) = tail_override {
            if !m.is_finite() {
                return invalid("tail_slope is not finite".into());
            }
        }

        let mut points: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        if points[0] != (0.0, 0.0) {
            points.insert(0, (0.0, 0.0));
        }

        // (abscissa, left value, right value)
        let mut groups: Vec<(f64, f64, f64)> = Vec::new();
        let mut i = 0;
        while i < points.len() {
            let at = points[i].0;
            let mut j = i;
            while j + 1 < points.len() && points[j + 1].0 == at {
                j += 1;
            }
            if j - i > 1 {
                return invalid(format!(
                    "abscissa {at} appears {} times (the implicit origin counts); at most two are allowed",
                    j - i + 1
                ));
            }
            groups.push((at, points[i].1, points[j].1));
            i = j + 1;
        }

        let mut segments = Vec::with_capacity(groups.len());
        for w in groups.windows(2) {
            let (x0, _, y0) = w[0];
            let (x1, y1, _) = w[1];
            segments.push(Segment {
                start: x0,
                end: x1,
                y_start: y0,
                slope: (y1 - y0) / (x1 - x0),
            });
        }
        let tail_slope = tail_override
            .or_else(|| segments.last().map(|s| s.slope))
            .unwrap_or(0.0);
        let &(last_at, _, last_y) = groups.last().expect("origin group always present");
        segments.push(Segment {
            start: last_at,
            end: f64::INFINITY,
            y_start: last_y,
            slope: tail_slope,
        });
        if let Some(s) = segments.iter().find(|s| !s.slope.is_finite()) {
            return invalid(format!(
                "segment starting at {} has a non-finite slope",
                s.start
            ));
        }

        let breakpoints = groups
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &(at, left, right))| Breakpoint {
                at,
                slope_before: segments[k - 1].slope,
                slope_after: segments[k].slope,
                jump: right - left,
            })
            .collect();

        let origin_jump = groups[0].2 - groups[0].1;
        Ok(PiecewiseNonlinearity {
            x,
            y,
            tail_override,
            segments,
            breakpoints,
            origin_jump,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Every distinct abscissa `> 0`, including collinear points.
    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Breakpoints where the characteristic bends or jumps.
    pub fn features(&self) -> impl Iterator<Item = &Breakpoint> {
        self.breakpoints.iter().filter(|b| b.is_feature())
    }

    pub fn origin_jump(&self) -> f64 {
        self.origin_jump
    }

    pub fn has_origin_jump(&self) -> bool {
        self.origin_jump != 0.0
    }

    /// Slope `m0` of the first segment.
    pub fn initial_slope(&self) -> f64 {
        self.segments[0].slope
    }

    /// Slope `m_r` of the unbounded last segment.
    pub fn tail_slope(&self) -> f64 {
        self.segments[self.segments.len() - 1].slope
    }

    /// Largest stored abscissa `X_r`.
    pub fn last_abscissa(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Smallest feature abscissa `X_1 > 0`, if any.
    pub fn first_feature(&self) -> Option<f64> {
        self.features().next().map(|b| b.at)
    }

    /// Positive length scale of the characteristic: `X_r`, or 1 when every point sits at the origin.
    pub fn amplitude_scale(&self) -> f64 {
        let r = self.last_abscissa();
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    /// True when `|x|` coincides with a jump abscissa.
    pub fn is_jump_point(&self, x: f64) -> bool {
        let a = x.abs();
        (a == 0.0 && self.has_origin_jump())
            || self.breakpoints.iter().any(|b| b.has_jump() && b.at == a)
    }

    /// The linear piece that defines `y` at `a >= 0` (right-continuous).
    pub fn segment_at(&self, a: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.start <= a);
        &self.segments[idx.saturating_sub(1)]
    }

    /// `y(x)`, oddly extended for `x < 0`, right limit at jumps.
    pub fn evaluate(&self, x: f64) -> f64 {
        let (sign, a) = split_sign(x);
        sign * self.segment_at(a).value(a)
    }

    pub fn decompose(&self) -> Decomposition {
        let mut components = Vec::new();
        if self.has_origin_jump() {
            components.push(PrimitiveComponent::relay(self.origin_jump, 0.0));
        }
        for b in &self.breakpoints {
            if b.has_slope_change() {
                components.push(PrimitiveComponent::dead_zone(b.slope_change(), b.at));
            }
            if b.has_jump() {
                components.push(PrimitiveComponent::relay(b.jump, b.at));
            }
        }
        Decomposition {
            initial_slope: self.initial_slope(),
            components,
        }
    }

    pub fn descriptor(&self) -> NonlinearityDescriptor {
        NonlinearityDescriptor {
            x: self.x.clone(),
            y: self.y.clone(),
            tail_slope: self.tail_override,
        }
    }
}

impl TryFrom<NonlinearityDescriptor> for PiecewiseNonlinearity {
    type Error = Error;

    fn try_from(d: NonlinearityDescriptor) -> Result<Self> {
        Self::build(d.x, d.y, d.tail_slope)
    }
}

impl From<PiecewiseNonlinearity> for NonlinearityDescriptor {
    fn from(nl: PiecewiseNonlinearity) -> Self {
        nl.descriptor()
    }
}

/// `(sign, |x|)` with `sign = +1` at zero.
fn split_sign(x: f64) -> (f64, f64) {
    if x < 0.0 {
        (-1.0, -x)
    } else {
        (1.0, x)
    }
}
