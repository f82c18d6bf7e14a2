use std::fmt;

use serde::Serialize;

/// An interval on the extended real line together with the miscoverage
/// level it was built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
    pub alpha: f64,
}

impl PredictionInterval {
    pub fn open(lower: f64, upper: f64, alpha: f64) -> Self {
        Self {
            lower,
            upper,
            lower_open: true,
            upper_open: true,
            alpha,
        }
    }

    /// `(-inf, upper]`
    pub fn upper_ray(upper: f64, alpha: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper,
            lower_open: true,
            upper_open: false,
            alpha,
        }
    }

    /// `[0, upper]`, the form used for nonnegative responses.
    pub fn from_zero(upper: f64, alpha: f64) -> Self {
        Self {
            lower: 0.0,
            upper,
            lower_open: false,
            upper_open: false,
            alpha,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lower_open {
            y > self.lower
        } else {
            y >= self.lower
        };
        let below = if self.upper_open {
            y < self.upper
        } else {
            y <= self.upper
        };
        above && below
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    /// True when the interval has collapsed to at most a single point.
    pub fn is_degenerate(&self) -> bool {
        self.upper <= self.lower
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            lower: self.lower + by,
            upper: self.upper + by,
            ..*self
        }
    }
}

impl fmt::Display for PredictionInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lower_open { '(' } else { '[' };
        let r = if self.upper_open { ')' } else { ']' };
        write!(f, "{l}{}, {}{r}", self.lower, self.upper)
    }
}
